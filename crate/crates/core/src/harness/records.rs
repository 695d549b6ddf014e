use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{NsmError, Result};

/// Per-iteration quantity written to the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    DistSqOpt,
    Objective,
    /// 1 if the step producing this iterate used corrupt feedback.
    CorruptFlag,
    /// Step size of the step producing this iterate (0 at iteration 1).
    GammaT,
    /// Divergence marker, value 1, at the iteration where a run stopped.
    Diverged,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DistSqOpt => "dist_sq_opt",
            Self::Objective => "objective",
            Self::CorruptFlag => "corrupt_flag",
            Self::GammaT => "gamma_t",
            Self::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = NsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dist_sq_opt" => Ok(Self::DistSqOpt),
            "objective" => Ok(Self::Objective),
            "corrupt_flag" => Ok(Self::CorruptFlag),
            "gamma_t" => Ok(Self::GammaT),
            "diverged" => Ok(Self::Diverged),
            other => Err(NsmError::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `<experiment>/p=<label>`.
    pub run_id: String,
    pub seed: u64,
    pub method: String,
    pub iter: usize,
    pub metric: Metric,
    pub value: f64,
}

impl RunRecord {
    /// Output order: run id, method, seed, iteration, metric.
    pub fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.run_id
            .cmp(&other.run_id)
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| self.seed.cmp(&other.seed))
            .then_with(|| self.iter.cmp(&other.iter))
            .then_with(|| self.metric.cmp(&other.metric))
    }
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(RunRecord::sort_key_cmp);
}

/// Cross-seed statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Median,
    /// Mean over seeds of each run's final recorded value of the metric;
    /// emitted at the largest iteration present.
    Last,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Median => "median",
            Self::Last => "last",
        }
    }
}

impl FromStr for Statistic {
    type Err = NsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            "last" => Ok(Self::Last),
            other => Err(NsmError::Config(format!("unknown statistic '{other}'"))),
        }
    }
}

/// Aggregated row; `seeds` is the number of values combined.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub seeds: usize,
    pub method: String,
    pub iter: usize,
    pub metric: Metric,
    pub value: f64,
}

fn experiment_prefix(run_id: &str) -> &str {
    run_id.split('/').next().unwrap_or(run_id)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Combines records across seeds, grouped by (run id, method, iteration,
/// metric). Rows come out in the record sort order. Iterations missing from
/// some seeds (diverged runs) aggregate over the seeds that have them.
pub fn aggregate(records: &[RunRecord], statistic: Statistic) -> Result<Vec<SummaryRow>> {
    if let Some(first) = records.first() {
        let prefix = experiment_prefix(&first.run_id);
        if let Some(r) = records.iter().find(|r| experiment_prefix(&r.run_id) != prefix) {
            return Err(NsmError::Config(format!(
                "cannot aggregate records of different experiments ('{}' and '{}')",
                first.run_id, r.run_id
            )));
        }
    }
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    match statistic {
        Statistic::Mean | Statistic::Median => {
            sorted.sort_by(|a, b| {
                a.run_id
                    .cmp(&b.run_id)
                    .then_with(|| a.method.cmp(&b.method))
                    .then_with(|| a.iter.cmp(&b.iter))
                    .then_with(|| a.metric.cmp(&b.metric))
                    .then_with(|| a.seed.cmp(&b.seed))
            });
            let groups = sorted.chunk_by(|a, b| {
                a.run_id == b.run_id && a.method == b.method && a.iter == b.iter && a.metric == b.metric
            });
            Ok(groups
                .map(|g| {
                    let mut values: Vec<f64> = g.iter().map(|r| r.value).collect();
                    let value = if statistic == Statistic::Mean {
                        mean(&values)
                    } else {
                        median(&mut values)
                    };
                    SummaryRow {
                        run_id: g[0].run_id.clone(),
                        seeds: values.len(),
                        method: g[0].method.clone(),
                        iter: g[0].iter,
                        metric: g[0].metric,
                        value,
                    }
                })
                .collect())
        }
        Statistic::Last => {
            sorted.sort_by(|a, b| {
                a.run_id
                    .cmp(&b.run_id)
                    .then_with(|| a.method.cmp(&b.method))
                    .then_with(|| a.metric.cmp(&b.metric))
                    .then_with(|| a.seed.cmp(&b.seed))
                    .then_with(|| a.iter.cmp(&b.iter))
            });
            let groups = sorted.chunk_by(|a, b| a.run_id == b.run_id && a.method == b.method && a.metric == b.metric);
            let mut rows: Vec<SummaryRow> = groups
                .map(|g| {
                    let finals: Vec<&RunRecord> = g
                        .chunk_by(|a, b| a.seed == b.seed)
                        .map(|run| *run.last().expect("chunks are non-empty"))
                        .collect();
                    let values: Vec<f64> = finals.iter().map(|r| r.value).collect();
                    SummaryRow {
                        run_id: g[0].run_id.clone(),
                        seeds: values.len(),
                        method: g[0].method.clone(),
                        iter: finals.iter().map(|r| r.iter).max().unwrap_or(0),
                        metric: g[0].metric,
                        value: mean(&values),
                    }
                })
                .collect();
            rows.sort_by(|a, b| {
                a.run_id
                    .cmp(&b.run_id)
                    .then_with(|| a.method.cmp(&b.method))
                    .then_with(|| a.iter.cmp(&b.iter))
                    .then_with(|| a.metric.cmp(&b.metric))
            });
            Ok(rows)
        }
    }
}
