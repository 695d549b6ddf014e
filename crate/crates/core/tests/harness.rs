use nsm_core::analysis::{bound_curve, theorem_gamma, threshold_probability};
use nsm_core::harness::{
    aggregate, read_records, run_experiment, write_csv, ExperimentConfig, Metric, ProbabilitySpec, Scale,
    Statistic,
};
use nsm_core::optimizers::Method;

#[test]
fn toy_low_corruption_stays_under_the_theorem_bound() {
    let mut cfg = ExperimentConfig::toy();
    cfg.p_values = vec![ProbabilitySpec::Fixed(0.1)];
    cfg.seeds = (0..20).collect();
    let out = run_experiment(&cfg).unwrap();
    let summary = aggregate(&out.records, Statistic::Mean).unwrap();
    let t = cfg.iterations;
    let last = summary
        .iter()
        .find(|r| r.iter == t + 1 && r.metric == Metric::DistSqOpt)
        .unwrap();
    assert_eq!(last.seeds, 20);
    let d = 10f64;
    let cos = 1.0 / d.sqrt();
    let q = (0.75 * threshold_probability(cos).unwrap()).max(0.1);
    let gamma = theorem_gamma(2.0 * 10.0 * d.sqrt(), cos, q).unwrap();
    assert!(last.value <= bound_curve(gamma, t as u64), "{} vs {}", last.value, bound_curve(gamma, t as u64));
}

#[test]
fn csv_file_round_trip_and_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::linreg(Scale::Desk);
    cfg.iterations = 100;
    cfg.seeds = vec![0, 1];
    cfg.optimizers = vec![Method::Nsm, Method::Gd, Method::Adam];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let first = run_experiment(&cfg).unwrap().records;
    write_csv(&first, &a).unwrap();
    write_csv(&run_experiment(&cfg).unwrap().records, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_records(&a).unwrap(), first);
    assert_eq!(first.len(), 3 * 2 * 101);
}

#[test]
fn summaries_have_one_row_per_method_and_iteration() {
    let mut cfg = ExperimentConfig::logistic(Scale::Desk);
    cfg.iterations = 20;
    cfg.seeds = vec![0, 1, 2];
    cfg.optimizers = vec![Method::Nsm, Method::RmsProp];
    let out = run_experiment(&cfg).unwrap();
    let rows = aggregate(&out.records, Statistic::Median).unwrap();
    assert_eq!(rows.len(), 2 * 21);
    assert!(rows.iter().all(|r| r.seeds == 3 && r.metric == Metric::Objective));
    let last = aggregate(&out.records, Statistic::Last).unwrap();
    assert_eq!(last.len(), 2);
    assert!(last.iter().all(|r| r.iter == 21));
}
