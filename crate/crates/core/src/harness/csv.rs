use std::fs::File;
use std::io::Write;
use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::error::{NsmError, Result};

use super::records::{RunRecord, SummaryRow};

pub const HEADER: [&str; 6] = ["run_id", "seed", "method", "iter", "metric", "value"];

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent form when the decimal exponent is below −4 or at least 17.
/// Parsing the output recovers the exact `f64`.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if !(-4..17).contains(&exp) {
        let (lead, rest) = digits.split_at(1);
        let frac = if rest.is_empty() { String::new() } else { format!(".{rest}") };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{lead}{frac}e{esign}{:02}", exp.abs())
    } else if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> NsmError + '_ {
    move |source| NsmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> NsmError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => NsmError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => NsmError::Config(format!("{}: csv error {other:?}", path.display())),
    }
}

/// A row in the output schema.
pub trait CsvRow {
    fn fields(&self) -> [String; 6];
}

impl CsvRow for RunRecord {
    fn fields(&self) -> [String; 6] {
        [
            self.run_id.clone(),
            self.seed.to_string(),
            self.method.clone(),
            self.iter.to_string(),
            self.metric.name().to_string(),
            format_g17(self.value),
        ]
    }
}

/// Summary rows carry the number of combined seeds in the `seed` column.
impl CsvRow for SummaryRow {
    fn fields(&self) -> [String; 6] {
        [
            self.run_id.clone(),
            self.seeds.to_string(),
            self.method.clone(),
            self.iter.to_string(),
            self.metric.name().to_string(),
            format_g17(self.value),
        ]
    }
}

/// Writes the header and `rows` in the given order, LF-terminated.
pub fn write_rows<W: Write, R: CsvRow>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|source| NsmError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Renders rows to an in-memory CSV document.
pub fn to_csv_bytes<R: CsvRow>(rows: &[R]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(buf)
}

/// Writes rows to `path`, replacing any existing file.
pub fn write_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let bytes = to_csv_bytes(rows)?;
    let mut file = File::create(path).map_err(io_err(path))?;
    file.write_all(&bytes).map_err(io_err(path))?;
    file.flush().map_err(io_err(path))
}

/// Reads records written by [`write_csv`].
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(HEADER) {
        return Err(NsmError::Config(format!("{}: unexpected header", path.display())));
    }
    let bad = |line: &str| NsmError::Config(format!("{}: malformed row {line}", path.display()));
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err(path))?;
        let line = row.iter().collect::<Vec<_>>().join(",");
        out.push(RunRecord {
            run_id: row[0].to_string(),
            seed: row[1].parse().map_err(|_| bad(&line))?,
            method: row[2].to_string(),
            iter: row[3].parse().map_err(|_| bad(&line))?,
            metric: row[4].parse().map_err(|_| bad(&line))?,
            value: row[5].parse().map_err(|_| bad(&line))?,
        });
    }
    Ok(out)
}
