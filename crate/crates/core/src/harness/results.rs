//! CSV tables.
//!
//! Every file starts with two comment lines: `# generated_at_unix=<seconds>`
//! (the only line that differs between identical runs) and a description of
//! the parameters. Floats are written with 17 significant digits so parsing
//! restores them bit-exactly.

use crate::{Error, Result};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Header of EC tables.
pub const EC_HEADER: &str =
    "axis,axis_value_db,axis_value_linear,strategy,variant,user,estimator,ec_bits_per_s_per_hz,std_err,n_samples,seed";

/// Header of NOMA-selection probability tables.
pub const TAU_HEADER: &str = "axis,axis_value_db,axis_value_linear,k_users,estimator,tau,std_err,n_samples,seed";

/// Prefix of the timestamp comment line.
pub const TIMESTAMP_PREFIX: &str = "# generated_at_unix=";

/// Estimator tag of closed-form rows.
pub const CLOSED_FORM: &str = "cf";
/// Estimator tag of Monte-Carlo rows.
pub const MONTE_CARLO: &str = "mc";
/// Estimator tag of rows whose closed-form evaluation is unavailable or failed.
pub const CLOSED_FORM_ERROR: &str = "error:closed_form";
/// Estimator tag of rows whose Monte-Carlo evaluation is unsupported or failed.
pub const MONTE_CARLO_ERROR: &str = "error:monte_carlo";

/// User column: a 1-based user number or the sum over users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserLabel {
    User(usize),
    Sum,
}

impl fmt::Display for UserLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserLabel::User(k) => write!(f, "{k}"),
            UserLabel::Sum => f.write_str("sum"),
        }
    }
}

impl UserLabel {
    fn parse(s: &str) -> Result<Self> {
        if s == "sum" {
            return Ok(UserLabel::Sum);
        }
        s.parse()
            .ok()
            .filter(|k| *k >= 1)
            .map(UserLabel::User)
            .ok_or_else(|| Error::Parse(format!("bad user column {s:?}")))
    }
}

/// One EC table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis: String,
    /// NaN when the axis has no dB form.
    pub axis_value_db: f64,
    pub axis_value_linear: f64,
    pub strategy: String,
    /// `event`, `timeshare`, or `none` for OMA and NOMA.
    pub variant: String,
    pub user: UserLabel,
    pub estimator: String,
    pub ec: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.estimator.starts_with("error:")
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.axis.clone(),
            fmt_f64(self.axis_value_db),
            fmt_f64(self.axis_value_linear),
            self.strategy.clone(),
            self.variant.clone(),
            self.user.to_string(),
            self.estimator.clone(),
            fmt_f64(self.ec),
            fmt_f64(self.std_err),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != 11 {
            return Err(Error::Parse(format!("expected 11 columns, got {}", r.len())));
        }
        Ok(Self {
            axis: r[0].to_string(),
            axis_value_db: parse_f64(&r[1])?,
            axis_value_linear: parse_f64(&r[2])?,
            strategy: r[3].to_string(),
            variant: r[4].to_string(),
            user: UserLabel::parse(&r[5])?,
            estimator: r[6].to_string(),
            ec: parse_f64(&r[7])?,
            std_err: parse_f64(&r[8])?,
            n_samples: parse_u64(&r[9])?,
            seed: parse_u64(&r[10])?,
        })
    }
}

/// One row of a NOMA-selection probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub axis: String,
    pub axis_value_db: f64,
    pub axis_value_linear: f64,
    pub k_users: usize,
    pub estimator: String,
    pub tau: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl TauRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.axis.clone(),
            fmt_f64(self.axis_value_db),
            fmt_f64(self.axis_value_linear),
            self.k_users.to_string(),
            self.estimator.clone(),
            fmt_f64(self.tau),
            fmt_f64(self.std_err),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != 9 {
            return Err(Error::Parse(format!("expected 9 columns, got {}", r.len())));
        }
        Ok(Self {
            axis: r[0].to_string(),
            axis_value_db: parse_f64(&r[1])?,
            axis_value_linear: parse_f64(&r[2])?,
            k_users: parse_u64(&r[3])? as usize,
            estimator: r[4].to_string(),
            tau: parse_f64(&r[5])?,
            std_err: parse_f64(&r[6])?,
            n_samples: parse_u64(&r[7])?,
            seed: parse_u64(&r[8])?,
        })
    }
}

/// Shortest exact form is not needed; 17 significant digits always round-trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes a table to `path` through a temporary file in the same directory,
/// renamed into place once complete.
pub fn write_table(path: &Path, description: &str, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let out = tmp.as_file_mut();
        writeln!(out, "{TIMESTAMP_PREFIX}{}", unix_now())?;
        writeln!(out, "# {}", description.replace('\n', " "))?;
        writeln!(out, "{header}")?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_results(path: &Path, description: &str, rows: &[ResultRow]) -> Result<()> {
    write_table(path, description, EC_HEADER, rows.iter().map(ResultRow::fields))
}

pub fn write_tau_rows(path: &Path, description: &str, rows: &[TauRow]) -> Result<()> {
    write_table(path, description, TAU_HEADER, rows.iter().map(TauRow::fields))
}

/// Renders rows as CSV text (header included, no comment lines).
pub fn results_to_string(rows: &[ResultRow]) -> String {
    render(EC_HEADER, rows.iter().map(ResultRow::fields))
}

pub fn tau_rows_to_string(rows: &[TauRow]) -> String {
    render(TAU_HEADER, rows.iter().map(TauRow::fields))
}

fn render(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV is UTF-8");
    format!("{header}\n{body}")
}

fn read_records(path: &Path, header: &str) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let found = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::Parse(format!("{}: unexpected header {found:?}", path.display())));
    }
    r.records().map(|rec| rec.map_err(Error::from)).collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_records(path, EC_HEADER)?.iter().map(ResultRow::from_record).collect()
}

pub fn read_tau_rows(path: &Path) -> Result<Vec<TauRow>> {
    read_records(path, TAU_HEADER)?.iter().map(TauRow::from_record).collect()
}

/// File contents with the timestamp line removed.
pub fn normalized_contents(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with(TIMESTAMP_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect())
}
