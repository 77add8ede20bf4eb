//! Byte-stable number formatting, trajectory CSV files and JSON helpers.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::Error;
use crate::integrator::{ClosedLoop, Sample, Trajectory};

/// Version stamped into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

/// CSV header line.
pub const CSV_HEADER: &str = "t,x,u";

/// 17 significant digits in scientific notation (`-1.9865241060018290e0`).
///
/// Round-trips every finite `f64` exactly and does not depend on locale.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number in the fixed [`format_f64`] layout; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw =
                RawValue::from_string(format_f64(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

/// Renders a trajectory as CSV with header `t,x,u`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.samples().len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in traj.samples() {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_f64(s.t),
            format_f64(s.x),
            format_f64(s.u)
        );
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("missing or wrong header, expected `{CSV_HEADER}`")]
    Header,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Trajectory(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses CSV text back into a trajectory of the given loop and checks its
/// invariants.
pub fn parse_trajectory_csv(text: &str, law: ClosedLoop, x0: f64) -> Result<Trajectory, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(CsvError::Header),
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CsvError::Row {
                line: i + 1,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let mut v = [0.0; 3];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.trim().parse().map_err(|e| CsvError::Row {
                line: i + 1,
                message: format!("`{f}`: {e}"),
            })?;
        }
        samples.push(Sample {
            t: v[0],
            x: v[1],
            u: v[2],
        });
    }
    Ok(Trajectory::from_samples(law, x0, samples)?)
}

pub fn read_trajectory_csv(path: &Path, law: ClosedLoop, x0: f64) -> Result<Trajectory, CsvError> {
    parse_trajectory_csv(&std::fs::read_to_string(path)?, law, x0)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
