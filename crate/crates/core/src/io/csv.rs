//! Experiment records as CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::ExperimentRecord;

pub const HEADER: &str = "scenario,true_sx,true_sy,true_theta,true_sigma,est_sx,est_sy,est_theta,est_sigma,psnr_db,mse,ncc,iters,outlier,ms";

/// Shortest representation that parses back to the same value, in
/// exponent form outside `[1e-4, 1e15)`; infinities as `inf` and `-inf`.
fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else if v != 0.0 && !(1e-4..1e15).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Quotes a field when it holds a comma, quote or line break.
fn text(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header plus one line per record, in the given order.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::with_capacity(HEADER.len() + 1 + records.len() * 96);
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let fields = [
            number(r.truth.tx),
            number(r.truth.ty),
            number(r.truth.theta),
            number(r.truth.sigma),
            number(r.estimate.tx),
            number(r.estimate.ty),
            number(r.estimate.theta),
            number(r.estimate.sigma),
            number(r.psnr_db),
            number(r.mse),
            number(r.ncc),
            r.iterations.to_string(),
            r.outlier.to_string(),
            number(r.elapsed_ms),
        ];
        let _ = writeln!(out, "{},{}", text(&r.scenario), fields.join(","));
    }
    out
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    std::fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}
