//! Image files, scenario files and CSV reports.

mod csv;
mod image;
mod pgm;
mod png;
mod scenario;

pub use csv::{emit_csv, records_to_csv, HEADER as CSV_HEADER};
pub use image::{
    read_grid, read_image, to_u8_clamped, to_u8_stretched, write_image, write_samples,
};
pub use scenario::{parse_scenarios, read_scenarios};

use crate::error::{Error, Result};
use crate::threshold::ThresholdMode;

/// `universal`, `none`, or `frac=P` with `0 < P <= 1`.
pub fn parse_threshold(s: &str) -> Result<Option<ThresholdMode>> {
    match s.trim() {
        "universal" => Ok(Some(ThresholdMode::Universal)),
        "none" => Ok(None),
        other => {
            let p = other
                .strip_prefix("frac=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Contract(format!(
                        "threshold must be universal, none or frac=P, got {other:?}"
                    ))
                })?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Contract(format!(
                    "threshold fraction {p} outside (0, 1]"
                )));
            }
            Ok(Some(ThresholdMode::KeepFraction(p)))
        }
    }
}

/// `auto` or a non-negative integer.
pub fn parse_k(s: &str) -> Result<Option<u32>> {
    match s.trim() {
        "auto" => Ok(None),
        other => other
            .parse()
            .map(Some)
            .map_err(|_| Error::Contract(format!("k must be an integer or auto, got {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_and_k_syntax() {
        assert_eq!(
            parse_threshold("universal").unwrap(),
            Some(ThresholdMode::Universal)
        );
        assert_eq!(parse_threshold("none").unwrap(), None);
        assert_eq!(
            parse_threshold("frac=0.07").unwrap(),
            Some(ThresholdMode::KeepFraction(0.07))
        );
        assert!(parse_threshold("frac=0").is_err());
        assert!(parse_threshold("soft").is_err());
        assert_eq!(parse_k("auto").unwrap(), None);
        assert_eq!(parse_k("3").unwrap(), Some(3));
        assert!(parse_k("-1").is_err());
    }
}
