//! Versioned document tags of the form `name/major` (optionally
//! `name/major.minor`). Readers accept any minor of a known major and
//! reject everything else.

use crate::error::{LabError, Result};

pub const CIRCLE_MEASURE: &str = "circle-measure/1";
pub const CIRCLE_FUNCTION: &str = "circle-function/1";
pub const WINDOWED_SET: &str = "windowed-set/1";
pub const GAUSS_MODEL: &str = "gauss-model/1";
pub const CLASSIFICATION: &str = "classification/1";
pub const EXPERIMENT: &str = "experiment/1";
pub const PROBE_REPORT: &str = "probe-report/1";

/// Checks that `found` names the same document kind and major version as
/// `expected`.
pub fn check(expected: &str, found: &str) -> Result<()> {
    let split = |s: &str| -> Option<(String, String)> {
        let (name, ver) = s.split_once('/')?;
        let major = ver.split('.').next()?.to_string();
        Some((name.to_string(), major))
    };
    match (split(expected), split(found)) {
        (Some(e), Some(f)) if e == f => Ok(()),
        _ => Err(LabError::Schema {
            expected: expected.to_string(),
            found: found.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minor_versions_accepted_majors_rejected() {
        assert!(check(CIRCLE_MEASURE, "circle-measure/1").is_ok());
        assert!(check(CIRCLE_MEASURE, "circle-measure/1.3").is_ok());
        assert!(check(CIRCLE_MEASURE, "circle-measure/2").is_err());
        assert!(check(CIRCLE_MEASURE, "windowed-set/1").is_err());
        assert!(check(CIRCLE_MEASURE, "garbage").is_err());
    }
}
