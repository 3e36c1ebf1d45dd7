//! Records of verified inequality instances.

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

/// One inequality `lhs <= rhs` evaluated numerically.
///
/// `pass` is `None` when the right-hand side is unavailable (an external
/// constant was not supplied).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub kind: String,
    pub n: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    #[serde(deserialize_with = "nan_if_null")]
    pub lhs: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub rhs: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub ratio: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub slack: f64,
    pub pass: Option<bool>,
    pub tolerance: f64,
    pub metadata: Map<String, Value>,
}

// non-finite numbers are written as `null`
fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl InequalityReport {
    /// Fills `ratio`, `slack` and `pass = lhs <= rhs (1 + tolerance)`.
    pub fn new(kind: &str, n: usize, p: Option<f64>, q: Option<f64>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            kind: kind.to_string(),
            n,
            p,
            q,
            lhs,
            rhs,
            ratio: lhs / rhs,
            slack: rhs - lhs,
            pass: Some(lhs <= rhs * (1.0 + tolerance)),
            tolerance,
            metadata: Map::new(),
        }
    }

    /// A report whose right-hand side is unknown.
    pub fn indeterminate(kind: &str, n: usize, p: Option<f64>, lhs: f64, tolerance: f64) -> Self {
        Self {
            kind: kind.to_string(),
            n,
            p,
            q: None,
            lhs,
            rhs: f64::NAN,
            ratio: f64::NAN,
            slack: f64::NAN,
            pass: None,
            tolerance,
            metadata: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule() {
        let r = InequalityReport::new("x", 2, Some(2.0), None, 1.0005, 1.0, 1e-3);
        assert_eq!(r.pass, Some(true));
        assert!((r.ratio - 1.0005).abs() < 1e-15);
        assert!((r.slack + 0.0005).abs() < 1e-15);
        let r = InequalityReport::new("x", 2, Some(2.0), None, 1.002, 1.0, 1e-3);
        assert_eq!(r.pass, Some(false));
        assert!(r.ratio > 1.0);
    }

    #[test]
    fn indeterminate_serialises_nulls() {
        let r = InequalityReport::indeterminate("moser_trudinger", 2, Some(2.0), 3.0, 0.0).with("note", "no constant");
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["pass"].is_null());
        assert!(v["rhs"].is_null());
        assert_eq!(v["metadata"]["note"], "no constant");
        let back: InequalityReport = serde_json::from_value(v).unwrap();
        assert!(back.rhs.is_nan() && back.ratio.is_nan());
        assert_eq!(back.lhs, 3.0);
    }
}
