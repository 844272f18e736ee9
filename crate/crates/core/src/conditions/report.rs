use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Margin applied to strict inequalities.
pub const STRICT_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    NotSatisfied,
    Inconclusive,
}

/// How `computed_value` is compared with `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// value < threshold
    Below,
    /// value > threshold
    Above,
    /// value >= threshold
    AtLeast,
    /// value finite (threshold is +inf)
    Finite,
}

impl Comparison {
    pub fn holds(&self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold - STRICT_MARGIN,
            Comparison::Above => value > threshold + STRICT_MARGIN,
            Comparison::AtLeast => value >= threshold,
            Comparison::Finite => value.is_finite(),
        }
    }

    fn near_boundary(&self, value: f64, threshold: f64) -> bool {
        matches!(self, Comparison::Below | Comparison::Above)
            && (value - threshold).abs() <= STRICT_MARGIN
    }
}

/// Outcome of one condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_name: String,
    pub label: String,
    pub satisfied: bool,
    pub status: Status,
    #[serde(with = "real")]
    pub computed_value: f64,
    #[serde(with = "real")]
    pub threshold: f64,
    pub comparison: Comparison,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy_note: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl ConditionReport {
    pub fn new(
        name: &str,
        label: &str,
        value: f64,
        threshold: f64,
        comparison: Comparison,
        method: Method,
    ) -> Self {
        let satisfied = comparison.holds(value, threshold);
        let mut rep = ConditionReport {
            condition_name: name.into(),
            label: label.into(),
            satisfied,
            status: if satisfied { Status::Satisfied } else { Status::NotSatisfied },
            computed_value: value,
            threshold,
            comparison,
            method,
            discrepancy_note: None,
            extra: BTreeMap::new(),
        };
        if comparison.near_boundary(value, threshold) {
            rep.extra.insert("boundary".into(), true.into());
        }
        rep
    }

    /// Marks the report inconclusive (never satisfied).
    pub fn inconclusive(mut self, why: &str) -> Self {
        self.satisfied = false;
        self.status = Status::Inconclusive;
        self.discrepancy_note = Some(why.into());
        self
    }

    /// Forces the report to fail for a reason other than the comparison.
    pub fn fail_because(mut self, why: &str) -> Self {
        self.satisfied = false;
        if self.status == Status::Satisfied {
            self.status = Status::NotSatisfied;
        }
        self.discrepancy_note = Some(match self.discrepancy_note.take() {
            Some(n) => format!("{n}; {why}"),
            None => why.into(),
        });
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.into(), real_value(value));
        self
    }
}

/// JSON value for a possibly non-finite real.
pub fn real_value(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::Value::from(x)
    } else {
        serde_json::Value::from(real::name(x))
    }
}

/// Serialises non-finite reals as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod real {
    use super::*;

    pub(crate) fn name(x: f64) -> &'static str {
        if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(name(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }
}
