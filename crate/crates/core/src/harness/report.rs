//! Suite reports: JSON document, CSV flattening and a text summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InequalityReport;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    /// Sorted by id, then name.
    pub entries: Vec<InequalityReport>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, mut entries: Vec<InequalityReport>) -> Self {
        entries.sort_by(|a, b| (a.id, &a.name).cmp(&(b.id, &b.name)));
        Self {
            schema_version: SCHEMA_VERSION,
            suite: suite.into(),
            seed,
            entries,
        }
    }

    /// Every verdict lets the suite pass.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.ok())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Report(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// One row per entry and ladder value.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Report(e.to_string());
        w.write_record([
            "id", "name", "ladder_kind", "value", "label", "n_emp", "worst_part", "lhs", "rhs_total", "trend", "verdict",
            "seed",
        ])
        .map_err(err)?;
        for e in &self.entries {
            for r in &e.runs {
                let worst = r.parts.iter().fold(None, |acc: Option<&super::Part>, p| match acc {
                    Some(a) if a.n_emp >= p.n_emp => Some(a),
                    _ => Some(p),
                });
                let (wp, lhs, rhs) = worst.map_or((String::new(), 0.0, 0.0), |p| {
                    (p.name.clone(), p.lhs, p.rhs_terms.iter().map(|t| t.value).sum())
                });
                w.write_record([
                    e.id.as_str().to_string(),
                    e.name.clone(),
                    to_value(&e.ladder_kind),
                    num(r.value),
                    r.label.clone().unwrap_or_default(),
                    num(r.n_emp),
                    wp,
                    num(lhs),
                    num(rhs),
                    to_value(&e.trend),
                    to_value(&e.verdict),
                    e.seed.to_string(),
                ])
                .map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
    }

    /// Table of id, name, `N_emp`, margin, trend and verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "suite {} (seed {})", self.suite, self.seed);
        let _ = writeln!(
            out,
            "{:<20} {:<28} {:>12} {:>12} {:<13} {}",
            "id", "name", "N_emp", "margin", "trend", "verdict"
        );
        for e in &self.entries {
            let margin = e.margin().map_or_else(|| "-".to_string(), |m| format!("{m:.6}"));
            let _ = writeln!(
                out,
                "{:<20} {:<28} {:>12} {:>12} {:<13} {}",
                e.id.as_str(),
                e.name,
                format!("{:.6e}", e.n_emp_series.iter().copied().fold(0.0, f64::max)),
                margin,
                to_value(&e.trend),
                to_value(&e.verdict)
            );
        }
        let _ = writeln!(out, "{}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

fn to_value<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        real::text(v).to_string()
    }
}

/// `f64` fields that may be infinite or NaN, written as strings then.
pub mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub(crate) fn text(v: f64) -> &'static str {
        if v.is_nan() {
            "nan"
        } else if v > 0.0 {
            "inf"
        } else {
            "-inf"
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Text(String),
    }

    impl Repr {
        pub(crate) fn of(v: f64) -> Self {
            if v.is_finite() {
                Repr::Num(v)
            } else {
                Repr::Text(text(v).into())
            }
        }

        pub(crate) fn get<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Repr::Num(v) => Ok(v),
                Repr::Text(s) => match s.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::custom(format!("bad number '{s}'"))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Repr::of(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.get()
    }
}

pub mod real_vec {
    use super::real::Repr;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| Repr::of(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(Repr::get).collect()
    }
}

pub mod real_map {
    use std::collections::BTreeMap;

    use super::real::Repr;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|(k, x)| (k.clone(), Repr::of(*x)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, r)| r.get().map(|v| (k, v)))
            .collect()
    }
}
