//! Diagnostic reports and their on-disk forms (`report.json`, `series.csv`).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::stats::ProbabilityEstimate;

pub const REPORT_SCHEMA: &str = "ergochain-report/1";
pub const SERIES_HEADER: &str = "n,estimate,ci_low,ci_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Verdict for the claim "quantity > threshold".
    ///
    /// PASS when the whole interval is above the threshold, FAIL when it lies at
    /// or below it (or when the estimate itself sits on or below a threshold the
    /// interval only touches), INCONCLUSIVE when the interval straddles it.
    pub fn above(stat: &Statistic, threshold: f64) -> Self {
        if stat.ci_low > threshold {
            Verdict::Pass
        } else if stat.ci_high <= threshold
            || (stat.ci_low >= threshold && stat.estimate <= threshold)
        {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// Verdict for the claim "quantity ≥ threshold".
    pub fn at_least(stat: &Statistic, threshold: f64) -> Self {
        if stat.ci_low >= threshold {
            Verdict::Pass
        } else if stat.ci_high < threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SeriesPoint {
    pub fn exact(n: u64, value: f64) -> Self {
        Self {
            n,
            estimate: value,
            ci_low: value,
            ci_high: value,
        }
    }

    pub fn from_probability(n: u64, p: &ProbabilityEstimate) -> Self {
        Self {
            n,
            estimate: p.p_hat,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
        }
    }

    pub fn statistic(&self) -> Statistic {
        Statistic {
            estimate: self.estimate,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Statistic {
    pub fn exact(value: f64) -> Self {
        Self {
            estimate: value,
            ci_low: value,
            ci_high: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// One of `>`, `>=`, `<=`, `<`.
    pub comparison: String,
    pub value: f64,
}

impl Threshold {
    pub fn new(comparison: &str, value: f64) -> Self {
        Self {
            comparison: comparison.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub values: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub schema: String,
    pub condition_name: String,
    pub inputs: BTreeMap<String, Value>,
    pub series: Vec<SeriesPoint>,
    pub statistic: Option<Statistic>,
    pub threshold: Option<Threshold>,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
    #[serde(default)]
    pub details: Value,
}

impl DiagnosticReport {
    pub fn new(condition_name: &str) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            condition_name: condition_name.to_string(),
            inputs: BTreeMap::new(),
            series: Vec::new(),
            statistic: None,
            threshold: None,
            verdict: Verdict::Inconclusive,
            witnesses: Vec::new(),
            notes: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.set_input(key, value);
        self
    }

    pub fn set_input(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.inputs.insert(key.to_string(), v);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn witness(&mut self, label: impl Into<String>, values: impl Serialize) {
        self.witnesses.push(Witness {
            label: label.into(),
            values: serde_json::to_value(values).unwrap_or(Value::Null),
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn write_series_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{SERIES_HEADER}")?;
        for p in &self.series {
            writeln!(w, "{},{:?},{:?},{:?}", p.n, p.estimate, p.ci_low, p.ci_high)?;
        }
        Ok(())
    }

    pub fn series_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_series_csv(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii")
    }
}
