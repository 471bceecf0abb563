//! Experiment reports: one record per checked claim, plus JSON/CSV/text output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Relative tolerance for floating-point magnitude comparisons.
pub const FLOAT_TOL: f64 = 1e-6;

/// Rounds to 12 significant digits so that reports are bit-stable.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// `lhs ≤ rhs` up to a relative slack.
pub fn le_rel(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * rhs.abs().max(1.0)
}

/// Whether a claim bounds its left side from above or from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `lhs ≤ rhs` (or `lhs ≪ rhs`).
    Upper,
    /// `lhs ≥ rhs` (or `lhs ≫ rhs`).
    Lower,
    /// `lhs = rhs`.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub claim: String,
    pub q: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_size: Option<u64>,
    /// The `t` or `ℓ` (or other index) the record refers to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<String>,
    pub direction: Direction,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// `None` for report-only records.
    pub pass: Option<bool>,
    /// Hard records decide the overall verdict; the rest are data.
    pub hard: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    fn base(claim: &str, q: u32, direction: Direction, lhs: f64, rhs: f64) -> Self {
        let (lhs, rhs) = (round12(lhs), round12(rhs));
        let ratio = (rhs != 0.0).then(|| round12(lhs / rhs));
        Record {
            claim: claim.to_string(),
            q,
            i: None,
            j: None,
            e_size: None,
            f_size: None,
            index: None,
            direction,
            lhs,
            rhs,
            ratio,
            pass: None,
            hard: false,
            note: None,
        }
    }

    /// A hard inequality `lhs ≤ rhs` with relative tolerance `FLOAT_TOL`.
    pub fn upper(claim: &str, q: u32, lhs: f64, rhs: f64) -> Self {
        let mut r = Self::base(claim, q, Direction::Upper, lhs, rhs);
        r.pass = Some(le_rel(lhs, rhs, FLOAT_TOL));
        r.hard = true;
        r
    }

    /// A hard inequality `lhs ≤ rhs + FLOAT_TOL` with absolute slack.
    pub fn upper_abs(claim: &str, q: u32, lhs: f64, rhs: f64) -> Self {
        let mut r = Self::base(claim, q, Direction::Upper, lhs, rhs);
        r.pass = Some(lhs <= rhs + FLOAT_TOL);
        r.hard = true;
        r
    }

    /// A hard exact check whose outcome was decided by the caller.
    pub fn exact(claim: &str, q: u32, direction: Direction, lhs: f64, rhs: f64, pass: bool) -> Self {
        let mut r = Self::base(claim, q, direction, lhs, rhs);
        r.pass = Some(pass);
        r.hard = true;
        r
    }

    /// An exact equality of two counts.
    pub fn equal(claim: &str, q: u32, lhs: u128, rhs: u128) -> Self {
        Self::exact(claim, q, Direction::Equal, lhs as f64, rhs as f64, lhs == rhs)
    }

    /// Data only: the empirical ratio against a bound with unspecified constant.
    pub fn ratio(claim: &str, q: u32, direction: Direction, lhs: f64, rhs: f64) -> Self {
        Self::base(claim, q, direction, lhs, rhs)
    }

    pub fn with_sizes(mut self, e: usize, f: usize) -> Self {
        self.e_size = Some(e as u64);
        self.f_size = Some(f as u64);
        self
    }

    pub fn with_varieties(mut self, i: impl Into<String>, j: impl Into<String>) -> Self {
        self.i = Some(i.into());
        self.j = Some(j.into());
        self
    }

    pub fn with_i(mut self, i: impl Into<String>) -> Self {
        self.i = Some(i.into());
        self
    }

    pub fn with_index(mut self, index: impl Into<String>) -> Self {
        self.index = Some(index.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Turns a hard record into a data record.
    pub fn informational(mut self) -> Self {
        self.hard = false;
        self
    }

    pub fn failed(&self) -> bool {
        self.hard && self.pass == Some(false)
    }

    /// Imposes a user-chosen constant `c` on a report-only record.
    pub fn impose_constant(&mut self, c: f64) {
        if self.hard {
            return;
        }
        let ok = match self.direction {
            Direction::Upper => le_rel(self.lhs, c * self.rhs, FLOAT_TOL),
            Direction::Lower => le_rel(self.rhs, c * self.lhs, FLOAT_TOL),
            Direction::Equal => return,
        };
        self.pass = Some(ok);
        self.hard = true;
        self.note = Some(format!("constant {c} imposed"));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    /// Field descriptors `p^n:c0,…,cn`, one per field used.
    pub fields: Vec<String>,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub records: Vec<Record>,
    /// Observations that do not fail the run.
    pub flags: Vec<String>,
    pub pass: bool,
    /// Only filled on request, so default output stays byte-stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Report {
            experiment: experiment.to_string(),
            fields: Vec::new(),
            params: BTreeMap::new(),
            seed,
            records: Vec::new(),
            flags: Vec::new(),
            pass: true,
            runtime_ms: None,
        }
    }

    pub fn add_field(&mut self, descriptor: String) {
        if !self.fields.contains(&descriptor) {
            self.fields.push(descriptor);
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = Record>) {
        self.records.extend(rs);
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    /// Recomputes `pass` as the conjunction of the hard records.
    pub fn finish(mut self) -> Self {
        self.pass = !self.records.iter().any(Record::failed);
        self
    }

    /// Merges sub-reports into one (used by `run-all`).
    pub fn merge(experiment: &str, seed: u64, parts: Vec<Report>) -> Report {
        let mut out = Report::new(experiment, seed);
        for part in parts {
            for f in part.fields {
                out.add_field(f);
            }
            for mut r in part.records {
                r.claim = format!("{}/{}", part.experiment, r.claim);
                out.records.push(r);
            }
            for fl in part.flags {
                out.flags.push(format!("{}: {fl}", part.experiment));
            }
            out.params
                .insert(part.experiment.clone(), Value::Object(part.params.into_iter().collect()));
        }
        out.finish()
    }

    pub fn impose_constant(&mut self, c: f64) {
        for r in &mut self.records {
            r.impose_constant(c);
        }
        self.pass = !self.records.iter().any(Record::failed);
    }

    pub fn failed_claims(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .records
            .iter()
            .filter(|r| r.failed())
            .map(|r| r.claim.as_str())
            .collect();
        v.dedup();
        v
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub const CSV_HEADER: &'static str = "claim,q,i,j,E,F,t,lhs,rhs,ratio,pass";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let num = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let pass = match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&r.claim),
                r.q,
                csv_field(&opt(&r.i)),
                csv_field(&opt(&r.j)),
                num(r.e_size),
                num(r.f_size),
                csv_field(&opt(&r.index)),
                r.lhs,
                r.rhs,
                r.ratio.map(|x| x.to_string()).unwrap_or_default(),
                pass
            );
        }
        out
    }

    /// Human summary, failed claims first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} {}", verdict, self.experiment);
        let failed = self.failed_claims();
        if !failed.is_empty() {
            let _ = writeln!(out, "failed claims: {}", failed.join(", "));
        }
        for fl in &self.flags {
            let _ = writeln!(out, "flag: {fl}");
        }
        let _ = writeln!(out, "fields: {}", self.fields.join(" "));
        let mut order: Vec<&Record> = self.records.iter().filter(|r| r.failed()).collect();
        order.extend(self.records.iter().filter(|r| !r.failed()));
        for r in order {
            let mark = match (r.hard, r.pass) {
                (true, Some(false)) => "FAIL",
                (true, _) => "ok  ",
                (false, _) => "data",
            };
            let rel = match r.direction {
                Direction::Upper => "<=",
                Direction::Lower => ">=",
                Direction::Equal => "==",
            };
            let mut line = format!("{mark} {} q={}", r.claim, r.q);
            if let (Some(e), Some(f)) = (r.e_size, r.f_size) {
                let _ = write!(line, " |E|={e} |F|={f}");
            }
            if let Some(ix) = &r.index {
                let _ = write!(line, " at {ix}");
            }
            let _ = write!(line, ": {} {rel} {}", r.lhs, r.rhs);
            if let Some(ratio) = r.ratio {
                let _ = write!(line, " (ratio {ratio})");
            }
            if let Some(n) = &r.note {
                let _ = write!(line, " [{n}]");
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", 7);
        r.add_field("5^1:0,1".into());
        r.param("q", 5);
        r.push(Record::upper("bound", 5, 1.0, 2.0).with_sizes(3, 4).with_index("2"));
        r.push(Record::equal("count", 5, 10, 11));
        r.push(Record::ratio("growth", 5, Direction::Lower, 3.0, 6.0));
        r.finish()
    }

    #[test]
    fn rounding_is_stable() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(round12(2f64.sqrt())), round12(2f64.sqrt()));
        assert_eq!(round12(0.0), 0.0);
        assert_eq!(round12(4896.0), 4896.0);
    }

    #[test]
    fn verdict_uses_hard_records_only() {
        let r = sample();
        assert!(!r.pass);
        assert_eq!(r.failed_claims(), vec!["count"]);
        let mut ok = Report::new("x", 0);
        ok.push(Record::ratio("growth", 3, Direction::Upper, 100.0, 1.0));
        assert!(ok.finish().pass);
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = r.to_json();
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert_eq!(Report::from_json(&text).unwrap().to_json(), text);
        assert!(!text.contains("runtime_ms"));
    }

    #[test]
    fn csv_and_text() {
        let r = sample();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with(Report::CSV_HEADER));
        assert!(csv.contains("bound,5,,,3,4,2,1,2,0.5,pass"));
        let text = r.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "FAIL demo");
        assert_eq!(lines[1], "failed claims: count");
        assert!(lines[3].starts_with("FAIL count"));
    }

    #[test]
    fn imposed_constants() {
        let mut r = Report::new("x", 0);
        r.push(Record::ratio("upper", 3, Direction::Upper, 10.0, 1.0));
        r.push(Record::ratio("lower", 3, Direction::Lower, 1.0, 10.0));
        r.impose_constant(20.0);
        assert!(r.pass);
        r.impose_constant(5.0);
        // Already hard after the first imposition; stays as decided.
        assert!(r.pass);
        let mut s = Report::new("x", 0);
        s.push(Record::ratio("upper", 3, Direction::Upper, 10.0, 1.0));
        s.impose_constant(5.0);
        assert!(!s.pass);
    }
}
