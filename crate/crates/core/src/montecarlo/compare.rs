//! Empirical-versus-theoretical checks and their CSV / JSON rendering.

use serde::{Deserialize, Serialize};

/// Acceptance rule of a [`Check`]. All comparisons are strict, so a zero
/// tolerance always fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    /// `|empirical - theoretical| < t`.
    Abs(f64),
    /// `|empirical - theoretical| < t |theoretical|`.
    Rel(f64),
    /// `empirical < t * theoretical`: a one-sided bound, `t = 1` nominally.
    Upper(f64),
}

impl Tolerance {
    pub fn scaled(self, s: f64) -> Self {
        match self {
            Tolerance::Abs(t) => Tolerance::Abs(t * s),
            Tolerance::Rel(t) => Tolerance::Rel(t * s),
            Tolerance::Upper(t) => Tolerance::Upper(t * s),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Tolerance::Abs(_) => "abs",
            Tolerance::Rel(_) => "rel",
            Tolerance::Upper(_) => "upper",
        }
    }

    fn value(&self) -> f64 {
        match *self {
            Tolerance::Abs(t) | Tolerance::Rel(t) | Tolerance::Upper(t) => t,
        }
    }
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub empirical: f64,
    pub theoretical: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub kind: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        criterion: u8,
        name: impl Into<String>,
        empirical: f64,
        theoretical: f64,
        tolerance: Tolerance,
    ) -> Self {
        let abs_error = (empirical - theoretical).abs();
        let rel_error = if theoretical == 0.0 {
            if abs_error == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            abs_error / theoretical.abs()
        };
        let pass = match tolerance {
            Tolerance::Abs(t) => abs_error < t,
            Tolerance::Rel(t) => rel_error < t,
            Tolerance::Upper(t) => empirical < t * theoretical,
        };
        Self {
            criterion,
            name: name.into(),
            empirical,
            theoretical,
            abs_error,
            rel_error,
            kind: tolerance.kind().to_string(),
            tolerance: tolerance.value(),
            pass: pass && empirical.is_finite() && theoretical.is_finite(),
        }
    }

    /// A distance (TV, KS, sup-norm) that must stay below `t`.
    pub fn distance(criterion: u8, name: impl Into<String>, distance: f64, t: Tolerance) -> Self {
        Self::new(criterion, name, distance, 0.0, t)
    }

    /// A single PASS/FAIL line.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: empirical={} theoretical={} abs_err={:.3e} rel_err={:.3e} ({} < {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            num(self.empirical),
            num(self.theoretical),
            self.abs_error,
            self.rel_error,
            self.kind,
            num(self.tolerance)
        )
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(checks: Vec<Check>) -> Self {
        Self { checks }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per check, header included.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(c).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8 csv")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&c.line());
            out.push('\n');
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_pass_with_zero_error() {
        let c = Check::new(1, "x", 0.25, 0.25, Tolerance::Rel(0.01));
        assert!(c.pass);
        assert_eq!(c.abs_error, 0.0);
        assert_eq!(c.rel_error, 0.0);
        assert!(!Check::new(1, "x", 0.25, 0.25, Tolerance::Rel(0.0)).pass);
    }

    #[test]
    fn tolerance_kinds() {
        assert!(Check::new(2, "a", 1.005, 1.0, Tolerance::Abs(0.01)).pass);
        assert!(!Check::new(2, "a", 1.02, 1.0, Tolerance::Abs(0.01)).pass);
        assert!(Check::new(2, "r", 110.0, 100.0, Tolerance::Rel(0.15)).pass);
        assert!(Check::new(2, "u", 0.05, 1.6, Tolerance::Upper(1.0)).pass);
        assert!(!Check::new(2, "u", 0.05, 1.6, Tolerance::Upper(1.0).scaled(0.0)).pass);
        assert!(Check::distance(3, "tv", 0.01, Tolerance::Abs(0.02)).pass);
        assert!(!Check::new(2, "nan", f64::NAN, 1.0, Tolerance::Abs(1.0)).pass);
    }

    #[test]
    fn renderings() {
        let rep = Report::new(vec![
            Check::new(1, "mean", 1.0, 1.0, Tolerance::Abs(0.01)),
            Check::distance(3, "tv", 0.5, Tolerance::Abs(0.02)),
        ]);
        assert!(!rep.all_pass());
        let csv = rep.to_csv();
        assert!(csv.starts_with("criterion,name,empirical,theoretical,abs_error,rel_error,kind,tolerance,pass"));
        assert_eq!(csv.lines().count(), 3);
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(json["checks"][1]["pass"], false);
        assert!(rep.to_text().contains("FAIL [ 3] tv"));
    }
}
