use serde::{Deserialize, Serialize};

use super::SuiteId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, observed: f64, threshold: f64) -> bool {
        match self {
            Relation::Lt => observed < threshold,
            Relation::Le => observed <= threshold,
            Relation::Gt => observed > threshold,
            Relation::Ge => observed >= threshold,
        }
    }

    /// Distance to the threshold, positive on the passing side.
    pub fn margin(self, observed: f64, threshold: f64) -> f64 {
        match self {
            Relation::Lt | Relation::Le => threshold - observed,
            Relation::Gt | Relation::Ge => observed - threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub criterion: String,
    pub observed: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub margin: f64,
    /// Whether `observed relation threshold` holds.
    pub holds: bool,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CriterionRow {
    pub fn graded(criterion: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        let holds = relation.holds(observed, threshold);
        Self {
            criterion: criterion.into(),
            observed,
            relation,
            threshold,
            margin: relation.margin(observed, threshold),
            holds,
            verdict: if holds { Verdict::Pass } else { Verdict::Fail },
            detail: None,
        }
    }

    pub fn informational(criterion: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        Self { verdict: Verdict::Informational, ..Self::graded(criterion, observed, relation, threshold) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn line(&self, suite: SuiteId) -> String {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Informational => "INFO",
        };
        format!(
            "{tag} {suite} {}: {:.6e} {} {:.6e} (margin {:+.3e})",
            self.criterion,
            self.observed,
            self.relation.symbol(),
            self.threshold,
            self.margin
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteId,
    pub theorem: String,
    /// Hash of each config the suite ran, by config name.
    pub config_hashes: Vec<(String, String)>,
    pub rows: Vec<CriterionRow>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn new(
        suite: SuiteId,
        theorem: String,
        config_hashes: Vec<(String, String)>,
        rows: Vec<CriterionRow>,
    ) -> Self {
        let passed = rows.iter().all(|r| r.verdict != Verdict::Fail);
        Self { suite, theorem, config_hashes, rows, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(seed: u64, suites: Vec<SuiteReport>) -> Self {
        let passed = suites.iter().all(|s| s.passed);
        Self { version: crate::simulate::VERSION.to_string(), seed, suites, passed }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.suites.iter().flat_map(|s| s.rows.iter().map(move |r| r.line(s.suite)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_are_signed() {
        let r = CriterionRow::graded("ks", 0.03, Relation::Lt, 0.05);
        assert!(r.holds && r.verdict == Verdict::Pass);
        assert!((r.margin - 0.02).abs() < 1e-15);
        let f = CriterionRow::graded("frac", 0.9, Relation::Ge, 0.99);
        assert!(!f.holds && f.verdict == Verdict::Fail && f.margin < 0.0);
        let nan = CriterionRow::graded("x", f64::NAN, Relation::Lt, 1.0);
        assert!(!nan.holds);
    }

    #[test]
    fn informational_rows_never_fail_a_suite() {
        let rows = vec![
            CriterionRow::graded("a", 0.0, Relation::Le, 0.0),
            CriterionRow::informational("b", 1.0, Relation::Lt, 0.0),
        ];
        let s = SuiteReport::new(SuiteId::T4, String::new(), Vec::new(), rows);
        assert!(s.passed);
        assert!(s.rows[1].line(SuiteId::T4).starts_with("INFO T4 b"));
    }
}
