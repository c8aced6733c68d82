//! Check records and the versioned report envelope.

use std::fmt::Write as _;

use serde::Serialize;

use crate::num::Num;

pub const SCHEMA: u32 = 1;
pub const TOOL: &str = "hyperkahler";

/// Labels a check row may cite.
pub const ANCHORS: [&str; 10] = [
    "e:quaternionic",
    "e:conds",
    "e:conds2",
    "e:posdef",
    "e:tangent",
    "e:hodge",
    "p:hyper-kahler",
    "p:linalg",
    "p:karshon",
    "t:moduli",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub paper_anchor: &'static str,
    pub residual: Num,
    pub tolerance: Num,
    pub pass: bool,
    /// Number of instances folded into this row.
    pub samples: usize,
}

impl CheckRecord {
    /// `pass` is `residual <= tolerance`; NaN fails.
    pub fn new(name: impl Into<String>, anchor: &'static str, residual: f64, tolerance: f64) -> Self {
        debug_assert!(ANCHORS.contains(&anchor));
        CheckRecord {
            name: name.into(),
            paper_anchor: anchor,
            residual: Num(residual),
            tolerance: Num(tolerance),
            pass: residual <= tolerance,
            samples: 1,
        }
    }

    /// A yes/no check reported as a failure count against tolerance zero.
    pub fn flag(name: impl Into<String>, anchor: &'static str, ok: bool) -> Self {
        Self::new(name, anchor, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    /// Folds another sample of the same check: worst residual, failure
    /// counts add up.
    pub fn absorb(&mut self, other: &CheckRecord) {
        let counting = self.tolerance.0 == 0.0 && other.tolerance.0 == 0.0;
        let r = if counting {
            self.residual.0 + other.residual.0
        } else if self.residual.0.is_nan() || other.residual.0.is_nan() {
            f64::NAN
        } else {
            self.residual.0.max(other.residual.0)
        };
        self.residual = Num(r);
        self.pass &= other.pass;
        self.samples += other.samples;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<C: Serialize, D: Serialize> {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<D>,
    pub summary: Summary,
}

impl<C: Serialize, D: Serialize> Report<C, D> {
    pub fn new(command: &'static str, config: C, checks: Vec<CheckRecord>, details: Option<D>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let summary = Summary {
            total: checks.len(),
            passed,
            failed: checks.len() - passed,
        };
        Report {
            schema: SCHEMA,
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            checks,
            details,
            summary,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per check, then the tally.
    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<44} residual {:>10.3e}  tol {:>8.1e}  [{}]",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual.0,
                c.tolerance.0,
                c.paper_anchor
            );
        }
        let _ = writeln!(
            out,
            "{} checks, {} passed, {} failed",
            self.summary.total, self.summary.passed, self.summary.failed
        );
        out
    }
}

/// Folds records with equal names, keeping first-seen order.
pub fn merge(records: impl IntoIterator<Item = CheckRecord>) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = Vec::new();
    for r in records {
        match out.iter_mut().find(|o| o.name == r.name) {
            Some(existing) => existing.absorb(&r),
            None => out.push(r),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_worst_and_counts_flags() {
        let rows = merge([
            CheckRecord::new("a", "p:linalg", 1e-12, 1e-9),
            CheckRecord::flag("b", "e:posdef", true),
            CheckRecord::new("a", "p:linalg", 3e-12, 1e-9),
            CheckRecord::flag("b", "e:posdef", false),
            CheckRecord::flag("b", "e:posdef", false),
        ]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].residual.0, 3e-12);
        assert!(rows[0].pass);
        assert_eq!(rows[0].samples, 2);
        assert_eq!(rows[1].residual.0, 2.0);
        assert!(!rows[1].pass);
    }

    #[test]
    fn nan_fails() {
        assert!(!CheckRecord::new("x", "p:linalg", f64::NAN, 1.0).pass);
    }

    #[test]
    fn envelope_fields() {
        let r: Report<(), ()> = Report::new("verify", (), vec![CheckRecord::flag("x", "t:moduli", true)], None);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["summary"]["passed"], 1);
        assert_eq!(v["checks"][0]["paper_anchor"], "t:moduli");
        assert!(v.get("details").is_none());
    }
}
