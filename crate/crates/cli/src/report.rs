//! Report structure shared by the text and JSON outputs.
//!
//! The JSON document is stable for fixed input and seed: all maps are
//! ordered, field order is fixed by the struct definitions, and timings are
//! omitted entirely under `--no-timings`.

use serde::Serialize;

use jetcalc_core::expr::Assignment;
use jetcalc_core::rng::PRNG_ALGORITHM;

use crate::runspec::RunSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Info,
}

/// One verdict line inside a section.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// "symbolic" or "numeric" for identity checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decided_by: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        CheckItem {
            name: name.into(),
            status,
            verdict: None,
            decided_by: None,
            residual: None,
            witness: None,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Fills verdict metadata from an equivalence result; `gate` decides
    /// whether a non-holding verdict fails the item or stays informational.
    pub fn from_equivalence(
        name: impl Into<String>,
        verdict: &jetcalc_core::Equivalence,
    ) -> Self {
        use jetcalc_core::Equivalence;
        let mut item = CheckItem::new(
            name,
            if verdict.holds() {
                Status::Pass
            } else {
                Status::Fail
            },
        );
        item.verdict = Some(verdict.label().to_string());
        item.decided_by = Some(
            if verdict.decided_numerically() {
                "numeric"
            } else {
                "symbolic"
            }
            .to_string(),
        );
        item.residual = verdict.max_residual();
        if let Equivalence::NumericallyUnequal { witness, .. } = verdict {
            item.witness = Some(witness.clone());
        }
        item
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSection {
    pub name: String,
    pub status: Status,
    pub items: Vec<CheckItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl CheckSection {
    pub fn new(name: impl Into<String>, items: Vec<CheckItem>) -> Self {
        let status = if items.iter().any(|i| i.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        CheckSection {
            name: name.into(),
            status,
            items,
            elapsed_ms: None,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckSection {
            name: name.into(),
            status: Status::Skipped,
            items: vec![CheckItem::new("skipped", Status::Info).with_detail(reason)],
            elapsed_ms: None,
        }
    }
}

/// Echo of the resolved input, so a report is self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub base_dim: usize,
    pub fiber_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    pub name: String,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub range: [f64; 2],
    pub prng: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub input: InputEcho,
    pub sections: Vec<CheckSection>,
    pub overall: Status,
}

impl Report {
    pub fn new(spec: &RunSpec, sections: Vec<CheckSection>) -> Self {
        let overall = if sections.iter().any(|s| s.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        Report {
            version: env!("CARGO_PKG_VERSION"),
            input: InputEcho {
                base_dim: spec.bundle.base_dim(),
                fiber_dim: spec.bundle.fiber_dim(),
                lagrangian: spec.lagrangian_src.clone(),
                name: spec.name.clone(),
                samples: spec.samples,
                seed: spec.seed,
                tol: spec.tol,
                range: [spec.range.0, spec.range.1],
                prng: PRNG_ALGORITHM,
            },
            sections,
            overall,
        }
    }

    pub fn passed(&self) -> bool {
        self.overall != Status::Fail
    }

    pub fn strip_timings(&mut self) {
        for section in &mut self.sections {
            section.elapsed_ms = None;
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let input = &self.input;
        out.push_str(&format!("jetcalc {}\n", self.version));
        out.push_str(&format!(
            "system: {}  (m = {}, N = {})\n",
            input.name, input.base_dim, input.fiber_dim
        ));
        if let Some(lagrangian) = &input.lagrangian {
            out.push_str(&format!("L = {lagrangian}\n"));
        }
        out.push_str(&format!(
            "prng: {}  seed: {}  samples: {}  tol: {:e}\n\n",
            input.prng, input.seed, input.samples, input.tol
        ));
        for section in &self.sections {
            let timing = match section.elapsed_ms {
                Some(ms) => format!("  ({ms:.1} ms)"),
                None => String::new(),
            };
            out.push_str(&format!(
                "[{}]  {}{}\n",
                section.name,
                status_str(section.status),
                timing
            ));
            for item in &section.items {
                let mut line = format!("  {:<55} {}", item.name, status_str(item.status));
                if let Some(verdict) = &item.verdict {
                    line.push_str(&format!("  {verdict}"));
                }
                if let Some(decided) = &item.decided_by {
                    line.push_str(&format!(" [{decided}]"));
                }
                if let Some(residual) = item.residual {
                    line.push_str(&format!("  residual {residual:.2e}"));
                }
                out.push_str(&line);
                out.push('\n');
                if let Some(detail) = &item.detail {
                    out.push_str(&format!("      {detail}\n"));
                }
                if let Some(witness) = &item.witness {
                    out.push_str(&format!("      witness: {witness:?}\n"));
                }
            }
        }
        out.push_str(&format!("\noverall: {}\n", status_str(self.overall).to_uppercase()));
        out
    }
}

fn status_str(status: Status) -> &'static str {
    match status {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skipped => "skipped",
        Status::Info => "info",
    }
}
