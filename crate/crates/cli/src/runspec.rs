//! The system-spec file format: a TOML document with `[bundle]`,
//! `[lagrangian]`, `[checks]` and `[invert]` sections. Unknown keys are
//! errors; omitted fields take documented defaults.
//!
//! ```toml
//! [bundle]
//! base_dim = 2
//! fiber_dim = 1
//!
//! [lagrangian]
//! L = "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2"
//! name = "klein-gordon"
//!
//! [checks]
//! samples = 200
//! seed = 42
//! tol = 1e-9
//! range = [-2.0, 2.0]
//!
//! [invert]
//! y1 = 1.0
//! p1_1 = 2.0
//! p1_2 = -1.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use jetcalc_core::chart::{make_chart, BundleSpec, SpaceKind};
use jetcalc_core::expr::Assignment;
use jetcalc_core::numeric::{DEFAULT_RANGE, DEFAULT_SAMPLES, DEFAULT_TOL};

#[derive(Debug)]
pub enum InputError {
    Io(String),
    Toml(String),
    Bundle(String),
    BadRange { lo: f64, hi: f64 },
    UnknownInvertCoordinate { name: String },
    MissingLagrangian,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputError::Io(e) => write!(f, "cannot read spec file: {e}"),
            InputError::Toml(e) => write!(f, "spec file parse error: {e}"),
            InputError::Bundle(e) => write!(f, "invalid bundle: {e}"),
            InputError::BadRange { lo, hi } => {
                write!(f, "invalid sampling range [{lo}, {hi}] (need lo < hi)")
            }
            InputError::UnknownInvertCoordinate { name } => {
                write!(f, "[invert] key `{name}` is not a Pi-chart coordinate")
            }
            InputError::MissingLagrangian => {
                write!(f, "spec file has no [lagrangian] section")
            }
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSpecFile {
    bundle: BundleSection,
    lagrangian: Option<LagrangianSection>,
    checks: Option<ChecksSection>,
    invert: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleSection {
    base_dim: usize,
    fiber_dim: usize,
    cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LagrangianSection {
    #[serde(rename = "L")]
    lagrangian: String,
    name: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChecksSection {
    dimensions: Option<bool>,
    canonical_forms: Option<bool>,
    pullbacks: Option<bool>,
    diagram: Option<bool>,
    tautology: Option<bool>,
    regularity: Option<bool>,
    inversion: Option<bool>,
    samples: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    range: Option<[f64; 2]>,
    require_regular: Option<bool>,
}

/// Which verification sections a `check` run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub dimensions: bool,
    pub canonical_forms: bool,
    pub pullbacks: bool,
    pub diagram: bool,
    pub tautology: bool,
    pub regularity: bool,
    pub inversion: bool,
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub bundle: BundleSpec,
    pub lagrangian_src: Option<String>,
    pub name: String,
    pub toggles: Toggles,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub range: (f64, f64),
    pub require_regular: bool,
    pub invert_target: Option<Assignment>,
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<RunSpec, InputError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| InputError::Io(format!("{path:?}: {e}")))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunSpec, InputError> {
        let file: RunSpecFile =
            toml::from_str(text).map_err(|e| InputError::Toml(e.to_string()))?;

        let bundle = match file.bundle.cap {
            Some(cap) => BundleSpec::with_cap(file.bundle.base_dim, file.bundle.fiber_dim, cap),
            None => BundleSpec::new(file.bundle.base_dim, file.bundle.fiber_dim),
        }
        .map_err(|e| InputError::Bundle(e.to_string()))?;

        let checks = file.checks.unwrap_or_default();
        let range = checks.range.unwrap_or([DEFAULT_RANGE.0, DEFAULT_RANGE.1]);
        if range[0] >= range[1] {
            return Err(InputError::BadRange {
                lo: range[0],
                hi: range[1],
            });
        }

        // [invert] keys must name Pi-chart coordinates.
        let invert_target = match &file.invert {
            Some(entries) => {
                let pi_chart = make_chart(SpaceKind::Pi, &bundle);
                let mut target = Assignment::new();
                for (key, value) in entries {
                    if !pi_chart.contains(key) {
                        return Err(InputError::UnknownInvertCoordinate { name: key.clone() });
                    }
                    target.insert(key.clone(), *value);
                }
                Some(target)
            }
            None => None,
        };

        let (lagrangian_src, name) = match file.lagrangian {
            Some(section) => {
                let name = section.name.unwrap_or_else(|| "unnamed".to_string());
                (Some(section.lagrangian), name)
            }
            None => (None, "unnamed".to_string()),
        };

        Ok(RunSpec {
            bundle,
            lagrangian_src,
            name,
            toggles: Toggles {
                dimensions: checks.dimensions.unwrap_or(true),
                canonical_forms: checks.canonical_forms.unwrap_or(true),
                pullbacks: checks.pullbacks.unwrap_or(true),
                diagram: checks.diagram.unwrap_or(true),
                tautology: checks.tautology.unwrap_or(true),
                regularity: checks.regularity.unwrap_or(true),
                // Inversion defaults to on exactly when a target is given.
                inversion: checks.inversion.unwrap_or(invert_target.is_some()),
            },
            samples: checks.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: checks.seed.unwrap_or(0),
            tol: checks.tol.unwrap_or(DEFAULT_TOL),
            range: (range[0], range[1]),
            require_regular: checks.require_regular.unwrap_or(false),
            invert_target,
        })
    }

    pub fn lagrangian_src(&self) -> Result<&str, InputError> {
        self.lagrangian_src
            .as_deref()
            .ok_or(InputError::MissingLagrangian)
    }
}
