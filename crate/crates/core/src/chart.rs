//! Coordinate charts of the six spaces attached to a fiber bundle
//! `E -> M`, and the canonical coordinate maps between the momentum spaces.
//!
//! For base dimension `m` and fiber dimension `N` the charts are, in fixed
//! order:
//!
//! | space    | coordinates                                   | dimension      |
//! |----------|-----------------------------------------------|----------------|
//! | `E`      | `x1..xm, y1..yN`                              | `m + N`        |
//! | `J1E`    | `+ v{A}_{mu}`                                 | `m + N + Nm`   |
//! | `J1E*`   | `+ P{mu}_{nu}, p{A}_{mu}`                     | `m + N + m² + Nm` |
//! | `Pi`     | `+ p{A}_{mu}`                                 | `m + N + Nm`   |
//! | `Mpi`    | `+ p0, p{A}_{mu}`                             | `m + N + 1 + Nm` |
//! | `J1pi*`  | `+ p{A}_{mu}`                                 | `m + N + Nm`   |
//!
//! The coordinate-name scheme (`x{i}`, `y{A}`, `v{A}_{mu}`, `p{A}_{mu}`,
//! `P{mu}_{nu}`, `p0`, all indices 1-based) is part of the public contract:
//! it is the vocabulary accepted by the expression parser. Working in a
//! single natural chart per space is a deliberate restriction — no atlas
//! transitions are modeled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::Expr;

/// Default upper bound on `m` and `N`; wedge expansion is combinatorial in
/// the base dimension, so the cap keeps every construction tractable.
pub const DEFAULT_DIMENSION_CAP: usize = 6;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ChartError {
    #[error("dimension cap exceeded: m={m}, N={n} with cap {cap}")]
    CapExceeded { m: usize, n: usize, cap: usize },
    #[error("bundle dimensions must be at least 1 (got m={m}, N={n})")]
    ZeroDimension { m: usize, n: usize },
    #[error("chart mismatch: expected {expected}, got {found}")]
    ChartMismatch { expected: String, found: String },
    #[error("coordinate map component for `{coordinate}` uses `{variable}`, not a source coordinate")]
    ForeignVariable { coordinate: String, variable: String },
    #[error("coordinate map must supply {expected} components, got {found}")]
    ComponentCount { expected: usize, found: usize },
}

/// Shape of the configuration bundle: base dimension `m`, fiber dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleSpec {
    base_dim: usize,
    fiber_dim: usize,
    cap: usize,
}

impl BundleSpec {
    pub fn new(base_dim: usize, fiber_dim: usize) -> Result<Self, ChartError> {
        Self::with_cap(base_dim, fiber_dim, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(base_dim: usize, fiber_dim: usize, cap: usize) -> Result<Self, ChartError> {
        if base_dim == 0 || fiber_dim == 0 {
            return Err(ChartError::ZeroDimension {
                m: base_dim,
                n: fiber_dim,
            });
        }
        if base_dim > cap || fiber_dim > cap {
            return Err(ChartError::CapExceeded {
                m: base_dim,
                n: fiber_dim,
                cap,
            });
        }
        Ok(BundleSpec {
            base_dim,
            fiber_dim,
            cap,
        })
    }

    /// Base dimension `m = dim M`.
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Fiber dimension `N = dim E - dim M`.
    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }
}

/// The six spaces the engine works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpaceKind {
    /// Total space of the bundle.
    E,
    /// First-order jet bundle.
    J1E,
    /// Generalized multimomentum bundle.
    J1EStar,
    /// Reduced multimomentum bundle.
    Pi,
    /// Extended multimomentum bundle.
    MPi,
    /// Restricted multimomentum bundle.
    J1PiStar,
}

impl SpaceKind {
    pub fn label(self) -> &'static str {
        match self {
            SpaceKind::E => "E",
            SpaceKind::J1E => "J1E",
            SpaceKind::J1EStar => "J1E*",
            SpaceKind::Pi => "Pi",
            SpaceKind::MPi => "Mpi",
            SpaceKind::J1PiStar => "J1pi*",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Ordered list of coordinate names for one space. Cheap to clone and share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    kind: SpaceKind,
    coords: Arc<[String]>,
}

impl Chart {
    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord(&self, index: usize) -> &str {
        &self.coords[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Coordinate names as a parser vocabulary.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.coords.iter().cloned().collect()
    }
}

pub fn coord_x(i: usize) -> String {
    format!("x{i}")
}

pub fn coord_y(a: usize) -> String {
    format!("y{a}")
}

pub fn coord_v(a: usize, mu: usize) -> String {
    format!("v{a}_{mu}")
}

pub fn coord_p(a: usize, mu: usize) -> String {
    format!("p{a}_{mu}")
}

/// `P{mu}_{nu}`: the extra momenta of the generalized bundle.
pub fn coord_cap_p(mu: usize, nu: usize) -> String {
    format!("P{mu}_{nu}")
}

pub const COORD_P0: &str = "p0";

/// Builds the natural chart of `kind` for the given bundle shape. The
/// coordinate ordering is deterministic and documented on [`Chart`].
pub fn make_chart(kind: SpaceKind, spec: &BundleSpec) -> Chart {
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let mut coords: Vec<String> = Vec::new();
    for i in 1..=m {
        coords.push(coord_x(i));
    }
    for a in 1..=n {
        coords.push(coord_y(a));
    }
    match kind {
        SpaceKind::E => {}
        SpaceKind::J1E => {
            for a in 1..=n {
                for mu in 1..=m {
                    coords.push(coord_v(a, mu));
                }
            }
        }
        SpaceKind::J1EStar => {
            for mu in 1..=m {
                for nu in 1..=m {
                    coords.push(coord_cap_p(mu, nu));
                }
            }
            for a in 1..=n {
                for mu in 1..=m {
                    coords.push(coord_p(a, mu));
                }
            }
        }
        SpaceKind::Pi | SpaceKind::J1PiStar => {
            for a in 1..=n {
                for mu in 1..=m {
                    coords.push(coord_p(a, mu));
                }
            }
        }
        SpaceKind::MPi => {
            coords.push(COORD_P0.to_string());
            for a in 1..=n {
                for mu in 1..=m {
                    coords.push(coord_p(a, mu));
                }
            }
        }
    }
    Chart {
        kind,
        coords: coords.into(),
    }
}

/// A smooth map between charts, given by one target-coordinate expression
/// per target coordinate, in source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordMap {
    source: Chart,
    target: Chart,
    components: Vec<Expr>,
}

impl CoordMap {
    pub fn new(source: Chart, target: Chart, components: Vec<Expr>) -> Result<Self, ChartError> {
        if components.len() != target.dim() {
            return Err(ChartError::ComponentCount {
                expected: target.dim(),
                found: components.len(),
            });
        }
        for (coord, component) in target.coords().iter().zip(&components) {
            for var in component.free_vars() {
                if !source.contains(&var) {
                    return Err(ChartError::ForeignVariable {
                        coordinate: coord.clone(),
                        variable: var,
                    });
                }
            }
        }
        Ok(CoordMap {
            source,
            target,
            components,
        })
    }

    pub fn identity(chart: Chart) -> Self {
        let components = chart.coords().iter().map(Expr::var).collect();
        CoordMap {
            source: chart.clone(),
            target: chart,
            components,
        }
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn components(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.target
            .coords()
            .iter()
            .map(|c| c.as_str())
            .zip(self.components.iter())
    }

    /// Component expression for one target coordinate.
    pub fn component(&self, target_coord: &str) -> Option<&Expr> {
        self.target
            .index_of(target_coord)
            .map(|i| &self.components[i])
    }

    /// The components as a substitution map (target name -> expression),
    /// ready for pullback of coefficient functions.
    pub fn substitution(&self) -> BTreeMap<String, Expr> {
        self.target
            .coords()
            .iter()
            .cloned()
            .zip(self.components.iter().cloned())
            .collect()
    }

    /// Evaluates the map at a point of the source chart.
    pub fn apply(&self, at: &crate::expr::Assignment) -> Result<crate::expr::Assignment, crate::expr::EvalError> {
        let mut out = crate::expr::Assignment::new();
        for (coord, component) in self.components() {
            out.insert(coord.to_string(), component.evaluate(at)?);
        }
        Ok(out)
    }
}

/// Composition `f ∘ g` (apply `g` first); requires `target(g) = source(f)`.
pub fn compose(f: &CoordMap, g: &CoordMap) -> Result<CoordMap, ChartError> {
    if f.source != g.target {
        return Err(ChartError::ChartMismatch {
            expected: format!("{} (dim {})", f.source.kind(), f.source.dim()),
            found: format!("{} (dim {})", g.target.kind(), g.target.dim()),
        });
    }
    let subst = g.substitution();
    let components = f
        .components
        .iter()
        .map(|component| component.substitute(&subst))
        .collect();
    CoordMap::new(g.source.clone(), f.target.clone(), components)
}

/// The Lagrangian-independent canonical maps between the momentum spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalMapKind {
    /// Quotient projection `Mpi -> J1pi*`: drops `p0`.
    Mu,
    /// Restriction `J1E* -> Pi`: drops the `P{mu}_{nu}` block.
    Delta,
    /// Canonical contraction `J1E* -> Mpi`: `p0 = sum_mu P{mu}_{mu}`.
    Iota,
    /// The contraction restricted onto its image; identical coordinate rule
    /// to [`CanonicalMapKind::Iota`], kept as a distinct kind.
    Iota0,
    /// Canonical diffeomorphism `J1pi* -> Pi` (identity in coordinates).
    Psi,
    /// Its inverse `Pi -> J1pi*`.
    PsiInv,
}

/// Builds the canonical map of the requested kind in coordinates.
pub fn canonical_map(kind: CanonicalMapKind, spec: &BundleSpec) -> CoordMap {
    let build = |source: SpaceKind, target: SpaceKind, p0: Option<Expr>| -> CoordMap {
        let source = make_chart(source, spec);
        let target = make_chart(target, spec);
        let components = target
            .coords()
            .iter()
            .map(|coord| match (coord.as_str(), &p0) {
                (COORD_P0, Some(expr)) => expr.clone(),
                _ => Expr::var(coord),
            })
            .collect();
        CoordMap::new(source, target, components).expect("canonical map components are valid")
    };
    match kind {
        CanonicalMapKind::Mu => build(SpaceKind::MPi, SpaceKind::J1PiStar, None),
        CanonicalMapKind::Delta => build(SpaceKind::J1EStar, SpaceKind::Pi, None),
        CanonicalMapKind::Iota | CanonicalMapKind::Iota0 => {
            let trace = Expr::Add(
                (1..=spec.base_dim())
                    .map(|mu| Expr::var(coord_cap_p(mu, mu)))
                    .collect(),
            )
            .normalize();
            build(SpaceKind::J1EStar, SpaceKind::MPi, Some(trace))
        }
        CanonicalMapKind::Psi => build(SpaceKind::J1PiStar, SpaceKind::Pi, None),
        CanonicalMapKind::PsiInv => build(SpaceKind::Pi, SpaceKind::J1PiStar, None),
    }
}

/// One dimension relation with its evaluated sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionRelation {
    pub name: String,
    pub lhs: usize,
    pub rhs: usize,
    pub pass: bool,
}

/// Dimensions of all six spaces plus the structural dimension relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionTable {
    pub dims: Vec<(SpaceKind, usize)>,
    pub relations: Vec<DimensionRelation>,
}

impl DimensionTable {
    pub fn all_pass(&self) -> bool {
        self.relations.iter().all(|r| r.pass)
    }

    pub fn dim(&self, kind: SpaceKind) -> usize {
        self.dims
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, d)| *d)
            .expect("all six spaces are tabulated")
    }
}

/// Computes every chart dimension and checks the relations
/// `dim Mpi = dim J1E + 1`, `dim J1E* = dim J1E + m²`,
/// `dim Pi = dim J1pi* = dim J1E`, plus the fiber-wise count
/// `dim (Mpi fiber over E) = dim (Pi fiber over E) + 1`.
pub fn dimension_table(spec: &BundleSpec) -> DimensionTable {
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let spaces = [
        SpaceKind::E,
        SpaceKind::J1E,
        SpaceKind::J1EStar,
        SpaceKind::Pi,
        SpaceKind::MPi,
        SpaceKind::J1PiStar,
    ];
    let dims: Vec<(SpaceKind, usize)> = spaces
        .iter()
        .map(|&kind| (kind, make_chart(kind, spec).dim()))
        .collect();
    let dim_of = |kind: SpaceKind| dims.iter().find(|(k, _)| *k == kind).unwrap().1;

    let j1e = dim_of(SpaceKind::J1E);
    let mut relations = Vec::new();
    let mut push = |name: &str, lhs: usize, rhs: usize| {
        relations.push(DimensionRelation {
            name: name.to_string(),
            lhs,
            rhs,
            pass: lhs == rhs,
        });
    };
    push("dim Mpi = dim J1E + 1", dim_of(SpaceKind::MPi), j1e + 1);
    push(
        "dim J1E* = dim J1E + m^2",
        dim_of(SpaceKind::J1EStar),
        j1e + m * m,
    );
    push("dim Pi = dim J1E", dim_of(SpaceKind::Pi), j1e);
    push("dim J1pi* = dim J1E", dim_of(SpaceKind::J1PiStar), j1e);
    push(
        "fiber over E: dim Mpi = dim Pi + 1",
        1 + n * m,
        n * m + 1,
    );
    DimensionTable { dims, relations }
}
