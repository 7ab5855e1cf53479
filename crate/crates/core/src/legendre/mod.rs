//! The five Legendre maps of a Lagrangian system, the structural identities
//! relating them, and numeric inversion of the reduced map.
//!
//! In the natural charts every map passes `x^mu` and `y^A` through and
//! assigns momenta from the fiber derivative `∂£/∂v^A_mu`:
//!
//! | kind             | target | extra components                                |
//! |------------------|--------|-------------------------------------------------|
//! | `Reduced`        | `Pi`   | —                                               |
//! | `Restricted`     | `J1pi*`| —                                               |
//! | `ExtendedFirst`  | `Mpi`  | `p0 = -v^A_mu ∂£/∂v^A_mu`                       |
//! | `ExtendedSecond` | `Mpi`  | `p0 = £ - v^A_mu ∂£/∂v^A_mu`                    |
//! | `Generalized`    | `J1E*` | `P{mu}_{nu} = -v^A_nu ∂£/∂v^A_mu`               |
//!
//! Identity checks run symbolic-first with a numeric fallback, and every
//! verdict records which path decided it.

use thiserror::Error;

use crate::chart::{
    canonical_map, compose, coord_p, coord_v, coord_x, coord_y, make_chart, BundleSpec,
    CanonicalMapKind, ChartError, CoordMap, SpaceKind, COORD_P0,
};
use crate::expr::{equivalence_check, Assignment, Equivalence, EvalError, Expr};
use crate::forms::{
    canonical_form, dm1x, forms_equivalent, pullback, CanonicalFormKind, DiffForm, FormError,
};
use crate::lagrangian::{poincare_cartan, LagrangianSystem, PoincareCartanKind};
use crate::rng::{SplitMix64, PRNG_ALGORITHM};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LegendreError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("not a section over E: {0}")]
    NotASection(String),
    #[error("domain error at sampled point {point:?}: {source}")]
    DomainAt { point: Assignment, source: EvalError },
}

/// Errors from the Newton inversion of the reduced Legendre map.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum InvertError {
    #[error("singular Hessian at iterate {point:?}")]
    SingularHessian { point: Assignment },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Pivot threshold factor for singular-Jacobian detection in Newton steps.
const NEWTON_PIVOT_TOL: f64 = 1e-10;
const DEFAULT_NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegendreKind {
    Restricted,
    ExtendedFirst,
    ExtendedSecond,
    Generalized,
    Reduced,
}

impl LegendreKind {
    pub fn target_space(self) -> SpaceKind {
        match self {
            LegendreKind::Restricted => SpaceKind::J1PiStar,
            LegendreKind::ExtendedFirst | LegendreKind::ExtendedSecond => SpaceKind::MPi,
            LegendreKind::Generalized => SpaceKind::J1EStar,
            LegendreKind::Reduced => SpaceKind::Pi,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LegendreKind::Restricted => "restricted",
            LegendreKind::ExtendedFirst => "extended-first",
            LegendreKind::ExtendedSecond => "extended-second",
            LegendreKind::Generalized => "generalized",
            LegendreKind::Reduced => "reduced",
        }
    }

    pub const ALL: [LegendreKind; 5] = [
        LegendreKind::Reduced,
        LegendreKind::Restricted,
        LegendreKind::ExtendedFirst,
        LegendreKind::ExtendedSecond,
        LegendreKind::Generalized,
    ];
}

/// Builds the Legendre map of the requested kind as a coordinate map from
/// the `J1E` chart to the target momentum chart.
pub fn legendre_map(system: &LagrangianSystem, kind: LegendreKind) -> CoordMap {
    let spec = system.spec();
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let source = system.chart().clone();
    let target = make_chart(kind.target_space(), spec);

    // -v^A_mu ∂£/∂v^A_mu, shared by both extended maps.
    let negative_action = || {
        let mut acc = Expr::zero();
        for a in 1..=n {
            for mu in 1..=m {
                acc = acc - Expr::var(coord_v(a, mu)) * system.momentum(a, mu);
            }
        }
        acc
    };

    let components = target
        .coords()
        .iter()
        .map(|coord| {
            let name = coord.as_str();
            if name == COORD_P0 {
                return match kind {
                    LegendreKind::ExtendedFirst => negative_action(),
                    LegendreKind::ExtendedSecond => system.lagrangian().clone() + negative_action(),
                    _ => unreachable!("p0 only occurs on Mpi"),
                };
            }
            for a in 1..=n {
                for mu in 1..=m {
                    if name == coord_p(a, mu) {
                        return system.momentum(a, mu);
                    }
                }
            }
            for mu in 1..=m {
                for nu in 1..=m {
                    if name == crate::chart::coord_cap_p(mu, nu) {
                        let mut acc = Expr::zero();
                        for a in 1..=n {
                            acc = acc - Expr::var(coord_v(a, nu)) * system.momentum(a, mu);
                        }
                        return acc;
                    }
                }
            }
            // x^mu and y^A pass through.
            Expr::var(name)
        })
        .collect();
    CoordMap::new(source, target, components).expect("legendre components live on J1E")
}

/// One named identity with its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub verdict: Equivalence,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }

    /// "symbolic" when the verdict came from normal forms, "numeric" when
    /// it came from sampling.
    pub fn decided_by(&self) -> &'static str {
        if self.verdict.decided_numerically() {
            "numeric"
        } else {
            "symbolic"
        }
    }
}

/// A batch of identity checks together with the sampling parameters that
/// produced the numeric verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub prng_algorithm: &'static str,
}

impl IdentityReport {
    fn new(checks: Vec<IdentityCheck>, samples: usize, tol: f64, seed: u64) -> Self {
        IdentityReport {
            checks,
            samples,
            tol,
            seed,
            prng_algorithm: PRNG_ALGORITHM,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(IdentityCheck::holds)
    }

    pub fn all_proved(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_proved())
    }

    /// Largest residual among numeric verdicts, if any.
    pub fn max_residual(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter_map(|c| c.verdict.max_residual())
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

/// Component-wise equivalence of two coordinate maps with the same source
/// and target charts.
fn maps_equivalent(
    f: &CoordMap,
    g: &CoordMap,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Equivalence, EvalError> {
    debug_assert_eq!(f.source(), g.source());
    debug_assert_eq!(f.target(), g.target());
    let mut max_residual = 0.0f64;
    let mut any_numeric = false;
    for (offset, ((_, lhs), (_, rhs))) in f.components().zip(g.components()).enumerate() {
        match equivalence_check(lhs, rhs, samples, tol, seed.wrapping_add(offset as u64))? {
            Equivalence::ProvedEqual => {}
            Equivalence::NumericallyEqual { max_residual: r } => {
                any_numeric = true;
                max_residual = max_residual.max(r);
            }
            not_equal => return Ok(not_equal),
        }
    }
    Ok(if any_numeric {
        Equivalence::NumericallyEqual { max_residual }
    } else {
        Equivalence::ProvedEqual
    })
}

/// Verifies the commuting relations among the Legendre maps and the
/// canonical projections:
///
/// * `restricted = mu ∘ extended_first = mu ∘ extended_second`
/// * `extended_first = iota0 ∘ generalized` (trace consistency of `p0`)
/// * `reduced = delta ∘ generalized`
/// * `reduced = psi ∘ restricted`
pub fn verify_diagram(
    system: &LagrangianSystem,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport, LegendreError> {
    let spec = system.spec();
    let restricted = legendre_map(system, LegendreKind::Restricted);
    let extended_first = legendre_map(system, LegendreKind::ExtendedFirst);
    let extended_second = legendre_map(system, LegendreKind::ExtendedSecond);
    let generalized = legendre_map(system, LegendreKind::Generalized);
    let reduced = legendre_map(system, LegendreKind::Reduced);

    let mu = canonical_map(CanonicalMapKind::Mu, spec);
    let iota0 = canonical_map(CanonicalMapKind::Iota0, spec);
    let delta = canonical_map(CanonicalMapKind::Delta, spec);
    let psi = canonical_map(CanonicalMapKind::Psi, spec);

    let pairs: [(&str, &CoordMap, CoordMap); 5] = [
        (
            "restricted = mu . extended_first",
            &restricted,
            compose(&mu, &extended_first)?,
        ),
        (
            "restricted = mu . extended_second",
            &restricted,
            compose(&mu, &extended_second)?,
        ),
        (
            "extended_first = iota0 . generalized",
            &extended_first,
            compose(&iota0, &generalized)?,
        ),
        (
            "reduced = delta . generalized",
            &reduced,
            compose(&delta, &generalized)?,
        ),
        (
            "reduced = psi . restricted",
            &reduced,
            compose(&psi, &restricted)?,
        ),
    ];

    let mut checks = Vec::with_capacity(pairs.len());
    for (offset, (name, lhs, rhs)) in pairs.iter().enumerate() {
        let verdict = maps_equivalent(lhs, rhs, samples, tol, seed.wrapping_add(offset as u64))?;
        checks.push(IdentityCheck {
            name: name.to_string(),
            verdict,
        });
    }
    Ok(IdentityReport::new(checks, samples, tol, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Term-by-term comparison of the pulled-back forms (numeric fallback
    /// per coefficient).
    Symbolic,
    /// Evaluates both sides at random points on random vector tuples,
    /// pushing vectors forward through the numeric tangent map.
    Numeric,
}

/// Verifies the six pullback identities tying the canonical multimomentum
/// forms to the Poincaré–Cartan forms:
///
/// * `extended_second* Theta = Theta_L`, `extended_second* Omega = Omega_L`
/// * `extended_first* Theta = theta_L`, `extended_first* Omega = -d theta_L`
/// * `generalized* ThetaHat = theta_L`, `generalized* OmegaHat = -d theta_L`
pub fn verify_pullbacks(
    system: &LagrangianSystem,
    mode: VerifyMode,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport, LegendreError> {
    let spec = system.spec();
    let theta = canonical_form(SpaceKind::MPi, CanonicalFormKind::Theta, spec)?;
    let omega = canonical_form(SpaceKind::MPi, CanonicalFormKind::Omega, spec)?;
    let theta_hat = canonical_form(SpaceKind::J1EStar, CanonicalFormKind::Theta, spec)?;
    let omega_hat = canonical_form(SpaceKind::J1EStar, CanonicalFormKind::Omega, spec)?;

    let theta_l = poincare_cartan(system, PoincareCartanKind::ThetaL);
    let theta_lower = poincare_cartan(system, PoincareCartanKind::ThetaLower);
    let minus_d_theta_lower = theta_lower.d()?.neg();

    let extended_second = legendre_map(system, LegendreKind::ExtendedSecond);
    let extended_first = legendre_map(system, LegendreKind::ExtendedFirst);
    let generalized = legendre_map(system, LegendreKind::Generalized);

    let omega_l = poincare_cartan(system, PoincareCartanKind::OmegaL);
    let identities: [(&str, &CoordMap, &DiffForm, &DiffForm); 6] = [
        ("extended_second* Theta = Theta_L", &extended_second, &theta, &theta_l),
        ("extended_second* Omega = Omega_L", &extended_second, &omega, &omega_l),
        ("extended_first* Theta = theta_L", &extended_first, &theta, &theta_lower),
        (
            "extended_first* Omega = -d theta_L",
            &extended_first,
            &omega,
            &minus_d_theta_lower,
        ),
        (
            "generalized* ThetaHat = theta_L",
            &generalized,
            &theta_hat,
            &theta_lower,
        ),
        (
            "generalized* OmegaHat = -d theta_L",
            &generalized,
            &omega_hat,
            &minus_d_theta_lower,
        ),
    ];

    let mut checks = Vec::with_capacity(identities.len());
    for (offset, (name, map, target_form, source_form)) in identities.iter().enumerate() {
        let identity_seed = seed.wrapping_add(offset as u64);
        let verdict = match mode {
            VerifyMode::Symbolic => {
                let pulled = pullback(map, target_form)?;
                forms_equivalent(&pulled, source_form, samples, tol, identity_seed)?
            }
            VerifyMode::Numeric => numeric_pullback_identity(
                map,
                target_form,
                source_form,
                samples,
                tol,
                identity_seed,
            )?,
        };
        checks.push(IdentityCheck {
            name: name.to_string(),
            verdict,
        });
    }
    Ok(IdentityReport::new(checks, samples, tol, seed))
}

/// Evaluates `map* target_form` against `source_form` pointwise, using the
/// intrinsic definition of the pullback: vectors are pushed forward through
/// the evaluated Jacobian of the map. Independent of the symbolic pullback.
fn numeric_pullback_identity(
    map: &CoordMap,
    target_form: &DiffForm,
    source_form: &DiffForm,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Equivalence, LegendreError> {
    let source = map.source();
    let degree = target_form.degree();
    let source_dim = source.dim();

    // Symbolic Jacobian entries, evaluated per point below.
    let jacobian: Vec<Vec<Expr>> = map
        .target()
        .coords()
        .iter()
        .map(|coord| {
            let component = map.component(coord).expect("component per target coord");
            (0..source_dim)
                .map(|s| component.differentiate(source.coord(s)))
                .collect()
        })
        .collect();

    let mut rng = SplitMix64::new(seed);
    let range = crate::numeric::DEFAULT_RANGE;
    let mut max_residual = 0.0f64;
    for _ in 0..samples.max(1) {
        let mut last_err: Option<EvalError> = None;
        let mut decided = false;
        for _ in 0..8 {
            let point: Assignment = source
                .coords()
                .iter()
                .map(|c| (c.clone(), rng.next_in_range(range.0, range.1)))
                .collect();
            let vectors: Vec<Vec<f64>> = (0..degree)
                .map(|_| {
                    (0..source_dim)
                        .map(|_| rng.next_in_range(range.0, range.1))
                        .collect()
                })
                .collect();
            match evaluate_pullback_pair(
                map,
                &jacobian,
                target_form,
                source_form,
                &point,
                &vectors,
            ) {
                Ok((lhs, rhs)) if lhs.is_finite() && rhs.is_finite() => {
                    let residual = (lhs - rhs).abs();
                    if residual > tol * (1.0 + lhs.abs().max(rhs.abs())) {
                        return Ok(Equivalence::NumericallyUnequal {
                            witness: point,
                            residual,
                        });
                    }
                    max_residual = max_residual.max(residual);
                    decided = true;
                    break;
                }
                Ok(_) => {
                    last_err = Some(EvalError::Domain("non-finite evaluation".into()));
                }
                Err(FormError::Eval(e)) => last_err = Some(e),
                Err(other) => return Err(other.into()),
            }
        }
        if !decided {
            let source = last_err
                .unwrap_or_else(|| EvalError::Domain("sampling retry budget exhausted".into()));
            return Err(LegendreError::DomainAt {
                point: Assignment::new(),
                source,
            });
        }
    }
    Ok(Equivalence::NumericallyEqual { max_residual })
}

fn evaluate_pullback_pair(
    map: &CoordMap,
    jacobian: &[Vec<Expr>],
    target_form: &DiffForm,
    source_form: &DiffForm,
    point: &Assignment,
    vectors: &[Vec<f64>],
) -> Result<(f64, f64), FormError> {
    let image = map.apply(point)?;
    let mut jac = vec![vec![0.0; jacobian[0].len()]; jacobian.len()];
    for (r, row) in jacobian.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            jac[r][c] = entry.evaluate(point)?;
        }
    }
    let pushed: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            jac.iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let lhs = target_form.evaluate(&image, &pushed)?;
    let rhs = source_form.evaluate(point, vectors)?;
    Ok((lhs, rhs))
}

/// Reads a section of `Mpi` (or, composed through `iota0`, of `J1E*`) as
/// the m-form on `E` its components describe.
fn section_as_m_form(spec: &BundleSpec, section: &CoordMap) -> Result<DiffForm, LegendreError> {
    let e_chart = make_chart(SpaceKind::E, spec);
    let m = spec.base_dim();
    let p0 = section
        .component(COORD_P0)
        .expect("section target is Mpi")
        .clone();
    let mut form = DiffForm::volume(e_chart.clone(), m).scale(&p0);
    for a in 1..=spec.fiber_dim() {
        let dy = DiffForm::basis_one_form(
            e_chart.clone(),
            e_chart.index_of(&coord_y(a)).expect("fiber coordinate"),
        );
        for mu in 1..=m {
            let coeff = section
                .component(&coord_p(a, mu))
                .expect("momentum component")
                .clone();
            form = form.add(&dy.wedge(&dm1x(&e_chart, m, mu))?.scale(&coeff))?;
        }
    }
    Ok(form)
}

fn check_section(spec: &BundleSpec, space: SpaceKind, section: &CoordMap) -> Result<(), LegendreError> {
    if section.source().kind() != SpaceKind::E {
        return Err(LegendreError::NotASection(format!(
            "source chart is {}, expected E",
            section.source().kind()
        )));
    }
    if section.target().kind() != space {
        return Err(LegendreError::NotASection(format!(
            "target chart is {}, expected {}",
            section.target().kind(),
            space
        )));
    }
    for mu in 1..=spec.base_dim() {
        let name = coord_x(mu);
        if section.component(&name) != Some(&Expr::var(&name)) {
            return Err(LegendreError::NotASection(format!(
                "component {name} is not the identity"
            )));
        }
    }
    for a in 1..=spec.fiber_dim() {
        let name = coord_y(a);
        if section.component(&name) != Some(&Expr::var(&name)) {
            return Err(LegendreError::NotASection(format!(
                "component {name} is not the identity"
            )));
        }
    }
    Ok(())
}

/// Verifies the tautological characterization of the canonical m-form on
/// the section: pulling `Theta` back along a section of `Mpi` returns the
/// section read as an m-form on `E`; for `J1E*` the comparison goes through
/// the contraction `iota0` first.
pub fn verify_tautology(
    spec: &BundleSpec,
    space: SpaceKind,
    section: &CoordMap,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport, LegendreError> {
    check_section(spec, space, section)?;
    let (name, lhs, rhs) = match space {
        SpaceKind::MPi => {
            let theta = canonical_form(SpaceKind::MPi, CanonicalFormKind::Theta, spec)?;
            (
                "section* Theta = section as m-form",
                pullback(section, &theta)?,
                section_as_m_form(spec, section)?,
            )
        }
        SpaceKind::J1EStar => {
            let theta_hat = canonical_form(SpaceKind::J1EStar, CanonicalFormKind::Theta, spec)?;
            let through_iota = compose(&canonical_map(CanonicalMapKind::Iota0, spec), section)?;
            (
                "section* ThetaHat = (iota0 . section) as m-form",
                pullback(section, &theta_hat)?,
                section_as_m_form(spec, &through_iota)?,
            )
        }
        other => return Err(LegendreError::NotASection(format!("unsupported space {other}"))),
    };
    let verdict = forms_equivalent(&lhs, &rhs, samples, tol, seed)?;
    Ok(IdentityReport::new(
        vec![IdentityCheck {
            name: name.to_string(),
            verdict,
        }],
        samples,
        tol,
        seed,
    ))
}

/// Solves `∂£/∂v(x, y, v) = p` for the velocities by plain Newton iteration
/// with the Hessian as Jacobian. `target` supplies the `Pi`-chart values
/// (missing coordinates default to zero), `guess` the starting velocities.
/// Returns the full `J1E` assignment `(x, y, v*)`.
pub fn invert_reduced(
    system: &LagrangianSystem,
    target: &Assignment,
    guess: &Assignment,
    max_iter: usize,
    tol: f64,
) -> Result<Assignment, InvertError> {
    invert_reduced_damped(system, target, guess, max_iter, tol, 1.0)
}

/// [`invert_reduced`] with a step damping factor in `(0, 1]`.
pub fn invert_reduced_damped(
    system: &LagrangianSystem,
    target: &Assignment,
    guess: &Assignment,
    max_iter: usize,
    tol: f64,
    damping: f64,
) -> Result<Assignment, InvertError> {
    let spec = system.spec();
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let nm = n * m;

    let mut point = Assignment::new();
    for mu in 1..=m {
        let name = coord_x(mu);
        point.insert(name.clone(), target.get(&name).copied().unwrap_or(0.0));
    }
    for a in 1..=n {
        let name = coord_y(a);
        point.insert(name.clone(), target.get(&name).copied().unwrap_or(0.0));
    }
    let mut velocities = vec![0.0; nm];
    for (i, v) in velocities.iter_mut().enumerate() {
        let (a, mu) = system.velocity_pair(i);
        *v = guess.get(&coord_v(a, mu)).copied().unwrap_or(0.0);
    }
    let targets: Vec<f64> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            target.get(&coord_p(a, mu)).copied().unwrap_or(0.0)
        })
        .collect();

    let momenta: Vec<Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            system.momentum(a, mu)
        })
        .collect();
    let hessian = crate::lagrangian::hessian(system);

    let set_velocities = |point: &mut Assignment, velocities: &[f64]| {
        for (i, v) in velocities.iter().enumerate() {
            let (a, mu) = system.velocity_pair(i);
            point.insert(coord_v(a, mu), *v);
        }
    };

    set_velocities(&mut point, &velocities);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let values: Result<Vec<f64>, EvalError> =
            momenta.iter().map(|p| p.evaluate(&point)).collect();
        let residuals: Vec<f64> = values?
            .iter()
            .zip(&targets)
            .map(|(got, want)| got - want)
            .collect();
        residual = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if residual <= tol {
            return Ok(point);
        }

        let mut jac = vec![vec![0.0; nm]; nm];
        for (r, row) in hessian.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                jac[r][c] = entry.evaluate(&point)?;
            }
        }
        let step = solve_linear(&jac, &residuals)
            .ok_or_else(|| InvertError::SingularHessian {
                point: point.clone(),
            })?;
        for (v, delta) in velocities.iter_mut().zip(&step) {
            *v -= damping * delta;
        }
        set_velocities(&mut point, &velocities);
    }
    // One final residual check after the last step.
    let values: Result<Vec<f64>, EvalError> = momenta.iter().map(|p| p.evaluate(&point)).collect();
    let final_residual = values?
        .iter()
        .zip(&targets)
        .map(|(got, want)| (got - want).abs())
        .fold(0.0f64, f64::max);
    if final_residual <= tol {
        Ok(point)
    } else {
        Err(InvertError::NoConvergence {
            iterations: max_iter,
            residual: final_residual.min(residual),
        })
    }
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below the singular-detection threshold.
fn solve_linear(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = matrix.len();
    let max_abs = matrix
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if max_abs == 0.0 {
        return None;
    }
    let threshold = NEWTON_PIVOT_TOL * max_abs;
    let mut aug: Vec<Vec<f64>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut r = row.clone();
            r.push(b);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
        if aug[pivot][col].abs() <= threshold {
            return None;
        }
        aug.swap(col, pivot);
        for row in col + 1..n {
            let factor = aug[row][col] / aug[col][col];
            for k in col..=n {
                aug[row][k] -= factor * aug[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = aug[col][n];
        for k in col + 1..n {
            acc -= aug[col][k] * x[k];
        }
        x[col] = acc / aug[col][col];
    }
    Some(x)
}

/// Hamiltonian value `H = p^mu_A v^A_mu - £` at the velocities recovered by
/// [`invert_reduced`] from the given `Pi`-chart target.
pub fn hamiltonian_value(
    system: &LagrangianSystem,
    target: &Assignment,
    guess: &Assignment,
    tol: f64,
) -> Result<f64, InvertError> {
    let point = invert_reduced(system, target, guess, DEFAULT_NEWTON_MAX_ITER, tol)?;
    let spec = system.spec();
    let mut action = 0.0;
    for a in 1..=spec.fiber_dim() {
        for mu in 1..=spec.base_dim() {
            let p = target.get(&coord_p(a, mu)).copied().unwrap_or(0.0);
            action += p * point[&coord_v(a, mu)];
        }
    }
    Ok(action - system.lagrangian().evaluate(&point)?)
}

/// Closed-form Hamiltonian on the `Pi` chart, available exactly when the
/// Hessian is a constant invertible rational matrix (momenta affine in the
/// velocities). Returns `None` otherwise.
pub fn hamiltonian_symbolic(system: &LagrangianSystem) -> Option<Expr> {
    use num::BigRational;

    let spec = system.spec();
    let nm = spec.base_dim() * spec.fiber_dim();
    let hessian = crate::lagrangian::hessian(system);
    let mut rational: Vec<Vec<BigRational>> = Vec::with_capacity(nm);
    for row in &hessian {
        let mut out = Vec::with_capacity(nm);
        for entry in row {
            out.push(entry.as_rational()?.clone());
        }
        rational.push(out);
    }
    let inverse = invert_rational(rational)?;

    // Offsets b = ∂£/∂v at v = 0; constant Hessian makes ∂£/∂v = H v + b.
    let zero_velocities: std::collections::BTreeMap<String, Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            (coord_v(a, mu), Expr::zero())
        })
        .collect();
    let offsets: Vec<Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            system.momentum(a, mu).substitute(&zero_velocities)
        })
        .collect();

    // v = H^{-1} (p - b), as expressions on the Pi chart.
    let momenta_vars: Vec<Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            Expr::var(coord_p(a, mu))
        })
        .collect();
    let solved: Vec<Expr> = (0..nm)
        .map(|i| {
            let mut acc = Expr::zero();
            for j in 0..nm {
                let coeff = Expr::Rational(inverse[i][j].clone());
                acc = acc + coeff * (momenta_vars[j].clone() - offsets[j].clone());
            }
            acc
        })
        .collect();

    let substitution: std::collections::BTreeMap<String, Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            (coord_v(a, mu), solved[i].clone())
        })
        .collect();
    let mut hamiltonian = -system.lagrangian().substitute(&substitution);
    for i in 0..nm {
        hamiltonian = hamiltonian + momenta_vars[i].clone() * solved[i].clone();
    }
    Some(hamiltonian)
}

/// Exact inverse of a rational matrix by Gauss–Jordan elimination; `None`
/// when singular.
fn invert_rational(mut mat: Vec<Vec<num::BigRational>>) -> Option<Vec<Vec<num::BigRational>>> {
    use num::{BigRational, One, Zero};
    let n = mat.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !mat[r][col].is_zero())?;
        mat.swap(col, pivot);
        inv.swap(col, pivot);
        let p = mat[col][col].clone();
        for k in 0..n {
            mat[col][k] /= p.clone();
            inv[col][k] /= p.clone();
        }
        for row in 0..n {
            if row == col || mat[row][col].is_zero() {
                continue;
            }
            let factor = mat[row][col].clone();
            for k in 0..n {
                let m = mat[col][k].clone();
                let i = inv[col][k].clone();
                mat[row][k] -= factor.clone() * m;
                inv[row][k] -= factor.clone() * i;
            }
        }
    }
    Some(inv)
}

/// Round-trip helper used by tests and the batch driver: applies the
/// reduced Legendre map at `point`, inverts it back, and returns the
/// infinity-norm error on the velocities.
pub fn round_trip_error(
    system: &LagrangianSystem,
    point: &Assignment,
    max_iter: usize,
    tol: f64,
) -> Result<f64, InvertError> {
    let reduced = legendre_map(system, LegendreKind::Reduced);
    let image = reduced.apply(point)?;
    let recovered = invert_reduced(system, &image, point, max_iter, tol)?;
    let spec = system.spec();
    let mut err = 0.0f64;
    for a in 1..=spec.fiber_dim() {
        for mu in 1..=spec.base_dim() {
            let name = coord_v(a, mu);
            err = err.max((point[&name] - recovered[&name]).abs());
        }
    }
    Ok(err)
}
