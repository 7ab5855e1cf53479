//! Lagrangian systems: Poincaré–Cartan forms, partial Hessian, tangent-map
//! block matrix and the regularity classification.
//!
//! The volume form is fixed to `d^m x` with positive orientation, so a
//! system is described entirely by its Lagrangian function on the `J1E`
//! chart. Velocity pairs `(A, mu)` are flattened to `(A-1)*m + (mu-1)`
//! everywhere a matrix index is needed.

use std::collections::HashMap;

use thiserror::Error;

use crate::chart::{
    coord_cap_p, coord_p, coord_v, coord_x, coord_y, make_chart, BundleSpec, Chart, ChartError,
    SpaceKind, COORD_P0,
};
use crate::expr::{Assignment, EvalError, Expr, ParseError};
use crate::forms::{dm1x, DiffForm, FormError};
use crate::numeric::{nondegeneracy_check, numeric_rank, sample_points, SampleConfig};
use crate::rng::PRNG_ALGORITHM;

/// Symbolic determinants are expanded only up to this matrix size; larger
/// Hessians fall back to sampled rank evidence.
const MAX_SYMBOLIC_DET_DIM: usize = 8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LagrangianError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("`{name}` is a momentum coordinate; the Lagrangian lives on the J1E chart")]
    StrayCoordinate { name: String },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("domain error at sampled point {point:?}: {source}")]
    DomainAt { point: Assignment, source: EvalError },
}

/// A bundle shape together with a Lagrangian function on the `J1E` chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSystem {
    spec: BundleSpec,
    chart: Chart,
    lagrangian: Expr,
    name: String,
}

impl LagrangianSystem {
    /// Builds a system from an already-parsed expression, validating that
    /// its free variables lie on the `J1E` chart.
    pub fn from_expr(
        spec: BundleSpec,
        lagrangian: Expr,
        name: impl Into<String>,
    ) -> Result<Self, LagrangianError> {
        let chart = make_chart(SpaceKind::J1E, &spec);
        for var in lagrangian.free_vars() {
            if !chart.contains(&var) {
                if is_momentum_name(&spec, &var) {
                    return Err(LagrangianError::StrayCoordinate { name: var });
                }
                return Err(LagrangianError::Parse(ParseError::UnknownIdentifier {
                    position: 0,
                    name: var,
                }));
            }
        }
        Ok(LagrangianSystem {
            spec,
            chart,
            lagrangian: lagrangian.normalize(),
            name: name.into(),
        })
    }

    pub fn spec(&self) -> &BundleSpec {
        &self.spec
    }

    /// The `J1E` chart the Lagrangian lives on.
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Momentum expression `∂£/∂v^A_mu`.
    pub fn momentum(&self, a: usize, mu: usize) -> Expr {
        self.lagrangian.differentiate(&coord_v(a, mu))
    }

    /// Flattened velocity index of the pair `(A, mu)`, both 1-based.
    pub fn velocity_index(&self, a: usize, mu: usize) -> usize {
        (a - 1) * self.spec.base_dim() + (mu - 1)
    }

    /// Inverse of [`Self::velocity_index`].
    pub fn velocity_pair(&self, index: usize) -> (usize, usize) {
        let m = self.spec.base_dim();
        (index / m + 1, index % m + 1)
    }
}

fn is_momentum_name(spec: &BundleSpec, name: &str) -> bool {
    if name == COORD_P0 {
        return true;
    }
    for a in 1..=spec.fiber_dim() {
        for mu in 1..=spec.base_dim() {
            if name == coord_p(a, mu) {
                return true;
            }
        }
    }
    for mu in 1..=spec.base_dim() {
        for nu in 1..=spec.base_dim() {
            if name == coord_cap_p(mu, nu) {
                return true;
            }
        }
    }
    false
}

/// Parses `source` over the `J1E` vocabulary of `spec`. Momentum names are
/// rejected with a dedicated error.
pub fn load_system(
    spec: BundleSpec,
    source: &str,
    name: impl Into<String>,
) -> Result<LagrangianSystem, LagrangianError> {
    let chart = make_chart(SpaceKind::J1E, &spec);
    match crate::expr::parse_expr(source, &chart.vocabulary()) {
        Ok(expr) => LagrangianSystem::from_expr(spec, expr, name),
        Err(ParseError::UnknownIdentifier { name, .. }) if is_momentum_name(&spec, &name) => {
            Err(LagrangianError::StrayCoordinate { name })
        }
        Err(other) => Err(LagrangianError::Parse(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareCartanKind {
    /// `Theta_L = ∂£/∂v^A_mu dy^A ∧ d^{m-1}x_mu - (∂£/∂v^A_mu v^A_mu - £) d^m x`
    ThetaL,
    /// `Omega_L = -d(Theta_L)`
    OmegaL,
    /// `theta_L = Theta_L - £ d^m x`
    ThetaLower,
}

/// Poincaré–Cartan forms of the system on its `J1E` chart.
pub fn poincare_cartan(system: &LagrangianSystem, which: PoincareCartanKind) -> DiffForm {
    let spec = system.spec();
    let chart = system.chart().clone();
    let m = spec.base_dim();
    let lagrangian = system.lagrangian();

    let build_theta = || -> DiffForm {
        let mut velocity_trace = Expr::zero();
        let mut theta = DiffForm::zero(chart.clone(), m).expect("m <= dim J1E");
        for a in 1..=spec.fiber_dim() {
            let dy = DiffForm::basis_one_form(
                chart.clone(),
                chart.index_of(&coord_y(a)).expect("fiber coordinate"),
            );
            for mu in 1..=m {
                let momentum = system.momentum(a, mu);
                velocity_trace =
                    velocity_trace + momentum.clone() * Expr::var(coord_v(a, mu));
                let term = dy
                    .wedge(&dm1x(&chart, m, mu))
                    .expect("degree m within chart dimension")
                    .scale(&momentum);
                theta = theta.add(&term).expect("same chart and degree");
            }
        }
        let energy = velocity_trace - lagrangian.clone();
        theta
            .add(&DiffForm::volume(chart.clone(), m).scale(&-energy))
            .expect("same chart and degree")
    };

    match which {
        PoincareCartanKind::ThetaL => build_theta(),
        PoincareCartanKind::OmegaL => build_theta()
            .d()
            .expect("degree m + 1 within chart dimension")
            .neg(),
        PoincareCartanKind::ThetaLower => {
            let scaled_volume = DiffForm::volume(chart.clone(), m).scale(lagrangian);
            build_theta()
                .add(&scaled_volume.neg())
                .expect("same chart and degree")
        }
    }
}

/// The expanded coordinate expression of `Omega_L`, assembled term family by
/// term family. Serves as an independent cross-check of `-d(Theta_L)`.
pub fn omega_l_expanded(system: &LagrangianSystem) -> DiffForm {
    let spec = system.spec();
    let chart = system.chart().clone();
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let lagrangian = system.lagrangian();
    let volume = DiffForm::volume(chart.clone(), m);
    let one_form = |name: &str| {
        DiffForm::basis_one_form(chart.clone(), chart.index_of(name).expect("chart coordinate"))
    };

    let mut omega = DiffForm::zero(chart.clone(), m + 1).expect("m + 1 <= dim J1E");
    for b in 1..=n {
        for a in 1..=n {
            for mu in 1..=m {
                let momentum = system.momentum(a, mu);
                let dy_a_dmx = one_form(&coord_y(a))
                    .wedge(&dm1x(&chart, m, mu))
                    .expect("within dimension");
                // -(∂²£/∂v^B_nu ∂v^A_mu) dv^B_nu ∧ dy^A ∧ d^{m-1}x_mu
                // +(∂²£/∂v^B_nu ∂v^A_mu) v^A_mu dv^B_nu ∧ d^m x
                for nu in 1..=m {
                    let hess = momentum.differentiate(&coord_v(b, nu));
                    if hess.is_zero() {
                        continue;
                    }
                    let dv = one_form(&coord_v(b, nu));
                    omega = omega
                        .add(&dv.wedge(&dy_a_dmx).expect("degree m + 1").scale(&-hess.clone()))
                        .unwrap();
                    omega = omega
                        .add(
                            &dv.wedge(&volume)
                                .expect("degree m + 1")
                                .scale(&(hess * Expr::var(coord_v(a, mu)))),
                        )
                        .unwrap();
                }
                // -(∂²£/∂y^B ∂v^A_mu) dy^B ∧ dy^A ∧ d^{m-1}x_mu
                let mixed = momentum.differentiate(&coord_y(b));
                if !mixed.is_zero() {
                    let dy_b = one_form(&coord_y(b));
                    omega = omega
                        .add(&dy_b.wedge(&dy_a_dmx).expect("degree m + 1").scale(&-mixed))
                        .unwrap();
                }
            }
        }
        // (∂²£/∂y^B∂v^A_mu v^A_mu - ∂£/∂y^B + ∂²£/∂x^mu∂v^B_mu) dy^B ∧ d^m x
        let mut coeff = -lagrangian.differentiate(&coord_y(b));
        for a in 1..=n {
            for mu in 1..=m {
                coeff = coeff
                    + system.momentum(a, mu).differentiate(&coord_y(b))
                        * Expr::var(coord_v(a, mu));
            }
        }
        for mu in 1..=m {
            coeff = coeff + system.momentum(b, mu).differentiate(&coord_x(mu));
        }
        if !coeff.is_zero() {
            omega = omega
                .add(
                    &one_form(&coord_y(b))
                        .wedge(&volume)
                        .expect("degree m + 1")
                        .scale(&coeff),
                )
                .unwrap();
        }
    }
    omega
}

/// Partial Hessian `∂²£/∂v^B_nu ∂v^A_mu` as an `Nm x Nm` matrix in the
/// flattened velocity order.
pub fn hessian(system: &LagrangianSystem) -> Vec<Vec<Expr>> {
    let spec = system.spec();
    let nm = spec.base_dim() * spec.fiber_dim();
    let momenta: Vec<Expr> = (0..nm)
        .map(|i| {
            let (a, mu) = system.velocity_pair(i);
            system.momentum(a, mu)
        })
        .collect();
    (0..nm)
        .map(|row| {
            let (b, nu) = system.velocity_pair(row);
            (0..nm)
                .map(|col| momenta[col].differentiate(&coord_v(b, nu)))
                .collect()
        })
        .collect()
}

/// The tangent-map block matrix of the reduced/restricted Legendre maps:
///
/// ```text
/// [ Id_m        0           0        ]
/// [ 0           Id_N        0        ]
/// [ ∂²£/∂x∂v    ∂²£/∂y∂v    ∂²£/∂v∂v ]
/// ```
///
/// Rows and columns follow the `J1E` chart order; the lower-right block is
/// exactly [`hessian`].
pub fn legendre_jacobian(system: &LagrangianSystem) -> Vec<Vec<Expr>> {
    let spec = system.spec();
    let m = spec.base_dim();
    let n = spec.fiber_dim();
    let dim = m + n + n * m;
    let mut matrix = vec![vec![Expr::zero(); dim]; dim];
    for i in 0..m + n {
        matrix[i][i] = Expr::one();
    }
    for row in 0..n * m {
        let (a, mu) = system.velocity_pair(row);
        let momentum = system.momentum(a, mu);
        for nu in 1..=m {
            matrix[m + n + row][nu - 1] = momentum.differentiate(&coord_x(nu));
        }
        for b in 1..=n {
            matrix[m + n + row][m + b - 1] = momentum.differentiate(&coord_y(b));
        }
        for col in 0..n * m {
            let (b, nu) = system.velocity_pair(col);
            matrix[m + n + row][m + n + col] = momentum.differentiate(&coord_v(b, nu));
        }
    }
    matrix
}

/// Verdict on the symbolic Hessian determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetVerdict {
    /// Normalizes to a nonzero constant: regular everywhere, proved.
    NonzeroConstant,
    /// Normalizes to zero: rank-deficient everywhere.
    ZeroConstant,
    /// Non-constant (or skipped for size): sampling decides.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Regular,
    SingularConstantRank(usize),
    SingularVariableRank,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperRegularity {
    /// Constant invertible Hessian makes the momenta affine in the
    /// velocities, so the Legendre maps are global diffeomorphisms.
    AffineCriterion,
    /// Global property, not decided by this artifact.
    Unverified,
}

impl HyperRegularity {
    pub fn label(self) -> &'static str {
        match self {
            HyperRegularity::AffineCriterion => "hyper-regular (affine criterion)",
            HyperRegularity::Unverified => "hyper-regular: unverified (global property)",
        }
    }
}

/// Pointwise comparison of Hessian rank against the kernel of
/// `v -> i(v) Omega_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRecord {
    pub point: Assignment,
    pub hessian_full_rank: bool,
    pub omega_kernel_dim: usize,
    /// `hessian_full_rank == (omega_kernel_dim == 0)` at this point.
    pub consistent: bool,
    pub forced_probe: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub hessian: Vec<Vec<Expr>>,
    /// Symbolic determinant, when the Hessian is small enough to expand.
    pub det: Option<Expr>,
    pub det_verdict: DetVerdict,
    pub sampled_ranks: Vec<(Assignment, usize)>,
    pub classification: Classification,
    /// True when a `Regular` verdict rests on sampling alone.
    pub sampled_only: bool,
    pub almost_regular_candidate: bool,
    pub hyper_regular: HyperRegularity,
    /// Fiber connectedness of the almost-regular definition has no finite
    /// test; always reported as unchecked.
    pub connectedness: &'static str,
    pub consistency: Vec<ConsistencyRecord>,
    pub prng_algorithm: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

/// Laplace expansion along rows with memoization on the used-column mask.
fn symbolic_det(matrix: &[Vec<Expr>]) -> Expr {
    fn go(matrix: &[Vec<Expr>], row: usize, used: u32, memo: &mut HashMap<u32, Expr>) -> Expr {
        let n = matrix.len();
        if row == n {
            return Expr::one();
        }
        if let Some(found) = memo.get(&used) {
            return found.clone();
        }
        let mut acc = Expr::zero();
        let mut parity = 0usize;
        for col in 0..n {
            if used & (1 << col) != 0 {
                continue;
            }
            let entry = &matrix[row][col];
            if !entry.is_zero() {
                let minor = go(matrix, row + 1, used | (1 << col), memo);
                let signed = if parity % 2 == 1 {
                    -(entry.clone() * minor)
                } else {
                    entry.clone() * minor
                };
                acc = acc + signed;
            }
            parity += 1;
        }
        memo.insert(used, acc.clone());
        acc
    }
    if matrix.is_empty() {
        return Expr::one();
    }
    go(matrix, 0, 0, &mut HashMap::new())
}

/// Classifies the regularity of the system from the symbolic determinant
/// plus a sampled rank profile, and records the pointwise equivalence
/// between full Hessian rank and 1-nondegeneracy of `Omega_L`.
///
/// Forced probes always include the all-zeros point and, for each fiber
/// coordinate, a random point with that coordinate zeroed (rank drops on
/// coordinate hyperplanes are invisible to plain random sampling).
/// `tol` is the pivot threshold for every rank decision.
pub fn classify_regularity(
    system: &LagrangianSystem,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<RegularityReport, LagrangianError> {
    let spec = system.spec();
    let chart = system.chart();
    let nm = spec.base_dim() * spec.fiber_dim();

    let hessian_matrix = hessian(system);
    let (det, det_verdict) = if nm <= MAX_SYMBOLIC_DET_DIM {
        let det = symbolic_det(&hessian_matrix);
        let verdict = if det.is_zero() {
            DetVerdict::ZeroConstant
        } else if det.is_constant() {
            DetVerdict::NonzeroConstant
        } else {
            DetVerdict::Indeterminate
        };
        (Some(det), verdict)
    } else {
        (None, DetVerdict::Indeterminate)
    };

    // Random points, then the forced probes.
    let random_points = sample_points(chart, &SampleConfig::new(samples.max(1), seed));
    let mut probes: Vec<Assignment> = Vec::new();
    probes.push(chart.coords().iter().map(|c| (c.clone(), 0.0)).collect());
    let probe_base = sample_points(
        chart,
        &SampleConfig::new(spec.fiber_dim(), seed.wrapping_add(0x5eed)),
    );
    for (a, point) in (1..=spec.fiber_dim()).zip(probe_base) {
        let mut point = point;
        point.insert(coord_y(a), 0.0);
        probes.push(point);
    }

    let rank_at = |point: &Assignment| -> Result<usize, LagrangianError> {
        numeric_rank(&hessian_matrix, point, tol).map_err(|source| LagrangianError::DomainAt {
            point: point.clone(),
            source,
        })
    };

    let mut sampled_ranks = Vec::new();
    for point in random_points.iter().chain(probes.iter()) {
        sampled_ranks.push((point.clone(), rank_at(point)?));
    }

    let ranks: Vec<usize> = sampled_ranks.iter().map(|(_, r)| *r).collect();
    let all_equal = ranks.windows(2).all(|w| w[0] == w[1]);
    let (classification, sampled_only) = match det_verdict {
        DetVerdict::NonzeroConstant => (Classification::Regular, false),
        _ => {
            if ranks.is_empty() {
                (Classification::Indeterminate, false)
            } else if all_equal && ranks[0] == nm {
                (Classification::Regular, true)
            } else if all_equal {
                (Classification::SingularConstantRank(ranks[0]), false)
            } else {
                (Classification::SingularVariableRank, false)
            }
        }
    };

    let hessian_is_constant = hessian_matrix
        .iter()
        .flatten()
        .all(|entry| entry.is_constant());
    let hyper_regular = match (&det, det_verdict) {
        (Some(_), DetVerdict::NonzeroConstant) if hessian_is_constant => {
            HyperRegularity::AffineCriterion
        }
        _ => HyperRegularity::Unverified,
    };

    // Hessian rank vs Omega_L kernel, at the first few random points and at
    // every forced probe.
    let omega_l = poincare_cartan(system, PoincareCartanKind::OmegaL);
    let mut consistency = Vec::new();
    let consistency_points = random_points
        .iter()
        .take(3)
        .map(|p| (p, false))
        .chain(probes.iter().map(|p| (p, true)));
    for (point, forced_probe) in consistency_points {
        let full_rank = rank_at(point)? == nm;
        let (kernel, _) =
            nondegeneracy_check(&omega_l, point, tol).map_err(|err| match err {
                FormError::Eval(source) => LagrangianError::DomainAt {
                    point: point.clone(),
                    source,
                },
                other => LagrangianError::Form(other),
            })?;
        consistency.push(ConsistencyRecord {
            point: point.clone(),
            hessian_full_rank: full_rank,
            omega_kernel_dim: kernel,
            consistent: full_rank == (kernel == 0),
            forced_probe,
        });
    }

    Ok(RegularityReport {
        hessian: hessian_matrix,
        det,
        det_verdict,
        sampled_ranks,
        classification,
        sampled_only,
        almost_regular_candidate: matches!(
            classification,
            Classification::SingularConstantRank(_)
        ),
        hyper_regular,
        connectedness: "unchecked",
        consistency,
        prng_algorithm: PRNG_ALGORITHM,
        seed,
        samples,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equivalence_check, Equivalence};
    use crate::forms::forms_equivalent;
    use crate::numeric::DEFAULT_PIVOT_TOL;

    fn kg() -> LagrangianSystem {
        load_system(
            BundleSpec::new(2, 1).unwrap(),
            "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2",
            "kg",
        )
        .unwrap()
    }

    fn affine() -> LagrangianSystem {
        load_system(BundleSpec::new(2, 1).unwrap(), "y1*v1_1", "affine").unwrap()
    }

    #[test]
    fn load_accepts_the_running_examples() {
        kg();
        affine();
    }

    #[test]
    fn load_rejects_momentum_coordinates() {
        let err = load_system(BundleSpec::new(2, 1).unwrap(), "p1_1", "bad").unwrap_err();
        assert!(matches!(
            err,
            LagrangianError::StrayCoordinate { name } if name == "p1_1"
        ));
    }

    #[test]
    fn theta_l_of_kg_matches_hand_expansion() {
        let system = kg();
        let chart = system.chart();
        let theta = poincare_cartan(&system, PoincareCartanKind::ThetaL);
        let x1 = chart.index_of("x1").unwrap();
        let x2 = chart.index_of("x2").unwrap();
        let y1 = chart.index_of("y1").unwrap();
        let vocab = chart.vocabulary();
        let coeff = |src: &str| crate::expr::parse_expr(src, &vocab).unwrap();
        // v1_1 dy1∧dx2 + v1_2 dy1∧dx1 - (1/2 v1_1^2 - 1/2 v1_2^2 + 1/2 y1^2) dx1∧dx2
        assert_eq!(theta.coefficient(&[x2, y1]), coeff("-v1_1"));
        assert_eq!(theta.coefficient(&[x1, y1]), coeff("-v1_2"));
        assert_eq!(
            theta.coefficient(&[x1, x2]),
            coeff("-(1/2*v1_1^2 - 1/2*v1_2^2 + 1/2*y1^2)")
        );
        assert_eq!(theta.terms().count(), 3);
    }

    #[test]
    fn zero_lagrangian_has_vanishing_forms() {
        let system = load_system(BundleSpec::new(2, 1).unwrap(), "0", "zero").unwrap();
        assert!(poincare_cartan(&system, PoincareCartanKind::ThetaL).is_zero());
        assert!(poincare_cartan(&system, PoincareCartanKind::OmegaL).is_zero());
        assert!(poincare_cartan(&system, PoincareCartanKind::ThetaLower).is_zero());
    }

    #[test]
    fn theta_lower_volume_coefficient_is_negative_velocity_trace() {
        let system = kg();
        let chart = system.chart();
        let theta_lower = poincare_cartan(&system, PoincareCartanKind::ThetaLower);
        let x1 = chart.index_of("x1").unwrap();
        let x2 = chart.index_of("x2").unwrap();
        let vocab = chart.vocabulary();
        let expected = crate::expr::parse_expr("v1_2^2 - v1_1^2", &vocab).unwrap();
        assert_eq!(theta_lower.coefficient(&[x1, x2]), expected);
    }

    #[test]
    fn minus_d_theta_matches_expanded_omega() {
        for system in [
            kg(),
            affine(),
            load_system(
                BundleSpec::new(2, 1).unwrap(),
                "x1^2*v1_1 + x2*y1*v1_2 + v1_1^3",
                "cubic",
            )
            .unwrap(),
        ] {
            let omega = poincare_cartan(&system, PoincareCartanKind::OmegaL);
            let expanded = omega_l_expanded(&system);
            assert_eq!(
                forms_equivalent(&omega, &expanded, 4, 1e-9, 0).unwrap(),
                Equivalence::ProvedEqual,
                "expanded Omega_L mismatch for {}",
                system.name()
            );
        }
    }

    #[test]
    fn hessian_of_kg_is_signature_diagonal() {
        let h = hessian(&kg());
        assert_eq!(h[0][0], Expr::one());
        assert_eq!(h[1][1], Expr::int(-1));
        assert_eq!(h[0][1], Expr::zero());
        assert_eq!(h[1][0], Expr::zero());
    }

    #[test]
    fn hessian_of_affine_lagrangian_vanishes() {
        let h = hessian(&affine());
        assert!(h.iter().flatten().all(|e| e.is_zero()));
    }

    #[test]
    fn hessian_of_coupled_square_has_rank_one() {
        let system = load_system(
            BundleSpec::new(2, 1).unwrap(),
            "1/2*(v1_1 + v1_2)^2",
            "coupled",
        )
        .unwrap();
        let h = hessian(&system);
        for row in &h {
            for entry in row {
                assert_eq!(entry, &Expr::one());
            }
        }
        let rank = numeric_rank(&h, &Assignment::new(), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn hessian_is_symmetric() {
        for system in [
            kg(),
            affine(),
            load_system(
                BundleSpec::new(2, 2).unwrap(),
                "v1_1*v2_2 + y1*v2_1^2 + sin(y2)*v1_2",
                "mixed",
            )
            .unwrap(),
        ] {
            let h = hessian(&system);
            for i in 0..h.len() {
                for j in 0..h.len() {
                    assert!(
                        equivalence_check(&h[i][j], &h[j][i], 10, 1e-9, 5)
                            .unwrap()
                            .holds(),
                        "asymmetric Hessian for {}",
                        system.name()
                    );
                }
            }
        }
    }

    #[test]
    fn classify_kg_as_regular_with_symbolic_determinant() {
        let report = classify_regularity(&kg(), 25, DEFAULT_PIVOT_TOL, 42).unwrap();
        assert_eq!(report.classification, Classification::Regular);
        assert!(!report.sampled_only);
        assert_eq!(report.det_verdict, DetVerdict::NonzeroConstant);
        assert_eq!(report.det.as_ref().unwrap(), &Expr::int(-1));
        assert_eq!(report.hyper_regular, HyperRegularity::AffineCriterion);
        assert!(report.consistency.iter().all(|c| c.consistent));
        assert_eq!(report.connectedness, "unchecked");
    }

    #[test]
    fn classify_affine_as_constant_rank_zero() {
        let report = classify_regularity(&affine(), 25, DEFAULT_PIVOT_TOL, 42).unwrap();
        assert_eq!(report.classification, Classification::SingularConstantRank(0));
        assert!(report.almost_regular_candidate);
        assert_eq!(report.det_verdict, DetVerdict::ZeroConstant);
        assert_eq!(report.hyper_regular, HyperRegularity::Unverified);
        assert!(report.consistency.iter().all(|c| c.consistent));
    }

    #[test]
    fn classify_velocity_square_with_fiber_factor_as_variable_rank() {
        // £ = 1/2 y1 v1_1^2 on m = N = 1: rank 1 off y1 = 0, rank 0 on it.
        let system = load_system(BundleSpec::new(1, 1).unwrap(), "1/2*y1*v1_1^2", "vr").unwrap();
        let report = classify_regularity(&system, 25, DEFAULT_PIVOT_TOL, 42).unwrap();
        assert_eq!(report.classification, Classification::SingularVariableRank);
        assert_eq!(report.det_verdict, DetVerdict::Indeterminate);
        // The probe with y1 = 0 is what exposes the rank drop.
        assert!(report
            .sampled_ranks
            .iter()
            .any(|(point, rank)| point["y1"] == 0.0 && *rank == 0));
        // At every forced probe the kernel test agrees with the Hessian.
        assert!(report
            .consistency
            .iter()
            .filter(|c| c.forced_probe)
            .all(|c| c.consistent));
    }

    #[test]
    fn jacobian_blocks_of_kg() {
        let system = kg();
        let jac = legendre_jacobian(&system);
        let h = hessian(&system);
        // Upper-left identity, zero coupling
        for i in 0..3 {
            for j in 0..5 {
                let expected = if i == j { Expr::one() } else { Expr::zero() };
                assert_eq!(jac[i][j], expected);
            }
        }
        // Lower-right block equals the Hessian.
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(jac[3 + i][3 + j], h[i][j]);
            }
            // Mixed second derivatives vanish for KG.
            for j in 0..3 {
                assert_eq!(jac[3 + i][j], Expr::zero());
            }
        }
    }

    #[test]
    fn jacobian_mixed_block_of_affine_lagrangian() {
        // £ = y1 v1_1: ∂²£/∂y1∂v1_1 = 1 sits in the (v-row, y-column) block.
        let system = affine();
        let jac = legendre_jacobian(&system);
        assert_eq!(jac[3][2], Expr::one()); // row v1_1, column y1
        assert_eq!(jac[4][2], Expr::zero()); // row v1_2
    }

    #[test]
    fn zero_lagrangian_jacobian_is_block_diagonal_with_zero_tail() {
        let system = load_system(BundleSpec::new(2, 1).unwrap(), "0", "zero").unwrap();
        let jac = legendre_jacobian(&system);
        for i in 0..3 {
            assert_eq!(jac[i][i], Expr::one());
        }
        for row in jac.iter().skip(3) {
            assert!(row.iter().all(|e| e.is_zero()));
        }
    }
}
