//! Deterministic sampling, finite-difference validation, numeric rank and
//! nondegeneracy kernel tests shared by the verification operations.
//!
//! Sampling is driven by the seeded [`SplitMix64`](crate::rng::SplitMix64)
//! stream: an identical `(seed, config)` pair reproduces the identical point
//! sequence, and the algorithm identifier
//! [`PRNG_ALGORITHM`](crate::rng::PRNG_ALGORITHM) is available for reports.

use std::collections::BTreeMap;

use crate::chart::Chart;
use crate::expr::{Assignment, EvalError, Expr};
use crate::forms::{DiffForm, FormError};
use crate::rng::SplitMix64;

/// Default per-coordinate sampling range.
pub const DEFAULT_RANGE: (f64, f64) = (-2.0, 2.0);
/// Default number of random sample points.
pub const DEFAULT_SAMPLES: usize = 200;
/// Default tolerance for identity residuals.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default pivot threshold factor for numeric rank decisions.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

/// Configuration for a deterministic sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Number of random points (forced probes come on top of these).
    pub count: usize,
    pub seed: u64,
    /// Uniform range applied to every coordinate; `lo < hi`.
    pub range: (f64, f64),
    /// Explicit probe points appended after the random points.
    pub forced: Vec<Assignment>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            count: DEFAULT_SAMPLES,
            seed: 0,
            range: DEFAULT_RANGE,
            forced: Vec::new(),
        }
    }
}

impl SampleConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        SampleConfig {
            count,
            seed,
            ..SampleConfig::default()
        }
    }
}

/// Draws `cfg.count` uniform points on the chart (coordinates in chart
/// order, one stream draw each), then appends the forced probes verbatim.
pub fn sample_points(chart: &Chart, cfg: &SampleConfig) -> Vec<Assignment> {
    assert!(cfg.range.0 < cfg.range.1, "sampling range must be nonempty");
    let mut rng = SplitMix64::new(cfg.seed);
    let mut points = Vec::with_capacity(cfg.count + cfg.forced.len());
    for _ in 0..cfg.count {
        let point: Assignment = chart
            .coords()
            .iter()
            .map(|c| (c.clone(), rng.next_in_range(cfg.range.0, cfg.range.1)))
            .collect();
        points.push(point);
    }
    points.extend(cfg.forced.iter().cloned());
    points
}

/// Result of comparing a symbolic derivative against a central difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference {
    pub symbolic: f64,
    pub numeric: f64,
    pub abs_diff: f64,
}

/// Central finite difference `(e(x+h) - e(x-h)) / 2h` against the evaluated
/// symbolic derivative at the same point.
pub fn finite_difference_check(
    e: &Expr,
    var: &str,
    at: &Assignment,
    h: f64,
) -> Result<FiniteDifference, EvalError> {
    let base = at
        .get(var)
        .copied()
        .ok_or_else(|| EvalError::MissingVariable(var.to_string()))?;
    let mut plus = at.clone();
    plus.insert(var.to_string(), base + h);
    let mut minus = at.clone();
    minus.insert(var.to_string(), base - h);
    let numeric = (e.evaluate(&plus)? - e.evaluate(&minus)?) / (2.0 * h);
    let symbolic = e.differentiate(var).evaluate(at)?;
    Ok(FiniteDifference {
        symbolic,
        numeric,
        abs_diff: (symbolic - numeric).abs(),
    })
}

/// Rank of a real matrix by row reduction with partial pivoting; pivots
/// below `tol * max|entry|` count as zero.
pub fn rank_f64(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let n_rows = rows.len();
    if n_rows == 0 {
        return 0;
    }
    let n_cols = rows[0].len();
    let max_abs = rows
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if max_abs == 0.0 {
        return 0;
    }
    let threshold = tol * max_abs;
    let mut rank = 0;
    for col in 0..n_cols {
        let pivot = (rank..n_rows)
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()));
        let Some(pivot) = pivot else { break };
        if rows[pivot][col].abs() <= threshold {
            continue;
        }
        rows.swap(rank, pivot);
        for row in rank + 1..n_rows {
            let factor = rows[row][col] / rows[rank][col];
            for k in col..n_cols {
                rows[row][k] -= factor * rows[rank][k];
            }
        }
        rank += 1;
        if rank == n_rows {
            break;
        }
    }
    rank
}

/// Evaluates a matrix of expressions at a point and returns its numeric rank.
pub fn numeric_rank(
    matrix: &[Vec<Expr>],
    at: &Assignment,
    tol: f64,
) -> Result<usize, EvalError> {
    let mut rows = Vec::with_capacity(matrix.len());
    for row in matrix {
        let mut out = Vec::with_capacity(row.len());
        for entry in row {
            out.push(entry.evaluate(at)?);
        }
        rows.push(out);
    }
    Ok(rank_f64(rows, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NondegeneracyVerdict {
    Nondegenerate,
    Degenerate,
}

/// Kernel test for a form of degree >= 2 at a point: builds the matrix of
/// the linear map `v -> i(v) form` (rows indexed by the (k-1)-index tuples
/// that occur, columns by chart coordinates) and measures its kernel.
/// The form is 1-nondegenerate at the point iff the kernel is `{0}`.
pub fn nondegeneracy_check(
    form: &DiffForm,
    at: &Assignment,
    tol: f64,
) -> Result<(usize, NondegeneracyVerdict), FormError> {
    assert!(form.degree() >= 2, "kernel test needs degree >= 2");
    let dim = form.chart().dim();

    // Row index per occurring (k-1)-subtuple.
    let mut row_of: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (indices, _) in form.terms() {
        for j in 0..indices.len() {
            let mut reduced = indices.to_vec();
            reduced.remove(j);
            let next = row_of.len();
            row_of.entry(reduced).or_insert(next);
        }
    }
    let mut rows = vec![vec![0.0; dim]; row_of.len()];
    for (indices, coeff) in form.terms() {
        let value = coeff.evaluate(at)?;
        for (j, &col) in indices.iter().enumerate() {
            let mut reduced = indices.to_vec();
            reduced.remove(j);
            let row = row_of[&reduced];
            let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
            rows[row][col] += sign * value;
        }
    }
    let kernel = dim - rank_f64(rows, tol);
    let verdict = if kernel == 0 {
        NondegeneracyVerdict::Nondegenerate
    } else {
        NondegeneracyVerdict::Degenerate
    };
    Ok((kernel, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{make_chart, BundleSpec, SpaceKind};
    use crate::forms::{canonical_form, CanonicalFormKind, DiffForm};

    fn spec21() -> BundleSpec {
        BundleSpec::new(2, 1).unwrap()
    }

    #[test]
    fn identical_configs_give_identical_sequences() {
        let chart = make_chart(SpaceKind::J1E, &spec21());
        let cfg = SampleConfig::new(20, 42);
        assert_eq!(sample_points(&chart, &cfg), sample_points(&chart, &cfg));
    }

    #[test]
    fn zero_count_with_forced_probe_yields_exactly_the_probe() {
        let chart = make_chart(SpaceKind::E, &spec21());
        let probe: Assignment = chart.coords().iter().map(|c| (c.clone(), 0.0)).collect();
        let cfg = SampleConfig {
            count: 0,
            forced: vec![probe.clone()],
            ..SampleConfig::default()
        };
        assert_eq!(sample_points(&chart, &cfg), vec![probe]);
    }

    #[test]
    fn samples_respect_the_range() {
        let chart = make_chart(SpaceKind::E, &spec21());
        let cfg = SampleConfig::new(10_000, 7);
        for point in sample_points(&chart, &cfg) {
            for (_, v) in point {
                assert!((-2.0..2.0).contains(&v));
            }
        }
    }

    #[test]
    fn finite_difference_matches_on_kg_momentum() {
        let vocab = make_chart(SpaceKind::J1E, &spec21()).vocabulary();
        let lagrangian =
            crate::expr::parse_expr("1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2", &vocab).unwrap();
        let at: Assignment = [
            ("x1", 0.0),
            ("x2", 0.0),
            ("y1", 1.0),
            ("v1_1", 2.0),
            ("v1_2", 1.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let fd = finite_difference_check(&lagrangian, "v1_1", &at, 1e-6).unwrap();
        assert!((fd.symbolic - 2.0).abs() < 1e-12);
        assert!(fd.abs_diff <= 1e-6);
    }

    #[test]
    fn finite_difference_of_constant_is_zero() {
        let at: Assignment = [("x1".to_string(), 0.3)].into();
        let fd = finite_difference_check(&Expr::int(5), "x1", &at, 1e-6).unwrap();
        assert_eq!(fd.symbolic, 0.0);
        assert_eq!(fd.numeric, 0.0);
    }

    #[test]
    fn finite_difference_of_sine_at_origin() {
        let e = Expr::func(crate::expr::Func::Sin, Expr::var("x1"));
        let at: Assignment = [("x1".to_string(), 0.0)].into();
        let fd = finite_difference_check(&e, "x1", &at, 1e-6).unwrap();
        assert!((fd.symbolic - 1.0).abs() < 1e-12);
        assert!(fd.abs_diff <= 1e-6);
    }

    #[test]
    fn rank_of_kg_hessian_is_two() {
        let mat = vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), Expr::int(-1)],
        ];
        assert_eq!(
            numeric_rank(&mat, &Assignment::new(), DEFAULT_PIVOT_TOL).unwrap(),
            2
        );
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        let mat = vec![vec![Expr::zero(); 2]; 2];
        assert_eq!(
            numeric_rank(&mat, &Assignment::new(), DEFAULT_PIVOT_TOL).unwrap(),
            0
        );
    }

    #[test]
    fn rank_of_all_ones_matrix_is_one() {
        let mat = vec![vec![Expr::one(); 2]; 2];
        assert_eq!(
            numeric_rank(&mat, &Assignment::new(), DEFAULT_PIVOT_TOL).unwrap(),
            1
        );
    }

    #[test]
    fn rank_is_permutation_invariant() {
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, -1.0],
        ];
        let rank = rank_f64(rows.clone(), DEFAULT_PIVOT_TOL);
        let permuted = vec![rows[2].clone(), rows[0].clone(), rows[1].clone()];
        assert_eq!(rank_f64(permuted, DEFAULT_PIVOT_TOL), rank);
        let col_permuted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r[2], r[0], r[1]])
            .collect();
        assert_eq!(rank_f64(col_permuted, DEFAULT_PIVOT_TOL), rank);
    }

    #[test]
    fn multimomentum_omega_is_nondegenerate_at_a_random_point() {
        let spec = spec21();
        let omega = canonical_form(SpaceKind::MPi, CanonicalFormKind::Omega, &spec).unwrap();
        let chart = make_chart(SpaceKind::MPi, &spec);
        let cfg = SampleConfig::new(5, 13);
        for point in sample_points(&chart, &cfg) {
            let (kernel, verdict) =
                nondegeneracy_check(&omega, &point, DEFAULT_PIVOT_TOL).unwrap();
            assert_eq!(kernel, 0);
            assert_eq!(verdict, NondegeneracyVerdict::Nondegenerate);
        }
    }

    #[test]
    fn volume_form_on_e_has_vertical_kernel() {
        // d^2 x on (x1, x2, y1) annihilates exactly the ∂/∂y1 direction.
        let spec = spec21();
        let chart = make_chart(SpaceKind::E, &spec);
        let volume = DiffForm::volume(chart.clone(), 2);
        let point: Assignment = chart.coords().iter().map(|c| (c.clone(), 0.7)).collect();
        let (kernel, verdict) = nondegeneracy_check(&volume, &point, DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(kernel, 1);
        assert_eq!(verdict, NondegeneracyVerdict::Degenerate);
    }
}
