//! Exterior algebra of differential forms on a fixed chart.
//!
//! A degree-`k` form is stored sparsely as a map from strictly increasing
//! `k`-tuples of coordinate indices to coefficient expressions; zero
//! coefficients are pruned. The sign conventions are fixed once here:
//!
//! * wedge signs come from sorting index tuples into canonical order,
//! * `i(v)(dx_{i1} ∧ … ∧ dx_{ik}) = Σ_j (-1)^j v^{i_j} dx_{I∖i_j}`
//!   (0-based `j`), which makes `d^{m-1}x_mu := i(∂/∂x^mu) d^m x` carry the
//!   sign `(-1)^(mu-1)`,
//! * the canonical (m+1)-forms are always computed as `-d(theta)` rather
//!   than stored from their expanded expressions; the expansions serve as
//!   cross-checks in the test suites.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chart::{
    coord_cap_p, coord_p, make_chart, BundleSpec, Chart, CoordMap, SpaceKind, COORD_P0,
};
use crate::expr::{equivalence_check, Assignment, Equivalence, EvalError, Expr};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormError {
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("interior product of a 0-form")]
    ZeroDegree,
    #[error("expected {expected} vectors of length {dim}, got {found}")]
    VectorArity {
        expected: usize,
        dim: usize,
        found: usize,
    },
    #[error("canonical forms live on Mpi or J1E*, not {0}")]
    UnsupportedSpace(SpaceKind),
    #[error("degrees differ: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Sparse exterior form of fixed degree on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl DiffForm {
    pub fn zero(chart: Chart, degree: usize) -> Result<Self, FormError> {
        if degree > chart.dim() {
            return Err(FormError::DegreeOverflow {
                degree,
                dim: chart.dim(),
            });
        }
        Ok(DiffForm {
            chart,
            degree,
            terms: BTreeMap::new(),
        })
    }

    /// Degree-0 form holding a single coefficient.
    pub fn scalar(chart: Chart, value: Expr) -> Self {
        let mut form = DiffForm {
            chart,
            degree: 0,
            terms: BTreeMap::new(),
        };
        form.insert(Vec::new(), value);
        form
    }

    /// The basis 1-form `d(coordinate)`.
    pub fn basis_one_form(chart: Chart, coord_index: usize) -> Self {
        let mut form = DiffForm {
            chart,
            degree: 1,
            terms: BTreeMap::new(),
        };
        form.insert(vec![coord_index], Expr::one());
        form
    }

    /// `d^m x = dx1 ∧ … ∧ dxm`; every chart starts with the base coordinates.
    pub fn volume(chart: Chart, m: usize) -> Self {
        let mut form = DiffForm {
            chart,
            degree: m,
            terms: BTreeMap::new(),
        };
        form.insert((0..m).collect(), Expr::one());
        form
    }

    fn insert(&mut self, indices: Vec<usize>, coeff: Expr) {
        debug_assert_eq!(indices.len(), self.degree);
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let coeff = coeff.normalize();
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&indices) {
            Some(existing) => {
                let sum = (existing.clone() + coeff).normalize();
                if sum.is_zero() {
                    self.terms.remove(&indices);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(indices, coeff);
            }
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Coefficient on a strictly increasing index tuple (zero if absent).
    pub fn coefficient(&self, indices: &[usize]) -> Expr {
        self.terms.get(indices).cloned().unwrap_or_else(Expr::zero)
    }

    fn check_same_chart(&self, other: &DiffForm) -> Result<(), FormError> {
        if self.chart != other.chart {
            return Err(FormError::ChartMismatch(format!(
                "{} vs {}",
                self.chart.kind(),
                other.chart.kind()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm, FormError> {
        self.check_same_chart(other)?;
        if self.degree != other.degree {
            return Err(FormError::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = self.clone();
        for (indices, coeff) in &other.terms {
            out.insert(indices.clone(), coeff.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> DiffForm {
        self.scale(&Expr::int(-1))
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scale(&self, factor: &Expr) -> DiffForm {
        let mut out = DiffForm {
            chart: self.chart.clone(),
            degree: self.degree,
            terms: BTreeMap::new(),
        };
        for (indices, coeff) in &self.terms {
            out.insert(indices.clone(), coeff.clone() * factor.clone());
        }
        out
    }

    /// Exterior product. Bilinear; the sign of each term comes from sorting
    /// the concatenated index tuple.
    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm, FormError> {
        self.check_same_chart(other)?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Err(FormError::DegreeOverflow {
                degree,
                dim: self.chart.dim(),
            });
        }
        let mut out = DiffForm::zero(self.chart.clone(), degree)?;
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                if let Some((merged, sign)) = merge_indices(ia, ib) {
                    let coeff = ca.clone() * cb.clone();
                    let coeff = if sign < 0 { -coeff } else { coeff };
                    out.insert(merged, coeff);
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative: `d(f dx_I) = Σ_s ∂f/∂s ds ∧ dx_I`.
    pub fn d(&self) -> Result<DiffForm, FormError> {
        let degree = self.degree + 1;
        if degree > self.chart.dim() {
            return Err(FormError::DegreeOverflow {
                degree,
                dim: self.chart.dim(),
            });
        }
        let mut out = DiffForm::zero(self.chart.clone(), degree)?;
        for (indices, coeff) in &self.terms {
            for s in 0..self.chart.dim() {
                if indices.binary_search(&s).is_ok() {
                    continue;
                }
                let partial = coeff.differentiate(self.chart.coord(s));
                if partial.is_zero() {
                    continue;
                }
                let pos = indices.partition_point(|&i| i < s);
                let mut merged = indices.clone();
                merged.insert(pos, s);
                let signed = if pos % 2 == 1 { -partial } else { partial };
                out.insert(merged, signed);
            }
        }
        Ok(out)
    }

    /// Interior product `i(v) self` (an antiderivation of degree -1).
    pub fn interior(&self, v: &VectorField) -> Result<DiffForm, FormError> {
        if self.chart != *v.chart() {
            return Err(FormError::ChartMismatch(format!(
                "{} vs {}",
                self.chart.kind(),
                v.chart().kind()
            )));
        }
        if self.degree == 0 {
            return Err(FormError::ZeroDegree);
        }
        let mut out = DiffForm::zero(self.chart.clone(), self.degree - 1)?;
        for (indices, coeff) in &self.terms {
            for (j, &idx) in indices.iter().enumerate() {
                let component = v.component(idx);
                if component.is_zero() {
                    continue;
                }
                let mut reduced = indices.clone();
                reduced.remove(j);
                let value = coeff.clone() * component.clone();
                let signed = if j % 2 == 1 { -value } else { value };
                out.insert(reduced, signed);
            }
        }
        Ok(out)
    }

    /// Pointwise evaluation on `degree` coordinate vectors: multilinear and
    /// alternating, by determinant expansion over the stored terms.
    pub fn evaluate(&self, at: &Assignment, vectors: &[Vec<f64>]) -> Result<f64, FormError> {
        let dim = self.chart.dim();
        if vectors.len() != self.degree || vectors.iter().any(|v| v.len() != dim) {
            return Err(FormError::VectorArity {
                expected: self.degree,
                dim,
                found: vectors.len(),
            });
        }
        let mut total = 0.0;
        for (indices, coeff) in &self.terms {
            let c = coeff.evaluate(at)?;
            let k = indices.len();
            let mut minor = vec![vec![0.0; k]; k];
            for (r, &idx) in indices.iter().enumerate() {
                for (col, vector) in vectors.iter().enumerate() {
                    minor[r][col] = vector[idx];
                }
            }
            total += c * det(minor);
        }
        Ok(total)
    }
}

/// Merges two strictly increasing index tuples; `None` when they share an
/// index, otherwise the sorted union and the permutation sign.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut inversions = 0usize;
    for &jb in b {
        let mut greater = 0usize;
        for &ia in a {
            if ia == jb {
                return None;
            }
            if ia > jb {
                greater += 1;
            }
        }
        inversions += greater;
    }
    let mut merged = Vec::with_capacity(a.len() + b.len());
    merged.extend_from_slice(a);
    merged.extend_from_slice(b);
    merged.sort_unstable();
    Some((merged, if inversions % 2 == 1 { -1 } else { 1 }))
}

fn det(mut mat: Vec<Vec<f64>>) -> f64 {
    let n = mat.len();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| mat[a][col].abs().total_cmp(&mat[b][col].abs()))
            .unwrap();
        if mat[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            mat.swap(pivot_row, col);
            sign = -sign;
        }
        for row in col + 1..n {
            let factor = mat[row][col] / mat[col][col];
            for k in col..n {
                mat[row][k] -= factor * mat[col][k];
            }
        }
    }
    sign * (0..n).map(|i| mat[i][i]).product::<f64>()
}

/// Vector field on a chart: one component expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self, FormError> {
        if components.len() != chart.dim() {
            return Err(FormError::VectorArity {
                expected: chart.dim(),
                dim: chart.dim(),
                found: components.len(),
            });
        }
        Ok(VectorField {
            chart,
            components: components.into_iter().map(|c| c.normalize()).collect(),
        })
    }

    /// The coordinate field `∂/∂(coordinate)`.
    pub fn coordinate(chart: Chart, index: usize) -> Self {
        let components = (0..chart.dim())
            .map(|i| if i == index { Expr::one() } else { Expr::zero() })
            .collect();
        VectorField { chart, components }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn component(&self, index: usize) -> &Expr {
        &self.components[index]
    }
}

/// Pullback of `form` (on `target(map)`) through `map`, yielding a form on
/// `source(map)`: coefficients are substituted, and each `d(coordinate)`
/// becomes the full differential of the corresponding component.
pub fn pullback(map: &CoordMap, form: &DiffForm) -> Result<DiffForm, FormError> {
    if form.chart() != map.target() {
        return Err(FormError::ChartMismatch(format!(
            "form lives on {}, map targets {}",
            form.chart().kind(),
            map.target().kind()
        )));
    }
    let source = map.source().clone();
    if form.degree() > source.dim() {
        return Err(FormError::DegreeOverflow {
            degree: form.degree(),
            dim: source.dim(),
        });
    }
    let subst = map.substitution();

    // Differential of each target component as a 1-form on the source chart,
    // computed on demand.
    let mut differentials: BTreeMap<usize, DiffForm> = BTreeMap::new();
    let mut differential_of = |target_idx: usize| -> DiffForm {
        if let Some(found) = differentials.get(&target_idx) {
            return found.clone();
        }
        let component = map
            .component(map.target().coord(target_idx))
            .expect("component exists for every target coordinate")
            .clone();
        let mut one_form = DiffForm::zero(source.clone(), 1).expect("dim >= 1");
        for s in 0..source.dim() {
            let partial = component.differentiate(source.coord(s));
            if !partial.is_zero() {
                one_form.insert(vec![s], partial);
            }
        }
        differentials.insert(target_idx, one_form.clone());
        one_form
    };

    let mut out = DiffForm::zero(source.clone(), form.degree())?;
    for (indices, coeff) in form.terms() {
        // Wedge the component differentials first; the (usually larger)
        // substituted coefficient multiplies through once at the end.
        let mut acc = DiffForm::scalar(source.clone(), Expr::one());
        for &idx in indices {
            acc = acc.wedge(&differential_of(idx))?;
            if acc.is_zero() {
                break;
            }
        }
        if acc.degree() == form.degree() && !acc.is_zero() {
            out = out.add(&acc.scale(&coeff.substitute(&subst)))?;
        }
    }
    Ok(out)
}

/// `d^{m-1}x_mu := i(∂/∂x^mu) d^m x` — the basis of horizontal (m-1)-forms.
/// `mu` is 1-based.
pub fn dm1x(chart: &Chart, m: usize, mu: usize) -> DiffForm {
    let volume = DiffForm::volume(chart.clone(), m);
    let field = VectorField::coordinate(chart.clone(), mu - 1);
    volume
        .interior(&field)
        .expect("volume form has positive degree")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalFormKind {
    Theta,
    Omega,
}

/// Canonical multimomentum m-form (`Theta`) or its negative differential
/// (`Omega`) on the extended (`Mpi`) or generalized (`J1E*`) bundle:
///
/// * on `Mpi`:  `Theta = p0 d^m x + p{A}_{mu} dy^A ∧ d^{m-1}x_mu`,
/// * on `J1E*`: the `d^m x` slot carries the trace `Σ P{mu}_{mu}` instead
///   of `p0`.
pub fn canonical_form(
    space: SpaceKind,
    which: CanonicalFormKind,
    spec: &BundleSpec,
) -> Result<DiffForm, FormError> {
    let volume_coeff = match space {
        SpaceKind::MPi => Expr::var(COORD_P0),
        SpaceKind::J1EStar => Expr::Add(
            (1..=spec.base_dim())
                .map(|mu| Expr::var(coord_cap_p(mu, mu)))
                .collect(),
        )
        .normalize(),
        other => return Err(FormError::UnsupportedSpace(other)),
    };
    let chart = make_chart(space, spec);
    let m = spec.base_dim();
    let mut theta = DiffForm::volume(chart.clone(), m).scale(&volume_coeff);
    for a in 1..=spec.fiber_dim() {
        let y_idx = chart
            .index_of(&crate::chart::coord_y(a))
            .expect("fiber coordinate present");
        let dy = DiffForm::basis_one_form(chart.clone(), y_idx);
        for mu in 1..=m {
            let momentum = Expr::var(coord_p(a, mu));
            let term = dy.wedge(&dm1x(&chart, m, mu))?.scale(&momentum);
            theta = theta.add(&term)?;
        }
    }
    match which {
        CanonicalFormKind::Theta => Ok(theta),
        CanonicalFormKind::Omega => Ok(theta.d()?.neg()),
    }
}

/// The expanded coordinate expression of the canonical (m+1)-form,
/// `-dp ∧ d^m x - dp{A}_{mu} ∧ dy^A ∧ d^{m-1}x_mu` (with the trace
/// differential in the `dp` slot on `J1E*`). Cross-checks `-d(theta)`.
pub fn canonical_omega_expanded(
    space: SpaceKind,
    spec: &BundleSpec,
) -> Result<DiffForm, FormError> {
    let chart = make_chart(space, spec);
    let m = spec.base_dim();
    let volume = DiffForm::volume(chart.clone(), m);
    let one_form = |name: &str| {
        DiffForm::basis_one_form(chart.clone(), chart.index_of(name).expect("chart coordinate"))
    };
    let dp_slot = match space {
        SpaceKind::MPi => one_form(COORD_P0),
        SpaceKind::J1EStar => {
            let mut acc = DiffForm::zero(chart.clone(), 1)?;
            for mu in 1..=m {
                acc = acc.add(&one_form(&coord_cap_p(mu, mu)))?;
            }
            acc
        }
        other => return Err(FormError::UnsupportedSpace(other)),
    };
    let mut omega = dp_slot.wedge(&volume)?.neg();
    for a in 1..=spec.fiber_dim() {
        let dy = one_form(&crate::chart::coord_y(a));
        for mu in 1..=m {
            let term = one_form(&coord_p(a, mu))
                .wedge(&dy)?
                .wedge(&dm1x(&chart, m, mu))?;
            omega = omega.add(&term.neg())?;
        }
    }
    Ok(omega)
}

/// Term-by-term equivalence of two forms on the same chart, aggregating the
/// per-coefficient verdicts (worst one wins).
pub fn forms_equivalent(
    a: &DiffForm,
    b: &DiffForm,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Equivalence, FormError> {
    a.check_same_chart(b)?;
    if a.degree != b.degree {
        return Err(FormError::DegreeMismatch(a.degree, b.degree));
    }
    let mut keys: Vec<Vec<usize>> = a.terms.keys().cloned().collect();
    for key in b.terms.keys() {
        if !a.terms.contains_key(key) {
            keys.push(key.clone());
        }
    }
    keys.sort();

    let mut max_residual = 0.0f64;
    let mut any_numeric = false;
    for (offset, key) in keys.iter().enumerate() {
        let ca = a.coefficient(key);
        let cb = b.coefficient(key);
        let verdict = equivalence_check(&ca, &cb, samples, tol, seed.wrapping_add(offset as u64))?;
        match verdict {
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
