//! Symbolic and numeric engine for the multimomentum phase spaces of
//! first-order field theories.
//!
//! Given a bundle shape (base dimension `m`, fiber dimension `N`) and a
//! first-order Lagrangian function, this crate constructs:
//!
//! * the natural coordinate charts of the six spaces involved
//!   (`E`, `J1E`, `J1E*`, `Pi`, `Mpi`, `J1pi*`) and the canonical maps
//!   between the momentum spaces ([`chart`]);
//! * exterior calculus on those charts — wedge, `d`, interior product,
//!   pullback — together with the canonical multimomentum forms ([`forms`]);
//! * the Poincaré–Cartan forms, the partial Hessian and the regularity
//!   classification of a Lagrangian system ([`lagrangian`]);
//! * the five Legendre maps, verification of the structural identities
//!   relating them, and numeric inversion of the reduced map ([`legendre`]);
//! * deterministic seeded sampling and the numeric rank / nondegeneracy
//!   tests shared by the verification routines ([`numeric`]).
//!
//! Everything is built on the small symbolic expression type in [`expr`]:
//! immutable trees over named coordinates with exact rational constants,
//! a fixed normal form, and a four-valued zero-equivalence test.
//!
//! All values are immutable and all operations are pure functions, so the
//! whole API is safe to use from multiple threads.

pub mod chart;
pub mod expr;
pub mod forms;
pub mod lagrangian;
pub mod legendre;
pub mod numeric;
pub mod rng;

pub use chart::{
    canonical_map, compose, dimension_table, make_chart, BundleSpec, CanonicalMapKind, Chart,
    ChartError, CoordMap, DimensionRelation, DimensionTable, SpaceKind,
};
pub use expr::{
    equivalence_check, parse_expr, Assignment, Equivalence, EvalError, Expr, Func, ParseError,
};
pub use forms::{
    canonical_form, canonical_omega_expanded, dm1x, forms_equivalent, pullback, CanonicalFormKind, DiffForm, FormError,
    VectorField,
};
pub use lagrangian::{
    classify_regularity, hessian, legendre_jacobian, load_system, omega_l_expanded,
    poincare_cartan, Classification, ConsistencyRecord, DetVerdict, HyperRegularity,
    LagrangianError, LagrangianSystem, PoincareCartanKind, RegularityReport,
};
pub use legendre::{
    hamiltonian_symbolic, hamiltonian_value, invert_reduced, invert_reduced_damped, legendre_map,
    round_trip_error, verify_diagram, verify_pullbacks, verify_tautology, IdentityCheck,
    IdentityReport, InvertError, LegendreError, LegendreKind, VerifyMode,
};
pub use numeric::{
    finite_difference_check, nondegeneracy_check, numeric_rank, rank_f64, sample_points,
    FiniteDifference, NondegeneracyVerdict, SampleConfig,
};

#[cfg(test)]
mod thread_safety {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_values_are_send_and_sync() {
        assert_send_sync::<crate::Expr>();
        assert_send_sync::<crate::Chart>();
        assert_send_sync::<crate::CoordMap>();
        assert_send_sync::<crate::DiffForm>();
    }
}
