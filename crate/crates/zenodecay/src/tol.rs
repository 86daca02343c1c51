//! Numerical tolerances used for validation throughout the crate.
//!
//! Defaults are calibrated for IEEE 754 double precision at dimensions up to
//! a few hundred. Constructors that validate state accept a [`Tolerances`]
//! override for callers that need looser (or tighter) gates.

/// Max elementwise |A − A†| for a matrix to count as Hermitian.
pub const TOL_HERMITIAN: f64 = 1e-10;

/// |Tr ρ − 1| bound for density operators.
pub const TOL_TRACE_ONE: f64 = 1e-10;

/// Density-operator eigenvalues must be ≥ this floor.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Max elementwise |Λ² − Λ| for projectors.
pub const TOL_IDEMPOTENT: f64 = 1e-10;

/// |Tr Λ − rank| bound for projectors.
pub const TOL_PROJECTOR_RANK: f64 = 1e-8;

/// Max elementwise |U diag(λ) U† − A| for a spectral decomposition.
pub const TOL_SPECTRAL_RECONSTRUCT: f64 = 1e-9;

/// Max elementwise |U†U − I| for orthonormal eigenvector sets.
pub const TOL_UNITARY: f64 = 1e-10;

/// Residual norm below which a vector counts as dependent during
/// Gram–Schmidt orthonormalization.
pub const TOL_DEPENDENT_SPAN: f64 = 1e-12;

/// Allowed imaginary residue on quantities that are real by construction.
pub const TOL_IMAG_RESIDUE: f64 = 1e-10;

/// Relative residual bound for the Lippmann–Schwinger linear solve.
pub const TOL_LS_RESIDUAL: f64 = 1e-10;

/// Condition-number estimate above which a linear solve is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Iteration cap for the Lorentzian peak fit.
pub const LORENTZIAN_MAX_ITERS: usize = 200;

/// Relative step below which the Lorentzian fit counts as converged.
pub const LORENTZIAN_STEP_TOL: f64 = 1e-10;

/// Reduced Planck constant in the crate's natural units.
pub const DEFAULT_HBAR: f64 = 1.0;

/// Validation tolerances for the state-constructor checks.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace_one: f64,
    pub eigenvalue_floor: f64,
    pub idempotent: f64,
    pub projector_rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: TOL_HERMITIAN,
            trace_one: TOL_TRACE_ONE,
            eigenvalue_floor: EIGENVALUE_FLOOR,
            idempotent: TOL_IDEMPOTENT,
            projector_rank: TOL_PROJECTOR_RANK,
        }
    }
}
