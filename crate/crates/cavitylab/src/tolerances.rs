//! Numerical tolerances, collected in one place so tests and library code
//! agree on what "equal" means at each interface.

/// Hermiticity residual allowed for operators tagged Hermitian.
pub const HERMITICITY: f64 = 1e-12;
/// Unitarity residual allowed for circuit matrices.
pub const UNITARITY: f64 = 1e-10;
/// Isometry residual for the polariton map.
pub const ISOMETRY: f64 = 1e-12;
/// Norm deviation allowed for a vector that promises normalization.
pub const STATE_NORM: f64 = 1e-10;
/// Trace deviation allowed for a density matrix.
pub const DM_TRACE: f64 = 1e-8;
/// Hermiticity residual allowed for a density matrix.
pub const DM_HERMITICITY: f64 = 1e-10;
/// Lowest admissible density-matrix eigenvalue.
pub const DM_EIGENVALUE_FLOOR: f64 = -1e-8;
/// Trace-distance agreement between successive Lindblad step refinements.
pub const LINDBLAD_CONVERGENCE: f64 = 1e-6;
/// Maximum number of step halvings before the Lindblad integrator gives up.
pub const LINDBLAD_MAX_HALVINGS: u32 = 12;
/// Branch probability below which a forced measurement outcome is rejected.
pub const BRANCH_FLOOR: f64 = 1e-14;
/// Branch probability below which exhaustive simulation prunes a branch.
pub const BRANCH_PRUNE: f64 = 1e-12;
/// Minimum squared eigenvector overlap for the effective-coupling fit.
pub const FIT_OVERLAP_MIN: f64 = 0.5;
/// Reconstruction error allowed for the controlled-U decomposition.
pub const RECONSTRUCTION: f64 = 1e-8;
/// Default cap on the total Hilbert-space dimension of dense builds.
pub const DEFAULT_DIM_CAP: usize = 20_000;
