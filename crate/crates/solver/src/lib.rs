//! Small exact solvers for dense linear and mixed-binary programs.
//!
//! [`solve_lp`] is a bounded primal simplex working on a condensed tableau
//! (rows for basic variables, columns for non-basic ones). [`solve_milp`]
//! runs branch-and-bound on top of it, and [`brute_force_reference`]
//! enumerates every binary assignment for verification.

mod error;
mod milp;
mod model;
mod simplex;

pub use error::SolverError;
pub use milp::{brute_force_reference, solve_milp, MilpModel, MilpSolution, MAX_BRUTE_FORCE_BINARIES};
pub use model::{LpModel, Row, Sense, VarId};
pub use simplex::{solve_lp, solve_lp_with_bounds, LpSolution, Status};

/// Primal feasibility tolerance used inside the simplex.
pub const FEAS_TOL: f64 = 1e-9;
/// Tolerance promised on returned solutions.
pub const REPORT_TOL: f64 = 1e-7;
/// Integrality tolerance for binaries.
pub const INT_TOL: f64 = 1e-6;
/// Absolute optimality gap of branch-and-bound.
pub const ABS_GAP: f64 = 1e-6;
