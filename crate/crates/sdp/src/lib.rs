//! Small dense semidefinite-programming engine for complex Hermitian
//! variables.
//!
//! Problems are stated over Hermitian PSD matrices with real-linear
//! equalities, intervals and extra affine matrix inequalities, then lowered
//! to a real symmetric cone program and solved by a homogeneous self-dual
//! interior-point method. Everything runs single-threaded, so identical input
//! gives bit-identical output.
//!
//! ```
//! use num_complex::Complex64;
//! use qbench_sdp::{solve, Functional, Sense, SdpConfig, SdpProblem, SolveStatus};
//!
//! // max Re X[0,1] subject to X ⪰ 0, X[0,0] = X[1,1] = 1
//! let mut p = SdpProblem::new();
//! let x = p.add_variable("X", 2);
//! let mut obj = Functional::new();
//! obj.add_re(x, 0, 1, 1.0);
//! p.set_objective(Sense::Maximize, obj);
//! for i in 0..2 {
//!     let mut f = Functional::new();
//!     f.add_re(x, i, i, 1.0);
//!     p.add_equality(format!("diag{i}"), f, 1.0);
//! }
//! let sol = solve(&p, &SdpConfig::default()).unwrap();
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert!((sol.primal_objective - 1.0).abs() < 1e-7);
//! ```

mod cone;
pub mod error;
mod ipm;
pub mod problem;
pub mod realify;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use error::SdpError;
pub use ipm::{IterationLog, SdpConfig, SolveStatus};
pub use problem::{
    EqualityConstraint, Functional, IntervalConstraint, MapEntry, MatrixMap, PsdConstraint, Sense,
    SdpProblem, Term, Variable,
};
pub use realify::{derealify, realify};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal objective in the user's sense.
    pub primal_objective: f64,
    /// Dual objective in the user's sense: a lower bound on the optimum of a
    /// minimisation (upper bound for maximisation) once the dual residual is
    /// small.
    pub dual_objective: f64,
    /// Optimal variable values, in declaration order.
    pub values: Vec<CMatrix>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Diagnostics of every iterate, in the internal minimisation sense.
    pub history: Vec<IterationLog>,
}

impl SdpSolution {
    pub fn value(&self, var: usize) -> &CMatrix {
        &self.values[var]
    }
}

/// Validates, lowers and solves `problem`.
///
/// Only malformed input is an `Err`; infeasibility and non-convergence are
/// reported through [`SolveStatus`].
pub fn solve(problem: &SdpProblem, config: &SdpConfig) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let cp = cone::lower(problem);
    log::debug!(
        "sdp: {} rows, psd blocks {:?}, {} orthant slacks",
        cp.rows.len(),
        cp.psd_dims,
        cp.lp_dim
    );
    let sol = ipm::Solver::new(&cp, *config).run();
    let nvars = problem.variables.len();
    let scale = if sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIterations {
        1.0 / sol.tau
    } else {
        1.0
    };
    let values = sol.x[..nvars].iter().map(|y| derealify(&(y * scale))).collect();
    Ok(SdpSolution {
        status: sol.status,
        primal_objective: cp.sign * sol.primal_objective,
        dual_objective: cp.sign * sol.dual_objective,
        values,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
        iterations: sol.iterations,
        history: sol.history,
    })
}
