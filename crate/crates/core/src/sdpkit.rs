//! Small helpers for stating the crate's problems in the solver's terms.

use num_complex::Complex64;
use qbench_sdp::{solve, Functional, SdpConfig, SdpProblem, SdpSolution, SolveStatus};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, CMatrix};

/// Adds `Re Tr(C · X[ro.., co..])` for a `C` of matching (transposed) shape.
pub fn add_sub_inner(f: &mut Functional, var: usize, ro: usize, co: usize, coeff: &CMatrix) {
    // Tr(C Y) = Σ_{a,b} C[b,a] Y[a,b] with Y = X[ro.., co..]
    for a in 0..coeff.ncols() {
        for b in 0..coeff.nrows() {
            let w = coeff[(b, a)];
            if w != c64(0.0, 0.0) {
                f.add(var, ro + a, co + b, w);
            }
        }
    }
}

/// Functional whose value is the imaginary part of the complex quantity
/// represented by `f`.
pub fn imag_of(f: &Functional) -> Functional {
    f.scaled_complex(c64(0.0, -1.0))
}

trait ScaledComplex {
    fn scaled_complex(&self, s: Complex64) -> Functional;
}

impl ScaledComplex for Functional {
    fn scaled_complex(&self, s: Complex64) -> Functional {
        let mut out = Functional::new();
        for t in &self.terms {
            out.add(t.var, t.row, t.col, t.weight * s);
        }
        out
    }
}

/// Multiplies the complex quantity represented by `f` by `s`.
pub fn rotate(f: &Functional, s: Complex64) -> Functional {
    f.scaled_complex(s)
}

/// Solves and converts a non-optimal status into an error naming `what`.
pub fn solve_optimal(p: &SdpProblem, config: &SdpConfig, what: &str) -> Result<SdpSolution> {
    let sol = solve(p, config)?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::MaxIterations
            if sol.primal_residual.max(sol.dual_residual) < 1e-6 && sol.gap.abs() < 1e-5 =>
        {
            log::warn!(
                "{what}: accepting stalled iterate (residuals {:.1e}/{:.1e}, gap {:.1e})",
                sol.primal_residual,
                sol.dual_residual,
                sol.gap
            );
            Ok(sol)
        }
        status => Err(CoreError::Solver {
            status,
            detail: format!(
                "{what}: residuals {:.1e}/{:.1e}, gap {:.1e} after {} iterations",
                sol.primal_residual, sol.dual_residual, sol.gap, sol.iterations
            ),
        }),
    }
}
