//! Standard-form identities checked against brute force on a single
//! bipartite matrix.

use qbench_core::bipartite::BipartiteBlockMatrix;
use qbench_core::blocksym::{from_standard_form, pt_rearrange, symmetry_check, to_standard_form};
use qbench_core::linalg::{eigvalsh, max_abs, trace_norm_hermitian};
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct StdformReport {
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    pub symmetry_deviation: f64,
    pub round_trip_error: f64,
    /// `max |Σ_k E_k − τ_00|`
    pub sum_rule_error: f64,
    /// Largest gap between the sorted spectra of `⊕E_k` and `τ`.
    pub spectrum_error: f64,
    /// `|Σ_k ‖Ẽ_k‖₁ − ‖τ^{T_A}‖₁|`
    pub trace_norm_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn stdform_check(tau: &BipartiteBlockMatrix, tolerance: f64) -> Result<StdformReport> {
    let symmetry_deviation = symmetry_check(tau);
    let sf = to_standard_form(tau)?;
    let back = from_standard_form(&sf);
    let round_trip_error = tau
        .blocks()
        .iter()
        .zip(back.blocks())
        .map(|(a, b)| max_abs(&(a - b)))
        .fold(0.0, f64::max);
    let sum_rule_error = max_abs(&(sf.sum() - tau.block(0, 0)));
    let spectrum_error = sorted(eigvalsh(&tau.to_dense()))
        .iter()
        .zip(sorted(eigvalsh(&sf.direct_sum())))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let lhs: f64 = pt_rearrange(&sf).etilde.iter().map(trace_norm_hermitian).sum();
    let rhs = trace_norm_hermitian(&tau.partial_transpose().to_dense());
    let trace_norm_error = (lhs - rhs).abs();
    let passed = [round_trip_error, sum_rule_error, spectrum_error, trace_norm_error]
        .iter()
        .all(|&e| e <= tolerance);
    Ok(StdformReport {
        m: tau.m(),
        d: tau.d(),
        symmetry_deviation,
        round_trip_error,
        sum_rule_error,
        spectrum_error,
        trace_norm_error,
        tolerance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbench_core::blocksym::twirl;
    use qbench_core::fock::{coherent_vector, rotation};
    use qbench_core::linalg::c64;

    #[test]
    fn coherent_ring_passes() {
        let m = 4;
        let v0 = coherent_vector(c64(0.7, 0.2), 8).unwrap();
        let states: Vec<_> = (0..m)
            .map(|k| rotation(2.0 * std::f64::consts::PI * k as f64 / m as f64, 8) * &v0)
            .collect();
        let tau = twirl(&BipartiteBlockMatrix::from_pure_ensemble(&states).unwrap());
        let r = stdform_check(&tau, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.symmetry_deviation < 1e-12);
    }
}
