//! Truncated Fock space: operators, states and state functionals.
//!
//! Conventions: `x = (a + a†)/√2`, `p = (a − a†)/(i√2)` so the vacuum has
//! `Var x = Var p = 1/2`, and phase rotations are `U_θ = exp(−iθ n)`, i.e.
//! `[U_θ]_jj = e^{−iθj}`. Flipping this sign would silently transpose every
//! standard-form index, so all rotations in the crate go through [`rotation`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{self, c64, CMatrix, CVector};

/// Operators on the first `D` Fock levels.
pub type FockOperator = CMatrix;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;

/// Hermitian, PSD, unit-trace matrix on a truncated Fock space.
///
/// Sub-normalised matrices (trace below one because probability leaked past
/// the cutoff) are admitted by [`DensityMatrix::new_subnormalized`], which
/// records the missing weight in [`DensityMatrix::deficit`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
    deficit: f64,
}

impl DensityMatrix {
    /// Validates a unit-trace state.
    pub fn new(data: CMatrix) -> Result<Self> {
        let rho = Self::checked(data)?;
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(CoreError::Trace {
                trace: tr,
                deviation: (tr - 1.0).abs(),
            });
        }
        Ok(rho)
    }

    /// Validates a state whose trace may fall short of one.
    pub fn new_subnormalized(data: CMatrix) -> Result<Self> {
        let mut rho = Self::checked(data)?;
        let tr = rho.trace();
        if tr > 1.0 + TRACE_TOL || tr <= 0.0 {
            return Err(CoreError::Trace {
                trace: tr,
                deviation: (tr - 1.0).abs(),
            });
        }
        rho.deficit = (1.0 - tr).max(0.0);
        Ok(rho)
    }

    fn checked(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(CoreError::Mismatch {
                what: "density matrix must be square".into(),
                left: data.nrows(),
                right: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(CoreError::Dimension { min: 1, got: 0 });
        }
        let deviation = linalg::hermitian_deviation(&data);
        if deviation > HERMITIAN_TOL {
            return Err(CoreError::NotHermitian { deviation });
        }
        let data = linalg::hermitian_part(&data);
        let (vals, vecs) = linalg::eigh(&data);
        let min = vals[0];
        if min < -PSD_TOL {
            return Err(CoreError::NotPsd {
                min_eigenvalue: min,
            });
        }
        let data = if min < 0.0 {
            log::debug!("clipping eigenvalue {min:e} of a density matrix to zero");
            linalg::spectral_map(&vals, &vecs, |l| l.max(0.0))
        } else {
            data
        };
        Ok(DensityMatrix { data, deficit: 0.0 })
    }

    /// `|ψ⟩⟨ψ|`, sub-normalised if `‖ψ‖ < 1`.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let data = psi * psi.adjoint();
        Self::new_subnormalized(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// Weight missing from the trace (0 for normalised states).
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn is_subnormalized(&self) -> bool {
        self.deficit > 0.0
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    /// `Re Tr(ρ O)`.
    pub fn expect(&self, op: &CMatrix) -> f64 {
        let n = self.dim();
        let mut s = c64(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += self.data[(i, j)] * op[(j, i)];
            }
        }
        s.re
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.data[(n, n)].re).sum()
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> DensityMatrix {
        let tr = self.trace();
        DensityMatrix {
            data: &self.data / c64(tr, 0.0),
            deficit: 0.0,
        }
    }

    /// Projection onto the first `d` levels (sub-normalised), or zero
    /// padding when `d` exceeds the current dimension.
    pub fn resized(&self, d: usize) -> DensityMatrix {
        let n = self.dim();
        let data = CMatrix::from_fn(d, d, |i, j| {
            if i < n && j < n {
                self.data[(i, j)]
            } else {
                c64(0.0, 0.0)
            }
        });
        let tr = data.trace().re;
        DensityMatrix {
            data,
            deficit: (1.0 - tr).max(0.0),
        }
    }

    /// `U ρ U†` for unitary `U`.
    pub fn conjugated(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix {
            data: linalg::hermitian_part(&(u * &self.data * u.adjoint())),
            deficit: self.deficit,
        }
    }
}

/// `diag(0, 1, …, D−1)`
pub fn number_operator(d: usize) -> FockOperator {
    CMatrix::from_fn(d, d, |i, j| if i == j { c64(i as f64, 0.0) } else { c64(0.0, 0.0) })
}

/// Annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(d: usize) -> FockOperator {
    CMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            c64((j as f64).sqrt(), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// `exp(−iθ n)`
pub fn rotation(theta: f64, d: usize) -> FockOperator {
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -theta * i as f64)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// `(x, p)` on the first `D` levels.
pub fn quadratures(d: usize) -> Result<(FockOperator, FockOperator)> {
    if d < 2 {
        return Err(CoreError::Dimension { min: 2, got: d });
    }
    let a = annihilation(d);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * c64(s, 0.0);
    let p = (&a - &ad) * c64(0.0, -s);
    Ok((x, p))
}

/// `P x² P` and `P p² P`: the squared quadratures of the untruncated space
/// compressed to the first `D` levels. They differ from the squares of the
/// truncated matrices in the last diagonal entry.
pub fn quadrature_squares(d: usize) -> Result<(FockOperator, FockOperator)> {
    if d < 2 {
        return Err(CoreError::Dimension { min: 2, got: d });
    }
    let (x, p) = quadratures(d + 1)?;
    let x2 = (&x * &x).view((0, 0), (d, d)).into_owned();
    let p2 = (&p * &p).view((0, 0), (d, d)).into_owned();
    Ok((x2, p2))
}

/// `x cos φ + p sin φ = U_φ† x U_φ`
pub fn rotated_quadrature(phi: f64, d: usize) -> Result<FockOperator> {
    let (x, p) = quadratures(d)?;
    Ok(x * c64(phi.cos(), 0.0) + p * c64(phi.sin(), 0.0))
}

/// Raw quadrature moments `⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub x: f64,
    pub p: f64,
    pub x2: f64,
    pub p2: f64,
}

impl QuadratureMoments {
    pub fn var_x(&self) -> f64 {
        self.x2 - self.x * self.x
    }

    pub fn var_p(&self) -> f64 {
        self.p2 - self.p * self.p
    }

    /// `⟨n⟩ = (⟨x²⟩ + ⟨p²⟩ − 1)/2`
    pub fn mean_photon_number(&self) -> f64 {
        (self.x2 + self.p2 - 1.0) / 2.0
    }
}

pub fn quadrature_moments(rho: &DensityMatrix) -> Result<QuadratureMoments> {
    let d = rho.dim();
    let (x, p) = quadratures(d)?;
    let (x2, p2) = quadrature_squares(d)?;
    Ok(QuadratureMoments {
        x: rho.expect(&x),
        p: rho.expect(&p),
        x2: rho.expect(&x2),
        p2: rho.expect(&p2),
    })
}

/// First `rows` entries of the displaced Fock states `D(α)|n⟩` for
/// `n = 0..cols`, as columns. Exact: the recursion
/// `D(α)|n⟩ = (a† − α*) D(α)|n−1⟩ / √n` only moves amplitude upwards.
pub fn displacement_columns(alpha: Complex64, rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    if rows == 0 || cols == 0 {
        return out;
    }
    // D(α)|0⟩ = |α⟩
    let mut amp = c64((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..rows {
        if k > 0 {
            amp = amp * alpha / (k as f64).sqrt();
        }
        out[(k, 0)] = amp;
    }
    for n in 1..cols {
        let inv = 1.0 / (n as f64).sqrt();
        for k in 0..rows {
            let raised = if k > 0 {
                out[(k - 1, n - 1)] * (k as f64).sqrt()
            } else {
                c64(0.0, 0.0)
            };
            out[(k, n)] = (raised - alpha.conj() * out[(k, n - 1)]) * inv;
        }
    }
    out
}

/// Truncated displacement operator `P D(α) P`.
pub fn displacement(alpha: Complex64, d: usize) -> FockOperator {
    displacement_columns(alpha, d, d)
}

fn guard(alpha: Complex64, d: usize) -> Result<()> {
    let limit = d as f64 / 4.0;
    if alpha.norm_sqr() > limit {
        let amps = displacement_columns(alpha, d, 1);
        let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        return Err(CoreError::Truncation {
            norm_sqr: alpha.norm_sqr(),
            limit,
            deficit: 1.0 - kept,
        });
    }
    Ok(())
}

/// Exact Fock amplitudes `e^{−|α|²/2} αⁿ/√n!` of a coherent state; the
/// weight beyond the cutoff is left out, not renormalised.
pub fn coherent_vector(alpha: Complex64, d: usize) -> Result<CVector> {
    if d == 0 {
        return Err(CoreError::Dimension { min: 1, got: 0 });
    }
    guard(alpha, d)?;
    Ok(displacement_columns(alpha, d, 1).column(0).into_owned())
}

pub fn coherent_state(alpha: Complex64, d: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&coherent_vector(alpha, d)?)
}

/// Thermal state with mean photon number `nbar`, truncated.
pub fn thermal_state(nbar: f64, d: usize) -> Result<DensityMatrix> {
    if nbar < 0.0 || !nbar.is_finite() {
        return Err(CoreError::Invalid(format!("thermal occupation {nbar} must be nonnegative")));
    }
    let q = nbar / (1.0 + nbar);
    let data = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c64(q.powi(i as i32) / (1.0 + nbar), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    DensityMatrix::new_subnormalized(data)
}

/// Displaced thermal state `D(α) ρ_th(excess) D(α)†`: quadrature variances
/// `(1 + 2·excess)/2`, mean photon number `|α|² + excess`.
pub fn noisy_coherent(alpha: Complex64, excess: f64, d: usize) -> Result<DensityMatrix> {
    if excess < 0.0 || !excess.is_finite() {
        return Err(CoreError::Invalid(format!("excess noise {excess} must be nonnegative")));
    }
    guard(alpha, d)?;
    if excess == 0.0 {
        return coherent_state(alpha, d);
    }
    let q = excess / (1.0 + excess);
    // Number of thermal terms needed for a tail below 1e-14.
    let terms = ((1e-14f64).ln() / q.ln()).ceil().max(1.0) as usize + 1;
    let cols = displacement_columns(alpha, d, terms);
    let mut data = CMatrix::zeros(d, d);
    let mut pn = 1.0 / (1.0 + excess);
    for n in 0..terms {
        let col = cols.column(n);
        for j in 0..d {
            let cj = col[j].conj() * pn;
            for i in 0..d {
                data[(i, j)] += col[i] * cj;
            }
        }
        pn *= q;
    }
    DensityMatrix::new_subnormalized(data)
}

/// Displaced squeezed thermal state `D(α) S(r) ρ_th(nbar) S(r)† D(α)†` with
/// `S(r) = exp(r(a² − a†²)/2)`, which scales `x` by `e^{−r}` and `p` by
/// `e^{r}`. Squeezing is applied in an enlarged space and then projected.
pub fn displaced_squeezed_thermal(alpha: Complex64, nbar: f64, r: f64, d: usize) -> Result<DensityMatrix> {
    guard(alpha, d)?;
    let big = (2 * d).max(d + 40);
    let th = thermal_state(nbar, big)?;
    let a = annihilation(big);
    let ad = a.adjoint();
    let k = (&a * &a - &ad * &ad) * c64(r / 2.0, 0.0);
    // S = exp(K) = exp(−iH) with H = iK Hermitian
    let h = linalg::hermitian_part(&(k * c64(0.0, 1.0)));
    let s = linalg::unitary_exp(&h);
    let sigma = &s * th.matrix() * s.adjoint();
    let disp = displacement_columns(alpha, d, big);
    let data = linalg::hermitian_part(&(&disp * sigma * disp.adjoint()));
    DensityMatrix::new_subnormalized(data)
}

/// Gaussian state with the given quadrature means and (uncorrelated)
/// variances. Requires `var_x · var_p ≥ 1/4`.
pub fn gaussian_state(mean_x: f64, mean_p: f64, var_x: f64, var_p: f64, d: usize) -> Result<DensityMatrix> {
    let prod = var_x * var_p;
    if !(var_x > 0.0 && var_p > 0.0) || prod < 0.25 - 1e-12 {
        return Err(CoreError::Invalid(format!(
            "variances ({var_x}, {var_p}) violate the uncertainty relation"
        )));
    }
    let nbar = (prod.sqrt() - 0.5).max(0.0);
    let r = -(var_x / var_p).ln() / 4.0;
    let alpha = c64(mean_x, mean_p) / std::f64::consts::SQRT_2;
    displaced_squeezed_thermal(alpha, nbar, r, d)
}

/// `ρ_k = U^k ρ_0 U^{−k}` for `U = exp(−2πi n/M)`, `k = 0..M`.
pub fn rotation_ensemble(rho0: &DensityMatrix, m: usize) -> Vec<DensityMatrix> {
    let theta = 2.0 * std::f64::consts::PI / m as f64;
    (0..m)
        .map(|k| rho0.conjugated(&rotation(theta * k as f64, rho0.dim())))
        .collect()
}

/// Largest deviation `max_k ‖ρ_k − U^k ρ_0 U^{−k}‖_max` from a rotation
/// ensemble with `θ = 2π/M`.
pub fn rotation_ensemble_deviation(states: &[DensityMatrix]) -> f64 {
    let Some(first) = states.first() else {
        return 0.0;
    };
    rotation_ensemble(first, states.len())
        .iter()
        .zip(states)
        .map(|(a, b)| if a.dim() == b.dim() { linalg::max_abs(&(a.matrix() - b.matrix())) } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// Uhlmann fidelity `(Tr √(√ρ0 ρ1 √ρ0))²`, evaluated as `‖B0† B1‖₁²` with
/// `ρ_i = B_i B_i†`.
pub fn fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(CoreError::Mismatch {
            what: "fidelity arguments".into(),
            left: rho0.dim(),
            right: rho1.dim(),
        });
    }
    Ok(fidelity_matrices(rho0.matrix(), rho1.matrix()))
}

pub(crate) fn fidelity_matrices(a: &CMatrix, b: &CMatrix) -> f64 {
    let (b0, _) = linalg::psd_factor(a, 0.0);
    let (b1, _) = linalg::psd_factor(b, 0.0);
    if b0.ncols() == 0 || b1.ncols() == 0 {
        return 0.0;
    }
    let s = linalg::trace_norm(&(b0.adjoint() * b1));
    s * s
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use proptest::prelude::*;

    fn dm(v: &[f64]) -> DensityMatrix {
        let d = v.len();
        DensityMatrix::new(CMatrix::from_fn(d, d, |i, j| if i == j { c64(v[i], 0.0) } else { c64(0.0, 0.0) }))
            .unwrap()
    }

    #[test]
    fn number_operator_examples() {
        assert_eq!(number_operator(1), CMatrix::from_element(1, 1, c64(0.0, 0.0)));
        let n3 = number_operator(3);
        for i in 0..3 {
            assert_eq!(n3[(i, i)], c64(i as f64, 0.0));
        }
        let n30 = number_operator(30);
        assert_eq!(n30[(29, 29)].re, 29.0);
        assert_eq!(n30.nrows(), 30);
    }

    #[test]
    fn rotation_examples() {
        assert!(max_abs(&(rotation(0.0, 5) - CMatrix::identity(5, 5))) == 0.0);
        let u = rotation(std::f64::consts::PI, 2);
        assert!((u[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - c64(-1.0, 0.0)).norm() < 1e-15);
        let u4 = rotation(2.0 * std::f64::consts::PI / 4.0, 12);
        let p = &u4 * &u4 * &u4 * &u4;
        assert!(max_abs(&(p - CMatrix::identity(12, 12))) < 1e-12);
        assert!(max_abs(&(&u4 * u4.adjoint() - CMatrix::identity(12, 12))) < 1e-12);
    }

    #[test]
    fn quadrature_examples() {
        assert!(matches!(quadratures(1), Err(CoreError::Dimension { .. })));
        let (x, p) = quadratures(2).unwrap();
        let vac = dm(&[1.0, 0.0]);
        let (x2, p2) = quadrature_squares(2).unwrap();
        assert!((vac.expect(&x2) - 0.5).abs() < 1e-12);
        assert!((vac.expect(&p2) - 0.5).abs() < 1e-12);
        assert!(linalg::hermitian_deviation(&x) == 0.0 && linalg::hermitian_deviation(&p) == 0.0);
        // truncated squares agree with the compressed ones away from the top
        assert!(((&x * &x)[(0, 0)] - x2[(0, 0)]).norm() < 1e-15);

        let alpha = c64(0.5, 0.0);
        let coh = coherent_state(alpha, 30).unwrap();
        let (x30, p30) = quadratures(30).unwrap();
        assert!((coh.expect(&x30) - 2f64.sqrt() * 0.5).abs() < 1e-8);
        assert!(coh.expect(&p30).abs() < 1e-8);

        let (x8, p8) = quadratures(8).unwrap();
        let comm = &x8 * &p8 - &p8 * &x8;
        assert!((comm[(0, 0)] - c64(0.0, 1.0)).norm() < 1e-12);
        for n in 0..7 {
            assert!((comm[(n, n)] - c64(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_examples() {
        let vac = coherent_state(c64(0.0, 0.0), 6).unwrap();
        assert!((vac.matrix()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(vac.trace() == 1.0);

        let coh = coherent_state(c64(0.5, 0.0), 30).unwrap();
        assert!((coh.mean_photon_number() - 0.25).abs() < 1e-8);
        assert!(coh.deficit() <= 1e-8);

        let a = coherent_vector(c64(0.5, 0.0), 30).unwrap();
        let b = coherent_vector(c64(-0.5, 0.0), 30).unwrap();
        let ov = a.dotc(&b).norm_sqr();
        assert!((ov - (-1.0f64).exp()).abs() < 1e-8);

        let err = coherent_state(c64(2.0, 0.0), 8).unwrap_err();
        assert!(matches!(err, CoreError::Truncation { .. }));
    }

    #[test]
    fn displacement_matches_matrix_exponential() {
        let alpha = c64(0.4, -0.3);
        let d = 10;
        let big = 60;
        let a = annihilation(big);
        let gen = &a.adjoint() * alpha - &a * alpha.conj();
        let h = linalg::hermitian_part(&(gen * c64(0.0, 1.0)));
        let full = linalg::unitary_exp(&h);
        let exact = displacement(alpha, d);
        assert!(max_abs(&(full.view((0, 0), (d, d)).into_owned() - exact)) < 1e-12);
    }

    #[test]
    fn noisy_coherent_moments() {
        let alpha = c64(0.3, -0.6);
        let excess = 0.2;
        let rho = noisy_coherent(alpha, excess, 30).unwrap();
        let m = quadrature_moments(&rho).unwrap();
        assert!((m.var_x() - (1.0 + 2.0 * excess) / 2.0).abs() < 1e-6);
        assert!((m.var_p() - (1.0 + 2.0 * excess) / 2.0).abs() < 1e-6);
        assert!((rho.mean_photon_number() - (alpha.norm_sqr() + excess)).abs() < 1e-6);
        assert!((m.x - 2f64.sqrt() * alpha.re).abs() < 1e-8);

        let plain = coherent_state(alpha, 30).unwrap();
        assert_eq!(noisy_coherent(alpha, 0.0, 30).unwrap(), plain);

        // the low-photon regime of the memory experiment
        let rho = noisy_coherent(c64(0.0, 0.6f64.sqrt()), 0.07, 30).unwrap();
        assert!((rho.mean_photon_number() - 0.67).abs() < 1e-6);
    }

    #[test]
    fn gaussian_state_reproduces_moments() {
        let rho = gaussian_state(0.01, -0.95, 0.57 - 0.0001, 1.41 - 0.9025, 30).unwrap();
        let m = quadrature_moments(&rho).unwrap();
        assert!((m.x - 0.01).abs() < 1e-6);
        assert!((m.p + 0.95).abs() < 1e-6);
        assert!((m.x2 - 0.57).abs() < 1e-6);
        assert!((m.p2 - 1.41).abs() < 1e-6);
    }

    #[test]
    fn fidelity_examples() {
        let a = coherent_state(c64(0.5, 0.0), 30).unwrap();
        let b = coherent_state(c64(-0.5, 0.0), 30).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        assert!((fidelity(&a, &b).unwrap() - (-1.0f64).exp()).abs() < 1e-8);
        let d = 5;
        let vac = dm(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let mixed = dm(&[0.2; 5]);
        assert!((fidelity(&vac, &mixed).unwrap() - 1.0 / d as f64).abs() < 1e-12);
        assert!(fidelity(&vac, &dm(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.1, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(DensityMatrix::new(bad), Err(CoreError::NotHermitian { .. })));
        let neg = CMatrix::from_row_slice(2, 2, &[c64(1.1, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-0.1, 0.0)]);
        assert!(matches!(DensityMatrix::new(neg), Err(CoreError::NotPsd { .. })));
        let tiny = CMatrix::from_row_slice(2, 2, &[c64(1.0 + 1e-10, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1e-10, 0.0)]);
        let ok = DensityMatrix::new(tiny).unwrap();
        assert!(linalg::min_eigenvalue(ok.matrix()) >= 0.0);
        let half = CMatrix::from_row_slice(2, 2, &[c64(0.5, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(DensityMatrix::new(half.clone()), Err(CoreError::Trace { .. })));
        let sub = DensityMatrix::new_subnormalized(half).unwrap();
        assert!((sub.deficit() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rotations_compose(t in -7.0f64..7.0, s in -7.0f64..7.0, d in 1usize..20) {
            let lhs = rotation(t, d) * rotation(s, d);
            prop_assert!(max_abs(&(lhs - rotation(t + s, d))) < 1e-12);
        }

        #[test]
        fn fidelity_symmetric_and_ancilla_invariant(
            re0 in -0.8f64..0.8, im0 in -0.8f64..0.8,
            re1 in -0.8f64..0.8, im1 in -0.8f64..0.8,
            n0 in 0.0f64..0.4, n1 in 0.0f64..0.4,
        ) {
            let d = 12;
            let r0 = noisy_coherent(c64(re0, im0), n0, d).unwrap().normalized();
            let r1 = noisy_coherent(c64(re1, im1), n1, d).unwrap().normalized();
            let f01 = fidelity(&r0, &r1).unwrap();
            let f10 = fidelity(&r1, &r0).unwrap();
            prop_assert!((f01 - f10).abs() < 1e-9);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&f01));
            let sigma = CMatrix::from_row_slice(2, 2, &[c64(0.7, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.3, 0.0)]);
            let a = DensityMatrix::new(kron(r0.matrix(), &sigma)).unwrap();
            let b = DensityMatrix::new(kron(r1.matrix(), &sigma)).unwrap();
            prop_assert!((fidelity(&a, &b).unwrap() - f01).abs() < 1e-9);
        }
    }
}
