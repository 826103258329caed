//! Phase-symmetric bipartite matrices and their block-diagonal standard form.
//!
//! A matrix is `M`-fold symmetric when `U τ_kl U† = τ_{k+1,l+1}` (indices mod
//! `M`) for `U = exp(−2πi n/M)`. Such a matrix is unitarily equivalent to
//! `⊕_k E_k` with
//!
//! `[E_k]_jl = (1/M²) Σ_{m,n} ω^{m(j−k) + n(k−l)} [τ_mn]_jl`,  `ω = e^{2πi/M}`,
//!
//! and its partial transpose is equivalent to `⊕_k Ẽ_k` where
//! `[Ẽ_k]_jl = [E_{j+l−k}]_jl`. Blocks follow the storage convention of
//! [`BipartiteBlockMatrix`].

use num_complex::Complex64;

use crate::bipartite::BipartiteBlockMatrix;
use crate::error::{CoreError, Result};
use crate::fock::{rotation, PSD_TOL};
use crate::linalg::{self, c64, CMatrix};

/// Tolerance of [`symmetry_check`] accepted by [`to_standard_form`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// `i mod m` in `0..m` for any signed `i`.
#[inline]
pub fn modm(i: i64, m: usize) -> usize {
    i.rem_euclid(m as i64) as usize
}

/// `ω^p` for `ω = e^{2πi/M}`, with the exponent reduced first so large
/// products of indices lose no accuracy.
#[inline]
pub fn omega_pow(p: i64, m: usize) -> Complex64 {
    let r = modm(p, m);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / m as f64)
}

fn rotation_powers(m: usize, d: usize) -> Vec<CMatrix> {
    let theta = 2.0 * std::f64::consts::PI / m as f64;
    (0..m).map(|s| rotation(theta * s as f64, d)).collect()
}

/// Projection onto the symmetric sector,
/// `τ'_kl = (1/M) Σ_s U^s τ_{k−s,l−s} U^{−s}`.
pub fn twirl(tau: &BipartiteBlockMatrix) -> BipartiteBlockMatrix {
    let (m, d) = (tau.m(), tau.d());
    let powers = rotation_powers(m, d);
    let mut out = BipartiteBlockMatrix::zeros(m, d);
    let inv = 1.0 / m as f64;
    for k in 0..m {
        for l in 0..m {
            let acc = out.block_mut(k, l);
            for (s, _) in powers.iter().enumerate() {
                let src = tau.block(modm(k as i64 - s as i64, m), modm(l as i64 - s as i64, m));
                // U^s is diagonal: entry (j,j') picks up ω^{−s(j−j')}
                for jp in 0..d {
                    for j in 0..d {
                        acc[(j, jp)] += src[(j, jp)] * omega_pow(-(s as i64) * (j as i64 - jp as i64), m) * inv;
                    }
                }
            }
        }
    }
    out
}

/// `max_{k,l} ‖U τ_kl U† − τ_{k+1,l+1}‖_max`.
pub fn symmetry_check(tau: &BipartiteBlockMatrix) -> f64 {
    let (m, d) = (tau.m(), tau.d());
    if m == 1 {
        return 0.0;
    }
    let mut dev: f64 = 0.0;
    for k in 0..m {
        for l in 0..m {
            let a = tau.block(k, l);
            let b = tau.block((k + 1) % m, (l + 1) % m);
            for jp in 0..d {
                for j in 0..d {
                    let rotated = a[(j, jp)] * omega_pow(-(j as i64 - jp as i64), m);
                    dev = dev.max((rotated - b[(j, jp)]).norm());
                }
            }
        }
    }
    dev
}

/// The blocks `E_0 … E_{M−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardForm {
    pub m: usize,
    pub d: usize,
    pub e: Vec<CMatrix>,
}

/// The rearranged blocks `Ẽ_0 … Ẽ_{M−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PTStandardForm {
    pub m: usize,
    pub d: usize,
    pub etilde: Vec<CMatrix>,
}

impl StandardForm {
    pub fn new(e: Vec<CMatrix>) -> Result<Self> {
        let m = e.len();
        if m == 0 {
            return Err(CoreError::Dimension { min: 1, got: 0 });
        }
        let d = e[0].nrows();
        if let Some(b) = e.iter().find(|b| b.shape() != (d, d)) {
            return Err(CoreError::Mismatch {
                what: "standard-form block shape".into(),
                left: b.nrows().max(b.ncols()),
                right: d,
            });
        }
        Ok(StandardForm { m, d, e })
    }

    /// `Σ_k E_k`, which equals `τ_00`.
    pub fn sum(&self) -> CMatrix {
        self.e.iter().fold(CMatrix::zeros(self.d, self.d), |acc, b| acc + b)
    }

    pub fn trace(&self) -> f64 {
        self.e.iter().map(|b| b.trace().re).sum()
    }

    /// `⊕_k E_k`, unitarily equivalent to the dense operator.
    pub fn direct_sum(&self) -> CMatrix {
        let (m, d) = (self.m, self.d);
        let mut out = CMatrix::zeros(m * d, m * d);
        for (k, b) in self.e.iter().enumerate() {
            out.view_mut((k * d, k * d), (d, d)).copy_from(b);
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.e
            .iter()
            .map(linalg::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Standard form of a symmetric matrix.
pub fn to_standard_form(tau: &BipartiteBlockMatrix) -> Result<StandardForm> {
    let deviation = symmetry_check(tau);
    if deviation > SYMMETRY_TOL {
        return Err(CoreError::Symmetry { deviation });
    }
    Ok(standard_form_projected(tau))
}

/// The defining sum without the symmetry check. For a non-symmetric input
/// this is the standard form of its twirl.
pub fn standard_form_projected(tau: &BipartiteBlockMatrix) -> StandardForm {
    let (m, d) = (tau.m(), tau.d());
    let scale = 1.0 / (m * m) as f64;
    let mut e = vec![CMatrix::zeros(d, d); m];
    for (k, ek) in e.iter_mut().enumerate() {
        for a in 0..m {
            for b in 0..m {
                let blk = tau.block(a, b);
                for l in 0..d {
                    for j in 0..d {
                        let p = a as i64 * (j as i64 - k as i64) + b as i64 * (k as i64 - l as i64);
                        ek[(j, l)] += blk[(j, l)] * omega_pow(p, m) * scale;
                    }
                }
            }
        }
    }
    StandardForm { m, d, e }
}

/// `[τ_ik]_jl = Σ_m ω^{m(i−k) + kl − ij} [E_m]_jl`.
pub fn from_standard_form(sf: &StandardForm) -> BipartiteBlockMatrix {
    let (m, d) = (sf.m, sf.d);
    let mut out = BipartiteBlockMatrix::zeros(m, d);
    for i in 0..m {
        for k in 0..m {
            let blk = out.block_mut(i, k);
            for (mm, em) in sf.e.iter().enumerate() {
                for l in 0..d {
                    for j in 0..d {
                        let p = mm as i64 * (i as i64 - k as i64) + (k * l) as i64 - (i * j) as i64;
                        blk[(j, l)] += em[(j, l)] * omega_pow(p, m);
                    }
                }
            }
        }
    }
    out
}

/// `[Ẽ_k]_jl = [E_{(j+l−k) mod M}]_jl`.
pub fn pt_rearrange(sf: &StandardForm) -> PTStandardForm {
    let (m, d) = (sf.m, sf.d);
    let etilde = (0..m)
        .map(|k| CMatrix::from_fn(d, d, |j, l| sf.e[modm((j + l) as i64 - k as i64, m)][(j, l)]))
        .collect();
    PTStandardForm { m, d, etilde }
}

/// Inverse of [`pt_rearrange`]: `[E_m]_jl = [Ẽ_{(j+l−m) mod M}]_jl`.
pub fn pt_restore(pt: &PTStandardForm) -> StandardForm {
    let (m, d) = (pt.m, pt.d);
    let e = (0..m)
        .map(|k| CMatrix::from_fn(d, d, |j, l| pt.etilde[modm((j + l) as i64 - k as i64, m)][(j, l)]))
        .collect();
    StandardForm { m, d, e }
}

/// `(Σ_k ‖Ẽ_k‖₁ − Σ_k Tr E_k)/2`.
pub fn negativity_stform(sf: &StandardForm) -> Result<f64> {
    let min = sf.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(CoreError::NotPsd { min_eigenvalue: min });
    }
    let pt = pt_rearrange(sf);
    let norm: f64 = pt.etilde.iter().map(linalg::trace_norm_hermitian).sum();
    Ok(((norm - sf.trace()) / 2.0).max(0.0))
}

/// `ρ_A = Tr_B τ`: entry `(k,l)` is `Tr τ_kl / M`. For the matrix built
/// from pure states `ψ_k` this is `⟨ψ_l|ψ_k⟩/M`.
pub fn gram_of(tau: &BipartiteBlockMatrix) -> CMatrix {
    tau.reduced_a()
}

/// `g_d = Tr τ_{d,0} = Σ_{m,j} ω^{(m−j)d} [E_m]_jj`, for `d = 0..M`. The
/// block traces of a symmetric matrix depend only on `i−k`:
/// `Tr τ_ik = g_{i−k}` and `g_{−d} = conj(g_d)`.
pub fn block_trace_coefficients(sf: &StandardForm) -> Vec<Complex64> {
    let m = sf.m;
    (0..m)
        .map(|dd| {
            let mut s = c64(0.0, 0.0);
            for (mm, em) in sf.e.iter().enumerate() {
                for j in 0..sf.d {
                    s += em[(j, j)] * omega_pow((mm as i64 - j as i64) * dd as i64, m);
                }
            }
            s
        })
        .collect()
}
