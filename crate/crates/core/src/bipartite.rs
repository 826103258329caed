//! Bipartite matrices on `C^M ⊗ C^D` stored as an `M×M` grid of `D×D` blocks.
//!
//! Block `(k,l)` holds `M·⟨k|τ|l⟩`, so the operator itself is
//! `τ = (1/M) Σ_kl |k⟩⟨l| ⊗ τ_kl` and `Tr τ = (1/M) Σ_k Tr τ_kk`.

use crate::error::{CoreError, Result};
use crate::fock::{HERMITIAN_TOL, PSD_TOL};
use crate::linalg::{self, c64, CMatrix, CVector};

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteBlockMatrix {
    m: usize,
    d: usize,
    /// Row-major: block `(k,l)` at `k*m + l`.
    blocks: Vec<CMatrix>,
}

impl BipartiteBlockMatrix {
    /// Validates shapes and overall Hermiticity `τ_lk = τ_kl†`.
    pub fn new(m: usize, d: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        let tau = Self::new_unchecked(m, d, blocks)?;
        let deviation = tau.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(CoreError::NotHermitian { deviation });
        }
        Ok(tau)
    }

    /// Shape checks only; used for non-Hermitian intermediates.
    pub fn new_unchecked(m: usize, d: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(CoreError::Dimension { min: 1, got: m.min(d) });
        }
        if blocks.len() != m * m {
            return Err(CoreError::Mismatch {
                what: "number of blocks".into(),
                left: blocks.len(),
                right: m * m,
            });
        }
        if let Some(b) = blocks.iter().find(|b| b.shape() != (d, d)) {
            return Err(CoreError::Mismatch {
                what: "block shape".into(),
                left: b.nrows().max(b.ncols()),
                right: d,
            });
        }
        Ok(BipartiteBlockMatrix { m, d, blocks })
    }

    pub fn zeros(m: usize, d: usize) -> Self {
        BipartiteBlockMatrix {
            m,
            d,
            blocks: vec![CMatrix::zeros(d, d); m * m],
        }
    }

    /// From the operator `τ` on `C^M ⊗ C^D`, index `(k,j) ↦ k·D + j`.
    pub fn from_dense(m: usize, d: usize, dense: &CMatrix) -> Result<Self> {
        if dense.shape() != (m * d, m * d) {
            return Err(CoreError::Mismatch {
                what: "dense bipartite matrix".into(),
                left: dense.nrows(),
                right: m * d,
            });
        }
        let scale = c64(m as f64, 0.0);
        let blocks = (0..m * m)
            .map(|b| dense.view(((b / m) * d, (b % m) * d), (d, d)) * scale)
            .collect();
        Self::new(m, d, blocks)
    }

    /// The operator `τ = (1/M) Σ |k⟩⟨l| ⊗ τ_kl`.
    pub fn to_dense(&self) -> CMatrix {
        let (m, d) = (self.m, self.d);
        let inv = 1.0 / m as f64;
        CMatrix::from_fn(m * d, m * d, |r, c| self.blocks[(r / d) * m + c / d][(r % d, c % d)] * inv)
    }

    /// `|Ψ⟩⟨Ψ|` for `|Ψ⟩ = M^{-1/2} Σ_k |k⟩|ψ_k⟩`; block `(k,l)` is `|ψ_k⟩⟨ψ_l|`.
    pub fn from_pure_ensemble(states: &[CVector]) -> Result<Self> {
        let m = states.len();
        let d = states.first().map(|s| s.len()).unwrap_or(0);
        if let Some(s) = states.iter().find(|s| s.len() != d) {
            return Err(CoreError::Mismatch {
                what: "ensemble state dimension".into(),
                left: s.len(),
                right: d,
            });
        }
        let blocks = (0..m * m)
            .map(|b| &states[b / m] * states[b % m].adjoint())
            .collect();
        Self::new(m, d, blocks)
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(rho_a: &CMatrix, rho_b: &CMatrix) -> Result<Self> {
        let m = rho_a.nrows();
        let scale = m as f64;
        let blocks = (0..m * m)
            .map(|b| rho_b * (rho_a[(b / m, b % m)] * scale))
            .collect();
        Self::new(m, rho_b.nrows(), blocks)
    }

    /// Block-diagonal `(1/M) Σ |k⟩⟨k| ⊗ ρ_k`.
    pub fn block_diagonal(states: &[CMatrix]) -> Result<Self> {
        let m = states.len();
        let d = states.first().map(|s| s.nrows()).unwrap_or(0);
        let blocks = (0..m * m)
            .map(|b| {
                if b / m == b % m {
                    states[b / m].clone()
                } else {
                    CMatrix::zeros(d, d)
                }
            })
            .collect();
        Self::new(m, d, blocks)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block(&self, k: usize, l: usize) -> &CMatrix {
        &self.blocks[k * self.m + l]
    }

    pub fn block_mut(&mut self, k: usize, l: usize) -> &mut CMatrix {
        &mut self.blocks[k * self.m + l]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for k in 0..self.m {
            for l in k..self.m {
                let diff = self.block(k, l) - self.block(l, k).adjoint();
                dev = dev.max(linalg::max_abs(&diff));
            }
        }
        dev
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|k| self.block(k, k).trace().re).sum::<f64>() / self.m as f64
    }

    /// Transpose on the `A` factor: block `(k,l)` becomes block `(l,k)`.
    pub fn partial_transpose(&self) -> BipartiteBlockMatrix {
        let m = self.m;
        let blocks = (0..m * m).map(|b| self.blocks[(b % m) * m + b / m].clone()).collect();
        BipartiteBlockMatrix { m, d: self.d, blocks }
    }

    /// `Tr_B τ`, i.e. `ρ_A[k,l] = Tr τ_kl / M`.
    pub fn reduced_a(&self) -> CMatrix {
        let inv = 1.0 / self.m as f64;
        CMatrix::from_fn(self.m, self.m, |k, l| self.block(k, l).trace() * inv)
    }

    /// `Tr_A τ = (1/M) Σ_k τ_kk`.
    pub fn reduced_b(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for k in 0..self.m {
            out += self.block(k, k);
        }
        out / c64(self.m as f64, 0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.to_dense())
    }

    /// Element-wise `(1−t)·self + t·other`.
    pub fn mix(&self, other: &BipartiteBlockMatrix, t: f64) -> Result<BipartiteBlockMatrix> {
        if self.m != other.m || self.d != other.d {
            return Err(CoreError::Mismatch {
                what: "mixed bipartite matrices".into(),
                left: self.m * self.d,
                right: other.m * other.d,
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * c64(1.0 - t, 0.0) + b * c64(t, 0.0))
            .collect();
        Ok(BipartiteBlockMatrix { m: self.m, d: self.d, blocks })
    }
}

/// `N(τ) = (‖τ^{T_A}‖₁ − Tr τ)/2` by a dense eigendecomposition.
pub fn negativity(tau: &BipartiteBlockMatrix) -> Result<f64> {
    let dense = tau.to_dense();
    let min = linalg::min_eigenvalue(&dense);
    if min < -PSD_TOL {
        return Err(CoreError::NotPsd { min_eigenvalue: min });
    }
    let pt = tau.partial_transpose().to_dense();
    let norm = linalg::trace_norm_hermitian(&pt);
    Ok(((norm - tau.trace()) / 2.0).max(0.0))
}

/// Sum of the magnitudes of the negative eigenvalues of `τ^{T_A}`.
pub fn negative_eigenvalue_sum(tau: &BipartiteBlockMatrix) -> f64 {
    linalg::eigvalsh(&tau.partial_transpose().to_dense())
        .into_iter()
        .filter(|&v| v < 0.0)
        .map(|v| -v)
        .sum()
}
