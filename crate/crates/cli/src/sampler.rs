//! Synthetic homodyne data drawn from the exact quadrature distribution of a
//! truncated state.
//!
//! `x_φ = U_φ† x U_φ` is unitarily equivalent to `x`, so its spectrum is that
//! of the tridiagonal `x` and its eigenvectors are `U_φ† v_i`. An outcome is
//! an eigenvalue `λ_i` drawn with weight `⟨v_i|U_φ ρ U_φ†|v_i⟩`, smeared
//! uniformly over the local eigenvalue spacing. The state is embedded in at
//! least [`MIN_SAMPLER_DIM`] levels first, which makes the spectrum dense
//! enough that the smearing adds about 8e-4 to the vacuum variance.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use qbench_core::{CoreError, DensityMatrix};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::records::QuadratureRecord;

pub const MIN_SAMPLER_DIM: usize = 512;

static DEFAULT_SPECTRUM: OnceLock<QuadratureSpectrum> = OnceLock::new();

fn spectrum_for(dim: usize) -> std::borrow::Cow<'static, QuadratureSpectrum> {
    if dim <= MIN_SAMPLER_DIM {
        std::borrow::Cow::Borrowed(DEFAULT_SPECTRUM.get_or_init(|| QuadratureSpectrum::new(MIN_SAMPLER_DIM)))
    } else {
        std::borrow::Cow::Owned(QuadratureSpectrum::new(dim))
    }
}

/// Discrete spectrum of `x` at a given dimension, with smearing widths.
#[derive(Clone, Debug)]
pub struct QuadratureSpectrum {
    pub values: Vec<f64>,
    pub widths: Vec<f64>,
    /// Column `i` is the real eigenvector of `λ_i`.
    pub vectors: DMatrix<f64>,
}

impl QuadratureSpectrum {
    pub fn new(dim: usize) -> Self {
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        for n in 1..dim {
            let v = (n as f64 / 2.0).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        let eig = SymmetricEigen::new(x);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        let widths = (0..dim)
            .map(|i| match (i.checked_sub(1), (i + 1 < dim).then_some(i + 1)) {
                (Some(l), Some(r)) => 0.5 * (values[r] - values[l]),
                (None, Some(r)) => values[r] - values[i],
                (Some(l), None) => values[i] - values[l],
                (None, None) => 0.0,
            })
            .collect();
        QuadratureSpectrum { values, widths, vectors }
    }

    /// Outcome probabilities for `x_φ`, `φ` in radians.
    pub fn probabilities(&self, rho: &DensityMatrix, phi: f64) -> Vec<f64> {
        let d = rho.dim();
        let r = rho.normalized();
        let m = r.matrix();
        // v is real, so only the real part of U_φ ρ U_φ† contributes
        let rot = DMatrix::from_fn(d, d, |j, l| {
            let t = -phi * (j as f64 - l as f64);
            m[(j, l)].re * t.cos() - m[(j, l)].im * t.sin()
        });
        let v = self.vectors.rows(0, d);
        let rv = &rot * v;
        (0..self.values.len())
            .map(|i| v.column(i).dot(&rv.column(i)).max(0.0))
            .collect()
    }
}

/// Draws `n` records at `phase_deg` from `rho`; reproducible for a fixed seed.
pub fn sample_homodyne(rho: &DensityMatrix, phase_deg: f64, n: usize, seed: u64) -> Result<Vec<QuadratureRecord>> {
    let spectrum = spectrum_for(rho.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(&spectrum, rho, phase_deg, n, &mut rng)
}

/// Records at several phases, `n` each, from one seeded stream.
pub fn sample_phases(rho: &DensityMatrix, phases_deg: &[f64], n: usize, seed: u64) -> Result<Vec<QuadratureRecord>> {
    let spectrum = spectrum_for(rho.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * phases_deg.len());
    for &ph in phases_deg {
        out.extend(sample_with(&spectrum, rho, ph, n, &mut rng)?);
    }
    Ok(out)
}

pub fn sample_with<R: Rng>(
    spectrum: &QuadratureSpectrum,
    rho: &DensityMatrix,
    phase_deg: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<QuadratureRecord>> {
    if rho.dim() > spectrum.values.len() {
        return Err(CoreError::Mismatch {
            what: "state dimension exceeds sampler dimension".into(),
            left: rho.dim(),
            right: spectrum.values.len(),
        }
        .into());
    }
    let probs = spectrum.probabilities(rho, phase_deg.to_radians());
    let dist = WeightedIndex::new(&probs).map_err(|e| CoreError::Invalid(format!("outcome weights: {e}")))?;
    (0..n)
        .map(|_| {
            let i = dist.sample(rng);
            let u: f64 = rng.random::<f64>() - 0.5;
            QuadratureRecord::new(phase_deg, spectrum.values[i] + u * spectrum.widths[i])
        })
        .collect()
}
