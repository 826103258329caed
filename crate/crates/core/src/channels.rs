//! Phase-covariant channel simulators on a truncated Fock space.
//!
//! Every channel is completely positive; continuous mixtures are evaluated
//! with Gauss–Hermite quadrature. Weight pushed above the cutoff is lost,
//! so outputs may be sub-normalised.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fock::{displacement, DensityMatrix};
use crate::linalg::{self, c64, CMatrix};

/// Quadrature nodes per axis for the additive-noise integral.
const NOISE_NODES: usize = 40;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Channel {
    #[default]
    Identity,
    /// Beam splitter with vacuum; `loss` is the reflected fraction `1 − η`.
    PureLoss { loss: f64 },
    /// Random displacements with Gaussian weight, adding `nbar` photons.
    AdditiveNoise { nbar: f64 },
    /// Heterodyne measurement followed by re-preparation of the measured
    /// coherent state.
    HeterodyneMeasurePrepare,
    /// Complete dephasing in the Fock basis.
    FockDephasing,
    /// Discards the input and prepares a thermal state.
    TraceAndReplace { nbar: f64 },
    /// Applies the listed channels in order.
    Sequence { channels: Vec<Channel> },
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Channel::PureLoss { loss } if !(0.0..=1.0).contains(loss) => {
                Err(CoreError::Invalid(format!("loss {loss} outside [0, 1]")))
            }
            Channel::AdditiveNoise { nbar } | Channel::TraceAndReplace { nbar } if !(*nbar >= 0.0 && nbar.is_finite()) => {
                Err(CoreError::Invalid(format!("noise {nbar} must be nonnegative")))
            }
            Channel::Sequence { channels } => channels.iter().try_for_each(Channel::validate),
            _ => Ok(()),
        }
    }

    /// Whether the channel is entanglement breaking.
    pub fn is_entanglement_breaking(&self) -> bool {
        match self {
            Channel::HeterodyneMeasurePrepare | Channel::FockDephasing | Channel::TraceAndReplace { .. } => true,
            Channel::PureLoss { loss } => *loss >= 1.0,
            Channel::Sequence { channels } => channels.iter().any(Channel::is_entanglement_breaking),
            _ => false,
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let d = rho.dim();
        let out = match self {
            Channel::Identity => return Ok(rho.clone()),
            Channel::PureLoss { loss } => apply_kraus(&loss_kraus(*loss, d), rho.matrix()),
            Channel::AdditiveNoise { nbar } => additive_noise(*nbar, rho.matrix()),
            Channel::HeterodyneMeasurePrepare => heterodyne_prepare(rho.matrix()),
            Channel::FockDephasing => CMatrix::from_fn(d, d, |i, j| if i == j { rho.matrix()[(i, i)] } else { c64(0.0, 0.0) }),
            Channel::TraceAndReplace { nbar } => {
                let th = crate::fock::thermal_state(*nbar, d)?;
                th.matrix() * c64(rho.trace(), 0.0)
            }
            Channel::Sequence { channels } => {
                let mut cur = rho.clone();
                for c in channels {
                    cur = c.apply(&cur)?;
                }
                return Ok(cur);
            }
        };
        DensityMatrix::new_subnormalized(linalg::hermitian_part(&out))
    }

    /// Kraus operators at dimension `d` (quadrature-discretised for the
    /// continuous channels).
    pub fn kraus(&self, d: usize) -> Result<Vec<CMatrix>> {
        self.validate()?;
        Ok(match self {
            Channel::Identity => vec![CMatrix::identity(d, d)],
            Channel::PureLoss { loss } => loss_kraus(*loss, d),
            Channel::AdditiveNoise { nbar } => noise_points(*nbar)
                .into_iter()
                .map(|(beta, w)| displacement(beta, d) * c64(w.sqrt(), 0.0))
                .collect(),
            Channel::HeterodyneMeasurePrepare => heterodyne_points(d)
                .into_iter()
                .map(|(beta, w)| {
                    let v = unnormalized_coherent(beta, d);
                    &v * v.adjoint() * c64(w.sqrt(), 0.0)
                })
                .collect(),
            Channel::FockDephasing => (0..d)
                .map(|n| CMatrix::from_fn(d, d, |i, j| if i == n && j == n { c64(1.0, 0.0) } else { c64(0.0, 0.0) }))
                .collect(),
            Channel::TraceAndReplace { nbar } => {
                let th = crate::fock::thermal_state(*nbar, d)?;
                let mut ks = Vec::with_capacity(d * d);
                for i in 0..d {
                    for j in 0..d {
                        let mut k = CMatrix::zeros(d, d);
                        k[(i, j)] = c64(th.matrix()[(i, i)].re.sqrt(), 0.0);
                        ks.push(k);
                    }
                }
                ks
            }
            Channel::Sequence { channels } => {
                let mut ks = vec![CMatrix::identity(d, d)];
                for c in channels {
                    let next = c.kraus(d)?;
                    ks = next.iter().flat_map(|a| ks.iter().map(move |b| a * b)).collect();
                }
                ks
            }
        })
    }
}

pub fn apply_kraus(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

/// `A_k = Σ_n √C(n,k) η^{(n−k)/2} (1−η)^{k/2} |n−k⟩⟨n|`.
fn loss_kraus(loss: f64, d: usize) -> Vec<CMatrix> {
    let eta = 1.0 - loss;
    (0..d)
        .map(|k| {
            let mut a = CMatrix::zeros(d, d);
            for n in k..d {
                let ln_binom = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
                let mut v = (0.5 * ln_binom).exp();
                v *= pow_half(eta, n - k) * pow_half(loss, k);
                a[(n - k, n)] = c64(v, 0.0);
            }
            a
        })
        .collect()
}

/// `x^{p/2}` with `0^0 = 1`.
fn pow_half(x: f64, p: usize) -> f64 {
    if p == 0 {
        1.0
    } else {
        x.powf(p as f64 / 2.0)
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Nodes `β = √n̄ (u + iv)` and weights for `∫ e^{−|β|²/n̄}/(π n̄) f(β) d²β`.
fn noise_points(nbar: f64) -> Vec<(Complex64, f64)> {
    if nbar == 0.0 {
        return vec![(c64(0.0, 0.0), 1.0)];
    }
    let (x, w) = linalg::gauss_hermite(NOISE_NODES);
    let s = nbar.sqrt();
    let mut pts = Vec::with_capacity(x.len() * x.len());
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            pts.push((c64(s * u, s * v), wu * wv / std::f64::consts::PI));
        }
    }
    pts
}

fn additive_noise(nbar: f64, rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (beta, w) in noise_points(nbar) {
        let dm = displacement(beta, d);
        out += &dm * rho * dm.adjoint() * c64(w, 0.0);
    }
    out
}

/// `Σ βⁿ/√n! |n⟩` without the Gaussian prefactor.
fn unnormalized_coherent(beta: Complex64, d: usize) -> nalgebra::DVector<Complex64> {
    let mut v = nalgebra::DVector::zeros(d);
    let mut a = c64(1.0, 0.0);
    for n in 0..d {
        if n > 0 {
            a = a * beta / (n as f64).sqrt();
        }
        v[n] = a;
    }
    v
}

/// Nodes `β = (u + iv)/√2` and weights for
/// `(1/π) ∫ ⟨β|ρ|β⟩ |β⟩⟨β| d²β = (1/2π) Σ w (β|ρ|β) |β)(β|`, with `|β)` the
/// unnormalised coherent vectors. The integrand is a polynomial of degree
/// below `4D` times `e^{−u²−v²}`, so `2D` nodes per axis make it exact.
fn heterodyne_points(d: usize) -> Vec<(Complex64, f64)> {
    let (x, w) = linalg::gauss_hermite(2 * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut pts = Vec::with_capacity(x.len() * x.len());
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            pts.push((c64(s * u, s * v), wu * wv / (2.0 * std::f64::consts::PI)));
        }
    }
    pts
}

fn heterodyne_prepare(rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (beta, w) in heterodyne_points(d) {
        let v = unnormalized_coherent(beta, d);
        let q = v.dotc(&(rho * &v)).re;
        let s = w * q;
        for j in 0..d {
            let cj = v[j].conj() * s;
            for i in 0..d {
                out[(i, j)] += v[i] * cj;
            }
        }
    }
    out
}
