//! Gram matrices of purifications: optimisation over compatible input
//! matrices, purity bounds and the CPTP ordering test.
//!
//! The Gram matrix of purifications `|Γ_k⟩` is `Z_kl = ⟨Γ_k|Γ_l⟩`. For an
//! input matrix with stored blocks `T_kl` (diagonal blocks the test states)
//! it is read off as `Z_kl = Tr T_lk`, i.e. `Z = M·ρ_Aᵀ`.

use num_complex::Complex64;
use qbench_sdp::{Functional, SdpConfig, SdpProblem, Sense, SolveStatus};
use serde::Serialize;

use crate::bipartite::BipartiteBlockMatrix;
use crate::blocksym::{from_standard_form, omega_pow, StandardForm};
use crate::error::{CoreError, Result};
use crate::fock::{fidelity, rotation, rotation_ensemble_deviation, DensityMatrix};
use crate::linalg::{self, c64, CMatrix};
use crate::sdpkit::{add_sub_inner, imag_of, rotate, solve_optimal};

pub const GRAM_PSD_TOL: f64 = 1e-9;
pub const GRAM_DIAG_TOL: f64 = 1e-10;
/// Ensembles closer than this to `U^k ρ_0 U^{−k}` count as rotation-generated.
pub const ROTATION_TOL: f64 = 1e-8;
/// Eigenvalues below `RANK_TOL · λ_max` are treated as exact zeros.
pub const RANK_TOL: f64 = 1e-13;
/// Overlaps of principal eigenvectors below this leave the phase undefined.
const PHASE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    z: CMatrix,
}

impl GramMatrix {
    pub fn new(z: CMatrix) -> Result<Self> {
        if z.nrows() != z.ncols() || z.nrows() == 0 {
            return Err(CoreError::Mismatch {
                what: "Gram matrix must be square".into(),
                left: z.nrows(),
                right: z.ncols(),
            });
        }
        let deviation = linalg::hermitian_deviation(&z);
        if deviation > crate::fock::HERMITIAN_TOL {
            return Err(CoreError::NotHermitian { deviation });
        }
        for k in 0..z.nrows() {
            let dev = (z[(k, k)] - c64(1.0, 0.0)).norm();
            if dev > GRAM_DIAG_TOL {
                return Err(CoreError::Invalid(format!("Gram diagonal entry {k} is {} (must be 1)", z[(k, k)])));
            }
        }
        if let Some(v) = z.iter().map(|v| v.norm()).find(|&v| v > 1.0 + 1e-9) {
            return Err(CoreError::Invalid(format!("Gram entry of modulus {v} exceeds 1")));
        }
        let z = linalg::hermitian_part(&z);
        let min = linalg::min_eigenvalue(&z);
        if min < -GRAM_PSD_TOL {
            return Err(CoreError::NotPsd { min_eigenvalue: min });
        }
        Ok(GramMatrix { z })
    }

    /// From `ρ_A = Tr_B τ`: `Z_kl = M·ρ_A[l,k]`.
    pub fn from_reduced(rho_a: &CMatrix) -> Result<Self> {
        let m = rho_a.nrows() as f64;
        Self::new(rho_a.transpose() * c64(m, 0.0))
    }

    /// Unit-diagonal rescaling `Z_kl/√(Z_kk Z_ll)` of a numerically PSD
    /// overlap matrix, with tiny negative eigenvalues clipped first.
    pub fn normalized_from(z: &CMatrix) -> Result<Self> {
        let h = linalg::hermitian_part(z);
        let (vals, vecs) = linalg::eigh(&h);
        if vals[0] < -1e-7 * vals.last().copied().unwrap_or(1.0).max(1.0) {
            return Err(CoreError::NotPsd { min_eigenvalue: vals[0] });
        }
        let h = linalg::spectral_map(&vals, &vecs, |l| l.max(0.0));
        let m = h.nrows();
        let s: Vec<f64> = (0..m).map(|k| h[(k, k)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
        let mut z = CMatrix::from_fn(m, m, |k, l| if k == l { c64(1.0, 0.0) } else { h[(k, l)] / (s[k] * s[l]) });
        for v in z.iter_mut() {
            let n = v.norm();
            if n > 1.0 {
                *v /= n;
            }
        }
        Self::new(z)
    }

    pub fn m(&self) -> usize {
        self.z.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.z
    }

    /// `ρ_A = Zᵀ/M`.
    pub fn reduced(&self) -> CMatrix {
        self.z.transpose() / c64(self.m() as f64, 0.0)
    }

    /// Largest deviation of `Z_kl` from a function of `l−k mod M`.
    pub fn circulant_deviation(&self) -> f64 {
        let m = self.m();
        let mut dev: f64 = 0.0;
        for k in 0..m {
            for l in 0..m {
                let d = (l + m - k) % m;
                dev = dev.max((self.z[(k, l)] - self.z[(0, d)]).norm());
            }
        }
        dev
    }
}

/// `P = (1/M²) Σ_kl |Z_kl|² = Tr ρ_A²`.
pub fn gram_purity(gram: &GramMatrix) -> f64 {
    let m = gram.m() as f64;
    gram.z.iter().map(|v| v.norm_sqr()).sum::<f64>() / (m * m)
}

/// `(1/M²) Σ_kl F(ρ_k, ρ_l)`, an upper bound on the purity of any Gram
/// matrix of purifications.
pub fn purity_upper_bound(states: &[DensityMatrix]) -> Result<f64> {
    check_ensemble(states, 1)?;
    let m = states.len();
    let mut s = m as f64;
    for k in 0..m {
        for l in (k + 1)..m {
            s += 2.0 * fidelity(&states[k].normalized(), &states[l].normalized())?;
        }
    }
    Ok(s / (m * m) as f64)
}

fn check_ensemble(states: &[DensityMatrix], min: usize) -> Result<usize> {
    if states.len() < min {
        return Err(CoreError::Dimension { min, got: states.len() });
    }
    let d = states[0].dim();
    if let Some(s) = states.iter().find(|s| s.dim() != d) {
        return Err(CoreError::Mismatch {
            what: "test state dimensions".into(),
            left: s.dim(),
            right: d,
        });
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct GramOptions {
    /// Use the standard-form parameterisation when the ensemble is
    /// rotation-generated.
    pub symmetric: bool,
    /// Iterated-linearisation steps on the purity after the `h` solve.
    pub refine_steps: usize,
    pub solver: SdpConfig,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            symmetric: true,
            refine_steps: 0,
            solver: SdpConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GramOptResult {
    pub gram: GramMatrix,
    /// Optimised input matrix; its diagonal blocks are the test states.
    pub rho_in: BipartiteBlockMatrix,
    /// `Σ_{k>l} √2·Re(e^{−iχ_kl} Z_kl)`, the `X + Y` objective in the frame
    /// where the reference phases `χ_kl` sit at `π/4`.
    pub h_value: f64,
    pub purity: f64,
    pub purity_upper_bound: f64,
    /// Whether the standard-form parameterisation was used.
    pub symmetric: bool,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Reference phases `χ_kl = arg⟨v_k|v_l⟩` from principal eigenvectors
/// (rotated copies of `v_0` for rotation ensembles). Maximising
/// `Re(e^{−iχ} Z)` rather than `X + Y` removes the dependence on the
/// arbitrary phases of the purification basis.
fn reference_phases(states: &[DensityMatrix], rotational: bool) -> CMatrix {
    let m = states.len();
    let d = states[0].dim();
    let principal = |rho: &DensityMatrix| {
        let (_, vecs) = linalg::eigh(rho.matrix());
        vecs.column(d - 1).into_owned()
    };
    let vs: Vec<_> = if rotational {
        let v0 = principal(&states[0]);
        let theta = 2.0 * std::f64::consts::PI / m as f64;
        (0..m).map(|k| rotation(theta * k as f64, d) * &v0).collect()
    } else {
        states.iter().map(principal).collect()
    };
    CMatrix::from_fn(m, m, |k, l| {
        let ov = vs[k].dotc(&vs[l]);
        if ov.norm() < PHASE_FLOOR {
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)
        } else {
            ov / ov.norm()
        }
    })
}

/// Chooses purifications by maximising the overlap objective over all input
/// matrices with the test states as diagonal blocks.
pub fn optimize_gram(states: &[DensityMatrix], options: &GramOptions) -> Result<GramOptResult> {
    check_ensemble(states, 2)?;
    let states: Vec<DensityMatrix> = states.iter().map(|s| s.normalized()).collect();
    let rotational = rotation_ensemble_deviation(&states) <= ROTATION_TOL;
    let phases = reference_phases(&states, rotational);
    let symmetric = options.symmetric && rotational;
    let bound = purity_upper_bound(&states)?;

    let weights = phases.map(|p| p.conj());
    let mut best = if symmetric {
        solve_symmetric(&states, &weights, &options.solver)?
    } else {
        solve_general(&states, &weights, &options.solver)?
    };
    let h_value = aligned_h(&best.gram, &phases);
    let mut purity = gram_purity(&best.gram);

    for step in 0..options.refine_steps {
        let w = best.gram.matrix().map(|z| z.conj());
        let next = if symmetric {
            solve_symmetric(&states, &w, &options.solver)?
        } else {
            solve_general(&states, &w, &options.solver)?
        };
        let p = gram_purity(&next.gram);
        log::debug!("gram refinement step {step}: purity {p}");
        if p <= purity + 1e-10 {
            break;
        }
        purity = p;
        best = next;
    }

    Ok(GramOptResult {
        gram: best.gram,
        rho_in: best.rho_in,
        h_value,
        purity,
        purity_upper_bound: bound,
        symmetric,
        status: best.status,
        iterations: best.iterations,
        primal_residual: best.primal_residual,
        dual_residual: best.dual_residual,
    })
}

fn aligned_h(gram: &GramMatrix, phases: &CMatrix) -> f64 {
    let m = gram.m();
    let mut h = 0.0;
    for k in 0..m {
        for l in 0..k {
            h += std::f64::consts::SQRT_2 * (phases[(k, l)].conj() * gram.z[(k, l)]).re;
        }
    }
    h
}

struct Solved {
    gram: GramMatrix,
    rho_in: BipartiteBlockMatrix,
    status: SolveStatus,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
}

/// Variable `W ⪰ 0` with `T = B W B†`, `B = ⊕_k V_k √Λ_k` and `W_kk = I`:
/// the input matrix restricted to the face where its diagonal blocks are
/// the test states, which keeps the problem strictly feasible.
fn solve_general(states: &[DensityMatrix], weights: &CMatrix, config: &SdpConfig) -> Result<Solved> {
    let m = states.len();
    let factors: Vec<CMatrix> = states.iter().map(|s| reduced_factor(s.matrix())).collect();
    let offsets: Vec<usize> = factors
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.ncols();
            Some(o)
        })
        .collect();
    let total: usize = factors.iter().map(|b| b.ncols()).sum();

    let mut p = SdpProblem::new();
    let w = p.add_variable("W", total);
    for (k, b) in factors.iter().enumerate() {
        let o = offsets[k];
        for a in 0..b.ncols() {
            for c in a..b.ncols() {
                let mut re = Functional::new();
                re.add_re(w, o + a, o + c, 1.0);
                p.add_equality(format!("W{k}{k}[{a},{c}].re"), re, if a == c { 1.0 } else { 0.0 });
                if a != c {
                    let mut im = Functional::new();
                    im.add_im(w, o + a, o + c, 1.0);
                    p.add_equality(format!("W{k}{k}[{a},{c}].im"), im, 0.0);
                }
            }
        }
    }
    // Z_kl = Tr T_lk = Tr(B_k† B_l W_lk)
    let mut obj = Functional::new();
    for k in 0..m {
        for l in 0..k {
            let c = factors[k].adjoint() * &factors[l] * weights[(k, l)];
            add_sub_inner(&mut obj, w, offsets[l], offsets[k], &c);
        }
    }
    p.set_objective(Sense::Maximize, obj);
    let sol = solve_optimal(&p, config, "gram optimisation")?;
    // Solver output is PSD and block-normalised only to tolerance; project
    // it back so that the assembled input matrix is exactly physical.
    let mut wv = clip_psd(sol.value(w));
    let owner: Vec<usize> = (0..m).flat_map(|k| std::iter::repeat_n(k, factors[k].ncols())).collect();
    let diag = CMatrix::from_fn(total, total, |r, c| if owner[r] == owner[c] { wv[(r, c)] } else { c64(0.0, 0.0) });
    let s = inv_sqrt(&diag);
    wv = &s * wv * &s;
    let mut blocks = Vec::with_capacity(m * m);
    for k in 0..m {
        for l in 0..m {
            let sub = wv.view((offsets[k], offsets[l]), (factors[k].ncols(), factors[l].ncols()));
            blocks.push(if k == l {
                states[k].matrix().clone()
            } else {
                &factors[k] * sub * factors[l].adjoint()
            });
        }
    }
    let rho_in = BipartiteBlockMatrix::new(m, states[0].dim(), blocks)?;
    let gram = GramMatrix::normalized_from(&gram_from_blocks(&rho_in))?;
    Ok(Solved {
        gram,
        rho_in,
        status: sol.status,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
    })
}

/// Variables `F_k ⪰ 0` with `E_k = B_0 F_k B_0†`, `Σ_k F_k = I`, where
/// `ρ_0 = B_0 B_0†`. The block traces are
/// `g_d = Tr τ_{d,0} = Σ_m ω^{md} Tr(B_0† Ω_d B_0 F_m)` with
/// `Ω_d = diag(ω^{−jd})`, and `Z_kl = g_{(l−k) mod M}`.
fn solve_symmetric(states: &[DensityMatrix], weights: &CMatrix, config: &SdpConfig) -> Result<Solved> {
    let m = states.len();
    let d = states[0].dim();
    let b0 = reduced_factor(states[0].matrix());
    let r = b0.ncols();

    let mut p = SdpProblem::new();
    let vars: Vec<usize> = (0..m).map(|k| p.add_variable(format!("F{k}"), r)).collect();
    for a in 0..r {
        for c in a..r {
            let mut re = Functional::new();
            let mut im = Functional::new();
            for &v in &vars {
                re.add_re(v, a, c, 1.0);
                im.add_im(v, a, c, 1.0);
            }
            p.add_equality(format!("sum F[{a},{c}].re"), re, if a == c { 1.0 } else { 0.0 });
            if a != c {
                p.add_equality(format!("sum F[{a},{c}].im"), im, 0.0);
            }
        }
    }
    let g = block_trace_functionals(&b0, &vars, m, d);
    // Σ_{k>l} over pairs with (l−k) mod M = dd: there are dd of them.
    let mut obj = Functional::new();
    for k in 0..m {
        for l in 0..k {
            let dd = (l + m - k) % m;
            obj.extend(&rotate(&g[dd], weights[(k, l)]));
        }
    }
    p.set_objective(Sense::Maximize, obj);
    let sol = solve_optimal(&p, config, "symmetric gram optimisation")?;
    // Project onto F_k ⪰ 0, Σ F_k = I exactly.
    let f: Vec<CMatrix> = vars.iter().map(|&v| clip_psd(sol.value(v))).collect();
    let s = inv_sqrt(&f.iter().fold(CMatrix::zeros(r, r), |acc, x| acc + x));
    let e: Vec<CMatrix> = f.iter().map(|x| &b0 * &s * x * &s * b0.adjoint()).collect();
    let mut rho_in = from_standard_form(&StandardForm::new(e)?);
    // diagonal blocks are the test states up to solver accuracy; pin them
    for (k, s) in states.iter().enumerate() {
        *rho_in.block_mut(k, k) = s.matrix().clone();
    }
    let rho_in = BipartiteBlockMatrix::new(m, d, rho_in.blocks().to_vec())?;
    let gram = GramMatrix::normalized_from(&gram_from_blocks(&rho_in))?;
    Ok(Solved {
        gram,
        rho_in,
        status: sol.status,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
    })
}

/// Functionals whose complex values are `g_d`, `d = 0..M`, for
/// `E_k = B F_k B†`.
pub(crate) fn block_trace_functionals(b: &CMatrix, vars: &[usize], m: usize, d: usize) -> Vec<Functional> {
    (0..m)
        .map(|dd| {
            let omega = CMatrix::from_fn(d, d, |i, j| if i == j { omega_pow(-((i * dd) as i64), m) } else { c64(0.0, 0.0) });
            let c = b.adjoint() * omega * b;
            let mut f = Functional::new();
            for (mm, &v) in vars.iter().enumerate() {
                add_sub_inner(&mut f, v, 0, 0, &(&c * omega_pow((mm * dd) as i64, m)));
            }
            f
        })
        .collect()
}

fn clip_psd(a: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::eigh(a);
    linalg::spectral_map(&vals, &vecs, |l| l.max(0.0))
}

/// `A^{−1/2}` for `A` close to the identity.
fn inv_sqrt(a: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::eigh(a);
    linalg::spectral_map(&vals, &vecs, |l| 1.0 / l.sqrt())
}

/// `Z_kl = Tr T_lk`.
pub fn gram_from_blocks(tau: &BipartiteBlockMatrix) -> CMatrix {
    let m = tau.m();
    CMatrix::from_fn(m, m, |k, l| tau.block(l, k).trace())
}

/// `B` with `ρ = B B†` on the numerically nonzero eigenspace.
pub(crate) fn reduced_factor(rho: &CMatrix) -> CMatrix {
    let scale = linalg::eigvalsh(rho).last().copied().unwrap_or(0.0).max(0.0);
    let (b, dropped) = linalg::psd_factor(rho, RANK_TOL * scale);
    log::trace!("facial reduction keeps rank {}, drops mass {dropped:e}", b.ncols());
    b
}

/// Outcome of the CPTP ordering test.
#[derive(Clone, Debug, PartialEq)]
pub enum CptpVerdict {
    /// `G = P ∘ D` for the returned correlation matrix `P ⪰ 0`.
    Feasible { witness: CMatrix },
    /// No such `P`; `margin` is the optimal `λ_min(P)` (negative), or
    /// `−∞` when an entry of `D` vanishes where `G` does not.
    Infeasible { margin: f64 },
}

impl CptpVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CptpVerdict::Feasible { .. })
    }
}

/// Entry-wise tolerance for zero Gram entries and for the feasibility margin.
pub const CPTP_TOL: f64 = 1e-7;

/// Decides whether states with Gram matrix `dg` can be mapped onto states
/// with Gram matrix `g` by a CPTP map: is there a PSD `P` with unit diagonal
/// and `G = P ∘ D`? Maximises `λ_min` of `P` over its free entries.
pub fn cptp_reachable(g: &GramMatrix, dg: &GramMatrix, config: &SdpConfig) -> Result<CptpVerdict> {
    let m = g.m();
    if dg.m() != m {
        return Err(CoreError::Mismatch {
            what: "Gram matrices".into(),
            left: m,
            right: dg.m(),
        });
    }
    let mut fixed = CMatrix::identity(m, m);
    let mut free = Vec::new();
    for k in 0..m {
        for l in (k + 1)..m {
            let dv = dg.z[(k, l)];
            let gv = g.z[(k, l)];
            if dv.norm() <= CPTP_TOL {
                if gv.norm() > CPTP_TOL {
                    return Ok(CptpVerdict::Infeasible { margin: f64::NEG_INFINITY });
                }
                free.push((k, l));
            } else {
                fixed[(k, l)] = gv / dv;
                fixed[(l, k)] = (gv / dv).conj();
            }
        }
    }
    if free.is_empty() {
        let min = linalg::min_eigenvalue(&fixed);
        return Ok(verdict(fixed, min));
    }
    // P = P' + t I with P' ⪰ 0; maximise t = t⁺ − t⁻.
    let mut p = SdpProblem::new();
    let pv = p.add_variable("P'", m);
    let tp = p.add_variable("t+", 1);
    let tm = p.add_variable("t-", 1);
    for k in 0..m {
        let mut f = Functional::new();
        f.add_re(pv, k, k, 1.0).add_re(tp, 0, 0, 1.0).add_re(tm, 0, 0, -1.0);
        p.add_equality(format!("P[{k},{k}]"), f, 1.0);
        for l in (k + 1)..m {
            if free.contains(&(k, l)) {
                continue;
            }
            let mut re = Functional::new();
            re.add_re(pv, k, l, 1.0);
            p.add_equality(format!("P[{k},{l}].re"), re.clone(), fixed[(k, l)].re);
            p.add_equality(format!("P[{k},{l}].im"), imag_of(&re), fixed[(k, l)].im);
        }
    }
    let mut obj = Functional::new();
    obj.add_re(tp, 0, 0, 1.0).add_re(tm, 0, 0, -1.0);
    p.set_objective(Sense::Maximize, obj);
    let sol = qbench_sdp::solve(&p, config)?;
    match sol.status {
        SolveStatus::PrimalInfeasible => Ok(CptpVerdict::Infeasible { margin: f64::NEG_INFINITY }),
        SolveStatus::Optimal | SolveStatus::MaxIterations => {
            let t = sol.value(tp)[(0, 0)].re - sol.value(tm)[(0, 0)].re;
            let mut witness = sol.value(pv) + CMatrix::identity(m, m) * c64(t, 0.0);
            for k in 0..m {
                witness[(k, k)] = c64(1.0, 0.0);
            }
            Ok(verdict(witness, t))
        }
        status => Err(CoreError::Solver {
            status,
            detail: "CPTP ordering test".into(),
        }),
    }
}

fn verdict(p: CMatrix, min: f64) -> CptpVerdict {
    if min >= -CPTP_TOL {
        CptpVerdict::Feasible { witness: p }
    } else {
        CptpVerdict::Infeasible { margin: min }
    }
}
