//! Certified lower bounds on output negativity.
//!
//! The bound is `min Tr τ₋` over `τ₋ ⪰ 0`, `τ^{T_A} + τ₋ ⪰ 0` and every
//! output matrix `τ` compatible with the Gram matrix (fixed by the input,
//! since the channel acts on `B` only) and the measurement data. A strictly
//! positive minimum rules out every measure-and-prepare channel.
//!
//! Output states are filtered onto the first `N+1` Fock levels. With `w` the
//! weight outside the cutoff, local filtering gives `N(τ) ≥ (1−w) N(τ')`
//! for the renormalised filtered state `τ'`, and its block traces move by
//! at most `√(w_k w_l)`, which widens the Gram constraints accordingly.

use serde::Serialize;

use qbench_sdp::{Functional, MatrixMap, SdpConfig, SdpProblem, Sense, SolveStatus};

use crate::bipartite::{negativity, BipartiteBlockMatrix};
use crate::blocksym::{from_standard_form, negativity_stform, symmetry_check, to_standard_form, StandardForm, SYMMETRY_TOL};
use crate::error::{CoreError, Result};
use crate::fock::{quadrature_squares, quadratures, DensityMatrix, QuadratureMoments};
use crate::gram::{block_trace_functionals, reduced_factor, GramMatrix};
use crate::linalg::{c64, CMatrix};
use crate::sdpkit::{add_sub_inner, imag_of};

/// Largest `M·(N+1)` accepted by [`benchmark_general`].
pub const GENERAL_SIZE_LIMIT: usize = 160;
/// Largest deviation of the Gram matrix from circulant form accepted by
/// [`benchmark_symmetric`].
pub const CIRCULANT_TOL: f64 = 1e-8;
pub const DEFAULT_CUTOFF: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementScenario {
    /// Full output-state tomography.
    Tomography(DensityMatrix),
    /// Exact raw moments `⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩`.
    Quadratures(QuadratureMoments),
    /// Moments known up to `± sigma · error` each.
    QuadraturesWithErrors {
        moments: QuadratureMoments,
        errors: QuadratureMoments,
        sigma: u8,
    },
}

impl MeasurementScenario {
    pub fn tag(&self) -> String {
        match self {
            MeasurementScenario::Tomography(_) => "tomography".into(),
            MeasurementScenario::Quadratures(_) => "quadratures".into(),
            MeasurementScenario::QuadraturesWithErrors { sigma, .. } => format!("quadratures_{sigma}sigma"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match self {
            MeasurementScenario::Tomography(_) => return Ok(()),
            MeasurementScenario::Quadratures(m) => (*m, *m),
            MeasurementScenario::QuadraturesWithErrors { moments, errors, sigma } => {
                if !(1..=3).contains(sigma) {
                    return Err(CoreError::Invalid(format!("sigma level {sigma} must be 1, 2 or 3")));
                }
                let e = [errors.x, errors.p, errors.x2, errors.p2];
                if e.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(CoreError::Invalid("moment errors must be finite and nonnegative".into()));
                }
                let s = *sigma as f64;
                (
                    QuadratureMoments {
                        x: moments.x - s * errors.x,
                        p: moments.p - s * errors.p,
                        x2: moments.x2 - s * errors.x2,
                        p2: moments.p2 - s * errors.p2,
                    },
                    QuadratureMoments {
                        x: moments.x + s * errors.x,
                        p: moments.p + s * errors.p,
                        x2: moments.x2 + s * errors.x2,
                        p2: moments.p2 + s * errors.p2,
                    },
                )
            }
        };
        let min_sq = |a: f64, b: f64| if a <= 0.0 && b >= 0.0 { 0.0 } else { (a * a).min(b * b) };
        for (name, second, first_lo, first_hi) in [("x", hi.x2, lo.x, hi.x), ("p", hi.p2, lo.p, hi.p)] {
            if ![lo.x, lo.p, lo.x2, lo.p2, hi.x, hi.p, hi.x2, hi.p2].iter().all(|v| v.is_finite()) {
                return Err(CoreError::Invalid("moments must be finite".into()));
            }
            if second < min_sq(first_lo, first_hi) {
                return Err(CoreError::Invalid(format!(
                    "second moment of {name} ({second}) is below its squared mean"
                )));
            }
        }
        Ok(())
    }

    /// Mean photon number implied by the central values.
    pub fn mean_photon_number(&self) -> f64 {
        match self {
            MeasurementScenario::Tomography(rho) => rho.normalized().mean_photon_number(),
            MeasurementScenario::Quadratures(m) | MeasurementScenario::QuadraturesWithErrors { moments: m, .. } => {
                m.mean_photon_number().max(0.0)
            }
        }
    }

    /// `(lower, upper)` for `⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩`; `None` for tomography.
    pub fn moment_bounds(&self) -> Option<[(f64, f64); 4]> {
        match self {
            MeasurementScenario::Tomography(_) => None,
            MeasurementScenario::Quadratures(m) => Some([(m.x, m.x), (m.p, m.p), (m.x2, m.x2), (m.p2, m.p2)]),
            MeasurementScenario::QuadraturesWithErrors { moments: m, errors: e, sigma } => {
                let s = *sigma as f64;
                Some([
                    (m.x - s * e.x, m.x + s * e.x),
                    (m.p - s * e.p, m.p + s * e.p),
                    (m.x2 - s * e.x2, m.x2 + s * e.x2),
                    (m.p2 - s * e.p2, m.p2 + s * e.p2),
                ])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    QuantumDomain,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchOptions {
    pub solver: SdpConfig,
    /// A bound must exceed `solver.tol + verdict_margin` to certify.
    pub verdict_margin: f64,
    /// Reject cutoffs below four times the mean photon number.
    pub photon_guard: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            solver: SdpConfig::default(),
            verdict_margin: 1e-6,
            photon_guard: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkResult {
    pub negativity_lower_bound: f64,
    pub verdict: Verdict,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub scenario: String,
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Output weight above the cutoff (tomography only).
    pub truncation_weight: f64,
    /// The minimising output matrix (filtered and renormalised).
    #[serde(skip_serializing)]
    pub state: Option<BipartiteBlockMatrix>,
}

fn guard_cutoff(scenario: &MeasurementScenario, cutoff: usize, opts: &BenchOptions) -> Result<()> {
    scenario.validate()?;
    let n = scenario.mean_photon_number();
    if opts.photon_guard && (cutoff as f64) < 4.0 * n {
        return Err(CoreError::Invalid(format!(
            "cutoff N = {cutoff} is below 4⟨n⟩ = {:.3} for scenario {}",
            4.0 * n,
            scenario.tag()
        )));
    }
    Ok(())
}

/// `P ρ P` on the first `dn` levels of the normalised state, and the weight
/// it loses.
fn filtered(rho: &DensityMatrix, dn: usize) -> (CMatrix, f64) {
    let r = rho.normalized().resized(dn);
    let w = (1.0 - r.trace()).max(0.0);
    (r.into_matrix(), w)
}

/// `x, p, P x² P, P p² P` at dimension `dn`.
fn moment_operators(dn: usize) -> Result<[CMatrix; 4]> {
    let (x, p) = quadratures(dn)?;
    let (x2, p2) = quadrature_squares(dn)?;
    Ok([x, p, x2, p2])
}

const MOMENT_NAMES: [&str; 4] = ["<x>", "<p>", "<x^2>", "<p^2>"];

fn add_bounded(p: &mut SdpProblem, name: String, f: Functional, lo: f64, hi: f64) {
    if hi - lo <= 0.0 {
        p.add_equality(name, f, 0.5 * (lo + hi));
    } else {
        p.add_interval(name, f, Some(lo), Some(hi));
    }
}

/// Adds `Re`/`Im` constraints `value(f) ∈ target ± radius`.
fn add_complex_bounded(p: &mut SdpProblem, name: &str, f: &Functional, target: num_complex::Complex64, radius: f64, imag: bool) {
    add_bounded(p, format!("{name}.re"), f.clone(), target.re - radius, target.re + radius);
    if imag {
        add_bounded(p, format!("{name}.im"), imag_of(f), target.im - radius, target.im + radius);
    }
}

/// `Σ_ab B[j,a] conj(B[l,b]) X[ro+a, co+b]`, the `(j,l)` entry of
/// `B X_sub C†` with `B = b_row`, `C = b_col`.
fn entry_terms(b_row: &CMatrix, b_col: &CMatrix, j: usize, l: usize) -> Vec<(usize, usize, num_complex::Complex64)> {
    let mut out = Vec::new();
    for a in 0..b_row.ncols() {
        let x = b_row[(j, a)];
        if x == c64(0.0, 0.0) {
            continue;
        }
        for b in 0..b_col.ncols() {
            let y = b_col[(l, b)].conj();
            if y != c64(0.0, 0.0) {
                out.push((a, b, x * y));
            }
        }
    }
    out
}

fn finish(
    sol: &qbench_sdp::SdpSolution,
    keep: f64,
    m: usize,
    cutoff: usize,
    scenario: String,
    state: Option<BipartiteBlockMatrix>,
    opts: &BenchOptions,
) -> Result<BenchmarkResult> {
    let usable = match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::MaxIterations => sol.dual_residual < 1e-6,
        _ => false,
    };
    if !usable {
        let detail = match sol.status {
            SolveStatus::PrimalInfeasible => format!(
                "scenario {scenario}: the measurement constraints (moments or output state), \
                 the unit trace and the Gram-consistency constraints admit no common output state"
            ),
            _ => format!(
                "scenario {scenario}: residuals {:.1e}/{:.1e} after {} iterations",
                sol.primal_residual, sol.dual_residual, sol.iterations
            ),
        };
        return Err(CoreError::Solver {
            status: sol.status,
            detail,
        });
    }
    let bound = sol.dual_objective.max(0.0) * keep;
    let verdict = if bound > opts.solver.tol + opts.verdict_margin {
        Verdict::QuantumDomain
    } else {
        Verdict::Inconclusive
    };
    Ok(BenchmarkResult {
        negativity_lower_bound: bound,
        verdict,
        m,
        cutoff,
        scenario,
        status: sol.status,
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
        iterations: sol.iterations,
        truncation_weight: 1.0 - keep,
        state,
    })
}

/// The standard-form program of [`benchmark_symmetric`] before solving.
#[derive(Clone, Debug)]
pub struct SymmetricProgram {
    pub problem: SdpProblem,
    /// `E_k = B F_k B†` for the variables `F_k`.
    factor: CMatrix,
    e_vars: Vec<usize>,
    keep: f64,
    m: usize,
    cutoff: usize,
    tag: String,
}

/// Bound for a rotation-generated ensemble, using the standard form: the
/// variables are `E_0 … E_{M−1}` and one `τ₋` block per `E_k`.
pub fn benchmark_symmetric(
    gram: &GramMatrix,
    scenario: &MeasurementScenario,
    m: usize,
    cutoff: usize,
    opts: &BenchOptions,
) -> Result<BenchmarkResult> {
    let prog = symmetric_program(gram, scenario, m, cutoff, opts)?;
    let sol = qbench_sdp::solve(&prog.problem, &opts.solver)?;
    let b = &prog.factor;
    let state = if matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIterations) {
        let e: Vec<CMatrix> = prog.e_vars.iter().map(|&v| b * sol.value(v) * b.adjoint()).collect();
        Some(from_standard_form(&StandardForm::new(e)?))
    } else {
        None
    };
    finish(&sol, prog.keep, prog.m, prog.cutoff, prog.tag, state, opts)
}

/// Builds the program solved by [`benchmark_symmetric`]. Measurement
/// constraints are named `<x>`, `<p>`, `<x^2>`, `<p^2>` and
/// `tomography[a,b]`, Gram constraints `gram[d]`.
pub fn symmetric_program(
    gram: &GramMatrix,
    scenario: &MeasurementScenario,
    m: usize,
    cutoff: usize,
    opts: &BenchOptions,
) -> Result<SymmetricProgram> {
    if gram.m() != m {
        return Err(CoreError::Mismatch {
            what: "Gram matrix size and M".into(),
            left: gram.m(),
            right: m,
        });
    }
    let dev = gram.circulant_deviation();
    if dev > CIRCULANT_TOL {
        return Err(CoreError::Invalid(format!(
            "Gram matrix is not circulant (deviation {dev:e}); it does not come from a rotation-generated ensemble"
        )));
    }
    guard_cutoff(scenario, cutoff, opts)?;
    let dn = cutoff + 1;

    let mut p = SdpProblem::new();
    let (b, w, target) = match scenario {
        MeasurementScenario::Tomography(rho) => {
            let (r, w) = filtered(rho, dn);
            let r = r / c64(1.0 - w, 0.0);
            let b = reduced_factor(&r);
            if b.ncols() < dn {
                let rk = b.ncols();
                (b, w, Some(CMatrix::identity(rk, rk)))
            } else {
                (CMatrix::identity(dn, dn), w, Some(r))
            }
        }
        _ => (CMatrix::identity(dn, dn), 0.0, None),
    };
    let r = b.ncols();
    let keep = 1.0 - w;
    let fv: Vec<usize> = (0..m).map(|k| p.add_variable(format!("E{k}"), r)).collect();
    let nv: Vec<usize> = (0..m).map(|k| p.add_variable(format!("N{k}"), dn)).collect();

    match &target {
        Some(t) => {
            // Σ_k E_k = ρ_out
            for a in 0..r {
                for c in a..r {
                    let mut f = Functional::new();
                    for &v in &fv {
                        f.add_re(v, a, c, 1.0);
                    }
                    add_complex_bounded(&mut p, &format!("tomography[{a},{c}]"), &f, t[(a, c)], 0.0, a != c);
                }
            }
        }
        None => {
            let mut tr = Functional::new();
            let bb = b.adjoint() * &b;
            for &v in &fv {
                add_sub_inner(&mut tr, v, 0, 0, &bb);
            }
            p.add_equality("trace", tr, 1.0);
            let bounds = scenario.moment_bounds().expect("quadrature scenario");
            for (i, op) in moment_operators(dn)?.iter().enumerate() {
                let c = b.adjoint() * op * &b;
                let mut f = Functional::new();
                for &v in &fv {
                    add_sub_inner(&mut f, v, 0, 0, &c);
                }
                add_bounded(&mut p, MOMENT_NAMES[i].into(), f, bounds[i].0, bounds[i].1);
            }
        }
    }

    // Gram consistency: g_d = Z_{0,d}; g_0 is the trace, g_{M−d} = conj(g_d).
    let g = block_trace_functionals(&b, &fv, m, dn);
    let radius = if w > 0.0 { w / keep } else { 0.0 };
    for d in 1..=(m / 2) {
        let imag = 2 * d != m;
        let target = gram.matrix()[(0, d)] / keep;
        add_complex_bounded(&mut p, &format!("gram[{d}]"), &g[d], target, radius, imag);
    }

    // Ẽ_k + N_k ⪰ 0 with [Ẽ_k]_jl = [E_{j+l−k}]_jl
    for k in 0..m {
        let mut map = MatrixMap::new(dn);
        for j in 0..dn {
            for l in j..dn {
                let src = fv[(j + l + m * dn - k) % m];
                for (a, c, wgt) in entry_terms(&b, &b, j, l) {
                    map.add(j, l, src, a, c, wgt);
                }
                map.add(j, l, nv[k], j, l, c64(1.0, 0.0));
            }
        }
        p.add_psd(format!("pt[{k}]"), map);
    }

    let mut obj = Functional::new();
    for &v in &nv {
        obj.add_trace(v, dn, 1.0);
    }
    p.set_objective(Sense::Minimize, obj);
    Ok(SymmetricProgram {
        problem: p,
        factor: b,
        e_vars: fv,
        keep,
        m,
        cutoff,
        tag: scenario.tag(),
    })
}

/// Bound without symmetry assumptions: one scenario per test state and a
/// dense `M(N+1)`-dimensional output variable.
pub fn benchmark_general(
    gram: &GramMatrix,
    scenarios: &[MeasurementScenario],
    cutoff: usize,
    opts: &BenchOptions,
) -> Result<BenchmarkResult> {
    let m = scenarios.len();
    if gram.m() != m {
        return Err(CoreError::Mismatch {
            what: "one scenario per test state".into(),
            left: m,
            right: gram.m(),
        });
    }
    let dn = cutoff + 1;
    if m * dn > GENERAL_SIZE_LIMIT {
        return Err(CoreError::Invalid(format!(
            "M·(N+1) = {} exceeds the limit {GENERAL_SIZE_LIMIT} of the unsymmetrised benchmark",
            m * dn
        )));
    }
    for s in scenarios {
        guard_cutoff(s, cutoff, opts)?;
    }

    // Per-block filtered states and factors.
    let mut weights = vec![0.0; m];
    let mut filt: Vec<Option<CMatrix>> = vec![None; m];
    for (k, s) in scenarios.iter().enumerate() {
        if let MeasurementScenario::Tomography(rho) = s {
            let (r, w) = filtered(rho, dn);
            weights[k] = w;
            filt[k] = Some(r);
        }
    }
    let wbar = weights.iter().sum::<f64>() / m as f64;
    let keep = 1.0 - wbar;
    let scale = 1.0 / keep;
    let mut factors = Vec::with_capacity(m);
    let mut fixed = vec![false; m];
    for k in 0..m {
        match &filt[k] {
            Some(r) => {
                let r = r * c64(scale, 0.0);
                let b = reduced_factor(&r);
                if b.ncols() < dn {
                    fixed[k] = true;
                    factors.push(b);
                } else {
                    factors.push(CMatrix::identity(dn, dn));
                }
            }
            None => factors.push(CMatrix::identity(dn, dn)),
        }
    }
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
    let wv = p.add_variable("T", total);
    let nv = p.add_variable("N", m * dn);

    let ops = moment_operators(dn)?;
    for k in 0..m {
        let o = offsets[k];
        let rk = factors[k].ncols();
        if fixed[k] {
            for a in 0..rk {
                for c in a..rk {
                    let mut f = Functional::new();
                    f.add_re(wv, o + a, o + c, 1.0);
                    let t = if a == c { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
                    add_complex_bounded(&mut p, &format!("tomography{k}[{a},{c}]"), &f, t, 0.0, a != c);
                }
            }
        } else if let Some(r) = &filt[k] {
            for a in 0..dn {
                for c in a..dn {
                    let mut f = Functional::new();
                    f.add_re(wv, o + a, o + c, 1.0);
                    add_complex_bounded(&mut p, &format!("tomography{k}[{a},{c}]"), &f, r[(a, c)] * scale, 0.0, a != c);
                }
            }
        } else {
            let mut tr = Functional::new();
            for a in 0..dn {
                tr.add_re(wv, o + a, o + a, 1.0);
            }
            p.add_equality(format!("trace{k}"), tr, scale);
            let bounds = scenarios[k].moment_bounds().expect("quadrature scenario");
            for (i, op) in ops.iter().enumerate() {
                let mut f = Functional::new();
                add_sub_inner(&mut f, wv, o, o, op);
                add_bounded(&mut p, format!("{}{k}", MOMENT_NAMES[i]), f, bounds[i].0 * scale, bounds[i].1 * scale);
            }
        }
    }

    // Tr T_ik = Z_ki, i.e. Tr(B_k† B_i W_ik)
    for i in 0..m {
        for k in (i + 1)..m {
            let c = factors[k].adjoint() * &factors[i];
            let mut f = Functional::new();
            add_sub_inner(&mut f, wv, offsets[i], offsets[k], &c);
            let radius = (weights[i] * weights[k]).sqrt() * scale;
            add_complex_bounded(&mut p, &format!("gram[{k},{i}]"), &f, gram.matrix()[(k, i)] * scale, radius, true);
        }
    }

    // τ^{T_A}[(k,j),(l,j')] = T_lk[j,j']/M
    let n = m * dn;
    let mut map = MatrixMap::new(n);
    let inv_m = 1.0 / m as f64;
    for k in 0..m {
        for j in 0..dn {
            let row = k * dn + j;
            for l in 0..m {
                for jp in 0..dn {
                    let col = l * dn + jp;
                    if col < row {
                        continue;
                    }
                    for (a, c, wgt) in entry_terms(&factors[l], &factors[k], j, jp) {
                        map.add(row, col, wv, offsets[l] + a, offsets[k] + c, wgt * inv_m);
                    }
                    map.add(row, col, nv, row, col, c64(1.0, 0.0));
                }
            }
        }
    }
    p.add_psd("pt", map);
    let mut obj = Functional::new();
    obj.add_trace(nv, n, 1.0);
    p.set_objective(Sense::Minimize, obj);

    log::debug!("general benchmark: M={m}, N={cutoff}, {} rows", p.row_count());
    let sol = qbench_sdp::solve(&p, &opts.solver)?;
    let state = if matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIterations) {
        let wmat = sol.value(wv);
        let mut blocks = Vec::with_capacity(m * m);
        for k in 0..m {
            for l in 0..m {
                let sub = wmat.view((offsets[k], offsets[l]), (factors[k].ncols(), factors[l].ncols()));
                blocks.push(&factors[k] * sub * factors[l].adjoint());
            }
        }
        Some(BipartiteBlockMatrix::new_unchecked(m, dn, blocks)?)
    } else {
        None
    };
    let tag = {
        let tags: Vec<String> = scenarios.iter().map(|s| s.tag()).collect();
        if tags.iter().all(|t| *t == tags[0]) {
            tags[0].clone()
        } else {
            tags.join("+")
        }
    };
    finish(&sol, keep, m, cutoff, tag, state, opts)
}

/// Negativity of an input matrix, through the standard form when it is
/// phase symmetric.
pub fn input_negativity(rho_in: &BipartiteBlockMatrix) -> Result<f64> {
    if rho_in.m() > 1 && symmetry_check(rho_in) <= SYMMETRY_TOL {
        let sf = to_standard_form(rho_in)?;
        let min = sf.min_eigenvalue();
        if min < -crate::fock::PSD_TOL {
            return Err(CoreError::NotPsd { min_eigenvalue: min });
        }
        negativity_stform(&sf)
    } else {
        negativity(rho_in)
    }
}
