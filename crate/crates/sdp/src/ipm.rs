//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling and
//! a Mehrotra predictor-corrector.
//!
//! The embedding solves
//!
//! ```text
//!   A x - b τ = 0,   c τ - Aᵀ y - z = 0,   bᵀ y - cᵀ x - κ = 0,
//!   x, z ∈ K,   τ, κ ≥ 0
//! ```
//!
//! from the interior point `x = z = e, y = 0, τ = κ = 1`. A solution with
//! `τ > 0` is an optimal primal-dual pair after dividing by `τ`; `κ > 0`
//! yields an infeasibility certificate.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::cone::{ConeProblem, Row};

/// Largest accepted excess of the dual over the primal objective at an
/// optimal iterate.
const WEAK_DUALITY_SLACK: f64 = 1e-9;
const MAX_EXTRA_STEPS: usize = 5;
/// Give up once the merit has not halved for this many iterations.
const STALL_ITERATIONS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpConfig {
    /// Relative tolerance on primal residual, dual residual and gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance for accepting an infeasibility certificate.
    pub infeasibility_tol: f64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            tol: 1e-8,
            max_iter: 200,
            infeasibility_tol: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    /// Iteration limit or numerical stall; the best iterate is returned.
    MaxIterations,
}

/// Per-iteration diagnostics, objective values in the conic (minimisation)
/// sense and normalised by `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct ConeSolution {
    pub status: SolveStatus,
    pub x: Vec<DMatrix<f64>>,
    pub tau: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub history: Vec<IterationLog>,
}

/// Element of the cone: PSD blocks plus a nonnegative orthant.
#[derive(Clone, Debug, PartialEq)]
struct Point {
    psd: Vec<DMatrix<f64>>,
    lp: Vec<f64>,
}

impl Point {
    fn zeros(cp: &ConeProblem) -> Self {
        Point {
            psd: cp.psd_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            lp: vec![0.0; cp.lp_dim],
        }
    }

    fn identity(cp: &ConeProblem) -> Self {
        Point {
            psd: cp.psd_dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
            lp: vec![1.0; cp.lp_dim],
        }
    }

    fn dot(&self, other: &Point) -> f64 {
        let blocks: f64 = self.psd.iter().zip(&other.psd).map(|(a, b)| a.dot(b)).sum();
        let lp: f64 = self.lp.iter().zip(&other.lp).map(|(a, b)| a * b).sum();
        blocks + lp
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * other`
    fn axpy(&mut self, alpha: f64, other: &Point) {
        for (a, b) in self.psd.iter_mut().zip(&other.psd) {
            for (u, v) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *u += alpha * v;
            }
        }
        for (a, b) in self.lp.iter_mut().zip(&other.lp) {
            *a += alpha * b;
        }
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.psd {
            *a *= s;
        }
        for a in &mut self.lp {
            *a *= s;
        }
    }
}

fn row_dot(row: &Row, x: &Point) -> f64 {
    let mut s = 0.0;
    for e in &row.psd {
        let blk = &x.psd[e.block];
        s += if e.p == e.q {
            e.v * blk[(e.p, e.p)]
        } else {
            2.0 * e.v * blk[(e.p, e.q)]
        };
    }
    for &(k, v) in &row.lp {
        s += v * x.lp[k];
    }
    s
}

fn row_scatter(row: &Row, y: f64, out: &mut Point) {
    for e in &row.psd {
        let blk = &mut out.psd[e.block];
        blk[(e.p, e.q)] += y * e.v;
        if e.p != e.q {
            blk[(e.q, e.p)] += y * e.v;
        }
    }
    for &(k, v) in &row.lp {
        out.lp[k] += y * v;
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nesterov–Todd scaling of one PSD block: `R` with `Rᵀ Z R = R⁻¹ X R⁻ᵀ = Λ`.
struct BlockScaling {
    r: DMatrix<f64>,
    g: DMatrix<f64>,
    lambda: Vec<f64>,
}

struct Scaling {
    psd: Vec<BlockScaling>,
    /// `sqrt(x/z)` for each orthant coordinate.
    lp_s: Vec<f64>,
    lp_lambda: Vec<f64>,
}

/// Lower Cholesky factor, nudging the diagonal if rounding has pushed the
/// matrix to the boundary of the cone.
fn cholesky_lower(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(ch) = sym.clone().cholesky() {
        return ch.l();
    }
    let scale = sym.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shift = 1e-14 * scale;
    loop {
        let mut shifted = sym.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(ch) = shifted.cholesky() {
            return ch.l();
        }
        shift *= 10.0;
    }
}

fn nt_block(x: &DMatrix<f64>, z: &DMatrix<f64>) -> BlockScaling {
    let l1 = cholesky_lower(x);
    let l2 = cholesky_lower(z);
    let svd = SVD::new(l2.transpose() * &l1, false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let sigma: Vec<f64> = svd.singular_values.iter().map(|s| s.max(1e-300)).collect();
    let n = sigma.len();
    let mut r = &l1 * vt.transpose();
    for j in 0..n {
        let f = 1.0 / sigma[j].sqrt();
        r.column_mut(j).scale_mut(f);
    }
    let g = &r * r.transpose();
    BlockScaling { r, g, lambda: sigma }
}

/// Min eigenvalue of `Λ^{-1/2} D Λ^{-1/2}`.
fn scaled_min_eig(d: &DMatrix<f64>, lambda: &[f64]) -> f64 {
    let n = lambda.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = 0.5 * (d[(i, j)] + d[(j, i)]) / (lambda[i] * lambda[j]).sqrt();
        }
    }
    m.symmetric_eigenvalues().min()
}

struct Direction {
    dx: Point,
    dy: Vec<f64>,
    dz: Point,
    dtau: f64,
    dkappa: f64,
    dxs: Point,
    dzs: Point,
}

/// Everything that is fixed within one iteration.
struct Newton<'a> {
    cp: &'a ConeProblem,
    sc: &'a Scaling,
    factor: Llt<f64>,
    m: usize,
    /// `A Θ c`
    w: Vec<f64>,
    /// `H⁻¹ (w + b)`
    v: Vec<f64>,
    /// Reduced denominator for `dτ`, without the `κ/τ` term.
    a0: f64,
}

pub(crate) struct Solver<'a> {
    cp: &'a ConeProblem,
    config: SdpConfig,
    m: usize,
    c: Point,
    /// For each PSD block, the rows touching it (index `m` is the objective).
    block_rows: Vec<Vec<usize>>,
    /// For each orthant coordinate, `(row, coefficient)`.
    lp_rows: Vec<Vec<(usize, f64)>>,
    nu: f64,
}

impl<'a> Solver<'a> {
    pub(crate) fn new(cp: &'a ConeProblem, config: SdpConfig) -> Self {
        let m = cp.rows.len();
        let mut c = Point::zeros(cp);
        row_scatter(&cp.c, 1.0, &mut c);
        let mut block_rows = vec![Vec::new(); cp.psd_dims.len()];
        let mut lp_rows = vec![Vec::new(); cp.lp_dim];
        for (i, row) in cp.rows.iter().chain(std::iter::once(&cp.c)).enumerate() {
            let mut last = usize::MAX;
            for e in &row.psd {
                // entries are sorted by block
                if e.block != last {
                    block_rows[e.block].push(i);
                    last = e.block;
                }
            }
            for &(k, v) in &row.lp {
                lp_rows[k].push((i, v));
            }
        }
        let nu = cp.psd_dims.iter().sum::<usize>() as f64 + cp.lp_dim as f64;
        Solver {
            cp,
            config,
            m,
            c,
            block_rows,
            lp_rows,
            nu,
        }
    }

    fn row(&self, i: usize) -> &Row {
        if i == self.m {
            &self.cp.c
        } else {
            &self.cp.rows[i]
        }
    }

    fn apply(&self, x: &Point) -> Vec<f64> {
        self.cp.rows.iter().map(|r| row_dot(r, x)).collect()
    }

    fn adjoint(&self, y: &[f64]) -> Point {
        let mut out = Point::zeros(self.cp);
        for (row, &yi) in self.cp.rows.iter().zip(y) {
            if yi != 0.0 {
                row_scatter(row, yi, &mut out);
            }
        }
        out
    }

    fn scaling(&self, x: &Point, z: &Point) -> Scaling {
        let psd = x.psd.iter().zip(&z.psd).map(|(xb, zb)| nt_block(xb, zb)).collect();
        let lp_s = x.lp.iter().zip(&z.lp).map(|(a, b)| (a / b).sqrt()).collect();
        let lp_lambda = x.lp.iter().zip(&z.lp).map(|(a, b)| (a * b).sqrt()).collect();
        Scaling {
            psd,
            lp_s,
            lp_lambda,
        }
    }

    /// `Θ u = G u G` blockwise.
    fn theta(&self, sc: &Scaling, u: &Point) -> Point {
        Point {
            psd: sc
                .psd
                .iter()
                .zip(&u.psd)
                .map(|(s, ub)| &s.g * ub * &s.g)
                .collect(),
            lp: sc.lp_s.iter().zip(&u.lp).map(|(s, a)| s * s * a).collect(),
        }
    }

    /// `Wᵀ q = R q Rᵀ`.
    fn w_t(&self, sc: &Scaling, q: &Point) -> Point {
        Point {
            psd: sc
                .psd
                .iter()
                .zip(&q.psd)
                .map(|(s, qb)| &s.r * qb * s.r.transpose())
                .collect(),
            lp: sc.lp_s.iter().zip(&q.lp).map(|(s, a)| s * a).collect(),
        }
    }

    /// `W d = Rᵀ d R`.
    fn w(&self, sc: &Scaling, d: &Point) -> Point {
        Point {
            psd: sc
                .psd
                .iter()
                .zip(&d.psd)
                .map(|(s, db)| s.r.transpose() * db * &s.r)
                .collect(),
            lp: sc.lp_s.iter().zip(&d.lp).map(|(s, a)| s * a).collect(),
        }
    }

    /// Schur complement `[A; cᵀ] Θ [A; cᵀ]ᵀ` of order `m + 1`.
    fn schur(&self, sc: &Scaling) -> Mat<f64> {
        let m1 = self.m + 1;
        let mut h = Mat::<f64>::zeros(m1, m1);
        for (b, rows) in self.block_rows.iter().enumerate() {
            let g = &sc.psd[b].g;
            let n = g.nrows();
            let gs = g.as_slice();
            // Restrict every touching row to this block once.
            let local: Vec<Vec<(usize, usize, f64)>> = rows
                .iter()
                .map(|&i| {
                    self.row(i)
                        .psd
                        .iter()
                        .filter(|e| e.block == b)
                        .map(|e| (e.p, e.q, e.v))
                        .collect()
                })
                .collect();
            let mut t = vec![0.0f64; n * n];
            for (jpos, &j) in rows.iter().enumerate() {
                t.iter_mut().for_each(|v| *v = 0.0);
                // T = G A_j G, accumulated column by column.
                for &(p, q, v) in &local[jpos] {
                    let gp = &gs[p * n..(p + 1) * n];
                    let gq = &gs[q * n..(q + 1) * n];
                    for col in 0..n {
                        let tc = &mut t[col * n..(col + 1) * n];
                        let f = v * gq[col];
                        if p == q {
                            for (tv, gv) in tc.iter_mut().zip(gp) {
                                *tv += f * gv;
                            }
                        } else {
                            let f2 = v * gp[col];
                            for ((tv, gpv), gqv) in tc.iter_mut().zip(gp).zip(gq) {
                                *tv += f * gpv + f2 * gqv;
                            }
                        }
                    }
                }
                for (ipos, &i) in rows.iter().enumerate().skip(jpos) {
                    let mut s = 0.0;
                    for &(p, q, v) in &local[ipos] {
                        s += if p == q {
                            v * t[p * n + p]
                        } else {
                            2.0 * v * t[q * n + p]
                        };
                    }
                    let (r, c) = if i >= j { (i, j) } else { (j, i) };
                    h[(r, c)] += s;
                }
            }
        }
        for (k, rows) in self.lp_rows.iter().enumerate() {
            let th = sc.lp_s[k] * sc.lp_s[k];
            for (a, &(i, vi)) in rows.iter().enumerate() {
                for &(j, vj) in &rows[..=a] {
                    let (r, c) = if i >= j { (i, j) } else { (j, i) };
                    h[(r, c)] += th * vi * vj;
                }
            }
        }
        for j in 0..m1 {
            for i in (j + 1)..m1 {
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }

    fn factor(&self, h: &Mat<f64>) -> Llt<f64> {
        let m = self.m;
        let sub = h.as_ref().submatrix(0, 0, m, m);
        if let Ok(f) = sub.llt(Side::Lower) {
            return f;
        }
        let maxdiag = (0..m).map(|i| h[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
        let mut delta = 1e-14 * maxdiag;
        loop {
            let mut reg = sub.to_owned();
            for i in 0..m {
                reg[(i, i)] += delta;
            }
            if let Ok(f) = reg.llt(Side::Lower) {
                log::debug!("schur complement regularised by {delta:e}");
                return f;
            }
            delta *= 100.0;
            if delta > 1e6 * maxdiag {
                // Completely degenerate; fall back to a diagonal system.
                let diag = Mat::<f64>::from_fn(m, m, |i, j| if i == j { maxdiag } else { 0.0 });
                return diag.llt(Side::Lower).expect("positive diagonal");
            }
        }
    }

    fn solve(&self, f: &Llt<f64>, rhs: &[f64]) -> Vec<f64> {
        if rhs.is_empty() {
            return Vec::new();
        }
        let mut col = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        f.solve_in_place(col.as_mut());
        (0..rhs.len()).map(|i| col[(i, 0)]).collect()
    }

    fn newton<'s>(&'s self, sc: &'s Scaling) -> Newton<'s> {
        let h = self.schur(sc);
        let m = self.m;
        let factor = self.factor(&h);
        let w: Vec<f64> = (0..m).map(|i| h[(i, m)]).collect();
        let ctc = h[(m, m)];
        let wb: Vec<f64> = w.iter().zip(&self.cp.b).map(|(a, b)| a + b).collect();
        let v = self.solve(&factor, &wb);
        let bw: Vec<f64> = self.cp.b.iter().zip(&w).map(|(b, a)| b - a).collect();
        let a0 = ctc + vdot(&bw, &v);
        Newton {
            cp: self.cp,
            sc,
            factor,
            m,
            w,
            v,
            a0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        nt: &Newton<'_>,
        state: &State,
        res: &Residuals,
        eta: f64,
        rc: &Point,
        r_tau: f64,
    ) -> Direction {
        let sc = nt.sc;
        // q = λ ⊘ r_c
        let mut q = Point::zeros(nt.cp);
        for (b, s) in sc.psd.iter().enumerate() {
            let n = s.lambda.len();
            for j in 0..n {
                for i in 0..n {
                    q.psd[b][(i, j)] = 2.0 * rc.psd[b][(i, j)] / (s.lambda[i] + s.lambda[j]);
                }
            }
        }
        for k in 0..q.lp.len() {
            q.lp[k] = rc.lp[k] / sc.lp_lambda[k];
        }
        let wq = self.w_t(sc, &q);
        let th_rd = self.theta(sc, &res.rd);
        let a_wq = self.apply(&wq);
        let a_thrd = self.apply(&th_rd);
        let rhs: Vec<f64> = (0..nt.m)
            .map(|i| eta * res.rp[i] - a_wq[i] + eta * a_thrd[i])
            .collect();
        let u = self.solve(&nt.factor, &rhs);
        let bw: Vec<f64> = self.cp.b.iter().zip(&nt.w).map(|(b, a)| b - a).collect();
        let denom = nt.a0 + state.kappa / state.tau;
        let numer = eta * res.rg + self.c.dot(&wq) - eta * self.c.dot(&th_rd) - vdot(&bw, &u)
            + r_tau / state.tau;
        let dtau = numer / denom;
        let dy: Vec<f64> = u.iter().zip(&nt.v).map(|(a, b)| a + b * dtau).collect();
        let mut dz = res.rd.clone();
        dz.scale(eta);
        dz.axpy(-1.0, &self.adjoint(&dy));
        dz.axpy(dtau, &self.c);
        let mut dx = wq;
        dx.axpy(-1.0, &self.theta(sc, &dz));
        let dkappa = (r_tau - state.kappa * dtau) / state.tau;
        let dzs = self.w(sc, &dz);
        let mut dxs = q;
        dxs.axpy(-1.0, &dzs);
        Direction {
            dx,
            dy,
            dz,
            dtau,
            dkappa,
            dxs,
            dzs,
        }
    }

    /// Largest step keeping the iterate in the cone interior (unbounded → ∞).
    fn max_step(&self, sc: &Scaling, d: &Direction, state: &State) -> f64 {
        let mut alpha = f64::INFINITY;
        let mut limit = |ratio: f64| {
            if ratio < 0.0 {
                alpha = alpha.min(-1.0 / ratio);
            }
        };
        for (b, s) in sc.psd.iter().enumerate() {
            limit(scaled_min_eig(&d.dxs.psd[b], &s.lambda));
            limit(scaled_min_eig(&d.dzs.psd[b], &s.lambda));
        }
        for k in 0..sc.lp_lambda.len() {
            limit(d.dxs.lp[k] / sc.lp_lambda[k]);
            limit(d.dzs.lp[k] / sc.lp_lambda[k]);
        }
        limit(d.dtau / state.tau);
        limit(d.dkappa / state.kappa);
        alpha
    }

    fn residuals(&self, s: &State) -> Residuals {
        let ax = self.apply(&s.x);
        let rp: Vec<f64> = self.cp.b.iter().zip(&ax).map(|(b, a)| s.tau * b - a).collect();
        let mut rd = self.c.clone();
        rd.scale(s.tau);
        rd.axpy(-1.0, &self.adjoint(&s.y));
        rd.axpy(-1.0, &s.z);
        let cx = self.c.dot(&s.x);
        let by = vdot(&self.cp.b, &s.y);
        let rg = cx - by + s.kappa;
        Residuals {
            rp,
            rd,
            rg,
            cx,
            by,
        }
    }

    pub(crate) fn run(&self) -> ConeSolution {
        let cfg = self.config;
        let mut state = State {
            x: Point::identity(self.cp),
            z: Point::identity(self.cp),
            y: vec![0.0; self.m],
            tau: 1.0,
            kappa: 1.0,
        };
        let bnorm = norm2(&self.cp.b);
        let cnorm = self.c.norm();
        let mut history = Vec::new();
        let mut best: Option<(f64, State, IterationLog)> = None;
        let mut step = 0.0;
        let mut converged: Option<(State, IterationLog)> = None;
        let mut extra = 0usize;
        let mut progress = (f64::INFINITY, 0usize);

        for iter in 0..=cfg.max_iter {
            let res = self.residuals(&state);
            let mu = (state.x.dot(&state.z) + state.tau * state.kappa) / (self.nu + 1.0);
            let pobj = res.cx / state.tau;
            let dobj = res.by / state.tau;
            let pres = norm2(&res.rp) / state.tau / (1.0 + bnorm);
            let dres = res.rd.norm() / state.tau / (1.0 + cnorm);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let log_entry = IterationLog {
                iteration: iter,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_residual: pres,
                dual_residual: dres,
                gap,
                mu,
                tau: state.tau,
                kappa: state.kappa,
                step,
            };
            log::debug!(
                "it {iter:3} pobj {pobj:+.9e} dobj {dobj:+.9e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {:.2e} kappa {:.2e}",
                state.tau,
                state.kappa
            );
            history.push(log_entry);
            if !(pobj.is_finite() && dobj.is_finite() && pres.is_finite() && dres.is_finite()) {
                break;
            }
            let merit = pres.max(dres).max(gap);
            if best.as_ref().is_none_or(|(bm, _, _)| merit < *bm) {
                best = Some((merit, state.clone(), log_entry));
            }
            if merit < 0.5 * progress.0 {
                progress = (merit, iter);
            } else if iter - progress.1 >= STALL_ITERATIONS {
                log::debug!("no progress since iteration {}, stopping", progress.1);
                break;
            }

            if pres <= cfg.tol && dres <= cfg.tol && gap <= cfg.tol {
                // Near-feasible iterates can still have the dual value a hair
                // above the primal one; a few more steps normally cure that.
                if dobj - pobj <= WEAK_DUALITY_SLACK || extra >= MAX_EXTRA_STEPS {
                    return self.finish(SolveStatus::Optimal, &state, log_entry, history);
                }
                converged = Some((state.clone(), log_entry));
                extra += 1;
            }
            // Infeasibility certificates, judged on the unnormalised iterate.
            if res.by > 0.0 {
                let mut aty_z = self.adjoint(&state.y);
                aty_z.axpy(1.0, &state.z);
                if aty_z.norm() / res.by <= cfg.infeasibility_tol * cnorm.max(1.0) {
                    return self.finish(SolveStatus::PrimalInfeasible, &state, log_entry, history);
                }
            }
            if res.cx < 0.0 {
                let ax = norm2(&self.apply(&state.x));
                if ax / (-res.cx) <= cfg.infeasibility_tol * bnorm.max(1.0) {
                    return self.finish(SolveStatus::DualInfeasible, &state, log_entry, history);
                }
            }
            if iter == cfg.max_iter {
                break;
            }

            let sc = self.scaling(&state.x, &state.z);
            let nt = self.newton(&sc);

            // Predictor.
            let mut rc = Point::zeros(self.cp);
            for (b, s) in sc.psd.iter().enumerate() {
                for (i, l) in s.lambda.iter().enumerate() {
                    rc.psd[b][(i, i)] = -l * l;
                }
            }
            for (k, l) in sc.lp_lambda.iter().enumerate() {
                rc.lp[k] = -l * l;
            }
            let tk = state.tau * state.kappa;
            let aff = self.direction(&nt, &state, &res, 1.0, &rc, -tk);
            let alpha_aff = self.max_step(&sc, &aff, &state).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // Corrector.
            for (b, s) in sc.psd.iter().enumerate() {
                let (dxa, dza) = (&aff.dxs.psd[b], &aff.dzs.psd[b]);
                let prod = dxa * dza;
                let sym = (&prod + prod.transpose()) * 0.5;
                rc.psd[b] = -sym;
                for (i, l) in s.lambda.iter().enumerate() {
                    rc.psd[b][(i, i)] += sigma * mu - l * l;
                }
            }
            for (k, l) in sc.lp_lambda.iter().enumerate() {
                rc.lp[k] = sigma * mu - l * l - aff.dxs.lp[k] * aff.dzs.lp[k];
            }
            let r_tau = sigma * mu - tk - aff.dtau * aff.dkappa;
            let dir = self.direction(&nt, &state, &res, 1.0 - sigma, &rc, r_tau);
            let alpha = (0.99 * self.max_step(&sc, &dir, &state)).min(1.0);
            step = alpha;
            if !alpha.is_finite() || alpha < 1e-12 {
                log::debug!("step length collapsed at iteration {iter}");
                break;
            }
            state.x.axpy(alpha, &dir.dx);
            state.z.axpy(alpha, &dir.dz);
            for (y, d) in state.y.iter_mut().zip(&dir.dy) {
                *y += alpha * d;
            }
            state.tau += alpha * dir.dtau;
            state.kappa += alpha * dir.dkappa;
        }

        if let Some((st, entry)) = converged {
            return self.finish(SolveStatus::Optimal, &st, entry, history);
        }
        let (_, st, entry) = best.expect("at least one iterate is recorded");
        self.finish(SolveStatus::MaxIterations, &st, entry, history)
    }

    fn finish(
        &self,
        status: SolveStatus,
        state: &State,
        entry: IterationLog,
        history: Vec<IterationLog>,
    ) -> ConeSolution {
        let iterations = history.len().saturating_sub(1);
        ConeSolution {
            status,
            x: state.x.psd.clone(),
            tau: state.tau,
            primal_objective: entry.primal_objective,
            dual_objective: entry.dual_objective,
            primal_residual: entry.primal_residual,
            dual_residual: entry.dual_residual,
            gap: entry.gap,
            iterations,
            history,
        }
    }
}

#[derive(Clone, Debug)]
struct State {
    x: Point,
    z: Point,
    y: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rd: Point,
    rg: f64,
    cx: f64,
    by: f64,
}
