//! Dense complex linear algebra on small matrices: cyclic Jacobi Hermitian
//! eigendecomposition, one-sided Jacobi SVD, and helpers built on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const MAX_SWEEPS: usize = 100;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest `|A[i,j] - conj(A[j,i])|`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(A + A†) / 2`
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c64(0.5, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and unit eigenvectors (columns) of a Hermitian
/// matrix by cyclic Jacobi rotations. Only the Hermitian part of `a` is used.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh needs a square matrix");
    let mut m = hermitian_part(a);
    let mut v = CMatrix::identity(n, n);
    let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 1 && scale > 0.0 {
        let threshold = 1e-15 * scale;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= threshold {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// One Jacobi rotation annihilating `m[p,q]`.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let abs = apq.norm();
    if abs == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = apq / abs;
    let theta = (aqq - app) / (2.0 * abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s e^{iφ}], [-s e^{-iφ}, c]] acting on (p, q); A ← J† A J.
    let se = phase * s;
    let sec = se.conj();
    let n = m.nrows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * sec;
        m[(k, q)] = akp * se + akq * c;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * se;
        m[(q, k)] = apk * sec + aqk * c;
    }
    m[(p, q)] = c64(0.0, 0.0);
    m[(q, p)] = c64(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * sec;
        v[(k, q)] = vkp * se + vkq * c;
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    eigh(a).0
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// Singular values (descending) by one-sided Jacobi (Hestenes)
/// orthogonalisation of the columns.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let (rows, cols) = a.shape();
    // Orthogonalise the shorter dimension's worth of columns.
    let mut w = if cols <= rows { a.clone() } else { a.adjoint() };
    let n = w.ncols();
    let m = w.nrows();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = c64(0.0, 0.0);
                for r in 0..m {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let se = phase * s;
                let sec = se.conj();
                for r in 0..m {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    w[(r, i)] = x * c - y * sec;
                    w[(r, j)] = x * se + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| w.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Trace norm of a Hermitian matrix via its eigenvalues.
pub fn trace_norm_hermitian(a: &CMatrix) -> f64 {
    eigvalsh(a).iter().map(|e| e.abs()).sum()
}

/// `B = V sqrt(Λ)` restricted to eigenvalues above `threshold`, so that
/// `B B† ≈ A` for PSD `A`. Returns the factor and the dropped eigenvalue mass.
pub fn psd_factor(a: &CMatrix, threshold: f64) -> (CMatrix, f64) {
    let (vals, vecs) = eigh(a);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > threshold).collect();
    let dropped: f64 = (0..vals.len())
        .filter(|i| !keep.contains(i))
        .map(|i| vals[i].max(0.0))
        .sum();
    let n = a.nrows();
    // Largest eigenvalues first, for a stable column order.
    let cols: Vec<usize> = keep.into_iter().rev().collect();
    let b = CMatrix::from_fn(n, cols.len(), |r, c| vecs[(r, cols[c])] * vals[cols[c]].sqrt());
    (b, dropped)
}

/// Reassembles `V f(Λ) V†`.
pub fn spectral_map(vals: &[f64], vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vecs.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let fl = f(l);
        if fl == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        for j in 0..n {
            let cj = col[j].conj() * fl;
            for i in 0..n {
                out[(i, j)] += col[i] * cj;
            }
        }
    }
    out
}

/// `exp(-i H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -l);
        for i in 0..n {
            scaled[(i, k)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Gauss–Hermite nodes and weights for `∫ f(u) e^{-u²} du`, by the
/// Golub–Welsch eigenproblem.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = CMatrix::zeros(k, k);
    for i in 1..k {
        let b = (i as f64 / 2.0).sqrt();
        jac[(i, i - 1)] = c64(b, 0.0);
        jac[(i - 1, i)] = c64(b, 0.0);
    }
    let (nodes, vecs) = eigh(&jac);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let weights = (0..k).map(|i| sqrt_pi * vecs[(0, i)].norm_sqr()).collect();
    (nodes, weights)
}
