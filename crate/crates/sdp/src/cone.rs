//! Lowering of [`SdpProblem`] to real conic standard form
//! `min <c, x>  s.t.  A x = b,  x ∈ S^{n_1}_+ × … × S^{n_k}_+ × R^p_+`.
//!
//! Each Hermitian variable becomes a realified block; each extra matrix
//! inequality gets its own slack block tied to the map by equalities; finite
//! interval sides get nonnegative scalar slacks.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::problem::{Functional, Sense, SdpProblem};

/// Coefficient on the symmetric pair `(p, q)`, `p <= q`, of PSD block `block`.
/// The pair contributes `v * Y[p,p]` on the diagonal and `2 v * Y[p,q]` off it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Entry {
    pub block: usize,
    pub p: usize,
    pub q: usize,
    pub v: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Row {
    pub psd: Vec<Entry>,
    pub lp: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub(crate) struct ConeProblem {
    pub psd_dims: Vec<usize>,
    pub lp_dim: usize,
    pub rows: Vec<Row>,
    pub b: Vec<f64>,
    pub c: Row,
    /// `+1` for minimisation, `-1` when the user objective was negated.
    pub sign: f64,
}

/// Accumulates coefficients of one row, merging duplicates.
#[derive(Default)]
struct RowBuilder {
    psd: BTreeMap<(usize, usize, usize), f64>,
    lp: BTreeMap<usize, f64>,
}

impl RowBuilder {
    fn psd(&mut self, block: usize, a: usize, b: usize, v: f64) {
        let key = (block, a.min(b), a.max(b));
        *self.psd.entry(key).or_insert(0.0) += v;
    }

    /// Adds `Re(w * X[r, c])` for an `n x n` variable realified into `block`.
    fn term(&mut self, block: usize, n: usize, r: usize, c: usize, w: Complex64) {
        // Re(w X_rc) = a R_rc - b I_rc with X = R + iI.
        let (a, b) = (w.re, w.im);
        if a != 0.0 {
            if r == c {
                self.psd(block, r, r, 0.5 * a);
                self.psd(block, r + n, r + n, 0.5 * a);
            } else {
                self.psd(block, r, c, 0.25 * a);
                self.psd(block, r + n, c + n, 0.25 * a);
            }
        }
        if b != 0.0 && r != c {
            // I_rc = (Y[r+n, c] - Y[r, c+n]) / 2
            self.psd(block, r + n, c, -0.25 * b);
            self.psd(block, r, c + n, 0.25 * b);
        }
    }

    fn functional(&mut self, f: &Functional, var_dims: &[usize], scale: f64) {
        for t in &f.terms {
            self.term(t.var, var_dims[t.var], t.row, t.col, t.weight * scale);
        }
    }

    fn finish(self) -> Row {
        Row {
            psd: self
                .psd
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((block, p, q), v)| Entry { block, p, q, v })
                .collect(),
            lp: self.lp.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }
}

pub(crate) fn lower(problem: &SdpProblem) -> ConeProblem {
    let var_dims: Vec<usize> = problem.variables.iter().map(|v| v.dim).collect();
    let mut psd_dims: Vec<usize> = var_dims.iter().map(|d| 2 * d).collect();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut lp_dim = 0usize;

    for eq in &problem.equalities {
        let mut rb = RowBuilder::default();
        rb.functional(&eq.functional, &var_dims, 1.0);
        rows.push(rb.finish());
        b.push(eq.target);
    }

    for iv in &problem.intervals {
        match (iv.lower, iv.upper) {
            (Some(l), Some(u)) if l == u => {
                let mut rb = RowBuilder::default();
                rb.functional(&iv.functional, &var_dims, 1.0);
                rows.push(rb.finish());
                b.push(l);
            }
            (lower, upper) => {
                if let Some(l) = lower {
                    let mut rb = RowBuilder::default();
                    rb.functional(&iv.functional, &var_dims, 1.0);
                    rb.lp.insert(lp_dim, -1.0);
                    lp_dim += 1;
                    rows.push(rb.finish());
                    b.push(l);
                }
                if let Some(u) = upper {
                    let mut rb = RowBuilder::default();
                    rb.functional(&iv.functional, &var_dims, 1.0);
                    rb.lp.insert(lp_dim, 1.0);
                    lp_dim += 1;
                    rows.push(rb.finish());
                    b.push(u);
                }
            }
        }
    }

    for pc in &problem.psd_constraints {
        let k = pc.map.dim;
        let slack = psd_dims.len();
        psd_dims.push(2 * k);
        // Group map contributions by output entry.
        let mut by_out: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, e) in pc.map.entries.iter().enumerate() {
            by_out.entry((e.out_row, e.out_col)).or_default().push(i);
        }
        let mut constant: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(r, c, v) in &pc.map.constant {
            *constant.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        for r in 0..k {
            for c in r..k {
                let c0 = constant.get(&(r, c)).copied().unwrap_or_default();
                let contributions = by_out.get(&(r, c));
                // Real part: Re S_rc - sum Re(w X) = Re C0_rc
                let mut rb = RowBuilder::default();
                rb.term(slack, k, r, c, Complex64::new(1.0, 0.0));
                if let Some(list) = contributions {
                    for &i in list {
                        let e = &pc.map.entries[i];
                        rb.term(e.var, var_dims[e.var], e.row, e.col, -e.weight);
                    }
                }
                rows.push(rb.finish());
                b.push(c0.re);
                if r != c {
                    // Imaginary part: Im z = Re(-i z)
                    let mut rb = RowBuilder::default();
                    rb.term(slack, k, r, c, Complex64::new(0.0, -1.0));
                    if let Some(list) = contributions {
                        for &i in list {
                            let e = &pc.map.entries[i];
                            let w = e.weight * Complex64::new(0.0, -1.0);
                            rb.term(e.var, var_dims[e.var], e.row, e.col, -w);
                        }
                    }
                    rows.push(rb.finish());
                    b.push(c0.im);
                }
            }
        }
    }

    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut rb = RowBuilder::default();
    rb.functional(&problem.objective, &var_dims, sign);
    let c = rb.finish();

    ConeProblem {
        psd_dims,
        lp_dim,
        rows,
        b,
        c,
        sign,
    }
}
