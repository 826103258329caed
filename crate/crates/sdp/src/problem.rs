//! User-facing problem model.
//!
//! Variables are complex Hermitian matrices constrained to be positive
//! semidefinite. Every functional is real-linear in the variables and is
//! stored as a sparse list of terms `Re(weight * X[row, col])`; any real
//! linear functional of a Hermitian matrix can be written this way, and the
//! form serializes to JSON without ambiguity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SdpError;
use crate::CMatrix;

/// A Hermitian PSD matrix variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub dim: usize,
}

/// One term `Re(weight * X_var[row, col])`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub weight: Complex64,
}

/// Real-linear functional `f(X) = sum Re(w * X[r, c])`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub terms: Vec<Term>,
}

impl Functional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, var: usize, row: usize, col: usize, weight: Complex64) -> &mut Self {
        if weight != Complex64::new(0.0, 0.0) {
            self.terms.push(Term {
                var,
                row,
                col,
                weight,
            });
        }
        self
    }

    /// Adds `w * Re X[row, col]`.
    pub fn add_re(&mut self, var: usize, row: usize, col: usize, w: f64) -> &mut Self {
        self.add(var, row, col, Complex64::new(w, 0.0))
    }

    /// Adds `w * Im X[row, col]`.
    pub fn add_im(&mut self, var: usize, row: usize, col: usize, w: f64) -> &mut Self {
        // Im z = Re(-i z)
        self.add(var, row, col, Complex64::new(0.0, -w))
    }

    /// Adds `w * Tr X`.
    pub fn add_trace(&mut self, var: usize, dim: usize, w: f64) -> &mut Self {
        for i in 0..dim {
            self.add_re(var, i, i, w);
        }
        self
    }

    /// Adds `Re Tr(C X)` for a (Hermitian) coefficient matrix `C`.
    pub fn add_inner(&mut self, var: usize, coeff: &CMatrix) -> &mut Self {
        for r in 0..coeff.nrows() {
            for c in 0..coeff.ncols() {
                // Tr(C X) = sum_{r,c} C[c, r] X[r, c]
                self.add(var, r, c, coeff[(c, r)]);
            }
        }
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Functional {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    weight: t.weight * s,
                    ..*t
                })
                .collect(),
        }
    }

    /// Appends every term of `other`.
    pub fn extend(&mut self, other: &Functional) -> &mut Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn evaluate(&self, values: &[CMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.weight * values[t.var][(t.row, t.col)]).re)
            .sum()
    }
}

/// One contribution `weight * X_var[row, col]` to entry `(out_row, out_col)`
/// of a matrix-valued map. Only the upper triangle (`out_row <= out_col`) is
/// stored; the lower triangle is its conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub out_row: usize,
    pub out_col: usize,
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub weight: Complex64,
}

/// Affine Hermitian-matrix-valued map `L(X) = C0 + sum_terms`.
///
/// The caller is responsible for the map being Hermitian-preserving; on the
/// diagonal only the real part is constrained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixMap {
    pub dim: usize,
    /// Sparse upper-triangular constant term `(row, col, value)`.
    pub constant: Vec<(usize, usize, Complex64)>,
    pub entries: Vec<MapEntry>,
}

impl MatrixMap {
    pub fn new(dim: usize) -> Self {
        MatrixMap {
            dim,
            constant: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn add(
        &mut self,
        out_row: usize,
        out_col: usize,
        var: usize,
        row: usize,
        col: usize,
        weight: Complex64,
    ) -> &mut Self {
        self.entries.push(MapEntry {
            out_row,
            out_col,
            var,
            row,
            col,
            weight,
        });
        self
    }

    pub fn evaluate(&self, values: &[CMatrix]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.constant {
            out[(r, c)] += v;
        }
        for e in &self.entries {
            out[(e.out_row, e.out_col)] += e.weight * values[e.var][(e.row, e.col)];
        }
        for r in 0..self.dim {
            out[(r, r)].im = 0.0;
            for c in (r + 1)..self.dim {
                out[(c, r)] = out[(r, c)].conj();
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityConstraint {
    pub name: String,
    pub functional: Functional,
    pub target: f64,
}

/// `lower <= f(X) <= upper`; a missing bound is unbounded on that side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalConstraint {
    pub name: String,
    pub functional: Functional,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// `L(X) ⪰ 0` for an affine matrix map beyond plain variable positivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdConstraint {
    pub name: String,
    pub map: MatrixMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub variables: Vec<Variable>,
    pub sense: Sense,
    pub objective: Functional,
    pub equalities: Vec<EqualityConstraint>,
    pub intervals: Vec<IntervalConstraint>,
    pub psd_constraints: Vec<PsdConstraint>,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        SdpProblem {
            variables: Vec::new(),
            sense: Sense::Minimize,
            objective: Functional::new(),
            equalities: Vec::new(),
            intervals: Vec::new(),
            psd_constraints: Vec::new(),
        }
    }

    /// Declares a Hermitian PSD variable and returns its index.
    pub fn add_variable(&mut self, name: impl Into<String>, dim: usize) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            dim,
        });
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Functional) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn add_equality(&mut self, name: impl Into<String>, functional: Functional, target: f64) {
        self.equalities.push(EqualityConstraint {
            name: name.into(),
            functional,
            target,
        });
    }

    pub fn add_interval(
        &mut self,
        name: impl Into<String>,
        functional: Functional,
        lower: Option<f64>,
        upper: Option<f64>,
    ) {
        self.intervals.push(IntervalConstraint {
            name: name.into(),
            functional,
            lower,
            upper,
        });
    }

    pub fn add_psd(&mut self, name: impl Into<String>, map: MatrixMap) {
        self.psd_constraints.push(PsdConstraint {
            name: name.into(),
            map,
        });
    }

    /// Number of scalar equality rows after lowering, a rough size measure.
    pub fn row_count(&self) -> usize {
        let intervals: usize = self
            .intervals
            .iter()
            .map(|c| match (c.lower, c.upper) {
                (Some(l), Some(u)) if l == u => 1,
                (l, u) => l.is_some() as usize + u.is_some() as usize,
            })
            .sum();
        let maps: usize = self.psd_constraints.iter().map(|c| c.map.dim * c.map.dim).sum();
        self.equalities.len() + intervals + maps
    }

    pub fn to_json(&self) -> Result<String, SdpError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SdpError> {
        let problem: SdpProblem = serde_json::from_str(text)?;
        problem.validate()?;
        Ok(problem)
    }

    /// Fail-fast structural validation, naming the offending constraint.
    pub fn validate(&self) -> Result<(), SdpError> {
        for v in &self.variables {
            if v.dim == 0 {
                return Err(SdpError::EmptyVariable {
                    name: v.name.clone(),
                });
            }
        }
        self.check_functional("objective", &self.objective)?;
        for c in &self.equalities {
            let ctx = format!("equality `{}`", c.name);
            self.check_functional(&ctx, &c.functional)?;
            if !c.target.is_finite() {
                return Err(SdpError::NonFinite { context: ctx });
            }
        }
        for c in &self.intervals {
            let ctx = format!("interval `{}`", c.name);
            self.check_functional(&ctx, &c.functional)?;
            let bad = |b: Option<f64>| b.is_some_and(|v| !v.is_finite());
            if bad(c.lower) || bad(c.upper) {
                return Err(SdpError::NonFinite { context: ctx });
            }
            if let (Some(l), Some(u)) = (c.lower, c.upper) {
                if l > u {
                    return Err(SdpError::IntervalOrder {
                        name: c.name.clone(),
                        lower: l,
                        upper: u,
                    });
                }
            }
        }
        for c in &self.psd_constraints {
            let ctx = format!("psd constraint `{}`", c.name);
            let dim = c.map.dim;
            let in_upper = |r: usize, col: usize| r <= col && col < dim;
            for &(r, col, v) in &c.map.constant {
                if !in_upper(r, col) {
                    return Err(SdpError::MapEntry {
                        name: c.name.clone(),
                        row: r,
                        col,
                        dim,
                    });
                }
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(SdpError::NonFinite { context: ctx });
                }
                if r == col && v.im.abs() > 1e-10 {
                    return Err(SdpError::NonHermitianConstant {
                        name: c.name.clone(),
                        index: r,
                        imag: v.im,
                    });
                }
            }
            for e in &c.map.entries {
                if !in_upper(e.out_row, e.out_col) {
                    return Err(SdpError::MapEntry {
                        name: c.name.clone(),
                        row: e.out_row,
                        col: e.out_col,
                        dim,
                    });
                }
                self.check_term(&ctx, e.var, e.row, e.col, e.weight)?;
            }
        }
        Ok(())
    }

    fn check_functional(&self, ctx: &str, f: &Functional) -> Result<(), SdpError> {
        for t in &f.terms {
            self.check_term(ctx, t.var, t.row, t.col, t.weight)?;
        }
        Ok(())
    }

    fn check_term(
        &self,
        ctx: &str,
        var: usize,
        row: usize,
        col: usize,
        weight: Complex64,
    ) -> Result<(), SdpError> {
        let v = self.variables.get(var).ok_or_else(|| SdpError::UnknownVariable {
            context: ctx.to_string(),
            var,
        })?;
        if row >= v.dim || col >= v.dim {
            return Err(SdpError::EntryOutOfRange {
                context: ctx.to_string(),
                var: v.name.clone(),
                row,
                col,
                dim: v.dim,
            });
        }
        if !weight.re.is_finite() || !weight.im.is_finite() {
            return Err(SdpError::NonFinite {
                context: ctx.to_string(),
            });
        }
        Ok(())
    }
}
