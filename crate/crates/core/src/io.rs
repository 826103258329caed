//! JSON encodings.
//!
//! Complex matrices are written as separate real and imaginary row arrays:
//!
//! ```json
//! {"dim": 2, "re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}
//! ```
//!
//! A density matrix carries `dim`, a Gram matrix `m`; a standard form is
//! `{"m", "d", "e": [matrix, ...]}` and a bipartite matrix
//! `{"m", "d", "blocks": [matrix, ...]}` with blocks in row-major order.

use serde::{Deserialize, Serialize};

use crate::bipartite::BipartiteBlockMatrix;
use crate::blocksym::StandardForm;
use crate::error::{CoreError, Result};
use crate::fock::DensityMatrix;
use crate::gram::GramMatrix;
use crate::linalg::{c64, CMatrix};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixJson {
    pub fn from_matrix(a: &CMatrix) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| f(&a[(r, c)])).collect()).collect()
        };
        ComplexMatrixJson {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Rejects ragged, non-square, mismatched or non-finite input.
    pub fn to_square(&self, dim: Option<usize>) -> Result<CMatrix> {
        let n = self.re.len();
        if self.im.len() != n {
            return Err(CoreError::Json(format!("re has {n} rows but im has {}", self.im.len())));
        }
        if let Some(d) = dim {
            if d != n {
                return Err(CoreError::Json(format!("declared dimension {d} but {n} rows given")));
            }
        }
        if n == 0 {
            return Err(CoreError::Json("empty matrix".into()));
        }
        for (i, (r, m)) in self.re.iter().zip(&self.im).enumerate() {
            if r.len() != n || m.len() != n {
                return Err(CoreError::Json(format!(
                    "row {i} has lengths {}/{} in a {n}x{n} matrix",
                    r.len(),
                    m.len()
                )));
            }
        }
        let a = CMatrix::from_fn(n, n, |r, c| c64(self.re[r][c], self.im[r][c]));
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CoreError::Json("matrix entries must be finite".into()));
        }
        Ok(a)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    /// Admit a trace below one.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    subnormalized: bool,
}

pub fn density_to_json(rho: &DensityMatrix) -> String {
    let m = ComplexMatrixJson::from_matrix(rho.matrix());
    let doc = DensityJson {
        dim: rho.dim(),
        re: m.re,
        im: m.im,
        subnormalized: rho.is_subnormalized(),
    };
    serde_json::to_string(&doc).expect("plain data serialises")
}

pub fn density_from_json(text: &str) -> Result<DensityMatrix> {
    let doc: DensityJson = serde_json::from_str(text)?;
    let a = ComplexMatrixJson { re: doc.re, im: doc.im }.to_square(Some(doc.dim))?;
    if doc.subnormalized {
        DensityMatrix::new_subnormalized(a)
    } else {
        DensityMatrix::new(a)
    }
}

#[derive(Serialize, Deserialize)]
struct GramJson {
    m: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

pub fn gram_to_json(g: &GramMatrix) -> String {
    let m = ComplexMatrixJson::from_matrix(g.matrix());
    serde_json::to_string(&GramJson { m: g.m(), re: m.re, im: m.im }).expect("plain data serialises")
}

pub fn gram_from_json(text: &str) -> Result<GramMatrix> {
    let doc: GramJson = serde_json::from_str(text)?;
    GramMatrix::new(ComplexMatrixJson { re: doc.re, im: doc.im }.to_square(Some(doc.m))?)
}

#[derive(Serialize, Deserialize)]
struct StandardFormJson {
    m: usize,
    d: usize,
    e: Vec<ComplexMatrixJson>,
}

pub fn standard_form_to_json(sf: &StandardForm) -> String {
    let doc = StandardFormJson {
        m: sf.m,
        d: sf.d,
        e: sf.e.iter().map(ComplexMatrixJson::from_matrix).collect(),
    };
    serde_json::to_string(&doc).expect("plain data serialises")
}

pub fn standard_form_from_json(text: &str) -> Result<StandardForm> {
    let doc: StandardFormJson = serde_json::from_str(text)?;
    if doc.e.len() != doc.m {
        return Err(CoreError::Json(format!("expected {} blocks, found {}", doc.m, doc.e.len())));
    }
    let e = doc.e.iter().map(|b| b.to_square(Some(doc.d))).collect::<Result<Vec<_>>>()?;
    StandardForm::new(e)
}

#[derive(Serialize, Deserialize)]
struct BipartiteJson {
    m: usize,
    d: usize,
    blocks: Vec<ComplexMatrixJson>,
}

pub fn bipartite_to_json(tau: &BipartiteBlockMatrix) -> String {
    let doc = BipartiteJson {
        m: tau.m(),
        d: tau.d(),
        blocks: tau.blocks().iter().map(ComplexMatrixJson::from_matrix).collect(),
    };
    serde_json::to_string(&doc).expect("plain data serialises")
}

pub fn bipartite_from_json(text: &str) -> Result<BipartiteBlockMatrix> {
    let doc: BipartiteJson = serde_json::from_str(text)?;
    let blocks = doc.blocks.iter().map(|b| b.to_square(Some(doc.d))).collect::<Result<Vec<_>>>()?;
    BipartiteBlockMatrix::new(doc.m, doc.d, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocksym::{to_standard_form, twirl};
    use crate::fock::{coherent_state, coherent_vector, rotation};

    #[test]
    fn density_round_trip() {
        // revalidation may clip eigenvalues at the rounding level
        let rho = coherent_state(c64(0.8, -0.6), 6).unwrap();
        let back = density_from_json(&density_to_json(&rho)).unwrap();
        assert!(crate::linalg::max_abs(&(back.matrix() - rho.matrix())) < 1e-15);
        assert!(back.is_subnormalized());
    }

    #[test]
    fn density_reader_rejects_bad_shapes() {
        let ok = r#"{"dim":2,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}"#;
        assert!(density_from_json(ok).is_ok());
        for bad in [
            r#"{"dim":2,"re":[[1,0,0],[0,0,0]],"im":[[0,0],[0,0]]}"#,
            r#"{"dim":2,"re":[[1,0],[0,0]],"im":[[0,0]]}"#,
            r#"{"dim":3,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}"#,
            r#"{"dim":2,"re":[[1,0],[0]],"im":[[0,0],[0,0]]}"#,
            r#"{"dim":2,"re":[[0.5,0],[0,0]],"im":[[0,0],[0,0]]}"#,
        ] {
            assert!(density_from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gram_and_blocks_round_trip() {
        let v = coherent_vector(c64(0.5, 0.0), 8).unwrap();
        let vs: Vec<_> = (0..3).map(|k| rotation(2.0 * std::f64::consts::PI * k as f64 / 3.0, 8) * &v).collect();
        let tau = twirl(&BipartiteBlockMatrix::from_pure_ensemble(&vs).unwrap());
        let back = bipartite_from_json(&bipartite_to_json(&tau)).unwrap();
        assert_eq!(back, tau);

        let sf = to_standard_form(&tau).unwrap();
        let back = standard_form_from_json(&standard_form_to_json(&sf)).unwrap();
        assert_eq!(back.e, sf.e);

        let z = CMatrix::from_fn(3, 3, |k, l| vs[k].dotc(&vs[l]));
        let g = GramMatrix::normalized_from(&z).unwrap();
        assert_eq!(gram_from_json(&gram_to_json(&g)).unwrap(), g);
    }
}
