//! Complex Hermitian ↔ real symmetric embedding.
//!
//! `H ⪰ 0` iff `[[Re H, -Im H], [Im H, Re H]] ⪰ 0`; the real matrix has every
//! eigenvalue of `H` twice.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::SdpError;
use crate::CMatrix;

/// Hermiticity tolerance accepted by [`realify`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Largest `|H[i,j] - conj(H[j,i])|`.
pub fn hermitian_deviation(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Maps an `n x n` Hermitian matrix to its `2n x 2n` real symmetric embedding.
pub fn realify(h: &CMatrix) -> Result<DMatrix<f64>, SdpError> {
    if h.nrows() != h.ncols() {
        return Err(SdpError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let deviation = hermitian_deviation(h);
    if deviation > HERMITIAN_TOL {
        return Err(SdpError::NotHermitian { deviation });
    }
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`realify`], averaging the redundant copies so that any real
/// symmetric `2n x 2n` matrix maps to a Hermitian one.
pub fn derealify(y: &DMatrix<f64>) -> CMatrix {
    let n = y.nrows() / 2;
    CMatrix::from_fn(n, n, |r, c| {
        Complex64::new(
            0.5 * (y[(r, c)] + y[(r + n, c + n)]),
            0.5 * (y[(r + n, c)] - y[(r, c + n)]),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_by_one() {
        let h = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let r = realify(&h).unwrap();
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn off_diagonal_imaginary() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let r = realify(&h).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, -1.0, //
                0.0, 1.0, 1.0, 0.0, //
                0.0, 1.0, 1.0, 0.0, //
                -1.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(r, expected);
        let eig = SymmetricEigen::new(r).eigenvalues;
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([0.0, 0.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(realify(&h), Err(SdpError::NotHermitian { .. })));
    }

    #[test]
    fn round_trip() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, -0.4), c(0.1, 0.4), c(0.7, 0.0)]);
        let back = derealify(&realify(&h).unwrap());
        assert!((back - h).norm() < 1e-15);
    }
}
