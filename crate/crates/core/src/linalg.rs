//! Dense kernels shared by the sector and full-space engines.
//!
//! Matrices are column-major `faer::Mat`; state vectors are plain `Vec<C64>`
//! so they can be moved between engines without conversion.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `y = A x`.
pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![ZERO; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (yi, &aij) in y.iter_mut().zip(a.col_as_slice(j)) {
            *yi += aij * xj;
        }
    }
    y
}

/// `y = A† x`.
pub fn adjoint_matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| {
            a.col_as_slice(j)
                .iter()
                .zip(x)
                .fold(ZERO, |acc, (aij, xi)| acc + aij.conj() * xi)
        })
        .collect()
}

/// `y = V x` for a real matrix acting on a complex vector.
pub fn real_matvec(v: &Mat<f64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(v.ncols(), x.len());
    let mut y = vec![ZERO; v.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        for (yi, &vij) in y.iter_mut().zip(v.col_as_slice(j)) {
            *yi += xj * vij;
        }
    }
    y
}

/// `y = Vᵀ x` for a real matrix acting on a complex vector.
pub fn real_transpose_matvec(v: &Mat<f64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(v.nrows(), x.len());
    (0..v.ncols())
        .map(|j| {
            v.col_as_slice(j)
                .iter()
                .zip(x)
                .fold(ZERO, |acc, (&vij, xi)| acc + xi * vij)
        })
        .collect()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Largest entry modulus of `A − B`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            m = m.max((x - y).norm());
        }
    }
    m
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SymmetricEigen {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::numerical(format!("symmetric eigensolver did not converge: {e:?}")))?;
        let values = (0..a.nrows()).map(|i| evd.S()[i]).collect();
        Ok(Self { values, vectors: evd.U().to_owned() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Real part of a complex matrix when its imaginary part is negligible.
pub fn real_part_if_real(a: &CMat, tol: f64) -> Option<Mat<f64>> {
    let mut out = Mat::<f64>::zeros(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for (i, z) in a.col_as_slice(j).iter().enumerate() {
            if z.im.abs() > tol {
                return None;
            }
            out[(i, j)] = z.re;
        }
    }
    Some(out)
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if let Some(re) = real_part_if_real(a, 0.0) {
        return re
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numerical(format!("symmetric eigensolver did not converge: {e:?}")));
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("hermitian eigensolver did not converge: {e:?}")))
}

/// Eigenvalues of a general complex matrix (no ordering guarantee).
pub fn general_eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues()
        .map_err(|e| Error::numerical(format!("eigensolver did not converge: {e:?}")))
}

pub fn to_complex(a: &Mat<f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}

/// `V diag(d) Vᵀ` for real orthogonal `V`.
pub fn reconstruct(v: &Mat<f64>, d: &[C64]) -> CMat {
    let n = v.nrows();
    let vc = to_complex(v);
    let scaled = Mat::from_fn(n, d.len(), |i, j| vc[(i, j)] * d[j]);
    let vt = Mat::from_fn(d.len(), n, |i, j| vc[(j, i)]);
    &scaled * &vt
}

/// `‖A − A†‖_max`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &adjoint(a))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &Mat::identity(u.nrows(), u.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_eigen_reconstructs() {
        let a = Mat::from_fn(5, 5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let eig = SymmetricEigen::new(&a).unwrap();
        let d: Vec<C64> = eig.values.iter().map(|&x| C64::new(x, 0.0)).collect();
        let back = reconstruct(&eig.vectors, &d);
        assert!(max_abs_diff(&back, &to_complex(&a)) < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matvec_matches_adjoint_matvec() {
        let a = Mat::from_fn(3, 4, |i, j| C64::new(i as f64, j as f64 - 1.0));
        let x = vec![C64::new(1.0, 2.0), C64::new(-1.0, 0.5), ONE, I];
        let y = matvec(&a, &x);
        let z = vec![ONE, I, C64::new(0.3, -0.2)];
        // <z, A x> = <A† z, x>
        let lhs = dot(&z, &y);
        let rhs = dot(&adjoint_matvec(&a, &z), &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
