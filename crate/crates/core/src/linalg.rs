//! Small dense helpers over `nalgebra` shared by the algebraic modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// `‖a − b‖_F / max(‖b‖_F, floor)`.
pub fn relative_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / f64::max(b.norm(), f64::MIN_POSITIVE)
}

/// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        0.0
    } else {
        (m - m.transpose()).norm() / n
    }
}

/// `‖M + Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn skew_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        0.0
    } else {
        (m + m.transpose()).norm() / n
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    if (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0)) {
        if (0..n).any(|i| m[(i, i)] <= 0.0) {
            return None;
        }
        return Some(DMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { 1.0 / m[(i, i)] } else { 0.0 },
        ));
    }
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(&inv))
}

/// 2-norm condition number via singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a X = b` by LU, refusing matrices with condition number above
/// `max_condition`.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>> {
    let condition = condition_number(a);
    if !(condition <= max_condition) {
        return Err(Error::Singular { condition });
    }
    a.clone().lu().solve(b).ok_or(Error::Singular { condition })
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Determinant of a row-major `p x p` matrix by partial-pivot elimination;
/// overwrites the input.
pub fn det_in_place(m: &mut [f64], p: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..p {
        let mut pivot = col;
        for r in col + 1..p {
            if m[r * p + col].abs() > m[pivot * p + col].abs() {
                pivot = r;
            }
        }
        let pv = m[pivot * p + col];
        if pv == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..p {
                m.swap(col * p + c, pivot * p + c);
            }
            det = -det;
        }
        det *= pv;
        for r in col + 1..p {
            let f = m[r * p + col] / pv;
            if f != 0.0 {
                for c in col..p {
                    m[r * p + c] -= f * m[col * p + c];
                }
            }
        }
    }
    det
}

/// Counts of strictly positive and strictly negative eigenvalues of the
/// symmetric part, with `|λ| <= zero_tol` treated as zero.
pub fn signature(m: &DMatrix<f64>, zero_tol: f64) -> (usize, usize, f64) {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let plus = eig.eigenvalues.iter().filter(|&&l| l > zero_tol).count();
    let minus = eig.eigenvalues.iter().filter(|&&l| l < -zero_tol).count();
    (plus, minus, eig.eigenvalues.min())
}
