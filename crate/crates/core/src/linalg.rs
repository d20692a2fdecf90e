//! Small dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Condition numbers above this are reported through `log::warn!`.
pub const CONDITION_WARN: f64 = 1e12;

pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

/// Row-major constructor, mostly for tests and presets.
pub fn matrix(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn from_rows<const R: usize, const C: usize>(rows: &[[f64; C]; R]) -> Matrix {
    Matrix::from_fn(R, C, |i, j| rows[i][j])
}

/// Frobenius norm of `A + Aᵀ`.
pub fn skew_defect(a: &Matrix) -> f64 {
    (a + a.transpose()).norm()
}

/// Frobenius norm of `A - Aᵀ`.
pub fn symmetry_defect(a: &Matrix) -> f64 {
    (a - a.transpose()).norm()
}

pub fn is_skew(a: &Matrix, rel_tol: f64) -> bool {
    a.is_square() && skew_defect(a) <= rel_tol * (1.0 + a.norm())
}

pub fn is_symmetric(a: &Matrix, rel_tol: f64) -> bool {
    a.is_square() && symmetry_defect(a) <= rel_tol * (1.0 + a.norm())
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_sym_eigenvalue(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Largest eigenvalue of the symmetric part of `a`.
pub fn max_sym_eigenvalue(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

/// `vᵀ P v`.
pub fn weighted_sq_norm(v: &Vector, p: &Matrix) -> f64 {
    v.dot(&(p * v))
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn warn_conditioning(what: &'static str, a: &Matrix) {
    if log::log_enabled!(log::Level::Warn) {
        let cond = condition_number(a);
        if cond > CONDITION_WARN {
            log::warn!("{what}: condition number {cond:.3e}");
        }
    }
}

/// LU inverse; `at` is attached to the error for diagnostics.
pub fn inverse(a: &Matrix, what: &'static str, at: &[f64]) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dim(what, a.nrows(), a.ncols()));
    }
    if a.nrows() == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    warn_conditioning(what, a);
    a.clone().try_inverse().ok_or_else(|| Error::Singular {
        what,
        at: at.to_vec(),
    })
}

pub fn solve(a: &Matrix, b: &Vector, what: &'static str) -> Result<Vector> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::dim(what, a.nrows(), b.len()));
    }
    if a.nrows() == 0 {
        return Ok(Vector::zeros(0));
    }
    warn_conditioning(what, a);
    a.clone().lu().solve(b).ok_or(Error::Singular { what, at: vec![] })
}

/// Orthonormal basis (as rows) of the left null space of `g`.
///
/// Each row is normalized so that its first entry with magnitude above
/// `1e-12` is positive, which makes the basis deterministic.
pub fn left_null_basis(g: &Matrix) -> Matrix {
    let l = g.nrows();
    let m = g.ncols();
    if l <= m {
        return Matrix::zeros(0, l);
    }
    // Eigenvectors of G Gᵀ with zero eigenvalue span the left null space.
    let ggt = g * g.transpose();
    let eig = ggt.symmetric_eigen();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let r = l - m;
    let mut basis = Matrix::zeros(r, l);
    for (row, &idx) in order.iter().take(r).enumerate() {
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        basis.row_mut(row).copy_from(&v.transpose());
    }
    basis
}

/// Stacks two matrices vertically.
pub fn vstack(top: &Matrix, bottom: &Matrix) -> Matrix {
    assert_eq!(top.ncols(), bottom.ncols(), "vstack column mismatch");
    let mut out = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    out
}

/// Concatenates vectors end to end.
pub fn concat(parts: &[&Vector]) -> Vector {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(p);
        at += p.len();
    }
    out
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_and_symmetry_defects() {
        let j = matrix(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(skew_defect(&j), 0.0);
        assert!(is_skew(&j, 1e-12));
        assert!(!is_symmetric(&j, 1e-12));
        let r = matrix(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert!(is_symmetric(&r, 1e-12));
        assert!(min_sym_eigenvalue(&r) > 0.0);
    }

    #[test]
    fn left_null_basis_annihilates() {
        let g = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[0.3, -0.7]]);
        let basis = left_null_basis(&g);
        assert_eq!(basis.shape(), (1, 3));
        assert!((&basis * &g).norm() < 1e-12);
        assert!((basis.row(0).norm() - 1.0).abs() < 1e-12);
        assert!(basis[(0, 0)] > 0.0);
    }

    #[test]
    fn left_null_basis_of_square_is_empty() {
        let basis = left_null_basis(&Matrix::identity(2, 2));
        assert_eq!(basis.shape(), (0, 2));
    }

    #[test]
    fn singular_inverse_reports_location() {
        let a = matrix(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let err = inverse(&a, "test", &[0.5]).unwrap_err();
        assert!(matches!(err, Error::Singular { what: "test", .. }));
    }

    #[test]
    fn stacking() {
        let v = concat(&[&vector(&[1.0]), &vector(&[2.0, 3.0])]);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
        let m = vstack(&Matrix::identity(1, 2), &Matrix::zeros(1, 2));
        assert_eq!(m.shape(), (2, 2));
    }
}
