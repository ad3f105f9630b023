//! Small fixed-size linear algebra for the three traded risk factors.

use crate::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Symmetric correlation matrix with unit diagonal.
pub fn correlation_matrix(rho_12: f64, rho_13: f64, rho_23: f64) -> Mat3 {
    [
        [1.0, rho_12, rho_13],
        [rho_12, 1.0, rho_23],
        [rho_13, rho_23, 1.0],
    ]
}

/// Lower-triangular `L` with `L·Lᵀ = rho`.
///
/// Pivots in `[-1e-12, 0]` are treated as exact zeros, so singular but
/// positive semi-definite matrices (e.g. perfect correlation) are accepted.
pub fn correlation_factor(rho: &Mat3) -> Result<Mat3> {
    for i in 0..3 {
        for j in 0..i {
            if (rho[i][j] - rho[j][i]).abs() > 1e-12 {
                return Err(Error::Domain("correlation matrix is not symmetric"));
            }
        }
        if (rho[i][i] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("correlation matrix needs a unit diagonal"));
        }
    }
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let pivot = rho[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -1e-12 {
            return Err(Error::NotPositiveSemiDefinite { pivot });
        }
        let d = libm::sqrt(pivot.max(0.0));
        l[j][j] = d;
        for i in j + 1..3 {
            let s = rho[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if d > 0.0 {
                l[i][j] = s / d;
            } else if s.abs() > 1e-12 {
                return Err(Error::NotPositiveSemiDefinite { pivot });
            }
        }
    }
    Ok(l)
}

pub fn mat_vec(a: &Mat3, x: &Vec3) -> Vec3 {
    [dot(&a[0], x), dot(&a[1], x), dot(&a[2], x)]
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `xᵀ·a·x`.
pub fn quad_form(a: &Mat3, x: &Vec3) -> f64 {
    dot(x, &mat_vec(a, x))
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the matrix scale.
pub fn solve(a: &Mat3, b: &Vec3) -> Option<Vec3> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..3 {
        let p = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        if m[p][col].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s = rhs[i] - (i + 1..3).map(|k| m[i][k] * x[k]).sum::<f64>();
        x[i] = s / m[i][i];
    }
    Some(x)
}
