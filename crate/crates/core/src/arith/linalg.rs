use super::field::Field;
use super::mat2::Mat2;
use crate::error::{Error, Result};

/// Solves `a x = b` by Gaussian elimination with largest-magnitude pivoting.
pub fn solve_linear<F: Field>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Result<Vec<F>> {
    let n = b.len();
    let scale = a.iter().flatten().map(|e| e.magnitude()).fold(0.0, f64::max);
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].magnitude().total_cmp(&a[s][col].magnitude()))
            .ok_or(Error::Singular)?;
        if a[pivot][col].negligible(scale) {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].try_inv()?;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() * inv.clone();
            for k in col..n {
                let v = a[col][k].clone();
                a[r][k] = a[r][k].clone() - f.clone() * v;
            }
            let v = b[col].clone();
            b[r] = b[r].clone() - f * v;
        }
    }
    let mut x = vec![F::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for k in r + 1..n {
            acc = acc - a[r][k].clone() * x[k].clone();
        }
        x[r] = acc * a[r][r].try_inv()?;
    }
    Ok(x)
}

/// Solves `lambda X M - M X = rhs` for `X`.
///
/// The operator is singular exactly when `lambda mu - nu = 0` for eigenvalues
/// `mu, nu` of `M`; that case is reported as a resonance.
pub fn solve_sylvester<F: Field>(lambda: &F, m: &Mat2<F>, rhs: &Mat2<F>) -> Result<Mat2<F>> {
    // Unknown vector (x11, x12, x21, x22); row (i, j) of the operator is
    // lambda * sum_k X_ik M_kj - sum_k M_ik X_kj.
    let idx = |i: usize, j: usize| 2 * i + j;
    let mut a = vec![vec![F::zero(); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let row = idx(i, j);
            for k in 0..2 {
                let cur = a[row][idx(i, k)].clone();
                a[row][idx(i, k)] = cur + lambda.clone() * m.get(k, j).clone();
                let cur = a[row][idx(k, j)].clone();
                a[row][idx(k, j)] = cur - m.get(i, k).clone();
            }
        }
    }
    let b = vec![rhs.a.clone(), rhs.b.clone(), rhs.c.clone(), rhs.d.clone()];
    let x = solve_linear(a, b).map_err(|e| match e {
        Error::Singular => Error::ResonantSylvester,
        other => other,
    })?;
    Ok(Mat2::new(x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone()))
}
