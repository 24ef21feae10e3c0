//! Exact dense linear solving over arbitrary-precision rationals.

use num::rational::BigRational;
use num::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("linear system is singular")]
pub struct SingularError;

/// Solves `a * x = b` by Gauss-Jordan elimination with exact arithmetic.
/// Pivoting is deterministic: each column takes the first remaining row with
/// a nonzero entry, so identical systems produce identical eliminations on
/// every platform.
pub fn solve_linear(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Result<Vec<BigRational>, SingularError> {
    let n = b.len();
    assert!(
        a.len() == n && a.iter().all(|row| row.len() == n),
        "coefficient matrix must be square and match the right-hand side"
    );
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(SingularError)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let scale = a[col][col].clone();
        for row in 0..n {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &scale;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[row][c] = &a[row][c] - &delta;
            }
            let delta = &factor * &b[col];
            b[row] = &b[row] - &delta;
        }
    }
    Ok((0..n).map(|i| &b[i] / &a[i][i]).collect())
}
