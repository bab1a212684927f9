//! Small dense linear-algebra helpers: exact integer rank and numeric rank.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rank over the rationals of an integer matrix, by fraction-free (Bareiss)
/// elimination. Every intermediate value is a minor of the input, so the
/// divisions are exact.
pub fn exact_rank<R: AsRef<[i64]>>(rows: &[R]) -> usize {
    let Some(first) = rows.first() else {
        return 0;
    };
    let cols = first.as_ref().len();
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| {
            debug_assert_eq!(r.as_ref().len(), cols);
            r.as_ref().iter().map(|&v| BigInt::from(v)).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == a.len() {
            break;
        }
        let Some(p) = (rank..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (head, tail) = a.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let pivot = &pivot_row[col];
        for row in tail.iter_mut() {
            let factor = std::mem::take(&mut row[col]);
            for j in col + 1..cols {
                let v = pivot * &row[j] - &factor * &pivot_row[j];
                row[j] = v / &prev;
            }
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Numerical rank of a real matrix: singular values above `rel_tol * s_max`.
pub fn numeric_rank<R: AsRef<[f64]>>(rows: &[R], rel_tol: f64) -> usize {
    let Some(first) = rows.first() else {
        return 0;
    };
    let cols = first.as_ref().len();
    if cols == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i].as_ref()[j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
