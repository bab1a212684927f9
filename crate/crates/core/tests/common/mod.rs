#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Rank by plain Gaussian elimination over the rationals.
pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..a.len() {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &a[rank][c];
            let pivot = a[rank].clone();
            for (v, p) in a[i].iter_mut().zip(&pivot).skip(c) {
                *v -= &f * p;
            }
        }
        rank += 1;
    }
    rank
}

/// `C(n, k)` as an exact rational.
pub fn binom(n: u64, k: u64) -> BigRational {
    let mut v = BigRational::from_integer(BigInt::from(1));
    for i in 0..k {
        v = v * BigRational::from_integer(BigInt::from(n - i)) / BigRational::from_integer(BigInt::from(i + 1));
    }
    v
}

/// Exact `Σ_{i≥start} C(d,i) p^i (1−p)^(d−i)` for rational `p = num/den`.
pub fn exact_tail(d: u64, start: u64, num: i64, den: i64) -> f64 {
    use num_traits::ToPrimitive;
    let p = BigRational::new(BigInt::from(num), BigInt::from(den));
    let q = BigRational::from_integer(BigInt::from(1)) - &p;
    let mut s = BigRational::zero();
    for i in start..=d {
        let mut term = binom(d, i);
        for _ in 0..i {
            term *= &p;
        }
        for _ in i..d {
            term *= &q;
        }
        s += term;
    }
    s.to_f64().unwrap()
}
