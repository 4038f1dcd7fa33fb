//! Dense exact linear algebra over the rationals.
//!
//! Matrices are row-major `Vec<Vec<Rational>>`. Everything here is exact;
//! sizes in this crate are small enough (tens of rows, single-digit
//! dimensions) that fraction-free or fancy pivoting for speed is not worth
//! the complexity, with one exception: the integer Bareiss determinant used
//! heavily by the hull code.

use crate::error::{Error, Result};
use crate::rational::{rzero, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

pub type RatVec = Vec<Rational>;
pub type RatMat = Vec<Vec<Rational>>;

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[Rational]) -> Rational {
    dot(a, a)
}

pub fn vec_add(a: &[Rational], b: &[Rational]) -> RatVec {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rational], b: &[Rational]) -> RatVec {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(c: &Rational, a: &[Rational]) -> RatVec {
    a.iter().map(|x| c * x).collect()
}

pub fn mat_vec(m: &RatMat, x: &[Rational]) -> RatVec {
    m.iter().map(|row| dot(row, x)).collect()
}

pub fn mat_mul(a: &RatMat, b: &RatMat) -> RatMat {
    let cols = if b.is_empty() { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(aik, brow)| aik * &brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(m: &RatMat) -> RatMat {
    let cols = if m.is_empty() { 0 } else { m[0].len() };
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn identity(n: usize) -> RatMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { rzero() })
                .collect()
        })
        .collect()
}

/// Reduces `m` in place to reduced row echelon form and returns the pivot
/// column indices in order.
pub fn rref(m: &mut RatMat) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in &mut m[r] {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RatMat) -> usize {
    let mut copy = m.clone();
    rref(&mut copy).len()
}

/// Solves `Ax = b` for any one solution; errors if the system is
/// inconsistent. `A` need not be square or full rank.
pub fn solve_any(a: &RatMat, b: &[Rational]) -> Result<RatVec> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: RatMat = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&cols) {
        return Err(Error::Infeasible);
    }
    let mut x = vec![rzero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Ok(x)
}

/// Solves a square nonsingular system; errors on singular input.
pub fn solve_unique(a: &RatMat, b: &[Rational]) -> Result<RatVec> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a[0].len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a[0].len(),
        });
    }
    if rank(a) != n {
        return Err(Error::Infeasible);
    }
    solve_any(a, b)
}

/// Basis of the right nullspace of `m` (possibly empty).
pub fn nullspace(m: &RatMat) -> Vec<RatVec> {
    let cols = if m.is_empty() { 0 } else { m[0].len() };
    let mut copy = m.clone();
    let pivots = rref(&mut copy);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![rzero(); cols];
            v[fc] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -copy[r][fc].clone();
            }
            v
        })
        .collect()
}

pub fn inverse(m: &RatMat) -> Result<RatMat> {
    let n = m.len();
    let mut aug: RatMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { Rational::one() } else { rzero() });
            }
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n {
        return Err(Error::Infeasible);
    }
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Scales a rational row onto primitive integers: multiplies by the lcm of
/// denominators, divides by the gcd of numerators. The zero row maps to
/// itself. Sign is preserved.
pub fn primitive_integer_row(row: &[Rational]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in row {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = row.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut gcd = BigInt::zero();
    for v in &ints {
        gcd = gcd.gcd(v);
    }
    if gcd.is_zero() || gcd.is_one() {
        return ints;
    }
    ints.into_iter().map(|v| v / &gcd).collect()
}

/// Fraction-free Bareiss determinant of a square integer matrix.
pub fn bareiss_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut denom = BigInt::one();
    let mut sign = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = &t / &denom;
            }
            a[i][k] = BigInt::zero();
        }
        denom = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// For an `(r-1) x r` integer matrix of full row rank, returns an integer
/// vector orthogonal to every row: component `j` is the signed cofactor
/// obtained by deleting column `j`. This is the generalized cross product;
/// the result is zero iff the rows are dependent.
pub fn integer_cross(rows: &[Vec<BigInt>]) -> Vec<BigInt> {
    let r = rows.len() + 1;
    debug_assert!(rows.iter().all(|row| row.len() == r));
    (0..r)
        .map(|j| {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let d = bareiss_det(&minor);
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}
