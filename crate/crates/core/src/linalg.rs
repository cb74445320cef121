//! Small exact linear algebra over the rationals and the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exact::Rational;

pub type Matrix = Vec<Vec<Rational>>;

pub fn is_symmetric(m: &Matrix) -> bool {
    let n = m.len();
    m.iter().all(|row| row.len() == n)
        && (0..n).all(|i| (0..i).all(|j| m[i][j] == m[j][i]))
}

/// Positive definiteness via the signs of the leading principal minors.
///
/// Elimination without pivoting produces pivots `D_k / D_{k-1}`, so every
/// leading minor is positive exactly when every pivot is.
pub fn leading_minors_positive(m: &Matrix) -> bool {
    let n = m.len();
    let mut a = m.clone();
    for k in 0..n {
        if !a[k][k].is_positive() {
            return false;
        }
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    true
}

pub fn determinant(m: &Matrix) -> Rational {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Rational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Rational::zero();
        };
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= &a[k][k];
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(p, k);
        let piv = a[k][k].clone();
        for x in a[k].iter_mut() {
            *x /= &piv;
        }
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let f = a[i][k].clone();
            for j in 0..2 * n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Indices of a maximal linearly independent prefix-greedy subset of `rows`.
pub fn independent_rows(rows: &[Vec<Rational>]) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    let mut picked = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut v = row.clone();
        for (col, b) in &basis {
            if !v[*col].is_zero() {
                let f = &v[*col] / &b[*col];
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(col) = v.iter().position(|x| !x.is_zero()) {
            basis.push((col, v));
            picked.push(idx);
        }
    }
    picked
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    independent_rows(rows).len()
}

/// Incremental row echelon form over ℤ, kept primitive (content 1) after each
/// fraction-free elimination step.
#[derive(Clone, Debug, Default)]
pub struct IntEchelon {
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl IntEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts `v`; returns whether it increased the rank.
    pub fn insert(&mut self, v: &[i64]) -> bool {
        let mut w: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        for (col, b) in &self.rows {
            if w[*col].is_zero() {
                continue;
            }
            let g = w[*col].gcd(&b[*col]);
            let fw = &b[*col] / &g;
            let fb = &w[*col] / &g;
            for (x, y) in w.iter_mut().zip(b) {
                *x = &*x * &fw - y * &fb;
            }
            make_primitive(&mut w);
        }
        match w.iter().position(|x| !x.is_zero()) {
            Some(col) => {
                make_primitive(&mut w);
                self.rows.push((col, w));
                true
            }
            None => false,
        }
    }
}

fn make_primitive(w: &mut [BigInt]) {
    let g = w.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in w.iter_mut() {
            *x /= &g;
        }
    }
}

/// Dimension of the rational span of `vectors`, which equals the ℤ-rank of
/// the subgroup they generate.
pub fn span_rank(vectors: &[Vec<i64>]) -> usize {
    let Some(dim) = vectors.first().map(|v| v.len()) else {
        return 0;
    };
    let mut ech = IntEchelon::new();
    for v in vectors {
        ech.insert(v);
        if ech.rank() == dim {
            break;
        }
    }
    ech.rank()
}
