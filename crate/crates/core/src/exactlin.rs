//! Exact integer linear algebra: dense matrices, Smith and Hermite normal
//! forms, saturated kernel lattices, and the primes at which a matrix loses
//! rank.
//!
//! Large computations run multi-modularly, but every answer carries an exact
//! certificate: generic ranks are confirmed modulo enough primes to exceed the
//! Hadamard bound of every larger minor, and the set of rank-drop primes is
//! extracted from an exact multiple of the product of the elementary divisors.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{self, big_mod_u64, crt_primes, inv_mod, mul_mod, sub_mod, CrtAccumulator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("lattice generators are linearly dependent (rank {rank} < {count})")]
    Dependent { rank: usize, count: usize },
    #[error("vector of length {got} in a lattice of ambient dimension {expected}")]
    Ambient { expected: usize, got: usize },
}

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntegerMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl IntegerMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self, LinError> {
        if entries.len() != rows * cols {
            return Err(LinError::Shape {
                rows,
                cols,
                len: entries.len(),
            });
        }
        Ok(IntegerMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows of machine integers. Panics on ragged input.
    pub fn from_rows_i64(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| BigInt::from(x)))
            .collect();
        IntegerMatrix {
            rows: rows.len(),
            cols,
            entries,
        }
    }

    /// Builds a matrix from rows of big integers; `cols` fixes the width when
    /// there are no rows.
    pub fn from_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let n = rows.len();
        IntegerMatrix {
            rows: n,
            cols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        IntegerMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn mul(&self, other: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntegerMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Submatrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> IntegerMatrix {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                entries.push(self.get(i, j).clone());
            }
        }
        IntegerMatrix {
            rows: rows.len(),
            cols: cols.len(),
            entries,
        }
    }

    pub fn reduce_mod(&self, p: u64) -> ModMatrix {
        ModMatrix {
            rows: self.rows,
            cols: self.cols,
            p,
            data: self.entries.iter().map(|x| big_mod_u64(x, p)).collect(),
        }
    }

    fn row_log2_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| log2_norm(self.row(i).iter()))
            .collect()
    }

    fn col_log2_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| log2_norm((0..self.rows).map(|i| self.get(i, j))))
            .collect()
    }

    /// log2 of a Hadamard bound valid for every k x k minor.
    fn minor_bound_log2(&self, k: usize) -> f64 {
        let top = |mut v: Vec<f64>| -> f64 {
            v.sort_by(|a, b| b.partial_cmp(a).expect("finite norms"));
            v.iter().take(k).map(|x| x.max(0.0)).sum()
        };
        top(self.row_log2_norms()).min(top(self.col_log2_norms()))
    }
}

fn log2_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().map(|v| v.abs().log2()).unwrap_or(bits as f64)
    } else {
        let shifted: BigInt = x.abs() >> (bits - 64);
        shifted.to_f64().expect("fits").log2() + (bits - 64) as f64
    }
}

fn log2_norm<'a>(it: impl Iterator<Item = &'a BigInt>) -> f64 {
    let logs: Vec<f64> = it.map(log2_abs).filter(|x| x.is_finite()).collect();
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (2.0 * (l - m)).exp2()).sum();
    m + 0.5 * s.log2()
}

/// Dense matrix over the field with `p` elements (or, for rank certificates,
/// over Z/pZ with `p` prime).
#[derive(Clone, Debug)]
pub struct ModMatrix {
    pub rows: usize,
    pub cols: usize,
    pub p: u64,
    pub data: Vec<u64>,
}

/// Row echelon data from elimination modulo a prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
    pub pivot_cols: Vec<usize>,
}

impl ModMatrix {
    /// Gaussian elimination; pivot rows are reported as original row indices.
    pub fn echelon(&self) -> Echelon {
        let p = self.p;
        let (nr, nc) = (self.rows, self.cols);
        let mut a = self.data.clone();
        let mut order: Vec<usize> = (0..nr).collect();
        let mut r = 0;
        let mut pivot_cols = Vec::new();
        for c in 0..nc {
            if r == nr {
                break;
            }
            let Some(pr) = (r..nr).find(|&i| a[i * nc + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in c..nc {
                    a.swap(pr * nc + j, r * nc + j);
                }
                order.swap(pr, r);
            }
            let inv = inv_mod(a[r * nc + c], p).expect("prime modulus");
            for j in c..nc {
                a[r * nc + j] = mul_mod(a[r * nc + j], inv, p);
            }
            let (head, tail) = a.split_at_mut((r + 1) * nc);
            let pivot_row = &head[r * nc..];
            for i in 0..(nr - r - 1) {
                let row = &mut tail[i * nc..(i + 1) * nc];
                let f = row[c];
                if f == 0 {
                    continue;
                }
                for j in c..nc {
                    if pivot_row[j] != 0 {
                        row[j] = sub_mod(row[j], mul_mod(f, pivot_row[j], p), p);
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }
        Echelon {
            rank: r,
            pivot_rows: order[..r].to_vec(),
            pivot_cols,
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank
    }

    pub fn determinant(&self) -> u64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let p = self.p;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1u64;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| a[i * n + c] != 0) else {
                return 0;
            };
            if pr != c {
                for j in 0..n {
                    a.swap(pr * n + j, c * n + j);
                }
                det = (p - det) % p;
            }
            let piv = a[c * n + c];
            det = mul_mod(det, piv, p);
            let inv = inv_mod(piv, p).expect("prime modulus");
            for i in c + 1..n {
                let f = mul_mod(a[i * n + c], inv, p);
                if f == 0 {
                    continue;
                }
                for j in c..n {
                    a[i * n + j] = sub_mod(a[i * n + j], mul_mod(f, a[c * n + j], p), p);
                }
            }
        }
        det
    }

    /// A vector `v` with `v * self = 0` and `v != 0`, if the rows are dependent.
    pub fn left_kernel_vector(&self) -> Option<Vec<u64>> {
        let p = self.p;
        let (nr, nc) = (self.rows, self.cols);
        let w = nc + nr;
        let mut a = vec![0u64; nr * w];
        for i in 0..nr {
            a[i * w..i * w + nc].copy_from_slice(&self.data[i * nc..(i + 1) * nc]);
            a[i * w + nc + i] = 1;
        }
        let mut r = 0;
        for c in 0..nc {
            let Some(pr) = (r..nr).find(|&i| a[i * w + c] != 0) else {
                continue;
            };
            for j in 0..w {
                a.swap(pr * w + j, r * w + j);
            }
            let inv = inv_mod(a[r * w + c], p).expect("prime modulus");
            for j in 0..w {
                a[r * w + j] = mul_mod(a[r * w + j], inv, p);
            }
            for i in r + 1..nr {
                let f = a[i * w + c];
                if f == 0 {
                    continue;
                }
                for j in 0..w {
                    let t = mul_mod(f, a[r * w + j], p);
                    a[i * w + j] = sub_mod(a[i * w + j], t, p);
                }
            }
            r += 1;
        }
        if r == nr {
            return None;
        }
        Some(a[r * w + nc..(r + 1) * w].to_vec())
    }
}

/// Elementary divisors d_1 | d_2 | ... | d_r of an integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub divisors: Vec<BigInt>,
    pub generic_rank: usize,
}

impl SmithForm {
    /// Rank of the source matrix modulo `p`.
    pub fn rank_mod(&self, p: u64) -> usize {
        let pb = BigInt::from(p);
        self.divisors
            .iter()
            .filter(|d| !d.is_multiple_of(&pb))
            .count()
    }
}

/// Smith normal form by elimination on the smallest nonzero pivot.
pub fn smith_form(m: &IntegerMatrix) -> SmithForm {
    let (nr, nc) = (m.rows, m.cols);
    let mut a: Vec<Vec<BigInt>> = m.to_rows();
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < nr && t < nc {
        let Some((pi, pj)) = min_abs_position(&a, t, t, nr, nc) else {
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..nr {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                let (top, bottom) = a.split_at_mut(i);
                let pivot_row = &top[t];
                for j in t..nc {
                    if !pivot_row[j].is_zero() {
                        let d = &q * &pivot_row[j];
                        bottom[0][j] -= d;
                    }
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..nc {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut().take(nr).skip(t) {
                    if !row[t].is_zero() {
                        let d = &q * &row[t];
                        row[j] -= d;
                    }
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                // move the smallest remaining entry of row/column t to the pivot
                let mut best = (t, t);
                let mut best_val = a[t][t].abs();
                for i in t + 1..nr {
                    if !a[i][t].is_zero() && a[i][t].abs() < best_val {
                        best_val = a[i][t].abs();
                        best = (i, t);
                    }
                }
                for j in t + 1..nc {
                    if !a[t][j].is_zero() && a[t][j].abs() < best_val {
                        best_val = a[t][j].abs();
                        best = (t, j);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            let piv = a[t][t].clone();
            let bad = (t + 1..nr).find(|&i| (t + 1..nc).any(|j| !a[i][j].is_multiple_of(&piv)));
            match bad {
                Some(i) => {
                    let (top, bottom) = a.split_at_mut(i);
                    for j in t..nc {
                        top[t][j] += &bottom[0][j];
                    }
                }
                None => break,
            }
        }
        divisors.push(a[t][t].abs());
        t += 1;
    }
    SmithForm {
        generic_rank: divisors.len(),
        divisors,
    }
}

fn min_abs_position(
    a: &[Vec<BigInt>],
    r0: usize,
    c0: usize,
    nr: usize,
    nc: usize,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for (i, row) in a.iter().enumerate().take(nr).skip(r0) {
        for (j, x) in row.iter().enumerate().take(nc).skip(c0) {
            if x.is_zero() {
                continue;
            }
            let v = x.abs();
            if best.as_ref().is_none_or(|b| v < b.2) {
                let one = v.is_one();
                best = Some((i, j, v));
                if one {
                    return best.map(|(i, j, _)| (i, j));
                }
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Rank of `m` reduced modulo the prime `p`.
pub fn rank_mod_prime(m: &IntegerMatrix, p: u64) -> usize {
    m.reduce_mod(p).rank()
}

/// Exact determinant by Chinese remaindering past the Hadamard bound.
pub fn determinant(m: &IntegerMatrix) -> BigInt {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    if m.rows == 0 {
        return BigInt::one();
    }
    let bound = m.minor_bound_log2(m.rows);
    if !bound.is_finite() {
        return BigInt::zero();
    }
    let needed = ((bound + 2.0) / 61.0).ceil() as usize + 1;
    let mut acc = CrtAccumulator::default();
    for p in crt_primes(needed) {
        acc.add(m.reduce_mod(p).determinant(), p);
    }
    acc.symmetric()
}

/// Generic (rational) rank of `m`, certified exactly.
///
/// The candidate rank is the rank modulo a large prime; it is confirmed by
/// checking the rank modulo enough further primes that their product exceeds
/// the Hadamard bound on every minor one size larger.
pub fn generic_rank(m: &IntegerMatrix) -> Echelon {
    let max_rank = m.rows.min(m.cols);
    let mut count = 2;
    loop {
        let primes = crt_primes(count);
        let mut best: Option<Echelon> = None;
        for &p in &primes[..2] {
            let e = m.reduce_mod(p).echelon();
            if best.as_ref().is_none_or(|b| e.rank > b.rank) {
                best = Some(e);
            }
        }
        let best = best.expect("at least one prime");
        let r = best.rank;
        if r == max_rank {
            return best;
        }
        let bound = m.minor_bound_log2(r + 1);
        if !bound.is_finite() {
            return best;
        }
        let needed = ((bound + 2.0) / 61.0).ceil() as usize + 1;
        let primes = crt_primes(needed.max(2));
        let mut confirmed = true;
        for &p in &primes[2..] {
            if m.reduce_mod(p).rank() != r {
                confirmed = false;
                break;
            }
        }
        if confirmed {
            return best;
        }
        count += 1;
    }
}

/// Generic rank together with the primes at which the rank drops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankDrop {
    pub generic_rank: usize,
    /// Word-sized primes `p` (not excluded) with rank mod p below the generic rank.
    pub primes: BTreeSet<u64>,
    /// Rank-drop primes too large for a machine word (never expected in practice).
    pub oversized: Vec<BigUint>,
}

enum ModOutcome {
    Split(BigUint),
    Rank(usize),
}

/// Elimination over Z/mZ for an arbitrary modulus, treating it as a field
/// until a non-invertible nonzero pivot exposes a factor of `m`.
fn rank_mod_composite(rows: &[Vec<BigInt>], m: &BigUint) -> ModOutcome {
    let mb = BigInt::from_biguint(Sign::Plus, m.clone());
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor(&mb)).collect())
        .collect();
    let nr = a.len();
    let nc = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(pr) = (r..nr).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        let g = a[pr][c].gcd(&mb);
        if !g.is_one() {
            return ModOutcome::Split(g.to_biguint().expect("positive"));
        }
        a.swap(pr, r);
        let ext = a[r][c].extended_gcd(&mb);
        let inv = ext.x.mod_floor(&mb);
        for j in c..nc {
            a[r][j] = (&a[r][j] * &inv).mod_floor(&mb);
        }
        for i in r + 1..nr {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            let (top, bottom) = a.split_at_mut(i);
            for j in c..nc {
                if !top[r][j].is_zero() {
                    bottom[0][j] = (&bottom[0][j] - &f * &top[r][j]).mod_floor(&mb);
                }
            }
        }
        r += 1;
    }
    ModOutcome::Rank(r)
}

/// Primes (outside `excluded`) modulo which the rank of `m` falls below its
/// generic rank, i.e. the primes dividing the last elementary divisor.
pub fn rank_drop_primes(m: &IntegerMatrix, excluded: &BTreeSet<u64>) -> RankDrop {
    let ech = generic_rank(m);
    let r = ech.rank;
    if r == 0 {
        return RankDrop {
            generic_rank: 0,
            primes: BTreeSet::new(),
            oversized: Vec::new(),
        };
    }
    let g = elementary_product_multiple(m, &ech);
    let mut primes = BTreeSet::new();
    let mut oversized = Vec::new();
    let mut rest = arith::abs_biguint(&g);
    for p in arith::primes_up_to(1 << 16) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if !(&rest % &pb).is_zero() {
            continue;
        }
        while (&rest % &pb).is_zero() {
            rest /= &pb;
        }
        if !excluded.contains(&p) && rank_mod_prime(m, p) < r {
            primes.insert(p);
        }
    }
    if !rest.is_one() {
        let rows = m.to_rows();
        let mut work = vec![rest];
        while let Some(modulus) = work.pop() {
            if modulus.is_one() {
                continue;
            }
            match rank_mod_composite(&rows, &modulus) {
                ModOutcome::Split(f) => {
                    let other = &modulus / &f;
                    work.push(f);
                    work.push(other);
                }
                ModOutcome::Rank(k) if k == r => {}
                ModOutcome::Rank(_) => {
                    for (p, _) in arith::factor_big(&modulus) {
                        match p.to_u64() {
                            Some(pw) => {
                                if !excluded.contains(&pw) && rank_mod_prime(m, pw) < r {
                                    primes.insert(pw);
                                }
                            }
                            None => {
                                if let ModOutcome::Rank(k) = rank_mod_composite(&rows, &p) {
                                    if k < r {
                                        oversized.push(p);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    RankDrop {
        generic_rank: r,
        primes,
        oversized,
    }
}

/// A nonzero integer divisible by the product of all elementary divisors of
/// `m` (the gcd of its r x r minors), built as the gcd of several minors of
/// sparse random row/column combinations (Cauchy-Binet).
fn elementary_product_multiple(m: &IntegerMatrix, ech: &Echelon) -> BigInt {
    let r = ech.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_5111);
    let mut g = BigInt::zero();
    let mut attempts = 0;
    let mut nonzero = 0;
    while nonzero < 4 && attempts < 12 {
        attempts += 1;
        let extra = if attempts == 1 { 0 } else { 2 };
        let mut rows_comb: Vec<Vec<(usize, i64)>> = Vec::with_capacity(r);
        for &i in &ech.pivot_rows {
            let mut comb = vec![(i, 1i64)];
            for _ in 0..extra {
                comb.push((rng.gen_range(0..m.rows), rng.gen_range(-3..=3)));
            }
            rows_comb.push(comb);
        }
        let mut cols_comb: Vec<Vec<(usize, i64)>> = Vec::with_capacity(r);
        for &j in &ech.pivot_cols {
            let mut comb = vec![(j, 1i64)];
            for _ in 0..extra {
                comb.push((rng.gen_range(0..m.cols), rng.gen_range(-3..=3)));
            }
            cols_comb.push(comb);
        }
        // (A M) restricted to the needed columns, then times B
        let mut needed_cols: Vec<usize> = cols_comb.iter().flatten().map(|&(j, _)| j).collect();
        needed_cols.sort_unstable();
        needed_cols.dedup();
        let col_pos = |j: usize| needed_cols.binary_search(&j).expect("present");
        let mut am = vec![vec![BigInt::zero(); needed_cols.len()]; r];
        for (a, comb) in rows_comb.iter().enumerate() {
            for &(i, c) in comb {
                if c == 0 {
                    continue;
                }
                for (k, &j) in needed_cols.iter().enumerate() {
                    let v = m.get(i, j);
                    if !v.is_zero() {
                        am[a][k] += v * c;
                    }
                }
            }
        }
        let mut entries = Vec::with_capacity(r * r);
        for row in &am {
            for comb in &cols_comb {
                let mut s = BigInt::zero();
                for &(j, c) in comb {
                    if c != 0 {
                        s += &row[col_pos(j)] * c;
                    }
                }
                entries.push(s);
            }
        }
        let sq = IntegerMatrix::new(r, r, entries).expect("square");
        let d = determinant(&sq);
        if d.is_zero() {
            continue;
        }
        g = g.gcd(&d);
        nonzero += 1;
        if g.is_one() {
            break;
        }
    }
    assert!(!g.is_zero(), "no nonzero maximal minor found");
    g
}

/// Integer lattice given by a basis of row vectors in Z^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBasis {
    pub ambient_dim: usize,
    pub basis: Vec<Vec<BigInt>>,
    pub saturated: bool,
}

impl LatticeBasis {
    pub fn new(ambient_dim: usize, basis: Vec<Vec<BigInt>>) -> Result<Self, LinError> {
        if let Some(v) = basis.iter().find(|v| v.len() != ambient_dim) {
            return Err(LinError::Ambient {
                expected: ambient_dim,
                got: v.len(),
            });
        }
        Ok(LatticeBasis {
            ambient_dim,
            basis,
            saturated: false,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn as_matrix(&self) -> IntegerMatrix {
        IntegerMatrix::from_rows(self.basis.clone(), self.ambient_dim)
    }
}

/// Rows of the reduced row echelon form over Q, scaled to primitive integer
/// rows, and the pivot columns.
fn integer_rref(rows: &[Vec<BigInt>], nc: usize) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let nr = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(pr) = (r..nr)
            .filter(|&i| !a[i][c].is_zero())
            .min_by_key(|&i| a[i][c].abs())
        else {
            continue;
        };
        a.swap(pr, r);
        for i in 0..nr {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let g = a[r][c].gcd(&a[i][c]);
            let fr = &a[i][c] / &g;
            let fi = &a[r][c] / &g;
            let (pivot_row, row) = if i < r {
                let (top, bottom) = a.split_at_mut(r);
                (&bottom[0], &mut top[i])
            } else {
                let (top, bottom) = a.split_at_mut(i);
                (&top[r], &mut bottom[0])
            };
            for j in 0..nc {
                let v = &row[j] * &fi - &pivot_row[j] * &fr;
                row[j] = v;
            }
            make_primitive(row);
        }
        make_primitive(&mut a[r]);
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots)
}

fn make_primitive(v: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in v.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return;
            }
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for x in v.iter_mut() {
        *x /= &g;
    }
}

/// Saturated basis of the integer right kernel {v in Z^cols : M v = 0}.
pub fn kernel_lattice(m: &IntegerMatrix) -> LatticeBasis {
    let nc = m.cols;
    let (rref, pivots) = integer_rref(&m.to_rows(), nc);
    let free: Vec<usize> = (0..nc).filter(|c| !pivots.contains(c)).collect();
    let mut lcm = BigInt::one();
    for (row, &pc) in rref.iter().zip(&pivots) {
        lcm = lcm.lcm(&row[pc]);
    }
    let mut basis = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![BigInt::zero(); nc];
        v[f] = lcm.clone();
        for (row, &pc) in rref.iter().zip(&pivots) {
            if !row[f].is_zero() {
                v[pc] = -(&row[f] * &lcm) / &row[pc];
            }
        }
        make_primitive(&mut v);
        basis.push(v);
    }
    let lat = LatticeBasis {
        ambient_dim: nc,
        basis,
        saturated: false,
    };
    saturate_independent(lat)
}

/// Saturation of a lattice: the integer points of its rational span.
pub fn saturate(l: &LatticeBasis) -> Result<LatticeBasis, LinError> {
    if l.basis.is_empty() {
        return Ok(LatticeBasis {
            ambient_dim: l.ambient_dim,
            basis: Vec::new(),
            saturated: true,
        });
    }
    let rank = generic_rank(&l.as_matrix()).rank;
    if rank < l.basis.len() {
        return Err(LinError::Dependent {
            rank,
            count: l.basis.len(),
        });
    }
    Ok(saturate_independent(l.clone()))
}

fn saturate_independent(l: LatticeBasis) -> LatticeBasis {
    let n = l.ambient_dim;
    let k = l.basis.len();
    if k == 0 {
        return LatticeBasis {
            ambient_dim: n,
            basis: Vec::new(),
            saturated: true,
        };
    }
    // Rows of the rational RREF span the same space; scaling them by the
    // common denominator gives a sublattice whose index in the saturation
    // only involves primes dividing that denominator.
    let (rref, pivots) = integer_rref(&l.basis, n);
    let mut denom = BigInt::one();
    for (row, &pc) in rref.iter().zip(&pivots) {
        denom = denom.lcm(&row[pc]);
    }
    let mut rows: Vec<Vec<BigInt>> = rref
        .iter()
        .zip(&pivots)
        .map(|(row, &pc)| {
            let f = &denom / &row[pc];
            row.iter().map(|x| x * &f).collect()
        })
        .collect();
    let mut rest = arith::abs_biguint(&denom);
    for p in arith::primes_up_to(1 << 16) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if !(&rest % &pb).is_zero() {
            continue;
        }
        while (&rest % &pb).is_zero() {
            rest /= &pb;
        }
        saturate_at_prime(&mut rows, p);
    }
    let mut work = vec![rest];
    while let Some(modulus) = work.pop() {
        if modulus.is_one() {
            continue;
        }
        if let Some(f) = saturate_at_modulus(&mut rows, &modulus) {
            let other = &modulus / &f;
            work.push(f);
            work.push(other);
        }
    }
    let basis = hermite_rows(rows, n);
    LatticeBasis {
        ambient_dim: n,
        basis,
        saturated: true,
    }
}

/// Replaces independent rows by a basis of their p-saturation.
pub fn saturate_rows_at_prime(rows: &mut [Vec<BigInt>], p: u64) {
    saturate_at_prime(rows, p)
}

fn saturate_at_prime(rows: &mut [Vec<BigInt>], p: u64) {
    let n = rows.first().map_or(0, |r| r.len());
    loop {
        let m = ModMatrix {
            rows: rows.len(),
            cols: n,
            p,
            data: rows.iter().flatten().map(|x| big_mod_u64(x, p)).collect(),
        };
        let Some(c) = m.left_kernel_vector() else {
            return;
        };
        let j = c
            .iter()
            .rposition(|&x| x != 0)
            .expect("nonzero kernel vector");
        let inv = inv_mod(c[j], p).expect("prime");
        let coeffs: Vec<u64> = c.iter().map(|&x| mul_mod(x, inv, p)).collect();
        let pb = BigInt::from(p);
        let mut combo = vec![BigInt::zero(); n];
        for (row, &cf) in rows.iter().zip(&coeffs) {
            if cf == 0 {
                continue;
            }
            for (t, x) in combo.iter_mut().zip(row) {
                *t += x * cf;
            }
        }
        for x in combo.iter_mut() {
            debug_assert!(x.is_multiple_of(&pb));
            *x /= &pb;
        }
        rows[j] = combo;
    }
}

/// Saturation at every prime dividing a modulus with no small factors.
/// Returns a proper factor of the modulus when one is exposed.
fn saturate_at_modulus(rows: &mut [Vec<BigInt>], m: &BigUint) -> Option<BigUint> {
    let mb = BigInt::from_biguint(Sign::Plus, m.clone());
    let n = rows.first().map_or(0, |r| r.len());
    let k = rows.len();
    loop {
        // elimination on [rows | I] over Z/m
        let w = n + k;
        let mut a: Vec<Vec<BigInt>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v: Vec<BigInt> = r.iter().map(|x| x.mod_floor(&mb)).collect();
                v.extend((0..k).map(|t| {
                    if t == i {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                }));
                v
            })
            .collect();
        let mut r = 0;
        for c in 0..n {
            let Some(pr) = (r..k).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            let g = a[pr][c].gcd(&mb);
            if !g.is_one() {
                return Some(g.to_biguint().expect("positive"));
            }
            a.swap(pr, r);
            let inv = a[r][c].extended_gcd(&mb).x.mod_floor(&mb);
            for j in 0..w {
                a[r][j] = (&a[r][j] * &inv).mod_floor(&mb);
            }
            for i in r + 1..k {
                if a[i][c].is_zero() {
                    continue;
                }
                let f = a[i][c].clone();
                let (top, bottom) = a.split_at_mut(i);
                for j in 0..w {
                    bottom[0][j] = (&bottom[0][j] - &f * &top[r][j]).mod_floor(&mb);
                }
            }
            r += 1;
            if r == k {
                break;
            }
        }
        if r == k {
            return None;
        }
        let c: Vec<BigInt> = a[r][n..].to_vec();
        let j = c.iter().rposition(|x| !x.is_zero())?;
        let g = c[j].gcd(&mb);
        if !g.is_one() {
            return Some(g.to_biguint().expect("positive"));
        }
        let inv = c[j].extended_gcd(&mb).x.mod_floor(&mb);
        let coeffs: Vec<BigInt> = c.iter().map(|x| (x * &inv).mod_floor(&mb)).collect();
        let mut combo = vec![BigInt::zero(); n];
        for (row, cf) in rows.iter().zip(&coeffs) {
            if cf.is_zero() {
                continue;
            }
            for (t, x) in combo.iter_mut().zip(row) {
                *t += x * cf;
            }
        }
        for x in combo.iter_mut() {
            *x /= &mb;
        }
        rows[j] = combo;
    }
}

/// Row Hermite normal form of a full-row-rank integer matrix: positive
/// pivots, entries above each pivot reduced into [0, pivot).
pub fn hermite_rows(mut rows: Vec<Vec<BigInt>>, n: usize) -> Vec<Vec<BigInt>> {
    let k = rows.len();
    let mut r = 0;
    for c in 0..n {
        if r == k {
            break;
        }
        // gcd-combine column c over rows r..k
        loop {
            let Some(pr) = (r..k)
                .filter(|&i| !rows[i][c].is_zero())
                .min_by_key(|&i| rows[i][c].abs())
            else {
                break;
            };
            rows.swap(pr, r);
            let mut done = true;
            for i in r + 1..k {
                if rows[i][c].is_zero() {
                    continue;
                }
                let q = rows[i][c].div_floor(&rows[r][c]);
                let (top, bottom) = rows.split_at_mut(i);
                for j in c..n {
                    if !top[r][j].is_zero() {
                        let d = &q * &top[r][j];
                        bottom[0][j] -= d;
                    }
                }
                if !rows[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if rows[r][c].is_zero() {
            continue;
        }
        if rows[r][c].is_negative() {
            for x in rows[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            if rows[i][c].is_zero() {
                continue;
            }
            let q = rows[i][c].div_floor(&rows[r][c]);
            if q.is_zero() {
                continue;
            }
            let (top, bottom) = rows.split_at_mut(r);
            for j in c..n {
                if !bottom[0][j].is_zero() {
                    let d = &q * &bottom[0][j];
                    top[i][j] -= d;
                }
            }
        }
        r += 1;
    }
    rows.truncate(r);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntegerMatrix {
        IntegerMatrix::from_rows_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn smith_examples() {
        let id = IntegerMatrix::identity(3);
        let s = smith_form(&id);
        assert_eq!(s.divisors, big(&[1, 1, 1]));
        assert_eq!(s.generic_rank, 3);

        let z = IntegerMatrix::zeros(2, 3);
        let s = smith_form(&z);
        assert!(s.divisors.is_empty());
        assert_eq!(s.generic_rank, 0);

        let s = smith_form(&m(&[&[2, 4], &[6, 8]]));
        assert_eq!(s.divisors, big(&[2, 4]));
    }

    #[test]
    fn smith_needs_divisibility_fix() {
        let s = smith_form(&m(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.divisors, big(&[1, 6]));
    }

    #[test]
    fn rank_drop_examples() {
        let none = BTreeSet::new();
        let r = rank_drop_primes(&IntegerMatrix::identity(3), &none);
        assert_eq!((r.generic_rank, r.primes.len()), (3, 0));

        let r = rank_drop_primes(&m(&[&[2, 4], &[6, 8]]), &none);
        assert_eq!(r.generic_rank, 2);
        assert_eq!(r.primes, BTreeSet::from([2]));

        let r = rank_drop_primes(&m(&[&[1, 0], &[0, 6]]), &BTreeSet::from([2]));
        assert_eq!(r.primes, BTreeSet::from([3]));

        let r = rank_drop_primes(&IntegerMatrix::zeros(2, 2), &none);
        assert_eq!(r.generic_rank, 0);
    }

    #[test]
    fn large_prime_rank_drop() {
        // det = 1000003 * 7, a prime beyond the trial-division range
        let r = rank_drop_primes(&m(&[&[1000003, 0], &[0, 7]]), &BTreeSet::new());
        assert_eq!(r.primes, BTreeSet::from([7, 1000003]));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_lattice(&m(&[&[1, 1]]));
        assert_eq!(k.basis, vec![big(&[1, -1])]);
        let k = kernel_lattice(&m(&[&[2, 2]]));
        assert_eq!(k.basis, vec![big(&[1, -1])]);
        let k = kernel_lattice(&m(&[&[1, 0, 0], &[0, 1, 0]]));
        assert_eq!(k.basis, vec![big(&[0, 0, 1])]);
        assert!(k.saturated);
    }

    #[test]
    fn saturate_examples() {
        let l = LatticeBasis::new(3, vec![big(&[1, 1, 0]), big(&[1, -1, 0])]).unwrap();
        let s = saturate(&l).unwrap();
        assert_eq!(s.basis, vec![big(&[1, 0, 0]), big(&[0, 1, 0])]);

        let l = LatticeBasis::new(2, vec![big(&[2, 0])]).unwrap();
        assert_eq!(saturate(&l).unwrap().basis, vec![big(&[1, 0])]);

        let l = LatticeBasis::new(2, vec![big(&[1, 0]), big(&[0, 1])]).unwrap();
        assert_eq!(saturate(&l).unwrap().basis, l.basis);

        let l = LatticeBasis::new(2, vec![big(&[1, 2]), big(&[2, 4])]).unwrap();
        assert!(matches!(saturate(&l), Err(LinError::Dependent { .. })));
    }

    #[test]
    fn saturate_large_prime_index() {
        let p = 1_000_000_007i64;
        let l = LatticeBasis::new(2, vec![big(&[p, p]), big(&[0, 1])]).unwrap();
        assert_eq!(
            saturate(&l).unwrap().basis,
            vec![big(&[1, 0]), big(&[0, 1])]
        );
    }

    #[test]
    fn determinant_matches_small_case() {
        assert_eq!(determinant(&m(&[&[2, 4], &[6, 8]])), BigInt::from(-8));
        assert_eq!(determinant(&m(&[&[1, 2], &[2, 4]])), BigInt::zero());
    }

    #[test]
    fn shape_error() {
        assert!(IntegerMatrix::new(2, 2, vec![BigInt::one(); 3]).is_err());
    }
}
