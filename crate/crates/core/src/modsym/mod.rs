//! Weight-2 modular symbols for Γ_Δ(N): cuspidal subspace, Hecke, diamond
//! and Atkin-Lehner operators, and saturated integral q-expansion bases.

pub mod basisfile;
pub mod hecke;
pub mod manin;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::gcd_u64;
use crate::exactlin::{
    self, generic_rank, hermite_rows, kernel_lattice, IntegerMatrix, LatticeBasis,
};
use crate::modgroup::{atkin_lehner_divisors, is_atkin_lehner_divisor, GroupError, LevelGroup};

pub use basisfile::{emit_basis, ingest_basis, BasisCache};
use manin::{clear_denominators, ManinPresentation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModSymError {
    #[error("precision {precision} is below the Sturm bound {sturm}")]
    PrecisionBelowSturm { precision: usize, sturm: usize },
    #[error("basis has {got} forms but the curve has genus {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed basis file: {0}")]
    Malformed(String),
    #[error("{d} is not an Atkin-Lehner divisor of {level}")]
    NotAtkinLehner { d: u64, level: u64 },
    #[error("no Atkin-Lehner involution w_{d} on the group")]
    NotNormalized { d: u64 },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("i/o: {0}")]
    Io(String),
}

/// ⌈kμ/12⌉ + 1 for the PSL_2 index μ of the group.
pub fn sturm_bound(weight: u64, group: &LevelGroup) -> usize {
    sturm_bound_for_index(weight, group.psl2_index())
}

pub fn sturm_bound_for_index(weight: u64, mu: u64) -> usize {
    ((weight * mu).div_ceil(12) + 1) as usize
}

/// Truncated power series with coefficients of q^1..q^B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
}

impl QSeries {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        QSeries { coeffs }
    }

    pub fn from_integers(coeffs: &[BigInt]) -> Self {
        QSeries {
            coeffs: coeffs
                .iter()
                .cloned()
                .map(BigRational::from_integer)
                .collect(),
        }
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of q^n, n >= 1.
    pub fn coeff(&self, n: usize) -> &BigRational {
        &self.coeffs[n - 1]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let b = self.precision().min(other.precision());
        QSeries {
            coeffs: (0..b).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Product of two series without constant terms, to the smaller precision.
    pub fn mul(&self, other: &QSeries) -> QSeries {
        let b = self.precision().min(other.precision());
        let mut out = vec![BigRational::zero(); b];
        for i in 1..=b {
            if self.coeffs[i - 1].is_zero() {
                continue;
            }
            for j in 1..=(b - i) {
                out[i + j - 1] += &self.coeffs[i - 1] * &other.coeffs[j - 1];
            }
        }
        QSeries { coeffs: out }
    }
}

/// Saturated integral echelon basis of S_2(Γ_Δ(N)) to precision B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspBasis {
    pub group: LevelGroup,
    pub genus: usize,
    pub precision: usize,
    /// forms[i][j] is the coefficient of q^(j+1)
    pub forms: Vec<Vec<BigInt>>,
    /// 0-based column of the leading coefficient of each form
    pub pivots: Vec<usize>,
}

impl CuspBasis {
    /// Builds from integer rows: saturates and puts them in echelon form.
    pub fn from_rows(
        group: LevelGroup,
        precision: usize,
        rows: Vec<Vec<BigInt>>,
    ) -> Result<Self, ModSymError> {
        let genus = group.genus() as usize;
        let sturm = sturm_bound(2, &group);
        if precision < sturm {
            return Err(ModSymError::PrecisionBelowSturm { precision, sturm });
        }
        if rows.iter().any(|r| r.len() != precision) {
            return Err(ModSymError::Malformed(
                "row length differs from precision".into(),
            ));
        }
        let lat = LatticeBasis::new(precision, rows).expect("lengths checked");
        let count = lat.rank();
        let sat = exactlin::saturate(&lat).map_err(|_| ModSymError::DimensionMismatch {
            expected: genus,
            got: generic_rank(&lat.as_matrix()).rank,
        })?;
        if count != genus {
            return Err(ModSymError::DimensionMismatch {
                expected: genus,
                got: count,
            });
        }
        Ok(Self::from_saturated(group, precision, sat.basis))
    }

    fn from_saturated(group: LevelGroup, precision: usize, rows: Vec<Vec<BigInt>>) -> Self {
        let forms = hermite_rows(rows, precision);
        let pivots = forms
            .iter()
            .map(|r| r.iter().position(|x| !x.is_zero()).expect("nonzero row"))
            .collect();
        CuspBasis {
            genus: forms.len(),
            group,
            precision,
            forms,
            pivots,
        }
    }

    pub fn series(&self) -> Vec<QSeries> {
        self.forms
            .iter()
            .map(|f| QSeries::from_integers(f))
            .collect()
    }

    pub fn coefficient_matrix(&self) -> IntegerMatrix {
        IntegerMatrix::from_rows(self.forms.clone(), self.precision)
    }

    /// Same basis cut down to a smaller precision.
    pub fn truncate(&self, precision: usize) -> CuspBasis {
        let forms: Vec<Vec<BigInt>> = self.forms.iter().map(|f| f[..precision].to_vec()).collect();
        CuspBasis {
            group: self.group.clone(),
            genus: self.genus,
            precision,
            forms,
            pivots: self.pivots.clone(),
        }
    }
}

/// Which operator a matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Hecke(u64),
    Diamond(u64),
    AtkinLehner(u64),
}

/// Operator on the cuspidal symbol space; row i holds the coordinates of the
/// image of the i-th basis vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub matrix: Vec<Vec<BigRational>>,
}

impl OperatorMatrix {
    pub fn trace(&self) -> BigRational {
        (0..self.matrix.len())
            .map(|i| self.matrix[i][i].clone())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Vec<Vec<BigRational>> {
        // (self after other) in row convention: other * self
        let n = self.matrix.len();
        let mut out = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = &other.matrix[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += a * &self.matrix[k][j];
                }
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.iter().enumerate().all(|(i, r)| {
            r.iter()
                .enumerate()
                .all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
        })
    }
}

/// The cuspidal subspace of the Manin-symbol space.
#[derive(Clone, Debug)]
pub struct CuspidalSpace {
    pub symbols: ManinPresentation,
    /// integral basis of the cuspidal subspace, in symbol coordinates
    pub lattice: Vec<Vec<BigInt>>,
    rref: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
}

impl CuspidalSpace {
    pub fn new(group: &LevelGroup) -> Self {
        let symbols = ManinPresentation::new(group);
        let (boundary, _) = symbols.boundary_matrix();
        let lattice = kernel_lattice(&boundary.transpose()).basis;
        let (rref, pivots) = rational_rref(&lattice, symbols.dim());
        CuspidalSpace {
            symbols,
            lattice,
            rref,
            pivots,
        }
    }

    pub fn group(&self) -> &LevelGroup {
        &self.symbols.group
    }

    pub fn dim(&self) -> usize {
        self.lattice.len()
    }

    pub fn genus(&self) -> usize {
        self.dim() / 2
    }

    fn coordinates(&self, v: &BTreeMap<usize, BigRational>) -> Vec<BigRational> {
        self.pivots
            .iter()
            .map(|p| v.get(p).cloned().unwrap_or_else(BigRational::zero))
            .collect()
    }

    fn operator<F>(&self, kind: OperatorKind, image_of_symbol: F) -> OperatorMatrix
    where
        F: Fn(usize) -> BTreeMap<usize, BigRational>,
    {
        let images: Vec<BTreeMap<usize, BigRational>> = self
            .symbols
            .basis
            .iter()
            .map(|&s| image_of_symbol(s))
            .collect();
        let matrix = self
            .rref
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
                for (j, x) in row.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (c, v) in &images[j] {
                        *acc.entry(*c).or_insert_with(BigRational::zero) += v * x;
                    }
                }
                self.coordinates(&acc)
            })
            .collect();
        OperatorMatrix { kind, matrix }
    }

    fn accumulate(&self, acc: &mut BTreeMap<usize, BigRational>, c: i64, d: i64) {
        if let Some(e) = self.symbols.symbol(c, d) {
            for (k, v) in e {
                *acc.entry(*k).or_insert_with(BigRational::zero) += v;
            }
        }
    }

    pub fn hecke_matrix(&self, n: u64) -> OperatorMatrix {
        let h = hecke::heilbronn(n);
        self.operator(OperatorKind::Hecke(n), |s| {
            let (c, d) = self.symbols.cosets.reps[s];
            let (c, d) = (c as i64, d as i64);
            let mut acc = BTreeMap::new();
            for m in h.iter() {
                self.accumulate(&mut acc, c * m[0] + d * m[2], c * m[1] + d * m[3]);
            }
            acc
        })
    }

    pub fn diamond_matrix(&self, u: u64) -> OperatorMatrix {
        let n = self.symbols.level() as i64;
        assert_eq!(gcd_u64(u, n as u64), 1, "diamond of a non-unit");
        self.operator(OperatorKind::Diamond(u), |s| {
            let (c, d) = self.symbols.cosets.reps[s];
            let mut acc = BTreeMap::new();
            let u = u as i64;
            self.accumulate(&mut acc, (u * c as i64) % n, (u * d as i64) % n);
            acc
        })
    }

    /// w_d on X0(N) via W = [[d, 1], [N t, d w]] with d w - (N/d) t = 1.
    pub fn atkin_lehner_matrix(&self, d: u64) -> Result<OperatorMatrix, ModSymError> {
        let n = self.symbols.level();
        if !is_atkin_lehner_divisor(n, d) {
            return Err(ModSymError::NotAtkinLehner { d, level: n });
        }
        let w = if self.group().is_full() {
            al_matrix(n as i64, d as i64)
        } else {
            involution_matrix(self.group(), d).ok_or(ModSymError::NotNormalized { d })?
        };
        Ok(self.operator(OperatorKind::AtkinLehner(d), |s| {
            let [a, b, c, dd] = self.symbols.lift(s);
            let alpha = apply_to_cusp(&w, (b, dd));
            let beta = apply_to_cusp(&w, (a, c));
            self.symbols.between(alpha, beta)
        }))
    }

    /// Cusp forms of the group to the given precision, spanning S_2 over Q.
    ///
    /// Each form is Σ ψ(T_n x) q^n for a cuspidal symbol x and a random
    /// integral functional ψ on the symbol space.
    pub fn rational_forms(&self, precision: usize) -> Vec<Vec<BigInt>> {
        let g = self.genus();
        if g == 0 {
            return Vec::new();
        }
        let pres = &self.symbols;
        let cos = &pres.cosets;
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        let mut attempt = 0u64;
        loop {
            let mut rng = ChaCha8Rng::seed_from_u64(
                pres.level() * 0x9E37_79B9 + cos.len() as u64 * 31 + attempt,
            );
            attempt += 1;
            let psi: Vec<BigRational> = (0..pres.dim())
                .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-40i64..=40))))
                .collect();
            let phi_rat: Vec<BigRational> = pres
                .expr
                .iter()
                .map(|e| {
                    e.iter()
                        .fold(BigRational::zero(), |s, (k, v)| s + v * &psi[*k])
                })
                .collect();
            let (phi_big, _) = clear_denominators(&phi_rat);
            let phi: Vec<i128> = phi_big
                .iter()
                .map(|x| x.to_i128().expect("functional values fit in i128"))
                .collect();
            // v[j][n-1] = ψ(T_n [c_j : d_j])
            let v: Vec<Vec<i128>> = pres
                .basis
                .par_iter()
                .map(|&s| {
                    let (c, d) = cos.reps[s];
                    let (c, d) = (c as i64, d as i64);
                    (1..=precision as u64)
                        .map(|n| {
                            let mut t = 0i128;
                            for m in hecke::heilbronn(n).iter() {
                                if let Some(i) =
                                    cos.class_of(c * m[0] + d * m[2], c * m[1] + d * m[3])
                                {
                                    t += phi[i];
                                }
                            }
                            t
                        })
                        .collect()
                })
                .collect();
            for x in &self.lattice {
                let mut f = vec![BigInt::zero(); precision];
                for (j, xj) in x.iter().enumerate() {
                    if xj.is_zero() {
                        continue;
                    }
                    for (fnn, vn) in f.iter_mut().zip(&v[j]) {
                        if *vn != 0 {
                            *fnn += xj * BigInt::from(*vn);
                        }
                    }
                }
                if f.iter().any(|a| !a.is_zero()) {
                    rows.push(f);
                }
            }
            let m = IntegerMatrix::from_rows(rows.clone(), precision);
            let ech = generic_rank(&m);
            assert!(ech.rank <= g, "more independent forms than the genus");
            if ech.rank == g {
                return ech.pivot_rows.iter().map(|&i| rows[i].clone()).collect();
            }
            assert!(attempt < 12, "functionals failed to span S_2");
        }
    }
}

fn rational_rref(rows: &[Vec<BigInt>], ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().cloned().map(BigRational::from_integer).collect())
        .collect();
    let nr = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..nr {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots)
}

fn al_matrix(n: i64, d: i64) -> [i64; 4] {
    let m = n / d;
    // d w - m t = 1
    let (g, w, t) = crate::arith::ext_gcd(d as i128, m as i128);
    debug_assert_eq!(g, 1);
    [d, 1, n * (-t as i64), d * w as i64]
}

/// W = [[dx, y], [N, dw]] normalizing Γ_Δ with W² ∈ d·Γ_Δ, so that W acts
/// as an involution on X_Δ. W² / d has lower-right entry ≡ (1, −(dx²)^{-1})
/// on the d- and N/d-parts, so x must be searched for.
fn involution_matrix(group: &LevelGroup, d: u64) -> Option<[i64; 4]> {
    let n = group.level() as i64;
    if !group.normalized_by_atkin_lehner(d) {
        return None;
    }
    let d = d as i64;
    let m = n / d;
    (1..=m.max(1)).find_map(|x| {
        // d x w - m t = 1
        let (g, w, t) = crate::arith::ext_gcd((d * x) as i128, m as i128);
        if g != 1 {
            return None;
        }
        let (w, y) = (w as i64, -(t as i64));
        let lower = (n as i128 * y as i128 + (d * w) as i128 * (d * w) as i128) / d as i128;
        group
            .contains(lower.rem_euclid(n as i128) as u64)
            .then_some([d * x, y, n, d * w])
    })
}

fn apply_to_cusp(w: &[i64; 4], (p, q): (i64, i64)) -> (i64, i64) {
    let num = w[0] as i128 * p as i128 + w[1] as i128 * q as i128;
    let den = w[2] as i128 * p as i128 + w[3] as i128 * q as i128;
    let g = num.gcd(&den);
    let (mut num, mut den) = (num / g, den / g);
    if den < 0 || (den == 0 && num < 0) {
        num = -num;
        den = -den;
    }
    (num as i64, den as i64)
}

/// Saturated integral q-expansion basis of S_2(Γ_Δ(N)).
pub fn s2_basis(group: &LevelGroup, precision: usize) -> Result<CuspBasis, ModSymError> {
    let sturm = sturm_bound(2, group);
    if precision < sturm {
        return Err(ModSymError::PrecisionBelowSturm { precision, sturm });
    }
    let space = CuspidalSpace::new(group);
    Ok(s2_basis_from_space(&space, precision))
}

pub fn s2_basis_from_space(space: &CuspidalSpace, precision: usize) -> CuspBasis {
    let group = space.group().clone();
    let rows = space.rational_forms(precision);
    if rows.is_empty() {
        return CuspBasis {
            group,
            genus: 0,
            precision,
            forms: Vec::new(),
            pivots: Vec::new(),
        };
    }
    let lat = LatticeBasis::new(precision, rows).expect("uniform length");
    let sat = exactlin::saturate(&lat).expect("independent forms");
    CuspBasis::from_saturated(group, precision, sat.basis)
}

/// Integral forms spanning S_2 over Q whose lattice is saturated at the
/// given primes only. Their reduction mod such a p spans S_2 over F_p,
/// which is all a rank test at p needs.
pub fn forms_saturated_at(
    group: &LevelGroup,
    precision: usize,
    primes: &[u64],
) -> Result<Vec<Vec<BigInt>>, ModSymError> {
    let sturm = sturm_bound(2, group);
    if precision < sturm {
        return Err(ModSymError::PrecisionBelowSturm { precision, sturm });
    }
    let mut rows = CuspidalSpace::new(group).rational_forms(precision);
    for &p in primes {
        exactlin::saturate_rows_at_prime(&mut rows, p);
    }
    Ok(rows)
}

/// Default precision: enough for weight-6 products.
pub fn default_precision(group: &LevelGroup, slack: usize) -> usize {
    sturm_bound(6, group) + slack
}

/// Genus of X_0(N)/w_d, from the trace of w_d on cuspidal symbols.
pub fn atkin_lehner_plus_dimension(n: u64, d: u64) -> Result<u64, ModSymError> {
    if !is_atkin_lehner_divisor(n, d) {
        return Err(ModSymError::NotAtkinLehner { d, level: n });
    }
    let space = CuspidalSpace::new(&LevelGroup::full(n));
    plus_dimension(&space, d)
}

fn plus_dimension(space: &CuspidalSpace, d: u64) -> Result<u64, ModSymError> {
    let w = space.atkin_lehner_matrix(d)?;
    let tr = w.trace();
    debug_assert!(tr.is_integer());
    let tr = tr.to_integer();
    // trace on symbols is twice the trace on forms
    let num: BigInt = BigInt::from(2 * space.genus()) + &tr;
    debug_assert!((&num % 4u32).is_zero());
    let plus = num / 4u32;
    Ok(plus.to_u64().expect("non-negative"))
}

/// Fixed points of w_d on X_0(N).
pub fn nu_general(n: u64, d: u64) -> Result<u64, ModSymError> {
    let space = CuspidalSpace::new(&LevelGroup::full(n));
    nu_from_space(&space, d)
}

pub fn nu_from_space(space: &CuspidalSpace, d: u64) -> Result<u64, ModSymError> {
    let g = space.genus() as u64;
    let plus = plus_dimension(space, d)?;
    Ok(2 * g + 2 - 4 * plus)
}

/// (d, fixed points, quotient genus) for every w_d normalizing Γ_Δ.
pub fn involution_data(group: &LevelGroup) -> Vec<(u64, u64, u64)> {
    let space = CuspidalSpace::new(group);
    let g = space.genus() as u64;
    atkin_lehner_divisors(group.level())
        .into_iter()
        .filter(|&d| d > 1 && involution_matrix(group, d).is_some())
        .map(|d| {
            let plus = plus_dimension(&space, d).expect("normalizing involution");
            (d, 2 * g + 2 - 4 * plus, plus)
        })
        .collect()
}

/// ν(d; N) for every Atkin-Lehner divisor d of N.
pub fn nu_all(n: u64) -> Vec<(u64, u64)> {
    let space = CuspidalSpace::new(&LevelGroup::full(n));
    atkin_lehner_divisors(n)
        .into_iter()
        .map(|d| (d, nu_from_space(&space, d).expect("AL divisor")))
        .collect()
}
