//! Canonical-ring rank criteria: hyperelliptic, trigonal and plane-quintic
//! reduction of X_Δ(N) at primes of good reduction.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::arith::prime_divisors;
use crate::exactlin::{
    generic_rank, kernel_lattice, rank_drop_primes, rank_mod_prime, IntegerMatrix,
};
use crate::modgroup::LevelGroup;
use crate::modsym::{sturm_bound, CuspBasis};

/// Genus up to which reports use the μ-map; above it the tangent-space test.
pub const MU_MAP_GENUS_LIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PetriError {
    #[error("genus {0} is too small for this analysis")]
    GenusTooSmall(usize),
    #[error("precision {precision} is below the weight-{weight} Sturm bound {needed}")]
    Precision {
        precision: usize,
        needed: usize,
        weight: u64,
    },
    #[error("curve has hyperelliptic reduction at {0:?}")]
    Hypothesis(Vec<u64>),
    #[error("point does not lie on every quadric")]
    PointNotOnCurve,
    #[error("rank {rank} mod {p} is neither the hyperelliptic nor the generic value")]
    Anomaly { p: u64, rank: usize },
}

/// Nondecreasing index tuples of length m in lexicographic order.
pub fn monomials(g: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(g: usize, m: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..g {
            cur.push(i);
            rec(g, m, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, m, 0, &mut Vec::with_capacity(m), &mut out);
    out
}

fn monomial_index(g: usize, m: usize) -> BTreeMap<Vec<usize>, usize> {
    monomials(g, m)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect()
}

/// Coefficients of q^1..q^B of the product of two series given from q^1.
pub fn mul_truncated(a: &[BigInt], b: &[BigInt], precision: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); precision];
    for i in 1..=precision.min(a.len()) {
        let ai = &a[i - 1];
        if ai.is_zero() {
            continue;
        }
        for j in 1..=(precision - i).min(b.len()) {
            let bj = &b[j - 1];
            if !bj.is_zero() {
                out[i + j - 1] += ai * bj;
            }
        }
    }
    out
}

fn small_forms(forms: &[Vec<BigInt>]) -> Option<Vec<Vec<i128>>> {
    let limit = BigInt::from(1i64 << 40);
    forms
        .iter()
        .map(|f| {
            f.iter()
                .map(|x| (x.abs() < limit).then(|| x.to_i128().expect("small")))
                .collect()
        })
        .collect()
}

fn mul_small(a: &[i128], b: &[i128], precision: usize) -> Vec<BigInt> {
    let mut out = vec![0i128; precision];
    for i in 1..=precision {
        let ai = a[i - 1];
        if ai == 0 {
            continue;
        }
        for j in 1..=(precision - i) {
            out[i + j - 1] += ai * b[j - 1];
        }
    }
    out.into_iter().map(BigInt::from).collect()
}

/// Matrix of the degree-m multiplication map Sym^m V → H^0(mK) in
/// q-expansion coordinates: one row per monomial, one column per coefficient.
#[derive(Clone, Debug)]
pub struct CanonicalMatrix {
    pub degree: usize,
    pub genus: usize,
    pub monomials: Vec<Vec<usize>>,
    pub matrix: IntegerMatrix,
}

pub fn build_canonical_matrix(basis: &CuspBasis, m: usize) -> Result<CanonicalMatrix, PetriError> {
    assert!(m == 2 || m == 3, "degree must be 2 or 3");
    let needed = sturm_bound(2 * m as u64, &basis.group);
    if basis.precision < needed {
        return Err(PetriError::Precision {
            precision: basis.precision,
            needed,
            weight: 2 * m as u64,
        });
    }
    let g = basis.genus;
    let b = basis.precision;
    let mons = monomials(g, m);
    let small = small_forms(&basis.forms);
    let mut pairs: BTreeMap<(usize, usize), Vec<BigInt>> = BTreeMap::new();
    for i in 0..g {
        for j in i..g {
            let p = match &small {
                Some(s) => mul_small(&s[i], &s[j], b),
                None => mul_truncated(&basis.forms[i], &basis.forms[j], b),
            };
            pairs.insert((i, j), p);
        }
    }
    let rows: Vec<Vec<BigInt>> = mons
        .iter()
        .map(|mono| {
            if m == 2 {
                pairs[&(mono[0], mono[1])].clone()
            } else {
                mul_truncated(&pairs[&(mono[0], mono[1])], &basis.forms[mono[2]], b)
            }
        })
        .collect();
    Ok(CanonicalMatrix {
        degree: m,
        genus: g,
        monomials: mons,
        matrix: IntegerMatrix::from_rows(rows, b),
    })
}

fn bad_primes(group: &LevelGroup) -> BTreeSet<u64> {
    prime_divisors(group.level()).into_iter().collect()
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Expected dimension of (I_can)_m for a non-hyperelliptic canonical curve.
pub fn ideal_dimension(g: usize, m: usize) -> usize {
    binom(g + m - 1, m) - (2 * m - 1) * (g - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HyperellipticVerdict {
    pub char0_hyperelliptic: bool,
    pub primes: BTreeSet<u64>,
    pub generic_rank: usize,
}

/// Degree-2 rank test: rank 2g−1 means hyperelliptic, 3g−3 means not.
pub fn hyperelliptic_analysis(basis: &CuspBasis) -> Result<HyperellipticVerdict, PetriError> {
    let g = basis.genus;
    if g <= 1 {
        return Err(PetriError::GenusTooSmall(g));
    }
    if g == 2 {
        return Ok(HyperellipticVerdict {
            char0_hyperelliptic: true,
            primes: BTreeSet::new(),
            generic_rank: 3,
        });
    }
    let m2 = build_canonical_matrix(basis, 2)?;
    hyperelliptic_from_matrix(&m2.matrix, g, &bad_primes(&basis.group))
}

fn hyperelliptic_from_matrix(
    m2: &IntegerMatrix,
    g: usize,
    bad: &BTreeSet<u64>,
) -> Result<HyperellipticVerdict, PetriError> {
    let drop = rank_drop_primes(m2, bad);
    let r = drop.generic_rank;
    if r == 2 * g - 1 {
        return Ok(HyperellipticVerdict {
            char0_hyperelliptic: true,
            primes: BTreeSet::new(),
            generic_rank: r,
        });
    }
    if r != 3 * g - 3 {
        return Err(PetriError::Anomaly { p: 0, rank: r });
    }
    if let Some(p) = drop.oversized.first() {
        // a rank drop at a prime beyond 64 bits would itself be an anomaly
        return Err(PetriError::Anomaly {
            p: p.to_u64().unwrap_or(u64::MAX),
            rank: 0,
        });
    }
    let mut primes = BTreeSet::new();
    for p in drop.primes {
        let rp = rank_mod_prime(m2, p);
        if rp != 2 * g - 1 {
            return Err(PetriError::Anomaly { p, rank: rp });
        }
        primes.insert(p);
    }
    Ok(HyperellipticVerdict {
        char0_hyperelliptic: false,
        primes,
        generic_rank: r,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrigonalVerdict {
    pub char0_trigonal_or_quintic: bool,
    pub primes: BTreeSet<u64>,
    pub generic_rank: usize,
}

fn require_non_hyperelliptic(basis: &CuspBasis) -> Result<IntegerMatrix, PetriError> {
    let g = basis.genus;
    if g < 4 {
        return Err(PetriError::GenusTooSmall(g));
    }
    let m2 = build_canonical_matrix(basis, 2)?;
    let h = hyperelliptic_from_matrix(&m2.matrix, g, &bad_primes(&basis.group))?;
    if h.char0_hyperelliptic {
        return Err(PetriError::Hypothesis(vec![0]));
    }
    if !h.primes.is_empty() {
        return Err(PetriError::Hypothesis(h.primes.into_iter().collect()));
    }
    Ok(m2.matrix)
}

/// Saturated basis of (I_can)_2, as coefficient vectors over the degree-2 monomials.
pub fn quadrics(m2: &IntegerMatrix) -> Vec<Vec<BigInt>> {
    kernel_lattice(&m2.transpose()).basis
}

/// μ: V ⊗ (I_can)_2 → (I_can)_3; trigonal or quintic iff the image misses
/// g−3 dimensions. The rows of μ are taken in Sym^3 coordinates, which has
/// the same rank modulo every prime as the matrix in a saturated basis of
/// (I_can)_3.
pub fn mu_map_analysis(basis: &CuspBasis) -> Result<TrigonalVerdict, PetriError> {
    let m2 = require_non_hyperelliptic(basis)?;
    let g = basis.genus;
    let bad = bad_primes(&basis.group);
    let i2 = quadrics(&m2);
    assert_eq!(i2.len(), ideal_dimension(g, 2), "dimension law in degree 2");
    let m3 = build_canonical_matrix(basis, 3)?;
    let i3_dim = kernel_lattice(&m3.matrix.transpose()).rank();
    assert_eq!(i3_dim, ideal_dimension(g, 3), "dimension law in degree 3");
    let mons2 = monomials(g, 2);
    let idx3 = monomial_index(g, 3);
    let mut rows = Vec::with_capacity(g * i2.len());
    for x in 0..g {
        for q in &i2 {
            let mut row = vec![BigInt::zero(); idx3.len()];
            for (c, mono) in q.iter().zip(&mons2) {
                if c.is_zero() {
                    continue;
                }
                let mut t = vec![x, mono[0], mono[1]];
                t.sort_unstable();
                row[idx3[&t]] += c;
            }
            rows.push(row);
        }
    }
    let mu = IntegerMatrix::from_rows(rows, idx3.len());
    let drop = rank_drop_primes(&mu, &bad);
    let full = i3_dim;
    let reduced = i3_dim - (g - 3);
    let r = drop.generic_rank;
    if r != full && r != reduced {
        return Err(PetriError::Anomaly { p: 0, rank: r });
    }
    let mut primes = BTreeSet::new();
    if r == full {
        for p in drop.primes {
            let rp = rank_mod_prime(&mu, p);
            if rp != reduced {
                return Err(PetriError::Anomaly { p, rank: rp });
            }
            primes.insert(p);
        }
    }
    Ok(TrigonalVerdict {
        char0_trigonal_or_quintic: r == reduced,
        primes,
        generic_rank: r,
    })
}

/// Tangent space at `point` of the scheme cut out by the quadrics: the
/// gradients of a saturated basis of (I_can)_2 evaluated at the point.
pub fn jacobian_analysis(
    basis: &CuspBasis,
    point: &[BigInt],
) -> Result<TrigonalVerdict, PetriError> {
    let m2 = require_non_hyperelliptic(basis)?;
    let g = basis.genus;
    let mons = monomials(g, 2);
    let i2 = quadrics(&m2);
    let mut rows = Vec::with_capacity(i2.len());
    for q in &i2 {
        let mut value = BigInt::zero();
        let mut grad = vec![BigInt::zero(); g];
        for (c, mono) in q.iter().zip(&mons) {
            if c.is_zero() {
                continue;
            }
            let (a, b) = (mono[0], mono[1]);
            value += c * &point[a] * &point[b];
            grad[a] += c * &point[b];
            grad[b] += c * &point[a];
        }
        if !value.is_zero() {
            return Err(PetriError::PointNotOnCurve);
        }
        rows.push(grad);
    }
    let jac = IntegerMatrix::from_rows(rows, g);
    let drop = rank_drop_primes(&jac, &bad_primes(&basis.group));
    let r = drop.generic_rank;
    Ok(TrigonalVerdict {
        char0_trigonal_or_quintic: r < g - 2,
        primes: if r < g - 2 {
            BTreeSet::new()
        } else {
            drop.primes
        },
        generic_rank: r,
    })
}

/// Canonical coordinates of the cusp ∞: the leading coefficients of the
/// echelon basis at q^1.
pub fn cusp_infinity(basis: &CuspBasis) -> Vec<BigInt> {
    basis.forms.iter().map(|f| f[0].clone()).collect()
}

/// Tangent-space test at ∞ without forming J. With ∞ = e_1 no quadric
/// involves x_1^2, and the rank of J equals rank(M') − (2g − 3) where M' is
/// the product matrix of the forms vanishing at ∞. So the trigonal or
/// quintic primes are those where rank M' < 3g − 5.
fn tangent_rank_test(
    basis: &CuspBasis,
    m2: &IntegerMatrix,
    excluded: &BTreeSet<u64>,
) -> (TrigonalVerdict, usize) {
    let g = basis.genus;
    debug_assert!(basis.pivots[0] == 0 && basis.pivots[1..].iter().all(|&p| p > 0));
    let mons = monomials(g, 2);
    let keep: Vec<usize> = (0..mons.len()).filter(|&i| mons[i][0] >= 1).collect();
    let cols: Vec<usize> = (0..m2.cols()).collect();
    let sub = m2.select(&keep, &cols);
    let drop = rank_drop_primes(&sub, excluded);
    let r = drop.generic_rank;
    let target = 3 * g - 5;
    let char0 = r < target;
    (
        TrigonalVerdict {
            char0_trigonal_or_quintic: char0,
            primes: if char0 { BTreeSet::new() } else { drop.primes },
            generic_rank: r,
        },
        r,
    )
}

pub fn jacobian_fast_analysis(basis: &CuspBasis) -> Result<TrigonalVerdict, PetriError> {
    let m2 = require_non_hyperelliptic(basis)?;
    Ok(tangent_rank_test(basis, &m2, &bad_primes(&basis.group)).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MuMap,
    Jacobian,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PetriReport {
    pub level: u64,
    pub delta: String,
    pub genus: usize,
    pub precision: usize,
    pub char0_hyperelliptic: bool,
    pub hyperelliptic_primes: BTreeSet<u64>,
    /// non-hyperelliptic genus 3: a plane quartic, trigonal over the algebraic closure
    pub geometrically_trigonal: bool,
    pub char0_trigonal_or_quintic: Option<bool>,
    pub trigonal_quintic_primes: Option<BTreeSet<u64>>,
    pub method: Option<Method>,
    pub inapplicable_primes: BTreeMap<u64, String>,
    pub ranks: BTreeMap<String, usize>,
    /// Some(S) when only the primes in S were examined; every other good
    /// prime was excluded by the caller.
    pub checked_primes: Option<BTreeSet<u64>>,
}

impl PetriReport {
    /// Gonality ≤ k over the algebraic closure of Q, for k ∈ {2, 3}. At
    /// genus 6 a positive trigonal-or-quintic verdict counts as ≤ 3.
    pub fn char0_at_most(&self, k: usize) -> bool {
        if self.genus <= 2 || self.char0_hyperelliptic {
            return true;
        }
        k >= 3 && (self.genus <= 4 || self.char0_trigonal_or_quintic == Some(true))
    }

    /// Good primes where the gonality drops to ≤ k while it is > k in
    /// characteristic 0.
    pub fn exceptional_primes(&self, k: usize) -> BTreeSet<u64> {
        if self.char0_at_most(k) {
            return BTreeSet::new();
        }
        let mut out = self.hyperelliptic_primes.clone();
        if k >= 3 {
            if let Some(t) = &self.trigonal_quintic_primes {
                out.extend(t.iter().copied());
            }
        }
        out
    }
}

/// Full analysis of a basis. `degree` 2 stops after the hyperelliptic test.
pub fn analyze(basis: &CuspBasis, degree: usize) -> Result<PetriReport, PetriError> {
    let g = basis.genus;
    let mut report = PetriReport {
        level: basis.group.level(),
        delta: basis.group.notation(),
        genus: g,
        precision: basis.precision,
        char0_hyperelliptic: g == 2,
        hyperelliptic_primes: BTreeSet::new(),
        geometrically_trigonal: false,
        char0_trigonal_or_quintic: None,
        trigonal_quintic_primes: None,
        method: None,
        inapplicable_primes: BTreeMap::new(),
        ranks: BTreeMap::new(),
        checked_primes: None,
    };
    if g <= 2 {
        if g <= 1 {
            report.char0_hyperelliptic = false;
        }
        return Ok(report);
    }
    let bad = bad_primes(&basis.group);
    let m2 = build_canonical_matrix(basis, 2)?;
    let h = hyperelliptic_from_matrix(&m2.matrix, g, &bad)?;
    report.ranks.insert("degree2".into(), h.generic_rank);
    report.char0_hyperelliptic = h.char0_hyperelliptic;
    report.hyperelliptic_primes = h.primes.clone();
    if h.char0_hyperelliptic {
        return Ok(report);
    }
    if g == 3 {
        report.geometrically_trigonal = true;
        return Ok(report);
    }
    if degree < 3 {
        return Ok(report);
    }
    for &p in &h.primes {
        report
            .inapplicable_primes
            .insert(p, "hyperelliptic reduction".into());
    }
    let mut excluded = bad.clone();
    excluded.extend(h.primes.iter().copied());
    let verdict = if g <= MU_MAP_GENUS_LIMIT && h.primes.is_empty() {
        report.method = Some(Method::MuMap);
        let v = mu_map_analysis(basis)?;
        report.ranks.insert("mu".into(), v.generic_rank);
        v
    } else {
        report.method = Some(Method::Jacobian);
        let (v, r) = tangent_rank_test(basis, &m2.matrix, &excluded);
        report.ranks.insert("tangent".into(), r);
        v
    };
    report.char0_trigonal_or_quintic = Some(verdict.char0_trigonal_or_quintic);
    report.trigonal_quintic_primes = Some(verdict.primes);
    Ok(report)
}

const CERTIFYING_PRIME: u64 = 2_147_483_647;

/// Gaussian elimination over F_p that stops once `cap` pivots are found.
struct CappedEchelon {
    p: u64,
    cap: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl CappedEchelon {
    fn full(&self) -> bool {
        self.rows.len() >= self.cap
    }

    fn insert(&mut self, mut v: Vec<u64>) {
        let p = self.p;
        for (piv, r) in &self.rows {
            let c = v[*piv];
            if c == 0 {
                continue;
            }
            let f = p - c;
            for j in *piv..v.len() {
                if r[j] != 0 {
                    v[j] = (v[j] + f * r[j]) % p;
                }
            }
        }
        if let Some(piv) = v.iter().position(|&x| x != 0) {
            let inv = pow_mod(v[piv], p - 2, p);
            for x in v.iter_mut().skip(piv) {
                *x = *x * inv % p;
            }
            self.rows.push((piv, v));
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    let pb = BigInt::from(p);
    let r: BigInt = ((x % &pb) + &pb) % &pb;
    r.to_u64().expect("reduced")
}

/// Forms reduced mod p in echelon form sorted by pivot, or None if they
/// span fewer than g dimensions.
fn echelon_mod(rows: &[Vec<BigInt>], p: u64, g: usize) -> Option<Vec<Vec<u64>>> {
    let mut ech = CappedEchelon {
        p,
        cap: g,
        rows: Vec::new(),
    };
    for r in rows {
        if ech.full() {
            break;
        }
        ech.insert(r.iter().map(|x| reduce_mod(x, p)).collect());
    }
    if ech.rows.len() < g {
        return None;
    }
    ech.rows.sort_by_key(|(piv, _)| *piv);
    Some(ech.rows.into_iter().map(|(_, r)| r).collect())
}

/// Rank over F_p (p < 2^31) of the degree-2 product rows selected by
/// `keep`, generated lazily and capped at `cap`.
fn product_rank_mod(
    forms: &[Vec<u64>],
    p: u64,
    cap: usize,
    keep: impl Fn(&[usize]) -> bool,
) -> usize {
    let b = forms.first().map_or(0, |f| f.len());
    let mut ech = CappedEchelon {
        p,
        cap,
        rows: Vec::new(),
    };
    for mono in monomials(forms.len(), 2) {
        if ech.full() {
            break;
        }
        if !keep(&mono) {
            continue;
        }
        let (fa, fb) = (&forms[mono[0]], &forms[mono[1]]);
        let mut acc = vec![0u128; b];
        for i in 1..=b {
            let ai = fa[i - 1];
            if ai == 0 {
                continue;
            }
            for j in 1..=(b - i) {
                acc[i + j - 1] += (ai * fb[j - 1]) as u128;
            }
        }
        ech.insert(acc.into_iter().map(|x| (x % p as u128) as u64).collect());
    }
    ech.rows.len()
}

/// Petri analysis at the listed primes only, for a curve the caller already
/// knows to have gonality > 2 (degree 2) or > 3 (degree 3) at every other
/// good prime. Returns None when the characteristic-0 ranks cannot be
/// certified by a single large prime; use `analyze` then.
pub fn restricted_analysis(
    basis: &CuspBasis,
    degree: usize,
    primes: &BTreeSet<u64>,
) -> Result<Option<PetriReport>, PetriError> {
    restricted_rank_analysis(&basis.group, basis.precision, &basis.forms, degree, primes)
}

/// As `restricted_analysis`, from any integral forms spanning S_2 over Q
/// whose lattice is saturated at every prime in `primes`.
pub fn restricted_rank_analysis(
    group: &LevelGroup,
    precision: usize,
    rows: &[Vec<BigInt>],
    degree: usize,
    primes: &BTreeSet<u64>,
) -> Result<Option<PetriReport>, PetriError> {
    let g = rows.len();
    if g < 4 {
        return Ok(None);
    }
    let needed = sturm_bound(4, group);
    if precision < needed {
        return Err(PetriError::Precision {
            precision,
            needed,
            weight: 4,
        });
    }
    let bad = bad_primes(group);
    let primes: BTreeSet<u64> = primes
        .iter()
        .copied()
        .filter(|p| !bad.contains(p))
        .collect();
    let full = 3 * g - 3;
    let tangent = 3 * g - 5;
    // with ∞ = e_1, the tangent test drops the products involving x_1
    let tangent_rows = |m: &[usize]| m[0] >= 1;
    let forms_at =
        |p: u64| -> Option<Vec<Vec<u64>>> { echelon_mod(rows, p, g).filter(|f| f[0][0] != 0) };
    let Some(generic) = forms_at(CERTIFYING_PRIME) else {
        return Ok(None);
    };
    if product_rank_mod(&generic, CERTIFYING_PRIME, full, |_| true) < full {
        return Ok(None);
    }
    if degree >= 3 && product_rank_mod(&generic, CERTIFYING_PRIME, tangent, tangent_rows) < tangent
    {
        return Ok(None);
    }
    let mut report = PetriReport {
        level: group.level(),
        delta: group.notation(),
        genus: g,
        precision,
        char0_hyperelliptic: false,
        hyperelliptic_primes: BTreeSet::new(),
        geometrically_trigonal: false,
        char0_trigonal_or_quintic: None,
        trigonal_quintic_primes: None,
        method: None,
        inapplicable_primes: BTreeMap::new(),
        ranks: BTreeMap::from([("degree2".to_string(), full)]),
        checked_primes: Some(primes.clone()),
    };
    let mut reduced = BTreeMap::new();
    for &p in &primes {
        // the canonical system has no base points, so some form is a unit at ∞
        let f = forms_at(p).ok_or(PetriError::Anomaly { p, rank: 0 })?;
        let r = product_rank_mod(&f, p, full, |_| true);
        if r < full {
            if r != 2 * g - 1 {
                return Err(PetriError::Anomaly { p, rank: r });
            }
            report.hyperelliptic_primes.insert(p);
            report
                .inapplicable_primes
                .insert(p, "hyperelliptic reduction".into());
        }
        reduced.insert(p, f);
    }
    if degree >= 3 {
        report.method = Some(Method::Jacobian);
        report.ranks.insert("tangent".into(), tangent);
        let mut t = BTreeSet::new();
        for &p in primes.difference(&report.hyperelliptic_primes) {
            if product_rank_mod(&reduced[&p], p, tangent, tangent_rows) < tangent {
                t.insert(p);
            }
        }
        report.char0_trigonal_or_quintic = Some(false);
        report.trigonal_quintic_primes = Some(t);
    }
    Ok(Some(report))
}

/// A smooth plane quintic has genus 6, so other genera are ruled out at
/// once; at genus 6 the trigonal-or-quintic test decides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum QuinticVerdict {
    NotAQuintic,
    Possible { char0: bool, primes: BTreeSet<u64> },
}

pub fn quintic_screen(
    group: &LevelGroup,
    basis: impl FnOnce() -> CuspBasis,
) -> Result<QuinticVerdict, PetriError> {
    if group.genus() != 6 {
        return Ok(QuinticVerdict::NotAQuintic);
    }
    let r = analyze(&basis(), 3)?;
    let char0 = r.char0_trigonal_or_quintic == Some(true);
    let primes = r.trigonal_quintic_primes.unwrap_or_default();
    if !char0 && primes.is_empty() {
        Ok(QuinticVerdict::NotAQuintic)
    } else {
        Ok(QuinticVerdict::Possible { char0, primes })
    }
}

/// Certified generic rank of the degree-m matrix.
pub fn canonical_rank(basis: &CuspBasis, m: usize) -> Result<usize, PetriError> {
    Ok(generic_rank(&build_canonical_matrix(basis, m)?.matrix).rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modsym::{default_precision, s2_basis};

    fn basis(n: u64, gens: Option<&[u64]>) -> CuspBasis {
        let g = match gens {
            Some(gs) => LevelGroup::new(n, gs).unwrap(),
            None => LevelGroup::full(n),
        };
        s2_basis(&g, default_precision(&g, 0)).unwrap()
    }

    #[test]
    fn restricted_agrees_with_full() {
        let primes: BTreeSet<u64> = [2, 3, 5, 7, 73].into_iter().collect();
        let b = basis(73, None);
        let r = restricted_analysis(&b, 3, &primes).unwrap().unwrap();
        assert_eq!(r.trigonal_quintic_primes, Some(BTreeSet::from([2])));
        assert!(r.hyperelliptic_primes.is_empty());
        assert_eq!(r.checked_primes, Some(BTreeSet::from([2, 3, 5, 7])));
        // forms saturated only at the tested primes give the same verdict
        let g = LevelGroup::full(73);
        let rows = crate::modsym::forms_saturated_at(&g, b.precision, &[2, 3, 5, 7]).unwrap();
        let r2 = restricted_rank_analysis(&g, b.precision, &rows, 3, &primes)
            .unwrap()
            .unwrap();
        assert_eq!(r2, r);
        let b = basis(37, Some(&[4]));
        let r = restricted_analysis(&b, 2, &primes).unwrap().unwrap();
        assert_eq!(r.hyperelliptic_primes, BTreeSet::from([2]));
        // genus 4 is always trigonal: no certificate
        assert!(restricted_analysis(&b, 3, &primes).unwrap().is_none());
        assert!(restricted_analysis(&basis(40, None), 2, &primes)
            .unwrap()
            .is_none());
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(4, 2).len(), 10);
        assert_eq!(monomials(5, 3).len(), 35);
        assert_eq!(monomials(3, 2)[..3], [vec![0, 0], vec![0, 1], vec![0, 2]]);
        assert_eq!(ideal_dimension(5, 2), 3);
        assert_eq!(ideal_dimension(5, 3), 15);
    }

    #[test]
    fn matrix_shapes() {
        let b = basis(11, None);
        let m = build_canonical_matrix(&b, 2).unwrap();
        assert_eq!(m.matrix.rows(), 1);
        let b = basis(38, None);
        assert_eq!(build_canonical_matrix(&b, 2).unwrap().matrix.rows(), 10);
        let short = b.truncate(5);
        assert!(matches!(
            build_canonical_matrix(&short, 2),
            Err(PetriError::Precision { .. })
        ));
    }

    #[test]
    fn level_40_is_hyperelliptic() {
        let h = hyperelliptic_analysis(&basis(40, None)).unwrap();
        assert!(h.char0_hyperelliptic);
    }

    #[test]
    fn level_37_subgroup_hyperelliptic_at_two() {
        let h = hyperelliptic_analysis(&basis(37, Some(&[4]))).unwrap();
        assert!(!h.char0_hyperelliptic);
        assert_eq!(h.primes, BTreeSet::from([2]));
    }

    #[test]
    fn level_34_has_no_exceptions() {
        let b = basis(34, None);
        let h = hyperelliptic_analysis(&b).unwrap();
        assert!(!h.char0_hyperelliptic && h.primes.is_empty());
    }

    #[test]
    fn level_73_trigonal_at_two() {
        let b = basis(73, None);
        let mu = mu_map_analysis(&b).unwrap();
        assert!(!mu.char0_trigonal_or_quintic);
        assert_eq!(mu.primes, BTreeSet::from([2]));
        let jac = jacobian_analysis(&b, &cusp_infinity(&b)).unwrap();
        assert_eq!(
            jac,
            TrigonalVerdict {
                generic_rank: jac.generic_rank,
                ..mu.clone()
            }
        );
        let fast = jacobian_fast_analysis(&b).unwrap();
        assert_eq!(fast.primes, mu.primes);
    }

    #[test]
    fn genus_four_always_trigonal() {
        let b = basis(38, None);
        let mu = mu_map_analysis(&b).unwrap();
        assert!(mu.char0_trigonal_or_quintic);
        let fast = jacobian_fast_analysis(&b).unwrap();
        assert!(fast.char0_trigonal_or_quintic);
    }

    #[test]
    fn point_off_curve_is_rejected() {
        let b = basis(73, None);
        let mut pt = vec![BigInt::zero(); b.genus];
        pt[1] = BigInt::from(1);
        pt[2] = BigInt::from(3);
        assert_eq!(jacobian_analysis(&b, &pt), Err(PetriError::PointNotOnCurve));
    }

    #[test]
    fn quintic_gate() {
        let g = LevelGroup::full(23);
        assert_eq!(
            quintic_screen(&g, || unreachable!()).unwrap(),
            QuinticVerdict::NotAQuintic
        );
    }
}
