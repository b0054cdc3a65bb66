//! Fields of definition of trigonal maps on genus-4 curves through the
//! discriminant of the unique quadric containing the canonical model.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{gcd_u64, squarefree_part};
use crate::exactlin::{determinant, IntegerMatrix};
use crate::modgroup::{gamma0_genus, LevelGroup};
use crate::modsym::CuspBasis;
use crate::petri::{
    build_canonical_matrix, hyperelliptic_analysis, monomials, quadrics, PetriError,
};
use crate::quadclass::kronecker_symbol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrigError {
    #[error("genus {0} is not 4")]
    Genus(usize),
    #[error("the quadric space has dimension {0}, expected 1")]
    QuadricCount(usize),
    #[error("prime {p} is outside the hypothesis: the order is not maximal there")]
    OutsideHypothesis { p: u64 },
    #[error("prime {p} divides the level {level}")]
    BadPrime { p: u64, level: u64 },
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// The quadric as a symmetric matrix with doubled off-diagonal convention:
/// gram[a][a] = 2 c_aa and gram[a][b] = c_ab, so Q(x) = x^T gram x / 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadricForm {
    pub gram: Vec<Vec<BigInt>>,
}

impl QuadricForm {
    pub fn from_coefficients(g: usize, coeffs: &[BigInt]) -> Self {
        let mut gram = vec![vec![BigInt::zero(); g]; g];
        for (c, mono) in coeffs.iter().zip(monomials(g, 2)) {
            let (a, b) = (mono[0], mono[1]);
            if a == b {
                gram[a][a] = c * 2;
            } else {
                gram[a][b] = c.clone();
                gram[b][a] = c.clone();
            }
        }
        QuadricForm { gram }
    }

    pub fn determinant(&self) -> BigInt {
        let n = self.gram.len();
        determinant(&IntegerMatrix::from_rows(self.gram.clone(), n))
    }

    /// Value at an integral point.
    pub fn evaluate(&self, x: &[BigInt]) -> BigInt {
        let n = self.gram.len();
        let mut s = BigInt::zero();
        for a in 0..n {
            for b in 0..n {
                s += &self.gram[a][b] * &x[a] * &x[b];
            }
        }
        s / 2
    }
}

pub fn extract_quadric(basis: &CuspBasis) -> Result<QuadricForm, TrigError> {
    if basis.genus != 4 {
        return Err(TrigError::Genus(basis.genus));
    }
    let m2 = build_canonical_matrix(basis, 2)?;
    let q = quadrics(&m2.matrix);
    if q.len() != 1 {
        return Err(TrigError::QuadricCount(q.len()));
    }
    Ok(QuadricForm::from_coefficients(4, &q[0]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrigonalFieldReport {
    pub level: u64,
    pub delta: String,
    #[serde(serialize_with = "crate::arith::serialize_display")]
    pub gram_determinant: BigInt,
    /// 0, 1, or a fundamental discriminant
    pub d: i64,
    /// odd part of the index of the order of discriminant `gram_determinant`
    /// in the maximal order, None when D is 0 or 1
    #[serde(serialize_with = "crate::arith::serialize_opt_display")]
    pub conductor: Option<BigInt>,
}

impl TrigonalFieldReport {
    pub fn is_square(&self) -> bool {
        self.d == 0 || self.d == 1
    }
}

/// Normalized discriminant: 0, 1, m or 4m for the squarefree part m.
pub fn normalize_discriminant(det: &BigInt) -> (i64, Option<BigInt>) {
    if det.is_zero() {
        return (0, None);
    }
    let m = squarefree_part(det);
    let s2 = det / &m;
    let s = s2.sqrt();
    debug_assert_eq!(&s * &s, s2);
    let m = m.to_i64().expect("squarefree part fits");
    if m == 1 {
        return (1, None);
    }
    let d = if m.rem_euclid(4) == 1 { m } else { 4 * m };
    let mut f = s;
    while f.is_even() && !f.is_zero() {
        f /= 2;
    }
    (d, Some(f))
}

pub fn discriminant_of_quadric(group: &LevelGroup, q: &QuadricForm) -> TrigonalFieldReport {
    let det = q.determinant();
    let (d, conductor) = normalize_discriminant(&det);
    TrigonalFieldReport {
        level: group.level(),
        delta: group.notation(),
        gram_determinant: det,
        d,
        conductor,
    }
}

/// Trigonality over Q (p = 0) or over F_{p^n}.
pub fn trigonal_over(report: &TrigonalFieldReport, p: u64, n: u32) -> Result<bool, TrigError> {
    if n == 0 {
        return Err(TrigError::ZeroDegree);
    }
    if p != 0 && gcd_u64(p, report.level) != 1 {
        return Err(TrigError::BadPrime {
            p,
            level: report.level,
        });
    }
    if report.is_square() {
        return Ok(true);
    }
    if p == 0 {
        return Ok(false);
    }
    if n.is_multiple_of(2) {
        return Ok(true);
    }
    if p != 2 {
        let f = report
            .conductor
            .as_ref()
            .expect("non-square D has a conductor");
        if (f % p).is_zero() {
            return Err(TrigError::OutsideHypothesis { p });
        }
    }
    Ok(kronecker_symbol(report.d, p) >= 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Genus4Row {
    pub level: u64,
    #[serde(skip)]
    pub group: LevelGroup,
    pub delta: String,
    pub d: i64,
    #[serde(serialize_with = "crate::arith::serialize_display")]
    pub gram_determinant: BigInt,
}

/// Largest level whose X_0(N) can have genus ≤ g, from the lower bound
/// g(X_0(N)) ≥ (N − 5√N − 8)/12.
pub fn level_bound_for_genus(g: u64) -> u64 {
    let mut n = 1u64;
    let mut last = 1;
    while n < 100_000 {
        let lower = (n as f64 - 5.0 * (n as f64).sqrt() - 8.0) / 12.0;
        if lower <= g as f64 {
            last = n;
        }
        n += 1;
    }
    last
}

/// Every genus-4 group X_Δ(N) that is non-hyperelliptic in characteristic
/// 0, with its discriminant. The basis source is supplied by the caller.
pub fn genus4_table<F>(mut basis_for: F) -> Result<Vec<Genus4Row>, TrigError>
where
    F: FnMut(&LevelGroup) -> CuspBasis,
{
    let mut rows = Vec::new();
    for n in 1..=level_bound_for_genus(4) {
        if gamma0_genus(n) > 4 {
            continue;
        }
        let mut groups: Vec<LevelGroup> = LevelGroup::all_at_level(n)
            .into_iter()
            .filter(|g| g.genus() == 4)
            .collect();
        groups.sort_by_key(|g| g.closure().to_vec());
        for group in groups {
            let basis = basis_for(&group);
            if hyperelliptic_analysis(&basis)?.char0_hyperelliptic {
                continue;
            }
            let q = extract_quadric(&basis)?;
            let rep = discriminant_of_quadric(&group, &q);
            rows.push(Genus4Row {
                level: n,
                delta: group.notation(),
                group,
                d: rep.d,
                gram_determinant: rep.gram_determinant,
            });
        }
    }
    Ok(rows)
}

/// Equality of discriminants up to square factors, with 0 exact.
pub fn same_up_to_squares(a: i64, b: i64) -> bool {
    if a == 0 || b == 0 {
        return a == b;
    }
    squarefree_part(&BigInt::from(a)) == squarefree_part(&BigInt::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modsym::{default_precision, s2_basis};

    fn report(n: u64, gens: Option<&[u64]>) -> TrigonalFieldReport {
        let g = match gens {
            Some(gs) => LevelGroup::new(n, gs).unwrap(),
            None => LevelGroup::full(n),
        };
        let b = s2_basis(&g, default_precision(&g, 0)).unwrap();
        let q = extract_quadric(&b).unwrap();
        // the cusp at infinity lies on the quadric
        let inf: Vec<BigInt> = b.forms.iter().map(|f| f[0].clone()).collect();
        assert!(q.evaluate(&inf).is_zero());
        discriminant_of_quadric(&g, &q)
    }

    fn fake(d: i64, level: u64) -> TrigonalFieldReport {
        TrigonalFieldReport {
            level,
            delta: "full".into(),
            gram_determinant: BigInt::from(d),
            d,
            conductor: Some(BigInt::from(1)),
        }
    }

    #[test]
    fn table_examples() {
        assert_eq!(report(38, None).d, -3);
        assert_eq!(report(44, None).d, -8);
        assert_eq!(report(53, None).d, -15);
        assert_eq!(report(61, None).d, -4);
        assert_eq!(report(81, None).d, 0);
        assert_eq!(report(37, Some(&[4])).d, 0);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_discriminant(&BigInt::from(0)).0, 0);
        assert_eq!(normalize_discriminant(&BigInt::from(36)).0, 1);
        assert_eq!(normalize_discriminant(&BigInt::from(-27)).0, -3);
        assert_eq!(normalize_discriminant(&BigInt::from(-18)).0, -8);
        assert_eq!(normalize_discriminant(&BigInt::from(-4 * 9)).0, -4);
        let (_, f) = normalize_discriminant(&BigInt::from(-3 * 25));
        assert_eq!(f, Some(BigInt::from(5)));
    }

    #[test]
    fn field_rules() {
        assert!(!trigonal_over(&fake(5, 25), 2, 1).unwrap());
        assert!(trigonal_over(&fake(5, 25), 2, 2).unwrap());
        assert!(trigonal_over(&fake(-15, 53), 2, 1).unwrap());
        assert!(!trigonal_over(&fake(-15, 53), 0, 1).unwrap());
        let mut sq = fake(1, 54);
        sq.conductor = None;
        assert!(trigonal_over(&sq, 0, 1).unwrap());
        assert!(trigonal_over(&sq, 5, 3).unwrap());
        let mut nonmax = fake(-3, 38);
        nonmax.conductor = Some(BigInt::from(5));
        assert_eq!(
            trigonal_over(&nonmax, 5, 1),
            Err(TrigError::OutsideHypothesis { p: 5 })
        );
        assert!(trigonal_over(&nonmax, 5, 2).unwrap());
        assert!(matches!(
            trigonal_over(&fake(-3, 38), 19, 1),
            Err(TrigError::BadPrime { .. })
        ));
    }

    #[test]
    fn squares_comparison() {
        assert!(same_up_to_squares(1, 4));
        assert!(same_up_to_squares(-3, -27));
        assert!(!same_up_to_squares(0, 1));
        assert!(!same_up_to_squares(5, -5));
    }

    #[test]
    fn level_bound() {
        assert_eq!(level_bound_for_genus(4), 107);
    }
}
