//! Imaginary quadratic discriminants, class numbers by reduced-form counting,
//! and the derived tables of class numbers and ramification counts.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{factor_u64, gcd_u64, pow_mod};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("{0} is not a negative discriminant")]
    InvalidDiscriminant(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("conductor must be positive")]
    ZeroConductor,
    #[error("level {0} is at most 4")]
    LevelTooSmall(u64),
    #[error("class number {0} is beyond the supported range 1..={1}")]
    OutOfRange(u64, u64),
}

/// A negative discriminant D = D0 f^2 with D0 fundamental.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Discriminant {
    pub value: i64,
    pub fundamental_part: i64,
    pub conductor: u64,
}

impl Discriminant {
    pub fn new(value: i64) -> Result<Self, QuadError> {
        if value >= 0 || !matches!(value.rem_euclid(4), 0 | 1) {
            return Err(QuadError::InvalidDiscriminant(value));
        }
        let n = value.unsigned_abs();
        // largest f with n / f^2 still a discriminant
        let mut f = 1u64;
        for (p, e) in factor_u64(n) {
            f *= p.pow(e / 2);
        }
        let mut d0 = value / (f * f) as i64;
        if !matches!(d0.rem_euclid(4), 0 | 1) {
            // an odd square part was pulled out of 4m with m = 2,3 mod 4
            f /= 2;
            d0 = value / (f * f) as i64;
        }
        Ok(Discriminant {
            value,
            fundamental_part: d0,
            conductor: f,
        })
    }

    pub fn is_fundamental(&self) -> bool {
        self.conductor == 1
    }
}

pub fn is_fundamental(d: i64) -> bool {
    Discriminant::new(d).is_ok_and(|x| x.is_fundamental())
}

/// Kronecker symbol (D / p) for a prime p.
pub fn kronecker_symbol(d: i64, p: u64) -> i32 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let r = d.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Class number h(D) of the order of discriminant D, by counting reduced
/// primitive forms.
pub fn class_number(d: Discriminant) -> u64 {
    let n = d.value.unsigned_abs();
    let mut h = 0;
    let mut a = 1u64;
    while 3 * a * a <= n {
        let mut b = -(a as i64) + 1;
        while b <= a as i64 {
            let b2 = (b * b) as u64;
            if (b2 + n).is_multiple_of(4 * a) {
                let c = (b2 + n) / (4 * a);
                let ok = c >= a && !(c == a && b < 0);
                if ok && gcd_u64(gcd_u64(a, b.unsigned_abs()), c) == 1 {
                    h += 1;
                }
            }
            b += 1;
        }
        a += 1;
    }
    h
}

/// Class number of the order of conductor f in the field of fundamental
/// discriminant d0, from h(d0).
pub fn class_number_by_formula(d0: i64, f: u64) -> Result<u64, QuadError> {
    if !is_fundamental(d0) {
        return Err(QuadError::NotFundamental(d0));
    }
    if f == 0 {
        return Err(QuadError::ZeroConductor);
    }
    let h0 = class_number(Discriminant::new(d0)?);
    if f == 1 {
        return Ok(h0);
    }
    let unit = match d0 {
        -3 => 3,
        -4 => 2,
        _ => 1,
    };
    let mut num = (h0 * f) as i128;
    let mut den = unit as i128;
    for (p, _) in factor_u64(f) {
        num *= p as i128 - kronecker_symbol(d0, p) as i128;
        den *= p as i128;
    }
    debug_assert_eq!(num % den, 0);
    Ok((num / den) as u64)
}

/// Class numbers of every negative discriminant with |D| <= bound, from one
/// shared sweep over reduced forms.
#[derive(Clone, Debug)]
pub struct ClassNumbers {
    bound: u64,
    h: Vec<u32>,
}

impl ClassNumbers {
    pub fn sweep(bound: u64) -> Self {
        let size = bound as usize + 1;
        let amax = ((bound / 3) as f64).sqrt() as u64 + 1;
        // all reduced forms, primitive or not, indexed by |D|
        let mut total = (1..=amax)
            .into_par_iter()
            .fold(
                || vec![0u32; size],
                |mut acc, a| {
                    let step = 4 * a;
                    for b in -(a as i64) + 1..=a as i64 {
                        let c0 = if b >= 0 { a } else { a + 1 };
                        let b2 = (b * b) as u64;
                        let mut n = 4 * a * c0 - b2;
                        while n <= bound {
                            acc[n as usize] += 1;
                            n += step;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u32; size],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(s, t)| *s += t);
                    x
                },
            );
        // strip imprimitive forms: f * (primitive form of |D|/f^2)
        for m in 1..size {
            let hm = total[m];
            if hm == 0 {
                continue;
            }
            let mut f = 2usize;
            while m * f * f < size {
                total[m * f * f] -= hm;
                f += 1;
            }
        }
        ClassNumbers { bound, h: total }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// h(D) for -bound <= D < 0; None when out of range or not a discriminant.
    pub fn get(&self, d: i64) -> Option<u64> {
        if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
            return None;
        }
        self.h.get(d.unsigned_abs() as usize).map(|&x| x as u64)
    }

    fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.h
            .iter()
            .enumerate()
            .filter(|(n, _)| *n > 0 && matches!(n % 4, 0 | 3))
            .map(|(n, &h)| (-(n as i64), h as u64))
    }
}

/// Largest |D| with class number exactly h, for h = 1..=100 (index h - 1).
/// This is Watkins' classification; it only bounds the sweep, every table
/// entry is recomputed.
const LARGEST_ABS_DISC: [u64; 100] = [
    163, 427, 907, 1555, 2683, 4075, 5923, 7987, 10627, 13843, 15667, 19723, 20563, 30067, 34483,
    35275, 37123, 48427, 38707, 58843, 61483, 85507, 90787, 111763, 93307, 103027, 103387, 126043,
    166147, 137083, 133387, 164803, 222643, 189883, 210907, 217627, 158923, 289963, 253507, 274003,
    296587, 301387, 300787, 319867, 308323, 462883, 375523, 335203, 393187, 389467, 546067, 457867,
    425107, 532123, 452083, 494323, 615883, 586987, 474307, 662803, 606643, 647707, 991027, 693067,
    703123, 958483, 652723, 819163, 888427, 821683, 909547, 947923, 886867, 951043, 916507,
    1086187, 1242763, 1004347, 1333963, 1165483, 1030723, 1446547, 1074907, 1225387, 1285747,
    1534723, 1261747, 1265587, 1429387, 1548523, 1391083, 1452067, 1475203, 1587763, 1659067,
    1684027, 1842523, 2383747, 1480627, 1856563,
];

pub const MAX_TABLE_BOUND: u64 = 100;

/// Sweep bound covering every discriminant of class number <= max_h.
pub fn class_number_search_bound(max_h: u64) -> Result<u64, QuadError> {
    if max_h == 0 || max_h > MAX_TABLE_BOUND {
        return Err(QuadError::OutOfRange(max_h, MAX_TABLE_BOUND));
    }
    Ok(LARGEST_ABS_DISC[..max_h as usize]
        .iter()
        .copied()
        .max()
        .expect("nonempty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassNumberRow {
    pub h: u64,
    pub count: u64,
    pub smallest: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RamificationRow {
    pub d: u64,
    pub count: u64,
    pub largest: u64,
}

pub fn class_number_table(max_h: u64) -> Result<Vec<ClassNumberRow>, QuadError> {
    let cn = ClassNumbers::sweep(class_number_search_bound(max_h)?);
    Ok(class_number_rows(&cn, max_h))
}

fn class_number_rows(cn: &ClassNumbers, max_h: u64) -> Vec<ClassNumberRow> {
    let mut rows: Vec<ClassNumberRow> = (1..=max_h)
        .map(|h| ClassNumberRow {
            h,
            count: 0,
            smallest: 0,
        })
        .collect();
    for (d, h) in cn.iter() {
        if h == 0 || h > max_h {
            continue;
        }
        let row = &mut rows[h as usize - 1];
        row.count += 1;
        row.smallest = row.smallest.min(d);
    }
    rows.retain(|r| r.count > 0);
    rows
}

/// Number of fixed points of the Fricke involution on X_0(N), N > 4.
pub fn nu_self(n: u64) -> Result<u64, QuadError> {
    if n <= 4 {
        return Err(QuadError::LevelTooSmall(n));
    }
    let h4 = class_number(Discriminant::new(-4 * n as i64)?);
    Ok(if n % 4 == 3 {
        h4 + class_number(Discriminant::new(-(n as i64))?)
    } else {
        h4
    })
}

/// nu_self from a precomputed sweep (which must cover 4N).
pub fn nu_self_from(cn: &ClassNumbers, n: u64) -> Option<u64> {
    if n <= 4 {
        return None;
    }
    let h4 = cn.get(-4 * n as i64)?;
    if n % 4 == 3 {
        Some(h4 + cn.get(-(n as i64))?)
    } else {
        Some(h4)
    }
}

/// Levels N >= 2 whose Fricke involution has at most `max_nu` fixed points,
/// with their counts. Complete: nu <= max_nu forces h(-4N) <= max_nu.
pub fn levels_with_small_nu(max_nu: u64) -> Result<Vec<(u64, u64)>, QuadError> {
    let bound = class_number_search_bound(max_nu)?;
    let cn = ClassNumbers::sweep(bound);
    Ok(small_nu_levels(&cn, max_nu))
}

fn small_nu_levels(cn: &ClassNumbers, max_nu: u64) -> Vec<(u64, u64)> {
    (2..=cn.bound() / 4)
        .filter_map(|n| {
            let v = fricke_fixed_points(cn, n).expect("within sweep");
            (v <= max_nu).then_some((n, v))
        })
        .collect()
}

/// Fixed points of w_N on X_0(N) for every N >= 2. Below 5 the curve and
/// its quotient both have genus 0, so the involution has two fixed points.
fn fricke_fixed_points(cn: &ClassNumbers, n: u64) -> Option<u64> {
    match n {
        0 | 1 => None,
        2..=4 => Some(2),
        _ => nu_self_from(cn, n),
    }
}

pub fn ramification_table(max_d: u64) -> Result<Vec<RamificationRow>, QuadError> {
    let levels = levels_with_small_nu(max_d)?;
    let mut rows: Vec<RamificationRow> = (1..=max_d / 2)
        .map(|k| RamificationRow {
            d: 2 * k,
            count: 0,
            largest: 0,
        })
        .collect();
    for (n, v) in levels {
        assert!(v % 2 == 0, "odd ramification count {v} at level {n}");
        if v == 0 {
            continue;
        }
        let row = &mut rows[v as usize / 2 - 1];
        row.count += 1;
        row.largest = row.largest.max(n);
    }
    rows.retain(|r| r.count > 0);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(d: i64) -> u64 {
        class_number(Discriminant::new(d).unwrap())
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(-4, 3), -1);
        assert_eq!(kronecker_symbol(-12, 3), 0);
        assert_eq!(kronecker_symbol(-15, 2), 1);
        assert_eq!(kronecker_symbol(-3, 2), -1);
        assert_eq!(kronecker_symbol(-4, 2), 0);
    }

    #[test]
    fn class_number_examples() {
        assert_eq!(h(-163), 1);
        assert_eq!(h(-427), 2);
        assert_eq!(h(-12), 1);
        for d in [-3, -4, -7, -8, -11] {
            assert_eq!(h(d), 1);
        }
        assert_eq!(h(-44), 3);
    }

    #[test]
    fn formula_examples() {
        assert_eq!(class_number_by_formula(-3, 2).unwrap(), 1);
        assert_eq!(class_number_by_formula(-4, 1).unwrap(), 1);
        assert_eq!(class_number_by_formula(-163, 1).unwrap(), 1);
        assert!(matches!(
            class_number_by_formula(-12, 1),
            Err(QuadError::NotFundamental(-12))
        ));
    }

    #[test]
    fn discriminant_decomposition() {
        let d = Discriminant::new(-12).unwrap();
        assert_eq!((d.fundamental_part, d.conductor), (-3, 2));
        let d = Discriminant::new(-72).unwrap();
        assert_eq!((d.fundamental_part, d.conductor), (-8, 3));
        let d = Discriminant::new(-16).unwrap();
        assert_eq!((d.fundamental_part, d.conductor), (-4, 2));
        let d = Discriminant::new(-300).unwrap();
        assert_eq!((d.fundamental_part, d.conductor), (-3, 10));
        assert!(Discriminant::new(-5).is_err());
        assert!(Discriminant::new(4).is_err());
    }

    #[test]
    fn nu_self_examples() {
        assert_eq!(nu_self(58).unwrap(), 2);
        assert_eq!(nu_self(652).unwrap(), 6);
        assert_eq!(nu_self(11).unwrap(), 4);
        assert!(nu_self(4).is_err());
    }

    #[test]
    fn sweep_agrees_with_direct_count() {
        let cn = ClassNumbers::sweep(3000);
        for n in 3..=3000i64 {
            if matches!(n % 4, 0 | 3) {
                assert_eq!(cn.get(-n), Some(h(-n)), "D = -{n}");
            }
        }
    }

    #[test]
    fn small_tables() {
        let t = class_number_table(2).unwrap();
        assert_eq!(
            t,
            vec![
                ClassNumberRow {
                    h: 1,
                    count: 13,
                    smallest: -163
                },
                ClassNumberRow {
                    h: 2,
                    count: 29,
                    smallest: -427
                },
            ]
        );
        let r = ramification_table(2).unwrap();
        assert_eq!(
            r,
            vec![RamificationRow {
                d: 2,
                count: 18,
                largest: 58
            }]
        );
    }
}
