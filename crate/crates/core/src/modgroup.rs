//! The groups Γ_Δ(N): closures of Δ, indices, Atkin-Lehner divisors, coset
//! tables and genus bookkeeping.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arith::{divisors, euler_phi, gcd_u64, inv_mod, prime_divisors};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("level must be positive")]
    ZeroLevel,
    #[error("generator {gen} is not coprime to the level {level}")]
    NotCoprime { gen: u64, level: u64 },
    #[error("cannot parse subgroup notation {0:?}")]
    BadNotation(String),
    #[error("2g + 2 - nu = {0} is not a non-negative multiple of 4")]
    Congruence(i64),
    #[error("{d} is not an Atkin-Lehner divisor of {level}")]
    NotAtkinLehner { d: u64, level: u64 },
}

/// The subgroup Δ of (Z/NZ)^x/<-1> determining X_Δ(N).
///
/// `closure` holds the full preimage in (Z/NZ)^x, so it always contains
/// both 1 and N - 1. Equality and hashing only look at the level and closure.
#[derive(Clone, Debug)]
pub struct LevelGroup {
    level: u64,
    generators: Vec<u64>,
    closure: Vec<u64>,
    index_in_full: u64,
}

impl PartialEq for LevelGroup {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level && self.closure == other.closure
    }
}

impl Eq for LevelGroup {}

impl std::hash::Hash for LevelGroup {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.level.hash(state);
        self.closure.hash(state);
    }
}

impl PartialOrd for LevelGroup {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LevelGroup {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (
            self.level,
            std::cmp::Reverse(self.closure.len()),
            &self.closure,
        )
            .cmp(&(
                other.level,
                std::cmp::Reverse(other.closure.len()),
                &other.closure,
            ))
    }
}

fn units(n: u64) -> Vec<u64> {
    if n == 1 {
        return vec![0];
    }
    (1..n).filter(|&a| gcd_u64(a, n) == 1).collect()
}

fn close(n: u64, seed: &[u64]) -> Vec<u64> {
    let one = 1 % n;
    let mut set: BTreeSet<u64> = BTreeSet::from([one, (n - 1) % n]);
    let mut frontier: Vec<u64> = set.iter().copied().collect();
    let gens: Vec<u64> = seed.iter().map(|g| g % n).collect();
    while let Some(x) = frontier.pop() {
        for &g in &gens {
            let y = ((x as u128 * g as u128) % n as u128) as u64;
            if set.insert(y) {
                frontier.push(y);
            }
        }
    }
    set.into_iter().collect()
}

/// Greedy canonical generators: smallest residues that enlarge the group.
fn canonical_generators(n: u64, closure: &[u64]) -> Vec<u64> {
    let mut gens = Vec::new();
    let mut current = close(n, &[]);
    for &x in closure {
        if current.binary_search(&x).is_err() {
            gens.push(x);
            current = close(n, &gens);
        }
    }
    gens
}

impl LevelGroup {
    pub fn new(level: u64, gens: &[u64]) -> Result<Self, GroupError> {
        if level == 0 {
            return Err(GroupError::ZeroLevel);
        }
        for &g in gens {
            if gcd_u64(g % level, level) != 1 {
                return Err(GroupError::NotCoprime { gen: g, level });
            }
        }
        let closure = close(level, gens);
        let index_in_full = euler_phi(level) / closure.len() as u64;
        Ok(LevelGroup {
            level,
            generators: gens.iter().map(|g| g % level).collect(),
            closure,
            index_in_full,
        })
    }

    /// Γ_0(N): Δ is everything.
    pub fn full(level: u64) -> Self {
        Self::new(level, &units(level)).expect("units are coprime")
    }

    /// Γ_1(N): Δ is trivial.
    pub fn trivial(level: u64) -> Self {
        Self::new(level, &[]).expect("positive level")
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    /// Preimage of Δ in (Z/NZ)^x, sorted.
    pub fn closure(&self) -> &[u64] {
        &self.closure
    }

    pub fn contains(&self, u: u64) -> bool {
        self.closure.binary_search(&(u % self.level)).is_ok()
    }

    /// Whether W_d (d ‖ N) normalizes Γ_Δ. Conjugation by W_d acts on
    /// diamonds by x ↦ x^{-1} on the d-part and trivially on the N/d-part.
    pub fn normalized_by_atkin_lehner(&self, d: u64) -> bool {
        let n = self.level;
        if !is_atkin_lehner_divisor(n, d) {
            return false;
        }
        if n <= 2 {
            return true;
        }
        let m = n / d;
        let e = (m * inv_mod(m % d, d).unwrap_or(0)) % n;
        self.closure.iter().all(|&x| {
            let xi = inv_mod(x, n).expect("unit");
            self.contains((xi * e + x * ((1 + n - e) % n)) % n)
        })
    }

    /// Order of Δ inside (Z/NZ)^x/<-1>.
    pub fn order(&self) -> u64 {
        if self.level <= 2 {
            self.closure.len() as u64
        } else {
            self.closure.len() as u64 / 2
        }
    }

    pub fn index_in_full(&self) -> u64 {
        self.index_in_full
    }

    pub fn is_full(&self) -> bool {
        self.index_in_full == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.closure.len() <= 2
    }

    /// Index of ±Γ_Δ(N) in PSL_2(Z).
    pub fn psl2_index(&self) -> u64 {
        gamma0_index(self.level) * self.index_in_full
    }

    /// Canonical textual form: "full", "trivial", or greedy generators.
    pub fn notation(&self) -> String {
        if self.is_full() {
            "full".into()
        } else if self.is_trivial() {
            "trivial".into()
        } else {
            canonical_generators(self.level, &self.closure)
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    /// Parses "full", "trivial" or "g1,g2,...".
    pub fn parse(level: u64, text: &str) -> Result<Self, GroupError> {
        let t = text.trim();
        match t {
            "full" => Ok(Self::full(level)),
            "trivial" => Self::new(level, &[]),
            _ => {
                let t = t.trim_start_matches('<').trim_end_matches('>');
                let gens = t
                    .split(',')
                    .map(|s| s.trim().parse::<u64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| GroupError::BadNotation(text.to_string()))?;
                Self::new(level, &gens)
            }
        }
    }

    /// Whether Δ contains `other` (same level).
    pub fn contains_group(&self, other: &LevelGroup) -> bool {
        self.level == other.level && other.closure.iter().all(|&u| self.contains(u))
    }

    /// Every Δ of this level, largest first.
    pub fn all_at_level(level: u64) -> Vec<LevelGroup> {
        let us = units(level);
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let base = close(level, &[]);
        seen.insert(base.clone());
        let mut frontier = vec![base];
        while let Some(h) = frontier.pop() {
            for &u in &us {
                if h.binary_search(&u).is_ok() {
                    continue;
                }
                let mut seed = canonical_generators(level, &h);
                seed.push(u);
                let c = close(level, &seed);
                if seen.insert(c.clone()) {
                    frontier.push(c);
                }
            }
        }
        let mut groups: Vec<LevelGroup> = seen
            .into_iter()
            .map(|c| {
                let gens = canonical_generators(level, &c);
                LevelGroup::new(level, &gens).expect("units")
            })
            .collect();
        groups.sort();
        groups
    }

    /// Coset data of ±Γ_Δ(N) in PSL_2(Z).
    pub fn cosets(&self) -> CosetTable {
        CosetTable::new(self)
    }

    /// Genus from the coset action (index, elliptic points, cusps).
    pub fn genus(&self) -> u64 {
        self.cosets().genus()
    }
}

impl fmt::Display for LevelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.notation().as_str() {
            "full" => write!(f, "X0({})", self.level),
            "trivial" => write!(f, "X1({})", self.level),
            g => write!(f, "X({},<{}>)", self.level, g),
        }
    }
}

impl Serialize for LevelGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LevelGroup", 2)?;
        st.serialize_field("level", &self.level)?;
        st.serialize_field("delta", &self.notation())?;
        st.end()
    }
}

/// [PSL_2(Z) : Γ_0(N)] = N prod (1 + 1/p).
pub fn gamma0_index(n: u64) -> u64 {
    let mut m = n;
    for p in prime_divisors(n) {
        m = m / p * (p + 1);
    }
    m
}

/// Divisors d > 1 of N with gcd(d, N/d) = 1, ascending.
pub fn atkin_lehner_divisors(n: u64) -> Vec<u64> {
    if n <= 1 {
        return Vec::new();
    }
    divisors(n)
        .into_iter()
        .filter(|&d| d > 1 && gcd_u64(d, n / d) == 1)
        .collect()
}

pub fn is_atkin_lehner_divisor(n: u64, d: u64) -> bool {
    d > 1 && n.is_multiple_of(d) && gcd_u64(d, n / d) == 1
}

/// Genus of X_0(N)/w from the genus of X_0(N) and the fixed-point count.
pub fn quotient_genus_from_nu(g: u64, nu: u64) -> Result<u64, GroupError> {
    let t = 2 * g as i64 + 2 - nu as i64;
    if t < 0 || t % 4 != 0 {
        return Err(GroupError::Congruence(t));
    }
    Ok(t as u64 / 4)
}

/// Classical genus of X_0(N) from index, elliptic points and cusps.
pub fn gamma0_genus(n: u64) -> u64 {
    let mu = gamma0_index(n) as i64;
    let kron = |d: i64, p: u64| -> i64 {
        // (d / p) for odd p, d in {-1, -3}
        let r = d.rem_euclid(p as i64) as u64;
        if r == 0 {
            0
        } else if crate::arith::pow_mod(r, (p - 1) / 2, p) == 1 {
            1
        } else {
            -1
        }
    };
    let primes = prime_divisors(n);
    let e2: i64 = if n.is_multiple_of(4) {
        0
    } else {
        primes
            .iter()
            .map(|&p| if p == 2 { 1 } else { 1 + kron(-1, p) })
            .product()
    };
    let e3: i64 = if n.is_multiple_of(9) {
        0
    } else {
        primes
            .iter()
            .map(|&p| {
                if p == 3 {
                    1
                } else if p == 2 {
                    0
                } else {
                    1 + kron(-3, p)
                }
            })
            .product()
    };
    let cusps: i64 = divisors(n)
        .into_iter()
        .map(|d| euler_phi(gcd_u64(d, n / d)) as i64)
        .sum();
    let twelve_g = 12 + mu - 3 * e2 - 4 * e3 - 6 * cusps;
    debug_assert!(twelve_g >= 0 && twelve_g % 12 == 0);
    (twelve_g / 12) as u64
}

/// Cosets of ±Γ_Δ(N) in PSL_2(Z), as classes of bottom rows (c, d) mod N
/// with gcd(c, d, N) = 1 under (c, d) ~ (uc, ud) for u in the closure of Δ.
#[derive(Clone, Debug)]
pub struct CosetTable {
    pub level: u64,
    /// class index for each (c, d), stored at c * N + d; u32::MAX if invalid
    pub index: Vec<u32>,
    /// one representative per class
    pub reps: Vec<(u32, u32)>,
}

impl CosetTable {
    pub fn new(g: &LevelGroup) -> Self {
        let n = g.level;
        let nn = (n * n) as usize;
        let mut index = vec![u32::MAX; nn];
        let mut reps = Vec::new();
        if n == 1 {
            return CosetTable {
                level: 1,
                index: vec![0],
                reps: vec![(0, 0)],
            };
        }
        for c in 0..n {
            let gc = gcd_u64(c, n);
            for d in 0..n {
                let key = (c * n + d) as usize;
                if index[key] != u32::MAX || gcd_u64(gc, d) != 1 {
                    continue;
                }
                let id = reps.len() as u32;
                reps.push((c as u32, d as u32));
                for &u in g.closure() {
                    let (uc, ud) = (u * c % n, u * d % n);
                    index[(uc * n + ud) as usize] = id;
                }
            }
        }
        CosetTable {
            level: n,
            index,
            reps,
        }
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn class_of(&self, c: i64, d: i64) -> Option<usize> {
        let n = self.level as i64;
        let (c, d) = (c.rem_euclid(n), d.rem_euclid(n));
        match self.index[(c * n + d) as usize] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    fn act(&self, i: usize, m: [i64; 4]) -> usize {
        // row vector (c, d) times [[a, b], [e, f]]
        let (c, d) = self.reps[i];
        let (c, d) = (c as i64, d as i64);
        self.class_of(c * m[0] + d * m[2], c * m[1] + d * m[3])
            .expect("SL2 action preserves primitivity")
    }

    fn fixed_points(&self, m: [i64; 4]) -> usize {
        (0..self.len()).filter(|&i| self.act(i, m) == i).count()
    }

    /// Number of cusps: orbits of (c, d) -> (c, c + d).
    pub fn cusp_count(&self) -> usize {
        let t = [1, 1, 0, 1];
        let mut seen = vec![false; self.len()];
        let mut orbits = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            orbits += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.act(i, t);
            }
        }
        orbits
    }

    pub fn elliptic2(&self) -> usize {
        self.fixed_points([0, -1, 1, 0])
    }

    pub fn elliptic3(&self) -> usize {
        self.fixed_points([0, -1, 1, 1])
    }

    pub fn genus(&self) -> u64 {
        let mu = self.len() as i64;
        let twelve_g = 12 + mu
            - 3 * self.elliptic2() as i64
            - 4 * self.elliptic3() as i64
            - 6 * self.cusp_count() as i64;
        debug_assert!(twelve_g >= 0 && twelve_g % 12 == 0, "12g = {twelve_g}");
        (twelve_g / 12) as u64
    }
}
