//! Manin-symbol presentation of weight-2 modular symbols for Γ_Δ(N).
//!
//! Generators are the cosets of ±Γ_Δ(N) in PSL_2(Z), written as bottom rows
//! [c:d]; the symbol [c:d] stands for g{0,∞} with g = [[a,b],[c,d]] in
//! SL_2(Z). Relations: x + xS = 0 and x + xτ + xτ² = 0.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{ext_gcd, gcd_u64, inv_mod};
use crate::exactlin::IntegerMatrix;
use crate::modgroup::{CosetTable, LevelGroup};

pub type SparseVec = Vec<(usize, BigRational)>;

/// The quotient of the free space on Manin symbols by the relations.
#[derive(Clone, Debug)]
pub struct ManinPresentation {
    pub group: LevelGroup,
    pub cosets: CosetTable,
    /// coset indices whose symbols form a basis of the quotient
    pub basis: Vec<usize>,
    /// coordinates of every coset's symbol in `basis`
    pub expr: Vec<SparseVec>,
}

fn add_scaled(
    acc: &mut BTreeMap<usize, BigRational>,
    row: &[(usize, BigRational)],
    f: &BigRational,
) {
    for (c, v) in row {
        let e = acc.entry(*c).or_insert_with(BigRational::zero);
        *e += v * f;
        if e.is_zero() {
            acc.remove(c);
        }
    }
}

impl ManinPresentation {
    pub fn new(group: &LevelGroup) -> Self {
        let cosets = group.cosets();
        let n = cosets.len();
        let s_mat = [0, -1, 1, 0];
        let t_mat = [0, -1, 1, -1];
        let act = |i: usize, m: [i64; 4]| -> usize {
            let (c, d) = cosets.reps[i];
            let (c, d) = (c as i64, d as i64);
            cosets
                .class_of(c * m[0] + d * m[2], c * m[1] + d * m[3])
                .expect("unimodular action")
        };

        // two-term relations: each coset is ±(free generator) or zero
        const ZERO: usize = usize::MAX;
        let mut free_of = vec![(ZERO, 0i8); n];
        let mut free_count = 0;
        let mut assigned = vec![false; n];
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let j = act(i, s_mat);
            assigned[i] = true;
            assigned[j] = true;
            if i == j {
                free_of[i] = (ZERO, 0);
            } else {
                free_of[i] = (free_count, 1);
                free_of[j] = (free_count, -1);
                free_count += 1;
            }
        }

        // three-term relations over the free generators, eliminated sparsely;
        // a pivot row only mentions columns that were not yet pivots when it
        // was added, so reduction in insertion order terminates.
        let mut rows: Vec<SparseVec> = Vec::new();
        let mut pivot_row: HashMap<usize, usize> = HashMap::new();
        let mut pivot_col: Vec<usize> = Vec::new();
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let j = act(i, t_mat);
            let k = act(j, t_mat);
            seen[i] = true;
            seen[j] = true;
            seen[k] = true;
            let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
            let orbit: Vec<usize> = if i == j { vec![i] } else { vec![i, j, k] };
            for &x in &orbit {
                let (f, s) = free_of[x];
                if f == ZERO {
                    continue;
                }
                let e = acc.entry(f).or_insert_with(BigRational::zero);
                *e += BigRational::from_integer(BigInt::from(s));
                if e.is_zero() {
                    acc.remove(&f);
                }
            }
            loop {
                let next = acc
                    .keys()
                    .filter_map(|c| pivot_row.get(c).map(|&r| (r, *c)))
                    .min();
                let Some((r, c)) = next else { break };
                let f = -acc[&c].clone();
                let row = rows[r].clone();
                add_scaled(&mut acc, &row, &f);
            }
            let Some((&pc, pv)) = acc.iter().next_back() else {
                continue;
            };
            let inv = pv.recip();
            let row: SparseVec = acc.iter().map(|(c, v)| (*c, v * &inv)).collect();
            pivot_row.insert(pc, rows.len());
            pivot_col.push(pc);
            rows.push(row);
        }

        // back-substitute in reverse insertion order
        let mut reduced: Vec<SparseVec> = vec![Vec::new(); rows.len()];
        for r in (0..rows.len()).rev() {
            let pc = pivot_col[r];
            let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
            for (c, v) in &rows[r] {
                if *c == pc {
                    continue;
                }
                match pivot_row.get(c) {
                    Some(&later) => add_scaled(&mut acc, &reduced[later], v),
                    None => {
                        let e = acc.entry(*c).or_insert_with(BigRational::zero);
                        *e += v;
                        if e.is_zero() {
                            acc.remove(c);
                        }
                    }
                }
            }
            // pivot = -(rest)
            reduced[r] = acc.into_iter().map(|(c, v)| (c, -v)).collect();
        }

        let mut free_rep = vec![usize::MAX; free_count];
        for i in (0..n).rev() {
            if let (f, 1) = free_of[i] {
                free_rep[f] = i;
            }
        }
        let mut basis_pos = vec![usize::MAX; free_count];
        let mut basis = Vec::new();
        for f in 0..free_count {
            if !pivot_row.contains_key(&f) {
                basis_pos[f] = basis.len();
                basis.push(free_rep[f]);
            }
        }
        let free_expr: Vec<SparseVec> = (0..free_count)
            .map(|f| match pivot_row.get(&f) {
                Some(&r) => {
                    let mut v: SparseVec = reduced[r]
                        .iter()
                        .map(|(c, x)| (basis_pos[*c], x.clone()))
                        .collect();
                    v.sort_by_key(|e| e.0);
                    v
                }
                None => vec![(basis_pos[f], BigRational::one())],
            })
            .collect();
        let expr = (0..n)
            .map(|i| match free_of[i] {
                (ZERO, _) => Vec::new(),
                (f, 1) => free_expr[f].clone(),
                (f, _) => free_expr[f].iter().map(|(c, x)| (*c, -x)).collect(),
            })
            .collect();
        ManinPresentation {
            group: group.clone(),
            cosets,
            basis,
            expr,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn level(&self) -> u64 {
        self.group.level()
    }

    /// Coordinates of the symbol with bottom row (c, d), if it is a valid row.
    pub fn symbol(&self, c: i64, d: i64) -> Option<&SparseVec> {
        self.cosets.class_of(c, d).map(|i| &self.expr[i])
    }

    /// SL_2(Z) lift [[a, b], [c, d]] of the coset representative `i`.
    pub fn lift(&self, i: usize) -> [i64; 4] {
        let (c, d) = self.cosets.reps[i];
        lift_to_sl2(c as i64, d as i64, self.level() as i64)
    }

    /// Cusp classes of Γ_Δ(N) and the boundary matrix of the basis symbols.
    pub fn boundary_matrix(&self) -> (IntegerMatrix, usize) {
        let cusps = CuspClassifier::new(&self.group);
        let mut ids: HashMap<(u64, u64), usize> = HashMap::new();
        let mut entries: Vec<Vec<(usize, i64)>> = Vec::with_capacity(self.dim());
        for &i in &self.basis {
            let [a, b, c, d] = self.lift(i);
            let k1 = cusps.key(a, c);
            let k0 = cusps.key(b, d);
            let n = ids.len();
            let i1 = *ids.entry(k1).or_insert(n);
            let n = ids.len();
            let i0 = *ids.entry(k0).or_insert(n);
            entries.push(vec![(i1, 1), (i0, -1)]);
        }
        let ncusps = ids.len();
        let mut m = IntegerMatrix::zeros(self.dim(), ncusps);
        for (r, row) in entries.iter().enumerate() {
            for &(c, v) in row {
                let cur = m.get(r, c).clone();
                m.set(r, c, cur + v);
            }
        }
        (m, ncusps)
    }

    /// Coordinates of the modular symbol {0, p/q}.
    pub fn zero_to(&self, p: i64, q: i64, acc: &mut BTreeMap<usize, BigRational>, sign: i64) {
        let s = BigRational::from_integer(BigInt::from(sign));
        for (c, d) in continued_fraction_symbols(p, q) {
            let e = self.symbol(c, d).expect("convergent rows are primitive");
            add_scaled(acc, e, &s);
        }
    }

    /// Coordinates of {α, β} for cusps given as (numerator, denominator),
    /// denominator 0 meaning ∞.
    pub fn between(&self, alpha: (i64, i64), beta: (i64, i64)) -> BTreeMap<usize, BigRational> {
        let mut acc = BTreeMap::new();
        self.zero_to(beta.0, beta.1, &mut acc, 1);
        self.zero_to(alpha.0, alpha.1, &mut acc, -1);
        acc
    }
}

/// Bottom rows of the matrices g_j with {0, p/q} = Σ g_j{0, ∞}, from the
/// continued fraction convergents of p/q (q = 0 meaning ∞).
pub fn continued_fraction_symbols(p: i64, q: i64) -> Vec<(i64, i64)> {
    let mut out = vec![(0, 1)];
    if q == 0 {
        return out;
    }
    let (mut p, mut q) = (p, q);
    if q < 0 {
        p = -p;
        q = -q;
    }
    // convergents p_j/q_j, starting from p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0
    let (mut q_prev2, mut q_prev) = (1i64, 0i64);
    let (mut num, mut den) = (p, q);
    let mut j = 0i64;
    while den != 0 {
        let a = num.div_euclid(den);
        let r = num.rem_euclid(den);
        let qj = a * q_prev + q_prev2;
        let sign = if (j - 1).rem_euclid(2) == 0 { 1 } else { -1 };
        out.push((sign * qj, q_prev));
        q_prev2 = q_prev;
        q_prev = qj;
        num = den;
        den = r;
        j += 1;
    }
    out
}

/// Lifts a row (c, d) with gcd(c, d, N) = 1 to a matrix in SL_2(Z).
pub fn lift_to_sl2(c: i64, d: i64, n: i64) -> [i64; 4] {
    let (mut c, mut d) = (c.rem_euclid(n.max(1)), d.rem_euclid(n.max(1)));
    if n == 1 {
        return [1, 0, 0, 1];
    }
    if c == 0 {
        c = n;
    }
    while gcd_u64(c.unsigned_abs(), d.unsigned_abs()) != 1 {
        d += n;
    }
    // a d - b c = 1
    let (g, x, y) = ext_gcd(d as i128, c as i128);
    debug_assert_eq!(g, 1);
    [x as i64, -(y as i64), c, d]
}

/// Canonical keys for cusps of Γ_Δ(N): a/c ~ a'/c' iff c' = u c (mod N) and
/// a' = u^-1 a (mod gcd(c, N)) for some u in the closure of Δ.
pub struct CuspClassifier {
    n: u64,
    units: Vec<(u64, u64)>,
}

impl CuspClassifier {
    pub fn new(g: &LevelGroup) -> Self {
        let n = g.level();
        let units = g
            .closure()
            .iter()
            .map(|&u| {
                (
                    u,
                    if n == 1 {
                        0
                    } else {
                        inv_mod(u, n).expect("unit")
                    },
                )
            })
            .collect();
        CuspClassifier { n, units }
    }

    /// Key of the cusp a/c (c = 0 meaning ∞), gcd(a, c) = 1.
    pub fn key(&self, a: i64, c: i64) -> (u64, u64) {
        let n = self.n as i64;
        let cm = c.rem_euclid(n) as u64;
        let v = gcd_u64(cm, self.n);
        let am = a.rem_euclid(v as i64) as u64;
        self.units
            .iter()
            .map(|&(u, ui)| ((u * cm) % self.n, (ui % v) * am % v))
            .min()
            .expect("closure contains 1")
    }
}

/// Exact content of a sparse rational vector as integers: (numerators, lcm
/// of denominators).
pub fn clear_denominators(v: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints = v.iter().map(|x| (x * &l).to_integer()).collect();
    (ints, l.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cf_symbols_telescope() {
        // {0, 3/7}: the last convergent row must end with q_n = 7
        let rows = continued_fraction_symbols(3, 7);
        assert_eq!(rows[0], (0, 1));
        assert_eq!(rows.last().unwrap().0.abs(), 7);
        assert_eq!(continued_fraction_symbols(1, 0), vec![(0, 1)]);
    }

    #[test]
    fn lifts_are_unimodular() {
        for n in [11i64, 12, 37] {
            for c in 0..n {
                for d in 0..n {
                    if gcd_u64(gcd_u64(c as u64, d as u64), n as u64) != 1 {
                        continue;
                    }
                    let [a, b, c2, d2] = lift_to_sl2(c, d, n);
                    assert_eq!(a * d2 - b * c2, 1);
                    assert_eq!((c2 - c).rem_euclid(n), 0);
                    assert_eq!((d2 - d).rem_euclid(n), 0);
                }
            }
        }
    }

    #[test]
    fn dimension_counts() {
        // dim M_2 symbols = 2g + (#cusps - 1)
        for (n, gens) in [
            (11u64, None),
            (37, Some(vec![4u64])),
            (13, Some(vec![])),
            (38, None),
        ] {
            let g = match gens {
                None => LevelGroup::full(n),
                Some(v) => LevelGroup::new(n, &v).unwrap(),
            };
            let m = ManinPresentation::new(&g);
            let cusps = g.cosets().cusp_count();
            assert_eq!(m.dim(), 2 * g.genus() as usize + cusps - 1, "level {n}");
            let (_, nc) = m.boundary_matrix();
            assert_eq!(nc, cusps);
        }
    }
}
