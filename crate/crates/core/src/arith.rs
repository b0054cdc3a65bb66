//! Elementary integer arithmetic: word-sized modular arithmetic, primality,
//! and factorization of arbitrary-precision integers.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (if s >= m as u128 { s - m as u128 } else { s }) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        (a as u128 + m as u128 - b as u128) as u64
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (g, x, _) = ext_gcd(a as i128 % m as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g >= 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes in increasing order up to `bound` (inclusive).
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Distinct prime divisors of `n`, ascending.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Factorization of a word-sized integer as (prime, exponent) pairs.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor_u64(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor_u64(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Large word-sized primes used as moduli for multi-modular computations,
/// in decreasing order starting just below 2^62.
pub fn crt_primes(count: usize) -> Vec<u64> {
    static CACHE: OnceLock<std::sync::Mutex<Vec<u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("prime cache poisoned");
    let mut candidate = guard.last().copied().unwrap_or((1u64 << 62) + 1);
    while guard.len() < count {
        candidate -= 2;
        if is_prime_u64(candidate) {
            guard.push(candidate);
        }
    }
    guard[..count].to_vec()
}

/// Residue of a big integer modulo a word-sized modulus, in [0, m).
pub fn big_mod_u64(x: &BigInt, m: u64) -> u64 {
    if let Some(v) = x.to_i64() {
        return (v as i128).rem_euclid(m as i128) as u64;
    }
    let r = x.mod_floor(&BigInt::from(m));
    r.to_u64().expect("residue fits")
}

/// Chinese remaindering of residues into the symmetric range.
pub struct CrtAccumulator {
    value: BigInt,
    modulus: BigInt,
}

impl Default for CrtAccumulator {
    fn default() -> Self {
        CrtAccumulator {
            value: BigInt::zero(),
            modulus: BigInt::one(),
        }
    }
}

impl CrtAccumulator {
    pub fn add(&mut self, residue: u64, p: u64) {
        let m_mod_p = big_mod_u64(&self.modulus, p);
        let v_mod_p = big_mod_u64(&self.value, p);
        let inv = inv_mod(m_mod_p, p).expect("coprime moduli");
        let t = mul_mod(sub_mod(residue % p, v_mod_p, p), inv, p);
        self.value += &self.modulus * BigInt::from(t);
        self.modulus *= BigInt::from(p);
    }

    pub fn modulus_bits(&self) -> u64 {
        self.modulus.bits()
    }

    /// Representative in (-M/2, M/2].
    pub fn symmetric(&self) -> BigInt {
        let half = &self.modulus >> 1;
        let v = self.value.mod_floor(&self.modulus);
        if v > half {
            v - &self.modulus
        } else {
            v
        }
    }
}

fn big_pow_mod(base: &BigUint, exp: &BigUint, m: &BigUint) -> BigUint {
    base.modpow(exp, m)
}

/// Strong probable-prime test with fixed bases followed by random-free
/// additional bases; exact for n < 3.3e24 and overwhelmingly reliable above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    let two = BigUint::from(2u32);
    if (n % &two).is_zero() {
        return false;
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let bases: [u64; 20] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    'witness: for a in bases {
        let a = BigUint::from(a);
        let mut x = big_pow_mod(&a, &d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: &BigUint, c: u64) -> Option<BigUint> {
    let one = BigUint::one();
    let c = BigUint::from(c);
    let f = |x: &BigUint| (x * x + &c) % n;
    let mut y = BigUint::from(2u32);
    let mut r: u64 = 1;
    let mut q = BigUint::one();
    let mut g = BigUint::one();
    let mut x = y.clone();
    let mut ys = y.clone();
    let m: u64 = 128;
    let mut iterations: u64 = 0;
    while g == one {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g == one {
            ys = y.clone();
            for _ in 0..m.min(r - k) {
                y = f(&y);
                let diff = if x > y { &x - &y } else { &y - &x };
                q = (q * diff) % n;
            }
            g = q.gcd(n);
            k += m;
        }
        r *= 2;
        iterations += r;
        if iterations > 1 << 26 {
            return None;
        }
    }
    if &g == n {
        loop {
            ys = f(&ys);
            let diff = if x > ys { &x - &ys } else { &ys - &x };
            g = diff.gcd(n);
            if g != one {
                break;
            }
        }
    }
    if &g == n {
        None
    } else {
        Some(g)
    }
}

/// Complete factorization of a positive integer.
///
/// Trial division removes small primes; the remaining cofactor is split with
/// Pollard-Brent until every factor passes the probable-prime test.
pub fn factor_big(n: &BigUint) -> BTreeMap<BigUint, u32> {
    let mut out = BTreeMap::new();
    if n.is_zero() {
        return out;
    }
    let mut rest = n.clone();
    static SMALL: OnceLock<Vec<u64>> = OnceLock::new();
    let small = SMALL.get_or_init(|| primes_up_to(1 << 16));
    for &p in small {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            *out.entry(pb.clone()).or_insert(0) += 1;
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        let mut split = None;
        for c in 1..64 {
            if let Some(d) = pollard_brent(&m, c) {
                split = Some(d);
                break;
            }
        }
        let d = split.expect("pollard-brent failed to split a composite");
        let e = &m / &d;
        stack.push(d);
        stack.push(e);
    }
    out
}

pub fn abs_biguint(x: &BigInt) -> BigUint {
    match x.sign() {
        Sign::Minus => (-x).to_biguint().expect("nonnegative"),
        _ => x.to_biguint().expect("nonnegative"),
    }
}

/// Squarefree part of a nonzero integer, keeping the sign.
pub fn squarefree_part(x: &BigInt) -> BigInt {
    assert!(!x.is_zero(), "squarefree part of zero");
    let mut out = BigInt::one();
    for (p, e) in factor_big(&abs_biguint(x)) {
        if e % 2 == 1 {
            out *= BigInt::from(p);
        }
    }
    if x.sign() == Sign::Minus {
        -out
    } else {
        out
    }
}

/// Serializes big integers as decimal strings.
pub fn serialize_display<T: std::fmt::Display, S: serde::Serializer>(
    x: &T,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}

pub fn serialize_opt_display<T: std::fmt::Display, S: serde::Serializer>(
    x: &Option<T>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}
