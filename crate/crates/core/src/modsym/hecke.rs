//! Heilbronn matrices for Hecke operators on Manin symbols.

use std::sync::{Arc, Mutex, OnceLock};

/// Merel's set: [[a, b], [c, d]] with ad - bc = n, a > b >= 0, d > c >= 0.
pub fn heilbronn_merel(n: u64) -> Vec<[i64; 4]> {
    let n = n as i64;
    let mut out = Vec::new();
    for a in 1..=n {
        // ad >= n and a + d <= n + 1
        let dmin = (n + a - 1) / a;
        for d in dmin.max(1)..=(n + 1 - a) {
            let m = a * d - n;
            if m == 0 {
                for c in 0..d {
                    out.push([a, 0, c, d]);
                }
                for b in 1..a {
                    out.push([a, b, 0, d]);
                }
                continue;
            }
            // b c = m with b < a and c < d, so b > m / d
            for b in (m / d + 1)..a {
                if m % b == 0 {
                    let c = m / b;
                    if c < d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

fn cache() -> &'static Mutex<Vec<Option<Arc<Vec<[i64; 4]>>>>> {
    static CACHE: OnceLock<Mutex<Vec<Option<Arc<Vec<[i64; 4]>>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Cached Heilbronn set for n.
pub fn heilbronn(n: u64) -> Arc<Vec<[i64; 4]>> {
    {
        let guard = cache().lock().expect("heilbronn cache");
        if let Some(Some(h)) = guard.get(n as usize) {
            return h.clone();
        }
    }
    let h = Arc::new(heilbronn_merel(n));
    let mut guard = cache().lock().expect("heilbronn cache");
    if guard.len() <= n as usize {
        guard.resize(n as usize + 1, None);
    }
    guard[n as usize] = Some(h.clone());
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: i64) -> Vec<[i64; 4]> {
        let mut out = Vec::new();
        for a in 1..=n {
            for b in 0..a {
                for d in 1..=n {
                    for c in 0..d {
                        if a * d - b * c == n {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn merel_set_matches_brute_force() {
        for n in 1..=25 {
            let mut h = heilbronn_merel(n as u64);
            h.sort();
            assert_eq!(h, brute(n), "n = {n}");
        }
    }

    #[test]
    fn cached_equals_fresh() {
        assert_eq!(*heilbronn(7), heilbronn_merel(7));
        assert_eq!(heilbronn(1).len(), 1);
    }
}
