use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;

use gonscan::exactlin::{rank_mod_prime, smith_form, IntegerMatrix};
use gonscan::modgroup::{gamma0_genus, LevelGroup};
use gonscan::modsym::{default_precision, nu_general, s2_basis};
use gonscan::petri::{self, canonical_rank, cusp_infinity, PetriError};
use gonscan::pipeline::{compute_candidates, low_gonality_levels, CandidateKind, Engine};
use gonscan::quadclass::nu_self;
use gonscan::trigfield::{normalize_discriminant, QuadricForm};

/// q ∏ (1 − q^n)^2 (1 − q^{11n})^2, coefficients of q^1..q^len.
fn eta_product_11(len: usize) -> Vec<i64> {
    let mut p = vec![0i64; len + 1];
    p[0] = 1;
    let mut times = |step: usize| {
        for _ in 0..2 {
            for i in (step..=len).rev() {
                p[i] -= p[i - step];
            }
        }
    };
    for n in 1..=len {
        times(n);
        if 11 * n <= len {
            times(11 * n);
        }
    }
    p[..len].to_vec()
}

#[test]
fn level_eleven_matches_eta_product() {
    let b = s2_basis(&LevelGroup::full(11), 50).unwrap();
    assert_eq!(b.genus, 1);
    let want: Vec<BigInt> = eta_product_11(50).into_iter().map(BigInt::from).collect();
    assert_eq!(b.forms[0], want);
    // a few hand-known values
    assert_eq!(&want[..5], &[1, -2, -1, 2, 1].map(BigInt::from));
}

#[test]
fn nu_agrees_with_class_numbers() {
    let bad: Vec<(u64, u64, u64)> = (5..=200u64)
        .filter_map(|n| {
            let a = nu_general(n, n).unwrap();
            let b = nu_self(n).unwrap();
            (a != b).then_some((n, a, b))
        })
        .collect();
    assert!(bad.is_empty(), "{bad:?}");
}

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        // low-rank products make rank drops common
        (
            prop::collection::vec(prop::collection::vec(-6i64..=6, 3), r),
            prop::collection::vec(prop::collection::vec(-6i64..=6, c), 3),
            prop::bool::ANY,
            prop::collection::vec(prop::collection::vec(-30i64..=30, c), r),
        )
            .prop_map(|(a, b, low, full)| {
                if !low {
                    return full;
                }
                a.iter()
                    .map(|ar| {
                        (0..b[0].len())
                            .map(|j| (0..3).map(|t| ar[t] * b[t][j]).sum())
                            .collect()
                    })
                    .collect()
            })
    })
}

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn smith_form_predicts_modular_rank(rows in matrix_strategy()) {
        let m = IntegerMatrix::from_rows_i64(&rows);
        let snf = smith_form(&m);
        for p in SMALL_PRIMES {
            let pb = BigInt::from(p);
            let predicted = snf.divisors.iter().filter(|d| (*d % &pb) != BigInt::from(0)).count();
            prop_assert_eq!(rank_mod_prime(&m, p), predicted, "p = {}", p);
        }
    }

    #[test]
    fn discriminant_is_unimodular_invariant(
        coeffs in prop::collection::vec(-9i64..=9, 10),
        u in prop::collection::vec(-2i64..=2, 6),
    ) {
        let q = QuadricForm::from_coefficients(4, &coeffs.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>());
        // unit upper triangular change of variables
        let mut t = vec![vec![BigInt::from(0); 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            t[i][i] = BigInt::from(1);
            for j in i + 1..4 {
                t[i][j] = BigInt::from(u[k]);
                k += 1;
            }
        }
        let mut gram = vec![vec![BigInt::from(0); 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut s = BigInt::from(0);
                for i in 0..4 {
                    for j in 0..4 {
                        s += &t[i][a] * &q.gram[i][j] * &t[j][b];
                    }
                }
                gram[a][b] = s;
            }
        }
        let moved = QuadricForm { gram };
        prop_assert_eq!(moved.determinant(), q.determinant());
        prop_assert_eq!(normalize_discriminant(&moved.determinant()), normalize_discriminant(&q.determinant()));
    }
}

#[test]
fn petri_dimension_law_and_method_agreement() {
    let engine = Engine::new(0);
    let s1 = compute_candidates(CandidateKind::Trigonal, &engine).unwrap();
    let mut checked = 0;
    for &n in &s1.levels {
        let g = gamma0_genus(n) as usize;
        if !(3..=8).contains(&g) {
            continue;
        }
        let b = engine.basis(&LevelGroup::full(n)).unwrap();
        let r2 = canonical_rank(&b, 2).unwrap();
        let h = petri::hyperelliptic_analysis(&b).unwrap();
        if h.char0_hyperelliptic {
            assert_eq!(r2, 2 * g - 1, "level {n}");
            continue;
        }
        assert_eq!(r2, 3 * g - 3, "level {n}");
        assert_eq!(canonical_rank(&b, 3).unwrap(), 5 * g - 5, "level {n}");
        if g < 4 {
            continue;
        }
        let mu = match petri::mu_map_analysis(&b) {
            Err(PetriError::Hypothesis(_)) => continue,
            r => r.unwrap(),
        };
        let jac = petri::jacobian_analysis(&b, &cusp_infinity(&b)).unwrap();
        let fast = petri::jacobian_fast_analysis(&b).unwrap();
        assert_eq!(
            mu.char0_trigonal_or_quintic, jac.char0_trigonal_or_quintic,
            "level {n}"
        );
        assert_eq!(mu.primes, jac.primes, "level {n}");
        assert_eq!(mu.primes, fast.primes, "level {n}");
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} levels compared");
}

#[test]
fn precision_is_stable_under_slack() {
    let base = Engine::new(0);
    let more = Engine::new(5);
    let groups = [
        LevelGroup::full(34),
        LevelGroup::full(38),
        LevelGroup::full(43),
        LevelGroup::full(53),
        LevelGroup::full(73),
        LevelGroup::full(97),
        LevelGroup::full(109),
        LevelGroup::new(37, &[4]).unwrap(),
        LevelGroup::new(29, &[4]).unwrap(),
        LevelGroup::new(26, &[5]).unwrap(),
    ];
    for g in groups {
        let mut a = base.report(&g, 3).unwrap();
        let b = more.report(&g, 3).unwrap();
        assert_eq!(b.precision, a.precision + 5);
        a.precision = b.precision;
        assert_eq!(a, b, "{g}");
    }
}

#[test]
fn subhyperelliptic_levels_match_the_printed_baseline() {
    let h = [
        22u64, 23, 26, 28, 29, 30, 31, 33, 35, 37, 39, 40, 41, 46, 47, 48, 50, 59, 71,
    ];
    let mut sh: BTreeSet<u64> = h.into_iter().collect();
    sh.extend(1..=32);
    sh.extend([36, 49]);
    let got: BTreeSet<u64> = low_gonality_levels(2, &Engine::new(0))
        .unwrap()
        .into_iter()
        .collect();
    assert_eq!(got, sh);
}

#[test]
fn default_precision_exceeds_weight_six_sturm() {
    let g = LevelGroup::full(97);
    assert_eq!(
        default_precision(&g, 0),
        gonscan::modsym::sturm_bound(6, &g)
    );
}
