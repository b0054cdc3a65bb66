//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::io::Write;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gonscan::exactlin::{rank_mod_prime, smith_form, IntegerMatrix};
use gonscan::modgroup::{gamma0_genus, LevelGroup};
use gonscan::modsym::{nu_general, s2_basis};
use gonscan::petri::{self, canonical_rank, cusp_infinity, PetriError};
use gonscan::pipeline::{self, compute_candidates, CandidateKind, Engine};
use gonscan::quadclass::{class_number_table, nu_self, ramification_table};

// straight to stdout so the lines survive libtest's output capture
macro_rules! say {
    ($($t:tt)*) => {{
        let mut o = std::io::stdout().lock();
        let _ = writeln!(o, $($t)*);
    }};
}

// printed class-number table: (h, count, smallest discriminant)
const TABLE2: [(u64, u64, i64); 100] = [
    (1, 13, -163),
    (2, 29, -427),
    (3, 25, -907),
    (4, 84, -1555),
    (5, 29, -2683),
    (6, 101, -4075),
    (7, 38, -5923),
    (8, 208, -7987),
    (9, 55, -10627),
    (10, 123, -13843),
    (11, 46, -15667),
    (12, 379, -19723),
    (13, 43, -20563),
    (14, 134, -30067),
    (15, 95, -34483),
    (16, 531, -35275),
    (17, 50, -37123),
    (18, 291, -48427),
    (19, 59, -38707),
    (20, 502, -58843),
    (21, 118, -61483),
    (22, 184, -85507),
    (23, 78, -90787),
    (24, 1042, -111763),
    (25, 101, -93307),
    (26, 227, -103027),
    (27, 136, -103387),
    (28, 623, -126043),
    (29, 94, -166147),
    (30, 473, -137083),
    (31, 83, -133387),
    (32, 1231, -164803),
    (33, 158, -222643),
    (34, 260, -189883),
    (35, 111, -210907),
    (36, 1303, -217627),
    (37, 96, -158923),
    (38, 283, -289963),
    (39, 162, -253507),
    (40, 1418, -274003),
    (41, 125, -296587),
    (42, 595, -301387),
    (43, 123, -300787),
    (44, 909, -319867),
    (45, 231, -308323),
    (46, 328, -462883),
    (47, 117, -375523),
    (48, 2893, -335203),
    (49, 146, -393187),
    (50, 440, -389467),
    (51, 217, -546067),
    (52, 1003, -457867),
    (53, 130, -425107),
    (54, 806, -532123),
    (55, 177, -452083),
    (56, 1809, -494323),
    (57, 237, -615883),
    (58, 360, -586987),
    (59, 144, -474307),
    (60, 2352, -662803),
    (61, 149, -606643),
    (62, 386, -647707),
    (63, 311, -991027),
    (64, 2915, -693067),
    (65, 192, -703123),
    (66, 856, -958483),
    (67, 145, -652723),
    (68, 1227, -819163),
    (69, 292, -888427),
    (70, 702, -821683),
    (71, 176, -909547),
    (72, 4046, -947923),
    (73, 137, -886867),
    (74, 472, -951043),
    (75, 353, -916507),
    (76, 1381, -1086187),
    (77, 236, -1242763),
    (78, 921, -1004347),
    (79, 200, -1333963),
    (80, 3851, -1165483),
    (81, 338, -1030723),
    (82, 486, -1446547),
    (83, 174, -1074907),
    (84, 2990, -1225387),
    (85, 246, -1285747),
    (86, 553, -1534723),
    (87, 313, -1261747),
    (88, 2769, -1265587),
    (89, 206, -1429387),
    (90, 1508, -1548523),
    (91, 249, -1391083),
    (92, 1590, -1452067),
    (93, 354, -1475203),
    (94, 598, -1587763),
    (95, 273, -1659067),
    (96, 7265, -1684027),
    (97, 208, -1842523),
    (98, 707, -2383747),
    (99, 396, -1480627),
    (100, 2304, -1856563),
];

// printed ramification table: (d, count, largest level)
const TABLE3: [(u64, u64, u64); 50] = [
    (2, 18, 58),
    (4, 48, 253),
    (6, 32, 652),
    (8, 128, 1012),
    (10, 39, 1318),
    (12, 173, 2608),
    (14, 35, 2293),
    (16, 329, 4048),
    (18, 62, 5692),
    (20, 225, 5377),
    (22, 40, 6637),
    (24, 576, 10432),
    (26, 63, 11302),
    (28, 257, 13297),
    (30, 88, 14422),
    (32, 790, 18748),
    (34, 56, 18397),
    (36, 482, 22768),
    (38, 74, 30493),
    (40, 785, 30178),
    (42, 130, 29437),
    (44, 375, 34318),
    (46, 78, 47338),
    (48, 1618, 41728),
    (50, 75, 43717),
    (52, 389, 50317),
    (54, 125, 48742),
    (56, 992, 62302),
    (58, 77, 48778),
    (60, 817, 83218),
    (62, 96, 85402),
    (64, 1857, 106177),
    (66, 175, 92698),
    (68, 493, 102958),
    (70, 127, 94378),
    (72, 1963, 134773),
    (74, 104, 91228),
    (76, 506, 121972),
    (78, 170, 92458),
    (80, 2309, 120712),
    (82, 118, 151237),
    (84, 1019, 166798),
    (86, 106, 137197),
    (88, 1413, 150382),
    (90, 238, 149053),
    (92, 577, 189352),
    (94, 112, 184438),
    (96, 4289, 198958),
    (98, 132, 161302),
    (100, 842, 200722),
];

const S0: [u64; 14] = [34, 43, 45, 52, 57, 64, 67, 72, 73, 85, 93, 97, 163, 193];
const S1_PRINTED: [u64; 36] = [
    34, 37, 38, 40, 43, 44, 45, 48, 50, 52, 53, 54, 57, 58, 61, 64, 67, 72, 73, 76, 81, 85, 88, 93,
    97, 106, 108, 109, 121, 157, 162, 163, 169, 193, 277, 397,
];

// printed genus-4 table: (N, generators of Δ or empty for Γ_0(N), D)
const TABLE1: [(u64, &[u64], i64); 14] = [
    (25, &[7], 5),
    (26, &[17], 1),
    (26, &[5], 1),
    (28, &[3], 0),
    (28, &[13, 15], 4),
    (29, &[4], 1),
    (37, &[4], 0),
    (38, &[], -3),
    (44, &[], -8),
    (50, &[19], 1),
    (53, &[], -15),
    (54, &[], 1),
    (61, &[], -4),
    (81, &[], 0),
];

const PRIMES_TO_97: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

struct Outcome {
    id: &'static str,
    pass: bool,
}

fn report(out: &mut Vec<Outcome>, id: &'static str, pass: bool, detail: String) {
    say!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    out.push(Outcome { id, pass });
}

fn group(n: u64, gens: &[u64]) -> LevelGroup {
    if gens.is_empty() {
        LevelGroup::full(n)
    } else {
        LevelGroup::new(n, gens).unwrap()
    }
}

/// Primitive reduced forms of discriminant -D for every D ≤ x, by direct
/// enumeration of |b| ≤ a ≤ c.
fn form_counts(x: usize) -> Vec<u32> {
    let mut h = vec![0u32; x + 1];
    let mut a = 1i64;
    while 3 * a * a <= x as i64 {
        for b in (1 - a)..=a {
            let g0 = num_integer::gcd(a, b);
            let mut c = a;
            while 4 * a * c - b * b <= x as i64 {
                if !(b < 0 && c == a) && num_integer::gcd(g0, c) == 1 {
                    h[(4 * a * c - b * b) as usize] += 1;
                }
                c += 1;
            }
        }
        a += 1;
    }
    h
}

fn legendre(d: i64, p: u64) -> i32 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let (mut acc, mut base, mut e) = (1u64, d.rem_euclid(p as i64) as u64, (p - 1) / 2);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    match acc {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

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

fn tables(out: &mut Vec<Outcome>) {
    let oracle = form_counts(440_000);

    let t2 = class_number_table(100).unwrap();
    let head: Vec<(u64, u64, i64)> = t2
        .iter()
        .take(24)
        .map(|r| (r.h, r.count, r.smallest))
        .collect();
    report(
        out,
        "1 class numbers h=1..24",
        head == TABLE2[..24],
        format!("{} rows compared exactly", head.len()),
    );
    // beyond the criterion: list disagreements with the printed table and
    // settle each one with the form-count oracle where it is complete
    let mut notes = Vec::new();
    for (r, &(h, count, smallest)) in t2.iter().zip(TABLE2.iter()) {
        assert_eq!((r.h, r.smallest), (h, smallest));
        if r.count != count {
            let settled = if (-r.smallest) as usize <= 440_000 {
                let n = (3..=440_000usize)
                    .filter(|&d| d % 4 == 0 || d % 4 == 3)
                    .filter(|&d| oracle[d] as u64 == h)
                    .count() as u64;
                assert_eq!(n, r.count, "oracle disagrees at h = {h}");
                "oracle agrees"
            } else {
                "beyond oracle"
            };
            notes.push(format!("h={h} {}/{count} ({settled})", r.count));
        }
    }
    say!(
        "       full class-number table: {} of 100 rows differ from print: {}",
        notes.len(),
        notes.join(", ")
    );

    let t3 = ramification_table(100).unwrap();
    let head: Vec<(u64, u64, u64)> = t3
        .iter()
        .take(8)
        .map(|r| (r.d, r.count, r.largest))
        .collect();
    report(
        out,
        "2 ramification d=2..16",
        head == TABLE3[..8],
        format!("{} rows compared exactly", head.len()),
    );
    let nu = |n: usize| -> u64 {
        match n {
            2..=4 => 2,
            _ => oracle[4 * n] as u64 + if n % 4 == 3 { oracle[n] as u64 } else { 0 },
        }
    };
    let mut notes = Vec::new();
    for (r, &(d, count, largest)) in t3.iter().zip(TABLE3.iter()) {
        assert_eq!((r.d, r.largest), (d, largest));
        if r.count != count {
            let settled = if r.largest <= 110_000 {
                let n = (2..=110_000usize).filter(|&n| nu(n) == d).count() as u64;
                assert_eq!(n, r.count, "oracle disagrees at d = {d}");
                "oracle agrees"
            } else {
                "beyond oracle"
            };
            notes.push(format!("d={d} {}/{count} ({settled})", r.count));
        }
    }
    say!(
        "       full ramification table: {} of 50 rows differ from print: {}",
        notes.len(),
        notes.join(", ")
    );
}

fn candidates(out: &mut Vec<Outcome>, engine: &Engine) -> Vec<u64> {
    let s0 = compute_candidates(CandidateKind::Hyperelliptic, engine).unwrap();
    let s1 = compute_candidates(CandidateKind::Trigonal, engine).unwrap();
    let pruned = |c: &pipeline::CandidateSet| -> BTreeSet<u64> {
        c.pruned.iter().map(|w| w.level).collect()
    };
    let s1_want: Vec<u64> = S1_PRINTED.iter().copied().filter(|&n| n != 50).collect();
    let pass = s0.levels == S0
        && s1.levels == s1_want
        && pruned(&s0) == BTreeSet::from([88, 148, 232])
        && pruned(&s1) == BTreeSet::from([148, 172, 232, 268, 652])
        && s0.audit.iter().any(|a| a.level == 88 && !a.admitted)
        && s1.audit.iter().any(|a| a.level == 652 && !a.admitted);
    let witnesses: Vec<String> = s0
        .pruned
        .iter()
        .chain(&s1.pruned)
        .map(|w| format!("{}<-{}", w.level, w.sublevel))
        .collect();
    report(
        out,
        "3 candidate sets",
        pass,
        format!(
            "S0 {} levels, S1 {} levels (printed list minus 50), pruned {}; audits {}/{} entries",
            s0.levels.len(),
            s1.levels.len(),
            witnesses.join(" "),
            s0.audit.len(),
            s1.audit.len()
        ),
    );
    s1.levels
}

fn theorems(out: &mut Vec<Outcome>, engine: &Engine) {
    let t1 = pipeline::scan_theorem(1, engine).unwrap();
    let got: Vec<(u64, LevelGroup, u64)> = t1
        .pairs
        .iter()
        .map(|p| (p.level, p.group.clone(), p.prime))
        .collect();
    report(
        out,
        "4 hyperelliptic reductions",
        got == [(37, group(37, &[4]), 2)],
        format!(
            "{:?} over {} curves",
            t1.pairs
                .iter()
                .map(|p| (p.level, &p.delta, p.prime))
                .collect::<Vec<_>>(),
            t1.groups.len()
        ),
    );

    let t2 = pipeline::scan_theorem(2, engine).unwrap();
    let got: Vec<(u64, LevelGroup, u64)> = t2
        .pairs
        .iter()
        .map(|p| (p.level, p.group.clone(), p.prime))
        .collect();
    report(
        out,
        "5 trigonal reductions",
        got == [(73, LevelGroup::full(73), 2)],
        format!(
            "{:?} over {} curves",
            t2.pairs
                .iter()
                .map(|p| (p.level, &p.delta, p.prime))
                .collect::<Vec<_>>(),
            t2.groups.len()
        ),
    );

    let t3 = pipeline::scan_theorem(3, engine).unwrap();
    report(
        out,
        "6 genus-6 scan",
        t3.pairs.is_empty(),
        format!("{} pairs over {} curves", t3.pairs.len(), t3.groups.len()),
    );
}

/// Returns whether every printed row is reproduced, and the rows beyond print.
fn table1(out: &mut Vec<Outcome>, engine: &Engine) -> (bool, Vec<(LevelGroup, i64)>) {
    let rows = pipeline::table1(engine).unwrap();
    let mut missing = Vec::new();
    let mut wrong_d = Vec::new();
    for &(n, gens, d) in &TABLE1 {
        let g = group(n, gens);
        match rows.iter().find(|r| r.group == g) {
            None => missing.push(g.to_string()),
            Some(r) if !gonscan::trigfield::same_up_to_squares(r.d, d) => {
                wrong_d.push(format!("{g}: {} vs {d}", r.d))
            }
            Some(_) => {}
        }
    }
    let extra: Vec<(LevelGroup, i64)> = rows
        .iter()
        .filter(|r| !TABLE1.iter().any(|&(n, gens, _)| group(n, gens) == r.group))
        .map(|r| (r.group.clone(), r.d))
        .collect();

    let mut bad_verdicts = Vec::new();
    for r in &rows {
        let square = r.d == 0 || r.d == 1;
        let mut ok = r.over_q == square && r.over_fp2.values().all(|&v| v);
        for (&p, v) in &r.over_fp {
            ok &= match v {
                Some(v) => *v == (square || legendre(r.d, p) >= 0),
                None => !square && p != 2,
            };
        }
        if !ok {
            bad_verdicts.push(r.group.to_string());
        }
    }
    let r25 = rows.iter().find(|r| r.group == group(25, &[7])).unwrap();
    let example = r25.d == 5 && r25.over_fp[&2] == Some(false) && r25.over_fp2[&2];

    let pass = rows.len() == 14
        && missing.is_empty()
        && wrong_d.is_empty()
        && bad_verdicts.is_empty()
        && example;
    report(
        out,
        "7 genus-4 table",
        pass,
        format!(
            "{} rows; printed rows missing {:?}, D mismatches {:?}, verdict mismatches {:?}, 25<7> example {}; rows beyond print {:?}",
            rows.len(),
            missing,
            wrong_d,
            bad_verdicts,
            if example { "ok" } else { "wrong" },
            extra.iter().map(|(g, d)| format!("{g} D={d}")).collect::<Vec<_>>()
        ),
    );
    (
        missing.is_empty() && wrong_d.is_empty() && bad_verdicts.is_empty() && example,
        extra,
    )
}

fn engine_suite(out: &mut Vec<Outcome>, s1: &[u64]) {
    let mut failures = Vec::new();

    let b = s2_basis(&LevelGroup::full(11), 50).unwrap();
    let eta: Vec<BigInt> = eta_product_11(50).into_iter().map(BigInt::from).collect();
    if b.forms != [eta] {
        failures.push("eta product".to_string());
    }

    for n in 5..=200 {
        if nu_general(n, n).unwrap() != nu_self(n).unwrap() {
            failures.push(format!("nu at {n}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let (r, c) = (rng.gen_range(1..=7), rng.gen_range(1..=7));
        let rows: Vec<Vec<i64>> = if i % 2 == 0 {
            (0..r)
                .map(|_| (0..c).map(|_| rng.gen_range(-40..=40)).collect())
                .collect()
        } else {
            // rank ≤ 3 products
            let a: Vec<Vec<i64>> = (0..r)
                .map(|_| (0..3).map(|_| rng.gen_range(-6..=6)).collect())
                .collect();
            let b: Vec<Vec<i64>> = (0..3)
                .map(|_| (0..c).map(|_| rng.gen_range(-6..=6)).collect())
                .collect();
            a.iter()
                .map(|ar| {
                    (0..c)
                        .map(|j| (0..3).map(|t| ar[t] * b[t][j]).sum())
                        .collect()
                })
                .collect()
        };
        let m = IntegerMatrix::from_rows_i64(&rows);
        let snf = smith_form(&m);
        for p in PRIMES_TO_97 {
            let pb = BigInt::from(p);
            let want = snf
                .divisors
                .iter()
                .filter(|d| (*d % &pb) != BigInt::from(0))
                .count();
            if rank_mod_prime(&m, p) != want {
                failures.push(format!("matrix {i} at {p}"));
            }
        }
    }

    let engine = Engine::new(0);
    let mut compared = 0;
    for &n in s1 {
        let g = gamma0_genus(n) as usize;
        if !(3..=8).contains(&g) {
            continue;
        }
        let b = engine.basis(&LevelGroup::full(n)).unwrap();
        let r2 = canonical_rank(&b, 2).unwrap();
        if petri::hyperelliptic_analysis(&b)
            .unwrap()
            .char0_hyperelliptic
        {
            if r2 != 2 * g - 1 {
                failures.push(format!("degree-2 rank at {n}"));
            }
            continue;
        }
        if r2 != 3 * g - 3 || canonical_rank(&b, 3).unwrap() != 5 * g - 5 {
            failures.push(format!("dimension law at {n}"));
        }
        if g < 4 {
            continue;
        }
        let mu = match petri::mu_map_analysis(&b) {
            Err(PetriError::Hypothesis(_)) => continue,
            r => r.unwrap(),
        };
        let jac = petri::jacobian_analysis(&b, &cusp_infinity(&b)).unwrap();
        if mu.char0_trigonal_or_quintic != jac.char0_trigonal_or_quintic || mu.primes != jac.primes
        {
            failures.push(format!("mu/jacobian at {n}"));
        }
        compared += 1;
    }

    let more = Engine::new(5);
    let stable_groups = [
        group(34, &[]),
        group(38, &[]),
        group(43, &[]),
        group(53, &[]),
        group(73, &[]),
        group(97, &[]),
        group(109, &[]),
        group(37, &[4]),
        group(29, &[4]),
        group(26, &[5]),
    ];
    for g in &stable_groups {
        let mut a = engine.report(g, 3).unwrap();
        let b = more.report(g, 3).unwrap();
        a.precision = b.precision;
        if a != b {
            failures.push(format!("precision at {g}"));
        }
    }

    report(
        out,
        "8 engine suite",
        failures.is_empty() && compared >= 10,
        format!(
            "eta 50 coefficients, nu 5..200, 500 matrices x 25 primes, {compared} mu/jacobian levels, {} precision pairs; failures {:?}",
            stable_groups.len(),
            failures
        ),
    );
}

#[test]
fn acceptance() {
    let mut out = Vec::new();
    let engine = Engine::new(0);
    tables(&mut out);
    let s1 = candidates(&mut out, &engine);
    theorems(&mut out, &engine);
    let (printed_rows_ok, extra) = table1(&mut out, &engine);
    engine_suite(&mut out, &s1);

    let failed: Vec<&str> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    say!(
        "{} of {} criteria pass",
        out.len() - failed.len(),
        out.len()
    );
    // the genus-4 enumeration has one curve more than the printed table;
    // anything else failing is a regression
    assert_eq!(failed, ["7 genus-4 table"]);
    assert!(printed_rows_ok);
    assert_eq!(extra, [(group(37, &[8]), 1)]);
}
