//! Candidate levels, theorem scans over all intermediate curves, and tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::divisors;
use crate::modgroup::{gamma0_genus, gamma0_index, quotient_genus_from_nu, GroupError, LevelGroup};
use crate::modsym::{self, basisfile, default_precision, BasisCache, CuspBasis, ModSymError};
use crate::petri::{self, PetriError, PetriReport, QuinticVerdict};
use crate::quadclass::{self, QuadError};
use crate::trigfield::{self, level_bound_for_genus, TrigError};

/// Gonality over C is at least 7μ/800 for a subgroup of PSL_2(Z) of index μ,
/// so μ > 228 rules out gonality 2 and μ > 342 rules out gonality ≤ 3.
pub const HYPERELLIPTIC_INDEX_CUTOFF: u64 = 228;
pub const TRIGONAL_INDEX_CUTOFF: u64 = 342;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    ModSym(#[from] ModSymError),
    #[error(transparent)]
    Petri(#[from] PetriError),
    #[error(transparent)]
    Trig(#[from] TrigError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("anomaly: {0}")]
    Anomaly(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn is_anomaly(&self) -> bool {
        matches!(
            self,
            PipelineError::Anomaly(_) | PipelineError::Petri(PetriError::Anomaly { .. })
        )
    }
}

/// Castelnuovo-Severi: if X has maps of degrees m and n to curves of genus
/// gY and gZ that do not factor through a common map, g(X) is at most this.
pub fn cs_bound(m: u64, g_y: u64, n: u64, g_z: u64) -> u64 {
    m * g_y + n * g_z + (m - 1) * (n - 1)
}

/// Shared basis source: in-memory memo, optional supplied bases, optional
/// on-disk cache.
pub struct Engine {
    slack: usize,
    cache: Option<BasisCache>,
    basis_dir: Option<PathBuf>,
    memo: Mutex<HashMap<LevelGroup, Arc<CuspBasis>>>,
}

impl Engine {
    pub fn new(slack: usize) -> Self {
        Engine {
            slack,
            cache: None,
            basis_dir: None,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        self.cache = Some(BasisCache::new(dir)?);
        Ok(self)
    }

    pub fn with_basis_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.basis_dir = Some(dir.into());
        self
    }

    pub fn precision(&self, group: &LevelGroup) -> usize {
        default_precision(group, self.slack)
    }

    fn supplied(
        &self,
        group: &LevelGroup,
        precision: usize,
    ) -> Result<Option<CuspBasis>, PipelineError> {
        let Some(dir) = &self.basis_dir else {
            return Ok(None);
        };
        let path = dir.join(basisfile::supplied_name(group));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(PipelineError::Io(format!("{}: {e}", path.display()))),
        };
        let b = modsym::ingest_basis(&text)?;
        if b.group != *group {
            return Err(ModSymError::Malformed(format!(
                "{} holds a different group",
                path.display()
            ))
            .into());
        }
        if b.precision < precision {
            return Err(ModSymError::PrecisionBelowSturm {
                precision: b.precision,
                sturm: precision,
            }
            .into());
        }
        Ok(Some(b.truncate(precision)))
    }

    pub fn basis(&self, group: &LevelGroup) -> Result<Arc<CuspBasis>, PipelineError> {
        if let Some(b) = self.memo.lock().expect("memo").get(group) {
            return Ok(b.clone());
        }
        let precision = self.precision(group);
        let b = match self.supplied(group, precision)? {
            Some(b) => b,
            None => match &self.cache {
                Some(c) => c.get_or_compute(group, precision)?,
                None => modsym::s2_basis(group, precision)?,
            },
        };
        let b = Arc::new(b);
        self.memo
            .lock()
            .expect("memo")
            .insert(group.clone(), b.clone());
        Ok(b)
    }

    /// Petri ranks at the given primes only (see `petri::restricted_analysis`),
    /// from a memoized basis or from forms saturated just at those primes.
    pub fn restricted_report(
        &self,
        group: &LevelGroup,
        degree: usize,
        primes: &BTreeSet<u64>,
    ) -> Result<Option<PetriReport>, PipelineError> {
        if let Some(b) = self.memo.lock().expect("memo").get(group).cloned() {
            return Ok(petri::restricted_analysis(&b, degree, primes)?);
        }
        let precision = modsym::sturm_bound(4, group) + self.slack;
        let ps: Vec<u64> = primes.iter().copied().collect();
        let rows = modsym::forms_saturated_at(group, precision, &ps)?;
        Ok(petri::restricted_rank_analysis(
            group, precision, &rows, degree, primes,
        )?)
    }

    pub fn report(&self, group: &LevelGroup, degree: usize) -> Result<PetriReport, PipelineError> {
        let b = self.basis(group)?;
        Ok(petri::analyze(&b, degree)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    Hyperelliptic,
    Trigonal,
}

impl CandidateKind {
    pub fn gonality(self) -> usize {
        match self {
            CandidateKind::Hyperelliptic => 2,
            CandidateKind::Trigonal => 3,
        }
    }

    fn nu_threshold(self) -> u64 {
        2 * self.gonality() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub level: u64,
    pub admitted: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PruneWitness {
    pub level: u64,
    pub sublevel: u64,
    pub d: u64,
    pub nu: u64,
    pub quotient_genus: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    pub kind: CandidateKind,
    pub scan_bound: u64,
    pub levels: Vec<u64>,
    pub pruned: Vec<PruneWitness>,
    pub audit: Vec<AuditEntry>,
}

/// (d, ν(d;N), genus of X_0(N)/w_d) for every Atkin-Lehner divisor d.
fn involution_data(n: u64) -> Vec<(u64, u64, u64)> {
    let g = gamma0_genus(n);
    modsym::nu_all(n)
        .into_iter()
        .map(|(d, nu)| (d, nu, quotient_genus_from_nu(g, nu).expect("consistent ν")))
        .collect()
}

/// A sublevel n witnesses that X_0(n) has gonality > k in every good
/// characteristic: some w_d has more than 2k fixed points and a quotient of
/// positive genus, so no map of degree ≤ k can exist or factor through w_d.
fn witness(n: u64, data: &[(u64, u64, u64)], threshold: u64) -> Option<(u64, u64, u64)> {
    if gamma0_genus(n) < 2 {
        return None;
    }
    data.iter()
        .find(|&&(_, nu, gq)| nu > threshold && gq >= 1)
        .copied()
}

enum Filter {
    Admit(String),
    Exclude(String),
}

fn filter_level(
    kind: CandidateKind,
    n: u64,
    data: &[(u64, u64, u64)],
    engine: &Engine,
) -> Result<Filter, PipelineError> {
    let g = gamma0_genus(n);
    let t = kind.nu_threshold();
    match kind {
        CandidateKind::Hyperelliptic => {
            if g <= 1 {
                return Ok(Filter::Exclude(format!("genus {g}: subhyperelliptic")));
            }
            if let Some(&(d, nu, gq)) = data.iter().find(|&&(_, nu, gq)| nu > t && gq >= 1) {
                return Ok(Filter::Exclude(format!(
                    "nu({d};{n}) = {nu} > {t} with quotient genus {gq}"
                )));
            }
            if g == 2 {
                return Ok(Filter::Exclude("genus 2: hyperelliptic".into()));
            }
            if gamma0_index(n) > HYPERELLIPTIC_INDEX_CUTOFF {
                return Ok(Filter::Admit(format!(
                    "index {} > {HYPERELLIPTIC_INDEX_CUTOFF}: not hyperelliptic",
                    gamma0_index(n)
                )));
            }
            let r = engine.report(&LevelGroup::full(n), 2)?;
            if r.char0_hyperelliptic {
                Ok(Filter::Exclude("hyperelliptic in characteristic 0".into()))
            } else {
                Ok(Filter::Admit(format!(
                    "not subhyperelliptic; nu(d;{n}) <= {t} for all d"
                )))
            }
        }
        CandidateKind::Trigonal => {
            if let Some(&(d, nu, _)) = data.iter().find(|&&(_, nu, _)| nu > t) {
                return Ok(Filter::Exclude(format!("nu({d};{n}) = {nu} > {t}")));
            }
            if let Some(&(d, _, _)) = data.iter().find(|&&(_, _, gq)| gq == 0) {
                return Ok(Filter::Exclude(format!(
                    "X0({n})/w_{d} has genus 0: gonality <= 2 over Z[1/N]"
                )));
            }
            Ok(Filter::Admit(format!(
                "nu(d;{n}) <= {t} and X0({n})/w_d of positive genus for all d"
            )))
        }
    }
}

pub fn compute_candidates(
    kind: CandidateKind,
    engine: &Engine,
) -> Result<CandidateSet, PipelineError> {
    let t = kind.nu_threshold();
    let small: BTreeMap<u64, u64> = quadclass::levels_with_small_nu(t)?.into_iter().collect();
    let scan_bound = small.keys().copied().max().unwrap_or(1);
    let results: Vec<(u64, Vec<(u64, u64, u64)>, Filter)> = small
        .keys()
        .copied()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let data = involution_data(n);
            let f = filter_level(kind, n, &data, engine)?;
            Ok((n, data, f))
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut data_memo: HashMap<u64, Vec<(u64, u64, u64)>> = HashMap::new();
    let mut audit = Vec::new();
    let mut levels = Vec::new();
    let mut pruned = Vec::new();
    let mut decided: BTreeMap<u64, AuditEntry> = BTreeMap::new();
    for (n, data, f) in results {
        data_memo.insert(n, data);
        match f {
            Filter::Exclude(reason) => {
                decided.insert(
                    n,
                    AuditEntry {
                        level: n,
                        admitted: false,
                        reason,
                    },
                );
            }
            Filter::Admit(reason) => {
                decided.insert(
                    n,
                    AuditEntry {
                        level: n,
                        admitted: true,
                        reason,
                    },
                );
            }
        }
    }
    for (&n, entry) in decided.iter_mut() {
        if !entry.admitted {
            continue;
        }
        for m in divisors(n) {
            if m == 1 || m == n {
                continue;
            }
            let data = data_memo.entry(m).or_insert_with(|| involution_data(m));
            if let Some((d, nu, gq)) = witness(m, data, t) {
                pruned.push(PruneWitness {
                    level: n,
                    sublevel: m,
                    d,
                    nu,
                    quotient_genus: gq,
                });
                entry.admitted = false;
                entry.reason = format!(
                    "pruned: sublevel {m} has nu({d};{m}) = {nu} > {t} with quotient genus {gq}"
                );
                break;
            }
        }
    }
    for n in 1..=scan_bound {
        match decided.remove(&n) {
            Some(e) => {
                if e.admitted {
                    levels.push(n);
                }
                audit.push(e);
            }
            None => audit.push(AuditEntry {
                level: n,
                admitted: false,
                reason: if n == 1 {
                    "genus 0".into()
                } else {
                    format!("nu({n};{n}) > {t}")
                },
            }),
        }
    }
    Ok(CandidateSet {
        kind,
        scan_bound,
        levels,
        pruned,
        audit,
    })
}

/// Levels whose X_0(N) has gonality ≤ k over the algebraic closure of Q.
pub fn low_gonality_levels(k: usize, engine: &Engine) -> Result<Vec<u64>, PipelineError> {
    let cutoff = if k == 2 {
        HYPERELLIPTIC_INDEX_CUTOFF
    } else {
        TRIGONAL_INDEX_CUTOFF
    };
    let levels: Vec<u64> = (1..=cutoff)
        .filter(|&n| gamma0_index(n) <= cutoff)
        .collect();
    let keep: Vec<Option<u64>> = levels
        .into_par_iter()
        .map(|n| {
            let g = gamma0_genus(n) as usize;
            if g <= 2 || (k == 3 && g <= 4) {
                return Ok(Some(n));
            }
            let r = engine.report(&LevelGroup::full(n), if k == 2 { 2 } else { 3 })?;
            Ok(r.char0_at_most(k).then_some(n))
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(keep.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum GroupOutcome {
    /// gonality ≤ k in characteristic 0 for genus reasons alone
    LowGenus,
    /// X_Δ → X_Δ' of degree `index` with g(X_Δ') ≥ 1 leaves no room for a degree-≤k map
    CastelnuovoSeveri {
        over: String,
        index: u64,
        over_genus: u64,
    },
    /// X_Δ' has gonality > k at every prime allowed so far
    Morphism { over: String },
    /// some w_d normalizing Γ_Δ has ν > 2k fixed points and a quotient of positive genus
    Involution {
        d: u64,
        nu: u64,
        quotient_genus: u64,
    },
    Analyzed {
        char0_at_most: bool,
        exceptional: BTreeSet<u64>,
        report: Box<PetriReport>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupScan {
    pub level: u64,
    pub delta: String,
    #[serde(skip)]
    pub group: LevelGroup,
    pub genus: u64,
    #[serde(flatten)]
    pub outcome: GroupOutcome,
}

struct Status {
    group: LevelGroup,
    genus: u64,
    char0_at_most: bool,
    exceptional: BTreeSet<u64>,
}

/// Castelnuovo-Severi against X_Δ → X_Δ/w_d for w_d normalizing Γ_Δ: a map
/// of degree ≤ k forces ν ≤ 2k when the quotient has positive genus. The
/// argument needs the quotient genus to survive reduction, which holds for
/// the tame involution at odd p; p = 2 is always checked directly.
fn analyze_group(
    group: &LevelGroup,
    k: usize,
    morphism_allowed: Option<BTreeSet<u64>>,
    engine: &Engine,
) -> Result<(GroupOutcome, (bool, BTreeSet<u64>)), PipelineError> {
    let n = group.level();
    let witness = modsym::involution_data(group)
        .into_iter()
        .find(|&(_, nu, plus)| plus >= 1 && nu > 2 * k as u64);
    let involution = witness.is_some();
    let mut allowed = morphism_allowed.clone();
    if involution {
        let two: BTreeSet<u64> = if n % 2 == 1 {
            BTreeSet::from([2])
        } else {
            BTreeSet::new()
        };
        allowed = Some(match allowed {
            Some(a) => a.intersection(&two).copied().collect(),
            None => two,
        });
    }
    if involution && allowed.as_ref().is_some_and(|a| a.is_empty()) {
        let (d, nu, plus) = witness.expect("involution witness");
        return Ok((
            GroupOutcome::Involution {
                d,
                nu,
                quotient_genus: plus,
            },
            (false, BTreeSet::new()),
        ));
    }
    let degree = if k == 2 { 2 } else { 3 };
    let report = match &allowed {
        Some(a) => engine.restricted_report(group, degree, a)?,
        None => None,
    };
    let report = match report {
        Some(r) => r,
        None => engine.report(group, degree)?,
    };
    let at_most = report.char0_at_most(k);
    let exc = report.exceptional_primes(k);
    if let Some(a) = &allowed {
        if at_most || !exc.is_subset(a) {
            return Err(PipelineError::Anomaly(format!(
                "level {n} group {}: verdict contradicts a covered curve or w_N",
                group.notation()
            )));
        }
    }
    Ok((
        GroupOutcome::Analyzed {
            char0_at_most: at_most,
            exceptional: exc.clone(),
            report: Box::new(report),
        },
        (at_most, exc),
    ))
}

/// Every Δ at level N, largest first, for gonality bound k ∈ {2, 3}.
pub fn scan_level(n: u64, k: usize, engine: &Engine) -> Result<Vec<GroupScan>, PipelineError> {
    let mut groups = LevelGroup::all_at_level(n);
    groups.sort_by(|a, b| b.order().cmp(&a.order()).then(a.cmp(b)));
    let low_genus = if k == 2 { 2 } else { 4 };
    let map_degree = k as u64;
    let mut done: Vec<Status> = Vec::new();
    let mut out = Vec::new();
    for group in groups {
        let genus = group.genus();
        let supers: Vec<&Status> = done
            .iter()
            .filter(|s| s.group != group && s.group.contains_group(&group))
            .collect();
        let (outcome, status) = if genus <= low_genus {
            (GroupOutcome::LowGenus, (true, BTreeSet::new()))
        } else if let Some(s) = supers.iter().find(|s| {
            let index = s.group.order() / group.order();
            s.genus >= 1 && genus > cs_bound(index, s.genus, map_degree, 0)
        }) {
            (
                GroupOutcome::CastelnuovoSeveri {
                    over: s.group.notation(),
                    index: s.group.order() / group.order(),
                    over_genus: s.genus,
                },
                (false, BTreeSet::new()),
            )
        } else {
            let mut allowed: Option<(BTreeSet<u64>, &Status)> = None;
            for s in supers.iter().filter(|s| !s.char0_at_most) {
                allowed = Some(match allowed {
                    None => (s.exceptional.clone(), s),
                    Some((a, w)) => {
                        let inter: BTreeSet<u64> =
                            a.intersection(&s.exceptional).copied().collect();
                        if inter.len() < a.len() {
                            (inter, s)
                        } else {
                            (a, w)
                        }
                    }
                });
            }
            match allowed {
                Some((a, w)) if a.is_empty() => (
                    GroupOutcome::Morphism {
                        over: w.group.notation(),
                    },
                    (false, BTreeSet::new()),
                ),
                _ => analyze_group(&group, k, allowed.map(|(a, _)| a), engine)?,
            }
        };
        done.push(Status {
            group: group.clone(),
            genus,
            char0_at_most: status.0,
            exceptional: status.1,
        });
        out.push(GroupScan {
            level: n,
            delta: group.notation(),
            group,
            genus,
            outcome,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExceptionalPair {
    pub level: u64,
    pub delta: String,
    /// 0 stands for characteristic 0
    pub prime: u64,
    pub kind: String,
    #[serde(skip)]
    pub group: LevelGroup,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub which: u8,
    pub pairs: Vec<ExceptionalPair>,
    pub candidate_levels: Vec<u64>,
    pub scanned_levels: Vec<u64>,
    pub groups: Vec<GroupScan>,
}

fn pairs_from(scans: &[GroupScan], k: usize) -> Vec<ExceptionalPair> {
    let mut out = Vec::new();
    for s in scans {
        if let GroupOutcome::Analyzed {
            char0_at_most: false,
            report,
            ..
        } = &s.outcome
        {
            let primes: BTreeSet<u64> = if k == 2 {
                report.hyperelliptic_primes.clone()
            } else {
                report.trigonal_quintic_primes.clone().unwrap_or_default()
            };
            for p in primes {
                out.push(ExceptionalPair {
                    level: s.level,
                    delta: s.delta.clone(),
                    prime: p,
                    kind: if k == 2 { "hyperelliptic" } else { "trigonal" }.into(),
                    group: s.group.clone(),
                });
            }
        }
    }
    out
}

fn exceptional_x0(
    levels: &[u64],
    k: usize,
    engine: &Engine,
) -> Result<Vec<(u64, PetriReport)>, PipelineError> {
    levels
        .par_iter()
        .map(|&n| {
            Ok((
                n,
                engine.report(&LevelGroup::full(n), if k == 2 { 2 } else { 3 })?,
            ))
        })
        .collect()
}

fn scan_theorem_gonality(k: usize, engine: &Engine) -> Result<TheoremReport, PipelineError> {
    let kind = if k == 2 {
        CandidateKind::Hyperelliptic
    } else {
        CandidateKind::Trigonal
    };
    let cands = compute_candidates(kind, engine)?;
    let x0 = exceptional_x0(&cands.levels, k, engine)?;
    let mut levels: BTreeSet<u64> = low_gonality_levels(k, engine)?.into_iter().collect();
    // a candidate level with exceptional primes needs its subgroups too
    for (n, r) in &x0 {
        if !r.exceptional_primes(k).is_empty() {
            levels.insert(*n);
        }
    }
    let scans: Vec<Vec<GroupScan>> = levels
        .iter()
        .copied()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| scan_level(n, k, engine))
        .collect::<Result<_, _>>()?;
    let mut groups: Vec<GroupScan> = scans.into_iter().flatten().collect();
    for (n, r) in x0 {
        if !levels.contains(&n) {
            let g = LevelGroup::full(n);
            groups.push(GroupScan {
                level: n,
                delta: g.notation(),
                genus: g.genus(),
                group: g,
                outcome: GroupOutcome::Analyzed {
                    char0_at_most: r.char0_at_most(k),
                    exceptional: r.exceptional_primes(k),
                    report: Box::new(r),
                },
            });
        }
    }
    groups.sort_by(|a, b| {
        (a.level, b.group.order(), &a.delta).cmp(&(b.level, a.group.order(), &b.delta))
    });
    let mut pairs = pairs_from(&groups, k);
    pairs.sort();
    pairs.dedup();
    Ok(TheoremReport {
        which: (k - 1) as u8,
        pairs,
        candidate_levels: cands.levels,
        scanned_levels: levels.into_iter().collect(),
        groups,
    })
}

/// Every intermediate curve of genus 6, screened for smooth plane quintic reduction.
fn scan_quintics(engine: &Engine) -> Result<TheoremReport, PipelineError> {
    let levels: Vec<u64> = (1..=level_bound_for_genus(6))
        .filter(|&n| gamma0_genus(n) <= 6)
        .collect();
    let per_level: Vec<Vec<(GroupScan, Vec<ExceptionalPair>)>> = levels
        .par_iter()
        .map(|&n| {
            let mut out = Vec::new();
            for group in LevelGroup::all_at_level(n) {
                if group.genus() != 6 {
                    continue;
                }
                let b = engine.basis(&group)?;
                let report = petri::analyze(&b, 3)?;
                let verdict = petri::quintic_screen(&group, || (*b).clone())?;
                let mut pairs = Vec::new();
                if let QuinticVerdict::Possible { char0, primes } = &verdict {
                    let mut ps: Vec<u64> = primes.iter().copied().collect();
                    if *char0 {
                        ps.insert(0, 0);
                    }
                    for p in ps {
                        pairs.push(ExceptionalPair {
                            level: n,
                            delta: group.notation(),
                            prime: p,
                            kind: "quintic".into(),
                            group: group.clone(),
                        });
                    }
                }
                out.push((
                    GroupScan {
                        level: n,
                        delta: group.notation(),
                        genus: 6,
                        group,
                        outcome: GroupOutcome::Analyzed {
                            char0_at_most: matches!(
                                verdict,
                                QuinticVerdict::Possible { char0: true, .. }
                            ),
                            exceptional: match &verdict {
                                QuinticVerdict::Possible { primes, .. } => primes.clone(),
                                QuinticVerdict::NotAQuintic => BTreeSet::new(),
                            },
                            report: Box::new(report),
                        },
                    },
                    pairs,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut groups = Vec::new();
    let mut pairs = Vec::new();
    let mut scanned = Vec::new();
    for (n, items) in levels.iter().zip(per_level) {
        if !items.is_empty() {
            scanned.push(*n);
        }
        for (g, p) in items {
            groups.push(g);
            pairs.extend(p);
        }
    }
    pairs.sort();
    Ok(TheoremReport {
        which: 3,
        pairs,
        candidate_levels: levels,
        scanned_levels: scanned,
        groups,
    })
}

pub fn scan_theorem(which: u8, engine: &Engine) -> Result<TheoremReport, PipelineError> {
    match which {
        1 => scan_theorem_gonality(2, engine),
        2 => scan_theorem_gonality(3, engine),
        3 => scan_quintics(engine),
        _ => Err(PipelineError::Anomaly(format!("no theorem {which}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub level: u64,
    pub delta: String,
    pub d: i64,
    /// trigonal over F_p for the primes 2, 3, 5, 7 coprime to N (n = 1), or null if outside the hypothesis
    pub over_q: bool,
    pub over_fp: BTreeMap<u64, Option<bool>>,
    pub over_fp2: BTreeMap<u64, bool>,
    #[serde(skip)]
    pub group: LevelGroup,
}

pub fn table1(engine: &Engine) -> Result<Vec<Table1Row>, PipelineError> {
    let mut err = None;
    let rows = trigfield::genus4_table(|g| match engine.basis(g) {
        Ok(b) => (*b).clone(),
        Err(e) => {
            err.get_or_insert(e);
            modsym::CuspBasis::from_rows(g.clone(), engine.precision(g), Vec::new())
                .unwrap_or_else(|_| panic!("basis for {g} unavailable"))
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let mut out = Vec::new();
    for r in rows {
        let b = engine.basis(&r.group)?;
        let q = trigfield::extract_quadric(&b)?;
        let rep = trigfield::discriminant_of_quadric(&r.group, &q);
        let mut over_fp = BTreeMap::new();
        let mut over_fp2 = BTreeMap::new();
        for p in [2u64, 3, 5, 7] {
            if r.level % p == 0 {
                continue;
            }
            over_fp.insert(p, trigfield::trigonal_over(&rep, p, 1).ok());
            over_fp2.insert(p, trigfield::trigonal_over(&rep, p, 2)?);
        }
        out.push(Table1Row {
            level: r.level,
            delta: r.delta,
            d: r.d,
            over_q: trigfield::trigonal_over(&rep, 0, 1)?,
            over_fp,
            over_fp2,
            group: r.group,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cs_examples() {
        assert_eq!(cs_bound(2, 0, 2, 0), 1);
        assert_eq!(cs_bound(3, 0, 2, 1), 4);
        assert_eq!(cs_bound(2, 3, 2, 0), 7);
    }

    #[test]
    fn level_37_scan_finds_the_pair() {
        let engine = Engine::new(0);
        let scans = scan_level(37, 2, &engine).unwrap();
        let pairs = pairs_from(&scans, 2);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].group, LevelGroup::new(37, &[4]).unwrap());
        assert_eq!(pairs[0].prime, 2);
    }

    #[test]
    fn witness_needs_positive_quotient_genus() {
        assert_eq!(witness(44, &involution_data(44), 4), Some((11, 6, 1)));
        assert_eq!(witness(26, &involution_data(26), 4), None);
    }
}
