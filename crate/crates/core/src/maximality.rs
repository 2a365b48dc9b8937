//! Deciding whether a feasible guarantee is maximal.
//!
//! The search for a dominating guarantee works in the space of cumulative
//! sums `M_k = [μ]_1^k`. A master LP minimises `Σ M_k` under `M ≤ [λ]_1^·`,
//! monotonicity, and one cover cut `Σ W_k M_k ≥ 1` for every blocking
//! profile met so far. Covers are valid for every guarantee implementable
//! at their profile, so the master is a relaxation of the true problem: if
//! its optimum is `Σ [λ]_1^k`, nothing strictly better exists. Otherwise the
//! optimal point is tested, first against the working set of profiles and
//! then exhaustively, and either becomes the improver or yields a new cut.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::compose::{enumerate_canonical, prefix_simplex, CanonicalSequence};
use crate::error::{arg, Error, Result};
use crate::feasibility::{
    hard_profiles, implementation_lp, is_feasible_with, Checker, FeasibilityOptions, Implementation, Verdict,
};
use crate::lottery::{uniform, RankLottery};
use crate::profile::{canonicalize, Outcome, Profile, ProfileStream};
use crate::rational::{int, rat, Rational};
use crate::ratlp::{self, Direction, LinearProgram, Relation, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaximalityVerdict {
    Maximal,
    Dominated,
    /// The lottery is not a feasible guarantee, so the question is moot.
    Infeasible,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalityReport {
    pub verdict: MaximalityVerdict,
    pub lottery: RankLottery,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improver: Option<RankLottery>,
    /// Profiles tight for `[λ]_1^k`, keyed by `k`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<usize, Profile>,
    pub iterations: usize,
    pub profiles_in_working_set: usize,
    pub cuts: usize,
    pub runtime_ms: u128,
}

impl MaximalityReport {
    pub fn is_maximal(&self) -> bool {
        self.verdict == MaximalityVerdict::Maximal
    }
}

#[derive(Debug, Clone)]
pub struct MaximalityOptions {
    pub feasibility: FeasibilityOptions,
    pub max_iterations: usize,
    /// Also look for a tight profile for every `k`.
    pub witnesses: bool,
    /// Profiles tried per `k` by the exhaustive stage of the witness search.
    pub witness_search_limit: u64,
}

impl Default for MaximalityOptions {
    fn default() -> Self {
        Self {
            feasibility: FeasibilityOptions::default(),
            max_iterations: 500,
            witnesses: false,
            witness_search_limit: 20_000,
        }
    }
}

/// Outcome of the dominance search.
#[derive(Debug, Clone, PartialEq)]
pub enum Improvement {
    /// A feasible guarantee dominating `λ` and different from it.
    Improver(RankLottery),
    None,
    Undecided,
}

struct Search {
    improvement: Improvement,
    iterations: usize,
    working: usize,
    cuts: usize,
}

fn orders_of(profile: &Profile) -> Vec<&[Outcome]> {
    profile.prefs().iter().map(|q| q.order()).collect()
}

fn lottery_from_cumulative(m: &[Rational]) -> RankLottery {
    let mut probs = Vec::with_capacity(m.len() + 1);
    let mut prev = Rational::zero();
    for x in m.iter().chain(std::iter::once(&Rational::one())) {
        probs.push(x - &prev);
        prev = x.clone();
    }
    RankLottery::new(probs).expect("master solution is monotone")
}

fn search(lambda: &RankLottery, n: usize, opts: &MaximalityOptions) -> Result<Search> {
    let p = lambda.p();
    let cum = lambda.cumulative();
    let target: Rational = cum[..p - 1].iter().sum();
    let mut working = hard_profiles(n, p)?;
    let mut seen: HashSet<String> = working.iter().map(|q| q.to_string()).collect();
    let mut cuts: Vec<Vec<Rational>> = Vec::new();
    let mut cut_keys: HashSet<Vec<Rational>> = HashSet::new();
    let mut out = Search {
        improvement: Improvement::Undecided,
        iterations: 0,
        working: working.len(),
        cuts: 0,
    };

    while out.iterations < opts.max_iterations {
        out.iterations += 1;
        let mut lp = LinearProgram::new(p - 1);
        for k in 0..p - 1 {
            lp.set_bounds(k, Some(Rational::zero()), Some(cum[k].clone()))?;
            if k > 0 {
                lp.add_sparse(&[(k, int(1)), (k - 1, int(-1))], Relation::Ge, Rational::zero())?;
            }
        }
        for w in &cuts {
            lp.add_constraint(w.clone(), Relation::Ge, Rational::one())?;
        }
        lp.set_objective(Direction::Minimize, vec![Rational::one(); p - 1])?;
        let res = ratlp::solve(&lp)?;
        if res.status != Status::Optimal {
            return Err(Error::Internal(format!("dominance master LP ended {:?}", res.status)));
        }
        if res.objective_value.as_ref() == Some(&target) {
            out.improvement = Improvement::None;
            break;
        }
        let mu = lottery_from_cumulative(&res.primal.expect("optimal LP has a solution"));

        let checker = Checker::new(&mu);
        let mut added = false;
        for q in &working {
            if let Implementation::Blocked(b) = checker.solve(&orders_of(q)) {
                let w = b.cut(p);
                if cut_keys.insert(w.clone()) {
                    cuts.push(w);
                    added = true;
                }
            }
        }
        if added {
            continue;
        }

        let report = is_feasible_with(&mu, n, &opts.feasibility)?;
        match report.verdict {
            Verdict::Feasible => {
                out.improvement = Improvement::Improver(mu);
                break;
            }
            Verdict::Undecided => break,
            Verdict::Infeasible => {
                let q = report.witness_profile.expect("infeasible report has a witness");
                let b = report.witness_certificate.expect("infeasible report has a certificate");
                let w = b.cut(p);
                if !cut_keys.insert(w.clone()) {
                    return Err(Error::Internal("cover cut repeated; master LP is not improving".into()));
                }
                cuts.push(w);
                if seen.insert(q.to_string()) {
                    working.push(q);
                }
            }
        }
    }
    out.working = working.len();
    out.cuts = cuts.len();
    Ok(out)
}

/// A feasible guarantee dominating `λ` and different from it, if one exists.
/// `λ` itself should be feasible; otherwise the answer says nothing about
/// maximality.
pub fn improve(lambda: &RankLottery, n: usize) -> Result<Improvement> {
    improve_with(lambda, n, &MaximalityOptions::default())
}

pub fn improve_with(lambda: &RankLottery, n: usize, opts: &MaximalityOptions) -> Result<Improvement> {
    check_args(lambda, n)?;
    Ok(search(lambda, n, opts)?.improvement)
}

fn check_args(lambda: &RankLottery, n: usize) -> Result<()> {
    if n == 0 {
        return arg("need at least one agent");
    }
    if lambda.p() < 2 {
        return arg("need at least two outcomes");
    }
    Ok(())
}

pub fn is_maximal(lambda: &RankLottery, n: usize) -> Result<MaximalityReport> {
    is_maximal_with(lambda, n, &MaximalityOptions::default())
}

pub fn is_maximal_with(lambda: &RankLottery, n: usize, opts: &MaximalityOptions) -> Result<MaximalityReport> {
    check_args(lambda, n)?;
    let start = Instant::now();
    let mut report = MaximalityReport {
        verdict: MaximalityVerdict::Undecided,
        lottery: lambda.clone(),
        n,
        improver: None,
        witnesses: BTreeMap::new(),
        iterations: 0,
        profiles_in_working_set: 0,
        cuts: 0,
        runtime_ms: 0,
    };
    match is_feasible_with(lambda, n, &opts.feasibility)?.verdict {
        Verdict::Feasible => {}
        Verdict::Infeasible => {
            report.verdict = MaximalityVerdict::Infeasible;
            report.runtime_ms = start.elapsed().as_millis();
            return Ok(report);
        }
        Verdict::Undecided => {
            report.runtime_ms = start.elapsed().as_millis();
            return Ok(report);
        }
    }
    let s = search(lambda, n, opts)?;
    report.iterations = s.iterations;
    report.profiles_in_working_set = s.working;
    report.cuts = s.cuts;
    match s.improvement {
        Improvement::Improver(mu) => {
            report.verdict = MaximalityVerdict::Dominated;
            report.improver = Some(mu);
        }
        Improvement::None => {
            report.verdict = MaximalityVerdict::Maximal;
            if opts.witnesses {
                for k in 1..lambda.p() {
                    if let Some(q) = tight_profile_witness_with(lambda, n, k, opts.witness_search_limit)? {
                        report.witnesses.insert(k, q);
                    }
                }
            }
        }
        Improvement::Undecided => {}
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Smallest possible worst-agent mass on the `k`-tails over lotteries
/// implementing `λ` at `profile`; `None` when `λ` is not implementable there.
pub fn min_max_tail(lambda: &RankLottery, profile: &Profile, k: usize) -> Result<Option<Rational>> {
    let p = lambda.p();
    if k == 0 || k >= p {
        return arg(format!("k = {k} outside 1..{p}"));
    }
    let base = implementation_lp(lambda, profile)?;
    let mut lp = LinearProgram::new(p + 1);
    for c in base.constraints() {
        let mut coeffs = c.coeffs.clone();
        coeffs.push(Rational::zero());
        lp.add_constraint(coeffs, c.relation, c.rhs.clone())?;
    }
    for pref in profile.prefs() {
        let mut coeffs = vec![Rational::zero(); p + 1];
        for o in pref.k_tail(k)? {
            coeffs[o as usize] = Rational::one();
        }
        coeffs[p] = int(-1);
        lp.add_constraint(coeffs, Relation::Le, Rational::zero())?;
    }
    let mut obj = vec![Rational::zero(); p + 1];
    obj[p] = Rational::one();
    lp.set_objective(Direction::Minimize, obj)?;
    let res = ratlp::solve(&lp)?;
    Ok(res.objective_value)
}

/// A profile at which every implementation of `λ` gives some agent exactly
/// `[λ]_1^k` on its `k`-tail. Tries the profile library first, then the
/// first `limit` profiles in enumeration order.
pub fn tight_profile_witness(lambda: &RankLottery, n: usize, k: usize) -> Result<Option<Profile>> {
    tight_profile_witness_with(lambda, n, k, MaximalityOptions::default().witness_search_limit)
}

pub fn tight_profile_witness_with(lambda: &RankLottery, n: usize, k: usize, limit: u64) -> Result<Option<Profile>> {
    check_args(lambda, n)?;
    let p = lambda.p();
    let bound = lambda.partial_sum(1, k)?;
    let tight = |q: &Profile| -> Result<bool> { Ok(min_max_tail(lambda, q, k)?.as_ref() == Some(&bound)) };
    for q in hard_profiles(n, p)? {
        if tight(&q)? {
            return Ok(Some(q));
        }
    }
    if p > 10 {
        return Ok(None);
    }
    let mut stream = ProfileStream::chunks(n, p, 1)?.into_iter().next().expect("one chunk");
    let mut tried = 0u64;
    while let Some(orders) = stream.next_orders() {
        if tried >= limit {
            break;
        }
        tried += 1;
        let owned: Vec<Vec<Outcome>> = orders.iter().map(|o| o.to_vec()).collect();
        let q = Profile::from_orders(&owned)?;
        if tight(&q)? {
            return Ok(Some(canonicalize(&q)));
        }
    }
    Ok(None)
}

/// Checks that `profile` is tight for `[λ]_1^k`.
pub fn verify_tight_profile_witness(lambda: &RankLottery, profile: &Profile, k: usize) -> Result<bool> {
    let bound = lambda.partial_sum(1, k)?;
    Ok(min_max_tail(lambda, profile, k)?.as_ref() == Some(&bound))
}

/// A strictly increasing utility profile over ranks, summing to zero, that
/// `λ` maximises among a set of guarantees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarCertificate {
    #[serde(serialize_with = "crate::rational::serialize_rationals")]
    pub z: Vec<Rational>,
}

/// Checks every condition on `z` that can be verified finitely: it sums to
/// zero, increases strictly, is orthogonal to `λ`, and has `z·μ ≤ 0` for
/// every lottery in `test_set`.
pub fn check_polar_certificate(cert: &PolarCertificate, lambda: &RankLottery, test_set: &[RankLottery]) -> bool {
    let z = &cert.z;
    if z.len() != lambda.p() || !z.iter().sum::<Rational>().is_zero() {
        return false;
    }
    if z.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    if !lambda.dot(z).is_ok_and(|v| v.is_zero()) {
        return false;
    }
    test_set.iter().all(|mu| mu.dot(z).is_ok_and(|v| !v.is_positive()))
}

/// Is `point` a convex combination of `vertices`?
pub fn in_convex_hull(point: &RankLottery, vertices: &[RankLottery]) -> Result<bool> {
    if vertices.is_empty() {
        return Ok(false);
    }
    let p = point.p();
    let mut lp = LinearProgram::new(vertices.len());
    lp.add_constraint(vec![Rational::one(); vertices.len()], Relation::Eq, Rational::one())?;
    for k in 1..=p {
        let coeffs = vertices.iter().map(|v| v.get(k).clone()).collect();
        lp.add_constraint(coeffs, Relation::Eq, point.get(k).clone())?;
    }
    Ok(ratlp::solve(&lp)?.status == Status::Optimal)
}

/// Every simplex of maximal guarantees spanned by `UNI` and the prefixes of
/// a full canonical word.
pub fn canonical_simplices(n: usize, p: usize) -> Result<Vec<(CanonicalSequence, Vec<RankLottery>)>> {
    let mut out = Vec::new();
    for (seq, _) in enumerate_canonical(n, p)? {
        if seq.h() == seq.d() {
            let s = prefix_simplex(&seq)?;
            out.push((seq, s));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationResult {
    pub first: String,
    pub second: String,
    pub lottery: RankLottery,
    pub verdict: MaximalityVerdict,
    /// Maximal and outside every canonical simplex.
    pub new_maximal: bool,
}

/// Midpoints of pairs among `UNI` and the canonical guarantees that do not
/// lie in a canonical simplex, each tested for maximality. A result with
/// `new_maximal` set would be a maximal guarantee beyond the known family.
pub fn search_combinations(n: usize, p: usize, opts: &MaximalityOptions) -> Result<Vec<CombinationResult>> {
    let simplices = canonical_simplices(n, p)?;
    let mut named: Vec<(String, RankLottery)> = vec![("UNI".into(), uniform(p)?)];
    for (seq, l) in enumerate_canonical(n, p)? {
        named.push((seq.word_text(), l));
    }
    let half = rat(1, 2);
    let mut out = Vec::new();
    for i in 0..named.len() {
        for j in i + 1..named.len() {
            let mid = named[i].1.mix(&named[j].1, &half)?;
            let mut inside = false;
            for (_, s) in &simplices {
                if in_convex_hull(&mid, s)? {
                    inside = true;
                    break;
                }
            }
            if inside {
                continue;
            }
            let verdict = is_maximal_with(&mid, n, opts)?.verdict;
            out.push(CombinationResult {
                first: named[i].0.clone(),
                second: named[j].0.clone(),
                lottery: mid,
                new_maximal: verdict == MaximalityVerdict::Maximal,
                verdict,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::dual;
    use crate::feasibility::is_feasible;
    use crate::lottery::{rd, vt};

    fn lot(text: &str) -> RankLottery {
        RankLottery::parse(text).unwrap()
    }

    fn improver_is_valid(lambda: &RankLottery, n: usize, mu: &RankLottery) {
        assert_ne!(mu, lambda);
        assert!(mu.dominates(lambda).unwrap());
        assert!(is_feasible(mu, n).unwrap().is_feasible());
    }

    #[test]
    fn dominated_examples() {
        let mid = vt(3, 6).unwrap().mix(&rd(3, 6).unwrap(), &rat(1, 2)).unwrap();
        assert_eq!(mid, lot("1/6,1/3,1/6,1/6,0,1/6"));
        assert!(uniform(6).unwrap().dominates(&mid).unwrap());
        match improve(&mid, 3).unwrap() {
            Improvement::Improver(mu) => improver_is_valid(&mid, 3, &mu),
            other => panic!("expected an improver, got {other:?}"),
        }
        let low = lot("0,1,0,0,0,0");
        match improve(&low, 3).unwrap() {
            Improvement::Improver(mu) => improver_is_valid(&low, 3, &mu),
            other => panic!("expected an improver, got {other:?}"),
        }
        let r = is_maximal(&low, 3).unwrap();
        assert_eq!(r.verdict, MaximalityVerdict::Dominated);
    }

    #[test]
    fn maximal_examples() {
        assert_eq!(improve(&vt(3, 6).unwrap(), 3).unwrap(), Improvement::None);
        assert_eq!(improve(&rd(3, 6).unwrap(), 3).unwrap(), Improvement::None);
        for (l, n) in [("0,1/2,0,0,1/2,0", 2), ("1/2,0,0,1/2,0", 3), ("1/3,0,1/3,1/3,0", 3)] {
            let r = is_maximal(&lot(l), n).unwrap();
            assert_eq!(r.verdict, MaximalityVerdict::Maximal, "{l}");
        }
        for p in 2..7 {
            for n in 2..5 {
                assert!(is_maximal(&uniform(p).unwrap(), n).unwrap().is_maximal());
            }
        }
        assert_eq!(is_maximal(&lot("1/2,0,0,0,1/2"), 3).unwrap().verdict, MaximalityVerdict::Infeasible);
    }

    #[test]
    fn two_agents_maximal_iff_symmetric() {
        // Feasible two-agent lotteries on a coarse grid.
        for p in 2..6 {
            let grid = 4;
            let mut counts = vec![0usize; p];
            loop {
                if counts.iter().sum::<usize>() == grid {
                    let l = RankLottery::new(counts.iter().map(|&c| rat(c as i64, grid as i64)).collect()).unwrap();
                    if is_feasible(&l, 2).unwrap().is_feasible() {
                        let r = is_maximal(&l, 2).unwrap();
                        assert_eq!(r.is_maximal(), l.is_symmetric(), "{l}");
                        if let Some(mu) = &r.improver {
                            improver_is_valid(&l, 2, mu);
                        }
                    }
                }
                let mut i = 0;
                while i < p {
                    counts[i] += 1;
                    if counts[i] <= grid {
                        break;
                    }
                    counts[i] = 0;
                    i += 1;
                }
                if i == p {
                    break;
                }
            }
        }
    }

    #[test]
    fn duality_and_radius_preserve_maximality() {
        let cases = ["1/2,0,0,1/2,0", "0,1/2,1/2,0,0", "1/3,1/3,0,0,1/3", "1/6,1/3,1/6,1/6,0,1/6", "0,0,1,0,0,0"];
        for text in cases {
            let l = lot(text);
            let a = is_maximal(&l, 3).unwrap();
            let b = is_maximal(&dual(&l), 3).unwrap();
            if a.verdict != MaximalityVerdict::Infeasible {
                assert_eq!(a.verdict, b.verdict, "{text}");
            }
        }
        let v = vt(3, 6).unwrap();
        for a in [rat(1, 3), rat(3, 4)] {
            let mu = v.mix(&uniform(6).unwrap(), &a).unwrap();
            assert!(is_maximal(&mu, 3).unwrap().is_maximal());
        }
    }

    #[test]
    fn witnesses() {
        let right = Profile::parse("1 4 5 6 2 3 / 2 5 6 4 3 1 / 3 6 4 5 1 2").unwrap();
        let left = Profile::parse("1 2 4 5 6 3 / 2 3 5 6 4 1 / 3 1 6 4 5 2").unwrap();
        for k in 1..6 {
            assert!(verify_tight_profile_witness(&vt(3, 6).unwrap(), &right, k).unwrap(), "vt k = {k}");
            assert!(verify_tight_profile_witness(&rd(3, 6).unwrap(), &left, k).unwrap(), "rd k = {k}");
        }
        // Identical preferences let the common top outcome take all the
        // mass; a pair of opposite preferences pins every tail instead.
        let id = crate::profile::Preference::identity(5);
        let same = Profile::identical(3, id.clone());
        let opposed = Profile::new(vec![id.clone(), id.reversed(), id]).unwrap();
        for k in 1..5 {
            assert!(!verify_tight_profile_witness(&uniform(5).unwrap(), &same, k).unwrap());
            assert!(verify_tight_profile_witness(&uniform(5).unwrap(), &opposed, k).unwrap());
        }
        let opts = MaximalityOptions {
            witnesses: true,
            ..MaximalityOptions::default()
        };
        let r = is_maximal_with(&vt(3, 6).unwrap(), 3, &opts).unwrap();
        assert_eq!(r.witnesses.len(), 5);
        for (k, q) in &r.witnesses {
            assert!(verify_tight_profile_witness(&vt(3, 6).unwrap(), q, *k).unwrap());
        }
        // A dominated lottery has some k with no tight profile at all.
        let mid = lot("1/6,1/3,1/6,1/6,0,1/6");
        let found = (1..6).filter(|&k| tight_profile_witness(&mid, 3, k).unwrap().is_some()).count();
        assert!(found < 5);
    }

    #[test]
    fn polar_certificates() {
        let l = lot("0,1/2,0,0,1/2,0");
        let z = PolarCertificate {
            z: vec![int(-5), int(-1), int(-1) / int(2), int(1) / int(2), int(1), int(5)],
        };
        assert!(check_polar_certificate(&z, &l, &[]));
        let z = PolarCertificate {
            z: vec![int(-3), int(-2), int(-1), int(1), int(2), int(3)],
        };
        assert!(check_polar_certificate(&z, &l, &[lot("0,0,1/2,1/2,0,0"), lot("1/2,0,0,0,0,1/2")]));
        assert!(!check_polar_certificate(&z, &l, &[lot("0,0,0,1/2,1/2,0")]));
        let flat = PolarCertificate {
            z: vec![int(-3), int(-2), int(0), int(0), int(2), int(3)],
        };
        assert!(!check_polar_certificate(&flat, &l, &[]));
        let off = PolarCertificate {
            z: vec![int(-4), int(-2), int(-1), int(1), int(2), int(4)],
        };
        assert!(!check_polar_certificate(&off, &lot("1/2,0,0,1/2,0,0"), &[]));
    }

    #[test]
    fn hull_membership() {
        let s = canonical_simplices(3, 7).unwrap();
        assert_eq!(s.len(), 4);
        let (_, first) = &s[0];
        let mid = first[1].mix(&first[2], &rat(1, 3)).unwrap();
        assert!(in_convex_hull(&mid, first).unwrap());
        assert!(!in_convex_hull(&lot("0,0,0,0,0,0,1"), first).unwrap());
    }
}
