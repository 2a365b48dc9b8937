//! Deciding whether a rank lottery is a feasible guarantee.
//!
//! At a fixed profile, `λ` is implementable iff some outcome lottery `ℓ` puts
//! at most `[λ]_1^k` on every agent's `k`-tail. When it is not, LP duality
//! yields a *cover*: nonnegative weights `w` on tails such that every outcome
//! is covered with total weight at least one while `Σ w_T [λ]_1^{|T|} < 1`.
//! Covers are the certificates used throughout the crate, and they translate
//! directly into Farkas multipliers for the implementation LP.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lottery::{feasible_n2, first_n2_violation, sort_ascending, uniform, RankLottery};
use crate::profile::{
    canonicalize, cyclic_shift_profile, pad_profile, Outcome, OutcomeLottery, PadLayout, Preference, Profile,
    ProfileStream, MAX_OUTCOMES,
};
use crate::rational::{common_denominator, int, rat, serialize_rational, serialize_rationals, Rational};
use crate::ratlp::{self, FarkasCertificate, LinearProgram, PackingProblem, Relation};

/// Implementation LP at `profile`: variables `ℓ_a`, row 0 is `Σℓ = 1`, then
/// one row `ℓ(k-tail of agent i) ≤ [λ]_1^k` per agent `i` and `k = 1..p−1`,
/// agent-major.
pub fn implementation_lp(lambda: &RankLottery, profile: &Profile) -> Result<LinearProgram> {
    let p = lambda.p();
    if profile.p() != p {
        return arg(format!("profile has {} outcomes, lottery has {p} ranks", profile.p()));
    }
    let cum = lambda.cumulative();
    let mut lp = LinearProgram::new(p);
    lp.add_constraint(vec![Rational::one(); p], Relation::Eq, Rational::one())?;
    for pref in profile.prefs() {
        let mut coeffs = vec![Rational::zero(); p];
        for (k, &o) in pref.order().iter().take(p - 1).enumerate() {
            coeffs[o as usize] = Rational::one();
            lp.add_constraint(coeffs.clone(), Relation::Le, cum[k].clone())?;
        }
    }
    Ok(lp)
}

/// Why `λ` cannot be implemented at a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Blocked {
    /// Cover weight of agent `i`'s `k`-tail at index `i·(p−1) + k − 1`.
    #[serde(serialize_with = "serialize_rationals")]
    pub cover: Vec<Rational>,
    /// The same evidence as Farkas multipliers for [`implementation_lp`].
    pub certificate: FarkasCertificate,
}

impl Blocked {
    /// Aggregated weights `W_k = Σ_i w_{i,k}`; every guarantee implementable
    /// at the profile satisfies `Σ_k W_k [μ]_1^k ≥ 1`.
    pub fn cut(&self, p: usize) -> Vec<Rational> {
        let mut w = vec![Rational::zero(); p - 1];
        for (idx, v) in self.cover.iter().enumerate() {
            w[idx % (p - 1)] += v;
        }
        w
    }

    fn from_cover(cover: Vec<Rational>, p: usize) -> Self {
        let mut rows = vec![Rational::one()];
        rows.extend(cover.iter().map(|w| -w.clone()));
        Self {
            cover,
            certificate: FarkasCertificate {
                rows,
                upper: vec![Rational::zero(); p],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Implementation {
    Implemented(OutcomeLottery),
    Blocked(Blocked),
}

impl Implementation {
    pub fn lottery(&self) -> Option<&OutcomeLottery> {
        match self {
            Implementation::Implemented(l) => Some(l),
            Implementation::Blocked(_) => None,
        }
    }

    pub fn blocked(&self) -> Option<&Blocked> {
        match self {
            Implementation::Implemented(_) => None,
            Implementation::Blocked(b) => Some(b),
        }
    }
}

/// Per-lottery data reused across many profiles.
#[derive(Debug, Clone)]
pub(crate) struct Checker {
    p: usize,
    cum: Vec<Rational>,
    /// `(D, D·[λ]_1^k)` when everything fits comfortably in `i64`.
    scaled: Option<(i64, Vec<i64>)>,
}

impl Checker {
    pub(crate) fn new(lambda: &RankLottery) -> Self {
        let cum = lambda.cumulative();
        let den = common_denominator(cum.iter());
        let scaled = den.to_i64().filter(|&d| d <= 1 << 40).map(|d| {
            let caps = cum[..lambda.p() - 1]
                .iter()
                .map(|c| (c * Rational::from_integer(BigInt::from(d))).to_integer().to_i64().expect("bounded by D"))
                .collect();
            (d, caps)
        });
        Self {
            p: lambda.p(),
            cum,
            scaled,
        }
    }

    fn rows(&self, orders: &[&[Outcome]], caps: &[i64], den: i64) -> Vec<(u64, i64)> {
        let p = self.p;
        let mut rows = Vec::with_capacity(orders.len() * (p - 1) + 1);
        for order in orders {
            let mut mask = 0u64;
            for (k, &o) in order.iter().take(p - 1).enumerate() {
                mask |= 1u64 << o;
                rows.push((mask, caps[k]));
            }
        }
        let full = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
        rows.push((full, den));
        rows
    }

    /// Fast yes/no answer, first trying `hint` (numerators over `hint.1`
    /// in units of `D`) and replacing it with any fresh solution.
    fn implementable_with_hint(&self, orders: &[&[Outcome]], hint: &mut Option<(Vec<i128>, i128)>) -> bool {
        let Some((den, caps)) = &self.scaled else {
            return self.implementable(orders);
        };
        if let Some((x, d)) = hint.as_ref() {
            let fits = orders.iter().all(|order| {
                let mut used = 0i128;
                order.iter().take(self.p - 1).zip(caps).all(|(&o, &cap)| {
                    used += x[o as usize];
                    used <= cap as i128 * d
                })
            });
            if fits {
                return true;
            }
        }
        let rows = self.rows(orders, caps, *den);
        match PackingProblem::new(self.p, rows).solve_until(*den) {
            Some(out) => {
                if out.reached {
                    *hint = Some((out.raw, out.raw_den));
                }
                out.reached
            }
            None => self.implementable(orders),
        }
    }

    /// Fast yes/no answer.
    pub(crate) fn implementable(&self, orders: &[&[Outcome]]) -> bool {
        if let Some((den, caps)) = &self.scaled {
            let rows = self.rows(orders, caps, *den);
            if let Some(out) = PackingProblem::new(self.p, rows).solve_until(*den) {
                return out.reached;
            }
        }
        matches!(self.solve_general(orders), Implementation::Implemented(_))
    }

    pub(crate) fn solve(&self, orders: &[&[Outcome]]) -> Implementation {
        if let Some((den, caps)) = &self.scaled {
            let rows = self.rows(orders, caps, *den);
            let nrows = rows.len();
            if let Some(out) = PackingProblem::new(self.p, rows).solve_until(*den) {
                let d = Rational::from_integer(BigInt::from(*den));
                if out.reached {
                    let mass = out.x.iter().map(|x| x / &d).collect();
                    return Implementation::Implemented(OutcomeLottery::new(mass).expect("packing solution is a lottery"));
                }
                let y_full = &out.y[nrows - 1];
                let scale = Rational::one() - y_full;
                let cover = out.y[..nrows - 1].iter().map(|y| y / &scale).collect();
                return Implementation::Blocked(Blocked::from_cover(cover, self.p));
            }
        }
        self.solve_general(orders)
    }

    fn solve_general(&self, orders: &[&[Outcome]]) -> Implementation {
        let p = self.p;
        let mut lp = LinearProgram::new(p);
        lp.add_constraint(vec![Rational::one(); p], Relation::Eq, Rational::one())
            .expect("dimensions");
        for order in orders {
            let mut coeffs = vec![Rational::zero(); p];
            for (k, &o) in order.iter().take(p - 1).enumerate() {
                coeffs[o as usize] = Rational::one();
                lp.add_constraint(coeffs.clone(), Relation::Le, self.cum[k].clone())
                    .expect("dimensions");
            }
        }
        let res = ratlp::solve(&lp).expect("implementation LP is well formed");
        match res.primal {
            Some(x) => Implementation::Implemented(OutcomeLottery::new(x).expect("LP solution is a lottery")),
            None => {
                let cert = res.certificate.expect("infeasible LP carries a certificate");
                let y_eq = cert.rows[0].clone();
                let cover = cert.rows[1..].iter().map(|y| -y / &y_eq).collect();
                Implementation::Blocked(Blocked::from_cover(cover, p))
            }
        }
    }
}

fn orders_of(profile: &Profile) -> Vec<&[Outcome]> {
    profile.prefs().iter().map(|q| q.order()).collect()
}

/// An outcome lottery implementing `λ` at `profile`, or a cover proving
/// that none exists.
pub fn implement_at(lambda: &RankLottery, profile: &Profile) -> Result<Implementation> {
    if profile.p() != lambda.p() {
        return arg(format!("profile has {} outcomes, lottery has {} ranks", profile.p(), lambda.p()));
    }
    Ok(Checker::new(lambda).solve(&orders_of(profile)))
}

/// Checks `ℓ` directly: every agent's rank rearrangement dominates `λ`.
pub fn verify_implementation(lambda: &RankLottery, profile: &Profile, lottery: &OutcomeLottery) -> bool {
    profile.prefs().iter().all(|q| {
        crate::profile::rank_rearrange(lottery, q)
            .and_then(|r| r.dominates(lambda))
            .unwrap_or(false)
    })
}

/// Checks a cover certificate against `λ` at `profile` without any LP.
pub fn verify_blocked(lambda: &RankLottery, profile: &Profile, blocked: &Blocked) -> bool {
    let p = lambda.p();
    if profile.p() != p || blocked.cover.len() != profile.n() * (p - 1) {
        return false;
    }
    if blocked.cover.iter().any(|w| w.is_negative()) {
        return false;
    }
    let cum = lambda.cumulative();
    let mut covered = vec![Rational::zero(); p];
    let mut cost = Rational::zero();
    for (i, q) in profile.prefs().iter().enumerate() {
        for k in 1..p {
            let w = &blocked.cover[i * (p - 1) + k - 1];
            if w.is_zero() {
                continue;
            }
            for &o in &q.order()[..k] {
                covered[o as usize] += w;
            }
            cost += w * &cum[k - 1];
        }
    }
    let cover_ok = covered.iter().all(|c| c >= &Rational::one()) && cost < Rational::one();
    let lp_ok = implementation_lp(lambda, profile)
        .map(|lp| ratlp::verify_certificate(&lp, &blocked.certificate))
        .unwrap_or(false);
    cover_ok && lp_ok
}

/// Sets of size `k` with positive weights covering every element of `[p]`
/// exactly once in total. Sets hold 1-based ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalancedFamily {
    pub p: usize,
    pub k: usize,
    pub sets: Vec<Vec<usize>>,
    #[serde(serialize_with = "serialize_rationals")]
    pub weights: Vec<Rational>,
}

impl BalancedFamily {
    pub fn is_balanced(&self) -> bool {
        if self.sets.len() != self.weights.len() || self.weights.iter().any(|w| !w.is_positive()) {
            return false;
        }
        let mut total = vec![Rational::zero(); self.p + 1];
        for (set, w) in self.sets.iter().zip(&self.weights) {
            if set.len() != self.k || set.iter().any(|&j| j == 0 || j > self.p) {
                return false;
            }
            let distinct: HashSet<_> = set.iter().collect();
            if distinct.len() != set.len() {
                return false;
            }
            for &j in set {
                total[j] += w;
            }
        }
        total[1..].iter().all(|t| t.is_one())
    }

    /// Profile in which agent `i` has `S_i` (as outcomes `j − 1`) for its
    /// `k`-tail; the rest of each order is ascending and agents beyond the
    /// family hold the identity.
    pub fn witness_profile(&self, n: usize) -> Result<Profile> {
        if self.sets.len() > n {
            return arg("balanced family has more sets than agents");
        }
        let mut orders = Vec::with_capacity(n);
        for set in &self.sets {
            let mut order: Vec<Outcome> = set.iter().map(|&j| (j - 1) as Outcome).collect();
            order.extend((0..self.p as Outcome).filter(|o| !set.contains(&(*o as usize + 1))));
            orders.push(order);
        }
        while orders.len() < n {
            orders.push((0..self.p as Outcome).collect());
        }
        Profile::from_orders(&orders)
    }
}

/// Whether every `k` in `2..=⌊p/2⌋` admits a small balanced family.
pub fn balanced_family_conditions(n: usize, p: usize) -> bool {
    p <= 2 * n - 2 || (p == 2 * n && n != 4 && n != 5)
}

/// Balanced family of `k`-subsets of `[p]` with at most `n` members, when
/// `(n, p)` allow one for every `k`.
pub fn balanced_family(p: usize, k: usize, n: usize) -> Option<BalancedFamily> {
    if n < 2 || k < 2 || k > p / 2 || !balanced_family_conditions(n, p) {
        return None;
    }
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut weights: Vec<Rational> = Vec::new();
    if p % k == 0 {
        for i in 0..p / k {
            sets.push((i * k + 1..=(i + 1) * k).collect());
            weights.push(Rational::one());
        }
    } else if p <= 2 * n - 2 || k <= n - 2 {
        let t = p / k;
        let r = p % k;
        for i in 0..t {
            sets.push((i * k + 1..=(i + 1) * k).collect());
            weights.push(if i + 1 < t { Rational::one() } else { rat(r as i64, k as i64) });
        }
        let last: Vec<usize> = ((t - 1) * k + 1..=t * k).collect();
        let rest: Vec<usize> = (t * k + 1..=p).collect();
        for i in 0..k {
            let mut set: Vec<usize> = (0..k - r).map(|j| last[(i + j) % k]).collect();
            set.extend(&rest);
            sets.push(set);
            weights.push(rat(1, k as i64));
        }
    } else {
        // p = 2n and k = n − 1; elements are S, optionally T, then pairs.
        let s: Vec<usize> = (1..=k).collect();
        sets.push(s);
        weights.push(Rational::one());
        let w2 = rat(2, k as i64);
        if k % 2 == 0 {
            let pairs: Vec<[usize; 2]> = (0..k / 2 + 1).map(|i| [k + 2 * i + 1, k + 2 * i + 2]).collect();
            for i in 0..pairs.len() {
                let set = pairs.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, q)| *q).collect();
                sets.push(set);
                weights.push(w2.clone());
            }
        } else {
            let t = [k + 1, k + 2, k + 3];
            let pairs: Vec<[usize; 2]> = (0..(k - 1) / 2).map(|i| [k + 4 + 2 * i, k + 5 + 2 * i]).collect();
            for i in 0..pairs.len() {
                let mut set = t.to_vec();
                set.extend(pairs.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, q)| *q));
                sets.push(set);
                weights.push(w2.clone());
            }
            for a in t {
                let mut set = vec![a];
                set.extend(pairs.iter().flat_map(|q| *q));
                sets.push(set);
                weights.push(rat(1, k as i64));
            }
        }
    }
    let family = BalancedFamily { p, k, sets, weights };
    debug_assert!(family.is_balanced());
    (family.sets.len() <= n).then_some(family)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    /// Two agents with opposite preferences.
    TwoAgentSymmetry,
    /// Tails forming a small balanced family.
    BalancedFamily,
    /// `⌈p/k⌉` agents whose `k`-tails cover every outcome.
    TailCover,
}

/// A necessary condition `[λ]_1^k ≥ bound` with a profile enforcing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cut {
    pub kind: CutKind,
    pub k: usize,
    #[serde(serialize_with = "serialize_rational")]
    pub bound: Rational,
    pub witness: Profile,
}

impl Cut {
    pub fn describe(&self) -> String {
        let kind = match self.kind {
            CutKind::TwoAgentSymmetry => "two-agent",
            CutKind::BalancedFamily => "balanced-family",
            CutKind::TailCover => "tail-cover",
        };
        format!("{kind}: [λ]_1^{} >= {}", self.k, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CutCheck {
    Pass(Vec<Cut>),
    Violated(Cut),
}

/// All cheap necessary conditions for `(n, p)`.
pub fn cuts_for(n: usize, p: usize) -> Result<Vec<Cut>> {
    if n == 0 || p < 2 || p > MAX_OUTCOMES {
        return arg(format!("no cuts for n = {n}, p = {p}"));
    }
    let mut cuts = Vec::new();
    if n == 2 {
        let id = Preference::identity(p);
        let witness = Profile::new(vec![id.clone(), id.reversed()])?;
        // [λ]_1^k ≥ 1 − [λ]_1^{p−k} is handled separately since the bound
        // depends on λ; record the profile with k marking the pairing.
        for k in 1..p {
            cuts.push(Cut {
                kind: CutKind::TwoAgentSymmetry,
                k,
                bound: Rational::zero(),
                witness: witness.clone(),
            });
        }
    }
    if n >= 2 && balanced_family_conditions(n, p) {
        for k in 2..=p / 2 {
            if let Some(f) = balanced_family(p, k, n) {
                cuts.push(Cut {
                    kind: CutKind::BalancedFamily,
                    k,
                    bound: rat(k as i64, p as i64),
                    witness: f.witness_profile(n)?,
                });
            }
        }
    }
    for k in 1..p {
        let m = p.div_ceil(k);
        if m >= 2 && m <= n {
            let bound = if p % k == 0 || n >= p { rat(k as i64, p as i64) } else { rat(1, m as i64) };
            // With n ≥ p the p cyclic shifts by one cover each outcome k times.
            let witness = if n >= p && p % k != 0 {
                cyclic_shift_profile(n, p, 1)
            } else {
                cyclic_shift_profile(n, p, k)
            };
            cuts.push(Cut {
                kind: CutKind::TailCover,
                k,
                bound,
                witness,
            });
        }
    }
    Ok(cuts)
}

/// Checks the cheap necessary conditions; a violation certifies
/// infeasibility through its witness profile.
pub fn necessary_cuts(lambda: &RankLottery, n: usize) -> Result<CutCheck> {
    let p = lambda.p();
    let cum = lambda.cumulative();
    let cuts = cuts_for(n, p)?;
    for mut cut in cuts.iter().cloned() {
        let lhs = &cum[cut.k - 1];
        if cut.kind == CutKind::TwoAgentSymmetry {
            cut.bound = Rational::one() - &cum[p - cut.k - 1];
        }
        if lhs < &cut.bound {
            return Ok(CutCheck::Violated(cut));
        }
    }
    let resolved = cuts
        .into_iter()
        .map(|mut c| {
            if c.kind == CutKind::TwoAgentSymmetry {
                c.bound = Rational::one() - &cum[p - c.k - 1];
            }
            c
        })
        .collect();
    Ok(CutCheck::Pass(resolved))
}

/// Profiles that tend to block guarantees: identical preferences, cyclic
/// shifts, balanced-family tails, the two-interval extremal profiles and
/// cyclic paddings of smaller such profiles. Canonical and deduplicated.
pub fn hard_profiles(n: usize, p: usize) -> Result<Vec<Profile>> {
    if n == 0 || p < 2 || p > MAX_OUTCOMES {
        return arg(format!("no profile library for n = {n}, p = {p}"));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |q: Profile| {
        let c = canonicalize(&q);
        if seen.insert(c.to_string()) {
            out.push(c);
        }
    };
    for q in base_profiles(n, p)? {
        push(q);
    }
    // Paddings of smaller libraries, nested as deep as p allows.
    let mut inner_p = p;
    let mut layers: Vec<PadLayout> = Vec::new();
    while inner_p >= n + 2 && layers.len() < 3 {
        inner_p -= n;
        layers.push(PadLayout::Veto);
        for base in base_profiles(n, inner_p)? {
            for pattern in 0..1usize << layers.len() {
                let mut q = base.clone();
                for bit in 0..layers.len() {
                    let layout = if pattern >> bit & 1 == 1 {
                        PadLayout::Dictator
                    } else {
                        PadLayout::Veto
                    };
                    q = pad_profile(&q, layout)?;
                }
                push(q);
            }
        }
    }
    if n == 2 {
        let id = Preference::identity(p);
        push(Profile::new(vec![id.clone(), id.reversed()])?);
    }
    for cut in cuts_for(n, p)? {
        push(cut.witness);
    }
    Ok(out)
}

fn base_profiles(n: usize, p: usize) -> Result<Vec<Profile>> {
    let mut v = vec![Profile::identical(n, Preference::identity(p))];
    for s in 1..p {
        v.push(cyclic_shift_profile(n, p, s));
    }
    if p > n && p - n <= n {
        v.push(two_interval_profile(n, p, false)?);
        v.push(two_interval_profile(n, p, true)?);
    }
    Ok(v)
}

/// For `p = n + q` with `q ≤ n`: outcomes `a_0..a_{n−1}` and
/// `b_0..b_{q−1}`. Without `low`, each agent ranks the `a`s in ranks
/// `1..n−1` and `p` (agent `i` has `a_i` on top) with the `b`s in between,
/// cyclically shifted for the first `q` agents. With `low`, agent `i` has
/// `a_i` at the bottom, the `b`s next and the other `a`s on top.
fn two_interval_profile(n: usize, p: usize, low: bool) -> Result<Profile> {
    let q = p - n;
    let a = |i: usize| (i % n) as Outcome;
    let b = |j: usize| (n + j % q) as Outcome;
    let orders: Vec<Vec<Outcome>> = (0..n)
        .map(|i| {
            let shift = if i < q { i } else { 0 };
            let bs = (0..q).map(|j| b(j + shift));
            let others = (1..n).map(|j| a(i + j));
            if low {
                std::iter::once(a(i)).chain(bs).chain(others).collect()
            } else {
                others.chain(bs).chain(std::iter::once(a(i))).collect()
            }
        })
        .collect();
    Profile::from_orders(&orders)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The uniform outcome lottery implements every guarantee it dominates.
    DominatedByUniform,
    /// Two agents: the symmetric-tail characterization.
    TwoAgents,
    NecessaryCut,
    HardProfile,
    Enumeration,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub method: Method,
    pub lottery: RankLottery,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_profile: Option<Profile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_certificate: Option<Blocked>,
    pub profiles_checked: u64,
    pub cuts: Vec<String>,
    pub runtime_ms: u128,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    /// Re-checks the witness certificate, if any, from scratch.
    pub fn verify_witness(&self) -> bool {
        match (&self.witness_profile, &self.witness_certificate) {
            (Some(q), Some(b)) => verify_blocked(&self.lottery, q, b),
            _ => self.verdict != Verdict::Infeasible,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityOptions {
    /// Worker threads for enumeration; 0 means the global rayon pool.
    pub jobs: usize,
    pub limit_profiles: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Skip the cut and library stages and go straight to enumeration.
    pub enumerate_only: bool,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            jobs: 0,
            limit_profiles: None,
            time_limit: None,
            enumerate_only: false,
        }
    }
}

pub fn is_feasible(lambda: &RankLottery, n: usize) -> Result<FeasibilityReport> {
    is_feasible_with(lambda, n, &FeasibilityOptions::default())
}

pub fn is_feasible_with(lambda: &RankLottery, n: usize, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    let start = Instant::now();
    let p = lambda.p();
    if n == 0 {
        return arg("need at least one agent");
    }
    if p < 2 {
        return arg("need at least two outcomes");
    }
    let mut report = FeasibilityReport {
        verdict: Verdict::Feasible,
        method: Method::Enumeration,
        lottery: lambda.clone(),
        n,
        witness_profile: None,
        witness_certificate: None,
        profiles_checked: 0,
        cuts: Vec::new(),
        runtime_ms: 0,
    };
    let checker = Checker::new(lambda);
    let block = |report: &mut FeasibilityReport, q: Profile, method: Method| -> Result<()> {
        match checker.solve(&orders_of(&q)) {
            Implementation::Blocked(b) => {
                report.verdict = Verdict::Infeasible;
                report.method = method;
                report.witness_profile = Some(q);
                report.witness_certificate = Some(b);
                Ok(())
            }
            Implementation::Implemented(_) => Err(Error::Internal(format!(
                "profile {q} was expected to block {lambda}"
            ))),
        }
    };

    if !opts.enumerate_only {
        if uniform(p)?.dominates(lambda)? {
            report.method = Method::DominatedByUniform;
            report.runtime_ms = start.elapsed().as_millis();
            return Ok(report);
        }
        match necessary_cuts(lambda, n)? {
            CutCheck::Violated(cut) => {
                report.cuts.push(cut.describe());
                block(&mut report, cut.witness, Method::NecessaryCut)?;
                report.runtime_ms = start.elapsed().as_millis();
                return Ok(report);
            }
            CutCheck::Pass(cuts) => report.cuts = cuts.iter().map(Cut::describe).collect(),
        }
        if n == 2 {
            // Opposite preferences are the hardest two-agent profile, and the
            // cuts above already include them.
            debug_assert!(feasible_n2(lambda) && first_n2_violation(lambda).is_none());
            report.method = Method::TwoAgents;
            report.runtime_ms = start.elapsed().as_millis();
            return Ok(report);
        }
        for q in hard_profiles(n, p)? {
            report.profiles_checked += 1;
            if !checker.implementable(&orders_of(&q)) {
                block(&mut report, q, Method::HardProfile)?;
                report.runtime_ms = start.elapsed().as_millis();
                return Ok(report);
            }
        }
    }

    match enumerate(&checker, n, p, opts, start)? {
        Scan::AllPass(count) => {
            report.profiles_checked += count;
            report.method = Method::Enumeration;
        }
        Scan::Blocked(count, q) => {
            report.profiles_checked += count;
            block(&mut report, q, Method::Enumeration)?;
        }
        Scan::Limit(count) => {
            report.profiles_checked += count;
            report.verdict = Verdict::Undecided;
            report.method = Method::Limit;
        }
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

enum Scan {
    AllPass(u64),
    Blocked(u64, Profile),
    Limit(u64),
}

/// Checks every canonical profile. Chunks are scanned in parallel; the
/// reported witness is always the first blocking profile in enumeration
/// order, so the answer does not depend on the number of workers.
fn enumerate(checker: &Checker, n: usize, p: usize, opts: &FeasibilityOptions, start: Instant) -> Result<Scan> {
    if p > 10 {
        return Ok(Scan::Limit(0));
    }
    let workers = if opts.jobs == 0 { rayon::current_num_threads() } else { opts.jobs };
    let parts = if workers <= 1 { 1 } else { workers * 16 };
    let chunks = ProfileStream::chunks(n, p, parts)?;
    let first_blocked = AtomicUsize::new(usize::MAX);
    let stop = AtomicBool::new(false);
    let checked = AtomicU64::new(0);
    let witnesses: Mutex<Vec<(usize, Profile)>> = Mutex::new(Vec::new());
    let limit = opts.limit_profiles.unwrap_or(u64::MAX);

    let scan_chunk = |idx: usize, mut stream: ProfileStream| {
        let mut local = 0u64;
        let mut hint = None;
        while let Some(orders) = stream.next_orders() {
            if stop.load(Ordering::Relaxed) || first_blocked.load(Ordering::Relaxed) < idx {
                break;
            }
            local += 1;
            if local % 4096 == 0 {
                let total = checked.fetch_add(4096, Ordering::Relaxed) + 4096;
                let timed_out = opts.time_limit.is_some_and(|t| start.elapsed() > t);
                if total > limit || timed_out {
                    stop.store(true, Ordering::Relaxed);
                    break;
                }
            }
            if !checker.implementable_with_hint(&orders, &mut hint) {
                let owned: Vec<Vec<Outcome>> = orders.iter().map(|o| o.to_vec()).collect();
                let q = Profile::from_orders(&owned).expect("enumerated profile is valid");
                first_blocked.fetch_min(idx, Ordering::Relaxed);
                witnesses.lock().expect("no poisoned lock").push((idx, q));
                break;
            }
        }
        checked.fetch_add(local % 4096, Ordering::Relaxed);
    };

    let indexed: Vec<(usize, ProfileStream)> = chunks.into_iter().enumerate().collect();
    if workers <= 1 {
        for (idx, s) in indexed {
            scan_chunk(idx, s);
            if first_blocked.load(Ordering::Relaxed) != usize::MAX || stop.load(Ordering::Relaxed) {
                break;
            }
        }
    } else {
        use rayon::prelude::*;
        let run = || indexed.into_par_iter().for_each(|(idx, s)| scan_chunk(idx, s));
        if opts.jobs == 0 {
            run();
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?
                .install(run);
        }
    }

    let count = checked.load(Ordering::Relaxed);
    let mut found = witnesses.into_inner().expect("no poisoned lock");
    found.sort_by_key(|(idx, _)| *idx);
    if let Some((_, q)) = found.into_iter().next() {
        return Ok(Scan::Blocked(count, q));
    }
    if stop.load(Ordering::Relaxed) {
        return Ok(Scan::Limit(count));
    }
    Ok(Scan::AllPass(count))
}

/// Utilities of one agent over the outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityVector {
    #[serde(serialize_with = "serialize_rationals")]
    pub values: Vec<Rational>,
}

impl UtilityVector {
    /// Utilities sorted from worst to best.
    pub fn sorted(&self) -> Vec<Rational> {
        sort_ascending(&self.values)
    }
}

/// A zero-sum utility profile at which `Σ_i λ·sort(u_i) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CardinalViolation {
    pub utilities: Vec<UtilityVector>,
    #[serde(serialize_with = "serialize_rational")]
    pub value: Rational,
}

/// Samples integer utility profiles with entries in `[−range, range]`,
/// shifts them to zero column sums, and reports the first one where the
/// agents' sorted values under `λ` add up to something positive. Any such
/// profile proves `λ` infeasible; finding none proves nothing.
pub fn cardinal_falsifier(
    lambda: &RankLottery,
    n: usize,
    samples: usize,
    seed: u64,
    range: i64,
) -> Result<Option<CardinalViolation>> {
    if n == 0 || range <= 0 {
        return arg("need n >= 1 and a positive utility range");
    }
    let p = lambda.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = common_denominator(lambda.probs().iter());
    let weights: Vec<BigInt> = lambda
        .probs()
        .iter()
        .map(|x| (x * Rational::from_integer(den.clone())).to_integer())
        .collect();
    for _ in 0..samples {
        let raw: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-range..=range)).collect())
            .collect();
        let col: Vec<i64> = (0..p).map(|a| raw.iter().map(|u| u[a]).sum()).collect();
        let shifted: Vec<Vec<i64>> = raw
            .iter()
            .map(|u| u.iter().zip(&col).map(|(x, c)| n as i64 * x - c).collect())
            .collect();
        let mut total = BigInt::zero();
        for u in &shifted {
            let mut s = u.clone();
            s.sort_unstable();
            for (w, v) in weights.iter().zip(&s) {
                total += w * BigInt::from(*v);
            }
        }
        if total.is_positive() {
            let utilities = shifted
                .iter()
                .map(|u| UtilityVector {
                    values: u.iter().map(|&v| int(v)).collect(),
                })
                .collect();
            return Ok(Some(CardinalViolation {
                utilities,
                value: Rational::new(total, den),
            }));
        }
    }
    Ok(None)
}
