//! Strict ordinal preference profiles.
//!
//! Outcomes are identified by `0..p` internally and printed 1-based. A
//! preference lists outcomes from worst to best, so the `k`-tail is simply
//! the first `k` entries.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, Error, Result};
use crate::lottery::RankLottery;
use crate::rational::{format_vector, parse_vector, rat, zero, Rational};

pub type Outcome = u8;

/// Largest number of outcomes handled by the bitmask representation of tails.
pub const MAX_OUTCOMES: usize = 63;

/// A strict order over outcomes, worst first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Preference {
    order: Vec<Outcome>,
}

impl Preference {
    pub fn new(order: Vec<Outcome>) -> Result<Self> {
        let p = order.len();
        if p == 0 || p > MAX_OUTCOMES {
            return arg(format!("preference over {p} outcomes not supported"));
        }
        let mut seen = vec![false; p];
        for &o in &order {
            let o = o as usize;
            if o >= p || seen[o] {
                return arg("preference is not a permutation of the outcomes");
            }
            seen[o] = true;
        }
        Ok(Self { order })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            order: (0..p as Outcome).collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.order.len()
    }

    /// Outcomes from worst to best.
    pub fn order(&self) -> &[Outcome] {
        &self.order
    }

    /// 1-based rank of an outcome (1 = worst).
    pub fn rank_of(&self, outcome: Outcome) -> usize {
        self.order
            .iter()
            .position(|&o| o == outcome)
            .expect("outcome belongs to the preference")
            + 1
    }

    pub fn outcome_at(&self, rank: usize) -> Outcome {
        self.order[rank - 1]
    }

    pub fn best(&self) -> Outcome {
        *self.order.last().expect("nonempty")
    }

    /// The `k` worst outcomes.
    pub fn k_tail(&self, k: usize) -> Result<Vec<Outcome>> {
        if k < 1 || k > self.p() {
            return arg(format!("tail size {k} outside 1..={}", self.p()));
        }
        Ok(self.order[..k].to_vec())
    }

    /// The `k` best outcomes.
    pub fn k_top(&self, k: usize) -> Vec<Outcome> {
        self.order[self.p() - k..].to_vec()
    }

    /// Bitmasks of the `k`-tails for `k = 1..=p` (index `k − 1`).
    pub fn tail_masks(&self) -> Vec<u64> {
        let mut acc = 0u64;
        self.order
            .iter()
            .map(|&o| {
                acc |= 1u64 << o;
                acc
            })
            .collect()
    }

    /// Applies an outcome relabeling `o ↦ map[o]`.
    pub fn relabel(&self, map: &[Outcome]) -> Self {
        Self {
            order: self.order.iter().map(|&o| map[o as usize]).collect(),
        }
    }

    /// Relabeling that sends this order to the identity.
    pub fn inverse(&self) -> Vec<Outcome> {
        let mut pos = vec![0; self.p()];
        for (r, &o) in self.order.iter().enumerate() {
            pos[o as usize] = r as Outcome;
        }
        pos
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Self { order }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|o| (o + 1).to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Preference({self})")
    }
}

/// An `n`-agent strict profile over a common outcome set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    prefs: Vec<Preference>,
    canonical: bool,
}

impl Profile {
    pub fn new(prefs: Vec<Preference>) -> Result<Self> {
        let Some(first) = prefs.first() else {
            return arg("a profile needs at least one agent");
        };
        let p = first.p();
        if prefs.iter().any(|q| q.p() != p) {
            return arg("agents rank different numbers of outcomes");
        }
        Ok(Self {
            prefs,
            canonical: false,
        })
    }

    /// Builds from 0-based orders, worst first.
    pub fn from_orders(orders: &[Vec<Outcome>]) -> Result<Self> {
        Self::new(
            orders
                .iter()
                .map(|o| Preference::new(o.clone()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn identical(n: usize, pref: Preference) -> Self {
        Self {
            prefs: vec![pref; n],
            canonical: false,
        }
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn p(&self) -> usize {
        self.prefs[0].p()
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn relabel(&self, map: &[Outcome]) -> Self {
        Self {
            prefs: self.prefs.iter().map(|q| q.relabel(map)).collect(),
            canonical: false,
        }
    }

    /// Orbit representative under agent permutations and outcome relabelings.
    pub fn canonicalize(&self) -> Profile {
        canonicalize(self)
    }

    /// Text form, e.g. `"1 2 3 / 2 3 1 / 3 1 2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut orders = Vec::new();
        let mut offset = 0usize;
        for piece in text.split(['/', '\n', ';']) {
            let start = offset;
            offset += piece.len() + 1;
            if piece.trim().is_empty() {
                continue;
            }
            let mut order = Vec::new();
            let mut pos = start;
            for tok in piece.split(' ') {
                let here = pos;
                pos += tok.len() + 1;
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                let v: usize = tok.parse().map_err(|_| Error::Parse {
                    position: here,
                    message: format!("invalid outcome id {tok:?}"),
                })?;
                if v == 0 || v > MAX_OUTCOMES {
                    return Err(Error::Parse {
                        position: here,
                        message: format!("outcome id {v} out of range"),
                    });
                }
                order.push((v - 1) as Outcome);
            }
            let pref = Preference::new(order).map_err(|e| Error::Parse {
                position: start,
                message: e.to_string(),
            })?;
            orders.push(pref);
        }
        Profile::new(orders).map_err(|e| Error::Parse {
            position: 0,
            message: e.to_string(),
        })
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.prefs.iter().map(|q| q.to_string()).collect();
        f.write_str(&parts.join(" / "))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({self})")
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for Profile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// A lottery over outcomes, indexed by outcome id.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OutcomeLottery {
    mass: Vec<Rational>,
}

impl OutcomeLottery {
    pub fn new(mass: Vec<Rational>) -> Result<Self> {
        if mass.is_empty() {
            return arg("empty outcome lottery");
        }
        if mass.iter().any(|m| m.is_negative()) {
            return arg("negative outcome probability");
        }
        let total: Rational = mass.iter().sum();
        if !total.is_one() {
            return arg(format!("outcome probabilities sum to {total}"));
        }
        Ok(Self { mass })
    }

    pub fn uniform(p: usize) -> Self {
        Self {
            mass: vec![rat(1, p as i64); p],
        }
    }

    /// Uniform over a nonempty set of outcomes.
    pub fn uniform_on(p: usize, outcomes: &[Outcome]) -> Result<Self> {
        let mut set: Vec<Outcome> = outcomes.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() || set.iter().any(|&o| o as usize >= p) {
            return arg("uniform support must be a nonempty set of outcomes");
        }
        let w = rat(1, set.len() as i64);
        let mut mass = vec![zero(); p];
        for o in set {
            mass[o as usize] = w.clone();
        }
        Ok(Self { mass })
    }

    pub fn point(p: usize, outcome: Outcome) -> Self {
        let mut mass = vec![zero(); p];
        mass[outcome as usize] = Rational::one();
        Self { mass }
    }

    pub fn p(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[Rational] {
        &self.mass
    }

    pub fn of(&self, outcome: Outcome) -> &Rational {
        &self.mass[outcome as usize]
    }

    /// Total mass on a set of outcomes.
    pub fn mass_on(&self, outcomes: &[Outcome]) -> Rational {
        outcomes.iter().map(|&o| &self.mass[o as usize]).sum()
    }

    /// Applies an outcome relabeling `o ↦ map[o]`.
    pub fn relabel(&self, map: &[Outcome]) -> Self {
        let mut mass = vec![zero(); self.p()];
        for (o, m) in self.mass.iter().enumerate() {
            mass[map[o] as usize] = m.clone();
        }
        Self { mass }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_vector(text)?)
    }
}

impl fmt::Display for OutcomeLottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_vector(&self.mass))
    }
}

impl fmt::Debug for OutcomeLottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OutcomeLottery({self})")
    }
}

impl Serialize for OutcomeLottery {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The `k` worst outcomes of `pref`.
pub fn k_tail(pref: &Preference, k: usize) -> Result<Vec<Outcome>> {
    pref.k_tail(k)
}

/// Rank-ordered rearrangement: rank `k` receives the mass of the outcome the
/// agent ranks `k`-th from the bottom.
pub fn rank_rearrange(lottery: &OutcomeLottery, pref: &Preference) -> Result<RankLottery> {
    if lottery.p() != pref.p() {
        return arg("outcome lottery and preference disagree on p");
    }
    RankLottery::new(
        pref.order()
            .iter()
            .map(|&o| lottery.of(o).clone())
            .collect(),
    )
}

/// Canonical form together with the relabeling `old outcome ↦ new outcome`
/// and, for each new agent slot, the original agent index.
pub fn canonicalize_with_map(profile: &Profile) -> (Profile, Vec<Outcome>, Vec<usize>) {
    let n = profile.n();
    let mut best: Option<(Vec<Vec<Outcome>>, Vec<Outcome>, Vec<usize>)> = None;
    for pivot in 0..n {
        let map = profile.prefs[pivot].inverse();
        let mut others: Vec<(Vec<Outcome>, usize)> = (0..n)
            .filter(|&i| i != pivot)
            .map(|i| (profile.prefs[i].relabel(&map).order, i))
            .collect();
        others.sort();
        let key: Vec<Vec<Outcome>> = others.iter().map(|(o, _)| o.clone()).collect();
        let better = match &best {
            None => true,
            Some((k, _, _)) => key < *k,
        };
        if better {
            let mut agents = vec![pivot];
            agents.extend(others.iter().map(|(_, i)| *i));
            best = Some((key, map, agents));
        }
    }
    let (key, map, agents) = best.expect("at least one agent");
    let mut prefs = vec![Preference::identity(profile.p())];
    prefs.extend(key.into_iter().map(|order| Preference { order }));
    (
        Profile {
            prefs,
            canonical: true,
        },
        map,
        agents,
    )
}

/// Orbit representative under (agent permutations) × (outcome relabelings):
/// the lexicographic minimum over pivot agents `j` of the profile relabeled so
/// that agent `j` becomes the identity, with the other agents sorted.
pub fn canonicalize(profile: &Profile) -> Profile {
    canonicalize_with_map(profile).0
}

/// All permutations of `0..p` in lexicographic order.
pub fn all_permutations(p: usize) -> Vec<Vec<Outcome>> {
    let mut out = Vec::new();
    let mut cur: Vec<Outcome> = (0..p as Outcome).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..p).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..p).rev().find(|&j| cur[j] > cur[i - 1]).expect("exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Orders of the non-pivot agents of a candidate, relabeled for `pivot`, and
/// compared against the candidate's own key.
fn beats_candidate(
    perms: &[Vec<Outcome>],
    idx: &[usize],
    pivot: usize,
    scratch: &mut Vec<Vec<Outcome>>,
) -> bool {
    // agents: 0 is the identity, agent a >= 1 is perms[idx[a - 1]]
    let n = idx.len() + 1;
    let pivot_order = &perms[idx[pivot - 1]];
    let p = pivot_order.len();
    let mut pos = [0 as Outcome; MAX_OUTCOMES + 1];
    for (r, &o) in pivot_order.iter().enumerate() {
        pos[o as usize] = r as Outcome;
    }
    scratch.clear();
    for a in 0..n {
        if a == pivot {
            continue;
        }
        let seq: Vec<Outcome> = if a == 0 {
            pos[..p].to_vec()
        } else {
            perms[idx[a - 1]].iter().map(|&o| pos[o as usize]).collect()
        };
        scratch.push(seq);
    }
    scratch.sort_unstable();
    for (mine, theirs) in idx.iter().map(|&i| &perms[i]).zip(scratch.iter()) {
        match theirs.cmp(mine) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

fn is_canonical_indices(perms: &[Vec<Outcome>], idx: &[usize], scratch: &mut Vec<Vec<Outcome>>) -> bool {
    (1..=idx.len()).all(|pivot| !beats_candidate(perms, idx, pivot, scratch))
}

/// Restartable cursor over canonical profiles, restricted to a range of the
/// second agent's permutation index so that the stream can be split into
/// disjoint chunks.
pub struct ProfileStream {
    n: usize,
    p: usize,
    perms: Arc<Vec<Vec<Outcome>>>,
    idx: Vec<usize>,
    first_end: usize,
    started: bool,
    done: bool,
    scratch: Vec<Vec<Outcome>>,
}

impl ProfileStream {
    fn with_range(n: usize, p: usize, perms: Arc<Vec<Vec<Outcome>>>, start: usize, end: usize) -> Self {
        let k = n.saturating_sub(1);
        let done = (k > 0 && start >= end) || (k == 0 && start > 0);
        Self {
            n,
            p,
            perms,
            idx: vec![start; k],
            first_end: end,
            started: false,
            done,
            scratch: Vec::new(),
        }
    }

    /// Splits the full stream into at most `parts` disjoint chunks.
    pub fn chunks(n: usize, p: usize, parts: usize) -> Result<Vec<ProfileStream>> {
        check_np(n, p)?;
        let perms = Arc::new(all_permutations(p));
        if n == 1 {
            return Ok(vec![Self::with_range(n, p, perms, 0, 1)]);
        }
        let total = perms.len();
        let parts = parts.clamp(1, total);
        let mut out = Vec::with_capacity(parts);
        for c in 0..parts {
            let a = total * c / parts;
            let b = total * (c + 1) / parts;
            if a < b {
                out.push(Self::with_range(n, p, perms.clone(), a, b));
            }
        }
        Ok(out)
    }

    fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        let k = self.idx.len();
        if !self.started {
            self.started = true;
            return true;
        }
        if k == 0 {
            self.done = true;
            return false;
        }
        let total = self.perms.len();
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if self.idx[pos] + 1 < total {
                self.idx[pos] += 1;
                let v = self.idx[pos];
                for slot in self.idx.iter_mut().skip(pos + 1) {
                    *slot = v;
                }
                if self.idx[0] >= self.first_end {
                    self.done = true;
                    return false;
                }
                return true;
            }
        }
        self.done = true;
        false
    }

    /// Advances to the next canonical profile and returns the agent orders.
    pub fn next_orders(&mut self) -> Option<Vec<&[Outcome]>> {
        loop {
            if !self.advance() {
                return None;
            }
            if is_canonical_indices(&self.perms, &self.idx, &mut self.scratch) {
                break;
            }
        }
        let mut orders: Vec<&[Outcome]> = Vec::with_capacity(self.n);
        orders.push(&self.perms[0]);
        orders.extend(self.idx.iter().map(|&i| self.perms[i].as_slice()));
        Some(orders)
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

impl Iterator for ProfileStream {
    type Item = Profile;

    fn next(&mut self) -> Option<Profile> {
        let orders = self.next_orders()?;
        let prefs = orders
            .into_iter()
            .map(|o| Preference { order: o.to_vec() })
            .collect();
        Some(Profile {
            prefs,
            canonical: true,
        })
    }
}

fn check_np(n: usize, p: usize) -> Result<()> {
    if n < 1 || p < 2 {
        return arg(format!("enumeration needs n >= 1 and p >= 2, got n = {n}, p = {p}"));
    }
    if p > 10 {
        return arg(format!("exhaustive enumeration over {p} outcomes is not supported"));
    }
    Ok(())
}

/// Every canonical `(n, p)` profile exactly once.
pub fn enumerate_profiles(n: usize, p: usize) -> Result<ProfileStream> {
    Ok(ProfileStream::chunks(n, p, 1)?.remove(0))
}

pub fn count_canonical_profiles(n: usize, p: usize) -> Result<u64> {
    let mut s = enumerate_profiles(n, p)?;
    let mut count = 0;
    while s.next_orders().is_some() {
        count += 1;
    }
    Ok(count)
}

/// Which side the new outcomes occupy when padding a profile with `n` extra
/// outcomes arranged cyclically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadLayout {
    /// Agent `i` ranks `a_i` worst, the inner profile next, and the other new
    /// outcomes at the top: `a_i, π_i, a_{i+1}, …, a_{i+n−1}`.
    Veto,
    /// Agent `i` ranks `a_i, …, a_{i+n−2}` at the bottom, the inner profile
    /// next and `a_{i+n−1}` at the top.
    Dictator,
}

/// `(n, p + n)`-profile placing one new outcome at the worst rank of each
/// agent, cyclically, with the inner profile in ranks `2..=p+1`. The new
/// outcomes get ids `p..p+n`.
pub fn cyclic_pad_profile(inner: &Profile) -> Result<Profile> {
    pad_profile(inner, PadLayout::Veto)
}

pub fn pad_profile(inner: &Profile, layout: PadLayout) -> Result<Profile> {
    let n = inner.n();
    let p = inner.p();
    if p + n > MAX_OUTCOMES {
        return arg("padded profile too large");
    }
    let extra = |i: usize| (p + i % n) as Outcome;
    let prefs = inner
        .prefs
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut order = Vec::with_capacity(p + n);
            match layout {
                PadLayout::Veto => {
                    order.push(extra(i));
                    order.extend_from_slice(&q.order);
                    order.extend((1..n).map(|j| extra(i + j)));
                }
                PadLayout::Dictator => {
                    order.extend((0..n - 1).map(|j| extra(i + j)));
                    order.extend_from_slice(&q.order);
                    order.push(extra(i + n - 1));
                }
            }
            Preference { order }
        })
        .collect();
    Profile::new(prefs)
}

/// Agent `i` holds the identity order rotated left by `i·shift`.
pub fn cyclic_shift_profile(n: usize, p: usize, shift: usize) -> Profile {
    let prefs = (0..n)
        .map(|i| Preference {
            order: (0..p).map(|r| ((r + i * shift) % p) as Outcome).collect(),
        })
        .collect();
    Profile {
        prefs,
        canonical: false,
    }
}
