//! Rank lotteries: probability vectors over ranks `1..=p`, rank 1 being the
//! worst outcome of an agent.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, Error, Result};
use crate::rational::{format_vector, one, parse_vector, rat, zero, Rational};

/// A probability distribution over ranks, worst rank first.
///
/// Entries are exact, nonnegative and sum to exactly one. Equality is
/// structural because rationals are kept in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RankLottery {
    probs: Vec<Rational>,
}

impl RankLottery {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return arg("a lottery needs at least one rank");
        }
        if let Some(k) = probs.iter().position(|x| x.is_negative()) {
            return arg(format!("rank {} has negative probability", k + 1));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return arg(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    /// Number of ranks.
    pub fn p(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// Probability of rank `k` (1-based).
    pub fn get(&self, k: usize) -> &Rational {
        &self.probs[k - 1]
    }

    /// `[λ]_{k1}^{k2}`, the total mass of ranks `k1..=k2`.
    pub fn partial_sum(&self, k1: usize, k2: usize) -> Result<Rational> {
        let p = self.p();
        if k1 < 1 || k1 > k2 || k2 > p {
            return arg(format!("rank range {k1}..={k2} invalid for p = {p}"));
        }
        Ok(self.probs[k1 - 1..k2].iter().sum())
    }

    /// Lower cumulative sums `[λ]_1^k` for `k = 1..=p`.
    pub fn cumulative(&self) -> Vec<Rational> {
        let mut acc = zero();
        self.probs
            .iter()
            .map(|x| {
                acc += x;
                acc.clone()
            })
            .collect()
    }

    /// Builds a lottery from its lower cumulative sums; the last entry must be 1.
    pub fn from_cumulative(cum: &[Rational]) -> Result<Self> {
        let mut prev = zero();
        let mut probs = Vec::with_capacity(cum.len());
        for c in cum {
            probs.push(c - &prev);
            prev = c.clone();
        }
        Self::new(probs)
    }

    /// Mirror image with respect to the middle rank.
    pub fn reflect(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self { probs }
    }

    /// `self ⊢ other`: every lower cumulative sum of `self` is at most that of
    /// `other`.
    pub fn dominates(&self, other: &Self) -> Result<bool> {
        if self.p() != other.p() {
            return arg(format!(
                "dimension mismatch: {} vs {} ranks",
                self.p(),
                other.p()
            ));
        }
        let mut a = zero();
        let mut b = zero();
        for (x, y) in self.probs.iter().zip(&other.probs) {
            a += x;
            b += y;
            if a > b {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Dominates and differs.
    pub fn strictly_dominates(&self, other: &Self) -> Result<bool> {
        Ok(self != other && self.dominates(other)?)
    }

    pub fn is_symmetric(&self) -> bool {
        let p = self.p();
        (0..p / 2).all(|k| self.probs[k] == self.probs[p - 1 - k])
    }

    /// Largest coordinate `λ_+`.
    pub fn max_coord(&self) -> Rational {
        self.probs.iter().max().cloned().unwrap_or_else(zero)
    }

    pub fn min_coord(&self) -> Rational {
        self.probs.iter().min().cloned().unwrap_or_else(zero)
    }

    /// On the boundary of the simplex: some rank has probability zero.
    pub fn is_boundary(&self) -> bool {
        self.probs.iter().any(|x| x.is_zero())
    }

    pub fn is_uniform(&self) -> bool {
        let u = rat(1, self.p() as i64);
        self.probs.iter().all(|x| *x == u)
    }

    /// Ranks (1-based) with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (1..=self.p()).filter(|&k| !self.probs[k - 1].is_zero()).collect()
    }

    pub fn dot(&self, z: &[Rational]) -> Result<Rational> {
        if z.len() != self.p() {
            return arg("vector length differs from the number of ranks");
        }
        Ok(self.probs.iter().zip(z).map(|(a, b)| a * b).sum())
    }

    /// `weight·self + (1 − weight)·other`.
    pub fn mix(&self, other: &Self, weight: &Rational) -> Result<Self> {
        if self.p() != other.p() {
            return arg("cannot mix lotteries of different sizes");
        }
        if weight.is_negative() || *weight > one() {
            return arg(format!("mixing weight {weight} outside [0, 1]"));
        }
        let rest = one() - weight;
        Self::new(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| a * weight + b * &rest)
                .collect(),
        )
    }

    /// Convex combination with exact weights summing to one.
    pub fn convex_combination(parts: &[(Rational, RankLottery)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return arg("empty convex combination");
        };
        let p = first.p();
        let mut probs = vec![zero(); p];
        let mut total = zero();
        for (w, l) in parts {
            if l.p() != p {
                return arg("cannot combine lotteries of different sizes");
            }
            if w.is_negative() {
                return arg("negative convex weight");
            }
            total += w;
            for (acc, x) in probs.iter_mut().zip(&l.probs) {
                *acc += w * x;
            }
        }
        if !total.is_one() {
            return arg(format!("convex weights sum to {total}"));
        }
        Self::new(probs)
    }

    /// Parses the comma-separated text format, e.g. `"0,1/3,1/3,1/3,0,0"`.
    pub fn parse(text: &str) -> Result<Self> {
        let probs = parse_vector(text)?;
        Self::new(probs).map_err(|e| match e {
            Error::Argument(m) => Error::Parse {
                position: 0,
                message: m,
            },
            other => other,
        })
    }

    pub(crate) fn from_probs_unchecked(probs: Vec<Rational>) -> Self {
        debug_assert!(Self::new(probs.clone()).is_ok());
        Self { probs }
    }
}

impl fmt::Display for RankLottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_vector(&self.probs))
    }
}

impl fmt::Debug for RankLottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RankLottery({self})")
    }
}

impl FromStr for RankLottery {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for RankLottery {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RankLottery {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// `UNI(p)`: every rank has probability `1/p`.
pub fn uniform(p: usize) -> Result<RankLottery> {
    if p == 0 {
        return arg("p must be positive");
    }
    Ok(RankLottery::from_probs_unchecked(vec![rat(1, p as i64); p]))
}

/// `VT(n, p)`: one veto per agent, then a uniform draw among the survivors.
pub fn vt(n: usize, p: usize) -> Result<RankLottery> {
    if n < 1 || n >= p {
        return arg(format!("VT(n, p) needs 1 <= n < p, got n = {n}, p = {p}"));
    }
    let mass = rat(1, (p - n) as i64);
    let mut probs = vec![zero(); p];
    for x in probs.iter_mut().take(p - n + 1).skip(1) {
        *x = mass.clone();
    }
    Ok(RankLottery::from_probs_unchecked(probs))
}

/// `RD(n, p)`: `1/n` on the `n − 1` worst ranks and on the best rank.
pub fn rd(n: usize, p: usize) -> Result<RankLottery> {
    if n < 1 || n >= p {
        return arg(format!("RD(n, p) needs 1 <= n < p, got n = {n}, p = {p}"));
    }
    let mass = rat(1, n as i64);
    let mut probs = vec![zero(); p];
    for x in probs.iter_mut().take(n - 1) {
        *x = mass.clone();
    }
    probs[p - 1] = mass;
    Ok(RankLottery::from_probs_unchecked(probs))
}

/// Point mass on rank `k` (1-based).
pub fn point_mass(p: usize, k: usize) -> Result<RankLottery> {
    if k < 1 || k > p {
        return arg(format!("rank {k} outside 1..={p}"));
    }
    let mut probs = vec![zero(); p];
    probs[k - 1] = one();
    Ok(RankLottery::from_probs_unchecked(probs))
}

/// Extreme points of the maximal set for two agents: `½` on ranks `t` and
/// `p + 1 − t` for `t = 1..=⌊p/2⌋`, plus the middle point mass when `p` is odd.
pub fn m2_vertices(p: usize) -> Result<Vec<RankLottery>> {
    if p < 2 {
        return arg("p must be at least 2");
    }
    let half = rat(1, 2);
    let mut out = Vec::new();
    for t in 1..=p / 2 {
        let mut probs = vec![zero(); p];
        probs[t - 1] = half.clone();
        probs[p - t] = half.clone();
        out.push(RankLottery::from_probs_unchecked(probs));
    }
    if p % 2 == 1 {
        out.push(point_mass(p, p.div_ceil(2))?);
    }
    Ok(out)
}

/// Exact two-agent feasibility test: `[λ]_1^k ≥ [λ]_{p+1−k}^p` for
/// `k = 1..=⌊p/2⌋`.
pub fn feasible_n2(lottery: &RankLottery) -> bool {
    first_n2_violation(lottery).is_none()
}

/// First `k` violating the two-agent inequality, if any.
pub fn first_n2_violation(lottery: &RankLottery) -> Option<usize> {
    let p = lottery.p();
    (1..=p / 2).find(|&k| {
        let low = lottery.partial_sum(1, k).expect("valid range");
        let high = lottery.partial_sum(p + 1 - k, p).expect("valid range");
        low < high
    })
}

/// A random lottery whose probabilities are multiples of `1/total` for a
/// random `total`, with integer weights in `0..=grain`.
pub fn random_lottery<R: rand::Rng>(rng: &mut R, p: usize, grain: u32) -> RankLottery {
    loop {
        let w: Vec<u32> = (0..p).map(|_| rng.gen_range(0..=grain)).collect();
        let total: u32 = w.iter().sum();
        if total > 0 {
            return RankLottery::from_probs_unchecked(w.iter().map(|&x| rat(x as i64, total as i64)).collect());
        }
    }
}

/// A random lottery with at least one zero coordinate.
pub fn random_boundary_lottery<R: rand::Rng>(rng: &mut R, p: usize, grain: u32) -> RankLottery {
    loop {
        let mut w: Vec<u32> = (0..p).map(|_| rng.gen_range(0..=grain)).collect();
        let z = rng.gen_range(0..p);
        w[z] = 0;
        let total: u32 = w.iter().sum();
        if total > 0 {
            return RankLottery::from_probs_unchecked(w.iter().map(|&x| rat(x as i64, total as i64)).collect());
        }
    }
}

/// Ascending rearrangement of a utility vector.
pub fn sort_ascending(u: &[Rational]) -> Vec<Rational> {
    let mut v = u.to_vec();
    v.sort();
    v
}

/// `λ · sort(u)`: expected utility of the worst-case rank distribution.
pub fn sorted_value(lottery: &RankLottery, u: &[Rational]) -> Result<Rational> {
    lottery.dot(&sort_ascending(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lot(s: &str) -> RankLottery {
        RankLottery::parse(s).unwrap()
    }

    #[test]
    fn partial_sums() {
        let v = vt(3, 6).unwrap();
        assert_eq!(v.partial_sum(1, 2).unwrap(), rat(1, 3));
        assert_eq!(v.partial_sum(1, 6).unwrap(), one());
        assert_eq!(uniform(6).unwrap().partial_sum(1, 3).unwrap(), rat(1, 2));
        assert!(v.partial_sum(0, 2).is_err());
        assert!(v.partial_sum(3, 2).is_err());
        assert!(v.partial_sum(1, 7).is_err());
    }

    #[test]
    fn named_constructors() {
        assert_eq!(vt(3, 6).unwrap(), lot("0,1/3,1/3,1/3,0,0"));
        assert_eq!(rd(3, 6).unwrap(), lot("1/3,1/3,0,0,0,1/3"));
        assert_eq!(rd(2, 6).unwrap(), lot("1/2,0,0,0,0,1/2"));
        assert!(vt(6, 6).is_err());
        assert!(rd(7, 6).is_err());
    }

    #[test]
    fn reflection() {
        assert_eq!(lot("0,1/3,1/3,1/3,0,0").reflect(), lot("0,0,1/3,1/3,1/3,0"));
        assert_eq!(uniform(5).unwrap().reflect(), uniform(5).unwrap());
    }

    #[test]
    fn dominance_examples() {
        let vt36 = vt(3, 6).unwrap();
        assert!(vt36.dominates(&lot("0,1,0,0,0,0")).unwrap());
        assert!(vt36.dominates(&vt36).unwrap());
        assert!(uniform(6)
            .unwrap()
            .dominates(&lot("1/6,1/3,1/6,1/6,0,1/6"))
            .unwrap());
        assert!(vt36.dominates(&uniform(5).unwrap()).is_err());
    }

    #[test]
    fn symmetric_and_m2() {
        let v = m2_vertices(6).unwrap();
        assert_eq!(
            v,
            vec![
                lot("1/2,0,0,0,0,1/2"),
                lot("0,1/2,0,0,1/2,0"),
                lot("0,0,1/2,1/2,0,0")
            ]
        );
        assert_eq!(m2_vertices(5).unwrap().last().unwrap(), &lot("0,0,1,0,0"));
        assert!(uniform(7).unwrap().is_symmetric());
        assert!(!vt(3, 6).unwrap().is_symmetric());
    }

    #[test]
    fn two_agent_feasibility() {
        assert!(feasible_n2(&lot("1/2,0,0,0,0,1/2")));
        assert!(!feasible_n2(&point_mass(6, 6).unwrap()));
        for p in 2..9 {
            assert!(feasible_n2(&uniform(p).unwrap()));
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(RankLottery::parse("1/2,1/3").is_err());
        assert!(RankLottery::parse("-1,2").is_err());
        assert!(RankLottery::parse("").is_err());
    }

    fn arb_lottery(p: usize) -> impl Strategy<Value = RankLottery> {
        proptest::collection::vec(0u32..7, p).prop_filter_map("nonzero", |w| {
            let total: u32 = w.iter().sum();
            (total > 0).then(|| {
                RankLottery::new(w.iter().map(|&x| rat(x as i64, total as i64)).collect())
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn reflect_is_involution(l in arb_lottery(6)) {
            prop_assert_eq!(l.reflect().reflect(), l);
        }

        #[test]
        fn dominance_partial_order(a in arb_lottery(5), b in arb_lottery(5), c in arb_lottery(5)) {
            prop_assert!(a.dominates(&a).unwrap());
            if a.dominates(&b).unwrap() && b.dominates(&a).unwrap() {
                prop_assert_eq!(&a, &b);
            }
            if a.dominates(&b).unwrap() && b.dominates(&c).unwrap() {
                prop_assert!(a.dominates(&c).unwrap());
            }
        }

        #[test]
        fn dominance_survives_mixing(
            a in arb_lottery(5), b in arb_lottery(5), c in arb_lottery(5), d in arb_lottery(5),
            w in 0i64..=8,
        ) {
            let w = rat(w, 8);
            if a.dominates(&b).unwrap() && c.dominates(&d).unwrap() {
                let left = a.mix(&c, &w).unwrap();
                let right = b.mix(&d, &w).unwrap();
                prop_assert!(left.dominates(&right).unwrap());
            }
        }

        #[test]
        fn text_round_trip(l in arb_lottery(7)) {
            prop_assert_eq!(RankLottery::parse(&l.to_string()).unwrap(), l);
        }
    }
}
