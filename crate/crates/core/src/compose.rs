//! Composition of guarantees with the veto and dictator operators, and the
//! canonical guarantees they generate.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::duality::dual;
use crate::error::{arg, Error, Result};
use crate::lottery::{uniform, RankLottery};
use crate::rational::{int, rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    VT,
    RD,
}

impl Letter {
    pub fn swapped(self) -> Self {
        match self {
            Letter::VT => Letter::RD,
            Letter::RD => Letter::VT,
        }
    }

    pub fn apply(self, lambda: &RankLottery, n: usize) -> Result<RankLottery> {
        match self {
            Letter::VT => vt_compose(lambda, n),
            Letter::RD => rd_compose(lambda, n),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::VT => "VT",
            Letter::RD => "RD",
        })
    }
}

impl FromStr for Letter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "VT" => Ok(Letter::VT),
            "RD" => Ok(Letter::RD),
            other => Err(Error::Parse {
                position: 0,
                message: format!("unknown operator {other:?}, expected VT or RD"),
            }),
        }
    }
}

/// A word `Γ¹…Γʰ` over `{VT, RD}` read in the context of `(n, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSequence {
    word: Vec<Letter>,
    n: usize,
    p: usize,
}

impl CanonicalSequence {
    pub fn new(word: Vec<Letter>, n: usize, p: usize) -> Result<Self> {
        if n < 2 || p <= n {
            return arg(format!("canonical guarantees need 2 <= n < p, got n = {n}, p = {p}"));
        }
        let d = (p - 1) / n;
        if word.is_empty() || word.len() > d {
            return arg(format!("word length {} outside 1..={d} for n = {n}, p = {p}", word.len()));
        }
        Ok(Self { word, n, p })
    }

    /// Parses `"RD,VT,VT"`.
    pub fn parse(text: &str, n: usize, p: usize) -> Result<Self> {
        let mut word = Vec::new();
        let mut pos = 0;
        for part in text.split(',') {
            let letter = part.parse::<Letter>().map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse { position: pos, message },
                other => other,
            })?;
            word.push(letter);
            pos += part.len() + 1;
        }
        Self::new(word, n, p)
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn h(&self) -> usize {
        self.word.len()
    }
    pub fn d(&self) -> usize {
        (self.p - 1) / self.n
    }
    pub fn q(&self) -> usize {
        self.p - self.d() * self.n
    }

    /// The word with every letter exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            word: self.word.iter().map(|l| l.swapped()).collect(),
            ..self.clone()
        }
    }

    /// The first `k` letters, in the same `(n, p)` context.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.word[..k.min(self.h())].to_vec(), self.n, self.p)
    }

    pub fn word_text(&self) -> String {
        self.word.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for CanonicalSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at (n = {}, p = {})", self.word_text(), self.n, self.p)
    }
}

/// `(0, λ, 0, …, 0)` with `n − 1` trailing zeros.
pub fn vt_compose(lambda: &RankLottery, n: usize) -> Result<RankLottery> {
    if n < 2 {
        return arg("composition needs n >= 2");
    }
    let mut probs = vec![Rational::zero()];
    probs.extend(lambda.probs().iter().cloned());
    probs.extend(std::iter::repeat_n(Rational::zero(), n - 1));
    Ok(RankLottery::from_probs_unchecked(probs))
}

/// Dictator composition of a lottery with a zero coordinate: `n − 1` worst
/// ranks and the best rank get `λ₊/(nλ₊ + 1)`, the rest is `λ` rescaled.
pub fn rd_compose_boundary(lambda: &RankLottery, n: usize) -> Result<RankLottery> {
    if n < 2 {
        return arg("composition needs n >= 2");
    }
    if !lambda.is_boundary() {
        return arg(format!("{lambda} has no zero coordinate"));
    }
    let top = lambda.max_coord();
    let den = int(n as i64) * &top + Rational::one();
    let fill = &top / &den;
    let mut probs = vec![fill.clone(); n - 1];
    probs.extend(lambda.probs().iter().map(|x| x / &den));
    probs.push(fill);
    Ok(RankLottery::from_probs_unchecked(probs))
}

/// `RD⊗λ = (VT⊗λ★)★`, valid for every `λ`.
pub fn rd_compose_via_duality(lambda: &RankLottery, n: usize) -> Result<RankLottery> {
    Ok(dual(&vt_compose(&dual(lambda), n)?))
}

pub fn rd_compose(lambda: &RankLottery, n: usize) -> Result<RankLottery> {
    if lambda.is_boundary() {
        rd_compose_boundary(lambda, n)
    } else {
        rd_compose_via_duality(lambda, n)
    }
}

/// `Γ¹⊗…⊗Γʰ`, with the innermost operator acting on `UNI((d−h)n + q)`.
pub fn canonical(seq: &CanonicalSequence) -> Result<RankLottery> {
    if seq.h() == 0 || seq.h() > seq.d() {
        return arg(format!("word length {} outside 1..={}", seq.h(), seq.d()));
    }
    let base = (seq.d() - seq.h()) * seq.n + seq.q();
    let mut lambda = uniform(base)?;
    for letter in seq.word.iter().rev() {
        lambda = letter.apply(&lambda, seq.n)?;
    }
    debug_assert_eq!(lambda.p(), seq.p);
    Ok(lambda)
}

/// Every canonical guarantee at `(n, p)`, shortest words first and `VT`
/// before `RD` within a length.
pub fn enumerate_canonical(n: usize, p: usize) -> Result<Vec<(CanonicalSequence, RankLottery)>> {
    if n < 2 || p <= n {
        return arg(format!("canonical guarantees need 2 <= n < p, got n = {n}, p = {p}"));
    }
    let d = (p - 1) / n;
    let mut out = Vec::new();
    for h in 1..=d {
        for bits in 0..1usize << h {
            let word = (0..h)
                .map(|i| if bits >> (h - 1 - i) & 1 == 1 { Letter::RD } else { Letter::VT })
                .collect();
            let seq = CanonicalSequence::new(word, n, p)?;
            let lambda = canonical(&seq)?;
            out.push((seq, lambda));
        }
    }
    Ok(out)
}

/// Rank of a list of rational vectors.
pub(crate) fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, piv);
        let head = rows[r].clone();
        for row in rows.iter_mut().skip(r + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &head[c];
            for (x, h) in row.iter_mut().zip(&head) {
                *x -= &f * h;
            }
        }
        r += 1;
    }
    r
}

pub fn affinely_independent(points: &[RankLottery]) -> bool {
    let Some(first) = points.first() else {
        return true;
    };
    let diffs: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|q| q.probs().iter().zip(first.probs()).map(|(a, b)| a - b).collect())
        .collect();
    rank(diffs) == points.len() - 1
}

/// `UNI(p)` followed by the canonical guarantees of every prefix of a full
/// word. These are the vertices of a `d`-simplex of maximal guarantees.
pub fn prefix_simplex(seq: &CanonicalSequence) -> Result<Vec<RankLottery>> {
    if seq.h() != seq.d() {
        return arg(format!("simplex needs a word of length d = {}, got {}", seq.d(), seq.h()));
    }
    let mut out = vec![uniform(seq.p)?];
    for k in 1..=seq.h() {
        out.push(canonical(&seq.prefix(k)?)?);
    }
    if !affinely_independent(&out) {
        return Err(Error::Internal(format!("simplex vertices for {seq} are affinely dependent")));
    }
    Ok(out)
}

/// Partition of the ranks into blocks peeled off by each operator of an
/// `RD`-headed word, and the support sizes of its prefixes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportTable {
    pub n: usize,
    pub p: usize,
    pub word: Vec<Letter>,
    /// `blocks[j]` holds the 1-based ranks of block `j + 1`; the last block
    /// is the `q` ranks left in the middle.
    pub blocks: Vec<Vec<usize>>,
    /// `flags[j]` is true when operator `j + 1` of the layout is `RD`.
    pub flags: Vec<bool>,
    /// `theta[k − 1]` for prefixes of length `k = 1..=h`.
    pub theta: Vec<usize>,
}

impl SupportTable {
    /// Ranks in the support of the length-`k` prefix.
    pub fn predicted_support(&self, k: usize) -> Vec<usize> {
        let mut ranks: Vec<usize> = self.blocks[0].clone();
        for j in 1..k {
            if self.flags[j] {
                ranks.extend(&self.blocks[j]);
            }
        }
        if !self.flags[k - 1] {
            for block in &self.blocks[k..] {
                ranks.extend(block);
            }
        }
        ranks.sort_unstable();
        ranks
    }

    /// Checks each prefix lottery is uniform with value `1/(Θ_k + n)` on the
    /// predicted support.
    pub fn validate(&self) -> Result<bool> {
        for k in 1..=self.word.len() {
            let seq = CanonicalSequence::new(self.word[..k].to_vec(), self.n, self.p)?;
            let lambda = canonical(&seq)?;
            let support = self.predicted_support(k);
            if support.len() != self.theta[k - 1] + self.n {
                return Ok(false);
            }
            let value = rat(1, support.len() as i64);
            for rank in 1..=self.p {
                let expected = if support.binary_search(&rank).is_ok() { value.clone() } else { Rational::zero() };
                if *lambda.get(rank) != expected {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

pub fn support_table(seq: &CanonicalSequence) -> Result<SupportTable> {
    if seq.word.first() != Some(&Letter::RD) {
        return arg("the support table is defined for words starting with RD");
    }
    let (n, p, d) = (seq.n, seq.p, seq.d());
    // Letters beyond the word only fix where the blocks sit; a prefix ending
    // at the word treats everything inside as one region.
    let mut layout = seq.word.clone();
    layout.resize(d, Letter::VT);

    let (mut lo, mut hi) = (1usize, p);
    let mut blocks = Vec::with_capacity(d + 1);
    for letter in &layout {
        let block: Vec<usize> = match letter {
            Letter::RD => {
                let b = (lo..lo + n - 1).chain(std::iter::once(hi)).collect();
                lo += n - 1;
                hi -= 1;
                b
            }
            Letter::VT => {
                let b = std::iter::once(lo).chain(hi + 2 - n..=hi).collect();
                lo += 1;
                hi -= n - 1;
                b
            }
        };
        blocks.push(block);
    }
    blocks.push((lo..=hi).collect());

    let flags: Vec<bool> = layout.iter().map(|&l| l == Letter::RD).collect();
    let theta = (1..=seq.h())
        .map(|k| {
            let inner = flags[1..k].iter().filter(|&&f| f).count();
            n * inner + if flags[k - 1] { 0 } else { p - k * n }
        })
        .collect();
    let table = SupportTable {
        n,
        p,
        word: seq.word.clone(),
        blocks,
        flags,
        theta,
    };
    if !table.validate()? {
        return Err(Error::Internal(format!("support table for {seq} disagrees with the lottery")));
    }
    Ok(table)
}

/// True when `λ` has the shape `(1/s)` on some set of ranks and zero elsewhere.
pub fn is_uniform_on_support(lambda: &RankLottery) -> bool {
    let mut value: Option<&Rational> = None;
    lambda.probs().iter().filter(|x| x.is_positive()).all(|x| *value.get_or_insert(x) == x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::{rd, vt};
    use proptest::prelude::*;
    use Letter::{RD, VT};

    fn lot(text: &str) -> RankLottery {
        RankLottery::parse(text).unwrap()
    }

    fn canon(word: &str, n: usize, p: usize) -> RankLottery {
        canonical(&CanonicalSequence::parse(word, n, p).unwrap()).unwrap()
    }

    #[test]
    fn composition_examples() {
        assert_eq!(vt_compose(&rd(3, 4).unwrap(), 3).unwrap(), lot("0,1/3,1/3,0,1/3,0,0"));
        assert_eq!(vt_compose(&uniform(4).unwrap(), 3).unwrap(), vt(3, 7).unwrap());
        assert_eq!(rd_compose(&vt(3, 4).unwrap(), 3).unwrap(), lot("1/4,1/4,0,1/4,0,0,1/4"));
        assert_eq!(rd_compose(&uniform(4).unwrap(), 3).unwrap(), rd(3, 7).unwrap());
        let l = lot("1/2,0,1/2");
        for n in 2..5 {
            let v = vt_compose(&l, n).unwrap();
            assert_eq!(v.p(), 3 + n);
        }
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canon("RD,VT,VT", 3, 11), lot("1/5,1/5,0,0,1/5,1/5,0,0,0,0,1/5"));
        assert_eq!(canon("RD,VT,RD", 3, 11), lot("1/6,1/6,0,1/6,1/6,0,0,1/6,0,0,1/6"));
        assert_eq!(canon("RD,VT", 3, 7), lot("1/4,1/4,0,1/4,0,0,1/4"));
        assert_eq!(canon("VT,RD", 3, 7), lot("0,1/3,1/3,0,1/3,0,0"));
        assert_eq!(canon("VT,VT", 3, 7), lot("0,0,1,0,0,0,0"));
        assert_eq!(canon("RD,RD", 3, 7), lot("1/6,1/6,1/6,1/6,0,1/6,1/6"));
        assert!(canonical(&CanonicalSequence { word: vec![VT; 3], n: 3, p: 7 }).is_err());
        assert!(CanonicalSequence::new(vec![VT; 3], 3, 7).is_err());
    }

    #[test]
    fn constant_words() {
        for n in 3..5 {
            for p in n + 1..=14 {
                let d = (p - 1) / n;
                for h in 1..=d {
                    let mut expect = vec![Rational::zero(); p];
                    for x in &mut expect[h..p - (n - 1) * h] {
                        *x = rat(1, (p - n * h) as i64);
                    }
                    let got = canonical(&CanonicalSequence::new(vec![VT; h], n, p).unwrap()).unwrap();
                    assert_eq!(got.probs(), &expect[..]);

                    let mut expect = vec![Rational::zero(); p];
                    let m = rat(1, (n * h) as i64);
                    for x in &mut expect[..(n - 1) * h] {
                        *x = m.clone();
                    }
                    for x in &mut expect[p - h..] {
                        *x = m.clone();
                    }
                    let got = canonical(&CanonicalSequence::new(vec![RD; h], n, p).unwrap()).unwrap();
                    assert_eq!(got.probs(), &expect[..]);
                }
            }
        }
    }

    #[test]
    fn enumeration() {
        let at6 = enumerate_canonical(3, 6).unwrap();
        let lots: Vec<_> = at6.iter().map(|(_, l)| l.clone()).collect();
        assert_eq!(lots, vec![vt(3, 6).unwrap(), rd(3, 6).unwrap()]);

        let at7 = enumerate_canonical(3, 7).unwrap();
        assert_eq!(at7.len(), 6);
        assert_eq!(at7[0].1, vt(3, 7).unwrap());
        assert_eq!(at7[1].1, rd(3, 7).unwrap());

        for n in 3..6 {
            for p in n + 1..=20 {
                let all = enumerate_canonical(n, p).unwrap();
                let d = (p - 1) / n;
                assert_eq!(all.len(), (1 << (d + 1)) - 2);
                for (seq, l) in &all {
                    assert!(is_uniform_on_support(l));
                    assert_eq!(canonical(&seq.swapped()).unwrap(), dual(l), "{seq}");
                }
            }
        }
    }

    #[test]
    fn simplices() {
        let s = prefix_simplex(&CanonicalSequence::new(vec![VT, RD], 3, 7).unwrap()).unwrap();
        assert_eq!(s, vec![uniform(7).unwrap(), lot("0,1/4,1/4,1/4,1/4,0,0"), lot("0,1/3,1/3,0,1/3,0,0")]);
        let s = prefix_simplex(&CanonicalSequence::new(vec![RD, VT], 3, 7).unwrap()).unwrap();
        assert_eq!(s, vec![uniform(7).unwrap(), lot("1/3,1/3,0,0,0,0,1/3"), lot("1/4,1/4,0,1/4,0,0,1/4")]);
        let s = prefix_simplex(&CanonicalSequence::new(vec![RD], 3, 6).unwrap()).unwrap();
        assert_eq!(s, vec![uniform(6).unwrap(), rd(3, 6).unwrap()]);
        for n in 3..5 {
            for p in n + 1..=16 {
                for (seq, _) in enumerate_canonical(n, p).unwrap() {
                    if seq.h() == seq.d() {
                        assert_eq!(prefix_simplex(&seq).unwrap().len(), seq.d() + 1);
                    }
                }
            }
        }
        assert!(prefix_simplex(&CanonicalSequence::new(vec![RD], 3, 7).unwrap()).is_err());
    }

    #[test]
    fn support_tables() {
        let t = support_table(&CanonicalSequence::new(vec![RD, VT], 3, 7).unwrap()).unwrap();
        assert_eq!(t.blocks, vec![vec![1, 2, 7], vec![3, 5, 6], vec![4]]);
        assert_eq!(t.predicted_support(2), vec![1, 2, 4, 7]);
        assert_eq!(t.theta, vec![0, 1]);

        let t = support_table(&CanonicalSequence::new(vec![RD; 3], 3, 11).unwrap()).unwrap();
        assert_eq!(t.blocks.last().unwrap().len(), 2);
        for k in 1..3 {
            let a = t.predicted_support(k);
            let b = t.predicted_support(k + 1);
            assert!(a.iter().all(|r| b.contains(r)));
        }
        assert!(t.blocks.last().unwrap().iter().all(|r| !t.predicted_support(3).contains(r)));

        for n in 3..6 {
            for p in n + 1..=22 {
                for (seq, l) in enumerate_canonical(n, p).unwrap() {
                    if seq.word()[0] != RD {
                        assert!(support_table(&seq).is_err());
                        continue;
                    }
                    let t = support_table(&seq).unwrap_or_else(|e| panic!("{seq}: {e}"));
                    let mut all: Vec<usize> = t.blocks.concat();
                    all.sort_unstable();
                    assert_eq!(all, (1..=p).collect::<Vec<_>>());
                    assert_eq!(t.predicted_support(seq.h()), l.support());
                }
            }
        }
    }

    #[test]
    fn rd_does_not_commute_with_mixing() {
        let a = vt(3, 4).unwrap();
        let b = rd(3, 4).unwrap();
        let half = rat(1, 2);
        let mixed_first = rd_compose(&a.mix(&b, &half).unwrap(), 3).unwrap();
        let composed_first = rd_compose(&a, 3).unwrap().mix(&rd_compose(&b, 3).unwrap(), &half).unwrap();
        assert_ne!(mixed_first, composed_first);
        assert_eq!(mixed_first, lot("2/9,2/9,1/18,2/9,0,1/18,2/9"));
    }

    fn arb_lottery(p: usize) -> impl Strategy<Value = RankLottery> {
        proptest::collection::vec(0u32..7, p).prop_filter_map("nonzero", |w| {
            let s: u32 = w.iter().sum();
            (s > 0).then(|| RankLottery::new(w.iter().map(|&x| rat(x as i64, s as i64)).collect()).unwrap())
        })
    }

    fn arb_boundary(p: usize) -> impl Strategy<Value = RankLottery> {
        (arb_lottery(p), 0..p).prop_map(move |(l, z)| {
            let mut probs = l.probs().to_vec();
            probs[z] = Rational::zero();
            let s: Rational = probs.iter().sum();
            if s.is_zero() {
                probs[(z + 1) % p] = Rational::one();
            } else {
                probs.iter_mut().for_each(|x| *x = &*x / &s);
            }
            RankLottery::new(probs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn boundary_formula_matches_duality(l in (2usize..8).prop_flat_map(arb_boundary), n in 2usize..5) {
            prop_assert_eq!(rd_compose_boundary(&l, n).unwrap(), rd_compose_via_duality(&l, n).unwrap());
        }

        #[test]
        fn duality_swaps_the_operators(l in (1usize..8).prop_flat_map(arb_lottery), n in 2usize..5) {
            prop_assert_eq!(dual(&vt_compose(&l, n).unwrap()), rd_compose(&dual(&l), n).unwrap());
        }

        #[test]
        fn vt_commutes_with_mixing(
            (a, b) in (1usize..7).prop_flat_map(|p| (arb_lottery(p), arb_lottery(p))),
            w in 0i64..=8,
            n in 2usize..5,
        ) {
            let w = rat(w, 8);
            let lhs = vt_compose(&a.mix(&b, &w).unwrap(), n).unwrap();
            let rhs = vt_compose(&a, n).unwrap().mix(&vt_compose(&b, n).unwrap(), &w).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
