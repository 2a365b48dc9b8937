//! Game forms built from veto rounds, random dictatorship, uniform draws and
//! covering lotteries, with exact worst-case evaluation.
//!
//! A protocol is a list of stages acting on the set of surviving outcomes.
//! Each stage turns the current set into a probability distribution over
//! smaller sets; whatever survives the last stage is drawn uniformly. Agent
//! 1 plays its safe strategy while the other agents may report anything.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lottery::RankLottery;
use crate::profile::{all_permutations, Outcome, OutcomeLottery, Preference, Profile};
use crate::rational::{rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverStage {
    /// Number of outcomes picked.
    pub size: usize,
    /// Each agent reports its `depth` best (or worst) surviving outcomes.
    pub depth: usize,
    pub side: Side,
    /// Meet every reported set in at most one outcome instead of at least one.
    pub at_most_one: bool,
    /// Draw from the outcomes left after removing the picked ones.
    pub complement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    /// Every agent vetoes `tokens` surviving outcomes, simultaneously.
    Veto { tokens: usize },
    /// Every agent names a surviving outcome. Without padding one agent is
    /// drawn as dictator. With padding the named outcomes are kept, topped up
    /// to `n` outcomes unless everyone named the same one.
    RandomDictator { pad: bool },
    Uniform,
    Cover(CoverStage),
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Veto { tokens } => write!(f, "veto({tokens})"),
            Stage::RandomDictator { pad: true } => f.write_str("rd(pad)"),
            Stage::RandomDictator { pad: false } => f.write_str("rd"),
            Stage::Uniform => f.write_str("uniform"),
            Stage::Cover(c) => {
                let side = match c.side {
                    Side::Top => "top",
                    Side::Bottom => "bottom",
                };
                write!(f, "cover({},{}{}", c.size, side, c.depth)?;
                if c.at_most_one {
                    f.write_str(",atmost1")?;
                }
                if c.complement {
                    f.write_str(",complement")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn parse_stage(text: &str, offset: usize) -> Result<Stage> {
    let err = |message: String| Error::Parse { position: offset, message };
    let t = text.trim();
    let (name, args) = match t.find('(') {
        Some(i) => {
            let inner = t[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| err(format!("missing ')' in {t:?}")))?;
            (&t[..i], inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect::<Vec<_>>())
        }
        None => (t, Vec::new()),
    };
    let number = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected a number, got {s:?}")));
    match (name.trim().to_ascii_lowercase().as_str(), args.as_slice()) {
        ("veto", [n]) => Ok(Stage::Veto { tokens: number(n)? }),
        ("veto", []) => Ok(Stage::Veto { tokens: 1 }),
        ("rd", []) => Ok(Stage::RandomDictator { pad: false }),
        ("rd", ["pad"]) => Ok(Stage::RandomDictator { pad: true }),
        ("uniform", []) => Ok(Stage::Uniform),
        ("cover", [size, which, flags @ ..]) => {
            let (side, depth) = if let Some(d) = which.strip_prefix("top") {
                (Side::Top, d)
            } else if let Some(d) = which.strip_prefix("bottom") {
                (Side::Bottom, d)
            } else {
                return Err(err(format!("expected topK or bottomK, got {which:?}")));
            };
            let mut c = CoverStage {
                size: number(size)?,
                depth: number(depth.trim())?,
                side,
                at_most_one: false,
                complement: false,
            };
            for flag in flags {
                match *flag {
                    "atmost1" => c.at_most_one = true,
                    "complement" => c.complement = true,
                    other => return Err(err(format!("unknown cover flag {other:?}"))),
                }
            }
            Ok(Stage::Cover(c))
        }
        _ => Err(err(format!("unknown stage {t:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtocolSpec {
    pub stages: Vec<Stage>,
}

impl ProtocolSpec {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return arg("a protocol needs at least one stage");
        }
        for s in &stages {
            match s {
                Stage::Veto { tokens: 0 } => return arg("a veto round needs at least one token"),
                Stage::Cover(c) if c.size == 0 || c.depth == 0 => return arg("cover size and depth must be positive"),
                _ => {}
            }
        }
        Ok(Self { stages })
    }

    /// Parses `"veto(1); rd(pad); uniform"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut stages = Vec::new();
        let mut offset = 0;
        for part in text.split(';') {
            if !part.trim().is_empty() {
                stages.push(parse_stage(part, offset)?);
            }
            offset += part.len() + 1;
        }
        Self::new(stages)
    }

    /// Checks the protocol makes sense for `n` agents and `p` outcomes.
    pub fn check(&self, n: usize, p: usize) -> Result<()> {
        if n < 1 || p < 1 || p > 63 {
            return arg(format!("unsupported dimensions n = {n}, p = {p}"));
        }
        let vetoes: usize = self
            .stages
            .iter()
            .map(|s| if let Stage::Veto { tokens } = s { n * tokens } else { 0 })
            .sum();
        if vetoes >= p {
            return arg(format!("{vetoes} vetoes leave nothing of {p} outcomes"));
        }
        Ok(())
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.stages.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl FromStr for ProtocolSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

type Mask = u64;

fn members(s: Mask) -> impl Iterator<Item = Outcome> {
    (0..64u8).filter(move |&o| s >> o & 1 == 1)
}

fn bit(o: Outcome) -> Mask {
    1u64 << o
}

/// All `k`-subsets of `items`, in lexicographic order of positions.
fn subsets(items: &[Outcome], k: usize) -> Vec<Mask> {
    fn go(items: &[Outcome], k: usize, start: usize, acc: Mask, out: &mut Vec<Mask>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..=items.len().saturating_sub(k) {
            go(items, k - 1, i + 1, acc | bit(items[i]), out);
        }
    }
    let mut out = Vec::new();
    if k <= items.len() {
        go(items, k, 0, 0, &mut out);
    }
    out
}

/// An agent's move in one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Action {
    Set(Mask),
    Name(Outcome),
}

fn describe(a: &Action) -> String {
    match a {
        Action::Name(o) => (o + 1).to_string(),
        Action::Set(m) => {
            let v: Vec<String> = members(*m).map(|o| (o + 1).to_string()).collect();
            format!("{{{}}}", v.join(","))
        }
    }
}

/// How choices the protocol leaves open (padding outcomes, which cover) are
/// resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    /// Take the first option along this priority order of outcomes.
    Priority(Vec<Outcome>),
    /// Let the adversaries pick; the result holds for every resolution.
    Adversarial,
}

impl Choice {
    pub fn lowest_index(p: usize) -> Self {
        Choice::Priority((0..p as Outcome).collect())
    }
}

/// Restriction of a preference to the surviving outcomes, worst first.
fn restricted(pref: &[Outcome], s: Mask) -> Vec<Outcome> {
    pref.iter().copied().filter(|&o| s >> o & 1 == 1).collect()
}

fn safe_action(stage: &Stage, pref: &[Outcome], s: Mask) -> Result<Action> {
    let r = restricted(pref, s);
    let take = |v: &[Outcome]| v.iter().fold(0, |m, &o| m | bit(o));
    Ok(match stage {
        Stage::Veto { tokens } => Action::Set(take(&r[..*tokens.min(&r.len())])),
        Stage::RandomDictator { .. } => Action::Name(*r.last().expect("nonempty survivors")),
        Stage::Uniform => Action::Set(0),
        Stage::Cover(c) => {
            if c.depth > r.len() {
                return arg(format!("cover depth {} exceeds the {} surviving outcomes", c.depth, r.len()));
            }
            match c.side {
                Side::Bottom => Action::Set(take(&r[..c.depth])),
                Side::Top => Action::Set(take(&r[r.len() - c.depth..])),
            }
        }
    })
}

fn action_space(stage: &Stage, s: Mask) -> Vec<Action> {
    let items: Vec<Outcome> = members(s).collect();
    match stage {
        Stage::Veto { tokens } => subsets(&items, (*tokens).min(items.len())).into_iter().map(Action::Set).collect(),
        Stage::RandomDictator { .. } => items.into_iter().map(Action::Name).collect(),
        Stage::Uniform => vec![Action::Set(0)],
        Stage::Cover(c) => subsets(&items, c.depth).into_iter().map(Action::Set).collect(),
    }
}

/// Possible results of a stage: each option is a distribution over the
/// next survivor set. More than one option means the protocol leaves a
/// choice open.
fn outcomes(stage: &Stage, s: Mask, actions: &[Action], n: usize, choice: &Choice) -> Result<Vec<Vec<(Rational, Mask)>>> {
    let ordered = |s: Mask| -> Vec<Outcome> {
        match choice {
            Choice::Priority(order) => order.iter().copied().filter(|&o| s >> o & 1 == 1).collect(),
            Choice::Adversarial => members(s).collect(),
        }
    };
    let pick = |options: Vec<Mask>| -> Vec<Mask> {
        match choice {
            Choice::Priority(_) => options.into_iter().take(1).collect(),
            Choice::Adversarial => options,
        }
    };
    Ok(match stage {
        Stage::Veto { .. } => {
            let gone = actions.iter().fold(0, |m, a| if let Action::Set(x) = a { m | x } else { m });
            if s & !gone == 0 {
                return arg("vetoes removed every outcome");
            }
            vec![vec![(Rational::one(), s & !gone)]]
        }
        Stage::Uniform => vec![members(s).map(|o| (rat(1, s.count_ones() as i64), bit(o))).collect()],
        Stage::RandomDictator { pad: false } => {
            let mut dist: Vec<(Rational, Mask)> = Vec::new();
            for a in actions {
                let Action::Name(o) = a else { unreachable!("dictator stage uses named outcomes") };
                match dist.iter_mut().find(|(_, m)| *m == bit(*o)) {
                    Some(e) => e.0 += rat(1, n as i64),
                    None => dist.push((rat(1, n as i64), bit(*o))),
                }
            }
            vec![dist]
        }
        Stage::RandomDictator { pad: true } => {
            let named = actions.iter().fold(0, |m, a| if let Action::Name(o) = a { m | bit(*o) } else { m });
            let distinct = named.count_ones() as usize;
            if distinct == 1 {
                return Ok(vec![vec![(Rational::one(), named)]]);
            }
            let want = n.min(s.count_ones() as usize);
            let spare = ordered(s & !named);
            let fills = pick(subsets(&spare, want.saturating_sub(distinct)));
            fills.into_iter().map(|f| vec![(Rational::one(), named | f)]).collect()
        }
        Stage::Cover(c) => {
            let sets: Vec<Mask> = actions.iter().map(|a| if let Action::Set(x) = a { *x } else { 0 }).collect();
            let ok = |m: Mask| {
                sets.iter().all(|r| {
                    let meet = (m & r).count_ones();
                    if c.at_most_one { meet <= 1 } else { meet >= 1 }
                })
            };
            let items = ordered(s);
            if c.size > items.len() || (c.complement && c.size == items.len()) {
                return arg(format!("cover of size {} does not fit {} outcomes", c.size, items.len()));
            }
            let valid: Vec<Mask> = subsets(&items, c.size).into_iter().filter(|&m| ok(m)).collect();
            if valid.is_empty() {
                let shown: Vec<String> = sets.iter().map(|&m| describe(&Action::Set(m))).collect();
                return Err(Error::Internal(format!("no admissible cover for reports {}", shown.join(" "))));
            }
            pick(valid)
                .into_iter()
                .map(|m| vec![(Rational::one(), if c.complement { s & !m } else { m })])
                .collect()
        }
    })
}

/// Nondecreasing index tuples of length `len` over `0..m`.
fn multisets(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    if m == 0 {
        if len == 0 {
            out.push(cur);
        }
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..len).rev().find(|&i| cur[i] + 1 < m) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..len {
            cur[j] = cur[i];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalStatus {
    Complete,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub status: EvalStatus,
    pub protocol: String,
    pub n: usize,
    pub p: usize,
    /// Tightest guarantee: cumulative sums are maxima over all scenarios.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved: Option<RankLottery>,
    pub scenario_count: u64,
    /// For each rank `k`, the adversaries' first-stage reports in a scenario
    /// attaining `[achieved]_1^k`.
    pub worst_scenarios: HashMap<usize, String>,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub choice: Choice,
    /// Evaluate every preference of agent 1 rather than one representative.
    /// Needed when `choice` is a priority order, which breaks neutrality.
    pub all_orders: bool,
    pub budget: u64,
}

impl EvalOptions {
    /// Adversarial choices with agent 1 fixed, valid by neutrality.
    pub fn neutral() -> Self {
        Self {
            choice: Choice::Adversarial,
            all_orders: false,
            budget: 50_000_000,
        }
    }

    /// A fixed priority rule evaluated over every preference of agent 1.
    pub fn exact(order: Vec<Outcome>) -> Self {
        Self {
            choice: Choice::Priority(order),
            all_orders: true,
            budget: 50_000_000,
        }
    }
}

struct Evaluator<'a> {
    protocol: &'a ProtocolSpec,
    n: usize,
    p: usize,
    pref: Vec<Outcome>,
    rank: Vec<usize>,
    opts: &'a EvalOptions,
    memo: HashMap<(usize, Mask), Vec<Rational>>,
    count: u64,
}

struct OverBudget;

impl Evaluator<'_> {
    /// Cumulative rank distribution of a uniform draw from `s`.
    fn terminal(&self, s: Mask) -> Vec<Rational> {
        let size = s.count_ones() as i64;
        let mut hist = vec![0i64; self.p];
        for o in members(s) {
            hist[self.rank[o as usize]] += 1;
        }
        let mut acc = 0;
        hist.iter()
            .map(|h| {
                acc += h;
                rat(acc, size)
            })
            .collect()
    }

    /// Per-rank maximum of agent 1's cumulative distribution over every
    /// adversary plan, starting at `stage` with survivors `s`.
    fn value(&mut self, stage: usize, s: Mask, best: Option<&mut Vec<String>>) -> std::result::Result<Result<Vec<Rational>>, OverBudget> {
        if stage == self.protocol.stages.len() {
            return Ok(Ok(self.terminal(s)));
        }
        if best.is_none() {
            if let Some(v) = self.memo.get(&(stage, s)) {
                return Ok(Ok(v.clone()));
            }
        }
        let st = self.protocol.stages[stage];
        let mine = match safe_action(&st, &self.pref, s) {
            Ok(a) => a,
            Err(e) => return Ok(Err(e)),
        };
        let space = action_space(&st, s);
        let mut out: Vec<Rational> = vec![Rational::zero(); self.p];
        let mut arg_best: Vec<String> = vec![String::new(); self.p];
        for tuple in multisets(space.len(), self.n - 1) {
            self.count += 1;
            if self.count > self.opts.budget {
                return Err(OverBudget);
            }
            let mut actions = vec![mine];
            actions.extend(tuple.iter().map(|&i| space[i]));
            let options = match outcomes(&st, s, &actions, self.n, &self.opts.choice) {
                Ok(o) => o,
                Err(e) => return Ok(Err(e)),
            };
            for dist in options {
                let mut cum = vec![Rational::zero(); self.p];
                for (w, child) in dist {
                    let v = match self.value(stage + 1, child, None)? {
                        Ok(v) => v,
                        Err(e) => return Ok(Err(e)),
                    };
                    for (c, x) in cum.iter_mut().zip(v) {
                        *c += &w * x;
                    }
                }
                for k in 0..self.p {
                    if cum[k] > out[k] || arg_best[k].is_empty() {
                        out[k] = cum[k].clone();
                        arg_best[k] = tuple.iter().map(|&i| describe(&space[i])).collect::<Vec<_>>().join(" ");
                    }
                }
            }
        }
        if let Some(b) = best {
            *b = arg_best;
        }
        self.memo.insert((stage, s), out.clone());
        Ok(Ok(out))
    }
}

/// Tightest guarantee agent 1 secures with its safe strategy against any
/// reports of the others.
pub fn worst_case_guarantee(protocol: &ProtocolSpec, n: usize, p: usize) -> Result<EvalReport> {
    worst_case_guarantee_with(protocol, n, p, &EvalOptions::neutral())
}

pub fn worst_case_guarantee_with(protocol: &ProtocolSpec, n: usize, p: usize, opts: &EvalOptions) -> Result<EvalReport> {
    protocol.check(n, p)?;
    if let Choice::Priority(order) = &opts.choice {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..p as Outcome).collect::<Vec<_>>() {
            return arg("priority order must list every outcome once");
        }
    }
    let prefs: Vec<Vec<Outcome>> = if opts.all_orders {
        all_permutations(p)
    } else {
        vec![(0..p as Outcome).collect()]
    };
    let full: Mask = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    let mut report = EvalReport {
        status: EvalStatus::Complete,
        protocol: protocol.to_string(),
        n,
        p,
        achieved: None,
        scenario_count: 0,
        worst_scenarios: HashMap::new(),
    };
    let mut cum = vec![Rational::zero(); p];
    for pref in prefs {
        let mut rank = vec![0usize; p];
        for (r, &o) in pref.iter().enumerate() {
            rank[o as usize] = r;
        }
        let mut ev = Evaluator {
            protocol,
            n,
            p,
            pref,
            rank,
            opts,
            memo: HashMap::new(),
            count: 0,
        };
        let mut best = Vec::new();
        let res = ev.value(0, full, Some(&mut best));
        report.scenario_count += ev.count;
        let v = match res {
            Ok(v) => v?,
            Err(OverBudget) => {
                report.status = EvalStatus::Undecided;
                return Ok(report);
            }
        };
        for k in 0..p {
            if v[k] > cum[k] || !report.worst_scenarios.contains_key(&(k + 1)) {
                cum[k] = v[k].clone();
                report.worst_scenarios.insert(k + 1, best[k].clone());
            }
        }
    }
    report.achieved = Some(RankLottery::from_cumulative(&cum)?);
    Ok(report)
}

/// Runs the protocol with every agent acting on its reported preference.
/// Open choices follow `order` (lowest index first when absent).
pub fn run(protocol: &ProtocolSpec, reports: &Profile, order: Option<&[Outcome]>) -> Result<OutcomeLottery> {
    let (n, p) = (reports.n(), reports.p());
    protocol.check(n, p)?;
    let choice = match order {
        Some(o) => Choice::Priority(o.to_vec()),
        None => Choice::lowest_index(p),
    };
    let full: Mask = (1u64 << p) - 1;
    let mut state: Vec<(Rational, Mask)> = vec![(Rational::one(), full)];
    for st in &protocol.stages {
        let mut next: Vec<(Rational, Mask)> = Vec::new();
        for (w, s) in state {
            let actions = reports
                .prefs()
                .iter()
                .map(|q| safe_action(st, q.order(), s))
                .collect::<Result<Vec<_>>>()?;
            let options = outcomes(st, s, &actions, n, &choice)?;
            for (v, child) in options.into_iter().next().expect("at least one option") {
                let mass = &w * v;
                match next.iter_mut().find(|(_, m)| *m == child) {
                    Some(e) => e.0 += mass,
                    None => next.push((mass, child)),
                }
            }
        }
        state = next;
    }
    let mut mass = vec![Rational::zero(); p];
    for (w, s) in state {
        let share = w / rat(s.count_ones() as i64, 1);
        for o in members(s) {
            mass[o as usize] += &share;
        }
    }
    OutcomeLottery::new(mass)
}

/// Is `λ` secured by agent 1's safe strategy whatever the others do?
pub fn verify_safe_strategy(protocol: &ProtocolSpec, lambda: &RankLottery, n: usize) -> Result<bool> {
    let report = worst_case_guarantee(protocol, n, lambda.p())?;
    match report.achieved {
        Some(a) => a.dominates(lambda),
        None => Err(Error::Limit("scenario budget exhausted".into())),
    }
}

/// Covering constructions showing that certain guarantees are feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    /// `p = 2n − 1`: `n − 1` outcomes meeting everyone's top two.
    TopTwo,
    /// Two outcomes meeting everyone's top `n − 1`, each drawn with
    /// probability one half.
    Pair,
    /// Two outcomes meeting everyone's bottom `n − 1`; the rest are drawn.
    PairDual,
    /// Three outcomes meeting everyone's top three at most once; the rest
    /// are drawn.
    TripleAtMostOne,
    /// Three outcomes meeting everyone's top three.
    Triple,
}

impl FromStr for CoverMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "top-two" => CoverMode::TopTwo,
            "pair" => CoverMode::Pair,
            "pair-dual" => CoverMode::PairDual,
            "triple-at-most-one" => CoverMode::TripleAtMostOne,
            "triple" => CoverMode::Triple,
            other => return arg(format!("unknown cover mode {other:?}")),
        })
    }
}

pub fn cover_protocol(n: usize, p: usize, mode: CoverMode) -> Result<ProtocolSpec> {
    let stage = match mode {
        CoverMode::TopTwo => {
            if p + 1 != 2 * n {
                return arg("the top-two cover needs p = 2n − 1");
            }
            CoverStage { size: n - 1, depth: 2, side: Side::Top, at_most_one: false, complement: false }
        }
        CoverMode::Pair | CoverMode::PairDual => {
            if n < 2 || p < n + 1 {
                return arg("pair covers need 2 <= n < p");
            }
            let dual = mode == CoverMode::PairDual;
            CoverStage {
                size: 2,
                depth: n - 1,
                side: if dual { Side::Bottom } else { Side::Top },
                at_most_one: false,
                complement: dual,
            }
        }
        CoverMode::TripleAtMostOne => {
            CoverStage { size: 3, depth: 3, side: Side::Top, at_most_one: true, complement: true }
        }
        CoverMode::Triple => CoverStage { size: 3, depth: 3, side: Side::Top, at_most_one: false, complement: false },
    };
    ProtocolSpec::new(vec![Stage::Cover(stage)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverCheck {
    pub families_checked: u64,
    pub complete: bool,
    /// A profile at which no admissible cover exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Profile>,
}

/// Checks that an admissible cover exists whatever sets the agents report.
/// Any family of reported sets comes from some profile and vice versa, and
/// relabeling lets the first set be fixed, so this covers every profile.
pub fn verify_cover_existence(stage: &CoverStage, n: usize, p: usize, budget: u64) -> Result<CoverCheck> {
    if p > 63 || stage.depth > p || stage.size > p || n == 0 {
        return arg("cover does not fit the outcomes");
    }
    let items: Vec<Outcome> = (0..p as Outcome).collect();
    let sets = subsets(&items, stage.depth);
    let candidates = subsets(&items, stage.size);
    let first: Mask = (1u64 << stage.depth) - 1;
    let admissible = |m: Mask, family: &[Mask]| {
        family.iter().all(|r| {
            let meet = (m & r).count_ones();
            if stage.at_most_one { meet <= 1 } else { meet >= 1 }
        })
    };
    let mut check = CoverCheck { families_checked: 0, complete: true, counterexample: None };
    let mut family = vec![first; n];
    for tuple in multisets(sets.len(), n - 1) {
        if check.families_checked >= budget {
            check.complete = false;
            break;
        }
        check.families_checked += 1;
        for (slot, &i) in family[1..].iter_mut().zip(&tuple) {
            *slot = sets[i];
        }
        if !candidates.iter().any(|&m| admissible(m, &family)) {
            check.counterexample = Some(profile_with_sets(&family, p, stage.side)?);
            break;
        }
    }
    Ok(check)
}

/// Same question, answered profile by profile over every canonical profile.
pub fn verify_cover_over_profiles(stage: &CoverStage, n: usize, p: usize, budget: u64) -> Result<CoverCheck> {
    if p > 10 {
        return arg("profile enumeration is limited to p <= 10");
    }
    let items: Vec<Outcome> = (0..p as Outcome).collect();
    let candidates = subsets(&items, stage.size);
    let mut check = CoverCheck { families_checked: 0, complete: true, counterexample: None };
    let mut stream = crate::profile::enumerate_profiles(n, p)?;
    while let Some(orders) = stream.next_orders() {
        if check.families_checked >= budget {
            check.complete = false;
            break;
        }
        check.families_checked += 1;
        let family: Vec<Mask> = orders
            .iter()
            .map(|o| {
                let part = match stage.side {
                    Side::Top => &o[p - stage.depth..],
                    Side::Bottom => &o[..stage.depth],
                };
                part.iter().fold(0, |m, &x| m | bit(x))
            })
            .collect();
        let found = candidates.iter().any(|&m| {
            family.iter().all(|r| {
                let meet = (m & r).count_ones();
                if stage.at_most_one { meet <= 1 } else { meet >= 1 }
            })
        });
        if !found {
            let owned: Vec<Vec<Outcome>> = orders.iter().map(|o| o.to_vec()).collect();
            check.counterexample = Some(Profile::from_orders(&owned)?);
            break;
        }
    }
    Ok(check)
}

/// A profile whose agents have the given sets as their top (or bottom)
/// outcomes.
fn profile_with_sets(family: &[Mask], p: usize, side: Side) -> Result<Profile> {
    let prefs = family
        .iter()
        .map(|&m| {
            let inside: Vec<Outcome> = members(m).collect();
            let outside: Vec<Outcome> = (0..p as Outcome).filter(|&o| m >> o & 1 == 0).collect();
            let order = match side {
                Side::Top => [outside, inside].concat(),
                Side::Bottom => [inside, outside].concat(),
            };
            Preference::new(order)
        })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(prefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::vt_compose;
    use crate::feasibility::is_feasible;
    use crate::lottery::{rd, uniform, vt};
    use crate::profile::rank_rearrange;

    fn lot(text: &str) -> RankLottery {
        RankLottery::parse(text).unwrap()
    }

    fn proto(text: &str) -> ProtocolSpec {
        ProtocolSpec::parse(text).unwrap()
    }

    fn achieved(text: &str, n: usize, p: usize) -> RankLottery {
        worst_case_guarantee(&proto(text), n, p).unwrap().achieved.unwrap()
    }

    #[test]
    fn parsing_round_trips() {
        for text in ["veto(1); rd(pad); uniform", "rd", "cover(2,bottom2,complement)", "cover(3,top3,atmost1,complement)"] {
            assert_eq!(proto(text).to_string(), text);
        }
        assert!(ProtocolSpec::parse("veto(1); dance").is_err());
        match ProtocolSpec::parse("uniform; veto(x)") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 8),
            other => panic!("{other:?}"),
        }
        assert!(proto("veto(2)").check(3, 6).is_err());
    }

    #[test]
    fn three_agents_six_outcomes() {
        assert_eq!(achieved("veto(1); uniform", 3, 6), vt(3, 6).unwrap());
        assert_eq!(achieved("veto(1)", 3, 6), vt(3, 6).unwrap());
        assert_eq!(achieved("rd", 3, 6), lot("2/3,0,0,0,0,1/3"));
        assert_eq!(achieved("rd(pad)", 3, 6), rd(3, 6).unwrap());
        assert_eq!(achieved("uniform", 3, 6), uniform(6).unwrap());
        assert!(verify_safe_strategy(&proto("veto(1); uniform"), &vt(3, 6).unwrap(), 3).unwrap());
        assert!(!verify_safe_strategy(&proto("rd"), &rd(3, 6).unwrap(), 3).unwrap());
    }

    #[test]
    fn padding_order_does_not_matter() {
        let rd_pad = proto("rd(pad)");
        let forward = EvalOptions::exact((0..6).collect());
        let backward = EvalOptions::exact((0..6).rev().collect());
        let a = worst_case_guarantee_with(&rd_pad, 3, 6, &forward).unwrap().achieved.unwrap();
        let b = worst_case_guarantee_with(&rd_pad, 3, 6, &backward).unwrap().achieved.unwrap();
        assert_eq!(a, rd(3, 6).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn runs() {
        // Agent 1 ranks 1 < 2 < ... < 6 and vetoes outcome 1; the others veto
        // its two favourites.
        let reports = Profile::parse("1 2 3 4 5 6 / 6 1 2 3 4 5 / 5 1 2 3 4 6").unwrap();
        let l = run(&proto("veto(1); uniform"), &reports, None).unwrap();
        assert_eq!(l, OutcomeLottery::parse("0,1/3,1/3,1/3,0,0").unwrap());
        let me = &reports.prefs()[0];
        assert_eq!(rank_rearrange(&l, me).unwrap(), vt(3, 6).unwrap());

        // Tops a, a, b: padded with the lowest unused outcome.
        let reports = Profile::parse("2 3 4 5 6 1 / 2 3 4 5 6 1 / 1 3 4 5 6 2").unwrap();
        let l = run(&proto("rd(pad)"), &reports, None).unwrap();
        assert_eq!(l, OutcomeLottery::parse("1/3,1/3,1/3,0,0,0").unwrap());

        let same = Profile::parse("1 2 3 4 5 6 / 1 2 3 4 5 6 / 1 2 3 4 5 6").unwrap();
        let l = run(&proto("rd(pad)"), &same, None).unwrap();
        assert_eq!(l, OutcomeLottery::parse("0,0,0,0,0,1").unwrap());

        let naive = run(&proto("rd"), &Profile::parse("1 2 3 4 5 6 / 6 5 4 3 2 1 / 6 5 4 3 2 1").unwrap(), None).unwrap();
        assert_eq!(naive, OutcomeLottery::parse("2/3,0,0,0,0,1/3").unwrap());
    }

    #[test]
    fn runs_dominate_the_worst_case() {
        let p = 5;
        let protos = ["veto(1); uniform", "rd(pad)", "cover(2,top2)", "cover(2,bottom2,complement)"];
        let perms = all_permutations(p);
        for text in protos {
            let pr = proto(text);
            let a = achieved(text, 3, p);
            for (i, x) in perms.iter().enumerate().step_by(7) {
                for y in perms.iter().skip(i % 11).step_by(13) {
                    let me = Preference::identity(p);
                    let q = Profile::new(vec![me.clone(), Preference::new(x.clone()).unwrap(), Preference::new(y.clone()).unwrap()]).unwrap();
                    let l = run(&pr, &q, None).unwrap();
                    assert!(rank_rearrange(&l, &me).unwrap().dominates(&a).unwrap(), "{text} at {q}");
                }
            }
        }
    }

    #[test]
    fn achieved_guarantees_are_feasible() {
        for (text, n, p) in [("veto(1); uniform", 3, 7), ("rd(pad)", 3, 5), ("veto(1); rd(pad)", 3, 7), ("rd", 3, 6)] {
            let a = achieved(text, n, p);
            assert!(is_feasible(&a, n).unwrap().is_feasible(), "{text}");
            assert_eq!(a.cumulative().last().unwrap(), &Rational::one());
        }
    }

    #[test]
    fn veto_round_composes() {
        let inner = achieved("rd(pad)", 3, 4);
        let outer = achieved("veto(1); rd(pad)", 3, 7);
        assert!(outer.dominates(&vt_compose(&inner, 3).unwrap()).unwrap());
        assert_eq!(outer, lot("0,1/3,1/3,0,1/3,0,0"));
    }

    #[test]
    fn covers() {
        let cases = [
            (3, 5, CoverMode::Pair, "1/2,0,0,1/2,0"),
            (3, 5, CoverMode::PairDual, "1/3,0,1/3,1/3,0"),
            (4, 7, CoverMode::Pair, "1/2,0,0,0,1/2,0,0"),
            (4, 7, CoverMode::PairDual, "1/5,1/5,0,1/5,1/5,1/5,0"),
            (3, 5, CoverMode::TopTwo, "1/2,0,0,1/2,0"),
        ];
        for (n, p, mode, expect) in cases {
            let pr = cover_protocol(n, p, mode).unwrap();
            let Stage::Cover(c) = pr.stages[0] else { unreachable!() };
            let check = verify_cover_existence(&c, n, p, u64::MAX).unwrap();
            assert!(check.complete && check.counterexample.is_none(), "{mode:?} at ({n},{p})");
            if n == 3 {
                let direct = verify_cover_over_profiles(&c, n, p, u64::MAX).unwrap();
                assert!(direct.complete && direct.counterexample.is_none());
            }
            let a = worst_case_guarantee(&pr, n, p).unwrap().achieved.unwrap();
            assert!(a.dominates(&lot(expect)).unwrap(), "{mode:?} at ({n},{p}): {a}");
            if n == 3 {
                assert!(is_feasible(&lot(expect), n).unwrap().is_feasible());
            }
        }

        // p = 2n − 1 with four agents: each gets at least 1/3 on its top two.
        let pr = cover_protocol(4, 7, CoverMode::TopTwo).unwrap();
        let a = worst_case_guarantee(&pr, 4, 7).unwrap().achieved.unwrap();
        assert!(a.partial_sum(6, 7).unwrap() >= rat(1, 3));

        // Three agents cannot always be met by a single outcome in their top two.
        let one = CoverStage { size: 1, depth: 2, side: Side::Top, at_most_one: false, complement: false };
        let check = verify_cover_existence(&one, 3, 5, u64::MAX).unwrap();
        let bad = check.counterexample.expect("a blocking family exists");
        assert_eq!(bad.n(), 3);
    }

    #[test]
    fn four_agents_eight_outcomes_triples() {
        let pr = cover_protocol(4, 8, CoverMode::TripleAtMostOne).unwrap();
        let Stage::Cover(c) = pr.stages[0] else { unreachable!() };
        let check = verify_cover_existence(&c, 4, 8, u64::MAX).unwrap();
        assert!(check.complete && check.counterexample.is_none());
    }

    #[test]
    fn budget_gives_undecided() {
        let opts = EvalOptions { budget: 10, ..EvalOptions::neutral() };
        let r = worst_case_guarantee_with(&proto("veto(1); uniform"), 3, 6, &opts).unwrap();
        assert_eq!(r.status, EvalStatus::Undecided);
        assert!(r.achieved.is_none());
    }
}
