//! Named verification suites. Each check compares an expected value, written
//! out by hand, with the value computed by the library; a check passes only
//! on exact equality.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compose::{enumerate_canonical, rd_compose_boundary, rd_compose_via_duality, CanonicalSequence};
use crate::duality::dual;
use crate::error::{arg, Result};
use crate::feasibility::{
    balanced_family, is_feasible_with, verify_blocked, FeasibilityOptions, FeasibilityReport, Verdict,
};
use crate::lottery::{feasible_n2, m2_vertices, random_boundary_lottery, random_lottery, rd, uniform, vt, RankLottery};
use crate::maximality::{
    canonical_simplices, improve_with, in_convex_hull, is_maximal_with, Improvement, MaximalityOptions,
    MaximalityReport, MaximalityVerdict,
};
use crate::protocols::{
    cover_protocol, verify_cover_over_profiles, worst_case_guarantee, CoverMode, ProtocolSpec, Stage,
};
use crate::rational::rat;
use crate::ratlp;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub description: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
    /// The computation hit a limit instead of reaching an answer.
    pub undecided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub checks: Vec<Check>,
    pub runtime_ms: u128,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn undecided(&self) -> bool {
        self.checks.iter().any(|c| c.undecided)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub feasibility: FeasibilityOptions,
}

/// Suite identifiers with a one-line summary.
pub const SUITES: &[(&str, &str)] = &[
    ("example-n3-p6", "three agents, six outcomes: uniform, veto and dictator guarantees and their dominated neighbours"),
    ("two-agents-p5", "two agents, five outcomes: maximal exactly when symmetric"),
    ("two-agents-p6", "two agents, six outcomes: maximal exactly when symmetric"),
    ("many-agents", "at least as many agents as outcomes: only the uniform guarantee is maximal"),
    ("duality", "veto and dictator guarantees are dual; the duality is an involution"),
    ("canonical-table", "canonical guarantees reproduce the published values"),
    ("intervals-n3-p6", "three agents, six outcomes: maximal set is two segments from uniform"),
    ("simplices-n3-p7", "three agents, seven outcomes: triangles of maximal guarantees and one extra dual pair"),
    ("boundary-n3-p5", "three agents, five outcomes: four maximal boundary guarantees and covering protocols"),
    ("protocols-n3-p6", "veto, naive and padded dictator protocols deliver the stated guarantees"),
    ("infrastructure", "certificates, determinism, balanced families and the dominance order"),
];

struct Builder {
    checks: Vec<Check>,
    opts: SuiteOptions,
    rng: ChaCha8Rng,
}

fn lot(text: &str) -> RankLottery {
    RankLottery::parse(text).expect("suite literal is a lottery")
}

impl Builder {
    fn push(&mut self, description: impl Into<String>, expected: impl ToString, computed: impl ToString) {
        let expected = expected.to_string();
        let computed = computed.to_string();
        self.checks.push(Check {
            description: description.into(),
            pass: expected == computed,
            undecided: computed.contains("undecided"),
            expected,
            computed,
        });
    }

    fn max_opts(&self) -> MaximalityOptions {
        MaximalityOptions {
            feasibility: self.opts.feasibility.clone(),
            ..MaximalityOptions::default()
        }
    }

    fn feasible(&self, l: &RankLottery, n: usize) -> Result<FeasibilityReport> {
        is_feasible_with(l, n, &self.opts.feasibility)
    }

    fn maximal(&self, l: &RankLottery, n: usize) -> Result<MaximalityReport> {
        is_maximal_with(l, n, &self.max_opts())
    }

    /// `"maximal"`, `"dominated"` (only with a re-verified improver), or
    /// the verdict otherwise.
    fn verdict(&self, l: &RankLottery, n: usize) -> Result<String> {
        let r = self.maximal(l, n)?;
        Ok(match (r.verdict, &r.improver) {
            (MaximalityVerdict::Dominated, Some(mu)) => {
                let ok = mu != l && mu.dominates(l)? && self.feasible(mu, n)?.is_feasible();
                if ok { "dominated".to_string() } else { format!("dominated by invalid {mu}") }
            }
            (v, _) => verdict_name(v).to_string(),
        })
    }

    fn feasibility(&self, l: &RankLottery, n: usize) -> Result<String> {
        Ok(match self.feasible(l, n)?.verdict {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Undecided => "undecided",
        }
        .to_string())
    }
}

fn verdict_name(v: MaximalityVerdict) -> &'static str {
    match v {
        MaximalityVerdict::Maximal => "maximal",
        MaximalityVerdict::Dominated => "dominated",
        MaximalityVerdict::Infeasible => "infeasible",
        MaximalityVerdict::Undecided => "undecided",
    }
}

pub fn run_suite(id: &str, opts: &SuiteOptions) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut b = Builder {
        checks: Vec::new(),
        opts: opts.clone(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    match id {
        "example-n3-p6" => example_n3_p6(&mut b)?,
        "two-agents-p5" => two_agents(&mut b, 5)?,
        "two-agents-p6" => two_agents(&mut b, 6)?,
        "many-agents" => many_agents(&mut b)?,
        "duality" => duality(&mut b)?,
        "canonical-table" => canonical_table(&mut b)?,
        "intervals-n3-p6" => intervals_n3_p6(&mut b)?,
        "simplices-n3-p7" => simplices_n3_p7(&mut b)?,
        "boundary-n3-p5" => boundary_n3_p5(&mut b)?,
        "protocols-n3-p6" => protocols_n3_p6(&mut b)?,
        "infrastructure" => infrastructure(&mut b)?,
        other => {
            let known: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
            return arg(format!("unknown suite {other:?}; known suites: {}", known.join(", ")));
        }
    }
    Ok(SuiteResult {
        suite: id.to_string(),
        checks: b.checks,
        runtime_ms: start.elapsed().as_millis(),
    })
}

fn example_n3_p6(b: &mut Builder) -> Result<()> {
    for (name, l) in [("UNI(6)", uniform(6)?), ("VT(3,6)", vt(3, 6)?), ("RD(3,6)", rd(3, 6)?)] {
        b.push(format!("{name} is feasible"), "feasible", b.feasibility(&l, 3)?);
        b.push(format!("{name} is maximal"), "maximal", b.verdict(&l, 3)?);
    }
    for text in ["0,1,0,0,0,0", "2/3,0,0,0,0,1/3"] {
        let l = lot(text);
        b.push(format!("({text}) is feasible"), "feasible", b.feasibility(&l, 3)?);
        b.push(format!("({text}) is dominated by a feasible improver"), "dominated", b.verdict(&l, 3)?);
    }
    let mid = lot("1/6,1/3,1/6,1/6,0,1/6");
    b.push("half veto plus half dictator", mid.to_string(), vt(3, 6)?.mix(&rd(3, 6)?, &rat(1, 2))?);
    b.push("uniform dominates the half-half mix", true, uniform(6)?.dominates(&mid)?);
    b.push("the half-half mix is not maximal", "dominated", b.verdict(&mid, 3)?);
    Ok(())
}

/// A random feasible two-agent lottery, symmetric or strictly asymmetric.
fn two_agent_sample(b: &mut Builder, p: usize, symmetric: bool) -> RankLottery {
    loop {
        let x = random_lottery(&mut b.rng, p, 6);
        if symmetric {
            let s = x.mix(&x.reflect(), &rat(1, 2)).expect("same size");
            if !s.is_uniform() {
                return s;
            }
        } else if feasible_n2(&x) && !x.is_symmetric() {
            return x;
        }
    }
}

fn two_agents(b: &mut Builder, p: usize) -> Result<()> {
    for v in m2_vertices(p)? {
        b.push(format!("vertex {v} is maximal for two agents"), "maximal", b.verdict(&v, 2)?);
    }
    for _ in 0..20 {
        let l = two_agent_sample(b, p, true);
        b.push(format!("symmetric {l} is maximal"), "maximal", b.verdict(&l, 2)?);
    }
    for _ in 0..20 {
        let l = two_agent_sample(b, p, false);
        b.push(format!("asymmetric feasible {l} is dominated"), "dominated", b.verdict(&l, 2)?);
    }
    Ok(())
}

fn many_agents(b: &mut Builder) -> Result<()> {
    for (n, p) in [(3, 3), (4, 3)] {
        let none = matches!(improve_with(&uniform(p)?, n, &b.max_opts())?, Improvement::None);
        b.push(format!("nothing improves UNI({p}) for {n} agents"), true, none);
        for _ in 0..20 {
            let l = random_lottery(&mut b.rng, p, 5);
            let feasible = b.feasible(&l, n)?.is_feasible();
            let dominated = uniform(p)?.dominates(&l)?;
            b.push(format!("{l} with {n} agents: feasible implies below uniform"), true, !feasible || dominated);
        }
    }
    Ok(())
}

fn duality(b: &mut Builder) -> Result<()> {
    for n in 3..10 {
        for p in n + 1..=10 {
            b.push(format!("dual of VT({n},{p})"), rd(n, p)?, dual(&vt(n, p)?));
        }
    }
    let mut failures = 0;
    for _ in 0..1000 {
        let p = rand::Rng::gen_range(&mut b.rng, 2..11);
        let l = random_lottery(&mut b.rng, p, 9);
        if dual(&dual(&l)) != l {
            failures += 1;
        }
    }
    b.push("dual is an involution on 1000 random lotteries", 0, failures);
    b.push("dual of (1/2,0,0,1/2,0)", "1/3,0,1/3,1/3,0", dual(&lot("1/2,0,0,1/2,0")));
    Ok(())
}

fn canonical_table(b: &mut Builder) -> Result<()> {
    let cases = [
        (3, 7, "VT,RD", "0,1/3,1/3,0,1/3,0,0"),
        (3, 7, "RD,VT", "1/4,1/4,0,1/4,0,0,1/4"),
        (3, 11, "RD,VT,VT", "1/5,1/5,0,0,1/5,1/5,0,0,0,0,1/5"),
        (3, 11, "RD,VT,RD", "1/6,1/6,0,1/6,1/6,0,0,1/6,0,0,1/6"),
        (3, 7, "VT", "0,1/4,1/4,1/4,1/4,0,0"),
        (3, 7, "RD", "1/3,1/3,0,0,0,0,1/3"),
        (3, 7, "VT,VT", "0,0,1,0,0,0,0"),
        (3, 7, "RD,RD", "1/6,1/6,1/6,1/6,0,1/6,1/6"),
    ];
    for (n, p, word, expect) in cases {
        let seq = CanonicalSequence::parse(word, n, p)?;
        b.push(format!("canonical {word} at n = {n}, p = {p}"), expect, crate::compose::canonical(&seq)?);
    }
    for (n, p) in [(3, 7), (3, 11), (4, 13)] {
        let d = (p - 1) / n;
        b.push(format!("number of canonical guarantees at n = {n}, p = {p}"), (1usize << (d + 1)) - 2, enumerate_canonical(n, p)?.len());
    }
    let mut disagreements = 0;
    for _ in 0..100 {
        let p = rand::Rng::gen_range(&mut b.rng, 2..9);
        let n = rand::Rng::gen_range(&mut b.rng, 2..6);
        let l = random_boundary_lottery(&mut b.rng, p, 7);
        if rd_compose_boundary(&l, n)? != rd_compose_via_duality(&l, n)? {
            disagreements += 1;
        }
    }
    b.push("direct and dual dictator composition agree on 100 boundary lotteries", 0, disagreements);
    Ok(())
}

fn intervals_n3_p6(b: &mut Builder) -> Result<()> {
    let u = uniform(6)?;
    let half = rat(1, 2);
    for (name, end) in [("VT", vt(3, 6)?), ("RD", rd(3, 6)?)] {
        let mid = u.mix(&end, &half)?;
        b.push(format!("midpoint of UNI and {name} is maximal"), "maximal", b.verdict(&mid, 3)?);
    }
    let mixed = vt(3, 6)?.mix(&rd(3, 6)?, &half)?;
    b.push("half veto plus half dictator is dominated", "dominated", b.verdict(&mixed, 3)?);

    let segments = [vec![u.clone(), vt(3, 6)?], vec![u.clone(), rd(3, 6)?]];
    let sample = loop {
        let x = random_lottery(&mut b.rng, 6, 6);
        let y = u.mix(&x, &half)?;
        if segments.iter().any(|s| in_convex_hull(&y, s).unwrap_or(true)) {
            continue;
        }
        if b.feasible(&y, 3)?.is_feasible() {
            break y;
        }
    };
    b.push(format!("sampled feasible {sample} off both segments is dominated"), "dominated", b.verdict(&sample, 3)?);
    Ok(())
}

fn simplices_n3_p7(b: &mut Builder) -> Result<()> {
    let table = [
        ("VT,VT", "0,1/4,1/4,1/4,1/4,0,0", "0,0,1,0,0,0,0"),
        ("RD,RD", "1/3,1/3,0,0,0,0,1/3", "1/6,1/6,1/6,1/6,0,1/6,1/6"),
        ("VT,RD", "0,1/4,1/4,1/4,1/4,0,0", "0,1/3,1/3,0,1/3,0,0"),
        ("RD,VT", "1/3,1/3,0,0,0,0,1/3", "1/4,1/4,0,1/4,0,0,1/4"),
    ];
    let simplices = canonical_simplices(3, 7)?;
    let mut checked: Vec<RankLottery> = Vec::new();
    for (word, v1, v2) in table {
        let Some((_, s)) = simplices.iter().find(|(seq, _)| seq.word_text() == word) else {
            b.push(format!("simplex for {word}"), "present", "missing");
            continue;
        };
        b.push(format!("{word} simplex vertex 0"), uniform(7)?, &s[0]);
        b.push(format!("{word} simplex vertex 1"), v1, &s[1]);
        b.push(format!("{word} simplex vertex 2"), v2, &s[2]);
        for v in &s[1..] {
            if !checked.contains(v) {
                b.push(format!("vertex {v} is maximal"), "maximal", b.verdict(v, 3)?);
                checked.push(v.clone());
            }
        }
        let third = rat(1, 3);
        let centroid = RankLottery::convex_combination(&[(third.clone(), s[0].clone()), (third.clone(), s[1].clone()), (third, s[2].clone())])?;
        b.push(format!("centroid {centroid} of the {word} triangle is maximal"), "maximal", b.verdict(&centroid, 3)?);
    }
    let extra = lot("1/3,0,0,1/3,1/3,0,0");
    b.push("dual of the extra guarantee", "1/4,1/4,0,0,1/4,1/4,0", dual(&extra));
    b.push(format!("extra guarantee {extra} is maximal"), "maximal", b.verdict(&extra, 3)?);
    let star = dual(&extra);
    b.push(format!("its dual {star} is maximal"), "maximal", b.verdict(&star, 3)?);
    Ok(())
}

fn boundary_n3_p5(b: &mut Builder) -> Result<()> {
    let u = uniform(5)?;
    let four = [vt(3, 5)?, rd(3, 5)?, lot("1/2,0,0,1/2,0"), lot("1/3,0,1/3,1/3,0")];
    for l in &four {
        b.push(format!("{l} is maximal"), "maximal", b.verdict(l, 3)?);
        let mid = u.mix(l, &rat(1, 2))?;
        b.push(format!("midpoint {mid} toward uniform is maximal"), "maximal", b.verdict(&mid, 3)?);
    }
    for (mode, expect) in [(CoverMode::Pair, "1/2,0,0,1/2,0"), (CoverMode::PairDual, "1/3,0,1/3,1/3,0")] {
        let protocol = cover_protocol(3, 5, mode)?;
        let Stage::Cover(stage) = protocol.stages[0] else {
            unreachable!("cover protocols have one cover stage")
        };
        let check = verify_cover_over_profiles(&stage, 3, 5, u64::MAX)?;
        let found = if check.counterexample.is_some() {
            "counterexample"
        } else if check.complete {
            "cover at every profile"
        } else {
            "undecided"
        };
        b.push(format!("{protocol}: admissible pair at every profile"), "cover at every profile", found);
        let achieved = worst_case_guarantee(&protocol, 3, 5)?.achieved;
        let ok = achieved.map(|a| a.dominates(&lot(expect))).transpose()?;
        b.push(format!("{protocol} secures {expect}"), "true", ok.map_or("undecided".to_string(), |x| x.to_string()));
    }
    Ok(())
}

fn protocols_n3_p6(b: &mut Builder) -> Result<()> {
    let cases = [
        ("veto(1); uniform", vt(3, 6)?),
        ("rd(pad)", rd(3, 6)?),
        ("rd", lot("2/3,0,0,0,0,1/3")),
    ];
    for (text, expect) in cases {
        let protocol = ProtocolSpec::parse(text)?;
        let r = worst_case_guarantee(&protocol, 3, 6)?;
        let got = r.achieved.map_or("undecided".to_string(), |a| a.to_string());
        b.push(format!("worst case of {text}"), &expect, got);
        let safe = crate::protocols::verify_safe_strategy(&protocol, &expect, 3)?;
        b.push(format!("safe strategy of {text} secures {expect}"), true, safe);
    }
    let naive_rd = crate::protocols::verify_safe_strategy(&ProtocolSpec::parse("rd")?, &rd(3, 6)?, 3)?;
    b.push("naive dictator does not secure RD(3,6)", false, naive_rd);
    Ok(())
}

fn infrastructure(b: &mut Builder) -> Result<()> {
    // Certificates of infeasible verdicts.
    let mut infeasible = 0;
    let mut bad = 0;
    for (n, p) in [(3, 5), (3, 6), (4, 5), (2, 6)] {
        for _ in 0..15 {
            let l = random_lottery(&mut b.rng, p, 4);
            let r = b.feasible(&l, n)?;
            if r.verdict == Verdict::Infeasible {
                infeasible += 1;
                let ok = match (&r.witness_profile, &r.witness_certificate) {
                    (Some(q), Some(c)) => verify_blocked(&l, q, c),
                    _ => false,
                };
                if !ok {
                    bad += 1;
                }
            }
        }
    }
    b.push("infeasible verdicts were produced", true, infeasible > 0);
    b.push("every infeasibility certificate re-verifies", 0, bad);

    // Determinism of the LP solver.
    let mut differ = 0;
    for _ in 0..50 {
        let l = random_lottery(&mut b.rng, 5, 4);
        let q = crate::profile::cyclic_shift_profile(3, 5, 2);
        let lp = crate::feasibility::implementation_lp(&l, &q)?;
        let first = ratlp::solve(&lp)?;
        let second = ratlp::solve(&lp)?;
        if first != second || !ratlp::verify(&lp, &first) {
            differ += 1;
        }
    }
    b.push("LP results are identical across runs and verify", 0, differ);

    // Balanced families.
    let mut unbalanced = 0;
    let mut generated = 0;
    for p in 3..=16 {
        for k in 2..=p / 2 {
            for n in 2..=p {
                if let Some(f) = balanced_family(p, k, n) {
                    generated += 1;
                    if !f.is_balanced() {
                        unbalanced += 1;
                    }
                }
            }
        }
    }
    b.push("balanced families were generated", true, generated > 0);
    b.push("every generated family is balanced", 0, unbalanced);

    // Dominance is a partial order.
    let mut violations = 0;
    for _ in 0..10_000 {
        let p = rand::Rng::gen_range(&mut b.rng, 2..6);
        let x = random_lottery(&mut b.rng, p, 2);
        let y = random_lottery(&mut b.rng, p, 2);
        let z = random_lottery(&mut b.rng, p, 2);
        if !x.dominates(&x)? {
            violations += 1;
        }
        if x.dominates(&y)? && y.dominates(&x)? && x != y {
            violations += 1;
        }
        if x.dominates(&y)? && y.dominates(&z)? && !x.dominates(&z)? {
            violations += 1;
        }
    }
    b.push("dominance is reflexive, antisymmetric and transitive on 10000 triples", 0, violations);
    Ok(())
}
