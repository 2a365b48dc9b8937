//! Exact linear programming over the rationals.
//!
//! The solver is a two-phase primal simplex with Bland's rule on a
//! fraction-free integer tableau: every row is scaled to integers, the
//! tableau carries one common denominator, and each pivot divides exactly by
//! the previous pivot element. Infeasible programs come back with a Farkas
//! certificate that [`verify`] checks without trusting the solver.

mod packing;

pub use packing::{PackingOutcome, PackingProblem};

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::rational::{common_denominator, format_vector, serialize_rationals, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// A linear program with dense rows. Variables default to `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    constraints: Vec<Constraint>,
    objective: Vec<Rational>,
    direction: Direction,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            constraints: Vec::new(),
            objective: vec![Rational::zero(); num_vars],
            direction: Direction::Minimize,
            lower: vec![Some(Rational::zero()); num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> (&[Rational], Direction) {
        (&self.objective, self.direction)
    }

    pub fn lower(&self, var: usize) -> Option<&Rational> {
        self.lower[var].as_ref()
    }

    pub fn upper(&self, var: usize) -> Option<&Rational> {
        self.upper[var].as_ref()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Result<usize> {
        if coeffs.len() != self.num_vars {
            return arg(format!(
                "constraint has {} coefficients, program has {} variables",
                coeffs.len(),
                self.num_vars
            ));
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(self.constraints.len() - 1)
    }

    /// Adds a constraint given by `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) -> Result<usize> {
        let mut coeffs = vec![Rational::zero(); self.num_vars];
        for (j, c) in terms {
            if *j >= self.num_vars {
                return arg(format!("variable {j} out of range"));
            }
            coeffs[*j] += c;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_objective(&mut self, direction: Direction, coeffs: Vec<Rational>) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return arg("objective length differs from the number of variables");
        }
        self.direction = direction;
        self.objective = coeffs;
        Ok(())
    }

    /// Sets both bounds of one variable; `None` means unbounded on that side.
    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) -> Result<()> {
        if var >= self.num_vars {
            return arg(format!("variable {var} out of range"));
        }
        if let (Some(l), Some(u)) = (&lower, &upper) {
            if l > u {
                return arg(format!("variable {var} has lower bound above upper bound"));
            }
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars
            || self.lower.len() != self.num_vars
            || self.upper.len() != self.num_vars
            || self.constraints.iter().any(|c| c.coeffs.len() != self.num_vars)
        {
            return arg("linear program has inconsistent dimensions");
        }
        Ok(())
    }

    /// Plain text dump, one constraint per line, for cross-checking with
    /// external solvers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dir = match self.direction {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        };
        let _ = writeln!(out, "{dir}: {}", linear_text(&self.objective));
        let _ = writeln!(out, "subject to");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "  c{i}: {} {} {}", linear_text(&c.coeffs), c.relation, c.rhs);
        }
        let _ = writeln!(out, "bounds");
        for j in 0..self.num_vars {
            let lo = self.lower[j].as_ref().map_or("-inf".to_string(), |v| v.to_string());
            let hi = self.upper[j].as_ref().map_or("+inf".to_string(), |v| v.to_string());
            let _ = writeln!(out, "  {lo} <= x{j} <= {hi}");
        }
        out.push_str("end\n");
        out
    }
}

fn linear_text(coeffs: &[Rational]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| format!("{c} x{j}"))
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Multipliers proving infeasibility.
///
/// `rows[i]` multiplies constraint `i` and `upper[j]` multiplies the row
/// `x_j ≤ u_j` (zero where `x_j` has no upper bound). Signs: `≤` rows get
/// nonpositive multipliers, `≥` rows nonnegative ones, `=` rows are free.
/// With `g = Σ y_i a_i`, every variable with a lower bound needs `g_j ≤ 0`,
/// every variable without one needs `g_j = 0`, and `y·b − g·l > 0`; any
/// feasible `x` would give `y·b ≤ g·x ≤ g·l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarkasCertificate {
    #[serde(serialize_with = "serialize_rationals")]
    pub rows: Vec<Rational>,
    #[serde(serialize_with = "serialize_rationals")]
    pub upper: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: Status,
    pub primal: Option<Vec<Rational>>,
    pub objective_value: Option<Rational>,
    pub certificate: Option<FarkasCertificate>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

struct Tableau {
    /// Row 0 holds reduced costs and `−z`; rows `1..=m` the constraints.
    t: Vec<Vec<BigInt>>,
    d: BigInt,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.cols
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let p = self.t[r][s].clone();
        let (head, rest) = self.t.split_at_mut(r);
        let (pivot_row, tail) = rest.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(tail.iter_mut()) {
            let f = row[s].clone();
            for (x, pr) in row.iter_mut().zip(pivot_row.iter()) {
                if f.is_zero() || pr.is_zero() {
                    if !x.is_zero() {
                        *x = &*x * &p / &self.d;
                    }
                } else {
                    *x = (&*x * &p - &f * pr) / &self.d;
                }
            }
        }
        self.d = p;
        if self.d.is_negative() {
            self.d = -&self.d;
            for row in &mut self.t {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        self.basis[r - 1] = s;
    }

    /// Runs Bland's rule on row 0 (minimization). Returns `false` when the
    /// program is unbounded along an entering column.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        let rhs = self.rhs();
        loop {
            let Some(s) = (0..self.cols).find(|&j| allowed(j) && self.t[0][j].is_negative()) else {
                return true;
            };
            let mut best: Option<usize> = None;
            for i in 1..self.t.len() {
                let a = &self.t[i][s];
                if !a.is_positive() {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let lhs = &self.t[i][rhs] * &self.t[b][s];
                        let rhs_v = &self.t[b][rhs] * a;
                        if lhs < rhs_v || (lhs == rhs_v && self.basis[i - 1] < self.basis[b - 1]) {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some(r) => self.pivot(r, s),
            }
        }
    }

    fn value(&self, col: usize) -> Rational {
        match self.basis.iter().position(|&b| b == col) {
            Some(i) => Rational::new(self.t[i + 1][self.rhs()].clone(), self.d.clone()),
            None => Rational::zero(),
        }
    }
}

fn scale_to_integers(values: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let den = common_denominator(values.iter());
    let ints = values
        .iter()
        .map(|v| (v * Rational::from_integer(den.clone())).to_integer())
        .collect();
    (ints, den)
}

/// Solves `lp` exactly. Deterministic: the pivot rule is Bland's.
pub fn solve(lp: &LinearProgram) -> Result<LpResult> {
    lp.validate()?;
    let nv = lp.num_vars;

    // Structural columns: `x_j = l_j + x'_j`, or `x⁺ − x⁻` for a free variable.
    let mut ncols = 0;
    let mut plus_col = vec![0usize; nv];
    let mut minus_col: Vec<Option<usize>> = vec![None; nv];
    for j in 0..nv {
        plus_col[j] = ncols;
        ncols += 1;
        if lp.lower[j].is_none() {
            minus_col[j] = Some(ncols);
            ncols += 1;
        }
    }
    let shift: Vec<Rational> = lp.lower.iter().map(|l| l.clone().unwrap_or_else(Rational::zero)).collect();

    // Rows in original form, upper-bound rows appended.
    struct Row {
        coeffs: Vec<Rational>,
        relation: Relation,
        rhs: Rational,
    }
    let mut rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| Row {
            coeffs: c.coeffs.clone(),
            relation: c.relation,
            rhs: c.rhs.clone(),
        })
        .collect();
    let mut upper_rows: Vec<usize> = Vec::new();
    for j in 0..nv {
        if let Some(u) = &lp.upper[j] {
            let mut coeffs = vec![Rational::zero(); nv];
            coeffs[j] = Rational::one();
            upper_rows.push(j);
            rows.push(Row {
                coeffs,
                relation: Relation::Le,
                rhs: u.clone(),
            });
        }
    }
    let m = rows.len();

    // Standard form rows: σ_i·s_i·(a_i x' ± slack) = σ_i·s_i·(b_i − a_i·l) ≥ 0.
    let structural = ncols;
    let mut slack_of = vec![None; m];
    for (i, row) in rows.iter().enumerate() {
        if row.relation != Relation::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let art_start = ncols;
    let cols = ncols + m;

    let mut t = vec![vec![BigInt::zero(); cols + 1]; m + 1];
    let mut row_scale = vec![Rational::one(); m];
    for (i, row) in rows.iter().enumerate() {
        let shifted_rhs = &row.rhs - row.coeffs.iter().zip(&shift).map(|(a, l)| a * l).sum::<Rational>();
        let mut dense = vec![Rational::zero(); structural + 2];
        for j in 0..nv {
            dense[plus_col[j]] = row.coeffs[j].clone();
            if let Some(mc) = minus_col[j] {
                dense[mc] = -row.coeffs[j].clone();
            }
        }
        dense[structural] = shifted_rhs;
        dense[structural + 1] = match row.relation {
            Relation::Le => Rational::one(),
            Relation::Ge => -Rational::one(),
            Relation::Eq => Rational::zero(),
        };
        let (mut ints, den) = scale_to_integers(&dense);
        let sign = if ints[structural].is_negative() { -1 } else { 1 };
        if sign < 0 {
            for v in ints.iter_mut() {
                *v = -&*v;
            }
        }
        // Keep the slack coefficient ±den so the tableau stays integral.
        row_scale[i] = Rational::from_integer(den.clone()) * Rational::from_integer(BigInt::from(sign));
        let r = &mut t[i + 1];
        r[..structural].clone_from_slice(&ints[..structural]);
        if let Some(sc) = slack_of[i] {
            r[sc] = ints[structural + 1].clone();
        }
        r[art_start + i] = BigInt::one();
        r[cols] = ints[structural].clone();
    }
    // Phase-1 objective: minimise the sum of artificials.
    for j in 0..cols {
        if j < art_start {
            let s: BigInt = (1..=m).map(|i| &t[i][j]).sum();
            t[0][j] = -s;
        }
    }
    t[0][cols] = -(1..=m).map(|i| &t[i][cols]).sum::<BigInt>();

    let mut tab = Tableau {
        t,
        d: BigInt::one(),
        basis: (art_start..art_start + m).collect(),
        cols,
    };
    tab.optimize(&|_| true);

    if !tab.t[0][cols].is_zero() {
        // Phase-1 optimum is positive: y_i = 1 − (reduced cost of artificial i).
        let mut rows_y = vec![Rational::zero(); lp.constraints.len()];
        let mut upper_y = vec![Rational::zero(); nv];
        for i in 0..m {
            let reduced = Rational::new(tab.t[0][art_start + i].clone(), tab.d.clone());
            let y = (Rational::one() - reduced) * &row_scale[i];
            if i < lp.constraints.len() {
                rows_y[i] = y;
            } else {
                upper_y[upper_rows[i - lp.constraints.len()]] = y;
            }
        }
        let certificate = FarkasCertificate {
            rows: rows_y,
            upper: upper_y,
        };
        if !verify_certificate(lp, &certificate) {
            return Err(Error::Internal("phase-one multipliers failed to certify infeasibility".into()));
        }
        return Ok(LpResult {
            status: Status::Infeasible,
            primal: None,
            objective_value: None,
            certificate: Some(certificate),
        });
    }

    // Drive zero-valued artificials out of the basis where possible.
    for r in 1..=m {
        if tab.basis[r - 1] >= art_start {
            if let Some(s) = (0..art_start).find(|&j| !tab.t[r][j].is_zero()) {
                tab.pivot(r, s);
            }
        }
    }

    // Phase 2 objective (always minimised internally).
    let mut cost = vec![Rational::zero(); cols];
    for j in 0..nv {
        let c = match lp.direction {
            Direction::Minimize => lp.objective[j].clone(),
            Direction::Maximize => -lp.objective[j].clone(),
        };
        if let Some(mc) = minus_col[j] {
            cost[mc] = -c.clone();
        }
        cost[plus_col[j]] = c;
    }
    let (cost_int, _) = scale_to_integers(&cost);
    for j in 0..=cols {
        let mut v = if j < cols { &cost_int[j] * &tab.d } else { BigInt::zero() };
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < cols && !cost_int[b].is_zero() {
                v -= &cost_int[b] * &tab.t[i + 1][j];
            }
        }
        tab.t[0][j] = v;
    }
    let bounded = tab.optimize(&|j| j < art_start);
    if !bounded {
        return Ok(LpResult {
            status: Status::Unbounded,
            primal: None,
            objective_value: None,
            certificate: None,
        });
    }

    let mut x = shift;
    for j in 0..nv {
        x[j] += tab.value(plus_col[j]);
        if let Some(mc) = minus_col[j] {
            x[j] -= tab.value(mc);
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
    Ok(LpResult {
        status: Status::Optimal,
        primal: Some(x),
        objective_value: Some(value),
        certificate: None,
    })
}

/// Checks the Farkas conditions for `cert` against `lp`.
pub fn verify_certificate(lp: &LinearProgram, cert: &FarkasCertificate) -> bool {
    let nv = lp.num_vars;
    if cert.rows.len() != lp.constraints.len() || cert.upper.len() != nv {
        return false;
    }
    let sign_ok = |y: &Rational, rel: Relation| match rel {
        Relation::Le => !y.is_positive(),
        Relation::Ge => !y.is_negative(),
        Relation::Eq => true,
    };
    let mut g = vec![Rational::zero(); nv];
    let mut yb = Rational::zero();
    for (c, y) in lp.constraints.iter().zip(&cert.rows) {
        if !sign_ok(y, c.relation) {
            return false;
        }
        if y.is_zero() {
            continue;
        }
        for (gj, a) in g.iter_mut().zip(&c.coeffs) {
            *gj += y * a;
        }
        yb += y * &c.rhs;
    }
    for j in 0..nv {
        let y = &cert.upper[j];
        if y.is_zero() {
            continue;
        }
        match &lp.upper[j] {
            Some(u) if !y.is_positive() => {
                g[j] += y;
                yb += y * u;
            }
            _ => return false,
        }
    }
    let mut gl = Rational::zero();
    for j in 0..nv {
        match &lp.lower[j] {
            Some(l) => {
                if g[j].is_positive() {
                    return false;
                }
                gl += &g[j] * l;
            }
            None => {
                if !g[j].is_zero() {
                    return false;
                }
            }
        }
    }
    yb > gl
}

/// Checks a claimed optimal point: bounds and constraints hold exactly and
/// the objective value matches.
pub fn verify_primal(lp: &LinearProgram, x: &[Rational], value: &Rational) -> bool {
    if x.len() != lp.num_vars {
        return false;
    }
    for j in 0..lp.num_vars {
        if lp.lower[j].as_ref().is_some_and(|l| &x[j] < l) || lp.upper[j].as_ref().is_some_and(|u| &x[j] > u) {
            return false;
        }
    }
    for c in &lp.constraints {
        let lhs: Rational = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs,
            Relation::Eq => lhs == c.rhs,
            Relation::Ge => lhs >= c.rhs,
        };
        if !ok {
            return false;
        }
    }
    let obj: Rational = lp.objective.iter().zip(x).map(|(a, v)| a * v).sum();
    &obj == value
}

/// Verifies whatever evidence `result` carries. Optimality itself is not
/// re-proved; an optimal result must be a feasible point with the stated
/// value, an infeasible one must carry a valid certificate.
pub fn verify(lp: &LinearProgram, result: &LpResult) -> bool {
    match result.status {
        Status::Optimal => match (&result.primal, &result.objective_value) {
            (Some(x), Some(v)) => verify_primal(lp, x, v),
            _ => false,
        },
        Status::Infeasible => result.certificate.as_ref().is_some_and(|c| verify_certificate(lp, c)),
        Status::Unbounded => true,
    }
}

impl fmt::Display for FarkasCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rows [{}] upper [{}]", format_vector(&self.rows), format_vector(&self.upper))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn r(v: i64) -> Rational {
        int(v)
    }

    #[test]
    fn maximise_single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![r(1)], Relation::Le, r(1)).unwrap();
        lp.set_objective(Direction::Maximize, vec![r(1)]).unwrap();
        let res = solve(&lp).unwrap();
        assert_eq!(res.status, Status::Optimal);
        assert_eq!(res.primal.as_deref(), Some(&[r(1)][..]));
        assert!(verify(&lp, &res));
    }

    #[test]
    fn infeasible_bound_has_certificate() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![r(1)], Relation::Le, r(-1)).unwrap();
        let res = solve(&lp).unwrap();
        assert_eq!(res.status, Status::Infeasible);
        let cert = res.certificate.clone().unwrap();
        assert!(cert.rows[0] < r(0));
        assert!(verify(&lp, &res));
        let mut forged = cert;
        forged.rows[0] = r(1);
        assert!(!verify_certificate(&lp, &forged));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![r(1), r(-1)], Relation::Le, r(1)).unwrap();
        lp.set_objective(Direction::Maximize, vec![r(1), r(0)]).unwrap();
        assert_eq!(solve(&lp).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x + y with x free, -2 <= y <= 3, x - y >= -5/2, x >= y - 7.
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, None, None).unwrap();
        lp.set_bounds(1, Some(r(-2)), Some(r(3))).unwrap();
        lp.add_constraint(vec![r(1), r(-1)], Relation::Ge, rat(-5, 2)).unwrap();
        lp.add_constraint(vec![r(1), r(-1)], Relation::Ge, r(-7)).unwrap();
        lp.set_objective(Direction::Minimize, vec![r(1), r(1)]).unwrap();
        let res = solve(&lp).unwrap();
        assert_eq!(res.objective_value, Some(rat(-13, 2)));
        assert!(verify(&lp, &res));
    }

    #[test]
    fn infeasible_through_upper_bound_and_equality() {
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, Some(r(0)), Some(r(1))).unwrap();
        lp.set_bounds(1, None, Some(rat(1, 3))).unwrap();
        lp.add_constraint(vec![r(1), r(1)], Relation::Eq, r(2)).unwrap();
        let res = solve(&lp).unwrap();
        assert_eq!(res.status, Status::Infeasible);
        assert!(verify(&lp, &res));
    }

    /// Brute-force optimum over all basic solutions of `Ax ≤ b, x ≥ 0`
    /// (three variables): choose three tight hyperplanes among the rows and
    /// the coordinate planes, solve by Cramer's rule, keep feasible points.
    fn vertex_scan(a: &[[i64; 3]], b: &[i64], c: &[i64; 3]) -> Option<Rational> {
        let mut planes: Vec<([Rational; 3], Rational)> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| ([r(row[0]), r(row[1]), r(row[2])], r(bi)))
            .collect();
        for j in 0..3 {
            let mut e = [r(0), r(0), r(0)];
            e[j] = r(1);
            planes.push((e, r(0)));
        }
        let det3 = |m: &[[Rational; 3]; 3]| {
            &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1]) - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
                + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
        };
        let mut best: Option<Rational> = None;
        let k = planes.len();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let m = [planes[i].0.clone(), planes[j].0.clone(), planes[l].0.clone()];
                    let rhs = [planes[i].1.clone(), planes[j].1.clone(), planes[l].1.clone()];
                    let det = det3(&m);
                    if det.is_zero() {
                        continue;
                    }
                    let mut x = Vec::new();
                    for col in 0..3 {
                        let mut mm = m.clone();
                        for row in 0..3 {
                            mm[row][col] = rhs[row].clone();
                        }
                        x.push(det3(&mm) / &det);
                    }
                    let feasible = x.iter().all(|v| !v.is_negative())
                        && a.iter().zip(b).all(|(row, &bi)| {
                            (0..3).map(|t| r(row[t]) * &x[t]).sum::<Rational>() <= r(bi)
                        });
                    if feasible {
                        let v: Rational = (0..3).map(|t| r(c[t]) * &x[t]).sum();
                        if best.as_ref().is_none_or(|bv| &v > bv) {
                            best = Some(v);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn degenerate_tie_matches_vertex_scan() {
        // Several constraints meet at the optimum, giving ratio ties.
        let a = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1], [2, 1, 1]];
        let b = [1, 1, 1, 1, 2];
        let c = [1, 1, 1];
        let mut lp = LinearProgram::new(3);
        for (row, &bi) in a.iter().zip(&b) {
            lp.add_constraint(row.iter().map(|&v| r(v)).collect(), Relation::Le, r(bi)).unwrap();
        }
        lp.set_objective(Direction::Maximize, c.iter().map(|&v| r(v)).collect()).unwrap();
        let res = solve(&lp).unwrap();
        assert_eq!(res.objective_value, vertex_scan(&a, &b, &c));
        assert_eq!(res, solve(&lp).unwrap());
    }

    #[test]
    fn text_dump_lists_everything() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![rat(1, 2), r(0)], Relation::Ge, r(1)).unwrap();
        lp.set_bounds(1, None, Some(r(4))).unwrap();
        let text = lp.to_text();
        assert!(text.contains("c0: 1/2 x0 >= 1"));
        assert!(text.contains("-inf <= x1 <= 4"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn random_programs_match_vertex_scan(
            a in proptest::collection::vec(proptest::array::uniform3(-3i64..=4), 1..5),
            b in proptest::collection::vec(-2i64..=6, 5),
            c in proptest::array::uniform3(-2i64..=3),
        ) {
            let b = &b[..a.len()];
            let mut lp = LinearProgram::new(3);
            for j in 0..3 {
                lp.set_bounds(j, Some(r(0)), Some(r(5))).unwrap();
            }
            for (row, &bi) in a.iter().zip(b) {
                lp.add_constraint(row.iter().map(|&v| r(v)).collect(), Relation::Le, r(bi)).unwrap();
            }
            lp.set_objective(Direction::Maximize, c.iter().map(|&v| r(v)).collect()).unwrap();
            let res = solve(&lp).unwrap();
            prop_assert!(verify(&lp, &res));
            let mut rows: Vec<[i64; 3]> = a.clone();
            let mut rhs: Vec<i64> = b.to_vec();
            for j in 0..3 {
                let mut e = [0; 3];
                e[j] = 1;
                rows.push(e);
                rhs.push(5);
            }
            let scan = vertex_scan(&rows, &rhs, &c);
            match res.status {
                Status::Optimal => prop_assert_eq!(res.objective_value.clone(), scan),
                Status::Infeasible => prop_assert!(scan.is_none()),
                Status::Unbounded => prop_assert!(false, "bounded box reported unbounded"),
            }
            prop_assert_eq!(res, solve(&lp).unwrap());
        }
    }
}
