//! Small 0/1 packing programs `max Σx s.t. x(M_r) ≤ c_r, x ≥ 0` with integer
//! capacities, solved on a condensed fraction-free tableau in `i128`.
//!
//! This is the hot loop of feasibility checking, so the general solver is
//! bypassed. Arithmetic is checked; any overflow makes the caller fall back
//! to the general solver.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct PackingProblem {
    items: usize,
    rows: Vec<(u64, i64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingOutcome {
    /// Optimal value, or the first value reaching the target.
    pub value: Rational,
    pub x: Vec<Rational>,
    /// Optimal duals, one per input row; empty when the target was reached.
    pub y: Vec<Rational>,
    pub reached: bool,
    /// `x` as integer numerators over `raw_den`.
    pub raw: Vec<i128>,
    pub raw_den: i128,
}

impl PackingProblem {
    /// Rows are `(mask over items, capacity ≥ 0)`.
    pub fn new(items: usize, rows: Vec<(u64, i64)>) -> Self {
        assert!(items <= 64);
        debug_assert!(rows.iter().all(|&(_, c)| c >= 0));
        Self { items, rows }
    }

    /// Maximises `Σx`, stopping as soon as the value reaches `target`.
    /// Returns `None` if intermediate values overflow `i128`.
    pub fn solve_until(&self, target: i64) -> Option<PackingOutcome> {
        let full: u64 = if self.items == 64 { u64::MAX } else { (1u64 << self.items) - 1 };

        // Items inside a zero-capacity row are fixed at zero.
        let dead = self.rows.iter().filter(|r| r.1 == 0).fold(0u64, |acc, r| acc | r.0);
        let live_mask = full & !dead;
        let live: Vec<usize> = (0..self.items).filter(|&a| live_mask >> a & 1 == 1).collect();

        // Restrict rows to live items, keep the smallest capacity per mask and
        // drop rows implied by a row on a superset with no larger capacity.
        let mut kept: Vec<(u64, i64, usize)> = Vec::new();
        for (idx, &(mask, cap)) in self.rows.iter().enumerate() {
            let m = mask & live_mask;
            if m == 0 || cap == 0 {
                continue;
            }
            kept.push((m, cap, idx));
        }
        kept.sort_by_key(|&(m, c, idx)| (m, c, idx));
        kept.dedup_by_key(|r| r.0);
        let rows: Vec<(u64, i64, usize)> = kept
            .iter()
            .filter(|&&(m, c, idx)| {
                !kept
                    .iter()
                    .any(|&(m2, c2, idx2)| idx2 != idx && m & m2 == m && c2 <= c && (m2 != m || idx2 < idx))
            })
            .copied()
            .collect();

        let k = live.len();
        let m = rows.len();
        let rhs = k;
        // Condensed tableau: column j is a nonbasic variable, row 0 the
        // objective. Variable labels: items are 0..k, slacks k..k+m.
        let mut t = vec![vec![0i128; k + 1]; m + 1];
        for j in 0..k {
            t[0][j] = -1;
        }
        for (i, &(mask, cap, _)) in rows.iter().enumerate() {
            for (j, &a) in live.iter().enumerate() {
                if mask >> a & 1 == 1 {
                    t[i + 1][j] = 1;
                }
            }
            t[i + 1][rhs] = cap as i128;
        }
        let mut col_var: Vec<usize> = (0..k).collect();
        let mut row_var: Vec<usize> = (k..k + m).collect();
        let mut d: i128 = 1;
        let target = target as i128;

        let reached = loop {
            if t[0][rhs] >= target.checked_mul(d)? {
                break true;
            }
            let entering = (0..k).filter(|&j| t[0][j] < 0).min_by_key(|&j| col_var[j]);
            let Some(s) = entering else {
                break false;
            };
            let mut best: Option<usize> = None;
            for i in 1..=m {
                if t[i][s] <= 0 {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let lhs = t[i][rhs].checked_mul(t[b][s])?;
                        let rv = t[b][rhs].checked_mul(t[i][s])?;
                        if lhs < rv || (lhs == rv && row_var[i - 1] < row_var[b - 1]) {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            // Σx is bounded by any row covering a live item, and every live
            // item lies in some row (the caller includes the full set).
            let r = best?;
            let p = t[r][s];
            for i in 0..=m {
                if i == r {
                    continue;
                }
                let f = t[i][s];
                for j in 0..=k {
                    if j == s {
                        continue;
                    }
                    let v = t[i][j].checked_mul(p)?.checked_sub(f.checked_mul(t[r][j])?)?;
                    t[i][j] = v / d;
                }
                t[i][s] = -f;
            }
            t[r][s] = d;
            d = p;
            std::mem::swap(&mut col_var[s], &mut row_var[r - 1]);
        };

        let den = BigInt::from(d);
        let frac = |v: i128| Rational::new(BigInt::from(v), den.clone());
        let mut x = vec![Rational::zero(); self.items];
        let mut raw = vec![0i128; self.items];
        for (i, &v) in row_var.iter().enumerate() {
            if v < k {
                x[live[v]] = frac(t[i + 1][rhs]);
                raw[live[v]] = t[i + 1][rhs];
            }
        }
        let mut y = Vec::new();
        if !reached {
            y = vec![Rational::zero(); self.rows.len()];
            for (j, &v) in col_var.iter().enumerate() {
                if v >= k {
                    y[rows[v - k].2] = frac(t[0][j]);
                }
            }
            for (idx, &(_, cap)) in self.rows.iter().enumerate() {
                if cap == 0 {
                    y[idx] = Rational::from_integer(1.into());
                }
            }
        }
        Some(PackingOutcome {
            value: frac(t[0][rhs]),
            x,
            y,
            reached,
            raw,
            raw_den: d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve, Direction, LinearProgram, Relation};
    use super::*;
    use crate::rational::int;
    use proptest::prelude::*;

    fn general(items: usize, rows: &[(u64, i64)]) -> Rational {
        let mut lp = LinearProgram::new(items);
        for &(mask, cap) in rows {
            let coeffs = (0..items).map(|a| int((mask >> a & 1) as i64)).collect();
            lp.add_constraint(coeffs, Relation::Le, int(cap)).unwrap();
        }
        lp.set_objective(Direction::Maximize, vec![int(1); items]).unwrap();
        solve(&lp).unwrap().objective_value.unwrap()
    }

    fn check_duals(items: usize, rows: &[(u64, i64)], out: &PackingOutcome) {
        for a in 0..items {
            let cover: Rational = rows
                .iter()
                .zip(&out.y)
                .filter(|((m, _), _)| m >> a & 1 == 1)
                .map(|(_, y)| y.clone())
                .sum();
            assert!(cover >= int(1), "item {a} not covered");
        }
        let dual: Rational = rows.iter().zip(&out.y).map(|((_, c), y)| y * int(*c)).sum();
        assert_eq!(dual, out.value);
    }

    #[test]
    fn small_example() {
        let rows = vec![(0b011, 1), (0b110, 1), (0b111, 3)];
        let out = PackingProblem::new(3, rows.clone()).solve_until(100).unwrap();
        assert_eq!(out.value, int(2));
        assert!(!out.reached);
        check_duals(3, &rows, &out);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn agrees_with_general_solver(
            items in 1usize..7,
            raw in proptest::collection::vec((1u64..128, 0i64..6), 1..10),
        ) {
            let full = (1u64 << items) - 1;
            let mut rows: Vec<(u64, i64)> = raw.into_iter().map(|(m, c)| (m & full, c)).filter(|r| r.0 != 0).collect();
            rows.push((full, 7));
            let out = PackingProblem::new(items, rows.clone()).solve_until(1000).unwrap();
            prop_assert_eq!(&out.value, &general(items, &rows));
            check_duals(items, &rows, &out);
            for (mask, cap) in &rows {
                let used: Rational = (0..items).filter(|a| mask >> a & 1 == 1).map(|a| out.x[a].clone()).sum();
                prop_assert!(used <= int(*cap));
            }
        }
    }
}
