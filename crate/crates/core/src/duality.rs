//! The rank-simplex duality `λ ↦ λ★` and the radius geometry around the
//! uniform lottery.
//!
//! A boundary lottery (one with a zero coordinate) is sent to the far end of
//! the half-line from `UNI` away from its reflection. Interior lotteries are
//! written as `δ·UNI + (1−δ)·μ` with `μ` on the boundary and mapped linearly.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lottery::{uniform, RankLottery};
use crate::rational::{int, Rational};

/// `λ = δ·UNI + (1−δ)·boundary`, with `boundary` absent exactly when `λ` is
/// uniform (then `δ = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDecomposition {
    pub delta: Rational,
    pub boundary: Option<RankLottery>,
}

pub fn boundary_decompose(lambda: &RankLottery) -> BoundaryDecomposition {
    if lambda.is_uniform() {
        return BoundaryDecomposition {
            delta: Rational::one(),
            boundary: None,
        };
    }
    let p = lambda.p();
    let pm = int(p as i64) * lambda.min_coord();
    // Stretch factor 1/(1 − p·min) carries λ along its radius to the boundary.
    let stretch = (Rational::one() - &pm).recip();
    let u = Rational::new(1.into(), (p as i64).into());
    let probs = lambda
        .probs()
        .iter()
        .map(|x| &u + &stretch * (x - &u))
        .collect();
    BoundaryDecomposition {
        delta: pm,
        boundary: Some(RankLottery::from_probs_unchecked(probs)),
    }
}

/// Dual of a boundary lottery: `λ★_k = (λ₊ − λ_{p+1−k}) / (p·λ₊ − 1)`.
fn dual_boundary(lambda: &RankLottery) -> RankLottery {
    let p = lambda.p();
    let top = lambda.max_coord();
    let scale = (int(p as i64) * &top - Rational::one()).recip();
    let probs = lambda.probs().iter().rev().map(|x| (&top - x) * &scale).collect();
    RankLottery::from_probs_unchecked(probs)
}

pub fn dual(lambda: &RankLottery) -> RankLottery {
    let dec = boundary_decompose(lambda);
    match dec.boundary {
        None => lambda.clone(),
        Some(mu) => {
            let star = dual_boundary(&mu);
            if dec.delta.is_zero() {
                return star;
            }
            let p = lambda.p();
            let u = Rational::new(1.into(), (p as i64).into());
            let rest = Rational::one() - &dec.delta;
            let probs = star.probs().iter().map(|x| &dec.delta * &u + &rest * x).collect();
            RankLottery::from_probs_unchecked(probs)
        }
    }
}

/// Largest `α` keeping `UNI + α(λ − UNI)` in the simplex; `None` when `λ`
/// is uniform and every `α` works.
pub fn max_radius_alpha(lambda: &RankLottery) -> Option<Rational> {
    if lambda.is_uniform() {
        return None;
    }
    let pm = int(lambda.p() as i64) * lambda.min_coord();
    Some((Rational::one() - pm).recip())
}

/// Largest `α` keeping `UNI + α(UNI − λ̃)` in the simplex.
pub fn max_anti_radius_alpha(lambda: &RankLottery) -> Option<Rational> {
    if lambda.is_uniform() {
        return None;
    }
    let pm = int(lambda.p() as i64) * lambda.max_coord();
    Some((pm - Rational::one()).recip())
}

fn affine(lambda: &RankLottery, alpha: &Rational, direction: Vec<Rational>, max: Option<Rational>) -> Result<RankLottery> {
    if alpha.is_negative() {
        return Err(Error::Argument("coefficient must be nonnegative".into()));
    }
    if let Some(m) = &max {
        if alpha > m {
            return Err(Error::Range { max_alpha: m.to_string() });
        }
    }
    let u = Rational::new(1.into(), (lambda.p() as i64).into());
    let probs = direction.into_iter().map(|d| &u + alpha * d).collect();
    RankLottery::new(probs)
}

/// `UNI + α(λ − UNI)`.
pub fn radius_point(lambda: &RankLottery, alpha: &Rational) -> Result<RankLottery> {
    let u = Rational::new(1.into(), (lambda.p() as i64).into());
    let dir = lambda.probs().iter().map(|x| x - &u).collect();
    affine(lambda, alpha, dir, max_radius_alpha(lambda))
}

/// `UNI + α(UNI − λ̃)`, where `λ̃` is `λ` read from the top rank down.
pub fn anti_radius_point(lambda: &RankLottery, alpha: &Rational) -> Result<RankLottery> {
    let u = Rational::new(1.into(), (lambda.p() as i64).into());
    let dir = lambda.reflect().probs().iter().map(|x| &u - x).collect();
    affine(lambda, alpha, dir, max_anti_radius_alpha(lambda))
}

/// Convenience: `UNI(p)` mixed with `λ`, i.e. `(1−α)·UNI + α·λ`.
pub fn toward_uniform(lambda: &RankLottery, alpha: &Rational) -> Result<RankLottery> {
    lambda.mix(&uniform(lambda.p())?, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::{rd, vt};
    use crate::rational::rat;
    use proptest::prelude::*;

    fn lot(text: &str) -> RankLottery {
        RankLottery::parse(text).unwrap()
    }

    #[test]
    fn decomposition_examples() {
        let v = vt(3, 6).unwrap();
        let d = boundary_decompose(&v);
        assert!(d.delta.is_zero());
        assert_eq!(d.boundary.as_ref(), Some(&v));

        assert_eq!(boundary_decompose(&uniform(6).unwrap()).delta, int(1));

        let half = toward_uniform(&v, &rat(1, 2)).unwrap();
        let d = boundary_decompose(&half);
        assert_eq!(d.delta, rat(1, 2));
        assert_eq!(d.boundary, Some(v));
    }

    #[test]
    fn dual_examples() {
        for n in 3..10 {
            for p in n + 1..=10 {
                assert_eq!(dual(&vt(n, p).unwrap()), rd(n, p).unwrap(), "n = {n}, p = {p}");
            }
        }
        assert_eq!(dual(&uniform(7).unwrap()), uniform(7).unwrap());
        assert_eq!(dual(&lot("1/2,0,0,1/2,0")), lot("1/3,0,1/3,1/3,0"));
        assert_eq!(dual(&lot("0,1/3,1/3,1/3,0,0")), lot("1/3,1/3,0,0,0,1/3"));
    }

    #[test]
    fn radius_examples() {
        let v = vt(3, 6).unwrap();
        assert_eq!(radius_point(&v, &int(0)).unwrap(), uniform(6).unwrap());
        assert_eq!(radius_point(&v, &int(1)).unwrap(), v);
        let alpha = max_anti_radius_alpha(&v).unwrap();
        assert_eq!(alpha, int(1));
        assert_eq!(anti_radius_point(&v, &alpha).unwrap(), rd(3, 6).unwrap());
        match radius_point(&v, &int(2)) {
            Err(Error::Range { max_alpha }) => assert_eq!(max_alpha, "1"),
            other => panic!("expected range error, got {other:?}"),
        }
        let interior = lot("1/4,1/4,1/4,1/8,1/8");
        assert_eq!(max_radius_alpha(&interior), Some(rat(8, 3)));
    }

    fn arb_lottery(p: usize) -> impl Strategy<Value = RankLottery> {
        proptest::collection::vec(0u32..7, p).prop_filter_map("nonzero", |w| {
            let s: u32 = w.iter().sum();
            (s > 0).then(|| RankLottery::new(w.iter().map(|&x| rat(x as i64, s as i64)).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn dual_is_an_involution(lambda in (2usize..9).prop_flat_map(arb_lottery)) {
            prop_assert_eq!(dual(&dual(&lambda)), lambda);
        }

        #[test]
        fn dual_preserves_the_radius_coefficient(lambda in (2usize..9).prop_flat_map(arb_lottery)) {
            let a = boundary_decompose(&lambda);
            let b = boundary_decompose(&dual(&lambda));
            prop_assert_eq!(a.delta, b.delta);
        }

        #[test]
        fn boundary_decomposition_recombines(lambda in (2usize..9).prop_flat_map(arb_lottery)) {
            let d = boundary_decompose(&lambda);
            if let Some(mu) = d.boundary {
                prop_assert!(mu.is_boundary());
                let back = toward_uniform(&mu, &(Rational::one() - &d.delta)).unwrap();
                prop_assert_eq!(back, lambda);
            } else {
                prop_assert!(lambda.is_uniform());
            }
        }
    }
}
