//! One-dimensional specialization: sorted order, frozen agents, subsystem
//! decomposition, the leftmost active agent, and the progress certificate
//! behind the cubic convergence bound.

use serde_json::{json, Value};

use crate::config::{agent_weight, neighbors, Configuration};
use crate::error::{HkError, Result};
use crate::scalar::Scalar;
use crate::sim::{cubic_budget, SimParams, Trajectory};

/// Float-mode slack on the 1/(2n^2) progress threshold.
pub const FLOAT_CERT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LeftmoveOutcome<T> {
    /// Weight at t+1 or t+2 exceeds the weight at t.
    WeightIncreased { from: usize, to: usize },
    /// Frozen at t+1 or t+2.
    Froze { at: usize },
    /// Moved right by at least 1/(2n^2) by t+2.
    MovedRight { amount: T },
    /// Noisy-model early exit: moved right by more than (1-eta)/n at t+1.
    MovedRightEarly { amount: T },
    /// None of the above: a counterexample to the progress guarantee.
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeftmoveVerdict<T> {
    pub t: usize,
    pub ell: usize,
    pub outcome: LeftmoveOutcome<T>,
}

impl<T: Scalar> LeftmoveVerdict<T> {
    pub fn is_violated(&self) -> bool {
        matches!(self.outcome, LeftmoveOutcome::Violated)
    }

    pub fn to_json(&self) -> Value {
        let (outcome, detail) = match &self.outcome {
            LeftmoveOutcome::WeightIncreased { from, to } => {
                ("weight_increased", json!({"from": from, "to": to}))
            }
            LeftmoveOutcome::Froze { at } => ("froze", json!({ "at": at })),
            LeftmoveOutcome::MovedRight { amount } => {
                ("moved_right", json!({"amount": amount.render()}))
            }
            LeftmoveOutcome::MovedRightEarly { amount } => {
                ("moved_right_early", json!({"amount": amount.render()}))
            }
            LeftmoveOutcome::Violated => ("violated", Value::Null),
        };
        json!({"t": self.t, "ell": self.ell, "outcome": outcome, "detail": detail})
    }
}

/// Ordered partition into maximal runs whose consecutive sorted gaps are
/// at most 1; distinct blocks evolve independently forever after.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Agent indices, grouped by block, each block in sorted position order.
    pub blocks: Vec<Vec<usize>>,
}

/// Agent indices sorted by position, ties broken by index. Stable across
/// time in the homogeneous model.
pub fn sorted_order<T: Scalar>(config: &Configuration<T>) -> Result<Vec<usize>> {
    config.require_dim(1)?;
    let mut idx: Vec<usize> = (0..config.n()).collect();
    idx.sort_by(|&a, &b| {
        config
            .x(a)
            .partial_cmp(config.x(b))
            .expect("comparable coordinates")
            .then(a.cmp(&b))
    });
    Ok(idx)
}

/// True iff all of agent i's neighbors sit exactly at its own position
/// (within merge_tol in float mode); such an agent never moves again.
pub fn is_frozen<T: Scalar>(
    config: &Configuration<T>,
    i: usize,
    params: &SimParams<T>,
) -> Result<bool> {
    config.require_dim(1)?;
    let nbrs = neighbors(config, i, params)?;
    Ok(nbrs.iter().all(|&j| {
        crate::config::coincide(&config.positions[j], &config.positions[i], &params.merge_tol)
    }))
}

/// The leftmost non-frozen agent in sorted order, or None once the system
/// has converged. The returned agent never has a neighbor strictly to its
/// left.
pub fn leftmost_active<T: Scalar>(
    config: &Configuration<T>,
    params: &SimParams<T>,
) -> Result<Option<usize>> {
    config.require_dim(1)?;
    for &i in &sorted_order(config)? {
        if !is_frozen(config, i, params)? {
            debug_assert!(
                neighbors(config, i, params)?
                    .iter()
                    .all(|&j| config.x(j) >= config.x(i)),
                "leftmost active agent has a neighbor strictly to its left"
            );
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Splits the sorted line at every gap > 1.
pub fn decompose<T: Scalar>(
    config: &Configuration<T>,
    params: &SimParams<T>,
) -> Result<Decomposition> {
    config.require_dim(1)?;
    let order = sorted_order(config)?;
    let one_eps = T::one() + params.neighbor_eps.clone();
    let mut blocks = vec![vec![order[0]]];
    for w in order.windows(2) {
        let gap = config.x(w[1]).clone() - config.x(w[0]).clone();
        if gap.clone() * gap > one_eps {
            blocks.push(Vec::new());
        }
        blocks.last_mut().unwrap().push(w[1]);
    }
    Ok(Decomposition { blocks })
}

/// The trichotomy of the 1D progress guarantee for agent l(t): by time t+2 it
/// gains weight, freezes, or moves right by at least 1/(2n^2).
pub fn leftmove_certificate<T: Scalar>(
    traj: &Trajectory<T>,
    t: usize,
    params: &SimParams<T>,
) -> Result<LeftmoveVerdict<T>> {
    let c0 = traj.config_at(t)?;
    c0.require_dim(1)?;
    let ell = leftmost_active(c0, params)?.ok_or(HkError::NoActiveAgent(t))?;
    let c1 = traj.config_at(t + 1)?;
    let c2 = traj.config_at(t + 2)?;
    let outcome = evaluate_trichotomy(c0, c1, c2, ell, params, None)?;
    Ok(LeftmoveVerdict { t, ell, outcome })
}

/// Shared trichotomy evaluation; `early_threshold` enables the noisy
/// model's (1-eta)/n early-exit case at t+1.
pub(crate) fn evaluate_trichotomy<T: Scalar>(
    c0: &Configuration<T>,
    c1: &Configuration<T>,
    c2: &Configuration<T>,
    ell: usize,
    params: &SimParams<T>,
    early_threshold: Option<T>,
) -> Result<LeftmoveOutcome<T>> {
    let n = c0.n();
    let w0 = agent_weight(c0, ell, &params.merge_tol);
    let w1 = agent_weight(c1, ell, &params.merge_tol);
    let w2 = agent_weight(c2, ell, &params.merge_tol);
    if w1 > w0 {
        return Ok(LeftmoveOutcome::WeightIncreased { from: w0, to: w1 });
    }
    if w2 > w0 {
        return Ok(LeftmoveOutcome::WeightIncreased { from: w0, to: w2 });
    }
    if is_frozen(c1, ell, params)? {
        return Ok(LeftmoveOutcome::Froze { at: c1.time });
    }
    if is_frozen(c2, ell, params)? {
        return Ok(LeftmoveOutcome::Froze { at: c2.time });
    }
    let slack = if T::EXACT {
        T::zero()
    } else {
        T::from_f64_exact(FLOAT_CERT_SLACK)
    };
    let moved = c2.x(ell).clone() - c0.x(ell).clone();
    let threshold = T::from_ratio(1, 2 * (n * n) as i64) - slack.clone();
    if moved >= threshold {
        return Ok(LeftmoveOutcome::MovedRight { amount: moved });
    }
    if let Some(early) = early_threshold {
        let moved1 = c1.x(ell).clone() - c0.x(ell).clone();
        if moved1 > early - slack {
            return Ok(LeftmoveOutcome::MovedRightEarly { amount: moved1 });
        }
    }
    Ok(LeftmoveOutcome::Violated)
}

/// True iff the trajectory reached its fixed point within the proof budget
/// 2(n + 2n^3) + 2.
pub fn convergence_bound_check<T: Scalar>(traj: &Trajectory<T>) -> bool {
    match traj.converged_at {
        Some(t) => t <= cubic_budget(traj.n()),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate;
    use num_rational::BigRational;

    fn r(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    fn rq(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn cfg(xs: Vec<BigRational>) -> Configuration<BigRational> {
        Configuration::from_1d(xs, 0).unwrap()
    }

    fn p() -> SimParams<BigRational> {
        SimParams::exact(100_000)
    }

    #[test]
    fn sorted_order_basic_and_ties() {
        let c = cfg(vec![r(2), r(0), r(1)]);
        assert_eq!(sorted_order(&c).unwrap(), vec![1, 2, 0]);
        let c = cfg(vec![r(0), r(0), r(1)]);
        assert_eq!(sorted_order(&c).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_higher_dimension() {
        let c = Configuration::new(
            vec![crate::config::Point::new(vec![r(0), r(0)])],
            0,
        )
        .unwrap();
        assert!(matches!(
            sorted_order(&c),
            Err(HkError::WrongDimension { .. })
        ));
    }

    #[test]
    fn frozen_detection() {
        let c = cfg(vec![r(0), r(2)]);
        assert!(is_frozen(&c, 0, &p()).unwrap());
        assert!(is_frozen(&c, 1, &p()).unwrap());
        let c = cfg(vec![r(0), rq(1, 2)]);
        assert!(!is_frozen(&c, 0, &p()).unwrap());
        assert!(!is_frozen(&c, 1, &p()).unwrap());
        let c = cfg(vec![r(0), r(0), r(2)]);
        assert!(is_frozen(&c, 0, &p()).unwrap());
        assert!(is_frozen(&c, 1, &p()).unwrap());
    }

    #[test]
    fn leftmost_active_cases() {
        let c = cfg(vec![r(0), r(1), r(2)]);
        assert_eq!(leftmost_active(&c, &p()).unwrap(), Some(0));
        // first pair frozen, second pair active
        let c = cfg(vec![r(0), r(0), r(2), rq(5, 2)]);
        assert_eq!(leftmost_active(&c, &p()).unwrap(), Some(2));
        let c = cfg(vec![r(0), r(5)]);
        assert_eq!(leftmost_active(&c, &p()).unwrap(), None);
    }

    #[test]
    fn decompose_blocks() {
        let c = cfg(vec![r(0), rq(1, 2), r(2)]);
        let dec = decompose(&c, &p()).unwrap();
        assert_eq!(dec.blocks, vec![vec![0, 1], vec![2]]);
        // gaps of exactly 1 keep everything in one block
        let c = cfg(vec![r(0), r(1), r(2)]);
        assert_eq!(decompose(&c, &p()).unwrap().blocks, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn blocks_simulate_independently() {
        let c = cfg(vec![r(0), rq(1, 2), r(3), r(4)]);
        let dec = decompose(&c, &p()).unwrap();
        assert_eq!(dec.blocks.len(), 2);
        let whole = simulate(&c, &p());
        for block in &dec.blocks {
            let sub = cfg(block.iter().map(|&i| c.x(i).clone()).collect());
            let part = simulate(&sub, &p());
            for (k, &i) in block.iter().enumerate() {
                assert_eq!(whole.final_config().x(i), part.final_config().x(k));
            }
        }
    }

    #[test]
    fn certificate_pair_merge_counts_as_weight_increase() {
        // n=2: both agents land on 1/2, so the weight branch fires before
        // the displacement branch even though l also moved 1/2 >= 1/8
        let traj = simulate(&cfg(vec![r(0), r(1)]), &p());
        let v = leftmove_certificate(&traj, 0, &p()).unwrap();
        assert_eq!(v.ell, 0);
        assert_eq!(v.outcome, LeftmoveOutcome::WeightIncreased { from: 1, to: 2 });
    }

    #[test]
    fn certificate_lone_leftmost_moves_right() {
        // unit line on 5 agents: agent 0 moves 0 -> 1/2 -> 3/4, staying
        // distinct and unfrozen over the window, threshold is 1/50
        let traj = simulate(&cfg((0..5).map(r).collect()), &p());
        let v = leftmove_certificate(&traj, 0, &p()).unwrap();
        assert_eq!(v.ell, 0);
        assert_eq!(
            v.outcome,
            LeftmoveOutcome::MovedRight { amount: rq(3, 4) }
        );
    }

    #[test]
    fn certificate_weight_increase_on_collapse() {
        // 0, 2/5, 1/2 all collapse to 3/10 in one step
        let traj = simulate(&cfg(vec![r(0), rq(2, 5), rq(1, 2)]), &p());
        let v = leftmove_certificate(&traj, 0, &p()).unwrap();
        assert!(matches!(
            v.outcome,
            LeftmoveOutcome::WeightIncreased { from: 1, .. }
        ));
    }

    #[test]
    fn certificate_requires_active_agent() {
        let traj = simulate(&cfg(vec![r(0), r(5)]), &p());
        assert!(matches!(
            leftmove_certificate(&traj, 0, &p()),
            Err(HkError::NoActiveAgent(0))
        ));
    }

    #[test]
    fn bound_check_on_unit_line() {
        let c = cfg((0..10).map(r).collect());
        let traj = simulate(&c, &p());
        assert!(convergence_bound_check(&traj));
        assert!(traj.converged_at.unwrap() <= 4022);
    }

    #[test]
    fn bound_check_single_agent() {
        let traj = simulate(&cfg(vec![r(3)]), &p());
        assert_eq!(traj.converged_at, Some(0));
        assert!(convergence_bound_check(&traj));
    }
}
