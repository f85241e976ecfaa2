//! The noisy 1D variant: each agent i averages over the asymmetric window
//! -1+eta_i <= x_j - x_i <= 1. The neighbor relation is not symmetric and
//! order need not be preserved, but the same cubic-time progress argument
//! applies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Point};
use crate::error::{HkError, Result};
use crate::one_dim::{evaluate_trichotomy, LeftmoveVerdict};
use crate::scalar::{sample_open_rational, Scalar};
use crate::sim::{build_report, simulate_with, SimParams, StepReport, Trajectory};

#[derive(Debug, Clone)]
pub struct NoisyParams<T> {
    /// Global bound eta in (0,1).
    pub eta: T,
    /// Per-agent left-neighborhood parameters, each in (0, eta).
    pub etas: Vec<T>,
}

/// JSON sidecar format stored next to an instance file.
#[derive(Debug, Serialize, Deserialize)]
pub struct NoisySidecar {
    pub eta: String,
    pub etas: Vec<String>,
}

impl<T: Scalar> NoisyParams<T> {
    pub fn new(eta: T, etas: Vec<T>) -> Result<Self> {
        if eta <= T::zero() || eta >= T::one() {
            return Err(HkError::InvalidNoisyParams(
                "eta must lie in (0,1)".into(),
            ));
        }
        for (i, e) in etas.iter().enumerate() {
            if *e <= T::zero() || *e >= eta {
                return Err(HkError::InvalidNoisyParams(format!(
                    "eta_{i} must lie in (0, eta)"
                )));
            }
        }
        Ok(NoisyParams { eta, etas })
    }

    pub fn to_sidecar(&self) -> NoisySidecar {
        NoisySidecar {
            eta: self.eta.render(),
            etas: self.etas.iter().map(|e| e.render()).collect(),
        }
    }

    pub fn from_sidecar(sidecar: &NoisySidecar) -> Result<Self> {
        let parse = |s: &str| {
            T::parse_coord(s).map_err(|reason| HkError::Parse {
                line: 0,
                text: s.to_string(),
                reason,
            })
        };
        let eta = parse(&sidecar.eta)?;
        let etas = sidecar
            .etas
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<T>>>()?;
        Self::new(eta, etas)
    }
}

/// Seeded per-agent draws uniform in (0, eta) with bounded denominator.
pub fn sample_etas(n: usize, eta: &num_rational::BigRational, seed: u64) -> Vec<num_rational::BigRational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_open_rational(&mut rng, eta)).collect()
}

/// Agents j with -1+eta_i <= x_j - x_i <= 1. Contains i; not symmetric.
pub fn noisy_neighbors<T: Scalar>(
    config: &Configuration<T>,
    i: usize,
    noisy: &NoisyParams<T>,
) -> Result<Vec<usize>> {
    config.require_dim(1)?;
    if i >= config.n() {
        return Err(HkError::IndexOutOfRange {
            index: i,
            n: config.n(),
        });
    }
    let lo = noisy.etas[i].clone() - T::one();
    let xi = config.x(i).clone();
    Ok((0..config.n())
        .filter(|&j| {
            let diff = config.x(j).clone() - xi.clone();
            diff >= lo && diff <= T::one()
        })
        .collect())
}

/// Synchronous mean over the asymmetric neighborhoods.
pub fn noisy_step<T: Scalar>(
    config: &Configuration<T>,
    params: &SimParams<T>,
    noisy: &NoisyParams<T>,
) -> Result<(Configuration<T>, StepReport<T>)> {
    config.require_dim(1)?;
    let n = config.n();
    let mut new_positions = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = noisy_neighbors(config, i, noisy)?;
        let count = T::from_int(nbrs.len() as i64);
        let sum = nbrs
            .iter()
            .fold(T::zero(), |acc, &j| acc + config.x(j).clone());
        new_positions.push(Point::new(vec![sum / count]));
    }
    let next = Configuration {
        positions: new_positions,
        dim: 1,
        time: config.time + 1,
    };
    let report = build_report(config, &next, params);
    Ok((next, report))
}

pub fn simulate_noisy<T: Scalar>(
    initial: &Configuration<T>,
    params: &SimParams<T>,
    noisy: &NoisyParams<T>,
) -> Result<Trajectory<T>> {
    initial.require_dim(1)?;
    if noisy.etas.len() != initial.n() {
        return Err(HkError::InvalidNoisyParams(format!(
            "{} eta values for {} agents",
            noisy.etas.len(),
            initial.n()
        )));
    }
    Ok(simulate_with(initial, params, |c| {
        noisy_step(c, params, noisy).expect("validated inputs")
    }))
}

/// Frozen for the noisy relation: every noisy neighbor sits at the agent's
/// own position (hence one noisy step moves it nowhere).
pub fn noisy_is_frozen<T: Scalar>(
    config: &Configuration<T>,
    i: usize,
    params: &SimParams<T>,
    noisy: &NoisyParams<T>,
) -> Result<bool> {
    let nbrs = noisy_neighbors(config, i, noisy)?;
    Ok(nbrs.iter().all(|&j| {
        crate::config::coincide(&config.positions[j], &config.positions[i], &params.merge_tol)
    }))
}

/// The leftmost agent (position order, ties by index) that noisy-neighbors
/// some agent strictly to its right, or None.
pub fn noisy_leftmost_active<T: Scalar>(
    config: &Configuration<T>,
    noisy: &NoisyParams<T>,
) -> Result<Option<usize>> {
    config.require_dim(1)?;
    let order = crate::one_dim::sorted_order(config)?;
    for &i in &order {
        let nbrs = noisy_neighbors(config, i, noisy)?;
        if nbrs.iter().any(|&j| config.x(j) > config.x(i)) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The progress trichotomy for the noisy l(t), additionally accepting the
/// proof's early exit where l already moves right by more than (1-eta)/n
/// at time t+1.
pub fn noisy_leftmove_certificate<T: Scalar>(
    traj: &Trajectory<T>,
    t: usize,
    params: &SimParams<T>,
    noisy: &NoisyParams<T>,
) -> Result<LeftmoveVerdict<T>> {
    let c0 = traj.config_at(t)?;
    let ell = noisy_leftmost_active(c0, noisy)?.ok_or(HkError::NoActiveAgent(t))?;
    let c1 = traj.config_at(t + 1)?;
    let c2 = traj.config_at(t + 2)?;
    let n = T::from_int(c0.n() as i64);
    let early = (T::one() - noisy.eta.clone()) / n;
    let mut outcome = evaluate_trichotomy(c0, c1, c2, ell, params, Some(early))?;
    // the noisy frozen notion differs from the homogeneous one; re-check it
    // with the asymmetric relation before accepting a Violated verdict
    if matches!(outcome, crate::one_dim::LeftmoveOutcome::Violated)
        && (noisy_is_frozen(c1, ell, params, noisy)? || noisy_is_frozen(c2, ell, params, noisy)?)
    {
        outcome = crate::one_dim::LeftmoveOutcome::Froze { at: c1.time };
    }
    Ok(LeftmoveVerdict { t, ell, outcome })
}
