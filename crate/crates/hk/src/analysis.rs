//! Executable checks for the higher-dimensional convergence machinery: the
//! pairwise potential V, its quantified per-step decrease, the randomized
//! good-direction search, and the merge-or-big-move dichotomy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Configuration;
use crate::error::{HkError, Result};
use crate::scalar::Scalar;
use crate::sim::SimParams;

/// Pairwise potential: sum over all ordered pairs (i,j), including i = j,
/// of the squared distance when the pair is strictly within unit distance
/// and 1 otherwise. Pairs at distance exactly 1 contribute 1.
pub fn potential<T: Scalar>(config: &Configuration<T>) -> T {
    let n = config.n();
    let one = T::one();
    let mut v = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let sq = config.sqdist(i, j);
            let f = if sq < one { sq } else { one.clone() };
            // ordered pairs: (i,j) and (j,i); the diagonal contributes 0
            v = v + f.clone() + f;
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct PotentialReport<T> {
    pub v_before: T,
    pub v_after: T,
    pub sum_sq_disp: T,
    /// The analysis' intermediate cross term, logged but not gating:
    /// sum over in-threshold ordered pairs of ||dx_i + dx_j||^2.
    pub cross_term: T,
    /// (v_before - v_after) - 4 * sum_sq_disp.
    pub slack: T,
}

/// Evaluates both endpoint inequalities of the potential decrease law across one
/// step. The pair threshold for the cross term is taken at time t.
pub fn potential_decrease_check<T: Scalar>(
    before: &Configuration<T>,
    after: &Configuration<T>,
) -> Result<PotentialReport<T>> {
    let n = before.n();
    if after.n() != n {
        return Err(HkError::SizeMismatch(n, after.n()));
    }
    let v_before = potential(before);
    let v_after = potential(after);
    let one = T::one();
    let mut sum_sq_disp = T::zero();
    for i in 0..n {
        sum_sq_disp = sum_sq_disp + before.positions[i].sqdist(&after.positions[i]);
    }
    let mut cross_term = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j && before.sqdist(i, j) >= one {
                continue;
            }
            // f^t(dx_i, -dx_j) = ||dx_i + dx_j||^2
            let mut sq = T::zero();
            for k in 0..before.dim {
                let di = after.positions[i].coords[k].clone()
                    - before.positions[i].coords[k].clone();
                let dj = after.positions[j].coords[k].clone()
                    - before.positions[j].coords[k].clone();
                let s = di + dj;
                sq = sq + s.clone() * s;
            }
            cross_term = cross_term + sq;
        }
    }
    let slack = (v_before.clone() - v_after.clone())
        - T::from_int(4) * sum_sq_disp.clone();
    Ok(PotentialReport {
        v_before,
        v_after,
        sum_sq_disp,
        cross_term,
        slack,
    })
}

#[derive(Debug, Clone)]
pub struct DirectionReport {
    /// Best unit vector found.
    pub a: Vec<f64>,
    /// min over distinct-position pairs of |a . d_ij| with d_ij normalized.
    pub margin: f64,
    /// margin * n^2 * d.
    pub normalized_margin: f64,
}

/// Randomized search for a projection direction separating all normalized
/// pairwise differences. Deterministic given the seed. A small margin is
/// only a failed search, never a disproof of existence.
pub fn good_direction(
    config: &Configuration<f64>,
    samples: usize,
    seed: u64,
) -> Result<DirectionReport> {
    let n = config.n();
    let d = config.dim;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let sq = config.sqdist(i, j);
            if sq > 0.0 {
                let norm = sq.sqrt();
                let diff: Vec<f64> = (0..d)
                    .map(|k| {
                        (config.positions[i].coords[k] - config.positions[j].coords[k]) / norm
                    })
                    .collect();
                dirs.push(diff);
            }
        }
    }
    if dirs.is_empty() {
        return Err(HkError::NoDistinctPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..samples.max(1) {
        let a = sample_unit_vector(&mut rng, d);
        let margin = dirs
            .iter()
            .map(|dir| dot(&a, dir).abs())
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(_, m)| margin > *m) {
            best = Some((a, margin));
        }
    }
    let (a, margin) = best.unwrap();
    Ok(DirectionReport {
        a,
        margin,
        normalized_margin: margin * (n * n * d) as f64,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform on the unit sphere via normalized Gaussian coordinates
/// (Box-Muller).
fn sample_unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone)]
pub enum MovefarVerdict<T> {
    /// Two agents at distinct positions at t coincide at t+1.
    Merge { pair: (usize, usize) },
    /// Some agent moved by at least c * n^-4 * d^-1.
    BigMove { agent: usize, sq_displacement: T },
    /// Neither branch held; a counterexample to the dichotomy at the
    /// calibrated constant.
    Violated { max_sq_displacement: T, threshold_sq: T },
}

impl<T> MovefarVerdict<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            MovefarVerdict::Merge { .. } => "merge",
            MovefarVerdict::BigMove { .. } => "big_move",
            MovefarVerdict::Violated { .. } => "violated",
        }
    }
}

/// The movement dichotomy across one non-converged step: a merge event, or
/// a displacement of at least c * n^-4 * d^-1.
pub fn movefar_check<T: Scalar>(
    before: &Configuration<T>,
    after: &Configuration<T>,
    params: &SimParams<T>,
) -> Result<MovefarVerdict<T>> {
    let n = before.n();
    if after.n() != n {
        return Err(HkError::SizeMismatch(n, after.n()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let was_distinct = !crate::config::coincide(
                &before.positions[i],
                &before.positions[j],
                &params.merge_tol,
            );
            if was_distinct
                && crate::config::coincide(
                    &after.positions[i],
                    &after.positions[j],
                    &params.merge_tol,
                )
            {
                return Ok(MovefarVerdict::Merge { pair: (i, j) });
            }
        }
    }
    let scale = T::from_int((n.pow(4) * before.dim.max(1)) as i64);
    let threshold = T::from_f64_exact(params.movefar_c) / scale;
    let threshold_sq = threshold.clone() * threshold;
    let mut best: Option<(usize, T)> = None;
    for i in 0..n {
        let sq = before.positions[i].sqdist(&after.positions[i]);
        if best.as_ref().is_none_or(|(_, b)| sq > *b) {
            best = Some((i, sq));
        }
    }
    let (agent, max_sq) = best.unwrap();
    if max_sq >= threshold_sq {
        Ok(MovefarVerdict::BigMove {
            agent,
            sq_displacement: max_sq,
        })
    } else {
        Ok(MovefarVerdict::Violated {
            max_sq_displacement: max_sq,
            threshold_sq,
        })
    }
}
