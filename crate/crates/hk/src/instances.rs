//! Instance generators (unit-spaced line, regular n-gon, seeded random
//! draws) and the analytic side-length recurrence for the n-gon lower
//! bound.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Configuration, Point};
use crate::error::{HkError, Result};
use crate::scalar::Scalar;

/// n agents at 0, 1, ..., n-1 on a line; the known linear-time worst case
/// in one dimension.
pub fn unit_line<T: Scalar>(n: usize) -> Configuration<T> {
    Configuration::from_1d((0..n).map(|i| T::from_int(i as i64)).collect(), 0)
        .expect("n >= 1")
}

/// Vertices of a regular n-gon with side length 1 centered at the origin,
/// agent i at angle 2*pi*i/n. Float only: the coordinates are irrational.
pub fn ngon(n: usize) -> Result<Configuration<f64>> {
    if n < 4 {
        return Err(HkError::InvalidInstance(format!(
            "n-gon needs n >= 4, got {n}"
        )));
    }
    let circumradius = 1.0 / (2.0 * (PI / n as f64).sin());
    let positions = (0..n)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / n as f64;
            Point::new(vec![circumradius * theta.cos(), circumradius * theta.sin()])
        })
        .collect();
    Configuration::new(positions, 0)
}

/// Seeded uniform draws on [0, span] (1D).
pub fn random_interval<T: Scalar>(n: usize, span: &T, seed: u64) -> Configuration<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..n)
        .map(|_| T::sample_unit(&mut rng) * span.clone())
        .collect();
    Configuration::from_1d(xs, 0).expect("n >= 1")
}

/// Seeded uniform draws in the d-dimensional box [0, side]^d.
pub fn random_box<T: Scalar>(n: usize, d: usize, side: &T, seed: u64) -> Configuration<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| {
            Point::new(
                (0..d)
                    .map(|_| T::sample_unit(&mut rng) * side.clone())
                    .collect(),
            )
        })
        .collect();
    Configuration::new(positions, 0).expect("n >= 1")
}

/// ceil(n^2 / 28): the certified minimum number of steps before the n-gon
/// instance can converge.
pub fn ngon_lower_bound(n: usize) -> usize {
    (n * n).div_ceil(28)
}

/// Per-step shrink factor of the n-gon side while only adjacent vertices
/// are neighbors: 1 - 2 sin(pi/n) sin(2pi/n) / (3 sin(pi(n-2)/(2n))).
pub fn ngon_shrink_factor(n: usize) -> f64 {
    let nf = n as f64;
    1.0 - 2.0 * (PI / nf).sin() * (2.0 * PI / nf).sin() / (3.0 * (PI * (nf - 2.0) / (2.0 * nf)).sin())
}

/// Analytic state of the n-gon recurrence: side length after t steps, valid
/// while next-nearest vertices stay out of the unit ball so the three-point
/// centroid rule applies.
#[derive(Debug, Clone, PartialEq)]
pub struct NGonOracleState {
    pub n: usize,
    pub side: f64,
    pub t: usize,
    pub valid: bool,
}

impl NGonOracleState {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(HkError::InvalidInstance(format!(
                "n-gon oracle needs n >= 4, got {n}"
            )));
        }
        let mut state = NGonOracleState {
            n,
            side: 1.0,
            t: 0,
            valid: true,
        };
        state.valid = state.check_valid();
        Ok(state)
    }

    fn check_valid(&self) -> bool {
        2.0 * self.side * (PI / self.n as f64).cos() > 1.0
    }

    pub fn step(&self) -> Result<NGonOracleState> {
        if !self.valid {
            return Err(HkError::OracleInvalid);
        }
        let mut next = NGonOracleState {
            n: self.n,
            side: self.side * ngon_shrink_factor(self.n),
            t: self.t + 1,
            valid: true,
        };
        next.valid = next.check_valid();
        Ok(next)
    }
}
