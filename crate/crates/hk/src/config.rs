//! Agent configurations, neighbor graphs, weights, and the instance file
//! format (one agent per line, whitespace-separated coordinates).

use std::io::{BufRead, Write};

use crate::error::{HkError, Result};
use crate::scalar::Scalar;
use crate::sim::SimParams;

pub const INSTANCE_HEADER: &str = "# hk-instance v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn sqdist(&self, other: &Point<T>) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| {
                let d = a.clone() - b.clone();
                d.clone() * d
            })
            .fold(T::zero(), |acc, v| acc + v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T> {
    pub positions: Vec<Point<T>>,
    pub dim: usize,
    pub time: usize,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(positions: Vec<Point<T>>, time: usize) -> Result<Self> {
        let dim = positions.first().map(|p| p.dim()).unwrap_or(0);
        if positions.is_empty() {
            return Err(HkError::EmptyInstance);
        }
        for p in &positions {
            if p.dim() != dim {
                return Err(HkError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(Configuration {
            positions,
            dim,
            time,
        })
    }

    /// 1D convenience constructor.
    pub fn from_1d(xs: Vec<T>, time: usize) -> Result<Self> {
        Self::new(
            xs.into_iter().map(|x| Point::new(vec![x])).collect(),
            time,
        )
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn sqdist(&self, i: usize, j: usize) -> T {
        self.positions[i].sqdist(&self.positions[j])
    }

    /// 1D coordinate of agent i.
    pub fn x(&self, i: usize) -> &T {
        &self.positions[i].coords[0]
    }

    pub fn require_dim(&self, d: usize) -> Result<()> {
        if self.dim != d {
            return Err(HkError::WrongDimension {
                expected: d,
                got: self.dim,
            });
        }
        Ok(())
    }

    /// Largest position bit-size (exact mode only).
    pub fn max_bits(&self) -> Option<u64> {
        self.positions
            .iter()
            .flat_map(|p| p.coords.iter())
            .filter_map(|c| c.bit_size())
            .max()
    }
}

/// Two points coincide when their squared distance is at most tol^2
/// (tol = 0 in exact mode).
pub fn coincide<T: Scalar>(a: &Point<T>, b: &Point<T>, tol: &T) -> bool {
    a.sqdist(b) <= tol.clone() * tol.clone()
}

/// Neighbor predicate of the update rule: squared distance at most
/// 1 + neighbor_eps. The squared form keeps exact mode root-free and is
/// sign-equivalent to the Euclidean test against 1.
pub fn are_neighbors<T: Scalar>(config: &Configuration<T>, i: usize, j: usize, eps: &T) -> bool {
    config.sqdist(i, j) <= T::one() + eps.clone()
}

/// The neighborhood N_i, always containing i itself.
pub fn neighbors<T: Scalar>(
    config: &Configuration<T>,
    i: usize,
    params: &SimParams<T>,
) -> Result<Vec<usize>> {
    if i >= config.n() {
        return Err(HkError::IndexOutOfRange {
            index: i,
            n: config.n(),
        });
    }
    Ok((0..config.n())
        .filter(|&j| are_neighbors(config, i, j, &params.neighbor_eps))
        .collect())
}

#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn build<T: Scalar>(config: &Configuration<T>, params: &SimParams<T>) -> Self {
        let n = config.n();
        let mut adjacency = vec![Vec::new(); n];
        for (i, row) in adjacency.iter_mut().enumerate() {
            row.push(i);
        }
        for i in 0..n {
            for j in i + 1..n {
                if are_neighbors(config, i, j, &params.neighbor_eps) {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        NeighborGraph { adjacency }
    }
}

/// Number of agents located at x (exactly in exact mode, within merge_tol
/// in float mode).
pub fn weight<T: Scalar>(config: &Configuration<T>, x: &Point<T>, merge_tol: &T) -> usize {
    config
        .positions
        .iter()
        .filter(|p| coincide(p, x, merge_tol))
        .count()
}

/// Weight of agent i at its own location.
pub fn agent_weight<T: Scalar>(config: &Configuration<T>, i: usize, merge_tol: &T) -> usize {
    weight(config, &config.positions[i], merge_tol)
}

pub fn read_instance<T: Scalar, R: BufRead>(reader: R) -> Result<Configuration<T>> {
    let mut positions = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let coords = trimmed
            .split_whitespace()
            .map(|tok| {
                T::parse_coord(tok).map_err(|reason| HkError::Parse {
                    line: lineno + 1,
                    text: tok.to_string(),
                    reason,
                })
            })
            .collect::<Result<Vec<T>>>()?;
        positions.push(Point::new(coords));
    }
    Configuration::new(positions, 0)
}

pub fn write_instance<T: Scalar, W: Write>(config: &Configuration<T>, mut w: W) -> Result<()> {
    writeln!(w, "{INSTANCE_HEADER}")?;
    for p in &config.positions {
        let line: Vec<String> = p.coords.iter().map(|c| c.render()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
