//! Generic rigidity-matroid rank.
//!
//! The rigidity matrix of a framework `(G, p)` in dimension `d` has one row per
//! edge `ij` and `n * d` columns; the row for `ij` holds `p(i) - p(j)` in the
//! columns of `i`, `p(j) - p(i)` in the columns of `j`, and zeros elsewhere.
//! Its rank at a generic placement is the rank of `E(G)` in the
//! `d`-dimensional rigidity matroid.
//!
//! Ranks are computed exactly: placements are random integers and the rank
//! comes from fraction-free (Bareiss) elimination over big integers. A
//! non-generic placement can only lower the rank, so [`generic_rank`] takes
//! the larger of two independent draws.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

/// Coordinates are drawn uniformly from `[-PLACEMENT_RANGE, PLACEMENT_RANGE]`.
pub const PLACEMENT_RANGE: i64 = 1_000_000;

/// A graph with a placement of its vertices in `Q^d`.
#[derive(Clone, Debug)]
pub struct Framework {
    graph: Graph,
    dim: usize,
    placement: Vec<Vec<BigRational>>,
}

impl Framework {
    /// `placement[v - 1]` is the point of vertex `v`.
    pub fn new(graph: Graph, dim: usize, placement: Vec<Vec<BigRational>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("framework dimension must be positive".into()));
        }
        if placement.len() != graph.n() {
            return Err(Error::Domain(format!(
                "placement has {} points for {} vertices",
                placement.len(),
                graph.n()
            )));
        }
        if let Some(v) = placement.iter().position(|p| p.len() != dim) {
            return Err(Error::Domain(format!(
                "point of vertex {} does not have {dim} coordinates",
                v + 1
            )));
        }
        Ok(Framework {
            graph,
            dim,
            placement,
        })
    }

    pub fn from_integers(graph: Graph, dim: usize, placement: Vec<Vec<i64>>) -> Result<Self> {
        let placement = placement
            .into_iter()
            .map(|p| p.into_iter().map(|x| BigRational::from_integer(x.into())).collect())
            .collect();
        Framework::new(graph, dim, placement)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Exact `|E| x (n d)` rigidity matrix; column `(v - 1) * d + k` holds
/// coordinate `k` of vertex `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<BigRational>>,
}

impl RigidityMatrix {
    pub fn rank(&self) -> usize {
        // Clear denominators row by row; row scaling preserves rank.
        let int_rows = self
            .entries
            .iter()
            .map(|row| {
                let lcm = row
                    .iter()
                    .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter()
                    .map(|x| x.numer() * (&lcm / x.denom()))
                    .collect()
            })
            .collect();
        bareiss_rank(int_rows, self.cols)
    }
}

pub fn rigidity_matrix(f: &Framework) -> RigidityMatrix {
    let d = f.dim;
    let cols = f.graph.n() * d;
    let entries = f
        .graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let mut row = vec![BigRational::zero(); cols];
            for k in 0..d {
                let diff = &f.placement[i - 1][k] - &f.placement[j - 1][k];
                row[(j - 1) * d + k] = -diff.clone();
                row[(i - 1) * d + k] = diff;
            }
            row
        })
        .collect();
    RigidityMatrix {
        rows: f.graph.num_edges(),
        cols,
        entries,
    }
}

/// Rank of an integer matrix by fraction-free Gaussian elimination. Every
/// intermediate entry is a minor of the input, so each division is exact.
pub fn bareiss_rank(mut a: Vec<Vec<BigInt>>, cols: usize) -> usize {
    let rows = a.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, bottom) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in bottom.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let v = pivot * &row[j] - &factor * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
            row[c] = BigInt::zero();
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

fn random_placement(n: usize, d: usize, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.random_range(-PLACEMENT_RANGE..=PLACEMENT_RANGE))
                .collect()
        })
        .collect()
}

/// Rank of the rigidity matrix at one integer placement.
pub fn rank_at_placement(g: &Graph, d: usize, placement: &[Vec<i64>]) -> usize {
    let cols = g.n() * d;
    let rows = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            let mut row = vec![BigInt::zero(); cols];
            for k in 0..d {
                let diff = placement[i - 1][k] - placement[j - 1][k];
                row[(i - 1) * d + k] = BigInt::from(diff);
                row[(j - 1) * d + k] = BigInt::from(-diff);
            }
            row
        })
        .collect();
    bareiss_rank(rows, cols)
}

/// Rank at a single random placement drawn from `seed`.
pub fn rank_at_seed(g: &Graph, d: usize, seed: u64) -> usize {
    rank_at_placement(g, d, &random_placement(g.n(), d, seed))
}

/// Generic rank of `E(g)` in the `d`-dimensional rigidity matroid: the
/// maximum over two independent random integer placements.
pub fn generic_rank(g: &Graph, d: usize, seed: u64) -> usize {
    assert!(d >= 1, "dimension must be positive");
    if g.num_edges() == 0 {
        return 0;
    }
    let first = rank_at_seed(g, d, seed::mix(seed, &[d as u64, 0]));
    if first == g.num_edges() {
        return first;
    }
    first.max(rank_at_seed(g, d, seed::mix(seed, &[d as u64, 1])))
}

pub fn is_d_independent(g: &Graph, d: usize, seed: u64) -> bool {
    generic_rank(g, d, seed) == g.num_edges()
}

/// Smallest `d` for which `g` is `d`-independent. Rejects edgeless graphs.
pub fn min_independence_dim(g: &Graph, seed: u64) -> Result<usize> {
    if g.num_edges() == 0 {
        return Err(Error::Domain(
            "minimum independence dimension is undefined for an edgeless graph".into(),
        ));
    }
    // Every graph on n vertices is (n - 1)-independent.
    let top = g.n().saturating_sub(1).max(1);
    Ok((1..=top)
        .find(|&d| is_d_independent(g, d, seed))
        .unwrap_or(top))
}
