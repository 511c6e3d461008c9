//! Exhaustive enumeration of samples and their neighbors.

use std::collections::HashMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{binomial, LabeledSample, Point};
use crate::error::{Error, Result};

/// Largest grid enumerated.
pub const GRID_LIMIT: u128 = 1_000_000;

/// How samples are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Every sequence in `(X × {0,1})^n`.
    Ordered,
    /// One sorted representative per multiset. Only valid for learners whose
    /// output does not depend on the order of the sample.
    Multiset,
}

/// All samples of size `n` over a domain, with their single-example
/// replacements. Examples are encoded as `2x + y`.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    domain_size: usize,
    n: usize,
    mode: GridMode,
    samples: Vec<Vec<u8>>,
    index: Option<HashMap<Vec<u8>, usize>>,
}

impl NeighborGrid {
    pub fn new(domain_size: usize, n: usize, mode: GridMode) -> Result<Self> {
        if n == 0 || domain_size == 0 || domain_size > 127 {
            return Err(Error::InvalidParameter(format!(
                "grid needs n >= 1 and 1 <= |X| <= 127, got n = {n}, |X| = {domain_size}"
            )));
        }
        let size = Self::size_of(domain_size, n, mode);
        if size > GRID_LIMIT {
            return Err(Error::TooLarge {
                what: "neighbor grid",
                size,
                limit: GRID_LIMIT,
                hint: (mode == GridMode::Ordered)
                    .then(|| "a multiset grid is smaller for order-invariant learners".to_string()),
            });
        }
        let k = 2 * domain_size;
        let (samples, index) = match mode {
            GridMode::Ordered => {
                let samples = (0..n)
                    .map(|_| 0..k as u8)
                    .multi_cartesian_product()
                    .map(|mut v| {
                        // little-endian digits so that index arithmetic is direct
                        v.reverse();
                        v
                    })
                    .collect();
                (samples, None)
            }
            GridMode::Multiset => {
                let samples: Vec<Vec<u8>> = (0..k as u8).combinations_with_replacement(n).collect();
                let index = samples.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
                (samples, Some(index))
            }
        };
        Ok(NeighborGrid {
            domain_size,
            n,
            mode,
            samples,
            index,
        })
    }

    /// Number of samples a grid would hold.
    pub fn size_of(domain_size: usize, n: usize, mode: GridMode) -> u128 {
        let k = 2 * domain_size as u128;
        match mode {
            GridMode::Ordered => k.checked_pow(n as u32).unwrap_or(u128::MAX),
            GridMode::Multiset => binomial(k as u64 + n as u64 - 1, n as u64),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn sample(&self, i: usize) -> LabeledSample {
        let pairs = self.samples[i]
            .iter()
            .map(|&c| (Point((c / 2) as usize), c % 2 == 1))
            .collect();
        LabeledSample::new(self.domain_size, pairs).expect("grid samples are valid")
    }

    /// Indices of all samples differing from sample `i` in one example.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let k = 2 * self.domain_size;
        let s = &self.samples[i];
        match self.mode {
            GridMode::Ordered => {
                let mut out = Vec::with_capacity(self.n * (k - 1));
                let mut place = 1usize;
                for &c in s {
                    let base = i - c as usize * place;
                    for b in 0..k {
                        if b != c as usize {
                            out.push(base + b * place);
                        }
                    }
                    place *= k;
                }
                out
            }
            GridMode::Multiset => {
                let index = self.index.as_ref().expect("multiset grids carry an index");
                let mut out = Vec::new();
                for (pos, &a) in s.iter().enumerate() {
                    if pos > 0 && s[pos - 1] == a {
                        continue;
                    }
                    for b in 0..k as u8 {
                        if b == a {
                            continue;
                        }
                        let mut t = s.clone();
                        t.remove(pos);
                        let at = t.partition_point(|&c| c <= b);
                        t.insert(at, b);
                        out.push(index[&t]);
                    }
                }
                out
            }
        }
    }

    /// Evaluates `learner` on every sample, in grid order.
    pub fn evaluate<F, T>(&self, learner: F) -> Result<Vec<T>>
    where
        F: Fn(&LabeledSample) -> Result<T> + Sync,
        T: Send,
    {
        (0..self.len())
            .into_par_iter()
            .map(|i| learner(&self.sample(i)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_grid_size_and_symmetry() {
        let g = NeighborGrid::new(2, 3, GridMode::Ordered).unwrap();
        assert_eq!(g.len(), 64);
        for i in 0..g.len() {
            let s = g.sample(i);
            let nb = g.neighbors(i);
            assert_eq!(nb.len(), 3 * 3);
            for &j in &nb {
                assert!(s.is_neighbor(&g.sample(j)));
                assert!(g.neighbors(j).contains(&i));
            }
        }
    }

    #[test]
    fn multiset_grid_neighbors() {
        let g = NeighborGrid::new(2, 3, GridMode::Multiset).unwrap();
        assert_eq!(g.len() as u128, NeighborGrid::size_of(2, 3, GridMode::Multiset));
        assert_eq!(g.len(), 20);
        for i in 0..g.len() {
            for &j in &g.neighbors(i) {
                assert_ne!(i, j);
                assert!(g.neighbors(j).contains(&i));
                let mut a = g.samples[i].clone();
                let mut b = g.samples[j].clone();
                // exactly one symbol differs as multisets
                a.retain(|c| {
                    if let Some(p) = b.iter().position(|d| d == c) {
                        b.remove(p);
                        false
                    } else {
                        true
                    }
                });
                assert_eq!((a.len(), b.len()), (1, 1));
            }
        }
    }

    #[test]
    fn oversize_grid_is_refused() {
        assert!(matches!(
            NeighborGrid::new(5, 7, GridMode::Ordered),
            Err(Error::TooLarge { .. })
        ));
    }
}
