//! Randomized predictors as value functions `X -> [0, 1]`.
//!
//! A value `p(x)` is the probability that the prediction at `x` is `1`, so
//! `|p(x) - y|` is the probability of a mistake against label `y`.

use rand::Rng;
use serde::Serialize;

use crate::classes::Point;
use crate::error::{Error, Result};

/// Probability of predicting `1` at every domain point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizedPredictor {
    values: Vec<f64>,
}

impl RandomizedPredictor {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("prediction value {v} outside [0, 1]")));
        }
        Ok(RandomizedPredictor { values })
    }

    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        self.values[x.index()]
    }

    /// `Pr[prediction at x = y]`.
    #[inline]
    pub fn prob(&self, x: Point, y: bool) -> f64 {
        let p = self.values[x.index()];
        if y {
            p
        } else {
            1.0 - p
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: Point, rng: &mut R) -> bool {
        rng.random::<f64>() < self.values[x.index()]
    }
}

/// The prediction events of a value function, `[p(0), 1-p(0), p(1), ...]`.
pub fn value_events(values: &[f64]) -> Vec<f64> {
    values.iter().flat_map(|&p| [p, 1.0 - p]).collect()
}

/// How a mixture was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// Every subset enumerated.
    Exact,
    /// A uniform random draw of subsets.
    MonteCarlo { samples: usize, seed: u64 },
}

/// One weighted component of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureTerm {
    pub weight: f64,
    pub values: Vec<f64>,
}

/// A convex combination of value functions, `Σ w_i h_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixturePredictor {
    terms: Vec<MixtureTerm>,
    mode: MixtureMode,
    values: Vec<f64>,
}

impl MixturePredictor {
    /// Builds a mixture from `(weight, values)` terms. Weights are taken as
    /// given (they must already sum to one) and terms with bit-identical
    /// value functions are merged.
    pub fn from_terms(terms: Vec<MixtureTerm>, mode: MixtureMode) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::EmptyClass);
        };
        let width = first.values.len();
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        let mut merged: Vec<MixtureTerm> = Vec::new();
        let mut index: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
        for t in terms {
            if t.values.len() != width {
                return Err(Error::InvalidParameter("mixture terms of different width".into()));
            }
            let key: Vec<u64> = t.values.iter().map(|v| v.to_bits()).collect();
            match index.get(&key) {
                Some(&i) => merged[i].weight += t.weight,
                None => {
                    index.insert(key, merged.len());
                    merged.push(t);
                }
            }
        }
        let mut values = vec![0.0; width];
        for t in &merged {
            for (acc, v) in values.iter_mut().zip(&t.values) {
                *acc += t.weight * v;
            }
        }
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(MixturePredictor {
            terms: merged,
            mode,
            values,
        })
    }

    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        self.values[x.index()]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    pub fn mode(&self) -> MixtureMode {
        self.mode
    }

    pub fn predictor(&self) -> RandomizedPredictor {
        RandomizedPredictor {
            values: self.values.clone(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
