//! The exponential mechanism over a finite dichotomy set and the
//! soft-majority aggregator.
//!
//! Candidate `h` gets weight `exp(-n L_S(h) ε / 2)`. The temperature form
//! `exp(-L_S(h) / η)` is the same mechanism at `ε = 2 / (η n)`, so one type
//! carries both. Weights are kept in log space.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::Serialize;

use crate::classes::{Dichotomy, HypothesisClass, Labeling, LabeledSample, Point};
use crate::error::{Error, Result};

/// Normalized exponential-mechanism weights over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMechWeights {
    representatives: Vec<usize>,
    losses: Vec<f64>,
    log_weights: Vec<f64>,
    log_z: f64,
    eps: f64,
    n: usize,
}

/// `ln Σ exp(v_i)`, shifted by the maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl ExpMechWeights {
    /// Weights from precomputed empirical losses of the candidates.
    pub fn from_losses(representatives: Vec<usize>, losses: Vec<f64>, eps: f64, n: usize) -> Result<Self> {
        if representatives.is_empty() {
            return Err(Error::EmptyClass);
        }
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidParameter(format!("privacy parameter {eps} must be positive")));
        }
        debug_assert_eq!(representatives.len(), losses.len());
        let scale = n as f64 * eps / 2.0;
        let log_weights: Vec<f64> = losses.iter().map(|l| -scale * l).collect();
        let log_z = log_sum_exp(&log_weights);
        Ok(ExpMechWeights {
            representatives,
            losses,
            log_weights,
            log_z,
            eps,
            n,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Hypothesis indices of the candidates, in candidate order.
    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    /// `L_S` of each candidate.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// `ln λ_h` of each candidate.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_z
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Temperature `η = 2 / (ε n)`.
    pub fn eta(&self) -> f64 {
        2.0 / (self.eps * self.n as f64)
    }

    #[inline]
    pub fn probability(&self, i: usize) -> f64 {
        (self.log_weights[i] - self.log_z).exp()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.probability(i)).collect()
    }

    /// The mechanism's output read as a value function: `Σ_h p_h h(x)`.
    pub fn value_function(&self, class: &HypothesisClass) -> Vec<f64> {
        self.mix(|rep, out| {
            let h = class.hypothesis(rep);
            for (x, o) in out.iter_mut().enumerate() {
                *o = h.value(Point(x));
            }
        }, class.domain_size())
    }

    /// `Σ_h p_h f(h)` for a per-candidate value function `f`.
    pub fn mix<F>(&self, mut f: F, width: usize) -> Vec<f64>
    where
        F: FnMut(usize, &mut [f64]),
    {
        let mut acc = vec![0.0; width];
        let mut buf = vec![0.0; width];
        for (i, &rep) in self.representatives.iter().enumerate() {
            let p = self.probability(i);
            f(rep, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += p * b;
            }
        }
        acc.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        acc
    }
}

/// The exponential mechanism over `dichotomies` (each extended through its
/// representative) scored on `s`, at privacy `eps`.
pub fn exp_mech_distribution(
    class: &HypothesisClass,
    dichotomies: &[Dichotomy],
    s: &LabeledSample,
    eps: f64,
) -> Result<ExpMechWeights> {
    class.check_sample(s)?;
    let reps: Vec<usize> = dichotomies.iter().map(|d| d.representative).collect();
    let losses = reps.iter().map(|&r| s.loss(class.hypothesis(r))).collect();
    ExpMechWeights::from_losses(reps, losses, eps, s.len())
}

/// Draws one candidate; returns its hypothesis index.
pub fn exp_mech_sample<R: Rng + ?Sized>(w: &ExpMechWeights, rng: &mut R) -> usize {
    if w.len() == 1 {
        return w.representatives[0];
    }
    let dist = WeightedIndex::new(w.probabilities()).expect("normalized weights are valid");
    w.representatives[dist.sample(rng)]
}

/// `Σ_h p_h L_S(h)`, exactly.
pub fn exp_mech_expected_loss(w: &ExpMechWeights) -> f64 {
    w.losses
        .iter()
        .enumerate()
        .map(|(i, l)| w.probability(i) * l)
        .sum()
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(z)`, stable for large `|z|`.
#[inline]
pub fn ln_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// `Pr[1]` of a soft majority with `ones` of `r` ballots for label `1`.
#[inline]
pub fn soft_majority_prob(kappa: f64, ones: usize, r: usize) -> f64 {
    sigmoid(kappa * (2.0 * ones as f64 / r as f64 - 1.0))
}

fn ln_prob(kappa: f64, ones: usize, r: usize, y: bool) -> f64 {
    let z = kappa * (2.0 * ones as f64 / r as f64 - 1.0);
    if y {
        ln_sigmoid(z)
    } else {
        ln_sigmoid(-z)
    }
}

/// Largest multiplicative change in `Pr[output = y]` (either `y`) when the
/// count of `1` ballots moves from `ones` to `ones_after`.
pub fn soft_majority_count_ratio(kappa: f64, r: usize, ones: usize, ones_after: usize) -> f64 {
    [false, true]
        .iter()
        .map(|&y| (ln_prob(kappa, ones, r, y) - ln_prob(kappa, ones_after, r, y)).abs())
        .fold(0.0, f64::max)
        .exp()
}

/// Sigmoid of the vote margin of `r` voters, scaled by `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftMajorityPredictor {
    voters: Vec<Labeling>,
    kappa: f64,
    domain_size: usize,
}

impl SoftMajorityPredictor {
    pub fn new(voters: Vec<Labeling>, kappa: f64, domain_size: usize) -> Result<Self> {
        if voters.is_empty() {
            return Err(Error::EmptyClass);
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa {kappa} must be finite and non-negative")));
        }
        Ok(SoftMajorityPredictor {
            voters,
            kappa,
            domain_size,
        })
    }

    pub fn voters(&self) -> &[Labeling] {
        &self.voters
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn r(&self) -> usize {
        self.voters.len()
    }

    /// Number of voters labeling `x` with `1`.
    pub fn ones(&self, x: Point) -> usize {
        self.voters.iter().filter(|v| v.label(x)).count()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.domain_size)
            .map(|x| soft_majority_value(self, Point(x)))
            .collect()
    }

    /// Same voters with every ballot inverted.
    pub fn flipped(&self) -> Self {
        SoftMajorityPredictor {
            voters: self
                .voters
                .iter()
                .map(|v| v.complement(self.domain_size))
                .collect(),
            ..self.clone()
        }
    }
}

/// `σ(κ (2 v̄(x) - 1))` for the mean vote `v̄(x)`.
pub fn soft_majority_value(p: &SoftMajorityPredictor, x: Point) -> f64 {
    soft_majority_prob(p.kappa, p.ones(x), p.r())
}

/// Worst multiplicative change of `Pr[output = y]` when one ballot at `x`
/// flips, over both labels and every possible single flip.
pub fn soft_majority_single_vote_ratio(p: &SoftMajorityPredictor, x: Point) -> f64 {
    soft_majority_group_ratio(p, x, 1)
}

/// Worst multiplicative change when up to `k` ballots at `x` flip.
pub fn soft_majority_group_ratio(p: &SoftMajorityPredictor, x: Point, k: usize) -> f64 {
    let r = p.r();
    let c = p.ones(x);
    let mut worst: f64 = 1.0;
    // flipping a ones and b zeros moves the count to c - a + b
    for a in 0..=k.min(c) {
        for b in 0..=(k - a).min(r - c) {
            worst = worst.max(soft_majority_count_ratio(p.kappa, r, c, c - a + b));
        }
    }
    worst
}
