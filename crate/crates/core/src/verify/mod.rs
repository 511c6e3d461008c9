//! Brute-force oracles: dominance between value functions, exhaustive
//! stability and privacy measurement over neighbor grids, and Monte Carlo
//! estimators for the sampled learners.
//!
//! A learner is any function from a sample to a vector of event
//! probabilities. For a value function `p` the events are
//! `[p(0), 1-p(0), p(1), 1-p(1), ...]` (see [`value_events`]); for a
//! selection mechanism they are the per-candidate probabilities.
//!
//! [`value_events`]: crate::predictor::value_events

pub mod grid;
pub mod naive;
pub mod stats;

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{check_distribution, is_eps_net, HypothesisClass, LabeledSample, Point};
use crate::error::{Error, Result};
use crate::experiments::{sample_dataset, SourceDistribution};
use crate::rng::{split, Prng};

pub use grid::{GridMode, NeighborGrid, GRID_LIMIT};
pub use stats::{wilson, BernoulliEstimate, Z99};

/// Slack allowed when comparing floating-point certificates.
pub const TOLERANCE: f64 = 1e-9;

/// `lhs ⪯ λ rhs + κ`: for every `x` and `y`,
/// `|lhs(x) - y| <= λ |rhs(x) - y| + κ`.
#[derive(Debug, Clone, Copy)]
pub struct DominanceClaim<'a> {
    pub lhs: &'a [f64],
    pub rhs: &'a [f64],
    pub lambda: f64,
    pub kappa: f64,
}

/// Tightest cell of a dominance check. `margin` is
/// `λ |rhs(x) - y| + κ - |lhs(x) - y|`; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceOutcome {
    pub holds: bool,
    pub x: usize,
    pub y: u8,
    pub margin: f64,
}

pub fn check_dominance(c: &DominanceClaim) -> DominanceOutcome {
    let mut worst = DominanceOutcome {
        holds: true,
        x: 0,
        y: 0,
        margin: f64::INFINITY,
    };
    for (x, (&h, &g)) in c.lhs.iter().zip(c.rhs).enumerate() {
        for y in [0u8, 1] {
            let yf = y as f64;
            let margin = c.lambda * (g - yf).abs() + c.kappa - (h - yf).abs();
            if margin < worst.margin {
                worst = DominanceOutcome {
                    holds: true,
                    x,
                    y,
                    margin,
                };
            }
        }
    }
    worst.holds = worst.margin >= -1e-12;
    worst
}

/// A neighbor pair and event realizing the largest additive gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapWitness {
    pub sample: LabeledSample,
    pub neighbor: LabeledSample,
    pub event: usize,
    pub p: f64,
    pub p_neighbor: f64,
}

/// Every `(P_S(e), P_S'(e))` cell over a grid, reduced to the cells that
/// can bind some `(ε, δ)` inequality.
#[derive(Debug, Clone, Serialize)]
pub struct PrivacyProfile {
    /// Pareto frontier: `p` decreasing, `p'` decreasing.
    frontier: Vec<(f64, f64)>,
    pub samples: usize,
    pub neighbor_pairs: usize,
    pub witness: Option<GapWitness>,
}

fn pareto(mut cells: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for (p, q) in cells {
        if q < best {
            best = q;
            out.push((p, q));
        }
    }
    out
}

impl PrivacyProfile {
    /// Largest `P_S(e) - P_S'(e)` over neighbor pairs and events.
    pub fn additive_gap(&self) -> f64 {
        self.frontier
            .iter()
            .map(|&(p, q)| p - q)
            .fold(0.0, f64::max)
    }

    /// Smallest `ε >= 0` with `P_S(e) <= e^ε P_S'(e) + δ` everywhere.
    pub fn min_eps(&self, delta: f64) -> f64 {
        self.frontier
            .iter()
            .filter(|&&(p, _)| p > delta)
            .map(|&(p, q)| if q > 0.0 { ((p - delta) / q).ln() } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    /// Whether `P_S(e) <= λ P_S'(e) + κ` on every cell.
    pub fn satisfies(&self, lambda: f64, kappa: f64) -> bool {
        self.frontier
            .iter()
            .all(|&(p, q)| p <= lambda * q + kappa + 1e-12)
    }

    /// `(δ, ε(δ))` at multiples of `resolution` from 0 until `ε` reaches 0.
    pub fn eps_delta_curve(&self, resolution: f64) -> Vec<(f64, f64)> {
        let gap = self.additive_gap();
        let steps = (gap / resolution).ceil() as usize;
        (0..=steps)
            .map(|k| {
                let delta = k as f64 * resolution;
                (delta, self.min_eps(delta))
            })
            .collect()
    }

    pub fn frontier(&self) -> &[(f64, f64)] {
        &self.frontier
    }
}

/// Evaluates `learner` on every grid sample and collects the privacy
/// profile over all ordered neighbor pairs.
pub fn privacy_profile<F>(grid: &NeighborGrid, learner: F) -> Result<PrivacyProfile>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    let outputs = grid.evaluate(&learner)?;
    profile_from_outputs(grid, &outputs)
}

/// Same as [`privacy_profile`] with the learner outputs precomputed.
pub fn profile_from_outputs(grid: &NeighborGrid, outputs: &[Vec<f64>]) -> Result<PrivacyProfile> {
    if let Some(bad) = outputs.iter().find(|o| o.len() != outputs[0].len()) {
        return Err(Error::InvalidParameter(format!(
            "learner produced {} events where {} were expected",
            bad.len(),
            outputs[0].len()
        )));
    }
    // per sample: frontier cells, neighbor count, largest gap with its witness
    type Local = (Vec<(f64, f64)>, usize, (f64, usize, usize));
    let local: Vec<Local> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let nb = grid.neighbors(i);
            let mut cells = Vec::with_capacity(nb.len() * outputs[i].len());
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for &j in &nb {
                for (e, (&p, &q)) in outputs[i].iter().zip(&outputs[j]).enumerate() {
                    cells.push((p, q));
                    if p - q > best.0 {
                        best = (p - q, j, e);
                    }
                }
            }
            (pareto(cells), nb.len(), best)
        })
        .collect();
    let mut cells = Vec::new();
    let mut pairs = 0;
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for (i, (c, k, (gap, j, e))) in local.into_iter().enumerate() {
        cells.extend(c);
        pairs += k;
        if k > 0 && best.is_none_or(|b| gap > b.0) {
            best = Some((gap, i, j, e));
        }
    }
    let witness = best.map(|(_, i, j, e)| GapWitness {
        sample: grid.sample(i),
        neighbor: grid.sample(j),
        event: e,
        p: outputs[i][e],
        p_neighbor: outputs[j][e],
    });
    Ok(PrivacyProfile {
        frontier: pareto(cells),
        samples: grid.len(),
        neighbor_pairs: pairs,
        witness,
    })
}

/// `sup |P_S(e) - P_S'(e)|` over neighbor pairs and events.
pub fn sup_stability_gap<F>(learner: F, grid: &NeighborGrid) -> Result<f64>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    Ok(privacy_profile(grid, learner)?.additive_gap())
}

/// Smallest `ε` making the learner `(ε, δ)`-private on the grid.
pub fn min_privacy_eps<F>(learner: F, grid: &NeighborGrid, delta: f64) -> Result<f64>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    Ok(privacy_profile(grid, learner)?.min_eps(delta))
}

/// Checks `A(S) ⪯ λ A(S') + κ` for every neighbor pair, returning the
/// tightest cell. A path independent of [`PrivacyProfile`].
pub fn dominance_over_grid<F>(
    learner: F,
    grid: &NeighborGrid,
    lambda: f64,
    kappa: f64,
) -> Result<DominanceOutcome>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    let values = grid.evaluate(&learner)?;
    let worst = (0..grid.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let values = &values;
            grid.neighbors(i).into_iter().map(move |j| {
                check_dominance(&DominanceClaim {
                    lhs: &values[i],
                    rhs: &values[j],
                    lambda,
                    kappa,
                })
            })
        })
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("grids are non-empty");
    Ok(worst)
}

/// Estimates `Pr[A^S(x) = 1]` of a sampled learner from repeated draws,
/// with a 99% Wilson interval.
pub fn empirical_prediction_law<F>(
    mut learner: F,
    s: &LabeledSample,
    x: Point,
    trials: usize,
    rng: &mut Prng,
) -> Result<BernoulliEstimate>
where
    F: FnMut(&LabeledSample, Point, &mut Prng) -> Result<bool>,
{
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("{trials} trials; at least 100 needed")));
    }
    let mut ones = 0;
    for _ in 0..trials {
        if learner(s, x, rng)? {
            ones += 1;
        }
    }
    Ok(wilson(ones, trials, Z99))
}

/// Fraction of samples of size `n` from `dist` on which some hypothesis
/// has `|L_D(h) - L_S(h)| > alpha`.
pub fn uniform_convergence_check(
    class: &HypothesisClass,
    dist: &SourceDistribution,
    n: usize,
    alpha: f64,
    trials: usize,
    rng: &mut Prng,
) -> Result<f64> {
    let true_losses: Vec<f64> = class.hypotheses().iter().map(|&h| dist.loss(h)).collect();
    let base: u64 = rng.random();
    let failures = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let s = sample_dataset(dist, n, &mut split(base, t))?;
            Ok(class
                .hypotheses()
                .iter()
                .zip(&true_losses)
                .any(|(&h, &l)| (s.loss(h) - l).abs() > alpha + 1e-12))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&f| f)
        .count();
    Ok(failures as f64 / trials as f64)
}

/// How the points of a candidate net are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetSampling {
    /// `n'` i.i.d. draws.
    WithReplacement,
    /// Draw until `n'` distinct points are seen, or the support is exhausted.
    Distinct,
}

/// Fraction of draws of `n_prime` points from `weights` that fail to be an
/// `alpha`-net for the class.
pub fn net_probability_check(
    class: &HypothesisClass,
    weights: &[f64],
    n_prime: usize,
    alpha: f64,
    trials: usize,
    rng: &mut Prng,
    mode: NetSampling,
) -> Result<f64> {
    check_distribution(weights, class.domain_size())?;
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::BadDistribution(e.to_string()))?;
    let support = weights.iter().filter(|&&w| w > 0.0).count();
    let base: u64 = rng.random();
    let failures = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut r = split(base, t);
            let points: Vec<Point> = match mode {
                NetSampling::WithReplacement => {
                    (0..n_prime).map(|_| Point(dist.sample(&mut r))).collect()
                }
                NetSampling::Distinct => {
                    let want = n_prime.min(support);
                    let mut seen = 0u64;
                    let mut out = Vec::with_capacity(want);
                    while out.len() < want {
                        let x = dist.sample(&mut r);
                        if seen & (1 << x) == 0 {
                            seen |= 1 << x;
                            out.push(Point(x));
                        }
                    }
                    out
                }
            };
            Ok(!is_eps_net(&points, class, weights, alpha)?)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&f| f)
        .count();
    Ok(failures as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::erm;
    use crate::experiments::Labeler;
    use crate::predictor::value_events;
    use crate::rng::seeded;

    #[test]
    fn dominance_examples() {
        let a = [0.3, 0.7];
        let same = check_dominance(&DominanceClaim { lhs: &a, rhs: &a, lambda: 1.0, kappa: 0.0 });
        assert!(same.holds);
        let ok = check_dominance(&DominanceClaim { lhs: &[0.6], rhs: &[0.5], lambda: 1.0, kappa: 0.1 });
        assert!(ok.holds);
        assert!(ok.margin.abs() < 1e-12);
        let bad = check_dominance(&DominanceClaim { lhs: &[0.9], rhs: &[0.5], lambda: 1.0, kappa: 0.1 });
        assert!(!bad.holds);
        assert_eq!(bad.y, 0);
        assert!((bad.margin + 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_learner_is_perfectly_private() {
        let g = NeighborGrid::new(2, 2, GridMode::Ordered).unwrap();
        let prof = privacy_profile(&g, |_| Ok(value_events(&[0.5, 0.5]))).unwrap();
        assert_eq!(prof.additive_gap(), 0.0);
        assert_eq!(prof.min_eps(0.0), 0.0);
        assert_eq!(prof.min_eps(0.3), 0.0);
    }

    #[test]
    fn erm_learner_has_unit_gap() {
        let h = HypothesisClass::thresholds(2).unwrap();
        let g = NeighborGrid::new(2, 2, GridMode::Ordered).unwrap();
        let learner = |s: &LabeledSample| {
            let d = erm(&h, s)?;
            Ok(value_events(&d.labels.iter().map(|&b| f64::from(u8::from(b))).collect::<Vec<_>>()))
        };
        assert_eq!(sup_stability_gap(learner, &g).unwrap(), 1.0);
        assert_eq!(min_privacy_eps(learner, &g, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(min_privacy_eps(learner, &g, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn profile_agrees_with_dominance() {
        // a smooth learner: fraction of positive labels, squeezed into (0, 1)
        let g = NeighborGrid::new(2, 3, GridMode::Ordered).unwrap();
        let learner = |s: &LabeledSample| {
            let pos = s.pairs().iter().filter(|p| p.1).count() as f64;
            let v = (1.0 + pos) / (2.0 + s.len() as f64);
            Ok(value_events(&[v, 1.0 - v]))
        };
        let prof = privacy_profile(&g, learner).unwrap();
        for delta in [0.0, 0.05, 0.1] {
            let eps = prof.min_eps(delta);
            let d = dominance_over_grid(learner, &g, eps.exp() * (1.0 + 1e-12), delta).unwrap();
            assert!(d.holds);
            let tighter = dominance_over_grid(learner, &g, (eps - 0.01).max(0.0).exp(), delta).unwrap();
            assert!(eps == 0.0 || !tighter.holds);
        }
        let curve = prof.eps_delta_curve(1e-2);
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(curve.last().unwrap().1, 0.0);
    }

    #[test]
    fn prediction_law_of_fixed_learners() {
        let s = LabeledSample::from_bits(2, &[(0, 1)]).unwrap();
        let est = empirical_prediction_law(|_, _, _| Ok(true), &s, Point(0), 100, &mut seeded(3)).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert!(!est.contains(0.5));
        let coin = empirical_prediction_law(
            |_, _, r: &mut Prng| Ok(r.random::<bool>()),
            &s,
            Point(0),
            10_000,
            &mut seeded(4),
        )
        .unwrap();
        assert!(coin.contains(0.5));
        assert!(empirical_prediction_law(|_, _, _| Ok(true), &s, Point(0), 10, &mut seeded(3)).is_err());
    }

    #[test]
    fn uniform_convergence_extremes() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let dist = SourceDistribution::new(vec![0.25; 4], Labeler::Fixed(h.hypothesis(2))).unwrap();
        assert_eq!(uniform_convergence_check(&h, &dist, 5, 1.0, 200, &mut seeded(1)).unwrap(), 0.0);
        assert!(uniform_convergence_check(&h, &dist, 1, 0.05, 200, &mut seeded(1)).unwrap() > 0.9);
    }

    #[test]
    fn net_check_extremes() {
        let h = HypothesisClass::thresholds(8).unwrap();
        let w = vec![0.125; 8];
        let mut rng = seeded(5);
        assert_eq!(net_probability_check(&h, &w, 8, 0.0, 100, &mut rng, NetSampling::Distinct).unwrap(), 0.0);
        assert_eq!(net_probability_check(&h, &w, 20, 0.0, 50, &mut rng, NetSampling::Distinct).unwrap(), 0.0);
        assert_eq!(net_probability_check(&h, &w, 1, 1.0, 100, &mut rng, NetSampling::WithReplacement).unwrap(), 0.0);
    }
}
