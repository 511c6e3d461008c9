//! The uniformly stable learner: the exponential mechanism at privacy `γ`
//! over the dichotomies `H_{S_I}` of a random `n'`-subset `I`, averaged over
//! all subsets.
//!
//! `H_{S_I}` depends on `I` only through the set of distinct points it
//! touches, so subsets are grouped by that point mask. When the sample
//! uses at most [`COUNTING_POINTS`] distinct points the number of subsets per
//! mask is obtained by inclusion-exclusion; otherwise subsets are
//! enumerated up to [`SUBSET_LIMIT`].

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{binomial, growth_or_bound, representatives_on, restrict, HypothesisClass, LabeledSample, Point};
use crate::complexity::{n_exp, n_net, Condition, PreconditionReport, Preconditions};
use crate::error::{Error, Result};
use crate::mechanisms::{exp_mech_distribution, exp_mech_sample, ExpMechWeights};
use crate::predictor::{value_events, MixtureMode, MixturePredictor, MixtureTerm};
use crate::rng::{seeded, Prng};
use crate::verify::{profile_from_outputs, GapWitness, GridMode, NeighborGrid};

/// Largest number of subsets enumerated one by one.
pub const SUBSET_LIMIT: u128 = 1_000_000;

/// Largest number of distinct sample points for subset counting.
pub const COUNTING_POINTS: usize = 16;

/// Parameters of the stable learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableConfig {
    pub n_prime: usize,
    /// Privacy parameter handed to the exponential mechanism.
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl StableConfig {
    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.n_prime == 0 || self.n_prime > n {
            return Err(Error::InvalidParameter(format!(
                "subset size {} for a sample of {n}",
                self.n_prime
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma {} must be positive", self.gamma)));
        }
        Ok(())
    }
}

impl Preconditions for StableConfig {
    fn precondition_report(&self, class: &HypothesisClass, n: usize) -> PreconditionReport {
        let d = class.vc_dim();
        let tau = growth_or_bound(class, self.n_prime);
        PreconditionReport {
            learner: "stable",
            conditions: vec![
                Condition::at_least(
                    "n' >= N^net(alpha, alpha, d)",
                    self.n_prime as f64,
                    n_net(self.alpha, self.alpha, d) as f64,
                ),
                Condition::at_least(
                    "n >= N^exp(tau_n'(H), gamma, alpha)",
                    n as f64,
                    n_exp(tau, self.gamma, self.alpha) as f64,
                ),
                Condition::at_least("n >= n'/gamma", n as f64, self.n_prime as f64 / self.gamma),
            ],
        }
    }
}

/// `(point mask, number of n'-subsets of indices covering exactly it)`,
/// sorted by mask, together with `C(n, n')`.
pub(crate) fn subset_masks(s: &LabeledSample, n_prime: usize) -> Result<(Vec<(u64, u128)>, u128)> {
    let n = s.len();
    let total = binomial(n as u64, n_prime as u64);
    let points: Vec<Point> = s.points().unique().sorted().collect();
    if points.len() <= COUNTING_POINTS && total < (1u128 << 126) {
        return Ok((count_by_inclusion_exclusion(s, &points, n_prime), total));
    }
    if total > SUBSET_LIMIT {
        return Err(Error::TooLarge {
            what: "subset enumeration",
            size: total,
            limit: SUBSET_LIMIT,
            hint: Some("use the Monte Carlo mixture".into()),
        });
    }
    let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
    for idx in (0..n).combinations(n_prime) {
        let mask = idx.iter().fold(0u64, |m, &i| m | 1 << s.pairs()[i].0.index());
        *counts.entry(mask).or_default() += 1;
    }
    Ok((counts.into_iter().collect(), total))
}

fn count_by_inclusion_exclusion(s: &LabeledSample, points: &[Point], n_prime: usize) -> Vec<(u64, u128)> {
    let k = points.len();
    let local_of = |x: Point| points.binary_search(&x).expect("point of the sample");
    let mut per_point = vec![0u64; k];
    for x in s.points() {
        per_point[local_of(x)] += 1;
    }
    // f[m]: subsets drawn from the indices whose point lies in m
    let mut g: Vec<i128> = (0..1usize << k)
        .map(|m| {
            let c: u64 = (0..k).filter(|b| m >> b & 1 == 1).map(|b| per_point[b]).sum();
            binomial(c, n_prime as u64) as i128
        })
        .collect();
    // Möbius inversion over the subset lattice: g[m] counts exact covers
    for b in 0..k {
        for m in 0..1usize << k {
            if m >> b & 1 == 1 {
                g[m] -= g[m ^ (1 << b)];
            }
        }
    }
    g.into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(m, c)| {
            let mask = (0..k)
                .filter(|b| m >> b & 1 == 1)
                .fold(0u64, |acc, b| acc | 1 << points[b].index());
            (mask, c as u128)
        })
        .sorted()
        .collect()
}

pub(crate) fn hypothesis_losses(class: &HypothesisClass, s: &LabeledSample) -> Vec<f64> {
    class.hypotheses().iter().map(|&h| s.loss(h)).collect()
}

/// Exponential mechanism over `H_T` for the points in `mask`, with losses
/// looked up from the per-hypothesis table.
pub(crate) fn weights_on_mask(losses: &[f64], class: &HypothesisClass, mask: u64, eps: f64, n: usize) -> Result<ExpMechWeights> {
    let reps = representatives_on(class, mask);
    let l = reps.iter().map(|&r| losses[r]).collect();
    ExpMechWeights::from_losses(reps, l, eps, n)
}

/// `h_{S,T}`: the exponential mechanism at privacy `gamma` over the
/// dichotomies of `T`, scored on `S`, as a value function. `T` need not be
/// drawn from `S`.
pub fn h_st(class: &HypothesisClass, s: &LabeledSample, t: &LabeledSample, gamma: f64) -> Result<Vec<f64>> {
    class.check_sample(s)?;
    let points: Vec<Point> = t.points().collect();
    let dichotomies = restrict(class, &points)?;
    Ok(exp_mech_distribution(class, &dichotomies, s, gamma)?.value_function(class))
}

fn mixture_from_masks(
    class: &HypothesisClass,
    s: &LabeledSample,
    gamma: f64,
    masks: &[(u64, u128)],
    total: u128,
    mode: MixtureMode,
) -> Result<MixturePredictor> {
    let losses = hypothesis_losses(class, s);
    let total = total as f64;
    let terms = masks
        .par_iter()
        .map(|&(mask, count)| {
            let w = weights_on_mask(&losses, class, mask, gamma, s.len())?;
            Ok(MixtureTerm {
                weight: count as f64 / total,
                values: w.value_function(class),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixturePredictor::from_terms(terms, mode)
}

/// The exact stable predictor: the uniform average of `h_{S,S_I}` over
/// every `n'`-subset `I`.
pub fn stable_predict_exact(class: &HypothesisClass, s: &LabeledSample, cfg: &StableConfig) -> Result<MixturePredictor> {
    class.check_sample(s)?;
    cfg.validate(s.len())?;
    let (masks, total) = subset_masks(s, cfg.n_prime)?;
    mixture_from_masks(class, s, cfg.gamma, &masks, total, MixtureMode::Exact)
}

/// The stable predictor estimated from `samples` uniform subsets.
pub fn stable_predict_monte_carlo(
    class: &HypothesisClass,
    s: &LabeledSample,
    cfg: &StableConfig,
    samples: usize,
    seed: u64,
) -> Result<MixturePredictor> {
    class.check_sample(s)?;
    cfg.validate(s.len())?;
    if samples == 0 {
        return Err(Error::InvalidParameter("Monte Carlo mixture needs at least one subset".into()));
    }
    let mut rng = seeded(seed);
    let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
    for _ in 0..samples {
        *counts.entry(random_subset_mask(s, cfg.n_prime, &mut rng)).or_default() += 1;
    }
    let masks: Vec<(u64, u128)> = counts.into_iter().collect();
    mixture_from_masks(class, s, cfg.gamma, &masks, samples as u128, MixtureMode::MonteCarlo { samples, seed })
}

pub(crate) fn random_subset_mask<R: Rng + ?Sized>(s: &LabeledSample, n_prime: usize, rng: &mut R) -> u64 {
    sample_indices(rng, s.len(), n_prime)
        .into_iter()
        .fold(0u64, |m, i| m | 1 << s.pairs()[i].0.index())
}

/// One randomized prediction at `x`: a uniform subset, one draw from the
/// exponential mechanism over its dichotomies, and that hypothesis's label.
pub fn stable_predict_sampled(
    class: &HypothesisClass,
    s: &LabeledSample,
    cfg: &StableConfig,
    x: Point,
    rng: &mut Prng,
) -> Result<bool> {
    class.check_sample(s)?;
    cfg.validate(s.len())?;
    crate::classes::check_point(x, class.domain_size())?;
    let mask = random_subset_mask(s, cfg.n_prime, rng);
    let reps = representatives_on(class, mask);
    let losses = reps.iter().map(|&r| s.loss(class.hypothesis(r))).collect();
    let w = ExpMechWeights::from_losses(reps, losses, cfg.gamma, s.len())?;
    Ok(class.hypothesis(exp_mech_sample(&w, rng)).label(x))
}

/// Exhaustive stability and empirical-accuracy certificate.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub config: StableConfig,
    pub domain_size: usize,
    pub n: usize,
    pub grid_mode: GridMode,
    pub samples: usize,
    pub neighbor_pairs: usize,
    /// `sup |A(S)(x) - A(S')(x)|` over neighbors and points.
    pub sup_gap: f64,
    pub gap_bound: f64,
    pub gap_within_bound: bool,
    /// `max_S (L_S(A(S)) - min_h L_S(h))`.
    pub worst_excess_loss: f64,
    pub excess_bound: f64,
    pub excess_within_bound: bool,
    /// Smallest `ε` with `A(S) ⪯ e^ε A(S')` everywhere.
    pub min_eps_pure: f64,
    pub witness: Option<GapWitness>,
    pub preconditions: PreconditionReport,
}

impl StabilityReport {
    /// The stability bound holds, and the accuracy bound holds whenever
    /// the sample-size conditions do.
    pub fn passed(&self) -> bool {
        self.gap_within_bound && (self.excess_within_bound || !self.preconditions.all_hold())
    }
}

/// Runs the exact stable predictor on every sample of size `n` and every
/// neighbor, and compares the worst gap and excess loss with `3γ`, `3α`.
pub fn stability_certificate(
    cfg: &StableConfig,
    class: &HypothesisClass,
    n: usize,
    mode: GridMode,
) -> Result<StabilityReport> {
    cfg.validate(n)?;
    let grid = NeighborGrid::new(class.domain_size(), n, mode)?;
    let outputs: Vec<(Vec<f64>, f64)> = grid.evaluate(|s| {
        let p = stable_predict_exact(class, s, cfg)?;
        let best = hypothesis_losses(class, s).into_iter().fold(f64::INFINITY, f64::min);
        let excess = s.soft_loss(p.values()) - best;
        Ok((value_events(p.values()), excess))
    })?;
    let worst_excess_loss = outputs.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    let events: Vec<Vec<f64>> = outputs.into_iter().map(|o| o.0).collect();
    let prof = profile_from_outputs(&grid, &events)?;
    let sup_gap = prof.additive_gap();
    Ok(StabilityReport {
        config: *cfg,
        domain_size: class.domain_size(),
        n,
        grid_mode: mode,
        samples: prof.samples,
        neighbor_pairs: prof.neighbor_pairs,
        sup_gap,
        gap_bound: 3.0 * cfg.gamma,
        gap_within_bound: sup_gap <= 3.0 * cfg.gamma + crate::verify::TOLERANCE,
        worst_excess_loss,
        excess_bound: 3.0 * cfg.alpha,
        excess_within_bound: worst_excess_loss <= 3.0 * cfg.alpha + crate::verify::TOLERANCE,
        min_eps_pure: prof.min_eps(0.0),
        witness: prof.witness.clone(),
        preconditions: cfg.precondition_report(class, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::naive;
    use proptest::prelude::*;

    fn vectors(class: &HypothesisClass) -> Vec<Vec<bool>> {
        class.hypotheses().iter().map(|h| h.to_labels(class.domain_size())).collect()
    }

    fn pairs(s: &LabeledSample) -> Vec<(usize, bool)> {
        s.pairs().iter().map(|&(x, y)| (x.index(), y)).collect()
    }

    fn cfg(n_prime: usize, gamma: f64) -> StableConfig {
        StableConfig { n_prime, gamma, alpha: 0.25, beta: 0.25 }
    }

    #[test]
    fn h_st_single_dichotomy_is_indicator() {
        let h = HypothesisClass::explicit(3, &[vec![true, false, true], vec![true, true, false]]).unwrap();
        let s = LabeledSample::from_bits(3, &[(1, 1), (2, 1)]).unwrap();
        let t = LabeledSample::from_bits(3, &[(0, 0)]).unwrap();
        assert_eq!(h_st(&h, &s, &t, 1.0).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn h_st_symmetric_split() {
        let h = HypothesisClass::point_functions(2).unwrap();
        let s = LabeledSample::from_bits(2, &[(0, 1), (1, 1)]).unwrap();
        let t = LabeledSample::from_bits(2, &[(0, 0)]).unwrap();
        let v = h_st(&h, &s, &t, 1.0).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_st_matches_naive() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let s = LabeledSample::from_bits(4, &[(0, 1), (3, 1), (2, 0), (1, 1)]).unwrap();
        let t = LabeledSample::from_bits(4, &[(1, 0), (3, 0)]).unwrap();
        let fast = h_st(&h, &s, &t, 1.0).unwrap();
        let slow = naive::h_st(&vectors(&h), &pairs(&s), &[1, 3], 1.0);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_subset_equals_h_ss() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let s = LabeledSample::from_bits(4, &[(0, 1), (3, 0), (2, 0)]).unwrap();
        let p = stable_predict_exact(&h, &s, &cfg(3, 0.7)).unwrap();
        assert_eq!(p.terms().len(), 1);
        let direct = h_st(&h, &s, &s, 0.7).unwrap();
        for (a, b) in p.values().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_matches_enumeration_oracle() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let s = LabeledSample::from_bits(4, &[(0, 1), (1, 1), (2, 0), (3, 0)]).unwrap();
        let p = stable_predict_exact(&h, &s, &cfg(2, 0.5)).unwrap();
        let slow = naive::stable_predict(&vectors(&h), &pairs(&s), 2, 0.5);
        for (a, b) in p.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
        let w: f64 = p.terms().iter().map(|t| t.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counting_matches_enumeration() {
        let s = LabeledSample::from_bits(5, &[(0, 1), (1, 1), (0, 0), (3, 0), (3, 1), (4, 0), (1, 0)]).unwrap();
        let points: Vec<Point> = s.points().unique().sorted().collect();
        let counted = count_by_inclusion_exclusion(&s, &points, 3);
        let mut listed: BTreeMap<u64, u128> = BTreeMap::new();
        for idx in (0..s.len()).combinations(3) {
            let m = idx.iter().fold(0u64, |m, &i| m | 1 << s.pairs()[i].0.index());
            *listed.entry(m).or_default() += 1;
        }
        assert_eq!(counted, listed.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn sampled_marginal_matches_exact() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let s = LabeledSample::from_bits(4, &[(0, 1), (1, 0), (2, 0), (3, 1)]).unwrap();
        let c = cfg(2, 1.0);
        let exact = stable_predict_exact(&h, &s, &c).unwrap();
        let mut rng = seeded(11);
        for x in 0..4 {
            let hits = (0..100_000)
                .filter(|_| stable_predict_sampled(&h, &s, &c, Point(x), &mut rng).unwrap())
                .count();
            assert!((hits as f64 / 1e5 - exact.value(Point(x))).abs() < 0.01);
        }
        let a: Vec<bool> = {
            let mut r = seeded(5);
            (0..30).map(|_| stable_predict_sampled(&h, &s, &c, Point(1), &mut r).unwrap()).collect()
        };
        let b: Vec<bool> = {
            let mut r = seeded(5);
            (0..30).map(|_| stable_predict_sampled(&h, &s, &c, Point(1), &mut r).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn single_hypothesis_class_is_deterministic() {
        let h = HypothesisClass::constant(3, true).unwrap();
        let s = LabeledSample::from_bits(3, &[(0, 0), (1, 0)]).unwrap();
        let mut rng = seeded(1);
        assert!((0..50).all(|_| stable_predict_sampled(&h, &s, &cfg(1, 0.3), Point(2), &mut rng).unwrap()));
    }

    #[test]
    fn monte_carlo_approximates_exact() {
        let h = HypothesisClass::thresholds(5).unwrap();
        let s = LabeledSample::from_bits(5, &[(0, 1), (1, 1), (2, 0), (3, 0), (4, 0), (1, 1)]).unwrap();
        let c = cfg(2, 1.0);
        let exact = stable_predict_exact(&h, &s, &c).unwrap();
        let mc = stable_predict_monte_carlo(&h, &s, &c, 20_000, 3).unwrap();
        for x in 0..5 {
            assert!((exact.value(Point(x)) - mc.value(Point(x))).abs() < 0.02);
        }
    }

    #[test]
    fn too_many_points_to_count_falls_back_to_guard() {
        let h = HypothesisClass::thresholds(40).unwrap();
        let pairs: Vec<(usize, u8)> = (0..40).map(|x| (x, u8::from(x < 20))).collect();
        let s = LabeledSample::from_bits(40, &pairs).unwrap();
        assert!(matches!(
            stable_predict_exact(&h, &s, &cfg(10, 0.5)),
            Err(Error::TooLarge { hint: Some(_), .. })
        ));
        assert!(stable_predict_exact(&h, &s, &cfg(2, 0.5)).is_ok());
    }

    #[test]
    fn certificate_with_generous_gamma() {
        let h = HypothesisClass::thresholds(3).unwrap();
        let rep = stability_certificate(&cfg(1, 1.0), &h, 2, GridMode::Ordered).unwrap();
        assert!(rep.sup_gap <= 3.0);
        assert_eq!(rep.samples, 36);
    }

    #[test]
    fn fixed_subset_gap_is_mechanism_only() {
        // with T fixed, changing one example moves h_{S,T} by at most e^γ - 1
        let h = HypothesisClass::thresholds(3).unwrap();
        let gamma = 0.5;
        let t = LabeledSample::from_bits(3, &[(0, 0), (1, 0), (2, 0)]).unwrap();
        let grid = NeighborGrid::new(3, 3, GridMode::Ordered).unwrap();
        let prof = crate::verify::privacy_profile(&grid, |s| Ok(value_events(&h_st(&h, s, &t, gamma)?))).unwrap();
        assert!(prof.additive_gap() <= gamma.exp_m1() + 1e-12);
        assert!(prof.min_eps(0.0) <= gamma + 1e-12);
    }

    proptest! {
        #[test]
        fn exact_is_permutation_invariant(raw in prop::collection::vec((0usize..4, any::<bool>()), 3..7), rot in 0usize..7) {
            let h = HypothesisClass::thresholds(4).unwrap();
            let s = LabeledSample::new(4, raw.iter().map(|&(x, y)| (Point(x), y)).collect()).unwrap();
            let mut moved = raw.clone();
            moved.rotate_left(rot % raw.len());
            let t = LabeledSample::new(4, moved.into_iter().map(|(x, y)| (Point(x), y)).collect()).unwrap();
            let c = cfg(2, 0.8);
            let a = stable_predict_exact(&h, &s, &c).unwrap();
            let b = stable_predict_exact(&h, &t, &c).unwrap();
            for (u, v) in a.values().iter().zip(b.values()) {
                prop_assert!((u - v).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(u));
            }
        }
    }
}
