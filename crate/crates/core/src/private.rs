//! Private prediction: the flip conversion of a stable learner, the
//! realizable soft-majority learner and the main agnostic learner.
//!
//! The main learner averages over every `n'`-subset `I`
//!
//! ```text
//! h_{S,S_I} = (1/Z) Σ_{h ∈ H_{S_I}} λ_h φ_S(h),   λ_h = exp(-L_S(h) / η)
//! ```
//!
//! where `φ_S(h)` is the realizable learner run on `S` relabeled by `h`.
//! Within `H_{S_I}` each dichotomy is represented by its lowest-index
//! hypothesis.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{
    check_point, erm_index, growth_or_bound, is_eps_net, representatives_on, HypothesisClass, LabeledSample, Point,
};
use crate::complexity::{n_exp, n_net, n_realizable, n_uc, Condition, PreconditionReport, Preconditions};
use crate::error::{Error, Result};
use crate::mechanisms::{exp_mech_sample, ExpMechWeights, SoftMajorityPredictor};
use crate::predictor::{value_events, MixtureMode, MixturePredictor, MixtureTerm};
use crate::rng::Prng;
use crate::stable::{
    hypothesis_losses, random_subset_mask, stable_predict_exact, stable_predict_sampled, subset_masks, StableConfig,
};
use crate::verify::{profile_from_outputs, GapWitness, GridMode, NeighborGrid, TOLERANCE};

/// Target of the flip conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipConfig {
    pub eps: f64,
    /// Flip probability, also the accuracy cost.
    pub alpha: f64,
}

impl FlipConfig {
    pub fn new(eps: f64, alpha: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps {eps} must be positive")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("flip probability {alpha} must lie in (0, 1/2)")));
        }
        Ok(FlipConfig { eps, alpha })
    }

    /// Additive stability the base learner must have: `εα/2`.
    pub fn gamma(&self) -> f64 {
        self.eps * self.alpha / 2.0
    }

    /// A stable-learner configuration whose stability bound `3γ` meets
    /// [`gamma`](Self::gamma).
    pub fn stable_config(&self, n_prime: usize, beta: f64) -> StableConfig {
        StableConfig {
            n_prime,
            gamma: self.gamma() / 3.0,
            alpha: self.alpha,
            beta,
        }
    }

    /// Smallest `n` with `n'/n` within the mechanism parameter.
    pub fn min_sample_size(&self, n_prime: usize) -> usize {
        (n_prime as f64 / (self.gamma() / 3.0)).ceil() as usize
    }
}

/// `p ↦ (1 - α) p + α (1 - p)`: report the opposite label with probability `α`.
pub fn flip_wrap(values: &[f64], alpha: f64) -> Vec<f64> {
    values.iter().map(|&p| alpha + (1.0 - 2.0 * alpha) * p).collect()
}

/// The exact flip-wrapped stable predictor.
pub fn flip_private_predict_exact(
    class: &HypothesisClass,
    s: &LabeledSample,
    flip: &FlipConfig,
    n_prime: usize,
) -> Result<Vec<f64>> {
    let base = stable_predict_exact(class, s, &flip.stable_config(n_prime, flip.alpha))?;
    Ok(flip_wrap(base.values(), flip.alpha))
}

/// One flip-wrapped prediction: a sampled stable prediction, reported
/// inverted with probability `α`.
pub fn flip_private_predict_sampled(
    class: &HypothesisClass,
    s: &LabeledSample,
    flip: &FlipConfig,
    n_prime: usize,
    x: Point,
    rng: &mut Prng,
) -> Result<bool> {
    let y = stable_predict_sampled(class, s, &flip.stable_config(n_prime, flip.alpha), x, rng)?;
    Ok(y ^ rng.random_bool(flip.alpha))
}

/// Exhaustive privacy check of the flip conversion.
#[derive(Debug, Clone, Serialize)]
pub struct FlipReport {
    pub config: FlipConfig,
    pub n_prime: usize,
    pub n: usize,
    pub samples: usize,
    pub base_gap: f64,
    pub gamma: f64,
    pub min_eps_pure: f64,
    pub passed: bool,
}

pub fn flip_certificate(
    flip: &FlipConfig,
    class: &HypothesisClass,
    n: usize,
    n_prime: usize,
    mode: GridMode,
) -> Result<FlipReport> {
    let grid = NeighborGrid::new(class.domain_size(), n, mode)?;
    let stable = flip.stable_config(n_prime, flip.alpha);
    let base: Vec<Vec<f64>> = grid.evaluate(|s| Ok(stable_predict_exact(class, s, &stable)?.into_values()))?;
    let base_events: Vec<Vec<f64>> = base.iter().map(|v| value_events(v)).collect();
    let wrapped: Vec<Vec<f64>> = base.iter().map(|v| value_events(&flip_wrap(v, flip.alpha))).collect();
    let base_gap = profile_from_outputs(&grid, &base_events)?.additive_gap();
    let min_eps_pure = profile_from_outputs(&grid, &wrapped)?.min_eps(0.0);
    Ok(FlipReport {
        config: *flip,
        n_prime,
        n,
        samples: grid.len(),
        base_gap,
        gamma: flip.gamma(),
        min_eps_pure,
        passed: min_eps_pure <= flip.eps + TOLERANCE,
    })
}

/// Parameters of the realizable soft-majority learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizableConfig {
    pub r: usize,
    pub partition_size: usize,
    pub kappa: f64,
}

impl RealizableConfig {
    /// Privacy of one changed example: `2κ/r`.
    pub fn eps_target(&self) -> f64 {
        2.0 * self.kappa / self.r as f64
    }

    /// `r = ⌈6ηm ln(1/α)⌉` partitions at scale `r/(2ηm)`, private at `1/(ηm)`.
    pub fn eta_preset(eta: f64, m: usize, alpha: f64, partition_size: usize) -> Self {
        let em = eta * m as f64;
        let r = ((6.0 * em * (1.0 / alpha).ln()).ceil() as usize).max(1);
        RealizableConfig {
            r,
            partition_size,
            kappa: r as f64 / (2.0 * em),
        }
    }

    /// `r = ⌈3 ln(1/ε)/ε⌉` partitions at scale `3 ln(1/ε)`.
    pub fn eps_preset(eps: f64, partition_size: usize) -> Self {
        let l = 3.0 * (1.0 / eps).ln();
        RealizableConfig {
            r: ((l / eps).ceil() as usize).max(1),
            partition_size,
            kappa: l,
        }
    }

    pub fn samples_needed(&self) -> usize {
        self.r.saturating_mul(self.partition_size)
    }
}

/// A fitted realizable learner and the number of blocks no hypothesis fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizableFit {
    pub predictor: SoftMajorityPredictor,
    pub inconsistent_blocks: usize,
}

/// Splits `s_h` into `r` contiguous blocks, fits the canonical minimizer to
/// each and aggregates by soft majority. Blocks past `r · N` are unused.
pub fn realizable_fit(class: &HypothesisClass, s_h: &LabeledSample, cfg: &RealizableConfig) -> Result<RealizableFit> {
    class.check_sample(s_h)?;
    if cfg.r == 0 || cfg.partition_size == 0 {
        return Err(Error::InvalidParameter("realizable learner needs r >= 1 and N >= 1".into()));
    }
    if cfg.samples_needed() > s_h.len() {
        return Err(Error::InsufficientSample(format!(
            "{} partitions of {} need {} examples, sample has {}",
            cfg.r,
            cfg.partition_size,
            cfg.samples_needed(),
            s_h.len()
        )));
    }
    let mut inconsistent_blocks = 0;
    let voters = (0..cfg.r)
        .map(|j| {
            let idx: Vec<usize> = (j * cfg.partition_size..(j + 1) * cfg.partition_size).collect();
            let block = s_h.select(&idx);
            let h = class.hypothesis(erm_index(class, &block));
            if block.mistakes(h) > 0 {
                inconsistent_blocks += 1;
            }
            h
        })
        .collect();
    Ok(RealizableFit {
        predictor: SoftMajorityPredictor::new(voters, cfg.kappa, class.domain_size())?,
        inconsistent_blocks,
    })
}

pub fn realizable_learn(class: &HypothesisClass, s_h: &LabeledSample, cfg: &RealizableConfig) -> Result<SoftMajorityPredictor> {
    Ok(realizable_fit(class, s_h, cfg)?.predictor)
}

/// Parameters of the main private learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MainConfig {
    pub n_prime: usize,
    /// Temperature of `λ_h = exp(-L_S(h)/η)`.
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    /// Partitions of the inner realizable learner.
    pub r: usize,
    pub partition_size: usize,
}

impl MainConfig {
    /// Inner learner at privacy `1/(ηn)`: `κ = r/(2ηn)`.
    pub fn realizable(&self, n: usize) -> RealizableConfig {
        RealizableConfig {
            r: self.r,
            partition_size: self.partition_size,
            kappa: self.r as f64 / (2.0 * self.eta * n as f64),
        }
    }

    /// Privacy parameter of the outer exponential mechanism: `2/(ηn)`.
    pub fn mechanism_eps(&self, n: usize) -> f64 {
        2.0 / (self.eta * n as f64)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.n_prime == 0 || self.n_prime > n {
            return Err(Error::InvalidParameter(format!("subset size {} for a sample of {n}", self.n_prime)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta {} must be positive", self.eta)));
        }
        let need = self.realizable(n).samples_needed();
        if need > n {
            return Err(Error::InsufficientSample(format!(
                "r * N = {need} exceeds n = {n}; violates n >= N^R(1/(eta n), alpha, beta, d)"
            )));
        }
        Ok(())
    }
}

impl Preconditions for MainConfig {
    fn precondition_report(&self, class: &HypothesisClass, n: usize) -> PreconditionReport {
        let d = class.vc_dim();
        let nf = n as f64;
        let inner = 1.0 / (self.eta * nf);
        PreconditionReport {
            learner: "main",
            conditions: vec![
                Condition::at_least("n >= N^G(alpha, beta, d)", nf, n_uc(self.alpha, self.beta, d) as f64),
                Condition::at_least(
                    "n' >= N^net(alpha, alpha, d)",
                    self.n_prime as f64,
                    n_net(self.alpha, self.alpha, d) as f64,
                ),
                Condition::at_least(
                    "n' >= N^net(eta, alpha, d) + 1",
                    self.n_prime as f64,
                    n_net(self.eta, self.alpha, d) as f64 + 1.0,
                ),
                Condition::at_least(
                    "n >= N^exp(tau_n(H), 2/(eta n), alpha)",
                    nf,
                    n_exp(growth_or_bound(class, n), 2.0 * inner, self.alpha) as f64,
                ),
                Condition::at_least(
                    "n >= N^R(1/(eta n), alpha, beta, d)",
                    nf,
                    n_realizable(inner, self.alpha, self.beta, d) as f64,
                ),
                Condition::at_most("n' <= eps n", self.n_prime as f64, self.eps * nf),
                Condition::at_least("eps >= 1/(eta n)", self.eps, inner),
            ],
        }
    }
}

/// `φ_S(h)` for every dichotomy of the class on the points of `S`, keyed by
/// the hypothesis bits on those points.
struct PhiTable {
    point_mask: u64,
    values: HashMap<u64, Vec<f64>>,
}

impl PhiTable {
    fn build(class: &HypothesisClass, s: &LabeledSample, rcfg: &RealizableConfig) -> Result<Self> {
        let point_mask = s.point_mask();
        let values = representatives_on(class, point_mask)
            .into_par_iter()
            .map(|i| {
                let h = class.hypothesis(i);
                let phi = realizable_learn(class, &s.relabeled(h), rcfg)?;
                Ok((h.on(point_mask), phi.values()))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(PhiTable { point_mask, values })
    }

    fn get(&self, class: &HypothesisClass, i: usize) -> &[f64] {
        &self.values[&class.hypothesis(i).on(self.point_mask)]
    }
}

/// Per-sample state shared by every subset: losses and the `φ` table.
struct MainState<'a> {
    class: &'a HypothesisClass,
    losses: Vec<f64>,
    phi: PhiTable,
    eps: f64,
    n: usize,
}

impl<'a> MainState<'a> {
    fn new(class: &'a HypothesisClass, s: &LabeledSample, cfg: &MainConfig) -> Result<Self> {
        class.check_sample(s)?;
        cfg.validate(s.len())?;
        Ok(MainState {
            class,
            losses: hypothesis_losses(class, s),
            phi: PhiTable::build(class, s, &cfg.realizable(s.len()))?,
            eps: cfg.mechanism_eps(s.len()),
            n: s.len(),
        })
    }

    fn weights(&self, mask: u64) -> Result<ExpMechWeights> {
        let reps = representatives_on(self.class, mask);
        let l = reps.iter().map(|&r| self.losses[r]).collect();
        ExpMechWeights::from_losses(reps, l, self.eps, self.n)
    }

    /// `h_{S,T}` for `T` with point set `mask`.
    fn values_on(&self, mask: u64) -> Result<Vec<f64>> {
        let w = self.weights(mask)?;
        Ok(w.mix(|i, out| out.copy_from_slice(self.phi.get(self.class, i)), self.class.domain_size()))
    }
}

/// The exact main predictor.
pub fn main_private_predict_exact(class: &HypothesisClass, s: &LabeledSample, cfg: &MainConfig) -> Result<MixturePredictor> {
    let state = MainState::new(class, s, cfg)?;
    let (masks, total) = subset_masks(s, cfg.n_prime)?;
    let terms = masks
        .par_iter()
        .map(|&(mask, count)| {
            Ok(MixtureTerm {
                weight: count as f64 / total as f64,
                values: state.values_on(mask)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixturePredictor::from_terms(terms, MixtureMode::Exact)
}

/// One randomized prediction at `x`: a uniform subset, one hypothesis from
/// the exponential mechanism at `2/(ηn)`, then a draw from `φ_S(ĥ)(x)`.
pub fn main_private_predict_sampled(
    class: &HypothesisClass,
    s: &LabeledSample,
    cfg: &MainConfig,
    x: Point,
    rng: &mut Prng,
) -> Result<bool> {
    class.check_sample(s)?;
    cfg.validate(s.len())?;
    check_point(x, class.domain_size())?;
    let mask = random_subset_mask(s, cfg.n_prime, rng);
    let reps = representatives_on(class, mask);
    let losses = reps.iter().map(|&r| s.loss(class.hypothesis(r))).collect();
    let w = ExpMechWeights::from_losses(reps, losses, cfg.mechanism_eps(s.len()), s.len())?;
    let h = class.hypothesis(exp_mech_sample(&w, rng));
    let phi = realizable_learn(class, &s.relabeled(h), &cfg.realizable(s.len()))?;
    Ok(rng.random_bool(phi.values()[x.index()]))
}

/// Largest `ln(P(e)/P'(e))` over events, `∞` if `P'(e) = 0 < P(e)`.
fn log_ratio(a: &[f64], b: &[f64]) -> f64 {
    value_events(a)
        .into_iter()
        .zip(value_events(b))
        .map(|(p, q)| if p <= 0.0 { 0.0 } else if q <= 0.0 { f64::INFINITY } else { (p / q).ln() })
        .fold(0.0, f64::max)
}

/// Exhaustive privacy certificate of the main learner.
#[derive(Debug, Clone, Serialize)]
pub struct PrivacyReport {
    pub config: MainConfig,
    pub domain_size: usize,
    pub n: usize,
    pub samples: usize,
    pub neighbor_pairs: usize,
    pub additive_gap: f64,
    pub min_eps_pure: f64,
    /// `(δ, ε(δ))` on a `1e-4` grid of `δ`.
    pub eps_delta_curve: Vec<(f64, f64)>,
    pub witness: Option<GapWitness>,
    /// Largest `ln` ratio of `h_{S,T}` to `h_{S',T}` over neighbors and every
    /// point set `T` of at most `n'` points.
    pub fixed_t_log_ratio: f64,
    /// `3/(ηn)`: one weight, the normalizer and one voter.
    pub fixed_t_tight_bound: f64,
    /// `3ε`.
    pub fixed_t_bound: f64,
    /// Subset swaps checked with the net condition holding.
    pub swap_instances: usize,
    /// Swaps skipped because the remaining indices are not an `η`-net.
    pub swap_skipped: usize,
    pub swap_max_ratio: f64,
    pub swap_bound: f64,
    pub preconditions: PreconditionReport,
}

impl PrivacyReport {
    pub fn sub_lemmas_hold(&self) -> bool {
        self.fixed_t_log_ratio <= self.fixed_t_tight_bound + TOLERANCE && self.swap_max_ratio <= self.swap_bound
    }
}

pub const DELTA_RESOLUTION: f64 = 1e-4;

/// Runs the exact main learner on every ordered sample of size `n` and
/// reports the achieved privacy together with the two intermediate
/// relations of the privacy argument.
pub fn privacy_certificate(cfg: &MainConfig, class: &HypothesisClass, n: usize) -> Result<PrivacyReport> {
    cfg.validate(n)?;
    let grid = NeighborGrid::new(class.domain_size(), n, GridMode::Ordered)?;
    let domain_masks: Vec<u64> = (1u64..1 << class.domain_size())
        .filter(|m| m.count_ones() as usize <= cfg.n_prime)
        .collect();

    struct PerSample {
        events: Vec<f64>,
        fixed_t: Vec<Vec<f64>>,
        swap: (usize, usize, f64),
    }
    let per: Vec<PerSample> = grid.evaluate(|s| {
        let state = MainState::new(class, s, cfg)?;
        let (masks, total) = subset_masks(s, cfg.n_prime)?;
        let mut values = vec![0.0; class.domain_size()];
        for &(mask, count) in &masks {
            for (v, t) in values.iter_mut().zip(state.values_on(mask)?) {
                *v += t * count as f64 / total as f64;
            }
        }
        let fixed_t = domain_masks.iter().map(|&m| state.values_on(m)).collect::<Result<_>>()?;
        Ok(PerSample {
            events: value_events(&values),
            fixed_t,
            swap: swap_check(&state, s, cfg)?,
        })
    })?;

    let events: Vec<Vec<f64>> = per.iter().map(|p| p.events.clone()).collect();
    let prof = profile_from_outputs(&grid, &events)?;
    let fixed_t_log_ratio = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            grid.neighbors(i)
                .into_iter()
                .flat_map(|j| {
                    per[i].fixed_t.iter().zip(&per[j].fixed_t).map(|(a, b)| log_ratio(a, b))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let (swap_instances, swap_skipped, swap_max_ratio) = per
        .iter()
        .fold((0, 0, 0.0f64), |acc, p| (acc.0 + p.swap.0, acc.1 + p.swap.1, acc.2.max(p.swap.2)));
    let inner = 1.0 / (cfg.eta * n as f64);
    Ok(PrivacyReport {
        config: *cfg,
        domain_size: class.domain_size(),
        n,
        samples: prof.samples,
        neighbor_pairs: prof.neighbor_pairs,
        additive_gap: prof.additive_gap(),
        min_eps_pure: prof.min_eps(0.0),
        eps_delta_curve: prof.eps_delta_curve(DELTA_RESOLUTION),
        witness: prof.witness.clone(),
        fixed_t_log_ratio,
        fixed_t_tight_bound: 3.0 * inner,
        fixed_t_bound: 3.0 * cfg.eps,
        swap_instances,
        swap_skipped,
        swap_max_ratio,
        swap_bound: 4.0 * 6f64.exp(),
        preconditions: cfg.precondition_report(class, n),
    })
}

/// For every changed index `c`, every subset `I ∋ c` whose other indices
/// form an `η`-net for the empirical law of `S` without `c`, and every
/// `i ∉ I`: the ratio of `h_{S,S_I}` to `h_{S,S_{I'}}` with
/// `I' = I \ {c} ∪ {i}`. Returns `(checked, skipped, max ratio)`.
fn swap_check(state: &MainState, s: &LabeledSample, cfg: &MainConfig) -> Result<(usize, usize, f64)> {
    let n = s.len();
    let mask_of = |idx: &[usize]| idx.iter().fold(0u64, |m, &i| m | 1 << s.pairs()[i].0.index());
    let mut cache: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut values = |mask: u64| -> Result<Vec<f64>> {
        if let Some(v) = cache.get(&mask) {
            return Ok(v.clone());
        }
        let v = state.values_on(mask)?;
        cache.insert(mask, v.clone());
        Ok(v)
    };
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    for c in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != c).collect();
        let rest = s.select(&others);
        let weights = rest.empirical_weights();
        for kept in others.iter().copied().combinations(cfg.n_prime - 1) {
            let pts: Vec<Point> = kept.iter().map(|&j| s.pairs()[j].0).collect();
            let mut with_c = kept.clone();
            with_c.push(c);
            let outside: Vec<usize> = others.iter().copied().filter(|j| !kept.contains(j)).collect();
            if !is_eps_net(&pts, state.class, &weights, cfg.eta)? {
                skipped += outside.len();
                continue;
            }
            let a = values(mask_of(&with_c))?;
            for i in outside {
                let mut swapped = kept.clone();
                swapped.push(i);
                let b = values(mask_of(&swapped))?;
                worst = worst.max(log_ratio(&a, &b).exp());
                checked += 1;
            }
        }
    }
    Ok((checked, skipped, worst))
}
