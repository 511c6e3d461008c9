//! Synthetic distributions and the reproduction experiments: the
//! lower-bound family, subsampling amplification and sample-size sweeps.

use std::fmt::Write as _;

use itertools::Itertools;
use num_rational::Ratio;
use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{binomial, check_distribution, HypothesisClass, Labeling, LabeledSample, Point};
use crate::error::{Error, Result};
use crate::mechanisms::ExpMechWeights;
use crate::predictor::value_events;
use crate::rng::{split, Prng};
use crate::stable::{stable_predict_exact, StableConfig};
use crate::verify::stats::{mean_se, spearman, spearman_bootstrap};
use crate::verify::{privacy_profile, GridMode, NeighborGrid};

/// How labels are attached to drawn points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeler {
    /// `y = h(x)`.
    Fixed(Labeling),
    /// `y = h(x)`, flipped independently with probability `noise`.
    Agnostic { target: Labeling, noise: f64 },
}

impl Labeler {
    pub fn target(&self) -> Labeling {
        match *self {
            Labeler::Fixed(h) => h,
            Labeler::Agnostic { target, .. } => target,
        }
    }

    pub fn noise(&self) -> f64 {
        match *self {
            Labeler::Fixed(_) => 0.0,
            Labeler::Agnostic { noise, .. } => noise,
        }
    }
}

/// A distribution over `X × {0, 1}`: point weights and a labeler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceDistribution {
    weights: Vec<f64>,
    labeler: Labeler,
}

impl SourceDistribution {
    pub fn new(weights: Vec<f64>, labeler: Labeler) -> Result<Self> {
        check_distribution(&weights, weights.len())?;
        let noise = labeler.noise();
        if !(0.0..=0.5).contains(&noise) {
            return Err(Error::InvalidParameter(format!("noise rate {noise} outside [0, 1/2]")));
        }
        Ok(SourceDistribution { weights, labeler })
    }

    pub fn uniform(domain_size: usize, labeler: Labeler) -> Result<Self> {
        Self::new(vec![1.0 / domain_size as f64; domain_size], labeler)
    }

    pub fn domain_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labeler(&self) -> Labeler {
        self.labeler
    }

    /// `Pr[y = 1 | x]`.
    pub fn prob_one(&self, x: Point) -> f64 {
        let noise = self.labeler.noise();
        if self.labeler.target().label(x) {
            1.0 - noise
        } else {
            noise
        }
    }

    /// Exact `L_D(h)`.
    pub fn loss(&self, h: Labeling) -> f64 {
        self.value_loss(&(0..self.domain_size()).map(|x| h.value(Point(x))).collect::<Vec<_>>())
    }

    /// Exact `L_D` of a randomized predictor with values `p`.
    pub fn value_loss(&self, p: &[f64]) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(x, w)| {
                let q = self.prob_one(Point(x));
                w * (p[x] * (1.0 - q) + (1.0 - p[x]) * q)
            })
            .sum()
    }

    /// `min_h L_D(h)` over the class.
    pub fn best_loss(&self, class: &HypothesisClass) -> f64 {
        class
            .hypotheses()
            .iter()
            .map(|&h| self.loss(h))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `n` i.i.d. examples from `dist`.
pub fn sample_dataset<R: Rng + ?Sized>(dist: &SourceDistribution, n: usize, rng: &mut R) -> Result<LabeledSample> {
    let index = WeightedIndex::new(&dist.weights).map_err(|e| Error::BadDistribution(e.to_string()))?;
    let noise = dist.labeler.noise();
    let target = dist.labeler.target();
    let pairs = (0..n)
        .map(|_| {
            let x = Point(index.sample(rng));
            let flip = noise > 0.0 && rng.random::<f64>() < noise;
            (x, target.label(x) != flip)
        })
        .collect();
    LabeledSample::new(dist.domain_size(), pairs)
}

/// `S^flip(k)`: every label at point `k` inverted.
pub fn flip_set(s: &LabeledSample, k: Point) -> LabeledSample {
    let pairs = s
        .pairs()
        .iter()
        .map(|&(x, y)| (x, if x == k { !y } else { y }))
        .collect();
    LabeledSample::new(s.domain_size(), pairs).expect("points are unchanged")
}

/// The hard family: `d` points, the first `d - 1` of mass `4α/(d-1)` each
/// and the last of mass `1 - 4α`. Targets range over all `2^d` labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundFamily {
    d: usize,
    alpha: Ratio<u64>,
}

impl LowerBoundFamily {
    pub fn new(d: usize, alpha: Ratio<u64>) -> Result<Self> {
        if !(2..=16).contains(&d) {
            return Err(Error::InvalidParameter(format!("family dimension {d} outside 2..=16")));
        }
        if alpha == Ratio::from_integer(0) || alpha > Ratio::new(1, 4) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1/4]")));
        }
        Ok(LowerBoundFamily { d, alpha })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        to_f64(self.alpha)
    }

    pub fn exact_weights(&self) -> Vec<Ratio<u64>> {
        let light = self.alpha * 4 / (self.d as u64 - 1);
        let mut w = vec![light; self.d - 1];
        w.push(Ratio::from_integer(1) - self.alpha * 4);
        w
    }

    pub fn weights(&self) -> Vec<f64> {
        self.exact_weights().into_iter().map(to_f64).collect()
    }

    /// Mass of each light point, `4α/(d-1)`.
    pub fn light_mass(&self) -> f64 {
        4.0 * self.alpha() / (self.d - 1) as f64
    }

    /// Every binary function on the family's points.
    pub fn class(&self) -> HypothesisClass {
        HypothesisClass::all_functions(self.d).expect("d <= 16")
    }

    pub fn distribution(&self, target: Labeling) -> SourceDistribution {
        SourceDistribution::new(self.weights(), Labeler::Fixed(target)).expect("family weights are normalized")
    }

    /// `n* = (d - 1) / (8 γ α)`.
    pub fn threshold(&self, gamma: f64) -> f64 {
        (self.d - 1) as f64 / (8.0 * gamma * self.alpha())
    }

    /// `2α (1 - 4γαn/(d-1))`: the error floor of any `γ`-stable learner.
    pub fn error_floor(&self, gamma: f64, n: usize) -> f64 {
        2.0 * self.alpha() * (1.0 - gamma * self.light_mass() * n as f64)
    }
}

fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Measured terms of the lower-bound argument at one sample size.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub n: usize,
    pub trials: usize,
    pub threshold_n: f64,
    pub below_threshold: bool,
    /// Mean `L_{D_h}(A(S))` over random targets and samples.
    pub mean_error: f64,
    pub se_error: f64,
    /// `(4α/(d-1)) Σ_k E|h(k) - A(S)(k)|` over light points.
    pub light_error: f64,
    /// `(2α/(d-1)) Σ_k (1 - E|A(S)(k) - A(S^flip(k))(k)|)`.
    pub flip_term: f64,
    /// Standard error of `light_error - flip_term`, from per-trial differences.
    pub se_light_minus_flip: f64,
    /// `(2α/(d-1)) Σ_k (1 - γ E[#_S(k)])`.
    pub stability_term: f64,
    /// `2α (1 - 4γαn/(d-1))`.
    pub error_floor: f64,
    /// Mean occurrences of each light point.
    pub mean_counts: Vec<f64>,
    pub se_counts: Vec<f64>,
    /// `4αn/(d-1)`.
    pub expected_count: f64,
    /// Largest `|A(S)(k) - A(S^flip(k))(k)| / #_S(k)` seen; at most `γ`
    /// for a `γ`-stable learner.
    pub max_flip_per_occurrence: f64,
}

impl LowerBoundReport {
    /// Mean error is at least the floor, within three standard errors.
    pub fn floor_respected(&self) -> bool {
        self.mean_error + 3.0 * self.se_error >= self.error_floor
    }

    /// Mean error is at most `α`, within three standard errors.
    pub fn within_alpha(&self) -> bool {
        self.mean_error - 3.0 * self.se_error <= self.alpha
    }

    /// `light_error >= flip_term`, within three standard errors of the
    /// per-trial difference.
    pub fn light_dominates_flip(&self) -> bool {
        self.light_error + 3.0 * self.se_light_minus_flip >= self.flip_term
    }

    /// Per-trial group stability held: flip sensitivity `<= γ #_S(k)`.
    pub fn group_stability_respected(&self) -> bool {
        self.max_flip_per_occurrence <= self.gamma + 1e-9
    }
}

struct Trial {
    error: f64,
    light_abs: Vec<f64>,
    flip_abs: Vec<f64>,
    counts: Vec<usize>,
}

/// Runs `learner` on samples from random members of the family.
pub fn lower_bound_experiment<F>(
    learner: F,
    fam: &LowerBoundFamily,
    n: usize,
    gamma: f64,
    trials: usize,
    rng: &mut Prng,
) -> Result<LowerBoundReport>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    let d = fam.d;
    let base: u64 = rng.random();
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = split(base, t);
            let target = Labeling::from_bits(r.random_range(0..1u64 << d));
            let dist = fam.distribution(target);
            let s = sample_dataset(&dist, n, &mut r)?;
            let p = learner(&s)?;
            let mut light_abs = Vec::with_capacity(d - 1);
            let mut flip_abs = Vec::with_capacity(d - 1);
            let mut counts = Vec::with_capacity(d - 1);
            for k in 0..d - 1 {
                let x = Point(k);
                light_abs.push((target.value(x) - p[k]).abs());
                let flipped = learner(&flip_set(&s, x))?;
                flip_abs.push((p[k] - flipped[k]).abs());
                counts.push(s.points().filter(|&y| y == x).count());
            }
            Ok(Trial {
                error: dist.value_loss(&p),
                light_abs,
                flip_abs,
                counts,
            })
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = results.iter().map(|t| t.error).collect();
    let (mean_error, se_error) = mean_se(&errors);
    let m = trials as f64;
    let scale = 2.0 * fam.alpha() / (d - 1) as f64;
    let mut light_error = 0.0;
    let mut flip_term = 0.0;
    let mut stability_term = 0.0;
    let diffs: Vec<f64> = results
        .iter()
        .map(|t| {
            t.light_abs.iter().zip(&t.flip_abs).map(|(&l, &f)| 2.0 * scale * l - scale * (1.0 - f)).sum()
        })
        .collect();
    let (_, se_light_minus_flip) = mean_se(&diffs);
    let mut mean_counts = Vec::new();
    let mut se_counts = Vec::new();
    for k in 0..d - 1 {
        let light: f64 = results.iter().map(|t| t.light_abs[k]).sum::<f64>() / m;
        let flip: f64 = results.iter().map(|t| t.flip_abs[k]).sum::<f64>() / m;
        let counts: Vec<f64> = results.iter().map(|t| t.counts[k] as f64).collect();
        let (mc, sc) = mean_se(&counts);
        light_error += 2.0 * scale * light;
        flip_term += scale * (1.0 - flip);
        stability_term += scale * (1.0 - gamma * mc);
        mean_counts.push(mc);
        se_counts.push(sc);
    }
    let max_flip_per_occurrence = results
        .iter()
        .flat_map(|t| {
            t.flip_abs.iter().zip(&t.counts).map(|(&f, &c)| {
                if c == 0 {
                    if f > 0.0 { f64::INFINITY } else { 0.0 }
                } else {
                    f / c as f64
                }
            })
        })
        .fold(0.0, f64::max);
    Ok(LowerBoundReport {
        d,
        alpha: fam.alpha(),
        gamma,
        n,
        trials,
        threshold_n: fam.threshold(gamma),
        below_threshold: (n as f64) < fam.threshold(gamma),
        mean_error,
        se_error,
        light_error,
        flip_term,
        se_light_minus_flip,
        stability_term,
        error_floor: fam.error_floor(gamma, n),
        mean_counts,
        se_counts,
        expected_count: fam.light_mass() * n as f64,
        max_flip_per_occurrence,
    })
}

/// Result of wrapping an `ε`-private learner in uniform subsampling.
#[derive(Debug, Clone, Serialize)]
pub struct AmplificationReport {
    pub base_eps: f64,
    pub n: usize,
    pub n_prime: usize,
    /// Subsampling rate `n'/n`.
    pub eta: f64,
    /// Privacy of the base learner measured on samples of size `n'`.
    pub measured_base_eps: f64,
    /// Privacy of the wrapper measured on samples of size `n`.
    pub measured_eps: f64,
    /// `2 ε η`.
    pub bound: f64,
    /// `ln(1 + η (e^ε - 1))`.
    pub tight_bound: f64,
    pub holds: bool,
}

/// The base learner of the amplification demo: the exponential mechanism
/// over the whole class scored on its input, read as a value function.
pub fn exp_mech_learner(class: &HypothesisClass, eps: f64, s: &LabeledSample) -> Result<Vec<f64>> {
    let losses = class.hypotheses().iter().map(|&h| s.loss(h)).collect();
    let w = ExpMechWeights::from_losses((0..class.len()).collect(), losses, eps, s.len())?;
    Ok(w.value_function(class))
}

/// Uniform average of `base` over all `n'`-subsets of the sample.
pub fn subsample_average<F>(s: &LabeledSample, n_prime: usize, base: F) -> Result<Vec<f64>>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>>,
{
    let n = s.len();
    if n_prime == 0 || n_prime > n {
        return Err(Error::InvalidParameter(format!("subset size {n_prime} for a sample of {n}")));
    }
    let count = binomial(n as u64, n_prime as u64);
    if count > 1_000_000 {
        return Err(Error::too_large("subsets to average", count, 1_000_000));
    }
    let mut acc: Vec<f64> = Vec::new();
    for idx in (0..n).combinations(n_prime) {
        let v = base(&s.select(&idx))?;
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    let c = count as f64;
    Ok(acc.into_iter().map(|a| (a / c).clamp(0.0, 1.0)).collect())
}

/// Measures the privacy of the exponential mechanism before and after
/// subsampling `n'` of `n` examples, exhaustively.
pub fn amplification_demo(
    class: &HypothesisClass,
    base_eps: f64,
    n: usize,
    n_prime: usize,
) -> Result<AmplificationReport> {
    let x = class.domain_size();
    let base_grid = NeighborGrid::new(x, n_prime, GridMode::Ordered)?;
    let base = privacy_profile(&base_grid, |s| Ok(value_events(&exp_mech_learner(class, base_eps, s)?)))?;
    let grid = NeighborGrid::new(x, n, GridMode::Ordered)?;
    let wrapped = privacy_profile(&grid, |s| {
        Ok(value_events(&subsample_average(s, n_prime, |t| exp_mech_learner(class, base_eps, t))?))
    })?;
    let eta = n_prime as f64 / n as f64;
    let measured_eps = wrapped.min_eps(0.0);
    let bound = 2.0 * base_eps * eta;
    Ok(AmplificationReport {
        base_eps,
        n,
        n_prime,
        eta,
        measured_base_eps: base.min_eps(0.0),
        measured_eps,
        bound,
        tight_bound: (1.0 + eta * base_eps.exp_m1()).ln(),
        holds: measured_eps <= bound + 1e-9,
    })
}

/// Grid of a sample-size sweep of the stable learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub class: HypothesisClass,
    /// Point weights of the source distribution.
    pub weights: Vec<f64>,
    /// Index of the target hypothesis in the class.
    pub target: usize,
    #[serde(default)]
    pub noise: f64,
    pub ns: Vec<usize>,
    pub gammas: Vec<f64>,
    pub n_prime: usize,
    pub alpha: f64,
    pub beta: f64,
    pub trials: usize,
    /// Certify stability exactly when the multiset grid fits.
    #[serde(default = "yes")]
    pub certify: bool,
    #[serde(default)]
    pub delta: f64,
    pub seed: u64,
}

fn yes() -> bool {
    true
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub excess_err: f64,
    pub stability_gap: Option<f64>,
    pub min_eps: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
}

/// Fixed CSV header of sweep output.
pub const SWEEP_HEADER: &str = "n,d,alpha,gamma,eps,excess_err,stability_gap,min_eps,delta,seed";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders rows under [`SWEEP_HEADER`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.d,
            r.alpha,
            opt(r.gamma),
            opt(r.eps),
            r.excess_err,
            opt(r.stability_gap),
            opt(r.min_eps),
            opt(r.delta),
            r.seed
        );
    }
    out
}

/// Runs the stable learner at every `(n, γ)` of the grid: mean excess
/// population error over `trials` samples, and the exact stability gap and
/// privacy when the grid is small enough.
pub fn sample_complexity_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let labeler = if cfg.noise > 0.0 {
        Labeler::Agnostic {
            target: cfg.class.hypothesis(cfg.target),
            noise: cfg.noise,
        }
    } else {
        Labeler::Fixed(cfg.class.hypothesis(cfg.target))
    };
    let dist = SourceDistribution::new(cfg.weights.clone(), labeler)?;
    let best = dist.best_loss(&cfg.class);
    let mut rows = Vec::new();
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        for (ni, &n) in cfg.ns.iter().enumerate() {
            let scfg = StableConfig {
                n_prime: cfg.n_prime,
                gamma,
                alpha: cfg.alpha,
                beta: cfg.beta,
            };
            let seed = cfg.seed ^ ((gi as u64) << 32 | ni as u64);
            let errs: Vec<f64> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let s = sample_dataset(&dist, n, &mut split(seed, t))?;
                    let p = stable_predict_exact(&cfg.class, &s, &scfg)?;
                    Ok(dist.value_loss(p.values()) - best)
                })
                .collect::<Result<_>>()?;
            let (excess, _) = mean_se(&errs);
            let (gap, min_eps) = if cfg.certify
                && NeighborGrid::size_of(cfg.class.domain_size(), n, GridMode::Multiset) <= crate::verify::GRID_LIMIT
            {
                let grid = NeighborGrid::new(cfg.class.domain_size(), n, GridMode::Multiset)?;
                let prof = privacy_profile(&grid, |s| {
                    Ok(value_events(stable_predict_exact(&cfg.class, s, &scfg)?.values()))
                })?;
                (Some(prof.additive_gap()), Some(prof.min_eps(cfg.delta)))
            } else {
                (None, None)
            };
            rows.push(SweepRow {
                n,
                d: cfg.class.vc_dim(),
                alpha: cfg.alpha,
                gamma: Some(gamma),
                eps: None,
                excess_err: excess,
                stability_gap: gap,
                min_eps,
                delta: min_eps.map(|_| cfg.delta),
                seed,
            });
        }
    }
    Ok(rows)
}

/// Monotone-trend summary of excess error against `n`.
#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub spearman: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The 95% bootstrap interval lies below zero.
    pub decreasing: bool,
}

/// Spearman correlation of `(n, excess_err)` over the rows with a 95%
/// percentile bootstrap interval.
pub fn sweep_trend(rows: &[SweepRow], rng: &mut Prng) -> TrendReport {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.excess_err).collect();
    let rho = spearman(&xs, &ys);
    let (lo, hi) = spearman_bootstrap(&xs, &ys, 2000, 0.95, rng);
    TrendReport {
        spearman: rho,
        ci_low: lo,
        ci_high: hi,
        decreasing: hi < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::erm;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn fixed_labeler_gives_realizable_samples() {
        let h = HypothesisClass::thresholds(6).unwrap();
        let dist = SourceDistribution::uniform(6, Labeler::Fixed(h.hypothesis(3))).unwrap();
        let s = sample_dataset(&dist, 50, &mut seeded(1)).unwrap();
        let e = erm(&h, &s).unwrap();
        assert_eq!(s.loss(h.hypothesis(e.representative)), 0.0);
        assert_eq!(dist.loss(h.hypothesis(3)), 0.0);
    }

    #[test]
    fn coin_labels_are_balanced() {
        let dist = SourceDistribution::uniform(
            3,
            Labeler::Agnostic { target: Labeling::from_bits(0), noise: 0.5 },
        )
        .unwrap();
        let s = sample_dataset(&dist, 10_000, &mut seeded(2)).unwrap();
        let ones = s.pairs().iter().filter(|p| p.1).count() as f64 / 1e4;
        // 4 standard deviations of a fair binomial proportion
        assert!((ones - 0.5).abs() < 4.0 * 0.005);
    }

    #[test]
    fn point_mass_repeats_one_point() {
        let dist = SourceDistribution::new(vec![0.0, 1.0, 0.0], Labeler::Fixed(Labeling::from_bits(2))).unwrap();
        let s = sample_dataset(&dist, 20, &mut seeded(3)).unwrap();
        assert!(s.pairs().iter().all(|&p| p == (Point(1), true)));
    }

    #[test]
    fn flip_set_examples() {
        let s = LabeledSample::from_bits(3, &[(0, 1), (1, 0), (0, 0)]).unwrap();
        assert_eq!(flip_set(&s, Point(2)), s);
        let once = flip_set(&s, Point(1));
        assert_eq!(once.pairs().iter().zip(s.pairs()).filter(|(a, b)| a != b).count(), 1);
        assert_eq!(flip_set(&once, Point(1)), s);
    }

    #[test]
    fn family_weights_are_exact() {
        for d in [2, 3, 4] {
            for a in [Ratio::new(1, 8), Ratio::new(1, 16)] {
                let fam = LowerBoundFamily::new(d, a).unwrap();
                let total: Ratio<u64> = fam.exact_weights().into_iter().sum();
                assert_eq!(total, Ratio::from_integer(1));
            }
        }
        let fam = LowerBoundFamily::new(3, Ratio::new(1, 8)).unwrap();
        assert_eq!(fam.threshold(0.25), 8.0);
        assert!(LowerBoundFamily::new(3, Ratio::new(1, 3)).is_err());
    }

    #[test]
    fn constant_learner_errs_half_the_time() {
        let fam = LowerBoundFamily::new(3, Ratio::new(1, 8)).unwrap();
        let rep = lower_bound_experiment(|_| Ok(vec![0.5; 3]), &fam, 6, 0.25, 400, &mut seeded(4)).unwrap();
        assert!((rep.mean_error - 0.5).abs() < 1e-12);
        assert_eq!(rep.max_flip_per_occurrence, 0.0);
        for (m, se) in rep.mean_counts.iter().zip(&rep.se_counts) {
            assert!((m - rep.expected_count).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn amplification_sanity() {
        let h = HypothesisClass::thresholds(2).unwrap();
        let rep = amplification_demo(&h, 0.5, 2, 2).unwrap();
        assert!(rep.measured_eps <= rep.base_eps + 1e-12);
        let c = HypothesisClass::constant(2, true).unwrap();
        assert_eq!(amplification_demo(&c, 0.5, 3, 1).unwrap().measured_eps, 0.0);
    }

    #[test]
    fn constant_class_sweep_has_no_excess() {
        let cfg = SweepConfig {
            class: HypothesisClass::constant(3, false).unwrap(),
            weights: vec![1.0 / 3.0; 3],
            target: 0,
            noise: 0.0,
            ns: vec![2, 4, 8],
            gammas: vec![0.5],
            n_prime: 1,
            alpha: 0.1,
            beta: 0.1,
            trials: 10,
            certify: false,
            delta: 0.0,
            seed: 1,
        };
        let rows = sample_complexity_sweep(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.excess_err == 0.0));
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn flip_set_is_involution(raw in prop::collection::vec((0usize..4, any::<bool>()), 1..12), k in 0usize..4) {
            let s = LabeledSample::new(4, raw.into_iter().map(|(x, y)| (Point(x), y)).collect()).unwrap();
            let f = flip_set(&s, Point(k));
            prop_assert_eq!(flip_set(&f, Point(k)), s.clone());
            let mut a: Vec<Point> = s.points().collect();
            let mut b: Vec<Point> = f.points().collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
