use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;
use stable_predict::classes::{erm, HypothesisClass, LabeledSample, Point};
use stable_predict::complexity::{n_net, Condition, PreconditionReport, Preconditions};
use stable_predict::experiments::{
    amplification_demo, lower_bound_experiment, sample_complexity_sweep, sweep_csv, sweep_trend, LowerBoundFamily,
    LowerBoundReport, SweepRow, TrendReport,
};
use stable_predict::predictor::value_events;
use stable_predict::private::{
    flip_certificate, flip_private_predict_exact, flip_private_predict_sampled, main_private_predict_exact,
    main_private_predict_sampled, privacy_certificate, FlipConfig,
};
use stable_predict::rng::{seeded, Prng};
use stable_predict::stable::{stability_certificate, stable_predict_exact, stable_predict_sampled, StableConfig};
use stable_predict::verify::{net_probability_check, privacy_profile, GapWitness, NeighborGrid, GRID_LIMIT};
use stable_predict::GridMode;

use crate::config::{
    load, ExperimentRun, PredictLearner, PredictRun, PrivacyLearner, PrivacyRun, StabilityLearner, StabilityRun,
};

/// Whether the checked guarantee held.
pub type Verdict = bool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Exact,
    Sampled,
}

/// Where a command writes its outputs.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Result<Self> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Sink { out })
    }

    /// Writes `name` under the output directory, or prints it.
    fn emit(&self, name: &str, body: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())?;
                Ok(out.flush()?)
            }
        }
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.emit(name, &body)
    }
}

fn no_preconditions(learner: &'static str) -> PreconditionReport {
    PreconditionReport { learner, conditions: Vec::new() }
}

fn erm_values(class: &HypothesisClass, s: &LabeledSample) -> stable_predict::Result<Vec<f64>> {
    let h = class.hypothesis(erm(class, s)?.representative);
    Ok((0..class.domain_size()).map(|x| h.value(Point(x))).collect())
}

#[derive(Serialize)]
struct ErmStabilityReport {
    learner: &'static str,
    domain_size: usize,
    n: usize,
    grid_mode: GridMode,
    samples: usize,
    sup_gap: f64,
    gap_bound: f64,
    gap_within_bound: bool,
    witness: Option<GapWitness>,
    preconditions: PreconditionReport,
}

pub fn certify_stability(config: &Path, sink: &Sink) -> Result<Verdict> {
    let run: StabilityRun = load(config)?;
    match run.learner {
        StabilityLearner::Stable(cfg) => {
            let rep = stability_certificate(&cfg, &run.class, run.n, run.grid)?;
            sink.json("certify_stability.json", &rep)?;
            eprintln!("sup gap {:.6} against bound {:.6}", rep.sup_gap, rep.gap_bound);
            Ok(rep.passed())
        }
        StabilityLearner::Erm { gamma } => {
            let grid = NeighborGrid::new(run.class.domain_size(), run.n, run.grid)?;
            let prof = privacy_profile(&grid, |s| Ok(value_events(&erm_values(&run.class, s)?)))?;
            let gap = prof.additive_gap();
            let rep = ErmStabilityReport {
                learner: "erm",
                domain_size: run.class.domain_size(),
                n: run.n,
                grid_mode: run.grid,
                samples: prof.samples,
                sup_gap: gap,
                gap_bound: 3.0 * gamma,
                gap_within_bound: gap <= 3.0 * gamma + 1e-9,
                witness: prof.witness.clone(),
                preconditions: no_preconditions("erm"),
            };
            sink.json("certify_stability.json", &rep)?;
            eprintln!("sup gap {:.6} against bound {:.6}", rep.sup_gap, rep.gap_bound);
            Ok(rep.gap_within_bound)
        }
    }
}

#[derive(Serialize)]
struct SimplePrivacyReport {
    learner: &'static str,
    domain_size: usize,
    n: usize,
    samples: usize,
    min_eps_pure: f64,
    additive_gap: f64,
    max_eps: Option<f64>,
    preconditions: PreconditionReport,
}

fn within(eps: f64, max_eps: Option<f64>) -> bool {
    eps.is_finite() && max_eps.is_none_or(|m| eps <= m + 1e-9)
}

pub fn certify_privacy(config: &Path, sink: &Sink) -> Result<Verdict> {
    let run: PrivacyRun = load(config)?;
    match run.learner {
        PrivacyLearner::Main(cfg) => {
            let rep = privacy_certificate(&cfg, &run.class, run.n)?;
            sink.json("certify_privacy.json", &rep)?;
            eprintln!(
                "eps at delta 0: {:.6}; fixed-T log ratio {:.6}; swap ratio {:.6}",
                rep.min_eps_pure, rep.fixed_t_log_ratio, rep.swap_max_ratio
            );
            Ok(rep.sub_lemmas_hold() && within(rep.min_eps_pure, run.max_eps))
        }
        PrivacyLearner::Flip { eps, alpha, n_prime, grid } => {
            let flip = FlipConfig::new(eps, alpha)?;
            let rep = flip_certificate(&flip, &run.class, run.n, n_prime, grid)?;
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                report: &'a stable_predict::private::FlipReport,
                preconditions: PreconditionReport,
            }
            let pre = flip.stable_config(n_prime, alpha).precondition_report(&run.class, run.n);
            sink.json("certify_privacy.json", &Out { report: &rep, preconditions: pre })?;
            eprintln!("eps at delta 0: {:.6} against {eps}", rep.min_eps_pure);
            Ok(rep.passed && within(rep.min_eps_pure, run.max_eps))
        }
        PrivacyLearner::Erm {} => {
            let grid = NeighborGrid::new(run.class.domain_size(), run.n, GridMode::Ordered)?;
            let prof = privacy_profile(&grid, |s| Ok(value_events(&erm_values(&run.class, s)?)))?;
            let rep = SimplePrivacyReport {
                learner: "erm",
                domain_size: run.class.domain_size(),
                n: run.n,
                samples: prof.samples,
                min_eps_pure: prof.min_eps(0.0),
                additive_gap: prof.additive_gap(),
                max_eps: run.max_eps,
                preconditions: no_preconditions("erm"),
            };
            sink.json("certify_privacy.json", &rep)?;
            eprintln!("eps at delta 0: {}", rep.min_eps_pure);
            Ok(within(rep.min_eps_pure, run.max_eps))
        }
    }
}

#[derive(Serialize)]
struct Prediction {
    point: usize,
    mode: &'static str,
    seed: u64,
    label: u8,
    /// Exact `Pr[output = 1]`, exact mode only.
    probability: Option<f64>,
    draws: usize,
    /// Fraction of ones over `draws` sampled predictions.
    sampled_rate: Option<f64>,
    preconditions: PreconditionReport,
}

pub fn predict(config: &Path, data: &Path, point: usize, mode: Mode, seed: u64, trials: usize, sink: &Sink) -> Result<Verdict> {
    let run: PredictRun = load(config)?;
    let s: LabeledSample = load(data)?;
    let class = &run.class;
    let x = Point(point);
    if point >= class.domain_size() {
        bail!("point {point} outside a domain of {}", class.domain_size());
    }
    let mut rng = seeded(seed);
    let n = s.len();
    let preconditions = match &run.learner {
        PredictLearner::Stable(c) => c.precondition_report(class, n),
        PredictLearner::Main(c) => c.precondition_report(class, n),
        PredictLearner::Flip { eps, alpha, n_prime } => {
            FlipConfig::new(*eps, *alpha)?.stable_config(*n_prime, *alpha).precondition_report(class, n)
        }
    };
    let draws = trials.max(1);
    let out = match mode {
        Mode::Exact => {
            let p = exact_value(class, &s, &run.learner, x)?;
            let label = rng.random_bool(p);
            Prediction {
                point,
                mode: "exact",
                seed,
                label: u8::from(label),
                probability: Some(p),
                draws: 1,
                sampled_rate: None,
                preconditions,
            }
        }
        Mode::Sampled => {
            let mut ones = 0;
            let mut first = false;
            for t in 0..draws {
                let y = sampled(class, &s, &run.learner, x, &mut rng)?;
                if t == 0 {
                    first = y;
                }
                ones += usize::from(y);
            }
            Prediction {
                point,
                mode: "sampled",
                seed,
                label: u8::from(first),
                probability: None,
                draws,
                sampled_rate: Some(ones as f64 / draws as f64),
                preconditions,
            }
        }
    };
    sink.json("prediction.json", &out)?;
    Ok(true)
}

fn exact_value(class: &HypothesisClass, s: &LabeledSample, learner: &PredictLearner, x: Point) -> Result<f64> {
    Ok(match learner {
        PredictLearner::Stable(c) => stable_predict_exact(class, s, c)?.value(x),
        PredictLearner::Main(c) => main_private_predict_exact(class, s, c)?.value(x),
        PredictLearner::Flip { eps, alpha, n_prime } => {
            flip_private_predict_exact(class, s, &FlipConfig::new(*eps, *alpha)?, *n_prime)?[x.index()]
        }
    })
}

fn sampled(class: &HypothesisClass, s: &LabeledSample, learner: &PredictLearner, x: Point, rng: &mut Prng) -> Result<bool> {
    Ok(match learner {
        PredictLearner::Stable(c) => stable_predict_sampled(class, s, c, x, rng)?,
        PredictLearner::Main(c) => main_private_predict_sampled(class, s, c, x, rng)?,
        PredictLearner::Flip { eps, alpha, n_prime } => {
            flip_private_predict_sampled(class, s, &FlipConfig::new(*eps, *alpha)?, *n_prime, x, rng)?
        }
    })
}

#[derive(Serialize)]
struct SweepSummary {
    rows: Vec<SweepRow>,
    trend: TrendReport,
    preconditions: Vec<(usize, f64, PreconditionReport)>,
}

#[derive(Serialize)]
struct LowerBoundEntry {
    certified_gap: Option<f64>,
    #[serde(flatten)]
    report: LowerBoundReport,
    floor_respected: bool,
    within_alpha: bool,
    preconditions: PreconditionReport,
}

#[derive(Serialize)]
struct NetCheckSummary {
    alpha: f64,
    trials: usize,
    rates: Vec<(usize, f64)>,
    preconditions: PreconditionReport,
}

pub fn experiment(config: &Path, seed: Option<u64>, trials: Option<usize>, sink: &Sink) -> Result<Verdict> {
    match load::<ExperimentRun>(config)? {
        ExperimentRun::Sweep(mut cfg) => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let rows = sample_complexity_sweep(&cfg)?;
            let trend = sweep_trend(&rows, &mut seeded(cfg.seed));
            let mut preconditions = Vec::new();
            for &gamma in &cfg.gammas {
                for &n in &cfg.ns {
                    let sc = StableConfig { n_prime: cfg.n_prime, gamma, alpha: cfg.alpha, beta: cfg.beta };
                    preconditions.push((n, gamma, sc.precondition_report(&cfg.class, n)));
                }
            }
            sink.emit("sweep.csv", &sweep_csv(&rows))?;
            sink.json("sweep.json", &SweepSummary { rows, trend, preconditions })?;
            Ok(true)
        }
        ExperimentRun::LowerBound(run) => {
            let (num, den) = run.alpha_parts()?;
            let fam = LowerBoundFamily::new(run.d, Ratio::new(num, den))?;
            let class = fam.class();
            let trials = trials.unwrap_or(run.trials);
            let mut rng = seeded(seed.unwrap_or(run.seed));
            let mut entries = Vec::new();
            for &n in &run.ns {
                let cfg = StableConfig { n_prime: run.n_prime, gamma: run.gamma / 3.0, alpha: fam.alpha(), beta: 0.25 };
                let certified_gap = if NeighborGrid::size_of(run.d, n, GridMode::Multiset) <= GRID_LIMIT {
                    Some(stability_certificate(&cfg, &class, n, GridMode::Multiset)?.sup_gap)
                } else {
                    None
                };
                let learner = |s: &LabeledSample| Ok(stable_predict_exact(&class, s, &cfg)?.into_values());
                let report = lower_bound_experiment(learner, &fam, n, run.gamma, trials, &mut rng)?;
                entries.push(LowerBoundEntry {
                    certified_gap,
                    floor_respected: report.floor_respected(),
                    within_alpha: report.within_alpha(),
                    report,
                    preconditions: cfg.precondition_report(&class, n),
                });
            }
            sink.json("lower_bound.json", &entries)?;
            Ok(true)
        }
        ExperimentRun::NetCheck(run) => {
            let k = run.class.domain_size();
            let weights = run.weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
            let trials = trials.unwrap_or(run.trials);
            let mut rng = seeded(seed.unwrap_or(run.seed));
            let mut rates = Vec::new();
            let mut conditions = Vec::new();
            for &m in &run.n_primes {
                rates.push((m, net_probability_check(&run.class, &weights, m, run.alpha, trials, &mut rng, run.sampling)?));
                conditions.push(Condition::at_least(
                    format!("n'={m} >= N^net(alpha, beta, d)"),
                    m as f64,
                    n_net(run.alpha, run.beta, run.class.vc_dim()) as f64,
                ));
            }
            let mut csv = String::from("n_prime,failure_rate,trials\n");
            for (m, r) in &rates {
                csv.push_str(&format!("{m},{r},{trials}\n"));
            }
            sink.emit("net_check.csv", &csv)?;
            sink.json(
                "net_check.json",
                &NetCheckSummary {
                    alpha: run.alpha,
                    trials,
                    rates,
                    preconditions: PreconditionReport { learner: "net", conditions },
                },
            )?;
            Ok(true)
        }
        ExperimentRun::Amplification(run) => {
            let rep = amplification_demo(&run.class, run.base_eps, run.n, run.n_prime)?;
            sink.json("amplification.json", &rep)?;
            Ok(rep.holds)
        }
    }
}
