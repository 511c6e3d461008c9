//! JSON run configurations. Unknown keys are rejected everywhere.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use stable_predict::experiments::SweepConfig;
use stable_predict::verify::NetSampling;
use stable_predict::{GridMode, HypothesisClass, MainConfig, StableConfig};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn ordered() -> GridMode {
    GridMode::Ordered
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityRun {
    pub class: HypothesisClass,
    pub n: usize,
    #[serde(default = "ordered")]
    pub grid: GridMode,
    pub learner: StabilityLearner,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StabilityLearner {
    Stable(StableConfig),
    /// Plain empirical risk minimization, held to the same `3γ` bound.
    Erm { gamma: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyRun {
    pub class: HypothesisClass,
    pub n: usize,
    /// Fail when the pure privacy loss exceeds this.
    #[serde(default)]
    pub max_eps: Option<f64>,
    pub learner: PrivacyLearner,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrivacyLearner {
    Main(MainConfig),
    Flip {
        eps: f64,
        alpha: f64,
        n_prime: usize,
        #[serde(default = "ordered")]
        grid: GridMode,
    },
    Erm {},
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRun {
    pub class: HypothesisClass,
    pub learner: PredictLearner,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictLearner {
    Stable(StableConfig),
    Main(MainConfig),
    Flip { eps: f64, alpha: f64, n_prime: usize },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentRun {
    Sweep(SweepConfig),
    LowerBound(LowerBoundRun),
    NetCheck(NetCheckRun),
    Amplification(AmplificationRun),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundRun {
    pub d: usize,
    /// A fraction such as `"1/8"`.
    pub alpha: String,
    pub gamma: f64,
    pub ns: Vec<usize>,
    pub n_prime: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl LowerBoundRun {
    pub fn alpha_parts(&self) -> Result<(u64, u64)> {
        let (a, b) = self.alpha.split_once('/').unwrap_or((self.alpha.as_str(), "1"));
        let num = a.trim().parse().with_context(|| format!("alpha numerator in {:?}", self.alpha))?;
        let den = b.trim().parse().with_context(|| format!("alpha denominator in {:?}", self.alpha))?;
        if den == 0 {
            bail!("alpha {:?} has a zero denominator", self.alpha);
        }
        Ok((num, den))
    }
}

fn with_replacement() -> NetSampling {
    NetSampling::WithReplacement
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetCheckRun {
    pub class: HypothesisClass,
    /// Uniform when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub n_primes: Vec<usize>,
    pub trials: usize,
    #[serde(default = "with_replacement")]
    pub sampling: NetSampling,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplificationRun {
    pub class: HypothesisClass,
    pub base_eps: f64,
    pub n: usize,
    pub n_prime: usize,
}
