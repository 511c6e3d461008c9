//! Sample-size calculators and precondition reports.
//!
//! The net, uniform-convergence and realizable sizes carry conventional
//! constants; they live in [`Constants`] so callers can override them.

use serde::{Deserialize, Serialize};

/// Constants used by the sample-size calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// `c` in `(c d ln(8/α) + c' ln(2/β)) / α`.
    pub net_dim: f64,
    /// `c'` in the net size.
    pub net_conf: f64,
    /// `c` in `(c d + c' ln(2/β)) / α²`.
    pub uc_dim: f64,
    /// `c'` in the uniform-convergence size.
    pub uc_conf: f64,
    /// `c` in the partition count `r = ⌈c ln(1/α) / ε⌉` of the realizable learner.
    pub partitions: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            net_dim: 4.0,
            net_conf: 2.0,
            uc_dim: 8.0,
            uc_conf: 4.0,
            partitions: 6.0,
        }
    }
}

impl Constants {
    /// Size of an i.i.d. sample that is an `α`-net with probability `1 - β`.
    pub fn n_net(&self, alpha: f64, beta: f64, d: usize) -> u64 {
        ceil((self.net_dim * d as f64 * (8.0 / alpha).ln() + self.net_conf * (2.0 / beta).ln()) / alpha)
    }

    /// Size at which uniform convergence to `α` holds with probability `1 - β`.
    pub fn n_uc(&self, alpha: f64, beta: f64, d: usize) -> u64 {
        ceil((self.uc_dim * d as f64 + self.uc_conf * (2.0 / beta).ln()) / (alpha * alpha))
    }

    /// Partition count of the realizable learner at privacy `eps`.
    pub fn realizable_partitions(&self, eps: f64, alpha: f64) -> u64 {
        ceil(self.partitions * (1.0 / alpha).ln() / eps).max(1)
    }

    /// Sample size of the realizable private learner: `r` blocks, each a
    /// net of size `N^net(α, β/r, d)` so that all blocks succeed together.
    pub fn n_realizable(&self, eps: f64, alpha: f64, beta: f64, d: usize) -> u64 {
        let r = self.realizable_partitions(eps, alpha);
        r.saturating_mul(self.n_net(alpha, beta / r as f64, d))
    }
}

fn ceil(v: f64) -> u64 {
    if v.is_nan() || v <= 0.0 {
        0
    } else if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.ceil() as u64
    }
}

/// `N^net(α, β, d)` with the default constants.
pub fn n_net(alpha: f64, beta: f64, d: usize) -> u64 {
    Constants::default().n_net(alpha, beta, d)
}

/// `N^exp(k, ε, α) = ⌈2 ln k / (ε α)⌉`: the exponential mechanism over `k`
/// candidates is `α`-approximate in expectation at this size.
pub fn n_exp(k: u128, eps: f64, alpha: f64) -> u64 {
    if k <= 1 {
        return 0;
    }
    ceil(2.0 * (k as f64).ln() / (eps * alpha))
}

/// `N^G(α, β, d)` with the default constants.
pub fn n_uc(alpha: f64, beta: f64, d: usize) -> u64 {
    Constants::default().n_uc(alpha, beta, d)
}

/// `N^R(ε, α, β, d)` with the default constants.
pub fn n_realizable(eps: f64, alpha: f64, beta: f64, d: usize) -> u64 {
    Constants::default().n_realizable(eps, alpha, beta, d)
}

/// One named inequality `lhs >= rhs` (or `<=`, per `relation`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Condition {
            name: name.into(),
            lhs,
            relation: ">=",
            rhs,
            holds: lhs >= rhs,
        }
    }

    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Condition {
            name: name.into(),
            lhs,
            relation: "<=",
            rhs,
            holds: lhs <= rhs,
        }
    }
}

/// The evaluated sample-size conditions of a learner configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionReport {
    pub learner: &'static str,
    pub conditions: Vec<Condition>,
}

impl PreconditionReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Learners whose guarantees depend on sample-size conditions.
pub trait Preconditions {
    fn precondition_report(&self, class: &crate::classes::HypothesisClass, n: usize) -> PreconditionReport;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calculator_values() {
        // (4 ln 32 + 2 ln 8) / 0.25
        let expect = ((4.0 * 32f64.ln() + 2.0 * 8f64.ln()) / 0.25).ceil() as u64;
        assert_eq!(n_net(0.25, 0.25, 1), expect);
        assert_eq!(n_exp(5, 1.0, 0.5), (4.0 * 5f64.ln()).ceil() as u64);
        assert_eq!(n_exp(1, 0.1, 0.1), 0);
        assert_eq!(n_uc(0.5, 0.5, 1), ((8.0 + 4.0 * 4f64.ln()) / 0.25f64).ceil() as u64);
        let r = Constants::default().realizable_partitions(0.01, 0.25);
        assert_eq!(r, (600.0 * 4f64.ln()).ceil() as u64);
        assert_eq!(n_realizable(0.01, 0.25, 0.25, 1), r * n_net(0.25, 0.25 / r as f64, 1));
    }

    #[test]
    fn calculators_shrink_with_looser_targets() {
        assert!(n_net(0.1, 0.1, 2) > n_net(0.2, 0.1, 2));
        assert!(n_uc(0.1, 0.1, 2) > n_uc(0.1, 0.2, 2));
        assert!(n_exp(10, 0.5, 0.1) > n_exp(10, 1.0, 0.1));
    }
}
