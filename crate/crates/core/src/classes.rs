//! Finite hypothesis classes over an integer-indexed domain.
//!
//! Hypotheses are total binary functions on `X = {0, .., domain_size - 1}`,
//! stored as bit masks ([`Labeling`]), so the domain is capped at
//! [`MAX_DOMAIN`] points. A class keeps a canonical order over its
//! hypotheses; every tie-break in the crate resolves to the smallest index
//! in that order so that all predictors are deterministic functions of the
//! training sample.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Largest supported domain.
pub const MAX_DOMAIN: usize = 64;

/// Largest domain for which shattering and growth are computed by brute force.
pub const EXHAUSTIVE_DOMAIN: usize = 20;

/// Largest number of distinct patterns compared pairwise by [`is_eps_net`].
pub const NET_PATTERN_LIMIT: usize = 10_000;

const GROWTH_WORK_LIMIT: u128 = 200_000_000;

/// An element of the finite domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub usize);

impl Point {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    #[inline]
    pub(crate) fn bit(self) -> u64 {
        1u64 << self.0
    }
}

/// The labels a hypothesis assigns to every domain point, one bit per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labeling(u64);

impl Labeling {
    pub fn from_bits(bits: u64) -> Self {
        Labeling(bits)
    }

    pub fn from_labels(labels: &[bool]) -> Self {
        Labeling(
            labels
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .fold(0u64, |acc, (i, _)| acc | (1 << i)),
        )
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn label(self, x: Point) -> bool {
        self.0 & x.bit() != 0
    }

    #[inline]
    pub fn value(self, x: Point) -> f64 {
        if self.label(x) {
            1.0
        } else {
            0.0
        }
    }

    /// Labels restricted to the points in `mask`.
    #[inline]
    pub fn on(self, mask: u64) -> u64 {
        self.0 & mask
    }

    pub fn to_labels(self, domain_size: usize) -> Vec<bool> {
        (0..domain_size).map(|x| self.label(Point(x))).collect()
    }

    /// The labeling with every bit inverted on the domain.
    pub fn complement(self, domain_size: usize) -> Self {
        Labeling(!self.0 & domain_mask(domain_size))
    }
}

#[inline]
pub(crate) fn domain_mask(domain_size: usize) -> u64 {
    if domain_size >= 64 {
        u64::MAX
    } else {
        (1u64 << domain_size) - 1
    }
}

/// An ordered multiset of labeled examples; the training sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SampleFile", into = "SampleFile")]
pub struct LabeledSample {
    domain_size: usize,
    pairs: Vec<(Point, bool)>,
}

/// On-disk form of a sample: `{"domain_size": n, "pairs": [[x, y], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub domain_size: usize,
    pub pairs: Vec<(usize, u8)>,
}

impl TryFrom<SampleFile> for LabeledSample {
    type Error = Error;

    fn try_from(f: SampleFile) -> Result<Self> {
        let pairs = f
            .pairs
            .into_iter()
            .map(|(x, y)| match y {
                0 => Ok((Point(x), false)),
                1 => Ok((Point(x), true)),
                other => Err(Error::InvalidParameter(format!("label {other} is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledSample::new(f.domain_size, pairs)
    }
}

impl From<LabeledSample> for SampleFile {
    fn from(s: LabeledSample) -> Self {
        SampleFile {
            domain_size: s.domain_size,
            pairs: s.pairs.iter().map(|&(x, y)| (x.0, y as u8)).collect(),
        }
    }
}

impl LabeledSample {
    pub fn new(domain_size: usize, pairs: Vec<(Point, bool)>) -> Result<Self> {
        check_domain(domain_size)?;
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("a sample needs at least one example".into()));
        }
        for &(x, _) in &pairs {
            check_point(x, domain_size)?;
        }
        Ok(LabeledSample { domain_size, pairs })
    }

    /// Builds a sample from `(point, 0|1)` tuples.
    pub fn from_bits(domain_size: usize, pairs: &[(usize, u8)]) -> Result<Self> {
        SampleFile {
            domain_size,
            pairs: pairs.to_vec(),
        }
        .try_into()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    #[inline]
    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    #[inline]
    pub fn pairs(&self) -> &[(Point, bool)] {
        &self.pairs
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.pairs.iter().map(|&(x, _)| x)
    }

    /// Bit mask of the distinct points occurring in the sample.
    pub fn point_mask(&self) -> u64 {
        self.pairs.iter().fold(0, |m, &(x, _)| m | x.bit())
    }

    /// Sub-sample `S_I` for the index set `I` (order preserved).
    pub fn select(&self, indices: &[usize]) -> LabeledSample {
        LabeledSample {
            domain_size: self.domain_size,
            pairs: indices.iter().map(|&i| self.pairs[i]).collect(),
        }
    }

    /// Copy with example `index` replaced.
    pub fn with_replaced(&self, index: usize, example: (Point, bool)) -> LabeledSample {
        let mut pairs = self.pairs.clone();
        pairs[index] = example;
        LabeledSample {
            domain_size: self.domain_size,
            pairs,
        }
    }

    /// Same examples relabeled by `h`: `((x_i, h(x_i)))`.
    pub fn relabeled(&self, h: Labeling) -> LabeledSample {
        LabeledSample {
            domain_size: self.domain_size,
            pairs: self.pairs.iter().map(|&(x, _)| (x, h.label(x))).collect(),
        }
    }

    /// Neighboring samples have equal length and differ in exactly one index.
    pub fn is_neighbor(&self, other: &LabeledSample) -> bool {
        self.len() == other.len()
            && self
                .pairs
                .iter()
                .zip(&other.pairs)
                .filter(|(a, b)| a != b)
                .count()
                == 1
    }

    /// Number of examples `h` gets wrong.
    pub fn mistakes(&self, h: Labeling) -> usize {
        self.pairs.iter().filter(|&&(x, y)| h.label(x) != y).count()
    }

    /// Empirical zero-one loss `L_S(h)`.
    pub fn loss(&self, h: Labeling) -> f64 {
        self.mistakes(h) as f64 / self.len() as f64
    }

    /// Empirical loss of a randomized predictor, `(1/n) Σ |p(x_i) - y_i|`.
    pub fn soft_loss(&self, values: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(x, y)| (values[x.0] - if y { 1.0 } else { 0.0 }).abs())
            .sum::<f64>()
            / self.len() as f64
    }

    /// Uniform distribution over the sample's points, as domain weights.
    pub fn empirical_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.domain_size];
        for &(x, _) in &self.pairs {
            w[x.0] += 1.0;
        }
        let n = self.len() as f64;
        w.iter_mut().for_each(|v| *v /= n);
        w
    }
}

fn check_domain(domain_size: usize) -> Result<()> {
    if domain_size == 0 || domain_size > MAX_DOMAIN {
        return Err(Error::InvalidParameter(format!(
            "domain size {domain_size} outside 1..={MAX_DOMAIN}"
        )));
    }
    Ok(())
}

pub(crate) fn check_point(x: Point, domain_size: usize) -> Result<()> {
    if x.0 >= domain_size {
        return Err(Error::PointOutOfDomain {
            point: x.0,
            domain_size,
        });
    }
    Ok(())
}

/// Which family a class was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    /// `h_t(x) = 1` iff `x < t`, for `t` in `0..=domain_size`.
    Thresholds,
    /// `h_i(x) = 1` iff `x == i`, for `i` in the domain.
    PointFunctions,
    /// An explicit list of label vectors, in the order given.
    Explicit,
}

/// An enumerable family of binary classifiers over a finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClassSpec", into = "ClassSpec")]
pub struct HypothesisClass {
    kind: ClassKind,
    domain_size: usize,
    hypotheses: Vec<Labeling>,
    vc_dim: usize,
}

/// JSON form: `{"kind": "thresholds"|"point"|"explicit", "domain_size": n, "vectors": [[bits]]}`.
///
/// `vc_dim` may be supplied for explicit classes too large to verify.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub kind: ClassSpecKind,
    pub domain_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vc_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassSpecKind {
    Thresholds,
    Point,
    Explicit,
}

impl TryFrom<ClassSpec> for HypothesisClass {
    type Error = Error;

    fn try_from(spec: ClassSpec) -> Result<Self> {
        match spec.kind {
            ClassSpecKind::Thresholds => HypothesisClass::thresholds(spec.domain_size),
            ClassSpecKind::Point => HypothesisClass::point_functions(spec.domain_size),
            ClassSpecKind::Explicit => {
                let vectors = spec.vectors.ok_or_else(|| {
                    Error::InvalidParameter("explicit class requires \"vectors\"".into())
                })?;
                let labels = vectors
                    .iter()
                    .map(|v| {
                        if v.len() != spec.domain_size {
                            return Err(Error::InvalidParameter(format!(
                                "label vector of length {} for domain size {}",
                                v.len(),
                                spec.domain_size
                            )));
                        }
                        v.iter()
                            .map(|&b| match b {
                                0 => Ok(false),
                                1 => Ok(true),
                                other => Err(Error::InvalidParameter(format!(
                                    "label {other} is not a bit"
                                ))),
                            })
                            .collect::<Result<Vec<bool>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                match spec.vc_dim {
                    Some(d) if spec.domain_size > EXHAUSTIVE_DOMAIN => {
                        HypothesisClass::explicit_with_vc_dim(spec.domain_size, &labels, d)
                    }
                    Some(d) => {
                        let class = HypothesisClass::explicit(spec.domain_size, &labels)?;
                        if class.vc_dim != d {
                            return Err(Error::InvalidParameter(format!(
                                "declared vc_dim {d} but the class has VC dimension {}",
                                class.vc_dim
                            )));
                        }
                        Ok(class)
                    }
                    None => HypothesisClass::explicit(spec.domain_size, &labels),
                }
            }
        }
    }
}

impl From<HypothesisClass> for ClassSpec {
    fn from(h: HypothesisClass) -> Self {
        match h.kind {
            ClassKind::Thresholds => ClassSpec {
                kind: ClassSpecKind::Thresholds,
                domain_size: h.domain_size,
                vectors: None,
                vc_dim: None,
            },
            ClassKind::PointFunctions => ClassSpec {
                kind: ClassSpecKind::Point,
                domain_size: h.domain_size,
                vectors: None,
                vc_dim: None,
            },
            ClassKind::Explicit => ClassSpec {
                kind: ClassSpecKind::Explicit,
                domain_size: h.domain_size,
                vectors: Some(
                    h.hypotheses
                        .iter()
                        .map(|l| {
                            l.to_labels(h.domain_size)
                                .into_iter()
                                .map(u8::from)
                                .collect()
                        })
                        .collect(),
                ),
                vc_dim: (h.domain_size > EXHAUSTIVE_DOMAIN).then_some(h.vc_dim),
            },
        }
    }
}

impl HypothesisClass {
    pub fn thresholds(domain_size: usize) -> Result<Self> {
        check_domain(domain_size)?;
        let hypotheses = (0..=domain_size)
            .map(|t| Labeling(domain_mask(t)))
            .collect();
        Ok(HypothesisClass {
            kind: ClassKind::Thresholds,
            domain_size,
            hypotheses,
            vc_dim: 1,
        })
    }

    pub fn point_functions(domain_size: usize) -> Result<Self> {
        check_domain(domain_size)?;
        Ok(HypothesisClass {
            kind: ClassKind::PointFunctions,
            domain_size,
            hypotheses: (0..domain_size).map(|i| Labeling(1 << i)).collect(),
            vc_dim: usize::from(domain_size > 1),
        })
    }

    /// An explicit class; the VC dimension is computed by brute force.
    pub fn explicit(domain_size: usize, vectors: &[Vec<bool>]) -> Result<Self> {
        if domain_size > EXHAUSTIVE_DOMAIN {
            return Err(Error::too_large(
                "explicit class VC check (domain size)",
                domain_size as u128,
                EXHAUSTIVE_DOMAIN as u128,
            ));
        }
        let mut class = Self::explicit_with_vc_dim(domain_size, vectors, 0)?;
        class.vc_dim = compute_vc_dim(&class)?;
        Ok(class)
    }

    /// An explicit class with a declared (unverified) VC dimension.
    pub fn explicit_with_vc_dim(
        domain_size: usize,
        vectors: &[Vec<bool>],
        vc_dim: usize,
    ) -> Result<Self> {
        check_domain(domain_size)?;
        if vectors.is_empty() {
            return Err(Error::EmptyClass);
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != domain_size) {
            return Err(Error::InvalidParameter(format!(
                "label vector of length {} for domain size {domain_size}",
                v.len()
            )));
        }
        Ok(HypothesisClass {
            kind: ClassKind::Explicit,
            domain_size,
            hypotheses: vectors.iter().map(|v| Labeling::from_labels(v)).collect(),
            vc_dim,
        })
    }

    /// Every binary function on the domain, in increasing bit order.
    pub fn all_functions(domain_size: usize) -> Result<Self> {
        if domain_size > 16 {
            return Err(Error::too_large("all-functions class", domain_size as u128, 16));
        }
        check_domain(domain_size)?;
        Ok(HypothesisClass {
            kind: ClassKind::Explicit,
            domain_size,
            hypotheses: (0..1u64 << domain_size).map(Labeling).collect(),
            vc_dim: domain_size,
        })
    }

    /// The single constant hypothesis `x -> label`.
    pub fn constant(domain_size: usize, label: bool) -> Result<Self> {
        Self::explicit_with_vc_dim(domain_size, &[vec![label; domain_size]], 0)
    }

    #[inline]
    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    #[inline]
    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    #[inline]
    pub fn vc_dim(&self) -> usize {
        self.vc_dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    #[inline]
    pub fn hypothesis(&self, index: usize) -> Labeling {
        self.hypotheses[index]
    }

    #[inline]
    pub fn hypotheses(&self) -> &[Labeling] {
        &self.hypotheses
    }

    pub(crate) fn check_sample(&self, s: &LabeledSample) -> Result<()> {
        if s.domain_size() != self.domain_size {
            return Err(Error::InvalidParameter(format!(
                "sample over a domain of size {} used with a class over {}",
                s.domain_size(),
                self.domain_size
            )));
        }
        Ok(())
    }

    /// Number of distinct functions after removing duplicate hypotheses.
    pub fn distinct_len(&self) -> usize {
        self.hypotheses.iter().collect::<HashSet<_>>().len()
    }
}

/// One labeling pattern of the restriction set `T`, with the smallest
/// hypothesis index realizing it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dichotomy {
    /// Labels indexed by the positions of `T`.
    pub labels: Vec<bool>,
    /// Index into the class of the canonical representative.
    pub representative: usize,
}

/// Canonical representatives of the agreement classes of `H` on the points
/// in `mask`, in order of first occurrence (which is ascending index order).
pub(crate) fn representatives_on(class: &HypothesisClass, mask: u64) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(class.len().min(1024));
    class
        .hypotheses
        .iter()
        .enumerate()
        .filter(|(_, h)| seen.insert(h.on(mask)))
        .map(|(i, _)| i)
        .collect()
}

/// The dichotomy class `H_T`: one [`Dichotomy`] per agreement class of `H`
/// on `T`, sorted by label vector.
pub fn restrict(class: &HypothesisClass, t: &[Point]) -> Result<Vec<Dichotomy>> {
    if t.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    for &x in t {
        check_point(x, class.domain_size)?;
    }
    let mask = t.iter().fold(0, |m, x| m | x.bit());
    let mut out: Vec<Dichotomy> = representatives_on(class, mask)
        .into_iter()
        .map(|rep| {
            let h = class.hypotheses[rep];
            Dichotomy {
                labels: t.iter().map(|&x| h.label(x)).collect(),
                representative: rep,
            }
        })
        .collect();
    out.sort_by(|a, b| a.labels.cmp(&b.labels));
    Ok(out)
}

/// `Σ_{i=0}^{d} C(m, i)`, exactly.
pub fn sauer_bound(d: usize, m: usize) -> u128 {
    (0..=d.min(m)).map(|i| binomial(m as u64, i as u64)).sum()
}

/// The closed-form companion `(e m / d)^d`; `2^m` when `m <= d + 1`.
pub fn sauer_bound_approx(d: usize, m: usize) -> f64 {
    if m <= d + 1 || d == 0 {
        return 2f64.powi(m as i32);
    }
    (std::f64::consts::E * m as f64 / d as f64).powi(d as i32)
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn count_patterns(class: &HypothesisClass, mask: u64) -> usize {
    class
        .hypotheses
        .iter()
        .map(|h| h.on(mask))
        .collect::<HashSet<_>>()
        .len()
}

fn subset_masks(domain_size: usize, m: usize) -> impl Iterator<Item = u64> {
    (0..domain_size)
        .combinations(m)
        .map(|c| c.into_iter().fold(0u64, |acc, i| acc | (1 << i)))
}

/// Growth function `τ_m(H)`: the largest number of dichotomies on any
/// `m` distinct domain points, by exhaustive search.
pub fn growth_count(class: &HypothesisClass, m: usize) -> Result<u128> {
    let x = class.domain_size;
    if m == 0 || m > x {
        return Err(Error::InvalidParameter(format!(
            "growth_count needs 1 <= m <= {x}, got {m}"
        )));
    }
    let work = binomial(x as u64, m as u64).saturating_mul(class.len() as u128);
    if x > EXHAUSTIVE_DOMAIN || work > GROWTH_WORK_LIMIT {
        return Err(Error::TooLarge {
            what: "growth_count enumeration",
            size: work,
            limit: GROWTH_WORK_LIMIT,
            hint: Some(format!(
                "Sauer-Shelah bound: {}",
                sauer_bound(class.vc_dim, m)
            )),
        });
    }
    Ok(subset_masks(x, m)
        .map(|mask| count_patterns(class, mask))
        .max()
        .unwrap_or(0) as u128)
}

/// Growth value used by sample-size conditions: exact when enumerable,
/// otherwise the smaller of the Sauer-Shelah bound and `|H|`.
pub fn growth_or_bound(class: &HypothesisClass, m: usize) -> u128 {
    let m_eff = m.min(class.domain_size).max(1);
    growth_count(class, m_eff)
        .unwrap_or_else(|_| sauer_bound(class.vc_dim, m).min(class.distinct_len() as u128))
}

/// Largest `m` such that some `m`-subset of the domain is shattered.
pub fn compute_vc_dim(class: &HypothesisClass) -> Result<usize> {
    let x = class.domain_size;
    if x > EXHAUSTIVE_DOMAIN {
        return Err(Error::too_large(
            "VC dimension enumeration (domain size)",
            x as u128,
            EXHAUSTIVE_DOMAIN as u128,
        ));
    }
    let distinct = class.distinct_len();
    let mut d = 0;
    for m in 1..=x {
        if (1usize << m) > distinct {
            break;
        }
        let shattered = subset_masks(x, m).any(|mask| count_patterns(class, mask) == 1 << m);
        if !shattered {
            break;
        }
        d = m;
    }
    Ok(d)
}

pub(crate) fn check_distribution(weights: &[f64], domain_size: usize) -> Result<()> {
    if weights.len() != domain_size {
        return Err(Error::BadDistribution(format!(
            "{} weights for a domain of size {domain_size}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::BadDistribution("negative or non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::BadDistribution(format!("weights sum to {total}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn mask_mass(mask: u64, weights: &[f64]) -> f64 {
    let mut m = mask;
    let mut total = 0.0;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        total += weights[i];
        m &= m - 1;
    }
    total
}

/// Largest weighted disagreement between two hypotheses that agree on `a`.
pub fn net_disagreement(a: &[Point], class: &HypothesisClass, weights: &[f64]) -> Result<f64> {
    check_distribution(weights, class.domain_size)?;
    for &x in a {
        check_point(x, class.domain_size)?;
    }
    let a_mask = a.iter().fold(0, |m, x| m | x.bit());
    let support = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .fold(0u64, |m, (i, _)| m | (1 << i));

    // agreement classes on A, each holding its distinct patterns on the support
    let mut groups: HashMap<u64, HashSet<u64>> = HashMap::new();
    for h in &class.hypotheses {
        groups.entry(h.on(a_mask)).or_default().insert(h.on(support));
    }
    let total: usize = groups.values().map(HashSet::len).sum();
    if total > NET_PATTERN_LIMIT {
        return Err(Error::too_large(
            "net check patterns",
            total as u128,
            NET_PATTERN_LIMIT as u128,
        ));
    }
    let mut worst: f64 = 0.0;
    for patterns in groups.values() {
        let p: Vec<u64> = patterns.iter().copied().collect();
        for (i, &u) in p.iter().enumerate() {
            for &v in &p[i + 1..] {
                worst = worst.max(mask_mass(u ^ v, weights));
            }
        }
    }
    Ok(worst)
}

/// Whether `a` is an `alpha`-net for `H` with respect to the point weights.
pub fn is_eps_net(a: &[Point], class: &HypothesisClass, weights: &[f64], alpha: f64) -> Result<bool> {
    Ok(net_disagreement(a, class, weights)? <= alpha + 1e-12)
}

/// Index of the empirical risk minimizer; ties go to the smallest index.
pub fn erm_index(class: &HypothesisClass, s: &LabeledSample) -> usize {
    let mut best = (usize::MAX, 0);
    for (i, &h) in class.hypotheses.iter().enumerate() {
        let m = s.mistakes(h);
        if m < best.0 {
            best = (m, i);
        }
    }
    best.1
}

/// The empirical risk minimizer as a full-domain dichotomy.
pub fn erm(class: &HypothesisClass, s: &LabeledSample) -> Result<Dichotomy> {
    class.check_sample(s)?;
    let rep = erm_index(class, s);
    Ok(Dichotomy {
        labels: class.hypotheses[rep].to_labels(class.domain_size),
        representative: rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[usize]) -> Vec<Point> {
        v.iter().map(|&i| Point(i)).collect()
    }

    /// Oracle: every threshold function as an explicit label vector.
    fn brute_thresholds(x: usize) -> Vec<Vec<bool>> {
        (0..=x).map(|t| (0..x).map(|i| i < t).collect()).collect()
    }

    #[test]
    fn threshold_convention() {
        let h = HypothesisClass::thresholds(4).unwrap();
        assert_eq!(h.len(), 5);
        for (t, expect) in brute_thresholds(4).iter().enumerate() {
            assert_eq!(&h.hypothesis(t).to_labels(4), expect);
        }
    }

    #[test]
    fn restrict_thresholds_full_domain() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let d = restrict(&h, &pts(&[0, 1, 2, 3])).unwrap();
        assert_eq!(d.len(), 5);
        // oracle: distinct brute-force patterns
        let distinct: HashSet<Vec<bool>> = brute_thresholds(4).into_iter().collect();
        assert_eq!(distinct.len(), 5);
        for w in d.windows(2) {
            assert!(w[0].labels < w[1].labels);
        }
    }

    #[test]
    fn restrict_single_agreeing_point() {
        let h = HypothesisClass::explicit(3, &[vec![true, false, true], vec![true, true, false]])
            .unwrap();
        let d = restrict(&h, &pts(&[0])).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].representative, 0);
    }

    #[test]
    fn restrict_explicit_is_identity_on_full_domain() {
        let v = vec![
            vec![false, true, true],
            vec![true, false, true],
            vec![false, false, false],
            vec![true, false, true],
        ];
        let h = HypothesisClass::explicit(3, &v).unwrap();
        let d = restrict(&h, &pts(&[0, 1, 2])).unwrap();
        assert_eq!(d.len(), 3);
        // duplicate at index 3 is represented by index 1
        assert!(d.iter().any(|x| x.representative == 1));
        assert!(d.iter().all(|x| x.representative != 3));
    }

    #[test]
    fn restrict_empty_is_error() {
        let h = HypothesisClass::thresholds(3).unwrap();
        assert_eq!(restrict(&h, &[]), Err(Error::EmptyRestriction));
        assert!(matches!(
            restrict(&h, &pts(&[3])),
            Err(Error::PointOutOfDomain { .. })
        ));
    }

    #[test]
    fn growth_of_thresholds() {
        let h = HypothesisClass::thresholds(6).unwrap();
        // brute force oracle over 4-subsets of the label vectors
        let vecs = brute_thresholds(6);
        let oracle = (0..6)
            .combinations(4)
            .map(|c| {
                vecs.iter()
                    .map(|v| c.iter().map(|&i| v[i]).collect::<Vec<_>>())
                    .collect::<HashSet<_>>()
                    .len()
            })
            .max()
            .unwrap();
        assert_eq!(oracle, 5);
        assert_eq!(growth_count(&h, 4).unwrap(), 5);
        assert!(growth_count(&h, 4).unwrap() <= sauer_bound(1, 4));
    }

    #[test]
    fn growth_full_domain_explicit() {
        let v = vec![vec![true, false], vec![false, false], vec![true, true]];
        let h = HypothesisClass::explicit(2, &v).unwrap();
        assert_eq!(growth_count(&h, 2).unwrap(), 3);
    }

    #[test]
    fn growth_too_large_carries_bound() {
        let h = HypothesisClass::thresholds(30).unwrap();
        match growth_count(&h, 10) {
            Err(Error::TooLarge { hint: Some(h), .. }) => assert!(h.ends_with(": 11")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sauer_values() {
        assert_eq!(sauer_bound(1, 4), 5);
        assert_eq!(sauer_bound(2, 5), 16);
        assert_eq!(sauer_bound(5, 5), 32);
        assert_eq!(sauer_bound_approx(3, 3), 8.0);
        assert!((sauer_bound_approx(1, 4) - 4.0 * std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn vc_dims() {
        for x in 2..=12 {
            let h = HypothesisClass::thresholds(x).unwrap();
            assert_eq!(compute_vc_dim(&h).unwrap(), 1);
        }
        assert_eq!(compute_vc_dim(&HypothesisClass::all_functions(3).unwrap()).unwrap(), 3);
        let p = HypothesisClass::point_functions(5).unwrap();
        assert_eq!(compute_vc_dim(&p).unwrap(), 1);
        assert_eq!(p.vc_dim(), 1);
        assert_eq!(compute_vc_dim(&HypothesisClass::constant(4, true).unwrap()).unwrap(), 0);
    }

    #[test]
    fn net_examples() {
        let h = HypothesisClass::thresholds(8).unwrap();
        let w = vec![1.0 / 8.0; 8];
        let full = pts(&[0, 1, 2, 3, 4, 5, 6, 7]);
        assert!(is_eps_net(&full, &h, &w, 0.0).unwrap());
        assert!(is_eps_net(&pts(&[3]), &h, &w, 1.0).unwrap());

        // brute force over threshold pairs that agree on A = {0, 2, 4, 6}
        let a = pts(&[0, 2, 4, 6]);
        let vecs = brute_thresholds(8);
        let mut oracle: f64 = 0.0;
        for u in &vecs {
            for v in &vecs {
                if a.iter().all(|p| u[p.0] == v[p.0]) {
                    let mass = (0..8).filter(|&i| u[i] != v[i]).count() as f64 / 8.0;
                    oracle = oracle.max(mass);
                }
            }
        }
        assert_eq!(oracle, 1.0 / 8.0);
        assert_eq!(net_disagreement(&a, &h, &w).unwrap(), oracle);
        assert!(is_eps_net(&a, &h, &w, 1.0 / 8.0).unwrap());
        assert!(!is_eps_net(&a, &h, &w, 1.0 / 16.0).unwrap());
        // a sparser set leaves a gap of two points
        let b = pts(&[0, 3, 6]);
        assert!(!is_eps_net(&b, &h, &w, 1.0 / 8.0).unwrap());
        assert!(is_eps_net(&b, &h, &w, 1.0 / 4.0).unwrap());
    }

    #[test]
    fn net_rejects_bad_weights() {
        let h = HypothesisClass::thresholds(3).unwrap();
        assert!(matches!(
            is_eps_net(&pts(&[0]), &h, &[0.5, 0.5, 0.5], 0.1),
            Err(Error::BadDistribution(_))
        ));
    }

    #[test]
    fn erm_examples() {
        let h = HypothesisClass::thresholds(4).unwrap();
        let s = LabeledSample::from_bits(4, &[(0, 1), (1, 1), (2, 0), (3, 0)]).unwrap();
        // oracle over the five thresholds
        let losses: Vec<usize> = brute_thresholds(4)
            .iter()
            .map(|v| s.pairs().iter().filter(|(x, y)| v[x.0] != *y).count())
            .collect();
        assert_eq!(losses, vec![2, 1, 0, 1, 2]);
        let e = erm(&h, &s).unwrap();
        assert_eq!(e.representative, 2);
        assert_eq!(s.loss(h.hypothesis(2)), 0.0);

        // every hypothesis has loss 1/2: tie goes to index 0
        let tie = LabeledSample::from_bits(2, &[(0, 1), (0, 0)]).unwrap();
        let h2 = HypothesisClass::thresholds(2).unwrap();
        assert_eq!(erm(&h2, &tie).unwrap().representative, 0);
    }

    #[test]
    fn class_json_round_trip() {
        let js = r#"{"kind":"explicit","domain_size":3,"vectors":[[1,0,1],[0,0,1]]}"#;
        let h: HypothesisClass = serde_json::from_str(js).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.vc_dim(), 1);
        let back = serde_json::to_string(&h).unwrap();
        assert_eq!(back, js);
        let t: HypothesisClass =
            serde_json::from_str(r#"{"kind":"thresholds","domain_size":5}"#).unwrap();
        assert_eq!(t, HypothesisClass::thresholds(5).unwrap());
        assert!(serde_json::from_str::<HypothesisClass>(
            r#"{"kind":"point","domain_size":5,"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn sample_json_and_neighbors() {
        let s: LabeledSample =
            serde_json::from_str(r#"{"domain_size":3,"pairs":[[0,1],[2,0]]}"#).unwrap();
        assert_eq!(s.len(), 2);
        let t = s.with_replaced(1, (Point(1), true));
        assert!(s.is_neighbor(&t));
        assert!(!s.is_neighbor(&s));
        assert!(serde_json::from_str::<LabeledSample>(r#"{"domain_size":3,"pairs":[[3,1]]}"#)
            .is_err());
    }

    fn arb_class() -> impl Strategy<Value = HypothesisClass> {
        (2usize..=8).prop_flat_map(|x| {
            prop::collection::vec(prop::collection::vec(any::<bool>(), x), 1..12)
                .prop_map(move |v| HypothesisClass::explicit(x, &v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn restriction_is_bounded_by_sauer(h in arb_class(), seed in any::<u64>()) {
            let x = h.domain_size();
            let m = (seed as usize % x) + 1;
            let t: Vec<Point> = (0..m).map(|i| Point((i * 7 + seed as usize) % x)).collect();
            let d = restrict(&h, &t).unwrap();
            let distinct = t.iter().collect::<HashSet<_>>().len();
            prop_assert!(d.len() as u128 <= sauer_bound(h.vc_dim(), distinct));
        }

        #[test]
        fn restriction_is_idempotent(h in arb_class(), m in 1usize..6) {
            let x = h.domain_size();
            let t: Vec<Point> = (0..m.min(x)).map(Point).collect();
            let d = restrict(&h, &t).unwrap();
            let sub = HypothesisClass::explicit_with_vc_dim(
                x,
                &d.iter().map(|d| h.hypothesis(d.representative).to_labels(x)).collect::<Vec<_>>(),
                h.vc_dim(),
            ).unwrap();
            let d2 = restrict(&sub, &t).unwrap();
            prop_assert_eq!(
                d.iter().map(|v| &v.labels).collect::<Vec<_>>(),
                d2.iter().map(|v| &v.labels).collect::<Vec<_>>()
            );
        }

        #[test]
        fn net_is_monotone(h in arb_class(), a_bits in any::<u8>(), extra in 0usize..8, alpha in 0.0f64..1.0) {
            let x = h.domain_size();
            let w = vec![1.0 / x as f64; x];
            let a: Vec<Point> = (0..x).filter(|i| a_bits >> i & 1 == 1).map(Point).collect();
            if is_eps_net(&a, &h, &w, alpha).unwrap() {
                prop_assert!(is_eps_net(&a, &h, &w, (alpha + 0.1).min(1.0)).unwrap());
                let mut b = a.clone();
                b.push(Point(extra % x));
                prop_assert!(is_eps_net(&b, &h, &w, alpha).unwrap());
            }
        }

        #[test]
        fn erm_is_a_minimizer(h in arb_class(), raw in prop::collection::vec((0usize..8, any::<bool>()), 1..10)) {
            let x = h.domain_size();
            let s = LabeledSample::new(x, raw.into_iter().map(|(p, y)| (Point(p % x), y)).collect()).unwrap();
            let e = erm(&h, &s).unwrap();
            let best = h.hypotheses().iter().map(|&l| s.mistakes(l)).min().unwrap();
            prop_assert_eq!(s.mistakes(h.hypothesis(e.representative)), best);
            prop_assert_eq!(erm(&h, &s).unwrap(), e);
        }
    }
}
