//! Reference implementations written for clarity, not speed.
//!
//! Nothing here calls into the learners: hypotheses are plain label
//! vectors, weights are exponentiated directly and subsets are enumerated
//! by bit masks. Only usable at desk scale.

/// A hypothesis as a label vector over the domain.
pub type Vector = Vec<bool>;

/// A sample as `(point, label)` pairs.
pub type Pairs = [(usize, bool)];

fn loss(h: &Vector, s: &Pairs) -> f64 {
    let wrong = s.iter().filter(|(x, y)| h[*x] != *y).count();
    wrong as f64 / s.len() as f64
}

/// Indices of the first hypothesis realizing each distinct pattern on `t`.
pub fn dichotomy_representatives(class: &[Vector], t: &[usize]) -> Vec<usize> {
    let mut seen: Vec<Vec<bool>> = Vec::new();
    let mut reps = Vec::new();
    for (i, h) in class.iter().enumerate() {
        let pattern: Vec<bool> = t.iter().map(|&x| h[x]).collect();
        if !seen.contains(&pattern) {
            seen.push(pattern);
            reps.push(i);
        }
    }
    reps
}

/// Candidate probabilities `exp(-n L_S(h) ε / 2) / Z`, no log space.
pub fn exp_mech_probabilities(class: &[Vector], candidates: &[usize], s: &Pairs, eps: f64) -> Vec<f64> {
    let n = s.len() as f64;
    let raw: Vec<f64> = candidates
        .iter()
        .map(|&c| (-n * loss(&class[c], s) * eps / 2.0).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|w| w / z).collect()
}

/// `h_{S,T}` of the stable learner: the exponential mechanism over `H_T`
/// at privacy `gamma`, as a value function.
pub fn h_st(class: &[Vector], s: &Pairs, t: &[usize], gamma: f64) -> Vec<f64> {
    let reps = dichotomy_representatives(class, t);
    let probs = exp_mech_probabilities(class, &reps, s, gamma);
    let width = class[0].len();
    let mut out = vec![0.0; width];
    for (r, p) in reps.iter().zip(probs) {
        for x in 0..width {
            if class[*r][x] {
                out[x] += p;
            }
        }
    }
    out
}

/// All `k`-subsets of `0..n` as index lists, by scanning bit masks.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    assert!(n <= 24, "naive subset enumeration is limited to n <= 24");
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// The stable learner: uniform average of `h_{S, S_I}` over `|I| = n'`.
pub fn stable_predict(class: &[Vector], s: &Pairs, n_prime: usize, gamma: f64) -> Vec<f64> {
    let all = subsets(s.len(), n_prime);
    let width = class[0].len();
    let mut out = vec![0.0; width];
    for idx in &all {
        let t: Vec<usize> = idx.iter().map(|&i| s[i].0).collect();
        let v = h_st(class, s, &t, gamma);
        for x in 0..width {
            out[x] += v[x] / all.len() as f64;
        }
    }
    out
}

/// `exp(κ v̄) / (exp(κ v̄) + exp(κ (1 - v̄)))`.
pub fn soft_majority(votes: &[bool], kappa: f64) -> f64 {
    let mean = votes.iter().filter(|&&v| v).count() as f64 / votes.len() as f64;
    let a = (kappa * mean).exp();
    let b = (kappa * (1.0 - mean)).exp();
    a / (a + b)
}

/// First hypothesis with the fewest mistakes on `block`.
fn first_minimizer(class: &[Vector], block: &Pairs) -> usize {
    let mut best = 0;
    let mut best_wrong = usize::MAX;
    for (i, h) in class.iter().enumerate() {
        let wrong = block.iter().filter(|(x, y)| h[*x] != *y).count();
        if wrong < best_wrong {
            best = i;
            best_wrong = wrong;
        }
    }
    best
}

/// The realizable learner: `r` contiguous blocks of `block` examples, a
/// minimizer per block, soft majority with scale `kappa`.
pub fn realizable(class: &[Vector], s: &Pairs, r: usize, block: usize, kappa: f64) -> Vec<f64> {
    let voters: Vec<usize> = (0..r)
        .map(|j| first_minimizer(class, &s[j * block..(j + 1) * block]))
        .collect();
    (0..class[0].len())
        .map(|x| {
            let votes: Vec<bool> = voters.iter().map(|&v| class[v][x]).collect();
            soft_majority(&votes, kappa)
        })
        .collect()
}

/// The main private learner: average over `|I| = n'` of
/// `Σ_{h ∈ H_{S_I}} λ_h φ_S(h) / Z` with `λ_h = exp(-L_S(h)/η)` and
/// `φ_S(h)` the realizable learner on `S` relabeled by `h`.
pub fn main_predict(
    class: &[Vector],
    s: &Pairs,
    n_prime: usize,
    eta: f64,
    r: usize,
    block: usize,
) -> Vec<f64> {
    let n = s.len();
    let kappa = r as f64 / (2.0 * eta * n as f64);
    let width = class[0].len();
    let all = subsets(n, n_prime);
    let mut out = vec![0.0; width];
    for idx in &all {
        let t: Vec<usize> = idx.iter().map(|&i| s[i].0).collect();
        let reps = dichotomy_representatives(class, &t);
        let lambdas: Vec<f64> = reps.iter().map(|&h| (-loss(&class[h], s) / eta).exp()).collect();
        let z: f64 = lambdas.iter().sum();
        for (&h, l) in reps.iter().zip(&lambdas) {
            let relabeled: Vec<(usize, bool)> = s.iter().map(|&(x, _)| (x, class[h][x])).collect();
            let phi = realizable(class, &relabeled, r, block, kappa);
            for x in 0..width {
                out[x] += phi[x] * l / z / all.len() as f64;
            }
        }
    }
    out
}

/// `p ↦ (1 - α) p + α (1 - p)`.
pub fn flip(values: &[f64], alpha: f64) -> Vec<f64> {
    values.iter().map(|p| (1.0 - alpha) * p + alpha * (1.0 - p)).collect()
}

/// Average over `|I| = n'` of a base learner run on `S_I`.
pub fn subsampled<F>(s: &Pairs, n_prime: usize, base: F) -> Vec<f64>
where
    F: Fn(&[(usize, bool)]) -> Vec<f64>,
{
    let all = subsets(s.len(), n_prime);
    let mut out: Vec<f64> = Vec::new();
    for idx in &all {
        let sub: Vec<(usize, bool)> = idx.iter().map(|&i| s[i]).collect();
        let v = base(&sub);
        if out.is_empty() {
            out = vec![0.0; v.len()];
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += x / all.len() as f64;
        }
    }
    out
}

/// Value function of the exponential mechanism over the whole class.
pub fn exp_mech_values(class: &[Vector], s: &Pairs, eps: f64) -> Vec<f64> {
    let all: Vec<usize> = (0..class.len()).collect();
    let probs = exp_mech_probabilities(class, &all, s, eps);
    let width = class[0].len();
    (0..width)
        .map(|x| all.iter().zip(&probs).filter(|(&h, _)| class[h][x]).map(|(_, p)| p).sum())
        .collect()
}
