//! Exact checks of the REINFORCE/SFT correspondence on a tiny autoregressive
//! softmax policy. Every trace space here has at most 5^3 elements, so
//! expectations are computed by enumeration instead of sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod suite;

pub use suite::{run_suite, CaseResult, CheckKind, CheckSummary, SuiteConfig, SuiteReport};

pub const MAX_VOCAB: usize = 5;
pub const MAX_HORIZON: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum RlError {
    #[error("bad policy shape: {0}")]
    Shape(String),
    #[error("prompt {prompt} has no valid trace")]
    NoValidTraces { prompt: usize },
    #[error("lambda {0} outside [0, 1]")]
    Lambda(f64),
    #[error("policies disagree in shape")]
    Mismatch,
}

/// Softmax policy over token sequences of fixed length. One logit row per
/// (prompt, prefix); `theta` is the row-major concatenation of all rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub vocab: usize,
    pub horizon: usize,
    pub prompts: usize,
    pub theta: Vec<f64>,
}

impl ToyPolicy {
    pub fn new(vocab: usize, horizon: usize, prompts: usize, theta: Vec<f64>) -> Result<Self, RlError> {
        if !(2..=MAX_VOCAB).contains(&vocab) {
            return Err(RlError::Shape(format!("vocab {vocab} not in 2..={MAX_VOCAB}")));
        }
        if !(1..=MAX_HORIZON).contains(&horizon) {
            return Err(RlError::Shape(format!("horizon {horizon} not in 1..={MAX_HORIZON}")));
        }
        if prompts == 0 {
            return Err(RlError::Shape("no prompts".into()));
        }
        let want = param_count(vocab, horizon, prompts);
        if theta.len() != want {
            return Err(RlError::Shape(format!("theta has {} entries, expected {want}", theta.len())));
        }
        Ok(ToyPolicy { vocab, horizon, prompts, theta })
    }

    pub fn uniform(vocab: usize, horizon: usize, prompts: usize) -> Result<Self, RlError> {
        Self::new(vocab, horizon, prompts, vec![0.0; param_count(vocab, horizon, prompts)])
    }

    /// Logits drawn uniformly from `[-scale, scale]`.
    pub fn random(
        vocab: usize,
        horizon: usize,
        prompts: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, RlError> {
        let theta = (0..param_count(vocab, horizon, prompts)).map(|_| rng.random_range(-scale..=scale)).collect();
        Self::new(vocab, horizon, prompts, theta)
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), self.theta.len());
        ToyPolicy { theta, ..self.clone() }
    }

    pub fn same_shape(&self, other: &ToyPolicy) -> bool {
        (self.vocab, self.horizon, self.prompts) == (other.vocab, other.horizon, other.prompts)
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    fn rows_per_prompt(&self) -> usize {
        (0..self.horizon).map(|t| self.vocab.pow(t as u32)).sum()
    }

    fn row(&self, x: usize, prefix: &[usize]) -> usize {
        let base: usize = (0..prefix.len()).map(|t| self.vocab.pow(t as u32)).sum();
        x * self.rows_per_prompt() + base + encode(self.vocab, prefix)
    }

    fn logits(&self, row: usize) -> &[f64] {
        &self.theta[row * self.vocab..(row + 1) * self.vocab]
    }

    /// Conditional distribution over the next token.
    pub fn next_token_probs(&self, x: usize, prefix: &[usize]) -> Vec<f64> {
        let l = self.logits(self.row(x, prefix));
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = l.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }

    fn next_token_logprob(&self, x: usize, prefix: &[usize], tok: usize) -> f64 {
        let l = self.logits(self.row(x, prefix));
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        l[tok] - lse
    }

    /// Every token sequence of length `horizon`, in lexicographic order.
    pub fn traces(&self) -> Vec<Vec<usize>> {
        all_traces(self.vocab, self.horizon)
    }

    pub fn sample(&self, x: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut y = Vec::with_capacity(self.horizon);
        for _ in 0..self.horizon {
            let p = self.next_token_probs(x, &y);
            let mut u: f64 = rng.random();
            let mut tok = self.vocab - 1;
            for (k, pk) in p.iter().enumerate() {
                if u < *pk {
                    tok = k;
                    break;
                }
                u -= pk;
            }
            y.push(tok);
        }
        y
    }
}

pub fn param_count(vocab: usize, horizon: usize, prompts: usize) -> usize {
    let rows: usize = (0..horizon).map(|t| vocab.pow(t as u32)).sum();
    prompts * rows * vocab
}

fn encode(vocab: usize, ys: &[usize]) -> usize {
    ys.iter().fold(0, |acc, &y| acc * vocab + y)
}

/// Position of `y` in the lexicographic enumeration of [`all_traces`].
pub fn trace_index(vocab: usize, y: &[usize]) -> usize {
    encode(vocab, y)
}

pub fn all_traces(vocab: usize, horizon: usize) -> Vec<Vec<usize>> {
    let n = vocab.pow(horizon as u32);
    (0..n)
        .map(|mut i| {
            let mut y = vec![0; horizon];
            for t in (0..horizon).rev() {
                y[t] = i % vocab;
                i /= vocab;
            }
            y
        })
        .collect()
}

pub fn logprob(policy: &ToyPolicy, x: usize, y: &[usize]) -> f64 {
    (0..y.len()).map(|t| policy.next_token_logprob(x, &y[..t], y[t])).sum()
}

/// Analytic gradient of `logprob`: for each visited row, one-hot of the
/// emitted token minus the row's probabilities.
pub fn grad_logprob(policy: &ToyPolicy, x: usize, y: &[usize]) -> Vec<f64> {
    let mut g = vec![0.0; policy.n_params()];
    add_grad_logprob(policy, x, y, 1.0, &mut g);
    g
}

fn add_grad_logprob(policy: &ToyPolicy, x: usize, y: &[usize], w: f64, acc: &mut [f64]) {
    let v = policy.vocab;
    for t in 0..y.len() {
        let row = policy.row(x, &y[..t]);
        let p = policy.next_token_probs(x, &y[..t]);
        for k in 0..v {
            let onehot = if k == y[t] { 1.0 } else { 0.0 };
            acc[row * v + k] += w * (onehot - p[k]);
        }
    }
}

/// Binary outcome of a validator, as a function of (prompt, trace).
pub trait Validator {
    fn valid(&self, x: usize, y: &[usize]) -> bool;
}

impl<F: Fn(usize, &[usize]) -> bool> Validator for F {
    fn valid(&self, x: usize, y: &[usize]) -> bool {
        self(x, y)
    }
}

/// Lookup-table validator over the full (prompt, trace) space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableValidator {
    pub vocab: usize,
    pub horizon: usize,
    pub valid: Vec<bool>,
}

impl TableValidator {
    /// Each (prompt, trace) is valid with probability `p`. With
    /// `nonempty`, every prompt gets at least one valid trace.
    pub fn random(vocab: usize, horizon: usize, prompts: usize, p: f64, nonempty: bool, rng: &mut impl Rng) -> Self {
        let per = vocab.pow(horizon as u32);
        let mut valid: Vec<bool> = (0..prompts * per).map(|_| rng.random_bool(p)).collect();
        if nonempty {
            for x in 0..prompts {
                if !valid[x * per..(x + 1) * per].iter().any(|v| *v) {
                    valid[x * per + rng.random_range(0..per)] = true;
                }
            }
        }
        TableValidator { vocab, horizon, valid }
    }
}

impl Validator for TableValidator {
    fn valid(&self, x: usize, y: &[usize]) -> bool {
        self.valid[x * self.vocab.pow(self.horizon as u32) + trace_index(self.vocab, y)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub prompt: usize,
    pub trace: Vec<usize>,
    pub reward: bool,
}

/// Samples labelled by a validator, so the reward is always a function of
/// (prompt, trace).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardedDataset {
    pub samples: Vec<Sample>,
}

impl RewardedDataset {
    pub fn label(pairs: Vec<(usize, Vec<usize>)>, validator: &impl Validator) -> Self {
        let samples = pairs
            .into_iter()
            .map(|(prompt, trace)| {
                let reward = validator.valid(prompt, &trace);
                Sample { prompt, trace, reward }
            })
            .collect();
        RewardedDataset { samples }
    }

    /// `n` on-policy samples with prompts drawn uniformly.
    pub fn sample(policy: &ToyPolicy, n: usize, validator: &impl Validator, rng: &mut impl Rng) -> Self {
        let pairs = (0..n)
            .map(|_| {
                let x = rng.random_range(0..policy.prompts);
                (x, policy.sample(x, rng))
            })
            .collect();
        Self::label(pairs, validator)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn n_valid(&self) -> usize {
        self.samples.iter().filter(|s| s.reward).count()
    }

    pub fn valid_subset(&self) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.reward).collect()
    }
}

/// Monte Carlo REINFORCE estimate `(1/N) Σ R_i ∇log π(y_i|x_i)`.
pub fn reinforce_grad_mc(policy: &ToyPolicy, data: &RewardedDataset) -> Vec<f64> {
    let mut g = vec![0.0; policy.n_params()];
    if data.n() == 0 {
        return g;
    }
    for s in &data.samples {
        if s.reward {
            add_grad_logprob(policy, s.prompt, &s.trace, 1.0, &mut g);
        }
    }
    let n = data.n() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Gradient of the SFT loss `-(1/N₊) Σ_{D₊} log π(y|x)`; zero when `D₊` is empty.
pub fn sft_grad(policy: &ToyPolicy, valid: &[&Sample]) -> Vec<f64> {
    let mut g = vec![0.0; policy.n_params()];
    if valid.is_empty() {
        return g;
    }
    for s in valid {
        add_grad_logprob(policy, s.prompt, &s.trace, 1.0, &mut g);
    }
    let n = valid.len() as f64;
    g.iter_mut().for_each(|v| *v = -*v / n);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub reinforce_grad: Vec<f64>,
    pub sft_grad: Vec<f64>,
    pub scale: f64,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GradientReport {
    fn new(reinforce_grad: Vec<f64>, sft_grad: Vec<f64>, scale: f64, tolerance: f64) -> Self {
        let max_abs_residual =
            reinforce_grad.iter().zip(&sft_grad).map(|(r, s)| (r + scale * s).abs()).fold(0.0, f64::max);
        GradientReport {
            reinforce_grad,
            sft_grad,
            scale,
            max_abs_residual,
            tolerance,
            pass: max_abs_residual < tolerance,
        }
    }
}

/// REINFORCE on binary rewards against SFT on the valid samples, scaled by `N₊/N`.
pub fn check_prop1(policy: &ToyPolicy, data: &RewardedDataset, tol: f64) -> GradientReport {
    let r = reinforce_grad_mc(policy, data);
    let s = sft_grad(policy, &data.valid_subset());
    let scale = if data.n() == 0 { 0.0 } else { data.n_valid() as f64 / data.n() as f64 };
    GradientReport::new(r, s, scale, tol)
}

/// Unnormalised weight a valid trace receives when training mixes on-policy
/// and behaviour traces: `(1-λ) + λ π_β/π_θ`. Invalid traces get 0.
pub fn effective_reward(
    theta: &ToyPolicy,
    beta: &ToyPolicy,
    lambda: f64,
    x: usize,
    y: &[usize],
    validator: &impl Validator,
) -> f64 {
    if !validator.valid(x, y) {
        return 0.0;
    }
    let ratio = (logprob(beta, x, y) - logprob(theta, x, y)).exp();
    (1.0 - lambda) + lambda * ratio
}

/// Exact mixture-SFT gradient against the importance-weighted on-policy form.
///
/// Prompts are weighted uniformly. For each prompt the valid-trace
/// distributions of both policies are normalised over the valid set, so the
/// importance weight carries the ratio of normalisers `Z_θ/Z_β`. The report
/// stores the on-policy form as `reinforce_grad` and the SFT gradient as
/// `sft_grad` with unit scale.
pub fn check_prop2(
    theta: &ToyPolicy,
    beta: &ToyPolicy,
    lambda: f64,
    validator: &impl Validator,
    tol: f64,
) -> Result<GradientReport, RlError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(RlError::Lambda(lambda));
    }
    if !theta.same_shape(beta) {
        return Err(RlError::Mismatch);
    }
    let traces = theta.traces();
    let mu = 1.0 / theta.prompts as f64;
    let mut sft = vec![0.0; theta.n_params()];
    let mut onp = vec![0.0; theta.n_params()];
    for x in 0..theta.prompts {
        let valid: Vec<&Vec<usize>> = traces.iter().filter(|y| validator.valid(x, y)).collect();
        if valid.is_empty() {
            return Err(RlError::NoValidTraces { prompt: x });
        }
        let pt: Vec<f64> = valid.iter().map(|y| logprob(theta, x, y).exp()).collect();
        let pb: Vec<f64> = valid.iter().map(|y| logprob(beta, x, y).exp()).collect();
        let zt: f64 = pt.iter().sum();
        let zb: f64 = pb.iter().sum();
        for (i, y) in valid.iter().enumerate() {
            let on = pt[i] / zt;
            let off = pb[i] / zb;
            // written as a + λ(b - a) so the degenerate cases are exact
            let data_w = on + lambda * (off - on);
            let iw = (pb[i] / pt[i]) * (zt / zb);
            let onp_w = on * (1.0 + lambda * (iw - 1.0));
            add_grad_logprob(theta, x, y, -mu * data_w, &mut sft);
            add_grad_logprob(theta, x, y, mu * onp_w, &mut onp);
        }
    }
    Ok(GradientReport::new(onp, sft, 1.0, tol))
}

/// Sum of `π(y|x)` over all traces, per prompt.
pub fn total_probability(policy: &ToyPolicy) -> Vec<f64> {
    let traces = policy.traces();
    (0..policy.prompts).map(|x| traces.iter().map(|y| logprob(policy, x, y).exp()).sum()).collect()
}

/// Expected reward under uniform prompts, by enumeration.
pub fn expected_reward(policy: &ToyPolicy, validator: &impl Validator) -> f64 {
    let traces = policy.traces();
    let mu = 1.0 / policy.prompts as f64;
    (0..policy.prompts)
        .map(|x| traces.iter().filter(|y| validator.valid(x, y)).map(|y| mu * logprob(policy, x, y).exp()).sum::<f64>())
        .sum()
}

pub fn exact_reward_grad(policy: &ToyPolicy, validator: &impl Validator) -> Vec<f64> {
    let traces = policy.traces();
    let mu = 1.0 / policy.prompts as f64;
    let mut g = vec![0.0; policy.n_params()];
    for x in 0..policy.prompts {
        for y in traces.iter().filter(|y| validator.valid(x, y)) {
            add_grad_logprob(policy, x, y, mu * logprob(policy, x, y).exp(), &mut g);
        }
    }
    g
}

/// Worst relative error of [`grad_logprob`] against central differences,
/// measured in the max norm: `‖a - n‖∞ / max(‖a‖∞, ‖n‖∞)`.
pub fn finite_difference_error(policy: &ToyPolicy, x: usize, y: &[usize], h: f64) -> f64 {
    let a = grad_logprob(policy, x, y);
    let mut theta = policy.theta.clone();
    let mut num = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let up = logprob(&policy.with_theta(theta.clone()), x, y);
        theta[i] = orig - h;
        let down = logprob(&policy.with_theta(theta.clone()), x, y);
        theta[i] = orig;
        num[i] = (up - down) / (2.0 * h);
    }
    let diff = a.iter().zip(&num).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let norm = a.iter().chain(&num).map(|v| v.abs()).fold(0.0, f64::max);
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub steps: usize,
    pub batch: usize,
    /// Step size η.
    pub step_size: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { steps: 50, batch: 16, step_size: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdTrajectory {
    /// max |θ_REINFORCE - θ_SFT| after each step
    pub param_gap: Vec<f64>,
    /// exact J(θ) before the first and after each exact-gradient step
    pub expected_reward: Vec<f64>,
    pub max_gap: f64,
    pub monotone: bool,
    pub pass: bool,
}

pub const SGD_GAP_TOL: f64 = 1e-8;

/// Runs stochastic REINFORCE ascent and (N₊/N)-scaled SFT descent side by
/// side on the same batches, then exact-gradient ascent on `J`.
pub fn sgd_sanity(policy: &ToyPolicy, validator: &impl Validator, cfg: &SgdConfig) -> SgdTrajectory {
    let mut rng = crate::seed::rng(cfg.seed);
    let mut rl = policy.clone();
    let mut sft = policy.clone();
    let mut param_gap = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let batch = RewardedDataset::sample(&rl, cfg.batch, validator, &mut rng);
        let r = reinforce_grad_mc(&rl, &batch);
        let s = sft_grad(&sft, &batch.valid_subset());
        let scale = batch.n_valid() as f64 / batch.n() as f64;
        rl.theta.iter_mut().zip(&r).for_each(|(t, g)| *t += cfg.step_size * g);
        sft.theta.iter_mut().zip(&s).for_each(|(t, g)| *t -= cfg.step_size * scale * g);
        let gap = rl.theta.iter().zip(&sft.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        param_gap.push(gap);
    }

    let mut exact = policy.clone();
    let mut js = vec![expected_reward(&exact, validator)];
    for _ in 0..cfg.steps {
        let g = exact_reward_grad(&exact, validator);
        exact.theta.iter_mut().zip(&g).for_each(|(t, d)| *t += cfg.step_size * d);
        js.push(expected_reward(&exact, validator));
    }
    let max_gap = param_gap.iter().cloned().fold(0.0, f64::max);
    // allow rounding once J has converged
    let monotone = js.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    SgdTrajectory { param_gap, expected_reward: js, max_gap, monotone, pass: max_gap < SGD_GAP_TOL && monotone }
}
