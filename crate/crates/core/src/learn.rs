//! Ordinal regression over focal indices: soft targets, cross-entropy loss,
//! Adam, and a linear scorer over hand-crafted per-slice features.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::MetricParams;
use crate::contrast::{contrast_score, ContrastMetricId};
use crate::dp_match::{dp_mismatch, DpMetricId};
use crate::error::{Error, Result};
use crate::eval::{Algorithm, Observation, ProtocolKind};
use crate::patch::FocalStack;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    L1,
    #[default]
    L2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftTarget<T> {
    pub probs: Vec<T>,
    pub true_index: usize,
}

/// Discretized `exp(-coeff * cost(i - k))`, normalized over the ladder.
pub fn soft_target<T: Scalar>(true_index: usize, n: usize, cost: Cost, coeff: T) -> Result<SoftTarget<T>> {
    if true_index >= n {
        return Err(Error::InvalidParameter(format!("true index {} outside 0..{}", true_index, n)));
    }
    if !(coeff > T::zero()) {
        return Err(Error::InvalidParameter(format!("coefficient must be positive, got {}", coeff)));
    }
    let raw: Vec<T> = (0..n)
        .map(|i| {
            let d = T::of_usize(i.abs_diff(true_index));
            let phi = match cost {
                Cost::L1 => d,
                Cost::L2 => d * d,
            };
            (-coeff * phi).exp()
        })
        .collect();
    let total: T = raw.iter().copied().sum();
    Ok(SoftTarget { probs: raw.into_iter().map(|p| p / total).collect(), true_index })
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Cross-entropy of `softmax(logits)` against the soft target, and its
/// gradient with respect to the logits.
pub fn ordinal_loss<T: Scalar>(logits: &[T], target: &SoftTarget<T>) -> Result<(T, Vec<T>)> {
    if logits.len() != target.probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} logits for a target over {} slices",
            logits.len(),
            target.probs.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + logits.iter().map(|&z| (z - m).exp()).sum::<T>().ln();
    let loss = target.probs.iter().zip(logits).map(|(&q, &z)| q * (lse - z)).sum();
    let grad = softmax(logits).into_iter().zip(&target.probs).map(|(p, &q)| p - q).collect();
    Ok((loss, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n_params: usize, lr: T, beta1: T, beta2: T, epsilon: T) -> Self {
        Self { step: 0, m: vec![T::zero(); n_params], v: vec![T::zero(); n_params], lr, beta1, beta2, epsilon }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(state: &mut AdamState<T>, params: &mut [T], grads: &[T]) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters, {} gradients, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let one = T::one();
    let t = state.step as i32;
    let c1 = one - state.beta1.powi(t);
    let c2 = one - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (one - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (one - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// A per-slice feature: a contrast score or a left/right mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureId {
    Contrast(ContrastMetricId),
    Dp(DpMetricId),
}

impl FeatureId {
    pub fn needs_dual_pixel(self) -> bool {
        matches!(self, FeatureId::Dp(_))
    }

    /// Every contrast measure, plus `ncc` and `normalized_sad` when the
    /// views are available.
    pub fn defaults(dual_pixel: bool) -> Vec<FeatureId> {
        let mut ids: Vec<FeatureId> = ContrastMetricId::ALL.iter().map(|&c| FeatureId::Contrast(c)).collect();
        if dual_pixel {
            ids.push(FeatureId::Dp(DpMetricId::Ncc));
            ids.push(FeatureId::Dp(DpMetricId::NormalizedSad));
        }
        ids
    }

    fn eval<T: Scalar>(self, stack: &FocalStack<T>, k: usize, params: &MetricParams<T>) -> Result<T> {
        let v = match self {
            FeatureId::Contrast(id) => contrast_score(id, &stack.green(k), params)?,
            FeatureId::Dp(id) => {
                stack.require_dual_pixel()?;
                dp_mismatch(id, &stack.slices[k], params)?
            }
        };
        // log-ratio measures reach -inf on flat bands
        Ok(if v.is_finite() { v } else { T::zero() })
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureId::Contrast(id) => id.fmt(f),
            FeatureId::Dp(id) => id.fmt(f),
        }
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(c) = s.parse::<ContrastMetricId>() {
            return Ok(FeatureId::Contrast(c));
        }
        s.parse::<DpMetricId>()
            .map(FeatureId::Dp)
            .map_err(|_| Error::InvalidParameter(format!("unknown feature id `{}`", s)))
    }
}

impl Serialize for FeatureId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Raw features of every slice, `n x F` row-major.
pub fn stack_features<T: Scalar>(stack: &FocalStack<T>, ids: &[FeatureId], params: &MetricParams<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(stack.len() * ids.len());
    for k in 0..stack.len() {
        for id in ids {
            out.push(id.eval(stack, k, params)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerInput {
    /// Features of every slice.
    #[default]
    FullStack,
    /// Features of the observed slices plus a one-hot mask of which slices
    /// were observed; everything else zero.
    Observed,
}

/// Linear map from the encoded stack to one logit per slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ShallowScorer<T> {
    pub feature_ids: Vec<FeatureId>,
    #[serde(default)]
    pub input: ScorerInput,
    pub n: usize,
    /// Per-input mean and standard deviation of the raw features.
    pub mean: Vec<T>,
    pub std: Vec<T>,
    /// `feature_dim` rows of `n` weights.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
    #[serde(default)]
    pub params: MetricParams<T>,
}

impl<T: Scalar> ShallowScorer<T> {
    pub fn zeros(feature_ids: Vec<FeatureId>, input: ScorerInput, n: usize, params: MetricParams<T>) -> Self {
        let nf = n * feature_ids.len();
        let dim = match input {
            ScorerInput::FullStack => nf,
            ScorerInput::Observed => nf + n,
        };
        Self {
            feature_ids,
            input,
            n,
            mean: vec![T::zero(); nf],
            std: vec![T::one(); nf],
            weights: vec![vec![T::zero(); n]; dim],
            bias: vec![T::zero(); n],
            params,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nf = self.n * self.feature_ids.len();
        let dim = match self.input {
            ScorerInput::FullStack => nf,
            ScorerInput::Observed => nf + self.n,
        };
        if self.mean.len() != nf
            || self.std.len() != nf
            || self.weights.len() != dim
            || self.bias.len() != self.n
            || self.weights.iter().any(|r| r.len() != self.n)
        {
            return Err(Error::DimensionMismatch("scorer parameter shapes do not match n and feature_ids".into()));
        }
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        if !finite(&self.mean) || !finite(&self.std) || !finite(&self.bias) || !self.weights.iter().all(|r| finite(r)) {
            return Err(Error::NonFinite("scorer parameters"));
        }
        Ok(())
    }

    fn standardize(&self, i: usize, v: T) -> T {
        (v - self.mean[i]) / self.std[i]
    }

    /// Model input for `raw` (`n x F` features); `observed` selects the
    /// visible slices in `Observed` mode.
    pub fn encode(&self, raw: &[T], observed: Option<&[usize]>) -> Vec<T> {
        let f = self.feature_ids.len();
        match (self.input, observed) {
            (ScorerInput::FullStack, _) | (ScorerInput::Observed, None) => {
                let mut x: Vec<T> = raw.iter().enumerate().map(|(i, &v)| self.standardize(i, v)).collect();
                if self.input == ScorerInput::Observed {
                    x.extend(std::iter::repeat_n(T::one(), self.n));
                }
                x
            }
            (ScorerInput::Observed, Some(obs)) => {
                let mut x = vec![T::zero(); self.n * f + self.n];
                for &k in obs {
                    for j in 0..f {
                        let i = k * f + j;
                        x[i] = self.standardize(i, raw[i]);
                    }
                    x[self.n * f + k] = T::one();
                }
                x
            }
        }
    }

    pub fn logits(&self, x: &[T]) -> Vec<T> {
        let mut z = self.bias.clone();
        for (xi, row) in x.iter().zip(&self.weights) {
            if xi.is_zero() {
                continue;
            }
            for (zj, &w) in z.iter_mut().zip(row) {
                *zj += *xi * w;
            }
        }
        z
    }

    /// Loss on one encoded example and its gradient with respect to the
    /// weights (row-major like `weights`) and the bias.
    pub fn loss_and_grad(&self, x: &[T], target: &SoftTarget<T>) -> Result<(T, Vec<T>, Vec<T>)> {
        let (loss, dz) = ordinal_loss(&self.logits(x), target)?;
        let mut gw = vec![T::zero(); x.len() * self.n];
        for (i, &xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, &d) in dz.iter().enumerate() {
                gw[i * self.n + j] = xi * d;
            }
        }
        Ok((loss, gw, dz))
    }

    pub fn features(&self, stack: &FocalStack<T>) -> Result<Vec<T>> {
        if stack.len() != self.n {
            return Err(Error::InconsistentStackLength { expected: self.n, found: stack.len() });
        }
        stack_features(stack, &self.feature_ids, &self.params)
    }

    pub fn predict_stack(&self, stack: &FocalStack<T>, observed: Option<&[usize]>) -> Result<usize> {
        let raw = self.features(stack)?;
        let z = self.logits(&self.encode(&raw, observed));
        crate::contrast::argmax_first(&z).ok_or(Error::NonFinite("logits"))
    }

    fn flat_params(&self) -> Vec<T> {
        let mut p: Vec<T> = self.weights.iter().flatten().copied().collect();
        p.extend_from_slice(&self.bias);
        p
    }

    fn set_flat_params(&mut self, p: &[T]) {
        let n = self.n;
        for (i, row) in self.weights.iter_mut().enumerate() {
            row.copy_from_slice(&p[i * n..(i + 1) * n]);
        }
        let nb = p.len() - n;
        self.bias.copy_from_slice(&p[nb..]);
    }
}

impl<T: Scalar> Algorithm<T> for ShallowScorer<T> {
    fn name(&self) -> String {
        match self.input {
            ScorerInput::FullStack => "shallow_scorer".into(),
            ScorerInput::Observed => "shallow_scorer_observed".into(),
        }
    }

    fn needs_dual_pixel(&self) -> bool {
        self.feature_ids.iter().any(|f| f.needs_dual_pixel())
    }

    fn supports(&self, kind: ProtocolKind) -> bool {
        match self.input {
            ScorerInput::FullStack => kind == ProtocolKind::FocalStack,
            ScorerInput::Observed => kind != ProtocolKind::FocalStack,
        }
    }

    fn predict(&self, stack: &FocalStack<T>, observed: Observation<'_>) -> Result<usize> {
        match observed {
            Observation::FullStack => self.predict_stack(stack, None),
            Observation::Slices(s) => self.predict_stack(stack, Some(s)),
        }
    }
}

fn default_steps() -> usize {
    2000
}
fn default_batch() -> usize {
    32
}
fn default_lr() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.5
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_coeff() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub cost: Cost,
    #[serde(default = "default_coeff")]
    pub coeff: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: ScorerInput,
    /// Feature list; defaults to [`FeatureId::defaults`] for the dataset.
    #[serde(default)]
    pub feature_ids: Option<Vec<FeatureId>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.epsilon > 0.0) || !(self.coeff > 0.0) {
            return Err(Error::InvalidParameter("lr, epsilon and coeff must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidParameter("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-input mean and population standard deviation, in dataset order.
fn feature_stats<T: Scalar>(rows: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let dim = rows[0].len();
    let count = T::of_usize(rows.len());
    let mut mean = vec![T::zero(); dim];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut var = vec![T::zero(); dim];
    for r in rows {
        for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / count).sqrt();
            if sd > T::zero() && sd.is_finite() {
                sd
            } else {
                T::one()
            }
        })
        .collect();
    (mean, std)
}

/// Fits a [`ShallowScorer`] by minibatch Adam on the mean ordinal loss.
/// Feature extraction runs on the current rayon pool; everything after it
/// is sequential, so results do not depend on the thread count.
pub fn train_scorer<T: Scalar>(
    dataset: &[FocalStack<T>],
    config: &TrainConfig,
    params: &MetricParams<T>,
) -> Result<ShallowScorer<T>> {
    config.validate()?;
    params.validate()?;
    let first = dataset.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if let Some(bad) = dataset.iter().find(|s| s.len() != n) {
        return Err(Error::InconsistentStackLength { expected: n, found: bad.len() });
    }
    let gts: Vec<usize> = dataset
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.ground_truth_index.ok_or_else(|| Error::InvalidParameter(format!("stack {} has no ground truth", i)))
        })
        .collect::<Result<_>>()?;
    let dual = dataset.iter().all(|s| s.dual_pixel);
    let ids = config.feature_ids.clone().unwrap_or_else(|| FeatureId::defaults(dual));
    if ids.is_empty() {
        return Err(Error::InvalidParameter("feature list is empty".into()));
    }
    let raw: Vec<Vec<T>> = dataset.par_iter().map(|s| stack_features(s, &ids, params)).collect::<Result<_>>()?;

    let mut scorer = ShallowScorer::zeros(ids, config.input, n, *params);
    let (mean, std) = feature_stats(&raw);
    scorer.mean = mean;
    scorer.std = std;
    let targets: Vec<SoftTarget<T>> =
        gts.iter().map(|&g| soft_target(g, n, config.cost, T::of(config.coeff))).collect::<Result<_>>()?;

    let mut flat = scorer.flat_params();
    let mut adam =
        AdamState::new(flat.len(), T::of(config.lr), T::of(config.beta1), T::of(config.beta2), T::of(config.epsilon));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let inv_batch = T::one() / T::of_usize(config.batch);
    let mut grad = vec![T::zero(); flat.len()];
    for _ in 0..config.steps {
        grad.iter_mut().for_each(|g| *g = T::zero());
        for _ in 0..config.batch {
            let i = rng.random_range(0..dataset.len());
            let x = match config.input {
                ScorerInput::FullStack => scorer.encode(&raw[i], None),
                ScorerInput::Observed => {
                    let k = rng.random_range(0..n);
                    scorer.encode(&raw[i], Some(&[k]))
                }
            };
            let (_, gw, gb) = scorer.loss_and_grad(&x, &targets[i])?;
            for (g, v) in grad.iter_mut().zip(gw.iter().chain(&gb)) {
                *g += *v * inv_batch;
            }
        }
        adam_step(&mut adam, &mut flat, &grad)?;
        scorer.set_flat_params(&flat);
    }
    scorer.validate()?;
    Ok(scorer)
}
