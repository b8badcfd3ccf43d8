use crate::error::{PspError, Result};
use crate::models::ScoreFunction;
use crate::types::LabeledSample;

/// Full-batch gradient descent settings for [`train_softmax`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub step_size: f64,
    /// Ridge penalty on the weights; intercepts are not penalized.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            step_size: 0.1,
            l2: 1e-4,
        }
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    k: usize,
    d: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `k` rows of `d` weights followed by one intercept.
    params: Vec<f64>,
    loss_history: Vec<f64>,
}

impl SoftmaxModel {
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Penalized training loss before each epoch and after the last one.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

impl ScoreFunction for SoftmaxModel {
    fn num_classes(&self) -> usize {
        self.k
    }

    fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        let z: Vec<f64> = x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        logits_into(&self.params, self.d, &z, out);
        softmax_in_place(out);
    }
}

fn logits_into(params: &[f64], d: usize, z: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        let row = &params[c * (d + 1)..(c + 1) * (d + 1)];
        *o = row[d] + row[..d].iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Penalized cross-entropy over a fixed standardized design.
///
/// `loss(w) = mean_i -log softmax(W z_i + b)_{y_i} + (l2 / 2) ||W||²`.
#[derive(Debug, Clone)]
pub struct SoftmaxObjective {
    k: usize,
    d: usize,
    z: Vec<f64>,
    y: Vec<usize>,
    l2: f64,
}

impl SoftmaxObjective {
    pub fn num_params(&self) -> usize {
        self.k * (self.d + 1)
    }

    fn is_weight(&self, p: usize) -> bool {
        p % (self.d + 1) != self.d
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.data_loss_and_grad(params, None) + self.penalty(params)
    }

    /// Gradient of [`Self::loss`].
    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.num_params()];
        self.data_loss_and_grad(params, Some(&mut grad));
        for (p, g) in grad.iter_mut().enumerate() {
            if self.is_weight(p) {
                *g += self.l2 * params[p];
            }
        }
        grad
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let sq: f64 = params
            .iter()
            .enumerate()
            .filter(|(p, _)| self.is_weight(*p))
            .map(|(_, w)| w * w)
            .sum();
        0.5 * self.l2 * sq
    }

    /// Mean cross-entropy; accumulates its gradient when `grad` is given.
    fn data_loss_and_grad(&self, params: &[f64], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let (k, d) = (self.k, self.d);
        let n = self.y.len() as f64;
        let mut probs = vec![0.0; k];
        let mut loss = 0.0;
        for (zi, &yi) in self.z.chunks_exact(d).zip(&self.y) {
            logits_into(params, d, zi, &mut probs);
            let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + probs.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss -= probs[yi] - lse;
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..k {
                    let resid = ((probs[c] - lse).exp() - if c == yi { 1.0 } else { 0.0 }) / n;
                    let row = &mut g[c * (d + 1)..(c + 1) * (d + 1)];
                    for (w, v) in row[..d].iter_mut().zip(zi) {
                        *w += resid * v;
                    }
                    row[d] += resid;
                }
            }
        }
        loss / n
    }
}

fn standardize(train: &[LabeledSample], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for s in train {
        for (m, v) in mean.iter_mut().zip(&s.x) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for s in train {
        for ((acc, v), m) in var.iter_mut().zip(&s.x).zip(&mean) {
            *acc += (v - m) * (v - m) / n;
        }
    }
    let scale = var
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

/// Builds the objective for `train` without fitting; exposes the loss surface.
pub fn softmax_objective(train: &[LabeledSample], k: usize, l2: f64) -> Result<SoftmaxObjective> {
    Ok(prepare(train, k, l2)?.1)
}

fn prepare(
    train: &[LabeledSample],
    k: usize,
    l2: f64,
) -> Result<((Vec<f64>, Vec<f64>), SoftmaxObjective)> {
    if k < 2 {
        return Err(PspError::TooFewClasses(k));
    }
    let d = train.first().map_or(0, |s| s.x.len());
    let mut counts = vec![0usize; k];
    for s in train {
        if s.x.len() != d {
            return Err(PspError::LengthMismatch {
                what: "feature vector",
                expected: d,
                actual: s.x.len(),
            });
        }
        if s.y.index() >= k {
            return Err(PspError::LabelOutOfRange {
                label: s.y.value() as i64,
                k,
            });
        }
        counts[s.y.index()] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(PspError::MissingClass { label: c as u32 + 1 });
    }
    let (mean, scale) = standardize(train, d);
    let mut z = Vec::with_capacity(train.len() * d);
    for s in train {
        z.extend(
            s.x.iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (m, sc))| (v - m) / sc),
        );
    }
    let y = train.iter().map(|s| s.y.index()).collect();
    Ok(((mean, scale), SoftmaxObjective { k, d, z, y, l2 }))
}

/// Fits a multinomial logistic model by full-batch gradient descent.
///
/// The ridge term is applied as a proximal shrinkage after each gradient step
/// on the cross-entropy, which keeps large penalties stable.
pub fn train_softmax(train: &[LabeledSample], k: usize, cfg: TrainConfig) -> Result<SoftmaxModel> {
    let ((mean, scale), obj) = prepare(train, k, cfg.l2)?;
    let d = obj.d;
    let mut params = vec![0.0; obj.num_params()];
    let mut grad = vec![0.0; params.len()];
    let shrink = 1.0 / (1.0 + cfg.step_size * cfg.l2);
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let data_loss = obj.data_loss_and_grad(&params, Some(&mut grad));
        let loss = data_loss + obj.penalty(&params);
        if !loss.is_finite() {
            return Err(PspError::NonFiniteLoss { epoch });
        }
        loss_history.push(loss);
        for (p, (w, g)) in params.iter_mut().zip(&grad).enumerate() {
            *w -= cfg.step_size * g;
            if p % (d + 1) != d {
                *w *= shrink;
            }
        }
    }
    let final_loss = obj.loss(&params);
    if !final_loss.is_finite() {
        return Err(PspError::NonFiniteLoss { epoch: cfg.epochs });
    }
    loss_history.push(final_loss);
    Ok(SoftmaxModel {
        k,
        d,
        mean,
        scale,
        params,
        loss_history,
    })
}
