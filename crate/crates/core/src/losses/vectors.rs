//! Losses over logits, probability vectors and feature embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{neg_log, LossValue, LOG_CLAMP};

/// Temperature used by contrastive patch losses when none is given.
pub const DEFAULT_TAU: f64 = 0.07;

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} contains a non-finite entry")))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max-subtracted softmax.
pub fn softmax_probs(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.len() < 2 {
        return Err(Error::InvalidInput("softmax needs at least two logits".into()));
    }
    check_finite("logits", logits)?;
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    /// Per-class weights, one per logit.
    pub alpha: Vec<f64>,
    pub gamma: f64,
}

/// Multi-class focal loss averaged over all classes: each class `n`
/// contributes `−αₙ (1 − p_{t,n})^γ ln p_{t,n}` with `p_{t,n} = pₙ` for the
/// target class and `1 − pₙ` otherwise. `target` is a 0-based class index.
pub fn focal_loss(logits: &[f64], target: usize, p: &FocalParams) -> Result<f64> {
    if p.alpha.len() != logits.len() {
        return Err(Error::DimensionMismatch(format!("alpha has {} entries for {} logits", p.alpha.len(), logits.len())));
    }
    if target >= logits.len() {
        return Err(Error::InvalidInput(format!("target {target} out of range for {} classes", logits.len())));
    }
    if !(p.gamma >= 0.0) || p.alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput("gamma and alpha must be non-negative".into()));
    }
    let probs = softmax_probs(logits)?;
    let n = probs.len() as f64;
    let total: f64 = probs
        .iter()
        .zip(&p.alpha)
        .enumerate()
        .map(|(k, (&pk, &a))| {
            let pt = if k == target { pk } else { 1.0 - pk };
            -a * (1.0 - pt).powf(p.gamma) * pt.max(LOG_CLAMP).ln()
        })
        .sum();
    Ok(total / n)
}

/// `1 − cos(a, b)`, in `[0, 2]`.
pub fn cosine_sim_loss(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!("vector lengths {} and {}", a.len(), b.len())));
    }
    check_finite("a", a)?;
    check_finite("b", b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine loss of a zero vector".into()));
    }
    Ok((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
}

fn normalized(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    check_finite(name, v)?;
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::InvalidInput(format!("{name} is a zero vector")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// InfoNCE over L2-normalized embeddings:
/// `−log softmax(q·k⁺/τ, q·k₁/τ, …)[0]`, evaluated with log-sum-exp.
pub fn infonce_loss(query: &[f64], positive: &[f64], negatives: &[Vec<f64>], tau: f64) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::InvalidInput("InfoNCE needs at least one negative".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {tau}")));
    }
    let d = query.len();
    if positive.len() != d || negatives.iter().any(|k| k.len() != d) || d == 0 {
        return Err(Error::DimensionMismatch("query, positive and negatives must share a length".into()));
    }
    let q = normalized("query", query)?;
    let mut logits = vec![dot(&q, &normalized("positive", positive)?) / tau];
    for (i, k) in negatives.iter().enumerate() {
        logits.push(dot(&q, &normalized(&format!("negative {i}"), k)?) / tau);
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[0])
}

fn check_probs(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput(format!("{name} entries must lie in [0, 1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// Style-classifier adversarial loss: `−[ln D_real[real_style] + ln D_fake[fake_index]]`
/// over `N + 1`-way probability vectors (the last class conventionally
/// labelling generated images).
pub fn style_adversarial_loss(
    d_probs_real: &[f64],
    real_style: usize,
    d_probs_fake: &[f64],
    fake_index: usize,
) -> Result<LossValue> {
    if d_probs_real.len() != d_probs_fake.len() || d_probs_real.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "probability vectors of length {} and {}",
            d_probs_real.len(),
            d_probs_fake.len()
        )));
    }
    check_probs("d_probs_real", d_probs_real)?;
    check_probs("d_probs_fake", d_probs_fake)?;
    let n = d_probs_real.len();
    if real_style >= n || fake_index >= n {
        return Err(Error::InvalidInput(format!("class index out of range for {n} classes")));
    }
    let (a, ca) = neg_log(d_probs_real[real_style]);
    let (b, cb) = neg_log(d_probs_fake[fake_index]);
    Ok(LossValue { value: a + b, clamped: ca || cb })
}

/// Binary cross-entropy discriminator loss with the weight on the fake term:
/// `−ln D(real) + λ·(−ln(1 − D(fake)))`.
pub fn pix2pix_dis_loss(d_real: f64, d_fake: f64, lambda: f64) -> Result<LossValue> {
    if !(0.0..=1.0).contains(&d_real) || !(0.0..=1.0).contains(&d_fake) {
        return Err(Error::InvalidInput("discriminator outputs must lie in [0, 1]".into()));
    }
    let (a, ca) = neg_log(d_real);
    let (b, cb) = neg_log(1.0 - d_fake);
    Ok(LossValue { value: a + lambda * b, clamped: ca || cb })
}
