//! Self-adversarial negative-sampling loss shared by the KG, type and
//! regression objectives.
//!
//! ```text
//! L = -log σ(γ - f⁺) - Σ_i p_i · log σ(f⁻_i - γ),   p = softmax(α · f⁻)
//! ```
//!
//! The weights `p` are treated as constants when differentiating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub gamma: f64,
    pub alpha: f64,
}

impl LossConfig {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 || alpha.is_nan() || alpha < 0.0 {
            return Err(Error::Config(format!(
                "loss requires gamma > 0 and alpha >= 0 (got gamma={gamma}, alpha={alpha})"
            )));
        }
        Ok(LossConfig { gamma, alpha })
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax over `alpha · scores` with max subtraction.
pub fn adversarial_weights(neg_scores: &[f64], alpha: f64) -> Vec<f64> {
    assert!(!neg_scores.is_empty(), "adversarial weights need at least one negative");
    let max = neg_scores
        .iter()
        .map(|s| alpha * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = neg_scores.iter().map(|s| (alpha * s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn ns_loss(pos_score: f64, neg_scores: &[f64], cfg: &LossConfig) -> f64 {
    let w = adversarial_weights(neg_scores, cfg.alpha);
    let neg: f64 = w
        .iter()
        .zip(neg_scores)
        .map(|(wi, s)| wi * softplus(cfg.gamma - s))
        .sum();
    softplus(pos_score - cfg.gamma) + neg
}

/// `∂L/∂f⁺` and `∂L/∂f⁻_i` with the adversarial weights held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub d_pos: f64,
    pub d_neg: Vec<f64>,
}

pub fn ns_loss_gradients(pos_score: f64, neg_scores: &[f64], cfg: &LossConfig) -> LossGradient {
    let w = adversarial_weights(neg_scores, cfg.alpha);
    let mut loss = softplus(pos_score - cfg.gamma);
    let mut d_neg = Vec::with_capacity(neg_scores.len());
    for (wi, &s) in w.iter().zip(neg_scores) {
        loss += wi * softplus(cfg.gamma - s);
        d_neg.push(-wi * sigmoid(cfg.gamma - s));
    }
    LossGradient {
        loss,
        d_pos: sigmoid(pos_score - cfg.gamma),
        d_neg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64, alpha: f64) -> LossConfig {
        LossConfig::new(gamma, alpha).unwrap()
    }

    #[test]
    fn weights_examples() {
        assert_eq!(adversarial_weights(&[3.7, 3.7], 1.0), vec![0.5, 0.5]);
        let w = adversarial_weights(&[1.0, -4.0, 9.0, 2.0], 0.0);
        assert!(w.iter().all(|&x| x == 0.25));
        let w = adversarial_weights(&[0.0, 3f64.ln()], 1.0);
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weights_shift_invariant() {
        let a = adversarial_weights(&[0.3, -1.2, 4.0], 0.7);
        let b = adversarial_weights(&[100.3, 98.8, 104.0], 0.7);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_examples() {
        let l = ns_loss(1.0, &[1.0], &cfg(1.0, 1.0));
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
        let l = ns_loss(0.0, &[24.0, 24.0], &cfg(24.0, 1.0));
        let expected = (1.0 + (-24f64).exp()).ln() + 2f64.ln();
        assert!((l - expected).abs() < 1e-12);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-9);
        let l = ns_loss(-1e6, &[1e6, 1e6], &cfg(24.0, 1.0));
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn gradient_at_margin_is_half() {
        // d/dx softplus(x - γ) = σ(x - γ) = 1/2 at x = γ.
        let g = ns_loss_gradients(24.0, &[30.0], &cfg(24.0, 1.0));
        assert!((g.d_pos - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heavily_downweighted_negative_has_no_gradient() {
        let g = ns_loss_gradients(0.0, &[0.0, 50.0], &cfg(6.0, 10.0));
        assert!(g.d_neg[0].abs() < 1e-200);
        assert!(g.d_neg[1] < 0.0);
    }

    #[test]
    fn extreme_scores_stay_finite() {
        for &p in &[-1e6, -1.0, 0.0, 1e6] {
            let g = ns_loss_gradients(p, &[-1e6, 0.0, 1e6], &cfg(24.0, 1.0));
            assert!(g.loss.is_finite() && g.d_pos.is_finite());
            assert!(g.d_neg.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(LossConfig::new(0.0, 1.0).is_err());
        assert!(LossConfig::new(1.0, -0.1).is_err());
    }
}
