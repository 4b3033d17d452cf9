//! Multitask detection loss as plain arithmetic: classification
//! cross-entropy, smooth-L1 box regression for the horizontal and rotated
//! branches, and the prow-direction term.

use alloc::vec::Vec;

use crate::encoding::{HorizontalTarget, ProwSide, RegressionTarget};
use crate::math;
use crate::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Cross-entropy value plus whether the probability had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    pub value: f64,
    pub clamped: bool,
}

/// `-ln probs[label]`, with the probability clamped at [`PROB_FLOOR`].
pub fn cls_loss(probs: &[f64], label: usize) -> Result<CrossEntropy> {
    let p = *probs.get(label).ok_or(Error::InvalidLabel(label))?;
    if !p.is_finite() || p < 0.0 {
        return Err(Error::OutOfRange("probability must be finite and non-negative"));
    }
    let clamped = p < PROB_FLOOR;
    Ok(CrossEntropy { value: -math::ln(p.max(PROB_FLOOR)), clamped })
}

/// Sum of smooth-L1 over coordinate differences `t_star - t`.
pub fn reg_loss<const N: usize>(t_star: &[f64; N], t: &[f64; N]) -> f64 {
    t_star.iter().zip(t).map(|(a, b)| smooth_l1(a - b)).sum()
}

/// Gradient of [`reg_loss`] with respect to the prediction `t`.
pub fn reg_loss_grad<const N: usize>(t_star: &[f64; N], t: &[f64; N]) -> [f64; N] {
    let mut g = [0.0; N];
    for i in 0..N {
        g[i] = -smooth_l1_grad(t_star[i] - t[i]);
    }
    g
}

/// Weights of the horizontal, rotated and prow terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda1: 1.0, lambda2: 1.0, lambda3: 10.0 }
    }
}

/// How the prow-direction term is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProwMode {
    /// Four-way cross-entropy over the side distribution.
    #[default]
    CrossEntropy,
    /// Smooth-L1 between the labelled side index and the expected index
    /// under the predicted distribution.
    SmoothL1OnIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProwPrediction {
    /// Distribution over the four sides.
    pub probs: [f64; 4],
    pub label: ProwSide,
}

/// One proposal's worth of predictions and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    pub class_probs: Vec<f64>,
    pub class_label: usize,
    /// Positive sample indicator; gates every regression and prow term.
    pub positive: bool,
    /// `(target, prediction)` for the horizontal branch.
    pub horizontal: Option<(HorizontalTarget, HorizontalTarget)>,
    /// `(target, prediction)` for the rotated branch.
    pub rotated: Option<(RegressionTarget, RegressionTarget)>,
    pub prow: Option<ProwPrediction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub cls: f64,
    pub horizontal: f64,
    pub rotated: f64,
    pub prow: f64,
    /// `cls + λ1 horizontal + λ2 rotated + λ3 prow`.
    pub total: f64,
    /// Some probability fell below [`PROB_FLOOR`].
    pub clamped: bool,
    /// The sample list was empty; every term is zero.
    pub empty: bool,
}

/// Weighted multitask loss over a minibatch.
///
/// Each term is a mean over the samples that carry it: `N_cls` is the
/// sample count, `N_reg-h` counts samples with a horizontal pair, and
/// `N_reg-r` counts samples with a rotated pair or a prow prediction and is
/// shared by the rotated and prow terms. Only positive samples contribute
/// to the numerators of the regression and prow terms.
pub fn multitask_loss(samples: &[LossSample], weights: &LossWeights, prow_mode: ProwMode) -> Result<LossBreakdown> {
    if samples.is_empty() {
        return Ok(LossBreakdown { empty: true, ..LossBreakdown::default() });
    }
    let mut out = LossBreakdown::default();
    let (mut n_h, mut n_r) = (0usize, 0usize);

    for s in samples {
        let ce = cls_loss(&s.class_probs, s.class_label)?;
        out.cls += ce.value;
        out.clamped |= ce.clamped;

        if let Some((t_star, t)) = &s.horizontal {
            n_h += 1;
            if s.positive {
                out.horizontal += reg_loss(&t_star.to_array(), &t.to_array());
            }
        }
        if s.rotated.is_some() || s.prow.is_some() {
            n_r += 1;
        }
        if let (true, Some((t_star, t))) = (s.positive, &s.rotated) {
            out.rotated += reg_loss(&t_star.to_array(), &t.to_array());
        }
        if let (true, Some(p)) = (s.positive, &s.prow) {
            match prow_mode {
                ProwMode::CrossEntropy => {
                    let ce = cls_loss(&p.probs, p.label.index())?;
                    out.prow += ce.value;
                    out.clamped |= ce.clamped;
                }
                ProwMode::SmoothL1OnIndex => {
                    let expected: f64 = p.probs.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
                    out.prow += smooth_l1(p.label.index() as f64 - expected);
                }
            }
        }
    }

    out.cls /= samples.len() as f64;
    if n_h > 0 {
        out.horizontal /= n_h as f64;
    }
    if n_r > 0 {
        out.rotated /= n_r as f64;
        out.prow /= n_r as f64;
    }
    out.total = out.cls
        + weights.lambda1 * out.horizontal
        + weights.lambda2 * out.rotated
        + weights.lambda3 * out.prow;
    Ok(out)
}
