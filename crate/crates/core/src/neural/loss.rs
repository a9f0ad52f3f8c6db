//! Training loss: mean squared error to the label starts plus the
//! multiplier-weighted violation degrees of the prediction. Everything is in
//! the scaled output space, so durations enter the violation terms divided by
//! the output divisor.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::violation::{accumulate_subgradient, degrees_with, Multipliers, ViolationReport};

use super::model::Scaler;
use super::network::Network;

/// One training pair prepared for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSample {
    /// Network input.
    pub input: Vec<f64>,
    /// Durations in output units.
    pub durations: Vec<f64>,
    /// Label starts in output units.
    pub target: Vec<f64>,
}

impl ScaledSample {
    pub fn new(scaler: &Scaler, durations: &[u32], label_starts: &[u64]) -> Self {
        let starts: Vec<f64> = label_starts.iter().map(|&s| s as f64).collect();
        Self {
            input: scaler.scale_input(durations),
            durations: scaler.durations_in_output_units(durations),
            target: scaler.scale_output(&starts),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub mse: f64,
    pub lagrangian: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.mse + self.lagrangian
    }
}

/// Loss of a single sample and `d(loss)/d(output)`.
pub fn output_loss(
    inst: &Instance,
    sample: &ScaledSample,
    output: &[f64],
    mult: &Multipliers,
) -> (LossTerms, Vec<f64>) {
    let n = output.len() as f64;
    let mut grad = Vec::with_capacity(output.len());
    let mut sq = 0.0;
    for (y, t) in output.iter().zip(&sample.target) {
        let e = y - t;
        sq += e * e;
        grad.push(2.0 * e / n);
    }
    let report = degrees_with(inst, &sample.durations, output);
    let lagrangian = weighted(&report, mult);
    accumulate_subgradient(inst, &sample.durations, output, mult, 1.0, &mut grad);
    (
        LossTerms {
            mse: sq / n,
            lagrangian,
        },
        grad,
    )
}

fn weighted(report: &ViolationReport, mult: &Multipliers) -> f64 {
    let mut acc = 0.0;
    for (v, l) in report.precedence.iter().zip(&mult.precedence) {
        if *l != 0.0 {
            acc += l * v;
        }
    }
    for (v, l) in report.overlap.iter().zip(&mult.overlap) {
        if *l != 0.0 {
            acc += l * v;
        }
    }
    acc
}

/// Mean loss over `batch` and its gradient with respect to the flat
/// parameter vector. Samples are accumulated in order.
pub fn loss_and_grad(
    net: &Network,
    inst: &Instance,
    batch: &[&ScaledSample],
    mult: &Multipliers,
) -> Result<(LossTerms, Vec<f64>)> {
    mult.validate(inst)?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    if net.num_outputs() != inst.num_tasks() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_tasks(),
            actual: net.num_outputs(),
        });
    }
    let mut grad = vec![0.0; net.num_params()];
    let mut terms = LossTerms::default();
    let scale = 1.0 / batch.len() as f64;
    for (i, sample) in batch.iter().enumerate() {
        let (out, cache) = net.forward_cached(&sample.input)?;
        let (t, mut g) = output_loss(inst, sample, &out, mult);
        if !t.total().is_finite() {
            return Err(Error::NonFiniteLoss {
                sample: i,
                value: t.total(),
            });
        }
        terms.mse += t.mse * scale;
        terms.lagrangian += t.lagrangian * scale;
        for v in &mut g {
            *v *= scale;
        }
        net.backward(&cache, &g, &mut grad);
    }
    Ok((terms, grad))
}

/// Loss without the gradient.
pub fn loss(net: &Network, inst: &Instance, batch: &[&ScaledSample], mult: &Multipliers) -> Result<LossTerms> {
    let mut terms = LossTerms::default();
    let scale = 1.0 / batch.len().max(1) as f64;
    for sample in batch {
        let out = net.forward(&sample.input)?;
        let (t, _) = output_loss(inst, sample, &out, mult);
        terms.mse += t.mse * scale;
        terms.lagrangian += t.lagrangian * scale;
    }
    Ok(terms)
}
