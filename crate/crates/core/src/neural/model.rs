use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::network::Network;

/// Fixed divisors that bring durations and start times to order one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub input_divisor: f64,
    pub output_divisor: f64,
}

impl Scaler {
    pub fn new(input_divisor: f64, output_divisor: f64) -> Result<Self> {
        for (name, v) in [("input", input_divisor), ("output", output_divisor)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} divisor must be positive, got {v}")));
            }
        }
        Ok(Self {
            input_divisor,
            output_divisor,
        })
    }

    /// Largest duration and largest label makespan over the training data.
    pub fn fit<'a>(durations: impl IntoIterator<Item = &'a [u32]>, makespans: impl IntoIterator<Item = u64>) -> Result<Self> {
        let max_d = durations
            .into_iter()
            .flat_map(|d| d.iter().copied())
            .max()
            .ok_or_else(|| Error::InvalidArgument("cannot fit a scaler on no data".into()))?;
        let max_u = makespans
            .into_iter()
            .max()
            .ok_or_else(|| Error::InvalidArgument("cannot fit a scaler on no data".into()))?;
        Self::new(f64::from(max_d), max_u as f64)
    }

    pub fn scale_input(&self, durations: &[u32]) -> Vec<f64> {
        durations.iter().map(|&d| f64::from(d) / self.input_divisor).collect()
    }

    /// Durations expressed in output units, as seen by the violation terms.
    pub fn durations_in_output_units(&self, durations: &[u32]) -> Vec<f64> {
        durations.iter().map(|&d| f64::from(d) / self.output_divisor).collect()
    }

    pub fn scale_output(&self, starts: &[f64]) -> Vec<f64> {
        starts.iter().map(|&s| s / self.output_divisor).collect()
    }

    pub fn unscale_output(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| v * self.output_divisor).collect()
    }
}

/// A network together with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub network: Network,
    pub scaler: Scaler,
}

impl Model {
    /// Predicted start times, in time units, for one duration vector.
    pub fn predict(&self, durations: &[u32]) -> Result<Vec<f64>> {
        let y = self.network.forward(&self.scaler.scale_input(durations))?;
        Ok(self.scaler.unscale_output(&y))
    }
}
