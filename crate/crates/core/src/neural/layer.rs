use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// `out = activation(W x + b)` with `W` stored row-major, `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn num_params(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    /// Writes the pre-activations into `pre` and returns the activations.
    pub fn forward(&self, x: &[f64], pre: &mut Vec<f64>) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        pre.clear();
        pre.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi)
        }));
        pre.iter().map(|&z| self.activation.apply(z)).collect()
    }

    /// Accumulates parameter gradients into `grad` (weights then bias, the
    /// layer's slice of the flat gradient) and, if requested, writes the
    /// gradient with respect to the input into `grad_in`.
    pub fn backward(
        &self,
        x: &[f64],
        pre: &[f64],
        grad_out: &[f64],
        grad: &mut [f64],
        grad_in: Option<&mut Vec<f64>>,
    ) {
        let (gw, gb) = grad.split_at_mut(self.inputs * self.outputs);
        let delta: Vec<f64> = grad_out
            .iter()
            .zip(pre)
            .map(|(g, &z)| g * self.activation.derivative(z))
            .collect();
        for (o, &dz) in delta.iter().enumerate() {
            if dz == 0.0 {
                continue;
            }
            gb[o] += dz;
            for (gwi, xi) in gw[o * self.inputs..(o + 1) * self.inputs].iter_mut().zip(x) {
                *gwi += dz * xi;
            }
        }
        if let Some(gi) = grad_in {
            gi.clear();
            gi.resize(self.inputs, 0.0);
            for (o, &dz) in delta.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                for (g, w) in gi.iter_mut().zip(&self.weights[o * self.inputs..(o + 1) * self.inputs]) {
                    *g += w * dz;
                }
            }
        }
    }
}
