//! Layered dense networks: the job/machine-structured (JM) model and the
//! fully connected (FC) baseline share one representation. A network is a
//! set of input branches, each reading a subset of the input vector through
//! its own stack of ReLU layers, followed by a trunk whose input is the
//! concatenation of the branch outputs (or the raw input when there are no
//! branches) and whose last layer is a linear output layer.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

use super::layer::{Activation, DenseLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Jm,
    Fc,
}

impl std::fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArchitectureKind::Jm => "jm",
            ArchitectureKind::Fc => "fc",
        })
    }
}

impl std::str::FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jm" => Ok(ArchitectureKind::Jm),
            "fc" => Ok(ArchitectureKind::Fc),
            other => Err(Error::InvalidArgument(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchFamily {
    Job,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub family: BranchFamily,
    /// Input positions read by this branch, in order.
    pub inputs: Vec<usize>,
    /// Widths of the branch's ReLU layers.
    pub widths: Vec<usize>,
}

/// Layer sizing of the JM network. Widths follow the instance: job layers
/// have `2 * num_machines` units, machine layers `2 * num_jobs`, shared
/// layers `2 * num_jobs * num_machines`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JmDepths {
    pub job_layers: usize,
    pub machine_layers: usize,
    pub shared_layers: usize,
}

impl Default for JmDepths {
    fn default() -> Self {
        Self {
            job_layers: 2,
            machine_layers: 2,
            shared_layers: 2,
        }
    }
}

/// Everything needed to rebuild a network's shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ArchitectureKind,
    pub num_inputs: usize,
    pub branches: Vec<BranchSpec>,
    /// Widths of the trunk's hidden ReLU layers.
    pub hidden: Vec<usize>,
    pub num_outputs: usize,
}

impl Architecture {
    pub fn jm(inst: &Instance, depths: JmDepths) -> Self {
        let (j, m) = (inst.num_jobs(), inst.num_machines());
        let mut branches = Vec::with_capacity(j + m);
        for job in 0..j {
            branches.push(BranchSpec {
                family: BranchFamily::Job,
                inputs: (0..inst.tasks_per_job()).map(|t| inst.task(job, t)).collect(),
                widths: vec![2 * m; depths.job_layers],
            });
        }
        for machine in 0..m {
            branches.push(BranchSpec {
                family: BranchFamily::Machine,
                inputs: inst.machine_tasks(machine).to_vec(),
                widths: vec![2 * j; depths.machine_layers],
            });
        }
        Self {
            kind: ArchitectureKind::Jm,
            num_inputs: inst.num_tasks(),
            branches,
            hidden: vec![2 * j * m; depths.shared_layers],
            num_outputs: inst.num_tasks(),
        }
    }

    /// Three-hidden-layer fully connected network whose parameter count is as
    /// close as possible to `target_params`.
    ///
    /// The common width `h` solves the quadratic count equation and is
    /// rounded; the last hidden layer's width is then re-solved from the
    /// (linear) remaining count, which keeps the mismatch below half the
    /// per-unit cost of that layer.
    pub fn fc_matching(num_inputs: usize, num_outputs: usize, target_params: usize) -> Self {
        let depth = 3usize;
        let (i, o, p) = (num_inputs as f64, num_outputs as f64, target_params as f64);
        // (depth-1) h^2 + (i + 1 + (depth-1) + o) h + o - p = 0
        let a = (depth - 1) as f64;
        let b = i + 1.0 + a + o;
        let c = o - p;
        let h = ((-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)).round().max(1.0) as usize;
        let fixed = num_inputs * h + h + (depth - 2) * (h * h + h) + num_outputs;
        let per_unit = h + 1 + num_outputs;
        let last = ((target_params as f64 - fixed as f64) / per_unit as f64).round().max(1.0) as usize;
        let mut hidden = vec![h; depth];
        hidden[depth - 1] = last;
        let equal = Self::fc(num_inputs, num_outputs, vec![h; depth]);
        let adjusted = Self::fc(num_inputs, num_outputs, hidden);
        let miss = |a: &Architecture| a.num_params().abs_diff(target_params);
        if miss(&adjusted) < miss(&equal) {
            adjusted
        } else {
            equal
        }
    }

    pub fn fc(num_inputs: usize, num_outputs: usize, hidden: Vec<usize>) -> Self {
        Self {
            kind: ArchitectureKind::Fc,
            num_inputs,
            branches: Vec::new(),
            hidden,
            num_outputs,
        }
    }

    /// FC baseline matched to the JM network of `inst`.
    pub fn fc_for(inst: &Instance, depths: JmDepths) -> Self {
        let target = Architecture::jm(inst, depths).num_params();
        Self::fc_matching(inst.num_tasks(), inst.num_tasks(), target)
    }

    /// `(inputs, outputs, activation)` of every layer in parameter order:
    /// branches first, then the trunk.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        let mut shapes = Vec::new();
        let mut trunk_in = 0;
        for br in &self.branches {
            let mut prev = br.inputs.len();
            for &w in &br.widths {
                shapes.push((prev, w, Activation::Relu));
                prev = w;
            }
            trunk_in += prev;
        }
        if self.branches.is_empty() {
            trunk_in = self.num_inputs;
        }
        let mut prev = trunk_in;
        for &w in &self.hidden {
            shapes.push((prev, w, Activation::Relu));
            prev = w;
        }
        shapes.push((prev, self.num_outputs, Activation::Identity));
        shapes
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o, _)| i * o + o).sum()
    }

    /// Weights feeding the first layer of every branch (the FC baseline has
    /// no branches and reports the weights of its first layer).
    pub fn input_connections(&self) -> usize {
        if self.branches.is_empty() {
            return self.num_inputs * self.hidden.first().copied().unwrap_or(self.num_outputs);
        }
        self.branches
            .iter()
            .map(|b| b.inputs.len() * b.widths.first().copied().unwrap_or(0))
            .sum()
    }

    /// Width of the concatenated branch outputs (the trunk's input).
    pub fn encoded_width(&self) -> usize {
        if self.branches.is_empty() {
            return self.num_inputs;
        }
        self.branches
            .iter()
            .map(|b| b.widths.last().copied().unwrap_or(b.inputs.len()))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(format!("architecture: {msg}")));
        if self.num_inputs == 0 || self.num_outputs == 0 {
            return bad("input and output sizes must be positive".into());
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return bad("hidden widths must be positive".into());
        }
        for (k, br) in self.branches.iter().enumerate() {
            if br.inputs.is_empty() || br.widths.is_empty() || br.widths.contains(&0) {
                return bad(format!("branch {k} is empty"));
            }
            if let Some(&i) = br.inputs.iter().find(|&&i| i >= self.num_inputs) {
                return bad(format!("branch {k} reads input {i} of {}", self.num_inputs));
            }
        }
        match self.kind {
            ArchitectureKind::Fc if !self.branches.is_empty() => {
                bad("fully connected networks have no branches".into())
            }
            ArchitectureKind::Jm => {
                for family in [BranchFamily::Job, BranchFamily::Machine] {
                    let mut seen = vec![0usize; self.num_inputs];
                    for br in self.branches.iter().filter(|b| b.family == family) {
                        for &i in &br.inputs {
                            seen[i] += 1;
                        }
                    }
                    if seen.iter().any(|&c| c != 1) {
                        return bad(format!("{family:?} branches do not partition the inputs"));
                    }
                }
                Ok(())
            }
            ArchitectureKind::Fc => Ok(()),
        }
    }
}

/// Intermediate values of one forward pass, indexed by layer.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub inputs: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    layers: Vec<DenseLayer>,
    branch_layers: Vec<Range<usize>>,
    trunk_layers: Range<usize>,
    offsets: Vec<usize>,
    num_params: usize,
}

impl Network {
    /// All-zero parameters.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let layers: Vec<DenseLayer> = arch
            .layer_shapes()
            .into_iter()
            .map(|(i, o, a)| DenseLayer::zeros(i, o, a))
            .collect();
        let mut branch_layers = Vec::with_capacity(arch.branches.len());
        let mut at = 0;
        for br in &arch.branches {
            branch_layers.push(at..at + br.widths.len());
            at += br.widths.len();
        }
        let trunk_layers = at..layers.len();
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.num_params();
        }
        Ok(Self {
            arch,
            layers,
            branch_layers,
            trunk_layers,
            offsets,
            num_params: total,
        })
    }

    /// Uniform `(-sqrt(6 / fan_in), sqrt(6 / fan_in))` weights and zero
    /// biases, drawn layer by layer from a ChaCha8 stream seeded by `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_inputs(&self) -> usize {
        self.arch.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.arch.num_outputs
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.arch.num_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.arch.num_inputs,
                actual: x.len(),
            });
        }
        let n = self.layers.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n),
            pre_activations: Vec::with_capacity(n),
        };
        let mut encoded = Vec::with_capacity(self.arch.encoded_width());
        if self.arch.branches.is_empty() {
            encoded.extend_from_slice(x);
        }
        for (br, range) in self.arch.branches.iter().zip(&self.branch_layers) {
            let mut h: Vec<f64> = br.inputs.iter().map(|&i| x[i]).collect();
            for layer in &self.layers[range.clone()] {
                let mut pre = Vec::new();
                let out = layer.forward(&h, &mut pre);
                cache.inputs.push(h);
                cache.pre_activations.push(pre);
                h = out;
            }
            encoded.extend_from_slice(&h);
        }
        let mut h = encoded;
        for layer in &self.layers[self.trunk_layers.clone()] {
            let mut pre = Vec::new();
            let out = layer.forward(&h, &mut pre);
            cache.inputs.push(h);
            cache.pre_activations.push(pre);
            h = out;
        }
        Ok((h, cache))
    }

    /// Accumulates `d(loss)/d(theta)` into the flat `grad` given
    /// `d(loss)/d(output)`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.num_params);
        let mut g = grad_output.to_vec();
        let mut next = Vec::new();
        let trunk = self.trunk_layers.clone();
        let has_branches = !self.arch.branches.is_empty();
        for k in trunk.clone().rev() {
            let layer = &self.layers[k];
            let slice = &mut grad[self.offsets[k]..self.offsets[k] + layer.num_params()];
            let want_input = k > trunk.start || has_branches;
            layer.backward(
                &cache.inputs[k],
                &cache.pre_activations[k],
                &g,
                slice,
                want_input.then_some(&mut next),
            );
            std::mem::swap(&mut g, &mut next);
        }
        if !has_branches {
            return;
        }
        // `g` is now the gradient with respect to the concatenated encodings.
        let mut at = 0;
        for range in &self.branch_layers {
            let width = self.layers[range.end - 1].outputs;
            let mut gb = g[at..at + width].to_vec();
            at += width;
            for k in range.clone().rev() {
                let layer = &self.layers[k];
                let slice = &mut grad[self.offsets[k]..self.offsets[k] + layer.num_params()];
                let want_input = k > range.start;
                layer.backward(
                    &cache.inputs[k],
                    &cache.pre_activations[k],
                    &gb,
                    slice,
                    want_input.then_some(&mut next),
                );
                if want_input {
                    std::mem::swap(&mut gb, &mut next);
                }
            }
        }
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params);
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::DimensionMismatch {
                expected: self.num_params,
                actual: params.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    /// Replaces one layer's parameters; used when loading saved models.
    pub(crate) fn set_layer(&mut self, k: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<()> {
        let layer = self
            .layers
            .get_mut(k)
            .ok_or_else(|| Error::Format(format!("no layer {k}")))?;
        if weights.len() != layer.weights.len() || bias.len() != layer.bias.len() {
            return Err(Error::Format(format!(
                "layer {k}: expected {}x{} weights and {} biases, got {} and {}",
                layer.outputs,
                layer.inputs,
                layer.outputs,
                weights.len(),
                bias.len()
            )));
        }
        layer.weights = weights;
        layer.bias = bias;
        Ok(())
    }

    /// Gradient step `theta <- theta - alpha * grad`.
    pub fn sgd_step(&mut self, grad: &[f64], alpha: f64) -> Result<()> {
        if grad.len() != self.num_params {
            return Err(Error::DimensionMismatch {
                expected: self.num_params,
                actual: grad.len(),
            });
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {alpha}")));
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        let mut at = 0;
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *p -= alpha * grad[at];
                at += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;

    fn square(j: usize, m: usize) -> Instance {
        let machine = (0..j).map(|k| (0..m).map(|t| (t + k) % m).collect()).collect();
        let duration = (0..j).map(|_| vec![1; m]).collect();
        Instance::new(m, machine, duration).unwrap()
    }

    #[test]
    fn jm_shapes_follow_instance() {
        let inst = square(6, 4);
        let arch = Architecture::jm(&inst, JmDepths::default());
        arch.validate().unwrap();
        assert_eq!(arch.branches.len(), 10);
        assert_eq!(arch.encoded_width(), 6 * 8 + 4 * 12);
        assert_eq!(arch.hidden, vec![48, 48]);
        // 6 jobs x (4*8+8 + 8*8+8) + 4 machines x (6*12+12 + 12*12+12)
        // + 96*48+48 + 48*48+48 + 48*24+24
        assert_eq!(arch.num_params(), 672 + 960 + 4656 + 2352 + 1176);
    }

    #[test]
    fn fc_parity_within_one_percent() {
        for (j, m) in [(2, 2), (6, 4), (10, 5), (15, 5), (20, 10), (50, 10)] {
            let inst = square(j, m);
            let jm = Architecture::jm(&inst, JmDepths::default()).num_params();
            let fc = Architecture::fc_for(&inst, JmDepths::default());
            assert_eq!(fc.hidden.len(), 3);
            let rel = fc.num_params().abs_diff(jm) as f64 / jm as f64;
            assert!(rel <= 0.01 || (j, m) == (2, 2), "{j}x{m}: {rel}");
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let inst = two_by_two();
        let net = Network::zeros(Architecture::jm(&inst, JmDepths::default())).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let inst = square(3, 3);
        let arch = Architecture::jm(&inst, JmDepths::default());
        let a = Network::init(arch.clone(), 11).unwrap();
        let b = Network::init(arch.clone(), 11).unwrap();
        let c = Network::init(arch.clone(), 12).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
        for (layer, (i, o, _)) in a.layers().iter().zip(arch.layer_shapes()) {
            assert_eq!((layer.inputs, layer.outputs), (i, o));
            let bound = (6.0 / i as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn sgd_identities() {
        let inst = square(2, 2);
        let mut net = Network::init(Architecture::jm(&inst, JmDepths::default()), 5).unwrap();
        let theta = net.params();
        net.sgd_step(&vec![0.0; theta.len()], 0.1).unwrap();
        assert_eq!(net.params(), theta);
        net.sgd_step(&theta, 1.0).unwrap();
        assert!(net.params().iter().all(|&p| p == 0.0));
        assert!(net.sgd_step(&vec![f64::NAN; theta.len()], 0.1).is_err());
        assert!(net.sgd_step(&theta, 0.0).is_err());
    }

    #[test]
    fn half_steps_equal_full_step() {
        let inst = square(3, 2);
        let arch = Architecture::fc_for(&inst, JmDepths::default());
        let mut a = Network::init(arch.clone(), 1).unwrap();
        let mut b = a.clone();
        let g: Vec<f64> = (0..a.num_params()).map(|i| (i % 7) as f64 * 0.25 - 0.5).collect();
        a.sgd_step(&g, 0.5).unwrap();
        b.sgd_step(&g, 0.25).unwrap();
        b.sgd_step(&g, 0.25).unwrap();
        for (x, y) in a.params().iter().zip(b.params()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn jm_partition_is_validated() {
        let inst = square(3, 3);
        let mut arch = Architecture::jm(&inst, JmDepths::default());
        arch.branches[0].inputs = vec![0, 1, 1];
        assert!(arch.validate().is_err());
    }
}
