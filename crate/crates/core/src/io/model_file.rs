//! Trained models as JSON: architecture, scaler, per-layer parameter arrays
//! with declared lengths, final multipliers and training metadata. Floats are
//! written with round-trip precision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{Activation, Architecture, ArchitectureKind, Model, Network, Scaler};
use crate::training::TrainingMeta;
use crate::violation::Multipliers;

pub const MODEL_FORMAT: &str = "jobshop-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: Model,
    pub multipliers: Multipliers,
    pub training: Option<TrainingMeta>,
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights_len: usize,
    weights: Vec<f64>,
    bias_len: usize,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    architecture: Architecture,
    scaler: Scaler,
    layers: Vec<LayerRepr>,
    multipliers: Multipliers,
    #[serde(default)]
    training: Option<TrainingMeta>,
}

pub fn model_to_string(artifact: &ModelArtifact) -> Result<String> {
    let net = &artifact.model.network;
    let layers = net
        .layers()
        .iter()
        .map(|l| LayerRepr {
            inputs: l.inputs,
            outputs: l.outputs,
            activation: l.activation,
            weights_len: l.weights.len(),
            weights: l.weights.clone(),
            bias_len: l.bias.len(),
            bias: l.bias.clone(),
        })
        .collect();
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        architecture: net.architecture().clone(),
        scaler: artifact.model.scaler,
        layers,
        multipliers: artifact.multipliers.clone(),
        training: artifact.training.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<ModelArtifact> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let format = value.get("format").and_then(|v| v.as_str()).unwrap_or_default();
    if format != MODEL_FORMAT {
        return Err(Error::Format(format!("not a model file (format `{format}`)")));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(Error::Version {
            expected: MODEL_VERSION,
            found: version,
        });
    }
    if let Some(tag) = value.pointer("/architecture/kind").and_then(|v| v.as_str()) {
        tag.parse::<ArchitectureKind>()
            .map_err(|_| Error::Format(format!("unknown architecture tag `{tag}`")))?;
    }
    let file: ModelFile = serde_json::from_value(value)?;
    let Scaler {
        input_divisor,
        output_divisor,
    } = file.scaler;
    let scaler = Scaler::new(input_divisor, output_divisor)?;
    let mut network = Network::zeros(file.architecture)?;
    let shapes = network.architecture().layer_shapes();
    if shapes.len() != file.layers.len() {
        return Err(Error::Format(format!(
            "architecture has {} layers, file has {}",
            shapes.len(),
            file.layers.len()
        )));
    }
    for (k, (layer, (i, o, a))) in file.layers.into_iter().zip(shapes).enumerate() {
        if (layer.inputs, layer.outputs, layer.activation) != (i, o, a) {
            return Err(Error::Format(format!(
                "layer {k} is {}x{}, architecture requires {o}x{i}",
                layer.outputs, layer.inputs
            )));
        }
        if layer.weights.len() != layer.weights_len || layer.bias.len() != layer.bias_len {
            return Err(Error::Format(format!("layer {k}: array length differs from declared length")));
        }
        if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("layer {k}: non-finite parameter")));
        }
        network.set_layer(k, layer.weights, layer.bias)?;
    }
    if file.multipliers.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Format("negative multiplier".into()));
    }
    Ok(ModelArtifact {
        model: Model { network, scaler },
        multipliers: file.multipliers,
        training: file.training,
    })
}

pub fn save_model(path: impl AsRef<Path>, artifact: &ModelArtifact) -> Result<()> {
    fs::write(path, model_to_string(artifact)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    model_from_str(&fs::read_to_string(path)?)
}

/// Loads a model and checks its architecture tag.
pub fn load_model_expecting(path: impl AsRef<Path>, kind: ArchitectureKind) -> Result<ModelArtifact> {
    let artifact = load_model(path)?;
    let found = artifact.model.network.architecture().kind;
    if found != kind {
        return Err(Error::ArchitectureMismatch {
            expected: kind.to_string(),
            found: found.to_string(),
        });
    }
    Ok(artifact)
}
