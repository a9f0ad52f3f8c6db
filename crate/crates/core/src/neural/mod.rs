//! Dense networks trained without an external framework.

mod layer;
mod loss;
mod model;
mod network;

pub use layer::{Activation, DenseLayer};
pub use loss::{loss, loss_and_grad, output_loss, LossTerms, ScaledSample};
pub use model::{Model, Scaler};
pub use network::{Architecture, ArchitectureKind, BranchFamily, BranchSpec, ForwardCache, JmDepths, Network};
