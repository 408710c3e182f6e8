//! Dense networks with exact backpropagation, optimizers and checkpoints.

mod arch;
pub mod checkpoint;
mod gradcheck;
mod net;
mod optim;
mod schedule;

pub use arch::{logistic, Activation, ArchDescriptor, SELU_ALPHA, SELU_LAMBDA};
pub use gradcheck::{grad_check, ConstantLoss, LinearLoss, QuadraticLoss, ScalarLoss, FD_STEP};
pub use net::{Cache, Gradients, NetParams};
pub use optim::{OptAlgorithm, OptConfig, OptState};
pub use schedule::{cosine_annealing, lr_sgdr, SgdrSchedule};
