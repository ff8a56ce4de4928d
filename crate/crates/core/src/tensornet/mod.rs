//! Dense-layer networks with reverse-mode gradients and momentum SGD.

mod checkpoint;
mod gradcheck;
mod mlp;
mod optim;

pub(crate) use checkpoint::fmt17;
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{finite_diff_check, finite_diff_check_flat, GradCheck, MIN_COORDS};
pub use mlp::{Activation, Dense, Grads, Mlp, Tape};
pub use optim::{sgd_step, OptimState};
