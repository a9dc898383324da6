//! Two-layer graph convolutional classifier with an optional label-token
//! dictionary.
//!
//! Known train labels are mapped to tokens (`0` uncertain, `class + 1`
//! otherwise), looked up in a learnable `(C + 1) x d` table and added to the
//! first layer's output. Training masks a random subset of tokens every
//! epoch; inference feeds every train label unmasked.

mod adjacency;
mod checkpoint;
mod model;
mod train;

pub use adjacency::{normalize_adjacency, SparseMatrix};
pub use checkpoint::{Checkpoint, Tensor, CHECKPOINT_FORMAT};
pub use model::{
    count_cp_params, forward, loss_and_grads, tokenize_labels, CpGcnModel, ForwardCache,
    Gradients, GraphInputs, TokenVector,
};
pub use train::{
    epoch_rng, predict, sample_mask, train, train_with_inputs, write_history_csv, EpochRecord,
    TrainConfig, TrainOutcome, NUM_CLASSES,
};
