//! Training objectives with analytic gradients w.r.t. their input features.

mod ce;
mod mmd;
mod triplet;

pub use ce::{cross_entropy, softmax};
pub use mmd::{median_bandwidth, mmd_loss, Bandwidth, KernelBank, MmdOutput, BANDWIDTH_SCALES};
pub use triplet::{
    mine_all_triplets, mine_hard_triplets, pairwise_distances, triplet_loss, Triplet,
};
