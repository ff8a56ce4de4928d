//! Hierarchical feature fusion for unsupervised domain adaptation.
//!
//! Three feature extractors are supervised with coarse, middle and fine labels
//! through a batch-hard triplet loss plus a multi-kernel MMD term that pulls
//! source and target features together. Their outputs are concatenated and fed
//! to a fine-level linear classifier. The crate also ships a seeded synthetic
//! two-domain benchmark and the evaluation harness (top-1, class prototypes,
//! confusion tendency) used to compare variants.

pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod hierarchy;
pub mod losses;
pub mod matrix;
pub mod pipeline;
pub mod scalar;
pub mod tensornet;

pub use error::{Error, Result};
pub use hierarchy::{build_hierarchy, lego15_default, HierarchyTree, Level};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type Matrix32 = matrix::Matrix<f32>;
pub type Mlp64 = tensornet::Mlp<f64>;
pub type Mlp32 = tensornet::Mlp<f32>;
pub type Grads64 = tensornet::Grads<f64>;
pub type OptimState64 = tensornet::OptimState<f64>;
pub type KernelBank64 = losses::KernelBank<f64>;
pub type PrototypeSet64 = eval::PrototypeSet<f64>;
