//! Multi-scale low rank matrix decomposition.
//!
//! Decomposes a data matrix into a sum of block-wise low rank components at
//! multiple scales by solving a convex program with ADMM. Includes the
//! matrix-completion variant, random cycle spinning, closed-form
//! regularization parameters, and numerical checks of the recovery theory.

pub mod error;
pub mod matrix;
pub mod partition;
pub mod regularization;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{axpby, load_matrix, save_matrix, DenseMatrix, MatrixFormat};
pub use partition::{
    cyclic_shift, cyclic_unshift, draw_shift, extract_block, embed_block, BlockIndex,
    MultiScalePartition, PartitionMode, PartitionSpec, Scale, ScaleKind, Shift,
};
