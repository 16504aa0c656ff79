//! Dense three-way tensors, CP decomposition by alternating least squares,
//! and projection of new slices onto a trained decomposition.

mod cp;
mod dense;
mod online;

pub use cp::{cp_als, CpFactors, CpOptions};
pub use dense::{khatri_rao, refold, unfold, Tensor3};
pub use online::project_new;
