//! Numeric building blocks: tensors, named parameter sets, seeded RNG,
//! Adam, and the finite-difference gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod params;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use params::ParamSet;
pub use rng::{init_uniform, Rng};
pub use tensor::{matvec, sigmoid, Tensor};
