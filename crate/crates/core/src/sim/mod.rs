//! Density-matrix simulation of noisy dynamic circuits.

pub mod exact;
pub mod program;
pub mod shot;
pub mod state;

pub use exact::{enumerate, exact_expectation, ideal_expectation, Branch, ExactNoise};
pub use program::{Action, Kernel, NoiseKernel, PrimitiveSite, Program};
pub use shot::{Corrector, Executor, NativeNoise, Shot};
pub use state::DensityState;
