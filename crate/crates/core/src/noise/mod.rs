//! Pauli channels, signed Pauli maps, dense superoperators and noise processes.

pub mod channel;
pub mod model;
pub mod process;
pub mod signed;
pub mod superop;

pub use channel::{depolarizing_channel, depolarizing_on, split_channel, ChannelShape, PauliChannel};
pub use model::{ChannelSpec, EncodeDecode, Fluctuation, KindNoise, NoiseRule, NoiseScenario, NoiseSpec, NoiseTable, SupportScope};
pub use process::{coherent_step, NoiseProcess, NoiseStep};
pub use signed::{compose, l1_pauli_norm, quasi_inverse, SignedPauliMap};
pub use superop::{coherent_rotation, pauli_twirl, SuperOperator};
