//! Operations, randomized dynamic circuits, twirling and maximum operation counts.

pub mod axis;
pub mod compile;
pub mod dynamic;
pub mod gate;
pub mod library;
pub mod twirl;

pub use axis::HermitianAxis;
pub use compile::{max_operation_counts, CompiledCircuit, CompiledOp, KindInfo, MaxCounts};
pub use dynamic::{Case, Circuit, Condition, Observable, ObservableTerm, OutcomeRef, Outcomes, Slot};
pub use gate::{Gate, OpClass, Operation, Role};
pub use library::{spatial_circuit, trotter_circuit};
pub use twirl::{twirl_expand, Expansion, PauliFrame, TwirlChoice, TwirlPlan, TwirlRow};
