//! Statevector simulation of the quantum alternating operator ansatz.
//!
//! Cost tables and mixers are built once per problem; angle schedules are
//! then evaluated, differentiated and optimized against them.

pub mod angles;
pub mod basis;
pub mod cost;
pub mod error;
pub mod grad;
pub mod grover_fast;
pub mod mixer;
pub mod problems;
pub mod sim;

pub use angles::{
    find_angles, find_angles_random_restarts, median_angles, OptimizerConfig, RoundRecord,
};
pub use basis::{BasisSet, Bitstring, Constraint};
pub use cost::{build_cost_table, threshold_transform, CostTable, Orientation};
pub use error::{QaoaError, Result};
pub use grad::{finite_difference_gradient, gradient, AngleGradient};
pub use grover_fast::{compress_cost, simulate_compressed, CompressedCost, CompressedState};
pub use mixer::{
    load_mixer, mixer_clique, mixer_custom, mixer_grover, mixer_ring, mixer_x, save_mixer, Mixer,
    MixerKind,
};
pub use sim::{exp_value, initial_state, simulate, AngleSchedule, Evaluator, Mixers, SimResult, StateVector};
