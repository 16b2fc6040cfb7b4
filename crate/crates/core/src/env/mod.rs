//! Tabular environments: deterministic MDPs with lava, ASCII grid maps,
//! the bundled LavaWorld, exact policy evaluation and the lava-suppression
//! learner.

mod grid;
mod lava;
mod mdp;
mod solve;

pub use grid::{
    build_lavaworld, Cell, GridMap, LavaWorld, ACTION_NAMES, DEFAULT_CONTINUATION, LAVAWORLD_MAP,
    LAVAWORLD_STATES,
};
pub use lava::{binary_lp_proxy, discovery_probability, LavaLearner, LpOracle, SUPPRESSION};
pub use mdp::{
    ActionValues, Next, QTable, StepOutcome, TabularMdp, Termination, Trajectory, TrajectoryStep,
};
pub use solve::{
    exact_lp_oracle, expected_return, greedy_policy, greedy_success_probability, learning_progress,
    modulated_policy, modulated_success_probability, occupancy, optimal_q, state_values,
    success_matrix, success_probabilities, success_probability, SOLVE_TOLERANCE,
    VALUE_ITERATION_TOLERANCE,
};
