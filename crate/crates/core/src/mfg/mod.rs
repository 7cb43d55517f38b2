//! Discrete-time mean-field game for an intersection crossed by N agents.
//!
//! The state j is the number of agents that moved in the previous round; each
//! agent chooses to wait (0) or move (1). Up to `threshold` movers get
//! through; beyond that the intersection jams. The solver alternates a
//! forward pass of the state distribution with backward induction on action
//! values and a damped SoftMax policy update until both stop changing.

pub mod bellman;
pub mod flow;
pub mod kernel;
pub mod output;
pub mod params;
pub mod policy;
pub mod reward;
pub mod simulate;
pub mod solver;

pub use bellman::{bellman_backward, policy_evaluation, ActionValueTable};
pub use flow::{evolve_distribution, forward_flow};
pub use kernel::transition_distribution;
pub use params::{InitialState, MfgParams, RewardMode, RewardTable, StateDistribution};
pub use policy::{softmax_policy, PolicyTable};
pub use reward::{group_reward, per_agent_reward, utility, MOVE, WAIT};
pub use simulate::{simulate_population, EmpiricalStats};
pub use solver::{exploitability, solve_equilibrium, EquilibriumResult, Residual, SolveStatus, SolverOptions};
