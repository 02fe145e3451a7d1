//! Nash equilibria of the proof-of-work mining game when each miner's
//! available computing resource is uncertain.
//!
//! Three best-response back-ends are provided:
//!
//! * [`deterministic`]: nominal resources, closed-form equilibrium;
//! * [`bti`]: Gaussian resource error, Bernstein-type inequality;
//! * [`cvar`]: any distribution with known mean and variance, worst-case CVaR.
//!
//! [`equilibrium`] runs the sequential best-response iteration over any of
//! them, and [`validate`] checks the resulting strategies by sampling.
//!
//! All numerics are generic over [`Scalar`] (`f32`, `f64`); the `*F64`
//! aliases below fix the usual double-precision instantiation.

pub mod bti;
pub mod cvar;
pub mod deterministic;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod model;
pub mod options;
pub mod scalar;
pub mod search;
pub mod validate;

pub use error::{GameError, Result};
pub use equilibrium::{solve_equilibrium, solve_equilibrium_with, EquilibriumResult, SolverMode};
pub use model::{Context, GameConfig, MinerParams, RewardModel, StrategyProfile};
pub use options::SolverOptions;
pub use scalar::Scalar;

pub type RewardModelF64 = RewardModel<f64>;
pub type MinerParamsF64 = MinerParams<f64>;
pub type GameConfigF64 = GameConfig<f64>;
pub type StrategyProfileF64 = StrategyProfile<f64>;
pub type ContextF64 = Context<f64>;
pub type SolverOptionsF64 = SolverOptions<f64>;
pub type EquilibriumResultF64 = EquilibriumResult<f64>;

pub type RewardModelF32 = RewardModel<f32>;
pub type MinerParamsF32 = MinerParams<f32>;
pub type GameConfigF32 = GameConfig<f32>;
pub type StrategyProfileF32 = StrategyProfile<f32>;
