//! Long-only weight rules and the functionally-generated construction.

mod generating;
mod rules;
mod spec;
mod weights;

pub use generating::{
    evaluate, ConstantGenerator, GeneratingFunction, GeneratingFunctionValue, MixedGenerator, Mixing, PowerGenerator,
    RankCut,
};
pub use rules::{
    beta_weights, dwp_generating_value, dwp_weights, fgp_weights, gamma_weights, large_rank_weights, mixed_weights,
    small_rank_weights, MixedWeights,
};
pub use spec::PortfolioSpec;
pub use weights::{check_open_simplex, check_simplex, WeightVector, SIMPLEX_TOL};
