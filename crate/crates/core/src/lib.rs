//! Mean-field-game edge caching: content demand, a stochastic-geometry radio
//! layer, a coupled HJB/FPK solver, caching policies and Monte-Carlo
//! evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod error;
pub mod quadrature;
pub mod radio;
pub mod rng;

pub use demand::{crp_sample_request, expected_distinct_files, ou_step, CrpState, DemandState, OuParams};
pub use error::{Error, Result};
pub use radio::{
    active_probability, average_rate, empirical_sinr, mean_field_interference, sample_network, Area, Fading,
    NetworkRealization, RadioEnvironment,
};
pub mod model;
pub mod solver;

pub use model::ContentParams;
pub use solver::{
    mf_overlap, optimal_caching_fraction, solve_fpk_forward, solve_hjb_backward, solve_mfe, DensitySurface, Field,
    InitialDensity, Lattice, MfeSolution, PolicyField, PopularityInit, SolverConfig, TerminalCondition, ValueSurface,
};
pub mod policies;
pub mod simulate;

pub use policies::{decide, observe_popularity, DecisionContext, IpiModel, PolicyKind};
pub use simulate::{aggregate, run_replication, run_replications, CostLedger, SimConfig, Summary};
