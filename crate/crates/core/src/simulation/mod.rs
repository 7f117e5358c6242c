//! Monte Carlo harness: the factor-grid simulation and the Gaussian
//! verification model.

mod dgp;
mod experiment;
mod model1;

pub use dgp::{
    generate_obs, generate_obs_full, generate_population, select_rct, selection_logit,
    true_bias_oracle, BiasOracle, Effect, Population, BETA_STAR, PI_C,
};
pub use experiment::{
    fuse_replicate, lambda_label, run_experiment, run_experiment_with_bias, run_replication,
    table1_scenarios, EstimatorPair, OracleKind, ReplicateResult, Scenario, SimReport, SimRow,
    B_GRID, N_OBS_GRID,
};
pub use model1::{
    difference_in_means, model1_generate, model1_summaries, phase_mse, phase_sweep,
    verify_amse, verify_coverage, AmseReport, CoverageReport, Model1Params, PhaseRow,
};
