//! Group SLOPE: selection of groups of predictors in linear regression with
//! control of the group false discovery rate.
//!
//! The crate covers the grouped sorted-L1 penalty and its prox, an
//! accelerated proximal gradient solver with dual-certificate stopping,
//! regularization sequences built from chi quantiles, iterative noise-level
//! estimation, a Monte-Carlo harness for gFDR and power, and a genotype
//! screening and clumping pipeline.

pub use nalgebra;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod error;
pub mod group_structure;
pub mod lambda_gen;
pub mod screen_clump;
pub mod sigma_est;
pub mod simulate;
pub mod solver;
pub mod sorted_l1;
pub mod special_fns;

pub use error::{Error, Result};
pub use group_structure::{
    build_grouped_design, group_effects, grouped_norm, prox_grouped, GroupEffects, GroupPartition,
    GroupedDesign, WeightRule,
};
pub use lambda_gen::{lambda_corrected, lambda_max, lambda_mean, lambda_sequence};
pub use screen_clump::{
    anova_pvalues, clump, dummy_encode, gene_gslope, ClumpResult, Cluster, CorrelationProvider,
    GeneReport, GenotypeMatrix, PipelineParams,
};
pub use sigma_est::{solve_with_sigma_estimation, SigmaEstimate};
pub use simulate::{
    gen_design, gen_signal, max_chi_sq_bound, run_experiment, run_experiment_threaded,
    signal_strength, DesignKind, GroupSizeSpec, SimConfig, SimulationReport,
};
pub use solver::{
    duality_gap, infeasibility, lipschitz_estimate, solve_auto, solve_gslope, solve_orthogonal,
    SolveOptions, SolveResult,
};
pub use sorted_l1::{
    dual_norm, in_dual_ball, prox_sorted_l1, solve_diagonal_slope, sorted_l1_norm, LambdaKind,
    LambdaSequence,
};
pub use special_fns::{chi_cdf, chi_quantile, f_sf, mixture_cdf, mixture_quantile, ChiMixture};
