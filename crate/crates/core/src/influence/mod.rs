//! User influence: teleporting PageRank, tail normalization, continuous
//! power-law fitting with a parametric-bootstrap KS test, and the
//! influential/ordinary information-flow matrix.

mod flow;
mod pagerank;
mod powerlaw;

use thiserror::Error;

pub use flow::{flow_matrix, influential_set, FlowMatrix};
pub use pagerank::{pagerank, pagerank_observed, InfluenceScores, PageRankParams};
pub use powerlaw::{
    alpha_mle, ccdf, fit_power_law, fit_with_gof, ks_gof, ks_statistic, normalize_scores,
    power_law_cdf, NormalizedScores, PowerLawFit, DEFAULT_BINS, DEFAULT_REPLICATES, MIN_TAIL,
    P_VALUE_THRESHOLD, REFERENCE_ALPHA,
};

#[derive(Debug, Error, PartialEq)]
pub enum InfluenceError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("damping factor {0} outside [0.8, 0.9]")]
    InvalidBeta(f64),
    #[error("no convergence after {iterations} iterations (last L1 residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("need at least 3 distinct scores and 2 occupied bins (found {occupied_bins} bins)")]
    DegenerateDistribution { occupied_bins: usize },
    #[error("power-law tail has {n_tail} values, need at least {needed}")]
    InsufficientTail { n_tail: usize, needed: usize },
    #[error("value {0} is below the lower bound of the fit")]
    Domain(f64),
    #[error("all tail values sit at the lower bound; exponent is unbounded")]
    FlatTail,
    #[error("need at least {needed} bootstrap replicates, got {got}")]
    TooFewReplicates { needed: usize, got: usize },
}
