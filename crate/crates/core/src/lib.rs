//! Branching random walks in an i.i.d. random environment with regularly
//! varying displacements.
//!
//! The crate is split along the objects it manipulates:
//!
//! * [`offspring`] – progeny laws, probability generating functions and the
//!   quenched generation-size distributions obtained by composing them;
//! * [`environment`] – the i.i.d. environment, products of conditional means
//!   and the supercriticality checks;
//! * [`displacement`] – heavy-tailed displacement vectors in the independent,
//!   fully dependent and discrete angular regimes, plus the pattern masses of
//!   their limit measure;
//! * [`brw_sim`] – the generation-by-generation simulator with streaming
//!   retention of extremal positions;
//! * [`limit_laws`] – samplers and evaluators for the limiting objects
//!   (martingale limit, series constants, cluster laws, the mixing variable of
//!   the maximum and the limit point process);
//! * [`stats`] – empirical CDFs, KS and total-variation distances, Laplace
//!   functionals of point measures.

pub mod brw_sim;
pub mod displacement;
pub mod environment;
mod error;
pub mod limit_laws;
pub mod offspring;
pub mod rng;
mod series;
pub mod stats;

pub use brw_sim::{
    diagnostics_report, extremal_process, simulate, simulate_batch, simulate_replication,
    BrwOutcome, DiagnosticsReport, JumpDiagnostics, PointMeasure, SimConfig, SimError, Status,
};
pub use displacement::{b_n, DependenceMode, DisplacementModel, Pattern};
pub use environment::{
    check_assumptions, sample_env, AssumptionReport, EnvSequence, EnvironmentModel, Verdict,
};
pub use error::ModelError;
pub use limit_laws::{
    constant_c, estimate_w, joint_min_max_cdf, limit_max_cdf, sample_limit_pp, sample_q,
    sample_q_batch, top_two_cdf, top_two_cdf_clustered, Constant, EnvPrime, LimitConfig,
    LimitDraw, LimitError, QMode, QSample, SeriesValue, WEstimate,
};
pub use offspring::{extinct_prob_by_gen, pmf_zi, OffspringLaw, TruncatedPmf};
pub use stats::{
    chi_square_gof, count_distribution_tv, ks_distance, ks_two_sample, laplace_estimate,
    ChiSquareTest, Ecdf, KsTest, StatsError, TestFunction, DEFAULT_GRID,
};
