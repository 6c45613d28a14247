//! Chance-constrained optimization toolkit.
//!
//! The core method is a two-layer randomized optimizer: candidate decisions
//! are sampled uniformly over a box (layer one), each candidate's
//! constraint-violation probability is estimated by Monte Carlo against a
//! shared disturbance batch (layer two), candidates estimated above
//! `alpha - alpha_eps` are discarded, and the cheapest survivor greedily
//! updates the incumbent until the iteration budget runs out.
//!
//! Alongside it the crate ships:
//!
//! - a scenario-approach baseline (`scenario`): the sample-complexity lower
//!   bound and a sampled-search solver for the scenario program,
//! - a classical randomized local search (`random_search`),
//! - a Monte Carlo study harness (`study`) that repeats either method over
//!   independent trials, scores every final answer with a high-sample
//!   violation oracle, and emits CSV / SVG,
//! - a bundled non-convex 2-D benchmark (`problem::make_benchmark`).
//!
//! Everything stochastic is driven by splittable seeded streams
//! (`sampling::RngStream`), so results are bit-reproducible for a fixed
//! root seed regardless of worker count.

pub mod error;
pub mod explorer;
pub mod problem;
pub mod random_search;
pub mod sampling;
pub mod scenario;
pub mod study;
pub mod violation;

pub use error::{Error, Result};
pub use explorer::{
    explore, explore_in_trial, filter_feasible, Candidate, ExplorerConfig, ExplorerTrace,
    IterationRecord,
};
pub use problem::{
    make_benchmark, problem_by_name, BoxDomain, ChanceConstrainedProblem, ConstraintFn, CostFn,
    DecisionPoint, DisturbanceModel, DisturbanceSample, SamplerFn, BENCHMARK_NAME,
};
pub use random_search::{
    random_optimize, NeighborDistribution, NeighborhoodSpec, SearchConfig, SearchOutcome,
};
pub use sampling::{
    sample_decisions, sample_disturbances, DisturbanceSampler, PolarNormal, RngStream,
    StreamPurpose, MAX_ITERATIONS, MAX_TRIALS, NORMAL_METHOD,
};
pub use scenario::{
    scenario_bound, solve_scenario, solve_scenario_in_trial, ScenarioConfig, ScenarioReport,
    ScenarioSolution,
};
pub use study::{
    aggregate_rows, emit_csv, emit_scatter_plot, parse_csv, run_study, write_csv, write_trace_csv,
    MethodConfig, StudyAggregates, StudyConfig, StudyResult, TrialRow, DEFAULT_ORACLE_N,
};
pub use violation::{
    estimate_violation, indicator, oracle_violation, ViolationEstimate, ORACLE_SAMPLE_FLOOR,
};
