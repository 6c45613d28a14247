//! Scenario-approach baseline: the sample-complexity bound and a
//! sampled-search solver for the scenario program.
//!
//! The scenario program replaces the chance constraint with one hard
//! constraint per drawn disturbance. Because the bundled benchmark is
//! non-convex, the inner solver here is a dense uniform search over the
//! decision box with full scenario filtering rather than a convex program;
//! it is assumption-free and index-deterministic.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ChanceConstrainedProblem, DecisionPoint};
use crate::sampling::{
    sample_decisions, sample_disturbances, RngStream, StreamPurpose, MAX_TRIALS,
};

/// Configuration for [`solve_scenario`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScenarioConfig {
    /// Number of drawn scenarios N.
    pub n_scenarios: usize,
    /// Uniform decision samples M the inner search evaluates.
    pub inner_search_points: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(Error::InvalidConfig {
                field: "n_scenarios",
                reason: "must be at least 1".into(),
            });
        }
        if self.inner_search_points == 0 {
            return Err(Error::InvalidConfig {
                field: "search_points",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Lower bound N_l on the scenario count: drawing at least this many
/// scenarios makes the scenario solution alpha-feasible with confidence at
/// least 1 - beta. Computed as the ceiling of
/// (2/alpha) ln(1/beta) + 2 n_u + (2 n_u / alpha) ln(2/alpha).
pub fn scenario_bound(alpha: f64, beta: f64, n_u: usize) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig {
            field: "alpha",
            reason: format!("must lie strictly inside (0, 1), got {alpha}"),
        });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidConfig {
            field: "beta",
            reason: format!("must lie strictly inside (0, 1), got {beta}"),
        });
    }
    if n_u == 0 {
        return Err(Error::InvalidConfig {
            field: "n_u",
            reason: "must be at least 1".into(),
        });
    }
    let nu = n_u as f64;
    let raw =
        (2.0 / alpha) * (1.0 / beta).ln() + 2.0 * nu + (2.0 * nu / alpha) * (2.0 / alpha).ln();
    Ok(raw.ceil() as u64)
}

/// What the inner search did, for reporting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScenarioReport {
    pub n_scenarios: usize,
    pub n_search_points: usize,
    /// Search points satisfying every scenario constraint.
    pub n_feasible_points: usize,
    /// Constraint evaluations performed; short-circuiting on the first
    /// violated scenario makes this less than M * N in general.
    pub constraint_checks: u64,
}

/// Solution of the scenario program. `best` is None when no search point
/// satisfied every scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSolution {
    pub best: Option<(DecisionPoint, f64)>,
    pub report: ScenarioReport,
}

/// Solve the scenario program with streams derived for trial 0.
pub fn solve_scenario(
    problem: &ChanceConstrainedProblem,
    config: &ScenarioConfig,
) -> Result<ScenarioSolution> {
    solve_scenario_in_trial(problem, config, 0)
}

/// Draw N scenarios and M uniform search points, then minimize cost over the
/// points satisfying h(u, delta_i) <= 0 for every scenario i.
///
/// `n_scenarios == 0` is accepted as the degenerate unconstrained case (the
/// scenario set is empty, every search point is feasible); configuration
/// validation upstream still requires at least one scenario for real runs.
pub fn solve_scenario_in_trial(
    problem: &ChanceConstrainedProblem,
    config: &ScenarioConfig,
    trial: u64,
) -> Result<ScenarioSolution> {
    if config.inner_search_points == 0 {
        return Err(Error::InvalidConfig {
            field: "search_points",
            reason: "must be at least 1".into(),
        });
    }
    if trial >= MAX_TRIALS {
        return Err(Error::InvalidConfig {
            field: "trial",
            reason: format!("must be below {MAX_TRIALS}"),
        });
    }

    let scenarios = if config.n_scenarios == 0 {
        Vec::new()
    } else {
        sample_disturbances(
            problem.disturbance(),
            config.n_scenarios,
            RngStream::derived(config.seed, trial, 0, StreamPurpose::Scenarios),
        )?
    };
    let points = sample_decisions(
        problem.domain(),
        config.inner_search_points,
        RngStream::derived(config.seed, trial, 0, StreamPurpose::SearchPoints),
    )?;

    // (cost if scenario-feasible, scenarios checked before short-circuit)
    let evaluated: Vec<(Option<f64>, u64)> = points
        .par_iter()
        .map(|u| -> Result<(Option<f64>, u64)> {
            let mut checks = 0u64;
            for d in &scenarios {
                checks += 1;
                if problem.evaluate_constraint(u, d)? > 0.0 {
                    return Ok((None, checks));
                }
            }
            Ok((Some(problem.evaluate_cost(u)?), checks))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    let mut n_feasible = 0usize;
    let mut constraint_checks = 0u64;
    for (i, (cost, checks)) in evaluated.iter().enumerate() {
        constraint_checks += checks;
        if let Some(c) = cost {
            n_feasible += 1;
            // strict `<` keeps the lowest index among equal costs
            if best.is_none_or(|(_, bc)| *c < bc) {
                best = Some((i, *c));
            }
        }
    }

    Ok(ScenarioSolution {
        best: best.map(|(i, c)| (points[i].clone(), c)),
        report: ScenarioReport {
            n_scenarios: config.n_scenarios,
            n_search_points: config.inner_search_points,
            n_feasible_points: n_feasible,
            constraint_checks,
        },
    })
}
