//! Two-layer optimizer exploration.
//!
//! Each iteration samples a fresh batch of candidate decisions uniformly
//! over the domain (layer one), estimates every candidate's violation
//! probability against one shared disturbance batch (layer two), discards
//! candidates estimated above alpha - alpha_eps, and lets the cheapest
//! survivor challenge the incumbent. Candidate evaluation is embarrassingly
//! parallel; all tie-breaking is by candidate index, so the trace is
//! bit-identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ChanceConstrainedProblem, DecisionPoint, DisturbanceSample};
use crate::sampling::{
    sample_decisions, sample_disturbances, RngStream, StreamPurpose, MAX_ITERATIONS, MAX_TRIALS,
};
use crate::violation::{estimate_violation, ViolationEstimate};

/// Tuning knobs for [`explore`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExplorerConfig {
    /// Candidate decisions drawn per iteration (N_u).
    pub n_decisions: usize,
    /// Disturbance samples per iteration, shared by all candidates (N_delta).
    pub n_disturbances: usize,
    /// Margin alpha_eps subtracted from alpha to form the discard threshold;
    /// must lie strictly inside (0, alpha).
    pub alpha_margin: f64,
    pub max_iterations: usize,
    /// Root seed all per-iteration streams derive from.
    pub seed: u64,
}

impl ExplorerConfig {
    pub fn validate(&self, problem: &ChanceConstrainedProblem) -> Result<()> {
        if self.n_decisions == 0 {
            return Err(Error::InvalidConfig {
                field: "n_decisions",
                reason: "must be at least 1".into(),
            });
        }
        if self.n_disturbances == 0 {
            return Err(Error::InvalidConfig {
                field: "n_disturbances",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_iterations == 0 || self.max_iterations as u64 >= MAX_ITERATIONS {
            return Err(Error::InvalidConfig {
                field: "iterations",
                reason: format!("must lie in 1..{MAX_ITERATIONS}"),
            });
        }
        if !(self.alpha_margin > 0.0 && self.alpha_margin < problem.alpha()) {
            return Err(Error::InvalidConfig {
                field: "alpha_eps",
                reason: format!(
                    "must lie strictly inside (0, alpha={}), got {}",
                    problem.alpha(),
                    self.alpha_margin
                ),
            });
        }
        Ok(())
    }
}

/// A decision point with its cost and the violation estimate stamped from
/// the batch it passed through.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub point: DecisionPoint,
    pub cost: f64,
    pub estimate: ViolationEstimate,
}

/// One row of the per-iteration evolution trace.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Candidates that survived the violation filter this iteration.
    pub n_feasible: usize,
    /// Cheapest survivor, if any survived.
    pub best_candidate: Option<Candidate>,
    /// Incumbent after this iteration; None until the first acceptance.
    pub incumbent: Option<Candidate>,
    /// Whether the incumbent was replaced this iteration.
    pub accepted: bool,
}

/// Full run record. `final_incumbent` is None when no candidate ever passed
/// the filter: the run reports that failure explicitly rather than returning
/// an unvetted point.
#[derive(Debug, Clone, Serialize)]
pub struct ExplorerTrace {
    pub records: Vec<IterationRecord>,
    pub final_incumbent: Option<Candidate>,
}

/// Keep exactly the candidates whose empirical violation probability over the
/// shared `batch` is at most alpha - alpha_margin, each paired with its
/// estimate, in input order. The discard rule is strict: an estimate equal to
/// the threshold stays.
pub fn filter_feasible(
    problem: &ChanceConstrainedProblem,
    candidates: &[DecisionPoint],
    batch: &[DisturbanceSample],
    alpha_margin: f64,
) -> Result<Vec<(DecisionPoint, ViolationEstimate)>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let threshold = problem.alpha() - alpha_margin;
    let estimates: Vec<ViolationEstimate> = candidates
        .par_iter()
        .map(|u| estimate_violation(problem, u, batch))
        .collect::<Result<_>>()?;
    Ok(candidates
        .iter()
        .zip(estimates)
        .filter(|(_, est)| est.v_hat <= threshold)
        .map(|(u, est)| (u.clone(), est))
        .collect())
}

/// Run the explorer with streams derived for trial 0.
pub fn explore(
    problem: &ChanceConstrainedProblem,
    config: &ExplorerConfig,
) -> Result<ExplorerTrace> {
    explore_in_trial(problem, config, 0)
}

/// Run the explorer with streams derived for the given trial index; the study
/// harness uses this to keep trials independent and individually
/// reproducible.
pub fn explore_in_trial(
    problem: &ChanceConstrainedProblem,
    config: &ExplorerConfig,
    trial: u64,
) -> Result<ExplorerTrace> {
    config.validate(problem)?;
    if trial >= MAX_TRIALS {
        return Err(Error::InvalidConfig {
            field: "trial",
            reason: format!("must be below {MAX_TRIALS}"),
        });
    }

    // The incumbent starts empty (a +inf cost sentinel) instead of at a
    // random unvetted point, so the first filter survivor always replaces it
    // and the output is feasible by construction.
    let mut incumbent: Option<Candidate> = None;
    let mut records = Vec::with_capacity(config.max_iterations);

    for iteration in 0..config.max_iterations {
        let step =
            run_iteration(problem, config, trial, iteration).map_err(|e| Error::Iteration {
                iteration,
                source: Box::new(e),
            })?;

        let accepted = match (&step.best_candidate, &incumbent) {
            (Some(best), Some(inc)) => best.cost < inc.cost,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if accepted {
            incumbent = step.best_candidate.clone();
        }
        records.push(IterationRecord {
            iteration,
            n_feasible: step.n_feasible,
            best_candidate: step.best_candidate,
            incumbent: incumbent.clone(),
            accepted,
        });
    }

    Ok(ExplorerTrace {
        records,
        final_incumbent: incumbent,
    })
}

struct IterationStep {
    n_feasible: usize,
    best_candidate: Option<Candidate>,
}

fn run_iteration(
    problem: &ChanceConstrainedProblem,
    config: &ExplorerConfig,
    trial: u64,
    iteration: usize,
) -> Result<IterationStep> {
    let it = iteration as u64;
    let decisions = sample_decisions(
        problem.domain(),
        config.n_decisions,
        RngStream::derived(config.seed, trial, it, StreamPurpose::Decisions),
    )?;
    let batch = sample_disturbances(
        problem.disturbance(),
        config.n_disturbances,
        RngStream::derived(config.seed, trial, it, StreamPurpose::Disturbances),
    )?;

    let feasible = filter_feasible(problem, &decisions, &batch, config.alpha_margin)?;
    let n_feasible = feasible.len();
    if n_feasible == 0 {
        // Empty survivor set: keep the incumbent and move on with fresh
        // samples next iteration; re-initializing would break the monotone
        // descent of the incumbent cost.
        return Ok(IterationStep {
            n_feasible,
            best_candidate: None,
        });
    }

    let costs: Vec<f64> = feasible
        .par_iter()
        .map(|(point, _)| problem.evaluate_cost(point))
        .collect::<Result<_>>()?;

    // argmin by candidate index: strict `<` keeps the first of equal costs
    let mut best_idx = 0;
    for (i, c) in costs.iter().enumerate().skip(1) {
        if *c < costs[best_idx] {
            best_idx = i;
        }
    }
    let (point, estimate) = feasible[best_idx].clone();
    Ok(IterationStep {
        n_feasible,
        best_candidate: Some(Candidate {
            point,
            cost: costs[best_idx],
            estimate,
        }),
    })
}
