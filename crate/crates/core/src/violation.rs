//! Violation indicator and empirical violation-probability estimation.
//!
//! The estimator is the plain Monte Carlo mean of the boolean indicator
//! over a disturbance batch. Its reported standard error is the binomial
//! sqrt(v(1-v)/n) of a Bernoulli sample mean.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ChanceConstrainedProblem, DecisionPoint, DisturbanceSample};
use crate::sampling::{DisturbanceSampler, RngStream};

/// Minimum sample count for an estimate to be labeled an oracle.
pub const ORACLE_SAMPLE_FLOOR: u64 = 100_000;

/// Empirical estimate of Pr{h(u, delta) > 0} from a finite batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationEstimate {
    /// Number of batch samples that violated the constraint.
    pub violations: u64,
    /// Batch size the estimate was computed from.
    pub sample_count: u64,
    /// violations / sample_count.
    pub v_hat: f64,
    /// Binomial standard error sqrt(v_hat * (1 - v_hat) / sample_count).
    pub std_error: f64,
}

impl ViolationEstimate {
    pub fn from_counts(violations: u64, sample_count: u64) -> Self {
        assert!(
            sample_count > 0 && violations <= sample_count,
            "counts out of range: {violations}/{sample_count}"
        );
        let n = sample_count as f64;
        let v_hat = violations as f64 / n;
        let std_error = (v_hat * (1.0 - v_hat) / n).sqrt();
        Self {
            violations,
            sample_count,
            v_hat,
            std_error,
        }
    }
}

/// 1 iff the constraint is violated (h > 0). A boundary value h = 0 counts
/// as satisfied.
pub fn indicator(
    problem: &ChanceConstrainedProblem,
    u: &DecisionPoint,
    d: &DisturbanceSample,
) -> Result<u64> {
    Ok(u64::from(problem.evaluate_constraint(u, d)? > 0.0))
}

/// Empirical violation probability of `u` over a shared batch. Deterministic
/// given the batch; the reduction is an integer sum, so it is independent of
/// evaluation order.
pub fn estimate_violation(
    problem: &ChanceConstrainedProblem,
    u: &DecisionPoint,
    batch: &[DisturbanceSample],
) -> Result<ViolationEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut violations = 0u64;
    for d in batch {
        violations += indicator(problem, u, d)?;
    }
    Ok(ViolationEstimate::from_counts(
        violations,
        batch.len() as u64,
    ))
}

/// High-sample-count violation estimate used to score final answers; never
/// part of the search itself. Draws a fresh batch of `n >= ORACLE_SAMPLE_FLOOR`
/// samples from the given stream, without materializing it.
pub fn oracle_violation(
    problem: &ChanceConstrainedProblem,
    u: &DecisionPoint,
    n: u64,
    stream: RngStream,
) -> Result<ViolationEstimate> {
    if n < ORACLE_SAMPLE_FLOOR {
        return Err(Error::OracleSampleFloor {
            got: n,
            floor: ORACLE_SAMPLE_FLOOR,
        });
    }
    if u.dim() != problem.decision_dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.decision_dim(),
            actual: u.dim(),
        });
    }
    let mut sampler = DisturbanceSampler::new(problem.disturbance(), stream);
    let mut coords = vec![0.0; problem.disturbance_dim()];
    let mut violations = 0u64;
    for _ in 0..n {
        sampler.fill(&mut coords)?;
        violations += u64::from(problem.constraint_raw(u.coords(), &coords)? > 0.0);
    }
    Ok(ViolationEstimate::from_counts(violations, n))
}
