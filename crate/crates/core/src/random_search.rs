//! Classical randomized local search with greedy acceptance.
//!
//! This is the single-chain baseline the two-layer explorer is a parallel
//! restructuring of; the explorer does not call it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{BoxDomain, DecisionPoint};
use crate::sampling::{uniform_in_box, PolarNormal, RngStream};

/// How many times an out-of-domain neighborhood draw is redrawn before the
/// iteration is skipped. Rejection keeps the sampling distribution intact
/// restricted to the domain; there is no projection rule.
const MAX_NEIGHBOR_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborDistribution {
    UniformBall,
    NormalIsotropic,
}

/// Neighborhood each candidate step is drawn from.
///
/// `radius` is the bound on the *squared* Euclidean distance of the step,
/// matching the neighborhood set definition; a uniform-ball step therefore
/// has Euclidean length below sqrt(radius). Normal steps are isotropic with
/// per-axis standard deviation sqrt(radius) and unbounded support, subject
/// only to domain rejection.
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodSpec {
    pub radius: f64,
    pub distribution: NeighborDistribution,
}

impl NeighborhoodSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "radius",
                reason: format!("must be positive and finite, got {}", self.radius),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub neighborhood: NeighborhoodSpec,
    pub max_iterations: usize,
    pub stream: RngStream,
}

/// Final incumbent plus the incumbent cost after initialization and after
/// every iteration (length max_iterations + 1).
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: DecisionPoint,
    pub cost_history: Vec<f64>,
    /// Iterations whose neighborhood draw never landed in the domain.
    pub skipped_iterations: usize,
}

/// Iterative neighborhood search: start at a uniform point, draw one
/// neighbor per iteration, accept on strict cost improvement.
pub fn random_optimize<F>(
    cost: F,
    domain: &BoxDomain,
    config: &SearchConfig,
) -> Result<SearchOutcome>
where
    F: Fn(&DecisionPoint) -> Result<f64>,
{
    config.neighborhood.validate()?;
    if config.max_iterations == 0 {
        return Err(Error::InvalidConfig {
            field: "max_iterations",
            reason: "must be at least 1".into(),
        });
    }
    let eval = |u: &DecisionPoint| -> Result<f64> {
        let c = cost(u)?;
        if !c.is_finite() {
            return Err(Error::NonFinite {
                kind: "cost",
                value: c,
                point: u.coords().to_vec(),
                disturbance: None,
            });
        }
        Ok(c)
    };

    let mut rng = config.stream.rng();
    let mut normal = PolarNormal::new();
    let mut incumbent = DecisionPoint::new(uniform_in_box(&mut rng, domain));
    let mut incumbent_cost = eval(&incumbent)?;
    let mut history = Vec::with_capacity(config.max_iterations + 1);
    history.push(incumbent_cost);
    let mut skipped = 0;

    for _ in 0..config.max_iterations {
        match draw_neighbor(
            &mut rng,
            &mut normal,
            &incumbent,
            domain,
            &config.neighborhood,
        ) {
            Some(candidate) => {
                let c = eval(&candidate)?;
                if c < incumbent_cost {
                    incumbent = candidate;
                    incumbent_cost = c;
                }
            }
            None => skipped += 1,
        }
        history.push(incumbent_cost);
    }

    Ok(SearchOutcome {
        best: incumbent,
        cost_history: history,
        skipped_iterations: skipped,
    })
}

fn draw_neighbor(
    rng: &mut ChaCha8Rng,
    normal: &mut PolarNormal,
    center: &DecisionPoint,
    domain: &BoxDomain,
    spec: &NeighborhoodSpec,
) -> Option<DecisionPoint> {
    let dim = center.dim();
    let scale = spec.radius.sqrt();
    for _ in 0..MAX_NEIGHBOR_RETRIES {
        let step: Vec<f64> = match spec.distribution {
            NeighborDistribution::UniformBall => {
                let dir: Vec<f64> = (0..dim).map(|_| normal.next(rng)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let r = scale * rng.random_range(0.0..1.0f64).powf(1.0 / dim as f64);
                dir.iter().map(|x| x / norm * r).collect()
            }
            NeighborDistribution::NormalIsotropic => {
                (0..dim).map(|_| scale * normal.next(rng)).collect()
            }
        };
        let candidate = DecisionPoint::new(
            center
                .coords()
                .iter()
                .zip(&step)
                .map(|(c, s)| c + s)
                .collect(),
        );
        if domain.contains(&candidate) {
            return Some(candidate);
        }
    }
    None
}
