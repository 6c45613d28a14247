//! Problem types and the bundled non-convex 2-D benchmark.
//!
//! A [`ChanceConstrainedProblem`] is carried as opaque evaluation closures
//! plus metadata (domain, disturbance model, probability level), so
//! user-supplied problems plug in without touching the solvers. The exact
//! probabilistic feasible set is never computed anywhere; the solvers only
//! ever see cost and constraint values.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Axis-aligned box of admissible decisions. Bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    /// Requires equal, nonzero dimensions and `lower[i] < upper[i]` for all i.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bound dimensions differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "non-finite bound in dimension {i}"
                )));
            }
            if lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "dimension {i}: lower bound {lo} must be strictly below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Componentwise membership test, bounds inclusive.
    pub fn contains(&self, point: &DecisionPoint) -> bool {
        point.dim() == self.dim()
            && point
                .coords()
                .iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((x, lo), hi)| *lo <= *x && *x <= *hi)
    }
}

/// A point in decision space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionPoint(Vec<f64>);

impl DecisionPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for DecisionPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

/// A draw of the uncertain parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceSample(Vec<f64>);

impl DisturbanceSample {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for DisturbanceSample {
    fn from(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

/// Signature of a user-supplied disturbance sampler.
pub type SamplerFn = Arc<dyn Fn(&mut dyn rand::RngCore) -> Vec<f64> + Send + Sync>;

/// Distribution the disturbance is drawn from.
#[derive(Clone)]
pub enum DisturbanceModel {
    /// Independent standard-normal coordinates.
    StandardNormalIid { dim: usize },
    /// Uniform over an axis-aligned box.
    UniformBox(BoxDomain),
    /// Caller-provided sampler. The closure must emit `dim` coordinates and
    /// consume randomness only through the given generator, or reproducibility
    /// guarantees are lost.
    Sampler { dim: usize, draw: SamplerFn },
}

impl DisturbanceModel {
    pub fn dim(&self) -> usize {
        match self {
            DisturbanceModel::StandardNormalIid { dim } => *dim,
            DisturbanceModel::UniformBox(b) => b.dim(),
            DisturbanceModel::Sampler { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidConfig {
                field: "disturbance",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Short name used in run metadata.
    pub fn kind_name(&self) -> &'static str {
        match self {
            DisturbanceModel::StandardNormalIid { .. } => "standard-normal-iid",
            DisturbanceModel::UniformBox(_) => "uniform-box",
            DisturbanceModel::Sampler { .. } => "user-supplied-sampler",
        }
    }
}

impl fmt::Debug for DisturbanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisturbanceModel::StandardNormalIid { dim } => {
                write!(f, "StandardNormalIid {{ dim: {dim} }}")
            }
            DisturbanceModel::UniformBox(b) => write!(f, "UniformBox({b:?})"),
            DisturbanceModel::Sampler { dim, .. } => write!(f, "Sampler {{ dim: {dim} }}"),
        }
    }
}

pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// minimize cost(u) over the domain, subject to
/// Pr{constraint(u, delta) <= 0} >= 1 - alpha.
///
/// All fields are immutable after construction; the struct is safe to share
/// read-only across worker threads.
#[derive(Clone)]
pub struct ChanceConstrainedProblem {
    name: String,
    domain: BoxDomain,
    cost: CostFn,
    constraint: ConstraintFn,
    disturbance: DisturbanceModel,
    alpha: f64,
}

impl ChanceConstrainedProblem {
    pub fn new(
        name: impl Into<String>,
        domain: BoxDomain,
        cost: CostFn,
        constraint: ConstraintFn,
        disturbance: DisturbanceModel,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig {
                field: "alpha",
                reason: format!("must lie strictly inside (0, 1), got {alpha}"),
            });
        }
        disturbance.validate()?;
        Ok(Self {
            name: name.into(),
            domain,
            cost,
            constraint,
            disturbance,
            alpha,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn disturbance(&self) -> &DisturbanceModel {
        &self.disturbance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn decision_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.disturbance.dim()
    }

    /// Cost J(u). Non-finite results abort with a diagnostic naming the
    /// point; treating them as infeasible would silently corrupt statistics.
    pub fn evaluate_cost(&self, u: &DecisionPoint) -> Result<f64> {
        if u.dim() != self.decision_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.decision_dim(),
                actual: u.dim(),
            });
        }
        let value = (self.cost)(u.coords());
        if !value.is_finite() {
            return Err(Error::NonFinite {
                kind: "cost",
                value,
                point: u.coords().to_vec(),
                disturbance: None,
            });
        }
        Ok(value)
    }

    /// Constraint h(u, delta).
    pub fn evaluate_constraint(&self, u: &DecisionPoint, d: &DisturbanceSample) -> Result<f64> {
        if u.dim() != self.decision_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.decision_dim(),
                actual: u.dim(),
            });
        }
        if d.dim() != self.disturbance_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.disturbance_dim(),
                actual: d.dim(),
            });
        }
        self.constraint_raw(u.coords(), d.coords())
    }

    /// Constraint evaluation on raw slices; dimensions must already match.
    pub(crate) fn constraint_raw(&self, u: &[f64], d: &[f64]) -> Result<f64> {
        debug_assert_eq!(u.len(), self.decision_dim());
        debug_assert_eq!(d.len(), self.disturbance_dim());
        let value = (self.constraint)(u, d);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                kind: "constraint",
                value,
                point: u.to_vec(),
                disturbance: Some(d.to_vec()),
            });
        }
        Ok(value)
    }
}

impl fmt::Debug for ChanceConstrainedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChanceConstrainedProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("disturbance", &self.disturbance)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

/// Name under which the bundled benchmark is selectable in the CLI.
pub const BENCHMARK_NAME: &str = "paper-nonconvex-2d";

/// The bundled non-convex 2-D benchmark: quartic two-well cost, a quartic
/// constraint shifted by a scalar standard-normal disturbance, decision
/// domain [-6, 5]^2, and probability level alpha = 0.05.
pub fn make_benchmark() -> ChanceConstrainedProblem {
    const A: [f64; 2] = [1.5, 2.0];
    const B: [f64; 2] = [2.0, 3.0];
    let domain = BoxDomain::new(vec![-6.0, -6.0], vec![5.0, 5.0]).expect("static bounds");
    let cost: CostFn = Arc::new(|u: &[f64]| {
        u.iter()
            .map(|&x| (x + 0.5).powi(4) - 30.0 * x * x - 20.0 * x)
            .sum::<f64>()
            / 100.0
    });
    let constraint: ConstraintFn = Arc::new(|u: &[f64], d: &[f64]| {
        let delta = d[0];
        let mut acc = 0.0;
        for i in 0..2 {
            let x = u[i] - A[i] * delta;
            let x2 = x * x;
            acc += 0.05 * x2 * x2 - B[i] * x2;
        }
        let slack = 1.0 - 0.1 * delta;
        acc - slack * slack
    });
    ChanceConstrainedProblem::new(
        BENCHMARK_NAME,
        domain,
        cost,
        constraint,
        DisturbanceModel::StandardNormalIid { dim: 1 },
        0.05,
    )
    .expect("static benchmark definition")
}

/// Look up a bundled problem by CLI name.
pub fn problem_by_name(name: &str) -> Option<ChanceConstrainedProblem> {
    (name == BENCHMARK_NAME).then(make_benchmark)
}
