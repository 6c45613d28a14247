//! Monte Carlo study harness: repeated independent trials of either method,
//! oracle scoring of every final answer, aggregate statistics, and CSV/SVG
//! emission.
//!
//! Trials run in parallel, each on streams derived from (root seed, trial
//! index), and rows are assembled in trial order, so study output is
//! byte-identical for any worker count.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explorer::{explore_in_trial, ExplorerConfig, ExplorerTrace};
use crate::problem::{ChanceConstrainedProblem, DecisionPoint};
use crate::sampling::{RngStream, StreamPurpose, MAX_TRIALS};
use crate::scenario::{solve_scenario_in_trial, ScenarioConfig};
use crate::violation::{oracle_violation, ViolationEstimate, ORACLE_SAMPLE_FLOOR};

/// Default oracle sample count for scoring final answers.
pub const DEFAULT_ORACLE_N: u64 = 1_000_000;

/// Which method a study runs.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method")]
pub enum MethodConfig {
    #[serde(rename = "two-layer")]
    TwoLayer(ExplorerConfig),
    #[serde(rename = "scenario")]
    Scenario(ScenarioConfig),
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::TwoLayer(_) => "two-layer",
            MethodConfig::Scenario(_) => "scenario",
        }
    }

    fn label(&self) -> String {
        match self {
            MethodConfig::TwoLayer(c) => format!("two-layer N_delta={}", c.n_disturbances),
            MethodConfig::Scenario(c) => format!("scenario N={}", c.n_scenarios),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub trials: usize,
    #[serde(flatten)]
    pub method: MethodConfig,
    /// Sample count for oracle scoring of each trial's final answer.
    pub oracle_n: u64,
    /// Root seed; per-trial streams derive from it, and it replaces any seed
    /// embedded in the method config.
    pub seed: u64,
    /// Retain each trial's full explorer trace (two-layer only).
    #[serde(skip)]
    pub keep_traces: bool,
}

impl StudyConfig {
    pub fn validate(&self, problem: &ChanceConstrainedProblem) -> Result<()> {
        if self.trials == 0 || self.trials as u64 >= MAX_TRIALS {
            return Err(Error::InvalidConfig {
                field: "trials",
                reason: format!("must lie in 1..{MAX_TRIALS}"),
            });
        }
        if self.oracle_n < ORACLE_SAMPLE_FLOOR {
            return Err(Error::InvalidConfig {
                field: "oracle_n",
                reason: format!("must be at least {ORACLE_SAMPLE_FLOOR}"),
            });
        }
        match &self.method {
            MethodConfig::TwoLayer(c) => c.validate(problem),
            MethodConfig::Scenario(c) => c.validate(),
        }
    }
}

/// One study row. A row with `failure == None` always carries a point, a
/// cost, and an oracle estimate.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub point: Option<DecisionPoint>,
    pub cost: Option<f64>,
    pub oracle: Option<ViolationEstimate>,
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExplorerTrace>,
}

impl TrialRow {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Statistics over the successful rows of a study. All real-valued fields
/// are NaN when every trial failed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StudyAggregates {
    pub n_trials: usize,
    pub n_failed: usize,
    pub mean_cost: f64,
    pub min_cost: f64,
    pub max_cost: f64,
    pub stddev_cost: f64,
    pub mean_oracle_violation: f64,
    /// Fraction of successful trials whose oracle violation is at most alpha.
    pub frac_within_alpha: f64,
}

/// Recompute aggregates from rows; used both by [`run_study`] and by the
/// CSV round-trip check. Accumulation is in row order.
pub fn aggregate_rows(rows: &[TrialRow], alpha: f64) -> StudyAggregates {
    let n_trials = rows.len();
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut violation_sum = 0.0;
    let mut within = 0usize;
    for row in rows {
        if row.failed() {
            continue;
        }
        let cost = row.cost.expect("successful row carries a cost");
        let v = row.oracle.expect("successful row carries an oracle").v_hat;
        n += 1;
        sum += cost;
        min = min.min(cost);
        max = max.max(cost);
        violation_sum += v;
        if v <= alpha {
            within += 1;
        }
    }
    if n == 0 {
        return StudyAggregates {
            n_trials,
            n_failed: n_trials,
            mean_cost: f64::NAN,
            min_cost: f64::NAN,
            max_cost: f64::NAN,
            stddev_cost: f64::NAN,
            mean_oracle_violation: f64::NAN,
            frac_within_alpha: f64::NAN,
        };
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for row in rows {
        if !row.failed() {
            let d = row.cost.unwrap() - mean;
            ss += d * d;
        }
    }
    let stddev = if n > 1 {
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    StudyAggregates {
        n_trials,
        n_failed: n_trials - n,
        mean_cost: mean,
        min_cost: min,
        max_cost: max,
        stddev_cost: stddev,
        mean_oracle_violation: violation_sum / n as f64,
        frac_within_alpha: within as f64 / n as f64,
    }
}

/// Results of one study: rows ordered by trial id plus aggregates and the
/// context needed to render them.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub label: String,
    pub method_name: &'static str,
    pub alpha: f64,
    pub decision_dim: usize,
    pub domain_lower: Vec<f64>,
    pub domain_upper: Vec<f64>,
    pub oracle_n: u64,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub aggregates: StudyAggregates,
}

/// Run `trials` independent repetitions of the configured method, scoring
/// each trial's final answer with a dedicated oracle stream. Trial failures
/// (no feasible answer, or an evaluation error inside one trial) are
/// recorded per row and do not abort the study.
pub fn run_study(problem: &ChanceConstrainedProblem, config: &StudyConfig) -> Result<StudyResult> {
    config.validate(problem)?;
    let rows: Vec<TrialRow> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(problem, config, trial))
        .collect();
    let aggregates = aggregate_rows(&rows, problem.alpha());
    Ok(StudyResult {
        label: config.method.label(),
        method_name: config.method.name(),
        alpha: problem.alpha(),
        decision_dim: problem.decision_dim(),
        domain_lower: problem.domain().lower().to_vec(),
        domain_upper: problem.domain().upper().to_vec(),
        oracle_n: config.oracle_n,
        seed: config.seed,
        rows,
        aggregates,
    })
}

fn run_trial(problem: &ChanceConstrainedProblem, config: &StudyConfig, trial: u64) -> TrialRow {
    let outcome = match &config.method {
        MethodConfig::TwoLayer(ec) => {
            let mut ec = *ec;
            ec.seed = config.seed;
            explore_in_trial(problem, &ec, trial).map(|trace| {
                let best = trace
                    .final_incumbent
                    .as_ref()
                    .map(|c| (c.point.clone(), c.cost));
                (best, config.keep_traces.then_some(trace))
            })
        }
        MethodConfig::Scenario(sc) => {
            let mut sc = *sc;
            sc.seed = config.seed;
            solve_scenario_in_trial(problem, &sc, trial).map(|sol| (sol.best, None))
        }
    };

    let empty = TrialRow {
        trial,
        point: None,
        cost: None,
        oracle: None,
        failure: None,
        trace: None,
    };
    match outcome {
        Err(e) => TrialRow {
            failure: Some(e.to_string()),
            ..empty
        },
        Ok((None, trace)) => TrialRow {
            failure: Some("no feasible solution found".into()),
            trace,
            ..empty
        },
        Ok((Some((point, cost)), trace)) => {
            let oracle = oracle_violation(
                problem,
                &point,
                config.oracle_n,
                RngStream::derived(config.seed, trial, 0, StreamPurpose::Oracle),
            );
            match oracle {
                Ok(est) => TrialRow {
                    point: Some(point),
                    cost: Some(cost),
                    oracle: Some(est),
                    trace,
                    ..empty
                },
                Err(e) => TrialRow {
                    point: Some(point),
                    cost: Some(cost),
                    failure: Some(format!("oracle scoring failed: {e}")),
                    trace,
                    ..empty
                },
            }
        }
    }
}

/// 17 significant digits: enough for f64 values to round-trip exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write rows as CSV: a header line, then one line per trial. Real values
/// use 17 significant digits with a locale-independent decimal point.
pub fn write_csv<W: Write>(result: &StudyResult, w: &mut W) -> std::io::Result<()> {
    write!(w, "trial,failed")?;
    for i in 1..=result.decision_dim {
        write!(w, ",u_{i}")?;
    }
    writeln!(w, ",cost,oracle_v_hat,oracle_violations,oracle_n")?;
    for row in &result.rows {
        write!(w, "{},{}", row.trial, row.failed())?;
        match &row.point {
            Some(p) => {
                for c in p.coords() {
                    write!(w, ",{}", fmt_f64(*c))?;
                }
            }
            None => {
                for _ in 0..result.decision_dim {
                    write!(w, ",")?;
                }
            }
        }
        match row.cost {
            Some(c) => write!(w, ",{}", fmt_f64(c))?,
            None => write!(w, ",")?,
        }
        match &row.oracle {
            Some(o) => write!(
                w,
                ",{},{},{}",
                fmt_f64(o.v_hat),
                o.violations,
                o.sample_count
            )?,
            None => write!(w, ",,,")?,
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Write the study CSV to a file.
pub fn emit_csv(result: &StudyResult, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(result, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Parse a CSV produced by [`write_csv`] back into rows. This is the
/// round-trip self-check parser, not a general CSV reader; failure reasons
/// are not stored in the CSV, so parsed failed rows carry a placeholder.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<(usize, Vec<TrialRow>)> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Csv {
        line: 1,
        reason: "missing header".into(),
    })?;
    let header = header.map_err(|e| Error::Csv {
        line: 1,
        reason: e.to_string(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let dim = cols.iter().filter(|c| c.starts_with("u_")).count();
    let expected: Vec<String> = ["trial", "failed"]
        .into_iter()
        .map(String::from)
        .chain((1..=dim).map(|i| format!("u_{i}")))
        .chain(
            ["cost", "oracle_v_hat", "oracle_violations", "oracle_n"]
                .into_iter()
                .map(String::from),
        )
        .collect();
    if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() || dim == 0 {
        return Err(Error::Csv {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let bad = |reason: String| Error::Csv {
            line: line_no,
            reason,
        };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + dim + 4 {
            return Err(bad(format!(
                "expected {} fields, got {}",
                2 + dim + 4,
                fields.len()
            )));
        }
        let trial: u64 = fields[0].parse().map_err(|_| bad("bad trial id".into()))?;
        let failed: bool = fields[1]
            .parse()
            .map_err(|_| bad("bad failed flag".into()))?;
        let coord_fields = &fields[2..2 + dim];
        let point = if coord_fields.iter().all(|f| f.is_empty()) {
            None
        } else {
            let coords = coord_fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad("bad coordinate".into())))
                .collect::<Result<Vec<f64>>>()?;
            Some(DecisionPoint::new(coords))
        };
        let cost = if fields[2 + dim].is_empty() {
            None
        } else {
            Some(
                fields[2 + dim]
                    .parse::<f64>()
                    .map_err(|_| bad("bad cost".into()))?,
            )
        };
        let oracle = if fields[3 + dim].is_empty() {
            None
        } else {
            let violations: u64 = fields[4 + dim]
                .parse()
                .map_err(|_| bad("bad oracle_violations".into()))?;
            let n: u64 = fields[5 + dim]
                .parse()
                .map_err(|_| bad("bad oracle_n".into()))?;
            Some(ViolationEstimate::from_counts(violations, n))
        };
        rows.push(TrialRow {
            trial,
            point,
            cost,
            oracle,
            failure: failed.then(|| "failed (reason not recorded in CSV)".into()),
            trace: None,
        });
    }
    Ok((dim, rows))
}

/// Write one explorer trace as CSV with the incumbent state per iteration.
pub fn write_trace_csv<W: Write>(
    trace: &ExplorerTrace,
    decision_dim: usize,
    w: &mut W,
) -> std::io::Result<()> {
    write!(w, "iter,n_feasible,accepted")?;
    for i in 1..=decision_dim {
        write!(w, ",u_{i}")?;
    }
    writeln!(w, ",cost,v_hat")?;
    for r in &trace.records {
        write!(w, "{},{},{}", r.iteration, r.n_feasible, r.accepted)?;
        match &r.incumbent {
            Some(c) => {
                for x in c.point.coords() {
                    write!(w, ",{}", fmt_f64(*x))?;
                }
                writeln!(w, ",{},{}", fmt_f64(c.cost), fmt_f64(c.estimate.v_hat))?;
            }
            None => {
                for _ in 0..decision_dim {
                    write!(w, ",")?;
                }
                writeln!(w, ",,")?;
            }
        }
    }
    Ok(())
}

const SERIES_STYLES: [(&str, &str); 4] = [
    ("star", "#2e8b57"),
    ("dot", "#1f77b4"),
    ("square", "#c020c0"),
    ("ring", "#d62728"),
];

/// Render the final decision points of several studies as an SVG scatter
/// plot, one marker series per study with a legend entry each. All results
/// must come from the same 2-D problem.
pub fn emit_scatter_plot(results: &[&StudyResult], path: &Path) -> Result<()> {
    let svg = render_scatter(results)?;
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn render_scatter(results: &[&StudyResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::UnsupportedPlot("no study results to plot".into()));
    }
    for r in results {
        if r.decision_dim != 2 {
            return Err(Error::UnsupportedPlot(format!(
                "decision dimension {} in \"{}\" (only 2-D scatter is supported)",
                r.decision_dim, r.label
            )));
        }
    }
    let (x0, x1) = (results[0].domain_lower[0], results[0].domain_upper[0]);
    let (y0, y1) = (results[0].domain_lower[1], results[0].domain_upper[1]);
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 620.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 490.0;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y0) / (y1 - y0) * (BOTTOM - TOP);

    let mut s = String::new();
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"540\" \
         viewBox=\"0 0 880 540\" font-family=\"sans-serif\" font-size=\"12\">\n",
    );
    s.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"#333\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));
    s.push_str(&format!(
        "<text x=\"{LEFT}\" y=\"{}\" text-anchor=\"middle\">{x0}</text>\n",
        BOTTOM + 16.0
    ));
    s.push_str(&format!(
        "<text x=\"{RIGHT}\" y=\"{}\" text-anchor=\"middle\">{x1}</text>\n",
        BOTTOM + 16.0
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{BOTTOM}\" text-anchor=\"end\">{y0}</text>\n",
        LEFT - 8.0
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{TOP}\" text-anchor=\"end\">{y1}</text>\n",
        LEFT - 8.0
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">u_1</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 32.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">u_2</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    for (k, result) in results.iter().enumerate() {
        let (shape, color) = SERIES_STYLES[k % SERIES_STYLES.len()];
        s.push_str(&format!("<g data-series=\"{}\">\n", result.label));
        for row in &result.rows {
            if let Some(p) = &row.point {
                if !row.failed() {
                    s.push_str(&marker(shape, color, sx(p.coords()[0]), sy(p.coords()[1])));
                }
            }
        }
        s.push_str("</g>\n");
        // color-coded legend text, so data markers stay the only marker
        // elements in the file
        let ly = TOP + 14.0 + 24.0 * k as f64;
        s.push_str(&format!(
            "<text class=\"legend\" x=\"{}\" y=\"{ly}\" fill=\"{color}\">{} ({shape})</text>\n",
            RIGHT + 24.0,
            result.label
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn marker(shape: &str, color: &str, x: f64, y: f64) -> String {
    match shape {
        "star" => {
            let mut pts = String::new();
            for i in 0..10 {
                let r = if i % 2 == 0 { 5.0 } else { 2.0 };
                let a = std::f64::consts::PI * (i as f64 / 5.0 - 0.5);
                pts.push_str(&format!("{:.2},{:.2} ", x + r * a.cos(), y + r * a.sin()));
            }
            format!("<polygon points=\"{}\" fill=\"{color}\"/>\n", pts.trim_end())
        }
        "dot" => format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.8\" fill=\"{color}\"/>\n"),
        "square" => format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"5.6\" height=\"5.6\" fill=\"{color}\"/>\n",
            x - 2.8,
            y - 2.8
        ),
        _ => format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.2\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\"/>\n"
        ),
    }
}
