//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured quantities (visible with `--nocapture`, and embedded in
//! the assertion message on failure).
//!
//! Criteria 4-6 are statistical reproductions at fixed seeds; the heavyweight
//! studies and the grid oracle are shared across tests through lazies, and
//! the grid oracle is cached on disk so repeated runs skip the build.

use std::path::PathBuf;
use std::sync::LazyLock;

use ccopt::{
    estimate_violation, explore, filter_feasible, make_benchmark, oracle_violation,
    random_optimize, run_study, sample_decisions, sample_disturbances, scenario_bound, write_csv,
    BoxDomain, ChanceConstrainedProblem, DecisionPoint, ExplorerConfig, MethodConfig,
    NeighborDistribution, NeighborhoodSpec, RngStream, ScenarioConfig, SearchConfig, StreamPurpose,
    StudyConfig, StudyResult,
};

/// Root seed for every acceptance study; fixed so the suite is reproducible.
const SEED: u64 = 20240;

/// Seed of the grid oracle's common disturbance batch.
const GRID_SEED: u64 = 777;

static BENCH: LazyLock<ChanceConstrainedProblem> = LazyLock::new(make_benchmark);

fn two_layer_study(n_disturbances: usize) -> StudyResult {
    let config = StudyConfig {
        trials: 100,
        method: MethodConfig::TwoLayer(ExplorerConfig {
            n_decisions: 100,
            n_disturbances,
            alpha_margin: 0.005,
            max_iterations: 50,
            seed: SEED,
        }),
        oracle_n: 1_000_000,
        seed: SEED,
        keep_traces: false,
    };
    run_study(&BENCH, &config).expect("study runs")
}

static STUDY_ND1000: LazyLock<StudyResult> = LazyLock::new(|| two_layer_study(1000));
static STUDY_ND100: LazyLock<StudyResult> = LazyLock::new(|| two_layer_study(100));

// ---------------------------------------------------------------------------
// independent straight-line re-implementations of the benchmark formulas,
// used by criteria 2 and 5; these must stay separate from the library path
// ---------------------------------------------------------------------------

fn ref_cost(u: &[f64]) -> f64 {
    ((u[0] + 0.5).powi(4) - 30.0 * u[0].powi(2) - 20.0 * u[0] + (u[1] + 0.5).powi(4)
        - 30.0 * u[1].powi(2)
        - 20.0 * u[1])
        / 100.0
}

fn ref_h(u: &[f64], delta: f64) -> f64 {
    0.05 * (u[0] - 1.5 * delta).powi(4) - 2.0 * (u[0] - 1.5 * delta).powi(2)
        + 0.05 * (u[1] - 2.0 * delta).powi(4)
        - 3.0 * (u[1] - 2.0 * delta).powi(2)
        - (1.0 - 0.1 * delta).powi(2)
}

/// Relative error with a unit floor for values near zero.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// criterion 1: bound exactness, zero tolerance
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_bound_exactness() {
    let a = scenario_bound(0.05, 0.01, 2).unwrap();
    let b = scenario_bound(0.1, 0.1, 1).unwrap();
    // independent evaluation of the closed form
    let direct = |alpha: f64, beta: f64, nu: f64| {
        ((2.0 / alpha) * (1.0 / beta).ln() + 2.0 * nu + (2.0 * nu / alpha) * (2.0 / alpha).ln())
            .ceil() as u64
    };
    assert_eq!(a, 484, "scenario_bound(0.05, 0.01, 2) = {a}, want 484");
    assert_eq!(b, 108, "scenario_bound(0.1, 0.1, 1) = {b}, want 108");
    assert_eq!(a, direct(0.05, 0.01, 2.0));
    assert_eq!(b, direct(0.1, 0.1, 1.0));
    println!("criterion 1 PASS: bound(0.05,0.01,2)={a}, bound(0.1,0.1,1)={b}, zero tolerance");
}

// ---------------------------------------------------------------------------
// criterion 2: benchmark evaluation vs straight-line re-implementation
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_benchmark_evaluation_oracle() {
    let triples = 10_000usize;
    let points = sample_decisions(
        BENCH.domain(),
        triples,
        RngStream::derived(SEED, 0, 0, StreamPurpose::Decisions),
    )
    .unwrap();
    let deltas = sample_disturbances(
        BENCH.disturbance(),
        triples,
        RngStream::derived(SEED, 0, 0, StreamPurpose::Disturbances),
    )
    .unwrap();
    let mut worst = 0.0f64;
    for (u, d) in points.iter().zip(&deltas) {
        let cost = BENCH.evaluate_cost(u).unwrap();
        let h = BENCH.evaluate_constraint(u, d).unwrap();
        worst = worst
            .max(rel_err(cost, ref_cost(u.coords())))
            .max(rel_err(h, ref_h(u.coords(), d.coords()[0])));
    }
    assert!(
        worst <= 1e-12,
        "worst relative error {worst:e} over {triples} triples exceeds 1e-12"
    );
    println!(
        "criterion 2 PASS: worst relative error {worst:e} over {triples} random triples (<= 1e-12)"
    );
}

// ---------------------------------------------------------------------------
// criterion 3: estimator agrees with the oracle at u = (5, 5)
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_estimator_soundness() {
    let u = DecisionPoint::new(vec![5.0, 5.0]);
    let mut passes = 0;
    let mut gaps = Vec::new();
    for seed in 0..20u64 {
        let batch = sample_disturbances(
            BENCH.disturbance(),
            100_000,
            RngStream::derived(seed, 0, 0, StreamPurpose::Disturbances),
        )
        .unwrap();
        let est = estimate_violation(&BENCH, &u, &batch).unwrap();
        let oracle = oracle_violation(
            &BENCH,
            &u,
            1_000_000,
            RngStream::derived(seed, 0, 0, StreamPurpose::Oracle),
        )
        .unwrap();
        let combined = (est.std_error * est.std_error + oracle.std_error * oracle.std_error).sqrt();
        let gap = (est.v_hat - oracle.v_hat).abs();
        gaps.push(gap / combined);
        if gap <= 3.0 * combined {
            passes += 1;
        }
    }
    assert!(
        passes >= 19,
        "only {passes}/20 seeds within 3 combined standard errors (gaps in SE units: {gaps:.2?})"
    );
    println!("criterion 3 PASS: {passes}/20 seeds within 3 combined standard errors (need >= 19)");
}

// ---------------------------------------------------------------------------
// criterion 4: two-layer feasibility across disturbance sample sizes
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_two_layer_feasibility() {
    let big = &*STUDY_ND1000;
    let small = &*STUDY_ND100;
    let frac_within = |s: &StudyResult| {
        let within = s
            .rows
            .iter()
            .filter(|r| !r.failed() && r.oracle.unwrap().v_hat <= 0.05)
            .count();
        within as f64 / s.rows.len() as f64
    };
    let frac = frac_within(big);
    let mean_big = big.aggregates.mean_oracle_violation;
    let mean_small = small.aggregates.mean_oracle_violation;
    println!(
        "criterion 4 measured: frac(oracle violation <= 0.05) at N_delta=1000: {frac:.3} \
         (need >= 0.90); mean oracle violation {mean_big:.4} (N_delta=1000) vs {mean_small:.4} \
         (N_delta=100) (need strict <)"
    );
    assert!(
        mean_big < mean_small,
        "mean oracle violation {mean_big:.4} at N_delta=1000 not below {mean_small:.4} at N_delta=100"
    );
    assert!(
        frac >= 0.90,
        "only {frac:.3} of trials have oracle violation <= 0.05 (need >= 0.90); \
         mean oracle violation {mean_big:.4}"
    );
    println!("criterion 4 PASS");
}

// ---------------------------------------------------------------------------
// criterion 5: two-layer optimality against the cached grid oracle
// ---------------------------------------------------------------------------

struct GridOracle {
    jstar: f64,
    point: [f64; 2],
}

/// Best cost over a 1000x1000 grid restricted to points whose violation
/// estimate over one shared 1e5-sample batch is at most 0.045. Built with
/// the test-local formula re-implementations, walked in ascending cost
/// order with early exit, cached on disk.
static GRID_ORACLE: LazyLock<GridOracle> = LazyLock::new(|| {
    let cache: PathBuf = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join(format!("grid-oracle-1000x1000-n100000-seed{GRID_SEED}.txt"));
    if let Ok(text) = std::fs::read_to_string(&cache) {
        let values: Vec<f64> = text
            .split_whitespace()
            .filter_map(|t| t.parse().ok())
            .collect();
        if values.len() == 3 {
            return GridOracle {
                jstar: values[0],
                point: [values[1], values[2]],
            };
        }
    }
    let oracle = build_grid_oracle();
    let _ = std::fs::write(
        &cache,
        format!(
            "{:.17e} {:.17e} {:.17e}\n",
            oracle.jstar, oracle.point[0], oracle.point[1]
        ),
    );
    oracle
});

fn build_grid_oracle() -> GridOracle {
    let deltas: Vec<f64> = sample_disturbances(
        BENCH.disturbance(),
        100_000,
        RngStream::derived(GRID_SEED, 0, 0, StreamPurpose::Disturbances),
    )
    .unwrap()
    .iter()
    .map(|d| d.coords()[0])
    .collect();
    // v_hat <= 0.045 over 1e5 samples means at most 4500 violations
    let max_violations = 4500u32;

    let n = 1000usize;
    let coord = |i: usize| -6.0 + 11.0 * i as f64 / (n - 1) as f64;
    let mut costs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            costs.push(ref_cost(&[coord(i), coord(j)]));
        }
    }
    let mut order: Vec<u32> = (0..(n * n) as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        costs[a as usize]
            .total_cmp(&costs[b as usize])
            .then(a.cmp(&b))
    });

    // walk grid points from cheapest up; the first one passing the filter is
    // the restricted minimum
    for &cell in &order {
        let (i, j) = ((cell as usize) / n, (cell as usize) % n);
        let u = [coord(i), coord(j)];
        let mut violations = 0u32;
        let mut feasible = true;
        for &delta in &deltas {
            if ref_h(&u, delta) > 0.0 {
                violations += 1;
                if violations > max_violations {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            return GridOracle {
                jstar: costs[cell as usize],
                point: u,
            };
        }
    }
    unreachable!("the benchmark grid contains feasible points");
}

#[test]
fn criterion_5_two_layer_optimality() {
    let grid = &*GRID_ORACLE;
    let tol = 0.05f64.max(0.02 * grid.jstar.abs());
    let study = &*STUDY_ND1000;
    let within = study
        .rows
        .iter()
        .filter(|r| !r.failed() && (r.cost.unwrap() - grid.jstar).abs() <= tol)
        .count();
    let frac = within as f64 / study.rows.len() as f64;
    println!(
        "criterion 5 measured: J* = {:.6} at ({:.4}, {:.4}); tolerance {tol:.4}; \
         {within}/{} trials within tolerance (need >= 80%)",
        grid.jstar,
        grid.point[0],
        grid.point[1],
        study.rows.len()
    );
    assert!(
        frac >= 0.80,
        "only {frac:.3} of trials ended within {tol:.4} of J* = {:.6}",
        grid.jstar
    );
    println!("criterion 5 PASS");
}

// ---------------------------------------------------------------------------
// criterion 6: scenario approach directional reproduction
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_scenario_directional() {
    let scenario_study = |n_scenarios: usize| {
        let config = StudyConfig {
            trials: 100,
            method: MethodConfig::Scenario(ScenarioConfig {
                n_scenarios,
                inner_search_points: 100_000,
                seed: SEED,
            }),
            oracle_n: 1_000_000,
            seed: SEED,
            keep_traces: false,
        };
        run_study(&BENCH, &config).expect("scenario study runs")
    };
    let few = scenario_study(100);
    let many = scenario_study(1000);
    let (v_few, v_many) = (
        few.aggregates.mean_oracle_violation,
        many.aggregates.mean_oracle_violation,
    );
    let (c_few, c_many) = (few.aggregates.mean_cost, many.aggregates.mean_cost);
    println!(
        "criterion 6 measured: mean oracle violation {v_few:.4} (N=100) vs {v_many:.4} (N=1000); \
         mean cost {c_few:.4} (N=100) vs {c_many:.4} (N=1000)"
    );
    assert!(
        v_few > v_many,
        "mean oracle violation at N=100 ({v_few:.4}) not above N=1000 ({v_many:.4})"
    );
    assert!(
        c_many >= c_few,
        "mean cost at N=1000 ({c_many:.4}) below N=100 ({c_few:.4})"
    );
    println!("criterion 6 PASS");
}

// ---------------------------------------------------------------------------
// criterion 7: worker-count determinism, byte-identical CSV
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_worker_determinism() {
    let config = StudyConfig {
        trials: 16,
        method: MethodConfig::TwoLayer(ExplorerConfig {
            n_decisions: 50,
            n_disturbances: 200,
            alpha_margin: 0.005,
            max_iterations: 20,
            seed: SEED,
        }),
        oracle_n: 100_000,
        seed: SEED,
        keep_traces: false,
    };
    let csv_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let result = pool.install(|| run_study(&BENCH, &config)).unwrap();
        let mut bytes = Vec::new();
        write_csv(&result, &mut bytes).unwrap();
        bytes
    };
    let one = csv_with(1);
    let eight = csv_with(8);
    assert_eq!(
        one, eight,
        "study CSV differs between --workers 1 and --workers 8"
    );
    println!(
        "criterion 7 PASS: {} CSV bytes identical between 1 and 8 workers",
        one.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 8: property suites at 100% compliance
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_property_suites() {
    // explorer incumbent monotonicity on 60 varied runs
    let mut explorer_checked = 0;
    for seed in 0..60u64 {
        let cfg = ExplorerConfig {
            n_decisions: 10 + (seed as usize % 15),
            n_disturbances: 20 + (seed as usize % 60),
            alpha_margin: 0.005,
            max_iterations: 3 + (seed as usize % 6),
            seed,
        };
        let trace = explore(&BENCH, &cfg).unwrap();
        let costs: Vec<f64> = trace
            .records
            .iter()
            .filter_map(|r| r.incumbent.as_ref().map(|c| c.cost))
            .collect();
        assert!(
            costs.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: incumbent cost sequence increased"
        );
        for r in &trace.records {
            if r.accepted {
                assert!(r.best_candidate.is_some());
            }
        }
        explorer_checked += 1;
    }

    // filter output is a subset at or below the threshold on 40 varied calls
    let mut filter_checked = 0;
    for seed in 0..40u64 {
        let candidates = sample_decisions(
            BENCH.domain(),
            20,
            RngStream::derived(seed, 1, 0, StreamPurpose::Decisions),
        )
        .unwrap();
        let batch = sample_disturbances(
            BENCH.disturbance(),
            50,
            RngStream::derived(seed, 1, 0, StreamPurpose::Disturbances),
        )
        .unwrap();
        let kept = filter_feasible(&BENCH, &candidates, &batch, 0.005).unwrap();
        let threshold = BENCH.alpha() - 0.005;
        assert!(kept.len() <= candidates.len());
        let mut cursor = candidates.iter();
        for (point, est) in &kept {
            assert!(est.v_hat <= threshold, "kept estimate above threshold");
            // subset in candidate order
            assert!(
                cursor.any(|c| c == point),
                "kept point missing from candidates or out of order"
            );
        }
        filter_checked += 1;
    }

    // random-search histories never increase on 60 varied runs
    let domain = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let mut search_checked = 0;
    for seed in 0..60u64 {
        let cfg = SearchConfig {
            neighborhood: NeighborhoodSpec {
                radius: 0.1,
                distribution: if seed % 2 == 0 {
                    NeighborDistribution::UniformBall
                } else {
                    NeighborDistribution::NormalIsotropic
                },
            },
            max_iterations: 100,
            stream: RngStream::derived(seed, 0, 0, StreamPurpose::Init),
        };
        let out = random_optimize(
            |u| Ok(u.coords().iter().map(|x| x * x).sum()),
            &domain,
            &cfg,
        )
        .unwrap();
        assert!(
            out.cost_history.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: history increased"
        );
        search_checked += 1;
    }

    println!(
        "criterion 8 PASS: monotone incumbents in {explorer_checked}/{explorer_checked} traces, \
         filter subset/threshold in {filter_checked}/{filter_checked} calls, \
         non-increasing histories in {search_checked}/{search_checked} searches"
    );
}
