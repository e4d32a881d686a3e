//! Drivers for the two synthetic experiments and for whole-log bound
//! evaluation.
//!
//! The sweep couples the uncertainty-injection seed across all `p` values,
//! so each trace's realization set only grows with `p` and the bound
//! totals move monotonically. The perf run times the behavior-net lower
//! bound against the brute-force enumeration on identical inputs and
//! treats a cost disagreement between the two as a fatal internal error.
//!
//! Traces are evaluated in parallel where a worker count above one is
//! requested; results are aggregated in input order, so output data is
//! identical across worker counts. Reported times are summed per-trace
//! compute times from a monotonic clock, not wall clock, which keeps the
//! timing columns meaningful under parallelism.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::alignment::{
    bounds_bruteforce, lower_bound, upper_bound, ConformanceBounds, CostFunction, SearchLimits,
};
use crate::petri::SystemNet;
use crate::synth::{
    generate_model, inject_deviations, inject_uncertainty, playout, DeviationParams, SynthError,
    UncertaintyParams,
};
use crate::uncertain_log::SimpleUncertainTrace;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("bound methods disagree on trace {trace}: behavior net {behavior}, brute force {bruteforce}")]
    Inconsistent {
        trace: usize,
        behavior: u64,
        bruteforce: u64,
    },
}

fn run_pool<T: Send, F: Fn(usize) -> T + Sync + Send>(workers: usize, count: usize, f: F) -> Vec<T> {
    if workers == 1 {
        (0..count).map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

// ---------------------------------------------------------------------------
// Whole-log bounds.

/// Per-trace outcome of a whole-log bound evaluation; errors are kept as
/// text so one exploding trace does not hide the others.
#[derive(Clone, Debug)]
pub struct TraceBounds {
    pub index: usize,
    pub outcome: Result<ConformanceBounds, String>,
}

#[derive(Clone, Debug, Default)]
pub struct LogBoundsReport {
    pub traces: Vec<TraceBounds>,
    pub lower_total: u64,
    pub upper_total: u64,
    pub completed: usize,
    pub failed: usize,
}

/// Evaluates both conformance-cost bounds for every trace of a log: the
/// lower bound through the behavior net, the upper bound through
/// realization enumeration.
pub fn log_bounds(
    traces: &[SimpleUncertainTrace],
    model: &SystemNet,
    cost: &CostFunction,
    realization_cap: usize,
    limits: &SearchLimits,
    workers: usize,
) -> LogBoundsReport {
    let cells = run_pool(workers.max(1), traces.len(), |i| {
        bounds_of_trace(&traces[i], model, cost, realization_cap, limits)
    });
    let mut report = LogBoundsReport::default();
    for (index, outcome) in cells.into_iter().enumerate() {
        match &outcome {
            Ok(b) => {
                report.lower_total += b.lower;
                report.upper_total += b.upper;
                report.completed += 1;
            }
            Err(_) => report.failed += 1,
        }
        report.traces.push(TraceBounds { index, outcome });
    }
    report
}

fn bounds_of_trace(
    trace: &SimpleUncertainTrace,
    model: &SystemNet,
    cost: &CostFunction,
    realization_cap: usize,
    limits: &SearchLimits,
) -> Result<ConformanceBounds, String> {
    let lower = lower_bound(trace, model, cost, limits).map_err(|e| e.to_string())?;
    let upper = upper_bound(trace, model, cost, realization_cap, limits)
        .map_err(|e| e.to_string())?;
    if lower.cost > upper.cost {
        return Err(format!(
            "internal: lower bound {} above upper bound {}",
            lower.cost, upper.cost
        ));
    }
    Ok(ConformanceBounds {
        lower: lower.cost,
        upper: upper.cost,
        lower_witness: lower.witness,
        upper_witness: upper.witness,
    })
}

// ---------------------------------------------------------------------------
// Sweep experiment: bounds as a function of the uncertainty probability p.

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n: usize,
    pub traces: usize,
    pub p_values: Vec<f64>,
    pub deviations: DeviationParams,
    pub seed: u64,
    pub realization_cap: usize,
    pub limits: SearchLimits,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 10,
            traces: 250,
            p_values: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            deviations: DeviationParams::default(),
            seed: 1,
            realization_cap: 10_000,
            limits: SearchLimits::default(),
            workers: 1,
        }
    }
}

/// One cell of the sweep: both bounds for one trace at one `p`.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub lower: u64,
    pub upper: u64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub p: f64,
    pub cells: Vec<Result<SweepCell, String>>,
    pub elapsed_bruteforce_us: u128,
    pub elapsed_behavior_us: u128,
}

impl SweepRow {
    pub fn completed(&self) -> usize {
        self.cells.iter().filter(|c| c.is_ok()).count()
    }

    /// Totals over completed traces.
    pub fn totals(&self) -> (u64, u64) {
        self.cells.iter().flatten().fold((0, 0), |(l, u), c| {
            (l + c.lower, u + c.upper)
        })
    }
}

/// Runs the sweep pipeline: generate a model, play it out, inject
/// deviations once, then inject uncertainty per `p` with one shared seed.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    let model = generate_model(cfg.n, cfg.seed);
    let base = playout(&model, cfg.traces, cfg.seed.wrapping_add(1))?;
    let deviated = inject_deviations(&base, &cfg.deviations, cfg.seed.wrapping_add(2));
    let pool = model.alphabet();
    let injection_seed = cfg.seed.wrapping_add(3);
    let mut rows = Vec::with_capacity(cfg.p_values.len());
    for &p in &cfg.p_values {
        let params = UncertaintyParams::new(p, pool.clone());
        let uncertain = inject_uncertainty(&deviated, &params, injection_seed);
        let cells = run_pool(cfg.workers.max(1), uncertain.len(), |i| {
            sweep_cell(&uncertain[i], &model, cfg)
        });
        let mut row = SweepRow {
            p,
            cells: Vec::with_capacity(cells.len()),
            elapsed_bruteforce_us: 0,
            elapsed_behavior_us: 0,
        };
        for (cell, brute_us, behavior_us) in cells {
            row.elapsed_bruteforce_us += brute_us;
            row.elapsed_behavior_us += behavior_us;
            row.cells.push(cell);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn sweep_cell(
    trace: &SimpleUncertainTrace,
    model: &SystemNet,
    cfg: &SweepConfig,
) -> (Result<SweepCell, String>, u128, u128) {
    let cost = CostFunction::default();
    let start = Instant::now();
    let brute = bounds_bruteforce(trace, model, &cost, cfg.realization_cap, &cfg.limits);
    let brute_us = start.elapsed().as_micros();
    let start = Instant::now();
    let behavior = lower_bound(trace, model, &cost, &cfg.limits);
    let behavior_us = start.elapsed().as_micros();
    let cell = match (brute, behavior) {
        (Ok(b), Ok(lo)) => {
            if lo.cost != b.lower {
                Err(format!(
                    "internal: bound methods disagree (behavior {}, brute force {})",
                    lo.cost, b.lower
                ))
            } else {
                Ok(SweepCell {
                    lower: lo.cost,
                    upper: b.upper,
                })
            }
        }
        (Err(e), _) => Err(e.to_string()),
        (_, Err(e)) => Err(e.to_string()),
    };
    (cell, brute_us, behavior_us)
}

// ---------------------------------------------------------------------------
// Performance experiment: behavior net vs brute force over model size n.

#[derive(Clone, Debug)]
pub struct PerfConfig {
    pub n_values: Vec<usize>,
    pub traces: usize,
    pub p: f64,
    pub deviations: DeviationParams,
    pub seed: u64,
    pub realization_cap: usize,
    pub limits: SearchLimits,
    pub workers: usize,
}

impl Default for PerfConfig {
    fn default() -> Self {
        PerfConfig {
            n_values: vec![5, 8, 12],
            traces: 100,
            p: 0.2,
            deviations: DeviationParams::default(),
            seed: 1,
            realization_cap: 10_000,
            limits: SearchLimits::default(),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerfRow {
    pub n: usize,
    pub traces: usize,
    /// Traces where both methods completed; only these are timed.
    pub completed: usize,
    pub cost_total: u64,
    pub bruteforce_us_total: u128,
    pub behavior_us_total: u128,
    pub bruteforce_us_median: u128,
    pub behavior_us_median: u128,
}

impl PerfRow {
    /// Brute-force time over behavior-net time; above 1 means the behavior
    /// net is faster.
    pub fn speedup(&self) -> f64 {
        if self.behavior_us_total == 0 {
            f64::INFINITY
        } else {
            self.bruteforce_us_total as f64 / self.behavior_us_total as f64
        }
    }
}

/// Times the behavior-net lower bound against brute force per model size.
/// The two costs must agree on every trace; a mismatch aborts the run.
pub fn run_perf(cfg: &PerfConfig) -> Result<Vec<PerfRow>, ExperimentError> {
    let cost = CostFunction::default();
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let seed = cfg.seed.wrapping_add(n as u64);
        let model = generate_model(n, seed);
        let base = playout(&model, cfg.traces, seed.wrapping_add(1))?;
        let deviated = inject_deviations(&base, &cfg.deviations, seed.wrapping_add(2));
        let uncertain = inject_uncertainty(
            &deviated,
            &UncertaintyParams::new(cfg.p, model.alphabet()),
            seed.wrapping_add(3),
        );
        type PerfCell = Option<(u64, u64, u128, u128)>;
        let cells: Vec<PerfCell> = run_pool(cfg.workers.max(1), uncertain.len(), |i| {
            let trace = &uncertain[i];
            let start = Instant::now();
            let brute = bounds_bruteforce(trace, &model, &cost, cfg.realization_cap, &cfg.limits);
            let brute_ms = start.elapsed().as_micros();
            let start = Instant::now();
            let behavior = lower_bound(trace, &model, &cost, &cfg.limits);
            let behavior_ms = start.elapsed().as_micros();
            match (brute, behavior) {
                (Ok(b), Ok(lo)) => Some((b.lower, lo.cost, brute_ms, behavior_ms)),
                // Realization explosions are skipped on both sides so the
                // timed trace sets stay identical.
                _ => None,
            }
        });
        let mut row = PerfRow {
            n,
            traces: cfg.traces,
            completed: 0,
            cost_total: 0,
            bruteforce_us_total: 0,
            behavior_us_total: 0,
            bruteforce_us_median: 0,
            behavior_us_median: 0,
        };
        let mut brute_times = Vec::new();
        let mut behavior_times = Vec::new();
        for (i, cell) in cells.into_iter().enumerate() {
            let Some((brute_cost, behavior_cost, brute_us, behavior_us)) = cell else {
                continue;
            };
            if brute_cost != behavior_cost {
                return Err(ExperimentError::Inconsistent {
                    trace: i,
                    behavior: behavior_cost,
                    bruteforce: brute_cost,
                });
            }
            row.completed += 1;
            row.cost_total += brute_cost;
            row.bruteforce_us_total += brute_us;
            row.behavior_us_total += behavior_us;
            brute_times.push(brute_us);
            behavior_times.push(behavior_us);
        }
        row.bruteforce_us_median = median(&mut brute_times);
        row.behavior_us_median = median(&mut behavior_times);
        rows.push(row);
    }
    Ok(rows)
}

fn median(values: &mut [u128]) -> u128 {
    if values.is_empty() {
        return 0;
    }
    values.sort_unstable();
    values[values.len() / 2]
}
