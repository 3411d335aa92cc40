use std::time::Duration;

use crate::ges::{derive_seed, GesConfig, GesError};
use crate::model::Instance;
use crate::ring::run_parallel;
use crate::synthetic::{generate, GeneratorConfig, Layout};

use super::ProfileRun;

/// A profiling sweep over instance sizes, repetitions and worker counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Customer counts (two per request).
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub workers: Vec<usize>,
    pub solver: GesConfig,
    /// Sets the inner iteration cap to this factor times the request count.
    pub inner_cap_per_request: Option<f64>,
    /// Repetition `r` uses `layouts[r % layouts.len()]`.
    pub layouts: Vec<Layout>,
    pub watchdog: Duration,
}

impl SweepConfig {
    /// Stopping rule used for exponent measurements: attempts are capped at
    /// `n` inner iterations and a worker stops at its first failed attempt,
    /// so every run is a complete, time-independent descent.
    pub fn descent(sizes: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            sizes,
            reps,
            workers: vec![1],
            solver: GesConfig {
                time_limit: None,
                max_failed_attempts: Some(1),
                seed,
                ..GesConfig::default()
            },
            inner_cap_per_request: Some(1.0),
            layouts: vec![Layout::Random, Layout::Clustered, Layout::Mixed],
            watchdog: Duration::from_secs(60),
        }
    }

    pub fn solver_for(&self, inst: &Instance, rep: usize) -> GesConfig {
        let mut cfg = self.solver.clone();
        cfg.seed = derive_seed(self.solver.seed, 1000 + rep);
        if let Some(f) = self.inner_cap_per_request {
            cfg.inner_iteration_cap = Some((f * inst.n() as f64).ceil() as u64);
        }
        cfg
    }
}

/// Synthetic instance for one sweep cell; repetition `rep` uses its own
/// instance seed.
pub fn sweep_instance(cfg: &SweepConfig, customers: usize, rep: usize) -> Result<Instance, GesError> {
    let layout = cfg.layouts[rep % cfg.layouts.len()];
    generate(&GeneratorConfig::new(layout, customers, cfg.solver.seed.wrapping_add(rep as u64)))
        .map_err(GesError::Config)
}

/// Runs every (size, repetition, worker count) cell on `instance(size, rep)`.
/// `on_run` sees each finished run, e.g. for progress output.
pub fn run_sweep(
    cfg: &SweepConfig,
    instance: impl Fn(usize, usize) -> Result<Instance, GesError>,
    mut on_run: impl FnMut(&ProfileRun),
) -> Result<Vec<ProfileRun>, GesError> {
    let mut runs = Vec::new();
    for &size in &cfg.sizes {
        for rep in 0..cfg.reps {
            let inst = instance(size, rep)?;
            let solver = cfg.solver_for(&inst, rep);
            for &p in &cfg.workers {
                let out = run_parallel(&inst, &solver, p, cfg.watchdog)?;
                let run = ProfileRun {
                    n: inst.n(),
                    p,
                    rep,
                    counters: out.counters,
                    wall_seconds: out.elapsed.as_secs_f64(),
                    route_count: out.best.route_count(),
                };
                on_run(&run);
                runs.push(run);
            }
        }
    }
    Ok(runs)
}
