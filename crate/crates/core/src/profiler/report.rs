use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::bounds::{check_bound, BoundSample, BoundVerdict, Phase};
use super::counters::OpCounters;
use super::fit::{fit_exponent, PowerLawFit};

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("times must be positive (sequential {0}, parallel {1})")]
    NonPositiveTime(f64, f64),
    #[error("worker count must be at least 1")]
    NoWorkers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup {
    pub speedup: f64,
    pub cost: f64,
    pub superlinear: bool,
}

/// `S = t_seq / t_par`, `C = p * t_par`.
pub fn compute_speedup(t_sequential: f64, t_parallel: f64, p: usize) -> Result<Speedup, ProfileError> {
    if t_sequential <= 0.0 || t_parallel <= 0.0 {
        return Err(ProfileError::NonPositiveTime(t_sequential, t_parallel));
    }
    if p == 0 {
        return Err(ProfileError::NoWorkers);
    }
    let speedup = t_sequential / t_parallel;
    Ok(Speedup {
        speedup,
        cost: p as f64 * t_parallel,
        superlinear: speedup > p as f64,
    })
}

/// One measured solver run.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    /// Request count.
    pub n: usize,
    pub p: usize,
    pub rep: usize,
    pub counters: OpCounters,
    pub wall_seconds: f64,
    pub route_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub phase: String,
    pub n: usize,
    pub p: usize,
    pub rep: usize,
    pub tally: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFit {
    pub phase: String,
    /// `(n, mean tally)` per measured size.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<PowerLawFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub n: usize,
    pub p: usize,
    pub t_parallel: f64,
    pub speedup: Speedup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ReportRow>,
    pub fits: Vec<PhaseFit>,
    pub bounds: Vec<BoundVerdict>,
    pub speedups: Vec<SpeedupRow>,
    pub warnings: Vec<String>,
}

fn totals(c: &OpCounters) -> Vec<(String, u64)> {
    let mut v = vec![
        ("insertion_tests".to_string(), c.insertion.total),
        ("squeeze_move_evals".to_string(), c.squeeze.total),
        ("ejection_steps".to_string(), c.ejection_total()),
    ];
    for (i, t) in c.ejection.iter().enumerate() {
        v.push((format!("ejection_steps_k{}", i + 1), t.total));
    }
    v.extend([
        ("perturb_move_evals".to_string(), c.perturb.total),
        ("coop_payload_units".to_string(), c.cooperation.total),
        ("outer_iterations".to_string(), c.outer_iterations),
        ("inner_iterations".to_string(), c.inner_iterations),
    ]);
    v
}

fn per_call_maxima(c: &OpCounters) -> Vec<(Phase, u64)> {
    let mut v = vec![
        (Phase::Insertion, c.insertion.max_per_call),
        (Phase::Squeeze, c.squeeze.max_per_call),
    ];
    for (i, t) in c.ejection.iter().enumerate() {
        v.push((Phase::Ejection(i as u32 + 1), t.max_per_call));
    }
    v.push((Phase::Perturb, c.perturb.max_per_call));
    v.push((Phase::Cooperation, c.cooperation.max_per_call));
    v
}

impl ScalingReport {
    /// Builds rows, log-log fits of run totals (at the smallest worker count
    /// in the sweep), per-call bound checks and the speedup table.
    pub fn from_runs(runs: &[ProfileRun], perturb_steps: usize) -> Self {
        let mut rows = Vec::new();
        for r in runs {
            for (phase, tally) in totals(&r.counters) {
                rows.push(ReportRow { phase, n: r.n, p: r.p, rep: r.rep, tally, wall_seconds: r.wall_seconds });
            }
            for (phase, tally) in per_call_maxima(&r.counters) {
                rows.push(ReportRow {
                    phase: format!("{phase}_max_call"),
                    n: r.n,
                    p: r.p,
                    rep: r.rep,
                    tally,
                    wall_seconds: r.wall_seconds,
                });
            }
        }

        let mut warnings = Vec::new();
        let base_p = runs.iter().map(|r| r.p).min().unwrap_or(1);
        let base: Vec<&ProfileRun> = runs.iter().filter(|r| r.p == base_p).collect();
        let sizes: std::collections::BTreeSet<usize> = base.iter().map(|r| r.n).collect();

        let mut fits = Vec::new();
        if let Some(first) = base.first() {
            for (phase, _) in totals(&first.counters) {
                let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                for r in &base {
                    if let Some((_, t)) = totals(&r.counters).into_iter().find(|(p, _)| *p == phase) {
                        by_n.entry(r.n).or_default().push(t as f64);
                    }
                }
                let points: Vec<(f64, f64)> = by_n
                    .iter()
                    .map(|(n, v)| (*n as f64, v.iter().sum::<f64>() / v.len() as f64))
                    .collect();
                let fit = if sizes.len() >= 3 { fit_exponent(&points).ok() } else { None };
                fits.push(PhaseFit { phase, points, fit });
            }
        }
        if sizes.len() < 3 {
            warnings.push(format!(
                "only {} distinct sizes measured; exponents need at least 3",
                sizes.len()
            ));
        }

        let mut bounds = Vec::new();
        if let Some(first) = runs.first() {
            for (phase, _) in per_call_maxima(&first.counters) {
                let mut worst: BTreeMap<(usize, usize), f64> = BTreeMap::new();
                for r in runs {
                    let t = per_call_maxima(&r.counters)
                        .into_iter()
                        .find(|(p, _)| *p == phase)
                        .map(|(_, t)| t as f64)
                        .unwrap_or(0.0);
                    let e = worst.entry((r.n, r.p)).or_insert(0.0);
                    *e = e.max(t);
                }
                let samples: Vec<BoundSample> = worst
                    .iter()
                    .map(|(&(n, p), &tally)| BoundSample { n: n as f64, p: p as f64, tally })
                    .collect();
                let distinct = samples
                    .iter()
                    .map(|s| phase.bound(s.n, s.p, perturb_steps as f64).to_bits())
                    .collect::<std::collections::BTreeSet<_>>();
                if distinct.len() >= 2 {
                    bounds.push(check_bound(phase, &samples, perturb_steps as f64));
                }
            }
        }

        let mut speedups = Vec::new();
        let mut wall: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for r in runs {
            wall.entry((r.n, r.p)).or_default().push(r.wall_seconds);
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        for (&(n, p), v) in &wall {
            if let Some(seq) = wall.get(&(n, 1)) {
                if let Ok(s) = compute_speedup(mean(seq), mean(v), p) {
                    speedups.push(SpeedupRow { n, p, t_parallel: mean(v), speedup: s });
                }
            }
        }

        Self { rows, fits, bounds, speedups, warnings }
    }

    pub fn fit_for(&self, phase: &str) -> Option<&PhaseFit> {
        self.fits.iter().find(|f| f.phase == phase)
    }

    /// CSV rows followed by `#`-prefixed summary lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase,n,p,rep,tally,wall_seconds\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{:.6}", r.phase, r.n, r.p, r.rep, r.tally, r.wall_seconds);
        }
        for f in &self.fits {
            match &f.fit {
                Some(fit) => {
                    let _ = writeln!(
                        s,
                        "# fit phase={} exponent={:.4} residual={:.4} sizes={}",
                        f.phase,
                        fit.exponent,
                        fit.residual,
                        f.points.len()
                    );
                }
                None => {
                    let _ = writeln!(s, "# fit phase={} exponent=NA sizes={}", f.phase, f.points.len());
                }
            }
        }
        for b in &self.bounds {
            let _ = writeln!(
                s,
                "# bound phase={} bound={} verdict={} c={:.6e} worst_ratio={:.4}",
                b.phase,
                b.phase.bound_label(),
                if b.pass { "pass" } else { "fail" },
                b.constant,
                b.worst_ratio
            );
        }
        for sp in &self.speedups {
            let _ = writeln!(
                s,
                "# speedup n={} p={} S={:.4} C={:.4} superlinear={}",
                sp.n, sp.p, sp.speedup.speedup, sp.speedup.cost, sp.speedup.superlinear
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "# warning {w}");
        }
        s
    }
}

/// Bound verdicts of a report, one per phase.
pub fn check_pessimistic_bounds(report: &ScalingReport) -> &[BoundVerdict] {
    &report.bounds
}
