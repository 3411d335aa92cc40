//! Sequential guided ejection search for route minimization.

mod ejection;
mod insertion;
mod perturb;
mod squeeze;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{simulate_route, Instance, RequestId, Route, Solution, Violation};
use crate::profiler::OpCounters;

pub use ejection::{ejection_search, EjectionCandidate};
pub use insertion::{feasible_insertions, InsertionCandidate};
pub use perturb::perturb;
pub use squeeze::squeeze;

#[derive(Debug, Clone, PartialEq)]
pub struct GesConfig {
    pub k_max: usize,
    /// Perturbation steps applied after each ejection (I).
    pub perturb_steps: usize,
    /// Outer iterations per worker (z1 cap). Reaching it finishes the run.
    pub max_outer_iterations: Option<u64>,
    /// Inner iterations per outer iteration (z2 cap). Reaching it fails the
    /// attempt.
    pub inner_iteration_cap: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Consecutive failed attempts after which the worker stops.
    pub max_failed_attempts: Option<u64>,
    pub target_route_count: Option<usize>,
    pub seed: u64,
    /// Restore the initial one-route-per-request solution after a failed
    /// attempt instead of keeping the best found so far.
    pub literal_line_31: bool,
    /// External stop request, e.g. from a signal handler.
    pub cancel: CancelToken,
}

/// Shared stop flag. Clones observe the same flag.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

impl PartialEq for CancelToken {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Default for GesConfig {
    fn default() -> Self {
        Self {
            k_max: 3,
            perturb_steps: 100,
            max_outer_iterations: None,
            inner_iteration_cap: None,
            time_limit: Some(Duration::from_secs(60)),
            max_failed_attempts: None,
            target_route_count: None,
            seed: 0,
            literal_line_31: false,
            cancel: CancelToken::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GesError {
    #[error("request {request} cannot be served even alone: {}", describe(.violations))]
    Unsolvable { request: RequestId, violations: Vec<Violation> },
    #[error("solution has no routes")]
    EmptySolution,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cooperation failed: {0}")]
    Cooperation(String),
    #[error("watchdog fired: {0}")]
    Watchdog(String),
    #[error("worker {worker} panicked: {message}")]
    WorkerPanic { worker: usize, message: String },
}

fn describe(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Unserved requests, retried last-in first-out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EjectionPool {
    stack: Vec<RequestId>,
}

impl EjectionPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, req: RequestId) {
        self.stack.push(req);
    }

    pub fn pop(&mut self) -> Option<RequestId> {
        self.stack.pop()
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn contains(&self, req: RequestId) -> bool {
        self.stack.contains(&req)
    }

    pub fn iter(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.stack.iter().copied()
    }
}

impl Extend<RequestId> for EjectionPool {
    fn extend<T: IntoIterator<Item = RequestId>>(&mut self, iter: T) {
        self.stack.extend(iter);
    }
}

/// Per-request failure counters p[h], all starting at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyCounters {
    p: Vec<u64>,
}

impl PenaltyCounters {
    pub fn new(n: usize) -> Self {
        Self { p: vec![1; n] }
    }

    pub fn get(&self, req: RequestId) -> u64 {
        self.p[req]
    }

    pub fn bump(&mut self, req: RequestId) {
        self.p[req] += 1;
    }

    pub fn reset(&mut self) {
        self.p.fill(1);
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.p
    }
}

/// One route per request. Fails on the first request that is infeasible
/// even when served alone.
pub fn build_initial_solution(inst: &Instance) -> Result<Solution, GesError> {
    let mut sol = Solution::empty(inst);
    for req in inst.requests() {
        let visits = vec![req.pickup, req.delivery];
        let violations = simulate_route(&visits, inst);
        if !violations.is_empty() {
            return Err(GesError::Unsolvable { request: req.id, violations });
        }
        sol.push_route(inst, visits);
    }
    Ok(sol)
}

pub fn select_route_for_removal(sol: &Solution, rng: &mut impl Rng) -> Result<usize, GesError> {
    if sol.route_count() == 0 {
        return Err(GesError::EmptySolution);
    }
    Ok(rng.gen_range(0..sol.route_count()))
}

/// Mixes a worker index into the global seed.
pub fn derive_seed(global: u64, worker: usize) -> u64 {
    let mut z = global ^ (worker as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Link between a kernel and its peers.
pub trait CoopHook {
    /// Exchanges solutions after an inner iteration. `best` may be replaced
    /// by a received solution with fewer routes. Returns the finished flag.
    fn cooperate(&mut self, best: &mut Solution, local_finished: bool, counters: &mut OpCounters) -> Result<bool, GesError>;

    /// Keeps servicing peers after the main loop until finished is observed.
    fn drain(&mut self, _best: &mut Solution, _counters: &mut OpCounters) -> Result<(), GesError> {
        Ok(())
    }
}

/// Hook for a single worker.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCooperation;

impl CoopHook for NoCooperation {
    fn cooperate(&mut self, _best: &mut Solution, local_finished: bool, _counters: &mut OpCounters) -> Result<bool, GesError> {
        Ok(local_finished)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempt {
    /// The removed route's requests were all reinserted.
    Reduced,
    /// Inner cap hit, or the run finished with the pool nonempty.
    Failed,
    /// A peer delivered a solution at least as small as this attempt's goal.
    Superseded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    TimeLimit,
    OuterIterationCap,
    /// Too many consecutive failed attempts.
    Stalled,
    /// A single route is left.
    Exhausted,
    Cancelled,
    /// A peer signalled finished.
    Peer,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TargetReached => "target",
            StopReason::TimeLimit => "time_limit",
            StopReason::OuterIterationCap => "outer_cap",
            StopReason::Stalled => "stalled",
            StopReason::Exhausted => "single_route",
            StopReason::Cancelled => "cancelled",
            StopReason::Peer => "peer",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Solution,
    pub initial_route_count: usize,
    pub counters: OpCounters,
    pub stop: StopReason,
    pub elapsed: Duration,
}

/// Single-worker kernel state: current σ, best σ and the search RNG.
pub struct Ges<'a> {
    inst: &'a Instance,
    config: GesConfig,
    rng: ChaCha8Rng,
    initial: Solution,
    current: Solution,
    best: Solution,
    penalties: PenaltyCounters,
    counters: OpCounters,
    started: Instant,
    failed_streak: u64,
    finished: bool,
}

impl<'a> Ges<'a> {
    pub fn new(inst: &'a Instance, config: GesConfig) -> Result<Self, GesError> {
        let initial = build_initial_solution(inst)?;
        Self::with_solution(inst, config, initial)
    }

    /// Starts from a given feasible solution instead of the singleton routes.
    pub fn with_solution(inst: &'a Instance, config: GesConfig, start: Solution) -> Result<Self, GesError> {
        if config.k_max == 0 {
            return Err(GesError::Config("k_max must be at least 1".into()));
        }
        Ok(Self {
            inst,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            counters: OpCounters::new(config.k_max),
            penalties: PenaltyCounters::new(inst.n()),
            config,
            initial: start.clone(),
            current: start.clone(),
            best: start,
            started: Instant::now(),
            failed_streak: 0,
            finished: false,
        })
    }

    pub fn best(&self) -> &Solution {
        &self.best
    }

    pub fn current(&self) -> &Solution {
        &self.current
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    pub fn penalties(&self) -> &PenaltyCounters {
        &self.penalties
    }

    fn time_up(&self) -> bool {
        self.config.time_limit.is_some_and(|t| self.started.elapsed() >= t)
    }

    /// Stop condition checked between outer iterations. Inside an attempt
    /// only the conditions that can change there are checked.
    fn local_stop(&self, mid_attempt: bool) -> Option<StopReason> {
        let routes = self.best.route_count();
        if self.config.cancel.is_cancelled() {
            Some(StopReason::Cancelled)
        } else if self.config.target_route_count.is_some_and(|t| routes <= t) {
            Some(StopReason::TargetReached)
        } else if routes <= 1 {
            Some(StopReason::Exhausted)
        } else if !mid_attempt && self.config.max_outer_iterations.is_some_and(|c| self.counters.outer_iterations >= c) {
            Some(StopReason::OuterIterationCap)
        } else if !mid_attempt && self.config.max_failed_attempts.is_some_and(|c| self.failed_streak >= c) {
            Some(StopReason::Stalled)
        } else if self.time_up() {
            Some(StopReason::TimeLimit)
        } else {
            None
        }
    }

    /// One outer iteration: remove a random route and try to reinsert its
    /// requests.
    pub fn minimize_routes_once(&mut self, hook: &mut impl CoopHook) -> Result<Attempt, GesError> {
        let inst = self.inst;
        self.counters.outer_iterations += 1;
        let goal = self.current.route_count().saturating_sub(1);
        let removed = select_route_for_removal(&self.current, &mut self.rng)?;
        let mut pool = EjectionPool::new();
        pool.extend(self.current.remove_route(inst, removed));
        self.penalties.reset();
        let mut inner = 0u64;
        let mut superseded = false;
        while !pool.is_empty() && !self.finished {
            if self.config.inner_iteration_cap.is_some_and(|c| inner >= c) {
                break;
            }
            inner += 1;
            self.counters.inner_iterations += 1;
            let h = pool.pop().expect("pool is nonempty");
            self.insert_or_eject(h, &mut pool);
            debug_assert_eq!(self.current.served_count() + pool.len(), inst.n(), "served set and pool must partition the requests");
            let local = self.local_stop(true).is_some();
            self.finished = hook.cooperate(&mut self.best, local, &mut self.counters)?;
            if self.best.route_count() <= goal {
                superseded = true;
                break;
            }
        }
        let attempt = if pool.is_empty() && !superseded {
            self.best = self.current.clone();
            Attempt::Reduced
        } else {
            if self.config.literal_line_31 && !superseded {
                self.best = self.initial.clone();
            }
            if superseded {
                Attempt::Superseded
            } else {
                Attempt::Failed
            }
        };
        self.current = self.best.clone();
        match attempt {
            Attempt::Failed => self.failed_streak += 1,
            _ => self.failed_streak = 0,
        }
        Ok(attempt)
    }

    fn insert_or_eject(&mut self, h: RequestId, pool: &mut EjectionPool) {
        let inst = self.inst;
        let cands = feasible_insertions(inst, &self.current, h, &mut self.counters);
        if let Some(c) = cands.choose(&mut self.rng) {
            self.current.insert(inst, c.route, &inst.request(h), c.slots);
        } else {
            self.current = squeeze(inst, &self.current, h, &mut self.rng, &mut self.counters);
        }
        if self.current.is_served(h) {
            return;
        }
        self.penalties.bump(h);
        let mut placed = false;
        for k in 1..=self.config.k_max {
            let found = ejection_search(inst, &self.current, h, &self.penalties, k, &mut self.counters);
            if let Some(c) = found.choose(&mut self.rng) {
                let reduced = Route::new(inst, self.current.route(c.route).without(inst, &c.ejected));
                let visits = reduced.with_insertion(&inst.request(h), c.slots);
                self.current.set_route(inst, c.route, visits);
                pool.extend(c.ejected.iter().copied());
                placed = true;
                break;
            }
        }
        if !placed {
            pool.push(h);
        }
        perturb(inst, &mut self.current, self.config.perturb_steps, &mut self.rng, &mut self.counters);
    }

    /// Outer loop until finished, then the drain.
    pub fn run(mut self, hook: &mut impl CoopHook) -> Result<RunOutcome, GesError> {
        let initial_route_count = self.initial.route_count();
        let mut stop = self.local_stop(false);
        while stop.is_none() && !self.finished {
            self.minimize_routes_once(hook)?;
            stop = self.local_stop(false);
        }
        if stop.is_none() && self.time_up() {
            stop = Some(StopReason::TimeLimit);
        }
        self.finished = true;
        hook.drain(&mut self.best, &mut self.counters)?;
        Ok(RunOutcome {
            best: self.best,
            initial_route_count,
            counters: self.counters,
            stop: stop.unwrap_or(StopReason::Peer),
            elapsed: self.started.elapsed(),
        })
    }
}

/// Runs one worker without peers, seeded as worker 0 of a ring.
pub fn solve(inst: &Instance, config: &GesConfig) -> Result<RunOutcome, GesError> {
    let mut cfg = config.clone();
    cfg.seed = derive_seed(config.seed, 0);
    if inst.n() == 0 {
        let best = Solution::empty(inst);
        return Ok(RunOutcome {
            best,
            initial_route_count: 0,
            counters: OpCounters::new(cfg.k_max),
            stop: StopReason::Exhausted,
            elapsed: Duration::ZERO,
        });
    }
    Ges::new(inst, cfg)?.run(&mut NoCooperation)
}
