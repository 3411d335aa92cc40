//! Workers on a unidirectional ring exchanging best solutions.
//!
//! Each worker owns one inbox written by its predecessor. Sends never block:
//! a full inbox drops its oldest message. Every message carries the sender's
//! finished flag, and a solution payload only when the sender's best route
//! count dropped since its previous send.

use std::collections::VecDeque;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ges::{derive_seed, CoopHook, Ges, GesConfig, GesError, RunOutcome, StopReason};
use crate::io::SolutionFile;
use crate::model::{Instance, PointId, Solution};
use crate::profiler::OpCounters;

/// Default inbox capacity.
pub const MAILBOX_CAPACITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingTopology {
    p: usize,
}

impl RingTopology {
    pub fn new(p: usize) -> Result<Self, GesError> {
        if p == 0 {
            return Err(GesError::Config("a ring needs at least one worker".into()));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.p
    }

    pub fn prev(&self, i: usize) -> usize {
        (i + self.p - 1) % self.p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooperationMessage {
    pub sender: usize,
    pub route_count: usize,
    pub finished: bool,
    pub solution: Option<Arc<Vec<Vec<PointId>>>>,
}

impl CooperationMessage {
    /// Point ids carried by the payload.
    pub fn payload_units(&self) -> u64 {
        self.solution.as_ref().map_or(0, |s| s.iter().map(|r| r.len() as u64).sum())
    }

    /// Length-prefixed little-endian record: total length of what follows
    /// (u32), sender (u32), route count (u32), finished (u8), payload flag
    /// (u8), then the route lines as text.
    pub fn encode(&self) -> Vec<u8> {
        let body = self
            .solution
            .as_ref()
            .map(|r| SolutionFile { instance: None, routes: r.to_vec() }.body())
            .unwrap_or_default();
        let len = 4 + 4 + 1 + 1 + body.len();
        let mut out = Vec::with_capacity(4 + len);
        out.extend_from_slice(&(len as u32).to_le_bytes());
        out.extend_from_slice(&(self.sender as u32).to_le_bytes());
        out.extend_from_slice(&(self.route_count as u32).to_le_bytes());
        out.push(u8::from(self.finished));
        out.push(u8::from(self.solution.is_some()));
        out.extend_from_slice(body.as_bytes());
        out
    }

    /// Decodes one record from the front of `bytes`; returns it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize), WireError> {
        let word = |at: usize| -> Result<u32, WireError> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or(WireError::Truncated)
        };
        let len = word(0)? as usize;
        if len < 10 {
            return Err(WireError::BadLength(len));
        }
        let end = 4 + len;
        if bytes.len() < end {
            return Err(WireError::Truncated);
        }
        let sender = word(4)? as usize;
        let route_count = word(8)? as usize;
        let finished = match bytes[12] {
            0 => false,
            1 => true,
            b => return Err(WireError::BadFlag(b)),
        };
        let body = std::str::from_utf8(&bytes[14..end]).map_err(|_| WireError::BadPayload("not UTF-8".into()))?;
        let solution = match bytes[13] {
            0 if body.is_empty() => None,
            0 => return Err(WireError::BadPayload("payload present but flag unset".into())),
            1 => {
                let routes: Vec<Vec<PointId>> = body
                    .lines()
                    .map(|l| l.split_whitespace().map(str::parse).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| WireError::BadPayload(format!("{e}")))?;
                if routes.len() != route_count {
                    return Err(WireError::BadPayload(format!(
                        "{} routes for route count {route_count}",
                        routes.len()
                    )));
                }
                Some(Arc::new(routes))
            }
            b => return Err(WireError::BadFlag(b)),
        };
        Ok((
            Self {
                sender,
                route_count,
                finished,
                solution,
            },
            end,
        ))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("record is truncated")]
    Truncated,
    #[error("record length {0} is too short")]
    BadLength(usize),
    #[error("flag byte {0} is not 0 or 1")]
    BadFlag(u8),
    #[error("bad payload: {0}")]
    BadPayload(String),
}

/// Bounded inbox; a push into a full box drops the oldest message.
#[derive(Debug)]
pub struct Mailbox {
    queue: Mutex<VecDeque<CooperationMessage>>,
    ready: Condvar,
    capacity: usize,
}

impl Mailbox {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: Mutex::new(VecDeque::with_capacity(capacity)),
            ready: Condvar::new(),
            capacity: capacity.max(1),
        }
    }

    /// Returns true when a message had to be dropped.
    pub fn push(&self, msg: CooperationMessage) -> bool {
        let mut q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
        let dropped = q.len() >= self.capacity;
        if dropped {
            q.pop_front();
        }
        q.push_back(msg);
        self.ready.notify_all();
        dropped
    }

    pub fn take_all(&self) -> Vec<CooperationMessage> {
        let mut q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
        q.drain(..).collect()
    }

    /// Waits up to `timeout` for a message, then takes everything queued.
    pub fn wait_take(&self, timeout: Duration) -> Vec<CooperationMessage> {
        let q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
        let (mut q, _) = self
            .ready
            .wait_timeout_while(q, timeout, |q| q.is_empty())
            .unwrap_or_else(|e| e.into_inner());
        q.drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A message as seen by the log: one line per send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    /// Position in the global order of ring events.
    pub seq: u64,
    pub micros: u64,
    pub sender: usize,
    pub receiver: usize,
    pub route_count: usize,
    pub finished: bool,
    pub payload: bool,
    pub units: u64,
}

impl fmt::Display for MessageRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seq={} t_us={} from={} to={} route_count={} finished={} payload={} units={}",
            self.seq,
            self.micros,
            self.sender,
            self.receiver,
            self.route_count,
            u8::from(self.finished),
            u8::from(self.payload),
            self.units
        )
    }
}

/// One cooperation call on one worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoopEvent {
    pub seq: u64,
    pub worker: usize,
    /// Finished flag before and after the call.
    pub was_finished: bool,
    pub finished: bool,
    pub draining: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingOptions {
    pub mailbox_capacity: usize,
    /// Longest time a worker may spend in the drain loop.
    pub watchdog: Duration,
    /// Route count every worker starts from; the reference for the first send.
    pub initial_route_count: usize,
}

impl Default for RingOptions {
    fn default() -> Self {
        Self {
            mailbox_capacity: MAILBOX_CAPACITY,
            watchdog: Duration::from_secs(30),
            initial_route_count: usize::MAX,
        }
    }
}

struct Shared {
    topology: RingTopology,
    inboxes: Vec<Mailbox>,
    abort: AtomicBool,
    clock: AtomicU64,
    started: Instant,
}

impl Shared {
    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::SeqCst)
    }
}

/// A worker's end of the ring. Implements the kernel's cooperation hook.
pub struct RingPort {
    index: usize,
    shared: Arc<Shared>,
    watchdog: Duration,
    last_sent: usize,
    finished: bool,
    sent_finished: bool,
    prev_finished: bool,
    draining: bool,
    messages: Vec<MessageRecord>,
    events: Vec<CoopEvent>,
}

impl RingPort {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn check_abort(&self) -> Result<(), GesError> {
        if self.shared.abort.load(Ordering::SeqCst) {
            Err(GesError::Cooperation(format!("worker {}: ring aborted by a peer", self.index)))
        } else {
            Ok(())
        }
    }

    fn absorb(&mut self, msgs: Vec<CooperationMessage>, best: &mut Solution, inst: Option<&Instance>) -> Result<(), GesError> {
        for msg in msgs {
            if msg.finished {
                self.finished = true;
                self.prev_finished = true;
            }
            if let Some(routes) = &msg.solution {
                if msg.route_count < best.route_count() {
                    if let Some(inst) = inst {
                        *best = Solution::from_routes(inst, routes.to_vec())
                            .map_err(|e| GesError::Cooperation(format!("worker {}: bad payload: {e}", self.index)))?;
                    }
                }
            }
        }
        Ok(())
    }

    fn send(&mut self, best: &Solution, units: &mut u64) {
        let decreased = best.route_count() < self.last_sent;
        let announce = self.finished && !self.sent_finished;
        if !decreased && !announce {
            return;
        }
        let solution = decreased.then(|| Arc::new(best.visit_lists()));
        let msg = CooperationMessage {
            sender: self.index,
            route_count: best.route_count(),
            finished: self.finished,
            solution,
        };
        let sent_units = msg.payload_units();
        *units += sent_units;
        let receiver = self.shared.topology.next(self.index);
        self.messages.push(MessageRecord {
            seq: self.shared.tick(),
            micros: self.shared.started.elapsed().as_micros() as u64,
            sender: self.index,
            receiver,
            route_count: msg.route_count,
            finished: msg.finished,
            payload: msg.solution.is_some(),
            units: sent_units,
        });
        self.shared.inboxes[receiver].push(msg);
        if decreased {
            self.last_sent = best.route_count();
        }
        self.sent_finished |= self.finished;
    }

    /// Receive then send; shared by the kernel hook and scripted workers.
    fn round(&mut self, best: &mut Solution, local_finished: bool, counters: &mut OpCounters, inst: Option<&Instance>, wait: Option<Duration>) -> Result<bool, GesError> {
        self.check_abort()?;
        let was_finished = self.finished;
        let inbox = &self.shared.inboxes[self.index];
        let msgs = match wait {
            Some(t) => inbox.wait_take(t),
            None => inbox.take_all(),
        };
        let mut units = 0;
        self.absorb(msgs, best, inst)?;
        self.finished |= local_finished;
        self.send(best, &mut units);
        counters.cooperation.record(units);
        self.events.push(CoopEvent {
            seq: self.shared.tick(),
            worker: self.index,
            was_finished,
            finished: self.finished,
            draining: self.draining,
        });
        Ok(self.finished)
    }

    fn settled(&self) -> bool {
        self.finished && self.sent_finished && (self.prev_finished || self.shared.topology.p() == 1)
    }

    fn drain_loop(&mut self, best: &mut Solution, counters: &mut OpCounters, inst: Option<&Instance>) -> Result<(), GesError> {
        if self.shared.topology.p() == 1 {
            self.finished = true;
            return Ok(());
        }
        self.draining = true;
        let entered = Instant::now();
        self.finished = true;
        while !self.settled() {
            if entered.elapsed() > self.watchdog {
                self.shared.abort.store(true, Ordering::SeqCst);
                return Err(GesError::Watchdog(self.dump()));
            }
            self.round(best, true, counters, inst, Some(Duration::from_millis(5)))?;
        }
        Ok(())
    }

    /// Cooperation step for workers that are not a GES kernel.
    pub fn step(&mut self, best: &mut Solution, local_finished: bool, counters: &mut OpCounters) -> Result<bool, GesError> {
        if self.shared.topology.p() == 1 {
            self.finished |= local_finished;
            return Ok(self.finished);
        }
        self.round(best, local_finished, counters, None, None)
    }

    /// Drain for workers that are not a GES kernel.
    pub fn drain_until_finished(&mut self, best: &mut Solution, counters: &mut OpCounters) -> Result<(), GesError> {
        self.drain_loop(best, counters, None)
    }

    fn dump(&self) -> String {
        let mut s = format!(
            "worker {} stuck in drain: finished={} sent_finished={} prev_finished={} last_sent={};",
            self.index, self.finished, self.sent_finished, self.prev_finished, self.last_sent
        );
        for (i, b) in self.shared.inboxes.iter().enumerate() {
            s.push_str(&format!(" inbox[{i}]={}", b.len()));
        }
        s
    }
}

/// Kernel-facing port: replaces the best solution from received payloads.
pub struct KernelPort<'a> {
    pub port: &'a mut RingPort,
    pub inst: &'a Instance,
}

impl CoopHook for KernelPort<'_> {
    fn cooperate(&mut self, best: &mut Solution, local_finished: bool, counters: &mut OpCounters) -> Result<bool, GesError> {
        if self.port.shared.topology.p() == 1 {
            return Ok(local_finished);
        }
        self.port.round(best, local_finished, counters, Some(self.inst), None)
    }

    fn drain(&mut self, best: &mut Solution, counters: &mut OpCounters) -> Result<(), GesError> {
        self.port.drain_loop(best, counters, Some(self.inst))
    }
}

/// Output of a ring run.
#[derive(Debug)]
pub struct RingRun<T> {
    pub outputs: Vec<T>,
    /// Every send, ordered by `seq`.
    pub messages: Vec<MessageRecord>,
    /// Every cooperation call, ordered by `seq`.
    pub events: Vec<CoopEvent>,
}

/// Runs `worker(i, port)` for every ring position on its own thread and
/// joins them. A panic or error on one worker aborts the others.
pub fn run_ring<T, F>(p: usize, options: &RingOptions, worker: F) -> Result<RingRun<T>, GesError>
where
    T: Send,
    F: Fn(usize, &mut RingPort) -> Result<T, GesError> + Sync,
{
    let topology = RingTopology::new(p)?;
    let shared = Arc::new(Shared {
        topology,
        inboxes: (0..p).map(|_| Mailbox::new(options.mailbox_capacity)).collect(),
        abort: AtomicBool::new(false),
        clock: AtomicU64::new(0),
        started: Instant::now(),
    });
    let results: Vec<Result<(T, RingPort), GesError>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..p)
            .map(|i| {
                let shared = Arc::clone(&shared);
                let worker = &worker;
                scope.spawn(move || {
                    let mut port = RingPort {
                        index: i,
                        shared: Arc::clone(&shared),
                        watchdog: options.watchdog,
                        last_sent: options.initial_route_count,
                        finished: false,
                        sent_finished: false,
                        prev_finished: false,
                        draining: false,
                        messages: Vec::new(),
                        events: Vec::new(),
                    };
                    let out = panic::catch_unwind(AssertUnwindSafe(|| worker(i, &mut port)));
                    match out {
                        Ok(Ok(v)) => Ok((v, port)),
                        Ok(Err(e)) => {
                            shared.abort.store(true, Ordering::SeqCst);
                            Err(e)
                        }
                        Err(payload) => {
                            shared.abort.store(true, Ordering::SeqCst);
                            let message = payload
                                .downcast_ref::<&str>()
                                .map(|s| s.to_string())
                                .or_else(|| payload.downcast_ref::<String>().cloned())
                                .unwrap_or_else(|| "unknown panic".into());
                            Err(GesError::WorkerPanic { worker: i, message })
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panics are caught")).collect()
    });
    let mut outputs = Vec::with_capacity(p);
    let mut messages = Vec::new();
    let mut events = Vec::new();
    let mut first_error: Option<GesError> = None;
    for r in results {
        match r {
            Ok((v, port)) => {
                outputs.push(v);
                messages.extend(port.messages);
                events.extend(port.events);
            }
            Err(e) => {
                // Prefer the root cause over the peers' abort notices.
                let is_notice = matches!(e, GesError::Cooperation(_));
                if first_error.as_ref().is_none_or(|f| matches!(f, GesError::Cooperation(_)) && !is_notice) {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    messages.sort_by_key(|m| m.seq);
    events.sort_by_key(|e| e.seq);
    Ok(RingRun { outputs, messages, events })
}

#[derive(Debug)]
pub struct ParallelOutcome {
    pub best: Solution,
    /// Worker whose solution was returned.
    pub best_worker: usize,
    pub workers: Vec<RunOutcome>,
    /// Counters of all workers merged.
    pub counters: OpCounters,
    pub messages: Vec<MessageRecord>,
    pub events: Vec<CoopEvent>,
    pub elapsed: Duration,
}

impl ParallelOutcome {
    pub fn initial_route_count(&self) -> usize {
        self.workers.first().map_or(0, |w| w.initial_route_count)
    }

    pub fn stop(&self) -> StopReason {
        self.workers[self.best_worker].stop
    }
}

/// Runs `p` kernels on a ring; worker `i` is seeded with
/// `derive_seed(config.seed, i)`. Returns the solution with the fewest routes,
/// lowest worker index on ties.
pub fn run_parallel(inst: &Instance, config: &GesConfig, p: usize, watchdog: Duration) -> Result<ParallelOutcome, GesError> {
    let started = Instant::now();
    let options = RingOptions {
        watchdog,
        initial_route_count: inst.n(),
        ..RingOptions::default()
    };
    if inst.n() == 0 {
        RingTopology::new(p)?;
        let solo = crate::ges::solve(inst, config)?;
        return Ok(ParallelOutcome {
            best: solo.best.clone(),
            best_worker: 0,
            counters: solo.counters.clone(),
            workers: vec![solo],
            messages: Vec::new(),
            events: Vec::new(),
            elapsed: started.elapsed(),
        });
    }
    let run = run_ring(p, &options, |i, port| {
        let cfg = GesConfig {
            seed: derive_seed(config.seed, i),
            ..config.clone()
        };
        let mut hook = KernelPort { port, inst };
        Ges::new(inst, cfg)?.run(&mut hook)
    })?;
    let mut counters = OpCounters::new(config.k_max);
    for w in &run.outputs {
        counters.merge(&w.counters);
    }
    let best_worker = (0..run.outputs.len())
        .min_by_key(|&i| (run.outputs[i].best.route_count(), i))
        .expect("at least one worker");
    Ok(ParallelOutcome {
        best: run.outputs[best_worker].best.clone(),
        best_worker,
        workers: run.outputs,
        counters,
        messages: run.messages,
        events: run.events,
        elapsed: started.elapsed(),
    })
}

/// Checks the send discipline on a message log: a payload only after a strict
/// decrease of the sender's route count since its previous send (or since
/// `initial` for the first), and no message without payload may report a
/// changed count. Returns one line per violation.
pub fn send_discipline_violations(messages: &[MessageRecord], p: usize, initial: usize) -> Vec<String> {
    let mut last = vec![initial; p];
    let mut out = Vec::new();
    for m in messages {
        let prev = last[m.sender];
        if m.payload {
            if m.route_count >= prev {
                out.push(format!("{m}: payload without decrease (previous {prev})"));
            }
            last[m.sender] = m.route_count;
        } else if m.route_count < prev {
            out.push(format!("{m}: decrease sent without payload (previous {prev})"));
        }
    }
    out
}
