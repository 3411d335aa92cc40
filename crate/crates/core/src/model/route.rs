use super::{Instance, ModelError, PointId, PointKind, Request, RequestId, Segment, SparseTable, DEPOT, TIME_EPS};

/// Where the two points of a request go: the pickup is placed in slot
/// `pickup_slot` (before the visit currently at that index, or at the end),
/// the delivery in slot `delivery_slot >= pickup_slot` of the original route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InsertionSlots {
    pub pickup_slot: usize,
    pub delivery_slot: usize,
}

/// A vehicle tour. The depot is implicit at both ends.
///
/// Cached arrays are indexed over the extended tour: index 0 is the start
/// depot, `1..=len` the visits, `len + 1` the return depot.
#[derive(Debug, Clone)]
pub struct Route {
    visits: Vec<PointId>,
    begin: Vec<f64>,
    latest: Vec<f64>,
    load: Vec<i32>,
    wait_prefix: Vec<f64>,
    slack_key: SparseTable<f64>,
    load_peak: SparseTable<i32>,
    forward: Vec<Segment>,
    backward: Vec<Segment>,
    feasible: bool,
}

impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.visits == other.visits
    }
}

impl Route {
    pub fn new(inst: &Instance, visits: Vec<PointId>) -> Self {
        let mut route = Route {
            visits,
            begin: Vec::new(),
            latest: Vec::new(),
            load: Vec::new(),
            wait_prefix: Vec::new(),
            slack_key: SparseTable::new(&[0.0], f64::min),
            load_peak: SparseTable::new(&[0], std::cmp::max),
            forward: Vec::new(),
            backward: Vec::new(),
            feasible: true,
        };
        route.recompute_caches(inst);
        route
    }

    #[inline]
    fn node(&self, i: usize) -> PointId {
        if i == 0 || i > self.visits.len() {
            DEPOT
        } else {
            self.visits[i - 1]
        }
    }

    /// Rebuilds every cache from `visits`. Infeasibility is recorded, never
    /// raised.
    pub fn recompute_caches(&mut self, inst: &Instance) {
        let m = self.visits.len();
        let ext = m + 2;
        let depot = inst.depot();
        let cap = inst.capacity();

        self.begin.clear();
        self.load.clear();
        self.wait_prefix.clear();
        self.begin.push(depot.tw_earliest);
        self.load.push(0);
        self.wait_prefix.push(0.0);
        let mut feasible = true;
        let mut onboard: Vec<PointId> = Vec::new();
        for i in 1..ext {
            let prev = self.node(i - 1);
            let cur = self.node(i);
            let pt = inst.point(cur);
            let arrival = self.begin[i - 1] + inst.point(prev).service_time + inst.travel_time(prev, cur);
            let begin = arrival.max(pt.tw_earliest);
            if begin > pt.tw_latest + TIME_EPS {
                feasible = false;
            }
            self.begin.push(begin);
            self.wait_prefix.push(self.wait_prefix[i - 1] + (begin - arrival));
            let load = self.load[i - 1] + pt.demand;
            if load < 0 || load > cap {
                feasible = false;
            }
            self.load.push(load);
            match pt.kind {
                PointKind::Pickup { .. } => onboard.push(cur),
                PointKind::Delivery { pickup } => match onboard.iter().position(|&p| p == pickup) {
                    Some(k) => {
                        onboard.swap_remove(k);
                    }
                    None => feasible = false,
                },
                PointKind::Depot => {
                    if i != ext - 1 {
                        feasible = false;
                    }
                }
            }
        }
        if !onboard.is_empty() {
            feasible = false;
        }

        self.latest.clear();
        self.latest.resize(ext, 0.0);
        self.latest[ext - 1] = depot.tw_latest;
        for i in (0..ext - 1).rev() {
            let cur = self.node(i);
            let next = self.node(i + 1);
            let pt = inst.point(cur);
            self.latest[i] = pt
                .tw_latest
                .min(self.latest[i + 1] - inst.travel_time(cur, next) - pt.service_time);
        }

        let keys: Vec<f64> = (0..ext)
            .map(|i| inst.point(self.node(i)).tw_latest - self.begin[i] + self.wait_prefix[i])
            .collect();
        self.slack_key = SparseTable::new(&keys, f64::min);
        self.load_peak = SparseTable::new(&self.load, std::cmp::max);

        self.forward.clear();
        self.forward.push(Segment::single(inst, DEPOT));
        for i in 1..ext {
            let seg = self.forward[i - 1].concat(inst, &Segment::single(inst, self.node(i)));
            self.forward.push(seg);
        }
        self.backward.clear();
        self.backward.resize(ext, Segment::single(inst, DEPOT));
        for i in (0..ext - 1).rev() {
            self.backward[i] = Segment::single(inst, self.node(i)).concat(inst, &self.backward[i + 1]);
        }
        self.feasible = feasible;
    }

    pub fn visits(&self) -> &[PointId] {
        &self.visits
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    /// Number of insertion slots (visits + 1).
    pub fn slot_count(&self) -> usize {
        self.visits.len() + 1
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Earliest service-begin time of each visit.
    pub fn earliest_start(&self) -> &[f64] {
        &self.begin[1..=self.visits.len()]
    }

    /// Latest service-begin time of each visit that keeps all successors
    /// and the depot return on time.
    pub fn latest_start(&self) -> &[f64] {
        &self.latest[1..=self.visits.len()]
    }

    /// Cumulative load after each visit.
    pub fn load_prefix(&self) -> &[i32] {
        &self.load[1..=self.visits.len()]
    }

    pub fn time_window_violation(&self) -> f64 {
        self.forward[self.visits.len() + 1].time_warp
    }

    pub fn capacity_violation(&self, inst: &Instance) -> i32 {
        (self.forward[self.visits.len() + 1].load_peak - inst.capacity()).max(0)
    }

    /// Total violation (time warp plus capacity excess) of the route.
    pub fn penalty(&self, inst: &Instance) -> f64 {
        self.forward[self.visits.len() + 1].penalty(inst.capacity())
    }

    /// Summary of the extended tour prefix `0..=i`.
    pub fn prefix(&self, i: usize) -> &Segment {
        &self.forward[i]
    }

    /// Summary of the extended tour suffix `i..=len + 1`.
    pub fn suffix(&self, i: usize) -> &Segment {
        &self.backward[i]
    }

    /// Requests served by this route, in pickup order.
    pub fn requests<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = RequestId> + 'a {
        self.visits
            .iter()
            .filter(|&&v| inst.point(v).is_pickup())
            .filter_map(|&v| inst.request_of(v))
    }

    pub fn contains(&self, point: PointId) -> bool {
        self.visits.contains(&point)
    }

    /// Checked form of [`Route::fits`].
    pub fn insertion_feasible(
        &self,
        inst: &Instance,
        req: &Request,
        pickup_slot: usize,
        delivery_slot: usize,
    ) -> Result<bool, ModelError> {
        if pickup_slot > delivery_slot || delivery_slot > self.visits.len() {
            return Err(ModelError::SlotOutOfRange {
                pickup_slot,
                delivery_slot,
                visits: self.visits.len(),
            });
        }
        Ok(self.fits(inst, req, pickup_slot, delivery_slot))
    }

    /// Whether inserting `req` into slots `a <= b` keeps the route feasible.
    /// Constant time: only cached values are read.
    #[inline]
    pub fn fits(&self, inst: &Instance, req: &Request, a: usize, b: usize) -> bool {
        debug_assert!(a <= b && b <= self.visits.len());
        if !self.feasible {
            return false;
        }
        let pick = inst.point(req.pickup);
        let deliv = inst.point(req.delivery);
        let q = pick.demand;

        let peak = if a == b { self.load[a] } else { self.load_peak.query(a, b) };
        if peak + q > inst.capacity() {
            return false;
        }

        let before = self.node(a);
        let arr_p = self.begin[a] + inst.point(before).service_time + inst.travel_time(before, req.pickup);
        if arr_p > pick.tw_latest + TIME_EPS {
            return false;
        }
        let begin_p = arr_p.max(pick.tw_earliest);

        // Point after which the delivery goes, and its new service begin.
        let (d_prev, d_prev_begin) = if a == b {
            (req.pickup, begin_p)
        } else {
            let first = self.node(a + 1);
            let arr = begin_p + pick.service_time + inst.travel_time(req.pickup, first);
            let shifted = arr.max(inst.point(first).tw_earliest);
            let delay = (shifted - self.begin[a + 1]).max(0.0);
            if delay > 0.0 && delay + self.wait_prefix[a + 1] > self.slack_key.query(a + 1, b) + TIME_EPS {
                return false;
            }
            let delay_b = (delay - (self.wait_prefix[b] - self.wait_prefix[a + 1])).max(0.0);
            (self.node(b), self.begin[b] + delay_b)
        };

        let arr_d = d_prev_begin + inst.point(d_prev).service_time + inst.travel_time(d_prev, req.delivery);
        if arr_d > deliv.tw_latest + TIME_EPS {
            return false;
        }
        let begin_d = arr_d.max(deliv.tw_earliest);
        let after = self.node(b + 1);
        begin_d + deliv.service_time + inst.travel_time(req.delivery, after) <= self.latest[b + 1] + TIME_EPS
    }

    /// Visit sequence with `req` inserted at the given slots.
    pub fn with_insertion(&self, req: &Request, slots: InsertionSlots) -> Vec<PointId> {
        let mut v = Vec::with_capacity(self.visits.len() + 2);
        v.extend_from_slice(&self.visits[..slots.pickup_slot]);
        v.push(req.pickup);
        v.extend_from_slice(&self.visits[slots.pickup_slot..slots.delivery_slot]);
        v.push(req.delivery);
        v.extend_from_slice(&self.visits[slots.delivery_slot..]);
        v
    }

    /// Visit sequence with every point of the listed requests removed.
    pub fn without(&self, inst: &Instance, removed: &[RequestId]) -> Vec<PointId> {
        self.visits
            .iter()
            .copied()
            .filter(|&v| inst.request_of(v).is_none_or(|r| !removed.contains(&r)))
            .collect()
    }
}
