//! Helpers shared by the integration tests: a route simulator written
//! independently of the library, and random instance builders.
#![allow(dead_code)]

use ges_core::io::parse_instance;
use ges_core::model::Instance;
use rand::seq::SliceRandom;
use rand::Rng;

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
struct Pt {
    x: f64,
    y: f64,
    demand: i32,
    earliest: f64,
    latest: f64,
    service: f64,
    /// Paired point; 0 for the depot.
    partner: usize,
}

/// Straight simulation of a vehicle tour, without caches.
#[derive(Debug, Clone)]
pub struct Oracle {
    pts: Vec<Pt>,
    capacity: i32,
}

impl Oracle {
    pub fn new(inst: &Instance) -> Self {
        let pts = inst
            .points()
            .iter()
            .map(|p| Pt {
                x: p.x,
                y: p.y,
                demand: p.demand,
                earliest: p.tw_earliest,
                latest: p.tw_latest,
                service: p.service_time,
                partner: p.partner().unwrap_or(0),
            })
            .collect();
        Self { pts, capacity: inst.capacity() }
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        (self.pts[a].x - self.pts[b].x).hypot(self.pts[a].y - self.pts[b].y)
    }

    pub fn feasible(&self, visits: &[usize]) -> bool {
        let mut seen = vec![false; self.pts.len()];
        let mut time = self.pts[0].earliest;
        let mut load = 0i32;
        let mut at = 0usize;
        for &v in visits {
            if v == 0 || v >= self.pts.len() || seen[v] {
                return false;
            }
            let p = self.pts[v];
            if p.demand < 0 && !seen[p.partner] {
                return false;
            }
            seen[v] = true;
            time = (time + self.pts[at].service + self.dist(at, v)).max(p.earliest);
            if time > p.latest + EPS {
                return false;
            }
            load += p.demand;
            if load < 0 || load > self.capacity {
                return false;
            }
            at = v;
        }
        if visits.iter().any(|&v| !seen[self.pts[v].partner]) {
            return false;
        }
        time + self.pts[at].service + self.dist(at, 0) <= self.pts[0].latest + EPS
    }

    /// `route` with pickup `p` in slot `a` and delivery `d` in slot `b`
    /// (slots index the original route, `a <= b`).
    pub fn with_pair(route: &[usize], p: usize, d: usize, a: usize, b: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(route.len() + 2);
        for (i, &v) in route.iter().enumerate() {
            if i == a {
                out.push(p);
            }
            if i == b {
                out.push(d);
            }
            out.push(v);
        }
        if a == route.len() {
            out.push(p);
        }
        if b == route.len() {
            out.push(d);
        }
        out
    }

    /// First feasible slot pair for request `(p, d)` in `route`.
    pub fn can_insert(&self, route: &[usize], p: usize, d: usize) -> bool {
        let m = route.len();
        (0..=m).any(|a| (a..=m).any(|b| self.feasible(&Self::with_pair(route, p, d, a, b))))
    }
}

/// Text of a random instance with `n` requests. Delivery windows open at or
/// after their pickup's; single requests may still be infeasible.
pub fn random_instance_text(rng: &mut impl Rng, n: usize, capacity: i32, horizon: i32, width: (i32, i32)) -> String {
    let mut s = format!("{n} {capacity} 1\n0 25 25 0 0 {horizon} 0 0 0\n");
    for k in 0..n {
        let pid = 2 * k + 1;
        let did = pid + 1;
        let q = rng.gen_range(1..=(capacity / 2).max(1));
        let e_p = rng.gen_range(0..horizon);
        let e_d = (e_p + rng.gen_range(0..=horizon / 3)).min(horizon - 1);
        for (id, demand, e, pick, deliv) in [(pid, q, e_p, 0, did), (did, -q, e_d, pid, 0)] {
            let l = (e + rng.gen_range(width.0..=width.1)).min(horizon);
            let svc = rng.gen_range(0..=5);
            let x = rng.gen_range(0..=50);
            let y = rng.gen_range(0..=50);
            s.push_str(&format!("{id} {x} {y} {demand} {e} {l} {svc} {pick} {deliv}\n"));
        }
    }
    s
}

pub fn random_instance(rng: &mut impl Rng, n: usize, capacity: i32, horizon: i32, width: (i32, i32)) -> Instance {
    parse_instance("random", &random_instance_text(rng, n, capacity, horizon, width)).expect("generated text parses")
}

/// Random instance in which every request is feasible alone (windows are
/// redrawn until they are).
pub fn solvable_instance(rng: &mut impl Rng, n: usize, capacity: i32, horizon: i32, width: (i32, i32)) -> Instance {
    loop {
        let inst = random_instance(rng, n, capacity, horizon, width);
        let oracle = Oracle::new(&inst);
        if inst.requests().iter().all(|r| oracle.feasible(&[r.pickup, r.delivery])) {
            return inst;
        }
    }
}

/// Random feasible routes for `requests`, built by random feasible insertion
/// with the oracle; a request that fits nowhere opens a new route.
pub fn random_routes(inst: &Instance, requests: &[usize], rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let oracle = Oracle::new(inst);
    let mut order = requests.to_vec();
    order.shuffle(rng);
    let mut routes: Vec<Vec<usize>> = Vec::new();
    for r in order {
        let req = inst.request(r);
        let mut options = Vec::new();
        for (ri, route) in routes.iter().enumerate() {
            let m = route.len();
            for a in 0..=m {
                for b in a..=m {
                    let cand = Oracle::with_pair(route, req.pickup, req.delivery, a, b);
                    if oracle.feasible(&cand) {
                        options.push((ri, cand));
                    }
                }
            }
        }
        match options.choose(rng) {
            Some((ri, cand)) => routes[*ri] = cand.clone(),
            None => routes.push(vec![req.pickup, req.delivery]),
        }
    }
    routes
}

/// Requests of a visit list, in pickup order.
pub fn requests_of(inst: &Instance, route: &[usize]) -> Vec<usize> {
    route
        .iter()
        .filter(|&&v| inst.point(v).is_pickup())
        .map(|&v| inst.request_of(v).expect("customer point"))
        .collect()
}

/// All k-subsets of `items`, in lexicographic order.
pub fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Minimum penalty sum over all ways to eject exactly `k` requests from one
/// route so that request `h` then fits there.
pub fn exhaustive_min_ejection(inst: &Instance, routes: &[Vec<usize>], h: usize, penalty: &[u64], k: usize) -> Option<u64> {
    let oracle = Oracle::new(inst);
    let req = inst.request(h);
    let mut best: Option<u64> = None;
    for route in routes {
        for subset in subsets(&requests_of(inst, route), k) {
            let reduced: Vec<usize> = route
                .iter()
                .copied()
                .filter(|&v| !subset.contains(&inst.request_of(v).unwrap()))
                .collect();
            if oracle.can_insert(&reduced, req.pickup, req.delivery) {
                let sum: u64 = subset.iter().map(|&r| penalty[r]).sum();
                best = Some(best.map_or(sum, |b| b.min(sum)));
            }
        }
    }
    best
}
