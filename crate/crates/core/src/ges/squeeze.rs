//! Infeasible insertion followed by violation-reducing repair.
//!
//! The incoming request is placed where the total violation (time warp plus
//! capacity excess) is smallest. Repair rounds then try out-relocate moves
//! first and out-exchange moves only when no relocation improves; the first
//! improving move of a round is applied.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{InsertionSlots, Instance, RequestId, Route, Segment, Solution};
use crate::profiler::OpCounters;

/// Smallest violation decrease accepted as an improvement.
const MIN_GAIN: f64 = 1e-7;

/// Penalty-minimal insertion of `req` into `route`. Scanning of a pickup slot
/// stops once the partial tour alone reaches `cutoff`.
fn best_insertion(inst: &Instance, route: &Route, req: RequestId, cutoff: f64, evals: &mut u64) -> Option<(f64, InsertionSlots)> {
    let request = inst.request(req);
    let cap = inst.capacity();
    let pick = Segment::single(inst, request.pickup);
    let deliv = Segment::single(inst, request.delivery);
    let m = route.len();
    let mut best: Option<(f64, InsertionSlots)> = None;
    let mut limit = cutoff;
    for a in 0..=m {
        let mut mid = route.prefix(a).concat(inst, &pick);
        for b in a..=m {
            if b > a {
                mid = mid.concat(inst, &Segment::single(inst, route.visits()[b - 1]));
            }
            if mid.time_warp + f64::from((mid.load_peak - cap).max(0)) >= limit {
                break;
            }
            *evals += 1;
            let pen = mid.concat(inst, &deliv).concat(inst, route.suffix(b + 1)).penalty(cap);
            if pen < limit {
                limit = pen;
                best = Some((
                    pen,
                    InsertionSlots {
                        pickup_slot: a,
                        delivery_slot: b,
                    },
                ));
            }
        }
    }
    best
}

fn violated_routes(inst: &Instance, sol: &Solution, rng: &mut impl Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..sol.route_count())
        .filter(|&r| sol.route(r).penalty(inst) > 0.0 || !sol.route(r).is_feasible())
        .collect();
    v.shuffle(rng);
    v
}

fn try_relocate(inst: &Instance, sol: &mut Solution, rng: &mut impl Rng, evals: &mut u64) -> bool {
    for rv in violated_routes(inst, sol, rng) {
        let pen_rv = sol.route(rv).penalty(inst);
        let mut reqs: Vec<RequestId> = sol.route(rv).requests(inst).collect();
        reqs.shuffle(rng);
        for u in reqs {
            *evals += 1;
            let reduced = sol.route(rv).without(inst, &[u]);
            let gain = pen_rv - Segment::of_tour(inst, &reduced).penalty(inst.capacity());
            if gain <= MIN_GAIN {
                continue;
            }
            for r2 in (0..sol.route_count()).filter(|&r| r != rv) {
                let base = sol.route(r2).penalty(inst);
                let Some((pen, slots)) = best_insertion(inst, sol.route(r2), u, base + gain - MIN_GAIN, evals) else {
                    continue;
                };
                debug_assert!(pen - base - gain < -MIN_GAIN);
                let target = sol.route(r2).with_insertion(&inst.request(u), slots);
                let emptied = reduced.is_empty();
                sol.set_route(inst, rv, reduced);
                let r2 = if emptied && r2 > rv { r2 - 1 } else { r2 };
                sol.set_route(inst, r2, target);
                return true;
            }
        }
    }
    false
}

fn try_exchange(inst: &Instance, sol: &mut Solution, rng: &mut impl Rng, evals: &mut u64) -> bool {
    let mut without: Vec<Vec<Option<Route>>> = sol.routes().iter().map(|r| vec![None; r.len()]).collect();
    for rv in violated_routes(inst, sol, rng) {
        let pen_rv = sol.route(rv).penalty(inst);
        let reqs_v: Vec<RequestId> = sol.route(rv).requests(inst).collect();
        for (iu, &u) in reqs_v.iter().enumerate() {
            let rv_minus = sol.route(rv).without(inst, &[u]);
            let rv_minus = without[rv][iu].get_or_insert_with(|| Route::new(inst, rv_minus)).clone();
            for r2 in (0..sol.route_count()).filter(|&r| r != rv) {
                let pen_r2 = sol.route(r2).penalty(inst);
                let reqs_2: Vec<RequestId> = sol.route(r2).requests(inst).collect();
                for (iv, &v) in reqs_2.iter().enumerate() {
                    *evals += 1;
                    let budget = pen_rv + pen_r2 - MIN_GAIN;
                    let Some((pa, sa)) = best_insertion(inst, &rv_minus, v, budget, evals) else {
                        continue;
                    };
                    if without[r2][iv].is_none() {
                        without[r2][iv] = Some(Route::new(inst, sol.route(r2).without(inst, &[v])));
                    }
                    let r2_minus = without[r2][iv].as_ref().unwrap();
                    let Some((pb, sb)) = best_insertion(inst, r2_minus, u, budget - pa, evals) else {
                        continue;
                    };
                    debug_assert!(pa + pb < budget);
                    let new_v = rv_minus.with_insertion(&inst.request(v), sa);
                    let new_2 = r2_minus.with_insertion(&inst.request(u), sb);
                    sol.set_route(inst, rv, new_v);
                    sol.set_route(inst, r2, new_2);
                    return true;
                }
            }
        }
    }
    false
}

/// Inserts `incoming` at minimum violation and repairs. Returns the repaired
/// feasible solution serving `incoming`, or a copy of `sol` when repair
/// stalls. Never adds routes.
pub fn squeeze(inst: &Instance, sol: &Solution, incoming: RequestId, rng: &mut impl Rng, counters: &mut OpCounters) -> Solution {
    let mut evals = 0u64;
    let mut best: Option<(f64, usize, InsertionSlots)> = None;
    for (ri, route) in sol.routes().iter().enumerate() {
        let cutoff = best.map_or(f64::INFINITY, |b| b.0 + route.penalty(inst));
        if let Some((pen, slots)) = best_insertion(inst, route, incoming, cutoff, &mut evals) {
            let delta = pen - route.penalty(inst);
            if best.is_none_or(|b| delta < b.0) {
                best = Some((delta, ri, slots));
            }
        }
    }
    let Some((_, ri, slots)) = best else {
        counters.squeeze.record(evals);
        return sol.clone();
    };
    let mut work = sol.clone();
    work.insert(inst, ri, &inst.request(incoming), slots);
    let repaired = loop {
        if work.is_feasible() {
            break true;
        }
        if try_relocate(inst, &mut work, rng, &mut evals) {
            continue;
        }
        if try_exchange(inst, &mut work, rng, &mut evals) {
            continue;
        }
        break false;
    };
    counters.squeeze.record(evals);
    if repaired {
        work
    } else {
        sol.clone()
    }
}
