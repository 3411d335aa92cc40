use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{InsertionSlots, Instance, RequestId, Route, Solution};
use crate::profiler::OpCounters;

fn feasible_slots(inst: &Instance, route: &Route, req: RequestId, evals: &mut u64) -> Vec<InsertionSlots> {
    let request = inst.request(req);
    let m = route.len();
    let mut out = Vec::new();
    for a in 0..=m {
        for b in a..=m {
            *evals += 1;
            if route.fits(inst, &request, a, b) {
                out.push(InsertionSlots {
                    pickup_slot: a,
                    delivery_slot: b,
                });
            }
        }
    }
    out
}

fn random_served(inst: &Instance, sol: &Solution, rng: &mut impl Rng) -> Option<(usize, RequestId)> {
    if sol.route_count() == 0 {
        return None;
    }
    let r = rng.gen_range(0..sol.route_count());
    let reqs: Vec<RequestId> = sol.route(r).requests(inst).collect();
    reqs.choose(rng).map(|&u| (r, u))
}

/// Moves one random request to a random feasible position in another route.
fn relocate(inst: &Instance, sol: &mut Solution, rng: &mut impl Rng, evals: &mut u64) -> bool {
    let Some((from, u)) = random_served(inst, sol, rng) else {
        return false;
    };
    let mut options = Vec::new();
    for to in (0..sol.route_count()).filter(|&t| t != from) {
        for slots in feasible_slots(inst, sol.route(to), u, evals) {
            options.push((to, slots));
        }
    }
    let Some(&(to, slots)) = options.choose(rng) else {
        return false;
    };
    let target = sol.route(to).with_insertion(&inst.request(u), slots);
    let source = sol.route(from).without(inst, &[u]);
    let source_empty = source.is_empty();
    sol.set_route(inst, from, source);
    let to = if source_empty && to > from { to - 1 } else { to };
    sol.set_route(inst, to, target);
    true
}

/// Swaps a random request with one from another random route when both fit
/// the other's reduced route.
fn exchange(inst: &Instance, sol: &mut Solution, rng: &mut impl Rng, evals: &mut u64) -> bool {
    if sol.route_count() < 2 {
        return false;
    }
    let Some((r1, u)) = random_served(inst, sol, rng) else {
        return false;
    };
    let mut r2 = rng.gen_range(0..sol.route_count() - 1);
    if r2 >= r1 {
        r2 += 1;
    }
    let r1_minus = Route::new(inst, sol.route(r1).without(inst, &[u]));
    let mut others: Vec<RequestId> = sol.route(r2).requests(inst).collect();
    others.shuffle(rng);
    for v in others {
        *evals += 1;
        let v_slots = feasible_slots(inst, &r1_minus, v, evals);
        if v_slots.is_empty() {
            continue;
        }
        let r2_minus = Route::new(inst, sol.route(r2).without(inst, &[v]));
        let u_slots = feasible_slots(inst, &r2_minus, u, evals);
        if u_slots.is_empty() {
            continue;
        }
        let a = *v_slots.choose(rng).unwrap();
        let b = *u_slots.choose(rng).unwrap();
        sol.set_route(inst, r1, r1_minus.with_insertion(&inst.request(v), a));
        sol.set_route(inst, r2, r2_minus.with_insertion(&inst.request(u), b));
        return true;
    }
    false
}

/// Applies `steps` random feasibility-preserving moves. Never creates routes;
/// a route emptied by a relocation is dropped.
pub fn perturb(inst: &Instance, sol: &mut Solution, steps: usize, rng: &mut impl Rng, counters: &mut OpCounters) {
    let mut evals = 0u64;
    for _ in 0..steps {
        if rng.gen_bool(0.5) {
            relocate(inst, sol, rng, &mut evals);
        } else {
            exchange(inst, sol, rng, &mut evals);
        }
    }
    counters.perturb.record(evals);
}
