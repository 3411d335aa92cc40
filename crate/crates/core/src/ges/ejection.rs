use crate::model::{InsertionSlots, Instance, RequestId, Route, Solution};
use crate::profiler::OpCounters;

use super::PenaltyCounters;

/// Eject `ejected` from `route`, then insert the incoming request at `slots`
/// of the reduced route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EjectionCandidate {
    pub route: usize,
    pub slots: InsertionSlots,
    pub ejected: Vec<RequestId>,
    pub p_sum: u64,
}

struct Search<'a> {
    inst: &'a Instance,
    incoming: RequestId,
    penalties: &'a PenaltyCounters,
    k: usize,
    best: u64,
    found: Vec<EjectionCandidate>,
    steps: u64,
}

impl Search<'_> {
    /// Visits k-subsets of `reqs` (indices into the route's request list) in
    /// lexicographic order. A branch is cut once its partial penalty sum plus
    /// the minimum of one per still-missing request exceeds the incumbent.
    fn descend(&mut self, route_idx: usize, route: &Route, reqs: &[RequestId], start: usize, chosen: &mut Vec<RequestId>, partial: u64) {
        let remaining = self.k - chosen.len();
        for i in start..=reqs.len() - remaining {
            self.steps += 1;
            let sum = partial + self.penalties.get(reqs[i]);
            if sum + (remaining as u64 - 1) > self.best {
                continue;
            }
            chosen.push(reqs[i]);
            if remaining == 1 {
                self.leaf(route_idx, route, chosen, sum);
            } else {
                self.descend(route_idx, route, reqs, i + 1, chosen, sum);
            }
            chosen.pop();
        }
    }

    fn leaf(&mut self, route_idx: usize, route: &Route, chosen: &[RequestId], p_sum: u64) {
        let reduced = Route::new(self.inst, route.without(self.inst, chosen));
        let req = self.inst.request(self.incoming);
        let m = reduced.len();
        for a in 0..=m {
            for b in a..=m {
                self.steps += 1;
                if reduced.fits(self.inst, &req, a, b) {
                    if p_sum < self.best {
                        self.best = p_sum;
                        self.found.clear();
                    }
                    self.found.push(EjectionCandidate {
                        route: route_idx,
                        slots: InsertionSlots {
                            pickup_slot: a,
                            delivery_slot: b,
                        },
                        ejected: chosen.to_vec(),
                        p_sum,
                    });
                    return;
                }
            }
        }
    }
}

/// Minimum-penalty ways to eject exactly `k` requests from a single route so
/// that `incoming` fits there. All returned candidates share the minimum
/// `p_sum`; an empty result means no feasible ejection exists.
pub fn ejection_search(
    inst: &Instance,
    sol: &Solution,
    incoming: RequestId,
    penalties: &PenaltyCounters,
    k: usize,
    counters: &mut OpCounters,
) -> Vec<EjectionCandidate> {
    assert!(k >= 1, "ejection size must be positive");
    let mut search = Search {
        inst,
        incoming,
        penalties,
        k,
        best: u64::MAX,
        found: Vec::new(),
        steps: 0,
    };
    let mut chosen = Vec::with_capacity(k);
    for (ri, route) in sol.routes().iter().enumerate() {
        let reqs: Vec<RequestId> = route.requests(inst).collect();
        if reqs.len() < k {
            continue;
        }
        search.descend(ri, route, &reqs, 0, &mut chosen, 0);
    }
    counters.ejection_k(k).record(search.steps);
    search.found
}
