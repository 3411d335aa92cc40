use crate::model::{InsertionSlots, Instance, RequestId, Solution};
use crate::profiler::OpCounters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InsertionCandidate {
    pub route: usize,
    pub slots: InsertionSlots,
}

/// Every feasible way to insert `req` into an existing route of `sol`.
pub fn feasible_insertions(
    inst: &Instance,
    sol: &Solution,
    req: RequestId,
    counters: &mut OpCounters,
) -> Vec<InsertionCandidate> {
    let request = inst.request(req);
    let mut out = Vec::new();
    let mut tests = 0u64;
    for (ri, route) in sol.routes().iter().enumerate() {
        let m = route.len();
        for a in 0..=m {
            for b in a..=m {
                tests += 1;
                if route.fits(inst, &request, a, b) {
                    out.push(InsertionCandidate {
                        route: ri,
                        slots: InsertionSlots {
                            pickup_slot: a,
                            delivery_slot: b,
                        },
                    });
                }
            }
        }
    }
    counters.insertion.record(tests);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::brute_force_feasible;
    use crate::model::test_support::*;

    #[test]
    fn empty_solution_has_no_insertions() {
        let inst = instance(depot(0.0, 0.0, 0.0, 100.0), &[((1.0, 0.0, 0.0, 100.0), (2.0, 0.0, 0.0, 100.0))], &[1], 5);
        let mut c = OpCounters::new(3);
        assert!(feasible_insertions(&inst, &Solution::empty(&inst), 0, &mut c).is_empty());
        assert_eq!(c.insertion.calls, 1);
    }

    #[test]
    fn all_six_slot_pairs_with_generous_windows() {
        let inst = instance(
            depot(0.0, 0.0, 0.0, 1000.0),
            &[
                ((1.0, 0.0, 0.0, 1000.0), (2.0, 0.0, 0.0, 1000.0)),
                ((1.0, 1.0, 0.0, 1000.0), (2.0, 1.0, 0.0, 1000.0)),
            ],
            &[1, 1],
            10,
        );
        let sol = Solution::from_routes(&inst, vec![vec![1, 2]]).unwrap();
        let mut c = OpCounters::new(3);
        let cands = feasible_insertions(&inst, &sol, 1, &mut c);
        assert_eq!(c.insertion.total, 6);
        assert_eq!(cands.len(), 6);
        for cand in cands {
            let seq = sol.route(0).with_insertion(&inst.request(1), cand.slots);
            assert!(brute_force_feasible(&seq, &inst));
        }
    }

    #[test]
    fn tight_capacity_matches_exhaustive_oracle() {
        let inst = instance(
            depot(0.0, 0.0, 0.0, 1000.0),
            &[
                ((1.0, 0.0, 0.0, 1000.0), (2.0, 0.0, 0.0, 1000.0)),
                ((3.0, 0.0, 0.0, 1000.0), (4.0, 0.0, 0.0, 1000.0)),
            ],
            &[6, 6],
            10,
        );
        let sol = Solution::from_routes(&inst, vec![vec![1, 2]]).unwrap();
        let req = inst.request(1);
        let mut c = OpCounters::new(3);
        let got: Vec<_> = feasible_insertions(&inst, &sol, 1, &mut c).into_iter().map(|c| c.slots).collect();
        let mut expected = Vec::new();
        for a in 0..=2 {
            for b in a..=2 {
                let slots = InsertionSlots { pickup_slot: a, delivery_slot: b };
                if brute_force_feasible(&sol.route(0).with_insertion(&req, slots), &inst) {
                    expected.push(slots);
                }
            }
        }
        assert_eq!(got, expected);
        assert_eq!(
            got,
            vec![
                InsertionSlots { pickup_slot: 0, delivery_slot: 0 },
                InsertionSlots { pickup_slot: 2, delivery_slot: 2 }
            ]
        );
    }
}
