use super::{Instance, PointId};

/// Summary of a visit subsequence under the time-warp relaxation: late
/// arrivals are charged as warp and the vehicle continues at the window end.
/// Concatenation is O(1), which makes penalty evaluation of an insertion
/// constant-time given prefix and suffix summaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub first: PointId,
    pub last: PointId,
    pub duration: f64,
    pub time_warp: f64,
    pub earliest: f64,
    pub latest: f64,
    pub load_delta: i32,
    pub load_peak: i32,
}

impl Segment {
    pub fn single(inst: &Instance, v: PointId) -> Self {
        let p = inst.point(v);
        Self {
            first: v,
            last: v,
            duration: p.service_time,
            time_warp: 0.0,
            earliest: p.tw_earliest,
            latest: p.tw_latest,
            load_delta: p.demand,
            load_peak: p.demand.max(0),
        }
    }

    #[inline]
    pub fn concat(&self, inst: &Instance, next: &Segment) -> Segment {
        let travel = inst.travel_time(self.last, next.first);
        let delta = self.duration - self.time_warp + travel;
        let wait = (next.earliest - delta - self.latest).max(0.0);
        let warp = (self.earliest + delta - next.latest).max(0.0);
        Segment {
            first: self.first,
            last: next.last,
            duration: self.duration + next.duration + travel + wait,
            time_warp: self.time_warp + next.time_warp + warp,
            earliest: (next.earliest - delta).max(self.earliest) - wait,
            latest: (next.latest - delta).min(self.latest) + warp,
            load_delta: self.load_delta + next.load_delta,
            load_peak: self.load_peak.max(self.load_delta + next.load_peak),
        }
    }

    /// Time warp plus capacity excess of a segment that starts and ends at the
    /// depot.
    pub fn penalty(&self, capacity: i32) -> f64 {
        self.time_warp + f64::from((self.load_peak - capacity).max(0))
    }

    /// Segment for the whole depot-to-depot tour over `visits`.
    pub fn of_tour(inst: &Instance, visits: &[PointId]) -> Segment {
        let depot = Segment::single(inst, super::DEPOT);
        let mut seg = depot;
        for &v in visits {
            seg = seg.concat(inst, &Segment::single(inst, v));
        }
        seg.concat(inst, &depot)
    }
}
