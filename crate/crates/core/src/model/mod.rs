//! Problem and solution representations for the pickup and delivery problem
//! with time windows.
//!
//! An [`Instance`] is immutable once built and can be shared by reference
//! between workers. [`Route`] keeps forward/backward time caches and load
//! prefixes so a single candidate insertion is decided in constant time.

mod range;
mod route;
mod segment;
mod solution;

pub use range::SparseTable;
pub use route::{InsertionSlots, Route};
pub use segment::Segment;
pub use solution::{Solution, SolutionError};

use thiserror::Error;

pub type PointId = usize;
pub type RequestId = usize;

pub const DEPOT: PointId = 0;

/// Absolute tolerance used by every time-window comparison, both in the
/// cached checks and in the brute-force oracle.
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Depot,
    Pickup { delivery: PointId },
    Delivery { pickup: PointId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelPoint {
    pub id: PointId,
    pub x: f64,
    pub y: f64,
    pub demand: i32,
    pub tw_earliest: f64,
    pub tw_latest: f64,
    pub service_time: f64,
    pub kind: PointKind,
}

impl TravelPoint {
    pub fn partner(&self) -> Option<PointId> {
        match self.kind {
            PointKind::Depot => None,
            PointKind::Pickup { delivery } => Some(delivery),
            PointKind::Delivery { pickup } => Some(pickup),
        }
    }

    pub fn is_pickup(&self) -> bool {
        matches!(self.kind, PointKind::Pickup { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub id: RequestId,
    pub pickup: PointId,
    pub delivery: PointId,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("instance has no depot point")]
    MissingDepot,
    #[error("point {0} is listed out of order (ids must run 0..{1})")]
    BadPointId(PointId, usize),
    #[error("point 0 must be the depot with zero demand")]
    BadDepot,
    #[error("point {point}: time window [{earliest}, {latest}] is empty")]
    EmptyWindow { point: PointId, earliest: f64, latest: f64 },
    #[error("point {point}: partner {partner} does not exist")]
    DanglingPartner { point: PointId, partner: PointId },
    #[error("point {point}: partner {partner} does not link back")]
    PartnerNotMutual { point: PointId, partner: PointId },
    #[error("request {pickup}->{delivery}: pickup demand {pickup_demand} is not the negation of delivery demand {delivery_demand}")]
    DemandMismatch {
        pickup: PointId,
        delivery: PointId,
        pickup_demand: i32,
        delivery_demand: i32,
    },
    #[error("negative vehicle capacity {0}")]
    NegativeCapacity(i32),
    #[error("slot pair ({pickup_slot}, {delivery_slot}) invalid for a route with {visits} visits")]
    SlotOutOfRange {
        pickup_slot: usize,
        delivery_slot: usize,
        visits: usize,
    },
}

/// Euclidean distance between two points at full double precision.
pub fn euclidean(a: &TravelPoint, b: &TravelPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    points: Vec<TravelPoint>,
    requests: Vec<Request>,
    request_of: Vec<Option<RequestId>>,
    capacity: i32,
    /// Vehicle count recorded in the source file; informational only.
    pub vehicle_hint: usize,
    travel: Vec<f64>,
}

impl Instance {
    /// Builds and validates an instance. `points[0]` must be the depot and
    /// point ids must equal their index.
    pub fn new(
        name: impl Into<String>,
        points: Vec<TravelPoint>,
        capacity: i32,
    ) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::MissingDepot);
        }
        if capacity < 0 {
            return Err(ModelError::NegativeCapacity(capacity));
        }
        let m = points.len();
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(ModelError::BadPointId(p.id, m));
            }
            if p.tw_earliest > p.tw_latest {
                return Err(ModelError::EmptyWindow {
                    point: i,
                    earliest: p.tw_earliest,
                    latest: p.tw_latest,
                });
            }
        }
        let depot = &points[DEPOT];
        if depot.kind != PointKind::Depot || depot.demand != 0 {
            return Err(ModelError::BadDepot);
        }

        let mut requests = Vec::new();
        let mut request_of = vec![None; m];
        for p in points.iter().skip(1) {
            let partner = match p.partner() {
                Some(q) => q,
                None => return Err(ModelError::BadDepot),
            };
            if partner == DEPOT || partner >= m {
                return Err(ModelError::DanglingPartner {
                    point: p.id,
                    partner,
                });
            }
            let expected = match p.kind {
                PointKind::Pickup { .. } => PointKind::Delivery { pickup: p.id },
                PointKind::Delivery { .. } => PointKind::Pickup { delivery: p.id },
                PointKind::Depot => unreachable!(),
            };
            if points[partner].kind != expected {
                return Err(ModelError::PartnerNotMutual {
                    point: p.id,
                    partner,
                });
            }
            if let PointKind::Pickup { delivery } = p.kind {
                let d = &points[delivery];
                if p.demand != -d.demand {
                    return Err(ModelError::DemandMismatch {
                        pickup: p.id,
                        delivery,
                        pickup_demand: p.demand,
                        delivery_demand: d.demand,
                    });
                }
                let id = requests.len();
                requests.push(Request {
                    id,
                    pickup: p.id,
                    delivery,
                });
                request_of[p.id] = Some(id);
                request_of[delivery] = Some(id);
            }
        }

        let mut travel = vec![0.0; m * m];
        for a in 0..m {
            for b in (a + 1)..m {
                let d = euclidean(&points[a], &points[b]);
                travel[a * m + b] = d;
                travel[b * m + a] = d;
            }
        }

        Ok(Self {
            name: name.into(),
            points,
            requests,
            request_of,
            capacity,
            vehicle_hint: 0,
            travel,
        })
    }

    /// Number of requests.
    pub fn n(&self) -> usize {
        self.requests.len()
    }

    pub fn points(&self) -> &[TravelPoint] {
        &self.points
    }

    pub fn point(&self, id: PointId) -> &TravelPoint {
        &self.points[id]
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn request(&self, id: RequestId) -> Request {
        self.requests[id]
    }

    pub fn request_of(&self, point: PointId) -> Option<RequestId> {
        self.request_of[point]
    }

    pub fn capacity(&self) -> i32 {
        self.capacity
    }

    pub fn depot(&self) -> &TravelPoint {
        &self.points[DEPOT]
    }

    #[inline]
    pub fn travel_time(&self, a: PointId, b: PointId) -> f64 {
        self.travel[a * self.points.len() + b]
    }
}

/// A constraint broken while simulating a visit sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LateService { point: PointId, begin: f64, latest: f64 },
    LateReturn { arrival: f64, latest: f64 },
    OverCapacity { point: PointId, load: i32 },
    NegativeLoad { point: PointId, load: i32 },
    DeliveryBeforePickup { request: RequestId },
    MissingPartner { request: RequestId },
    RepeatedPoint { point: PointId },
    InvalidPoint { point: PointId },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::LateService { point, begin, latest } => {
                write!(f, "point {point} served at {begin:.3} after its latest time {latest}")
            }
            Violation::LateReturn { arrival, latest } => {
                write!(f, "depot reached at {arrival:.3} after {latest}")
            }
            Violation::OverCapacity { point, load } => {
                write!(f, "load {load} exceeds capacity after point {point}")
            }
            Violation::NegativeLoad { point, load } => {
                write!(f, "load {load} negative after point {point}")
            }
            Violation::DeliveryBeforePickup { request } => {
                write!(f, "request {} delivered before pickup", request + 1)
            }
            Violation::MissingPartner { request } => {
                write!(f, "request {} has only one of its points on the route", request + 1)
            }
            Violation::RepeatedPoint { point } => write!(f, "point {point} visited twice"),
            Violation::InvalidPoint { point } => write!(f, "point {point} is not a customer"),
        }
    }
}

/// Simulates `visits` from the depot and back, reporting every broken
/// constraint. Waiting until a window opens is allowed.
pub fn simulate_route(visits: &[PointId], inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = inst.points().len();
    let mut seen = vec![false; m];
    for &v in visits {
        if v == DEPOT || v >= m {
            out.push(Violation::InvalidPoint { point: v });
            return out;
        }
        if seen[v] {
            out.push(Violation::RepeatedPoint { point: v });
        }
        seen[v] = true;
    }

    let depot = inst.depot();
    let mut prev = DEPOT;
    let mut time = depot.tw_earliest;
    let mut load = 0i32;
    let mut picked = vec![false; m];
    for &v in visits {
        let pt = inst.point(v);
        let arrival = time + inst.point(prev).service_time + inst.travel_time(prev, v);
        let begin = arrival.max(pt.tw_earliest);
        if begin > pt.tw_latest + TIME_EPS {
            out.push(Violation::LateService {
                point: v,
                begin,
                latest: pt.tw_latest,
            });
        }
        load += pt.demand;
        if load > inst.capacity() {
            out.push(Violation::OverCapacity { point: v, load });
        }
        if load < 0 {
            out.push(Violation::NegativeLoad { point: v, load });
        }
        match pt.kind {
            PointKind::Pickup { .. } => picked[v] = true,
            PointKind::Delivery { pickup } => {
                if !picked[pickup] {
                    let request = inst.request_of(v).unwrap_or(0);
                    if seen[pickup] {
                        out.push(Violation::DeliveryBeforePickup { request });
                    } else {
                        out.push(Violation::MissingPartner { request });
                    }
                }
            }
            PointKind::Depot => {}
        }
        time = begin;
        prev = v;
    }
    for &v in visits {
        if let PointKind::Pickup { delivery } = inst.point(v).kind {
            if !seen[delivery] {
                out.push(Violation::MissingPartner {
                    request: inst.request_of(v).unwrap_or(0),
                });
            }
        }
    }
    let back = time + inst.point(prev).service_time + inst.travel_time(prev, DEPOT);
    if back > depot.tw_latest + TIME_EPS {
        out.push(Violation::LateReturn {
            arrival: back,
            latest: depot.tw_latest,
        });
    }
    out
}

/// Reference feasibility check by full simulation; used as the test oracle
/// for the cached constant-time checks.
pub fn brute_force_feasible(visits: &[PointId], inst: &Instance) -> bool {
    simulate_route(visits, inst).is_empty()
}
