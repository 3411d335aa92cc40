//! Benchmark instance parsing and solution files.
//!
//! Instance files use the classic pickup-and-delivery benchmark layout: a
//! header `vehicles capacity speed`, then one row per point with nine
//! integers `id x y demand earliest latest service pickup_sibling
//! delivery_sibling`. Row 0 is the depot. Solution files start with
//! `route_count <k>` followed by `k` lines of space-separated point ids.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::model::{simulate_route, Instance, ModelError, PointId, PointKind, RequestId, TravelPoint, Violation, DEPOT};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {cause}")]
    Line { line: usize, cause: String },
    #[error("empty input")]
    Empty,
    #[error("invalid instance: {0}")]
    Model(#[from] ModelError),
}

fn line_err(line: usize, cause: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        cause: cause.into(),
    }
}

fn fields(line_no: usize, line: &str, expected: usize) -> Result<Vec<i64>, ParseError> {
    let vals: Vec<&str> = line.split_whitespace().collect();
    if vals.len() != expected {
        return Err(line_err(line_no, format!("expected {expected} fields, found {}", vals.len())));
    }
    vals.iter()
        .map(|s| {
            s.parse::<i64>()
                .map_err(|_| line_err(line_no, format!("`{s}` is not an integer")))
        })
        .collect()
}

/// Parses a benchmark instance. The vehicle-count field is kept as
/// [`Instance::vehicle_hint`] and otherwise ignored.
pub fn parse_instance(name: &str, text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or(ParseError::Empty)?;
    let head = fields(hline, header, 3)?;
    let (vehicles, capacity, speed) = (head[0], head[1], head[2]);
    if vehicles < 0 || capacity < 0 || capacity > i64::from(i32::MAX) {
        return Err(line_err(hline, "vehicle count and capacity must be nonnegative"));
    }
    if speed <= 0 {
        return Err(line_err(hline, "speed must be positive"));
    }

    let mut rows: Vec<(usize, Vec<i64>)> = Vec::new();
    for (no, line) in lines {
        rows.push((no, fields(no, line, 9)?));
    }
    let m = rows.len();
    let mut slots: Vec<Option<(usize, TravelPoint)>> = vec![None; m];
    for (no, f) in &rows {
        let no = *no;
        let id = f[0];
        if id < 0 || id as usize >= m {
            return Err(line_err(no, format!("point id {id} outside 0..{m}")));
        }
        let id = id as usize;
        if slots[id].is_some() {
            return Err(line_err(no, format!("duplicate point id {id}")));
        }
        let demand = i32::try_from(f[3]).map_err(|_| line_err(no, "demand out of range"))?;
        let (ps, ds) = (f[7], f[8]);
        if ps < 0 || ds < 0 || ps as usize >= m || ds as usize >= m {
            return Err(line_err(no, format!("dangling partner reference ({ps}, {ds})")));
        }
        let kind = match (id, ps as usize, ds as usize) {
            (DEPOT, 0, 0) if demand == 0 => PointKind::Depot,
            (DEPOT, _, _) => return Err(line_err(no, "depot row must have zero demand and no partners")),
            (_, 0, 0) => return Err(line_err(no, "customer row names neither a pickup nor a delivery partner")),
            (_, 0, d) => {
                if demand < 0 {
                    return Err(line_err(no, "pickup row has negative demand"));
                }
                PointKind::Pickup { delivery: d }
            }
            (_, p, 0) => {
                if demand > 0 {
                    return Err(line_err(no, "delivery row has positive demand"));
                }
                PointKind::Delivery { pickup: p }
            }
            _ => return Err(line_err(no, "row names both a pickup and a delivery partner")),
        };
        if f[4] > f[5] {
            return Err(line_err(no, format!("time window [{}, {}] is empty", f[4], f[5])));
        }
        slots[id] = Some((
            no,
            TravelPoint {
                id,
                x: f[1] as f64,
                y: f[2] as f64,
                demand,
                tw_earliest: f[4] as f64,
                tw_latest: f[5] as f64,
                service_time: f[6] as f64,
                kind,
            },
        ));
    }

    let mut points = Vec::with_capacity(m);
    let mut line_of = Vec::with_capacity(m);
    for (id, slot) in slots.into_iter().enumerate() {
        match slot {
            Some((no, p)) => {
                line_of.push(no);
                points.push(p);
            }
            None => return Err(line_err(hline, format!("point id {id} is missing"))),
        }
    }
    if points.is_empty() {
        return Err(line_err(hline, "no depot row"));
    }

    // Attribute pairing errors to the offending row.
    let err_point = |e: &ModelError| match e {
        ModelError::DanglingPartner { point, .. }
        | ModelError::PartnerNotMutual { point, .. }
        | ModelError::EmptyWindow { point, .. } => Some(*point),
        ModelError::DemandMismatch { pickup, .. } => Some(*pickup),
        _ => None,
    };
    let mut inst = Instance::new(name, points, capacity as i32).map_err(|e| match err_point(&e) {
        Some(p) => line_err(line_of[p], e.to_string()),
        None => ParseError::Model(e),
    })?;
    inst.vehicle_hint = vehicles as usize;
    Ok(inst)
}

/// Parsed or written solution file contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionFile {
    pub instance: Option<String>,
    pub routes: Vec<Vec<PointId>>,
}

impl SolutionFile {
    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    /// Route lines without the header, as used in cooperation payloads.
    pub fn body(&self) -> String {
        let mut s = String::new();
        for r in &self.routes {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for SolutionFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "route_count {}", self.routes.len())?;
        f.write_str(&self.body())?;
        if let Some(name) = &self.instance {
            writeln!(f, "# instance {name}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("request {} is unserved", .0 + 1)]
    Unserved(RequestId),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes `sol` to `sink`. Refuses solutions that leave a request unserved.
pub fn write_solution(
    sol: &crate::model::Solution,
    instance: Option<&str>,
    sink: &mut impl Write,
) -> Result<SolutionFile, WriteError> {
    if let Some(r) = sol.unserved().next() {
        return Err(WriteError::Unserved(r));
    }
    let file = SolutionFile {
        instance: instance.map(str::to_owned),
        routes: sol.visit_lists(),
    };
    sink.write_all(file.to_string().as_bytes())?;
    Ok(file)
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, ParseError> {
    let mut instance = None;
    let mut declared = None;
    let mut routes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(name) = rest.trim().strip_prefix("instance ") {
                instance = Some(name.trim().to_owned());
            }
            continue;
        }
        if declared.is_none() {
            let count = line
                .strip_prefix("route_count")
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| line_err(no, "expected `route_count <k>`"))?;
            declared = Some(count);
            continue;
        }
        let route = line
            .split_whitespace()
            .map(|s| s.parse::<PointId>().map_err(|_| line_err(no, format!("`{s}` is not a point id"))))
            .collect::<Result<Vec<_>, _>>()?;
        routes.push(route);
    }
    let declared = declared.ok_or(ParseError::Empty)?;
    if declared != routes.len() {
        return Err(line_err(1, format!("declares {declared} routes but lists {}", routes.len())));
    }
    Ok(SolutionFile { instance, routes })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionViolation {
    InvalidPoint { route: usize, point: PointId },
    DuplicatePoint { point: PointId },
    Unserved { request: RequestId, pickup: PointId, delivery: PointId },
    SplitRequest { request: RequestId, pickup: PointId, delivery: PointId },
    Route { route: usize, violation: Violation },
}

impl fmt::Display for SolutionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionViolation::InvalidPoint { route, point } => {
                write!(f, "route {route}: point {point} is not a customer")
            }
            SolutionViolation::DuplicatePoint { point } => write!(f, "point {point} visited more than once"),
            SolutionViolation::Unserved { request, pickup, delivery } => {
                write!(f, "request {} ({pickup}->{delivery}) is not served", request + 1)
            }
            SolutionViolation::SplitRequest { request, pickup, delivery } => {
                write!(f, "request {} ({pickup}->{delivery}) split across routes", request + 1)
            }
            SolutionViolation::Route { route, violation } => write!(f, "route {route}: {violation}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub violations: Vec<SolutionViolation>,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Full check of a solution file against an instance: every route feasible,
/// every request served exactly once on a single route.
pub fn validate_solution(file: &SolutionFile, inst: &Instance) -> Verdict {
    let m = inst.points().len();
    let mut violations = Vec::new();
    let mut route_of: Vec<Option<usize>> = vec![None; m];
    for (r, visits) in file.routes.iter().enumerate() {
        let mut structural = false;
        for &v in visits {
            if v == DEPOT || v >= m {
                violations.push(SolutionViolation::InvalidPoint { route: r, point: v });
                structural = true;
                continue;
            }
            if route_of[v].is_some() {
                violations.push(SolutionViolation::DuplicatePoint { point: v });
                structural = true;
            }
            route_of[v] = Some(r);
        }
        if structural {
            continue;
        }
        for violation in simulate_route(visits, inst) {
            // Split requests are reported once below.
            if matches!(violation, Violation::MissingPartner { .. }) {
                continue;
            }
            violations.push(SolutionViolation::Route { route: r, violation });
        }
    }
    for req in inst.requests() {
        match (route_of[req.pickup], route_of[req.delivery]) {
            (Some(a), Some(b)) if a == b => {}
            (None, None) => violations.push(SolutionViolation::Unserved {
                request: req.id,
                pickup: req.pickup,
                delivery: req.delivery,
            }),
            _ => violations.push(SolutionViolation::SplitRequest {
                request: req.id,
                pickup: req.pickup,
                delivery: req.delivery,
            }),
        }
    }
    Verdict { violations }
}

/// Renders an instance back into the benchmark format.
pub fn format_instance(inst: &Instance) -> String {
    let mut s = format!("{}\t{}\t1\n", inst.vehicle_hint, inst.capacity());
    for p in inst.points() {
        let (ps, ds) = match p.kind {
            PointKind::Depot => (0, 0),
            PointKind::Pickup { delivery } => (0, delivery),
            PointKind::Delivery { pickup } => (pickup, 0),
        };
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            p.id, p.x, p.y, p.demand, p.tw_earliest, p.tw_latest, p.service_time, ps, ds
        ));
    }
    s
}
