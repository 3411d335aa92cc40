use thiserror::Error;

use super::{InsertionSlots, Instance, PointId, Request, RequestId, Route, DEPOT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionError {
    #[error("point {0} is not a customer of the instance")]
    InvalidPoint(PointId),
    #[error("point {0} appears more than once")]
    DuplicatePoint(PointId),
    #[error("request {0}: pickup and delivery are on different routes")]
    SplitRequest(RequestId),
    #[error("request {0}: only one of its points is routed")]
    HalfRouted(RequestId),
}

/// A set of vehicle routes. Empty routes are never kept, so the number of
/// stored routes is the fleet size.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    routes: Vec<Route>,
    assignment: Vec<Option<usize>>,
}

impl Solution {
    pub fn empty(inst: &Instance) -> Self {
        Self {
            routes: Vec::new(),
            assignment: vec![None; inst.n()],
        }
    }

    /// Builds a solution from visit lists, checking structure only (each
    /// customer at most once, requests co-routed). Time windows and capacity
    /// are not checked here.
    pub fn from_routes(inst: &Instance, routes: Vec<Vec<PointId>>) -> Result<Self, SolutionError> {
        let m = inst.points().len();
        let mut where_point = vec![None; m];
        for (r, visits) in routes.iter().filter(|v| !v.is_empty()).enumerate() {
            for &v in visits {
                if v == DEPOT || v >= m {
                    return Err(SolutionError::InvalidPoint(v));
                }
                if where_point[v].is_some() {
                    return Err(SolutionError::DuplicatePoint(v));
                }
                where_point[v] = Some(r);
            }
        }
        let mut assignment = vec![None; inst.n()];
        for req in inst.requests() {
            match (where_point[req.pickup], where_point[req.delivery]) {
                (Some(a), Some(b)) if a == b => assignment[req.id] = Some(a),
                (Some(_), Some(_)) => return Err(SolutionError::SplitRequest(req.id)),
                (None, None) => {}
                _ => return Err(SolutionError::HalfRouted(req.id)),
            }
        }
        let routes = routes
            .into_iter()
            .filter(|v| !v.is_empty())
            .map(|v| Route::new(inst, v))
            .collect();
        Ok(Self { routes, assignment })
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, idx: usize) -> &Route {
        &self.routes[idx]
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn route_of(&self, req: RequestId) -> Option<usize> {
        self.assignment[req]
    }

    pub fn is_served(&self, req: RequestId) -> bool {
        self.assignment[req].is_some()
    }

    pub fn served_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn unserved(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(i, _)| i)
    }

    pub fn is_feasible(&self) -> bool {
        self.routes.iter().all(Route::is_feasible)
    }

    pub fn penalty(&self, inst: &Instance) -> f64 {
        self.routes.iter().map(|r| r.penalty(inst)).sum()
    }

    pub fn visit_lists(&self) -> Vec<Vec<PointId>> {
        self.routes.iter().map(|r| r.visits().to_vec()).collect()
    }

    /// Total number of routed points.
    pub fn size(&self) -> usize {
        self.routes.iter().map(Route::len).sum()
    }

    pub fn insert(&mut self, inst: &Instance, route: usize, req: &Request, slots: InsertionSlots) {
        debug_assert!(self.assignment[req.id].is_none());
        let visits = self.routes[route].with_insertion(req, slots);
        self.routes[route] = Route::new(inst, visits);
        self.assignment[req.id] = Some(route);
    }

    /// Adds a new route; returns its index.
    pub fn push_route(&mut self, inst: &Instance, visits: Vec<PointId>) -> usize {
        let idx = self.routes.len();
        for &v in &visits {
            if let Some(r) = inst.request_of(v) {
                self.assignment[r] = Some(idx);
            }
        }
        self.routes.push(Route::new(inst, visits));
        idx
    }

    /// Replaces the visits of route `idx`. Requests that disappear from the
    /// route become unserved unless already reassigned elsewhere; requests
    /// that appear are assigned to it. An emptied route is dropped.
    pub fn set_route(&mut self, inst: &Instance, idx: usize, visits: Vec<PointId>) {
        for &v in self.routes[idx].visits() {
            if let Some(r) = inst.request_of(v) {
                if self.assignment[r] == Some(idx) {
                    self.assignment[r] = None;
                }
            }
        }
        for &v in &visits {
            if let Some(r) = inst.request_of(v) {
                self.assignment[r] = Some(idx);
            }
        }
        if visits.is_empty() {
            self.drop_route(idx);
        } else {
            self.routes[idx] = Route::new(inst, visits);
        }
    }

    /// Removes route `idx` and returns its requests in pickup order.
    pub fn remove_route(&mut self, inst: &Instance, idx: usize) -> Vec<RequestId> {
        let reqs: Vec<RequestId> = self.routes[idx].requests(inst).collect();
        for &r in &reqs {
            self.assignment[r] = None;
        }
        self.drop_route(idx);
        reqs
    }

    pub fn remove_request(&mut self, inst: &Instance, req: RequestId) {
        if let Some(idx) = self.assignment[req] {
            let visits = self.routes[idx].without(inst, &[req]);
            self.set_route(inst, idx, visits);
        }
    }

    fn drop_route(&mut self, idx: usize) {
        self.routes.remove(idx);
        for a in self.assignment.iter_mut() {
            match *a {
                Some(r) if r == idx => *a = None,
                Some(r) if r > idx => *a = Some(r - 1),
                _ => {}
            }
        }
    }
}
