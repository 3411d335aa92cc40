/// Elementary-operation tally for one algorithm phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTally {
    /// Operations summed over the run.
    pub total: u64,
    /// Number of times the phase was entered.
    pub calls: u64,
    /// Largest operation count of a single call.
    pub max_per_call: u64,
}

impl PhaseTally {
    pub fn record(&mut self, ops: u64) {
        self.total += ops;
        self.calls += 1;
        self.max_per_call = self.max_per_call.max(ops);
    }

    pub fn mean_per_call(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.total as f64 / self.calls as f64
        }
    }

    fn merge(&mut self, other: &PhaseTally) {
        self.total += other.total;
        self.calls += other.calls;
        self.max_per_call = self.max_per_call.max(other.max_per_call);
    }
}

/// Per-phase counts collected by one worker.
///
/// Units: one constant-time insertion test for `insertion`; one candidate
/// penalty or move evaluation for `squeeze` and `perturb`; one node of the
/// ejection tree or one insertion test at its leaves for `ejection[k - 1]`;
/// one point id of sent payload for `cooperation`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub insertion: PhaseTally,
    pub squeeze: PhaseTally,
    pub ejection: Vec<PhaseTally>,
    pub perturb: PhaseTally,
    pub cooperation: PhaseTally,
    pub outer_iterations: u64,
    pub inner_iterations: u64,
}

impl OpCounters {
    pub fn new(k_max: usize) -> Self {
        Self {
            ejection: vec![PhaseTally::default(); k_max],
            ..Self::default()
        }
    }

    pub fn reset(&mut self) {
        let k = self.ejection.len();
        *self = Self::new(k);
    }

    pub fn ejection_k(&mut self, k: usize) -> &mut PhaseTally {
        if self.ejection.len() < k {
            self.ejection.resize(k, PhaseTally::default());
        }
        &mut self.ejection[k - 1]
    }

    /// Ejection operations summed over every k.
    pub fn ejection_total(&self) -> u64 {
        self.ejection.iter().map(|t| t.total).sum()
    }

    /// Adds another worker's counts. Per-call maxima keep the larger value,
    /// except cooperation, whose per-call maxima are summed: one ring round
    /// is one cooperation call on every worker.
    pub fn merge(&mut self, other: &OpCounters) {
        self.insertion.merge(&other.insertion);
        self.squeeze.merge(&other.squeeze);
        self.perturb.merge(&other.perturb);
        if self.ejection.len() < other.ejection.len() {
            self.ejection.resize(other.ejection.len(), PhaseTally::default());
        }
        for (a, b) in self.ejection.iter_mut().zip(&other.ejection) {
            a.merge(b);
        }
        let ring_round = self.cooperation.max_per_call + other.cooperation.max_per_call;
        self.cooperation.merge(&other.cooperation);
        self.cooperation.max_per_call = ring_round;
        self.outer_iterations += other.outer_iterations;
        self.inner_iterations += other.inner_iterations;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_reset() {
        let mut c = OpCounters::new(3);
        c.insertion.record(5);
        c.insertion.record(2);
        c.ejection_k(2).record(7);
        assert_eq!(c.insertion, PhaseTally { total: 7, calls: 2, max_per_call: 5 });
        assert_eq!(c.ejection_total(), 7);
        c.reset();
        assert_eq!(c, OpCounters::new(3));
    }

    #[test]
    fn merge_sums_ring_rounds() {
        let mut a = OpCounters::new(1);
        let mut b = OpCounters::new(1);
        a.cooperation.record(10);
        b.cooperation.record(4);
        b.insertion.record(9);
        a.merge(&b);
        assert_eq!(a.cooperation.max_per_call, 14);
        assert_eq!(a.cooperation.total, 14);
        assert_eq!(a.insertion.max_per_call, 9);
    }
}
