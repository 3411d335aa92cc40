use std::fmt;

/// Phases with a per-call pessimistic bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Feasible-insertion scan, O(n^2).
    Insertion,
    /// Squeeze repair, O(n^4).
    Squeeze,
    /// Ejection search with k ejected requests, O(n^(k+2)).
    Ejection(u32),
    /// Perturbation with I steps, O(I n^4).
    Perturb,
    /// One ring round of cooperation, O(p n).
    Cooperation,
}

impl Phase {
    pub fn bound(&self, n: f64, p: f64, perturb_steps: f64) -> f64 {
        match *self {
            Phase::Insertion => n.powi(2),
            Phase::Squeeze => n.powi(4),
            Phase::Ejection(k) => n.powi(k as i32 + 2),
            Phase::Perturb => perturb_steps.max(1.0) * n.powi(4),
            Phase::Cooperation => p * n,
        }
    }

    pub fn bound_label(&self) -> String {
        match *self {
            Phase::Insertion => "n^2".into(),
            Phase::Squeeze => "n^4".into(),
            Phase::Ejection(k) => format!("n^{}", k + 2),
            Phase::Perturb => "I*n^4".into(),
            Phase::Cooperation => "p*n".into(),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Insertion => f.write_str("insertion_tests"),
            Phase::Squeeze => f.write_str("squeeze_move_evals"),
            Phase::Ejection(k) => write!(f, "ejection_steps_k{k}"),
            Phase::Perturb => f.write_str("perturb_move_evals"),
            Phase::Cooperation => f.write_str("coop_payload_units"),
        }
    }
}

/// Factor applied to the constant calibrated at the smallest size, absorbing
/// lower-order terms and run-to-run variation of per-call maxima.
pub const CALIBRATION_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSample {
    pub n: f64,
    pub p: f64,
    /// Largest per-call (per-round for cooperation) operation count.
    pub tally: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundVerdict {
    pub phase: Phase,
    pub pass: bool,
    /// Constant `c` in `tally <= c * bound`.
    pub constant: f64,
    /// Largest `tally / (c * bound)` seen over the sweep.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// Checks `tally(n) <= c * bound(n)` for every sample, with `c` calibrated at
/// the smallest bound value where the phase was exercised.
pub fn check_bound(phase: Phase, samples: &[BoundSample], perturb_steps: f64) -> BoundVerdict {
    let mut sorted: Vec<&BoundSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        phase
            .bound(a.n, a.p, perturb_steps)
            .total_cmp(&phase.bound(b.n, b.p, perturb_steps))
    });
    let calib = sorted.iter().find(|s| s.tally > 0.0);
    let constant = match calib {
        Some(s) => CALIBRATION_MARGIN * s.tally / phase.bound(s.n, s.p, perturb_steps),
        None => 0.0,
    };
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for s in &sorted {
        let limit = constant * phase.bound(s.n, s.p, perturb_steps);
        if s.tally > limit {
            pass = false;
        }
        if limit > 0.0 {
            worst = worst.max(s.tally / limit);
        }
    }
    BoundVerdict {
        phase,
        pass,
        constant,
        worst_ratio: worst,
        samples: samples.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(f: impl Fn(f64) -> f64) -> Vec<BoundSample> {
        [50.0, 100.0, 200.0, 400.0]
            .iter()
            .map(|&n| BoundSample { n, p: 1.0, tally: f(n) })
            .collect()
    }

    #[test]
    fn quadratic_passes_cubic_fails() {
        assert!(check_bound(Phase::Insertion, &sweep(|n| 3.0 * n * n + 10.0 * n), 1.0).pass);
        assert!(!check_bound(Phase::Insertion, &sweep(|n| n * n * n), 1.0).pass);
    }

    #[test]
    fn unexercised_phase_passes() {
        let v = check_bound(Phase::Squeeze, &sweep(|_| 0.0), 1.0);
        assert!(v.pass);
        assert_eq!(v.constant, 0.0);
    }

    #[test]
    fn cooperation_scales_with_workers() {
        let samples: Vec<BoundSample> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&p| BoundSample { n: 100.0, p, tally: 2.0 * p * 100.0 })
            .collect();
        assert!(check_bound(Phase::Cooperation, &samples, 1.0).pass);
    }
}
