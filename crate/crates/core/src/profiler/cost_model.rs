//! Closed-form pessimistic cost model of the parallel route minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModelParams {
    /// Constants s1..s7, index 0 holding s1.
    pub s: [f64; 7],
    pub z1: u64,
    pub z2: u64,
    pub k_max: u32,
    pub perturb_steps: u64,
    pub p: u64,
    pub n: u64,
}

impl CostModelParams {
    pub fn unit(p: u64, n: u64, k_max: u32) -> Self {
        Self {
            s: [1.0; 7],
            z1: 1,
            z2: 1,
            k_max,
            perturb_steps: 1,
            p,
            n,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.s.iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Cost of one inner iteration: `s5 n^4 + s6 p n^(k_max+2) + s7 p n`.
pub fn eval_t_in_pes(c: &CostModelParams) -> f64 {
    let n = c.n as f64;
    let p = c.p as f64;
    c.s[4] * n.powi(4) + c.s[5] * p * n.powi(c.k_max as i32 + 2) + c.s[6] * p * n
}

/// Total pessimistic cost:
/// `s1 n + z1 (s2 n + z2 T_in + s3 n) + s4 p n`.
pub fn eval_t_pes(c: &CostModelParams) -> f64 {
    let n = c.n as f64;
    let p = c.p as f64;
    let inner = eval_t_in_pes(c);
    c.s[0] * n + c.z1 as f64 * (c.s[1] * n + c.z2 as f64 * inner + c.s[2] * n) + c.s[3] * p * n
}

/// The asymptotic order `n^(k_max+2) + p n` the total cost is bounded by.
pub fn dominant_term(c: &CostModelParams) -> f64 {
    let n = c.n as f64;
    n.powi(c.k_max as i32 + 2) + c.p as f64 * n
}
