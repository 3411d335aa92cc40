//! Seeded generator of pickup-and-delivery instances in the benchmark file
//! format, used for scaling sweeps and as test data.
//!
//! Coordinates, times and demands are integers. The square shrinks or grows
//! with the square root of the customer count so that point density and the
//! number of customers per route stay comparable across sizes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::io::parse_instance;
use crate::model::{simulate_route, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Points around a few cluster centres.
    Clustered,
    /// Uniform points.
    Random,
    /// Half clustered, half uniform.
    Mixed,
}

impl Layout {
    pub fn prefix(&self) -> &'static str {
        match self {
            Layout::Clustered => "c",
            Layout::Random => "r",
            Layout::Mixed => "rc",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "c" | "clustered" => Ok(Layout::Clustered),
            "r" | "random" => Ok(Layout::Random),
            "rc" | "mixed" => Ok(Layout::Mixed),
            _ => Err(format!("unknown layout `{s}` (expected c, r or rc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub layout: Layout,
    /// Customer points; must be even (one pickup and one delivery per request).
    pub customers: usize,
    pub seed: u64,
    pub capacity: i32,
    pub service_time: i32,
    /// Horizon of the 100-customer instance; scaled with the square side.
    pub base_horizon: i32,
    /// Range of time-window widths.
    pub window: (i32, i32),
}

impl GeneratorConfig {
    pub fn new(layout: Layout, customers: usize, seed: u64) -> Self {
        Self {
            layout,
            customers,
            seed,
            capacity: 200,
            service_time: 10,
            base_horizon: 1000,
            window: (60, 240),
        }
    }

    pub fn name(&self) -> String {
        format!("{}{}-{}", self.layout, self.customers, self.seed)
    }
}

fn dist(a: (i32, i32), b: (i32, i32)) -> f64 {
    f64::from(a.0 - b.0).hypot(f64::from(a.1 - b.1))
}

struct Row {
    xy: (i32, i32),
    demand: i32,
    tw: (i32, i32),
}

/// Generates the instance text (benchmark format).
pub fn generate_text(cfg: &GeneratorConfig) -> Result<String, String> {
    if !cfg.customers.is_multiple_of(2) || cfg.customers == 0 {
        return Err(format!("customer count {} must be positive and even", cfg.customers));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = (cfg.customers as f64 / 100.0).sqrt();
    let side = (100.0 * scale).round() as i32;
    let horizon = (f64::from(cfg.base_horizon) * scale).round() as i32;
    let depot = (side / 2, side / 2);
    let clusters: Vec<(f64, f64)> = (0..((cfg.customers / 10).max(2)))
        .map(|_| (rng.gen_range(0.1..0.9) * f64::from(side), rng.gen_range(0.1..0.9) * f64::from(side)))
        .collect();
    let spread = Normal::new(0.0, f64::from(side) / 25.0).expect("positive spread");
    let place = |rng: &mut ChaCha8Rng, i: usize| -> (i32, i32) {
        let clustered = match cfg.layout {
            Layout::Clustered => true,
            Layout::Random => false,
            Layout::Mixed => i.is_multiple_of(2),
        };
        let (x, y) = if clustered {
            let c = clusters[rng.gen_range(0..clusters.len())];
            (c.0 + spread.sample(rng), c.1 + spread.sample(rng))
        } else {
            (rng.gen_range(0.0..f64::from(side)), rng.gen_range(0.0..f64::from(side)))
        };
        (x.round().clamp(0.0, f64::from(side)) as i32, y.round().clamp(0.0, f64::from(side)) as i32)
    };
    let s = cfg.service_time;
    let mut rows: Vec<(Row, Row)> = Vec::with_capacity(cfg.customers / 2);
    let mut i = 0usize;
    while rows.len() < cfg.customers / 2 {
        let a = place(&mut rng, i);
        let b = place(&mut rng, i + 1);
        let to_a = dist(depot, a);
        let ab = dist(a, b);
        let back = dist(b, depot);
        let earliest_p = to_a.ceil() as i32;
        let latest_p = horizon - 2 * s - ab.ceil() as i32 - back.ceil() as i32 - 1;
        if latest_p <= earliest_p {
            continue;
        }
        i += 2;
        let t_p = rng.gen_range(earliest_p..=latest_p);
        let slack = latest_p - t_p;
        let t_d = t_p + s + ab.ceil() as i32 + rng.gen_range(0..=slack.min(cfg.window.1));
        let w_p = rng.gen_range(cfg.window.0..=cfg.window.1);
        let w_d = rng.gen_range(cfg.window.0..=cfg.window.1);
        let tw_p = ((t_p - w_p / 2).max(0), (t_p + w_p / 2).min(horizon));
        let tw_d = ((t_d - w_d / 2).max(0), (t_d + w_d / 2).min(horizon));
        let demand = 10 * rng.gen_range(1..=4);
        rows.push((Row { xy: a, demand, tw: tw_p }, Row { xy: b, demand: -demand, tw: tw_d }));
    }
    let mut text = format!("{} {} 1\n", cfg.customers / 2, cfg.capacity);
    text.push_str(&format!("0 {} {} 0 0 {horizon} 0 0 0\n", depot.0, depot.1));
    for (k, (p, d)) in rows.iter().enumerate() {
        let pid = 2 * k + 1;
        let did = pid + 1;
        text.push_str(&format!(
            "{pid} {} {} {} {} {} {s} 0 {did}\n",
            p.xy.0, p.xy.1, p.demand, p.tw.0, p.tw.1
        ));
        text.push_str(&format!(
            "{did} {} {} {} {} {} {s} {pid} 0\n",
            d.xy.0, d.xy.1, d.demand, d.tw.0, d.tw.1
        ));
    }
    Ok(text)
}

/// Generates and parses an instance; every request is feasible on its own.
pub fn generate(cfg: &GeneratorConfig) -> Result<Instance, String> {
    let text = generate_text(cfg)?;
    let inst = parse_instance(&cfg.name(), &text).map_err(|e| e.to_string())?;
    for r in inst.requests() {
        let v = simulate_route(&[r.pickup, r.delivery], &inst);
        if !v.is_empty() {
            return Err(format!("generated request {} is infeasible alone", r.id + 1));
        }
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        for layout in [Layout::Clustered, Layout::Random, Layout::Mixed] {
            let cfg = GeneratorConfig::new(layout, 100, 7);
            let a = generate_text(&cfg).unwrap();
            assert_eq!(a, generate_text(&cfg).unwrap());
            let inst = generate(&cfg).unwrap();
            assert_eq!(inst.n(), 50);
            assert_eq!(inst.points().len(), 101);
            assert_eq!(inst.capacity(), 200);
        }
    }

    #[test]
    fn sizes_scale_the_square() {
        let small = generate(&GeneratorConfig::new(Layout::Random, 100, 1)).unwrap();
        let large = generate(&GeneratorConfig::new(Layout::Random, 400, 1)).unwrap();
        assert_eq!(large.n(), 200);
        assert_eq!(small.depot().tw_latest * 2.0, large.depot().tw_latest);
    }

    #[test]
    fn odd_sizes_are_rejected() {
        assert!(generate(&GeneratorConfig::new(Layout::Random, 101, 1)).is_err());
        assert_eq!("rc".parse::<Layout>(), Ok(Layout::Mixed));
        assert!("x".parse::<Layout>().is_err());
    }
}
