//! Reference computations shared by the integration tests. Nothing here calls
//! into the dispatch code it is used to check.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use hvdc_arbitrage::{CapacityProfile, Interconnector, PriceSeries, Timestep};
use rand::Rng;

/// Cash flow of injecting `x` MWh at the origin for one step of `duration_h`:
/// energy delivered after losses sold at the destination, minus energy bought
/// at the origin, minus the bias on every injected MWh.
pub fn cash_flow(p_origin: f64, p_dest: f64, r: f64, x: f64, r_b: f64, duration_h: f64) -> f64 {
    let injected = x * duration_h;
    let delivered = injected * (1.0 - r);
    delivered * p_dest - injected * p_origin - injected * r_b
}

/// Best of {idle, full A→B, full B→A} by direct enumeration.
pub fn best_of_three(p_a: f64, p_b: f64, r: f64, x_max: f64, r_b: f64, duration_h: f64) -> f64 {
    [
        0.0,
        cash_flow(p_a, p_b, r, x_max, r_b, duration_h),
        cash_flow(p_b, p_a, r, x_max, r_b, duration_h),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Horizon optimum by enumerating `x_t ∈ {0, X_max^t}` in both directions
/// at every step.
pub fn horizon_brute_force(
    p_a: &[f64],
    p_b: &[f64],
    r: f64,
    x_max: &[f64],
    r_b: f64,
    d: f64,
) -> f64 {
    p_a.iter()
        .zip(p_b)
        .zip(x_max)
        .map(|((a, b), x)| best_of_three(*a, *b, r, *x, r_b, d))
        .sum()
}

/// Relative agreement, with an absolute floor scaled to the traded value.
pub fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(scale)
}

/// Result of pushing energy hop by hop along a wheeling path.
#[derive(Debug, Clone, Copy)]
pub struct Forwarded {
    /// Every hop, taken on its own, is strictly profitable.
    pub every_hop_profitable: bool,
    pub end_to_end_profit: f64,
}

/// Forwards `x` MWh along `prices[0] -> prices[1] -> prices[2]`, where
/// `hop_factors[k]` is the share of energy surviving hop `k`.
pub fn forward(prices: [f64; 3], hop_factors: [f64; 2], x: f64) -> Forwarded {
    let mut energy = x;
    let mut every_hop_profitable = true;
    for k in 0..2 {
        let arriving = energy * hop_factors[k];
        // Buy what enters the hop, sell what leaves it.
        let hop_gain = arriving * prices[k + 1] - energy * prices[k];
        if !(hop_gain > 0.0) {
            every_hop_profitable = false;
        }
        energy = arriving;
    }
    Forwarded {
        every_hop_profitable,
        end_to_end_profit: energy * prices[2] - x * prices[0],
    }
}

/// Area 1 → 3: link 1-2, then transit loss and link 2-3 on the second hop.
pub fn forward_123(p: [f64; 3], r1: f64, r2: f64, c: f64, x: f64) -> Forwarded {
    forward(p, [1.0 - r1, (1.0 - c) * (1.0 - r2)], x)
}

/// Area 3 → 1: link 2-3, then transit loss and link 1-2 on the second hop.
pub fn forward_321(p: [f64; 3], r1: f64, r2: f64, c: f64, x: f64) -> Forwarded {
    forward([p[2], p[1], p[0]], [1.0 - r2, (1.0 - c) * (1.0 - r1)], x)
}

/// One random horizon instance for the scheduler checks.
#[derive(Debug, Clone)]
pub struct Instance {
    pub link: Interconnector,
    pub prices_a: PriceSeries,
    pub prices_b: PriceSeries,
    pub capacity: CapacityProfile,
    pub r_b: f64,
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    pub raw_x: Vec<f64>,
}

pub fn random_instance<R: Rng>(rng: &mut R, max_t: usize) -> Instance {
    let t_len = rng.gen_range(1..=max_t);
    let r = rng.gen_range(0.0..0.2);
    let r_b = rng.gen_range(0.0..20.0);
    let raw_a: Vec<f64> = (0..t_len).map(|_| rng.gen_range(-50.0..200.0)).collect();
    let raw_b: Vec<f64> = (0..t_len).map(|_| rng.gen_range(-50.0..200.0)).collect();
    let raw_x: Vec<f64> = (0..t_len).map(|_| rng.gen_range(0.0..1000.0)).collect();
    let steps = |v: &[f64]| -> Vec<(Timestep, f64)> {
        v.iter()
            .enumerate()
            .map(|(i, p)| (i as Timestep + 1, *p))
            .collect()
    };
    Instance {
        link: Interconnector::new("l", "a", "b", 1000.0, r),
        prices_a: PriceSeries::new("a", steps(&raw_a)).unwrap(),
        prices_b: PriceSeries::new("b", steps(&raw_b)).unwrap(),
        capacity: CapacityProfile::new("l", steps(&raw_x)).unwrap(),
        r_b,
        raw_a,
        raw_b,
        raw_x,
    }
}
