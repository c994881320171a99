//! Horizon scheduling of links under time-varying transfer limits.
//!
//! The horizon problem chooses `x_t ∈ [0, X_max^t]` for every step with
//! `λ_t` held at its epigraph lower bound
//! `max(p_a - p_b - r p_a - r_b, p_b - p_a - r p_b - r_b, 0)`, and maximises
//! `Σ x_t λ_t`. Read literally as a minimisation the problem is solved by
//! `x ≡ 0`; the maximising reading is the one that reproduces the bundled
//! case-study profits. Steps share no constraint, so the optimum decomposes
//! into independent per-step bang-bang decisions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ArbError;
use crate::market_model::{
    validate_network, CapacityProfile, Interconnector, Network, PriceSeries, Timestep,
};
use crate::pairwise::{check_loss, optimal_flow, BiasPolicy, Direction, FlowDecision};

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub interconnector_id: String,
    pub decisions: Vec<FlowDecision>,
    pub total_profit: f64,
}

impl Schedule {
    fn from_decisions(interconnector_id: &str, decisions: Vec<FlowDecision>) -> Self {
        let total_profit = decisions.iter().map(|d| d.profit).sum();
        Self {
            interconnector_id: interconnector_id.to_owned(),
            decisions,
            total_profit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioResult {
    /// One schedule per link, ordered by link id.
    pub schedules: Vec<Schedule>,
    pub grand_total: f64,
    pub annualized: f64,
}

impl PortfolioResult {
    pub fn schedule(&self, link_id: &str) -> Option<&Schedule> {
        self.schedules
            .iter()
            .find(|s| s.interconnector_id == link_id)
    }
}

/// Linear extrapolation of a one-hour profit to 8760 hours.
pub fn extrapolate_annual(hourly_profit: f64) -> f64 {
    hourly_profit * HOURS_PER_YEAR
}

fn check_duration(duration_h: f64) -> Result<(), ArbError> {
    if duration_h.is_finite() && duration_h > 0.0 {
        Ok(())
    } else {
        Err(ArbError::Domain(format!(
            "step duration must be > 0 hours (got {duration_h})"
        )))
    }
}

/// Aligned per-step inputs `(t, p_a, p_b, x_max)`.
fn align(
    prices_a: &PriceSeries,
    prices_b: &PriceSeries,
    link: &Interconnector,
    capacity: &CapacityProfile,
) -> Result<Vec<(Timestep, f64, f64, f64)>, ArbError> {
    if prices_a.region_id() != link.endpoint_a || prices_b.region_id() != link.endpoint_b {
        return Err(ArbError::Resolution(format!(
            "link {} joins {}-{} but prices are for {}-{}",
            link.id,
            link.endpoint_a,
            link.endpoint_b,
            prices_a.region_id(),
            prices_b.region_id()
        )));
    }
    if capacity.interconnector_id() != link.id {
        return Err(ArbError::Resolution(format!(
            "capacity profile for {} supplied to link {}",
            capacity.interconnector_id(),
            link.id
        )));
    }

    let mut horizon: Vec<Timestep> = prices_a
        .timesteps()
        .chain(prices_b.timesteps())
        .chain(capacity.steps().iter().map(|(t, _)| *t))
        .collect();
    horizon.sort_unstable();
    horizon.dedup();

    let missing = |entity: &str, has: &dyn Fn(Timestep) -> bool| {
        let missing: Vec<_> = horizon.iter().copied().filter(|t| !has(*t)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ArbError::Alignment {
                entity: entity.to_owned(),
                missing,
            })
        }
    };
    missing(prices_a.region_id(), &|t| prices_a.price_at(t).is_some())?;
    missing(prices_b.region_id(), &|t| prices_b.price_at(t).is_some())?;
    missing(&format!("capacity of {}", link.id), &|t| {
        capacity.x_max_at(t).is_some()
    })?;

    Ok(prices_a
        .steps()
        .iter()
        .zip(prices_b.steps())
        .zip(capacity.steps())
        .map(|((&(t, pa), &(_, pb)), &(_, x))| (t, pa, pb, x))
        .collect())
}

/// Optimal dispatch of one link over the horizon covered by its inputs.
pub fn schedule_link(
    prices_a: &PriceSeries,
    prices_b: &PriceSeries,
    link: &Interconnector,
    capacity: &CapacityProfile,
    bias: BiasPolicy,
    duration_h: f64,
) -> Result<Schedule, ArbError> {
    check_duration(duration_h)?;
    let steps = align(prices_a, prices_b, link, capacity)?;
    let decisions = steps
        .into_iter()
        .map(|(t, pa, pb, x_max)| {
            optimal_flow(pa, pb, link.loss_fraction, x_max, bias, duration_h, t)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Schedule::from_decisions(&link.id, decisions))
}

/// Reference solver for [`schedule_link`], intended for tests and audits.
///
/// Pins `λ_t` to the smallest value satisfying every epigraph constraint and
/// enumerates the box vertices `x_t ∈ {0, X_max^t}` for each step.
pub fn lp_oracle(
    prices_a: &PriceSeries,
    prices_b: &PriceSeries,
    link: &Interconnector,
    capacity: &CapacityProfile,
    bias: BiasPolicy,
    duration_h: f64,
) -> Result<Schedule, ArbError> {
    check_duration(duration_h)?;
    check_loss(link.loss_fraction)?;
    let r = link.loss_fraction;
    let r_b = bias.r_b();
    let steps = align(prices_a, prices_b, link, capacity)?;

    let mut decisions = Vec::with_capacity(steps.len());
    for (t, pa, pb, x_max) in steps {
        // Lower bounds on λ_t: 0, the margin toward A, the margin toward B.
        let bounds = [0.0, pa - pb - r * pa - r_b, pb - pa - r * pb - r_b];
        let mut lambda = bounds[0];
        for b in &bounds[1..] {
            if *b > lambda {
                lambda = *b;
            }
        }

        let mut best = (0.0, 0.0 * lambda * duration_h);
        let full = x_max * lambda * duration_h;
        if full > best.1 {
            best = (x_max, full);
        }
        let direction = if best.0 == 0.0 {
            Direction::Idle
        } else if bounds[2] > bounds[1] {
            Direction::AToB
        } else {
            Direction::BToA
        };
        decisions.push(FlowDecision {
            timestep: t,
            direction,
            quantity_mw: best.0,
            marginal_value: lambda,
            profit: best.1,
        });
    }
    Ok(Schedule::from_decisions(&link.id, decisions))
}

/// Schedules every link of `network` independently and totals the profits.
///
/// Links without an entry in `capacities` run at nameplate capacity over the
/// network's price horizon.
pub fn schedule_portfolio(
    network: &Network,
    capacities: &BTreeMap<String, CapacityProfile>,
    bias: BiasPolicy,
    duration_h: f64,
) -> Result<PortfolioResult, ArbError> {
    check_duration(duration_h)?;
    let report = validate_network(network);
    if !report.is_empty() {
        return Err(ArbError::Validation(report));
    }
    let horizon = network.horizon();

    let mut links: Vec<&Interconnector> = network.interconnectors.iter().collect();
    links.sort_by(|a, b| a.id.cmp(&b.id));

    let schedules = links
        .par_iter()
        .map(|link| {
            let run = || {
                let prices_a = price_series(network, &link.endpoint_a)?;
                let prices_b = price_series(network, &link.endpoint_b)?;
                let flat;
                let capacity = match capacities.get(&link.id) {
                    Some(c) => c,
                    None => {
                        flat = link.flat_profile(horizon.iter().copied());
                        &flat
                    }
                };
                schedule_link(prices_a, prices_b, link, capacity, bias, duration_h)
            };
            run().map_err(|e| e.for_link(&link.id))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let grand_total = schedules.iter().map(|s| s.total_profit).sum();
    Ok(PortfolioResult {
        schedules,
        grand_total,
        annualized: extrapolate_annual(grand_total),
    })
}

fn price_series<'a>(network: &'a Network, region: &str) -> Result<&'a PriceSeries, ArbError> {
    network
        .prices(region)
        .ok_or_else(|| ArbError::Resolution(format!("no price series for region '{region}'")))
}
