//! Three-area wheeling through a transit area.
//!
//! Power injected in area 1 crosses link 1-2 (loss `r1`), the transit grid of
//! area 2 (loss `c`) and link 2-3 (loss `r2`) before it reaches area 3, and
//! symmetrically for the reverse path. Each scenario is gated by two strict
//! per-leg conditions; the transit loss is charged on the leg leaving area 2.

use serde::{Deserialize, Serialize};

use crate::error::ArbError;
use crate::market_model::Interconnector;
use crate::pairwise::check_loss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Area 1 → 2 → 3.
    S123,
    /// Area 3 → 2 → 1.
    S321,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S123 => "S123",
            Scenario::S321 => "S321",
        }
    }
}

/// An ordered path area1 – area2 – area3 over two links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelingChain {
    pub area1: String,
    pub area2: String,
    pub area3: String,
    pub link12: Interconnector,
    pub link23: Interconnector,
    pub transit_loss_c: f64,
}

impl WheelingChain {
    pub fn new(
        areas: [&str; 3],
        link12: Interconnector,
        link23: Interconnector,
        transit_loss_c: f64,
    ) -> Result<Self, ArbError> {
        let [area1, area2, area3] = areas;
        if !(0.0..1.0).contains(&transit_loss_c) {
            return Err(ArbError::Domain(format!(
                "transit loss must lie in [0, 1) (got {transit_loss_c})"
            )));
        }
        check_loss(link12.loss_fraction)?;
        check_loss(link23.loss_fraction)?;
        if !link12.connects(area1, area2) {
            return Err(ArbError::Resolution(format!(
                "link {} does not join {area1} and {area2}",
                link12.id
            )));
        }
        if !link23.connects(area2, area3) {
            return Err(ArbError::Resolution(format!(
                "link {} does not join {area2} and {area3}",
                link23.id
            )));
        }
        Ok(Self {
            area1: area1.to_owned(),
            area2: area2.to_owned(),
            area3: area3.to_owned(),
            link12,
            link23,
            transit_loss_c,
        })
    }

    /// The same path walked from area 3 to area 1.
    pub fn reversed(&self) -> Self {
        Self {
            area1: self.area3.clone(),
            area2: self.area2.clone(),
            area3: self.area1.clone(),
            link12: self.link23.clone(),
            link23: self.link12.clone(),
            transit_loss_c: self.transit_loss_c,
        }
    }
}

/// Prices in €/MWh at the three areas for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainPrices {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ChainPrices {
    pub fn reversed(self) -> Self {
        Self {
            p1: self.p3,
            p2: self.p2,
            p3: self.p1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelingResult {
    pub scenario: Scenario,
    pub feasible: bool,
    /// Left-hand sides of the scenario's two strict inequalities, €/MWh.
    pub gate_values: (f64, f64),
    /// Injected quantity at the origin; zero when infeasible.
    pub quantity_mw: f64,
    pub profit: f64,
}

/// Gates for 1 → 2 → 3: `(p3 (1-r2)(1-c) - p2, p2 (1-r1) - p1)`.
pub fn wheel_gates_123(p1: f64, p2: f64, p3: f64, r1: f64, r2: f64, c: f64) -> (f64, f64) {
    (p3 * (1.0 - r2) * (1.0 - c) - p2, p2 * (1.0 - r1) - p1)
}

/// Gates for 3 → 2 → 1: `(p1 (1-r1)(1-c) - p2, p2 (1-r2) - p3)`.
pub fn wheel_gates_321(p1: f64, p2: f64, p3: f64, r1: f64, r2: f64, c: f64) -> (f64, f64) {
    (p1 * (1.0 - r1) * (1.0 - c) - p2, p2 * (1.0 - r2) - p3)
}

fn check_wheel_inputs(r1: f64, r2: f64, c: f64, x: f64) -> Result<(), ArbError> {
    check_loss(r1)?;
    check_loss(r2)?;
    check_loss(c)?;
    if !(x.is_finite() && x >= 0.0) {
        return Err(ArbError::Domain(format!(
            "quantity must be finite and >= 0 (got {x})"
        )));
    }
    Ok(())
}

/// Raw end-to-end profit of injecting `x` in area 1 and selling in area 3.
/// Negative when the path is unprofitable.
pub fn wheel_profit_123(
    p1: f64,
    p3: f64,
    r1: f64,
    r2: f64,
    c: f64,
    x: f64,
    duration_h: f64,
) -> Result<f64, ArbError> {
    check_wheel_inputs(r1, r2, c, x)?;
    Ok((p3 * (1.0 - r1) * (1.0 - r2) * (1.0 - c) - p1) * x * duration_h)
}

/// Raw end-to-end profit of injecting `x` in area 3 and selling in area 1.
pub fn wheel_profit_321(
    p1: f64,
    p3: f64,
    r1: f64,
    r2: f64,
    c: f64,
    x: f64,
    duration_h: f64,
) -> Result<f64, ArbError> {
    check_wheel_inputs(r1, r2, c, x)?;
    Ok((p1 * (1.0 - r1) * (1.0 - r2) * (1.0 - c) - p3) * x * duration_h)
}

/// Evaluates both wheeling directions along `chain` for one timestep.
///
/// A feasible scenario dispatches `x_request` at its origin. The first leg
/// carries `x_request`, the second the flow left after the first link and the
/// transit grid; either exceeding its link's capacity is an error naming that
/// link. Infeasible scenarios dispatch nothing and report zero profit.
pub fn evaluate_wheel(
    chain: &WheelingChain,
    prices: ChainPrices,
    x_request: f64,
    duration_h: f64,
) -> Result<(WheelingResult, WheelingResult), ArbError> {
    let ChainPrices { p1, p2, p3 } = prices;
    let (r1, r2, c) = (
        chain.link12.loss_fraction,
        chain.link23.loss_fraction,
        chain.transit_loss_c,
    );
    if !(duration_h.is_finite() && duration_h > 0.0) {
        return Err(ArbError::Domain(format!(
            "step duration must be > 0 hours (got {duration_h})"
        )));
    }

    let gates = wheel_gates_123(p1, p2, p3, r1, r2, c);
    let s123 = settle(
        Scenario::S123,
        gates,
        wheel_profit_123(p1, p3, r1, r2, c, x_request, duration_h)?,
        x_request,
        [
            (&chain.link12, x_request),
            (&chain.link23, x_request * (1.0 - r1) * (1.0 - c)),
        ],
    )?;

    let gates = wheel_gates_321(p1, p2, p3, r1, r2, c);
    let s321 = settle(
        Scenario::S321,
        gates,
        wheel_profit_321(p1, p3, r1, r2, c, x_request, duration_h)?,
        x_request,
        [
            (&chain.link23, x_request),
            (&chain.link12, x_request * (1.0 - r2) * (1.0 - c)),
        ],
    )?;
    Ok((s123, s321))
}

fn settle(
    scenario: Scenario,
    gate_values: (f64, f64),
    raw_profit: f64,
    x_request: f64,
    legs: [(&Interconnector, f64); 2],
) -> Result<WheelingResult, ArbError> {
    let feasible = gate_values.0 > 0.0 && gate_values.1 > 0.0;
    if !feasible {
        return Ok(WheelingResult {
            scenario,
            feasible,
            gate_values,
            quantity_mw: 0.0,
            profit: 0.0,
        });
    }
    for (link, flow) in legs {
        if flow > link.capacity_mw {
            return Err(ArbError::Capacity {
                link: link.id.clone(),
                requested: flow,
                capacity: link.capacity_mw,
            });
        }
    }
    Ok(WheelingResult {
        scenario,
        feasible,
        gate_values,
        quantity_mw: x_request,
        profit: raw_profit,
    })
}
