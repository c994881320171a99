//! Single-link, single-timestep arbitrage economics.
//!
//! A link between endpoints A and B with loss fraction `r` delivers `(1 - r) x`
//! of every `x` MWh injected. Shipping toward B earns `p_b (1 - r) - p_a` per
//! injected MWh, shipping toward A earns `p_a (1 - r) - p_b`. The marginal value
//! of the link is the better of the two, floored at zero, optionally reduced by
//! a bias `r_b` that suppresses low-margin trades. Profit is linear in the
//! dispatched quantity, so the optimal dispatch is always idle or full capacity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ArbError;
use crate::market_model::Timestep;

/// Flow direction relative to the link's declared endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A_to_B")]
    AToB,
    #[serde(rename = "B_to_A")]
    BToA,
    Idle,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::AToB => "A_to_B",
            Direction::BToA => "B_to_A",
            Direction::Idle => "Idle",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Minimum margin in €/MWh a trade must beat before the link is dispatched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasPolicy {
    r_b: f64,
}

impl BiasPolicy {
    pub const NONE: BiasPolicy = BiasPolicy { r_b: 0.0 };

    pub fn new(r_b: f64) -> Result<Self, ArbError> {
        if r_b.is_finite() && r_b >= 0.0 {
            Ok(Self { r_b })
        } else {
            Err(ArbError::Domain(format!(
                "bias must be finite and >= 0 (got {r_b})"
            )))
        }
    }

    pub fn r_b(self) -> f64 {
        self.r_b
    }
}

/// Dispatch outcome of one link at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDecision {
    pub timestep: Timestep,
    pub direction: Direction,
    pub quantity_mw: f64,
    /// Biased λ_t in €/MWh, never negative.
    pub marginal_value: f64,
    pub profit: f64,
}

pub(crate) fn check_loss(r: f64) -> Result<(), ArbError> {
    if (0.0..1.0).contains(&r) {
        Ok(())
    } else {
        Err(ArbError::Domain(format!(
            "loss fraction must lie in [0, 1) (got {r})"
        )))
    }
}

fn check_quantity(x: f64) -> Result<(), ArbError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(ArbError::Domain(format!(
            "quantity must be finite and >= 0 (got {x})"
        )))
    }
}

/// Ratio form of the operating condition: ship from the `p_from` side to the
/// `p_to` side iff `p_to / p_from > 1 / (1 - r)`.
///
/// Only defined for strictly positive prices; use [`marginal_value`] otherwise.
/// Evaluated as `p_to (1 - r) > p_from`, which is the same inequality with
/// both sides scaled by `p_from (1 - r) > 0` and avoids rounding in two
/// divisions at the threshold.
pub fn flow_condition(p_to: f64, p_from: f64, r: f64) -> Result<bool, ArbError> {
    check_loss(r)?;
    if !(p_to > 0.0 && p_from > 0.0) {
        return Err(ArbError::Domain(format!(
            "ratio condition needs positive prices (got {p_to}, {p_from}); use marginal_value"
        )));
    }
    Ok(p_to * (1.0 - r) > p_from)
}

/// Per-MWh margins `(toward_a, toward_b)`. The loss is charged on the
/// destination price.
#[inline]
fn directional_margins(p_a: f64, p_b: f64, r: f64) -> (f64, f64) {
    (p_a - p_b - r * p_a, p_b - p_a - r * p_b)
}

/// λ at its tight lower bound: `max(p_i - p_j - r p_i, p_j - p_i - r p_j, 0)`.
pub fn marginal_value(p_i: f64, p_j: f64, r: f64) -> f64 {
    biased_marginal_value(p_i, p_j, r, 0.0)
}

/// [`marginal_value`] with the bias subtracted from both directions before
/// flooring at zero.
pub fn biased_marginal_value(p_i: f64, p_j: f64, r: f64, r_b: f64) -> f64 {
    let (to_i, to_j) = directional_margins(p_i, p_j, r);
    floor_at_zero((to_i - r_b).max(to_j - r_b))
}

/// Positive part, always returning `+0.0` for non-positive input.
#[inline]
fn floor_at_zero(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

pub fn pairwise_profit(
    p_i: f64,
    p_j: f64,
    r: f64,
    x: f64,
    duration_h: f64,
) -> Result<f64, ArbError> {
    pairwise_profit_biased(p_i, p_j, r, x, 0.0, duration_h)
}

pub fn pairwise_profit_biased(
    p_i: f64,
    p_j: f64,
    r: f64,
    x: f64,
    r_b: f64,
    duration_h: f64,
) -> Result<f64, ArbError> {
    check_loss(r)?;
    check_quantity(x)?;
    BiasPolicy::new(r_b)?;
    Ok(x * biased_marginal_value(p_i, p_j, r, r_b) * duration_h)
}

/// Bang-bang dispatch of one link for one timestep.
///
/// `p_a` and `p_b` are the prices at the link's A and B endpoints. The link
/// runs at `x_max` toward the endpoint with the better biased margin when that
/// margin is strictly positive, and idles otherwise (including when
/// `x_max == 0`).
pub fn optimal_flow(
    p_a: f64,
    p_b: f64,
    r: f64,
    x_max: f64,
    bias: BiasPolicy,
    duration_h: f64,
    timestep: Timestep,
) -> Result<FlowDecision, ArbError> {
    check_loss(r)?;
    check_quantity(x_max)?;
    let r_b = bias.r_b();
    let (to_a, to_b) = directional_margins(p_a, p_b, r);
    let (to_a, to_b) = (to_a - r_b, to_b - r_b);
    let lambda = floor_at_zero(to_a.max(to_b));

    let direction = if lambda > 0.0 && x_max > 0.0 {
        // Both margins can be positive only with negative prices.
        if to_b > to_a {
            Direction::AToB
        } else {
            Direction::BToA
        }
    } else {
        Direction::Idle
    };
    let quantity_mw = if direction == Direction::Idle {
        0.0
    } else {
        x_max
    };
    Ok(FlowDecision {
        timestep,
        direction,
        quantity_mw,
        marginal_value: lambda,
        profit: quantity_mw * lambda * duration_h,
    })
}
