//! Market areas, price series, interconnectors and their validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ArbError;

/// Timestep index within an analysis horizon.
pub type Timestep = u32;

/// Length-based losses at or above this fraction are rejected.
const MAX_LOSS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub name: String,
}

impl Region {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
        }
    }
}

/// Price in €/MWh for one region, indexed by timestep.
///
/// Timesteps are strictly increasing. Negative prices are allowed, non-finite
/// ones are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    region_id: String,
    steps: Vec<(Timestep, f64)>,
}

impl PriceSeries {
    pub fn new(
        region_id: impl Into<String>,
        steps: Vec<(Timestep, f64)>,
    ) -> Result<Self, ArbError> {
        let region_id = region_id.into();
        check_steps(
            &region_id,
            &steps,
            |p| p.is_finite(),
            "price must be finite",
        )?;
        Ok(Self { region_id, steps })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn steps(&self) -> &[(Timestep, f64)] {
        &self.steps
    }

    pub fn timesteps(&self) -> impl Iterator<Item = Timestep> + '_ {
        self.steps.iter().map(|(t, _)| *t)
    }

    pub fn price_at(&self, t: Timestep) -> Option<f64> {
        self.steps
            .binary_search_by_key(&t, |(s, _)| *s)
            .ok()
            .map(|i| self.steps[i].1)
    }

    /// Restricts the series to `from..=to`.
    pub fn window(&self, from: Option<Timestep>, to: Option<Timestep>) -> Self {
        let steps = self
            .steps
            .iter()
            .copied()
            .filter(|(t, _)| from.is_none_or(|f| *t >= f) && to.is_none_or(|e| *t <= e))
            .collect();
        Self {
            region_id: self.region_id.clone(),
            steps,
        }
    }
}

/// A lossy bidirectional HVDC link between two regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interconnector {
    pub id: String,
    pub endpoint_a: String,
    pub endpoint_b: String,
    /// Maximum transfer, MW.
    pub capacity_mw: f64,
    /// Share of injected power lost in transit, in `[0, 1)`.
    pub loss_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
}

impl Interconnector {
    pub fn new(
        id: impl Into<String>,
        endpoint_a: impl Into<String>,
        endpoint_b: impl Into<String>,
        capacity_mw: f64,
        loss_fraction: f64,
    ) -> Self {
        Self {
            id: id.into(),
            endpoint_a: endpoint_a.into(),
            endpoint_b: endpoint_b.into(),
            capacity_mw,
            loss_fraction,
            length_km: None,
        }
    }

    pub fn with_length_km(mut self, length_km: f64) -> Self {
        self.length_km = Some(length_km);
        self
    }

    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.endpoint_a == a && self.endpoint_b == b)
            || (self.endpoint_a == b && self.endpoint_b == a)
    }

    /// Constant profile at nameplate capacity over the given timesteps.
    pub fn flat_profile(&self, timesteps: impl IntoIterator<Item = Timestep>) -> CapacityProfile {
        CapacityProfile {
            interconnector_id: self.id.clone(),
            steps: timesteps
                .into_iter()
                .map(|t| (t, self.capacity_mw))
                .collect(),
        }
    }
}

/// Per-timestep transfer limit X_max^t of one interconnector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProfile {
    interconnector_id: String,
    steps: Vec<(Timestep, f64)>,
}

impl CapacityProfile {
    pub fn new(
        interconnector_id: impl Into<String>,
        steps: Vec<(Timestep, f64)>,
    ) -> Result<Self, ArbError> {
        let interconnector_id = interconnector_id.into();
        check_steps(
            &interconnector_id,
            &steps,
            |x| x.is_finite() && x >= 0.0,
            "capacity must be finite and non-negative",
        )?;
        Ok(Self {
            interconnector_id,
            steps,
        })
    }

    pub fn interconnector_id(&self) -> &str {
        &self.interconnector_id
    }

    pub fn steps(&self) -> &[(Timestep, f64)] {
        &self.steps
    }

    pub fn x_max_at(&self, t: Timestep) -> Option<f64> {
        self.steps
            .binary_search_by_key(&t, |(s, _)| *s)
            .ok()
            .map(|i| self.steps[i].1)
    }

    pub fn window(&self, from: Option<Timestep>, to: Option<Timestep>) -> Self {
        let steps = self
            .steps
            .iter()
            .copied()
            .filter(|(t, _)| from.is_none_or(|f| *t >= f) && to.is_none_or(|e| *t <= e))
            .collect();
        Self {
            interconnector_id: self.interconnector_id.clone(),
            steps,
        }
    }

    /// Scales every limit by `k >= 0`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            interconnector_id: self.interconnector_id.clone(),
            steps: self.steps.iter().map(|(t, x)| (*t, x * k)).collect(),
        }
    }
}

fn check_steps(
    owner: &str,
    steps: &[(Timestep, f64)],
    value_ok: impl Fn(f64) -> bool,
    what: &str,
) -> Result<(), ArbError> {
    for (i, (t, v)) in steps.iter().enumerate() {
        if i > 0 && steps[i - 1].0 >= *t {
            return Err(ArbError::Invalid(format!(
                "{owner}: timesteps must be strictly increasing (t={} then t={t})",
                steps[i - 1].0
            )));
        }
        if !value_ok(*v) {
            return Err(ArbError::Invalid(format!(
                "{owner}: {what} (t={t}, value={v})"
            )));
        }
    }
    Ok(())
}

/// Regions, links and (optionally) the price series attached to them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub regions: Vec<Region>,
    pub interconnectors: Vec<Interconnector>,
    #[serde(default)]
    pub price_series: BTreeMap<String, PriceSeries>,
}

impl Network {
    pub fn new(regions: Vec<Region>, interconnectors: Vec<Interconnector>) -> Self {
        Self {
            regions,
            interconnectors,
            price_series: BTreeMap::new(),
        }
    }

    pub fn with_prices(mut self, series: impl IntoIterator<Item = PriceSeries>) -> Self {
        for s in series {
            self.price_series.insert(s.region_id().to_owned(), s);
        }
        self
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn interconnector(&self, id: &str) -> Option<&Interconnector> {
        self.interconnectors.iter().find(|l| l.id == id)
    }

    pub fn prices(&self, region_id: &str) -> Option<&PriceSeries> {
        self.price_series.get(region_id)
    }

    /// Sorted union of the timesteps covered by any attached price series.
    pub fn horizon(&self) -> Vec<Timestep> {
        self.price_series
            .values()
            .flat_map(|s| s.timesteps())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Restricts every price series to `from..=to`.
    pub fn window(&self, from: Option<Timestep>, to: Option<Timestep>) -> Self {
        let mut out = self.clone();
        for s in out.price_series.values_mut() {
            *s = s.window(from, to);
        }
        out
    }
}

/// One broken invariant, tagged with the entity that broke it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, entity: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            entity: entity.to_owned(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every network invariant and lists each violation.
///
/// Price coverage is only checked once price series are attached: each region
/// touched by a link must then have a series spanning the full horizon.
pub fn validate_network(network: &Network) -> ValidationReport {
    let mut report = validate_topology(network);

    if network.price_series.is_empty() {
        return report;
    }
    let horizon = network.horizon();
    let known: BTreeSet<&str> = network.regions.iter().map(|r| r.id.as_str()).collect();
    for id in network.price_series.keys() {
        if !known.contains(id.as_str()) {
            report.push(id, "price series for undeclared region");
        }
    }
    for (id, series) in &network.price_series {
        if let Err(e) = PriceSeries::new(id.clone(), series.steps().to_vec()) {
            report.push(id, e.to_string());
        }
    }
    let linked: BTreeSet<&str> = network
        .interconnectors
        .iter()
        .flat_map(|l| [l.endpoint_a.as_str(), l.endpoint_b.as_str()])
        .filter(|r| known.contains(r))
        .collect();
    for region in linked {
        match network.prices(region) {
            None => report.push(region, "linked region has no price series"),
            Some(series) => {
                let missing: Vec<_> = horizon
                    .iter()
                    .filter(|t| series.price_at(**t).is_none())
                    .collect();
                if !missing.is_empty() {
                    report.push(region, format!("price series misses timesteps {missing:?}"));
                }
            }
        }
    }
    report
}

/// Structural checks only: ids, endpoints, capacities and losses.
pub fn validate_topology(network: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for region in &network.regions {
        if region.id.is_empty() {
            report.push("<region>", "empty region id");
        } else if !seen.insert(region.id.as_str()) {
            report.push(&region.id, "duplicate region id");
        }
    }

    let mut links = BTreeSet::new();
    for link in &network.interconnectors {
        let id = link.id.as_str();
        if id.is_empty() {
            report.push("<interconnector>", "empty interconnector id");
        } else if !links.insert(id) {
            report.push(id, "duplicate interconnector id");
        }
        for end in [&link.endpoint_a, &link.endpoint_b] {
            if !seen.contains(end.as_str()) {
                report.push(id, format!("unknown region '{end}'"));
            }
        }
        if link.endpoint_a == link.endpoint_b {
            report.push(id, "endpoints must differ");
        }
        if !(link.capacity_mw.is_finite() && link.capacity_mw >= 0.0) {
            report.push(
                id,
                format!("capacity_mw must be >= 0 (got {})", link.capacity_mw),
            );
        }
        if !(0.0..MAX_LOSS).contains(&link.loss_fraction) {
            report.push(
                id,
                format!(
                    "loss_fraction must lie in [0, 1) (got {})",
                    link.loss_fraction
                ),
            );
        }
        if let Some(len) = link.length_km {
            if !(len.is_finite() && len >= 0.0) {
                report.push(id, format!("length_km must be >= 0 (got {len})"));
            }
        }
    }
    report
}

/// Linear loss model: `length_km * rate / 100`.
pub fn loss_from_length(length_km: f64, loss_rate_per_100km: f64) -> Result<f64, ArbError> {
    if !(length_km.is_finite() && length_km >= 0.0) {
        return Err(ArbError::Domain(format!(
            "length_km must be >= 0 (got {length_km})"
        )));
    }
    if !(0.0..MAX_LOSS).contains(&loss_rate_per_100km) {
        return Err(ArbError::Domain(format!(
            "loss rate per 100 km must lie in [0, 1) (got {loss_rate_per_100km})"
        )));
    }
    let r = length_km * loss_rate_per_100km / 100.0;
    if r >= MAX_LOSS {
        return Err(ArbError::InvalidLoss(r));
    }
    Ok(r)
}
