//! Price, capacity and network file formats, plus the bundled case study.
//!
//! Price CSV (`timestep,region_id,price_eur_mwh`) and capacity CSV
//! (`timestep,link_id,x_max_mw`) are long-format: one row per key and
//! timestep, timesteps strictly increasing per key in file order.
//!
//! Network files are TOML:
//!
//! ```toml
//! prices = "prices.csv"          # optional, relative to the network file
//!
//! [[regions]]
//! id = "ireland"
//! name = "Ireland"
//!
//! [[links]]
//! id = "celtic"
//! from = "ireland"
//! to = "france"
//! capacity_mw = 700.0
//! loss_fraction = 0.0575         # or length_km + loss_rate_per_100km
//! length_km = 575.0              # optional when loss_fraction is given
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ArbError;
use crate::market_model::{
    loss_from_length, validate_network, validate_topology, CapacityProfile, Interconnector,
    Network, PriceSeries, Region, Timestep,
};

pub const PRICE_HEADER: [&str; 3] = ["timestep", "region_id", "price_eur_mwh"];
pub const CAPACITY_HEADER: [&str; 3] = ["timestep", "link_id", "x_max_mw"];

/// Environment variable overriding the bundled data directory.
pub const DATA_DIR_ENV: &str = "HVDC_ARB_DATA_DIR";

/// Loss given directly and via length may differ by at most this much.
const LOSS_AGREEMENT_TOL: f64 = 1e-12;

type LongSeries = BTreeMap<String, Vec<(Timestep, f64)>>;

fn read_long_csv<R: Read>(
    reader: R,
    header: [&str; 3],
    value_ok: impl Fn(f64) -> bool,
    what: &str,
) -> Result<LongSeries, ArbError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut records = rdr.records();

    match records.next() {
        None => {
            return Err(ArbError::Parse {
                line: 1,
                message: format!("missing header, expected {}", header.join(",")),
            })
        }
        Some(rec) => {
            let rec = rec.map_err(|e| csv_error(e, 1))?;
            if rec.iter().ne(header.iter().copied()) {
                return Err(ArbError::Parse {
                    line: 1,
                    message: format!("bad header, expected {}", header.join(",")),
                });
            }
        }
    }

    let mut out: LongSeries = BTreeMap::new();
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse_err = |message: String| ArbError::Parse { line, message };
        if rec.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", rec.len())));
        }
        let t: Timestep = rec[0]
            .parse()
            .map_err(|_| parse_err(format!("bad timestep '{}'", &rec[0])))?;
        let key = &rec[1];
        if key.is_empty() {
            return Err(parse_err(format!("empty {}", header[1])));
        }
        let value: f64 = rec[2]
            .parse()
            .map_err(|_| parse_err(format!("bad {} '{}'", header[2], &rec[2])))?;
        if !value_ok(value) {
            return Err(parse_err(format!("{what} (got '{}')", &rec[2])));
        }
        if !seen.insert((t, key.to_owned())) {
            return Err(ArbError::Duplicate {
                line,
                timestep: t,
                key: key.to_owned(),
            });
        }
        let steps = out.entry(key.to_owned()).or_default();
        if let Some((last, _)) = steps.last() {
            if *last >= t {
                return Err(parse_err(format!(
                    "timesteps for '{key}' must increase (t={t} after t={last})"
                )));
            }
        }
        steps.push((t, value));
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> ArbError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    ArbError::Parse {
        line,
        message: e.to_string(),
    }
}

fn write_long_csv<W: Write>(
    mut out: W,
    header: [&str; 3],
    series: &[(&str, &[(Timestep, f64)])],
) -> Result<(), ArbError> {
    let mut rows: Vec<(Timestep, &str, f64)> = series
        .iter()
        .flat_map(|(key, steps)| steps.iter().map(move |(t, v)| (*t, *key, *v)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));

    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header).map_err(csv_io)?;
    for (t, key, v) in rows {
        w.write_record([t.to_string(), key.to_owned(), v.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ArbError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ArbError::Io(io),
        other => ArbError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Reads a price CSV into one series per region, ordered by region id.
pub fn load_prices<R: Read>(reader: R) -> Result<Vec<PriceSeries>, ArbError> {
    read_long_csv(reader, PRICE_HEADER, f64::is_finite, "price must be finite")?
        .into_iter()
        .map(|(region, steps)| PriceSeries::new(region, steps))
        .collect()
}

pub fn load_prices_file(path: &Path) -> Result<Vec<PriceSeries>, ArbError> {
    load_prices(fs::File::open(path)?)
}

/// Rows sorted by timestep, then region id.
pub fn write_prices<W: Write>(series: &[PriceSeries], out: W) -> Result<(), ArbError> {
    let rows: Vec<_> = series.iter().map(|s| (s.region_id(), s.steps())).collect();
    write_long_csv(out, PRICE_HEADER, &rows)
}

/// Reads per-link dynamic capacity limits keyed by link id.
pub fn load_capacities<R: Read>(reader: R) -> Result<BTreeMap<String, CapacityProfile>, ArbError> {
    read_long_csv(
        reader,
        CAPACITY_HEADER,
        |x| x.is_finite() && x >= 0.0,
        "capacity must be finite and non-negative",
    )?
    .into_iter()
    .map(|(link, steps)| Ok((link.clone(), CapacityProfile::new(link, steps)?)))
    .collect()
}

pub fn write_capacities<W: Write>(profiles: &[CapacityProfile], out: W) -> Result<(), ArbError> {
    let rows: Vec<_> = profiles
        .iter()
        .map(|p| (p.interconnector_id(), p.steps()))
        .collect();
    write_long_csv(out, CAPACITY_HEADER, &rows)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prices: Option<String>,
    #[serde(default)]
    regions: Vec<RegionEntry>,
    #[serde(default)]
    links: Vec<LinkEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    id: String,
    from: String,
    to: String,
    capacity_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loss_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loss_rate_per_100km: Option<f64>,
}

impl LinkEntry {
    fn resolve_loss(&self) -> Result<f64, ArbError> {
        let derived = match (self.length_km, self.loss_rate_per_100km) {
            (Some(len), Some(rate)) => Some(loss_from_length(len, rate).map_err(|e| match e {
                ArbError::InvalidLoss(_) => e,
                e => ArbError::Config(format!("link {}: {e}", self.id)),
            })?),
            (None, Some(_)) => {
                return Err(ArbError::Config(format!(
                    "link {}: loss_rate_per_100km given without length_km",
                    self.id
                )))
            }
            _ => None,
        };
        match (self.loss_fraction, derived) {
            (Some(r), Some(d)) if (r - d).abs() > LOSS_AGREEMENT_TOL => {
                Err(ArbError::Config(format!(
                    "link {}: loss_fraction {r} conflicts with length-derived loss {d}",
                    self.id
                )))
            }
            (Some(r), _) => Ok(r),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ArbError::Config(format!(
                "link {}: needs loss_fraction or length_km with loss_rate_per_100km",
                self.id
            ))),
        }
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> ArbError {
    let line = e.span().map_or(0, |s| {
        text[..s.start.min(text.len())].matches('\n').count() as u64 + 1
    });
    ArbError::Parse {
        line,
        message: e.message().to_owned(),
    }
}

/// Parses a network file. Returns the network (without prices) and the
/// price-file reference, if any.
pub fn parse_network(text: &str) -> Result<(Network, Option<String>), ArbError> {
    let file: NetworkFile = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let regions = file
        .regions
        .into_iter()
        .map(|r| {
            let name = r.name.unwrap_or_else(|| r.id.clone());
            Region { id: r.id, name }
        })
        .collect();
    let interconnectors = file
        .links
        .iter()
        .map(|l| {
            Ok(Interconnector {
                id: l.id.clone(),
                endpoint_a: l.from.clone(),
                endpoint_b: l.to.clone(),
                capacity_mw: l.capacity_mw,
                loss_fraction: l.resolve_loss()?,
                length_km: l.length_km,
            })
        })
        .collect::<Result<Vec<_>, ArbError>>()?;
    let network = Network::new(regions, interconnectors);
    let report = validate_topology(&network);
    if !report.is_empty() {
        return Err(ArbError::Validation(report));
    }
    Ok((network, file.prices))
}

/// Loads a network from a reader. Price references are not followed.
pub fn load_network<R: Read>(mut reader: R) -> Result<Network, ArbError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_network(&text).map(|(n, _)| n)
}

/// Loads a network file and attaches the price file it references, if any.
pub fn load_network_file(path: &Path) -> Result<Network, ArbError> {
    let text = fs::read_to_string(path)?;
    let (network, prices) = parse_network(&text)?;
    match prices {
        None => Ok(network),
        Some(rel) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let series = load_prices_file(&base.join(rel))?;
            attach_prices(network, series)
        }
    }
}

/// Attaches price series and runs the full validation.
pub fn attach_prices(network: Network, series: Vec<PriceSeries>) -> Result<Network, ArbError> {
    let network = network.with_prices(series);
    let report = validate_network(&network);
    if report.is_empty() {
        Ok(network)
    } else {
        Err(ArbError::Validation(report))
    }
}

/// Serialises the network topology. Losses are written as `loss_fraction`.
pub fn write_network(network: &Network, prices_ref: Option<&str>) -> Result<String, ArbError> {
    let file = NetworkFile {
        prices: prices_ref.map(str::to_owned),
        regions: network
            .regions
            .iter()
            .map(|r| RegionEntry {
                id: r.id.clone(),
                name: Some(r.name.clone()),
            })
            .collect(),
        links: network
            .interconnectors
            .iter()
            .map(|l| LinkEntry {
                id: l.id.clone(),
                from: l.endpoint_a.clone(),
                to: l.endpoint_b.clone(),
                capacity_mw: l.capacity_mw,
                loss_fraction: Some(l.loss_fraction),
                length_km: l.length_km,
                loss_rate_per_100km: None,
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| ArbError::Config(e.to_string()))
}

/// Where a recorded figure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Printed in the published case study.
    Published,
    /// Computed by an independent oracle.
    Derived,
}

/// One recorded figure of the case-study ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedValue {
    /// Link id, or `total` / `annual` for aggregates.
    pub item: String,
    pub provenance: Provenance,
    pub value_eur: f64,
    /// Set when the figure is a lower bound rather than a point value.
    #[serde(default)]
    pub lower_bound: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectedFile {
    expected: Vec<ExpectedValue>,
}

/// The Irish interconnector case study as shipped in `data/ireland`.
#[derive(Debug, Clone)]
pub struct CaseStudyBundle {
    pub network: Network,
    pub expected: Vec<ExpectedValue>,
}

impl CaseStudyBundle {
    pub fn expected(&self, item: &str, provenance: Provenance) -> Option<&ExpectedValue> {
        self.expected
            .iter()
            .find(|e| e.item == item && e.provenance == provenance)
    }
}

/// Bundled data directory, overridable through [`DATA_DIR_ENV`].
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"))
}

pub fn case_study_dir() -> PathBuf {
    data_dir().join("ireland")
}

pub fn load_case_study(dir: &Path) -> Result<CaseStudyBundle, ArbError> {
    let network = load_network_file(&dir.join("network.toml"))?;
    let text = fs::read_to_string(dir.join("expected.toml"))?;
    let file: ExpectedFile = toml::from_str(&text).map_err(|e| toml_error(&text, e))?;
    Ok(CaseStudyBundle {
        network,
        expected: file.expected,
    })
}
