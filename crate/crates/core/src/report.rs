//! Report writers for schedules, portfolios and wheeling results.
//!
//! CSV outputs print floats with Rust's shortest round-trip formatting, so
//! identical inputs always produce identical bytes.

use std::io::Write;

use serde::Serialize;

use crate::data_io::{CaseStudyBundle, ExpectedValue, Provenance};
use crate::error::ArbError;
use crate::market_model::Timestep;
use crate::scheduler::{PortfolioResult, Schedule};
use crate::wheeling::WheelingResult;

pub const SCHEDULE_HEADER: [&str; 6] = [
    "timestep",
    "link_id",
    "direction",
    "quantity_mw",
    "lambda_eur_mwh",
    "profit_eur",
];

pub const WHEEL_HEADER: [&str; 7] = [
    "timestep",
    "scenario",
    "feasible",
    "gate_a_eur_mwh",
    "gate_b_eur_mwh",
    "quantity_mw",
    "profit_eur",
];

pub const PLOT_HEADER: [&str; 5] = [
    "link_id",
    "timestep",
    "lambda_eur_mwh",
    "quantity_mw",
    "cumulative_profit_eur",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(format!("unknown format '{other}' (csv|structured)")),
        }
    }
}

/// Anything that can be written as a report.
pub enum ReportInput<'a> {
    Schedule(&'a Schedule),
    Portfolio(&'a PortfolioResult),
    Wheel(&'a [(Timestep, WheelingResult)]),
    CaseStudy(&'a CaseStudyReport),
}

pub fn write_report<W: Write>(
    input: ReportInput<'_>,
    format: Format,
    out: W,
) -> Result<(), ArbError> {
    match format {
        Format::Csv => match input {
            ReportInput::Schedule(s) => write_schedules_csv(std::slice::from_ref(s), out),
            ReportInput::Portfolio(p) => write_schedules_csv(&p.schedules, out),
            ReportInput::CaseStudy(c) => write_schedules_csv(&c.portfolio.schedules, out),
            ReportInput::Wheel(w) => write_wheel_csv(w, out),
        },
        Format::Structured => match input {
            ReportInput::Schedule(s) => write_json(&StructuredReport::schedule(s), out),
            ReportInput::Portfolio(p) => write_json(&StructuredReport::portfolio(p), out),
            ReportInput::CaseStudy(c) => write_json(&StructuredReport::case_study(c), out),
            ReportInput::Wheel(w) => write_json(&StructuredReport::wheel(w), out),
        },
    }
}

fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<(), ArbError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ArbError {
    ArbError::Io(std::io::Error::other(e.to_string()))
}

pub fn write_schedules_csv<W: Write>(schedules: &[Schedule], out: W) -> Result<(), ArbError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER).map_err(csv_io)?;
    for s in schedules {
        for d in &s.decisions {
            w.write_record([
                d.timestep.to_string(),
                s.interconnector_id.clone(),
                d.direction.to_string(),
                d.quantity_mw.to_string(),
                d.marginal_value.to_string(),
                d.profit.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_wheel_csv<W: Write>(
    results: &[(Timestep, WheelingResult)],
    out: W,
) -> Result<(), ArbError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WHEEL_HEADER).map_err(csv_io)?;
    for (t, r) in results {
        w.write_record([
            t.to_string(),
            r.scenario.as_str().to_owned(),
            r.feasible.to_string(),
            r.gate_values.0.to_string(),
            r.gate_values.1.to_string(),
            r.quantity_mw.to_string(),
            r.profit.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format plot data: λ_t, x_t and running profit per link.
pub fn write_plot_data<W: Write>(schedules: &[Schedule], out: W) -> Result<(), ArbError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER).map_err(csv_io)?;
    for s in schedules {
        let mut cumulative = 0.0;
        for d in &s.decisions {
            cumulative += d.profit;
            w.write_record([
                s.interconnector_id.clone(),
                d.timestep.to_string(),
                d.marginal_value.to_string(),
                d.quantity_mw.to_string(),
                cumulative.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StructuredReport<'a> {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedules: Option<&'a [Schedule]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grand_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annualized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wheeling: Option<Vec<WheelRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a [ComparisonRow]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected: Option<&'a [ExpectedValue]>,
}

#[derive(Serialize)]
struct WheelRow {
    timestep: Timestep,
    #[serde(flatten)]
    result: WheelingResult,
}

impl<'a> StructuredReport<'a> {
    fn empty(kind: &'static str) -> Self {
        Self {
            kind,
            schedules: None,
            grand_total: None,
            annualized: None,
            wheeling: None,
            comparison: None,
            expected: None,
        }
    }

    fn schedule(s: &'a Schedule) -> Self {
        Self {
            schedules: Some(std::slice::from_ref(s)),
            grand_total: Some(s.total_profit),
            ..Self::empty("schedule")
        }
    }

    fn portfolio(p: &'a PortfolioResult) -> Self {
        Self {
            schedules: Some(&p.schedules),
            grand_total: Some(p.grand_total),
            annualized: Some(p.annualized),
            ..Self::empty("portfolio")
        }
    }

    fn wheel(w: &'a [(Timestep, WheelingResult)]) -> Self {
        Self {
            wheeling: Some(
                w.iter()
                    .map(|(t, r)| WheelRow {
                        timestep: *t,
                        result: *r,
                    })
                    .collect(),
            ),
            ..Self::empty("wheeling")
        }
    }

    fn case_study(c: &'a CaseStudyReport) -> Self {
        Self {
            comparison: Some(&c.rows),
            expected: Some(&c.expected),
            ..Self::portfolio(&c.portfolio)
        }
        .with_kind("case-study")
    }

    fn with_kind(mut self, kind: &'static str) -> Self {
        self.kind = kind;
        self
    }
}

/// Computed-versus-published comparison for one line of the case study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub item: String,
    pub computed_eur: f64,
    pub published_eur: Option<f64>,
    /// Published figure is a lower bound (`computed` must exceed it).
    pub lower_bound: bool,
    pub derived_eur: Option<f64>,
    pub status: MatchStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Match,
    Delta,
    Unpublished,
}

/// Half a cent: figures closer than this are reported as matching.
pub const CENT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct CaseStudyReport {
    pub portfolio: PortfolioResult,
    pub rows: Vec<ComparisonRow>,
    pub expected: Vec<ExpectedValue>,
}

impl CaseStudyReport {
    /// Lines up computed figures with the bundle's ledger. No arithmetic
    /// beyond the portfolio's own totals happens here.
    pub fn new(bundle: &CaseStudyBundle, portfolio: PortfolioResult) -> Self {
        let mut items: Vec<(String, f64)> = portfolio
            .schedules
            .iter()
            .map(|s| (s.interconnector_id.clone(), s.total_profit))
            .collect();
        items.push(("total".into(), portfolio.grand_total));
        items.push(("annual".into(), portfolio.annualized));

        let rows = items
            .into_iter()
            .map(|(item, computed)| {
                let published = bundle.expected(&item, Provenance::Published);
                let derived = bundle.expected(&item, Provenance::Derived);
                let lower_bound = published.is_some_and(|p| p.lower_bound);
                let status = match published {
                    None => MatchStatus::Unpublished,
                    Some(p) if p.lower_bound && computed > p.value_eur => MatchStatus::Match,
                    Some(p)
                        if !p.lower_bound && (computed - p.value_eur).abs() < CENT_TOLERANCE =>
                    {
                        MatchStatus::Match
                    }
                    Some(_) => MatchStatus::Delta,
                };
                let note = published.and_then(|p| p.note.clone());
                ComparisonRow {
                    item,
                    computed_eur: computed,
                    published_eur: published.map(|p| p.value_eur),
                    lower_bound,
                    derived_eur: derived.map(|d| d.value_eur),
                    status,
                    note,
                }
            })
            .collect();
        Self {
            portfolio,
            rows,
            expected: bundle.expected.clone(),
        }
    }

    pub fn row(&self, item: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.item == item)
    }

    /// Plain-text table for terminals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>16} {:>16} {:>12}  {}\n",
            "item", "computed_eur", "published_eur", "delta_eur", "status"
        ));
        for r in &self.rows {
            let published = match r.published_eur {
                Some(p) if r.lower_bound => format!("> {p:.0}"),
                Some(p) => format!("{p:.2}"),
                None => "-".into(),
            };
            let delta = match r.published_eur {
                Some(p) if !r.lower_bound => format!("{:+.2}", r.computed_eur - p),
                _ => "-".into(),
            };
            let status = match r.status {
                MatchStatus::Match => "match",
                MatchStatus::Delta => "DELTA",
                MatchStatus::Unpublished => "unpublished",
            };
            out.push_str(&format!(
                "{:<10} {:>16.2} {:>16} {:>12}  {}",
                r.item, r.computed_eur, published, delta, status
            ));
            if let Some(note) = &r.note {
                out.push_str(&format!("  ({note})"));
            }
            out.push('\n');
        }
        out
    }
}
