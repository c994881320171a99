//! `hvdc-arb` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 parse, 4 validation, 5 resolution, 6 I/O.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data_io::{
    attach_prices, case_study_dir, load_capacities, load_case_study, load_network_file,
    load_prices_file, parse_network,
};
use crate::error::ArbError;
use crate::market_model::{CapacityProfile, Network, Timestep};
use crate::pairwise::{optimal_flow, BiasPolicy};
use crate::report::{
    write_plot_data, write_report, CaseStudyReport, Format, MatchStatus, ReportInput,
};
use crate::scheduler::{schedule_portfolio, PortfolioResult};
use crate::wheeling::{evaluate_wheel, ChainPrices, WheelingChain, WheelingResult};

pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_RESOLUTION: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "hvdc-arb",
    version,
    about = "Price-spread dispatch of lossy HVDC interconnectors"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Network file (TOML). Defaults to the bundled Irish case study, found
    /// under $HVDC_ARB_DATA_DIR when that is set.
    #[arg(long, global = true)]
    pub network: Option<PathBuf>,

    /// Price CSV; overrides the price file referenced by the network.
    #[arg(long, global = true)]
    pub prices: Option<PathBuf>,

    /// Dynamic capacity CSV (timestep,link_id,x_max_mw). Links without a
    /// profile run at nameplate capacity.
    #[arg(long, global = true)]
    pub capacity: Option<PathBuf>,

    /// Minimum margin in EUR/MWh a trade must clear before a link is
    /// dispatched. Dispatch is bang-bang (idle or full capacity), so with a
    /// zero bias the link flips on any positive margin, however small.
    #[arg(long, global = true, default_value_t = 0.0, value_name = "EUR_PER_MWH")]
    pub bias: f64,

    /// Length of one timestep in hours.
    #[arg(
        long = "duration-hours",
        global = true,
        default_value_t = 1.0,
        value_name = "H"
    )]
    pub duration_hours: f64,

    /// First timestep of the horizon (inclusive).
    #[arg(long, global = true)]
    pub from: Option<Timestep>,

    /// Last timestep of the horizon (inclusive).
    #[arg(long, global = true)]
    pub to: Option<Timestep>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report format: csv or structured (JSON).
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal flow of one link at one timestep.
    Evaluate {
        #[arg(long)]
        link: String,
        #[arg(long)]
        timestep: Timestep,
    },
    /// Schedule every link (or one) over the horizon.
    Schedule {
        #[arg(long)]
        link: Option<String>,
    },
    /// Three-area wheeling through a transit area.
    Wheel {
        /// Areas in path order: AREA1,AREA2,AREA3.
        #[arg(long, value_delimiter = ',', required = true)]
        areas: Vec<String>,
        /// Links in path order: LINK12,LINK23.
        #[arg(long, value_delimiter = ',', required = true)]
        links: Vec<String>,
        /// Transmission loss fraction inside the transit area.
        #[arg(long = "transit-loss", default_value_t = 0.0)]
        transit_loss: f64,
        #[arg(long)]
        timestep: Timestep,
        /// Quantity injected at the origin, MW.
        #[arg(long)]
        quantity: f64,
    },
    /// Reproduce the bundled Irish interconnector case study.
    #[command(name = "case-ireland")]
    CaseIreland,
    /// Long-format CSV of λ_t, x_t and cumulative profit per link.
    #[command(name = "plot-data")]
    PlotData,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &ArbError) -> i32 {
    match err.root() {
        ArbError::Parse { .. } | ArbError::Duplicate { .. } => EXIT_PARSE,
        ArbError::Domain(_)
        | ArbError::InvalidLoss(_)
        | ArbError::Invalid(_)
        | ArbError::Validation(_)
        | ArbError::Config(_) => EXIT_VALIDATION,
        ArbError::Resolution(_) | ArbError::Alignment { .. } | ArbError::Capacity { .. } => {
            EXIT_RESOLUTION
        }
        ArbError::Io(_) | ArbError::Link { .. } => EXIT_IO,
    }
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), ArbError> {
    let cfg = &cli.config;
    let bias = BiasPolicy::new(cfg.bias)?;
    if !(cfg.duration_hours.is_finite() && cfg.duration_hours > 0.0) {
        return Err(ArbError::Domain(format!(
            "--duration-hours must be > 0 (got {})",
            cfg.duration_hours
        )));
    }

    match &cli.command {
        Command::Evaluate { link, timestep } => cmd_evaluate(cfg, bias, link, *timestep, stdout),
        Command::Schedule { link } => cmd_schedule(cfg, bias, link.as_deref(), stdout),
        Command::Wheel {
            areas,
            links,
            transit_loss,
            timestep,
            quantity,
        } => cmd_wheel(
            cfg,
            areas,
            links,
            *transit_loss,
            *timestep,
            *quantity,
            stdout,
        ),
        Command::CaseIreland => cmd_case_ireland(cfg, bias, stdout),
        Command::PlotData => cmd_plotdata(cfg, bias, stdout),
    }
}

fn network_path(cfg: &RunConfig) -> PathBuf {
    cfg.network
        .clone()
        .unwrap_or_else(|| case_study_dir().join("network.toml"))
}

fn load_inputs(cfg: &RunConfig) -> Result<(Network, BTreeMap<String, CapacityProfile>), ArbError> {
    let path = network_path(cfg);
    let network = match &cfg.prices {
        Some(prices) => {
            let (network, _) = parse_network(&fs::read_to_string(&path)?)?;
            attach_prices(network, load_prices_file(prices)?)?
        }
        None => load_network_file(&path)?,
    };
    let network = network.window(cfg.from, cfg.to);

    let capacities = match &cfg.capacity {
        Some(path) => load_capacities(fs::File::open(path)?)?
            .into_iter()
            .map(|(k, v)| (k, v.window(cfg.from, cfg.to)))
            .collect(),
        None => BTreeMap::new(),
    };
    for id in capacities.keys() {
        if network.interconnector(id).is_none() {
            return Err(ArbError::Resolution(format!(
                "capacity profile for unknown link '{id}'"
            )));
        }
    }
    Ok((network, capacities))
}

fn with_output(
    cfg: &RunConfig,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<(), ArbError>,
) -> Result<(), ArbError> {
    match &cfg.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(fs::File::create(path)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    bias: BiasPolicy,
    link_id: &str,
    t: Timestep,
    stdout: &mut dyn Write,
) -> Result<(), ArbError> {
    let (network, capacities) = load_inputs(cfg)?;
    let link = network
        .interconnector(link_id)
        .ok_or_else(|| ArbError::Resolution(format!("unknown link '{link_id}'")))?;
    let price = |region: &str| {
        network
            .prices(region)
            .and_then(|s| s.price_at(t))
            .ok_or_else(|| ArbError::Resolution(format!("no price for '{region}' at timestep {t}")))
    };
    let (p_a, p_b) = (price(&link.endpoint_a)?, price(&link.endpoint_b)?);
    let x_max = match capacities.get(link_id) {
        Some(profile) => profile.x_max_at(t).ok_or_else(|| {
            ArbError::Resolution(format!("no capacity for '{link_id}' at timestep {t}"))
        })?,
        None => link.capacity_mw,
    };
    let d = optimal_flow(
        p_a,
        p_b,
        link.loss_fraction,
        x_max,
        bias,
        cfg.duration_hours,
        t,
    )?;
    let toward = match d.direction {
        crate::pairwise::Direction::AToB => {
            format!(" ({} -> {})", link.endpoint_a, link.endpoint_b)
        }
        crate::pairwise::Direction::BToA => {
            format!(" ({} -> {})", link.endpoint_b, link.endpoint_a)
        }
        crate::pairwise::Direction::Idle => String::new(),
    };
    writeln!(stdout, "link:        {}", link.id)?;
    writeln!(stdout, "timestep:    {t}")?;
    writeln!(stdout, "direction:   {}{toward}", d.direction)?;
    writeln!(stdout, "quantity_mw: {}", d.quantity_mw)?;
    writeln!(stdout, "lambda:      {:.4} EUR/MWh", d.marginal_value)?;
    writeln!(stdout, "profit:      {:.2} EUR", d.profit)?;
    Ok(())
}

fn portfolio(
    cfg: &RunConfig,
    bias: BiasPolicy,
    only: Option<&str>,
) -> Result<(Network, PortfolioResult), ArbError> {
    let (mut network, capacities) = load_inputs(cfg)?;
    if let Some(id) = only {
        if network.interconnector(id).is_none() {
            return Err(ArbError::Resolution(format!("unknown link '{id}'")));
        }
        network.interconnectors.retain(|l| l.id == id);
    }
    let result = schedule_portfolio(&network, &capacities, bias, cfg.duration_hours)?;
    Ok((network, result))
}

pub fn cmd_schedule(
    cfg: &RunConfig,
    bias: BiasPolicy,
    only: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<(), ArbError> {
    let (_, result) = portfolio(cfg, bias, only)?;
    if cfg.out.is_some() {
        with_output(cfg, stdout, |w| {
            write_report(ReportInput::Portfolio(&result), cfg.format, w)
        })?;
    } else {
        write_report(ReportInput::Portfolio(&result), cfg.format, &mut *stdout)?;
    }
    writeln!(stdout, "grand_total_eur: {:.2}", result.grand_total)?;
    writeln!(stdout, "annualized_eur: {:.2}", result.annualized)?;

    // Footnote differences against a recorded ledger next to the network file.
    let dir = network_path(cfg).parent().map(Path::to_path_buf);
    if let Some(dir) = dir.filter(|d| d.join("expected.toml").exists()) {
        if let Ok(bundle) = load_case_study(&dir) {
            let report = CaseStudyReport::new(&bundle, result);
            // Aggregates are only comparable for a full-portfolio run.
            let covered = |item: &str| report.portfolio.schedule(item).is_some() || only.is_none();
            for row in report
                .rows
                .iter()
                .filter(|r| r.status == MatchStatus::Delta && covered(&r.item))
            {
                if let Some(published) = row.published_eur {
                    writeln!(
                        stdout,
                        "note: {} computed {:.2}, published {:.2} (delta {:+.2})",
                        row.item,
                        row.computed_eur,
                        published,
                        row.computed_eur - published
                    )?;
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_wheel(
    cfg: &RunConfig,
    areas: &[String],
    links: &[String],
    transit_loss: f64,
    t: Timestep,
    quantity: f64,
    stdout: &mut dyn Write,
) -> Result<(), ArbError> {
    if areas.len() != 3 || links.len() != 2 {
        return Err(ArbError::Resolution(format!(
            "wheeling chain needs 3 areas and 2 links (got {} and {})",
            areas.len(),
            links.len()
        )));
    }
    let (network, _) = load_inputs(cfg)?;
    let link = |id: &str| {
        network
            .interconnector(id)
            .cloned()
            .ok_or_else(|| ArbError::Resolution(format!("unknown link '{id}'")))
    };
    let chain = WheelingChain::new(
        [&areas[0], &areas[1], &areas[2]],
        link(&links[0])?,
        link(&links[1])?,
        transit_loss,
    )?;
    let price = |region: &str| {
        network
            .prices(region)
            .and_then(|s| s.price_at(t))
            .ok_or_else(|| ArbError::Resolution(format!("no price for '{region}' at timestep {t}")))
    };
    let prices = ChainPrices {
        p1: price(&chain.area1)?,
        p2: price(&chain.area2)?,
        p3: price(&chain.area3)?,
    };
    let (s123, s321) = evaluate_wheel(&chain, prices, quantity, cfg.duration_hours)?;

    let path = |r: &WheelingResult| match r.scenario {
        crate::wheeling::Scenario::S123 => {
            format!("{} -> {} -> {}", chain.area1, chain.area2, chain.area3)
        }
        crate::wheeling::Scenario::S321 => {
            format!("{} -> {} -> {}", chain.area3, chain.area2, chain.area1)
        }
    };
    for r in [&s123, &s321] {
        writeln!(
            stdout,
            "{} [{}]: gates ({:.4}, {:.4}) feasible={} quantity_mw={} profit={:.2} EUR",
            r.scenario.as_str(),
            path(r),
            r.gate_values.0,
            r.gate_values.1,
            r.feasible,
            r.quantity_mw,
            r.profit
        )?;
    }
    if cfg.out.is_some() {
        let rows = [(t, s123), (t, s321)];
        with_output(cfg, stdout, |w| {
            write_report(ReportInput::Wheel(&rows), cfg.format, w)
        })?;
    }
    Ok(())
}

pub fn case_ireland_report(cfg: &RunConfig, bias: BiasPolicy) -> Result<CaseStudyReport, ArbError> {
    let bundle = load_case_study(&case_study_dir())?;
    let result = schedule_portfolio(&bundle.network, &BTreeMap::new(), bias, cfg.duration_hours)?;
    Ok(CaseStudyReport::new(&bundle, result))
}

pub fn cmd_case_ireland(
    cfg: &RunConfig,
    bias: BiasPolicy,
    stdout: &mut dyn Write,
) -> Result<(), ArbError> {
    let report = case_ireland_report(cfg, bias)?;
    writeln!(
        stdout,
        "Irish interconnector case study, one {} h step",
        cfg.duration_hours
    )?;
    write!(stdout, "{}", report.render_table())?;
    if cfg.out.is_some() {
        with_output(cfg, stdout, |w| {
            write_report(ReportInput::CaseStudy(&report), cfg.format, w)
        })?;
    }
    Ok(())
}

pub fn cmd_plotdata(
    cfg: &RunConfig,
    bias: BiasPolicy,
    stdout: &mut dyn Write,
) -> Result<(), ArbError> {
    let (_, result) = portfolio(cfg, bias, None)?;
    with_output(cfg, stdout, |w| write_plot_data(&result.schedules, w))
}
