//! Price-spread dispatch of lossy HVDC interconnectors.
//!
//! * [`market_model`]: regions, price series, links, capacity profiles.
//! * [`pairwise`]: single-link, single-step arbitrage economics.
//! * [`scheduler`]: horizon scheduling under dynamic capacity and portfolios.
//! * [`wheeling`]: three-area transit through an intermediate market.
//! * [`data_io`] and [`report`]: file formats and the bundled case study.
//! * [`cli`]: the `hvdc-arb` command-line front end.

pub mod cli;
pub mod data_io;
pub mod error;
pub mod market_model;
pub mod pairwise;
pub mod report;
pub mod scheduler;
pub mod wheeling;

pub use error::ArbError;
pub use market_model::{CapacityProfile, Interconnector, Network, PriceSeries, Region, Timestep};
pub use pairwise::{BiasPolicy, Direction, FlowDecision};
pub use scheduler::{PortfolioResult, Schedule};
pub use wheeling::{ChainPrices, Scenario, WheelingChain, WheelingResult};
