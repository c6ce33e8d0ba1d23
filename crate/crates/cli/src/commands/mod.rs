mod bounds;
mod mmr;
mod params;
mod simulate;

use std::path::Path;

use lightsync::bounds::{parse_ratio, to_f64, BoundsError, SecurityParams};
use lightsync::simnet::{PopulationConfig, SimConfig, SimError};
use num_rational::BigRational;
use serde::Deserialize;

use crate::args::{Cli, Command};
use crate::report::pretty;
use crate::{config_err, CliError};

pub fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let value = match &cli.command {
        Command::Simulate(a) => simulate::run(a)?,
        Command::Params(a) => params::run(a)?,
        Command::Bounds(a) => bounds::run(a)?,
        Command::Mmr(a) => mmr::run(a)?,
    };
    Ok(if cli.pretty {
        pretty(&value)
    } else {
        let mut s = serde_json::to_string(&value).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        s
    })
}

/// Contents of a `--config` file. Every section is optional and every
/// field inside a section falls back to its default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConfigFile {
    pub population: Option<PopulationConfig>,
    pub sim: Option<SimConfig>,
    pub security: Option<SecurityParams>,
    /// Whether the file set `sim.seed` explicitly.
    #[serde(skip)]
    pub sim_seed_set: bool,
}

pub(crate) fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| config_err(format!("bad config {}: {e}", path.display()));
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    let seed_set = raw.pointer("/sim/seed").is_some();
    let mut cfg: ConfigFile = serde_json::from_value(raw).map_err(bad)?;
    cfg.sim_seed_set = seed_set;
    Ok(cfg)
}

/// Epsilon in `2^-k` or decimal form, strictly inside (0, 1).
pub(crate) fn parse_epsilon(s: &str) -> Result<f64, CliError> {
    let v = parse_ratio(s)
        .map(|r| to_f64(&r))
        .ok_or_else(|| config_err(format!("cannot parse epsilon {s:?}")))?;
    if !(v > 0.0 && v < 1.0) {
        return Err(config_err(format!("epsilon must lie in (0, 1), got {s}")));
    }
    Ok(v)
}

pub(crate) fn parse_fraction(s: &str) -> Result<BigRational, CliError> {
    parse_ratio(s).ok_or_else(|| config_err(format!("cannot parse fraction {s:?}")))
}

pub(crate) fn from_bounds(e: BoundsError) -> CliError {
    config_err(e)
}

pub(crate) fn from_sim(e: SimError) -> CliError {
    match e {
        SimError::InvalidConfig(_) | SimError::GrindBudget { .. } => config_err(e),
        other => CliError::Internal(other.to_string()),
    }
}

pub(crate) fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}
