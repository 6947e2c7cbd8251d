//! Files a run directory may hold. Every file is TOML or CSV and is read
//! back by `report`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::NaiveDateTime;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use microgrid::milp::SolveStatus;
use microgrid::pms::PmsConfig;
use microgrid::sim::SimSystem;
use microgrid::sizing::{RateOutcome, SizingDecision};

pub const DECISION: &str = "decision.toml";
pub const SIZING: &str = "sizing.toml";
pub const SCHEDULE: &str = "schedule.csv";
pub const REPORT: &str = "report.toml";
pub const PLANT: &str = "plant.toml";
pub const STEPS: &str = "steps.csv";
pub const OCCUPANCY: &str = "occupancy.csv";
pub const DAILY_SOC: &str = "daily_soc.csv";

/// Solver outcome of a `size` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingSummary {
    pub status: SolveStatus,
    pub gap: f64,
    pub start: NaiveDateTime,
    pub steps: usize,
    pub step_minutes: u32,
    /// Largest balance residual of the schedule, kW.
    pub max_balance_residual_kw: f64,
    pub schedule_valid: bool,
    pub coefficient_spread_before: f64,
    pub coefficient_spread_after: f64,
    pub per_rate: Vec<RateOutcome>,
    pub decision: SizingDecision,
}

/// Plant and controller settings of a `simulate` run, enough to recompute
/// the report from the step records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantFile {
    pub soc0: f64,
    pub system: SimSystem,
    pub pms: PmsConfig,
}

pub fn write_toml<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let text = toml::to_string(value).with_context(|| format!("cannot serialise {name}"))?;
    fs::write(dir.join(name), text).with_context(|| format!("cannot write {}", dir.join(name).display()))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid {}", path.display()))
}

pub fn create(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))
}

pub fn open(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))
}
