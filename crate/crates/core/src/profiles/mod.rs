//! Input profiles: uniformly sampled time series, synthetic resort load,
//! synthetic irradiance, and irradiance-to-PV conversion.
//!
//! All generators are pure functions of their spec. Randomness comes from a
//! ChaCha8 stream (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`), so a
//! given seed reproduces the same series on every platform and run.

mod csvio;
mod irradiance;
mod load;
mod pv;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csvio::{read_irradiance_csv, read_series_csv, write_series_csv, TIMESTAMP_FORMAT};
pub use irradiance::{clear_sky_ghi, synth_irradiance, IrradianceSpec};
pub use load::{synth_load, LoadSpec, DEFAULT_DAILY_SHAPE, DEFAULT_SEASONAL_SHAPE};
pub use pv::{degradation_factor, pv_power, PvPlantModel};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid data at sample {index}: {reason}")]
    InvalidData { index: usize, reason: String },
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "kW")]
    Kw,
    #[serde(rename = "W/m²")]
    WattPerSquareMetre,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::Kw => "kW",
            Unit::WattPerSquareMetre => "W/m²",
            Unit::Dimensionless => "dimensionless",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Unit> {
        match tag {
            "kW" => Some(Unit::Kw),
            "W/m²" | "W/m2" => Some(Unit::WattPerSquareMetre),
            "dimensionless" | "-" => Some(Unit::Dimensionless),
            _ => None,
        }
    }
}

/// Uniformly sampled profile; sample `i` covers `[start + i*step, start + (i+1)*step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: NaiveDateTime,
    step_minutes: u32,
    unit: Unit,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: NaiveDateTime, step_minutes: u32, unit: Unit, values: Vec<f64>) -> Result<Self, ProfileError> {
        if step_minutes == 0 {
            return Err(ProfileError::InvalidArgument("step must be positive".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::InvalidData { index, reason: "sample is not finite".into() });
        }
        Ok(Self { start, step_minutes, unit, values })
    }

    /// Constant series, mostly for tests and examples.
    pub fn constant(start: NaiveDateTime, step_minutes: u32, unit: Unit, value: f64, len: usize) -> Result<Self, ProfileError> {
        Self::new(start, step_minutes, unit, vec![value; len])
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn step_hours(&self) -> f64 {
        self.step_minutes as f64 / 60.0
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::minutes(self.step_minutes as i64 * i as i64)
    }

    pub fn horizon_hours(&self) -> f64 {
        self.len() as f64 * self.step_hours()
    }

    /// Same start, step and length.
    pub fn is_aligned_with(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.step_minutes == other.step_minutes && self.len() == other.len()
    }

    pub fn map(&self, unit: Unit, f: impl Fn(usize, f64) -> f64) -> Result<TimeSeries, ProfileError> {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        TimeSeries::new(self.start, self.step_minutes, unit, values)
    }

    /// Energy of a power series in kWh (left-rectangle rule).
    pub fn energy_kwh(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step_hours()
    }
}

/// Number of samples covering `horizon_minutes`, which must be a multiple of `step_minutes`.
pub(crate) fn sample_count(horizon_minutes: u64, step_minutes: u32) -> Result<usize, ProfileError> {
    if step_minutes == 0 || horizon_minutes == 0 {
        return Err(ProfileError::InvalidArgument("horizon and step must be positive".into()));
    }
    if horizon_minutes % step_minutes as u64 != 0 {
        return Err(ProfileError::InvalidArgument(format!(
            "horizon of {horizon_minutes} min is not a multiple of the {step_minutes} min step"
        )));
    }
    Ok((horizon_minutes / step_minutes as u64) as usize)
}
