use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{sample_count, ProfileError, TimeSeries, Unit};

/// Synthetic global horizontal irradiance: a clear-sky curve scaled by a
/// daily clearness index that follows a clipped AR(1) process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrradianceSpec {
    pub latitude_deg: f64,
    pub clearness_mean: f64,
    pub clearness_sigma: f64,
    /// Day-to-day autocorrelation of the clearness index.
    pub clearness_phi: f64,
    pub seed: u64,
    pub start: NaiveDateTime,
}

impl Default for IrradianceSpec {
    fn default() -> Self {
        Self {
            latitude_deg: 20.0,
            clearness_mean: 0.5,
            clearness_sigma: 0.15,
            clearness_phi: 0.6,
            seed: 2,
            start: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        }
    }
}

const CLEARNESS_RANGE: (f64, f64) = (0.1, 1.0);

impl IrradianceSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(format!("latitude_deg must lie in [-90, 90], got {}", self.latitude_deg));
        }
        if !(self.clearness_mean > 0.0 && self.clearness_mean <= 1.0) {
            return Err(format!("clearness_mean must lie in (0, 1], got {}", self.clearness_mean));
        }
        if !(self.clearness_sigma >= 0.0 && self.clearness_sigma.is_finite()) {
            return Err(format!("clearness_sigma must be non-negative, got {}", self.clearness_sigma));
        }
        if !(self.clearness_phi > -1.0 && self.clearness_phi < 1.0) {
            return Err(format!("clearness_phi must lie in (-1, 1), got {}", self.clearness_phi));
        }
        Ok(())
    }
}

/// Haurwitz clear-sky GHI in W/m² at local solar time `t`.
pub fn clear_sky_ghi(latitude_deg: f64, t: NaiveDateTime) -> f64 {
    let day = t.ordinal() as f64;
    let hour = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
    let decl = 23.45f64.to_radians() * (2.0 * std::f64::consts::PI * (284.0 + day) / 365.0).sin();
    let lat = latitude_deg.to_radians();
    let omega = (15.0 * (hour - 12.0)).to_radians();
    let cosz = lat.sin() * decl.sin() + lat.cos() * decl.cos() * omega.cos();
    if cosz <= 0.0 {
        0.0
    } else {
        1098.0 * cosz * (-0.057 / cosz).exp()
    }
}

/// Synthetic irradiance over `horizon_minutes`, each sample evaluated at the
/// midpoint of its interval.
pub fn synth_irradiance(spec: &IrradianceSpec, horizon_minutes: u64, step_minutes: u32) -> Result<TimeSeries, ProfileError> {
    spec.validate().map_err(ProfileError::InvalidArgument)?;
    let n = sample_count(horizon_minutes, step_minutes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let innovation = spec.clearness_sigma * (1.0 - spec.clearness_phi * spec.clearness_phi).sqrt();
    let mut anomaly = 0.0;
    let mut day = None;
    let mut clearness = spec.clearness_mean;
    let half = Duration::seconds(step_minutes as i64 * 30);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let t = spec.start + Duration::minutes(step_minutes as i64 * i as i64) + half;
        if day != Some(t.date()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            anomaly = if day.is_none() { spec.clearness_sigma * z } else { spec.clearness_phi * anomaly + innovation * z };
            clearness = (spec.clearness_mean + anomaly).clamp(CLEARNESS_RANGE.0, CLEARNESS_RANGE.1);
            day = Some(t.date());
        }
        values.push(clearness * clear_sky_ghi(spec.latitude_deg, t));
    }
    TimeSeries::new(spec.start, step_minutes, Unit::WattPerSquareMetre, values)
}
