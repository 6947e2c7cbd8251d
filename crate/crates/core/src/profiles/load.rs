use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{sample_count, ProfileError, TimeSeries, Unit};

/// Hourly per-unit shape of a resort day: night plateau, a morning
/// shoulder around 09:00 and a narrow evening peak at 19:00.
pub const DEFAULT_DAILY_SHAPE: [f64; 24] = [
    0.55, 0.53, 0.52, 0.52, 0.52, 0.54, 0.58, 0.62, 0.64, 0.65, 0.63, 0.62, //
    0.61, 0.61, 0.62, 0.64, 0.70, 0.82, 0.95, 1.00, 0.93, 0.80, 0.68, 0.60,
];

/// Monthly per-unit factors, January first; tourist season peaks in July/August.
pub const DEFAULT_SEASONAL_SHAPE: [f64; 12] = [0.90, 0.90, 0.92, 0.94, 0.96, 0.985, 1.00, 1.00, 0.975, 0.945, 0.915, 0.925];

/// Parameters of the synthetic load generator.
///
/// The deterministic envelope at time `t` is
/// `rated_peak_kw * daily(t) * seasonal(month(t))`, where `daily` interpolates
/// linearly between the hourly points. Each sample is then multiplied by
/// `exp(sigma * z)` with `z` a standard normal draw clipped to `[-3, 3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadSpec {
    pub rated_peak_kw: f64,
    pub daily_shape: Vec<f64>,
    pub seasonal_shape: Vec<f64>,
    pub fluctuation_sigma: f64,
    pub seed: u64,
    pub start: NaiveDateTime,
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self {
            rated_peak_kw: 4400.0,
            daily_shape: DEFAULT_DAILY_SHAPE.to_vec(),
            seasonal_shape: DEFAULT_SEASONAL_SHAPE.to_vec(),
            fluctuation_sigma: 0.03,
            seed: 1,
            start: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        }
    }
}

fn check_shape(name: &str, shape: &[f64], len: usize) -> Result<(), String> {
    if shape.len() != len {
        return Err(format!("{name} needs {len} coefficients, got {}", shape.len()));
    }
    if let Some(v) = shape.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(format!("{name} coefficient {v} is outside (0, 1]"));
    }
    if shape.iter().copied().fold(0.0, f64::max) != 1.0 {
        return Err(format!("{name} must reach exactly 1.0 so the envelope peaks at rated_peak_kw"));
    }
    Ok(())
}

impl LoadSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rated_peak_kw > 0.0 && self.rated_peak_kw.is_finite()) {
            return Err(format!("rated_peak_kw must be positive, got {}", self.rated_peak_kw));
        }
        check_shape("daily_shape", &self.daily_shape, 24)?;
        check_shape("seasonal_shape", &self.seasonal_shape, 12)?;
        if !(self.fluctuation_sigma >= 0.0 && self.fluctuation_sigma.is_finite()) {
            return Err(format!("fluctuation_sigma must be non-negative, got {}", self.fluctuation_sigma));
        }
        Ok(())
    }

    /// Noise-free load at `t` in kW.
    pub fn envelope_kw(&self, t: NaiveDateTime) -> f64 {
        let hours = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
        let h0 = hours.floor() as usize % 24;
        let h1 = (h0 + 1) % 24;
        let frac = hours - hours.floor();
        let daily = if frac == 0.0 { self.daily_shape[h0] } else { self.daily_shape[h0] * (1.0 - frac) + self.daily_shape[h1] * frac };
        let seasonal = self.seasonal_shape[t.month0() as usize];
        self.rated_peak_kw * daily * seasonal
    }
}

/// Synthetic load over `horizon_minutes` starting at `spec.start`.
pub fn synth_load(spec: &LoadSpec, horizon_minutes: u64, step_minutes: u32) -> Result<TimeSeries, ProfileError> {
    spec.validate().map_err(ProfileError::InvalidArgument)?;
    let n = sample_count(horizon_minutes, step_minutes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let step = chrono::Duration::minutes(step_minutes as i64);
    let mut t = spec.start;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let factor = if spec.fluctuation_sigma == 0.0 { 1.0 } else { (spec.fluctuation_sigma * z.clamp(-3.0, 3.0)).exp() };
        values.push(spec.envelope_kw(t) * factor);
        t += step;
    }
    TimeSeries::new(spec.start, step_minutes, Unit::Kw, values)
}
