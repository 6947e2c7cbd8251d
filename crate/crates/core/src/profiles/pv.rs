use serde::{Deserialize, Serialize};

use super::{ProfileError, TimeSeries, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvPlantModel {
    pub eta_panel: f64,
    pub eta_inverter: f64,
    /// Fractional output loss per year of operation.
    pub degradation_per_year: f64,
    /// Irradiance at standard test conditions, W/m².
    pub i_std: f64,
}

impl Default for PvPlantModel {
    fn default() -> Self {
        Self { eta_panel: 0.9, eta_inverter: 0.97, degradation_per_year: 0.005, i_std: 1000.0 }
    }
}

impl PvPlantModel {
    pub fn validate(&self) -> Result<(), String> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.eta_panel) || !in_unit(self.eta_inverter) {
            return Err(format!("eta_panel ({}) and eta_inverter ({}) must lie in (0, 1]", self.eta_panel, self.eta_inverter));
        }
        if !(self.degradation_per_year >= 0.0 && self.degradation_per_year < 1.0) {
            return Err(format!("degradation_per_year must lie in [0, 1), got {}", self.degradation_per_year));
        }
        if !(self.i_std > 0.0 && self.i_std.is_finite()) {
            return Err(format!("i_std must be positive, got {}", self.i_std));
        }
        Ok(())
    }

    /// Output per kW of rating at irradiance `ghi` in year `years` of operation.
    pub fn per_unit(&self, ghi: f64, years: u32) -> f64 {
        ghi * self.eta_panel * self.eta_inverter * degradation_factor(self, years) / self.i_std
    }
}

/// `(1 - d)^years`, constant within each year of operation.
pub fn degradation_factor(model: &PvPlantModel, years: u32) -> f64 {
    (1.0 - model.degradation_per_year).powi(years as i32)
}

/// PV production in kW for an irradiance series, scaled to `rated_kw`.
///
/// Years of operation are counted in whole 365-day periods from the start
/// of the irradiance series.
pub fn pv_power(irradiance: &TimeSeries, model: &PvPlantModel, rated_kw: f64) -> Result<TimeSeries, ProfileError> {
    if irradiance.unit() != Unit::WattPerSquareMetre {
        return Err(ProfileError::InvalidArgument(format!("irradiance must be in W/m², got {}", irradiance.unit().tag())));
    }
    if !(rated_kw >= 0.0 && rated_kw.is_finite()) {
        return Err(ProfileError::InvalidArgument(format!("rated power must be non-negative, got {rated_kw}")));
    }
    model.validate().map_err(ProfileError::InvalidArgument)?;
    if let Some(index) = irradiance.values().iter().position(|&g| g < 0.0) {
        return Err(ProfileError::InvalidData { index, reason: format!("negative irradiance {}", irradiance.values()[index]) });
    }
    let per_year = (365 * 24 * 60) / irradiance.step_minutes() as usize;
    irradiance.map(Unit::Kw, |i, g| rated_kw * model.per_unit(g, (i / per_year.max(1)) as u32))
}
