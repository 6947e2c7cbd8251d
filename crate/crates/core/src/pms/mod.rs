//! Rule-based power management for a storage-formed island grid.
//!
//! The battery is the grid-forming unit and absorbs every mismatch; the
//! controller only commits diesel units and sets their output. Each control
//! interval it
//!
//! 1. derives the admissible charge/discharge powers from the state of charge
//!    ([`availability`]),
//! 2. computes the deficit the battery cannot cover ([`control_variable`]),
//! 3. climbs or descends the capability ladder of [`StateTable`] and
//!    dispatches the committed units ([`pms_step`]).
//!
//! Low deficits below the [`mcr_threshold`] are served by running one unit
//! at rating and banking the surplus, because fleet efficiency at such loads
//! is worse than cycling full-load energy through the battery.

mod fleet;
mod states;
mod step;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fleet::{
    dispatch_fleet, fleet_efficiency, mcr_threshold, roundtrip_efficiency, DieselFleet, DieselUnit, DIESEL_KWH_PER_LITRE,
    MAX_FLEET_UNITS,
};
pub use states::{PmsState, StateDef, StateMode, StateTable};
pub use step::{pms_step, DispatchCommand};

#[derive(Debug, Error, PartialEq)]
pub enum PmsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("power {p_kw} kW is outside the fleet range [0, {max_kw}] kW")]
    OutOfRange { p_kw: f64, max_kw: f64 },
    #[error("no efficiency crossing: {0}")]
    NoCrossing(String),
    #[error("cannot dispatch {p_req_kw} kW within the committed window [{lo_kw}, {hi_kw}] kW")]
    InfeasibleDispatch { p_req_kw: f64, lo_kw: f64, hi_kw: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmsConfig {
    /// Control interval, minutes.
    pub t_ctrl_min: f64,
    /// SOC margin `m` kept clear of both limits.
    pub soc_margin: f64,
    pub soc_lim: f64,
    /// Network losses as a share of load.
    pub k_loss: f64,
    pub cosphi_dg: f64,
    pub cosphi_pv: f64,
    /// Battery inverter voltage setpoint in p.u.; carried into reports only.
    pub v_set_bess: f64,
    /// Relative headroom a lower state must offer before stepping down.
    pub step_down_margin: f64,
}

impl Default for PmsConfig {
    fn default() -> Self {
        Self {
            t_ctrl_min: 5.0,
            soc_margin: 0.05,
            soc_lim: 0.20,
            k_loss: 0.026,
            cosphi_dg: 0.9,
            cosphi_pv: 1.0,
            v_set_bess: 1.025,
            step_down_margin: 0.10,
        }
    }
}

impl PmsConfig {
    pub fn validate(&self) -> Result<(), PmsError> {
        let bad = |msg: String| Err(PmsError::InvalidConfig(msg));
        if !(self.t_ctrl_min > 0.0 && self.t_ctrl_min.is_finite()) {
            return bad(format!("t_ctrl_min must be positive, got {}", self.t_ctrl_min));
        }
        if !(self.soc_margin >= 0.0 && self.soc_margin < 0.5) {
            return bad(format!("soc_margin must lie in [0, 0.5), got {}", self.soc_margin));
        }
        if !(self.soc_lim >= 0.0 && self.soc_lim < 1.0 - 2.0 * self.soc_margin) {
            return bad(format!("soc_lim must lie in [0, 1 - 2·soc_margin), got {}", self.soc_lim));
        }
        if !(self.k_loss >= 0.0 && self.k_loss < 0.2) {
            return bad(format!("k_loss must lie in [0, 0.2), got {}", self.k_loss));
        }
        for (name, v) in [("cosphi_dg", self.cosphi_dg), ("cosphi_pv", self.cosphi_pv)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.v_set_bess > 0.0) {
            return bad(format!("v_set_bess must be positive, got {}", self.v_set_bess));
        }
        if !(self.step_down_margin >= 0.0 && self.step_down_margin.is_finite()) {
            return bad(format!("step_down_margin must be non-negative, got {}", self.step_down_margin));
        }
        Ok(())
    }

    pub fn dt_hours(&self) -> f64 {
        self.t_ctrl_min / 60.0
    }
}

/// `(soc_lim + m, 1 - m)`.
pub fn soc_thresholds(cfg: &PmsConfig) -> (f64, f64) {
    (cfg.soc_lim + cfg.soc_margin, 1.0 - cfg.soc_margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BessState {
    /// State of charge, per unit of `energy_kwh`.
    pub soc: f64,
    /// SOC change over the previous control interval.
    pub delta_soc: f64,
    pub energy_kwh: f64,
    pub power_kw: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
}

impl BessState {
    pub fn new(soc: f64, energy_kwh: f64, power_kw: f64, eta_ch: f64, eta_dis: f64) -> Self {
        Self { soc, delta_soc: 0.0, energy_kwh, power_kw, eta_ch, eta_dis }
    }

    pub fn validate(&self) -> Result<(), PmsError> {
        if !(0.0..=1.0).contains(&self.soc) {
            return Err(PmsError::InvalidConfig(format!("soc must lie in [0, 1], got {}", self.soc)));
        }
        if !(self.energy_kwh >= 0.0 && self.power_kw >= 0.0) {
            return Err(PmsError::InvalidConfig("battery ratings must be non-negative".into()));
        }
        if !(self.eta_ch > 0.0 && self.eta_ch <= 1.0 && self.eta_dis > 0.0 && self.eta_dis <= 1.0) {
            return Err(PmsError::InvalidConfig("battery efficiencies must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Charge,
    Discharge,
}

/// Constant power that moves the SOC by the margin in one control interval.
///
/// The storage efficiency is `eta_ch` when charging and `1 / eta_dis` when
/// discharging, consistent with the SOC update.
pub fn derating_power(cfg: &PmsConfig, bess: &BessState, direction: Direction) -> f64 {
    let eta = match direction {
        Direction::Charge => bess.eta_ch,
        Direction::Discharge => 1.0 / bess.eta_dis,
    };
    cfg.soc_margin * bess.energy_kwh / (eta * cfg.dt_hours())
}

/// Largest admissible charging and discharging powers for the next interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityEnvelope {
    pub p_ch: f64,
    pub p_dis: f64,
}

/// Envelope sized so that one interval at full admissible power lands the
/// SOC exactly on 1 (charging) or on `soc_min` (discharging).
///
/// In the band `(soc_min, soc_min + m]` discharge stays blocked while the SOC
/// is rising, so a recharge that has just started is not interrupted.
pub fn availability(cfg: &PmsConfig, bess: &BessState) -> AvailabilityEnvelope {
    let dt = cfg.dt_hours();
    let (soc_min, _) = soc_thresholds(cfg);
    let e = bess.energy_kwh;
    let p_ch = bess.power_kw.min((1.0 - bess.soc).max(0.0) * e / (bess.eta_ch * dt));
    let headroom = (bess.soc - soc_min) * e * bess.eta_dis / dt;
    let p_dis = if bess.soc <= soc_min || (bess.soc <= soc_min + cfg.soc_margin && bess.delta_soc > 0.0) {
        0.0
    } else {
        bess.power_kw.min(headroom)
    };
    AvailabilityEnvelope { p_ch, p_dis }
}

/// Loss-inflated load minus PV minus admissible discharge; positive is a
/// deficit that diesel units must cover.
pub fn control_variable(p_load: f64, p_pv: f64, env: &AvailabilityEnvelope, cfg: &PmsConfig) -> f64 {
    p_load * (1.0 + cfg.k_loss) - p_pv - env.p_dis
}

/// Reactive power for reporting, `P·tan(acos(cosφ))`.
pub fn reactive_power(p_kw: f64, cosphi: f64) -> f64 {
    p_kw * (1.0 - cosphi * cosphi).max(0.0).sqrt() / cosphi
}
