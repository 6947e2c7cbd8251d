//! Quasi-static operation over long horizons.
//!
//! Each step is one control interval: the controller picks a state and
//! diesel setpoints, the battery then closes the loss-inflated balance as
//! the grid-forming slack, clamped to its availability envelope. Surplus
//! beyond the envelope is curtailed from PV, then spilled; deficit beyond it
//! is shed. Stored energy is integrated with separate charge and discharge
//! efficiencies.

mod csvio;

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pms::{availability, pms_step, BessState, DieselFleet, PmsConfig, PmsError, PmsState, StateTable};
use crate::profiles::{TimeSeries, Unit};
use crate::sizing::{DeviceCatalog, SizingDecision, SizingError};

pub use csvio::{read_daily_soc_csv, read_occupancy_csv, read_records_csv, write_daily_soc_csv, write_occupancy_csv, write_records_csv};

/// Slack allowed on the unit interval before a stored-energy update is a fault.
pub const SOC_FAULT_TOL: f64 = 1e-9;

/// Initial state of charge when none is given.
pub const DEFAULT_SOC0: f64 = 0.5;

/// Rounding excess over the availability envelope that storage absorbs
/// instead of reporting it as shed or curtailment, kW.
const ENVELOPE_TOL_KW: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The availability envelope should make this unreachable.
    #[error("state of charge {soc} left [0, 1] at step {step} (battery power {p_bess_kw} kW)")]
    SocFault { step: usize, soc: f64, p_bess_kw: f64 },
    #[error(transparent)]
    Pms(#[from] PmsError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Installed plant as seen by the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSystem {
    pub fleet: DieselFleet,
    pub pv_kwp: f64,
    pub bess_energy_kwh: f64,
    pub bess_power_kw: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
}

impl SimSystem {
    pub fn from_decision(decision: &SizingDecision, catalog: &DeviceCatalog) -> Result<Self, SimError> {
        decision.validate()?;
        Ok(Self {
            fleet: decision.fleet(catalog)?,
            pv_kwp: decision.pv_rated_kwp,
            bess_energy_kwh: decision.bess_energy_kwh,
            bess_power_kw: decision.bess_power_kw,
            eta_ch: catalog.bess.eta_ch,
            eta_dis: catalog.bess.eta_dis,
        })
    }

    /// Controller ladder over this plant's fleet.
    pub fn state_table(&self) -> Result<StateTable, SimError> {
        Ok(StateTable::ladder(self.fleet.clone(), self.eta_ch, self.eta_dis)?)
    }

    fn validate(&self) -> Result<(), SimError> {
        self.fleet.validate()?;
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.pv_kwp) && ok(self.bess_energy_kwh) && ok(self.bess_power_kw)) {
            return Err(SimError::InvalidArgument("plant sizes must be finite and non-negative".into()));
        }
        BessState::new(0.5, self.bess_energy_kwh, self.bess_power_kw, self.eta_ch, self.eta_dis).validate()?;
        Ok(())
    }
}

/// One control interval; powers in kW, `p_bess` positive when discharging.
///
/// Balance: `p_load·(1 + k_loss) = Σ p_dg + p_pv − p_curt + p_bess + shed − spill`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub timestamp: NaiveDateTime,
    pub state: PmsState,
    pub p_load: f64,
    /// Available PV before curtailment.
    pub p_pv: f64,
    pub p_curt: f64,
    /// Per fleet unit.
    pub p_dg: Vec<f64>,
    pub p_bess: f64,
    /// State of charge at the end of the step.
    pub soc: f64,
    /// Litres burnt during the step.
    pub fuel_l: f64,
    pub shed: f64,
    /// Committed minimum-load surplus that neither the battery nor PV
    /// curtailment can absorb.
    pub spill: f64,
}

impl StepRecord {
    pub fn dg_total(&self) -> f64 {
        self.p_dg.iter().sum()
    }

    /// Signed balance error in kW.
    pub fn balance_residual(&self, k_loss: f64) -> f64 {
        self.p_load * (1.0 + k_loss) - (self.dg_total() + self.p_pv - self.p_curt + self.p_bess + self.shed - self.spill)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateCount {
    pub state: PmsState,
    pub label: String,
    pub count: u64,
}

/// Aggregates of a record stream; energies in kWh, fuel in litres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub steps: u64,
    pub step_minutes: u32,
    /// Every state of the table, zero counts included.
    pub state_occupancy: Vec<StateCount>,
    pub modal_state: PmsState,
    pub total_fuel_l: f64,
    pub load_kwh: f64,
    pub network_loss_kwh: f64,
    pub dg_energy_kwh: f64,
    pub pv_available_kwh: f64,
    pub pv_curtailed_kwh: f64,
    pub spill_kwh: f64,
    pub bess_charge_kwh: f64,
    pub bess_discharge_kwh: f64,
    pub bess_throughput_kwh: f64,
    pub bess_conversion_loss_kwh: f64,
    pub shed_kwh: f64,
    pub shed_steps: u64,
    pub soc_initial: f64,
    pub soc_final: f64,
    pub min_soc: f64,
    pub max_soc: f64,
    pub max_balance_residual_kw: f64,
    /// `|supply − demand| / demand` over the run, see [`summarize`].
    pub energy_audit_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub records: Vec<StepRecord>,
    pub report: SimulationReport,
}

/// Stored-energy update over `dt` hours at battery power `p_bess`
/// (positive = discharge).
pub fn soc_update(bess: &BessState, p_bess: f64, dt: f64) -> Result<f64, SimError> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if bess.energy_kwh == 0.0 || p_bess == 0.0 {
        return Ok(bess.soc);
    }
    let soc = if p_bess < 0.0 {
        bess.soc + -p_bess * dt * bess.eta_ch / bess.energy_kwh
    } else {
        bess.soc - p_bess * dt / (bess.eta_dis * bess.energy_kwh)
    };
    if !(-SOC_FAULT_TOL..=1.0 + SOC_FAULT_TOL).contains(&soc) {
        return Err(SimError::SocFault { step: 0, soc, p_bess_kw: p_bess });
    }
    Ok(soc.clamp(0.0, 1.0))
}

/// Runs the controller over aligned load (kW) and per-unit PV (kW per kWp)
/// series sampled at the control interval.
pub fn run(load: &TimeSeries, pv_perunit: &TimeSeries, system: &SimSystem, cfg: &PmsConfig, soc0: f64) -> Result<SimulationRun, SimError> {
    cfg.validate()?;
    system.validate()?;
    if !load.is_aligned_with(pv_perunit) {
        return Err(SimError::InvalidArgument(format!(
            "load ({} samples, {} min) and PV ({} samples, {} min) are not aligned",
            load.len(),
            load.step_minutes(),
            pv_perunit.len(),
            pv_perunit.step_minutes()
        )));
    }
    if load.is_empty() {
        return Err(SimError::InvalidArgument("simulation horizon is empty".into()));
    }
    if load.step_minutes() as f64 != cfg.t_ctrl_min {
        return Err(SimError::InvalidArgument(format!(
            "profiles are sampled every {} min but the control interval is {} min",
            load.step_minutes(),
            cfg.t_ctrl_min
        )));
    }
    if load.unit() != Unit::Kw || !matches!(pv_perunit.unit(), Unit::Kw | Unit::Dimensionless) {
        return Err(SimError::InvalidArgument("load must be in kW and PV in kW per kWp".into()));
    }
    if !(cfg.soc_lim..=1.0).contains(&soc0) {
        return Err(SimError::InvalidArgument(format!("soc0 must lie in [{}, 1], got {soc0}", cfg.soc_lim)));
    }
    let table = system.state_table()?;
    let dt = cfg.dt_hours();
    let mut bess = BessState::new(soc0, system.bess_energy_kwh, system.bess_power_kw, system.eta_ch, system.eta_dis);
    let mut state = PmsState::STORAGE_ONLY;
    let mut records = Vec::with_capacity(load.len());
    for t in 0..load.len() {
        let p_load = load.values()[t];
        let p_pv = pv_perunit.values()[t] * system.pv_kwp;
        if p_load < 0.0 || p_pv < 0.0 {
            return Err(SimError::InvalidArgument(format!("negative load or PV at step {t}")));
        }
        let (next, cmd) = pms_step(state, &bess, p_load, p_pv, &table, cfg);
        let env = availability(cfg, &bess);
        let p_dg = cmd.setpoints;
        let dg: f64 = p_dg.iter().sum();

        let slack = p_load * (1.0 + cfg.k_loss) - dg - p_pv;
        let p_bess = if slack >= -env.p_ch - ENVELOPE_TOL_KW && slack <= env.p_dis + ENVELOPE_TOL_KW {
            slack
        } else {
            slack.clamp(-env.p_ch, env.p_dis)
        };
        let shed = (slack - p_bess).max(0.0);
        let surplus = (p_bess - slack).max(0.0);
        let p_curt = surplus.min(p_pv);
        let spill = surplus - p_curt;

        let soc = soc_update(&bess, p_bess, dt).map_err(|e| match e {
            SimError::SocFault { soc, p_bess_kw, .. } => SimError::SocFault { step: t, soc, p_bess_kw },
            other => other,
        })?;
        let fuel_l = table.get(next).units.iter().map(|&i| system.fleet.units[i].fuel_rate(p_dg[i])).sum::<f64>() * dt;
        records.push(StepRecord { timestamp: load.timestamp(t), state: next, p_load, p_pv, p_curt, p_dg, p_bess, soc, fuel_l, shed, spill });
        bess.delta_soc = soc - bess.soc;
        bess.soc = soc;
        state = next;
    }
    let report = summarize(&records, &table, system, cfg, soc0)?;
    Ok(SimulationRun { records, report })
}

/// Visit count per state, in state order; only visited states appear.
pub fn state_occupancy(records: &[StepRecord]) -> BTreeMap<PmsState, u64> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.state).or_insert(0) += 1;
    }
    counts
}

/// Report recomputed from a record stream alone.
///
/// The energy audit compares `DG + PV − curtailed − spilled − conversion
/// losses − ΔE_stored + shed` with `load + network losses`, where
/// `ΔE_stored = (soc_final − soc0)·E`.
pub fn summarize(records: &[StepRecord], table: &StateTable, system: &SimSystem, cfg: &PmsConfig, soc0: f64) -> Result<SimulationReport, SimError> {
    if records.is_empty() {
        return Err(SimError::InvalidArgument("no records to summarize".into()));
    }
    let dt = cfg.dt_hours();
    let counts = state_occupancy(records);
    if let Some(bad) = counts.keys().find(|s| !table.contains(**s)) {
        return Err(SimError::InvalidArgument(format!("record state {bad} is not in the state table")));
    }
    let state_occupancy: Vec<StateCount> = table
        .states()
        .map(|(s, _)| StateCount { state: s, label: table.label(s), count: counts.get(&s).copied().unwrap_or(0) })
        .collect();
    let modal_state = state_occupancy.iter().fold(&state_occupancy[0], |best, c| if c.count > best.count { c } else { best }).state;

    let mut r = SimulationReport {
        steps: records.len() as u64,
        step_minutes: cfg.t_ctrl_min as u32,
        state_occupancy,
        modal_state,
        total_fuel_l: 0.0,
        load_kwh: 0.0,
        network_loss_kwh: 0.0,
        dg_energy_kwh: 0.0,
        pv_available_kwh: 0.0,
        pv_curtailed_kwh: 0.0,
        spill_kwh: 0.0,
        bess_charge_kwh: 0.0,
        bess_discharge_kwh: 0.0,
        bess_throughput_kwh: 0.0,
        bess_conversion_loss_kwh: 0.0,
        shed_kwh: 0.0,
        shed_steps: 0,
        soc_initial: soc0,
        soc_final: records[records.len() - 1].soc,
        min_soc: f64::INFINITY,
        max_soc: f64::NEG_INFINITY,
        max_balance_residual_kw: 0.0,
        energy_audit_residual: 0.0,
    };
    for rec in records {
        r.total_fuel_l += rec.fuel_l;
        r.load_kwh += rec.p_load * dt;
        r.network_loss_kwh += rec.p_load * cfg.k_loss * dt;
        r.dg_energy_kwh += rec.dg_total() * dt;
        r.pv_available_kwh += rec.p_pv * dt;
        r.pv_curtailed_kwh += rec.p_curt * dt;
        r.spill_kwh += rec.spill * dt;
        if rec.p_bess < 0.0 {
            r.bess_charge_kwh += -rec.p_bess * dt;
            r.bess_conversion_loss_kwh += -rec.p_bess * (1.0 - system.eta_ch) * dt;
        } else {
            r.bess_discharge_kwh += rec.p_bess * dt;
            r.bess_conversion_loss_kwh += rec.p_bess * (1.0 / system.eta_dis - 1.0) * dt;
        }
        r.shed_kwh += rec.shed * dt;
        r.shed_steps += u64::from(rec.shed > 0.0);
        r.min_soc = r.min_soc.min(rec.soc);
        r.max_soc = r.max_soc.max(rec.soc);
        r.max_balance_residual_kw = r.max_balance_residual_kw.max(rec.balance_residual(cfg.k_loss).abs());
    }
    r.bess_throughput_kwh = r.bess_charge_kwh + r.bess_discharge_kwh;
    let stored = (r.soc_final - soc0) * system.bess_energy_kwh;
    let supply = r.dg_energy_kwh + r.pv_available_kwh - r.pv_curtailed_kwh - r.spill_kwh - r.bess_conversion_loss_kwh - stored + r.shed_kwh;
    let demand = r.load_kwh + r.network_loss_kwh;
    r.energy_audit_residual = (supply - demand).abs() / demand.max(1.0);
    Ok(r)
}

/// Per-day SOC extrema and mean, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySoc {
    pub date: NaiveDate,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

pub fn daily_soc(records: &[StepRecord]) -> Vec<DailySoc> {
    let mut out: Vec<(DailySoc, usize)> = Vec::new();
    for r in records {
        let date = r.timestamp.date();
        match out.last_mut() {
            Some((d, n)) if d.date == date => {
                d.min = d.min.min(r.soc);
                d.max = d.max.max(r.soc);
                d.mean += r.soc;
                *n += 1;
            }
            _ => out.push((DailySoc { date, min: r.soc, mean: r.soc, max: r.soc }, 1)),
        }
    }
    out.into_iter().map(|(d, n)| DailySoc { mean: (d.mean / n as f64).clamp(d.min, d.max), ..d }).collect()
}
