//! Capacity sizing of diesel, battery and PV plant as one mixed-integer
//! program over a representative horizon.
//!
//! Per step `t` the model balances
//! `Σ P_g,s + P_dis − P_ch + pv(t)·P_PV − P_curt = load(t)`, commits an
//! integer number `k_s(t) ≤ n_s` of identical units per diesel class, tracks
//! the stored energy with a cyclic recursion, and forbids simultaneous charge
//! and discharge with one binary per step. The objective is capital cost
//! amortised over the payback period and pro-rated to the horizon, plus fuel.
//!
//! Battery power is `c·E` with the C-rate `c` fixed per model; [`solve_sizing`]
//! solves one model per candidate C-rate and keeps the cheaper.

mod csvio;
mod model;
mod solve;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpError, SolveOptions, SolveStatus};
use crate::pms::{DieselFleet, DieselUnit};
use crate::profiles::PvPlantModel;

pub use csvio::{read_schedule_csv, write_schedule_csv};
pub use model::{build_sizing_model, SizingLayout, SizingProblem};
pub use solve::{solve_sizing, RateOutcome, SizingOutcome};
pub use validate::{validate_schedule, ValidationReport};

#[derive(Debug, Error)]
pub enum SizingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// `mismatch_kw > 0` is unserved load, `< 0` generation that cannot be absorbed.
    #[error("no feasible sizing: balance cannot be met at step {step} ({timestamp}), mismatch {mismatch_kw:.3} kW")]
    Infeasible { step: usize, timestamp: String, mismatch_kw: f64 },
    #[error("no feasible sizing found before the search stopped ({0:?})")]
    NoIncumbent(SolveStatus),
    #[error("sizing model is unbounded")]
    Unbounded,
    #[error(transparent)]
    Solver(#[from] MilpError),
}

/// One purchasable diesel generator size; identical units are aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgClass {
    pub name: String,
    pub rating_mva: f64,
    pub rating_kw: f64,
    pub min_load_fraction: f64,
    /// No-load consumption per committed unit, L/h.
    pub fuel_intercept: f64,
    /// L/kWh.
    pub fuel_slope: f64,
    pub max_units: u32,
}

impl DgClass {
    /// Class with the default fuel curve (0.033·rating L/h, 0.236 L/kWh).
    pub fn with_default_curve(name: impl Into<String>, rating_mva: f64, rating_kw: f64, max_units: u32) -> Self {
        Self {
            name: name.into(),
            rating_mva,
            rating_kw,
            min_load_fraction: 0.3,
            fuel_intercept: 0.033 * rating_kw,
            fuel_slope: 0.236,
            max_units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BessSpec {
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub soc_lo: f64,
    pub soc_hi: f64,
    pub c_rates: Vec<f64>,
    pub max_energy_kwh: f64,
    /// When set, energy is bought in whole blocks of this size.
    pub energy_quantum_kwh: Option<f64>,
}

impl Default for BessSpec {
    fn default() -> Self {
        Self {
            eta_ch: 0.87,
            eta_dis: 0.86,
            soc_lo: 0.30,
            soc_hi: 0.90,
            c_rates: vec![1.0, 0.5],
            max_energy_kwh: 20_000.0,
            energy_quantum_kwh: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvSpec {
    pub model: PvPlantModel,
    pub max_kwp: f64,
    /// When set, PV is bought in whole blocks of this size.
    pub quantum_kwp: Option<f64>,
}

impl Default for PvSpec {
    fn default() -> Self {
        Self { model: PvPlantModel::default(), max_kwp: 20_000.0, quantum_kwp: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceCatalog {
    pub dg_classes: Vec<DgClass>,
    pub bess: BessSpec,
    pub pv: PvSpec,
}

impl Default for DeviceCatalog {
    /// Three generator sizes (1.25, 1.9 and 2.5 MVA at 0.8 power factor).
    fn default() -> Self {
        Self {
            dg_classes: vec![
                DgClass::with_default_curve("DG-1.25MVA", 1.25, 1000.0, 4),
                DgClass::with_default_curve("DG-1.9MVA", 1.9, 1500.0, 4),
                DgClass::with_default_curve("DG-2.5MVA", 2.5, 2000.0, 4),
            ],
            bess: BessSpec::default(),
            pv: PvSpec::default(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SizingError> {
    if cond {
        Ok(())
    } else {
        Err(SizingError::InvalidArgument(msg()))
    }
}

fn check_quantum(name: &str, q: Option<f64>) -> Result<(), SizingError> {
    match q {
        Some(q) => check(q > 0.0 && q.is_finite(), || format!("{name} must be positive, got {q}")),
        None => Ok(()),
    }
}

impl DeviceCatalog {
    pub fn validate(&self) -> Result<(), SizingError> {
        let mut names = std::collections::BTreeSet::new();
        for c in &self.dg_classes {
            check(names.insert(c.name.as_str()), || format!("duplicate diesel class `{}`", c.name))?;
            check(c.rating_kw > 0.0 && c.rating_kw.is_finite(), || format!("{}: rating_kw must be positive", c.name))?;
            check(c.rating_mva > 0.0, || format!("{}: rating_mva must be positive", c.name))?;
            check(c.min_load_fraction >= 0.0 && c.min_load_fraction < 1.0, || {
                format!("{}: min_load_fraction must lie in [0, 1), got {}", c.name, c.min_load_fraction)
            })?;
            check(c.fuel_intercept >= 0.0 && c.fuel_slope >= 0.0, || format!("{}: fuel curve must be non-negative", c.name))?;
        }
        let b = &self.bess;
        check(b.eta_ch > 0.0 && b.eta_ch <= 1.0, || format!("bess.eta_ch must lie in (0, 1], got {}", b.eta_ch))?;
        check(b.eta_dis > 0.0 && b.eta_dis <= 1.0, || format!("bess.eta_dis must lie in (0, 1], got {}", b.eta_dis))?;
        check(0.0 <= b.soc_lo && b.soc_lo < b.soc_hi && b.soc_hi <= 1.0, || {
            format!("bess needs 0 <= soc_lo < soc_hi <= 1, got {} and {}", b.soc_lo, b.soc_hi)
        })?;
        check(!b.c_rates.is_empty(), || "bess.c_rates must not be empty".into())?;
        for &c in &b.c_rates {
            check(c > 0.0 && c.is_finite(), || format!("bess.c_rates entries must be positive, got {c}"))?;
        }
        check(b.max_energy_kwh >= 0.0 && b.max_energy_kwh.is_finite(), || "bess.max_energy_kwh must be non-negative".into())?;
        check_quantum("bess.energy_quantum_kwh", b.energy_quantum_kwh)?;
        check(self.pv.max_kwp >= 0.0 && self.pv.max_kwp.is_finite(), || "pv.max_kwp must be non-negative".into())?;
        check_quantum("pv.quantum_kwp", self.pv.quantum_kwp)?;
        self.pv.model.validate().map_err(|e| SizingError::InvalidArgument(format!("pv.model: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    /// Per kW of generator rating.
    pub c_dg: f64,
    pub c_bess_power: f64,
    pub c_bess_energy: f64,
    pub c_pv: f64,
    /// Per litre.
    pub fuel_price: f64,
    pub payback_years: f64,
    pub maintenance_surcharge_pv: f64,
    pub maintenance_surcharge_bess: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            c_dg: 500.0,
            c_bess_power: 150.0,
            c_bess_energy: 300.0,
            c_pv: 800.0,
            fuel_price: 1.0,
            payback_years: 8.0,
            maintenance_surcharge_pv: 0.10,
            maintenance_surcharge_bess: 0.10,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), SizingError> {
        for (name, v) in [
            ("c_dg", self.c_dg),
            ("c_bess_power", self.c_bess_power),
            ("c_bess_energy", self.c_bess_energy),
            ("c_pv", self.c_pv),
            ("fuel_price", self.fuel_price),
            ("maintenance_surcharge_pv", self.maintenance_surcharge_pv),
            ("maintenance_surcharge_bess", self.maintenance_surcharge_bess),
        ] {
            check(v >= 0.0 && v.is_finite(), || format!("{name} must be non-negative, got {v}"))?;
        }
        check(self.payback_years > 0.0 && self.payback_years.is_finite(), || {
            format!("payback_years must be positive, got {}", self.payback_years)
        })
    }

    /// Share of total capex charged to a horizon of `hours`.
    pub fn capex_factor(&self, hours: f64) -> f64 {
        hours / 8760.0 / self.payback_years
    }
}

/// How charge/discharge exclusion is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// One binary per step (`P_ch ≤ M·u`, `P_dis ≤ M·(1 − u)`).
    #[default]
    Binary,
    /// No exclusion rows; the plain relaxation.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingOptions {
    pub solve: SolveOptions,
    pub exclusion: Exclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgCount {
    pub class: String,
    pub count: u32,
}

/// Horizon-level cost terms; they add up to `total`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBreakdown {
    pub capex_dg: f64,
    pub capex_bess: f64,
    pub capex_pv: f64,
    pub fuel: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingDecision {
    pub dg_counts: Vec<DgCount>,
    pub pv_rated_kwp: f64,
    pub bess_energy_kwh: f64,
    pub bess_power_kw: f64,
    pub c_rate: f64,
    pub cost: CostBreakdown,
}

impl SizingDecision {
    pub fn validate(&self) -> Result<(), SizingError> {
        check(self.pv_rated_kwp >= 0.0 && self.bess_energy_kwh >= 0.0 && self.bess_power_kw >= 0.0, || {
            "decision sizes must be non-negative".into()
        })?;
        check(self.c_rate > 0.0, || format!("c_rate must be positive, got {}", self.c_rate))?;
        let expected = self.c_rate * self.bess_energy_kwh;
        check((self.bess_power_kw - expected).abs() <= 1e-6 * expected.max(1.0), || {
            format!("bess_power_kw {} is not c_rate × bess_energy_kwh = {expected}", self.bess_power_kw)
        })
    }

    pub fn count_of(&self, class: &str) -> u32 {
        self.dg_counts.iter().filter(|d| d.class == class).map(|d| d.count).sum()
    }

    /// Diesel fleet with units `G1, G2, …` in catalog class order.
    pub fn fleet(&self, catalog: &DeviceCatalog) -> Result<DieselFleet, SizingError> {
        for d in &self.dg_counts {
            check(catalog.dg_classes.iter().any(|c| c.name == d.class), || format!("decision names unknown diesel class `{}`", d.class))?;
        }
        let mut units = Vec::new();
        for class in &catalog.dg_classes {
            for _ in 0..self.count_of(&class.name) {
                units.push(DieselUnit {
                    id: format!("G{}", units.len() + 1),
                    rating_kw: class.rating_kw,
                    min_load_fraction: class.min_load_fraction,
                    fuel_intercept: class.fuel_intercept,
                    fuel_slope: class.fuel_slope,
                });
            }
        }
        Ok(DieselFleet::new(units))
    }
}

/// Optimal operation over the sizing horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSchedule {
    pub step_hours: f64,
    /// `[class][t]`, kW per diesel class.
    pub p_dg: Vec<Vec<f64>>,
    /// `[class][t]`, committed units per class.
    pub on_count: Vec<Vec<u32>>,
    pub p_ch: Vec<f64>,
    pub p_dis: Vec<f64>,
    /// Stored energy in kWh at each step boundary; `T + 1` entries.
    pub soc_kwh: Vec<f64>,
    pub p_curt: Vec<f64>,
}

impl DispatchSchedule {
    pub fn len(&self) -> usize {
        self.p_ch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_ch.is_empty()
    }

    /// Diesel energy over the horizon, kWh.
    pub fn dg_energy_kwh(&self) -> f64 {
        self.p_dg.iter().flatten().sum::<f64>() * self.step_hours
    }
}
