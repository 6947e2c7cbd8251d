use serde::{Deserialize, Serialize};

use super::PmsError;

/// Diesel energy content used to convert litres into kWh.
pub const DIESEL_KWH_PER_LITRE: f64 = 9.94;

/// Largest fleet for which commitment subsets are enumerated.
pub const MAX_FLEET_UNITS: usize = 16;

const WINDOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DieselUnit {
    pub id: String,
    pub rating_kw: f64,
    pub min_load_fraction: f64,
    /// No-load consumption while committed, L/h.
    pub fuel_intercept: f64,
    /// Incremental consumption, L/kWh.
    pub fuel_slope: f64,
}

impl DieselUnit {
    /// Unit with the default catalog fuel curve (0.033·rating L/h + 0.236 L/kWh).
    pub fn with_default_curve(id: impl Into<String>, rating_kw: f64, min_load_fraction: f64) -> Self {
        Self { id: id.into(), rating_kw, min_load_fraction, fuel_intercept: 0.033 * rating_kw, fuel_slope: 0.236 }
    }

    pub fn min_load_kw(&self) -> f64 {
        self.min_load_fraction * self.rating_kw
    }

    /// Fuel rate in L/h at setpoint `p_kw` while committed.
    pub fn fuel_rate(&self, p_kw: f64) -> f64 {
        self.fuel_intercept + self.fuel_slope * p_kw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DieselFleet {
    pub units: Vec<DieselUnit>,
    #[serde(default = "default_boost")]
    pub boost_fraction: f64,
    #[serde(default = "default_density")]
    pub energy_density_kwh_per_l: f64,
}

fn default_boost() -> f64 {
    0.30
}

fn default_density() -> f64 {
    DIESEL_KWH_PER_LITRE
}

impl DieselFleet {
    pub fn new(units: Vec<DieselUnit>) -> Self {
        Self { units, boost_fraction: default_boost(), energy_density_kwh_per_l: default_density() }
    }

    /// The reference plant: G1, G2 = 1500 kW and G3 = 2000 kW with 30 % minimum load.
    pub fn reference() -> Self {
        Self::new(vec![
            DieselUnit::with_default_curve("G1", 1500.0, 0.3),
            DieselUnit::with_default_curve("G2", 1500.0, 0.3),
            DieselUnit::with_default_curve("G3", 2000.0, 0.3),
        ])
    }

    pub fn validate(&self) -> Result<(), PmsError> {
        let bad = |msg: String| Err(PmsError::InvalidConfig(msg));
        if self.units.len() > MAX_FLEET_UNITS {
            return bad(format!("fleet has {} units, at most {MAX_FLEET_UNITS} are supported", self.units.len()));
        }
        for u in &self.units {
            if !(u.rating_kw > 0.0 && u.rating_kw.is_finite()) {
                return bad(format!("unit {}: rating_kw must be positive", u.id));
            }
            if !(u.min_load_fraction >= 0.0 && u.min_load_fraction < 1.0) {
                return bad(format!("unit {}: min_load_fraction must lie in [0, 1)", u.id));
            }
            if !(u.fuel_intercept >= 0.0 && u.fuel_slope > 0.0) {
                return bad(format!("unit {}: fuel_intercept must be >= 0 and fuel_slope > 0", u.id));
            }
        }
        if !(self.boost_fraction >= 0.0) {
            return bad(format!("boost_fraction must be non-negative, got {}", self.boost_fraction));
        }
        if !(self.energy_density_kwh_per_l > 0.0) {
            return bad("energy_density_kwh_per_l must be positive".into());
        }
        Ok(())
    }

    pub fn total_rating(&self) -> f64 {
        self.units.iter().map(|u| u.rating_kw).sum()
    }

    /// Rating sum of a commitment set.
    pub fn capability(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.units[i].rating_kw).sum()
    }

    pub fn min_load(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.units[i].min_load_kw()).sum()
    }

    /// All non-empty commitment sets as sorted index lists, in bitmask order.
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        let n = self.units.len();
        (1u32..(1 << n)).map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect()).collect()
    }

    /// Fuel rate in L/h of `set` dispatched to `p_kw` by [`dispatch_fleet`].
    fn set_fuel_rate(&self, set: &[usize], p_kw: f64) -> Option<f64> {
        let sp = dispatch_fleet(self, set, p_kw, 0.0).ok()?;
        Some(set.iter().zip(&sp).map(|(&i, &p)| self.units[i].fuel_rate(p)).sum())
    }

    fn efficiency_of(&self, fuel_l_per_h: f64, p_kw: f64) -> f64 {
        p_kw / (self.energy_density_kwh_per_l * fuel_l_per_h)
    }

    fn smallest_min_load(&self) -> f64 {
        self.units.iter().map(DieselUnit::min_load_kw).fold(f64::INFINITY, f64::min)
    }
}

/// Electrical output over fuel energy for the best commitment at `p_total`.
///
/// Each subset whose `[Σ min load, Σ rating]` window contains `p_total` is
/// loaded by [`dispatch_fleet`]; the best one wins. Below the smallest
/// minimum load no subset is admissible, and the single-unit curves are
/// extended down to zero so the efficiency falls continuously to 0. Gaps
/// between windows above that point have efficiency 0.
pub fn fleet_efficiency(fleet: &DieselFleet, p_total: f64) -> Result<f64, PmsError> {
    fleet.validate()?;
    let max = fleet.total_rating();
    if !(p_total >= 0.0) || p_total > max * (1.0 + WINDOW_TOL) {
        return Err(PmsError::OutOfRange { p_kw: p_total, max_kw: max });
    }
    if p_total == 0.0 {
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    for set in fleet.subsets() {
        if let Some(fuel) = fleet.set_fuel_rate(&set, p_total) {
            best = best.max(fleet.efficiency_of(fuel, p_total));
        }
    }
    if best == 0.0 && p_total < fleet.smallest_min_load() {
        for u in &fleet.units {
            best = best.max(fleet.efficiency_of(u.fuel_rate(p_total), p_total));
        }
    }
    Ok(best)
}

/// Peak fleet efficiency times the storage charge and discharge efficiencies.
///
/// With affine fuel curves each subset is most efficient at full rating, so
/// the peak is taken over subsets at their rating.
pub fn roundtrip_efficiency(fleet: &DieselFleet, eta_ch: f64, eta_dis: f64) -> Result<f64, PmsError> {
    fleet.validate()?;
    for (name, eta) in [("eta_ch", eta_ch), ("eta_dis", eta_dis)] {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(PmsError::InvalidConfig(format!("{name} must lie in (0, 1], got {eta}")));
        }
    }
    Ok(peak_efficiency(fleet) * eta_ch * eta_dis)
}

fn peak_efficiency(fleet: &DieselFleet) -> f64 {
    fleet
        .subsets()
        .iter()
        .map(|set| {
            let cap = fleet.capability(set);
            let fuel: f64 = set.iter().map(|&i| fleet.units[i].fuel_rate(fleet.units[i].rating_kw)).sum();
            fleet.efficiency_of(fuel, cap)
        })
        .fold(0.0, f64::max)
}

/// Smallest power at which the fleet is at least as efficient as cycling
/// energy through storage.
///
/// The power axis is cut at every subset window edge. Inside a segment the
/// admissible subsets do not change, so the efficiency is monotone and the
/// crossing is bracketed by bisection.
pub fn mcr_threshold(fleet: &DieselFleet, eta_rt: f64) -> Result<f64, PmsError> {
    fleet.validate()?;
    if fleet.units.is_empty() {
        return Err(PmsError::NoCrossing("fleet is empty".into()));
    }
    if !(eta_rt > 0.0 && eta_rt.is_finite()) {
        return Err(PmsError::NoCrossing(format!("round-trip efficiency must be positive, got {eta_rt}")));
    }
    let subsets = fleet.subsets();
    let windows: Vec<(f64, f64)> = subsets.iter().map(|s| (fleet.min_load(s), fleet.capability(s))).collect();
    let floor = fleet.smallest_min_load();
    let mut cuts: Vec<f64> = windows.iter().flat_map(|&(lo, hi)| [lo, hi]).chain([0.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // Efficiency using only the subsets admissible on the whole segment [lo, hi].
    let on_segment = |p: f64, lo: f64, hi: f64| -> f64 {
        let mut best = 0.0f64;
        for (set, &(wlo, whi)) in subsets.iter().zip(&windows) {
            if wlo <= lo && whi >= hi {
                if let Some(fuel) = fleet.set_fuel_rate(set, p) {
                    best = best.max(fleet.efficiency_of(fuel, p));
                }
            }
        }
        if hi <= floor {
            for u in &fleet.units {
                best = best.max(fleet.efficiency_of(u.fuel_rate(p), p));
            }
        }
        best
    };

    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo > 0.0 && fleet_efficiency(fleet, lo)? >= eta_rt {
            return Ok(lo);
        }
        if on_segment(hi, lo, hi) < eta_rt {
            continue;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if on_segment(mid, lo, hi) >= eta_rt {
                b = mid;
            } else {
                a = mid;
            }
        }
        return Ok(b);
    }
    let last = *cuts.last().unwrap();
    if fleet_efficiency(fleet, last)? >= eta_rt {
        return Ok(last);
    }
    Err(PmsError::NoCrossing(format!("fleet efficiency never reaches {eta_rt}")))
}

/// Setpoints for the committed `set` summing to `p_req`.
///
/// Units share one loading fraction of their (boosted) rating; a unit whose
/// minimum load exceeds that fraction is held at its minimum and the rest
/// share the remainder.
pub fn dispatch_fleet(fleet: &DieselFleet, set: &[usize], p_req: f64, boost: f64) -> Result<Vec<f64>, PmsError> {
    let scale = 1.0 + boost;
    let lo = fleet.min_load(set);
    let hi = fleet.capability(set) * scale;
    let tol = WINDOW_TOL * hi.max(1.0);
    if set.is_empty() || !(p_req >= lo - tol && p_req <= hi + tol) {
        return Err(PmsError::InfeasibleDispatch { p_req_kw: p_req, lo_kw: lo, hi_kw: hi });
    }
    let p = p_req.clamp(lo, hi);
    // Fraction f of the boosted rating such that Σ max(min_i, f·R_i·scale) = p.
    let mut order: Vec<usize> = (0..set.len()).collect();
    let floor_frac = |k: usize| fleet.units[set[k]].min_load_fraction / scale;
    order.sort_by(|&x, &y| floor_frac(y).total_cmp(&floor_frac(x)));
    let mut pinned = 0usize;
    let mut pinned_power = 0.0;
    let mut free_rating: f64 = set.iter().map(|&i| fleet.units[i].rating_kw * scale).sum();
    let mut f = (p - pinned_power) / free_rating;
    while pinned < order.len() && f < floor_frac(order[pinned]) {
        let u = &fleet.units[set[order[pinned]]];
        pinned_power += u.min_load_kw();
        free_rating -= u.rating_kw * scale;
        pinned += 1;
        f = if free_rating > 0.0 { (p - pinned_power) / free_rating } else { 0.0 };
    }
    let mut out = vec![0.0; set.len()];
    for (rank, &k) in order.iter().enumerate() {
        let u = &fleet.units[set[k]];
        out[k] = if rank < pinned { u.min_load_kw() } else { f * u.rating_kw * scale };
    }
    Ok(out)
}
