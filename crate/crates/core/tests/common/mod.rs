//! Shared oracles for integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use microgrid::milp::{solve_lp, Integrality, MilpModel, Relation, SolveStatus, Var};
use microgrid::profiles::{TimeSeries, Unit};
use microgrid::sizing::{BessSpec, CostModel, DeviceCatalog, DgClass, PvSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random pure-integer program with at most 12 variables and 30 rows.
/// Each variable ranges over a small box so that enumeration stays cheap.
pub fn random_integer_program(seed: u64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=12);
    let rows = rng.random_range(1..=30);
    let mut m = MilpModel::new();
    let mut product: u64 = 1;
    let mut vars = Vec::new();
    for j in 0..n {
        let room = 20_000 / product;
        let hi = if room >= 4 && rng.random_bool(0.3) { rng.random_range(2..=3) } else { 1 };
        product *= hi + 1;
        let kind = if hi == 1 && rng.random_bool(0.7) { Integrality::Binary } else { Integrality::Integer };
        let cost = rng.random_range(-10..=10) as f64;
        vars.push(m.add_var(format!("x{j}"), kind, 0.0, hi as f64, cost));
    }
    // Anchor point keeps most instances feasible; some rows ignore it.
    let anchor: Vec<f64> = (0..n).map(|j| rng.random_range(0..=m.upper[j] as i64) as f64).collect();
    for i in 0..rows {
        let mut terms: Vec<(Var, f64)> = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.6) {
                let half = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
                terms.push((v, rng.random_range(-6..=6) as f64 + half));
            }
        }
        let act: f64 = terms.iter().map(|(v, a)| a * anchor[v.index()]).sum();
        let (rel, rhs) = match rng.random_range(0..10) {
            0 => (Relation::Eq, act),
            1..=6 => (Relation::Le, act + rng.random_range(0..4) as f64),
            _ => (Relation::Ge, act - rng.random_range(0..4) as f64 - if rng.random_bool(0.1) { -20.0 } else { 0.0 }),
        };
        m.add_constraint(format!("r{i}"), &terms, rel, rhs);
    }
    m
}

/// Exhaustive minimum over the integer box; `None` when no point is feasible.
pub fn enumerate_integer_program(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let his: Vec<i64> = m.upper.iter().map(|&u| u as i64).collect();
    let mut point = vec![0i64; n];
    let mut values = vec![0.0; n];
    let mut best: Option<f64> = None;
    loop {
        for j in 0..n {
            values[j] = point[j] as f64;
        }
        if m.constraints.iter().all(|c| c.violation(&values) <= 1e-9) {
            let obj = m.evaluate(&values);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if point[j] < his[j] {
                point[j] += 1;
                break;
            }
            point[j] = 0;
            j += 1;
        }
    }
}

/// Plain description of one diesel unit: (rating kW, min load fraction, intercept L/h, slope L/kWh).
pub type UnitParams = (f64, f64, f64, f64);

/// Fleet efficiency by brute force: every commitment set with equal
/// per-unit loading, falling back to single units below every minimum load.
/// Only valid when all units share one min load fraction.
pub fn grid_fleet_efficiency(units: &[UnitParams], density: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let n = units.len();
    let mut best = 0.0f64;
    for mask in 1u32..(1 << n) {
        let set: Vec<&UnitParams> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &units[i]).collect();
        let cap: f64 = set.iter().map(|u| u.0).sum();
        let lo: f64 = set.iter().map(|u| u.0 * u.1).sum();
        if p < lo - 1e-9 || p > cap + 1e-9 {
            continue;
        }
        let frac = p / cap;
        let fuel: f64 = set.iter().map(|u| u.2 + u.3 * frac * u.0).sum();
        best = best.max(p / (density * fuel));
    }
    let floor = units.iter().map(|u| u.0 * u.1).fold(f64::INFINITY, f64::min);
    if best == 0.0 && p < floor {
        for u in units {
            best = best.max(p / (density * (u.2 + u.3 * p)));
        }
    }
    best
}

/// First point of a `step`-kW grid where the brute-force efficiency reaches `eta`.
pub fn grid_threshold(units: &[UnitParams], density: f64, eta: f64, step: f64) -> Option<f64> {
    let cap: f64 = units.iter().map(|u| u.0).sum();
    let mut p = step;
    while p <= cap + 1e-9 {
        if grid_fleet_efficiency(units, density, p) >= eta {
            return Some(p);
        }
        p += step;
    }
    None
}

/// Peak brute-force efficiency over a `step`-kW grid.
pub fn grid_peak_efficiency(units: &[UnitParams], density: f64, step: f64) -> f64 {
    let cap: f64 = units.iter().map(|u| u.0).sum();
    let mut p = step;
    let mut best = 0.0f64;
    while p <= cap + 1e-9 {
        best = best.max(grid_fleet_efficiency(units, density, p));
        p += step;
    }
    best
}

/// Random fuel curves on the reference ratings (1500, 1500, 2000 kW, 30 % minimum load).
pub fn random_fuel_fleet(seed: u64) -> Vec<UnitParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [1500.0, 1500.0, 2000.0]
        .iter()
        .map(|&r| (r, 0.3, rng.random_range(0.01..0.12) * r, rng.random_range(0.18..0.32)))
        .collect()
}

/// No-load consumption per kW of rating that puts the single-unit crossing of
/// round-trip efficiency `k = eta_ch·eta_dis` at loading fraction `x`.
///
/// From `x(a + b) / (a + b·x) = k`: `a = x(1 − k)·b / (k − x)`.
pub fn intercept_for_crossing(x: f64, k: f64, slope: f64) -> f64 {
    x * (1.0 - k) * slope / (k - x)
}

/// 24-step hourly scenario whose sizes live on a 3×3×3 block grid: PV and
/// battery in blocks of 400 kWp / 800 kWh, one 500 kW diesel class with up to
/// two units. Minimum load and fuel intercept are
/// zero so that an LP dispatch per grid point is exact.
pub struct ToyScenario {
    pub load: TimeSeries,
    pub pv: TimeSeries,
    pub catalog: DeviceCatalog,
    pub costs: CostModel,
}

pub const TOY_PV_BLOCK: f64 = 400.0;
pub const TOY_E_BLOCK: f64 = 800.0;
pub const TOY_DG_KW: f64 = 500.0;
pub const TOY_DG_SLOPE: f64 = 0.25;

pub fn toy_scenario() -> ToyScenario {
    let start = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let load: Vec<f64> = (0..24)
        .map(|h| {
            let x = (h as f64 - 19.0) / 24.0 * std::f64::consts::TAU;
            320.0 + 240.0 * x.cos()
        })
        .collect();
    let pv: Vec<f64> = (0..24)
        .map(|h| {
            let x = (h as f64 + 0.5 - 12.0) / 6.5;
            if x.abs() < 1.0 { 0.85 * (1.0 - x * x) } else { 0.0 }
        })
        .collect();
    let catalog = DeviceCatalog {
        dg_classes: vec![DgClass {
            name: "DG-500".into(),
            rating_mva: 0.625,
            rating_kw: TOY_DG_KW,
            min_load_fraction: 0.0,
            fuel_intercept: 0.0,
            fuel_slope: TOY_DG_SLOPE,
            max_units: 2,
        }],
        bess: BessSpec { max_energy_kwh: 2.0 * TOY_E_BLOCK, energy_quantum_kwh: Some(TOY_E_BLOCK), ..BessSpec::default() },
        pv: PvSpec { max_kwp: 2.0 * TOY_PV_BLOCK, quantum_kwp: Some(TOY_PV_BLOCK), ..PvSpec::default() },
    };
    let costs = CostModel { payback_years: 2.5, c_bess_energy: 60.0, c_bess_power: 30.0, ..CostModel::default() };
    ToyScenario {
        load: TimeSeries::new(start, 60, Unit::Kw, load).unwrap(),
        pv: TimeSeries::new(start, 60, Unit::Dimensionless, pv).unwrap(),
        catalog,
        costs,
    }
}

/// Cheapest fuel bill for fixed sizes, from a dispatch LP with a cyclic
/// store; `None` when the sizes cannot serve the load.
pub fn toy_dispatch_fuel(s: &ToyScenario, units: u32, pv_kwp: f64, e_kwh: f64, c_rate: f64) -> Option<f64> {
    let b = &s.catalog.bess;
    let t_len = s.load.len();
    let mut m = MilpModel::new();
    let fuel = s.costs.fuel_price * TOY_DG_SLOPE;
    let mut rows = Vec::new();
    for t in 0..t_len {
        let g = m.add_continuous(format!("g{t}"), 0.0, units as f64 * TOY_DG_KW, fuel);
        let ch = m.add_continuous(format!("c{t}"), 0.0, c_rate * e_kwh, 0.0);
        let dis = m.add_continuous(format!("d{t}"), 0.0, c_rate * e_kwh, 0.0);
        let e = m.add_continuous(format!("e{t}"), b.soc_lo * e_kwh, b.soc_hi * e_kwh, 0.0);
        let avail = s.pv.values()[t] * pv_kwp;
        let cut = m.add_continuous(format!("x{t}"), 0.0, avail, 0.0);
        m.add_constraint(format!("b{t}"), &[(g, 1.0), (dis, 1.0), (ch, -1.0), (cut, -1.0)], Relation::Eq, s.load.values()[t] - avail);
        rows.push((ch, dis, e));
    }
    for t in 0..t_len {
        let (ch, dis, e) = rows[t];
        let next = rows[(t + 1) % t_len].2;
        m.add_constraint(format!("r{t}"), &[(next, 1.0), (e, -1.0), (ch, -b.eta_ch), (dis, 1.0 / b.eta_dis)], Relation::Eq, 0.0);
    }
    let sol = solve_lp(&m).ok()?;
    (sol.status == SolveStatus::Optimal).then_some(sol.objective_value)
}

pub fn toy_capex(s: &ToyScenario, units: u32, pv_kwp: f64, e_kwh: f64, c_rate: f64) -> f64 {
    let c = &s.costs;
    let share = 24.0 / 8760.0 / c.payback_years;
    let dg = c.c_dg * TOY_DG_KW * units as f64;
    let bess = (c.c_bess_energy + c.c_bess_power * c_rate) * e_kwh * (1.0 + c.maintenance_surcharge_bess);
    let pv = c.c_pv * pv_kwp * (1.0 + c.maintenance_surcharge_pv);
    (dg + bess + pv) * share
}

/// Grid point `(units, pv_kwp, e_kwh, c_rate)` with its total cost.
pub type ToyCandidate = (u32, f64, f64, f64, f64);

/// Every feasible grid point, cheapest first.
pub fn toy_enumeration(s: &ToyScenario) -> Vec<ToyCandidate> {
    let mut out = Vec::new();
    for &c in &s.catalog.bess.c_rates {
        for units in 0..=2u32 {
            for p in 0..=2 {
                for e in 0..=2 {
                    let (pv, en) = (p as f64 * TOY_PV_BLOCK, e as f64 * TOY_E_BLOCK);
                    if let Some(fuel) = toy_dispatch_fuel(s, units, pv, en, c) {
                        out.push((units, pv, en, c, fuel + toy_capex(s, units, pv, en, c)));
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.4.total_cmp(&b.4));
    out
}
