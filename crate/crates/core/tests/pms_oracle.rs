mod common;

use common::{grid_fleet_efficiency, grid_peak_efficiency, grid_threshold, intercept_for_crossing, random_fuel_fleet, UnitParams};
use microgrid::pms::{fleet_efficiency, mcr_threshold, roundtrip_efficiency, DieselFleet, DieselUnit, DIESEL_KWH_PER_LITRE};

fn fleet_of(params: &[UnitParams]) -> DieselFleet {
    let units = params
        .iter()
        .enumerate()
        .map(|(i, &(r, m, a, b))| DieselUnit { id: format!("G{}", i + 1), rating_kw: r, min_load_fraction: m, fuel_intercept: a, fuel_slope: b })
        .collect();
    DieselFleet::new(units)
}

fn reference_params() -> Vec<UnitParams> {
    [1500.0, 1500.0, 2000.0].iter().map(|&r| (r, 0.3, 0.033 * r, 0.236)).collect()
}

#[test]
fn efficiency_matches_brute_force_on_a_grid() {
    let params = reference_params();
    let fleet = fleet_of(&params);
    let mut p = 10.0;
    while p <= 5000.0 {
        let got = fleet_efficiency(&fleet, p).unwrap();
        let want = grid_fleet_efficiency(&params, DIESEL_KWH_PER_LITRE, p);
        assert!((got - want).abs() < 1e-12, "{p}: {got} vs {want}");
        p += 10.0;
    }
    let at_3000 = fleet_efficiency(&fleet, 3000.0).unwrap();
    assert!((at_3000 - grid_fleet_efficiency(&params, DIESEL_KWH_PER_LITRE, 3000.0)).abs() < 1e-12);
}

#[test]
fn peak_efficiency_sits_at_full_load() {
    let params = reference_params();
    let fleet = fleet_of(&params);
    let rt = roundtrip_efficiency(&fleet, 1.0, 1.0).unwrap();
    let grid = grid_peak_efficiency(&params, DIESEL_KWH_PER_LITRE, 1.0);
    assert!((rt - grid).abs() < 1e-9);
    assert!((rt - fleet_efficiency(&fleet, 5000.0).unwrap()).abs() < 1e-12);
}

#[test]
fn thresholds_match_grid_crossing_for_random_fuel_curves() {
    for seed in 0..20 {
        let params = random_fuel_fleet(seed);
        let fleet = fleet_of(&params);
        let rt = roundtrip_efficiency(&fleet, 0.87, 0.86).unwrap();
        let oracle_rt = grid_peak_efficiency(&params, DIESEL_KWH_PER_LITRE, 1.0) * 0.87 * 0.86;
        assert!((rt - oracle_rt).abs() < 1e-9, "seed {seed}");
        let thr = mcr_threshold(&fleet, rt).unwrap();
        let grid = grid_threshold(&params, DIESEL_KWH_PER_LITRE, rt, 1.0).unwrap();
        assert!((thr - grid).abs() <= 1.0, "seed {seed}: {thr} vs {grid}");
        let below = fleet_efficiency(&fleet, (thr - 1.0).max(0.0)).unwrap();
        let above = fleet_efficiency(&fleet, thr + 1.0).unwrap();
        assert!(below < rt && rt <= above, "seed {seed}");
    }
}

#[test]
fn calibrated_fuel_curve_reproduces_the_documented_threshold() {
    let k = 0.87 * 0.86;
    let a = intercept_for_crossing(1047.0 / 1500.0, k, 0.236);
    let params: Vec<UnitParams> = [1500.0, 1500.0, 2000.0].iter().map(|&r| (r, 0.3, a * r, 0.236)).collect();
    let fleet = fleet_of(&params);
    let thr = mcr_threshold(&fleet, roundtrip_efficiency(&fleet, 0.87, 0.86).unwrap()).unwrap();
    assert!((thr - 1047.0).abs() <= 10.0, "{thr}");
    assert!((thr - 1047.0).abs() < 1e-6, "{thr}");
}
