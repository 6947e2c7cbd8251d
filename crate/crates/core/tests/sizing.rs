mod common;

use chrono::NaiveDate;
use common::*;
use microgrid::profiles::{TimeSeries, Unit};
use microgrid::sizing::*;
use proptest::prelude::*;

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn series(unit: Unit, values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(start(), 60, unit, values).unwrap()
}

fn single_class(rating: f64, min_load: f64, max_units: u32) -> DeviceCatalog {
    DeviceCatalog {
        dg_classes: vec![DgClass { min_load_fraction: min_load, ..DgClass::with_default_curve("DG", rating / 800.0, rating, max_units) }],
        ..DeviceCatalog::default()
    }
}

fn diesel_only(mut catalog: DeviceCatalog) -> DeviceCatalog {
    catalog.pv.max_kwp = 0.0;
    catalog.bess.max_energy_kwh = 0.0;
    catalog
}

#[test]
fn variable_count_follows_the_construction() {
    let load = series(Unit::Kw, vec![100.0; 24]);
    let pv = series(Unit::Dimensionless, vec![0.0; 24]);
    let catalog = DeviceCatalog::default();
    let s = catalog.dg_classes.len();
    let relaxed = build_sizing_model(&load, &pv, &catalog, &CostModel::default(), 1.0, Exclusion::Relaxed).unwrap();
    assert_eq!(relaxed.model.num_vars(), 24 * (2 * s + 4) + s + 2);
    let binary = build_sizing_model(&load, &pv, &catalog, &CostModel::default(), 1.0, Exclusion::Binary).unwrap();
    assert_eq!(binary.model.num_vars(), 24 * (2 * s + 5) + s + 2);
}

#[test]
fn misaligned_or_unknown_inputs_are_rejected() {
    let load = series(Unit::Kw, vec![100.0; 24]);
    let short = series(Unit::Dimensionless, vec![0.0; 23]);
    let catalog = DeviceCatalog::default();
    let err = build_sizing_model(&load, &short, &catalog, &CostModel::default(), 1.0, Exclusion::Binary).unwrap_err();
    assert!(matches!(err, SizingError::InvalidArgument(_)));
    let pv = series(Unit::Dimensionless, vec![0.0; 24]);
    let err = build_sizing_model(&load, &pv, &catalog, &CostModel::default(), 0.7, Exclusion::Binary).unwrap_err();
    assert!(matches!(err, SizingError::InvalidArgument(_)));
}

#[test]
fn empty_system_costs_nothing() {
    let load = series(Unit::Kw, vec![0.0; 24]);
    let pv = series(Unit::Dimensionless, vec![0.0; 24]);
    let out = solve_sizing(&load, &pv, &DeviceCatalog::default(), &CostModel::default(), &SizingOptions::default()).unwrap();
    let d = &out.decision;
    assert!(d.dg_counts.iter().all(|c| c.count == 0));
    assert_eq!((d.pv_rated_kwp, d.bess_energy_kwh, d.bess_power_kw), (0.0, 0.0, 0.0));
    assert_eq!(d.cost.total, 0.0);
}

#[test]
fn constant_load_below_minimum_load_is_infeasible() {
    let load = series(Unit::Kw, vec![100.0; 24]);
    let pv = series(Unit::Dimensionless, vec![0.0; 24]);
    let costs = CostModel::default();
    let err = solve_sizing(&load, &pv, &diesel_only(single_class(1500.0, 0.3, 3)), &costs, &SizingOptions::default()).unwrap_err();
    match err {
        SizingError::Infeasible { step, mismatch_kw, .. } => {
            // Cheapest repair leaves the unit off and the load unserved.
            assert_eq!(step, 0);
            assert!((mismatch_kw - 100.0).abs() < 1e-6, "{mismatch_kw}");
        }
        other => panic!("expected infeasible, got {other:?}"),
    }

    let catalog = diesel_only(single_class(1500.0, 0.05, 3));
    let out = solve_sizing(&load, &pv, &catalog, &costs, &SizingOptions::default()).unwrap();
    assert_eq!(out.decision.count_of("DG"), 1);
    assert!(out.schedule.p_dg[0].iter().all(|&p| (p - 100.0).abs() < 1e-6));
    assert!(out.schedule.on_count[0].iter().all(|&k| k == 1));
    let fuel = 24.0 * (0.236 * 100.0 + 0.033 * 1500.0);
    assert!((out.decision.cost.fuel - fuel).abs() < 1e-6);
}

#[test]
fn infeasibility_names_the_offending_step() {
    let mut values = vec![900.0; 24];
    values[5] = 100.0;
    let load = series(Unit::Kw, values);
    let pv = series(Unit::Dimensionless, vec![0.0; 24]);
    let err = solve_sizing(&load, &pv, &diesel_only(single_class(1500.0, 0.3, 3)), &CostModel::default(), &SizingOptions::default())
        .unwrap_err();
    match err {
        SizingError::Infeasible { step, timestamp, mismatch_kw } => {
            assert_eq!(step, 5);
            assert_eq!(timestamp, "2021-03-01T05:00:00");
            assert!((mismatch_kw - 100.0).abs() < 1e-6);
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn validation_flags_injected_faults() {
    let s = toy_scenario();
    let out = solve_sizing(&s.load, &s.pv, &s.catalog, &s.costs, &SizingOptions::default()).unwrap();
    let d = &out.decision;
    let clean = validate_schedule(&out.schedule, d, &s.load, &s.pv, &s.catalog, 1e-6);
    assert!(clean.passed, "{clean:?}");
    assert!(clean.max_balance_residual_kw <= 1e-6);

    let mut bumped = out.schedule.clone();
    bumped.p_dg[0][7] += 1.0;
    let r = validate_schedule(&bumped, d, &s.load, &s.pv, &s.catalog, 1e-6);
    assert!(!r.passed);
    assert_eq!(r.balance_violations, vec![7]);
    assert_eq!(r.worst_balance_step, Some(7));
    assert!((r.max_balance_residual_kw - 1.0).abs() < 1e-6);

    assert!(d.bess_energy_kwh > 0.0);
    let mut low = out.schedule.clone();
    low.soc_kwh[3] = 0.29 * d.bess_energy_kwh;
    let r = validate_schedule(&low, d, &s.load, &s.pv, &s.catalog, 1e-6);
    assert!(!r.passed);
    assert_eq!(r.soc_violations, vec![3]);

    let mut truncated = out.schedule.clone();
    truncated.p_ch.pop();
    let r = validate_schedule(&truncated, d, &s.load, &s.pv, &s.catalog, 1e-6);
    assert!(!r.passed && r.dimension_error.is_some());
}

#[test]
fn relaxed_and_binary_exclusion_agree_on_the_toy() {
    let s = toy_scenario();
    let binary = solve_sizing(&s.load, &s.pv, &s.catalog, &s.costs, &SizingOptions::default()).unwrap();
    let relaxed =
        solve_sizing(&s.load, &s.pv, &s.catalog, &s.costs, &SizingOptions { exclusion: Exclusion::Relaxed, ..SizingOptions::default() })
            .unwrap();
    assert!(relaxed.decision.cost.total <= binary.decision.cost.total * (1.0 + 1e-6));
    assert_eq!(binary.per_rate.len(), 2);
}

/// Random single-class day with continuous PV and battery sizes.
fn random_day(levels: &[f64], clearness: f64) -> (TimeSeries, TimeSeries, DeviceCatalog) {
    let load: Vec<f64> = (0..24).map(|h| levels[h / 4]).collect();
    let pv: Vec<f64> = (0..24)
        .map(|h| {
            let x = (h as f64 + 0.5 - 12.0) / 6.0;
            if x.abs() < 1.0 { clearness * (1.0 - x * x) } else { 0.0 }
        })
        .collect();
    let mut catalog = single_class(500.0, 0.3, 3);
    catalog.pv.max_kwp = 3000.0;
    catalog.bess.max_energy_kwh = 4000.0;
    (series(Unit::Kw, load), series(Unit::Dimensionless, pv), catalog)
}

#[test]
fn discharging_into_surplus_does_not_block_early_charging() {
    let levels = [1176.03, 533.29, 603.33, 289.60, 168.50, 828.94];
    let (load, pv, catalog) = random_day(&levels, 0.326);
    let costs = CostModel { c_pv: 100.0, payback_years: 2.0, ..CostModel::default() };
    let out = solve_sizing(&load, &pv, &catalog, &costs, &SizingOptions::default()).unwrap();
    let (d, sch) = (&out.decision, &out.schedule);
    let full = catalog.bess.soc_hi * d.bess_energy_kwh;
    for t in 0..sch.len() {
        if sch.p_curt[t] > 1e-6 {
            assert!(sch.soc_kwh[t + 1] >= full - 1e-6 || sch.p_ch[t] >= d.bess_power_kw - 1e-6, "step {t}");
            assert!(sch.p_dis[t] <= 1e-9, "step {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn optimal_schedules_satisfy_the_dispatch_invariants(
        levels in proptest::collection::vec(150.0..1400.0f64, 6),
        clearness in 0.3..1.0f64,
    ) {
        let (load, pv, catalog) = random_day(&levels, clearness);
        // Cheap PV makes curtailment likely.
        let costs = CostModel { c_pv: 100.0, payback_years: 2.0, ..CostModel::default() };
        let out = solve_sizing(&load, &pv, &catalog, &costs, &SizingOptions::default()).unwrap();
        let d = &out.decision;
        let sch = &out.schedule;
        d.validate().unwrap();
        let report = validate_schedule(sch, d, &load, &pv, &catalog, 1e-6);
        prop_assert!(report.passed, "{:?}", report);
        let b = &catalog.bess;
        let e = d.bess_energy_kwh;
        for t in 0..sch.len() {
            prop_assert!(sch.p_ch[t] * sch.p_dis[t] == 0.0, "simultaneous charge and discharge at {}", t);
            if sch.p_curt[t] > 1e-6 {
                let full = sch.soc_kwh[t + 1] >= b.soc_hi * e - 1e-6;
                let at_rating = sch.p_ch[t] >= d.bess_power_kw - 1e-6;
                prop_assert!(full || at_rating, "curtailing {} kW at step {} with headroom", sch.p_curt[t], t);
            }
        }
        let flow: f64 = (0..sch.len()).map(|t| b.eta_ch * sch.p_ch[t] - sch.p_dis[t] / b.eta_dis).sum::<f64>() * sch.step_hours;
        let drift = sch.soc_kwh[sch.len()] - sch.soc_kwh[0];
        prop_assert!((drift - flow).abs() <= 1e-6 * e.max(1.0));
    }
}
