use chrono::NaiveDate;
use microgrid::pms::{BessState, DieselFleet, PmsConfig, PmsState};
use microgrid::profiles::{pv_power, synth_irradiance, synth_load, IrradianceSpec, LoadSpec, PvPlantModel, TimeSeries, Unit};
use microgrid::sim::*;
use proptest::prelude::*;

const YEAR_MIN: u64 = 365 * 24 * 60;

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn series(unit: Unit, values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(start(), 5, unit, values).unwrap()
}

fn reference_system() -> SimSystem {
    SimSystem {
        fleet: DieselFleet::reference(),
        pv_kwp: 10_000.0,
        bess_energy_kwh: 5000.0,
        bess_power_kw: 5000.0,
        eta_ch: 0.87,
        eta_dis: 0.86,
    }
}

#[test]
fn soc_update_matches_hand_values() {
    let b = BessState::new(0.5, 5000.0, 5000.0, 0.87, 0.86);
    let dt = 1.0 / 12.0;
    assert!((soc_update(&b, -5000.0, dt).unwrap() - 0.5725).abs() < 1e-12);
    assert!((soc_update(&b, 4300.0, dt).unwrap() - (0.5 - 1.0 / 12.0)).abs() < 1e-12);
    assert_eq!(soc_update(&b, 0.0, dt).unwrap(), 0.5);
    let nearly_full = BessState { soc: 0.99, ..b };
    assert!(matches!(soc_update(&nearly_full, -5000.0, dt), Err(SimError::SocFault { .. })));
    assert!(soc_update(&b, 10.0, 0.0).is_err());
}

#[test]
fn pv_matching_the_lossy_load_stays_in_storage_only() {
    let cfg = PmsConfig::default();
    let load: Vec<f64> = (0..10).map(|i| 1000.0 + 50.0 * i as f64).collect();
    let sys = reference_system();
    let pv: Vec<f64> = load.iter().map(|l| l * (1.0 + cfg.k_loss) / sys.pv_kwp).collect();
    let out = run(&series(Unit::Kw, load), &series(Unit::Dimensionless, pv), &sys, &cfg, 0.6).unwrap();
    assert_eq!(out.records.len(), 10);
    assert!(out.records.iter().all(|r| r.state == PmsState(1)));
    assert_eq!(out.report.total_fuel_l, 0.0);
    assert_eq!(out.report.state_occupancy[0].count, 10);
    assert!(out.records.iter().all(|r| r.p_bess.abs() < 1e-9 && (r.soc - 0.6).abs() < 1e-12));
}

#[test]
fn empty_battery_and_3_3_mw_deficit_burns_the_pair_curve() {
    let cfg = PmsConfig::default();
    let load = vec![3300.0 / (1.0 + cfg.k_loss); 3];
    let sys = reference_system();
    let out = run(&series(Unit::Kw, load), &series(Unit::Dimensionless, vec![0.0; 3]), &sys, &cfg, cfg.soc_lim).unwrap();
    // G1 and G3 share 3300 kW; intercepts 0.033·(1500 + 2000) L/h, slope 0.236 L/kWh.
    let litres = (0.033 * 3500.0 + 0.236 * 3300.0) / 12.0;
    for r in &out.records {
        assert_eq!(r.state, PmsState(6));
        assert!((r.p_dg[0] - 3300.0 * 1500.0 / 3500.0).abs() < 1e-9);
        assert_eq!(r.p_dg[1], 0.0);
        assert!((r.fuel_l - litres).abs() < 1e-9);
        assert_eq!(r.shed, 0.0);
    }
    assert!((out.report.total_fuel_l - 3.0 * litres).abs() < 1e-9);
}

#[test]
fn misaligned_or_wrongly_sampled_inputs_are_rejected() {
    let cfg = PmsConfig::default();
    let sys = reference_system();
    let r = run(&series(Unit::Kw, vec![100.0; 4]), &series(Unit::Dimensionless, vec![0.0; 3]), &sys, &cfg, 0.5);
    assert!(matches!(r, Err(SimError::InvalidArgument(_))));
    let hourly = TimeSeries::new(start(), 60, Unit::Kw, vec![100.0; 3]).unwrap();
    let hourly_pv = TimeSeries::new(start(), 60, Unit::Dimensionless, vec![0.0; 3]).unwrap();
    assert!(run(&hourly, &hourly_pv, &sys, &cfg, 0.5).is_err());
    let r = run(&series(Unit::Kw, vec![100.0; 3]), &series(Unit::Dimensionless, vec![0.0; 3]), &sys, &cfg, 0.1);
    assert!(r.is_err());
}

#[test]
fn a_year_at_five_minutes_closes_its_balances() {
    let load = synth_load(&LoadSpec::default(), YEAR_MIN, 5).unwrap();
    let irr = synth_irradiance(&IrradianceSpec::default(), YEAR_MIN, 5).unwrap();
    let pv = pv_power(&irr, &PvPlantModel::default(), 1.0).unwrap();
    let out = run(&load, &pv, &reference_system(), &PmsConfig::default(), DEFAULT_SOC0).unwrap();
    let rep = &out.report;
    assert_eq!(rep.steps, 105_120);
    assert_eq!(rep.state_occupancy.iter().map(|c| c.count).sum::<u64>(), rep.steps);
    assert!(rep.max_balance_residual_kw <= 1e-6);
    assert!(rep.energy_audit_residual <= 1e-4);
    let fuel: f64 = out.records.iter().map(|r| r.fuel_l).sum();
    assert!((fuel - rep.total_fuel_l).abs() <= 1e-9 * fuel);
    let days = daily_soc(&out.records);
    assert_eq!(days.len(), 365);
    assert!(days.iter().all(|d| d.min <= d.mean && d.mean <= d.max));
}

#[test]
fn step_csv_round_trips_exactly() {
    let load = synth_load(&LoadSpec::default(), 2 * 24 * 60, 5).unwrap();
    let irr = synth_irradiance(&IrradianceSpec::default(), 2 * 24 * 60, 5).unwrap();
    let pv = pv_power(&irr, &PvPlantModel::default(), 1.0).unwrap();
    let sys = reference_system();
    let out = run(&load, &pv, &sys, &PmsConfig::default(), 0.3).unwrap();
    let ids: Vec<String> = sys.fleet.units.iter().map(|u| u.id.clone()).collect();
    let mut buf = Vec::new();
    write_records_csv(&out.records, &ids, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("timestamp,state,p_load_kw,p_pv_kw,p_curt_kw,G1_kw,G2_kw,G3_kw,p_bess_kw,soc,fuel_l,shed_kw,spill_kw\n"));
    let (read_ids, records) = read_records_csv(buf.as_slice()).unwrap();
    assert_eq!(read_ids, ids);
    assert_eq!(records, out.records);

    let mut occ = Vec::new();
    write_occupancy_csv(&out.report, &mut occ).unwrap();
    assert_eq!(read_occupancy_csv(occ.as_slice()).unwrap(), out.report.state_occupancy);
    let days = daily_soc(&out.records);
    let mut soc = Vec::new();
    write_daily_soc_csv(&days, &mut soc).unwrap();
    assert_eq!(read_daily_soc_csv(soc.as_slice()).unwrap(), days);
    assert_eq!(days.len(), 2);

    let table = sys.state_table().unwrap();
    assert_eq!(summarize(&records, &table, &sys, &PmsConfig::default(), 0.3).unwrap(), out.report);
}

#[test]
fn malformed_step_csv_names_the_line() {
    let text = "timestamp,state,p_load_kw,p_pv_kw,p_curt_kw,G1_kw,p_bess_kw,soc,fuel_l,shed_kw,spill_kw\n\
                2021-01-01T00:00:00,1,100,0,0,0,100,0.5,0,0,0\n\
                2021-01-01T00:05:00,1,abc,0,0,0,100,0.5,0,0,0\n";
    match read_records_csv(text.as_bytes()) {
        Err(SimError::Csv { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn soc_stays_in_band_and_firm_loads_are_served(
        levels in proptest::collection::vec(0.0..4800.0f64, 24),
        clearness in 0.0..1.0f64,
        soc0 in 0.2..=1.0f64,
    ) {
        let cfg = PmsConfig::default();
        let steps = 12 * 24;
        let load: Vec<f64> = (0..steps).map(|i| levels[i / 12] / (1.0 + cfg.k_loss)).collect();
        let pv: Vec<f64> = (0..steps)
            .map(|i| {
                let x = ((i / 12) as f64 + 0.5 - 12.0) / 6.0;
                if x.abs() < 1.0 { clearness * (1.0 - x * x) * 0.9 } else { 0.0 }
            })
            .collect();
        let out = run(&series(Unit::Kw, load), &series(Unit::Dimensionless, pv), &reference_system(), &cfg, soc0).unwrap();
        for r in &out.records {
            prop_assert!(r.soc >= cfg.soc_lim - 1e-9 && r.soc <= 1.0 + 1e-9, "soc {}", r.soc);
            prop_assert_eq!(r.shed, 0.0);
            prop_assert!(r.balance_residual(cfg.k_loss).abs() <= 1e-6);
            prop_assert!(r.p_curt >= 0.0 && r.p_curt <= r.p_pv + 1e-9);
        }
        prop_assert!(out.report.energy_audit_residual <= 1e-4);
    }
}
