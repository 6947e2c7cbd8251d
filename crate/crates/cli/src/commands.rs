use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use microgrid::milp::SolveStatus;
use microgrid::sim::{self, daily_soc, read_occupancy_csv, read_records_csv, summarize, SimSystem, SimulationReport};
use microgrid::sizing::{read_schedule_csv, solve_sizing, validate_schedule, write_schedule_csv, SizingDecision, SizingOptions};

use crate::artifacts::{self as art, PlantFile, SizingSummary};
use crate::config::Loaded;
use crate::Exit;

/// Tolerance of the schedule check recorded in the sizing summary, kW.
const SCHEDULE_TOL: f64 = 1e-6;

pub fn size(loaded: &Loaded, stdout: &mut impl Write) -> Result<Exit> {
    let c = &loaded.config;
    let (load, pv) = loaded.profiles(c.sizing.source())?;
    let opts = SizingOptions { solve: c.solve, exclusion: c.sizing.exclusion };
    let outcome = solve_sizing(&load, &pv, &c.catalog, &c.costs, &opts)?;
    let check = validate_schedule(&outcome.schedule, &outcome.decision, &load, &pv, &c.catalog, SCHEDULE_TOL);

    let dir = &loaded.out;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    art::write_toml(dir, art::DECISION, &outcome.decision)?;
    let names: Vec<String> = c.catalog.dg_classes.iter().map(|d| d.name.clone()).collect();
    write_schedule_csv(&outcome.schedule, &names, load.start(), BufWriter::new(art::create(dir, art::SCHEDULE)?))?;
    let summary = SizingSummary {
        status: outcome.status,
        gap: outcome.gap,
        start: load.start(),
        steps: load.len(),
        step_minutes: load.step_minutes(),
        max_balance_residual_kw: check.max_balance_residual_kw,
        schedule_valid: check.passed,
        coefficient_spread_before: outcome.scaling.spread_before,
        coefficient_spread_after: outcome.scaling.spread_after,
        per_rate: outcome.per_rate.clone(),
        decision: outcome.decision.clone(),
    };
    art::write_toml(dir, art::SIZING, &summary)?;
    print_sizing(&summary, stdout)?;
    Ok(if outcome.status == SolveStatus::Optimal { Exit::Ok } else { Exit::Limit })
}

pub fn simulate(loaded: &Loaded, decision: Option<&Path>, stdout: &mut impl Write) -> Result<Exit> {
    let c = &loaded.config;
    let path: PathBuf = match (decision, &c.simulation.decision) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => loaded.resolve(p),
        (None, None) => loaded.out.join(art::DECISION),
    };
    let decision: SizingDecision = art::read_toml(&path)?;
    let system = SimSystem::from_decision(&decision, &c.catalog).with_context(|| format!("in {}", path.display()))?;
    let step = c.pms.t_ctrl_min;
    ensure!(step.fract() == 0.0 && step >= 1.0, "[pms] t_ctrl_min must be a whole number of minutes, got {step}");
    let (load, pv) = loaded.profiles(c.simulation.source(step as u32))?;
    let run = sim::run(&load, &pv, &system, &c.pms, c.simulation.soc0)?;

    let dir = &loaded.out;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let ids: Vec<String> = system.fleet.units.iter().map(|u| u.id.clone()).collect();
    sim::write_records_csv(&run.records, &ids, BufWriter::new(art::create(dir, art::STEPS)?))?;
    sim::write_occupancy_csv(&run.report, BufWriter::new(art::create(dir, art::OCCUPANCY)?))?;
    sim::write_daily_soc_csv(&daily_soc(&run.records), BufWriter::new(art::create(dir, art::DAILY_SOC)?))?;
    art::write_toml(dir, art::REPORT, &run.report)?;
    art::write_toml(dir, art::PLANT, &PlantFile { soc0: c.simulation.soc0, system, pms: c.pms.clone() })?;
    print_simulation(&run.report, stdout)?;
    Ok(if run.report.shed_kwh > 0.0 { Exit::Shed } else { Exit::Ok })
}

/// Prints what the directory holds, recomputing simulation totals from the
/// step records and refusing files that disagree.
pub fn report(dir: &Path, stdout: &mut impl Write) -> Result<Exit> {
    ensure!(dir.is_dir(), "{} is not a directory", dir.display());
    let has_sizing = dir.join(art::SIZING).is_file();
    let has_sim = dir.join(art::REPORT).is_file();
    if !has_sizing && !has_sim {
        bail!("{} holds neither {} nor {}", dir.display(), art::SIZING, art::REPORT);
    }
    if has_sizing {
        let summary: SizingSummary = art::read_toml(&dir.join(art::SIZING))?;
        let decision: SizingDecision = art::read_toml(&dir.join(art::DECISION))?;
        ensure!(decision == summary.decision, "{} disagrees with {}", art::DECISION, art::SIZING);
        let (start, _, schedule) = read_schedule_csv(art::open(dir, art::SCHEDULE)?).with_context(|| format!("in {}", art::SCHEDULE))?;
        ensure!(start == summary.start && schedule.len() == summary.steps, "{} does not match {}", art::SCHEDULE, art::SIZING);
        print_sizing(&summary, stdout)?;
        writeln!(stdout, "  schedule diesel energy {:.3} kWh over {} steps", schedule.dg_energy_kwh(), schedule.len())?;
    }
    if has_sim {
        let stored: SimulationReport = art::read_toml(&dir.join(art::REPORT))?;
        let plant: PlantFile = art::read_toml(&dir.join(art::PLANT))?;
        let (_, records) = read_records_csv(art::open(dir, art::STEPS)?).with_context(|| format!("in {}", art::STEPS))?;
        let occupancy = read_occupancy_csv(art::open(dir, art::OCCUPANCY)?).with_context(|| format!("in {}", art::OCCUPANCY))?;
        let table = plant.system.state_table()?;
        let recomputed = summarize(&records, &table, &plant.system, &plant.pms, plant.soc0)?;
        ensure!(recomputed == stored, "{} does not match the totals of {}", art::REPORT, art::STEPS);
        ensure!(occupancy == recomputed.state_occupancy, "{} does not match {}", art::OCCUPANCY, art::STEPS);
        print_simulation(&recomputed, stdout)?;
    }
    Ok(Exit::Ok)
}

fn print_sizing(s: &SizingSummary, out: &mut impl Write) -> Result<()> {
    let d = &s.decision;
    writeln!(out, "sizing: {} (gap {:.2e}), {} steps of {} min from {}", s.status, s.gap, s.steps, s.step_minutes, s.start)?;
    for g in d.dg_counts.iter().filter(|g| g.count > 0) {
        writeln!(out, "  diesel {:>12} x {}", g.class, g.count)?;
    }
    writeln!(out, "  pv     {:.3} kWp", d.pv_rated_kwp)?;
    writeln!(out, "  bess   {:.3} kWh / {:.3} kW (C-rate {})", d.bess_energy_kwh, d.bess_power_kw, d.c_rate)?;
    let c = &d.cost;
    writeln!(
        out,
        "  cost   {:.4} = diesel {:.4} + bess {:.4} + pv {:.4} + fuel {:.4}",
        c.total, c.capex_dg, c.capex_bess, c.capex_pv, c.fuel
    )?;
    writeln!(out, "  schedule check {} (max residual {:.3e} kW)", if s.schedule_valid { "passed" } else { "FAILED" }, s.max_balance_residual_kw)?;
    Ok(())
}

fn print_simulation(r: &SimulationReport, out: &mut impl Write) -> Result<()> {
    writeln!(out, "simulation: {} steps of {} min", r.steps, r.step_minutes)?;
    writeln!(out, "  fuel          {:.3} L", r.total_fuel_l)?;
    writeln!(out, "  load          {:.3} kWh (+ {:.3} kWh network losses)", r.load_kwh, r.network_loss_kwh)?;
    writeln!(out, "  diesel        {:.3} kWh", r.dg_energy_kwh)?;
    writeln!(out, "  pv            {:.3} kWh available, {:.3} kWh curtailed", r.pv_available_kwh, r.pv_curtailed_kwh)?;
    writeln!(out, "  battery       {:.3} kWh in, {:.3} kWh out", r.bess_charge_kwh, r.bess_discharge_kwh)?;
    writeln!(out, "  shed          {:.3} kWh in {} steps", r.shed_kwh, r.shed_steps)?;
    writeln!(out, "  soc           min {:.4}, max {:.4}, final {:.4}", r.min_soc, r.max_soc, r.soc_final)?;
    writeln!(out, "  audit         {:.3e} relative, max step residual {:.3e} kW", r.energy_audit_residual, r.max_balance_residual_kw)?;
    writeln!(out, "  occupancy (modal state {}):", r.modal_state)?;
    for c in &r.state_occupancy {
        let share = 100.0 * c.count as f64 / r.steps as f64;
        writeln!(out, "    {:<30} {:>8} {:>6.2} %", c.label, c.count, share)?;
    }
    Ok(())
}
