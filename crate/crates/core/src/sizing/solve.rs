use serde::{Deserialize, Serialize};

use crate::milp::{solve_lp_with, solve_milp, Integrality, MilpSolution, Relation, ScalingReport, SolveOptions, SolveStatus, Var};
use crate::profiles::{TimeSeries, TIMESTAMP_FORMAT};

use super::model::{build_sizing_model, check_inputs, SizingProblem};
use super::{CostBreakdown, CostModel, DeviceCatalog, DgCount, DispatchSchedule, SizingDecision, SizingError, SizingOptions};

/// Result of the per-C-rate solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOutcome {
    pub c_rate: f64,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub gap: f64,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingOutcome {
    pub decision: SizingDecision,
    pub schedule: DispatchSchedule,
    /// `Optimal` only when every C-rate model was solved to the gap target.
    pub status: SolveStatus,
    pub gap: f64,
    pub per_rate: Vec<RateOutcome>,
    pub scaling: ScalingReport,
}

/// Values this close to zero are reported as exact zeros.
const CLEAN_TOL: f64 = 1e-9;

fn clean(v: f64) -> f64 {
    if v.abs() < CLEAN_TOL {
        0.0
    } else {
        v
    }
}

/// Solves one model per catalog C-rate and keeps the cheapest, ties going to
/// the earlier catalog entry.
pub fn solve_sizing(
    load: &TimeSeries,
    pv_perunit: &TimeSeries,
    catalog: &DeviceCatalog,
    costs: &CostModel,
    opts: &SizingOptions,
) -> Result<SizingOutcome, SizingError> {
    check_inputs(load, pv_perunit)?;
    opts.solve.validate().map_err(SizingError::InvalidArgument)?;
    let mut per_rate = Vec::new();
    let mut best: Option<(SizingProblem, MilpSolution)> = None;
    let mut limit_hit = None;
    let mut unbounded = false;
    for &c in &catalog.bess.c_rates {
        let problem = build_sizing_model(load, pv_perunit, catalog, costs, c, opts.exclusion)?;
        let sol = solve_milp(&problem.model, &opts.solve)?;
        let has = sol.status.has_solution(&sol);
        per_rate.push(RateOutcome {
            c_rate: c,
            status: sol.status,
            objective: has.then_some(sol.objective_value),
            gap: sol.gap,
            nodes: sol.nodes_explored,
        });
        match sol.status {
            SolveStatus::GapLimit | SolveStatus::NodeLimit => limit_hit = Some(sol.status),
            SolveStatus::Unbounded => unbounded = true,
            _ => {}
        }
        if has && best.as_ref().is_none_or(|(_, b)| sol.objective_value < b.objective_value) {
            best = Some((problem, sol));
        }
    }
    let Some((problem, sol)) = best else {
        if unbounded {
            return Err(SizingError::Unbounded);
        }
        if let Some(status) = limit_hit {
            return Err(SizingError::NoIncumbent(status));
        }
        return Err(diagnose_infeasibility(load, pv_perunit, catalog, costs, opts));
    };
    let sol = store_early(&problem, &sol, &opts.solve).unwrap_or(sol);
    let (decision, schedule) = decode(&problem, &sol, load, catalog, costs);
    Ok(SizingOutcome {
        decision,
        schedule,
        status: limit_hit.unwrap_or(SolveStatus::Optimal),
        gap: sol.gap,
        per_rate,
        scaling: sol.scaling,
    })
}

/// Among schedules with the incumbent's sizes, commitments and cost, the one
/// that keeps the most energy stored summed over all steps. Surplus is then
/// stored before it is curtailed whenever the battery could take it. The
/// charge indicator allows charging wherever the previous round does not
/// discharge; each round's solution is feasible in the next, so the stored
/// energy never decreases.
fn store_early(problem: &SizingProblem, sol: &MilpSolution, opts: &SolveOptions) -> Option<MilpSolution> {
    let l = &problem.layout;
    let mut m = problem.model.clone();
    let mut budget_row = Vec::new();
    for j in 0..m.num_vars() {
        if m.objective[j] != 0.0 {
            budget_row.push((Var(j), m.objective[j]));
        }
        if m.is_integer(j) {
            let v = sol.values[j].round();
            m.lower[j] = v;
            m.upper[j] = v;
        }
    }
    for size in [l.pv, l.energy] {
        let v = sol.value(size).clamp(m.lower[size.index()], m.upper[size.index()]);
        m.set_bounds(size, v, v);
    }
    let z = sol.objective_value - m.objective_offset;
    m.add_constraint("cost_budget", &budget_row, Relation::Le, z + BUDGET_SLACK * z.abs().max(1.0));
    m.objective.iter_mut().for_each(|c| *c = 0.0);
    for &soc in &l.soc {
        m.set_cost(soc, -1.0);
    }

    let charge_pattern = |values: &[f64]| -> Vec<bool> { l.p_dis.iter().map(|d| values[d.index()] <= opts.feasibility_tol).collect() };
    let mut pattern = charge_pattern(&sol.values);
    let mut best: Option<Vec<f64>> = None;
    for _ in 0..STORE_EARLY_ROUNDS {
        if let Some(u) = &l.charging {
            for (&ut, &charge) in u.iter().zip(&pattern) {
                let v = if charge { 1.0 } else { 0.0 };
                m.set_bounds(ut, v, v);
            }
        }
        let Some(round) = solve_lp_with(&m, opts).ok().filter(|r| r.status == SolveStatus::Optimal) else {
            break;
        };
        let next = charge_pattern(&round.values);
        best = Some(round.values);
        if l.charging.is_none() || next == pattern {
            break;
        }
        pattern = next;
    }
    let values = best?;
    let objective_value = problem.model.evaluate(&values);
    Some(MilpSolution { objective_value, values, ..sol.clone() })
}

/// Upper bound on charge-indicator refinements in the second stage.
const STORE_EARLY_ROUNDS: usize = 8;

/// Relative cost slack allowed to the second stage.
const BUDGET_SLACK: f64 = 1e-9;

/// Decision and schedule from a solved model; sizes are rounded to their
/// integrality and near-zero noise is cleared.
pub(crate) fn decode(
    problem: &SizingProblem,
    sol: &MilpSolution,
    load: &TimeSeries,
    catalog: &DeviceCatalog,
    costs: &CostModel,
) -> (SizingDecision, DispatchSchedule) {
    let l = &problem.layout;
    let v = |var| clean(sol.value(var)).max(0.0);
    let size = |var: crate::milp::Var, block: f64| {
        let raw = v(var);
        if problem.model.integrality[var.index()] == Integrality::Continuous {
            raw
        } else {
            raw.round() * block
        }
    };
    let pv_kwp = size(l.pv, problem.pv_block_kwp);
    let energy = size(l.energy, problem.energy_block_kwh);
    let dg_counts: Vec<DgCount> = catalog
        .dg_classes
        .iter()
        .zip(&l.n)
        .map(|(class, &n)| DgCount { class: class.name.clone(), count: v(n).round() as u32 })
        .collect();

    let steps = l.steps;
    let classes = catalog.dg_classes.len();
    let mut p_dg = vec![Vec::with_capacity(steps); classes];
    let mut on_count = vec![Vec::with_capacity(steps); classes];
    for t in 0..steps {
        for s in 0..classes {
            p_dg[s].push(v(l.p_dg[t][s]));
            on_count[s].push(v(l.on_count[t][s]).round() as u32);
        }
    }
    let p_ch: Vec<f64> = l.p_ch.iter().map(|&x| v(x)).collect();
    let p_dis: Vec<f64> = l.p_dis.iter().map(|&x| v(x)).collect();
    let mut soc_kwh: Vec<f64> = l.soc.iter().map(|&x| v(x)).collect();
    soc_kwh.push(soc_kwh[0]);
    let p_curt: Vec<f64> = l.p_curt.iter().map(|&x| v(x)).collect();
    let schedule = DispatchSchedule { step_hours: problem.step_hours, p_dg, on_count, p_ch, p_dis, soc_kwh, p_curt };

    let factor = costs.capex_factor(load.horizon_hours());
    let mut cost = CostBreakdown {
        capex_dg: catalog.dg_classes.iter().zip(&dg_counts).map(|(c, d)| costs.c_dg * c.rating_kw * d.count as f64).sum::<f64>() * factor,
        capex_bess: (costs.c_bess_energy + costs.c_bess_power * problem.c_rate)
            * energy
            * (1.0 + costs.maintenance_surcharge_bess)
            * factor,
        capex_pv: costs.c_pv * pv_kwp * (1.0 + costs.maintenance_surcharge_pv) * factor,
        fuel: 0.0,
        total: 0.0,
    };
    for (s, class) in catalog.dg_classes.iter().enumerate() {
        for t in 0..steps {
            let litres = (class.fuel_slope * schedule.p_dg[s][t] + class.fuel_intercept * schedule.on_count[s][t] as f64) * problem.step_hours;
            cost.fuel += costs.fuel_price * litres;
        }
    }
    cost.total = cost.capex_dg + cost.capex_bess + cost.capex_pv + cost.fuel;

    let decision = SizingDecision {
        dg_counts,
        pv_rated_kwp: pv_kwp,
        bess_energy_kwh: energy,
        bess_power_kw: problem.c_rate * energy,
        c_rate: problem.c_rate,
        cost,
    };
    (decision, schedule)
}

/// Re-solves with free shortfall and surplus at every balance row and
/// reports the first step that needs either.
fn diagnose_infeasibility(
    load: &TimeSeries,
    pv_perunit: &TimeSeries,
    catalog: &DeviceCatalog,
    costs: &CostModel,
    opts: &SizingOptions,
) -> SizingError {
    let c = catalog.bess.c_rates[0];
    let problem = match build_sizing_model(load, pv_perunit, catalog, costs, c, opts.exclusion) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let mut m = problem.model.clone();
    m.objective.iter_mut().for_each(|c| *c = 0.0);
    let mut slack = Vec::new();
    for (t, &row) in problem.layout.balance_rows.iter().enumerate() {
        let short = m.add_continuous(format!("short[{t}]"), 0.0, f64::INFINITY, 1.0);
        let over = m.add_continuous(format!("over[{t}]"), 0.0, f64::INFINITY, 1.0);
        m.constraints[row].coeffs.push((short.index(), 1.0));
        m.constraints[row].coeffs.push((over.index(), -1.0));
        slack.push((short, over));
    }
    let sol = match solve_milp(&m, &opts.solve) {
        Ok(s) if s.status.has_solution(&s) => s,
        Ok(s) => return SizingError::NoIncumbent(s.status),
        Err(e) => return e.into(),
    };
    let tol = opts.solve.feasibility_tol;
    let (step, mismatch) = slack
        .iter()
        .enumerate()
        .map(|(t, &(s, o))| (t, sol.value(s) - sol.value(o)))
        .find(|&(_, d)| d.abs() > tol)
        .unwrap_or((0, 0.0));
    SizingError::Infeasible { step, timestamp: load.timestamp(step).format(TIMESTAMP_FORMAT).to_string(), mismatch_kw: mismatch }
}
