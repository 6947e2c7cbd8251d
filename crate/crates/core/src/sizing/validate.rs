use serde::{Deserialize, Serialize};

use crate::profiles::TimeSeries;

use super::{DeviceCatalog, DispatchSchedule, SizingDecision};

/// Outcome of checking a schedule against its scenario. Violation lists hold
/// step indices in increasing order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub max_balance_residual_kw: f64,
    pub worst_balance_step: Option<usize>,
    pub balance_violations: Vec<usize>,
    /// Boundary indices `0..=T` where the stored energy leaves its box.
    pub soc_violations: Vec<usize>,
    pub recursion_violations: Vec<usize>,
    pub curtailment_violations: Vec<usize>,
    pub exclusion_violations: Vec<usize>,
    pub power_violations: Vec<usize>,
    pub dg_violations: Vec<usize>,
    pub dimension_error: Option<String>,
    pub passed: bool,
}

/// Checks balance, stored-energy box and recursion, curtailment bound,
/// charge/discharge exclusion, battery power limits and diesel windows.
pub fn validate_schedule(
    schedule: &DispatchSchedule,
    decision: &SizingDecision,
    load: &TimeSeries,
    pv_perunit: &TimeSeries,
    catalog: &DeviceCatalog,
    tol: f64,
) -> ValidationReport {
    let mut r = ValidationReport::default();
    let t_len = load.len();
    let classes = catalog.dg_classes.len();
    let dims_ok = pv_perunit.len() == t_len
        && schedule.len() == t_len
        && schedule.p_dis.len() == t_len
        && schedule.p_curt.len() == t_len
        && schedule.soc_kwh.len() == t_len + 1
        && schedule.p_dg.len() == classes
        && schedule.on_count.len() == classes
        && schedule.p_dg.iter().all(|c| c.len() == t_len)
        && schedule.on_count.iter().all(|c| c.len() == t_len);
    if !dims_ok {
        r.dimension_error = Some(format!("schedule dimensions do not match {t_len} steps and {classes} diesel classes"));
        return r;
    }
    let bess = &catalog.bess;
    let e = decision.bess_energy_kwh;
    let p_rating = decision.bess_power_kw;
    let dt = schedule.step_hours;
    for t in 0..t_len {
        let dg: f64 = schedule.p_dg.iter().map(|c| c[t]).sum();
        let pv = pv_perunit.values()[t] * decision.pv_rated_kwp;
        let supplied = dg + schedule.p_dis[t] - schedule.p_ch[t] + pv - schedule.p_curt[t];
        let residual = (load.values()[t] - supplied).abs();
        if residual > r.max_balance_residual_kw {
            r.max_balance_residual_kw = residual;
            r.worst_balance_step = Some(t);
        }
        if residual > tol {
            r.balance_violations.push(t);
        }
        let expected = schedule.soc_kwh[t] + (bess.eta_ch * schedule.p_ch[t] - schedule.p_dis[t] / bess.eta_dis) * dt;
        if (schedule.soc_kwh[t + 1] - expected).abs() > tol * e.max(1.0) {
            r.recursion_violations.push(t);
        }
        if schedule.p_curt[t] < -tol || schedule.p_curt[t] > pv + tol {
            r.curtailment_violations.push(t);
        }
        if schedule.p_ch[t].min(schedule.p_dis[t]) > tol {
            r.exclusion_violations.push(t);
        }
        let within = |p: f64| p >= -tol && p <= p_rating + tol;
        if !within(schedule.p_ch[t]) || !within(schedule.p_dis[t]) {
            r.power_violations.push(t);
        }
        let dg_ok = catalog.dg_classes.iter().enumerate().all(|(s, class)| {
            let k = schedule.on_count[s][t];
            let p = schedule.p_dg[s][t];
            k <= decision.count_of(&class.name)
                && p >= k as f64 * class.min_load_fraction * class.rating_kw - tol
                && p <= k as f64 * class.rating_kw + tol
        });
        if !dg_ok {
            r.dg_violations.push(t);
        }
    }
    for (t, &soc) in schedule.soc_kwh.iter().enumerate() {
        if soc < bess.soc_lo * e - tol || soc > bess.soc_hi * e + tol {
            r.soc_violations.push(t);
        }
    }
    r.passed = [
        &r.balance_violations,
        &r.soc_violations,
        &r.recursion_violations,
        &r.curtailment_violations,
        &r.exclusion_violations,
        &r.power_violations,
        &r.dg_violations,
    ]
    .iter()
    .all(|v| v.is_empty());
    r
}
