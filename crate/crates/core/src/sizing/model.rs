use crate::milp::{Integrality, MilpModel, Relation, Var};
use crate::profiles::{TimeSeries, Unit};

use super::{CostModel, DeviceCatalog, Exclusion, SizingError};

/// Variable handles of a built sizing model.
#[derive(Debug, Clone, PartialEq)]
pub struct SizingLayout {
    pub steps: usize,
    /// Installed units per diesel class.
    pub n: Vec<Var>,
    /// PV rating in kWp, or in blocks of `pv_block_kwp`.
    pub pv: Var,
    /// Battery energy in kWh, or in blocks of `energy_block_kwh`.
    pub energy: Var,
    /// `[t][class]`.
    pub p_dg: Vec<Vec<Var>>,
    /// `[t][class]`.
    pub on_count: Vec<Vec<Var>>,
    pub p_ch: Vec<Var>,
    pub p_dis: Vec<Var>,
    /// Stored energy at the start of each step, kWh.
    pub soc: Vec<Var>,
    pub p_curt: Vec<Var>,
    /// Charge indicator per step; absent in the relaxed exclusion mode.
    pub charging: Option<Vec<Var>>,
    /// Row index of the balance equation of each step.
    pub balance_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SizingProblem {
    pub model: MilpModel,
    pub layout: SizingLayout,
    pub c_rate: f64,
    pub pv_block_kwp: f64,
    pub energy_block_kwh: f64,
    pub step_hours: f64,
}

pub(super) fn check_inputs(load: &TimeSeries, pv_perunit: &TimeSeries) -> Result<(), SizingError> {
    if !load.is_aligned_with(pv_perunit) {
        return Err(SizingError::InvalidArgument(format!(
            "load ({} samples from {}, {} min) and PV ({} samples from {}, {} min) are not aligned",
            load.len(),
            load.start(),
            load.step_minutes(),
            pv_perunit.len(),
            pv_perunit.start(),
            pv_perunit.step_minutes()
        )));
    }
    if load.is_empty() {
        return Err(SizingError::InvalidArgument("sizing horizon is empty".into()));
    }
    if load.unit() != Unit::Kw {
        return Err(SizingError::InvalidArgument(format!("load must be in kW, got {}", load.unit().tag())));
    }
    if !matches!(pv_perunit.unit(), Unit::Kw | Unit::Dimensionless) {
        return Err(SizingError::InvalidArgument(format!("PV must be kW per kWp, got {}", pv_perunit.unit().tag())));
    }
    if let Some(i) = load.values().iter().position(|&v| v < 0.0) {
        return Err(SizingError::InvalidArgument(format!("load is negative at step {i}")));
    }
    if let Some(i) = pv_perunit.values().iter().position(|&v| v < 0.0) {
        return Err(SizingError::InvalidArgument(format!("PV is negative at step {i}")));
    }
    Ok(())
}

/// Size variable: continuous in `[0, max]`, or an integer block count.
fn size_var(m: &mut MilpModel, name: &str, max: f64, quantum: Option<f64>) -> (Var, f64) {
    match quantum {
        Some(q) => (m.add_var(name, Integrality::Integer, 0.0, (max / q + 1e-9).floor(), 0.0), q),
        None => (m.add_continuous(name, 0.0, max, 0.0), 1.0),
    }
}

/// Sizing MILP for one fixed C-rate.
///
/// With `Exclusion::Binary` the model has `T·(2S + 5) + S + 2` variables,
/// with `Exclusion::Relaxed` it has `T·(2S + 4) + S + 2`.
pub fn build_sizing_model(
    load: &TimeSeries,
    pv_perunit: &TimeSeries,
    catalog: &DeviceCatalog,
    costs: &CostModel,
    c_rate: f64,
    exclusion: Exclusion,
) -> Result<SizingProblem, SizingError> {
    check_inputs(load, pv_perunit)?;
    catalog.validate()?;
    costs.validate()?;
    if !catalog.bess.c_rates.iter().any(|&c| c == c_rate) {
        return Err(SizingError::InvalidArgument(format!("C-rate {c_rate} is not offered by the catalog")));
    }
    let steps = load.len();
    let dt = load.step_hours();
    let factor = costs.capex_factor(load.horizon_hours());
    let bess = &catalog.bess;
    let mut m = MilpModel::new();

    let mut n = Vec::with_capacity(catalog.dg_classes.len());
    for class in &catalog.dg_classes {
        let cost = costs.c_dg * class.rating_kw * factor;
        n.push(m.add_var(format!("n[{}]", class.name), Integrality::Integer, 0.0, class.max_units as f64, cost));
    }
    let (pv, pv_block) = size_var(&mut m, "P_pv", catalog.pv.max_kwp, catalog.pv.quantum_kwp);
    m.set_cost(pv, costs.c_pv * (1.0 + costs.maintenance_surcharge_pv) * factor * pv_block);
    let (energy, e_block) = size_var(&mut m, "E_bess", bess.max_energy_kwh, bess.energy_quantum_kwh);
    let bess_capex = (costs.c_bess_energy + costs.c_bess_power * c_rate) * (1.0 + costs.maintenance_surcharge_bess);
    m.set_cost(energy, bess_capex * factor * e_block);

    let e_max = m.upper[energy.index()] * e_block;
    let p_max = c_rate * e_max;
    let pv_max = m.upper[pv.index()] * pv_block;
    let mut layout = SizingLayout {
        steps,
        n: n.clone(),
        pv,
        energy,
        p_dg: Vec::with_capacity(steps),
        on_count: Vec::with_capacity(steps),
        p_ch: Vec::with_capacity(steps),
        p_dis: Vec::with_capacity(steps),
        soc: Vec::with_capacity(steps),
        p_curt: Vec::with_capacity(steps),
        charging: (exclusion == Exclusion::Binary).then(Vec::new),
        balance_rows: Vec::with_capacity(steps),
    };

    for t in 0..steps {
        let mut pg = Vec::new();
        let mut k = Vec::new();
        for class in &catalog.dg_classes {
            let units = class.max_units as f64;
            let fuel = costs.fuel_price * dt;
            pg.push(m.add_continuous(format!("pg[{t},{}]", class.name), 0.0, class.rating_kw * units, fuel * class.fuel_slope));
            k.push(m.add_var(format!("k[{t},{}]", class.name), Integrality::Integer, 0.0, units, fuel * class.fuel_intercept));
        }
        layout.p_dg.push(pg);
        layout.on_count.push(k);
        layout.p_ch.push(m.add_continuous(format!("pch[{t}]"), 0.0, p_max, 0.0));
        layout.p_dis.push(m.add_continuous(format!("pdis[{t}]"), 0.0, p_max, 0.0));
        layout.soc.push(m.add_continuous(format!("soc[{t}]"), 0.0, bess.soc_hi * e_max, 0.0));
        let avail = pv_perunit.values()[t] * pv_max;
        layout.p_curt.push(m.add_continuous(format!("curt[{t}]"), 0.0, avail, 0.0));
        if let Some(u) = layout.charging.as_mut() {
            u.push(m.add_var(format!("u[{t}]"), Integrality::Binary, 0.0, 1.0, 0.0));
        }
    }

    for t in 0..steps {
        let mut bal: Vec<(Var, f64)> = layout.p_dg[t].iter().map(|&v| (v, 1.0)).collect();
        bal.push((layout.p_dis[t], 1.0));
        bal.push((layout.p_ch[t], -1.0));
        bal.push((pv, pv_perunit.values()[t] * pv_block));
        bal.push((layout.p_curt[t], -1.0));
        let row = m.add_constraint(format!("bal[{t}]"), &bal, Relation::Eq, load.values()[t]);
        layout.balance_rows.push(row);

        for (s, class) in catalog.dg_classes.iter().enumerate() {
            let (pg, k) = (layout.p_dg[t][s], layout.on_count[t][s]);
            let r = class.rating_kw;
            m.add_constraint(format!("dgmin[{t},{}]", class.name), &[(pg, 1.0), (k, -class.min_load_fraction * r)], Relation::Ge, 0.0);
            m.add_constraint(format!("dgmax[{t},{}]", class.name), &[(pg, 1.0), (k, -r)], Relation::Le, 0.0);
            m.add_constraint(format!("kcap[{t},{}]", class.name), &[(k, 1.0), (n[s], -1.0)], Relation::Le, 0.0);
        }

        let next = layout.soc[(t + 1) % steps];
        let (ch, dis, soc) = (layout.p_ch[t], layout.p_dis[t], layout.soc[t]);
        m.add_constraint(
            format!("socrec[{t}]"),
            &[(next, 1.0), (soc, -1.0), (ch, -bess.eta_ch * dt), (dis, dt / bess.eta_dis)],
            Relation::Eq,
            0.0,
        );
        m.add_constraint(format!("soclo[{t}]"), &[(soc, 1.0), (energy, -bess.soc_lo * e_block)], Relation::Ge, 0.0);
        m.add_constraint(format!("sochi[{t}]"), &[(soc, 1.0), (energy, -bess.soc_hi * e_block)], Relation::Le, 0.0);
        m.add_constraint(format!("chcap[{t}]"), &[(ch, 1.0), (energy, -c_rate * e_block)], Relation::Le, 0.0);
        m.add_constraint(format!("discap[{t}]"), &[(dis, 1.0), (energy, -c_rate * e_block)], Relation::Le, 0.0);
        if let Some(u) = &layout.charging {
            m.add_constraint(format!("chx[{t}]"), &[(ch, 1.0), (u[t], -p_max)], Relation::Le, 0.0);
            m.add_constraint(format!("disx[{t}]"), &[(dis, 1.0), (u[t], p_max)], Relation::Le, p_max);
        }
        m.add_constraint(format!("curtcap[{t}]"), &[(layout.p_curt[t], 1.0), (pv, -pv_perunit.values()[t] * pv_block)], Relation::Le, 0.0);
    }

    // Sizes first: once they are integral the commitment counts rarely need branching.
    for &v in layout.n.iter().chain([&pv, &energy]) {
        m.set_branch_priority(v, 2);
    }
    for &k in layout.on_count.iter().flatten() {
        m.set_branch_priority(k, 1);
    }

    Ok(SizingProblem { model: m, layout, c_rate, pv_block_kwp: pv_block, energy_block_kwh: e_block, step_hours: dt })
}
