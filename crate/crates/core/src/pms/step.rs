use serde::{Deserialize, Serialize};

use super::fleet::dispatch_fleet;
use super::states::{PmsState, StateMode, StateTable};
use super::{availability, control_variable, reactive_power, AvailabilityEnvelope, BessState, PmsConfig};

/// Output of one control interval.
///
/// Power balance: `p_load·(1 + k_loss) = Σ setpoints + p_pv − curtailment
/// + bess_expected + shed − spill`. `spill` is non-zero only when committed
/// minimum loads exceed what storage and PV curtailment can absorb, which
/// requires a battery far too small for the fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchCommand {
    pub state: PmsState,
    /// Per fleet unit, kW; 0 for uncommitted units.
    pub setpoints: Vec<f64>,
    /// Expected battery power, + = discharge.
    pub bess_expected: f64,
    pub curtailment: f64,
    pub shed: f64,
    pub spill: f64,
    pub p_ctrl: f64,
    pub envelope: AvailabilityEnvelope,
    pub q_dg_kvar: f64,
    pub q_pv_kvar: f64,
}

impl DispatchCommand {
    pub fn dg_total(&self) -> f64 {
        self.setpoints.iter().sum()
    }

    pub fn committed_units(&self) -> usize {
        self.setpoints.iter().filter(|&&p| p > 0.0).count()
    }
}

/// One controller transition.
///
/// The target is the lowest state covering the deficit. Upward moves are
/// immediate. A downward move goes only as far as the lowest state covering
/// `(1 + step_down_margin)·deficit`, unless the held state's minimum load
/// could not be absorbed without curtailing PV, in which case the target is
/// taken directly. A state outside the table is treated as a fresh start.
pub fn pms_step(
    state: PmsState,
    bess: &BessState,
    p_load: f64,
    p_pv: f64,
    table: &StateTable,
    cfg: &PmsConfig,
) -> (PmsState, DispatchCommand) {
    let env = availability(cfg, bess);
    let load_eff = p_load * (1.0 + cfg.k_loss);
    let net = load_eff - p_pv;
    let p_ctrl = control_variable(p_load, p_pv, &env, cfg);
    let deficit = p_ctrl.max(0.0);
    let fleet = table.fleet();

    let target = table.lowest_covering(deficit);
    let current = if table.contains(state) { state } else { target };
    let mut next = if target >= current {
        target
    } else {
        current.min(table.lowest_covering((1.0 + cfg.step_down_margin) * deficit))
    };
    if next != target && fleet.min_load(&table.get(next).units) > net + env.p_ch + 1e-9 {
        next = target;
    }

    let def = table.get(next);
    let committed = &def.units;
    let rating = fleet.capability(committed);
    let floor = fleet.min_load(committed);
    let (dg, boost) = match def.mode {
        StateMode::StorageOnly => (0.0, 0.0),
        StateMode::McrCharge => ((net + env.p_ch).clamp(floor, rating), 0.0),
        StateMode::Load => (deficit.clamp(floor, rating), 0.0),
        StateMode::Overload => (deficit.clamp(floor, def.capability), fleet.boost_fraction),
    };
    let mut setpoints = vec![0.0; fleet.units.len()];
    if !committed.is_empty() {
        let split = dispatch_fleet(fleet, committed, dg, boost).expect("dispatch target lies inside the committed window");
        for (&i, p) in committed.iter().zip(split) {
            setpoints[i] = p;
        }
    }
    let dg_total: f64 = setpoints.iter().sum();

    let mut bess_expected = net - dg_total;
    let (mut curtailment, mut shed, mut spill) = (0.0, 0.0, 0.0);
    if bess_expected > env.p_dis {
        shed = bess_expected - env.p_dis;
        bess_expected = env.p_dis;
    } else if bess_expected < -env.p_ch {
        let excess = -env.p_ch - bess_expected;
        curtailment = excess.min(p_pv);
        spill = excess - curtailment;
        bess_expected = -env.p_ch;
    }

    let command = DispatchCommand {
        state: next,
        setpoints,
        bess_expected,
        curtailment,
        shed,
        spill,
        p_ctrl,
        envelope: env,
        q_dg_kvar: reactive_power(dg_total, cfg.cosphi_dg),
        q_pv_kvar: reactive_power(p_pv - curtailment, cfg.cosphi_pv),
    };
    (next, command)
}
