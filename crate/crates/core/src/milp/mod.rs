//! Mixed-integer linear programming.
//!
//! [`MilpModel`] holds a sparse minimisation problem. [`solve_lp`] solves its
//! continuous relaxation with a dense bounded-variable simplex after
//! power-of-two row/column equilibration; [`solve_milp`] wraps that in a
//! deterministic branch-and-bound:
//!
//! * branching variable: most fractional integer variable among those of the
//!   highest branching priority, ties broken by the lowest index;
//! * the floor child is always explored first, and is re-optimised in place
//!   with dual simplex (a plunge) while the ceiling child is queued;
//! * queued nodes are taken best-first by their parent's relaxation bound, ties
//!   newest first;
//! * every new incumbent is polished by fixing its integer variables and
//!   re-solving the remaining LP.
//!
//! No cutting planes or presolve are applied.

mod branch;
mod lpformat;
mod model;
mod scaling;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{Constraint, Integrality, MilpModel, Relation, Var};
pub use scaling::ScalingReport;

use scaling::ScaledModel;
use simplex::{LpState, LpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Search completed; the incumbent is within `relative_gap` of the optimum.
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped by the time limit before the gap target was met.
    GapLimit,
    /// Stopped by the node limit before the gap target was met.
    NodeLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::GapLimit => "gap_limit",
            SolveStatus::NodeLimit => "node_limit",
        })
    }
}

impl SolveStatus {
    /// True when `values` hold a feasible assignment.
    pub fn has_solution(self, sol: &MilpSolution) -> bool {
        match self {
            SolveStatus::Optimal => true,
            SolveStatus::GapLimit | SolveStatus::NodeLimit => !sol.values.is_empty(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub relative_gap: f64,
    pub node_limit: u64,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    /// Keep a per-node log in the solution (for diagnostics and tests).
    #[serde(skip)]
    pub record_nodes: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            integrality_tol: 1e-6,
            relative_gap: 1e-4,
            node_limit: 1_000_000,
            time_limit: None,
            record_nodes: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("feasibility_tol", self.feasibility_tol),
            ("integrality_tol", self.integrality_tol),
            ("relative_gap", self.relative_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a positive finite number, got {v}"));
            }
        }
        if self.node_limit == 0 {
            return Err("node_limit must be at least 1".into());
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(format!("time_limit must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

/// One solved branch-and-bound node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLog {
    pub id: u64,
    pub parent: Option<u64>,
    pub parent_bound: f64,
    /// Relaxation objective, or `+inf` when the node LP was infeasible.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    /// Relative optimality gap of the incumbent (0 for pure LPs).
    pub gap: f64,
    pub nodes_explored: u64,
    pub simplex_pivots: u64,
    pub scaling: ScalingReport,
    pub node_log: Vec<NodeLog>,
}

impl MilpSolution {
    fn without_values(status: SolveStatus, nodes: u64, scaling: ScalingReport) -> Self {
        let objective_value = match status {
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        MilpSolution {
            status,
            objective_value,
            values: Vec::new(),
            gap: f64::INFINITY,
            nodes_explored: nodes,
            simplex_pivots: 0,
            scaling,
            node_log: Vec::new(),
        }
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.0]
    }
}

/// Solve the continuous relaxation of `model` (integrality marks are ignored).
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    solve_lp_with(model, &SolveOptions::default())
}

pub fn solve_lp_with(model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let sm = ScaledModel::new(model);
    let (lo, hi) = sm.scale_bounds(&model.lower, &model.upper);
    let mut state = LpState::new(&sm, &lo, &hi);
    let status = finish_lp(&sm, model, &mut state, opts.feasibility_tol, false)?;
    let mut sol = match status {
        LpStatus::Optimal => {
            let values = sm.unscale(state.structural());
            MilpSolution {
                status: SolveStatus::Optimal,
                objective_value: model.evaluate(&values),
                values,
                gap: 0.0,
                nodes_explored: 1,
                simplex_pivots: 0,
                scaling: sm.report,
                node_log: Vec::new(),
            }
        }
        LpStatus::Infeasible => MilpSolution::without_values(SolveStatus::Infeasible, 1, sm.report),
        LpStatus::Unbounded => MilpSolution::without_values(SolveStatus::Unbounded, 1, sm.report),
        LpStatus::IterationLimit => unreachable!("finish_lp maps iteration limits to errors"),
    };
    sol.simplex_pivots = state.pivots as u64;
    Ok(sol)
}

/// Run the simplex on `state` and, when it reports optimal, re-factor and
/// re-optimise until the unscaled point meets `feas_tol` (bounded retries).
pub(crate) fn finish_lp(sm: &ScaledModel, model: &MilpModel, state: &mut LpState, feas_tol: f64, dual: bool) -> Result<LpStatus, MilpError> {
    let mut status = if dual { state.solve_dual() } else { state.solve_primal() };
    for _ in 0..3 {
        match status {
            LpStatus::IterationLimit => {
                let (lo, hi) = state_bounds(state);
                let pivots = state.pivots;
                *state = LpState::from_basis(sm, &lo, &hi, &state.snapshot());
                state.pivots = pivots;
                status = state.solve_primal();
            }
            LpStatus::Optimal => {
                let values = sm.unscale(state.structural());
                if bounded_violation(sm, model, state, &values) <= feas_tol {
                    return Ok(LpStatus::Optimal);
                }
                let (lo, hi) = state_bounds(state);
                let pivots = state.pivots;
                *state = LpState::from_basis(sm, &lo, &hi, &state.snapshot());
                state.pivots = pivots;
                status = state.solve_primal();
            }
            other => return Ok(other),
        }
    }
    match status {
        LpStatus::IterationLimit => Err(MilpError::Numerical("simplex iteration limit reached".into())),
        other => Ok(other),
    }
}

fn state_bounds(state: &LpState) -> (Vec<f64>, Vec<f64>) {
    state.structural_bounds()
}

/// Row violations of `values` plus violations of the node bounds held in `state`.
pub(crate) fn bounded_violation(sm: &ScaledModel, model: &MilpModel, state: &LpState, values: &[f64]) -> f64 {
    let (lo, hi) = state.structural_bounds();
    let mut worst: f64 = 0.0;
    for (j, &x) in values.iter().enumerate() {
        let s = sm.col_scale[j];
        worst = worst.max(lo[j] * s - x).max(x - hi[j] * s);
    }
    for c in &model.constraints {
        worst = worst.max(c.violation(values));
    }
    worst
}

/// Solve `model` to optimality (within `opts.relative_gap`) by branch-and-bound.
pub fn solve_milp(model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    opts.validate().map_err(MilpError::InvalidModel)?;
    branch::branch_and_bound(model, opts)
}

impl MilpModel {
    /// Plain-text dump in an LP-format-like grammar (see [`lpformat`]).
    pub fn to_lp_string(&self) -> String {
        lpformat::write(self)
    }
}

#[cfg(test)]
mod tests;
