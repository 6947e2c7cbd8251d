use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::scaling::ScaledModel;
use super::simplex::{Basis, LpState, LpStatus};
use super::{bounded_violation, finish_lp, MilpError, MilpModel, MilpSolution, NodeLog, SolveOptions, SolveStatus};

struct OpenNode {
    bound: f64,
    seq: u64,
    parent: u64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Basis,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // BinaryHeap is a max-heap: invert so the smallest bound (then newest) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| self.seq.cmp(&other.seq))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

struct Search<'a> {
    model: &'a MilpModel,
    sm: ScaledModel,
    opts: &'a SolveOptions,
    incumbent: Option<Incumbent>,
    nodes: u64,
    pivots: u64,
    log: Vec<NodeLog>,
    /// Smallest relaxation bound among pruned nodes.
    pruned_bound: f64,
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if incumbent <= bound {
        return 0.0;
    }
    (incumbent - bound) / incumbent.abs().max(1e-9)
}

impl<'a> Search<'a> {
    fn objective_of(&self, state: &LpState) -> f64 {
        state.objective() / self.sm.cost_scale + self.model.objective_offset
    }

    fn can_prune(&mut self, bound: f64) -> bool {
        let prune = match &self.incumbent {
            Some(inc) => bound >= inc.objective - (self.opts.relative_gap * inc.objective.abs()).max(1e-9),
            None => false,
        };
        if prune {
            self.pruned_bound = self.pruned_bound.min(bound);
        }
        prune
    }

    /// Most fractional integer variable (original units) of the highest
    /// priority that has one, ties by lowest index.
    fn branching_candidate(&self, state: &LpState) -> Option<(usize, f64)> {
        let xs = state.structural();
        let mut best: Option<(i32, f64, usize, f64)> = None;
        for j in 0..self.model.num_vars() {
            if !self.model.is_integer(j) {
                continue;
            }
            let v = xs[j] * self.sm.col_scale[j];
            let dist = (v - v.round()).abs();
            if dist <= self.opts.integrality_tol {
                continue;
            }
            let p = self.model.priority(j);
            if best.is_none_or(|(bp, bd, _, _)| p > bp || (p == bp && dist > bd)) {
                best = Some((p, dist, j, v));
            }
        }
        best.map(|(_, _, j, v)| (j, v))
    }

    /// Fix the integers of an integral node, re-solve the remaining LP, and
    /// keep the result if it improves the incumbent.
    fn accept_integral(&mut self, state: &LpState) -> Result<(), MilpError> {
        let mut polished = state.clone();
        for j in 0..self.model.num_vars() {
            if self.model.is_integer(j) {
                let v = (polished.structural()[j] * self.sm.col_scale[j]).round();
                let s = v / self.sm.col_scale[j];
                polished.set_bounds(j, s, s);
            }
        }
        let status = finish_lp(&self.sm, self.model, &mut polished, self.opts.feasibility_tol, true)?;
        self.pivots += (polished.pivots.saturating_sub(state.pivots)) as u64;
        let chosen = if status == LpStatus::Optimal { &polished } else { state };
        let mut values = self.sm.unscale(chosen.structural());
        for (j, v) in values.iter_mut().enumerate() {
            if self.model.is_integer(j) {
                *v = v.round();
            }
        }
        if status != LpStatus::Optimal && bounded_violation(&self.sm, self.model, state, &values) > self.opts.feasibility_tol {
            // Rounded point is not usable; leave the incumbent unchanged.
            return Ok(());
        }
        let objective = self.model.evaluate(&values);
        if self.incumbent.as_ref().map_or(true, |inc| objective < inc.objective) {
            self.incumbent = Some(Incumbent { objective, values });
        }
        Ok(())
    }
}

pub(super) fn branch_and_bound(model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let sm = ScaledModel::new(model);
    let report = sm.report;
    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();
    for j in 0..model.num_vars() {
        if model.is_integer(j) {
            lower[j] = (lower[j] - opts.integrality_tol).ceil();
            upper[j] = (upper[j] + opts.integrality_tol).floor();
            if lower[j] > upper[j] {
                return Ok(MilpSolution::without_values(SolveStatus::Infeasible, 0, report));
            }
        }
    }
    let (root_lo, root_hi) = sm.scale_bounds(&lower, &upper);
    let mut search = Search { model, sm, opts, incumbent: None, nodes: 0, pivots: 0, log: Vec::new(), pruned_bound: f64::INFINITY };

    let mut state = LpState::new(&search.sm, &root_lo, &root_hi);
    let status = finish_lp(&search.sm, model, &mut state, opts.feasibility_tol, false)?;
    search.nodes = 1;
    search.pivots = state.pivots as u64;
    match status {
        LpStatus::Infeasible => return Ok(MilpSolution::without_values(SolveStatus::Infeasible, 1, report)),
        LpStatus::Unbounded => return Ok(MilpSolution::without_values(SolveStatus::Unbounded, 1, report)),
        _ => {}
    }

    let mut heap: BinaryHeap<OpenNode> = BinaryHeap::new();
    let mut seq: u64 = 0;
    // The node being plunged: (state, bounds, id, parent id, parent bound).
    let mut current = Some((state, root_lo.clone(), root_hi.clone(), 0u64, None::<u64>, f64::NEG_INFINITY));
    let mut stopped: Option<SolveStatus> = None;

    loop {
        if let Some((mut state, lo, mut hi, id, parent, parent_bound)) = current.take() {
            let bound = search.objective_of(&state);
            if opts.record_nodes {
                search.log.push(NodeLog { id, parent, parent_bound, bound });
            }
            if search.can_prune(bound) {
                continue;
            }
            match search.branching_candidate(&state) {
                None => search.accept_integral(&state)?,
                Some((j, v)) => {
                    let scale = search.sm.col_scale[j];
                    let floor = v.floor();
                    let ceil = floor + 1.0;

                    let mut ceil_lo = lo.clone();
                    ceil_lo[j] = ceil / scale;
                    seq += 1;
                    heap.push(OpenNode { bound, seq, parent: id, lo: ceil_lo, hi: hi.clone(), basis: state.snapshot() });

                    if search.nodes >= opts.node_limit {
                        stopped = Some(SolveStatus::NodeLimit);
                        break;
                    }
                    if opts.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t) {
                        stopped = Some(SolveStatus::GapLimit);
                        break;
                    }
                    hi[j] = floor / scale;
                    let before = state.pivots;
                    state.set_bounds(j, lo[j], hi[j]);
                    let st = finish_lp(&search.sm, model, &mut state, opts.feasibility_tol, true)?;
                    search.nodes += 1;
                    search.pivots += state.pivots.saturating_sub(before) as u64;
                    seq += 1;
                    if st == LpStatus::Optimal {
                        current = Some((state, lo, hi, seq, Some(id), bound));
                    } else if opts.record_nodes {
                        search.log.push(NodeLog { id: seq, parent: Some(id), parent_bound: bound, bound: f64::INFINITY });
                    }
                }
            }
            continue;
        }

        let Some(node) = heap.pop() else { break };
        if search.can_prune(node.bound) {
            // Heap order means every remaining node is pruned as well.
            heap.clear();
            break;
        }
        if search.nodes >= opts.node_limit {
            heap.push(node);
            stopped = Some(SolveStatus::NodeLimit);
            break;
        }
        if opts.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t) {
            heap.push(node);
            stopped = Some(SolveStatus::GapLimit);
            break;
        }
        let mut state = LpState::from_basis(&search.sm, &node.lo, &node.hi, &node.basis);
        let st = finish_lp(&search.sm, model, &mut state, opts.feasibility_tol, true)?;
        search.nodes += 1;
        search.pivots += state.pivots as u64;
        if st == LpStatus::Optimal {
            current = Some((state, node.lo, node.hi, node.seq, Some(node.parent), node.bound));
        } else if opts.record_nodes {
            search.log.push(NodeLog { id: node.seq, parent: Some(node.parent), parent_bound: node.bound, bound: f64::INFINITY });
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(search.pruned_bound, f64::min);
    let Search { incumbent, nodes, pivots, log, .. } = search;
    let status = stopped.unwrap_or(SolveStatus::Optimal);
    let mut sol = match incumbent {
        Some(inc) => {
            let gap = relative_gap(inc.objective, open_bound);
            MilpSolution {
                status,
                objective_value: inc.objective,
                values: inc.values,
                gap,
                nodes_explored: nodes,
                simplex_pivots: 0,
                scaling: report,
                node_log: Vec::new(),
            }
        }
        None if status == SolveStatus::Optimal => MilpSolution::without_values(SolveStatus::Infeasible, nodes, report),
        None => MilpSolution::without_values(status, nodes, report),
    };
    sol.simplex_pivots = pivots;
    sol.node_log = log;
    Ok(sol)
}
