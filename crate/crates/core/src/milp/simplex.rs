//! Dense bounded-variable simplex.
//!
//! Every row `i` of the scaled model is written as `sum_j a_ij x_j - r_i = 0`
//! where the row activity `r_i` is an ordinary bounded column. The tableau
//! therefore has `n + m` columns, no right-hand side, and the all-activity
//! basis is always a valid (possibly infeasible) starting point.
//!
//! Primal iterations use Dantzig pricing with a Bland fallback after a run of
//! degenerate pivots; phase 1 minimises the sum of bound violations of the
//! basic variables. Dual iterations are used to re-optimise after bound
//! changes during branch-and-bound.

use super::scaling::ScaledModel;

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const RECOMPUTE_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Basis snapshot used to restart a node from its parent's optimum.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Debug, Clone)]
pub(crate) struct LpState {
    m: usize,
    n: usize,
    ncols: usize,
    /// Row-major `m x ncols` tableau `B^-1 [A | -I]`.
    tab: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` for nonbasic columns.
    row_of: Vec<usize>,
    d: Vec<f64>,
    pub(crate) pivots: usize,
    since_recompute: usize,
    iteration_cap: usize,
}

fn clamp_to_bounds(lo: f64, hi: f64, prefer_upper: bool) -> f64 {
    if prefer_upper && hi.is_finite() {
        hi
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

impl LpState {
    /// Starting state with every row activity basic.
    pub(crate) fn new(sm: &ScaledModel, lo: &[f64], hi: &[f64]) -> Self {
        let basis: Vec<usize> = (0..sm.m).map(|i| sm.n + i).collect();
        let at_upper = vec![false; sm.n + sm.m];
        Self::from_basis(sm, lo, hi, &Basis { basic: basis, at_upper })
    }

    /// Rebuild the tableau for `basis` under the given structural bounds.
    pub(crate) fn from_basis(sm: &ScaledModel, lo: &[f64], hi: &[f64], basis: &Basis) -> Self {
        let m = sm.m;
        let n = sm.n;
        let ncols = n + m;
        let mut all_lo = lo.to_vec();
        let mut all_hi = hi.to_vec();
        all_lo.extend_from_slice(&sm.row_lo);
        all_hi.extend_from_slice(&sm.row_hi);
        let mut cost = sm.cost.clone();
        cost.resize(ncols, 0.0);
        let mut state = LpState {
            m,
            n,
            ncols,
            tab: vec![0.0; m * ncols],
            cost,
            lo: all_lo,
            hi: all_hi,
            x: vec![0.0; ncols],
            basis: vec![usize::MAX; m],
            row_of: vec![usize::MAX; ncols],
            d: vec![0.0; ncols],
            pivots: 0,
            since_recompute: 0,
            iteration_cap: 50 * (m + ncols) + 1000,
        };
        state.load_original(sm);
        state.factor(&basis.basic);
        for j in 0..ncols {
            if state.row_of[j] == usize::MAX {
                state.x[j] = clamp_to_bounds(state.lo[j], state.hi[j], basis.at_upper.get(j).copied().unwrap_or(false));
            }
        }
        state.recompute_basics();
        state.recompute_duals();
        state
    }

    fn load_original(&mut self, sm: &ScaledModel) {
        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in sm.rows.iter().enumerate() {
            let base = i * self.ncols;
            for &(j, a) in row {
                self.tab[base + j] += a;
            }
            self.tab[base + self.n + i] = -1.0;
        }
    }

    /// Gauss-Jordan factorisation of the original tableau onto `wanted`.
    /// Columns that turn out dependent are replaced by row activities.
    fn factor(&mut self, wanted: &[usize]) {
        let m = self.m;
        let mut assigned = vec![false; m];
        self.basis.iter_mut().for_each(|b| *b = usize::MAX);
        self.row_of.iter_mut().for_each(|r| *r = usize::MAX);
        for &col in wanted {
            if col >= self.ncols || self.row_of[col] != usize::MAX {
                continue;
            }
            let mut best = usize::MAX;
            let mut best_abs = 1e-7;
            for r in 0..m {
                if !assigned[r] {
                    let v = self.tab[r * self.ncols + col].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = r;
                    }
                }
            }
            if best != usize::MAX {
                assigned[best] = true;
                self.pivot_raw(best, col);
            }
        }
        for r in 0..m {
            if assigned[r] {
                continue;
            }
            let mut best = usize::MAX;
            let mut best_abs = 0.0;
            for col in (self.n..self.ncols).chain(0..self.n) {
                if self.row_of[col] == usize::MAX {
                    let v = self.tab[r * self.ncols + col].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = col;
                    }
                }
            }
            assigned[r] = true;
            if best != usize::MAX {
                self.pivot_raw(r, best);
            }
        }
    }

    /// Pivot the tableau only (values and reduced costs are untouched).
    fn pivot_raw(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.tab[r * nc + q];
        let inv = 1.0 / piv;
        let mut nz: Vec<usize> = Vec::new();
        {
            let row = &mut self.tab[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    nz.push(k);
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for other in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let f = other[q];
            if f != 0.0 {
                for &k in &nz {
                    other[k] -= f * prow[k];
                }
                other[q] = 0.0;
            }
        }
        let old = self.basis[r];
        if old != usize::MAX {
            self.row_of[old] = usize::MAX;
        }
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        self.pivot_raw(r, q);
        let nc = self.ncols;
        let dq = self.d[q];
        if dq != 0.0 {
            let row = &self.tab[r * nc..(r + 1) * nc];
            for (dk, &a) in self.d.iter_mut().zip(row) {
                if a != 0.0 {
                    *dk -= dq * a;
                }
            }
            self.d[q] = 0.0;
        }
        self.pivots += 1;
        self.since_recompute += 1;
        if self.since_recompute >= RECOMPUTE_EVERY {
            self.recompute_basics();
            self.recompute_duals();
        }
    }

    fn recompute_basics(&mut self) {
        let nc = self.ncols;
        for r in 0..self.m {
            let row = &self.tab[r * nc..(r + 1) * nc];
            let mut s = 0.0;
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 && self.row_of[j] == usize::MAX {
                    s -= a * self.x[j];
                }
            }
            let b = self.basis[r];
            self.x[b] = s;
        }
        self.since_recompute = 0;
    }

    fn recompute_duals(&mut self) {
        let nc = self.ncols;
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.tab[r * nc..(r + 1) * nc];
                for (dk, &a) in self.d.iter_mut().zip(row) {
                    *dk -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    pub(crate) fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    pub(crate) fn structural(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub(crate) fn structural_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo[..self.n].to_vec(), self.hi[..self.n].to_vec())
    }

    pub(crate) fn snapshot(&self) -> Basis {
        let at_upper = (0..self.ncols)
            .map(|j| self.row_of[j] == usize::MAX && self.hi[j].is_finite() && self.x[j] == self.hi[j] && self.lo[j] != self.hi[j])
            .collect();
        Basis { basic: self.basis.clone(), at_upper }
    }

    /// Change the bounds of structural column `j`, keeping basic values consistent.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if self.row_of[j] == usize::MAX {
            let old = self.x[j];
            let new = if old < lo {
                lo
            } else if old > hi {
                hi
            } else if !old.is_finite() {
                clamp_to_bounds(lo, hi, false)
            } else {
                old
            };
            let delta = new - old;
            if delta != 0.0 {
                self.x[j] = new;
                let nc = self.ncols;
                for r in 0..self.m {
                    let a = self.tab[r * nc + j];
                    if a != 0.0 {
                        let b = self.basis[r];
                        self.x[b] -= a * delta;
                    }
                }
            }
        }
    }

    fn infeasibility(&self, col: usize) -> f64 {
        let v = self.x[col];
        if v < self.lo[col] - PRIMAL_TOL {
            self.lo[col] - v
        } else if v > self.hi[col] + PRIMAL_TOL {
            v - self.hi[col]
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        self.basis.iter().any(|&b| self.infeasibility(b) > 0.0)
    }

    fn dual_feasible(&self) -> bool {
        (0..self.ncols).all(|j| {
            if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
                return true;
            }
            let dj = self.d[j];
            let at_lo = self.lo[j].is_finite() && self.x[j] <= self.lo[j];
            let at_hi = self.hi[j].is_finite() && self.x[j] >= self.hi[j];
            match (at_lo, at_hi) {
                (true, false) => dj >= -DUAL_TOL * 10.0,
                (false, true) => dj <= DUAL_TOL * 10.0,
                (true, true) => true,
                (false, false) => dj.abs() <= DUAL_TOL * 10.0,
            }
        })
    }

    /// Choose an entering column for reduced costs `dvec`; returns (column, direction).
    fn price(&self, dvec: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = dvec[j];
            let can_up = self.x[j] < self.hi[j] - PRIMAL_TOL;
            let can_down = self.x[j] > self.lo[j] + PRIMAL_TOL;
            let dir = if dj < -DUAL_TOL && can_up {
                1.0
            } else if dj > DUAL_TOL && can_down {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal simplex from the current basis (phase 1 as needed).
    pub(crate) fn solve_primal(&mut self) -> LpStatus {
        let mut degenerate = 0usize;
        let mut iterations = 0usize;
        let mut verified = 0usize;
        let mut phase1_d = vec![0.0; self.ncols];
        loop {
            iterations += 1;
            if iterations > self.iteration_cap {
                return LpStatus::IterationLimit;
            }
            let phase1 = self.primal_infeasible();
            if phase1 {
                self.phase1_costs(&mut phase1_d);
            }
            let bland = degenerate > DEGENERATE_RUN;
            let entering = if phase1 { self.price(&phase1_d, bland) } else { self.price(&self.d, bland) };
            let Some((q, dir)) = entering else {
                // Confirm with fresh values before declaring the outcome.
                if verified < 2 && self.pivots > 0 {
                    verified += 1;
                    self.refresh();
                    continue;
                }
                return if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
            };
            let Some((theta, leave)) = self.ratio_test(q, dir, phase1, bland) else {
                if phase1 {
                    // Cannot happen for a bounded violation sum; refresh and retry once.
                    if verified < 2 {
                        verified += 1;
                        self.refresh();
                        continue;
                    }
                    return LpStatus::Infeasible;
                }
                return LpStatus::Unbounded;
            };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.apply_step(q, dir, theta);
            if let Some((r, bound)) = leave {
                let b = self.basis[r];
                self.x[b] = bound;
                self.pivot(r, q);
            }
        }
    }

    fn refresh(&mut self) {
        self.recompute_basics();
        self.recompute_duals();
    }

    fn phase1_costs(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let nc = self.ncols;
        for r in 0..self.m {
            let b = self.basis[r];
            let v = self.x[b];
            let c = if v < self.lo[b] - PRIMAL_TOL {
                -1.0
            } else if v > self.hi[b] + PRIMAL_TOL {
                1.0
            } else {
                continue;
            };
            let row = &self.tab[r * nc..(r + 1) * nc];
            for (o, &a) in out.iter_mut().zip(row) {
                if a != 0.0 {
                    *o -= c * a;
                }
            }
        }
        for &b in &self.basis {
            out[b] = 0.0;
        }
    }

    /// Two-pass (Harris) ratio test. Returns the step length and, unless the
    /// entering column just flips bounds, the leaving row with its target bound.
    fn ratio_test(&self, q: usize, dir: f64, phase1: bool, bland: bool) -> Option<(f64, Option<(usize, f64)>)> {
        let nc = self.ncols;
        let flip = self.hi[q] - self.lo[q];
        // Per row: (limit with tolerance, exact limit, bound reached, |alpha|)
        let mut candidates: Vec<(usize, f64, f64, f64)> = Vec::new();
        let mut relaxed_min = f64::INFINITY;
        for r in 0..self.m {
            let a = self.tab[r * nc + q];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let alpha = -a * dir;
            let b = self.basis[r];
            let v = self.x[b];
            let (lo, hi) = (self.lo[b], self.hi[b]);
            let below = phase1 && v < lo - PRIMAL_TOL;
            let above = phase1 && v > hi + PRIMAL_TOL;
            let target = if alpha > 0.0 {
                if above {
                    continue;
                }
                if below {
                    lo
                } else {
                    hi
                }
            } else {
                if below {
                    continue;
                }
                if above {
                    hi
                } else {
                    lo
                }
            };
            if !target.is_finite() {
                continue;
            }
            let exact = ((target - v) / alpha).max(0.0);
            let relaxed = ((target - v + alpha.signum() * PRIMAL_TOL) / alpha).max(0.0);
            relaxed_min = relaxed_min.min(relaxed);
            candidates.push((r, exact, target, alpha.abs()));
        }
        if candidates.is_empty() {
            return flip.is_finite().then_some((flip, None));
        }
        if flip <= relaxed_min {
            return Some((flip, None));
        }
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for &(r, exact, target, mag) in &candidates {
            if exact > relaxed_min {
                continue;
            }
            let better = match best {
                None => true,
                Some((br, _, _, bmag)) => {
                    if bland {
                        self.basis[r] < self.basis[br]
                    } else {
                        mag > bmag
                    }
                }
            };
            if better {
                best = Some((r, exact, target, mag));
            }
        }
        let (r, exact, target, _) = best?;
        if flip.is_finite() && flip <= exact {
            return Some((flip, None));
        }
        Some((exact, Some((r, target))))
    }

    fn apply_step(&mut self, q: usize, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let nc = self.ncols;
        self.x[q] += dir * theta;
        for r in 0..self.m {
            let a = self.tab[r * nc + q];
            if a != 0.0 {
                let b = self.basis[r];
                self.x[b] -= a * dir * theta;
            }
        }
    }

    /// Dual simplex from a dual-feasible basis; falls back to primal otherwise.
    pub(crate) fn solve_dual(&mut self) -> LpStatus {
        if !self.dual_feasible() {
            return self.solve_primal();
        }
        let nc = self.ncols;
        let mut iterations = 0usize;
        loop {
            iterations += 1;
            if iterations > self.iteration_cap {
                return self.solve_primal();
            }
            let mut leave = usize::MAX;
            let mut worst = 0.0;
            for r in 0..self.m {
                let inf = self.infeasibility(self.basis[r]);
                if inf > worst {
                    worst = inf;
                    leave = r;
                }
            }
            if leave == usize::MAX {
                // Primal feasible; let the primal pass confirm optimality.
                return self.solve_primal();
            }
            let b = self.basis[leave];
            let v = self.x[b];
            let increase = v < self.lo[b];
            let target = if increase { self.lo[b] } else { self.hi[b] };
            let row = &self.tab[leave * nc..(leave + 1) * nc];
            let mut relaxed_min = f64::INFINITY;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..nc {
                if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
                    continue;
                }
                let a = row[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let at_lo = self.lo[j].is_finite() && self.x[j] <= self.lo[j];
                let at_hi = self.hi[j].is_finite() && self.x[j] >= self.hi[j];
                let free = !at_lo && !at_hi;
                // Sign of the entering step that moves the leaving value toward target.
                let step_sign = if increase { -a.signum() } else { a.signum() };
                let ok = free || (at_lo && step_sign > 0.0) || (at_hi && step_sign < 0.0);
                if !ok {
                    continue;
                }
                let dj = self.d[j];
                let exact = dj.abs() / a.abs();
                let relaxed = (dj.abs() + DUAL_TOL) / a.abs();
                relaxed_min = relaxed_min.min(relaxed);
                cands.push((j, exact, a.abs()));
            }
            let mut best: Option<(usize, f64)> = None;
            for &(j, exact, mag) in &cands {
                if exact > relaxed_min {
                    continue;
                }
                if best.map_or(true, |(_, bm)| mag > bm) {
                    best = Some((j, mag));
                }
            }
            let Some((q, _)) = best else {
                return LpStatus::Infeasible;
            };
            let a = self.tab[leave * nc + q];
            let delta = (target - v) / (-a);
            self.x[q] += delta;
            for r in 0..self.m {
                let ar = self.tab[r * nc + q];
                if ar != 0.0 {
                    let br = self.basis[r];
                    self.x[br] -= ar * delta;
                }
            }
            self.x[b] = target;
            self.pivot(leave, q);
        }
    }
}
