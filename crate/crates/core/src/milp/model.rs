use std::fmt;

use super::MilpError;

/// Kind of value a variable may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrality {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Index of a variable inside a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: Option<String>,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A minimisation problem over bounded variables with linear rows.
///
/// Variables are added with [`MilpModel::add_var`]; rows reference them by
/// [`Var`] handle. The model is plain data and can be cloned and edited
/// freely (the sizing code fixes bounds on a copy to evaluate candidates).
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integrality: Vec<Integrality>,
    pub var_names: Vec<Option<String>>,
    pub constraints: Vec<Constraint>,
    /// Constant added to the reported objective.
    pub objective_offset: f64,
    /// Branching priority per variable; missing entries count as 0.
    pub branch_priority: Vec<i32>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: Integrality, lower: f64, upper: f64, cost: f64) -> Var {
        let (lower, upper) = match kind {
            Integrality::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integrality.push(kind);
        self.var_names.push(Some(name.into()));
        Var(self.objective.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> Var {
        self.add_var(name, Integrality::Continuous, lower, upper, cost)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: &[(Var, f64)], relation: Relation, rhs: f64) -> usize {
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(v, a) in terms {
            if a == 0.0 {
                continue;
            }
            match coeffs.iter_mut().find(|(j, _)| *j == v.0) {
                Some(entry) => entry.1 += a,
                None => coeffs.push((v.0, a)),
            }
        }
        self.constraints.push(Constraint { coeffs, relation, rhs, name: Some(name.into()) });
        self.constraints.len() - 1
    }

    pub fn set_bounds(&mut self, v: Var, lower: f64, upper: f64) {
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
    }

    /// Branch-and-bound branches on a fractional variable of the highest
    /// priority present before any lower one.
    pub fn set_branch_priority(&mut self, v: Var, priority: i32) {
        if self.branch_priority.len() <= v.0 {
            self.branch_priority.resize(self.num_vars(), 0);
        }
        self.branch_priority[v.0] = priority;
    }

    pub fn priority(&self, j: usize) -> i32 {
        self.branch_priority.get(j).copied().unwrap_or(0)
    }

    pub fn set_cost(&mut self, v: Var, cost: f64) {
        self.objective[v.0] = cost;
    }

    pub fn var_label(&self, j: usize) -> String {
        match self.var_names.get(j).and_then(|n| n.as_deref()) {
            Some(n) => n.to_string(),
            None => format!("x{j}"),
        }
    }

    pub fn row_label(&self, i: usize) -> String {
        match self.constraints.get(i).and_then(|c| c.name.as_deref()) {
            Some(n) => n.to_string(),
            None => format!("r{i}"),
        }
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integrality[j] != Integrality::Continuous
    }

    /// Objective value of a full assignment, including the constant offset.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum::<f64>() + self.objective_offset
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &x) in values.iter().enumerate() {
            worst = worst.max(self.lower[j] - x).max(x - self.upper[j]);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        worst
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.integrality.len() != n || self.var_names.len() != n {
            return Err(MilpError::InvalidModel("per-variable vectors have inconsistent lengths".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || !self.objective[j].is_finite() {
                return Err(MilpError::InvalidModel(format!("variable {}: NaN bound or non-finite cost", self.var_label(j))));
            }
            if lo > hi {
                return Err(MilpError::InvalidModel(format!("variable {}: lower bound {lo} exceeds upper bound {hi}", self.var_label(j))));
            }
            if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(MilpError::InvalidModel(format!("variable {}: bound at the wrong infinity", self.var_label(j))));
            }
            if self.integrality[j] == Integrality::Binary && (lo < 0.0 || hi > 1.0) {
                return Err(MilpError::InvalidModel(format!("variable {}: binary with bounds outside [0, 1]", self.var_label(j))));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(MilpError::InvalidModel(format!("row {}: non-finite right-hand side", self.row_label(i))));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(MilpError::InvalidModel(format!("row {}: variable index {j} out of range ({n} variables)", self.row_label(i))));
                }
                if !a.is_finite() {
                    return Err(MilpError::InvalidModel(format!("row {}: non-finite coefficient on {}", self.row_label(i), self.var_label(j))));
                }
            }
        }
        Ok(())
    }
}
