use super::model::{MilpModel, Relation};

/// Coefficient spread before and after equilibration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalingReport {
    /// max |a_ij| / min |a_ij| over nonzero constraint coefficients, unscaled.
    pub spread_before: f64,
    pub spread_after: f64,
}

/// Row/column equilibrated copy of a model in `sum a x - r = 0` form.
///
/// Scale factors are powers of two so that integral structural values stay
/// exactly representable after unscaling.
#[derive(Debug, Clone)]
pub(crate) struct ScaledModel {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub cost: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub cost_scale: f64,
    pub report: ScalingReport,
}

fn pow2(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        1.0
    } else {
        2f64.powi(x.log2().round() as i32)
    }
}

fn spread(rows: &[Vec<(usize, f64)>]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for row in rows {
        for &(_, a) in row {
            let a = a.abs();
            if a > 0.0 {
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
    }
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

impl ScaledModel {
    pub(crate) fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut rows: Vec<Vec<(usize, f64)>> = model
            .constraints
            .iter()
            .map(|c| c.coeffs.iter().copied().filter(|&(_, a)| a != 0.0).collect())
            .collect();
        let spread_before = spread(&rows);
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];

        for _ in 0..6 {
            for (i, row) in rows.iter_mut().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &(_, a) in row.iter() {
                    lo = lo.min(a.abs());
                    hi = hi.max(a.abs());
                }
                if hi > 0.0 {
                    let s = pow2(1.0 / (lo * hi).sqrt());
                    row_scale[i] *= s;
                    for e in row.iter_mut() {
                        e.1 *= s;
                    }
                }
            }
            let mut col_lo = vec![f64::INFINITY; n];
            let mut col_hi = vec![0.0f64; n];
            for row in &rows {
                for &(j, a) in row {
                    col_lo[j] = col_lo[j].min(a.abs());
                    col_hi[j] = col_hi[j].max(a.abs());
                }
            }
            let step: Vec<f64> = (0..n)
                .map(|j| if col_hi[j] > 0.0 { pow2(1.0 / (col_lo[j] * col_hi[j]).sqrt()) } else { 1.0 })
                .collect();
            for row in rows.iter_mut() {
                for e in row.iter_mut() {
                    e.1 *= step[e.0];
                }
            }
            for j in 0..n {
                col_scale[j] *= step[j];
            }
        }

        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        for (i, c) in model.constraints.iter().enumerate() {
            let b = c.rhs * row_scale[i];
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, b),
                Relation::Ge => (b, f64::INFINITY),
                Relation::Eq => (b, b),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }

        let raw_cost: Vec<f64> = (0..n).map(|j| model.objective[j] * col_scale[j]).collect();
        let cmax = raw_cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let cost_scale = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        let cost = raw_cost.iter().map(|c| c * cost_scale).collect();

        let spread_after = spread(&rows);
        ScaledModel {
            m,
            n,
            rows,
            row_lo,
            row_hi,
            cost,
            col_scale,
            cost_scale,
            report: ScalingReport { spread_before, spread_after },
        }
    }

    /// Structural bounds in scaled units.
    pub(crate) fn scale_bounds(&self, lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = lower.iter().zip(&self.col_scale).map(|(l, s)| l / s).collect();
        let hi = upper.iter().zip(&self.col_scale).map(|(u, s)| u / s).collect();
        (lo, hi)
    }

    pub(crate) fn unscale(&self, scaled: &[f64]) -> Vec<f64> {
        scaled.iter().zip(&self.col_scale).map(|(x, s)| x * s).collect()
    }
}
