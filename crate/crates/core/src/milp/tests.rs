use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn opts() -> SolveOptions {
    SolveOptions { relative_gap: 1e-9, ..SolveOptions::default() }
}

#[test]
fn single_variable_bounded_by_row() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 10.0, -1.0);
    m.add_constraint("cap", &[(x, 1.0)], Relation::Le, 3.0);
    let sol = solve_lp(&m).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) - 3.0).abs() < 1e-9);
    assert!((sol.objective_value + 3.0).abs() < 1e-9);
}

#[test]
fn origin_is_optimal() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY, 1.0);
    let y = m.add_continuous("y", 0.0, f64::INFINITY, 1.0);
    m.add_constraint("sum", &[(x, 1.0), (y, 1.0)], Relation::Ge, 0.0);
    let sol = solve_lp(&m).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.objective_value.abs() < 1e-12);
}

#[test]
fn unbounded_ray_is_reported() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY, -1.0);
    m.add_constraint("pos", &[(x, 1.0)], Relation::Ge, 0.0);
    assert_eq!(solve_lp(&m).unwrap().status, SolveStatus::Unbounded);

    let mut bare = MilpModel::new();
    bare.add_continuous("x", 0.0, f64::INFINITY, -1.0);
    assert_eq!(solve_lp(&bare).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn infeasible_lp_is_reported() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 1.0, 1.0);
    m.add_constraint("too_big", &[(x, 1.0)], Relation::Ge, 2.0);
    assert_eq!(solve_lp(&m).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn equality_and_free_variables() {
    // min x - y  s.t.  x + y = 4, x - y >= -2, x, y free
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY, -1.0);
    m.add_constraint("sum", &[(x, 1.0), (y, 1.0)], Relation::Eq, 4.0);
    m.add_constraint("diff", &[(x, 1.0), (y, -1.0)], Relation::Ge, -2.0);
    let sol = solve_lp(&m).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) - 1.0).abs() < 1e-9);
    assert!((sol.value(y) - 3.0).abs() < 1e-9);
    assert!((sol.objective_value + 2.0).abs() < 1e-9);
}

#[test]
fn reported_objective_matches_values() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 7.5, -3.0);
    let y = m.add_continuous("y", -2.0, 4.0, 2.0);
    m.add_constraint("a", &[(x, 2.0), (y, 1.0)], Relation::Le, 9.0);
    m.add_constraint("b", &[(x, 1.0), (y, -1.0)], Relation::Ge, 1.0);
    m.objective_offset = 10.0;
    let sol = solve_lp(&m).unwrap();
    let recomputed: f64 = m.objective.iter().zip(&sol.values).map(|(c, v)| c * v).sum::<f64>() + 10.0;
    assert!((sol.objective_value - recomputed).abs() <= 1e-9 * recomputed.abs().max(1.0));
    assert!(m.max_violation(&sol.values) <= 1e-6);
}

#[test]
fn malformed_models_name_the_offender() {
    let mut m = MilpModel::new();
    m.add_continuous("p_load", 5.0, 1.0, 0.0);
    let err = solve_lp(&m).unwrap_err();
    assert!(matches!(&err, MilpError::InvalidModel(msg) if msg.contains("p_load")), "{err}");

    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 1.0, 0.0);
    m.add_constraint("balance[3]", &[(x, 1.0)], Relation::Le, 1.0);
    m.constraints[0].coeffs.push((7, 1.0));
    let err = solve_lp(&m).unwrap_err();
    assert!(matches!(&err, MilpError::InvalidModel(msg) if msg.contains("balance[3]")), "{err}");

    let mut m = MilpModel::new();
    let b = m.add_var("u", Integrality::Binary, 0.0, 1.0, 0.0);
    m.set_bounds(b, 0.0, 2.0);
    assert!(solve_milp(&m, &opts()).is_err());
}

#[test]
fn binary_pinned_to_half_is_infeasible() {
    let mut m = MilpModel::new();
    let x = m.add_var("x", Integrality::Binary, 0.0, 1.0, 1.0);
    m.add_constraint("half", &[(x, 1.0)], Relation::Eq, 0.5);
    let sol = solve_milp(&m, &opts()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn integral_relaxation_finishes_at_root() {
    // Assignment-like polytope: totally unimodular, LP optimum is integral.
    let mut m = MilpModel::new();
    let costs = [[4.0, 1.0], [2.0, 3.0]];
    let mut x = Vec::new();
    for (i, row) in costs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            x.push(m.add_var(format!("x{i}{j}"), Integrality::Binary, 0.0, 1.0, c));
        }
    }
    m.add_constraint("r0", &[(x[0], 1.0), (x[1], 1.0)], Relation::Eq, 1.0);
    m.add_constraint("r1", &[(x[2], 1.0), (x[3], 1.0)], Relation::Eq, 1.0);
    m.add_constraint("c0", &[(x[0], 1.0), (x[2], 1.0)], Relation::Eq, 1.0);
    m.add_constraint("c1", &[(x[1], 1.0), (x[3], 1.0)], Relation::Eq, 1.0);
    let sol = solve_milp(&m, &opts()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.nodes_explored, 1);
    assert!((sol.objective_value - 3.0).abs() < 1e-9);
}

fn knapsack(seed: u64, items: usize) -> (MilpModel, Vec<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..items).map(|_| rng.random_range(1..=30) as f64).collect();
    let values: Vec<f64> = (0..items).map(|_| rng.random_range(1..=40) as f64).collect();
    let capacity = weights.iter().sum::<f64>() * 0.4;
    let mut m = MilpModel::new();
    let vars: Vec<Var> = (0..items).map(|i| m.add_var(format!("take{i}"), Integrality::Binary, 0.0, 1.0, -values[i])).collect();
    let terms: Vec<(Var, f64)> = vars.iter().zip(&weights).map(|(&v, &w)| (v, w)).collect();
    m.add_constraint("capacity", &terms, Relation::Le, capacity);
    (m, weights, values, capacity)
}

#[test]
fn knapsack_matches_exhaustive_enumeration() {
    let (m, w, v, cap) = knapsack(7, 10);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << 10) {
        let (mut wt, mut val) = (0.0, 0.0);
        for i in 0..10 {
            if mask & (1 << i) != 0 {
                wt += w[i];
                val += v[i];
            }
        }
        if wt <= cap {
            best = best.max(val);
        }
    }
    let sol = solve_milp(&m, &opts()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective_value + best).abs() < 1e-6, "{} vs {}", sol.objective_value, -best);
}

#[test]
fn child_bounds_never_decrease() {
    for seed in 0..5 {
        let (m, ..) = knapsack(100 + seed, 12);
        let sol = solve_milp(&m, &SolveOptions { record_nodes: true, ..opts() }).unwrap();
        assert!(sol.node_log.len() > 1);
        for node in &sol.node_log {
            if node.parent.is_some() {
                assert!(node.bound >= node.parent_bound - 1e-9 * node.parent_bound.abs().max(1.0), "{node:?}");
            }
        }
    }
}

#[test]
fn general_integers_branch_on_bounds() {
    // max 5x + 4y  s.t. 6x + 4y <= 24, x + 2y <= 6, x,y in Z+  -> (4, 0) obj 20... check by enumeration
    let mut m = MilpModel::new();
    let x = m.add_var("x", Integrality::Integer, 0.0, 10.0, -5.0);
    let y = m.add_var("y", Integrality::Integer, 0.0, 10.0, -4.0);
    m.add_constraint("a", &[(x, 6.0), (y, 4.0)], Relation::Le, 24.5);
    m.add_constraint("b", &[(x, 1.0), (y, 2.0)], Relation::Le, 6.5);
    let mut best = f64::INFINITY;
    for xi in 0..=10 {
        for yi in 0..=10 {
            let (xf, yf) = (xi as f64, yi as f64);
            if 6.0 * xf + 4.0 * yf <= 24.5 && xf + 2.0 * yf <= 6.5 {
                best = best.min(-5.0 * xf - 4.0 * yf);
            }
        }
    }
    let sol = solve_milp(&m, &opts()).unwrap();
    assert!((sol.objective_value - best).abs() < 1e-9);
    assert_eq!(sol.value(x).fract(), 0.0);
    assert_eq!(sol.value(y).fract(), 0.0);
}

#[test]
fn node_limit_reports_incumbent_and_gap() {
    let (m, ..) = knapsack(3, 12);
    let sol = solve_milp(&m, &SolveOptions { node_limit: 3, ..opts() }).unwrap();
    assert_eq!(sol.status, SolveStatus::NodeLimit);
    if !sol.values.is_empty() {
        assert!(sol.gap.is_finite());
        assert!(m.max_violation(&sol.values) <= 1e-6);
    } else {
        assert!(sol.gap.is_infinite());
    }
}

#[test]
fn weak_duality_against_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.random_range(2..8);
        let rows = rng.random_range(1..8);
        let mut m = MilpModel::new();
        let vars: Vec<Var> = (0..n).map(|j| m.add_continuous(format!("x{j}"), 0.0, 5.0, rng.random_range(-3.0..3.0))).collect();
        let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        for i in 0..rows {
            let terms: Vec<(Var, f64)> = vars.iter().map(|&v| (v, rng.random_range(-4.0..4.0))).collect();
            let act: f64 = terms.iter().map(|(v, a)| a * anchor[v.0]).sum();
            m.add_constraint(format!("r{i}"), &terms, Relation::Le, act + rng.random_range(0.0..2.0));
        }
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(m.max_violation(&sol.values) <= 1e-6);
        for _ in 0..50 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
            if m.max_violation(&p) == 0.0 {
                assert!(m.evaluate(&p) >= sol.objective_value - 1e-9);
            }
        }
        assert!(m.evaluate(&anchor) >= sol.objective_value - 1e-9);
    }
}

#[test]
fn scaling_reduces_coefficient_spread() {
    let mut m = MilpModel::new();
    let p = m.add_continuous("p_kw", 0.0, 6000.0, 0.001);
    let e = m.add_continuous("e_kwh", 0.0, 50_000.0, 0.1);
    let u = m.add_var("u", Integrality::Binary, 0.0, 1.0, 0.0);
    m.add_constraint("rate", &[(p, 1.0), (e, -0.5)], Relation::Le, 0.0);
    m.add_constraint("bigm", &[(p, 1.0), (u, -25_000.0)], Relation::Le, 0.0);
    m.add_constraint("need", &[(p, 1.0)], Relation::Ge, 1200.0);
    let sol = solve_milp(&m, &opts()).unwrap();
    assert!(sol.scaling.spread_after <= sol.scaling.spread_before);
    assert!((sol.value(e) - 2400.0).abs() < 1e-6);
    assert_eq!(sol.value(u), 1.0);
}

#[test]
fn lp_dump_lists_every_section() {
    let mut m = MilpModel::new();
    let x = m.add_var("x", Integrality::Binary, 0.0, 1.0, 2.0);
    let y = m.add_var("n", Integrality::Integer, 0.0, 4.0, -1.0);
    let z = m.add_continuous("z", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    m.add_constraint("link", &[(x, 1.0), (y, -0.5), (z, 1.0)], Relation::Ge, 1.0);
    let text = m.to_lp_string();
    assert!(text.starts_with("minimize\n  obj: + 2 x - 1 n\n"));
    assert!(text.contains("  link: + 1 x - 0.5 n + 1 z >= 1\n"));
    assert!(text.contains("  -inf <= z <= +inf\n"));
    assert!(text.contains("binary\n  x\n"));
    assert!(text.contains("general\n  n\n"));
    assert!(text.ends_with("end\n"));
}
