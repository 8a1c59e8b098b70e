//! Random bounded LPs against exhaustive vertex enumeration.

use flexbid_solver::{solve_lp, LpModel, Sense, Status, VarId};
use proptest::prelude::*;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over all vertices of the bounded polytope, `None` if empty.
fn vertex_optimum(model: &LpModel) -> Option<f64> {
    let n = model.num_vars();
    // every constraint as a hyperplane a.x = b
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &model.rows {
        let mut a = vec![0.0; n];
        for &(v, c) in &row.terms {
            a[v.0] += c;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), model.lower[j]));
        planes.push((e, model.upper[j]));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a = subset.iter().map(|&k| planes[k].0.clone()).collect();
        let b = subset.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            let inside = (0..n).all(|j| x[j] >= model.lower[j] - 1e-7 && x[j] <= model.upper[j] + 1e-7);
            if inside && model.max_violation(&x) <= 1e-7 {
                let z = model.objective_value(&x);
                best = Some(best.map_or(z, |b: f64| b.max(z)));
            }
        }
    }
    best
}

fn random_lp() -> impl Strategy<Value = LpModel> {
    (1usize..=5, 0usize..=6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec((-5i32..=5, -4i32..=0, 0i32..=4), n),
            prop::collection::vec((prop::collection::vec(-4i32..=4, n), 0u8..3, -8i32..=8), m),
        )
            .prop_map(move |(vars, rows)| {
                let mut lp = LpModel::new();
                for (j, (c, lo, hi)) in vars.iter().enumerate() {
                    lp.add_var(format!("x{j}"), *lo as f64, *hi as f64, *c as f64);
                }
                for (coefs, sense, rhs) in rows {
                    let terms = coefs.iter().enumerate().map(|(j, &a)| (VarId(j), a as f64 * 0.5)).collect();
                    let sense = match sense {
                        0 => Sense::Le,
                        1 => Sense::Ge,
                        _ => Sense::Eq,
                    };
                    lp.add_row(terms, sense, rhs as f64 * 0.5);
                }
                lp
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in random_lp()) {
        let sol = solve_lp(&lp).unwrap();
        match vertex_optimum(&lp) {
            Some(best) => {
                prop_assert_eq!(sol.status, Status::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-6, "simplex {} vs vertices {}", sol.objective, best);
                prop_assert!(lp.max_violation(&sol.values) <= 1e-7);
                prop_assert!((lp.objective_value(&sol.values) - sol.objective).abs() <= 1e-7);
            }
            None => prop_assert_eq!(sol.status, Status::Infeasible),
        }
    }

    #[test]
    fn solve_is_deterministic(lp in random_lp()) {
        prop_assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }
}

#[test]
fn degenerate_transportation_terminates() {
    // many redundant tight rows through the same vertex
    let mut lp = LpModel::new();
    let x: Vec<VarId> = (0..4).map(|j| lp.add_var(format!("x{j}"), 0.0, f64::INFINITY, 1.0)).collect();
    for k in 1..=12 {
        let terms = x.iter().enumerate().map(|(j, &v)| (v, ((j + k) % 4 + 1) as f64)).collect();
        lp.add_row(terms, Sense::Le, 0.0);
    }
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert_eq!(sol.objective, 0.0);
}

#[test]
fn vertex_oracle_sanity() {
    let mut lp = LpModel::new();
    let x = lp.add_var("x", 0.0, 1.0, 1.0);
    let y = lp.add_var("y", 0.0, 1.0, 2.0);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.5);
    assert_eq!(vertex_optimum(&lp), Some(2.5));
    lp.add_row(vec![(x, 1.0)], Sense::Ge, 2.0);
    assert_eq!(vertex_optimum(&lp), None);
}
