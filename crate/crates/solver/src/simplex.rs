use crate::error::SolverError;
use crate::model::LpModel;
use crate::FEAS_TOL;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Primal values. Empty unless `status == Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: Status, iterations: usize) -> Self {
        let objective = match status {
            Status::Unbounded => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self { status, values: Vec::new(), objective, iterations }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Solves `model` with its own bounds.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, SolverError> {
    model.validate()?;
    run(model, &model.lower, &model.upper)
}

/// Solves `model` with the bounds replaced by `lower`/`upper`. Rows are not
/// re-validated, so callers solving many variants validate the model once.
pub fn solve_lp_with_bounds(
    model: &LpModel,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpSolution, SolverError> {
    let n = model.num_vars();
    for len in [lower.len(), upper.len()] {
        if len != n {
            return Err(SolverError::BoundLength { got: len, expected: n });
        }
    }
    for j in 0..n {
        if lower[j].is_nan() || upper[j].is_nan() {
            return Err(SolverError::NonFinite(format!("bounds of variable {j}")));
        }
    }
    run(model, lower, upper)
}

fn run(model: &LpModel, lower: &[f64], upper: &[f64]) -> Result<LpSolution, SolverError> {
    if (0..model.num_vars()).any(|j| lower[j] > upper[j]) {
        return Ok(LpSolution::without_point(Status::Infeasible, 0));
    }
    let mut tab = Tableau::new(model, lower, upper);
    let limit = 20_000 + 50 * (tab.m + tab.ncols);

    if tab.num_artificial > 0 {
        match tab.optimize(PHASE1, limit)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase one objective is bounded by zero"),
        }
        let infeasibility: f64 = tab.artificial_sum();
        let scale = 1.0 + model.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-7 * scale {
            return Ok(LpSolution::without_point(Status::Infeasible, tab.iterations));
        }
        tab.retire_artificials();
    }
    match tab.optimize(PHASE2, limit)? {
        Outcome::Unbounded => Ok(LpSolution::without_point(Status::Unbounded, tab.iterations)),
        Outcome::Optimal => {
            let mut values = tab.val[..model.num_vars()].to_vec();
            // Snap values sitting within tolerance of a bound.
            for (j, v) in values.iter_mut().enumerate() {
                if (*v - lower[j]).abs() <= FEAS_TOL {
                    *v = lower[j];
                } else if (*v - upper[j]).abs() <= FEAS_TOL {
                    *v = upper[j];
                }
            }
            let objective = model.objective_value(&values);
            Ok(LpSolution { status: Status::Optimal, values, objective, iterations: tab.iterations })
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

const PHASE2: usize = 0;
const PHASE1: usize = 1;

/// Condensed tableau: every basic variable (and both objective rows) is kept
/// as a linear function of the non-basic variables. All relations are
/// homogeneous because each constraint row `a.x` gets its own activity
/// variable `y = a.x` whose bounds carry the right-hand side.
struct Tableau {
    m: usize,
    ncols: usize,
    /// `(m + 2) x ncols`, row-major. Row `m + PHASE2` is the objective,
    /// row `m + PHASE1` the negated sum of artificials.
    t: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    val: Vec<f64>,
    first_artificial: usize,
    num_artificial: usize,
    iterations: usize,
    scratch: Vec<f64>,
}

impl Tableau {
    fn new(model: &LpModel, lower: &[f64], upper: &[f64]) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();
        let first_artificial = n + m;

        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        let mut val: Vec<f64> = (0..n)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();
        for row in &model.rows {
            let (l, u) = row.range();
            lo.push(l);
            hi.push(u);
            val.push(row.activity(&val[..n]));
        }

        // Rows whose activity is out of range get an artificial as basic
        // variable; their activity variable joins the non-basic columns.
        let mut nonbasic: Vec<usize> = (0..n).collect();
        let mut basic = Vec::with_capacity(m);
        let mut flipped = Vec::new();
        for r in 0..m {
            let y = n + r;
            let a = val[y];
            if a < lo[y] - FEAS_TOL || a > hi[y] + FEAS_TOL {
                let (bound, sign) = if a < lo[y] { (lo[y], 1.0) } else { (hi[y], -1.0) };
                let art = first_artificial + flipped.len();
                lo.push(0.0);
                hi.push(f64::INFINITY);
                val.push(sign * (bound - a));
                val[y] = bound;
                basic.push(art);
                flipped.push((r, sign, nonbasic.len()));
                nonbasic.push(y);
            } else {
                basic.push(y);
            }
        }

        let ncols = nonbasic.len();
        let mut t = vec![0.0; (m + 2) * ncols];
        for (r, row) in model.rows.iter().enumerate() {
            for &(v, c) in &row.terms {
                t[r * ncols + v.0] += c;
            }
        }
        for j in 0..n {
            t[(m + PHASE2) * ncols + j] = model.objective[j];
        }
        for &(r, sign, col) in &flipped {
            // art = sign * (y - a.x)
            for j in 0..n {
                t[r * ncols + j] *= -sign;
            }
            t[r * ncols + col] = sign;
            for j in 0..ncols {
                t[(m + PHASE1) * ncols + j] -= t[r * ncols + j];
            }
        }

        Self {
            m,
            ncols,
            t,
            basic,
            nonbasic,
            lo,
            hi,
            val,
            first_artificial,
            num_artificial: flipped.len(),
            iterations: 0,
            scratch: vec![0.0; ncols],
        }
    }

    fn artificial_sum(&self) -> f64 {
        self.val[self.first_artificial..].iter().sum()
    }

    fn retire_artificials(&mut self) {
        for a in self.first_artificial..self.val.len() {
            self.hi[a] = 0.0;
            if self.val[a] < 0.0 {
                self.val[a] = 0.0;
            }
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.t[row * self.ncols + col]
    }

    fn optimize(&mut self, phase: usize, limit: usize) -> Result<Outcome, SolverError> {
        let obj_row = self.m + phase;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(SolverError::IterationLimit(limit));
            }
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let Some((col, dir)) = self.entering(obj_row, bland) else {
                return Ok(Outcome::Optimal);
            };
            let entering = self.nonbasic[col];
            let (step, leaving_row) = self.ratio_test(col, dir, bland);
            if step.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            self.iterations += 1;
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.m {
                let a = self.at(r, col);
                if a != 0.0 {
                    self.val[self.basic[r]] += a * dir * step;
                }
            }
            self.val[entering] += dir * step;

            match leaving_row {
                None => {
                    // bound flip
                    self.val[entering] = if dir > 0.0 { self.hi[entering] } else { self.lo[entering] };
                }
                Some(r) => {
                    let leaving = self.basic[r];
                    let rate = self.at(r, col) * dir;
                    self.val[leaving] = if rate > 0.0 { self.hi[leaving] } else { self.lo[leaving] };
                    self.pivot(r, col);
                }
            }
        }
    }

    fn entering(&self, obj_row: usize, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for col in 0..self.ncols {
            let v = self.nonbasic[col];
            if self.lo[v] == self.hi[v] {
                continue;
            }
            let d = self.at(obj_row, col);
            let dir = if d > COST_TOL && self.val[v] < self.hi[v] {
                1.0
            } else if d < -COST_TOL && self.val[v] > self.lo[v] {
                -1.0
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bc, _, bd)) => {
                    if bland {
                        v < self.nonbasic[bc]
                    } else {
                        d.abs() > bd
                    }
                }
            };
            if better {
                best = Some((col, dir, d.abs()));
            }
        }
        best.map(|(c, dir, _)| (c, dir))
    }

    /// Longest step along `dir` for the entering column. Returns the step
    /// and the blocking row, or `None` for a bound flip of the entering variable.
    fn ratio_test(&self, col: usize, dir: f64, bland: bool) -> (f64, Option<usize>) {
        let v = self.nonbasic[col];
        let mut step = self.hi[v] - self.lo[v];
        let mut leave: Option<usize> = None;
        let mut leave_mag = 0.0;
        for r in 0..self.m {
            let rate = self.at(r, col) * dir;
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basic[r];
            let room = if rate > 0.0 { self.hi[b] - self.val[b] } else { self.val[b] - self.lo[b] };
            if room.is_infinite() {
                continue;
            }
            let lim = (room / rate.abs()).max(0.0);
            let replace = if lim < step - 1e-12 {
                true
            } else if lim <= step + 1e-12 {
                match leave {
                    None => false,
                    Some(lr) => {
                        if bland {
                            b < self.basic[lr]
                        } else {
                            rate.abs() > leave_mag
                        }
                    }
                }
            } else {
                false
            };
            if replace {
                step = lim;
                leave = Some(r);
                leave_mag = rate.abs();
            }
        }
        (step, leave)
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + col];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for x in row.iter_mut() {
                *x = -*x / piv;
            }
            row[col] = 1.0 / piv;
            self.scratch.copy_from_slice(row);
        }
        for i in 0..self.m + 2 {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + col];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            row[col] = 0.0;
            for (x, &p) in row.iter_mut().zip(&self.scratch) {
                *x += f * p;
            }
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[col]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sense, VarId};

    fn single_var(lo: f64, hi: f64) -> (LpModel, VarId) {
        let mut m = LpModel::new();
        let x = m.add_var("x", lo, hi, 1.0);
        (m, x)
    }

    #[test]
    fn bounded_single_variable() {
        let (mut m, x) = single_var(0.0, f64::INFINITY);
        m.add_row(vec![(x, 1.0)], Sense::Le, 3.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let (mut m, x) = single_var(f64::NEG_INFINITY, f64::INFINITY);
        m.add_row(vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_row(vec![(x, 1.0)], Sense::Le, 0.0);
        assert_eq!(solve_lp(&m).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn degenerate_optimum_on_a_face() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        let y = m.add_var("y", 0.0, 1.0, 1.0);
        m.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!(m.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn free_variable_without_upper_limit_is_unbounded() {
        let (mut m, x) = single_var(f64::NEG_INFINITY, f64::INFINITY);
        m.add_row(vec![(x, 1.0)], Sense::Ge, -4.0);
        assert_eq!(solve_lp(&m).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_variable_pushed_down() {
        let mut m = LpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        m.add_row(vec![(x, 1.0)], Sense::Ge, -4.0);
        let s = solve_lp(&m).unwrap();
        assert!((s.values[0] + 4.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, 10.0, 1.0);
        let y = m.add_var("y", 0.0, 10.0, 2.0);
        m.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 5.0);
        m.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Ge, 1.0);
        let s = solve_lp(&m).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-9 && (s.values[1] - 2.0).abs() < 1e-9);
        assert!((s.objective - 7.0).abs() < 1e-9);
    }

    #[test]
    fn cycling_prone_instance_terminates() {
        // Beale's example (maximisation form); cycles under plain Dantzig
        // pivoting with naive tie breaking.
        let mut m = LpModel::new();
        let x: Vec<VarId> = (0..4).map(|i| m.add_var(format!("x{i}"), 0.0, f64::INFINITY, 0.0)).collect();
        m.objective = vec![0.75, -150.0, 0.02, -6.0];
        m.add_row(vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Sense::Le, 0.0);
        m.add_row(vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Sense::Le, 0.0);
        m.add_row(vec![(x[2], 1.0)], Sense::Le, 1.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 0.05).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn malformed_models_are_rejected() {
        let (mut m, x) = single_var(0.0, 1.0);
        m.add_row(vec![(x, f64::NAN)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&m), Err(SolverError::NonFinite(_))));

        let (mut m, _) = single_var(0.0, 1.0);
        m.add_row(vec![(VarId(3), 1.0)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&m), Err(SolverError::UnknownVariable { .. })));

        let (m, _) = single_var(2.0, 1.0);
        assert!(matches!(solve_lp(&m), Err(SolverError::InvertedBounds { .. })));
    }

    #[test]
    fn override_bounds_can_make_infeasible() {
        let (mut m, x) = single_var(0.0, 5.0);
        m.add_row(vec![(x, 1.0)], Sense::Ge, 2.0);
        let s = solve_lp_with_bounds(&m, &[0.0], &[1.0]).unwrap();
        assert_eq!(s.status, Status::Infeasible);
        let s = solve_lp_with_bounds(&m, &[0.0], &[3.0]).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
    }
}
