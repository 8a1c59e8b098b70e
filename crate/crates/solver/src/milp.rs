use crate::error::SolverError;
use crate::model::{LpModel, VarId};
use crate::simplex::{solve_lp_with_bounds, LpSolution, Status};
use crate::{ABS_GAP, INT_TOL};

/// Enumeration limit of [`brute_force_reference`].
pub const MAX_BRUTE_FORCE_BINARIES: usize = 20;

/// An [`LpModel`] in which some variables must take values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    pub binaries: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: Status,
    pub values: Vec<f64>,
    pub objective: f64,
    /// LP relaxations solved (one per assignment for the enumeration oracle).
    pub nodes: usize,
    /// Objective of the root relaxation; `NaN` for the enumeration oracle.
    pub root_bound: f64,
}

impl MilpSolution {
    fn empty(status: Status, nodes: usize, root_bound: f64) -> Self {
        let objective = if status == Status::Unbounded { f64::INFINITY } else { f64::NEG_INFINITY };
        Self { status, values: Vec::new(), objective, nodes, root_bound }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

impl MilpModel {
    pub fn new(lp: LpModel, binaries: Vec<VarId>) -> Self {
        Self { lp, binaries }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.lp.validate()?;
        let n = self.lp.num_vars();
        for &VarId(j) in &self.binaries {
            if j >= n {
                return Err(SolverError::UnknownVariable { row: usize::MAX, var: j, num_vars: n });
            }
            if self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0 {
                return Err(SolverError::NotBinary(j));
            }
        }
        Ok(())
    }

    /// Re-solves the LP with every binary fixed to `assignment`.
    fn fixed_lp(&self, lower: &[f64], upper: &[f64], assignment: &[f64]) -> Result<LpSolution, SolverError> {
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for (&VarId(j), &a) in self.binaries.iter().zip(assignment) {
            lo[j] = a;
            hi[j] = a;
        }
        solve_lp_with_bounds(&self.lp, &lo, &hi)
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Relaxation objective of the parent.
    bound: f64,
    depth: usize,
    id: usize,
}

/// Branch-and-bound over the binaries of `model`.
///
/// Most-fractional branching (lowest index on ties). The search dives
/// depth first, taking the child on the rounding side of the fractional
/// value; whenever a dive ends it backtracks to the open node with the best
/// parent bound.
pub fn solve_milp(model: &MilpModel) -> Result<MilpSolution, SolverError> {
    model.validate()?;
    let lp = &model.lp;

    let root = solve_lp_with_bounds(lp, &lp.lower, &lp.upper)?;
    match root.status {
        Status::Optimal => {}
        s => return Ok(MilpSolution::empty(s, 1, root.objective)),
    }
    let root_bound = root.objective;

    let mut nodes_solved = 1usize;
    let mut next_id = 1usize;
    let mut incumbent: Option<LpSolution> = None;
    let mut open: Vec<Node> = Vec::new();
    let mut current: Option<(Node, LpSolution)> = Some((
        Node { lower: lp.lower.clone(), upper: lp.upper.clone(), bound: root_bound, depth: 0, id: 0 },
        root,
    ));

    loop {
        let (node, relax) = match current.take() {
            Some(pair) => pair,
            None => {
                let best = incumbent.as_ref().map_or(f64::NEG_INFINITY, |s| s.objective);
                open.retain(|n| n.bound > best + ABS_GAP);
                let Some(pos) = best_open(&open) else { break };
                let node = open.swap_remove(pos);
                let relax = solve_lp_with_bounds(lp, &node.lower, &node.upper)?;
                nodes_solved += 1;
                (node, relax)
            }
        };

        match relax.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => return Ok(MilpSolution::empty(Status::Unbounded, nodes_solved, root_bound)),
        }
        let best = incumbent.as_ref().map_or(f64::NEG_INFINITY, |s| s.objective);
        if relax.objective <= best + ABS_GAP {
            continue;
        }

        let Some((j, value)) = most_fractional(model, &relax.values) else {
            let assignment: Vec<f64> =
                model.binaries.iter().map(|&VarId(j)| relax.values[j].round()).collect();
            let clean = model.fixed_lp(&node.lower, &node.upper, &assignment)?;
            nodes_solved += 1;
            let candidate = if clean.is_optimal() { clean } else { relax };
            if candidate.objective > best {
                incumbent = Some(candidate);
            }
            continue;
        };

        let mut down = Node {
            lower: node.lower.clone(),
            upper: node.upper.clone(),
            bound: relax.objective,
            depth: node.depth + 1,
            id: next_id,
        };
        down.upper[j] = 0.0;
        let mut up = Node { lower: node.lower, upper: node.upper, bound: relax.objective, depth: node.depth + 1, id: next_id + 1 };
        up.lower[j] = 1.0;
        next_id += 2;

        let (dive, defer) = if value >= 0.5 { (up, down) } else { (down, up) };
        open.push(defer);
        let relax = solve_lp_with_bounds(lp, &dive.lower, &dive.upper)?;
        nodes_solved += 1;
        current = Some((dive, relax));
    }

    Ok(match incumbent {
        Some(sol) => MilpSolution {
            status: Status::Optimal,
            objective: sol.objective,
            values: sol.values,
            nodes: nodes_solved,
            root_bound,
        },
        None => MilpSolution::empty(Status::Infeasible, nodes_solved, root_bound),
    })
}

fn best_open(open: &[Node]) -> Option<usize> {
    open.iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.bound
                .total_cmp(&b.bound)
                .then(a.depth.cmp(&b.depth))
                .then(b.id.cmp(&a.id))
        })
        .map(|(i, _)| i)
}

fn most_fractional(model: &MilpModel, x: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &VarId(j) in &model.binaries {
        let v = x[j];
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac <= INT_TOL {
            continue;
        }
        if best.is_none_or(|(_, _, f)| frac > f) {
            best = Some((j, v, frac));
        }
    }
    best.map(|(j, v, _)| (j, v))
}

/// Exhaustive oracle: solves the induced LP for all `2^k` binary assignments
/// and keeps the best. Ties go to the lexicographically smallest assignment
/// (first binary most significant).
pub fn brute_force_reference(model: &MilpModel) -> Result<MilpSolution, SolverError> {
    model.validate()?;
    let k = model.binaries.len();
    if k > MAX_BRUTE_FORCE_BINARIES {
        return Err(SolverError::TooManyBinaries { got: k, limit: MAX_BRUTE_FORCE_BINARIES });
    }
    let lp = &model.lp;
    let mut best: Option<LpSolution> = None;
    let mut solved = 0usize;
    for mask in 0u32..(1u32 << k) {
        let assignment: Vec<f64> = (0..k).map(|b| ((mask >> (k - 1 - b)) & 1) as f64).collect();
        let admissible = model
            .binaries
            .iter()
            .zip(&assignment)
            .all(|(&VarId(j), &a)| lp.lower[j] <= a && a <= lp.upper[j]);
        if !admissible {
            continue;
        }
        let sol = model.fixed_lp(&lp.lower, &lp.upper, &assignment)?;
        solved += 1;
        match sol.status {
            Status::Infeasible => {}
            Status::Unbounded => return Ok(MilpSolution::empty(Status::Unbounded, solved, f64::NAN)),
            Status::Optimal => {
                if best.as_ref().is_none_or(|b| sol.objective > b.objective + 1e-9) {
                    best = Some(sol);
                }
            }
        }
    }
    Ok(match best {
        Some(sol) => MilpSolution {
            status: Status::Optimal,
            objective: sol.objective,
            values: sol.values,
            nodes: solved,
            root_bound: f64::NAN,
        },
        None => MilpSolution::empty(Status::Infeasible, solved, f64::NAN),
    })
}
