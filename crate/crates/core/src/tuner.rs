//! Grid search over `(epsilon, theta)` from the system operator's side.
//!
//! Every cell solves each aggregator's bidding problem independently and
//! scores the cell by the procured capacity minus the expected shortfall:
//! `sum_d sum_h p_{h,d} - sum_d (1/|I_d|) sum_{i,m} (p_{h(m),d} - P_{m,i,d})^+`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bidding::{optimize_bids, BidSchedule, PriceCurve, RobustnessParams};
use crate::error::CoreError;
use crate::evaluation::day_shortfall_sum;
use crate::scenarios::SampleSet;
use crate::MINUTES_PER_DAY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatorSpec {
    pub id: String,
    pub samples: SampleSet,
    pub prices: PriceCurve,
    #[serde(default)]
    pub bid_lower: f64,
    #[serde(default)]
    pub bid_upper: Option<f64>,
    /// Profiles used instead of the sample profiles when scoring the
    /// penalty out of sample.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holdout: Vec<Vec<f64>>,
}

impl AggregatorSpec {
    pub fn new(id: impl Into<String>, samples: SampleSet) -> Self {
        Self { id: id.into(), samples, prices: PriceCurve::default(), bid_lower: 0.0, bid_upper: None, holdout: Vec::new() }
    }
}

/// Which profiles the shortfall penalty is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyBasis {
    #[default]
    InSample,
    Holdout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Optimal,
    Infeasible,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Optimal => "optimal",
            CellStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub epsilon: f64,
    pub theta: f64,
    pub status: CellStatus,
    /// `-inf` for infeasible cells.
    pub objective: f64,
    pub total_capacity: f64,
    pub mean_penalty: f64,
    /// One per aggregator; empty when infeasible.
    pub schedules: Vec<BidSchedule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub epsilon_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    /// Row-major: `cells[e * theta_grid.len() + t]`.
    pub cells: Vec<GridCell>,
    /// `(epsilon index, theta index)` of the best feasible cell.
    pub argmax: Option<(usize, usize)>,
    pub basis: PenaltyBasis,
}

impl GridSearchResult {
    pub fn cell(&self, e: usize, t: usize) -> &GridCell {
        &self.cells[e * self.theta_grid.len() + t]
    }

    /// `|epsilon_grid| x |theta_grid|` objective values.
    pub fn surface(&self) -> Vec<Vec<f64>> {
        self.cells.chunks(self.theta_grid.len()).map(|row| row.iter().map(|c| c.objective).collect()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    pub basis: PenaltyBasis,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { jobs: 1, basis: PenaltyBasis::InSample }
    }
}

pub fn default_epsilon_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 100.0).collect()
}

pub fn default_theta_grid() -> Vec<f64> {
    vec![0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35]
}

/// Total capacity and mean shortfall penalty of one schedule over `profiles`.
fn capacity_and_penalty(schedule: &BidSchedule, profiles: &[Vec<f64>]) -> Result<(f64, f64), CoreError> {
    if profiles.is_empty() {
        return Err(CoreError::InvalidConfig("penalty needs at least one profile".into()));
    }
    if let Some(p) = profiles.iter().find(|p| p.len() != MINUTES_PER_DAY) {
        return Err(CoreError::Shape(format!("profile has {} minutes, expected 1440", p.len())));
    }
    let penalty = profiles.iter().map(|p| day_shortfall_sum(&schedule.bids, p)).sum::<f64>() / profiles.len() as f64;
    Ok((schedule.total_capacity(), penalty))
}

/// Operator objective over aligned schedules and sample sets (kW).
pub fn tso_objective(schedules: &[BidSchedule], samples: &[SampleSet]) -> Result<f64, CoreError> {
    if schedules.len() != samples.len() {
        return Err(CoreError::Shape(format!("{} schedules for {} sample sets", schedules.len(), samples.len())));
    }
    let mut total = 0.0;
    for (schedule, set) in schedules.iter().zip(samples) {
        if !set.has_profiles() {
            return Err(CoreError::InvalidConfig("sample set carries no minute profiles".into()));
        }
        let (cap, pen) = capacity_and_penalty(schedule, &set.profiles)?;
        total += cap - pen;
    }
    Ok(total)
}

fn penalty_profiles(agg: &AggregatorSpec, basis: PenaltyBasis) -> &[Vec<f64>] {
    match basis {
        PenaltyBasis::InSample => &agg.samples.profiles,
        PenaltyBasis::Holdout => &agg.holdout,
    }
}

fn solve_cell(aggregators: &[AggregatorSpec], epsilon: f64, theta: f64, basis: PenaltyBasis) -> Result<GridCell, CoreError> {
    let mut schedules = Vec::with_capacity(aggregators.len());
    let (mut capacity, mut penalty) = (0.0, 0.0);
    for agg in aggregators {
        let params = RobustnessParams { epsilon, theta, bid_lower: agg.bid_lower, bid_upper: agg.bid_upper, big_m: None };
        match optimize_bids(&agg.samples, &agg.prices, &params) {
            Ok(s) => {
                let (c, p) = capacity_and_penalty(&s, penalty_profiles(agg, basis))?;
                capacity += c;
                penalty += p;
                schedules.push(s);
            }
            Err(CoreError::Infeasible(_)) => {
                return Ok(GridCell {
                    epsilon,
                    theta,
                    status: CellStatus::Infeasible,
                    objective: f64::NEG_INFINITY,
                    total_capacity: f64::NAN,
                    mean_penalty: f64::NAN,
                    schedules: Vec::new(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GridCell {
        epsilon,
        theta,
        status: CellStatus::Optimal,
        objective: capacity - penalty,
        total_capacity: capacity,
        mean_penalty: penalty,
        schedules,
    })
}

/// Best finite cell; ties go to the smaller epsilon, then the smaller theta.
pub fn argmax_cell(epsilon_grid: &[f64], theta_grid: &[f64], cells: &[GridCell]) -> Option<(usize, usize)> {
    let nt = theta_grid.len();
    let mut best: Option<(usize, usize)> = None;
    for (k, c) in cells.iter().enumerate() {
        if !c.objective.is_finite() {
            continue;
        }
        let (e, t) = (k / nt, k % nt);
        best = match best {
            None => Some((e, t)),
            Some((be, bt)) => {
                let b = &cells[be * nt + bt];
                let better = c.objective > b.objective
                    || (c.objective == b.objective
                        && (epsilon_grid[e] < epsilon_grid[be]
                            || (epsilon_grid[e] == epsilon_grid[be] && theta_grid[t] < theta_grid[bt])));
                if better {
                    Some((e, t))
                } else {
                    Some((be, bt))
                }
            }
        };
    }
    best
}

pub fn grid_search(
    aggregators: &[AggregatorSpec],
    epsilon_grid: &[f64],
    theta_grid: &[f64],
    options: &GridOptions,
) -> Result<GridSearchResult, CoreError> {
    if epsilon_grid.is_empty() || theta_grid.is_empty() {
        return Err(CoreError::InvalidConfig("epsilon and theta grids must be non-empty".into()));
    }
    if aggregators.is_empty() {
        return Err(CoreError::InvalidConfig("at least one aggregator is required".into()));
    }
    if let Some(e) = epsilon_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(CoreError::InvalidConfig(format!("epsilon {e} outside (0, 1)")));
    }
    if let Some(t) = theta_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CoreError::InvalidConfig(format!("theta {t} must be finite and non-negative")));
    }
    for agg in aggregators {
        agg.samples.validate()?;
        if penalty_profiles(agg, options.basis).is_empty() {
            return Err(CoreError::InvalidConfig(format!("aggregator {} has no profiles to score the penalty on", agg.id)));
        }
    }

    let points: Vec<(f64, f64)> =
        epsilon_grid.iter().flat_map(|&e| theta_grid.iter().map(move |&t| (e, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| CoreError::InvalidConfig(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        points
            .par_iter()
            .map(|&(e, t)| solve_cell(aggregators, e, t, options.basis))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let argmax = argmax_cell(epsilon_grid, theta_grid, &cells);
    Ok(GridSearchResult {
        epsilon_grid: epsilon_grid.to_vec(),
        theta_grid: theta_grid.to_vec(),
        cells,
        argmax,
        basis: options.basis,
    })
}
