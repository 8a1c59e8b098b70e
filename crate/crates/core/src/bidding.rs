//! Distributionally robust joint chance-constrained bidding.
//!
//! With a type-1 Wasserstein ball of radius `theta` around the empirical
//! distribution of `|I|` samples, the requirement that all hourly bids are
//! covered by the baseline with probability `1 - epsilon` under every
//! distribution in the ball is exactly the mixed-binary system
//!
//! ```text
//! max  sum_h price_h * p_h
//! s.t. epsilon*|I|*t - sum_i s_i >= theta*|I|
//!      B[i][h] - p_h + M*q_i >= t - s_i        for all i, h
//!      M*(1 - q_i)           >= t - s_i        for all i
//!      q_i in {0, 1},  s_i >= 0,  t free
//! ```
//!
//! where `B[i][h]` is the minimum of sample `i` over the minutes of hour `h`.
//! Using the minimum instead of one row per minute leaves the feasible set
//! unchanged since `p_h <= P_m` for every minute of the hour iff `p_h` is at
//! most their minimum.

use std::time::{Duration, Instant};

use flexbid_solver::{solve_milp, LpModel, MilpModel, Sense, Status, VarId};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::scenarios::SampleSet;
use crate::{HOURS_PER_DAY, MINUTES_PER_HOUR};

/// Slack used when checking a returned certificate against the model rows.
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessParams {
    /// Allowed violation probability, in (0, 1).
    pub epsilon: f64,
    /// Wasserstein radius in kW.
    pub theta: f64,
    /// Big-M; derived from the samples when absent.
    pub big_m: Option<f64>,
    pub bid_lower: f64,
    /// Defaults to the largest hourly minimum over all samples.
    pub bid_upper: Option<f64>,
}

impl Default for RobustnessParams {
    fn default() -> Self {
        Self { epsilon: 0.10, theta: 0.10, big_m: None, bid_lower: 0.0, bid_upper: None }
    }
}

impl RobustnessParams {
    pub fn new(epsilon: f64, theta: f64) -> Self {
        Self { epsilon, theta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return bad(format!("theta must be finite and non-negative, got {}", self.theta));
        }
        if let Some(m) = self.big_m {
            if !(m.is_finite() && m > 0.0) {
                return bad(format!("big_m must be finite and positive, got {m}"));
            }
        }
        if !self.bid_lower.is_finite() {
            return bad("bid_lower must be finite".into());
        }
        if let Some(u) = self.bid_upper {
            if u.is_nan() || u < self.bid_lower {
                return bad(format!("bid_upper ({u}) must not be below bid_lower ({})", self.bid_lower));
            }
        }
        Ok(())
    }
}

/// Hourly capacity prices (DKK/kW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceCurve(pub Vec<f64>);

impl Default for PriceCurve {
    fn default() -> Self {
        Self::flat(HOURS_PER_DAY, 1.0)
    }
}

impl PriceCurve {
    pub fn flat(hours: usize, price: f64) -> Self {
        Self(vec![price; hours])
    }

    pub fn hours(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.0.is_empty() {
            return Err(CoreError::InvalidConfig("price curve is empty".into()));
        }
        if self.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(CoreError::InvalidConfig("prices must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Parameters after defaults have been filled in from the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub epsilon: f64,
    pub theta: f64,
    pub big_m: f64,
    pub bid_lower: f64,
    pub bid_upper: f64,
}

/// Column indices of the bidding model.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub bids: Vec<VarId>,
    pub t: VarId,
    pub s: Vec<VarId>,
    pub q: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrjccModel {
    pub milp: MilpModel,
    pub layout: Layout,
    pub resolved: ResolvedParams,
    /// `B[i][h]` of every sample, one row per sample even when the model
    /// merges duplicates.
    pub minima: Vec<Vec<f64>>,
    /// Model sample (index into `layout.s` / `layout.q`) carrying sample `i`.
    pub group: Vec<usize>,
}

/// Default Big-M: spread of the hourly minima plus the width of the bid box
/// plus `theta*|I|/epsilon`, never below 1.
pub fn default_big_m(minima: &[Vec<f64>], bid_lower: f64, bid_upper: f64, theta: f64, epsilon: f64) -> f64 {
    let (lo, hi) = extremes(minima);
    let m = (hi - lo) + (bid_upper - bid_lower) + theta * minima.len() as f64 / epsilon;
    m.max(1.0)
}

fn extremes(minima: &[Vec<f64>]) -> (f64, f64) {
    minima
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)))
}

fn resolve(minima: &[Vec<f64>], params: &RobustnessParams) -> ResolvedParams {
    let (_, max_b) = extremes(minima);
    let bid_upper = params.bid_upper.unwrap_or(max_b.max(params.bid_lower));
    let m_upper = if bid_upper.is_finite() { bid_upper } else { max_b.max(params.bid_lower) };
    let big_m = params
        .big_m
        .unwrap_or_else(|| default_big_m(minima, params.bid_lower, m_upper, params.theta, params.epsilon));
    ResolvedParams { epsilon: params.epsilon, theta: params.theta, big_m, bid_lower: params.bid_lower, bid_upper }
}

/// Builds the bidding MILP from the hourly minima of `samples`.
pub fn build_drjcc_model(samples: &SampleSet, prices: &PriceCurve, params: &RobustnessParams) -> Result<DrjccModel, CoreError> {
    samples.validate()?;
    build_from_minima(&samples.hourly_minima, prices, params)
}

/// Same model for an arbitrary number of hours: `minima[i][h]` with one
/// column per price.
pub fn build_from_minima(minima: &[Vec<f64>], prices: &PriceCurve, params: &RobustnessParams) -> Result<DrjccModel, CoreError> {
    let levels: Vec<Vec<Vec<f64>>> =
        minima.iter().map(|row| row.iter().map(|&b| vec![b]).collect()).collect();
    build_from_levels(&levels, &(0..levels.len()).collect::<Vec<_>>(), prices, params)
}

/// Like [`build_from_minima`], but samples with identical minima share one
/// `(s, q)` pair whose slack is weighted by its multiplicity in the budget
/// row. Identical samples always receive identical optimal `(s, q)`, so the
/// optimum is unchanged while the number of binaries drops to the number of
/// distinct rows.
pub fn build_merged_model(minima: &[Vec<f64>], prices: &PriceCurve, params: &RobustnessParams) -> Result<DrjccModel, CoreError> {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    let mut group = Vec::with_capacity(minima.len());
    for row in minima {
        let k = match distinct.iter().position(|d| *d == row) {
            Some(k) => k,
            None => {
                distinct.push(row);
                distinct.len() - 1
            }
        };
        group.push(k);
    }
    let levels: Vec<Vec<Vec<f64>>> = minima.iter().map(|row| row.iter().map(|&b| vec![b]).collect()).collect();
    build_from_levels(&levels, &group, prices, params)
}

/// Variant with one row per minute: `profiles[i]` holds `60 * hours` values.
/// Used to check that the hourly-minimum rows lose nothing.
pub fn build_minute_model(profiles: &[Vec<f64>], prices: &PriceCurve, params: &RobustnessParams) -> Result<DrjccModel, CoreError> {
    let hours = prices.hours();
    let mut levels = Vec::with_capacity(profiles.len());
    for (i, p) in profiles.iter().enumerate() {
        if p.len() != hours * MINUTES_PER_HOUR {
            return Err(CoreError::Shape(format!(
                "profile {i} has {} minutes, expected {}",
                p.len(),
                hours * MINUTES_PER_HOUR
            )));
        }
        levels.push(p.chunks_exact(MINUTES_PER_HOUR).map(<[f64]>::to_vec).collect());
    }
    build_from_levels(&levels, &(0..levels.len()).collect::<Vec<_>>(), prices, params)
}

/// `levels[i][h]` lists the baseline values bounding bid `h` for sample `i`.
/// Samples mapped to the same `group` entry must have identical levels; the
/// first one of each group supplies the rows.
fn build_from_levels(
    levels: &[Vec<Vec<f64>>],
    group: &[usize],
    prices: &PriceCurve,
    params: &RobustnessParams,
) -> Result<DrjccModel, CoreError> {
    params.validate()?;
    prices.validate()?;
    let n_samples = levels.len();
    let hours = prices.hours();
    if n_samples == 0 {
        return Err(CoreError::InvalidConfig("at least one sample is required".into()));
    }
    for (i, row) in levels.iter().enumerate() {
        if row.len() != hours {
            return Err(CoreError::Shape(format!("sample {i} covers {} hours, prices cover {hours}", row.len())));
        }
        if row.iter().any(|vals| vals.is_empty() || vals.iter().any(|v| !v.is_finite())) {
            return Err(CoreError::Shape(format!("sample {i} has missing or non-finite baseline values")));
        }
    }
    let minima: Vec<Vec<f64>> = levels
        .iter()
        .map(|row| row.iter().map(|vals| vals.iter().copied().fold(f64::INFINITY, f64::min)).collect())
        .collect();
    let resolved = resolve(&minima, params);
    let n = n_samples as f64;
    let m = resolved.big_m;

    let n_groups = group.iter().max().map_or(0, |g| g + 1);
    let mut weight = vec![0.0; n_groups];
    let mut first = vec![usize::MAX; n_groups];
    for (i, &g) in group.iter().enumerate() {
        weight[g] += 1.0;
        first[g] = first[g].min(i);
    }

    let mut lp = LpModel::new();
    let bids: Vec<VarId> = (0..hours)
        .map(|h| lp.add_var(format!("p{h}"), resolved.bid_lower, resolved.bid_upper, prices.0[h]))
        .collect();
    let t = lp.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let s: Vec<VarId> = (0..n_groups).map(|k| lp.add_var(format!("s{k}"), 0.0, f64::INFINITY, 0.0)).collect();
    let q: Vec<VarId> = (0..n_groups).map(|k| lp.add_var(format!("q{k}"), 0.0, 1.0, 0.0)).collect();

    let mut budget = vec![(t, params.epsilon * n)];
    budget.extend(s.iter().zip(&weight).map(|(&sk, &w)| (sk, -w)));
    lp.add_row(budget, Sense::Ge, params.theta * n);

    for k in 0..n_groups {
        for h in 0..hours {
            for &b in &levels[first[k]][h] {
                // B - p_h + M q_i - t + s_i >= 0
                lp.add_row(vec![(bids[h], -1.0), (q[k], m), (t, -1.0), (s[k], 1.0)], Sense::Ge, -b);
            }
        }
    }
    for k in 0..n_groups {
        // M q_i + t - s_i <= M
        lp.add_row(vec![(q[k], m), (t, 1.0), (s[k], -1.0)], Sense::Le, m);
    }

    Ok(DrjccModel {
        milp: MilpModel::new(lp, q.clone()),
        layout: Layout { bids, t, s, q },
        resolved,
        minima,
        group: group.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidSchedule {
    /// Hourly capacity bids (kW).
    pub bids: Vec<f64>,
    /// `sum_h price_h * bid_h` (DKK).
    pub objective: f64,
    pub certificate: Certificate,
    pub params: ResolvedParams,
    pub nodes: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl BidSchedule {
    pub fn total_capacity(&self) -> f64 {
        self.bids.iter().sum()
    }

    /// Samples (by index) that some hourly bid exceeds.
    pub fn violated_samples(&self, minima: &[Vec<f64>]) -> Vec<usize> {
        minima
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().zip(&self.bids).any(|(b, p)| p > b))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Largest violation of any model row by the schedule's certificate.
pub fn certificate_violation(schedule: &BidSchedule, minima: &[Vec<f64>]) -> f64 {
    let c = &schedule.certificate;
    let r = &schedule.params;
    let n = minima.len() as f64;
    let mut worst: f64 = 0.0;
    let budget = r.epsilon * n * c.t - c.s.iter().sum::<f64>() - r.theta * n;
    worst = worst.max(-budget);
    for (i, row) in minima.iter().enumerate() {
        let margin = c.t - c.s[i];
        for (h, &b) in row.iter().enumerate() {
            worst = worst.max(margin - (b - schedule.bids[h] + r.big_m * c.q[i]));
        }
        worst = worst.max(margin - r.big_m * (1.0 - c.q[i]));
        worst = worst.max(-c.s[i]);
        worst = worst.max(c.q[i].min(1.0 - c.q[i]).abs());
    }
    for &p in &schedule.bids {
        worst = worst.max(r.bid_lower - p).max(p - r.bid_upper);
    }
    worst
}

/// Why a bidding model has no feasible point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    /// The radius cannot be met even with every bid at its lower bound.
    BudgetRow { theta: f64, max_feasible_theta: f64 },
    /// The bid box itself cannot be met by the samples.
    BoxBounds { bid_lower: f64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::BudgetRow { theta, max_feasible_theta } => write!(
                f,
                "budget row cannot be met: theta = {theta} exceeds the largest feasible radius {max_feasible_theta:.6} at the lowest bids"
            ),
            Infeasibility::BoxBounds { bid_lower } => {
                write!(f, "bid lower bound {bid_lower} is not coverable by the samples")
            }
        }
    }
}

/// Largest `theta` for which bids fixed at `bid_lower` satisfy the budget
/// row. With margins `g_i = min_h B[i][h] - bid_lower` the best budget is
/// `max_{t >= 0} mean_i min(t, g_i^+) - (1 - epsilon) t`, a concave
/// piecewise-linear function maximised at one of the breakpoints.
pub fn max_feasible_theta(minima: &[Vec<f64>], epsilon: f64, bid_lower: f64) -> f64 {
    let margins: Vec<f64> = minima
        .iter()
        .map(|row| (row.iter().copied().fold(f64::INFINITY, f64::min) - bid_lower).max(0.0))
        .collect();
    let n = margins.len() as f64;
    let value = |t: f64| margins.iter().map(|&g| g.min(t)).sum::<f64>() / n - (1.0 - epsilon) * t;
    margins.iter().map(|&t| value(t)).fold(value(0.0), f64::max)
}

/// Solves the bidding MILP to global optimality.
pub fn optimize_bids(samples: &SampleSet, prices: &PriceCurve, params: &RobustnessParams) -> Result<BidSchedule, CoreError> {
    samples.validate()?;
    let model = build_merged_model(&samples.hourly_minima, prices, params)?;
    solve_model(&model)
}

pub fn solve_model(model: &DrjccModel) -> Result<BidSchedule, CoreError> {
    let started = Instant::now();
    let sol = solve_milp(&model.milp)?;
    let r = model.resolved;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            let theta_max = max_feasible_theta(&model.minima, r.epsilon, r.bid_lower);
            let reason = if r.theta > theta_max {
                Infeasibility::BudgetRow { theta: r.theta, max_feasible_theta: theta_max }
            } else {
                Infeasibility::BoxBounds { bid_lower: r.bid_lower }
            };
            return Err(CoreError::Infeasible(reason));
        }
        Status::Unbounded => return Err(CoreError::Unbounded),
    }
    let l = &model.layout;
    let q: Vec<f64> = model.group.iter().map(|&k| sol.values[l.q[k].0].round()).collect();
    let s: Vec<f64> = model.group.iter().map(|&k| sol.values[l.s[k].0]).collect();
    let t = sol.values[l.t.0];
    let mut bids: Vec<f64> = l.bids.iter().map(|v| sol.values[v.0]).collect();

    // A bid that sits on an unflagged sample's minimum may come back a few
    // ulps above it; pull it onto the minimum so that exact comparisons see
    // delivery rather than shortfall.
    for (h, p) in bids.iter_mut().enumerate() {
        for (i, row) in model.minima.iter().enumerate() {
            if q[i] == 0.0 && *p > row[h] && *p - row[h] <= 1e-7 {
                *p = row[h].max(r.bid_lower);
            }
        }
    }
    let objective = l.bids.iter().zip(&bids).map(|(v, p)| model.milp.lp.objective[v.0] * p).sum();

    Ok(BidSchedule {
        bids,
        objective,
        certificate: Certificate { q, s, t },
        params: r,
        nodes: sol.nodes,
        wall_time: started.elapsed(),
    })
}

/// Outcome of scanning an ascending radius grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSelection {
    Feasible { theta: f64, schedule: BidSchedule },
    NoneFeasible { tried: Vec<f64> },
}

/// Solves for each radius in ascending order and returns the first feasible one.
pub fn smallest_feasible_theta(
    samples: &SampleSet,
    prices: &PriceCurve,
    params: &RobustnessParams,
    theta_grid: &[f64],
) -> Result<ThetaSelection, CoreError> {
    if theta_grid.is_empty() {
        return Err(CoreError::InvalidConfig("theta grid is empty".into()));
    }
    if theta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::InvalidConfig("theta grid must be strictly ascending".into()));
    }
    for &theta in theta_grid {
        let p = RobustnessParams { theta, ..*params };
        match optimize_bids(samples, prices, &p) {
            Ok(schedule) => return Ok(ThetaSelection::Feasible { theta, schedule }),
            Err(CoreError::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(ThetaSelection::NoneFeasible { tried: theta_grid.to_vec() })
}
