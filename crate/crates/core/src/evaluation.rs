//! Scoring a bid schedule against realised day profiles.

use serde::{Deserialize, Serialize};

use crate::bidding::{BidSchedule, PriceCurve};
use crate::error::CoreError;
use crate::{HOURS_PER_DAY, MINUTES_PER_DAY, MINUTES_PER_HOUR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_days: usize,
    pub violation_days: usize,
    pub violation_frequency: f64,
    /// Mean of `(p_h - P_m)^+` over every minute of every day (kW).
    pub mean_shortfall: f64,
    pub max_shortfall: f64,
    /// `sum_h price_h * bid_h`, paid regardless of delivery.
    pub profit: f64,
    pub epsilon_check: f64,
    pub compliant: bool,
}

/// Per-day outcome, the rows of the per-day CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayOutcome {
    pub day: usize,
    pub violated: bool,
    pub max_shortfall_kw: f64,
}

fn check_shapes(bids: &[f64], days: &[&[f64]]) -> Result<(), CoreError> {
    if bids.len() != HOURS_PER_DAY {
        return Err(CoreError::Shape(format!("schedule has {} bids, expected 24", bids.len())));
    }
    for (d, day) in days.iter().enumerate() {
        if day.len() != MINUTES_PER_DAY {
            return Err(CoreError::Shape(format!("day {d} has {} minutes, expected 1440", day.len())));
        }
    }
    Ok(())
}

/// `nu[day][hour][minute] = max(0, p_hour - P_minute)`.
pub fn shortfall_tensor(schedule: &BidSchedule, days: &[&[f64]]) -> Result<Vec<Vec<Vec<f64>>>, CoreError> {
    check_shapes(&schedule.bids, days)?;
    Ok(days
        .iter()
        .map(|day| {
            day.chunks_exact(MINUTES_PER_HOUR)
                .zip(&schedule.bids)
                .map(|(hour, &p)| hour.iter().map(|&v| (p - v).max(0.0)).collect())
                .collect()
        })
        .collect())
}

/// Sum of `(p_h - P_m)^+` over one day.
pub(crate) fn day_shortfall_sum(bids: &[f64], day: &[f64]) -> f64 {
    day.iter().enumerate().map(|(m, &v)| (bids[m / MINUTES_PER_HOUR] - v).max(0.0)).sum()
}

/// Per-day violation flags and worst shortfall. `labels` gives the day index
/// written to each outcome.
pub fn day_outcomes(schedule: &BidSchedule, days: &[&[f64]], labels: &[usize]) -> Result<Vec<DayOutcome>, CoreError> {
    check_shapes(&schedule.bids, days)?;
    if labels.len() != days.len() {
        return Err(CoreError::Shape("day labels and days differ in length".into()));
    }
    Ok(days
        .iter()
        .zip(labels)
        .map(|(day, &label)| {
            let mut violated = false;
            let mut worst: f64 = 0.0;
            for (m, &v) in day.iter().enumerate() {
                let p = schedule.bids[m / MINUTES_PER_HOUR];
                if p > v {
                    violated = true;
                    worst = worst.max(p - v);
                }
            }
            DayOutcome { day: label, violated, max_shortfall_kw: worst }
        })
        .collect())
}

/// A day counts as violated iff some minute's baseline lies strictly below
/// the bid of its hour.
pub fn evaluate_bids(
    schedule: &BidSchedule,
    days: &[&[f64]],
    epsilon_check: f64,
    prices: &PriceCurve,
) -> Result<EvaluationReport, CoreError> {
    if days.is_empty() {
        return Err(CoreError::InvalidConfig("no evaluation days".into()));
    }
    if !(0.0..=1.0).contains(&epsilon_check) {
        return Err(CoreError::InvalidConfig("epsilon_check must lie in [0, 1]".into()));
    }
    prices.validate()?;
    if prices.hours() != schedule.bids.len() {
        return Err(CoreError::Shape("price curve and schedule differ in hours".into()));
    }
    let labels: Vec<usize> = (0..days.len()).collect();
    let outcomes = day_outcomes(schedule, days, &labels)?;
    let violation_days = outcomes.iter().filter(|o| o.violated).count();
    let total: f64 = days.iter().map(|d| day_shortfall_sum(&schedule.bids, d)).sum();
    let max_shortfall = outcomes.iter().map(|o| o.max_shortfall_kw).fold(0.0, f64::max);
    let violation_frequency = violation_days as f64 / days.len() as f64;
    Ok(EvaluationReport {
        n_days: days.len(),
        violation_days,
        violation_frequency,
        mean_shortfall: total / (days.len() * MINUTES_PER_DAY) as f64,
        max_shortfall,
        profit: prices.0.iter().zip(&schedule.bids).map(|(l, p)| l * p).sum(),
        epsilon_check,
        compliant: violation_frequency <= epsilon_check,
    })
}
