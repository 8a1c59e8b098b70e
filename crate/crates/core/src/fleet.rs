//! Minute-resolution consumption of an EV portfolio.
//!
//! Each vehicle draws a Poisson number of charging sessions per day (higher
//! rate on weekends). A session starts either in the evening window or
//! uniformly over the day, lasts an exponential number of minutes whose mean
//! grows with the square root of the day index, and draws a per-session
//! power (up to the charger rating) while active. Overlapping sessions of
//! one vehicle merge at the higher power, and sessions running past midnight
//! continue into the next day.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::{MINUTES_PER_DAY, MINUTES_PER_HOUR};

const EVENING_START_HOUR: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub n_vehicles: usize,
    pub n_days: usize,
    /// kW per vehicle.
    pub charger_power: f64,
    /// Expected plug-in events per vehicle on a weekday.
    pub weekday_session_rate: f64,
    pub weekend_session_rate: f64,
    /// Share of sessions starting in hours 17-23.
    pub evening_weight: f64,
    pub base_mean_charge_minutes: f64,
    /// Minutes added to the mean charge time per square root of a day.
    pub drift_coefficient: f64,
    /// Each session charges at a power drawn uniformly from
    /// `[min_power_fraction * charger_power, charger_power]`.
    pub min_power_fraction: f64,
    /// Weekday of day 0, 0 = Monday.
    pub first_weekday: usize,
    pub rng_seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            n_vehicles: 20,
            n_days: 90,
            charger_power: 11.0,
            weekday_session_rate: 3.5,
            weekend_session_rate: 4.5,
            evening_weight: 0.4,
            base_mean_charge_minutes: 250.0,
            drift_coefficient: 25.0,
            min_power_fraction: 0.0,
            first_weekday: 0,
            rng_seed: 1,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let invalid = |msg: &str| Err(CoreError::InvalidConfig(msg.to_string()));
        if self.n_days < 1 {
            return invalid("n_days must be at least 1");
        }
        let non_negative = [
            ("charger_power", self.charger_power),
            ("weekday_session_rate", self.weekday_session_rate),
            ("weekend_session_rate", self.weekend_session_rate),
            ("base_mean_charge_minutes", self.base_mean_charge_minutes),
            ("drift_coefficient", self.drift_coefficient),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return invalid(&format!("{name} must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.evening_weight) {
            return invalid("evening_weight must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.min_power_fraction) {
            return invalid("min_power_fraction must lie in [0, 1]");
        }
        if self.first_weekday > 6 {
            return invalid("first_weekday must be in 0..=6");
        }
        Ok(())
    }

    pub fn is_weekend(&self, day: usize) -> bool {
        (self.first_weekday + day) % 7 >= 5
    }

    /// Mean charge duration (minutes) on `day`.
    pub fn mean_charge_minutes(&self, day: usize) -> f64 {
        self.base_mean_charge_minutes + self.drift_coefficient * (day as f64).sqrt()
    }

    pub fn capacity_kw(&self) -> f64 {
        self.n_vehicles as f64 * self.charger_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DayKind {
    Weekday,
    Weekend,
}

/// Portfolio consumption in kW, `n_days x 1440`, row-major by day.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSeries {
    values: Vec<f64>,
    day_labels: Vec<DayKind>,
}

impl BaselineSeries {
    pub fn from_days(days: Vec<Vec<f64>>, day_labels: Vec<DayKind>) -> Result<Self, CoreError> {
        if days.is_empty() {
            return Err(CoreError::InvalidConfig("a series needs at least one day".into()));
        }
        if days.len() != day_labels.len() {
            return Err(CoreError::Shape(format!("{} days but {} day labels", days.len(), day_labels.len())));
        }
        let mut values = Vec::with_capacity(days.len() * MINUTES_PER_DAY);
        for (d, day) in days.into_iter().enumerate() {
            if day.len() != MINUTES_PER_DAY {
                return Err(CoreError::Shape(format!("day {d} has {} minutes, expected 1440", day.len())));
            }
            if day.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CoreError::Shape(format!("day {d} contains a negative or non-finite value")));
            }
            values.extend(day);
        }
        Ok(Self { values, day_labels })
    }

    pub fn n_days(&self) -> usize {
        self.day_labels.len()
    }

    pub fn day_labels(&self) -> &[DayKind] {
        &self.day_labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn day_slice(&self, day: usize) -> Result<&[f64], CoreError> {
        if day >= self.n_days() {
            return Err(CoreError::DayOutOfRange { day, n_days: self.n_days() });
        }
        Ok(&self.values[day * MINUTES_PER_DAY..(day + 1) * MINUTES_PER_DAY])
    }

    pub fn days(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(MINUTES_PER_DAY)
    }

    pub fn daily_means(&self) -> Vec<f64> {
        self.days().map(|d| d.iter().sum::<f64>() / MINUTES_PER_DAY as f64).collect()
    }
}

pub fn simulate_fleet(config: &FleetConfig) -> Result<BaselineSeries, CoreError> {
    config.validate()?;
    let horizon = config.n_days * MINUTES_PER_DAY;
    let mut values = vec![0.0; horizon];
    let mut vehicle = vec![0.0f64; horizon];
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let evening_start = EVENING_START_HOUR * MINUTES_PER_HOUR;
    let low_power = config.min_power_fraction * config.charger_power;

    for _ in 0..config.n_vehicles {
        vehicle.iter_mut().for_each(|v| *v = 0.0);
        for day in 0..config.n_days {
            let rate = if config.is_weekend(day) {
                config.weekend_session_rate
            } else {
                config.weekday_session_rate
            };
            let sessions = if rate > 0.0 {
                Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize
            } else {
                0
            };
            let mean = config.mean_charge_minutes(day);
            for _ in 0..sessions {
                let start = if rng.gen::<f64>() < config.evening_weight {
                    rng.gen_range(evening_start..MINUTES_PER_DAY)
                } else {
                    rng.gen_range(0..MINUTES_PER_DAY)
                };
                let minutes = if mean > 0.0 {
                    Exp::new(1.0 / mean).expect("positive mean").sample(&mut rng).round() as usize
                } else {
                    0
                };
                let power = low_power + (config.charger_power - low_power) * rng.gen::<f64>();
                let begin = day * MINUTES_PER_DAY + start;
                let end = (begin + minutes).min(horizon);
                // one charger per vehicle: overlapping sessions merge
                vehicle[begin..end].iter_mut().for_each(|v| *v = v.max(power));
            }
        }
        for (total, &v) in values.iter_mut().zip(&vehicle) {
            *total += v;
        }
    }

    let day_labels = (0..config.n_days)
        .map(|d| if config.is_weekend(d) { DayKind::Weekend } else { DayKind::Weekday })
        .collect();
    Ok(BaselineSeries { values, day_labels })
}
