//! In-sample / out-of-sample periods and the bootstrapped sample set that
//! defines the empirical distribution used for bidding.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::fleet::BaselineSeries;
use crate::{HOURS_PER_DAY, MINUTES_PER_DAY, MINUTES_PER_HOUR};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSplit {
    pub burn_in_days: usize,
    pub in_sample_days: Vec<usize>,
    pub out_of_sample_days: Vec<usize>,
}

/// Days `[burn_in, burn_in + in_sample_len)` are in-sample, the rest
/// out-of-sample. Both periods must be non-empty.
pub fn split_periods(series: &BaselineSeries, burn_in: usize, in_sample_len: usize) -> Result<PeriodSplit, CoreError> {
    let n = series.n_days();
    if in_sample_len == 0 {
        return Err(CoreError::InvalidConfig("in-sample period must contain at least one day".into()));
    }
    if burn_in + in_sample_len >= n {
        return Err(CoreError::InvalidConfig(format!(
            "burn-in ({burn_in}) plus in-sample ({in_sample_len}) days leave no out-of-sample days in a {n}-day series"
        )));
    }
    Ok(PeriodSplit {
        burn_in_days: burn_in,
        in_sample_days: (burn_in..burn_in + in_sample_len).collect(),
        out_of_sample_days: (burn_in + in_sample_len..n).collect(),
    })
}

/// Per-hour minimum of a 1440-minute profile; hour `h` covers minutes
/// `60h ..= 60h + 59`.
pub fn hourly_minima(profile: &[f64]) -> Result<Vec<f64>, CoreError> {
    if profile.len() != MINUTES_PER_DAY {
        return Err(CoreError::Shape(format!("profile has {} minutes, expected {MINUTES_PER_DAY}", profile.len())));
    }
    Ok(profile
        .chunks_exact(MINUTES_PER_HOUR)
        .map(|hour| hour.iter().copied().fold(f64::INFINITY, f64::min))
        .collect())
}

/// The samples `i in I`: one day profile each, with its hourly minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Minute profiles; may be omitted from JSON, in which case only the
    /// bidding model (not the shortfall penalty) can be built.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<Vec<f64>>,
    /// `|I| x 24` matrix of hourly minima (kW).
    pub hourly_minima: Vec<Vec<f64>>,
    /// Day index each sample was drawn from, with multiplicity.
    pub source_days: Vec<usize>,
}

impl SampleSet {
    pub fn from_profiles(profiles: Vec<Vec<f64>>, source_days: Vec<usize>) -> Result<Self, CoreError> {
        if profiles.is_empty() {
            return Err(CoreError::InvalidConfig("a sample set needs at least one sample".into()));
        }
        if profiles.len() != source_days.len() {
            return Err(CoreError::Shape("profiles and source days differ in length".into()));
        }
        let hourly_minima = profiles.iter().map(|p| hourly_minima(p)).collect::<Result<_, _>>()?;
        Ok(Self { profiles, hourly_minima, source_days })
    }

    pub fn len(&self) -> usize {
        self.hourly_minima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hourly_minima.is_empty()
    }

    pub fn has_profiles(&self) -> bool {
        !self.profiles.is_empty()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.is_empty() {
            return Err(CoreError::InvalidConfig("a sample set needs at least one sample".into()));
        }
        for (i, row) in self.hourly_minima.iter().enumerate() {
            if row.len() != HOURS_PER_DAY {
                return Err(CoreError::Shape(format!("sample {i} has {} hourly minima, expected 24", row.len())));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CoreError::Shape(format!("sample {i} has a negative or non-finite hourly minimum")));
            }
        }
        if self.has_profiles() && self.profiles.len() != self.len() {
            return Err(CoreError::Shape("profiles and hourly minima differ in sample count".into()));
        }
        Ok(())
    }

    pub fn without_profiles(&self) -> Self {
        Self { profiles: Vec::new(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    #[default]
    With,
    Without,
}

/// Draws `count` in-sample days uniformly with replacement.
pub fn bootstrap_samples(
    series: &BaselineSeries,
    split: &PeriodSplit,
    count: usize,
    seed: u64,
) -> Result<SampleSet, CoreError> {
    draw_samples(series, split, count, seed, Replacement::With)
}

pub fn draw_samples(
    series: &BaselineSeries,
    split: &PeriodSplit,
    count: usize,
    seed: u64,
    replacement: Replacement,
) -> Result<SampleSet, CoreError> {
    if count == 0 {
        return Err(CoreError::InvalidConfig("sample count must be positive".into()));
    }
    let window = &split.in_sample_days;
    if window.is_empty() {
        return Err(CoreError::InvalidConfig("in-sample period is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source_days: Vec<usize> = match replacement {
        Replacement::With => (0..count).map(|_| window[rng.gen_range(0..window.len())]).collect(),
        Replacement::Without => {
            if count > window.len() {
                return Err(CoreError::InvalidConfig(format!(
                    "cannot draw {count} distinct days from a {}-day window",
                    window.len()
                )));
            }
            index::sample(&mut rng, window.len(), count).into_iter().map(|k| window[k]).collect()
        }
    };
    let profiles = source_days
        .iter()
        .map(|&d| series.day_slice(d).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    SampleSet::from_profiles(profiles, source_days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::{simulate_fleet, DayKind, FleetConfig};

    fn constant_series(n_days: usize, kw: f64) -> BaselineSeries {
        BaselineSeries::from_days(vec![vec![kw; MINUTES_PER_DAY]; n_days], vec![DayKind::Weekday; n_days]).unwrap()
    }

    #[test]
    fn default_split_has_seventy_five_out_of_sample_days() {
        let s = split_periods(&constant_series(90, 1.0), 1, 14).unwrap();
        assert_eq!(s.in_sample_days, (1..15).collect::<Vec<_>>());
        assert_eq!(s.out_of_sample_days.len(), 75);
        assert_eq!(s.out_of_sample_days[0], 15);
        assert_eq!(*s.out_of_sample_days.last().unwrap(), 89);
    }

    #[test]
    fn split_leaves_only_last_day() {
        let s = split_periods(&constant_series(10, 1.0), 0, 9).unwrap();
        assert_eq!(s.out_of_sample_days, vec![9]);
    }

    #[test]
    fn split_without_out_of_sample_is_rejected() {
        assert!(split_periods(&constant_series(10, 1.0), 1, 9).is_err());
        assert!(split_periods(&constant_series(10, 1.0), 2, 0).is_err());
    }

    #[test]
    fn thirty_samples_from_fourteen_days() {
        let series = simulate_fleet(&FleetConfig::default()).unwrap();
        let split = split_periods(&series, 1, 14).unwrap();
        let set = bootstrap_samples(&series, &split, 30, 7).unwrap();
        assert_eq!(set.len(), 30);
        assert!(set.source_days.iter().all(|d| (1..15).contains(d)));
        for (i, &d) in set.source_days.iter().enumerate() {
            assert_eq!(set.profiles[i].as_slice(), series.day_slice(d).unwrap());
        }
        let again = bootstrap_samples(&series, &split, 30, 7).unwrap();
        assert_eq!(set.source_days, again.source_days);
    }

    #[test]
    fn single_day_window() {
        let mut days = vec![vec![0.0; MINUTES_PER_DAY]; 3];
        days[1][100] = 3.0;
        let series = BaselineSeries::from_days(days, vec![DayKind::Weekday; 3]).unwrap();
        let split = split_periods(&series, 1, 1).unwrap();
        let set = bootstrap_samples(&series, &split, 1, 0).unwrap();
        assert_eq!(set.source_days, vec![1]);
        assert_eq!(set.profiles[0][100], 3.0);
    }

    #[test]
    fn constant_profile_minima() {
        let series = constant_series(5, 7.0);
        let split = split_periods(&series, 1, 2).unwrap();
        let set = bootstrap_samples(&series, &split, 4, 3).unwrap();
        assert!(set.hourly_minima.iter().flatten().all(|&b| b == 7.0));
        assert_eq!(hourly_minima(&[5.0; MINUTES_PER_DAY]).unwrap(), vec![5.0; 24]);
    }

    #[test]
    fn single_dip_affects_one_hour() {
        let mut p = vec![4.0; MINUTES_PER_DAY];
        p[61] = 0.0;
        let b = hourly_minima(&p).unwrap();
        assert_eq!(b[1], 0.0);
        assert!(b.iter().enumerate().filter(|(h, _)| *h != 1).all(|(_, &v)| v == 4.0));
    }

    #[test]
    fn wrong_length_and_zero_count() {
        assert!(hourly_minima(&[1.0; 100]).is_err());
        let series = constant_series(5, 1.0);
        let split = split_periods(&series, 1, 2).unwrap();
        assert!(bootstrap_samples(&series, &split, 0, 1).is_err());
    }

    #[test]
    fn without_replacement_draws_distinct_days() {
        let series = simulate_fleet(&FleetConfig { n_days: 20, ..Default::default() }).unwrap();
        let split = split_periods(&series, 1, 10).unwrap();
        let set = draw_samples(&series, &split, 10, 5, Replacement::Without).unwrap();
        let mut d = set.source_days.clone();
        d.sort();
        assert_eq!(d, (1..11).collect::<Vec<_>>());
        assert!(draw_samples(&series, &split, 11, 5, Replacement::Without).is_err());
    }
}
