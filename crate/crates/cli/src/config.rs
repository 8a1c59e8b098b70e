use flexbid_core::bidding::PriceCurve;
use flexbid_core::fleet::FleetConfig;
use flexbid_core::scenarios::Replacement;
use flexbid_core::tuner::{default_epsilon_grid, default_theta_grid, PenaltyBasis};
use flexbid_core::CoreError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub burn_in_days: usize,
    pub in_sample_days: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { burn_in_days: 1, in_sample_days: 14 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
    pub replacement: Replacement,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { count: 30, seed: 1, replacement: Replacement::With }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiddingConfig {
    pub epsilon: f64,
    /// One schedule is produced per entry.
    pub thetas: Vec<f64>,
    pub big_m: Option<f64>,
    pub bid_lower: f64,
    pub bid_upper: Option<f64>,
}

impl Default for BiddingConfig {
    fn default() -> Self {
        Self { epsilon: 0.10, thetas: vec![0.01, 0.1, 0.35], big_m: None, bid_lower: 0.0, bid_upper: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// Compliance threshold; defaults to the bidding epsilon.
    pub epsilon_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningConfig {
    pub epsilon_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub basis: PenaltyBasis,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self { epsilon_grid: default_epsilon_grid(), theta_grid: default_theta_grid(), basis: PenaltyBasis::InSample }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub fleet: FleetConfig,
    pub split: SplitConfig,
    pub sampling: SamplingConfig,
    pub bidding: BiddingConfig,
    pub evaluation: EvaluationConfig,
    pub tuning: TuningConfig,
    pub prices: PriceCurve,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fleet: FleetConfig::default(),
            split: SplitConfig::default(),
            sampling: SamplingConfig::default(),
            bidding: BiddingConfig::default(),
            evaluation: EvaluationConfig::default(),
            tuning: TuningConfig::default(),
            prices: PriceCurve::default(),
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        self.fleet.validate()?;
        self.prices.validate()?;
        if self.prices.hours() != 24 {
            return bad(format!("price curve has {} hours, expected 24", self.prices.hours()));
        }
        if self.split.in_sample_days == 0 {
            return bad("split.in_sample_days must be positive".into());
        }
        if self.sampling.count == 0 {
            return bad("sampling.count must be positive".into());
        }
        let b = &self.bidding;
        if !(b.epsilon > 0.0 && b.epsilon < 1.0) {
            return bad(format!("bidding.epsilon = {} must lie in (0, 1)", b.epsilon));
        }
        if b.thetas.is_empty() {
            return bad("bidding.thetas is empty".into());
        }
        if let Some(t) = b.thetas.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return bad(format!("bidding theta {t} must be finite and non-negative"));
        }
        if let Some(e) = self.evaluation.epsilon_check {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("evaluation.epsilon_check = {e} must lie in [0, 1]"));
            }
        }
        if self.tuning.epsilon_grid.is_empty() || self.tuning.theta_grid.is_empty() {
            return bad("tuning grids must be non-empty".into());
        }
        if self.output_dir.is_empty() {
            return bad("output_dir is empty".into());
        }
        Ok(())
    }
}
