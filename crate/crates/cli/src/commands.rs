use std::fmt;
use std::path::{Path, PathBuf};

use flexbid_core::bidding::{optimize_bids, BidSchedule, RobustnessParams};
use flexbid_core::evaluation::{day_outcomes, evaluate_bids, EvaluationReport};
use flexbid_core::fleet::{simulate_fleet, BaselineSeries, DayKind, FleetConfig};
use flexbid_core::io;
use flexbid_core::scenarios::{draw_samples, split_periods, PeriodSplit, SampleSet};
use flexbid_core::tuner::{grid_search, AggregatorSpec, GridOptions, PenaltyBasis};
use flexbid_core::CoreError;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{Common, SampleArgs};

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match (&e, e.root()) {
            (_, CoreError::Infeasible(_) | CoreError::Unbounded) => Failure::Infeasible(msg),
            (CoreError::File { .. }, _) => Failure::Io(msg),
            (_, CoreError::Io(_) | CoreError::Csv(_) | CoreError::Json(_)) => Failure::Io(msg),
            _ => Failure::Config(msg),
        }
    }
}

pub fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg: RunConfig = match &common.config {
        Some(path) => io::read_json(path).map_err(|e| match e.root() {
            // a config that does not parse is a usage error, not an I/O one
            CoreError::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::from(e),
        })?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

pub fn apply_sampling(cfg: &mut RunConfig, args: &SampleArgs) {
    if let Some(n) = args.samples {
        cfg.sampling.count = n;
    }
    if let Some(s) = args.sample_seed {
        cfg.sampling.seed = s;
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn baseline_path(cfg: &RunConfig, common: &Common) -> PathBuf {
    common.baseline.clone().unwrap_or_else(|| Path::new(&cfg.output_dir).join("baseline.csv"))
}

/// Reads the baseline; weekday labels come from the fleet config stored next
/// to it, or from the run config when there is none.
fn load_baseline(cfg: &RunConfig, common: &Common) -> Result<BaselineSeries, Failure> {
    let path = baseline_path(cfg, common);
    let sidecar = io::sidecar_path(&path);
    let fleet: FleetConfig = if sidecar.exists() { io::read_json(&sidecar)? } else { cfg.fleet.clone() };
    let series = io::read_baseline_csv(&path, |d| if fleet.is_weekend(d) { DayKind::Weekend } else { DayKind::Weekday })?;
    Ok(series)
}

fn sample(cfg: &RunConfig, series: &BaselineSeries) -> Result<(PeriodSplit, SampleSet), Failure> {
    let split = split_periods(series, cfg.split.burn_in_days, cfg.split.in_sample_days)?;
    let set = draw_samples(series, &split, cfg.sampling.count, cfg.sampling.seed, cfg.sampling.replacement)?;
    Ok((split, set))
}

fn theta_label(theta: f64) -> String {
    format!("theta_{theta}")
}

pub fn simulate(cfg: &RunConfig, common: &Common) -> Result<(), Failure> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    let series = simulate_fleet(&cfg.fleet)?;
    let path = common.baseline.clone().unwrap_or_else(|| dir.join("baseline.csv"));
    io::write_baseline_csv(&path, &series)?;
    io::write_json(&io::sidecar_path(&path), &cfg.fleet)?;
    println!("wrote {} ({} days x 1440 minutes)", path.display(), series.n_days());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub config: RunConfig,
    pub theta: f64,
    pub source_days: Vec<usize>,
    pub schedule: BidSchedule,
}

pub fn bid(cfg: &RunConfig, common: &Common) -> Result<(), Failure> {
    cfg.validate()?;
    let series = load_baseline(cfg, common)?;
    let dir = output_dir(cfg)?;
    let (_, set) = sample(cfg, &series)?;
    io::write_json(&dir.join("samples.json"), &set.without_profiles())?;

    let mut infeasible = Vec::new();
    for &theta in &cfg.bidding.thetas {
        let b = &cfg.bidding;
        let params = RobustnessParams { epsilon: b.epsilon, theta, big_m: b.big_m, bid_lower: b.bid_lower, bid_upper: b.bid_upper };
        match optimize_bids(&set, &cfg.prices, &params) {
            Ok(schedule) => {
                let stem = format!("schedule_{}", theta_label(theta));
                io::write_schedule_csv(&dir.join(format!("{stem}.csv")), &schedule)?;
                println!(
                    "theta {theta}: total {:.3} kW, {} of {} samples flagged, M = {}",
                    schedule.total_capacity(),
                    schedule.certificate.q.iter().filter(|&&q| q > 0.5).count(),
                    set.len(),
                    schedule.params.big_m
                );
                let doc = ScheduleDocument { config: cfg.clone(), theta, source_days: set.source_days.clone(), schedule };
                io::write_json(&dir.join(format!("{stem}.json")), &doc)?;
            }
            Err(e @ (CoreError::Infeasible(_) | CoreError::Unbounded)) => {
                eprintln!("theta {theta}: {e}");
                infeasible.push(theta);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(Failure::Infeasible(format!("no schedule for theta {infeasible:?}")))
    }
}

#[derive(Debug, Serialize)]
struct EvaluationDocument<'a> {
    config: &'a RunConfig,
    schedule_file: String,
    theta: f64,
    in_sample: EvaluationReport,
    out_of_sample: EvaluationReport,
}

pub fn evaluate(cfg: &RunConfig, common: &Common, schedules: &[PathBuf]) -> Result<(), Failure> {
    cfg.validate()?;
    let series = load_baseline(cfg, common)?;
    let dir = output_dir(cfg)?;
    let (split, set) = sample(cfg, &series)?;
    let files: Vec<PathBuf> = if schedules.is_empty() {
        cfg.bidding.thetas.iter().map(|&t| dir.join(format!("schedule_{}.json", theta_label(t)))).collect()
    } else {
        schedules.to_vec()
    };
    let in_days: Vec<&[f64]> = set.profiles.iter().map(Vec::as_slice).collect();
    let out_days: Vec<&[f64]> =
        split.out_of_sample_days.iter().map(|&d| series.day_slice(d)).collect::<Result<_, _>>()?;

    for file in &files {
        let doc: ScheduleDocument = io::read_json(file)?;
        let eps = cfg.evaluation.epsilon_check.unwrap_or(doc.schedule.params.epsilon);
        let in_sample = evaluate_bids(&doc.schedule, &in_days, eps, &cfg.prices)?;
        let out_of_sample = evaluate_bids(&doc.schedule, &out_days, eps, &cfg.prices)?;
        let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = format!("evaluation_{}", stem.strip_prefix("schedule_").unwrap_or(&stem));
        let outcomes = day_outcomes(&doc.schedule, &out_days, &split.out_of_sample_days)?;
        io::write_day_outcomes_csv(&dir.join(format!("{stem}_days.csv")), &outcomes)?;
        println!(
            "{}: in-sample {:.3}, out-of-sample {:.3} violation frequency ({})",
            file.display(),
            in_sample.violation_frequency,
            out_of_sample.violation_frequency,
            if out_of_sample.compliant { "compliant" } else { "not compliant" }
        );
        let out = EvaluationDocument {
            config: cfg,
            schedule_file: file.to_string_lossy().into_owned(),
            theta: doc.theta,
            in_sample,
            out_of_sample,
        };
        io::write_json(&dir.join(format!("{stem}.json")), &out)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ArgmaxCell {
    epsilon: f64,
    theta: f64,
    objective_kw: f64,
    total_capacity_kw: f64,
    mean_penalty_kw: f64,
}

#[derive(Debug, Serialize)]
struct ArgmaxDocument<'a> {
    config: &'a RunConfig,
    surface_file: &'static str,
    basis: PenaltyBasis,
    argmax: Option<ArgmaxCell>,
    feasible_cells: usize,
    infeasible_cells: Vec<(f64, f64)>,
}

pub fn tune(cfg: &RunConfig, common: &Common, jobs: usize) -> Result<(), Failure> {
    cfg.validate()?;
    let series = load_baseline(cfg, common)?;
    let dir = output_dir(cfg)?;
    let (split, set) = sample(cfg, &series)?;
    let mut agg = AggregatorSpec::new("portfolio", set);
    agg.prices = cfg.prices.clone();
    agg.bid_lower = cfg.bidding.bid_lower;
    agg.bid_upper = cfg.bidding.bid_upper;
    if cfg.tuning.basis == PenaltyBasis::Holdout {
        agg.holdout = split
            .out_of_sample_days
            .iter()
            .map(|&d| series.day_slice(d).map(<[f64]>::to_vec))
            .collect::<Result<_, _>>()?;
    }
    let options = GridOptions { jobs, basis: cfg.tuning.basis };
    let result = grid_search(&[agg], &cfg.tuning.epsilon_grid, &cfg.tuning.theta_grid, &options)?;

    io::write_surface_csv(&dir.join("tune_surface.csv"), &result)?;
    let argmax = result.argmax.map(|(e, t)| {
        let c = result.cell(e, t);
        ArgmaxCell {
            epsilon: c.epsilon,
            theta: c.theta,
            objective_kw: c.objective,
            total_capacity_kw: c.total_capacity,
            mean_penalty_kw: c.mean_penalty,
        }
    });
    let infeasible: Vec<(f64, f64)> =
        result.cells.iter().filter(|c| !c.objective.is_finite()).map(|c| (c.epsilon, c.theta)).collect();
    let doc = ArgmaxDocument {
        config: cfg,
        surface_file: "tune_surface.csv",
        basis: cfg.tuning.basis,
        feasible_cells: result.cells.len() - infeasible.len(),
        infeasible_cells: infeasible,
        argmax,
    };
    io::write_json(&dir.join("tune_argmax.json"), &doc)?;
    match &doc.argmax {
        Some(a) => {
            println!("argmax epsilon {} theta {}: {:.3} kW", a.epsilon, a.theta, a.objective_kw);
            Ok(())
        }
        None => Err(Failure::Infeasible(format!(
            "all {} grid cells are infeasible (see tune_argmax.json)",
            result.cells.len()
        ))),
    }
}
