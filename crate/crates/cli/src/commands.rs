use std::path::{Path, PathBuf};

use codesign_core::design_space::CodesignPoint;
use codesign_core::explorer::{
    run_ga, FitnessBreakdown, FitnessWeights, GaConfig, GenerationStats, OraclePredictors, Predictors,
    SurrogatePredictors,
};
use codesign_core::gp::{evaluate_mae, fit as fit_gp, FitOptions, TargetKind};
use codesign_core::GpModel;
use codesign_core::io;
use codesign_core::oracle::ResourceReport;
use codesign_core::pareto::{dominates, exhaustive_eval, pareto_front, verify_on_front, Objectives};
use codesign_core::sampling::{loss_dataset, perf_dataset, sample_both};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, ExploreArgs, FitArgs, ParetoArgs, ReportArgs, SampleArgs, EXIT_INFEASIBLE};

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn pick(flag: &Option<PathBuf>, default: &Path) -> PathBuf {
    flag.clone().unwrap_or_else(|| default.to_path_buf())
}

pub fn sample(config: &RunConfig, args: &SampleArgs) -> Result<Vec<String>, CliError> {
    let n_loss = args.n_loss.unwrap_or(config.sample.n_loss);
    let n_perf = args.n_perf.unwrap_or(config.sample.n_perf);
    let ingest = args.loss_input.clone().or_else(|| config.sample.loss_input.clone());
    if n_perf == 0 || (ingest.is_none() && n_loss == 0) {
        return Err(CliError::invalid_input("sample counts must be >= 1"));
    }
    let oracle = config.oracle()?;
    let loss_out = pick(&args.loss_out, &config.paths.loss_samples);
    let perf_out = pick(&args.perf_out, &config.paths.perf_samples);

    let synthetic = if ingest.is_some() { 0 } else { n_loss };
    let (mut loss, perf) = sample_both(&oracle, &config.hw, synthetic, n_perf, config.sample.seed)?;
    if let Some(src) = &ingest {
        loss = io::read_loss_samples(src)?;
        if loss.is_empty() {
            return Err(CliError::invalid_input(format!("{}: no loss samples", display(src))));
        }
    }
    io::write_loss_samples(&loss_out, &loss)?;
    io::write_perf_samples(&perf_out, &perf)?;
    Ok(vec![
        format!("wrote {} loss samples to {}", loss.len(), display(&loss_out)),
        format!("wrote {} perf samples to {}", perf.len(), display(&perf_out)),
    ])
}

/// Test-set summary of a fitted surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub target: TargetKind,
    pub train: usize,
    pub test: usize,
    pub test_mae: f64,
    pub test_std: f64,
    /// MAE of predicting the training mean everywhere.
    pub baseline_mae: f64,
}

fn default_model_path(config: &RunConfig, target: TargetKind) -> &Path {
    match target {
        TargetKind::Ce => &config.paths.model_ce,
        TargetKind::LatencyMs => &config.paths.model_latency,
        TargetKind::PowerW => &config.paths.model_power,
    }
}

/// Splits, fits and scores one target; shared by the command and tests.
pub fn fit_dataset(
    data: &codesign_core::Dataset,
    options: &FitOptions,
    split_seed: u64,
) -> Result<(GpModel, FitReport), CliError> {
    let n = data.len();
    let n_train = data.target.train_count(n);
    if n_train < 2 || n_train >= n {
        return Err(CliError::invalid_input(format!(
            "{n} samples are too few for a train/test split"
        )));
    }
    let (train, test) = data.split(n_train, split_seed);
    let model = fit_gp(&train, options)?;
    let mean = train.target_mean();
    let baseline_mae = test.targets.iter().map(|y| (y - mean).abs()).sum::<f64>() / test.len() as f64;
    let report = FitReport {
        target: data.target,
        train: train.len(),
        test: test.len(),
        test_mae: evaluate_mae(&model, &test)?,
        test_std: test.target_variance().sqrt(),
        baseline_mae,
    };
    Ok((model, report))
}

pub fn fit(config: &RunConfig, args: &FitArgs) -> Result<Vec<String>, CliError> {
    let target = args.target;
    let default_samples = match target {
        TargetKind::Ce => &config.paths.loss_samples,
        _ => &config.paths.perf_samples,
    };
    let samples = pick(&args.samples, default_samples);
    let data = match target {
        TargetKind::Ce => loss_dataset(&io::read_loss_samples(&samples)?)?,
        _ => perf_dataset(&io::read_perf_samples(&samples, &config.backbone()?)?, target)?,
    };
    let family = args.family.or(config.gp.family).unwrap_or(target.default_family());
    let mut options = FitOptions::new(family).iters(args.iters.unwrap_or(config.gp.iters));
    options.step_size = config.gp.step_size;
    let (model, r) = fit_dataset(&data, &options, config.gp.seed)?;
    let out = pick(&args.out, default_model_path(config, target));
    io::save_model(&out, &model, target)?;
    Ok(vec![
        format!("target {} kernel {family} train {} test {}", target.name(), r.train, r.test),
        format!(
            "test_mae {} test_std {} baseline_mae {} mae/std {:.4} mae/baseline {:.4}",
            r.test_mae,
            r.test_std,
            r.baseline_mae,
            r.test_mae / r.test_std,
            r.test_mae / r.baseline_mae
        ),
        format!("wrote model to {}", display(&out)),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub ce: f64,
    pub latency_ms: f64,
    pub power_w: f64,
}

impl From<Objectives<f64>> for ObjectiveValues {
    fn from(o: Objectives<f64>) -> Self {
        Self {
            ce: o.ce,
            latency_ms: o.latency_ms,
            power_w: o.energy,
        }
    }
}

impl ObjectiveValues {
    pub fn objectives(&self) -> Objectives<f64> {
        Objectives::new(self.ce, self.latency_ms, self.power_w)
    }
}

/// Everything `explore` learned about its best design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreResult {
    /// "oracle" or "surrogate".
    pub predictor: String,
    pub weights: FitnessWeights,
    pub ga: GaConfig,
    pub best_point: CodesignPoint,
    pub predicted: ObjectiveValues,
    pub oracle: ObjectiveValues,
    pub fitness: FitnessBreakdown,
    pub resources: ResourceReport,
    pub feasible: bool,
    pub evaluations: usize,
    pub history: Vec<GenerationStats>,
}

fn load_surrogate(path: &Path, expected: TargetKind) -> Result<GpModel, CliError> {
    let (model, target) = io::load_model(path)?;
    if target != expected {
        return Err(CliError::invalid_input(format!(
            "{}: model is for {}, expected {}",
            display(path),
            target.name(),
            expected.name()
        )));
    }
    Ok(model)
}

pub fn explore_weights(config: &RunConfig, args: &ExploreArgs) -> FitnessWeights {
    let mut w = config.weights;
    if let Some(p) = args.preset {
        w.preset = p;
        w.custom = None;
    }
    if let Some(custom) = args.weights {
        w.custom = Some(custom);
    }
    if let Some(g) = args.gamma {
        w.gamma = g;
    }
    if let Some(d) = args.dsp_budget {
        w.dsp_budget = d;
    }
    if let Some(m) = args.mem_budget {
        w.mem_budget = m;
    }
    w.fitness_weights()
}

pub fn explore(config: &RunConfig, args: &ExploreArgs) -> Result<Vec<String>, CliError> {
    let oracle = config.oracle()?;
    let weights = explore_weights(config, args);
    weights.validate()?;
    let mut ga = config.ga;
    if let Some(g) = args.generations {
        ga.generations = g;
    }
    let surrogate;
    let oracle_predictors = OraclePredictors::new(&oracle);
    let predictors: &dyn Predictors = if args.oracle {
        &oracle_predictors
    } else {
        let ce = load_surrogate(&pick(&args.model_ce, &config.paths.model_ce), TargetKind::Ce)?;
        let lat = load_surrogate(&pick(&args.model_latency, &config.paths.model_latency), TargetKind::LatencyMs)?;
        let pow = load_surrogate(&pick(&args.model_power, &config.paths.model_power), TargetKind::PowerW)?;
        surrogate = SurrogatePredictors::new(ce, lat, pow)?;
        &surrogate
    };
    let r = run_ga(&ga, &weights, predictors, &oracle.backbone, &config.hw)?;
    let truth = oracle.evaluate(&r.best_point)?;
    let result = ExploreResult {
        predictor: if args.oracle { "oracle" } else { "surrogate" }.into(),
        weights,
        ga,
        best_point: r.best_point.clone(),
        predicted: ObjectiveValues {
            ce: r.best_breakdown.ce,
            latency_ms: r.best_breakdown.latency_ms,
            power_w: r.best_breakdown.energy,
        },
        oracle: ObjectiveValues {
            ce: truth.ce,
            latency_ms: truth.latency_ms,
            power_w: truth.power_w,
        },
        fitness: r.best_breakdown,
        resources: truth.resources,
        feasible: r.best_breakdown.penalty == 0.0,
        evaluations: r.evaluations,
        history: r.history,
    };
    let out = pick(&args.out, &config.paths.explore_result);
    io::write_json(&out, &result)?;
    if r.all_penalized {
        return Err(CliError::new(
            EXIT_INFEASIBLE,
            format!(
                "no evaluated design fits the budget (dsp <= {}, mem <= {} bytes); result written to {}",
                weights.dsp_avl,
                weights.mem_avl,
                display(&out)
            ),
        ));
    }
    let b = &result.best_point;
    Ok(vec![
        format!(
            "best fitness {} (ce {}, latency_ms {}, power_w {})",
            result.fitness.total, result.oracle.ce, result.oracle.latency_ms, result.oracle.power_w
        ),
        format!(
            "ratios {:?} pf {} pc {} pv {} bw {} mem {}",
            b.arch.ratios().iter().map(|r| r.value()).collect::<Vec<_>>(),
            b.hw.pf,
            b.hw.pc,
            b.hw.pv,
            b.hw.bw,
            b.hw.mem
        ),
        format!("wrote result to {}", display(&out)),
    ])
}

pub fn pareto(config: &RunConfig, args: &ParetoArgs) -> Result<Vec<String>, CliError> {
    let oracle = config.oracle()?;
    let points = exhaustive_eval(&oracle.backbone, &config.hw, &oracle, config.pareto.cap)?;
    let front = pareto_front(&points);
    let frontier_out = pick(&args.frontier_out, &config.paths.frontier);
    let plot_out = pick(&args.plot_out, &config.paths.plot_data);
    io::write_points(&frontier_out, &front)?;
    io::write_plot_data(&plot_out, &points)?;
    Ok(vec![
        format!("evaluated {} points, {} on the frontier", points.len(), front.len()),
        format!("wrote frontier to {}", display(&frontier_out)),
        format!("wrote plot data to {}", display(&plot_out)),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub on_front: bool,
    pub epsilon: f64,
    pub frontier_size: usize,
    /// Frontier points that strictly dominate the result.
    pub dominated_by: usize,
    pub best_point: CodesignPoint,
    pub objectives: ObjectiveValues,
    pub fitness: f64,
}

pub fn report(config: &RunConfig, args: &ReportArgs) -> Result<Vec<String>, CliError> {
    let result_path = pick(&args.result, &config.paths.explore_result);
    let frontier_path = pick(&args.frontier, &config.paths.frontier);
    let result: ExploreResult = io::read_json(&result_path)?;
    let frontier = io::read_points(&frontier_path, &config.backbone()?)?;
    if frontier.is_empty() {
        return Err(CliError::invalid_input(format!("{}: frontier is empty", display(&frontier_path))));
    }
    let eps = config.pareto.epsilon;
    let objectives = result.oracle.objectives();
    let report = Report {
        on_front: verify_on_front(&objectives, &frontier, eps),
        epsilon: eps,
        frontier_size: frontier.len(),
        dominated_by: frontier.iter().filter(|p| dominates(&p.objectives(), &objectives)).count(),
        best_point: result.best_point,
        objectives: result.oracle,
        fitness: result.fitness.total,
    };
    let out = pick(&args.out, &config.paths.report);
    io::write_json(&out, &report)?;
    Ok(vec![
        format!(
            "result {} the frontier of {} points (epsilon {eps:e}); dominated by {}",
            if report.on_front { "lies on" } else { "is off" },
            report.frontier_size,
            report.dominated_by
        ),
        format!("wrote report to {}", display(&out)),
    ])
}
