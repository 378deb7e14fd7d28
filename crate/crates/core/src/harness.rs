//! Seeded trials and the phase-transition sweep.
//!
//! A trial generates a blockmodel instance, optionally applies an
//! adversary, runs one method, rounds and scores. Failures inside a trial
//! are recorded on the trial, never propagated. A sweep scans `p` upward
//! for each `(method, q)` and reports the smallest `p` at which at least
//! half of the trials succeed.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alm::{solve, SolveResult, SolverConfig};
use crate::baselines::{run_baseline, BaselineConfig, BaselineMethod, BaselineOutput, DEFAULT_LRPS_LAMBDA_SCALE};
use crate::error::{Error, Result};
use crate::estimation::{estimate_parameters, EstimationResult};
use crate::graphmodel::{
    apply_adversary, complement_graph, generate_gsbm, misclassified_pairs, round_by_mean, AdversarySpec,
    BinaryMatrix, GsbmInstance, GsbmParams, SUCCESS_FRACTION,
};
use crate::objective::make_weights;

/// Fraction of trials that must succeed for a grid cell to count.
pub const MAJORITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Convex,
    Slink,
    Spectral,
    Lrps,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Convex, Method::Slink, Method::Spectral, Method::Lrps];

    pub fn name(self) -> &'static str {
        match self {
            Method::Convex => "convex",
            Method::Slink => "slink",
            Method::Spectral => "spectral",
            Method::Lrps => "lrps",
        }
    }

    fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::Convex => None,
            Method::Slink => Some(BaselineMethod::Slink),
            Method::Spectral => Some(BaselineMethod::Spectral),
            Method::Lrps => Some(BaselineMethod::Lrps),
        }
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::params(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub method: Method,
    pub rho: f64,
    /// Threshold for the convex method; `None` estimates it per trial.
    pub fixed_t: Option<f64>,
    /// Solve on the complement graph (the instance has `p < q`).
    pub heterophily: bool,
    pub lrps_lambda_scale: f64,
    /// Pass the number of planted clusters to the solver as a rank hint.
    pub rank_hint: bool,
    pub max_iter: usize,
    pub success_fraction: f64,
}

impl TrialConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            rho: 1.0,
            fixed_t: None,
            heterophily: false,
            lrps_lambda_scale: DEFAULT_LRPS_LAMBDA_SCALE,
            rank_hint: true,
            max_iter: crate::alm::DEFAULT_MAX_ITER,
            success_fraction: SUCCESS_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub misclassified: Option<usize>,
    pub success: bool,
    pub wall_time_secs: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Threshold handed to the convex solver.
    pub t_used: Option<f64>,
    pub estimation: Option<EstimationSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationSummary {
    pub r_hat: usize,
    pub k_hat: f64,
    pub p_hat: f64,
    pub q_hat: f64,
    pub t: f64,
}

impl From<&EstimationResult> for EstimationSummary {
    fn from(e: &EstimationResult) -> Self {
        Self { r_hat: e.r_hat, k_hat: e.k_hat, p_hat: e.p_hat, q_hat: e.q_hat, t: e.t }
    }
}

/// Everything a trial produced, for callers that inspect more than the
/// record.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    /// The instance the method saw, after adversarial edits.
    pub instance: GsbmInstance,
    pub estimate: Option<BinaryMatrix>,
    pub solve: Option<SolveResult>,
}

struct MethodOutput {
    estimate: BinaryMatrix,
    solve: Option<SolveResult>,
    t_used: Option<f64>,
    estimation: Option<EstimationSummary>,
}

fn run_method(inst: &GsbmInstance, r: usize, cfg: &TrialConfig) -> Result<MethodOutput> {
    let n = inst.adjacency.n();
    let graph = if cfg.heterophily { complement_graph(&inst.adjacency) } else { inst.adjacency.clone() };
    let hint = if cfg.rank_hint { Some(r.max(1)) } else { None };
    match cfg.method.baseline() {
        None => {
            let (t, estimation) = match cfg.fixed_t {
                Some(t) => (t, None),
                None => {
                    let est = estimate_parameters(&graph)?;
                    (est.t, Some(EstimationSummary::from(&est)))
                }
            };
            let mut solver = SolverConfig::new(make_weights(t, n, cfg.rho)?);
            solver.max_iter = cfg.max_iter;
            solver.svd_rank_hint = hint;
            let result = solve(&graph, &solver)?;
            Ok(MethodOutput { estimate: round_by_mean(&result.y_hat), solve: Some(result), t_used: Some(t), estimation })
        }
        Some(baseline) => {
            let bcfg = BaselineConfig { method: baseline, r, lrps_lambda_scale: cfg.lrps_lambda_scale };
            let mut solver = SolverConfig::new(make_weights(0.5, n, 1.0)?);
            solver.max_iter = cfg.max_iter;
            solver.svd_rank_hint = hint;
            let output = run_baseline(&graph, &bcfg, Some(&solver))?;
            let estimate = output.estimate();
            let solve = match output {
                BaselineOutput::Decomposition(result) => Some(result),
                BaselineOutput::Partition(_) => None,
            };
            Ok(MethodOutput { estimate, solve, t_used: None, estimation: None })
        }
    }
}

/// Runs one trial and keeps its intermediate products.
pub fn run_trial(
    params: &GsbmParams,
    adversary: Option<&AdversarySpec>,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<TrialOutcome> {
    let mut instance = generate_gsbm(params, seed);
    if let Some(spec) = adversary {
        instance.adjacency = apply_adversary(&instance.adjacency, &instance.truth, spec, params.homophily())?;
    }
    let n = params.n();
    let mut record = TrialRecord {
        method: cfg.method,
        seed,
        n,
        misclassified: None,
        success: false,
        wall_time_secs: 0.0,
        iterations: None,
        converged: None,
        t_used: None,
        estimation: None,
        error: None,
    };
    let start = Instant::now();
    let output = run_method(&instance, params.r(), cfg);
    record.wall_time_secs = start.elapsed().as_secs_f64();
    match output {
        Ok(out) => {
            let wrong = misclassified_pairs(&instance.truth, &out.estimate)?;
            record.misclassified = Some(wrong);
            record.success = (wrong as f64) < cfg.success_fraction * (n * n) as f64;
            record.iterations = out.solve.as_ref().map(|s| s.iterations);
            record.converged = out.solve.as_ref().map(|s| s.converged);
            record.t_used = out.t_used;
            record.estimation = out.estimation;
            Ok(TrialOutcome { record, instance, estimate: Some(out.estimate), solve: out.solve })
        }
        Err(e) => {
            record.error = Some(e.to_string());
            Ok(TrialOutcome { record, instance, estimate: None, solve: None })
        }
    }
}

/// Unvalidated model description; validation happens inside a trial so
/// that bad parameters produce an error record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub cluster_sizes: Vec<usize>,
    pub n_outliers: usize,
    pub p: f64,
    pub q: f64,
}

impl ModelSpec {
    pub fn standard(r: usize, k: usize, p: f64, q: f64) -> Self {
        Self { cluster_sizes: vec![k; r], n_outliers: 0, p, q }
    }

    pub fn n(&self) -> usize {
        self.cluster_sizes.iter().sum::<usize>() + self.n_outliers
    }

    pub fn params(&self) -> Result<GsbmParams> {
        GsbmParams::new(self.cluster_sizes.clone(), self.n_outliers, self.p, self.q)
    }
}

/// Runs one trial; every failure, including invalid parameters, lands in
/// the record's `error` field.
pub fn run_single(model: &ModelSpec, adversary: Option<&AdversarySpec>, cfg: &TrialConfig, seed: u64) -> TrialRecord {
    let outcome = model.params().and_then(|params| run_trial(&params, adversary, cfg, seed));
    match outcome {
        Ok(outcome) => outcome.record,
        Err(e) => TrialRecord {
            method: cfg.method,
            seed,
            n: model.n(),
            misclassified: None,
            success: false,
            wall_time_secs: 0.0,
            iterations: None,
            converged: None,
            t_used: None,
            estimation: None,
            error: Some(e.to_string()),
        },
    }
}

/// splitmix64 finalizer; portable across platforms.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` in cell `(method, q, p)`; depends on nothing else.
pub fn trial_seed(seed: u64, method: Method, q: f64, p: f64, trial: usize) -> u64 {
    [method.id(), q.to_bits(), p.to_bits(), trial as u64]
        .into_iter()
        .fold(splitmix64(seed), |h, part| splitmix64(h ^ part))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PSearch {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl PSearch {
    /// Grid `min + i·step` up to `max` (with a small slack for rounding).
    /// Empty when `max < min`.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let p = self.min + i as f64 * self.step;
            if p > self.max + 1e-9 * self.step {
                break;
            }
            // Round to 12 decimals so grids written differently coincide.
            out.push((p * 1e12).round() / 1e12);
            i += 1;
        }
        out
    }
}

fn default_success_threshold() -> f64 {
    SUCCESS_FRACTION
}

fn default_lrps_scale() -> f64 {
    DEFAULT_LRPS_LAMBDA_SCALE
}

fn default_true() -> bool {
    true
}

fn default_rho() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: usize,
    pub r: usize,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub q_grid: Vec<f64>,
    pub p_search: PSearch,
    pub trials: usize,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    pub methods: Vec<Method>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the estimated threshold of the convex method.
    #[serde(default)]
    pub fixed_t: Option<f64>,
    #[serde(default = "default_lrps_scale")]
    pub lrps_lambda_scale: f64,
    /// Stop scanning a `(method, q)` column at its first successful `p`.
    #[serde(default = "default_true")]
    pub stop_at_first_success: bool,
    /// Skip a cell's remaining trials once a majority of successes is out
    /// of reach. Never changes `p_min_success`.
    #[serde(default = "default_true")]
    pub stop_failed_cells: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.k == 0 || self.n != self.r * self.k {
            return Err(Error::params(format!(
                "sweep needs n = r·K with r, K ≥ 1, got n = {}, r = {}, K = {}",
                self.n, self.r, self.k
            )));
        }
        if self.q_grid.is_empty() || self.methods.is_empty() {
            return Err(Error::params("q_grid and methods must be non-empty"));
        }
        if self.q_grid.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::params("every q must lie in [0, 1]"));
        }
        if !(self.p_search.step > 0.0) || !self.p_search.min.is_finite() || !self.p_search.max.is_finite() {
            return Err(Error::params("p_search needs finite bounds and a positive step"));
        }
        if self.trials == 0 {
            return Err(Error::params("trials must be at least 1"));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::params("success_threshold must be positive"));
        }
        if !(self.rho > 0.0) || !(self.lrps_lambda_scale > 0.0) {
            return Err(Error::params("rho and lrps_lambda_scale must be positive"));
        }
        if let Some(t) = self.fixed_t {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::params(format!("fixed_t = {t} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    fn trial_config(&self, method: Method) -> TrialConfig {
        let mut cfg = TrialConfig::new(method);
        cfg.rho = self.rho;
        cfg.fixed_t = self.fixed_t;
        cfg.lrps_lambda_scale = self.lrps_lambda_scale;
        cfg.success_fraction = self.success_threshold;
        cfg
    }
}

/// Summary of one `(method, q)` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub q: f64,
    /// Smallest scanned `p` with a majority of successes; `None` if none.
    pub p_min_success: Option<f64>,
    /// Success rate at `p_min_success`, or at the last scanned `p` when
    /// there is none (over the trials actually run in that cell).
    pub success_rate: f64,
    /// Mean misclassified pairs over the trials that ran to completion, at
    /// the same `p` as `success_rate`.
    pub mean_misclassified: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub method: Method,
    pub q: f64,
    pub p: f64,
    pub trial: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellRecord>,
}

struct CellSummary {
    success_rate: f64,
    mean_misclassified: f64,
}

fn run_cell(spec: &SweepSpec, method: Method, q: f64, p: f64, cells: &mut Vec<CellRecord>) -> CellSummary {
    let model = ModelSpec::standard(spec.r, spec.k, p, q);
    let cfg = spec.trial_config(method);
    let needed = (MAJORITY * spec.trials as f64).ceil() as usize;
    let (mut successes, mut total, mut completed) = (0usize, 0usize, 0usize);
    let mut ran = 0usize;
    for trial in 0..spec.trials {
        if spec.stop_failed_cells && successes + (spec.trials - trial) < needed {
            break;
        }
        ran += 1;
        let seed = trial_seed(spec.seed, method, q, p, trial);
        let record = run_single(&model, None, &cfg, seed);
        successes += record.success as usize;
        if let Some(m) = record.misclassified {
            total += m;
            completed += 1;
        }
        cells.push(CellRecord { method, q, p, trial, record });
    }
    CellSummary {
        success_rate: successes as f64 / ran as f64,
        mean_misclassified: if completed == 0 { f64::NAN } else { total as f64 / completed as f64 },
    }
}

/// Runs the sweep. Only `p > q` is scanned (the homophilous side). Output
/// order is `methods × q_grid` as given, independent of execution order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.p_search.grid();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &q in &spec.q_grid {
            let mut row = SweepRow { method, q, p_min_success: None, success_rate: 0.0, mean_misclassified: f64::NAN };
            let mut found = false;
            for &p in grid.iter().filter(|&&p| p > q && p <= 1.0) {
                if found && spec.stop_at_first_success {
                    break;
                }
                let summary = run_cell(spec, method, q, p, &mut cells);
                if !found {
                    row.success_rate = summary.success_rate;
                    row.mean_misclassified = summary.mean_misclassified;
                    if summary.success_rate >= MAJORITY {
                        row.p_min_success = Some(p);
                        found = true;
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(SweepResult { rows, cells })
}

pub const CSV_HEADER: &str = "method,q,p_min_success,success_rate,mean_misclassified";

/// CSV with [`CSV_HEADER`]; a missing `p_min_success` is an empty field.
pub fn write_rows_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        writer.write_record([
            row.method.name().to_string(),
            row.q.to_string(),
            row.p_min_success.map(|p| p.to_string()).unwrap_or_default(),
            row.success_rate.to_string(),
            row.mean_misclassified.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn write_rows_csv_file(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows_csv(rows, std::fs::File::create(path)?)
}
