//! End-to-end experiments: resolve a dataset, split it repeatedly, select
//! hyperparameters by grid-search CV on the training part, refit and score on
//! the held-out part.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigdr_core::measures::SesOptions;
use sigdr_core::regress::cv::{cv_score, log_grid, select_best, Folds};
use sigdr_core::regress::lasso::{LassoSettings, StandardizedLasso};
use sigdr_core::regress::{metrics, CenteredKrr, HyperParams, Method, RbfBaseline};
use sigdr_core::sigkernel::{sigma_from_lengthscale, GramMatrix};
use sigdr_core::{Dataset, EmpiricalMeasure};

use crate::error::StageExt;
use crate::io;
use crate::parallel;
use crate::pipeline::{FittedPreprocess, Preprocess};
use crate::synth::GeneratorConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Ses,
    Kes,
    DrRbf,
}

impl MethodName {
    pub fn method(self) -> Method {
        match self {
            MethodName::Ses => Method::Ses,
            MethodName::Kes => Method::Kes,
            MethodName::DrRbf => Method::DrRbf,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Ses => "ses",
            MethodName::Kes => "kes",
            MethodName::DrRbf => "dr-rbf",
        }
    }
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ses" => Ok(MethodName::Ses),
            "kes" => Ok(MethodName::Kes),
            "dr-rbf" => Ok(MethodName::DrRbf),
            _ => Err(Error::config(format!("unknown method '{s}' (expected ses, kes or dr-rbf)"))),
        }
    }
}

/// Where the groups come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv { data: PathBuf, labels: PathBuf },
    Generated(GeneratorConfig),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Generated(GeneratorConfig::Circuit(Default::default()))
    }
}

/// Per-axis replacements for the default search grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub alpha: Option<Vec<f64>>,
    pub l1: Option<Vec<f64>>,
    pub l2: Option<Vec<f64>>,
    pub inner_level: Option<Vec<usize>>,
    pub outer_level: Option<Vec<usize>>,
}

impl GridSpec {
    /// Cartesian product of the axes the method uses.
    pub fn build(&self, method: MethodName) -> Vec<HyperParams> {
        let decades = log_grid(-3, 3);
        let axis = |o: &Option<Vec<f64>>, d: &[f64]| o.clone().unwrap_or_else(|| d.to_vec());
        let mut grid = Vec::new();
        match method {
            MethodName::Kes => {
                for &l2 in &axis(&self.l2, &decades) {
                    for &a in &axis(&self.alpha, &decades) {
                        grid.push(HyperParams::kes(l2, a));
                    }
                }
            }
            MethodName::Ses => {
                let inner = self.inner_level.clone().unwrap_or_else(|| vec![2, 3]);
                let outer = self.outer_level.clone().unwrap_or_else(|| vec![2]);
                for &n in &inner {
                    for &m in &outer {
                        for &a in &axis(&self.alpha, &log_grid(-5, 5)) {
                            grid.push(HyperParams::ses(n, m, a));
                        }
                    }
                }
            }
            MethodName::DrRbf => {
                for &l1 in &axis(&self.l1, &decades) {
                    for &l2 in &axis(&self.l2, &decades) {
                        for &a in &axis(&self.alpha, &decades) {
                            grid.push(HyperParams::dr_rbf(l1, l2, a));
                        }
                    }
                }
            }
        }
        grid
    }
}

/// Options of the SES featurizer other than the two truncation levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SesSettings {
    pub factorial_scaling: bool,
    pub time_augment_outer: bool,
    pub max_features: usize,
}

impl Default for SesSettings {
    fn default() -> Self {
        let o = SesOptions::new(2, 2);
        SesSettings {
            factorial_scaling: o.factorial_scaling,
            time_augment_outer: o.time_augment_outer,
            max_features: o.max_features,
        }
    }
}

impl SesSettings {
    pub fn options(&self, inner_level: usize, outer_level: usize) -> SesOptions {
        SesOptions {
            factorial_scaling: self.factorial_scaling,
            time_augment_outer: self.time_augment_outer,
            max_features: self.max_features,
            ..SesOptions::new(inner_level, outer_level)
        }
    }
}

/// Variable swept across runs of the same experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub drop_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub method: MethodName,
    pub preprocess: Preprocess,
    pub grid: GridSpec,
    pub ses: SesSettings,
    /// Dyadic refinement of the signature-kernel solver.
    pub refinement: u32,
    pub folds: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::default(),
            method: MethodName::Kes,
            preprocess: Preprocess::default(),
            grid: GridSpec::default(),
            ses: SesSettings::default(),
            refinement: 0,
            folds: 5,
            repeats: 5,
            train_fraction: 0.8,
            seed: 0,
            sweep: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path).map_err(|e| Error::config(e.to_string()))?;
        Self::from_json(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        if self.refinement > 16 {
            return Err(Error::config("refinement above 16 is not supported"));
        }
        self.preprocess.validate()?;
        let grid = self.grid.build(self.method);
        if grid.is_empty() {
            return Err(Error::config("hyperparameter grid is empty"));
        }
        for p in &grid {
            let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
            if !(p.alpha >= 0.0 && p.alpha.is_finite() && positive(p.l1) && positive(p.l2)) {
                return Err(Error::config(format!("invalid grid point {p:?}")));
            }
            if self.method == MethodName::Ses && p.alpha == 0.0 {
                continue;
            }
            if self.method != MethodName::Ses && p.alpha <= 0.0 {
                return Err(Error::config("ridge parameters must be positive"));
            }
            if matches!(p.inner_level, Some(0)) || matches!(p.outer_level, Some(0)) {
                return Err(Error::config("signature levels must be at least 1"));
            }
        }
        if let Some(s) = &self.sweep {
            if !matches!(self.dataset, DatasetSource::Generated(GeneratorConfig::Circuit(_))) {
                return Err(Error::config("drop-rate sweeps need the circuit generator"));
            }
            if s.drop_rate.is_empty() || s.drop_rate.iter().any(|r| !(0.0..1.0).contains(r)) {
                return Err(Error::config("sweep drop rates must be non-empty and within [0, 1)"));
            }
        }
        if let DatasetSource::Generated(g) = &self.dataset {
            match g {
                GeneratorConfig::Circuit(c) => c.validate()?,
                GeneratorConfig::IdealGas(c) => c.validate()?,
                GeneratorConfig::RoughVol(c) => c.validate()?,
            }
        }
        Ok(())
    }

    /// Set the drop rate of a circuit dataset.
    pub fn set_drop_rate(&mut self, rate: f64) -> Result<()> {
        match &mut self.dataset {
            DatasetSource::Generated(GeneratorConfig::Circuit(c)) => {
                c.drop_rate = rate;
                Ok(())
            }
            _ => Err(Error::config("--drop-rate applies to the circuit generator only")),
        }
    }

    /// Set the experiment seed and, for generated data, the generator seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let DatasetSource::Generated(g) = &mut self.dataset {
            g.set_seed(seed);
        }
    }
}

/// A resolved dataset with the fingerprint of its CSV form.
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub sha256: String,
}

pub fn load_dataset(source: &DatasetSource) -> Result<LoadedDataset> {
    match source {
        DatasetSource::Csv { data, labels } => Ok(LoadedDataset {
            dataset: io::read_dataset(data, labels)?,
            sha256: io::fingerprint_file(data)?,
        }),
        DatasetSource::Generated(g) => {
            let dataset = g.generate()?;
            let sha256 = io::fingerprint(io::dataset_csv(&dataset).as_bytes());
            Ok(LoadedDataset { dataset, sha256 })
        }
    }
}

/// Serializable mirror of [`HyperParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inner_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outer_level: Option<usize>,
}

impl From<HyperParams> for Hyper {
    fn from(p: HyperParams) -> Self {
        Hyper { alpha: p.alpha, l1: p.l1, l2: p.l2, inner_level: p.inner_level, outer_level: p.outer_level }
    }
}

impl From<Hyper> for HyperParams {
    fn from(p: Hyper) -> Self {
        HyperParams { alpha: p.alpha, l1: p.l1, l2: p.l2, inner_level: p.inner_level, outer_level: p.outer_level }
    }
}

/// Method-specific representation of the preprocessed groups, reused by
/// every grid point and fold.
pub enum Featurized {
    Kes { mmd: GramMatrix },
    Ses { features: HashMap<(usize, usize), (Vec<f64>, usize)> },
    DrRbf { distances: Vec<(f64, GramMatrix)> },
}

fn missing(what: &str) -> Error {
    Error::from(sigdr_core::Error::InvalidArgument(format!("grid point lacks {what}")))
}

impl Featurized {
    pub fn build(
        method: MethodName,
        groups: &[EmpiricalMeasure],
        grid: &[HyperParams],
        cfg: &ExperimentConfig,
    ) -> Result<Self> {
        match method {
            MethodName::Kes => Ok(Featurized::Kes { mmd: parallel::mmd_matrix(groups, cfg.refinement)? }),
            MethodName::Ses => {
                let mut levels: Vec<(usize, usize)> = grid
                    .iter()
                    .map(|p| Ok((p.inner_level.ok_or_else(|| missing("inner_level"))?, p.outer_level.ok_or_else(|| missing("outer_level"))?)))
                    .collect::<Result<_>>()?;
                levels.sort_unstable();
                levels.dedup();
                let mut features = HashMap::new();
                for (n, m) in levels {
                    features.insert((n, m), parallel::ses_matrix(groups, &cfg.ses.options(n, m))?);
                }
                Ok(Featurized::Ses { features })
            }
            MethodName::DrRbf => {
                let base = RbfBaseline::new(groups, None)?;
                let mut l1s: Vec<f64> = grid
                    .iter()
                    .map(|p| p.l1.ok_or_else(|| missing("l1")))
                    .collect::<Result<_>>()?;
                l1s.sort_by(f64::total_cmp);
                l1s.dedup();
                let distances = l1s
                    .par_iter()
                    .map(|&l1| Ok((l1, base.distance_matrix(l1)?)))
                    .collect::<Result<_>>()?;
                Ok(Featurized::DrRbf { distances })
            }
        }
    }

    /// Fit on `train` (global indices) with `p` and predict `test`.
    pub fn predict(&self, p: &HyperParams, labels: &[f64], train: &[usize], test: &[usize]) -> Result<Vec<f64>> {
        let y: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
        match self {
            Featurized::Kes { mmd } => kernel_predict(mmd, p, &y, train, test),
            Featurized::DrRbf { distances } => {
                let l1 = p.l1.ok_or_else(|| missing("l1"))?;
                let d = &distances
                    .iter()
                    .find(|(v, _)| *v == l1)
                    .ok_or_else(|| missing("precomputed l1"))?
                    .1;
                kernel_predict(d, p, &y, train, test)
            }
            Featurized::Ses { features } => {
                let key = (p.inner_level.ok_or_else(|| missing("inner_level"))?, p.outer_level.ok_or_else(|| missing("outer_level"))?);
                let (x, width) = features.get(&key).ok_or_else(|| missing("precomputed levels"))?;
                let rows = |idx: &[usize]| -> Vec<f64> {
                    idx.iter().flat_map(|&i| x[i * width..(i + 1) * width].iter().copied()).collect()
                };
                let fit = StandardizedLasso::fit(&rows(train), &y, p.alpha, &LassoSettings::default())?;
                if !fit.fit.converged {
                    log::warn!("lasso with alpha {} stopped after {} sweeps without converging", p.alpha, fit.fit.sweeps);
                }
                Ok(fit.predict(&rows(test)))
            }
        }
    }
}

fn kernel_predict(dist: &GramMatrix, p: &HyperParams, y: &[f64], train: &[usize], test: &[usize]) -> Result<Vec<f64>> {
    let sigma = sigma_from_lengthscale(p.l2.ok_or_else(|| missing("l2"))?);
    let s2 = sigma * sigma;
    let kernel = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|d| (-s2 * d).exp()).collect() };
    let k_train = kernel(dist.block(train, train));
    let k_test = kernel(dist.block(test, train));
    let model = CenteredKrr::fit_raw(&k_train, train.len(), y, p.alpha)?;
    Ok(model.predict_rows(&k_test)?)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th draw of purpose `stream` under `seed`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(stream ^ splitmix(index)))
}

const STREAM_SPLIT: u64 = 1;
const STREAM_FOLDS: u64 = 2;

/// Disjoint sorted train/test indices for one repeat.
pub fn train_test_split(m: usize, fraction: f64, min_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if m < min_train + 1 {
        return Err(Error::config(format!("{m} groups are too few for {min_train} training groups and a test set")));
    }
    let n_train = ((fraction * m as f64).round() as usize).clamp(min_train, m - 1);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Grid search by k-fold CV over `train` (global indices), grid points in parallel.
pub fn select_hyperparameters(
    feats: &Featurized,
    grid: &[HyperParams],
    labels: &[f64],
    train: &[usize],
    folds: usize,
    seed: u64,
) -> Result<sigdr_core::regress::CvOutcome> {
    let folds = Folds::new(train.len(), folds, seed)?;
    let local: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
    let results: Vec<(HyperParams, sigdr_core::Result<f64>)> = grid
        .par_iter()
        .map(|p| {
            let score = cv_score(p, &local, &folds, |p, tr, te| {
                let tr: Vec<usize> = tr.iter().map(|&i| train[i]).collect();
                let te: Vec<usize> = te.iter().map(|&i| train[i]).collect();
                feats.predict(p, labels, &tr, &te).map_err(|e| match e {
                    Error::Core(c) => c,
                    other => sigdr_core::Error::Numerical(other.to_string()),
                })
            });
            (*p, score)
        })
        .collect();
    let outcome = select_best(results)?;
    for (p, e) in &outcome.failures {
        log::warn!("grid point {p:?} skipped: {e}");
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub best: Hyper,
    pub cv_mse: f64,
    pub mse: f64,
    /// Absent when a test label is zero.
    pub mape: Option<f64>,
    pub predictions: Vec<f64>,
    pub skipped_grid_points: usize,
    pub featurize_seconds: f64,
    pub cv_seconds: f64,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub drop_rate: Option<f64>,
    pub dataset_sha256: String,
    pub repeats: Vec<RepeatReport>,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub mape_mean: Option<f64>,
    pub mape_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: MethodName,
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
    pub total_seconds: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// All repeats on one dataset.
pub fn evaluate(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<RepeatReport>> {
    let grid = cfg.grid.build(cfg.method);
    let labels = dataset.labels();
    let m = dataset.len();
    let mut cache: Option<(FittedPreprocess, Featurized)> = None;
    let mut out = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let (train, test) = train_test_split(m, cfg.train_fraction, cfg.folds, derive_seed(cfg.seed, STREAM_SPLIT, r as u64))?;
        let start = Instant::now();
        let train_groups: Vec<&EmpiricalMeasure> = train.iter().map(|&i| &dataset.groups()[i]).collect();
        let prep = cfg.preprocess.fit(&train_groups).stage("preprocess")?;
        let reuse = matches!(&cache, Some((p, _)) if *p == prep);
        if !reuse {
            let groups = prep.apply(dataset.groups()).stage("preprocess")?;
            let feats = Featurized::build(cfg.method, &groups, &grid, cfg).stage("featurize")?;
            cache = Some((prep, feats));
        }
        let feats = &cache.as_ref().expect("featurized").1;
        let featurize_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let outcome = select_hyperparameters(feats, &grid, labels, &train, cfg.folds, derive_seed(cfg.seed, STREAM_FOLDS, r as u64))
            .stage("cross-validation")?;
        let cv_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let predictions = feats.predict(&outcome.best, labels, &train, &test).stage("final fit")?;
        let fit_seconds = start.elapsed().as_secs_f64();

        let truth: Vec<f64> = test.iter().map(|&i| labels[i]).collect();
        let mse = metrics::mse(&truth, &predictions)?;
        let mape = metrics::mape(&truth, &predictions).ok();
        let ids = |idx: &[usize]| idx.iter().map(|&i| dataset.ids()[i].clone()).collect();
        log::info!("repeat {r}: best {:?}, cv mse {:.4e}, test mse {mse:.4e}", outcome.best, outcome.score);
        out.push(RepeatReport {
            repeat: r,
            train: ids(&train),
            test: ids(&test),
            best: outcome.best.into(),
            cv_mse: outcome.score,
            mse,
            mape,
            predictions,
            skipped_grid_points: outcome.failures.len(),
            featurize_seconds,
            cv_seconds,
            fit_seconds,
        });
    }
    Ok(out)
}

fn summarize(drop_rate: Option<f64>, sha: String, repeats: Vec<RepeatReport>) -> SweepPoint {
    let mses: Vec<f64> = repeats.iter().map(|r| r.mse).collect();
    let (mse_mean, mse_std) = mean_std(&mses);
    let mapes: Option<Vec<f64>> = repeats.iter().map(|r| r.mape).collect();
    let (mape_mean, mape_std) = match mapes {
        Some(v) => {
            let (a, b) = mean_std(&v);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    SweepPoint { drop_rate, dataset_sha256: sha, repeats, mse_mean, mse_std, mape_mean, mape_std }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let rates: Vec<Option<f64>> = match &cfg.sweep {
        Some(s) => s.drop_rate.iter().map(|&r| Some(r)).collect(),
        None => vec![None],
    };
    let mut points = Vec::with_capacity(rates.len());
    for rate in rates {
        let mut c = cfg.clone();
        if let Some(r) = rate {
            c.set_drop_rate(r)?;
        }
        let loaded = load_dataset(&c.dataset).stage("dataset")?;
        let repeats = evaluate(&loaded.dataset, &c)?;
        points.push(summarize(rate, loaded.sha256, repeats));
    }
    Ok(Report { method: cfg.method, config: cfg.clone(), points, total_seconds: start.elapsed().as_secs_f64() })
}

/// Remove every `*_seconds` field, recursively.
pub fn strip_timings(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_seconds"));
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

pub fn report_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("serializable report") + "\n"
}

/// Write `report.json`, `summary.csv` and, for sweeps, `curve.csv` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("report.json");
    io::write_text(&path, &report_json(report))?;
    written.push(path);

    let sweep = report.config.sweep.is_some();
    let mut summary = String::from(if sweep { "drop_rate,repeat,mse,mape,fit_seconds\n" } else { "repeat,mse,mape,fit_seconds\n" });
    for p in &report.points {
        for r in &p.repeats {
            if let Some(rate) = p.drop_rate {
                summary.push_str(&format!("{rate},"));
            }
            let mape = r.mape.map(|v| v.to_string()).unwrap_or_default();
            summary.push_str(&format!("{},{},{},{}\n", r.repeat, r.mse, mape, r.fit_seconds));
        }
    }
    let path = dir.join("summary.csv");
    io::write_text(&path, &summary)?;
    written.push(path);

    if sweep {
        let mut curve = String::from("drop_rate,mse_mean,mse_std,mape_mean,mape_std\n");
        for p in &report.points {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            curve.push_str(&format!(
                "{},{},{},{},{}\n",
                p.drop_rate.unwrap_or(f64::NAN),
                p.mse_mean,
                p.mse_std,
                opt(p.mape_mean),
                opt(p.mape_std)
            ));
        }
        let path = dir.join("curve.csv");
        io::write_text(&path, &curve)?;
        written.push(path);
    }
    Ok(written)
}

/// Fitted parameters of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelWeights {
    Kernel { dual_weights: Vec<f64>, label_mean: f64, jitter: f64 },
    Linear {
        weights: Vec<f64>,
        intercept: f64,
        column_mean: Vec<f64>,
        column_scale: Vec<f64>,
        label_mean: f64,
        label_scale: f64,
        converged: bool,
    },
}

/// Serialized model: enough to reproduce predictions given the training groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub method: MethodName,
    pub hyperparameters: Hyper,
    pub refinement: u32,
    pub preprocess: FittedPreprocess,
    pub ses: SesSettings,
    pub cv_mse: f64,
    pub dataset_sha256: String,
    pub train: Vec<String>,
    pub weights: ModelWeights,
}

fn kernel_weights(dist: &GramMatrix, p: &HyperParams, y: &[f64]) -> Result<ModelWeights> {
    let sigma = sigma_from_lengthscale(p.l2.ok_or_else(|| missing("l2"))?);
    let k = dist.to_kernel(sigma)?;
    let fit = CenteredKrr::fit_raw(k.entries(), k.size(), y, p.alpha).stage("final fit")?;
    Ok(ModelWeights::Kernel { dual_weights: fit.fit.dual_weights, label_mean: fit.label_mean, jitter: fit.fit.jitter })
}

/// Grid search on every group of `dataset`, then refit the best point on all of them.
pub fn fit_model(loaded: &LoadedDataset, cfg: &ExperimentConfig) -> Result<Model> {
    cfg.validate()?;
    let dataset = &loaded.dataset;
    let grid = cfg.grid.build(cfg.method);
    let all: Vec<usize> = (0..dataset.len()).collect();
    let refs: Vec<&EmpiricalMeasure> = dataset.groups().iter().collect();
    let prep = cfg.preprocess.fit(&refs).stage("preprocess")?;
    let groups = prep.apply(dataset.groups()).stage("preprocess")?;
    let feats = Featurized::build(cfg.method, &groups, &grid, cfg).stage("featurize")?;
    let outcome = select_hyperparameters(&feats, &grid, dataset.labels(), &all, cfg.folds, derive_seed(cfg.seed, STREAM_FOLDS, 0))
        .stage("cross-validation")?;
    let p = outcome.best;
    let y = dataset.labels();
    let weights = match &feats {
        Featurized::Ses { features } => {
            let (x, _) = &features[&(p.inner_level.unwrap_or(2), p.outer_level.unwrap_or(2))];
            let fit = StandardizedLasso::fit(x, y, p.alpha, &LassoSettings::default()).stage("final fit")?;
            ModelWeights::Linear {
                weights: fit.fit.weights,
                intercept: fit.fit.intercept,
                column_mean: fit.columns.mean,
                column_scale: fit.columns.scale,
                label_mean: fit.label_mean,
                label_scale: fit.label_scale,
                converged: fit.fit.converged,
            }
        }
        Featurized::Kes { mmd } => kernel_weights(mmd, &p, y)?,
        Featurized::DrRbf { distances } => {
            let dist = &distances
                .iter()
                .find(|(v, _)| Some(*v) == p.l1)
                .ok_or_else(|| missing("precomputed l1"))?
                .1;
            kernel_weights(dist, &p, y)?
        }
    };
    Ok(Model {
        method: cfg.method,
        hyperparameters: p.into(),
        refinement: cfg.refinement,
        preprocess: prep,
        ses: cfg.ses.clone(),
        cv_mse: outcome.score,
        dataset_sha256: loaded.sha256.clone(),
        train: dataset.ids().to_vec(),
        weights,
    })
}
