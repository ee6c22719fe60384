use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, Method, RateSource};
use super::csv_io::{load_csv, CsvSchema};
use super::synth::synth_generate;
use crate::data::Dataset;
use crate::denoise::{denoise_ccn, DenoiseConfig};
use crate::error::{Error, Result};
use crate::estimation::{estimate_ccn_rates, estimate_eo_rates};
use crate::fairtrain::{train_fair, train_fair_noisy, FairClassifier, NoiseSource};
use crate::metrics::{accuracy_risk, Criterion, FairnessSpec};
use crate::noise::{inject_ccn, CcnNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

/// One evaluation of one trained model. Metrics are measured against the
/// clean sensitive attribute and are empty when the cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub tau: f64,
    /// Tolerance enforced by `cor_scale`.
    pub tau_prime: Option<f64>,
    pub rho_plus_hat: Option<f64>,
    pub rho_minus_hat: Option<f64>,
    pub split: Split,
    pub fairness_violation: Option<f64>,
    pub error: Option<f64>,
    pub seed: u64,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub method: Method,
    pub tau: f64,
    pub rates: Option<CcnNoise>,
    pub repetition: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResults {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
}

pub const RESULT_COLUMNS: [&str; 10] = [
    "method",
    "tau",
    "tau_prime",
    "rho_plus_hat",
    "rho_minus_hat",
    "split",
    "fairness_violation",
    "error",
    "seed",
    "repetition",
];

/// An independent seed for `stream` derived from `seed`.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const SPLIT_STREAM: u64 = 1;
const CORRUPTION_STREAM: u64 = 2;

/// Random split by a seeded shuffle; each side keeps the original order.
pub fn train_test_split(data: &Dataset, train_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(stream_seed(seed, SPLIT_STREAM)));
    let k = (train_fraction * data.len() as f64).round() as usize;
    let (mut train, mut test) = (idx[..k].to_vec(), idx[k..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (data.subset(&train), data.subset(&test))
}

pub fn load_source(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic(s) => synth_generate(s),
        DataSource::Csv { path, drop_missing } => {
            let schema = CsvSchema {
                drop_missing: *drop_missing,
                ..CsvSchema::default()
            };
            Ok(load_csv(path, &schema)?.data)
        }
    }
}

struct Repetition {
    index: usize,
    seed: u64,
    train: Dataset,
    train_corrupted: Dataset,
    test: Dataset,
    /// One entry per rate guess; `Err` when estimation failed.
    rates: Vec<std::result::Result<CcnNoise, String>>,
}

fn prepare(config: &ExperimentConfig, data: &Dataset, index: usize) -> Repetition {
    let seed = config.seed.wrapping_add(index as u64);
    let (train, test) = train_test_split(data, config.train_fraction, seed);
    let train_corrupted = inject_ccn(&train, config.noise, stream_seed(seed, CORRUPTION_STREAM));
    let rates = match &config.rates {
        RateSource::Known => vec![Ok(config.noise)],
        RateSource::Sweep(list) => list.iter().copied().map(Ok).collect(),
        RateSource::Estimate(est) => {
            let estimate = match config.criterion {
                Criterion::DemographicParity => estimate_ccn_rates(&train_corrupted, est).map(|e| e.rates),
                Criterion::EqualOpportunity => estimate_eo_rates(&train_corrupted, est).map(|e| e.slice_rates.rates),
            };
            vec![estimate.map_err(|e| format!("noise estimation failed: {e}"))]
        }
    };
    Repetition {
        index,
        seed,
        train,
        train_corrupted,
        test,
        rates,
    }
}

fn train_method(
    config: &ExperimentConfig,
    rep: &Repetition,
    method: Method,
    spec: &FairnessSpec,
    rates: &std::result::Result<CcnNoise, String>,
) -> std::result::Result<(FairClassifier, Option<f64>), String> {
    let needs_rates = || rates.clone();
    let model = match method {
        Method::Nocor => train_fair(&rep.train, spec, &config.train),
        Method::Cor => train_fair(&rep.train_corrupted, spec, &config.train),
        Method::CorScale => {
            let rates = needs_rates()?;
            let m = train_fair_noisy(&rep.train_corrupted, spec, &NoiseSource::Ccn(rates), &config.train)
                .map_err(|e| e.to_string())?;
            let tau_prime = m.trace.tolerance;
            return Ok((m, Some(tau_prime)));
        }
        Method::Denoise => {
            let rates = needs_rates()?;
            let (cleaned, _) =
                denoise_ccn(&rep.train_corrupted, rates, &DenoiseConfig::default()).map_err(|e| e.to_string())?;
            train_fair(&cleaned, spec, &config.train)
        }
    };
    model.map(|m| (m, None)).map_err(|e| e.to_string())
}

fn run_cell(
    config: &ExperimentConfig,
    rep: &Repetition,
    rate_index: usize,
    tau: f64,
    method: Method,
) -> (Vec<ResultRow>, Option<CellFailure>) {
    let rates = &rep.rates[rate_index];
    let hat = rates.as_ref().ok().copied();
    let row = |split, tau_prime, metrics: Option<(f64, f64)>| ResultRow {
        method,
        tau,
        tau_prime,
        rho_plus_hat: hat.map(|r| r.rho_plus()),
        rho_minus_hat: hat.map(|r| r.rho_minus()),
        split,
        fairness_violation: metrics.map(|m| m.0),
        error: metrics.map(|m| m.1),
        seed: rep.seed,
        repetition: rep.index,
    };
    let outcome = FairnessSpec::new(config.criterion, config.fairness_loss, tau)
        .map_err(|e| e.to_string())
        .and_then(|spec| {
            let (model, tau_prime) = train_method(config, rep, method, &spec, rates)?;
            let mut metrics = Vec::with_capacity(2);
            for (split, data) in [(Split::Train, &rep.train), (Split::Test, &rep.test)] {
                let violation = spec.disparity(data, &model).map_err(|e| e.to_string())?;
                let error = accuracy_risk(data, &model).map_err(|e| e.to_string())?;
                metrics.push((split, (violation, error)));
            }
            Ok((tau_prime, metrics))
        });
    match outcome {
        Ok((tau_prime, metrics)) => (
            metrics.into_iter().map(|(s, m)| row(s, tau_prime, Some(m))).collect(),
            None,
        ),
        Err(message) => (
            vec![row(Split::Train, None, None), row(Split::Test, None, None)],
            Some(CellFailure {
                method,
                tau,
                rates: hat,
                repetition: rep.index,
                message,
            }),
        ),
    }
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

fn row_order(a: &ResultRow, b: &ResultRow) -> Ordering {
    a.method
        .cmp(&b.method)
        .then(a.tau.total_cmp(&b.tau))
        .then(cmp_opt(a.rho_plus_hat, b.rho_plus_hat))
        .then(cmp_opt(a.rho_minus_hat, b.rho_minus_hat))
        .then(a.repetition.cmp(&b.repetition))
        .then(a.split.cmp(&b.split))
}

/// Runs every (repetition, rate guess, τ, method) cell on the current
/// rayon pool. Failed cells yield rows with empty metrics plus a
/// [`CellFailure`]; only an unloadable dataset or invalid config is an error.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResults> {
    config.validate()?;
    let data = load_source(&config.data)?;
    data.require_nonempty()?;
    let reps: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| prepare(config, &data, r))
        .collect();
    let mut cells = Vec::new();
    for rep in &reps {
        for rate_index in 0..rep.rates.len() {
            for &tau in &config.taus {
                for &method in &config.methods {
                    cells.push((rep, rate_index, tau, method));
                }
            }
        }
    }
    let outcomes: Vec<_> = cells
        .into_par_iter()
        .map(|(rep, rate_index, tau, method)| run_cell(config, rep, rate_index, tau, method))
        .collect();
    let mut results = SweepResults::default();
    for (rows, failure) in outcomes {
        results.rows.extend(rows);
        results.failures.extend(failure);
    }
    results.rows.sort_by(row_order);
    Ok(results)
}

/// [`run_sweep`] on a dedicated pool of `jobs` threads (`None`: all cores).
pub fn run_sweep_with_jobs(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepResults> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Schema {
            row: None,
            message: format!("{other:?}"),
        },
    }
}

/// Path of the aggregated companion file: `<stem>_summary.<ext>`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_summary.{}", ext.to_string_lossy()),
        None => format!("{stem}_summary"),
    };
    path.with_file_name(name)
}

/// Mean and sample standard deviation over repetitions for one
/// (method, τ, ρ̂, split) group. Failed cells are not counted.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub tau: f64,
    pub rho_plus_hat: Option<f64>,
    pub rho_minus_hat: Option<f64>,
    pub split: Split,
    pub count: usize,
    pub tau_prime_mean: Option<f64>,
    pub fairness_violation_mean: f64,
    pub fairness_violation_std: f64,
    pub error_mean: f64,
    pub error_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(ResultRow, Vec<&ResultRow>)> = Vec::new();
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| row_order(a, b));
    for r in sorted {
        let same = |g: &ResultRow| {
            g.method == r.method
                && g.tau == r.tau
                && g.rho_plus_hat == r.rho_plus_hat
                && g.rho_minus_hat == r.rho_minus_hat
                && g.split == r.split
        };
        match groups.iter_mut().find(|(key, _)| same(key)) {
            Some((_, members)) => members.push(r),
            None => groups.push((r.clone(), vec![r])),
        }
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .filter_map(|(key, members)| {
            let ok: Vec<&&ResultRow> = members.iter().filter(|m| m.fairness_violation.is_some()).collect();
            if ok.is_empty() {
                return None;
            }
            let viol: Vec<f64> = ok.iter().filter_map(|m| m.fairness_violation).collect();
            let err: Vec<f64> = ok.iter().filter_map(|m| m.error).collect();
            let primes: Vec<f64> = ok.iter().filter_map(|m| m.tau_prime).collect();
            let (vm, vs) = mean_std(&viol);
            let (em, es) = mean_std(&err);
            Some(SummaryRow {
                method: key.method,
                tau: key.tau,
                rho_plus_hat: key.rho_plus_hat,
                rho_minus_hat: key.rho_minus_hat,
                split: key.split,
                count: ok.len(),
                tau_prime_mean: (!primes.is_empty()).then(|| mean_std(&primes).0),
                fairness_violation_mean: vm,
                fairness_violation_std: vs,
                error_mean: em,
                error_std: es,
            })
        })
        .collect();
    // Groups were built from sorted rows, so this only reorders splits.
    out.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.tau.total_cmp(&b.tau))
            .then(cmp_opt(a.rho_plus_hat, b.rho_plus_hat))
            .then(cmp_opt(a.rho_minus_hat, b.rho_minus_hat))
            .then(a.split.cmp(&b.split))
    });
    out
}

/// Writes the per-repetition table to `path` and the aggregate to
/// [`summary_path`]`(path)`. Returns the summary path.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RESULT_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            format!("{:?}", r.tau),
            fmt_opt(r.tau_prime),
            fmt_opt(r.rho_plus_hat),
            fmt_opt(r.rho_minus_hat),
            r.split.to_string(),
            fmt_opt(r.fairness_violation),
            fmt_opt(r.error),
            r.seed.to_string(),
            r.repetition.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let summary = summary_path(path);
    let mut w = csv::Writer::from_path(&summary).map_err(csv_err(&summary))?;
    w.write_record([
        "method",
        "tau",
        "rho_plus_hat",
        "rho_minus_hat",
        "split",
        "repetitions",
        "tau_prime_mean",
        "fairness_violation_mean",
        "fairness_violation_std",
        "error_mean",
        "error_std",
    ])
    .map_err(csv_err(&summary))?;
    for s in aggregate(rows) {
        w.write_record([
            s.method.to_string(),
            format!("{:?}", s.tau),
            fmt_opt(s.rho_plus_hat),
            fmt_opt(s.rho_minus_hat),
            s.split.to_string(),
            s.count.to_string(),
            fmt_opt(s.tau_prime_mean),
            format!("{:?}", s.fairness_violation_mean),
            format!("{:?}", s.fairness_violation_std),
            format!("{:?}", s.error_mean),
            format!("{:?}", s.error_std),
        ])
        .map_err(csv_err(&summary))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    Ok(summary)
}

/// Parses a table written by [`emit_results`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RESULT_COLUMNS) {
        return Err(Error::Schema {
            row: Some(1),
            message: format!("expected columns {}", RESULT_COLUMNS.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(csv_err(path))?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let parse_err = |j: usize, message: String| Error::Parse {
            row: line,
            column: RESULT_COLUMNS[j].into(),
            message,
        };
        let num = |j: usize| -> Result<f64> { field(j).parse().map_err(|e| parse_err(j, format!("{e}"))) };
        let opt = |j: usize| -> Result<Option<f64>> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        rows.push(ResultRow {
            method: field(0).parse().map_err(|e: Error| parse_err(0, e.to_string()))?,
            tau: num(1)?,
            tau_prime: opt(2)?,
            rho_plus_hat: opt(3)?,
            rho_minus_hat: opt(4)?,
            split: field(5).parse().map_err(|e: Error| parse_err(5, e.to_string()))?,
            fairness_violation: opt(6)?,
            error: opt(7)?,
            seed: field(8).parse().map_err(|e| parse_err(8, format!("{e}")))?,
            repetition: field(9).parse().map_err(|e| parse_err(9, format!("{e}")))?,
        });
    }
    Ok(rows)
}
