use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::synth::SyntheticConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationConfig;
use crate::fairtrain::{IterateSelection, TrainConfig};
use crate::metrics::{Criterion, FairnessLoss};
use crate::noise::CcnNoise;

/// A training method compared by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Clean sensitive attribute, tolerance `τ`.
    Nocor,
    /// Corrupted attribute, tolerance `τ`.
    Cor,
    /// Corrupted attribute, tolerance `τ·(1 − α − β)`.
    CorScale,
    /// Corrupted attribute relabeled by rank, then tolerance `τ`.
    Denoise,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Nocor, Method::Cor, Method::CorScale, Method::Denoise];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nocor => "nocor",
            Method::Cor => "cor",
            Method::CorScale => "cor_scale",
            Method::Denoise => "denoise (simplified)",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nocor" => Ok(Method::Nocor),
            "cor" => Ok(Method::Cor),
            "cor_scale" => Ok(Method::CorScale),
            "denoise" | "denoise (simplified)" => Ok(Method::Denoise),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    Csv { path: PathBuf, drop_missing: bool },
}

/// The flip rates handed to the noise-aware methods.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    /// The true corruption rates.
    Known,
    /// Estimated from each corrupted training split.
    Estimate(EstimationConfig),
    /// Each listed guess in turn, as an extra sweep dimension.
    Sweep(Vec<CcnNoise>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub criterion: Criterion,
    pub fairness_loss: FairnessLoss,
    /// Corruption applied to each training split.
    pub noise: CcnNoise,
    pub rates: RateSource,
    pub taus: Vec<f64>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub train_fraction: f64,
    /// Repetition `r` uses seed `seed + r`.
    pub seed: u64,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.taus.is_empty() {
            return bad("tau grid is empty".into());
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return bad(format!("tolerance {t} must be finite and nonnegative"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction {} must lie in (0, 1)", self.train_fraction));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return bad("methods are listed more than once".into());
        }
        if let RateSource::Sweep(list) = &self.rates {
            if list.is_empty() {
                return bad("rate sweep is empty".into());
            }
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        self.train.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        FlatConfig::from_toml_str(text)?.resolve(None)
    }

    /// Loads a config file. A relative `data_path` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        FlatConfig::load(path)?.resolve(path.parent())
    }
}

/// The on-disk form: one flat table of keys, all optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatConfig {
    pub data_path: Option<String>,
    pub drop_missing: bool,
    pub synthetic: String,
    pub n: usize,
    pub data_seed: Option<u64>,
    pub synthetic_means: Option<Vec<Vec<f64>>>,
    pub synthetic_variance: Option<f64>,
    pub synthetic_proportions: Option<Vec<f64>>,
    pub criterion: String,
    pub fairness_loss: Option<String>,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub rate_source: String,
    pub rho_plus_hat: Vec<f64>,
    pub rho_minus_hat: Vec<f64>,
    pub taus: Vec<f64>,
    pub methods: Vec<String>,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub dual_step: f64,
    pub dual_bound: f64,
    pub dual_init: f64,
    pub outer_iterations: usize,
    pub base_iterations: usize,
    pub base_step: f64,
    pub regularization: f64,
    pub selection: IterateSelection,
    pub feasibility_slack: f64,
    pub refinement_steps: usize,
}

impl Default for FlatConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        FlatConfig {
            data_path: None,
            drop_missing: false,
            synthetic: "benchmark".into(),
            n: 4000,
            data_seed: None,
            synthetic_means: None,
            synthetic_variance: None,
            synthetic_proportions: None,
            criterion: "dp".into(),
            fairness_loss: None,
            rho_plus: 0.15,
            rho_minus: 0.15,
            rate_source: "known".into(),
            rho_plus_hat: Vec::new(),
            rho_minus_hat: Vec::new(),
            taus: vec![0.02, 0.05, 0.1, 0.15, 0.2],
            methods: vec!["nocor".into(), "cor".into(), "cor_scale".into(), "denoise".into()],
            repetitions: 3,
            train_fraction: 0.8,
            seed: 0,
            dual_step: t.dual_step,
            dual_bound: t.dual_bound,
            dual_init: t.dual_init,
            outer_iterations: t.outer_iterations,
            base_iterations: t.base_iterations,
            base_step: t.base_step,
            regularization: t.regularization,
            selection: t.selection,
            feasibility_slack: t.feasibility_slack,
            refinement_steps: t.refinement_steps,
        }
    }
}

fn rate_sweep(plus: &[f64], minus: &[f64]) -> Result<Vec<CcnNoise>> {
    let len = plus.len().max(minus.len());
    let pick = |v: &[f64], i: usize| -> Result<f64> {
        match v.len() {
            1 => Ok(v[0]),
            n if n == len => Ok(v[i]),
            _ => Err(Error::InvalidConfig(
                "rho_plus_hat and rho_minus_hat must have equal lengths or length 1".into(),
            )),
        }
    };
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::InvalidConfig(
            "a rate sweep needs rho_plus_hat and rho_minus_hat".into(),
        ));
    }
    (0..len)
        .map(|i| CcnNoise::new(pick(plus, i)?, pick(minus, i)?))
        .collect()
}

impl FlatConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Parses a config file without resolving it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
        let data = match &self.data_path {
            Some(p) => {
                let path = PathBuf::from(p);
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                };
                DataSource::Csv {
                    path,
                    drop_missing: self.drop_missing,
                }
            }
            None => {
                let seed = self.data_seed.unwrap_or(self.seed);
                let mut s = match self.synthetic.as_str() {
                    "benchmark" => SyntheticConfig::benchmark(self.n, seed),
                    "high_disparity" => SyntheticConfig::high_disparity(self.n, seed),
                    "anchor_points" => SyntheticConfig::anchor_points(self.n, seed),
                    other => return Err(Error::InvalidConfig(format!("unknown synthetic preset `{other}`"))),
                };
                if let Some(m) = &self.synthetic_means {
                    s.means = m
                        .clone()
                        .try_into()
                        .map_err(|_| Error::InvalidConfig("synthetic_means needs exactly 4 vectors".into()))?;
                }
                if let Some(v) = self.synthetic_variance {
                    s.variance = v;
                }
                if let Some(p) = &self.synthetic_proportions {
                    s.proportions = p
                        .as_slice()
                        .try_into()
                        .map_err(|_| Error::InvalidConfig("synthetic_proportions needs exactly 4 values".into()))?;
                }
                DataSource::Synthetic(s)
            }
        };
        let criterion: Criterion = self.criterion.parse()?;
        let fairness_loss = match &self.fairness_loss {
            Some(l) => l.parse()?,
            None => criterion.default_loss(),
        };
        let rates = match self.rate_source.as_str() {
            "known" => RateSource::Known,
            "estimate" => RateSource::Estimate(EstimationConfig::default()),
            "sweep" => RateSource::Sweep(rate_sweep(&self.rho_plus_hat, &self.rho_minus_hat)?),
            other => return Err(Error::InvalidConfig(format!("unknown rate source `{other}`"))),
        };
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        let config = ExperimentConfig {
            data,
            criterion,
            fairness_loss,
            noise: CcnNoise::new(self.rho_plus, self.rho_minus)?,
            rates,
            taus: self.taus.clone(),
            methods,
            repetitions: self.repetitions,
            train_fraction: self.train_fraction,
            seed: self.seed,
            train: TrainConfig {
                dual_step: self.dual_step,
                dual_bound: self.dual_bound,
                dual_init: self.dual_init,
                outer_iterations: self.outer_iterations,
                base_iterations: self.base_iterations,
                base_step: self.base_step,
                regularization: self.regularization,
                seed: self.seed,
                selection: self.selection,
                feasibility_slack: self.feasibility_slack,
                refinement_steps: self.refinement_steps,
            },
        };
        config.validate()?;
        Ok(config)
    }
}
