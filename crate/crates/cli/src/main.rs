use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use fairnoise::bench::{
    aggregate, emit_results, load_csv, run_sweep_with_jobs, write_csv, CsvSchema, FlatConfig, LoadedCsv, Split,
};
use fairnoise::estimation::{estimate_ccn_rates, estimate_eo_rates, EstimationConfig};
use fairnoise::fairtrain::{load_model, reduction_constraint_value, save_model, train_fair};
use fairnoise::noise::{
    ccn_to_mc, ccn_to_mc_from_corrupted, dp_epsilon_for_rho, dp_rho_for_epsilon, inject_ccn_with_mask,
};
use fairnoise::{
    accuracy_risk, ddp, deo, train_fair_noisy, CcnNoise, Criterion, FairnessLoss, FairnessSpec, NoiseRates,
    NoiseSource, TrainConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fairnoise",
    version,
    about = "Fair classification with a noisy sensitive attribute"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flip the sensitive column of a CSV file at class-conditional rates.
    Corrupt(CorruptArgs),
    /// Estimate the flip rates of a corrupted sensitive column.
    Estimate(EstimateArgs),
    /// Match a randomized-response flip rate to a privacy budget.
    DpCalibrate(DpArgs),
    /// Train a fair classifier on a (possibly corrupted) dataset.
    Train(TrainArgs),
    /// Run a benchmark sweep and write result tables.
    Sweep(SweepArgs),
    /// Evaluate a saved model on a dataset.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Headed CSV with feature columns plus the sensitive and label columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "sensitive")]
    sensitive_column: String,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Skip rows with empty cells instead of failing.
    #[arg(long)]
    drop_missing: bool,
}

impl InputArgs {
    fn load(&self) -> Result<LoadedCsv, Failure> {
        let schema = CsvSchema {
            sensitive_column: self.sensitive_column.clone(),
            label_column: self.label_column.clone(),
            drop_missing: self.drop_missing,
        };
        let loaded = load_csv(&self.input, &schema)?;
        if loaded.dropped_rows > 0 {
            println!("dropped {} rows with missing values", loaded.dropped_rows);
        }
        Ok(loaded)
    }
}

#[derive(Args)]
struct CorruptArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output: PathBuf,
    /// Probability that a clean A=1 row is reported as A=0.
    #[arg(long)]
    rho_plus: f64,
    /// Probability that a clean A=0 row is reported as A=1.
    #[arg(long)]
    rho_minus: f64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// `dp` estimates flip rates on all rows, `eo` the mixture weights of the Y=1 rows.
    #[arg(long, default_value = "dp")]
    criterion: String,
    /// JSON file for the estimates.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("budget").required(true).args(["epsilon", "rho"])))]
struct DpArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Clean share of A=1, used for the tolerance scale.
    #[arg(long, default_value_t = 0.5)]
    base_rate: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value = "dp")]
    criterion: String,
    /// Defaults to the criterion's usual loss.
    #[arg(long)]
    fairness_loss: Option<String>,
    #[arg(long, requires = "rho_minus", conflicts_with = "estimate_noise")]
    rho_plus: Option<f64>,
    #[arg(long, requires = "rho_plus", conflicts_with = "estimate_noise")]
    rho_minus: Option<f64>,
    /// Estimate the flip rates from the data before scaling the tolerance.
    #[arg(long)]
    estimate_noise: bool,
    /// Config file whose trainer keys replace the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Recorded in the trace; training itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file for the training trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Config file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-repetition results CSV. The summary goes next to it.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// CSV dataset replacing the configured data source.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long, env = "FAIRNOISE_JOBS", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    model: PathBuf,
    /// JSON file for the metrics.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Core(fairnoise::Error),
}

impl From<fairnoise::Error> for Failure {
    fn from(e: fairnoise::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_data_error() => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    std::fs::write(path, text + "\n").map_err(|source| {
        Failure::Core(fairnoise::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn parse_criterion(text: &str) -> Result<Criterion, Failure> {
    Ok(text.parse()?)
}

fn corrupt(args: &CorruptArgs) -> Result<(), Failure> {
    let noise = CcnNoise::new(args.rho_plus, args.rho_minus)?;
    let loaded = args.input.load()?;
    let clean = &loaded.data;
    let injection = inject_ccn_with_mask(clean, noise, args.seed);
    write_csv(&args.output, &injection.data, &loaded.layout)?;

    let ones = clean.examples().iter().filter(|e| e.sensitive).count();
    let zeros = clean.len() - ones;
    let share = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    let from_one = injection.flips_from_positive(clean);
    let from_zero = injection.flips_from_negative(clean);
    println!("rows {}", clean.len());
    println!("A=1 flipped {from_one} of {ones} ({:.4})", share(from_one, ones));
    println!("A=0 flipped {from_zero} of {zeros} ({:.4})", share(from_zero, zeros));
    println!("wrote {}", args.output.display());
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let criterion = parse_criterion(&args.criterion)?;
    let data = args.input.load()?.data;
    let config = EstimationConfig::default();
    let report = match criterion {
        Criterion::DemographicParity => {
            let est = estimate_ccn_rates(&data, &config)?;
            let (rp, rm) = (est.rates.rho_plus(), est.rates.rho_minus());
            let mc = ccn_to_mc_from_corrupted(est.rates, data.base_rate()?)?;
            println!("rho_plus {rp:.4}");
            println!("rho_minus {rm:.4}");
            println!("alpha {:.4}", mc.noise.alpha());
            println!("beta {:.4}", mc.noise.beta());
            println!("tolerance scale {:.4}", mc.noise.retention());
            if est.clamped {
                println!("note: raw estimates summed to 1 or more and were shrunk");
            }
            json!({
                "criterion": "dp",
                "rho_plus": rp,
                "rho_minus": rm,
                "alpha": mc.noise.alpha(),
                "beta": mc.noise.beta(),
                "tolerance_scale": mc.noise.retention(),
                "clamped": est.clamped,
                "posterior_converged": est.posterior_converged,
            })
        }
        Criterion::EqualOpportunity => {
            let est = estimate_eo_rates(&data, &config)?;
            let (a, b) = (est.noise.alpha_prime(), est.noise.beta_prime());
            println!("alpha_prime {a:.4}");
            println!("beta_prime {b:.4}");
            println!("tolerance scale {:.4}", est.noise.retention());
            json!({
                "criterion": "eo",
                "alpha_prime": a,
                "beta_prime": b,
                "tolerance_scale": est.noise.retention(),
                "rho_plus": est.slice_rates.rates.rho_plus(),
                "rho_minus": est.slice_rates.rates.rho_minus(),
                "clamped": est.slice_rates.clamped,
                "posterior_converged": est.slice_rates.posterior_converged,
            })
        }
    };
    if let Some(path) = &args.output {
        write_json(path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn dp_calibrate(args: &DpArgs) -> Result<(), Failure> {
    let (epsilon, rho) = match (args.epsilon, args.rho) {
        (Some(e), None) => (e, dp_rho_for_epsilon(e)?),
        (None, Some(r)) => (dp_epsilon_for_rho(r)?, r),
        _ => return Err(Failure::Usage("pass exactly one of --epsilon and --rho".into())),
    };
    let mc = ccn_to_mc(CcnNoise::symmetric(rho)?, args.base_rate)?;
    println!("epsilon {epsilon:.4}");
    println!("rho {rho:.4}");
    println!("base rate {}", args.base_rate);
    println!("alpha {:.4}", mc.noise.alpha());
    println!("beta {:.4}", mc.noise.beta());
    println!("tolerance scale {:.4}", mc.noise.retention());
    Ok(())
}

fn trainer_config(path: Option<&Path>, seed: u64) -> Result<TrainConfig, Failure> {
    let mut train = match path {
        Some(p) => FlatConfig::load(p)?.resolve(p.parent())?.train,
        None => TrainConfig::default(),
    };
    train.seed = seed;
    Ok(train)
}

fn train(args: &TrainArgs) -> Result<(), Failure> {
    let criterion = parse_criterion(&args.criterion)?;
    let loss = match &args.fairness_loss {
        Some(l) => l.parse::<FairnessLoss>()?,
        None => criterion.default_loss(),
    };
    let spec = FairnessSpec::new(criterion, loss, args.tau)?;
    let config = trainer_config(args.config.as_deref(), args.seed)?;
    let noise = match (args.rho_plus, args.rho_minus, args.estimate_noise) {
        (Some(rp), Some(rm), false) => Some(NoiseSource::Ccn(CcnNoise::new(rp, rm)?)),
        (None, None, true) => Some(NoiseSource::Estimate(EstimationConfig::default())),
        (None, None, false) => None,
        _ => {
            return Err(Failure::Usage(
                "pass --rho-plus with --rho-minus, or --estimate-noise".into(),
            ))
        }
    };
    let data = args.input.load()?.data;
    let model = match &noise {
        Some(source) => train_fair_noisy(&data, &spec, source, &config)?,
        None => train_fair(&data, &spec, &config)?,
    };
    save_model(&args.model, &model)?;

    let trace = &model.trace;
    println!("rows {}", data.len());
    println!("criterion {}", args.criterion);
    println!("tau {}", args.tau);
    println!("tau' {:.4}", trace.tolerance);
    if let Some(adj) = &trace.noise {
        println!("tolerance scale {:.4}", adj.retention);
        if let Some((rp, rm)) = adj.rates {
            println!("flip rates used ({rp:.4}, {rm:.4})");
        }
        if adj.estimate_clamped {
            println!("note: estimated rates were shrunk to sum below 1");
        }
    }
    println!("training disparity {:.4}", spec.disparity(&data, &model)?);
    println!("training error {:.4}", accuracy_risk(&data, &model)?);
    println!("iterations {}", trace.iterates.len());
    if trace.warning.is_some() {
        println!("warning: no iterate met the tolerance; returned the least violating one");
    }
    println!("wrote {}", args.model.display());
    if let Some(path) = &args.trace {
        let value = serde_json::to_value(trace).expect("traces serialize");
        write_json(path, &value)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let (mut flat, base_dir) = match &args.config {
        Some(p) => (FlatConfig::load(p)?, p.parent().map(Path::to_path_buf)),
        None => (FlatConfig::default(), None),
    };
    if let Some(seed) = args.seed {
        flat.seed = seed;
    }
    if let Some(r) = args.repetitions {
        flat.repetitions = r;
    }
    let mut base_dir = base_dir;
    if let Some(d) = &args.data {
        flat.data_path = Some(d.to_string_lossy().into_owned());
        base_dir = None;
    }
    let config = flat.resolve(base_dir.as_deref())?;
    let results = run_sweep_with_jobs(&config, args.jobs.map(usize::from))?;
    let summary_path = emit_results(&results.rows, &args.output)?;

    println!(
        "{:<22} {:>6} {:>8} {:>8} {:>8} {:>10} {:>8}",
        "method", "tau", "rho+", "rho-", "tau'", "violation", "error"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for s in aggregate(&results.rows).iter().filter(|s| s.split == Split::Test) {
        println!(
            "{:<22} {:>6} {:>8} {:>8} {:>8} {:>10.4} {:>8.4}",
            s.method.to_string(),
            s.tau,
            opt(s.rho_plus_hat),
            opt(s.rho_minus_hat),
            opt(s.tau_prime_mean),
            s.fairness_violation_mean,
            s.error_mean
        );
    }
    for f in &results.failures {
        eprintln!(
            "cell failed: {} tau {} repetition {}: {}",
            f.method, f.tau, f.repetition, f.message
        );
    }
    println!("wrote {} and {}", args.output.display(), summary_path.display());
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let data = args.input.load()?.data;
    let d = ddp(&data, &model, FairnessLoss::PredictNonPositive)?;
    let e = deo(&data, &model, FairnessLoss::ZeroOne)?;
    let risk = accuracy_risk(&data, &model)?;
    let reduction = reduction_constraint_value(&data, &model, Criterion::DemographicParity)?;
    println!("rows {}", data.len());
    println!("ddp {d:.4}");
    println!("deo {e:.4}");
    println!("error {risk:.4}");
    println!("reduction constraint {reduction:.4}");
    if let Some(path) = &args.output {
        write_json(
            path,
            &json!({ "ddp": d, "deo": e, "error": risk, "reduction_constraint": reduction }),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Corrupt(a) => corrupt(a),
        Command::Estimate(a) => estimate(a),
        Command::DpCalibrate(a) => dp_calibrate(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Metrics(a) => metrics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
