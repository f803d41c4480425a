use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sigdr::bench::{run_bench, BenchConfig};
use sigdr::experiment::{fit_model, load_dataset, DatasetSource, ExperimentConfig, MethodName};
use sigdr::io::{self, GramHeader, Manifest};
use sigdr::{emit_report, parallel, run_experiment, Error, Result};
use sigdr_core::regress::RbfBaseline;
use sigdr_core::sigkernel::sigma_from_lengthscale;
use sigdr_core::EmpiricalMeasure;

#[derive(Parser)]
#[command(name = "sigdr", version, about = "Distribution regression on groups of time series with expected signatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to SIGDR_THREADS, then the hardware thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// ses, kes or dr-rbf.
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    refinement: Option<u32>,
    #[arg(long, global = true)]
    drop_rate: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV plus a manifest.
    Generate,
    /// Export the SES feature matrix.
    Features {
        #[arg(long, default_value_t = 2)]
        inner_level: usize,
        #[arg(long, default_value_t = 2)]
        outer_level: usize,
    },
    /// Export the KES or DR-RBF matrix; squared distances unless --l2 is given.
    Gram {
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Select hyperparameters on the whole dataset and save the model.
    Fit,
    /// Repeated train/test evaluation with a report.
    Run,
    /// Scaling measurements.
    Bench {
        /// Bench configuration (JSON).
        #[arg(long)]
        bench_config: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.set_seed(s);
    }
    if let Some(m) = &common.method {
        cfg.method = m.parse()?;
    }
    if let Some(r) = common.refinement {
        cfg.refinement = r;
    }
    if let Some(d) = common.drop_rate {
        cfg.set_drop_rate(d)?;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads(common: &Common) -> Result<Option<usize>> {
    if let Some(t) = common.threads {
        return Ok(Some(t));
    }
    match std::env::var("SIGDR_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("SIGDR_THREADS='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn preprocessed(cfg: &ExperimentConfig) -> Result<(Vec<String>, Vec<EmpiricalMeasure>)> {
    let loaded = load_dataset(&cfg.dataset)?;
    let refs: Vec<&EmpiricalMeasure> = loaded.dataset.groups().iter().collect();
    let prep = cfg.preprocess.fit(&refs)?;
    Ok((loaded.dataset.ids().to_vec(), prep.apply(loaded.dataset.groups())?))
}

fn generate(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let gen = match &cfg.dataset {
        DatasetSource::Generated(g) => g.clone(),
        DatasetSource::Csv { .. } => return Err(Error::config("generate needs a generator dataset")),
    };
    let dataset = gen.generate()?;
    let data = dir.join("data.csv");
    let labels = dir.join("labels.csv");
    let text = io::dataset_csv(&dataset);
    io::write_text(&data, &text)?;
    io::write_text(&labels, &io::labels_csv(&dataset))?;
    let manifest = Manifest {
        seed: gen.seed(),
        groups: dataset.len(),
        series: dataset.groups().iter().map(EmpiricalMeasure::len).sum(),
        data: PathBuf::from("data.csv"),
        labels: PathBuf::from("labels.csv"),
        data_sha256: io::fingerprint(text.as_bytes()),
        config: gen,
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("wrote {} groups from {} to {}", manifest.groups, manifest.config.name(), dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = threads(&cli.common)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    if let Command::Bench { bench_config } = &cli.command {
        let mut cfg: BenchConfig = match bench_config {
            Some(p) => io::read_json(p).map_err(|e| Error::config(e.to_string()))?,
            None => BenchConfig::default(),
        };
        if let Some(s) = cli.common.seed {
            cfg.seed = s;
        }
        if let Some(r) = cli.common.refinement {
            cfg.refinement = r;
        }
        let report = run_bench(&cfg)?;
        let dir = cli.common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        io::write_json(&dir.join("bench.json"), &report)?;
        println!("ses exponent in N: {:.3}", report.ses_exponent);
        println!("kes exponent in N: {:.3}", report.kes_exponent);
        println!("pde exponent in length: {:.3}", report.pde_exponent);
        return Ok(());
    }
    let cfg = load_config(&cli.common)?;
    let dir = out_dir(&cfg);
    match cli.command {
        Command::Generate => generate(&cfg, &dir),
        Command::Features { inner_level, outer_level } => {
            let (ids, groups) = preprocessed(&cfg)?;
            let (rows, width) = parallel::ses_matrix(&groups, &cfg.ses.options(inner_level, outer_level))?;
            let path = dir.join("features.csv");
            io::write_features(&path, &ids, &rows, width)?;
            println!("wrote {} x {width} features to {}", ids.len(), path.display());
            Ok(())
        }
        Command::Gram { l1, l2 } => {
            let (_, groups) = preprocessed(&cfg)?;
            let (dist, refinement) = match cfg.method {
                MethodName::Kes => (parallel::mmd_matrix(&groups, cfg.refinement)?, Some(cfg.refinement)),
                MethodName::DrRbf => {
                    let l1 = l1.ok_or_else(|| Error::config("dr-rbf gram needs --l1"))?;
                    (RbfBaseline::new(&groups, None)?.distance_matrix(l1)?, None)
                }
                MethodName::Ses => return Err(Error::config("gram applies to kes and dr-rbf")),
            };
            let sigma = l2.map(sigma_from_lengthscale);
            let gram = match sigma {
                Some(s) => dist.to_kernel(s)?,
                None => dist,
            };
            let path = dir.join("gram.csv");
            io::write_gram(&path, &gram, &GramHeader { kind: gram.kind(), sigma, refinement })?;
            println!("wrote {0} x {0} matrix to {1}", gram.size(), path.display());
            Ok(())
        }
        Command::Fit => {
            let loaded = load_dataset(&cfg.dataset)?;
            let model = fit_model(&loaded, &cfg)?;
            let path = dir.join("model.json");
            io::write_json(&path, &model)?;
            println!("best {:?}, cv mse {:.6e}; model in {}", model.hyperparameters, model.cv_mse, path.display());
            Ok(())
        }
        Command::Run => {
            let report = run_experiment(&cfg)?;
            for p in &report.points {
                let rate = p.drop_rate.map(|r| format!("drop rate {r}: ")).unwrap_or_default();
                println!("{rate}{} mse {:.6e} ± {:.6e}", report.method.as_str(), p.mse_mean, p.mse_std);
            }
            for f in emit_report(&report, &dir)? {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Bench { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
