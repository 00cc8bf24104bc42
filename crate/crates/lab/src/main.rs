use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csb_core::bounds::rounds_report;
use csb_lab::acceptance::{run_all, AcceptanceOptions};
use csb_lab::experiment::{default_workers, run_resolved};
use csb_lab::instance::resolve_instance;
use csb_lab::kv::parse_list;
use csb_lab::output::{render_bounds, render_run, write_file};
use csb_lab::policy::DEFAULT_GAMMA;
use csb_lab::{ExperimentConfig, Format, LabError, PolicyKind, Result};

#[derive(Parser)]
#[command(name = "csb", version, about = "Censored semi-bandit simulations")]
struct Cli {
    /// Worker threads for repetitions (default: CSB_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output path; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the output file's extension.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Evaluate the threshold-estimation round bounds on an instance.
    Bounds {
        /// Preset name (I, II, III, IV) or instance file.
        #[arg(long)]
        instance: String,
        /// Defaults to 1/T when --horizon is given, else 1e-5.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Defaults to the instance's gamma, else 0.01.
        #[arg(long)]
        gamma: Option<f64>,
        /// Distinct thresholds; defaults to the instance's count.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Repeat one experiment over a list of budgets or common thresholds,
    /// writing one file per value.
    Sweep {
        /// Base config; the flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        instance: Option<String>,
        #[arg(long)]
        policy: Option<String>,
        /// `Q=5,10,15` or `theta_s=0.3,0.5`.
        #[arg(long)]
        vary: String,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the acceptance suite; exits nonzero if any check fails.
    Verify {
        /// Scratch directory for the reproducibility check.
        #[arg(long)]
        scratch: Option<PathBuf>,
        /// Run only these checks, e.g. `--only 5,12`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.unwrap_or_else(default_workers).max(1);
    match execute(cli.command, workers) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("csb: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            write_file(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn chosen_format(format: Option<Format>, out: Option<&Path>) -> Format {
    format.unwrap_or_else(|| out.map_or(Format::Csv, Format::from_path))
}

fn execute(command: Command, workers: usize) -> Result<ExitCode> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let out = out.or(cfg.output_path.clone());
            let exp = cfg.resolve()?;
            let result = run_resolved(&exp, workers)?;
            let format = chosen_format(format, out.as_deref());
            emit(&render_run(&exp, &result, format), out.as_deref())?;
        }
        Command::Bounds {
            instance,
            delta,
            epsilon,
            gamma,
            n,
            horizon,
            out,
            format,
        } => {
            let spec = resolve_instance(&instance, Path::new("."))?;
            let delta = delta.unwrap_or_else(|| horizon.map_or(1e-5, |t| 1.0 / t.max(2) as f64));
            let gamma = gamma.or(spec.gamma).unwrap_or(DEFAULT_GAMMA);
            let n = n.unwrap_or_else(|| spec.distinct_thresholds());
            let reports = rounds_report(&spec.instance, delta, epsilon, gamma, n)?;
            let mut pairs = vec![
                ("delta", delta.to_string()),
                ("epsilon", epsilon.to_string()),
                ("gamma", gamma.to_string()),
                ("n", n.to_string()),
            ];
            if let Some(t) = horizon {
                pairs.push(("horizon", t.to_string()));
            }
            let format = chosen_format(format, out.as_deref());
            emit(
                &render_bounds(&spec, &pairs, &reports, format),
                out.as_deref(),
            )?;
        }
        Command::Sweep {
            config,
            instance,
            policy,
            vary,
            horizon,
            repetitions,
            seed,
            out,
            format,
        } => {
            let mut base = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => {
                    let instance = instance.clone().ok_or(LabError::MissingKey("instance"))?;
                    let kind = PolicyKind::from_name(
                        policy.as_deref().ok_or(LabError::MissingKey("policy"))?,
                    )?;
                    let horizon = horizon.ok_or(LabError::MissingKey("horizon"))?;
                    ExperimentConfig::new(instance, kind, horizon, repetitions.unwrap_or(1), 0)
                }
            };
            if let Some(i) = instance {
                base.instance = i;
            }
            if let Some(p) = policy {
                base.policy = csb_lab::PolicySpec::new(PolicyKind::from_name(&p)?);
            }
            if let Some(t) = horizon {
                base.horizon = t;
            }
            if let Some(r) = repetitions {
                base.repetitions = r;
            }
            if let Some(s) = seed {
                base.master_seed = s;
            }
            let (key, values) = vary
                .split_once('=')
                .ok_or_else(|| LabError::invalid("vary", "expected KEY=v1,v2,..."))?;
            let key = key.trim();
            let values = parse_list(key, values)?;
            for v in values {
                let mut cfg = base.clone();
                match key {
                    "Q" => cfg.budget = Some(v),
                    "theta_s" => cfg.theta_s = Some(v),
                    _ => {
                        return Err(LabError::invalid(
                            "vary",
                            format!("cannot vary `{key}`; use Q or theta_s"),
                        ))
                    }
                }
                let exp = cfg.resolve()?;
                let result = run_resolved(&exp, workers)?;
                let name = format!(
                    "{}-{}-{key}{v}.{}",
                    exp.policy.kind,
                    Path::new(&exp.spec.label).file_stem().map_or_else(
                        || exp.spec.label.clone(),
                        |s| s.to_string_lossy().into_owned()
                    ),
                    format.extension()
                );
                emit(&render_run(&exp, &result, format), Some(&out.join(name)))?;
            }
        }
        Command::Verify { scratch, only } => {
            let scratch_dir = scratch.unwrap_or_else(|| {
                std::env::temp_dir().join(format!("csb-verify-{}", std::process::id()))
            });
            let outcomes = run_all(
                &AcceptanceOptions {
                    workers,
                    scratch_dir,
                    only,
                },
                |o| println!("{}", o.line()),
            );
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
