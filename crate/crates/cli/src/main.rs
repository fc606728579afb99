use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icl_lab::harness::mc::default_workers;
use icl_lab::harness::presets::{preset, PRESET_NAMES};
use icl_lab::harness::report::ExperimentReport;
use icl_lab::harness::scenarios::{
    dump_prompts, run_contradict_scenario, run_convergence_study, run_imbalance_scenario,
    run_mean_reversion_scenario, run_noise_heatmap, run_oracle_check, run_simulate, run_theory, ORACLE_TOLERANCE,
    STRESS_GRID_SIZE,
};
use icl_lab::harness::ExperimentConfig;
use icl_lab::LabError;

/// Bayesian in-context learning lab: simulate, predict and verify
/// per-class accuracies of the Bayes ICL predictor.
#[derive(Parser, Debug)]
#[command(name = "icl-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo accuracy versus k for one task (accuracy.csv).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the first N prompts per k to prompts.txt.
        #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "10")]
        dump_prompts: Option<usize>,
    },
    /// Closed-form predictions only: P*, gap, noise regime, dominant term per k.
    Theory {
        #[command(flatten)]
        common: Common,
    },
    /// Run one of the named scenarios.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence-rate study of the accuracy towards its large-k limit.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Closed form against quadrature on the one-dimensional stress grid;
    /// exits 1 if the largest deviation exceeds 1e-3.
    OracleCheck {
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, default_value_t = STRESS_GRID_SIZE)]
        cases: usize,
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        #[arg(long, env = "ICL_LAB_WORKERS")]
        workers: Option<usize>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Contradict,
    Imbalance,
    Noise,
    MeanReversion,
}

impl ScenarioName {
    fn preset(self) -> &'static str {
        match self {
            ScenarioName::Contradict => "contradict",
            ScenarioName::Imbalance => "imbalance",
            ScenarioName::Noise => "noise",
            ScenarioName::MeanReversion => "mean-reversion",
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (see --help of the subcommand for the default).
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration value, e.g. --set task.pi=0.3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "ICL_LAB_WORKERS")]
    workers: Option<usize>,
}

enum Failure {
    Lab(LabError),
    Check(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::InvalidConfig { .. } => 2,
        LabError::DegenerateBoundary { .. } => 3,
        _ => 1,
    }
}

impl Common {
    fn load(&self, default_preset: &str) -> Result<ExperimentConfig, LabError> {
        let base = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_path(path).map_err(|e| match e {
                LabError::Io(io) => LabError::InvalidConfig {
                    field: "<document>".into(),
                    reason: format!("cannot read {}: {io}", path.display()),
                },
                other => other,
            })?,
            (None, Some(name)) => preset(name)?,
            (None, None) => preset(default_preset)?,
        };
        let mut cfg = base.with_overrides(&self.overrides)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn output_dir(&self, cfg: &ExperimentConfig, scenario: &str) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("icl-lab-out").join(format!("{}-{scenario}", cfg.name)))
    }

    fn workers(&self) -> usize {
        resolve_workers(self.workers)
    }
}

fn resolve_workers(w: Option<usize>) -> usize {
    w.filter(|&n| n > 0).unwrap_or_else(default_workers)
}

fn write(report: &ExperimentReport, dir: &Path, started: Instant) -> Result<(), LabError> {
    for p in report.write_to(dir, Some(started.elapsed().as_secs_f64()))? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    match cli.command {
        Command::Simulate { common, dump_prompts: dump } => {
            let cfg = common.load("matched")?;
            let dir = common.output_dir(&cfg, "simulate");
            let out = run_simulate(&cfg, common.workers())?;
            for e in &out.estimates {
                println!(
                    "k={:<6} acc+ {:.4} ± {:.4}  acc- {:.4} ± {:.4}",
                    e.k, e.acc_pos, e.se_pos, e.acc_neg, e.se_neg
                );
            }
            write(&out.report, &dir, started)?;
            if let Some(n) = dump {
                let p = dir.join("prompts.txt");
                std::fs::write(&p, dump_prompts(&cfg, n)?).map_err(LabError::from)?;
                println!("wrote {}", p.display());
            }
        }
        Command::Theory { common } => {
            let cfg = common.load("matched")?;
            let out = run_theory(&cfg)?;
            println!("P+* = {:.6}  P-* = {:.6}", out.p_star.0, out.p_star.1);
            write(&out.report, &common.output_dir(&cfg, "theory"), started)?;
        }
        Command::Scenario { name, common } => {
            let cfg = common.load(name.preset())?;
            let dir = common.output_dir(&cfg, name.preset());
            let w = common.workers();
            let report = match name {
                ScenarioName::Contradict => {
                    let out = run_contradict_scenario(&cfg, w)?;
                    println!("predicted gap {:.4}, crossover k = {}", out.predicted_gap, out.crossover_k);
                    out.report
                }
                ScenarioName::Imbalance => run_imbalance_scenario(&cfg, w)?.report,
                ScenarioName::Noise => run_noise_heatmap(&cfg, w)?.report,
                ScenarioName::MeanReversion => run_mean_reversion_scenario(&cfg, w)?.report,
            };
            write(&report, &dir, started)?;
        }
        Command::Convergence { common } => {
            let cfg = common.load("convergence")?;
            let out = run_convergence_study(&cfg, common.workers())?;
            println!("P+* = {:.6}, log-log slope {:.4}", out.p_star, out.slope);
            write(&out.report, &common.output_dir(&cfg, "convergence"), started)?;
        }
        Command::OracleCheck {
            seed,
            cases,
            output_dir,
            workers,
        } => {
            let out = run_oracle_check(seed, cases, resolve_workers(workers))?;
            println!("max |dominant - quadrature| = {:e} over {cases} cases", out.max_abs_diff);
            if let Some(dir) = output_dir {
                write(&out.report, &dir, started)?;
            }
            if !(out.max_abs_diff <= ORACLE_TOLERANCE) {
                return Err(Failure::Check(format!(
                    "oracle check failed: {:e} > {ORACLE_TOLERANCE:e}",
                    out.max_abs_diff
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            if matches!(e, LabError::InvalidConfig { ref field, .. } if field == "preset") {
                eprintln!("available presets: {}", PRESET_NAMES.join(", "));
            }
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
