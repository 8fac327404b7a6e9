use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use conelab::scenario::{
    self, restrict_checks, run_scenario, write_outcome, write_sweep, Check, RunOptions, ScenarioConfig,
    ScenarioOutcome,
};
use conelab::{Error, Result};

/// Schwarz-type inequalities for conical Kähler metrics on log-polar charts.
#[derive(Parser, Debug)]
#[command(name = "conelab", version = conelab::ENGINE_VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every check of one scenario (or all bundled scenarios).
    Check {
        #[command(flatten)]
        common: Common,
        /// Run every bundled scenario instead of `--config`.
        #[arg(long, conflicts_with = "config")]
        all: bool,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `epsilon`, `gamma`, `k`, `holder_alpha`, or a dotted path such as `source.metric.beta`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Print the bundled scenario ids.
    ListScenarios,
    /// Run only the curvature-bound certification checks.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Run only the barrier experiment.
    Jeffres {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file, or the id of a bundled scenario.
    #[arg(long)]
    config: Option<String>,
    /// Output root; results go to `<out>/<scenario id>/`.
    #[arg(long, env = "CONELAB_OUT")]
    out: Option<PathBuf>,
    /// Overrides both tolerances.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn options(&self) -> Result<RunOptions> {
        if let Some(t) = self.tol {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Config {
                    field: "--tol".into(),
                    reason: format!("must be finite and nonnegative, got {t}"),
                });
            }
        }
        Ok(RunOptions {
            tolerance: self.tol,
            seed: self.seed,
        })
    }

    fn load(&self) -> Result<ScenarioConfig> {
        let spec = self.config.as_deref().ok_or_else(|| Error::Config {
            field: "--config".into(),
            reason: "a scenario file or bundled id is required".into(),
        })?;
        load_config(spec)
    }

    fn out_root(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn load_config(spec: &str) -> Result<ScenarioConfig> {
    let path = Path::new(spec);
    if path.exists() {
        return ScenarioConfig::from_path(path);
    }
    scenario::bundled(spec).unwrap_or_else(|| {
        Err(Error::Config {
            field: "--config".into(),
            reason: format!("`{spec}` is neither a file nor a bundled scenario"),
        })
    })
}

fn report(outcome: &ScenarioOutcome, dir: &Path) {
    print!("{}", scenario::summary_text(&outcome.rows));
    println!("wrote {}", dir.display());
}

fn run_one(common: &Common, keep: Option<fn(Check) -> bool>) -> Result<bool> {
    let mut cfg = common.load()?;
    if let Some(keep) = keep {
        cfg = restrict_checks(&cfg, keep)?;
    }
    let outcome = run_scenario(&cfg, common.options()?)?;
    let dir = write_outcome(&common.out_root(&cfg), &outcome)?;
    report(&outcome, &dir);
    Ok(outcome.passed())
}

fn run_all(common: &Common) -> Result<bool> {
    let opts = common.options()?;
    let configs = scenario::BUNDLED
        .iter()
        .map(|(_, text)| ScenarioConfig::from_toml_str(text))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = configs
        .par_iter()
        .map(|cfg| run_scenario(cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    for (cfg, outcome) in configs.iter().zip(&outcomes) {
        let dir = write_outcome(&common.out_root(cfg), outcome)?;
        report(outcome, &dir);
        ok &= outcome.passed();
    }
    Ok(ok)
}

fn execute(cli: Cli) -> Result<bool> {
    let jobs = match &cli.command {
        Command::Check { common, .. }
        | Command::Sweep { common, .. }
        | Command::Certify { common }
        | Command::Jeffres { common } => common.jobs,
        Command::ListScenarios => None,
    };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Config {
                field: "--jobs".into(),
                reason: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config {
                field: "--jobs".into(),
                reason: e.to_string(),
            })?;
    }
    match cli.command {
        Command::ListScenarios => {
            for (id, text) in scenario::BUNDLED {
                let cfg = ScenarioConfig::from_toml_str(text)?;
                println!("{id}\t{}", cfg.description);
            }
            Ok(true)
        }
        Command::Check { common, all: true } => run_all(&common),
        Command::Check { common, all: false } => run_one(&common, None),
        Command::Certify { common } => run_one(&common, Some(Check::is_certification)),
        Command::Jeffres { common } => run_one(&common, Some(|c| c == Check::Jeffres)),
        Command::Sweep { common, param, values } => {
            let cfg = common.load()?;
            let outcome = scenario::sweep(&cfg, &param, &values, common.options()?)?;
            let dir = write_sweep(&common.out_root(&cfg), &outcome)?;
            for (v, o) in &outcome.runs {
                println!("{param} = {}", scenario::fmt_float(*v));
                print!("{}", scenario::summary_text(&o.rows));
            }
            println!("wrote {}", dir.display());
            Ok(outcome.passed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("conelab: {e}");
            ExitCode::from(2)
        }
    }
}
