use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linpencil_cli::records::Report;
use linpencil_cli::selftest::run_selftest;
use linpencil_cli::{
    run_biorthogonality, run_build, run_convergence, run_factorization_suite, run_subsequence,
    CliError, ExperimentConfig,
};
use serde::Serialize;

/// Linear-pencil rational interpolation experiments.
///
/// Exit status: 0 when every assertion passes, 1 when one fails, 2 on
/// invalid input or I/O errors.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Drops configured orders above this value.
    #[arg(long, global = true)]
    max_order: Option<usize>,
    /// Overrides the verb's primary tolerance: convergence error (converge),
    /// |u| consistency (subseq), reconstruction (factor, build) or vanishing
    /// functionals (biortho).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Verb {
    /// Build the pencil and check its Markov structure.
    Build,
    /// Convergence of the convergents to the Cauchy transform.
    Converge,
    /// Subsequence rule around a point of the grid.
    Subseq,
    /// LU/UL factorization identities.
    Factor,
    /// Biorthogonality functionals and Christoffel/Geronimus transforms.
    Biortho,
    /// Run every verb on built-in configurations.
    Selftest,
}

fn load(cli: &Cli, verb: Verb) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(max) = cli.max_order {
        cfg.cap_orders(max)?;
    }
    if let Some(tol) = cli.tol {
        let t = &mut cfg.tolerances;
        match verb {
            Verb::Converge => t.convergence = tol,
            Verb::Subseq => t.u_consistency = tol,
            Verb::Build | Verb::Factor => t.reconstruction = tol,
            Verb::Biortho => t.functional = tol,
            Verb::Selftest => {}
        }
        cfg.validate()?;
    }
    Ok(cfg)
}

fn emit<R: Serialize>(report: &Report<R>, out: Option<&PathBuf>) -> Result<bool, CliError> {
    match out {
        Some(dir) => {
            report.write(dir)?;
        }
        None => print!("{}", report.summary_json()?),
    }
    Ok(report.passed())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if cli.verb == Verb::Selftest {
        let st = run_selftest()?;
        let text = serde_json::to_string_pretty(&st)? + "\n";
        match &cli.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                let path = dir.join("selftest.json");
                std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
            }
            None => print!("{text}"),
        }
        return Ok(st.passed);
    }
    let cfg = load(cli, cli.verb)?;
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let out = out.as_ref();
    match cli.verb {
        Verb::Build => emit(&run_build(&cfg)?, out),
        Verb::Converge => emit(&run_convergence(&cfg)?, out),
        Verb::Subseq => emit(&run_subsequence(&cfg)?, out),
        Verb::Factor => emit(&run_factorization_suite(&cfg)?, out),
        Verb::Biortho => emit(&run_biorthogonality(&cfg)?, out),
        Verb::Selftest => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more assertions failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
