use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use detsum::experiments::{self, Params, EXPERIMENTS};
use detsum::Report;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

/// Runs a named experiment and prints its report.
#[derive(Debug, Parser)]
#[command(name = "detsum", version, about, after_help = after_help())]
struct Cli {
    /// Experiment name, or `list` to print the available experiments.
    experiment: String,
    /// Field order(s) p^n, e.g. `9`, `3^2` or a comma list `3,5,7`.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<String>>,
    /// Variety parameter i: an integer, or coefficients `c0,c1,..` (constant term first).
    #[arg(long, allow_hyphen_values = true)]
    i: Option<String>,
    /// Second variety parameter j.
    #[arg(long, allow_hyphen_values = true)]
    j: Option<String>,
    /// Sumset multiplicity k.
    #[arg(long)]
    k: Option<usize>,
    /// Set sizes |E|[,|F|].
    #[arg(long, value_delimiter = ',')]
    size: Option<Vec<usize>>,
    /// Number of seeded configurations per field.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the data-parallel loops.
    #[arg(long)]
    threads: Option<usize>,
    /// Impose this constant on every report-only ratio claim.
    #[arg(long)]
    assert_ratio: Option<f64>,
    /// Include wall-clock runtime in the report (breaks byte-stability).
    #[arg(long)]
    timing: bool,
}

fn after_help() -> String {
    format!(
        "Experiments: {}\nExit status: 0 all hard checks passed, 1 a check failed, 2 usage or input error.",
        EXPERIMENTS.join(", ")
    )
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("detsum: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.experiment == "list" {
        for e in EXPERIMENTS {
            println!("{e}");
        }
        return ExitCode::SUCCESS;
    }
    if let Some(c) = cli.assert_ratio {
        if !(c.is_finite() && c > 0.0) {
            return usage_error("--assert-ratio must be a positive number");
        }
    }
    let params = Params {
        q: cli.q.clone(),
        i: cli.i.clone(),
        j: cli.j.clone(),
        k: cli.k,
        sizes: cli.size.clone(),
        trials: cli.trials,
        seed: cli.seed,
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    let start = Instant::now();
    let result = pool.install(|| experiments::run(&cli.experiment, &params));
    let mut report = match result {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    if let Some(c) = cli.assert_ratio {
        report.impose_constant(c);
        report.param("assert_ratio", c);
    }
    if cli.timing {
        report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }

    let text = render(&report, cli.format);
    let written = match &cli.out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    };
    if let Err(msg) = written {
        return usage_error(msg);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
