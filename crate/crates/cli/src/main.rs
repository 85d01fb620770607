use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fqlab::config::{self, HarnessError, RawConfig};
use fqlab::report::Format;
use fqlab::{csv_columns, experiments, run_experiment, REGISTRY};

#[derive(Parser)]
#[command(
    name = "fqlab",
    version,
    about = "finite-field configuration counting lab"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment from the registry
    Run(RunArgs),
    /// Print the experiment registry with parameter requirements
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; CLI flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment name (see `fqlab list`)
    #[arg(long)]
    experiment: Option<String>,

    /// Field characteristic; omit to run the default q list {7, 11, 19}
    #[arg(long)]
    p: Option<u64>,

    /// Extension degree (default 1)
    #[arg(long)]
    k: Option<u32>,

    /// Target density of random sets, in (0, 1]
    #[arg(long, conflicts_with = "size")]
    density: Option<f64>,

    /// Target size of random sets (overrides density)
    #[arg(long)]
    size: Option<u64>,

    /// Multiplicative subgroup order d (must divide q - 1)
    #[arg(long)]
    subgroup: Option<u64>,

    /// Regularity parameter in (0, 1]
    #[arg(long)]
    epsilon: Option<f64>,

    /// First side quadrance
    #[arg(long)]
    lambda: Option<u64>,

    /// Second side quadrance
    #[arg(long)]
    beta: Option<u64>,

    /// Comma-separated seed list (default: 1)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Report output path; stdout summary only when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Extend the default q list with {23, 31, 43}
    #[arg(long)]
    slow: bool,
}

fn raw_from_args(a: &RunArgs) -> RawConfig {
    RawConfig {
        experiment: a.experiment.clone(),
        p: a.p,
        k: a.k,
        density: a.density,
        size: a.size,
        subgroup: a.subgroup,
        epsilon: a.epsilon,
        lambda: a.lambda,
        beta: a.beta,
        seeds: a.seeds.clone(),
        slow: if a.slow { Some(true) } else { None },
    }
}

fn run(args: RunArgs) -> Result<bool, HarnessError> {
    let base = match &args.config {
        Some(path) => config::parse_config_file(path)?,
        None => RawConfig::default(),
    };
    let cfg = config::resolve(base.overlaid_with(raw_from_args(&args)))?;
    let report = run_experiment(&cfg)?;

    for row in &report.rows {
        if row.aux {
            continue;
        }
        let status = match row.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        let seed = row.seed.map_or(String::new(), |s| format!(" seed={s}"));
        println!("[{status}] q={}{} {}", row.q, seed, row.name);
    }
    for row in report.failed_rows() {
        println!(
            "FAILED {} (q={}): lhs={:?} {} rhs={:?}",
            row.name,
            row.q,
            row.lhs,
            row.relation.as_deref().unwrap_or("?"),
            row.rhs
        );
    }
    if let Some(out) = &args.out {
        report
            .write_to(out, args.format, csv_columns(&report.experiment))
            .map_err(|source| HarnessError::Io {
                path: out.display().to_string(),
                source,
            })?;
        println!("report written to {}", out.display());
        let side_files = experiments::emit_construction_points(&cfg, out)?;
        for f in side_files {
            println!("points written to {}", f.display());
        }
    }
    println!(
        "{}: {} rows, {} asserted, {} failed -> {}",
        report.experiment,
        report.rows.len(),
        report.rows.iter().filter(|r| r.pass.is_some()).count(),
        report.failed_rows().len(),
        if report.all_passed { "PASS" } else { "FAIL" }
    );
    Ok(report.all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            for e in REGISTRY {
                println!("{}", e.name);
                println!("    {}", e.summary);
                if !e.required.is_empty() {
                    println!("    required: {}", e.required.join(", "));
                }
                if !e.optional.is_empty() {
                    println!("    optional: {}", e.optional.join(", "));
                }
                if e.measurement_only {
                    println!("    measurement-only: never affects the exit code");
                }
            }
            ExitCode::SUCCESS
        }
        Cmd::Run(args) => match run(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
