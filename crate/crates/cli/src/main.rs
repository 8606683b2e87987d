use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sectorsim::collapse::{is_unistochastic, parse_table};
use sectorsim::suites::{run_suite, Bound, Suite};
use sectorsim::Verdict;
use sectorsim_cli::output::{claim_dir, resolve_out_dir, unix_millis, write_run, RunManifest};
use sectorsim_cli::run::format_complex_table;
use sectorsim_cli::sweep::{combined_csv, point_dir, run_sweep, SWEEP_FILE};
use sectorsim_cli::{execute, parse_config, CliError};

#[derive(Parser)]
#[command(name = "sectorsim", version, about = "Run sector-collapse scenarios and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write its outputs plus a manifest.
    Run {
        config: PathBuf,
        /// Output directory; overrides execution.output_dir and $SECTORSIM_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write into a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run a property battery: algebra, dynamics, collapse, locality, measurement or all.
    Check {
        suite: String,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether a stochastic table is unistochastic.
    Gamma {
        table: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run a config once per value of a dotted parameter path.
    Sweep {
        config: PathBuf,
        parameter: String,
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn utf8(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))
}

fn run(config: &Path, out: Option<&Path>, force: bool) -> Result<(), CliError> {
    let started = unix_millis();
    let bytes = read(config)?;
    let cfg = parse_config(&utf8(config, &bytes)?).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    let dir = resolve_out_dir(out, cfg.execution.output_dir.as_deref(), config);
    claim_dir(&dir, force)?;
    let artifacts = execute(&cfg)?;
    let manifest = RunManifest::new("run", &bytes, cfg.execution.seed, started);
    write_run(&dir, &artifacts.files, manifest)?;
    println!("{}", dir.display());
    Ok(())
}

fn sweep(config: &Path, parameter: &str, values: &[String], out: Option<&Path>, force: bool) -> Result<(), CliError> {
    let started = unix_millis();
    let bytes = read(config)?;
    let text = utf8(config, &bytes)?;
    let base = parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    let dir = resolve_out_dir(out, base.execution.output_dir.as_deref(), config);
    claim_dir(&dir, force)?;
    let points = run_sweep(&text, parameter, values)?;
    let mut files = vec![(SWEEP_FILE.to_string(), combined_csv(parameter, &points)?)];
    for (k, p) in points.iter().enumerate() {
        let sub = point_dir(k, &p.raw);
        files.extend(p.artifacts.files.iter().map(|(n, b)| (format!("{sub}/{n}"), b.clone())));
    }
    let manifest = RunManifest::new("sweep", &bytes, base.execution.seed, started);
    write_run(&dir, &files, manifest)?;
    println!("{}", dir.display());
    Ok(())
}

fn check(name: &str, json: bool) -> Result<(), CliError> {
    let suite: Suite = name.parse()?;
    let report = run_suite(suite);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for r in &report.results {
            println!(
                "{} {}::{} value={:e} {} {:e}{}",
                if r.passed { "PASS" } else { "FAIL" },
                r.suite,
                r.property,
                r.value,
                match r.bound {
                    Bound::Below => "<",
                    Bound::Above => ">",
                    Bound::Equal => "==",
                },
                r.threshold,
                if r.detail.is_empty() { String::new() } else { format!(" ({})", r.detail) }
            );
        }
        let failed = report.results.iter().filter(|r| !r.passed).count();
        println!("{}: {} properties, {failed} failed", report.suite, report.results.len());
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("suite {name}")))
    }
}

fn gamma(table: &Path, tol: f64, json: bool) -> Result<(), CliError> {
    let bytes = read(table)?;
    let (labels, g) = parse_table(&utf8(table, &bytes)?)?;
    let v = is_unistochastic(&g, tol)?;
    if json {
        let out = serde_json::json!({
            "labels": labels,
            "verdict": v.verdict,
            "reason": v.reason,
            "witness_error": v.witness_error,
            "witness": v.witness.as_ref().map(|w| {
                w.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>()
            }),
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        let word = match v.verdict {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Undecided => "undecided",
        };
        println!("verdict: {word}");
        println!("reason: {}", v.reason);
        if let (Some(w), Some(e)) = (&v.witness, v.witness_error) {
            println!("witness_error: {e:e}");
            println!("witness:");
            print!("{}", format_complex_table(w));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, force } => run(config, out.as_deref(), *force),
        Command::Check { suite, json } => check(suite, *json),
        Command::Gamma { table, tol, json } => gamma(table, *tol, *json),
        Command::Sweep {
            config,
            parameter,
            values,
            out,
            force,
        } => sweep(config, parameter, values, out.as_deref(), *force),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
