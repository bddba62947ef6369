//! Command-line driver: verify / simulate / factorize / sweep.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qlax::chain::ChainSystem;
use qlax::config::{CliConfig, ConfigLayer, Format};
use qlax::error::Error;
use qlax::evolution as ev;
use qlax::report::{self, tol, Grid, Observable, Suite};
use qlax::rmatrix::RMatrix;
use qlax::tensor::Operator;

#[derive(Parser)]
#[command(
    name = "qlax",
    version,
    about = "Quantized Lax equations on q-deformed spin chains: build, verify, simulate, factorize",
    after_help = "Flag values override config-file values, which override the defaults.\n\
                  The environment variable QLAX_THREADS caps check parallelism (0 = auto).\n\
                  Exit codes: 0 all checks pass, 1 check failures, 2 usage error, 3 I/O error."
)]
struct Cli {
    /// Deformation parameter q, nonzero [default: 1.3]
    #[arg(long, global = true)]
    q: Option<f64>,

    /// Number of chain sites N >= 1 [default: 2]
    #[arg(long, global = true)]
    sites: Option<usize>,

    /// Depth K of the commuting Hamiltonian tower [default: 3]
    #[arg(long = "tower-depth", global = true)]
    tower_depth: Option<usize>,

    /// Evaluation time; repeatable, |t| <= 2 [default: 0.1 0.5 1.0]
    #[arg(long = "t", global = true, action = clap::ArgAction::Append)]
    times: Vec<f64>,

    /// Residual tolerance for cross-checks without a pinned threshold [default: 1e-9]
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output path; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format where a choice exists: json | csv
    #[arg(long, global = true)]
    format: Option<String>,

    /// Config file in key=value format mirroring these flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a named verification suite and write the JSON report
    Verify {
        /// Suite to run: ybe | rtt | prop1 | prop5 | thm1 | thm2 | app1 |
        /// app2 | conservation | ode-oracle | all [default: all]
        #[arg(long)]
        suite: Option<String>,
    },
    /// Write a CSV time series of T(t) and L^n(t) entries with
    /// cross-check residuals against Heisenberg evolution
    Simulate,
    /// Gauss-factorize g(t) and report reconstruction, triangularity, and
    /// diagonal-gauge residuals against the closed-form factors
    Factorize,
    /// Tabulate one observable over the configured grid as CSV
    Sweep {
        /// Observable: lax-residual | conservation-drift |
        /// factorization-residual | triangularity-residual [default: lax-residual]
        #[arg(long)]
        observable: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Parameter(_) | Error::Unknown(_) | Error::Capacity(_) => ExitCode::from(2),
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("QLAX_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                // a failure here means a pool already exists, which is fine
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn resolve_config(
    cli: &Cli,
    suite: Option<&str>,
    observable: Option<&str>,
) -> qlax::Result<CliConfig> {
    let flags = ConfigLayer {
        q: cli.q,
        n_sites: cli.sites,
        tower_depth: cli.tower_depth,
        times: if cli.times.is_empty() { None } else { Some(cli.times.clone()) },
        tolerance: cli.tol,
        suite: suite.map(str::to_string),
        observable: observable.map(str::to_string),
        out: cli.out.clone(),
        format: cli.format.as_deref().map(Format::parse).transpose()?,
    };
    let file = match &cli.config {
        Some(path) => ConfigLayer::from_file(path)?,
        None => ConfigLayer::default(),
    };
    let cfg = flags.over(file).finish();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> qlax::Result<bool> {
    match &cli.cmd {
        Cmd::Verify { suite } => {
            let cfg = resolve_config(&cli, suite.as_deref(), None)?;
            if cfg.format == Some(Format::Csv) {
                return Err(Error::Parameter("verify reports are JSON; use --format json".into()));
            }
            cmd_verify(&cfg)
        }
        Cmd::Simulate => {
            let cfg = resolve_config(&cli, None, None)?;
            if cfg.format == Some(Format::Json) {
                return Err(Error::Parameter("simulate output is CSV; use --format csv".into()));
            }
            cmd_simulate(&cfg)
        }
        Cmd::Factorize => {
            let cfg = resolve_config(&cli, None, None)?;
            if cfg.format == Some(Format::Csv) {
                return Err(Error::Parameter("factorize output is JSON; use --format json".into()));
            }
            cmd_factorize(&cfg)
        }
        Cmd::Sweep { observable } => {
            let cfg = resolve_config(&cli, None, observable.as_deref())?;
            cmd_sweep(&cfg)
        }
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> qlax::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn cmd_verify(cfg: &CliConfig) -> qlax::Result<bool> {
    let suite: Suite = cfg.suite.parse()?;
    let grid = cfg.grid();
    let report = report::run_suite(suite, &grid)?;
    write_output(&cfg.out, &report.to_json())?;
    eprintln!(
        "suite {}: {}/{} checks passed in {:.2?}",
        suite, report.summary.passed, report.summary.total, report.elapsed
    );
    for failure in report.failures() {
        eprintln!(
            "  FAIL {} q={} N={:?} t={:?} site={:?}: residual {:.3e} vs {:.1e}",
            failure.name,
            failure.q,
            failure.n_sites,
            failure.t,
            failure.site,
            failure.residual,
            failure.tolerance
        );
    }
    Ok(report.all_passed())
}

fn push_entries(csv: &mut String, t: f64, object: &str, op: &Operator, residual: f64) {
    // the leading 2x2 corner of each evolved operator
    for row in 0..2usize {
        for col in 0..2usize {
            let z = op.data()[[row, col]];
            csv.push_str(&format!(
                "{t},{object},{row},{col},{:.12e},{:.12e},{:.9e}\n",
                z.re, z.im, residual
            ));
        }
    }
}

fn cmd_simulate(cfg: &CliConfig) -> qlax::Result<bool> {
    let chain = ChainSystem::build(RMatrix::new(cfg.q, 2)?, cfg.n_sites, cfg.tower_depth)?;
    let mut csv = String::from("t,object,row,col,re,im,heisenberg_residual\n");
    let mut all_ok = true;
    for &t in &cfg.times {
        let forms = ev::solve_lax_forms(&chain, t)?;
        let residual = forms.g_plus_form.rel_residual(&forms.heisenberg_form)?;
        all_ok &= residual < cfg.tolerance;
        push_entries(&mut csv, t, "T", &forms.g_plus_form, residual);
        for n in 1..=chain.n_sites() {
            let site = ev::solve_chain_lax_forms(&chain, n, t)?;
            let residual = site.g_plus_form.rel_residual(&site.heisenberg_form)?;
            all_ok &= residual < cfg.tolerance;
            push_entries(&mut csv, t, &format!("L{n}"), &site.g_plus_form, residual);
        }
    }
    write_output(&cfg.out, &csv)?;
    Ok(all_ok)
}

#[derive(Serialize)]
struct FactorizeRow {
    t: f64,
    reconstruction_residual: f64,
    lower_triangularity: f64,
    upper_triangularity: f64,
    gauge_residual: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FactorizeConfig {
    q: f64,
    n_sites: usize,
    times: Vec<f64>,
    normalization: &'static str,
}

#[derive(Serialize)]
struct FactorizeReport {
    config: FactorizeConfig,
    results: Vec<FactorizeRow>,
    summary: report::Summary,
}

fn cmd_factorize(cfg: &CliConfig) -> qlax::Result<bool> {
    let chain = ChainSystem::build(RMatrix::new(cfg.q, 2)?, cfg.n_sites, cfg.tower_depth)?;
    let mut results = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        match ev::factorize_and_compare(&chain, t, ev::Normalization::UnitLower) {
            Ok(f) => {
                let g = ev::g_full(&chain, t)?;
                let reconstruction = f.reconstruction_residual(&g)?;
                let (lower_tri, upper_tri) = f.triangularity_residuals();
                let gauge = f.gauge_residual.expect("filled by factorize_and_compare");
                let pass = reconstruction < tol::APP2_RECONSTRUCTION
                    && lower_tri < tol::APP2_TRIANGULARITY
                    && upper_tri < tol::APP2_TRIANGULARITY
                    && gauge < tol::APP2_GAUGE;
                results.push(FactorizeRow {
                    t,
                    reconstruction_residual: reconstruction,
                    lower_triangularity: lower_tri,
                    upper_triangularity: upper_tri,
                    gauge_residual: gauge,
                    pass,
                    error: None,
                });
            }
            Err(Error::Degenerate(msg)) => {
                results.push(FactorizeRow {
                    t,
                    reconstruction_residual: f64::MAX,
                    lower_triangularity: f64::MAX,
                    upper_triangularity: f64::MAX,
                    gauge_residual: f64::MAX,
                    pass: false,
                    error: Some(msg),
                });
            }
            Err(other) => return Err(other),
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let summary = report::Summary { total: results.len(), passed, failed: results.len() - passed };
    let all_passed = summary.failed == 0;
    let out = FactorizeReport {
        config: FactorizeConfig {
            q: cfg.q,
            n_sites: cfg.n_sites,
            times: cfg.times.clone(),
            normalization: ev::Normalization::UnitLower.label(),
        },
        results,
        summary,
    };
    write_output(&cfg.out, &serde_json::to_string_pretty(&out).expect("serializable"))?;
    Ok(all_passed)
}

#[derive(Serialize)]
struct SweepJsonRow<'a> {
    q: f64,
    n_sites: usize,
    t: f64,
    site: Option<usize>,
    observable: &'a str,
    value: f64,
}

fn cmd_sweep(cfg: &CliConfig) -> qlax::Result<bool> {
    let observable: Observable = cfg.observable.parse()?;
    let grid: Grid = cfg.grid();
    let rows = report::sweep(observable, &grid)?;
    match cfg.format {
        Some(Format::Json) => {
            let json_rows: Vec<SweepJsonRow> = rows
                .iter()
                .map(|r| SweepJsonRow {
                    q: r.q,
                    n_sites: r.n_sites,
                    t: r.t,
                    site: r.site,
                    observable: r.observable,
                    value: r.value,
                })
                .collect();
            write_output(&cfg.out, &serde_json::to_string_pretty(&json_rows).expect("serializable"))?;
        }
        _ => write_output(&cfg.out, &report::sweep_to_csv(&rows))?,
    }
    Ok(true)
}
