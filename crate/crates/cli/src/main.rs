use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use finsleroid::harness::{eval_pack, run_suite, trace, Scenario, Severity, Status, THREADS_ENV};

#[derive(Parser)]
#[command(name = "finsleroid", version, about = "Finsleroid-Finsler geometry: verification sweeps, pack dumps and geodesics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file or builtin name (S0, S1, S2, S3)
    #[arg(long)]
    scenario: String,
    /// Dimension of a builtin scenario
    #[arg(long)]
    dim: Option<usize>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        Scenario::load(&self.scenario, self.dim).with_context(|| format!("loading scenario `{}`", self.scenario))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every check over the sampled line elements
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Exit nonzero if any gating check fails
        #[arg(long)]
        strict: bool,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
    },
    /// Dump one pack of quantities at a line element as JSON
    Eval {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        y: Vec<f64>,
        /// background, kernel, metric, cartan, spray, connection, curvature, a-special or all
        #[arg(long, default_value = "all")]
        pack: String,
    },
    /// Integrate a geodesic with fixed-step RK4
    Geodesic {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// JSON-lines output, one record per step; stdout if absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fmt_residual(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

fn verify(sc: Scenario, report: Option<PathBuf>, strict: bool, threads: Option<usize>) -> Result<ExitCode> {
    let r = run_suite(&sc, threads)?;
    for c in &r.body.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        let sev = if c.severity == Severity::Info { " (info)" } else { "" };
        println!("{status:<4}  {:<40} {:>10}  tol {:.0e}{sev}", c.id, fmt_residual(c.max_residual), c.tolerance);
    }
    for e in &r.body.sample_errors {
        println!("error at sample {}: {}", e.index, e.message);
    }
    let s = &r.body.summary;
    println!(
        "{}: {} gating checks, {} failed, {} informational failures, {} skipped, {} sample errors ({:.0} ms, {} threads)",
        sc.name, s.gate_checks, s.gate_failed, s.info_failed, s.skipped, s.sample_errors, r.timing.total_ms, r.timing.threads
    );
    if let Some(path) = report {
        std::fs::write(&path, r.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if strict && !r.passed() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify {
            scenario,
            samples,
            seed,
            report,
            strict,
            threads,
        } => {
            let mut sc = scenario.load()?;
            if let Some(n) = samples {
                sc.samples = n;
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            verify(sc, report, strict, threads)
        }
        Command::Eval { scenario, x, y, pack } => {
            let geom = scenario.load()?.geometry()?;
            let dump = eval_pack(&geom, &x, &y, &pack)?;
            println!("{}", serde_json::to_string_pretty(&dump)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Geodesic {
            scenario,
            x0,
            y0,
            t1,
            dt,
            out,
        } => {
            let sc = scenario.load()?;
            let tr = trace(&sc.geometry()?, &sc.domain, &x0, &y0, t1, dt)?;
            let mut w: Box<dyn Write> = match &out {
                Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for p in &tr.points {
                serde_json::to_writer(&mut w, p)?;
                writeln!(w)?;
            }
            w.flush()?;
            if let Some(e) = &tr.exit {
                bail!("geodesic stopped at t = {}: {}", e.t, e.reason);
            }
            eprintln!("max relative K drift {:.3e}", tr.max_relative_drift());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
