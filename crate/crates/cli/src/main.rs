mod config;
mod envelope;
mod output;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boltzmix::bounds::{
    compute_ak_bk, compute_clb_from, ln_equilibrium_level, ln_generation_envelope,
    ln_generation_envelope_power, omega_cap_constant, LowerBoundHypotheses,
};
use boltzmix::dsmc;
use boltzmix::moments::fmt_f64;
use boltzmix::povzner::{kstar_global, povzner_scan, DEFAULT_GRID_STEP};
use boltzmix::MomentRecord;
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::FileConfig;
use output::{parse_range, sidecar, Artifacts};

#[derive(Debug)]
pub enum Failure {
    /// Bad invocation or unreadable input; exit status 2.
    Usage(String),
    /// The computation ran and rejected its input or its result; exit status 1.
    Invalid(String),
}

impl From<boltzmix::Error> for Failure {
    fn from(e: boltzmix::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "boltzmix",
    version,
    about = "Boltzmann mixture moments: simulation and explicit bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle simulation and write moments.csv, summary.json, config.echo.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Also run this many independent replicas and write replicas.csv.
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Tabulate the normalized Povzner constant over an (r, n) grid.
    PovznerScan {
        /// Mass fractions, `start:step:end` or a single value.
        #[arg(long)]
        r: String,
        /// Orders n = k/2, `start:step:end` or a single value.
        #[arg(long)]
        n: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-pair and global moment thresholds k*.
    Kstar {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
        grid_step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constants of the moment inequality and its envelopes at order k.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: f64,
        /// Times at which to tabulate the generation envelope.
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuzz the collision law, the energy identity and the inequality suites.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a moments.csv column against the generation and propagation envelopes.
    EnvelopeCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        moments: PathBuf,
        #[arg(long)]
        k: f64,
        /// Relative allowance on top of each envelope.
        #[arg(long, default_value_t = 0.0)]
        rel_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the run completed but a check failed.
fn dispatch(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Simulate {
            config,
            out,
            seed,
            replicas,
        } => simulate(&config, &out, seed, replicas),
        Command::PovznerScan { r, n, out } => scan(&r, &n, out.as_deref()),
        Command::Kstar {
            config,
            grid_step,
            out,
        } => {
            let cfg = FileConfig::load(&config)?;
            let mix = cfg.mixture()?;
            let summary = kstar_global(&mix.species, &mix.cross_section, grid_step)?;
            emit("kstar", None, to_value(&cfg)?, out.as_deref(), &summary)
        }
        Command::Bounds { config, k, t, out } => bounds(&config, k, t.as_deref(), out.as_deref()),
        Command::Verify { cases, seed, out } => {
            let report = verify::run(cases, seed)?;
            let pass = report.pass;
            let cfg = serde_json::json!({ "cases": cases, "seed": seed });
            emit("verify", Some(seed), cfg, out.as_deref(), &report)?;
            Ok(pass)
        }
        Command::EnvelopeCheck {
            config,
            moments,
            k,
            rel_tol,
            out,
        } => {
            let cfg = FileConfig::load(&config)?;
            let table = envelope::Table::read(&moments)?;
            let report = envelope::check(&cfg, &table, k, rel_tol)?;
            let pass = report.pass;
            let echo = serde_json::json!({
                "config": to_value(&cfg)?,
                "moments": moments.display().to_string(),
                "k": k,
                "rel_tol": rel_tol,
            });
            emit("envelope-check", None, echo, out.as_deref(), &report)?;
            Ok(pass)
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::Invalid(format!("serializing config: {e}")))
}

/// Print a JSON report, or write it with its manifest when `out` is given.
fn emit<T: Serialize>(
    name: &str,
    seed: Option<u64>,
    config: serde_json::Value,
    out: Option<&Path>,
    report: &T,
) -> Result<bool, Failure> {
    match out {
        Some(path) => {
            let mut art = Artifacts::new(name, seed, config);
            art.write_json(path, report)?;
            art.finish(&sidecar(path))?;
        }
        None => println!("{}", output::to_json(report)?),
    }
    Ok(true)
}

fn simulate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    replicas: Option<usize>,
) -> Result<bool, Failure> {
    let file = FileConfig::load(config)?;
    let cfg = file.sim_config(seed)?;
    let mut echo = file.clone();
    echo.sim = Some(cfg.params.clone());
    let mut art = Artifacts::new("simulate", Some(cfg.params.seed), to_value(&echo)?);

    let run = dsmc::run(&cfg)?;
    let mut csv = MomentRecord::csv_header(cfg.species.len(), &cfg.diagnostics);
    csv.push('\n');
    for r in &run.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    art.write(&out.join("moments.csv"), csv.as_bytes())?;
    art.write_json(&out.join("summary.json"), &run.summary)?;
    art.write_json(&out.join("config.echo.json"), &echo)?;

    if let Some(n) = replicas {
        let rep = dsmc::replicate(&cfg, n)?;
        let mut csv = String::from("t");
        if let Some(first) = rep.records.first() {
            for c in &first.columns {
                let _ = write!(csv, ",{c}_mean,{c}_se");
            }
        }
        csv.push('\n');
        for r in &rep.records {
            csv.push_str(&fmt_f64(r.time));
            for (m, s) in r.mean.iter().zip(&r.stderr) {
                let _ = write!(csv, ",{},{}", fmt_f64(*m), fmt_f64(*s));
            }
            csv.push('\n');
        }
        art.write(&out.join("replicas.csv"), csv.as_bytes())?;
        art.write_json(&out.join("replica_seeds.json"), &rep.seeds)?;
    }
    art.finish(&out.join("manifest.json"))?;
    eprintln!(
        "simulate: {} steps, dt = {}, energy drift {:e}, momentum drift {:e}",
        run.summary.steps,
        run.summary.dt,
        run.summary.energy_drift_rel,
        run.summary.momentum_drift_rel
    );
    Ok(true)
}

fn scan(r: &str, n: &str, out: Option<&Path>) -> Result<bool, Failure> {
    let rs = parse_range(r).map_err(Failure::Usage)?;
    let ns = parse_range(n).map_err(Failure::Usage)?;
    let rows = povzner_scan(&rs, &ns)?;
    let mut csv = String::from("r,n,c_inf\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(row.r),
            fmt_f64(row.n),
            fmt_f64(row.c_inf)
        );
    }
    match out {
        Some(path) => {
            let mut art =
                Artifacts::new("povzner-scan", None, serde_json::json!({ "r": r, "n": n }));
            art.write(path, csv.as_bytes())?;
            art.finish(&sidecar(path))?;
        }
        None => print!("{csv}"),
    }
    Ok(true)
}

#[derive(Serialize)]
struct EnvelopeRow {
    t: f64,
    ln_generation: f64,
    ln_generation_power: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    k: f64,
    kstar: boltzmix::povzner::KStarSummary,
    hypotheses: LowerBoundHypotheses,
    c_lb: f64,
    constants: boltzmix::bounds::OdiConstants,
    ln_equilibrium_level: f64,
    /// Cap constant of the invariant set, from the constants at `k*`.
    omega_cap: f64,
    generation: Vec<EnvelopeRow>,
}

fn bounds(config: &Path, k: f64, t: Option<&str>, out: Option<&Path>) -> Result<bool, Failure> {
    let file = FileConfig::load(config)?;
    let mix = file.mixture()?;
    let omega = file.omega()?;
    let times = match t {
        Some(text) => parse_range(text).map_err(Failure::Usage)?,
        None => Vec::new(),
    };
    let kstar = kstar_global(&mix.species, &mix.cross_section, DEFAULT_GRID_STEP)?;
    let hypotheses = LowerBoundHypotheses::from_omega(&mix.species, &omega)?;
    let c_lb = compute_clb_from(&mix.species, &mix.cross_section, &hypotheses)?;
    let constants = compute_ak_bk(k, &kstar, &omega, c_lb, &mix.species, &mix.cross_section)?;
    let at_kstar = compute_ak_bk(
        kstar.k_star,
        &kstar,
        &omega,
        c_lb,
        &mix.species,
        &mix.cross_section,
    )?;
    let omega_cap =
        omega_cap_constant(at_kstar.a_k, at_kstar.b_k, at_kstar.gamma_bar, kstar.k_star)?;
    let generation = times
        .iter()
        .filter(|t| **t > 0.0)
        .map(|&t| {
            Ok(EnvelopeRow {
                t,
                ln_generation: ln_generation_envelope(k, &constants, t)?,
                ln_generation_power: ln_generation_envelope_power(k, &constants, t)?,
            })
        })
        .collect::<boltzmix::Result<Vec<_>>>()?;
    let report = BoundsReport {
        k,
        ln_equilibrium_level: ln_equilibrium_level(&constants),
        kstar,
        hypotheses,
        c_lb,
        constants,
        omega_cap,
        generation,
    };
    emit("bounds", None, to_value(&file)?, out, &report)
}
