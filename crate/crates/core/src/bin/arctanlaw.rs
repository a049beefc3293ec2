//! Command-line front end: catalog listing, closed-form law evaluation,
//! Monte Carlo simulation with CSV output, and the named verification
//! experiments.
//!
//! Exit codes: 0 success / all checks pass, 1 a verification check exceeded
//! its threshold, 2 usage or configuration error.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use arctanlaw::catalog::{builtin_catalog, catalog_entry, TimeChange};
use arctanlaw::laws::{self, BoundPair, CompoundArctanLaw};
use arctanlaw::pathsim::{monte_carlo, with_workers, SamplerConfig, Scheme};
use arctanlaw::verify::{run_experiment, Manifest, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "arctanlaw", version, about = "Exceedance-time laws of one-dimensional diffusions: evaluate, simulate, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in models, or describe one of them.
    Catalog {
        /// Model name; omit to list all.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Evaluate a closed-form law on a time grid, printing `t,value` CSV.
    Law(LawArgs),
    /// Simulate paths and write one CSV row of functionals per path.
    Simulate(SimArgs),
    /// Run a named verification experiment and write its report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct LawArgs {
    /// Model whose clock defines the law.
    #[arg(long, default_value = "bm")]
    spec: String,
    /// Which law: cdf, pdf, upper, lower, two_interval, theta, occupation.
    #[arg(long, default_value = "cdf")]
    law: String,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// First interval endpoint for the two-interval law.
    #[arg(long)]
    r1: Option<f64>,
    /// Evaluation times.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value = "bm")]
    spec: String,
    /// euler, exact_bm, exact_integrated_bm, or exact_conjugated.
    #[arg(long, default_value = "euler")]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 11.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1000)]
    paths: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment name; see --list.
    #[arg(long)]
    experiment: Option<String>,
    /// Flat `key = value` manifest file; flags override its entries.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// List the known experiments and exit.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Replace every check threshold with this value.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Report directory; defaults to $ARCTANLAW_OUT or ./out.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Catalog { spec } => cmd_catalog(spec.as_deref()).map(|()| true),
        Command::Law(args) => cmd_law(&args).map(|()| true),
        Command::Simulate(args) => cmd_simulate(&args).map(|()| true),
        Command::Verify(args) => cmd_verify(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_catalog(spec: Option<&str>) -> Result<()> {
    match spec {
        None => {
            for entry in builtin_catalog() {
                println!("{}", entry.describe());
            }
        }
        Some(name) => {
            let entry = catalog_entry(name).ok_or_else(|| anyhow!("no catalog entry named `{name}`"))?;
            println!("{}", entry.describe());
        }
    }
    Ok(())
}

fn write_csv(out: Option<&PathBuf>, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_law(args: &LawArgs) -> Result<()> {
    let entry = catalog_entry(&args.spec).ok_or_else(|| anyhow!("no catalog entry named `{}`", args.spec))?;
    let eval: Box<dyn Fn(f64) -> Result<f64>> = match args.law.as_str() {
        "cdf" | "pdf" | "two_interval" | "theta" => {
            let tc = entry
                .timechange
                .deterministic()
                .cloned()
                .ok_or_else(|| anyhow!("`{}` has a stochastic clock; use upper/lower", args.spec))?;
            match args.law.as_str() {
                "cdf" => {
                    let law = CompoundArctanLaw::new(args.r, tc)?;
                    Box::new(move |t| Ok(laws::compound_cdf(t, &law)?))
                }
                "pdf" => {
                    let law = CompoundArctanLaw::new(args.r, tc)?;
                    Box::new(move |t| Ok(laws::compound_pdf(t, &law)?))
                }
                "two_interval" => {
                    let r1 = args.r1.ok_or_else(|| anyhow!("two_interval requires --r1"))?;
                    let r2 = args.r;
                    Box::new(move |t| Ok(laws::two_interval_cdf(t, r1, r2, &tc)?))
                }
                _ => {
                    let r = args.r;
                    Box::new(move |t| Ok(laws::theta_arcsine_cdf(t, r, &tc)?))
                }
            }
        }
        "occupation" => {
            let r = args.r;
            Box::new(move |t| Ok(laws::occupation_arcsine_cdf(t, r)?))
        }
        "upper" | "lower" => {
            let env = match &entry.timechange {
                TimeChange::Stochastic(env) => env.clone(),
                _ => bail!("`{}` has a deterministic clock; use cdf/pdf", args.spec),
            };
            let bounds = BoundPair::new(args.r, env.alpha_fn(), env.beta_fn())?;
            if args.law == "upper" {
                Box::new(move |t| Ok(laws::upper_bound_cdf(t, &bounds)?.value))
            } else {
                Box::new(move |t| Ok(laws::lower_bound_cdf(t, &bounds)?))
            }
        }
        other => bail!("unknown law `{other}`; use cdf, pdf, upper, lower, two_interval, theta, or occupation"),
    };
    let rows: Vec<String> = args
        .t
        .iter()
        .map(|&t| Ok(format!("{t},{}", eval(t)?)))
        .collect::<Result<_>>()?;
    write_csv(args.out.as_ref(), "t,value", &rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".into(),
    }
}

fn cmd_simulate(args: &SimArgs) -> Result<()> {
    let entry = catalog_entry(&args.spec).ok_or_else(|| anyhow!("no catalog entry named `{}`", args.spec))?;
    let scheme: Scheme = serde_json::from_value(serde_json::Value::String(args.scheme.clone()))
        .map_err(|_| anyhow!("unknown scheme `{}`", args.scheme))?;
    let config = SamplerConfig {
        dt: args.dt,
        horizon: args.horizon,
        n_paths: args.paths,
        seed: args.seed,
        scheme,
    };
    let result = with_workers(args.workers, || monte_carlo(&entry, &config, args.r))?;
    let rows: Vec<String> = result
        .samples
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                s.path_index,
                s.m_r,
                s.l_r,
                fmt_opt(s.s),
                s.theta,
                fmt_opt(s.u),
                s.occupation,
                s.s.is_none() as u8,
                s.u.is_none() as u8,
            )
        })
        .collect();
    write_csv(
        args.out.as_ref(),
        "path_index,M_r,L_r,S,theta,U,occupation,censored_S,censored_U",
        &rows,
    )?;
    eprintln!(
        "effective_r = {}, censored_S = {:.4}, censored_U = {:.4}",
        result.effective_r, result.censored_s_fraction, result.censored_u_fraction
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    if args.list {
        for name in EXPERIMENTS {
            println!("{name}");
        }
        return Ok(true);
    }
    let mut manifest = match &args.manifest {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Manifest::parse_file(&text)?
        }
        None => {
            let name = args
                .experiment
                .as_ref()
                .ok_or_else(|| anyhow!("pass --experiment NAME or --manifest FILE (or --list)"))?;
            Manifest::new(name.clone())
        }
    };
    // Flags override manifest entries.
    if let Some(v) = &args.experiment {
        manifest.experiment = v.clone();
    }
    if let Some(v) = &args.spec {
        manifest.spec = Some(v.clone());
    }
    if let Some(v) = args.r {
        manifest.r = Some(v);
    }
    if let Some(v) = args.r1 {
        manifest.r1 = Some(v);
    }
    if let Some(v) = args.r2 {
        manifest.r2 = Some(v);
    }
    if let Some(v) = args.dt {
        manifest.dt = Some(v);
    }
    if let Some(v) = args.horizon {
        manifest.horizon = Some(v);
    }
    if let Some(v) = args.paths {
        manifest.paths = Some(v);
    }
    if let Some(v) = args.seed {
        manifest.seed = v;
    }
    if let Some(v) = args.workers {
        manifest.workers = Some(v);
    }
    if let Some(v) = args.tolerance {
        manifest.tolerance = Some(v);
    }
    if let Some(v) = &args.out {
        manifest.out = Some(v.clone());
    }
    if !EXPERIMENTS.contains(&manifest.experiment.as_str()) {
        bail!("unknown experiment `{}`; known: {}", manifest.experiment, EXPERIMENTS.join(", "));
    }

    let report = run_experiment(&manifest)?;

    let out_dir = manifest
        .out
        .clone()
        .or_else(|| std::env::var_os("ARCTANLAW_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let dir = out_dir.join(&report.experiment);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let json = serde_json::to_string_pretty(&report)?;
    fs::write(dir.join("report.json"), format!("{json}\n"))?;
    for comparison in &report.comparisons {
        let mut file = fs::File::create(dir.join(format!("{}.csv", comparison.label)))?;
        writeln!(file, "t,empirical,analytic,lower_env,upper_env,abs_gap")?;
        for row in &comparison.rows {
            writeln!(file, "{},{},{},{},{},{}", row[0], row[1], row[2], row[3], row[4], row[5])?;
        }
    }

    for check in &report.checks {
        println!(
            "{} {}: statistic = {:.6e}, threshold = {:.6e} -> {}",
            report.experiment,
            check.name,
            check.statistic,
            check.threshold,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{}: {} ({} checks, {:.1}s, report in {})",
        report.experiment,
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.duration_secs,
        dir.display()
    );
    Ok(report.pass)
}
