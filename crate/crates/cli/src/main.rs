//! Command-line front end for the clustered-WSN decision-fusion simulator.
//!
//! Subcommands:
//! - `roc`      -- empirical ROC curves per fusion rule (roc.csv)
//! - `bounds`   -- empirical LFR tails vs the Gaussian-tail bounds (bounds.csv)
//! - `power`    -- allocation table and power saving over a D1 sweep (power.csv)
//! - `aml-loop` -- estimation/detection/allocation round log (aml.csv)
//! - `validate` -- run the property suite and report pass/fail per check
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible allocation,
//! 4 numeric failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cwsn_core::harness::{
    estimate_roc, run_lfr_aml_loop, tail_comparison, write_aml_csv, write_bounds_csv,
    write_power_csv, write_roc_csv, Engine, ExperimentConfig, PowerSweepRow, Rule,
};
use cwsn_core::power::{allocate, power_saving, power_saving_literal, AllocationProblem};
use cwsn_core::{Error, Hypothesis};

#[derive(Parser)]
#[command(
    name = "cwsn",
    about = "Decision-fusion simulation for clustered sensor networks with noisy relay channels"
)]
struct Cli {
    /// Experiment configuration file (flat key = value text).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Comma-separated rule list (CR,CR-counts,OCR,LLR,LFR,LFR-aML,LFR-PA).
    #[arg(long, global = true)]
    rules: Option<String>,

    /// Worker thread count (defaults to the rayon heuristic).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ROC curves for every enabled rule.
    Roc,
    /// Compare the linear rule's empirical tails against the Gaussian bounds.
    Bounds,
    /// Sweep the normalized mean-difference floor and report allocations.
    Power {
        /// Also emit the per-cluster literal saving column.
        #[arg(long)]
        literal_saving: bool,
    },
    /// Run the estimation -> detection -> power-allocation loop.
    AmlLoop,
    /// Run the property suite.
    Validate,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::OutOfRegion { .. } => 2,
        Error::DegenerateChannel(_) => 2,
        Error::Infeasible { .. } => 3,
        Error::Numeric(_) | Error::ExtrapolationRefused { .. } => 4,
        Error::Io(_) => 1,
    }
}

fn load_config(cli: &Cli) -> cwsn_core::Result<ExperimentConfig<f64>> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_config_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(rules) = &cli.rules {
        cfg.rules = rules
            .split(',')
            .map(|name| {
                Rule::parse(name.trim())
                    .ok_or_else(|| Error::Config(format!("unknown rule `{}`", name.trim())))
            })
            .collect::<cwsn_core::Result<Vec<_>>>()?;
    }
    Ok(cfg)
}

/// Metadata lines echoed into every CSV: the resolved configuration plus the
/// conventions the numbers depend on.
fn metadata(cfg: &ExperimentConfig<f64>) -> Vec<String> {
    let mut lines: Vec<String> = cfg
        .to_config_string()
        .lines()
        .map(|l| format!("config: {l}"))
        .collect();
    lines.push(
        "note: snr convention: snch_noise_var = sn_power / 10^(snr_c_db/10); \
         chfc_noise_var = ch_power * sn_power / 10^(snr_f_db/10)"
            .into(),
    );
    lines.push(
        "note: rule CR consumes normalized receptions (sum of z_m / sqrt(p_tilde_m)); \
         rule CR-counts consumes the true detector counts"
            .into(),
    );
    lines
}

fn write_out(path: &PathBuf, bytes: &[u8]) -> cwsn_core::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn cmd_roc(cli: &Cli) -> cwsn_core::Result<()> {
    let cfg = load_config(cli)?;
    let meta = metadata(&cfg);
    let engine = Engine::new(cfg)?;
    let curves = estimate_roc(&engine)?;
    let mut buf = Vec::new();
    write_roc_csv(&mut buf, &curves, &meta)?;
    let path = cli.out.join("roc.csv");
    write_out(&path, &buf)?;
    eprintln!(
        "wrote {} ({} rules x {} thresholds)",
        path.display(),
        curves.len(),
        curves.first().map_or(0, |c| c.points.len())
    );
    Ok(())
}

fn cmd_bounds(cli: &Cli) -> cwsn_core::Result<()> {
    let mut cfg = load_config(cli)?;
    // Only the linear rule has a tail bound; skip simulating the others.
    cfg.rules = vec![Rule::Lfr];
    let meta = metadata(&cfg);
    let engine = Engine::new(cfg)?;
    let rows = tail_comparison(&engine, 50, 4.5)?;
    let mut buf = Vec::new();
    write_bounds_csv(&mut buf, &rows, &meta)?;
    let path = cli.out.join("bounds.csv");
    write_out(&path, &buf)?;
    eprintln!("wrote {} ({} grid points)", path.display(), rows.len());
    Ok(())
}

fn cmd_power(cli: &Cli, literal: bool) -> cwsn_core::Result<()> {
    let cfg = load_config(cli)?;
    let meta = metadata(&cfg);
    let engine = Engine::new(cfg)?;
    let m = engine.num_clusters();
    let lambda_d: Vec<f64> = engine
        .ctx
        .intensities
        .lambda1
        .iter()
        .map(|&l1| l1 - engine.ctx.intensities.lambda0)
        .collect();
    let reference_total: f64 = engine.channel_cfg.ch_powers.iter().sum();

    let mut rows = Vec::new();
    for &d1 in &engine.config.d1_values {
        let problem = AllocationProblem::new(
            lambda_d.clone(),
            engine.channel_cfg.snch_noise_vars.clone(),
            engine.channel_cfg.chfc_noise_vars.clone(),
            engine.channel_cfg.sn_power,
            d1 * engine.channel_cfg.sn_power,
        )?;
        let allocation = allocate(&problem)?;
        let saving = power_saving(&allocation.powers, reference_total);
        let saving_lit =
            literal.then(|| power_saving_literal(&allocation.powers, reference_total));
        for (cluster, &p_m) in allocation.powers.iter().enumerate() {
            rows.push(PowerSweepRow {
                d1,
                cluster,
                p_m,
                achieved_md: allocation.achieved_md,
                saving_pct: saving,
                saving_pct_literal: saving_lit,
            });
        }
    }
    let mut buf = Vec::new();
    write_power_csv(&mut buf, &rows, &meta)?;
    let path = cli.out.join("power.csv");
    write_out(&path, &buf)?;
    eprintln!(
        "wrote {} ({} floors x {} clusters)",
        path.display(),
        engine.config.d1_values.len(),
        m
    );
    Ok(())
}

fn cmd_aml_loop(cli: &Cli) -> cwsn_core::Result<()> {
    let cfg = load_config(cli)?;
    let meta = metadata(&cfg);
    let engine = Engine::new(cfg)?;
    let result = run_lfr_aml_loop(&engine, Hypothesis::H1)?;
    let mut buf = Vec::new();
    write_aml_csv(&mut buf, &result, &meta)?;
    let path = cli.out.join("aml.csv");
    write_out(&path, &buf)?;
    let last = result.rounds.last().expect("at least one round");
    eprintln!(
        "wrote {} ({} rounds; final saving {:.1}%)",
        path.display(),
        result.rounds.len(),
        power_saving(&last.powers, result.reference_total)
    );
    Ok(())
}

fn cmd_validate(cli: &Cli) -> cwsn_core::Result<()> {
    let cfg = load_config(cli)?;
    let outcomes = cwsn_core::validation::run_all(cfg.seed);
    let mut failures = 0usize;
    for outcome in &outcomes {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<45}  {}", outcome.name, outcome.detail);
        if !outcome.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::Numeric(format!(
            "{failures}/{} property checks failed",
            outcomes.len()
        )));
    }
    println!("all {} property checks passed", outcomes.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut pool_builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        pool_builder = pool_builder.num_threads(threads);
    }
    let pool = match pool_builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(1);
        }
    };

    let result = pool.install(|| match &cli.command {
        Command::Roc => cmd_roc(&cli),
        Command::Bounds => cmd_bounds(&cli),
        Command::Power { literal_saving } => cmd_power(&cli, *literal_saving),
        Command::AmlLoop => cmd_aml_loop(&cli),
        Command::Validate => cmd_validate(&cli),
    });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
