use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rackdm::addrmap::PagePolicy;
use rackdm::config::desk_profile;
use rackdm::experiment::{build_trace, comparison_table, run_cell, sweep};
use rackdm::frontend::{cache_filter, read_refs};
use rackdm::gmm::PoolPolicy;
use rackdm::trace::write_trace;
use rackdm::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "rackdm", version, about = "Rack-scale disaggregated memory simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation.
    Run(RunArgs),
    /// Run every page-policy x pool-policy combination.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Pool policies to sweep (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "round_robin,smart_idle")]
        pool_policies: Vec<String>,
        /// Page policies to sweep (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "local_first,alternate")]
        page_policies: Vec<String>,
    },
    /// Write the merged trace the configuration would simulate.
    GenTrace {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output trace (`.gz` compresses).
        #[arg(long)]
        output: PathBuf,
    },
    /// Turn a raw reference trace (`thread,vaddr,kind`) into an LLC-miss trace.
    FilterTrace {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Node id stamped on every record.
        #[arg(long, default_value_t = 0)]
        node: u32,
    },
    /// Check a configuration and print its effective form.
    ValidateConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file, applied on top of the full-size defaults.
    #[arg(long, env = "RACKDM_CONFIG")]
    config: Option<PathBuf>,
    /// Base profile when no configuration file is given.
    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    pools: Option<u32>,
    /// Pool-selection policy.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    page_policy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep and export every completion record.
    #[arg(long)]
    dump_completions: bool,
}

/// Failure class, mapped to the process exit code.
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn run_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Run(e.into())
}

fn load(args: &ConfigArgs, overrides: &[(&str, String)]) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => match args.profile {
            Profile::Desk => desk_profile(),
            Profile::Full => RunConfig::default(),
        },
    };
    let sets = args
        .sets
        .iter()
        .map(|s| match s.split_once('=') {
            Some((k, v)) => Ok((k.trim(), v.trim().to_string())),
            None => bail!("--set expects KEY=VALUE, got `{s}`"),
        })
        .collect::<Result<Vec<_>>>()?;
    for (key, value) in overrides.iter().cloned().chain(sets) {
        cfg.set(key, &value)
            .map_err(|msg| anyhow::anyhow!("override `{key}`: {msg}"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_run(args: &RunArgs) -> Result<RunConfig> {
    let mut overrides = Vec::new();
    if let Some(p) = args.pools {
        overrides.push(("pools", p.to_string()));
    }
    if let Some(p) = &args.policy {
        overrides.push(("pool_policy", p.clone()));
    }
    if let Some(p) = &args.page_policy {
        overrides.push(("page_policy", p.clone()));
    }
    if let Some(s) = args.seed {
        overrides.push(("seed", s.to_string()));
    }
    if let Some(o) = &args.out {
        overrides.push(("out", o.display().to_string()));
    }
    if args.dump_completions {
        overrides.push(("dump_completions", "true".into()));
    }
    load(&args.cfg, &overrides)
}

fn parse_list<T: std::str::FromStr<Err = String>>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(anyhow::Error::msg))
        .collect()
}

fn print_config_line(cfg: &RunConfig) {
    println!(
        "config {} | {} nodes, {} pools, seed {}",
        &cfg.hash()[..12],
        cfg.nodes,
        cfg.pools,
        cfg.seed
    );
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run(args) => {
            let cfg = load_run(&args).map_err(config_err)?;
            print_config_line(&cfg);
            let trace = build_trace(&cfg).map_err(classify)?;
            let report = run_cell(&cfg, &trace, &cfg.out_dir).map_err(run_err)?;
            let s = report.summary();
            println!(
                "{} accesses ({} remote, {} OOM drops): avg {:.1}ns, remote avg {:.1}ns, tail>=1us {:.3}%, variation {:.1}",
                s.totals.injected,
                s.totals.remote,
                s.totals.oom_drops,
                s.overall.avg_latency_ns,
                s.overall.remote_avg_latency_ns,
                s.overall.tail_fraction_1000ns * 100.0,
                s.mean_pool_variation
            );
            println!("report written to {}", cfg.out_dir.display());
        }
        Cmd::Sweep {
            run,
            pool_policies,
            page_policies,
        } => {
            let cfg = load_run(&run).map_err(config_err)?;
            let pools: Vec<PoolPolicy> = parse_list(&pool_policies).map_err(config_err)?;
            let pages: Vec<PagePolicy> = parse_list(&page_policies).map_err(config_err)?;
            print_config_line(&cfg);
            let trace = build_trace(&cfg).map_err(classify)?;
            let cells = sweep(&cfg, &trace, &pages, &pools).map_err(run_err)?;
            print!("{}", comparison_table(&cells));
            println!("reports written under {}", cfg.out_dir.display());
        }
        Cmd::GenTrace { cfg, output } => {
            let cfg = load(&cfg, &[]).map_err(config_err)?;
            let trace = build_trace(&cfg).map_err(classify)?;
            write_trace(&output, &trace).map_err(run_err)?;
            println!("{} records written to {}", trace.len(), output.display());
        }
        Cmd::FilterTrace {
            cfg,
            input,
            output,
            node,
        } => {
            let cfg = load(&cfg, &[]).map_err(config_err)?;
            let refs = read_refs(&input).map_err(run_err)?;
            let misses = cache_filter(&refs, &cfg.cache, node).map_err(config_err)?;
            write_trace(&output, &misses).map_err(run_err)?;
            println!(
                "{} references -> {} LLC misses written to {}",
                refs.len(),
                misses.len(),
                output.display()
            );
        }
        Cmd::ValidateConfig { cfg } => {
            let cfg = load(&cfg, &[]).map_err(config_err)?;
            print!("{}", cfg.echo());
            eprintln!("configuration OK (hash {})", cfg.hash());
        }
    }
    Ok(())
}

/// Trace construction fails on bad configuration as well as on bad input files.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config { .. } | Error::Invalid(_) | Error::Preset { .. } => Failure::Config(e.into()),
        other => Failure::Run(other.into()),
    }
}

fn report(label: &str, e: &anyhow::Error) {
    eprintln!("error ({label}): {e:#}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(e)) => {
            report("run", &e);
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            report("config", &e);
            ExitCode::from(2)
        }
    }
}
