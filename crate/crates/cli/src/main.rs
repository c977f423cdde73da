use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use r3l::agent::{evaluate, QAgent, QTable};
use r3l::envs::GridworldSpec;
use r3l::harness::{self, plot, RunConfig, SweepGrid};
use r3l::rng::seeded_rng;
use r3l::tabular::{loglog_regret_exponent, run_regret_experiment, write_regret_csv, LearnerConfig};

#[derive(Parser)]
#[command(name = "r3l", version, about = "Resource-restricted RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key = value config file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--override raeb.mode=surprise_only`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Single seed; shorthand for `--seeds N..N+1`.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Half-open range `A..B` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed into `<out>/seed-<S>`.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy evaluation of a saved Q-table.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run directory holding `qtable.bin` (and `config.txt` if --config is absent).
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Cartesian sweep over config keys, every cell run for every seed.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Axis `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "grid", value_name = "KEY=V1,V2", required = true)]
        grid: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative regret of the tabular UCB learner on a gridworld.
    Regret {
        /// Gridworld spec file; the default chain when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        episodes: usize,
        #[arg(long, default_value = "0..3")]
        seeds: String,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        /// Weight cap `d`; 1 disables resource weighting.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 0.25)]
        alpha_scale: f64,
        #[arg(long, default_value = "runs/regret")]
        out: PathBuf,
    },
    /// Scatter of unload positions gathered from run directories.
    Scatter {
        /// Run or parent directories to search for `unloads.csv`.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "unloads.svg")]
        out: PathBuf,
    },
    /// Summarize runs under a directory and refresh their plots.
    Report {
        dir: PathBuf,
    },
}

fn split_overrides(raw: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    raw.iter()
        .map(|s| match s.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(r3l::Error::Config {
                keys: vec![(s.clone(), "override must look like key=value".into())],
            }
            .into()),
        })
        .collect()
}

fn load_config(args: &ConfigArgs, fallback: Option<&Path>) -> anyhow::Result<RunConfig> {
    let mut overrides = split_overrides(&args.overrides)?;
    if let Some(seed) = args.seed {
        overrides.push(("run.seeds".into(), seed.to_string()));
    } else if let Some(seeds) = &args.seeds {
        overrides.push(("run.seeds".into(), seeds.clone()));
    }
    let path = args.config.as_deref().or(fallback);
    Ok(match path {
        Some(p) => RunConfig::load(p, &overrides)?,
        None => RunConfig::parse("", "<defaults>", &overrides)?,
    })
}

fn cmd_train(args: &ConfigArgs, out: Option<PathBuf>) -> anyhow::Result<()> {
    let mut cfg = load_config(args, None)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    let results = harness::train_seeds(&cfg, &cfg.out)?;
    let mut failed = 0;
    for (seed, r) in results {
        match r {
            Ok(o) => println!(
                "seed {seed}: final eval {:.2}, {} episodes -> {}",
                o.final_eval().unwrap_or(f64::NAN),
                o.episode_rows().count(),
                cfg.out.join(format!("seed-{seed}")).display()
            ),
            Err(e) => {
                failed += 1;
                eprintln!("seed {seed}: failed: {e}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} seed(s) failed");
    }
    Ok(())
}

fn cmd_eval(args: &ConfigArgs, run: &Path, episodes: Option<usize>) -> anyhow::Result<()> {
    let saved = run.join("config.txt");
    let cfg = load_config(args, saved.is_file().then_some(saved.as_path()))?;
    let table = QTable::load(&run.join("qtable.bin"))?;
    let agent = QAgent::with_table(&cfg.env, cfg.agent.clone(), table)?;
    let n = episodes.unwrap_or(cfg.eval_episodes);
    for &seed in &cfg.seeds {
        let ev = evaluate(&agent, &cfg.env, n, &seeded_rng(seed).substream("cli-eval"))?;
        println!("seed {seed}: mean {:.3} ± {:.3} over {n} episodes", ev.mean(), ev.std());
        for (i, (r, l)) in ev.returns.iter().zip(&ev.lengths).enumerate() {
            println!("  episode {i}: return {r:.3}, length {l}");
        }
    }
    Ok(())
}

fn cmd_sweep(args: &ConfigArgs, grid: &[String], out: Option<PathBuf>) -> anyhow::Result<()> {
    let mut cfg = load_config(args, None)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    let grid = SweepGrid::parse(grid)?;
    let summary = harness::sweep(&cfg, &grid, &cfg.out)?;
    let failed: usize = summary.iter().map(|r| r.failed).sum();
    println!("{}", harness::report(&cfg.out)?);
    if failed > 0 {
        bail!("{failed} run(s) failed; see {}", cfg.out.join("runs.csv").display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_regret(
    spec: Option<&Path>,
    episodes: usize,
    seeds: &str,
    c: f64,
    p: f64,
    d: f64,
    alpha_scale: f64,
    out: &Path,
) -> anyhow::Result<()> {
    let spec = match spec {
        Some(p) => GridworldSpec::load(p)?,
        None => GridworldSpec::default_chain(),
    };
    let seeds = harness::parse_seeds("--seeds", seeds)?;
    let config = LearnerConfig {
        c,
        p,
        weight_cap: d,
        alpha_scale,
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut series = Vec::new();
    for &seed in &seeds {
        let records = run_regret_experiment(&spec, &config, episodes, seed)?;
        write_regret_csv(&out.join(format!("regret-seed-{seed}.csv")), &records)?;
        let exponent = loglog_regret_exponent(&records, (episodes / 10).max(1), episodes, 50);
        let total = records.last().map_or(0.0, |r| r.cumulative_regret);
        match exponent {
            Some(e) => println!("seed {seed}: cumulative regret {total:.1}, log-log slope {e:.3}"),
            None => println!("seed {seed}: cumulative regret {total:.1}, too few episodes for a slope"),
        }
        let stride = (records.len() / 1000).max(1);
        let pts = records
            .iter()
            .step_by(stride)
            .map(|r| (r.episode as f64, r.cumulative_regret))
            .collect();
        series.push((format!("seed {seed}"), pts));
    }
    plot::write_svg(
        &out.join("regret.svg"),
        &plot::line_chart("Cumulative regret", "episode", "regret", &series),
    )?;
    Ok(())
}

fn cmd_scatter(runs: &[PathBuf], out: &Path) -> anyhow::Result<()> {
    let mut pts = Vec::new();
    for dir in runs {
        for run in harness::find_runs(dir)? {
            let f = run.join("unloads.csv");
            if f.is_file() {
                pts.extend(harness::read_unloads(&f)?);
            } else {
                log::warn!("{} has no unloads.csv", run.display());
            }
        }
    }
    plot::write_svg(out, &plot::scatter_chart("Unload positions", "position", "velocity", &pts))?;
    println!("{} unload events -> {}", pts.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { cfg, out } => cmd_train(&cfg, out),
        Command::Eval { cfg, run, episodes } => cmd_eval(&cfg, &run, episodes),
        Command::Sweep { cfg, grid, out } => cmd_sweep(&cfg, &grid, out),
        Command::Regret {
            spec,
            episodes,
            seeds,
            c,
            p,
            d,
            alpha_scale,
            out,
        } => cmd_regret(spec.as_deref(), episodes, &seeds, c, p, d, alpha_scale, &out),
        Command::Scatter { runs, out } => cmd_scatter(&runs, &out),
        Command::Report { dir } => {
            print!("{}", harness::report(&dir)?);
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<r3l::Error>() {
        Some(r3l::Error::Config { .. } | r3l::Error::Parse { .. }) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
