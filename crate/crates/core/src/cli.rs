//! Command-line front end: `check`, `benchmark`, `explorable` and `run`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::explore::det::oracle_explorable_map;
use crate::game::{separation_parameter, Separation};
use crate::harness::{benchmark, write_reports, DeterministicPipeline, EpisodeTrace, RegretReport, StochasticPipeline};
use crate::rational::{fmt_q, parse_rational, to_f64, Q};
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "bayes-explore", version, about = "Incentive-compatible exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a scenario file.
    Check { scenario: PathBuf },
    /// Print the benchmark reward.
    Benchmark {
        scenario: PathBuf,
        #[arg(long, default_value = "0", value_parser = rational_arg)]
        delta: Q,
    },
    /// Print the eventually-explorable joint actions at a state.
    Explorable {
        scenario: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "0", value_parser = rational_arg)]
        delta: Q,
    },
    /// Simulate episodes and write traces plus a regret report.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the stochastic pipeline with this slack; implied by bernoulli noise.
    #[arg(long, value_parser = rational_arg)]
    delta: Option<Q>,
    /// Hidden state name; overrides the scenario's fixed state.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

fn rational_arg(text: &str) -> std::result::Result<Q, String> {
    let v = parse_rational(text).map_err(|e| e.to_string())?;
    if v < Q::zero() || v >= Q::from_integer(1.into()) {
        return Err(format!("{text} is not in [0, 1)"));
    }
    Ok(v)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::DeltaInfeasible { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Check { scenario } => check(&scenario, out),
        Command::Benchmark { scenario, delta } => {
            let s = Scenario::load(&scenario)?;
            let b = benchmark(&s.game, &delta)?;
            writeln!(out, "{} ({})", fmt_q(&b), to_f64(&b))?;
            Ok(())
        }
        Command::Explorable { scenario, state, delta } => {
            let s = Scenario::load(&scenario)?;
            let k = state_arg(&s, &state)?;
            let map = oracle_explorable_map(&s.game, &delta)?;
            let names: Vec<String> = map[k].iter().map(|&a| s.game.action_name(a)).collect();
            writeln!(out, "{{{}}}", names.join(", "))?;
            Ok(())
        }
        Command::Run(args) => run(args, out, err),
    }
}

fn state_arg(s: &Scenario, name: &str) -> Result<usize> {
    s.game.state_index(name).ok_or_else(|| Error::Scenario(format!("unknown state {name:?}")))
}

fn check(path: &Path, out: &mut dyn Write) -> Result<()> {
    let s = Scenario::load(path)?;
    let u = &s.game;
    writeln!(
        out,
        "ok: {} agent(s), {} joint actions, {} states, noise {}",
        u.num_agents(),
        u.num_joint_actions(),
        u.num_states(),
        s.noise
    )?;
    match separation_parameter(u) {
        Separation::Gap(z) => writeln!(out, "separation: {}", fmt_q(&z))?,
        Separation::StateIndependent => writeln!(out, "separation: undefined (utilities never differ across states)")?,
    }
    Ok(())
}

fn write_trace(dir: &Path, name: &str, trace: &EpisodeTrace) -> Result<()> {
    fs::write(dir.join(name), trace.to_json()?)?;
    Ok(())
}

fn write_csv(path: &Path, reports: &[RegretReport]) -> Result<()> {
    write_reports(fs::File::create(path)?, reports)
}

fn trace_name(trials: usize, k: usize) -> String {
    if trials == 1 {
        "trace.json".into()
    } else {
        format!("trace_{k}.json")
    }
}

fn run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if args.trials == 0 {
        return Err(Error::Parameter("--trials must be at least 1".into()));
    }
    let s = Scenario::load(&args.scenario)?;
    let u = &s.game;
    let state = match &args.state {
        Some(name) => Some(state_arg(&s, name)?),
        None => s.fixed_state,
    };
    fs::create_dir_all(&args.out)?;
    let stochastic = args.delta.is_some() || !s.noise.is_deterministic();

    if !stochastic {
        let pipeline = DeterministicPipeline::new(u)?;
        let traces = (0..args.trials as u64)
            .into_par_iter()
            .map(|t| pipeline.run_trial(u, args.rounds, state, args.seed, t))
            .collect::<Result<Vec<_>>>()?;
        for (k, trace) in traces.iter().enumerate() {
            write_trace(&args.out, &trace_name(args.trials, k), trace)?;
        }
        let report = pipeline.report(args.rounds, args.seed)?;
        write_csv(&args.out.join("report.csv"), std::slice::from_ref(&report))?;
        writeln!(
            out,
            "T={} T0={} benchmark={} regret={}",
            report.rounds, report.exploration_rounds, report.benchmark, report.regret
        )?;
        return Ok(());
    }

    let delta = args.delta.unwrap_or_else(Q::zero);
    let pipeline = StochasticPipeline::new(u, s.noise, args.rounds, delta)?;
    for p in pipeline.premises(u).iter().filter(|p| !p.holds()) {
        writeln!(err, "warning: premise violated: {p}")?;
    }
    let episodes = (0..args.trials as u64)
        .into_par_iter()
        .map(|t| pipeline.episode(u, state, args.seed, t, true))
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::with_capacity(episodes.len());
    for (k, ep) in episodes.iter().enumerate() {
        write_trace(&args.out, &trace_name(args.trials, k), ep.trace.as_ref().expect("recorded"))?;
        reports.push(pipeline.report(ep.reward, args.seed));
    }
    write_csv(&args.out.join("report.csv"), &reports)?;
    let mean = episodes.iter().map(|e| e.reward).sum::<f64>() / episodes.len() as f64;
    let summary = pipeline.report(mean, args.seed);
    if args.trials > 1 {
        write_csv(&args.out.join("summary.csv"), std::slice::from_ref(&summary))?;
    }
    writeln!(
        out,
        "T={} T0={} benchmark={} mean_reward={} regret={}",
        summary.rounds, summary.exploration_rounds, summary.benchmark, summary.expected_reward, summary.regret
    )?;
    Ok(())
}
