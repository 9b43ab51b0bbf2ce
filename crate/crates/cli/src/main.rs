//! `aoikit` — command-line front end for the AoI/delay bound toolkit.
//!
//! Subcommands: `bounds` (analytic sweeps to CSV), `simulate` (discrete-event
//! runs with bound-validity summaries), `train` / `evaluate` (DQN agents on
//! the allocation environment), and `validate` (the built-in oracle suite).
//!
//! Every command is deterministic given its config file and `--seed`; all
//! artifacts echo the resolved configuration. Exit codes: 0 success, 1 error
//! or failed validation, 2 bad sweep syntax, 3 training diverged.

mod artifacts;
mod sweep;

use anyhow::{bail, ensure, Context};
use artifacts::{fmt_f64, fmt_opt, write_csv, write_json};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use sweep::parse_sweep;

use aoikit_core::access::{
    access_success_prob, service_continuation_prob, AccessConfig, PoSemantics,
};
use aoikit_core::config::ScenarioConfig;
use aoikit_core::drl::{
    evaluate as greedy_rollouts, load_checkpoint, random_rollout, save_checkpoint, train, Algo,
    EpisodeStat, TrainConfig,
};
use aoikit_core::env::AoiEnv;
use aoikit_core::rng::{substream, substream_seed};
use aoikit_core::sim::{
    empirical_delay_violation, empirical_peak_aoi_violation, run_frames, run_until_updates,
    write_records_csv, FrameControl, SimConfig,
};
use aoikit_core::snc::{
    c1_constraint_value, delay_kernel, delay_violation_bound, effective_capacity,
    mean_decode_error, peak_aoi_bound, tighten_peak_aoi_bound,
};
use aoikit_core::{fbc, validate};

#[derive(Parser)]
#[command(
    name = "aoikit",
    version,
    about = "Peak-AoI / delay tail bounds, a validating simulator, and DQN resource allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic bounds on a config, optionally sweeping one
    /// parameter; writes bounds.csv and bounds_meta.json.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// One of: name=v1,v2,...  name=start:stop:count  name=log:start:stop:count
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (default: $AOIKIT_OUT_DIR, else the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep points.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the discrete-event simulator; writes trace.csv and summary.json
    /// with the empirical-vs-analytic bound comparison.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Stop after this many delivered updates (default 10000).
        #[arg(long, conflicts_with = "frames")]
        updates: Option<u64>,
        /// Run exactly this many frames instead.
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train agents; writes per-run curve CSVs, checkpoints, and
    /// train_summary.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// ddqn | dueling | both
        #[arg(long, default_value = "both")]
        algo: String,
        /// Independent training runs per algorithm.
        #[arg(long, default_value_t = 1)]
        seeds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Greedy rollouts of a saved checkpoint; writes evaluate.json.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 20)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-check oracle suite and print a pass/fail table.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Bounds { config, sweep, seed, out, workers } => {
            init_workers(workers);
            match cmd_bounds(&config, sweep.as_deref(), seed, &out_dir(out)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.is::<SweepSyntax>() => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => fail(e),
            }
        }
        Command::Simulate { config, updates, frames, seed, out } => {
            run_plain(cmd_simulate(&config, updates, frames, seed, &out_dir(out)))
        }
        Command::Train { config, algo, seeds, seed, out, workers } => {
            init_workers(workers);
            match cmd_train(&config, &algo, seeds, seed, &out_dir(out)) {
                Ok(diverged) if diverged => {
                    eprintln!("error: at least one training run diverged (see train_summary.json)");
                    ExitCode::from(3)
                }
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Evaluate { config, checkpoint, episodes, seed, out } => {
            run_plain(cmd_evaluate(&config, &checkpoint, episodes, seed, &out_dir(out)))
        }
        Command::Validate => match cmd_validate() {
            Ok(all_ok) if all_ok => ExitCode::SUCCESS,
            Ok(_) => ExitCode::from(1),
            Err(e) => fail(e),
        },
    };
    code
}

fn run_plain(r: anyhow::Result<()>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(1)
}

/// Marker wrapper so sweep syntax problems map to the usage exit code.
#[derive(Debug)]
struct SweepSyntax(String);

impl std::fmt::Display for SweepSyntax {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for SweepSyntax {}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("AOIKIT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // Ignore "already initialized": the pool can be set only once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn config_echo(cfg: &ScenarioConfig) -> anyhow::Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

/// Rayleigh-averaged decoding error for the reference link (or the forced
/// override). Same sub-stream every call, so sweeps share fading draws.
fn scenario_eps_bar(cfg: &ScenarioConfig, seed: u64, label: &str) -> anyhow::Result<f64> {
    if let Some(e) = cfg.channel.force_decode_error {
        return Ok(e);
    }
    let mut rng = substream(seed, label, 0);
    Ok(mean_decode_error(
        cfg.mean_snr(),
        cfg.channel.blocklength,
        cfg.channel.log2m_bits,
        cfg.channel.eps_bar_samples,
        &mut rng,
    )?)
}

const BOUNDS_HEADER: &str = "sweep_param,sweep_value,devices,rb_count,eps_bar,access_success,\
continuation,aoi_exponent,bound_at_exponent,bound_at_exponent_raw,peak_exponent_star,peak_bound,\
peak_bound_raw,peak_stable,delay_exponent,kernel_at_delay_exponent,delay_exponent_star,\
delay_bound,delay_bound_raw,delay_stable,effective_capacity,capacity_slack";

fn bounds_row(
    cfg: &ScenarioConfig,
    seed: u64,
    sweep_param: &str,
    sweep_value: Option<f64>,
) -> anyhow::Result<Vec<String>> {
    let model = cfg.channel_model()?;
    let rb = fbc::rb_count(&model)?;
    let eps_bar = scenario_eps_bar(cfg, seed, "bounds-eps")?;
    let s = &cfg.scenario;
    let access = AccessConfig::new(s.p_access, rb, s.devices)?;
    let p_succ = access_success_prob(&access);
    let p_o = service_continuation_prob(p_succ, s.p_access, eps_bar, s.po_semantics);
    let q = &cfg.qos;
    let at_theta = peak_aoi_bound(
        s.lambda,
        p_o,
        s.frame_secs,
        q.aoi_exponent,
        q.peak_aoi_threshold,
        s.interarrival_param,
    );
    let (theta_star, tight) = tighten_peak_aoi_bound(
        s.lambda,
        p_o,
        s.frame_secs,
        q.peak_aoi_threshold,
        s.interarrival_param,
    );
    let lam_f = cfg.arrivals_per_frame();
    let kernel_at = delay_kernel(
        q.delay_exponent,
        q.delay_threshold_frames,
        eps_bar,
        model.log2m_bits,
        lam_f,
        1,
    );
    let (delay_star, delay) =
        delay_violation_bound(q.delay_threshold_frames, eps_bar, model.log2m_bits, lam_f, 1);
    let ec = effective_capacity(eps_bar, model.log2m_bits, model.blocklength, q.delay_exponent);
    let slack = c1_constraint_value(
        eps_bar,
        model.log2m_bits,
        model.blocklength,
        q.delay_exponent,
        q.ec_threshold,
    );
    Ok(vec![
        sweep_param.to_string(),
        fmt_opt(sweep_value),
        s.devices.to_string(),
        rb.to_string(),
        fmt_f64(eps_bar),
        fmt_f64(p_succ),
        fmt_f64(p_o),
        fmt_f64(q.aoi_exponent),
        fmt_f64(at_theta.bound),
        fmt_f64(at_theta.raw),
        fmt_f64(theta_star),
        fmt_f64(tight.bound),
        fmt_f64(tight.raw),
        at_theta.stable.to_string(),
        fmt_f64(q.delay_exponent),
        fmt_opt(kernel_at),
        fmt_f64(delay_star),
        fmt_f64(delay.bound),
        fmt_f64(delay.raw),
        delay.stable.to_string(),
        fmt_f64(ec),
        fmt_f64(slack),
    ])
}

fn cmd_bounds(
    config: &Path,
    sweep: Option<&str>,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let base = ScenarioConfig::load(config)?;
    std::fs::create_dir_all(out)?;
    let (rows, sweep_echo) = match sweep {
        None => (vec![bounds_row(&base, seed, "", None)?], serde_json::Value::Null),
        Some(spec_text) => {
            let spec = parse_sweep(spec_text).map_err(|m| anyhow::Error::new(SweepSyntax(m)))?;
            use rayon::prelude::*;
            let mut indexed: Vec<(usize, Vec<String>)> = spec
                .values
                .par_iter()
                .enumerate()
                .map(|(i, &v)| -> anyhow::Result<(usize, Vec<String>)> {
                    let mut cfg = base.clone();
                    cfg.apply_override(&spec.name, v)?;
                    Ok((i, bounds_row(&cfg, seed, &spec.name, Some(v))?))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            indexed.sort_by_key(|(i, _)| *i);
            (
                indexed.into_iter().map(|(_, r)| r).collect(),
                serde_json::json!({ "param": spec.name, "values": spec.values }),
            )
        }
    };
    write_csv(&out.join("bounds.csv"), BOUNDS_HEADER, &rows)?;
    write_json(
        &out.join("bounds_meta.json"),
        &serde_json::json!({
            "command": "bounds",
            "seed": seed,
            "sweep": sweep_echo,
            "rows": rows.len(),
            "config": config_echo(&base)?,
        }),
    )?;
    println!("wrote {} row(s) to {}", rows.len(), out.join("bounds.csv").display());
    Ok(())
}

fn cmd_simulate(
    config: &Path,
    updates: Option<u64>,
    frames: Option<u64>,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let cfg = ScenarioConfig::load(config)?;
    std::fs::create_dir_all(out)?;
    let sim_cfg = SimConfig::from_scenario(&cfg)?;
    let devices = cfg.scenario.devices as usize;
    let ctl = FrameControl::uniform(devices, cfg.scenario.p_access);
    let trace = match (updates, frames) {
        (None, Some(f)) => run_frames(sim_cfg, &ctl, f, seed)?,
        (u, None) => {
            let target = u.unwrap_or(10_000);
            run_until_updates(sim_cfg, &ctl, target, 20_000_000, seed)?
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    // Analytic companions, using the simulator-faithful failure semantics.
    let model = cfg.channel_model()?;
    let rb = fbc::rb_count(&model)?;
    let eps_bar = scenario_eps_bar(&cfg, seed, "simulate-eps")?;
    let s = &cfg.scenario;
    let access = AccessConfig::new(s.p_access, rb, s.devices)?;
    let p_succ_floor = access_success_prob(&access);
    let p_o = service_continuation_prob(
        p_succ_floor,
        s.p_access,
        eps_bar,
        PoSemantics::SuccessFactor,
    );
    let q = &cfg.qos;
    let (peak_theta, peak) = tighten_peak_aoi_bound(
        s.lambda,
        p_o,
        s.frame_secs,
        q.peak_aoi_threshold,
        s.interarrival_param,
    );
    let (delay_theta, delay) =
        delay_violation_bound(q.delay_threshold_frames, p_o, 1.0, cfg.arrivals_per_frame(), 1);

    let peak_emp = empirical_peak_aoi_violation(&trace, q.peak_aoi_threshold).ok();
    let delay_emp = empirical_delay_violation(&trace, q.delay_threshold_frames).ok();
    let peak_holds = peak_emp.map(|(v, se)| v <= peak.bound + 3.0 * se);
    let delay_holds = delay_emp.map(|(v, se)| v <= delay.bound + 3.0 * se);
    let p_succ_se = if trace.attempts > 0 {
        (p_succ_floor * (1.0 - p_succ_floor) / trace.attempts as f64).sqrt()
    } else {
        f64::NAN
    };

    write_records_csv(&trace, &mut std::fs::File::create(out.join("trace.csv"))?)?;
    write_json(
        &out.join("summary.json"),
        &serde_json::json!({
            "command": "simulate",
            "seed": seed,
            "frames": trace.frames,
            "updates_delivered": trace.records.len(),
            "arrivals_total": trace.arrivals.iter().sum::<u64>(),
            "attempts": trace.attempts,
            "empirical_p_succ": trace.empirical_p_succ,
            "analytic_p_succ_all_backlogged": p_succ_floor,
            "p_succ_se": p_succ_se,
            "eps_bar": eps_bar,
            "service_continuation": p_o,
            "peak_aoi_threshold": q.peak_aoi_threshold,
            "analytic_peak_bound": peak.bound,
            "analytic_peak_exponent": peak_theta,
            "empirical_peak_violation": peak_emp.map(|(v, _)| v),
            "peak_violation_se": peak_emp.map(|(_, se)| se),
            "peak_bound_holds": peak_holds,
            "delay_threshold_frames": q.delay_threshold_frames,
            "analytic_delay_bound": delay.bound,
            "analytic_delay_exponent": delay_theta,
            "empirical_delay_violation": delay_emp.map(|(v, _)| v),
            "delay_violation_se": delay_emp.map(|(_, se)| se),
            "delay_bound_holds": delay_holds,
            "validity_check": match (peak_holds, delay_holds) {
                (Some(a), Some(b)) => Some(a && b),
                _ => None,
            },
            "config": config_echo(&cfg)?,
        }),
    )?;
    println!(
        "simulated {} frames, {} updates -> {}",
        trace.frames,
        trace.records.len(),
        out.join("trace.csv").display()
    );
    Ok(())
}

const CURVE_HEADER: &str = "episode,return,violation,loss,discounted,exploration";

fn curve_rows(curve: &[EpisodeStat]) -> Vec<Vec<String>> {
    curve
        .iter()
        .map(|e| {
            vec![
                e.episode.to_string(),
                fmt_f64(e.ret),
                fmt_opt(e.violation),
                fmt_f64(e.mean_loss),
                fmt_f64(e.discounted),
                fmt_f64(e.exploration),
            ]
        })
        .collect()
}

fn algo_name(a: Algo) -> &'static str {
    match a {
        Algo::Ddqn => "ddqn",
        Algo::Dueling => "dueling",
    }
}

struct TrainTaskOut {
    algo: Algo,
    seed_index: u32,
    run_seed: u64,
    curve: Vec<EpisodeStat>,
    diverged: bool,
    final_mean: f64,
    random_mean: f64,
    net: aoikit_core::drl::QNet,
}

/// Returns true when any run diverged (artifacts are still written).
fn cmd_train(
    config: &Path,
    algo_flag: &str,
    seeds: u32,
    seed: u64,
    out: &Path,
) -> anyhow::Result<bool> {
    ensure!(seeds >= 1, "--seeds must be >= 1");
    let cfg = ScenarioConfig::load(config)?;
    std::fs::create_dir_all(out)?;
    let train_sec = cfg
        .train
        .clone()
        .ok_or_else(|| anyhow::anyhow!("config has no [train] section"))?;
    let env_sec = cfg
        .env
        .clone()
        .ok_or_else(|| anyhow::anyhow!("config has no [env] section"))?;
    let base_tc = TrainConfig::from_section(&train_sec, env_sec.discount)?;
    let algos: Vec<Algo> = match algo_flag {
        "ddqn" => vec![Algo::Ddqn],
        "dueling" => vec![Algo::Dueling],
        "both" => vec![Algo::Ddqn, Algo::Dueling],
        other => bail!("unknown --algo '{other}' (expected ddqn, dueling, or both)"),
    };
    let window = (base_tc.episodes.min(100)) as usize;
    let tasks: Vec<(Algo, u32)> = algos
        .iter()
        .flat_map(|&a| (0..seeds).map(move |s| (a, s)))
        .collect();

    use rayon::prelude::*;
    let results: Vec<TrainTaskOut> = tasks
        .par_iter()
        .map(|&(algo, seed_index)| -> anyhow::Result<TrainTaskOut> {
            let mut tc = base_tc.clone();
            tc.algo = algo;
            // Same run seed across algorithms: matched episode draws.
            let run_seed = substream_seed(seed, "train-run", u64::from(seed_index));
            let mut env = AoiEnv::new(&cfg)?;
            let result = train(&mut env, &tc, run_seed)?;
            let tail = &result.curve[result.curve.len().saturating_sub(window)..];
            let final_mean = tail.iter().map(|e| e.ret).sum::<f64>() / tail.len().max(1) as f64;
            let mut env_rand = AoiEnv::new(&cfg)?;
            let random = random_rollout(&mut env_rand, window as u32, run_seed)?;
            let random_mean = random.iter().sum::<f64>() / random.len().max(1) as f64;
            Ok(TrainTaskOut {
                algo,
                seed_index,
                run_seed,
                curve: result.curve,
                diverged: result.diverged,
                final_mean,
                random_mean,
                net: result.net,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let echo = config_echo(&cfg)?;
    let mut diverged_any = false;
    let mut per_algo = serde_json::Map::new();
    for &algo in &algos {
        let name = algo_name(algo);
        let mut finals = Vec::new();
        let mut randoms = Vec::new();
        let mut diverged_runs = Vec::new();
        for r in results.iter().filter(|r| r.algo == algo) {
            write_csv(
                &out.join(format!("curve_{name}_seed{}.csv", r.seed_index)),
                CURVE_HEADER,
                &curve_rows(&r.curve),
            )?;
            save_checkpoint(
                &out.join(format!("checkpoint_{name}_seed{}.json", r.seed_index)),
                &r.net,
                serde_json::json!({ "algo": name, "scenario": echo.clone() }),
                r.run_seed,
            )?;
            finals.push(r.final_mean);
            randoms.push(r.random_mean);
            diverged_runs.push(r.diverged);
            diverged_any |= r.diverged;
        }
        let mean = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
        let beats: usize = finals
            .iter()
            .zip(&randoms)
            .filter(|(f, r)| f > r)
            .count();
        per_algo.insert(
            name.to_string(),
            serde_json::json!({
                "final_means": finals,
                "random_means": randoms,
                "mean_final": mean,
                "beats_random_seeds": beats,
                "diverged_runs": diverged_runs,
            }),
        );
    }
    let comparison = if algos.len() == 2 {
        let count = |a: Algo| -> Vec<f64> {
            results
                .iter()
                .filter(|r| r.algo == a)
                .map(|r| r.final_mean)
                .collect()
        };
        let (d, q) = (count(Algo::Ddqn), count(Algo::Dueling));
        let dueling_ge = d.iter().zip(&q).filter(|(dd, du)| du >= dd).count();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        serde_json::json!({
            "dueling_ge_ddqn_seeds": dueling_ge,
            "seeds": seeds,
            "ddqn_mean_final": mean(&d),
            "dueling_mean_final": mean(&q),
        })
    } else {
        serde_json::Value::Null
    };
    write_json(
        &out.join("train_summary.json"),
        &serde_json::json!({
            "command": "train",
            "seed": seed,
            "seeds": seeds,
            "episodes": base_tc.episodes,
            "final_window": window,
            "results": serde_json::Value::Object(per_algo),
            "comparison": comparison,
            "config": echo,
        }),
    )?;
    println!(
        "trained {} run(s) -> {}",
        results.len(),
        out.join("train_summary.json").display()
    );
    Ok(diverged_any)
}

fn cmd_evaluate(
    config: &Path,
    checkpoint: &Path,
    episodes: u32,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    ensure!(episodes >= 1, "--episodes must be >= 1");
    let cfg = ScenarioConfig::load(config)?;
    std::fs::create_dir_all(out)?;
    let (net, ckpt_cfg, ckpt_seed) =
        load_checkpoint(checkpoint).with_context(|| checkpoint.display().to_string())?;
    let mut env = AoiEnv::new(&cfg)?;
    use aoikit_core::env::DrlEnv;
    ensure!(
        net.spec.obs_dim == env.obs_dim() && net.spec.outputs == env.action_count(),
        "checkpoint shape ({} obs, {} actions) does not match the scenario ({} obs, {} actions)",
        net.spec.obs_dim,
        net.spec.outputs,
        env.obs_dim(),
        env.action_count()
    );
    let returns = greedy_rollouts(&mut env, &net, episodes, seed)?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    write_json(
        &out.join("evaluate.json"),
        &serde_json::json!({
            "command": "evaluate",
            "seed": seed,
            "episodes": episodes,
            "checkpoint": checkpoint.display().to_string(),
            "checkpoint_seed": ckpt_seed,
            "checkpoint_config": ckpt_cfg,
            "returns": returns,
            "mean_return": mean,
            "config": config_echo(&cfg)?,
        }),
    )?;
    println!("mean return over {episodes} episode(s): {mean}");
    Ok(())
}

fn cmd_validate() -> anyhow::Result<bool> {
    let results = validate::run_all()?;
    let mut all_ok = true;
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("{tag}  {:40} {}", r.name, r.detail);
        all_ok &= r.pass;
    }
    println!(
        "{} of {} checks passed",
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    Ok(all_ok)
}
