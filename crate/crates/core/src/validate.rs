//! Runtime oracle suite: every analytic building block is re-derived by an
//! independent route (combinatorial identity, Monte-Carlo sampling, finite
//! differences, or a discrete-event run) and compared at a stated tolerance.
//! The CLI `validate` subcommand prints one pass/fail row per check; the
//! same functions back the test suite.

use crate::access::{access_success_prob, access_success_prob_sum, AccessConfig};
use crate::drl::net::{Arch, NetSpec, QNet};
use crate::drl::replay::{ReplayBuffer, Transition};
use crate::drl::trainer::{argmax_masked, select_action};
use crate::rng::substream;
use crate::sim::{
    empirical_delay_violation, empirical_peak_aoi_violation, run_frames, run_until_updates,
    uniform_disk_distances, write_records_csv, FrameControl, SimConfig, SubchannelSpec,
};
use crate::snc::{
    c1_constraint_value, delay_kernel, delay_violation_bound, effective_capacity, mellin_arrival,
    mellin_interarrival, mellin_service_process, mellin_service_time, peak_aoi_bound,
    tighten_peak_aoi_bound, ArgSign, InterarrivalParam,
};
use crate::Result;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckResult { name, pass, detail }
    }
}

pub fn all_pass(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.pass)
}

/// Run every check. Deterministic: fixed internal seeds.
pub fn run_all() -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_access_binomial_identity(),
        check_access_monte_carlo(),
        check_interarrival_mellin_sampling(),
        check_service_time_mellin_sampling(),
        check_arrival_mellin_sampling(),
        check_service_process_mellin_sampling(),
        check_effective_capacity_anchors(),
        check_peak_aoi_composition(),
        check_kernel_capacity_substitution(),
        check_capacity_constraint_root(),
        check_peak_aoi_bound_dominates_simulator()?,
        check_delay_bound_dominates_simulator()?,
        check_gradients_feedforward()?,
        check_gradients_dueling()?,
        check_gradients_gru()?,
        check_replay_eviction()?,
        check_greedy_tie_break(),
        check_simulator_determinism()?,
        check_disk_placement_mean(),
    ])
}

/// Closed-form solo-access probability vs the explicit binomial sum.
pub fn check_access_binomial_identity() -> CheckResult {
    let mut worst = 0.0f64;
    for pi in 1..=20 {
        let p = f64::from(pi) * 0.05;
        for &rb in &[1u32, 2, 5, 10, 25, 50] {
            for &k in &[1u32, 2, 3, 5, 10, 20, 50, 100, 150, 200] {
                let cfg = match AccessConfig::new(p, rb, k) {
                    Ok(c) => c,
                    Err(e) => {
                        return CheckResult::new(
                            "access-binomial-identity",
                            false,
                            format!("config rejected: {e}"),
                        )
                    }
                };
                let diff = (access_success_prob(&cfg) - access_success_prob_sum(&cfg)).abs();
                worst = worst.max(diff);
            }
        }
    }
    CheckResult::new(
        "access-binomial-identity",
        worst <= 1e-12,
        format!("max |closed - sum| = {worst:.3e} over 1200 grid points (tol 1e-12)"),
    )
}

/// Closed-form solo-access probability vs direct simulation of contenders.
pub fn check_access_monte_carlo() -> CheckResult {
    let (p, rb, k) = (0.6f64, 10u32, 30u32);
    let cfg = AccessConfig::new(p, rb, k).expect("valid access config");
    let expect = access_success_prob(&cfg);
    let mut rng = substream(71, "validate-access-mc", 0);
    let trials = 100_000u32;
    let mut solo = 0u32;
    for _ in 0..trials {
        // Tagged device holds block 0; count interferers landing there.
        let mut hit = false;
        for _ in 0..k - 1 {
            if rng.gen::<f64>() < p && rng.gen_range(0..rb) == 0 {
                hit = true;
            }
        }
        if !hit {
            solo += 1;
        }
    }
    let est = f64::from(solo) / f64::from(trials);
    let se = (expect * (1.0 - expect) / f64::from(trials)).sqrt();
    CheckResult::new(
        "access-monte-carlo",
        (est - expect).abs() <= 3.0 * se,
        format!("closed form {expect:.5}, simulated {est:.5}, 3 s.e. = {:.1e}", 3.0 * se),
    )
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Interarrival transform vs the sample mean of `e^{theta I}` for
/// exponential gaps, under both parameterizations.
pub fn check_interarrival_mellin_sampling() -> CheckResult {
    let mut rng = substream(72, "validate-mi", 0);
    let draws = 400_000;
    let mut worst = 0.0f64;
    let cases = [
        (0.5, 0.8, InterarrivalParam::Literal), // mean gap 0.5 s
        (2.0, 0.8, InterarrivalParam::Rate),    // rate 2 /s, same gap
    ];
    for (lambda, theta, param) in cases {
        let mean_gap = param.mean_interarrival_secs(lambda);
        let analytic = mellin_interarrival(lambda, theta, ArgSign::Plus, param);
        assert!(analytic.stable);
        let mut acc = 0.0;
        for _ in 0..draws {
            let gap = -mean_gap * (1.0 - rng.gen::<f64>()).ln();
            acc += (theta * gap).exp();
        }
        worst = worst.max(rel_err(acc / f64::from(draws), analytic.value));
    }
    CheckResult::new(
        "interarrival-mellin-sampling",
        worst <= 0.01,
        format!("worst relative error {worst:.2e} at 400k draws (tol 1e-2)"),
    )
}

/// Service-time transform vs sampling the geometric frame count.
pub fn check_service_time_mellin_sampling() -> CheckResult {
    let (p_o, t_f, theta) = (0.2f64, 0.1f64, 1.0f64);
    let analytic = mellin_service_time(p_o, t_f, theta);
    assert!(analytic.stable);
    let mut rng = substream(73, "validate-ms", 0);
    let draws = 400_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let mut frames = 1u32;
        while rng.gen::<f64>() < p_o {
            frames += 1;
        }
        acc += (theta * t_f * f64::from(frames)).exp();
    }
    let rel = rel_err(acc / f64::from(draws), analytic.value);
    CheckResult::new(
        "service-time-mellin-sampling",
        rel <= 0.01,
        format!("relative error {rel:.2e} at 400k draws (tol 1e-2)"),
    )
}

/// Frame-arrival transform vs sampling Poisson counts.
pub fn check_arrival_mellin_sampling() -> CheckResult {
    let (lambda, mu, theta_t) = (0.5f64, 1u32, 0.3f64);
    let analytic = mellin_arrival(lambda, mu, theta_t);
    let mut rng = substream(74, "validate-ma", 0);
    let draws = 400_000;
    let floor = (-lambda).exp();
    let mut acc = 0.0;
    for _ in 0..draws {
        let mut count = 0u32;
        let mut prod: f64 = rng.gen();
        while prod > floor {
            count += 1;
            prod *= rng.gen::<f64>();
        }
        acc += (theta_t * f64::from(count)).exp();
    }
    let rel = rel_err(acc / f64::from(draws), analytic.value);
    CheckResult::new(
        "arrival-mellin-sampling",
        rel <= 0.01,
        format!("relative error {rel:.2e} at 400k draws (tol 1e-2)"),
    )
}

/// Per-frame service-process transform vs sampling the two-point bit
/// increment. Parameterized over the analytic formula so a deliberately
/// broken variant can demonstrate the check has teeth.
fn service_process_sampling_against(analytic: impl Fn(f64, f64, f64) -> f64) -> (bool, String) {
    let (eps_bar, log2m, theta_t) = (0.3f64, 2.5f64, 0.7f64);
    let expect = analytic(eps_bar, log2m, theta_t);
    let mut rng = substream(75, "validate-msp", 0);
    let draws = 400_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let bits = if rng.gen::<f64>() < eps_bar { 0.0 } else { log2m };
        acc += (-theta_t * bits).exp();
    }
    let rel = rel_err(acc / f64::from(draws), expect);
    (
        rel <= 0.01,
        format!("relative error {rel:.2e} at 400k draws (tol 1e-2)"),
    )
}

pub fn check_service_process_mellin_sampling() -> CheckResult {
    let (pass, detail) = service_process_sampling_against(|e, m, t| {
        mellin_service_process(e, m, t).value
    });
    CheckResult::new("service-process-mellin-sampling", pass, detail)
}

/// EC endpoints are exact; EC falls strictly as the error rate grows.
pub fn check_effective_capacity_anchors() -> CheckResult {
    let (log2m, n, theta_t) = (7.0f64, 200u32, 0.05f64);
    let clean = effective_capacity(0.0, log2m, n, theta_t);
    let dead = effective_capacity(1.0, log2m, n, theta_t);
    let mut monotone = true;
    let mut prev = clean;
    for i in 1..=10 {
        let ec = effective_capacity(f64::from(i) * 0.1, log2m, n, theta_t);
        if ec >= prev {
            monotone = false;
        }
        prev = ec;
    }
    let pass = (clean - log2m / f64::from(n)).abs() < 1e-15 && dead == 0.0 && monotone;
    CheckResult::new(
        "effective-capacity-anchors",
        pass,
        format!(
            "EC(0) = {clean:.6} vs {:.6}, EC(1) = {dead}, strictly decreasing: {monotone}",
            log2m / f64::from(n)
        ),
    )
}

/// The packaged peak-AoI bound equals the expression assembled from its
/// three individual transforms.
pub fn check_peak_aoi_composition() -> CheckResult {
    let cases = [
        (0.5, 0.2, 0.1, 0.8, 5.0),
        (1.0, 0.05, 0.1, 0.5, 10.0),
        (0.25, 0.5, 0.05, 1.5, 3.0),
        (2.0, 0.1, 0.2, 0.3, 20.0),
    ];
    let mut worst = 0.0f64;
    for (lambda, p_o, t_f, theta, a_th) in cases {
        let packaged = peak_aoi_bound(lambda, p_o, t_f, theta, a_th, InterarrivalParam::Literal);
        let mi_p = mellin_interarrival(lambda, theta, ArgSign::Plus, InterarrivalParam::Literal);
        let mi_m = mellin_interarrival(lambda, theta, ArgSign::Minus, InterarrivalParam::Literal);
        let ms = mellin_service_time(p_o, t_f, theta);
        let denom = 1.0 - mi_m.value * ms.value;
        assert!(packaged.stable && mi_p.stable && ms.stable && denom > 0.0);
        let assembled = (-theta * a_th).exp() * mi_p.value * ms.value / denom;
        worst = worst.max(rel_err(packaged.raw, assembled));
    }
    CheckResult::new(
        "peak-aoi-composition",
        worst <= 1e-12,
        format!("worst relative mismatch {worst:.2e} over 4 configurations (tol 1e-12)"),
    )
}

/// Rewriting the delay kernel through the effective capacity (service
/// transform = `e^{-theta n EC}`) reproduces it.
pub fn check_kernel_capacity_substitution() -> CheckResult {
    let (eps_bar, log2m, n, lambda, mu, d_th) = (0.2f64, 6.0f64, 150u32, 0.4f64, 1u32, 4u32);
    let mut worst = 0.0f64;
    let mut checked = 0u32;
    for i in 1..=20 {
        let theta_t = f64::from(i) * 0.01;
        let Some(direct) = delay_kernel(theta_t, d_th, eps_bar, log2m, lambda, mu) else {
            continue;
        };
        let ec = effective_capacity(eps_bar, log2m, n, theta_t);
        let ms = (-theta_t * f64::from(n) * ec).exp();
        let ma = mellin_arrival(lambda, mu, theta_t).value;
        let rebuilt = ms.powi(d_th as i32) / (1.0 - ma * ms);
        worst = worst.max(rel_err(direct, rebuilt));
        checked += 1;
    }
    CheckResult::new(
        "kernel-capacity-substitution",
        checked >= 10 && worst <= 1e-10,
        format!("worst relative mismatch {worst:.2e} over {checked} stable points (tol 1e-10)"),
    )
}

/// The capacity-constraint slack crosses zero exactly where the effective
/// capacity meets its threshold.
pub fn check_capacity_constraint_root() -> CheckResult {
    let (eps_bar, log2m, n, theta_t) = (0.15f64, 5.0f64, 300u32, 0.08f64);
    let ec = effective_capacity(eps_bar, log2m, n, theta_t);
    let at_root = c1_constraint_value(eps_bar, log2m, n, theta_t, ec);
    let slack_when_loose = c1_constraint_value(eps_bar, log2m, n, theta_t, ec * 0.5);
    let slack_when_tight = c1_constraint_value(eps_bar, log2m, n, theta_t, ec * 2.0);
    let pass = at_root.abs() < 1e-10 && slack_when_loose < 0.0 && slack_when_tight > 0.0;
    CheckResult::new(
        "capacity-constraint-root",
        pass,
        format!(
            "slack at threshold {at_root:.1e}; signs (loose, tight) = ({:.3}, {:.3})",
            slack_when_loose, slack_when_tight
        ),
    )
}

fn solo_sim_config(mean_gap: f64, eps: f64) -> SimConfig {
    SimConfig {
        devices: 1,
        frame_secs: 0.1,
        mean_interarrival_secs: mean_gap,
        subchannels: vec![SubchannelSpec { rb_count: 1, blocklength: 100, log2m_bits: 3.0 }],
        snr_scale: vec![vec![1.0]],
        fading_mean: 1.0,
        force_decode_error: Some(eps),
        record_queue_series: false,
    }
}

/// Tightened analytic peak-AoI tail vs the empirical frequency from a long
/// single-device run: the bound must sit above the measurement.
pub fn check_peak_aoi_bound_dominates_simulator() -> Result<CheckResult> {
    let (mean_gap, eps, t_f, a_th) = (0.5f64, 0.5f64, 0.1f64, 4.0f64);
    // Sole contender with unbarred access: the per-frame service failure
    // probability is exactly the decode error.
    let (theta_star, bound) =
        tighten_peak_aoi_bound(mean_gap, eps, t_f, a_th, InterarrivalParam::Literal);
    let cfg = solo_sim_config(mean_gap, eps);
    let ctl = FrameControl::uniform(1, 1.0);
    let trace = run_until_updates(cfg, &ctl, 30_000, 2_000_000, 7)?;
    let (emp, se) = empirical_peak_aoi_violation(&trace, a_th)?;
    let pass = bound.stable
        && bound.bound < 1.0
        && theta_star > 0.0
        && emp <= bound.bound + 4.0 * se;
    Ok(CheckResult::new(
        "peak-aoi-bound-dominates-simulator",
        pass,
        format!(
            "bound {:.4} at exponent {theta_star:.3}; empirical {emp:.5} (+4 s.e. = {:.1e}) from {} updates",
            bound.bound,
            4.0 * se,
            trace.records.len()
        ),
    ))
}

/// Analytic delay-violation tail vs the empirical frame-delay frequency.
/// One delivered update is one service unit, so the bit budget per frame is
/// one unit and the frame arrival intensity is `T_f / mean gap`.
pub fn check_delay_bound_dominates_simulator() -> Result<CheckResult> {
    // A light load and a generous frame budget keep the union-bound
    // prefactor small enough for a non-vacuous bound.
    let (mean_gap, eps, d_th) = (0.5f64, 0.4f64, 8u32);
    let lambda_frame = 0.1 / mean_gap;
    let (theta_star, bound) = delay_violation_bound(d_th, eps, 1.0, lambda_frame, 1);
    let cfg = solo_sim_config(mean_gap, eps);
    let ctl = FrameControl::uniform(1, 1.0);
    let trace = run_until_updates(cfg, &ctl, 30_000, 2_000_000, 8)?;
    let (emp, se) = empirical_delay_violation(&trace, d_th)?;
    let pass = bound.stable
        && bound.bound < 1.0
        && theta_star > 0.0
        && emp <= bound.bound + 4.0 * se;
    Ok(CheckResult::new(
        "delay-bound-dominates-simulator",
        pass,
        format!(
            "bound {:.4} at exponent {theta_star:.3}; empirical {emp:.5} (+4 s.e. = {:.1e}) from {} updates",
            bound.bound,
            4.0 * se,
            trace.records.len()
        ),
    ))
}

/// Backpropagation vs central finite differences on a random network:
/// returns the worst elementwise relative error for loss `sum(c_i q_i)`.
fn gradcheck_worst_rel(spec: NetSpec, stream_index: u64) -> Result<f64> {
    let mut net = QNet::new(spec, &mut substream(2024, "validate-grad-init", stream_index))?;
    let mut rng = substream(2024, "validate-grad-io", stream_index);
    let input: Vec<f64> =
        (0..net.spec.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let coef: Vec<f64> = (0..net.spec.outputs).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cache = net.forward_cached(&input)?;
    let mut grad = vec![0.0; net.param_count()];
    net.backward(&cache, &coef, &mut grad);
    let loss_of = |net: &QNet, input: &[f64]| -> Result<f64> {
        Ok(net.forward(input)?.iter().zip(&coef).map(|(q, c)| q * c).sum())
    };
    let step = 1e-5;
    let mut worst = 0.0f64;
    for (i, &analytic) in grad.iter().enumerate() {
        let orig = net.params[i];
        net.params[i] = orig + step;
        let up = loss_of(&net, &input)?;
        net.params[i] = orig - step;
        let down = loss_of(&net, &input)?;
        net.params[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        // Floor at 1e-6: the central difference itself carries ~5e-12 of
        // cancellation noise on an O(1) loss, so ratios against near-zero
        // gradients measure that noise rather than backprop accuracy.
        let denom = (analytic.abs() + numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    Ok(worst)
}

fn gradient_check(
    name: &'static str,
    specs: Vec<NetSpec>,
) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for (i, spec) in specs.into_iter().enumerate() {
        worst = worst.max(gradcheck_worst_rel(spec, i as u64)?);
    }
    Ok(CheckResult::new(
        name,
        worst < 1e-4,
        format!("worst relative gradient error {worst:.2e} (tol 1e-4)"),
    ))
}

pub fn check_gradients_feedforward() -> Result<CheckResult> {
    gradient_check(
        "gradient-check-feedforward",
        vec![
            NetSpec {
                obs_dim: 6,
                window: 1,
                hidden: vec![9, 5],
                outputs: 4,
                arch: Arch::Feedforward,
                gru: false,
            },
            NetSpec {
                obs_dim: 3,
                window: 2,
                hidden: vec![7],
                outputs: 3,
                arch: Arch::Feedforward,
                gru: false,
            },
        ],
    )
}

pub fn check_gradients_dueling() -> Result<CheckResult> {
    gradient_check(
        "gradient-check-dueling",
        vec![
            NetSpec {
                obs_dim: 5,
                window: 1,
                hidden: vec![8, 6],
                outputs: 5,
                arch: Arch::Dueling,
                gru: false,
            },
            NetSpec {
                obs_dim: 4,
                window: 2,
                hidden: vec![6],
                outputs: 2,
                arch: Arch::Dueling,
                gru: false,
            },
        ],
    )
}

pub fn check_gradients_gru() -> Result<CheckResult> {
    gradient_check(
        "gradient-check-gru",
        vec![
            NetSpec {
                obs_dim: 4,
                window: 3,
                hidden: vec![5],
                outputs: 3,
                arch: Arch::Feedforward,
                gru: true,
            },
            NetSpec {
                obs_dim: 3,
                window: 2,
                hidden: vec![4, 6],
                outputs: 2,
                arch: Arch::Dueling,
                gru: true,
            },
        ],
    )
}

/// Ring buffer keeps exactly the newest `capacity` transitions.
pub fn check_replay_eviction() -> Result<CheckResult> {
    let mut buf = ReplayBuffer::new(4)?;
    for i in 0..10 {
        buf.push(Transition {
            obs: vec![f64::from(i)],
            action: 0,
            next_obs: vec![0.0],
            reward: f64::from(i),
            done: false,
            next_valid: vec![true],
        });
    }
    let mut kept: Vec<f64> = (0..buf.len()).map(|i| buf.get(i).reward).collect();
    kept.sort_by(f64::total_cmp);
    let pass = kept == vec![6.0, 7.0, 8.0, 9.0];
    Ok(CheckResult::new(
        "replay-eviction",
        pass,
        format!("after 10 pushes into capacity 4, kept rewards {kept:?}"),
    ))
}

/// Greedy selection honors masks and breaks ties toward the lowest index.
pub fn check_greedy_tie_break() -> CheckResult {
    let mut rng = substream(76, "validate-tie", 0);
    let tie = argmax_masked(&[1.0, 1.0, 0.0], &[true, true, true]) == Some(0);
    let masked_best =
        argmax_masked(&[9.0, 0.2, 0.1], &[false, true, true]) == Some(1);
    let mut random_ok = true;
    for _ in 0..5_000 {
        match select_action(&[9.0, 0.2, 0.1], &[false, true, true], 1.0, &mut rng) {
            Ok(a) if a != 0 => {}
            _ => random_ok = false,
        }
    }
    CheckResult::new(
        "greedy-tie-break",
        tie && masked_best && random_ok,
        format!("tie->lowest: {tie}, mask skipped greedily: {masked_best}, mask skipped randomly: {random_ok}"),
    )
}

/// Same config + seed twice: identical trace structs and identical CSV bytes.
pub fn check_simulator_determinism() -> Result<CheckResult> {
    let cfg = SimConfig {
        devices: 5,
        frame_secs: 0.1,
        mean_interarrival_secs: 0.3,
        subchannels: vec![SubchannelSpec { rb_count: 4, blocklength: 120, log2m_bits: 4.0 }],
        snr_scale: vec![vec![2.0]; 5],
        fading_mean: 1.0,
        force_decode_error: None,
        record_queue_series: true,
    };
    let ctl = FrameControl::uniform(5, 0.7);
    let a = run_frames(cfg.clone(), &ctl, 500, 99)?;
    let b = run_frames(cfg, &ctl, 500, 99)?;
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_records_csv(&a, &mut csv_a)?;
    write_records_csv(&b, &mut csv_b)?;
    let pass = a == b && csv_a == csv_b;
    Ok(CheckResult::new(
        "simulator-determinism",
        pass,
        format!("two 500-frame runs: traces equal = {}, CSV bytes equal = {}", a == b, csv_a == csv_b),
    ))
}

/// Area-uniform annulus placement has mean radius
/// `(2/3)(R^3 - r^3)/(R^2 - r^2)`.
pub fn check_disk_placement_mean() -> CheckResult {
    let (r_max, r_min, n) = (500.0f64, 35.0f64, 200_000usize);
    let mut rng = substream(77, "validate-disk", 0);
    let d = uniform_disk_distances(r_max, r_min, n, &mut rng);
    let mean = d.iter().sum::<f64>() / n as f64;
    let expect = (2.0 / 3.0) * (r_max.powi(3) - r_min.powi(3)) / (r_max.powi(2) - r_min.powi(2));
    // Radius variance of the area-uniform law, for the standard error.
    let second = 0.5 * (r_max.powi(4) - r_min.powi(4)) / (r_max.powi(2) - r_min.powi(2));
    let se = ((second - expect * expect) / n as f64).sqrt();
    CheckResult::new(
        "disk-placement-mean",
        (mean - expect).abs() <= 3.0 * se,
        format!("sample mean {mean:.2} m vs {expect:.2} m, 3 s.e. = {:.2}", 3.0 * se),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_check_passes_and_names_are_unique() {
        let results = run_all().unwrap();
        assert_eq!(results.len(), 19);
        let names: HashSet<&str> = results.iter().map(|r| r.name).collect();
        assert_eq!(names.len(), results.len(), "duplicate check name");
        for r in &results {
            assert!(r.pass, "check '{}' failed: {}", r.name, r.detail);
        }
        assert!(all_pass(&results));
    }

    #[test]
    fn sampling_check_catches_a_sign_flip() {
        // A deliberately broken transform (positive exponent) must fail the
        // sampling comparison — evidence the oracle has teeth.
        let (pass, _) = service_process_sampling_against(|e, m, t| {
            e + (1.0 - e) * (t * m).exp()
        });
        assert!(!pass);
        // And the genuine transform passes.
        assert!(check_service_process_mellin_sampling().pass);
    }
}
