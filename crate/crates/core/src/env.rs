//! Episodic decision environment: a base-station agent assigns devices to
//! subchannels and picks per-subchannel access-barring probabilities (and
//! optionally a global power scaling) once per frame, observing positions,
//! channel gains, arrival rates, queue lengths, and the analytic per-link
//! peak-AoI violation probabilities.
//!
//! The reward of a step is `-sum_k p_aoi(k) - eta * sum_(k,l) c1(k,l)`:
//! assigned devices contribute their analytic peak-AoI violation bound under
//! the chosen action (unassigned devices count as a certain violation, 1.0),
//! and each assigned pair adds the signed effective-capacity constraint
//! slack weighted by the Lagrange multiplier. Using the analytic bound
//! instead of the episode-local empirical frequency keeps the per-step
//! signal noise-free; empirical statistics stay available from the
//! simulator trace for evaluation.
//!
//! Channel gains for frame `mu` are drawn by the environment, shown to the
//! policy in `s(mu)`, and passed into the simulator for the decode step, so
//! the agent acts on exactly the channel the transmission experiences.

use crate::access::{access_success_prob, service_continuation_prob, AccessConfig};
use crate::config::{ActionSpaceMode, EnvSection, ScenarioConfig};
use crate::fbc::{self, ChannelModel};
use crate::rng::{substream, substream_seed};
use crate::sim::{uniform_disk_distances, FrameControl, Sim, SimConfig, SubchannelSpec};
use crate::snc::{c1_constraint_value, mean_decode_error, peak_aoi_bound, QoSBudget};
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// One concrete action: who transmits where, how aggressively, how loud.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub assignment: Vec<Option<usize>>,
    pub p_access: Vec<f64>,
    pub power_scale: f64,
}

/// The enumerated finite action set plus the static validity mask (actions
/// violating the average-power budget are enumerated but masked).
#[derive(Debug, Clone)]
pub struct ActionSpace {
    pub actions: Vec<ActionSpec>,
    pub valid: Vec<bool>,
}

impl ActionSpace {
    pub fn build(cfg: &ScenarioConfig, env: &EnvSection) -> Result<ActionSpace> {
        let k = cfg.scenario.devices as usize;
        let l = cfg.scenario.subchannels as usize;
        let patterns = match env.action_space {
            ActionSpaceMode::Full => full_patterns(k, l, env, cfg)?,
            ActionSpaceMode::Candidates => candidate_patterns(k, l),
        };
        let grids = cartesian_grid(&env.access_grid, l);
        let total = patterns.len() * grids.len() * env.power_scales.len();
        if total > env.candidate_cap {
            return Err(Error::Config(format!(
                "action space has {total} actions, exceeding env.candidate_cap = {}",
                env.candidate_cap
            )));
        }
        let mut actions = Vec::with_capacity(total);
        for pattern in &patterns {
            for grid in &grids {
                for &scale in &env.power_scales {
                    actions.push(ActionSpec {
                        assignment: pattern.clone(),
                        p_access: grid.clone(),
                        power_scale: scale,
                    });
                }
            }
        }
        let valid: Vec<bool> = actions
            .iter()
            .map(|a| match env.power_budget_w {
                None => true,
                Some(budget) => {
                    let assigned = a.assignment.iter().filter(|x| x.is_some()).count();
                    a.power_scale * cfg.link.power_w * assigned as f64 <= budget + 1e-12
                }
            })
            .collect();
        if !valid.iter().any(|&v| v) {
            return Err(Error::Config(
                "power budget masks out every action; raise env.power_budget_w".into(),
            ));
        }
        Ok(ActionSpace { actions, valid })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Every assignment vector: each device idle or on one of `l` subchannels.
fn full_patterns(
    k: usize,
    l: usize,
    env: &EnvSection,
    cfg: &ScenarioConfig,
) -> Result<Vec<Vec<Option<usize>>>> {
    let base = l + 1;
    let count = (base as u128).pow(k as u32);
    let budget = env.candidate_cap as u128
        / (cartesian_grid(&env.access_grid, l).len() * env.power_scales.len()).max(1) as u128;
    if count > budget {
        return Err(Error::Config(format!(
            "full enumeration needs {count} assignment patterns for {} devices x {} subchannels; \
             use action_space = \"candidates\" or raise env.candidate_cap",
            cfg.scenario.devices, cfg.scenario.subchannels
        )));
    }
    let mut patterns = Vec::with_capacity(count as usize);
    for mut idx in 0..count {
        let mut pattern = Vec::with_capacity(k);
        for _ in 0..k {
            let digit = (idx % base as u128) as usize;
            pattern.push(if digit == 0 { None } else { Some(digit - 1) });
            idx /= base as u128;
        }
        patterns.push(pattern);
    }
    Ok(patterns)
}

/// Structured assignment patterns that stay polynomial in K: round-robin
/// rotations, contiguous two-way splits, single-channel floods, and the
/// empty assignment.
fn candidate_patterns(k: usize, l: usize) -> Vec<Vec<Option<usize>>> {
    let mut patterns: Vec<Vec<Option<usize>>> = Vec::new();
    let mut push_unique = |p: Vec<Option<usize>>| {
        if !patterns.contains(&p) {
            patterns.push(p);
        }
    };
    for j in 0..l {
        push_unique((0..k).map(|d| Some((d + j) % l)).collect());
    }
    if l == 2 {
        for w in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cut = (w * k as f64).round() as usize;
            push_unique((0..k).map(|d| Some(usize::from(d >= cut))).collect());
        }
    }
    for target in 0..l {
        push_unique(vec![Some(target); k]);
    }
    push_unique(vec![None; k]);
    patterns
}

fn cartesian_grid(grid: &[f64], l: usize) -> Vec<Vec<f64>> {
    let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..l {
        combos = combos
            .iter()
            .flat_map(|c| {
                grid.iter().map(move |&g| {
                    let mut next = c.clone();
                    next.push(g);
                    next
                })
            })
            .collect();
    }
    combos
}

/// Observed state at one decision epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub positions_m: Vec<f64>,
    /// Fading power gains for the frame about to run, devices x subchannels.
    pub gains: Vec<Vec<f64>>,
    pub arrival_lambda: Vec<Vec<f64>>,
    /// Analytic peak-AoI violation probability per (device, subchannel)
    /// under the previous action's contention (hypothetical join for
    /// unassigned pairs).
    pub p_aoi: Vec<Vec<f64>>,
    pub queue_lens: Vec<u32>,
    pub epoch: u32,
}

impl EnvState {
    /// Flatten to the network input: normalized positions and queues, then
    /// gains, arrival rates, and violation probabilities per pair.
    pub fn observation(&self, radius_m: f64) -> Vec<f64> {
        let k = self.positions_m.len();
        let l = if k > 0 { self.gains[0].len() } else { 0 };
        let mut obs = Vec::with_capacity(2 * k + 3 * k * l);
        obs.extend(self.positions_m.iter().map(|d| d / radius_m));
        obs.extend(self.queue_lens.iter().map(|&q| f64::from(q).min(8.0) / 8.0));
        for row in &self.gains {
            obs.extend(row.iter().map(|g| g.min(4.0) / 4.0));
        }
        for row in &self.arrival_lambda {
            obs.extend(row.iter().copied());
        }
        for row in &self.p_aoi {
            obs.extend(row.iter().copied());
        }
        obs
    }
}

/// Inputs to the reward: one violation probability per device (1.0 when the
/// device is unassigned) and the constraint slack per assigned pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSlice {
    pub p_aoi: Vec<f64>,
    pub c1: Vec<f64>,
}

/// `R = -sum(p_aoi) - eta * sum(c1)`.
pub fn reward_of(slice: &RewardSlice, budget: &QoSBudget) -> f64 {
    let aoi: f64 = slice.p_aoi.iter().sum();
    let penalty: f64 = slice.c1.iter().sum();
    -aoi - budget.lagrange_multiplier * penalty
}

/// `sum_mu beta^mu R(mu)` with epochs indexed from 1, so the first reward is
/// already discounted once and `beta = 0` gives 0.
pub fn discounted_return(rewards: &[f64], beta: f64) -> f64 {
    assert!((0.0..1.0).contains(&beta), "discount must be in [0, 1)");
    let mut acc = 0.0;
    let mut weight = 1.0;
    for r in rewards {
        weight *= beta;
        acc += weight * r;
    }
    acc
}

/// Minimal environment interface the trainers drive.
pub trait DrlEnv {
    fn obs_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    fn valid_actions(&self) -> &[bool];
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<(Vec<f64>, f64, bool)>;
    /// Empirical peak-AoI violation frequency over updates delivered in the
    /// current episode, if the environment tracks deliveries (`None` when no
    /// update has been delivered yet or the notion does not apply).
    fn episode_violation(&self) -> Option<f64> {
        None
    }
}

pub struct AoiEnv {
    cfg: ScenarioConfig,
    env_cfg: EnvSection,
    space: ActionSpace,
    subchannels: Vec<SubchannelSpec>,
    seed: u64,
    sim: Option<Sim>,
    rng_fade: Option<ChaCha8Rng>,
    distances: Vec<f64>,
    /// Per-device SNR scale at power_scale = 1 with fading divided out.
    snr_base: Vec<f64>,
    eps_cache: HashMap<(usize, usize, u64), f64>,
    pending_gains: Vec<Vec<f64>>,
    last_action: Option<ActionSpec>,
    epoch: u32,
    rewards: Vec<f64>,
}

impl AoiEnv {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let env_cfg = cfg
            .env
            .clone()
            .ok_or_else(|| Error::Config("config has no [env] section".into()))?;
        let l = cfg.scenario.subchannels as usize;
        let bandwidths = env_cfg
            .bandwidth_hz
            .clone()
            .unwrap_or_else(|| vec![cfg.channel.bandwidth_hz; l]);
        let mut subchannels = Vec::with_capacity(l);
        for bw in &bandwidths {
            let model = ChannelModel {
                path_loss_exp: cfg.channel.path_loss_exp,
                noise_power_w: cfg.channel.noise_power_w,
                frame_secs: cfg.scenario.frame_secs,
                bandwidth_hz: *bw,
                blocklength: cfg.channel.blocklength,
                log2m_bits: cfg.channel.log2m_bits,
            };
            subchannels.push(SubchannelSpec {
                rb_count: fbc::rb_count(&model)?,
                blocklength: model.blocklength,
                log2m_bits: model.log2m_bits,
            });
        }
        let space = ActionSpace::build(cfg, &env_cfg)?;
        Ok(AoiEnv {
            cfg: cfg.clone(),
            env_cfg,
            space,
            subchannels,
            seed: 0,
            sim: None,
            rng_fade: None,
            distances: Vec::new(),
            snr_base: Vec::new(),
            eps_cache: HashMap::new(),
            pending_gains: Vec::new(),
            last_action: None,
            epoch: 0,
            rewards: Vec::new(),
        })
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn subchannels(&self) -> &[SubchannelSpec] {
        &self.subchannels
    }

    pub fn epochs_per_episode(&self) -> u32 {
        self.env_cfg.epochs
    }

    pub fn episode_rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn discount(&self) -> f64 {
        self.env_cfg.discount
    }

    /// Start a fresh episode: draw positions, rebuild the simulator, clear
    /// the decode-error cache, and draw the first frame's gains.
    pub fn reset_episode(&mut self, seed: u64) -> Result<EnvState> {
        let k = self.cfg.scenario.devices as usize;
        let l = self.subchannels.len();
        self.seed = seed;
        self.epoch = 0;
        self.rewards.clear();
        self.eps_cache.clear();
        let mut rng_pos = substream(seed, "env-pos", 0);
        self.distances = uniform_disk_distances(
            self.env_cfg.distance_max_m,
            self.env_cfg.distance_min_m,
            k,
            &mut rng_pos,
        );
        self.snr_base = self
            .distances
            .iter()
            .map(|d| match self.cfg.channel.ref_snr_db {
                Some(db) => 10f64.powf(db / 10.0) / self.cfg.channel.fading_mean,
                None => {
                    self.cfg.link.power_w * d.powf(-self.cfg.channel.path_loss_exp)
                        / self.cfg.channel.noise_power_w
                }
            })
            .collect();
        let sim_cfg = SimConfig {
            devices: k,
            frame_secs: self.cfg.scenario.frame_secs,
            mean_interarrival_secs: self.cfg.mean_interarrival_secs(),
            subchannels: self.subchannels.clone(),
            snr_scale: self.snr_base.iter().map(|&s| vec![s; l]).collect(),
            fading_mean: self.cfg.channel.fading_mean,
            force_decode_error: self.cfg.channel.force_decode_error,
            record_queue_series: false,
        };
        self.sim = Some(Sim::new(sim_cfg, substream_seed(seed, "env-sim", 0))?);
        let mut rng_fade = substream(seed, "env-fade", 0);
        self.pending_gains = draw_gains(&mut rng_fade, k, l, self.cfg.channel.fading_mean);
        self.rng_fade = Some(rng_fade);
        self.last_action = None;
        self.make_state()
    }

    /// Fading-averaged decode error for a (device, subchannel, power) tuple,
    /// Monte-Carlo with a fixed per-pair substream so different power levels
    /// share the same fading draws.
    pub fn eps_bar(&mut self, device: usize, subchannel: usize, power_scale: f64) -> Result<f64> {
        let key = (device, subchannel, power_scale.to_bits());
        if let Some(&v) = self.eps_cache.get(&key) {
            return Ok(v);
        }
        let l = self.subchannels.len();
        let mean_snr =
            self.snr_base[device] * power_scale * self.cfg.channel.fading_mean;
        let sub = &self.subchannels[subchannel];
        let mut rng = substream(
            self.seed,
            "env-eps",
            (device * l + subchannel) as u64,
        );
        let eps = match self.cfg.channel.force_decode_error {
            Some(f) => f,
            None => mean_decode_error(
                mean_snr,
                sub.blocklength,
                sub.log2m_bits,
                self.env_cfg.eps_bar_samples,
                &mut rng,
            )?,
        };
        self.eps_cache.insert(key, eps);
        Ok(eps)
    }

    fn contention(&self, assignment: &[Option<usize>]) -> Vec<u32> {
        let mut counts = vec![0u32; self.subchannels.len()];
        for a in assignment.iter().flatten() {
            counts[*a] += 1;
        }
        counts
    }

    /// Analytic peak-AoI violation bound for a device on a subchannel with
    /// the given contention and knobs.
    fn pair_p_aoi(
        &mut self,
        device: usize,
        subchannel: usize,
        contenders: u32,
        p_access: f64,
        power_scale: f64,
    ) -> Result<f64> {
        let eps = self.eps_bar(device, subchannel, power_scale)?;
        let access = AccessConfig::new(
            p_access,
            self.subchannels[subchannel].rb_count,
            contenders.max(1),
        )?;
        let p_succ = access_success_prob(&access);
        let p_o =
            service_continuation_prob(p_succ, p_access, eps, self.cfg.scenario.po_semantics);
        let bound = peak_aoi_bound(
            self.cfg.scenario.lambda,
            p_o,
            self.cfg.scenario.frame_secs,
            self.cfg.qos.aoi_exponent,
            self.cfg.qos.peak_aoi_threshold,
            self.cfg.scenario.interarrival_param,
        );
        Ok(bound.bound)
    }

    /// The reward inputs for an action evaluated against the current
    /// episode's decode-error estimates.
    pub fn reward_slice(&mut self, action: usize) -> Result<RewardSlice> {
        let spec = self.space.actions[action].clone();
        let counts = self.contention(&spec.assignment);
        let k = self.cfg.scenario.devices as usize;
        let mut p_aoi = Vec::with_capacity(k);
        let mut c1 = Vec::new();
        for device in 0..k {
            match spec.assignment[device] {
                None => p_aoi.push(1.0),
                Some(l) => {
                    p_aoi.push(self.pair_p_aoi(
                        device,
                        l,
                        counts[l],
                        spec.p_access[l],
                        spec.power_scale,
                    )?);
                    let eps = self.eps_bar(device, l, spec.power_scale)?;
                    let sub = &self.subchannels[l];
                    c1.push(c1_constraint_value(
                        eps,
                        sub.log2m_bits,
                        sub.blocklength,
                        self.cfg.qos.delay_exponent,
                        self.cfg.qos.ec_threshold,
                    ));
                }
            }
        }
        Ok(RewardSlice { p_aoi, c1 })
    }

    fn make_state(&mut self) -> Result<EnvState> {
        let k = self.cfg.scenario.devices as usize;
        let l = self.subchannels.len();
        let last = self.last_action.clone();
        let (assignment, p_access, power) = match &last {
            Some(a) => (a.assignment.clone(), a.p_access.clone(), a.power_scale),
            None => (
                vec![None; k],
                vec![self.cfg.scenario.p_access; l],
                1.0,
            ),
        };
        let counts = self.contention(&assignment);
        let mut p_aoi = vec![vec![0.0; l]; k];
        for (device, row) in p_aoi.iter_mut().enumerate() {
            for (sub, cell) in row.iter_mut().enumerate() {
                let contenders = if assignment[device] == Some(sub) {
                    counts[sub]
                } else {
                    counts[sub] + 1
                };
                *cell =
                    self.pair_p_aoi(device, sub, contenders, p_access[sub], power)?;
            }
        }
        let queue_lens = match &self.sim {
            Some(sim) => (0..k).map(|d| sim.queue_len(d) as u32).collect(),
            None => vec![0; k],
        };
        Ok(EnvState {
            positions_m: self.distances.clone(),
            gains: self.pending_gains.clone(),
            arrival_lambda: vec![vec![self.cfg.scenario.lambda; l]; k],
            p_aoi,
            queue_lens,
            epoch: self.epoch,
        })
    }

    /// Apply one action: reward from the analytic slice, then advance the
    /// simulator one frame under that action with the observed gains.
    pub fn step_action(&mut self, action: usize) -> Result<(EnvState, f64, bool)> {
        if self.sim.is_none() {
            return Err(Error::Policy("environment not reset".into()));
        }
        if self.epoch >= self.env_cfg.epochs {
            return Err(Error::Policy("episode finished; reset before stepping".into()));
        }
        if action >= self.space.len() {
            return Err(Error::Policy(format!(
                "action index {action} out of range ({} actions)",
                self.space.len()
            )));
        }
        if !self.space.valid[action] {
            return Err(Error::Policy(format!(
                "action {action} violates the power budget and is masked"
            )));
        }
        let slice = self.reward_slice(action)?;
        let reward = reward_of(&slice, &self.cfg.qos);
        let spec = self.space.actions[action].clone();
        let ctl = FrameControl {
            assignment: spec.assignment.clone(),
            p_access: spec.p_access.clone(),
            power_scale: spec.power_scale,
        };
        let sim = self.sim.as_mut().expect("checked above");
        sim.step_frame_with_gains(&ctl, &self.pending_gains)?;
        let k = self.cfg.scenario.devices as usize;
        let l = self.subchannels.len();
        let rng_fade = self.rng_fade.as_mut().expect("reset initializes fading");
        self.pending_gains = draw_gains(rng_fade, k, l, self.cfg.channel.fading_mean);
        self.last_action = Some(spec);
        self.epoch += 1;
        self.rewards.push(reward);
        let done = self.epoch >= self.env_cfg.epochs;
        let state = self.make_state()?;
        Ok((state, reward, done))
    }

    /// Consume the episode's simulator trace (for evaluation logging).
    pub fn take_trace(&mut self) -> Option<crate::sim::SimTrace> {
        self.sim.take().map(Sim::into_trace)
    }
}

fn draw_gains(rng: &mut ChaCha8Rng, k: usize, l: usize, mean: f64) -> Vec<Vec<f64>> {
    use rand::Rng;
    (0..k)
        .map(|_| {
            (0..l)
                .map(|_| {
                    let u: f64 = rng.gen();
                    -mean * (1.0 - u).ln()
                })
                .collect()
        })
        .collect()
}

impl DrlEnv for AoiEnv {
    fn obs_dim(&self) -> usize {
        let k = self.cfg.scenario.devices as usize;
        let l = self.subchannels.len();
        2 * k + 3 * k * l
    }

    fn action_count(&self) -> usize {
        self.space.len()
    }

    fn valid_actions(&self) -> &[bool] {
        &self.space.valid
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let state = self.reset_episode(seed)?;
        Ok(state.observation(self.env_cfg.distance_max_m))
    }

    fn step(&mut self, action: usize) -> Result<(Vec<f64>, f64, bool)> {
        let (state, reward, done) = self.step_action(action)?;
        Ok((state.observation(self.env_cfg.distance_max_m), reward, done))
    }

    fn episode_violation(&self) -> Option<f64> {
        let records = self.sim.as_ref()?.records();
        if records.is_empty() {
            return None;
        }
        let over = records
            .iter()
            .filter(|r| r.peak_aoi_secs > self.cfg.qos.peak_aoi_threshold)
            .count();
        Some(over as f64 / records.len() as f64)
    }
}
