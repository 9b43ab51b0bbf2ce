//! Scenario configuration: one TOML file describes the fleet, the radio
//! channel, the reference link, QoS budgets, and (optionally) the decision
//! environment and training run built on top of them.
//!
//! Parameter sweeps mutate a loaded config through [`ScenarioConfig::apply_override`],
//! which accepts only the names in [`SWEEPABLE`] so a typo fails loudly
//! instead of silently sweeping nothing.

use crate::access::PoSemantics;
use crate::fbc::{ChannelModel, LinkState};
use crate::snc::{InterarrivalParam, QoSBudget};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub channel: ChannelSection,
    pub link: LinkSection,
    pub qos: QoSBudget,
    #[serde(default)]
    pub env: Option<EnvSection>,
    #[serde(default)]
    pub train: Option<TrainSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Number of devices K.
    pub devices: u32,
    /// Number of subchannels L (used by the decision environment).
    #[serde(default = "one_u32")]
    pub subchannels: u32,
    /// Frame duration, seconds.
    pub frame_secs: f64,
    /// Arrival parameter; meaning fixed by `interarrival_param`.
    pub lambda: f64,
    #[serde(default)]
    pub interarrival_param: InterarrivalParam,
    #[serde(default)]
    pub po_semantics: PoSemantics,
    /// Access-barring transmission probability.
    pub p_access: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub path_loss_exp: f64,
    pub noise_power_w: f64,
    pub bandwidth_hz: f64,
    /// Channel uses per resource block.
    pub blocklength: u32,
    /// Information bits per update packet (log2 of the codebook size).
    pub log2m_bits: f64,
    #[serde(default = "one_f64")]
    pub fading_mean: f64,
    /// When set, the mean SNR in dB used instead of the link budget.
    #[serde(default)]
    pub ref_snr_db: Option<f64>,
    /// Monte-Carlo samples for the fading-averaged decoding error.
    #[serde(default = "default_eps_samples")]
    pub eps_bar_samples: u32,
    /// Pin the decoding error to a constant (bypasses fading entirely).
    #[serde(default)]
    pub force_decode_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub power_w: f64,
    pub distance_m: f64,
}

/// Action-space enumeration strategy for the decision environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSpaceMode {
    /// Every assignment matrix times every access-probability tuple.
    Full,
    /// Structured candidate assignments (rotations and contiguous splits).
    #[default]
    Candidates,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    /// Decision epochs (frames) per episode.
    pub epochs: u32,
    /// Access probabilities the policy can pick per subchannel.
    pub access_grid: Vec<f64>,
    #[serde(default)]
    pub action_space: ActionSpaceMode,
    /// Hard cap on enumerated actions.
    #[serde(default = "default_candidate_cap")]
    pub candidate_cap: usize,
    /// Discount factor for returns.
    pub discount: f64,
    /// Global transmit-power scalings selectable by the policy.
    #[serde(default = "default_power_scales")]
    pub power_scales: Vec<f64>,
    /// Per-subchannel bandwidth override (length = subchannels).
    #[serde(default)]
    pub bandwidth_hz: Option<Vec<f64>>,
    /// Device placement annulus.
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    /// Smaller per-episode sample count for in-loop error averaging.
    #[serde(default = "default_env_eps_samples")]
    pub eps_bar_samples: u32,
    /// Total power budget; assignments whose summed power exceeds it are
    /// masked out. Unlimited when absent.
    #[serde(default)]
    pub power_budget_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub episodes: u32,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_minibatch")]
    pub minibatch: usize,
    #[serde(default = "default_replay")]
    pub replay_capacity: usize,
    #[serde(default = "default_soft_update")]
    pub soft_update: f64,
    #[serde(default = "one_f64")]
    pub eps_start: f64,
    #[serde(default = "default_eps_end")]
    pub eps_end: f64,
    /// Episodes over which exploration decays linearly.
    #[serde(default)]
    pub eps_decay_episodes: Option<u32>,
    #[serde(default = "default_grad_clip")]
    pub grad_clip: f64,
    /// Observation history window T_o (stacked frames).
    #[serde(default = "one_usize")]
    pub window: usize,
    /// Recurrent trunk over the window instead of stacking.
    #[serde(default)]
    pub gru: bool,
    #[serde(default = "default_algo")]
    pub algo: String,
}

fn one_u32() -> u32 {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_eps_samples() -> u32 {
    100_000
}
fn default_env_eps_samples() -> u32 {
    1500
}
fn default_candidate_cap() -> usize {
    512
}
fn default_power_scales() -> Vec<f64> {
    vec![1.0]
}
fn default_hidden() -> Vec<usize> {
    vec![32]
}
fn default_lr() -> f64 {
    1e-3
}
fn default_minibatch() -> usize {
    8
}
fn default_replay() -> usize {
    4096
}
fn default_soft_update() -> f64 {
    0.01
}
fn default_eps_end() -> f64 {
    0.05
}
fn default_grad_clip() -> f64 {
    10.0
}
fn default_algo() -> String {
    "ddqn".into()
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if s.devices == 0 {
            return Err(Error::Config("scenario.devices must be >= 1".into()));
        }
        if s.subchannels == 0 {
            return Err(Error::Config("scenario.subchannels must be >= 1".into()));
        }
        if !(s.frame_secs > 0.0) {
            return Err(Error::Config("scenario.frame_secs must be > 0".into()));
        }
        if !(s.lambda > 0.0) {
            return Err(Error::Config("scenario.lambda must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&s.p_access) {
            return Err(Error::Config("scenario.p_access must be in [0, 1]".into()));
        }
        self.channel_model()?.validate()?;
        if let Some(f) = self.channel.force_decode_error {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(
                    "channel.force_decode_error must be in [0, 1]".into(),
                ));
            }
        }
        if self.channel.eps_bar_samples == 0 {
            return Err(Error::Config("channel.eps_bar_samples must be >= 1".into()));
        }
        if !(self.channel.fading_mean > 0.0) {
            return Err(Error::Config("channel.fading_mean must be > 0".into()));
        }
        if !(self.link.power_w > 0.0) || !(self.link.distance_m > 0.0) {
            return Err(Error::Config("link.power_w and link.distance_m must be > 0".into()));
        }
        self.qos.validate()?;
        if let Some(env) = &self.env {
            env.validate(s.subchannels)?;
        }
        if let Some(train) = &self.train {
            train.validate()?;
        }
        Ok(())
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        let c = &self.channel;
        let m = ChannelModel {
            path_loss_exp: c.path_loss_exp,
            noise_power_w: c.noise_power_w,
            frame_secs: self.scenario.frame_secs,
            bandwidth_hz: c.bandwidth_hz,
            blocklength: c.blocklength,
            log2m_bits: c.log2m_bits,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn link_state(&self, fading_gain: f64) -> LinkState {
        LinkState {
            power_w: self.link.power_w,
            distance_m: self.link.distance_m,
            fading_gain,
        }
    }

    /// Mean SNR of the reference link (fading averaged in), either from the
    /// dB override or from the link budget.
    pub fn mean_snr(&self) -> f64 {
        match self.channel.ref_snr_db {
            Some(db) => 10f64.powf(db / 10.0),
            None => {
                self.link.power_w * self.link.distance_m.powf(-self.channel.path_loss_exp)
                    * self.channel.fading_mean
                    / self.channel.noise_power_w
            }
        }
    }

    pub fn mean_interarrival_secs(&self) -> f64 {
        self.scenario
            .interarrival_param
            .mean_interarrival_secs(self.scenario.lambda)
    }

    /// Mean arrivals per frame for the per-frame (delay-side) transforms.
    pub fn arrivals_per_frame(&self) -> f64 {
        self.scenario.frame_secs / self.mean_interarrival_secs()
    }

    /// Set one swept parameter by name. Unknown names fail with the full
    /// list of accepted ones.
    pub fn apply_override(&mut self, name: &str, value: f64) -> Result<()> {
        let as_u32 = |v: f64, what: &str| -> Result<u32> {
            if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                return Err(Error::Config(format!(
                    "{what} must be a non-negative integer, got {v}"
                )));
            }
            Ok(v as u32)
        };
        match name {
            "lambda" => self.scenario.lambda = value,
            "p_access" => self.scenario.p_access = value,
            "frame_secs" => self.scenario.frame_secs = value,
            "devices" => self.scenario.devices = as_u32(value, "devices")?,
            "power_w" => self.link.power_w = value,
            "distance_m" => self.link.distance_m = value,
            "path_loss_exp" => self.channel.path_loss_exp = value,
            "noise_power_w" => self.channel.noise_power_w = value,
            "bandwidth_hz" => self.channel.bandwidth_hz = value,
            "blocklength" => self.channel.blocklength = as_u32(value, "blocklength")?,
            "log2m_bits" => self.channel.log2m_bits = value,
            "fading_mean" => self.channel.fading_mean = value,
            "ref_snr_db" => self.channel.ref_snr_db = Some(value),
            "force_decode_error" => self.channel.force_decode_error = Some(value),
            "peak_aoi_threshold" => self.qos.peak_aoi_threshold = value,
            "delay_threshold_frames" => {
                self.qos.delay_threshold_frames = as_u32(value, "delay_threshold_frames")?
            }
            "ec_threshold" => self.qos.ec_threshold = value,
            "aoi_exponent" => self.qos.aoi_exponent = value,
            "delay_exponent" => self.qos.delay_exponent = value,
            "lagrange_multiplier" => self.qos.lagrange_multiplier = value,
            _ => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{name}'; accepted: {}",
                    SWEEPABLE.join(", ")
                )))
            }
        }
        self.validate()
    }
}

/// Parameter names accepted by [`ScenarioConfig::apply_override`].
pub const SWEEPABLE: &[&str] = &[
    "lambda",
    "p_access",
    "frame_secs",
    "devices",
    "power_w",
    "distance_m",
    "path_loss_exp",
    "noise_power_w",
    "bandwidth_hz",
    "blocklength",
    "log2m_bits",
    "fading_mean",
    "ref_snr_db",
    "force_decode_error",
    "peak_aoi_threshold",
    "delay_threshold_frames",
    "ec_threshold",
    "aoi_exponent",
    "delay_exponent",
    "lagrange_multiplier",
];

impl EnvSection {
    fn validate(&self, subchannels: u32) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("env.epochs must be >= 1".into()));
        }
        if self.access_grid.is_empty()
            || self.access_grid.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Config(
                "env.access_grid must be non-empty with entries in [0, 1]".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config("env.discount must be in [0, 1)".into()));
        }
        if self.power_scales.is_empty() || self.power_scales.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("env.power_scales must be positive".into()));
        }
        if let Some(bw) = &self.bandwidth_hz {
            if bw.len() != subchannels as usize {
                return Err(Error::Config(format!(
                    "env.bandwidth_hz has {} entries for {subchannels} subchannels",
                    bw.len()
                )));
            }
            if bw.iter().any(|b| !(*b > 0.0)) {
                return Err(Error::Config("env.bandwidth_hz entries must be > 0".into()));
            }
        }
        if !(self.distance_min_m > 0.0) || self.distance_max_m < self.distance_min_m {
            return Err(Error::Config(
                "env.distance_min_m/_max_m must satisfy 0 < min <= max".into(),
            ));
        }
        if self.candidate_cap == 0 {
            return Err(Error::Config("env.candidate_cap must be >= 1".into()));
        }
        if self.eps_bar_samples == 0 {
            return Err(Error::Config("env.eps_bar_samples must be >= 1".into()));
        }
        if let Some(p) = self.power_budget_w {
            if !(p > 0.0) {
                return Err(Error::Config("env.power_budget_w must be > 0".into()));
            }
        }
        Ok(())
    }
}

impl TrainSection {
    fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("train.episodes must be >= 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("train.hidden layers must be non-empty".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("train.learning_rate must be > 0".into()));
        }
        if self.minibatch == 0 || self.replay_capacity < self.minibatch {
            return Err(Error::Config(
                "train.replay_capacity must be >= train.minibatch >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.soft_update) {
            return Err(Error::Config("train.soft_update must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return Err(Error::Config("train.eps_start/eps_end must be in [0, 1]".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::Config("train.grad_clip must be > 0".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("train.window must be >= 1".into()));
        }
        match self.algo.as_str() {
            "ddqn" | "dueling" => Ok(()),
            other => Err(Error::Config(format!(
                "train.algo must be 'ddqn' or 'dueling', got '{other}'"
            ))),
        }
    }
}
