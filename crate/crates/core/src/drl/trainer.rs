//! Double-DQN training loop with soft target updates, epsilon-greedy
//! exploration over a masked action set, and plain SGD with gradient-norm
//! clipping. The dueling algorithm differs only in the network head
//! structure; the decoupled target (online net selects, target net
//! evaluates) is shared.

use super::net::{soft_update, NetSpec, QNet};
use super::replay::{ReplayBuffer, Transition};
use crate::env::DrlEnv;
use crate::rng::{substream, substream_seed};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Ddqn,
    Dueling,
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddqn" => Ok(Algo::Ddqn),
            "dueling" => Ok(Algo::Dueling),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected 'ddqn' or 'dueling')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: u32,
    pub discount: f64,
    pub learning_rate: f64,
    pub exploration_start: f64,
    pub exploration_end: f64,
    /// Linear decay horizon in episodes; `None` keeps exploration constant
    /// at `exploration_start`.
    pub exploration_decay_episodes: Option<u32>,
    pub soft_update: f64,
    pub replay_capacity: usize,
    pub minibatch: usize,
    pub hidden: Vec<usize>,
    pub window: usize,
    pub gru: bool,
    pub algo: Algo,
    pub grad_clip: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config("discount must be in [0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.grad_clip > 0.0) {
            return Err(Error::Config("learning_rate and grad_clip must be > 0".into()));
        }
        for e in [self.exploration_start, self.exploration_end] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Config("exploration rates must be in [0, 1]".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.soft_update) {
            return Err(Error::Config("soft_update must be in [0, 1]".into()));
        }
        if self.minibatch == 0 || self.replay_capacity < self.minibatch {
            return Err(Error::Config("need replay_capacity >= minibatch >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_section(train: &crate::config::TrainSection, discount: f64) -> Result<Self> {
        let cfg = TrainConfig {
            episodes: train.episodes,
            discount,
            learning_rate: train.learning_rate,
            exploration_start: train.eps_start,
            exploration_end: train.eps_end,
            exploration_decay_episodes: train.eps_decay_episodes,
            soft_update: train.soft_update,
            replay_capacity: train.replay_capacity,
            minibatch: train.minibatch,
            hidden: train.hidden.clone(),
            window: train.window,
            gru: train.gru,
            algo: train.algo.parse()?,
            grad_clip: train.grad_clip,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn exploration_at(&self, episode: u32) -> f64 {
        match self.exploration_decay_episodes {
            None => self.exploration_start,
            Some(0) => self.exploration_end,
            Some(d) => {
                let frac = (f64::from(episode) / f64::from(d)).min(1.0);
                self.exploration_start + (self.exploration_end - self.exploration_start) * frac
            }
        }
    }

    fn net_spec(&self, obs_dim: usize, actions: usize) -> NetSpec {
        NetSpec {
            obs_dim,
            window: self.window,
            hidden: self.hidden.clone(),
            outputs: actions,
            arch: match self.algo {
                Algo::Ddqn => super::net::Arch::Feedforward,
                Algo::Dueling => super::net::Arch::Dueling,
            },
            gru: self.gru,
        }
    }
}

/// Greedy masked argmax, lowest index winning ties.
pub fn argmax_masked(q: &[f64], valid: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&qi, &ok)) in q.iter().zip(valid).enumerate() {
        if !ok {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if qi > q[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Epsilon-greedy over the valid actions: with probability `tau` a uniform
/// valid action, otherwise the masked argmax. Invalid actions are never
/// produced by either branch.
pub fn select_action(q: &[f64], valid: &[bool], tau: f64, rng: &mut impl Rng) -> Result<usize> {
    assert_eq!(q.len(), valid.len());
    let valid_idx: Vec<usize> =
        valid.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect();
    if valid_idx.is_empty() {
        return Err(Error::Policy("no valid action to select".into()));
    }
    if rng.gen::<f64>() < tau {
        let pick = (rng.gen::<f64>() * valid_idx.len() as f64) as usize;
        Ok(valid_idx[pick.min(valid_idx.len() - 1)])
    } else {
        Ok(argmax_masked(q, valid).expect("checked non-empty"))
    }
}

/// `y = R + beta * Q(s', argmax_a Q(s', a; w); w_target)`, or just `R` at
/// episode end (and when no next action is valid).
pub fn ddqn_target(t: &Transition, w: &QNet, w_target: &QNet, beta: f64) -> Result<f64> {
    if t.done {
        return Ok(t.reward);
    }
    let q_online = w.forward(&t.next_obs)?;
    let Some(best) = argmax_masked(&q_online, &t.next_valid) else {
        return Ok(t.reward);
    };
    let q_target = w_target.forward(&t.next_obs)?;
    Ok(t.reward + beta * q_target[best])
}

/// Mean squared TD error over the minibatch and its gradient in the online
/// network's parameters (targets treated as constants).
pub fn loss_and_grad(
    batch: &[&Transition],
    w: &QNet,
    w_target: &QNet,
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Training("empty minibatch".into()));
    }
    let mut grad = vec![0.0; w.param_count()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for t in batch {
        let y = ddqn_target(t, w, w_target, beta)?;
        let cache = w.forward_cached(&t.obs)?;
        let err = cache.q[t.action] - y;
        loss += err * err * scale;
        let mut dq = vec![0.0; cache.q.len()];
        dq[t.action] = 2.0 * err * scale;
        w.backward(&cache, &dq, &mut grad);
    }
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Training(format!("non-finite loss ({loss}) or gradient")));
    }
    Ok((loss, grad))
}

fn clip_grad_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
}

/// Sliding observation window, zero-padded on the left at episode start.
struct ObsWindow {
    window: usize,
    obs_dim: usize,
    buf: VecDeque<Vec<f64>>,
}

impl ObsWindow {
    fn new(window: usize, obs_dim: usize) -> Self {
        ObsWindow { window, obs_dim, buf: VecDeque::new() }
    }

    fn reset(&mut self, first: Vec<f64>) {
        self.buf.clear();
        self.buf.push_back(first);
    }

    fn push(&mut self, obs: Vec<f64>) {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(obs);
    }

    fn stacked(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.window * self.obs_dim];
        let pad = self.window - self.buf.len();
        for (i, obs) in self.buf.iter().enumerate() {
            let at = (pad + i) * self.obs_dim;
            out[at..at + self.obs_dim].copy_from_slice(obs);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStat {
    pub episode: u32,
    /// Undiscounted sum of rewards collected while training.
    pub ret: f64,
    pub discounted: f64,
    pub mean_loss: f64,
    pub exploration: f64,
    /// Empirical peak-AoI violation over the episode's delivered updates,
    /// when the environment reports one.
    pub violation: Option<f64>,
}

#[derive(Debug)]
pub struct TrainResult {
    pub net: QNet,
    pub curve: Vec<EpisodeStat>,
    /// True when training stopped early on a non-finite loss; `net` is the
    /// last parameter vector that produced finite losses.
    pub diverged: bool,
}

/// Run the full training loop. Deterministic given (env seed streams, seed).
pub fn train(env: &mut dyn DrlEnv, cfg: &TrainConfig, seed: u64) -> Result<TrainResult> {
    cfg.validate()?;
    let obs_dim = env.obs_dim();
    let actions = env.action_count();
    let spec = cfg.net_spec(obs_dim, actions);
    let mut rng_init = substream(seed, "train-init", 0);
    let mut net = QNet::new(spec, &mut rng_init)?;
    let mut target = net.clone();
    let mut replay = ReplayBuffer::new(cfg.replay_capacity)?;
    let mut rng_act = substream(seed, "train-act", 0);
    let mut rng_batch = substream(seed, "train-batch", 0);
    let mut window = ObsWindow::new(cfg.window, obs_dim);
    let mut curve = Vec::with_capacity(cfg.episodes as usize);
    let mut diverged = false;

    'episodes: for episode in 0..cfg.episodes {
        let tau = cfg.exploration_at(episode);
        let first = env.reset(substream_seed(seed, "episode", u64::from(episode)))?;
        window.reset(first);
        let mut rewards = Vec::new();
        let mut losses = Vec::new();
        loop {
            let s = window.stacked();
            let q = net.forward(&s)?;
            let a = select_action(&q, env.valid_actions(), tau, &mut rng_act)?;
            let (obs_next, reward, done) = env.step(a)?;
            window.push(obs_next);
            let s_next = window.stacked();
            replay.push(Transition {
                obs: s,
                action: a,
                next_obs: s_next,
                reward,
                done,
                next_valid: env.valid_actions().to_vec(),
            });
            rewards.push(reward);
            if replay.len() >= cfg.minibatch {
                let idx = replay.sample_indices(cfg.minibatch, &mut rng_batch)?;
                let batch: Vec<&Transition> = idx.iter().map(|&i| replay.get(i)).collect();
                match loss_and_grad(&batch, &net, &target, cfg.discount) {
                    Ok((loss, mut grad)) => {
                        losses.push(loss);
                        clip_grad_norm(&mut grad, cfg.grad_clip);
                        for (p, g) in net.params.iter_mut().zip(&grad) {
                            *p -= cfg.learning_rate * g;
                        }
                        soft_update(&net, &mut target, cfg.soft_update)?;
                    }
                    Err(_) => {
                        // Abort with the last finite-loss parameters.
                        diverged = true;
                        curve.push(EpisodeStat {
                            episode,
                            ret: rewards.iter().sum(),
                            discounted: crate::env::discounted_return(&rewards, cfg.discount),
                            mean_loss: f64::NAN,
                            exploration: tau,
                            violation: env.episode_violation(),
                        });
                        break 'episodes;
                    }
                }
            }
            if done {
                break;
            }
        }
        let mean_loss = if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };
        curve.push(EpisodeStat {
            episode,
            ret: rewards.iter().sum(),
            discounted: crate::env::discounted_return(&rewards, cfg.discount),
            mean_loss,
            exploration: tau,
            violation: env.episode_violation(),
        });
    }
    Ok(TrainResult { net, curve, diverged })
}

/// Greedy rollouts of frozen weights; returns the undiscounted return of
/// each episode.
pub fn evaluate(
    env: &mut dyn DrlEnv,
    net: &QNet,
    episodes: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut window = ObsWindow::new(net.spec.window, net.spec.obs_dim);
    let mut returns = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        let first = env.reset(substream_seed(seed, "episode", u64::from(episode)))?;
        window.reset(first);
        let mut total = 0.0;
        loop {
            let q = net.forward(&window.stacked())?;
            let a = argmax_masked(&q, env.valid_actions())
                .ok_or_else(|| Error::Policy("no valid action".into()))?;
            let (obs, reward, done) = env.step(a)?;
            window.push(obs);
            total += reward;
            if done {
                break;
            }
        }
        returns.push(total);
    }
    Ok(returns)
}

/// Uniform-random valid policy, same episode seeding as `evaluate` — the
/// baseline trained agents must beat.
pub fn random_rollout(env: &mut dyn DrlEnv, episodes: u32, seed: u64) -> Result<Vec<f64>> {
    let mut rng = substream(seed, "random-policy", 0);
    let mut returns = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        env.reset(substream_seed(seed, "episode", u64::from(episode)))?;
        let mut total = 0.0;
        loop {
            let valid = env.valid_actions();
            let a = select_action(&vec![0.0; valid.len()], valid, 1.0, &mut rng)?;
            let (_, reward, done) = env.step(a)?;
            total += reward;
            if done {
                break;
            }
        }
        returns.push(total);
    }
    Ok(returns)
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    seed: u64,
    net: QNet,
    config: serde_json::Value,
}

const CHECKPOINT_FORMAT: &str = "aoikit-checkpoint-v1";

pub fn save_checkpoint(
    path: &Path,
    net: &QNet,
    config: serde_json::Value,
    seed: u64,
) -> Result<()> {
    let cp = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        seed,
        net: net.clone(),
        config,
    };
    let text = serde_json::to_string_pretty(&cp)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(QNet, serde_json::Value, u64)> {
    let text = std::fs::read_to_string(path)?;
    let cp: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if cp.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint format '{}' (expected '{CHECKPOINT_FORMAT}')",
            cp.format
        )));
    }
    if cp.net.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Checkpoint("checkpoint contains non-finite weights".into()));
    }
    Ok((cp.net, cp.config, cp.seed))
}
