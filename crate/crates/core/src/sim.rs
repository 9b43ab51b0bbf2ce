//! Frame-by-frame simulation of K devices contending on L subchannels under
//! access barring, RB collisions, and finite-blocklength decode errors.
//!
//! Time is slotted into frames of `frame_secs`, indexed from 1. Update
//! generation times are continuous (exponential gaps per device); an update
//! generated at time g is eligible from the first frame `mu` with
//! `g <= mu * frame_secs` onward. Within a frame, events resolve in a fixed
//! order — arrivals, barring draws, RB choice, collision resolution, decode,
//! bookkeeping — so a trace is a pure function of (config, controls, seed).
//!
//! Each delivered update records `peak_aoi` = generation gap to the previous
//! update of the same device plus the service time of this one, where the
//! service spans the frames from when the packet reached the head of its
//! FCFS queue through delivery. Collisions are unconditional failures (no
//! capture), and losers retry indefinitely.
//!
//! Random draws are consumed at a fixed per-device, per-frame rate from
//! labeled substreams, so two runs with the same seed see identical arrival
//! processes, fading, and barring luck even when their control policies
//! differ — useful for paired policy comparisons.

use crate::fbc;
use crate::rng::substream;
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write as IoWrite;

/// Per-subchannel radio parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelSpec {
    pub rb_count: u32,
    pub blocklength: u32,
    pub log2m_bits: f64,
}

/// Everything a run needs besides the per-frame controls and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub devices: usize,
    pub frame_secs: f64,
    pub mean_interarrival_secs: f64,
    pub subchannels: Vec<SubchannelSpec>,
    /// Mean SNR per (device, subchannel) with the fading mean divided out;
    /// a decode draw sees `snr_scale * fading`, fading ~ Exp(fading_mean).
    pub snr_scale: Vec<Vec<f64>>,
    pub fading_mean: f64,
    /// Pin the decode error probability, bypassing SINR entirely.
    pub force_decode_error: Option<f64>,
    /// Keep per-frame queue-length series (sizeable for long runs).
    pub record_queue_series: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.devices == 0 {
            return Err(Error::Config("simulation needs at least one device".into()));
        }
        if !(self.frame_secs > 0.0) || !(self.mean_interarrival_secs > 0.0) {
            return Err(Error::Config("frame and inter-arrival times must be > 0".into()));
        }
        if self.subchannels.is_empty() {
            return Err(Error::Config("simulation needs at least one subchannel".into()));
        }
        for s in &self.subchannels {
            if s.rb_count == 0 || s.blocklength == 0 || !(s.log2m_bits > 0.0) {
                return Err(Error::Config("subchannel spec fields must be positive".into()));
            }
        }
        if self.snr_scale.len() != self.devices
            || self.snr_scale.iter().any(|row| row.len() != self.subchannels.len())
        {
            return Err(Error::Config("snr_scale must be devices x subchannels".into()));
        }
        if !(self.fading_mean > 0.0) {
            return Err(Error::Config("fading_mean must be > 0".into()));
        }
        if let Some(f) = self.force_decode_error {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config("force_decode_error must be in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Single-subchannel fleet from a scenario file: every device at the
    /// reference link's distance and power.
    pub fn from_scenario(cfg: &crate::config::ScenarioConfig) -> Result<Self> {
        let model = cfg.channel_model()?;
        let rb = fbc::rb_count(&model)?;
        let devices = cfg.scenario.devices as usize;
        let snr = cfg.mean_snr() / cfg.channel.fading_mean;
        let sim = SimConfig {
            devices,
            frame_secs: cfg.scenario.frame_secs,
            mean_interarrival_secs: cfg.mean_interarrival_secs(),
            subchannels: vec![SubchannelSpec {
                rb_count: rb,
                blocklength: model.blocklength,
                log2m_bits: model.log2m_bits,
            }],
            snr_scale: vec![vec![snr]; devices],
            fading_mean: cfg.channel.fading_mean,
            force_decode_error: cfg.channel.force_decode_error,
            record_queue_series: true,
        };
        sim.validate()?;
        Ok(sim)
    }
}

/// Per-frame control: which subchannel each device may use, the barring
/// probability per subchannel, and a global SNR (power) scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameControl {
    pub assignment: Vec<Option<usize>>,
    pub p_access: Vec<f64>,
    pub power_scale: f64,
}

impl FrameControl {
    pub fn uniform(devices: usize, p_access: f64) -> Self {
        FrameControl {
            assignment: vec![Some(0); devices],
            p_access: vec![p_access],
            power_scale: 1.0,
        }
    }

    fn validate(&self, cfg: &SimConfig) -> Result<()> {
        if self.assignment.len() != cfg.devices {
            return Err(Error::Policy(format!(
                "assignment covers {} devices, fleet has {}",
                self.assignment.len(),
                cfg.devices
            )));
        }
        if self.p_access.len() != cfg.subchannels.len() {
            return Err(Error::Policy(format!(
                "p_access has {} entries for {} subchannels",
                self.p_access.len(),
                cfg.subchannels.len()
            )));
        }
        for (l, p) in self.p_access.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Policy(format!(
                    "p_access[{l}] = {p} outside [0, 1]"
                )));
            }
        }
        for (k, a) in self.assignment.iter().enumerate() {
            if let Some(l) = a {
                if *l >= cfg.subchannels.len() {
                    return Err(Error::Policy(format!(
                        "device {k} assigned to subchannel {l}, only {} exist",
                        cfg.subchannels.len()
                    )));
                }
            }
        }
        if !(self.power_scale > 0.0) {
            return Err(Error::Policy("power_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// One delivered update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateRecord {
    pub device: u32,
    pub subchannel: u32,
    pub generation_secs: f64,
    pub delivery_secs: f64,
    pub service_frames: u32,
    pub interarrival_secs: f64,
    pub peak_aoi_secs: f64,
    /// Delivery frame minus the frame the update became eligible in;
    /// 0 means same-frame delivery.
    pub delay_frames: u32,
}

/// What happened in one frame (consumed by the decision environment).
#[derive(Debug, Clone)]
pub struct FrameEvents {
    pub frame: u64,
    /// Fading draw per (device, subchannel) for this frame.
    pub fading: Vec<Vec<f64>>,
    pub delivered: Vec<UpdateRecord>,
    /// Attempts that landed on an RB with at least one other occupant.
    pub collided_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub records: Vec<UpdateRecord>,
    pub frame_collisions: Vec<u32>,
    pub queue_series: Vec<Vec<u32>>,
    pub arrivals: Vec<u64>,
    pub delivered: Vec<u64>,
    pub final_queue: Vec<u32>,
    pub frames: u64,
    pub attempts: u64,
    pub solo_attempts: u64,
    pub solo_decoded: u64,
    pub backlogged_device_frames: u64,
    pub empirical_p_succ: f64,
    pub seed: u64,
}

struct Pending {
    generation_secs: f64,
    eligible_frame: u64,
}

struct DeviceState {
    rng_gap: ChaCha8Rng,
    rng_acb: ChaCha8Rng,
    rng_rb: ChaCha8Rng,
    rng_fade: ChaCha8Rng,
    rng_decode: ChaCha8Rng,
    next_generation_secs: f64,
    queue: std::collections::VecDeque<Pending>,
    /// Frame the head-of-line packet started service in.
    head_start_frame: Option<u64>,
    prev_generation_secs: f64,
}

pub struct Sim {
    cfg: SimConfig,
    seed: u64,
    frame: u64,
    devices: Vec<DeviceState>,
    records: Vec<UpdateRecord>,
    frame_collisions: Vec<u32>,
    queue_series: Vec<Vec<u32>>,
    arrivals: Vec<u64>,
    delivered: Vec<u64>,
    attempts: u64,
    solo_attempts: u64,
    solo_decoded: u64,
    backlogged_device_frames: u64,
}

fn exp_draw(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    use rand::Rng;
    let u: f64 = rng.gen();
    -mean * (1.0 - u).ln()
}

impl Sim {
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let devices = (0..cfg.devices)
            .map(|k| {
                let k64 = k as u64;
                let mut rng_gap = substream(seed, "sim-gap", k64);
                let first = exp_draw(&mut rng_gap, cfg.mean_interarrival_secs);
                DeviceState {
                    rng_gap,
                    rng_acb: substream(seed, "sim-acb", k64),
                    rng_rb: substream(seed, "sim-rb", k64),
                    rng_fade: substream(seed, "sim-fade", k64),
                    rng_decode: substream(seed, "sim-decode", k64),
                    next_generation_secs: first,
                    queue: std::collections::VecDeque::new(),
                    head_start_frame: None,
                    prev_generation_secs: 0.0,
                }
            })
            .collect();
        let n = cfg.devices;
        Ok(Sim {
            cfg,
            seed,
            frame: 0,
            devices,
            records: Vec::new(),
            frame_collisions: Vec::new(),
            queue_series: vec![Vec::new(); n],
            arrivals: vec![0; n],
            delivered: vec![0; n],
            attempts: 0,
            solo_attempts: 0,
            solo_decoded: 0,
            backlogged_device_frames: 0,
        })
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn delivered_total(&self) -> u64 {
        self.delivered.iter().sum()
    }

    /// Updates delivered so far (in delivery order).
    pub fn records(&self) -> &[UpdateRecord] {
        &self.records
    }

    pub fn queue_len(&self, device: usize) -> usize {
        self.devices[device].queue.len()
    }

    /// Advance one frame under the given control, drawing fading internally.
    pub fn step_frame(&mut self, ctl: &FrameControl) -> Result<FrameEvents> {
        self.step_frame_inner(ctl, None)
    }

    /// Advance one frame with caller-supplied per-(device, subchannel)
    /// fading gains — used by the decision environment so the gains the
    /// policy observed are exactly the gains the decode step experiences.
    pub fn step_frame_with_gains(
        &mut self,
        ctl: &FrameControl,
        gains: &[Vec<f64>],
    ) -> Result<FrameEvents> {
        if gains.len() != self.cfg.devices
            || gains.iter().any(|g| g.len() != self.cfg.subchannels.len())
        {
            return Err(Error::Policy(
                "supplied gains must be devices x subchannels".into(),
            ));
        }
        self.step_frame_inner(ctl, Some(gains))
    }

    fn step_frame_inner(
        &mut self,
        ctl: &FrameControl,
        gains: Option<&[Vec<f64>]>,
    ) -> Result<FrameEvents> {
        use rand::Rng;
        ctl.validate(&self.cfg)?;
        self.frame += 1;
        let mu = self.frame;
        let t_f = self.cfg.frame_secs;
        let horizon = mu as f64 * t_f;
        let n_sub = self.cfg.subchannels.len();

        // Arrivals: everything generated up to the end of this frame's span
        // becomes eligible now.
        for (k, dev) in self.devices.iter_mut().enumerate() {
            while dev.next_generation_secs <= horizon {
                dev.queue.push_back(Pending {
                    generation_secs: dev.next_generation_secs,
                    eligible_frame: mu,
                });
                self.arrivals[k] += 1;
                let gap = exp_draw(&mut dev.rng_gap, self.cfg.mean_interarrival_secs);
                dev.next_generation_secs += gap;
            }
        }

        // Barring, RB choice, and the frame's channel draws. Draws happen for
        // every device every frame so streams stay aligned across policies.
        let mut fading = vec![vec![0.0; n_sub]; self.cfg.devices];
        let mut choice: Vec<Option<(usize, u32)>> = vec![None; self.cfg.devices];
        let mut occupancy: Vec<Vec<u32>> =
            self.cfg.subchannels.iter().map(|s| vec![0; s.rb_count as usize]).collect();
        for k in 0..self.cfg.devices {
            let dev = &mut self.devices[k];
            let q: f64 = dev.rng_acb.gen();
            let u_rb: f64 = dev.rng_rb.gen();
            match gains {
                Some(g) => fading[k].copy_from_slice(&g[k]),
                None => {
                    for item in fading[k].iter_mut() {
                        *item = exp_draw(&mut dev.rng_fade, self.cfg.fading_mean);
                    }
                }
            }
            let backlogged = !dev.queue.is_empty();
            if backlogged {
                self.backlogged_device_frames += 1;
                if dev.head_start_frame.is_none() {
                    dev.head_start_frame = Some(mu.max(dev.queue[0].eligible_frame));
                }
            }
            let Some(l) = ctl.assignment[k] else { continue };
            if backlogged && q < ctl.p_access[l] {
                let rb = (u_rb * f64::from(self.cfg.subchannels[l].rb_count)) as u32;
                let rb = rb.min(self.cfg.subchannels[l].rb_count - 1);
                choice[k] = Some((l, rb));
                occupancy[l][rb as usize] += 1;
                self.attempts += 1;
            }
        }

        // Collision resolution and decoding.
        let mut delivered_now = Vec::new();
        let mut collided = 0u32;
        for k in 0..self.cfg.devices {
            let Some((l, rb)) = choice[k] else {
                // Decode stream advances every frame regardless of use.
                let _: f64 = self.devices[k].rng_decode.gen();
                continue;
            };
            let u_dec: f64 = self.devices[k].rng_decode.gen();
            if occupancy[l][rb as usize] != 1 {
                collided += 1;
                continue;
            }
            self.solo_attempts += 1;
            let eps = match self.cfg.force_decode_error {
                Some(f) => f,
                None => {
                    let gamma = self.cfg.snr_scale[k][l] * ctl.power_scale * fading[k][l];
                    let sub = &self.cfg.subchannels[l];
                    fbc::decode_error(gamma, sub.blocklength, sub.log2m_bits)?
                }
            };
            if u_dec < 1.0 - eps {
                self.solo_decoded += 1;
                let dev = &mut self.devices[k];
                let head = dev.queue.pop_front().expect("attempt implies backlog");
                let start = dev.head_start_frame.take().expect("head had a start frame");
                let interarrival = head.generation_secs - dev.prev_generation_secs;
                dev.prev_generation_secs = head.generation_secs;
                let service_frames = (mu - start + 1) as u32;
                let rec = UpdateRecord {
                    device: k as u32,
                    subchannel: l as u32,
                    generation_secs: head.generation_secs,
                    delivery_secs: mu as f64 * t_f,
                    service_frames,
                    interarrival_secs: interarrival,
                    peak_aoi_secs: interarrival + f64::from(service_frames) * t_f,
                    delay_frames: (mu - head.eligible_frame) as u32,
                };
                self.delivered[k] += 1;
                delivered_now.push(rec);
                // The next packet, if any, starts service next frame.
                dev.head_start_frame = if dev.queue.is_empty() { None } else { Some(mu + 1) };
            }
        }
        self.records.extend(delivered_now.iter().cloned());
        self.frame_collisions.push(collided);
        if self.cfg.record_queue_series {
            for (k, dev) in self.devices.iter().enumerate() {
                self.queue_series[k].push(dev.queue.len() as u32);
            }
        }
        Ok(FrameEvents { frame: mu, fading, delivered: delivered_now, collided_attempts: collided })
    }

    pub fn into_trace(self) -> SimTrace {
        let attempts = self.attempts;
        let solo = self.solo_attempts;
        SimTrace {
            records: self.records,
            frame_collisions: self.frame_collisions,
            queue_series: self.queue_series,
            arrivals: self.arrivals,
            delivered: self.delivered,
            final_queue: self.devices.iter().map(|d| d.queue.len() as u32).collect(),
            frames: self.frame,
            attempts,
            solo_attempts: solo,
            solo_decoded: self.solo_decoded,
            backlogged_device_frames: self.backlogged_device_frames,
            empirical_p_succ: if attempts > 0 { solo as f64 / attempts as f64 } else { 0.0 },
            seed: self.seed,
        }
    }
}

/// Run a fixed number of frames under one constant control.
pub fn run_frames(cfg: SimConfig, ctl: &FrameControl, frames: u64, seed: u64) -> Result<SimTrace> {
    let mut sim = Sim::new(cfg, seed)?;
    for _ in 0..frames {
        sim.step_frame(ctl)?;
    }
    Ok(sim.into_trace())
}

/// Run until `updates` deliveries (or `max_frames`, whichever first).
pub fn run_until_updates(
    cfg: SimConfig,
    ctl: &FrameControl,
    updates: u64,
    max_frames: u64,
    seed: u64,
) -> Result<SimTrace> {
    let mut sim = Sim::new(cfg, seed)?;
    while sim.delivered_total() < updates && sim.frame() < max_frames {
        sim.step_frame(ctl)?;
    }
    Ok(sim.into_trace())
}

/// Fraction of delivered updates whose peak AoI exceeded the threshold,
/// with its binomial standard error.
pub fn empirical_peak_aoi_violation(trace: &SimTrace, a_th: f64) -> Result<(f64, f64)> {
    fraction_with_se(trace, |r| r.peak_aoi_secs > a_th)
}

/// Fraction whose frame-counted delay exceeded the budget, with standard
/// error.
pub fn empirical_delay_violation(trace: &SimTrace, d_th: u32) -> Result<(f64, f64)> {
    fraction_with_se(trace, |r| r.delay_frames > d_th)
}

fn fraction_with_se(trace: &SimTrace, pred: impl Fn(&UpdateRecord) -> bool) -> Result<(f64, f64)> {
    let n = trace.records.len();
    if n == 0 {
        return Err(Error::Domain(
            "no delivered updates: violation frequency is undefined".into(),
        ));
    }
    let hits = trace.records.iter().filter(|r| pred(r)).count();
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok((p, se))
}

/// Device distances for a fleet placed uniformly at random in a disk cell,
/// keeping a minimum standoff from the center.
pub fn uniform_disk_distances(
    radius_m: f64,
    min_m: f64,
    devices: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    use rand::Rng;
    assert!(radius_m >= min_m && min_m > 0.0);
    (0..devices)
        .map(|_| {
            let u: f64 = rng.gen();
            (min_m * min_m + u * (radius_m * radius_m - min_m * min_m)).sqrt()
        })
        .collect()
}

const RECORD_HEADER: &str =
    "device,subchannel,generation_secs,delivery_secs,service_frames,interarrival_secs,peak_aoi_secs,delay_frames";

/// One row per delivered update; floats use shortest round-trip formatting,
/// so equal traces serialize to identical bytes.
pub fn write_records_csv(trace: &SimTrace, out: &mut impl IoWrite) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.device,
            r.subchannel,
            r.generation_secs,
            r.delivery_secs,
            r.service_frames,
            r.interarrival_secs,
            r.peak_aoi_secs,
            r.delay_frames
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    seed: u64,
    frames: u64,
    updates: usize,
    attempts: u64,
    empirical_p_succ: f64,
    peak_aoi_violation: Option<[f64; 2]>,
    delay_violation: Option<[f64; 2]>,
    peak_aoi_threshold_secs: f64,
    delay_threshold_frames: u32,
    config_echo: &'a str,
}

/// JSON summary with the empirical violation statistics for one budget.
pub fn write_summary_json(
    trace: &SimTrace,
    a_th: f64,
    d_th: u32,
    config_echo: &str,
    out: &mut impl IoWrite,
) -> Result<()> {
    let peak = empirical_peak_aoi_violation(trace, a_th).ok().map(|(p, s)| [p, s]);
    let delay = empirical_delay_violation(trace, d_th).ok().map(|(p, s)| [p, s]);
    let summary = TraceSummary {
        seed: trace.seed,
        frames: trace.frames,
        updates: trace.records.len(),
        attempts: trace.attempts,
        empirical_p_succ: trace.empirical_p_succ,
        peak_aoi_violation: peak,
        delay_violation: delay,
        peak_aoi_threshold_secs: a_th,
        delay_threshold_frames: d_th,
        config_echo,
    };
    serde_json::to_writer_pretty(&mut *out, &summary)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}
