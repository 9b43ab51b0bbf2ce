//! Short-packet (finite-blocklength) link model.
//!
//! A status update of `log2m` information bits is carried by one codeword of
//! `n` channel uses inside a resource block. In this regime the decoding
//! error of a solo transmission follows the normal approximation
//!
//! ```text
//! eps(gamma) = Q( (C(gamma) - log2m/n) / sqrt(V(gamma)/n) )
//! C(gamma)   = log2(1 + gamma)          capacity, bits per channel use
//! V(gamma)   = 1 - (1 + gamma)^-2       dispersion
//! ```
//!
//! with `Q` the standard Gaussian tail. SINR uses distance path loss `d^-s`
//! and per-frame Rayleigh power fading (|h|^2 ~ Exponential, see the
//! simulator for the draws); this module is purely deterministic.

use crate::{Error, Result};

/// Static per-subchannel radio parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    /// Path-loss exponent (> 0).
    pub path_loss_exp: f64,
    /// Noise power, linear watts (> 0).
    pub noise_power_w: f64,
    /// Frame duration, seconds (> 0).
    pub frame_secs: f64,
    /// Subchannel bandwidth, Hz (> 0).
    pub bandwidth_hz: f64,
    /// Codeword blocklength, channel uses (>= 1).
    pub blocklength: u32,
    /// Information bits per update packet (> 0).
    pub log2m_bits: f64,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exp > 0.0) {
            return Err(Error::Domain("path_loss_exp must be > 0".into()));
        }
        if !(self.noise_power_w > 0.0) {
            return Err(Error::Domain("noise_power_w must be > 0".into()));
        }
        if !(self.frame_secs > 0.0) {
            return Err(Error::Domain("frame_secs must be > 0".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Domain("bandwidth_hz must be > 0".into()));
        }
        if self.blocklength < 1 {
            return Err(Error::Domain("blocklength must be >= 1".into()));
        }
        if !(self.log2m_bits > 0.0) {
            return Err(Error::Domain("log2m_bits must be > 0".into()));
        }
        Ok(())
    }
}

/// One transmitter as seen by the receiver: power, distance, current fading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    /// Transmit power, linear watts (>= 0).
    pub power_w: f64,
    /// Transmitter-receiver distance, meters (> 0).
    pub distance_m: f64,
    /// Instantaneous power fading gain |h|^2 (>= 0).
    pub fading_gain: f64,
}

impl LinkState {
    fn check(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::Domain(format!(
                "distance must be > 0, got {}",
                self.distance_m
            )));
        }
        if !(self.power_w >= 0.0) || !(self.fading_gain >= 0.0) {
            return Err(Error::Domain("power and fading gain must be >= 0".into()));
        }
        Ok(())
    }

    /// Received power `P * d^-s * |h|^2`.
    fn received_power(&self, path_loss_exp: f64) -> f64 {
        self.power_w * self.distance_m.powf(-path_loss_exp) * self.fading_gain
    }
}

/// SINR of `target` against simultaneous `interferers` plus thermal noise.
pub fn sinr(target: &LinkState, interferers: &[LinkState], model: &ChannelModel) -> Result<f64> {
    if !(model.noise_power_w > 0.0) {
        return Err(Error::Domain("noise power must be > 0".into()));
    }
    target.check()?;
    let mut denom = model.noise_power_w;
    for j in interferers {
        j.check()?;
        denom += j.received_power(model.path_loss_exp);
    }
    Ok(target.received_power(model.path_loss_exp) / denom)
}

/// Shannon capacity `log2(1 + gamma)` in bits per channel use.
pub fn capacity(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("SINR must be >= 0, got {gamma}")));
    }
    Ok(gamma.ln_1p() / std::f64::consts::LN_2)
}

/// Channel dispersion `1 - (1 + gamma)^-2`, in [0, 1).
pub fn dispersion(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("SINR must be >= 0, got {gamma}")));
    }
    let inv = 1.0 / (1.0 + gamma);
    Ok(1.0 - inv * inv)
}

/// Standard Gaussian tail P(Z > x), via the complementary error function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Decoding error probability of a solo codeword under the normal
/// approximation, clamped to [0, 1].
///
/// At `gamma = 0` the dispersion vanishes and the argument degenerates; the
/// operational convention is error 1 for any positive rate (nothing gets
/// through a zero-capacity channel) and 0 for zero rate.
pub fn decode_error(gamma: f64, n: u32, log2m: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("SINR must be >= 0, got {gamma}")));
    }
    if n < 1 {
        return Err(Error::Domain("blocklength must be >= 1".into()));
    }
    if !(log2m >= 0.0) {
        return Err(Error::Domain("log2m must be >= 0".into()));
    }
    let nf = f64::from(n);
    let rate = log2m / nf;
    let v = dispersion(gamma)?;
    if v == 0.0 {
        return Ok(if rate > 0.0 { 1.0 } else { 0.0 });
    }
    let arg = (capacity(gamma)? - rate) / (v / nf).sqrt();
    Ok(q_function(arg).clamp(0.0, 1.0))
}

/// Number of whole resource blocks per frame on one subchannel:
/// `floor(T_f * B_l / n_l)`. Partial blocks cannot carry a codeword.
pub fn rb_count(model: &ChannelModel) -> Result<u32> {
    model.validate()?;
    let symbols = model.frame_secs * model.bandwidth_hz;
    // Relative epsilon keeps exact quotients (e.g. 0.1 * 100 kHz / 400) from
    // landing a few ulps under the integer they are meant to hit.
    let ratio = symbols / f64::from(model.blocklength) * (1.0 + 1e-12);
    if ratio < 1.0 {
        return Err(Error::Config(format!(
            "frame carries {symbols} symbols, fewer than one blocklength-{} codeword",
            model.blocklength
        )));
    }
    Ok(ratio.floor() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: u32) -> ChannelModel {
        ChannelModel {
            path_loss_exp: 2.0,
            noise_power_w: 1.0,
            frame_secs: 0.1,
            bandwidth_hz: 100e3,
            blocklength: n,
            log2m_bits: 100.0,
        }
    }

    /// Gaussian tail by Simpson quadrature over [x, x+40]; independent of the
    /// erfc-based implementation under test.
    fn q_quadrature(x: f64) -> f64 {
        let (a, b) = (x, x + 40.0);
        let n = 400_000; // even
        let h = (b - a) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            let t = a + h * i as f64;
            s += pdf(t) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn sinr_reduces_to_snr_without_interference() {
        let t = LinkState { power_w: 1.0, distance_m: 1.0, fading_gain: 1.0 };
        let g = sinr(&t, &[], &model(400)).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sinr_zero_power_is_zero() {
        let t = LinkState { power_w: 0.0, distance_m: 2.0, fading_gain: 0.7 };
        assert_eq!(sinr(&t, &[], &model(400)).unwrap(), 0.0);
    }

    #[test]
    fn sinr_with_one_interferer() {
        let t = LinkState { power_w: 1.0, distance_m: 1.0, fading_gain: 1.0 };
        let i = LinkState { power_w: 1.0, distance_m: 2.0, fading_gain: 1.0 };
        let mut m = model(400);
        m.noise_power_w = 0.1;
        let g = sinr(&t, &[i], &m).unwrap();
        // Arithmetic oracle: interference 1 * 2^-2 * 1 = 0.25, noise 0.1.
        let expect = 1.0 / (0.25 + 0.1);
        assert!((g - expect).abs() < 1e-12);
        assert!((g - 2.8571).abs() < 1e-3);
    }

    #[test]
    fn sinr_rejects_bad_geometry() {
        let t = LinkState { power_w: 1.0, distance_m: 0.0, fading_gain: 1.0 };
        assert!(sinr(&t, &[], &model(400)).is_err());
        let t = LinkState { power_w: 1.0, distance_m: 1.0, fading_gain: 1.0 };
        let mut m = model(400);
        m.noise_power_w = 0.0;
        assert!(sinr(&t, &[], &m).is_err());
    }

    #[test]
    fn capacity_anchors() {
        assert_eq!(capacity(0.0).unwrap(), 0.0);
        assert!((capacity(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((capacity(3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(capacity(-0.1).is_err());
    }

    #[test]
    fn dispersion_anchors() {
        assert_eq!(dispersion(0.0).unwrap(), 0.0);
        assert!((dispersion(1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((dispersion(1e6).unwrap() - 1.0).abs() < 1e-5);
        assert!(dispersion(-1e-9).is_err());
    }

    #[test]
    fn q_function_anchors() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        let x = 1.3;
        assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-12);
        // Independent quadrature oracle.
        let x = 1.1547;
        let expect = q_quadrature(x);
        assert!((q_function(x) - expect).abs() < 1e-9, "{} vs {}", q_function(x), expect);
        assert!((q_function(x) - 0.1241).abs() < 5e-4);
    }

    #[test]
    fn q_function_symmetry_grid() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12, "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn decode_error_at_capacity_rate_is_half() {
        let e = decode_error(1.0, 400, 400.0).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decode_error_vanishes_below_capacity_at_large_n() {
        let e = decode_error(1.0, 1_000_000, 500_000.0).unwrap();
        assert!(e < 1e-12, "{e}");
    }

    #[test]
    fn decode_error_matches_gaussian_tail_oracle() {
        // C(1) = 1, rate = 0.9, V = 0.75: argument 0.1 / sqrt(0.0075).
        let e = decode_error(1.0, 100, 90.0).unwrap();
        let arg = 0.1 / (0.75f64 / 100.0).sqrt();
        assert!((e - q_quadrature(arg)).abs() < 1e-9);
        assert!((e - 0.1241).abs() < 5e-4);
    }

    #[test]
    fn decode_error_zero_sinr_conventions() {
        assert_eq!(decode_error(0.0, 100, 50.0).unwrap(), 1.0);
        assert_eq!(decode_error(0.0, 100, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn decode_error_decreasing_in_blocklength_at_fixed_rate() {
        // Fixed rate 0.5 < C(1) = 1; error must fall strictly as n grows.
        let mut prev = f64::INFINITY;
        for n in [50u32, 100, 200, 400, 800, 1600] {
            let e = decode_error(1.0, n, 0.5 * f64::from(n)).unwrap();
            assert!(e < prev, "n={n}: {e} !< {prev}");
            prev = e;
        }
    }

    #[test]
    fn decode_error_decreasing_in_sinr() {
        let mut prev = f64::INFINITY;
        let mut g = 0.2;
        while g <= 3.0 {
            let e = decode_error(g, 100, 50.0).unwrap();
            assert!(e < prev, "gamma={g}: {e} !< {prev}");
            prev = e;
            g += 0.2;
        }
    }

    #[test]
    fn rb_count_examples() {
        assert_eq!(rb_count(&model(400)).unwrap(), 25);
        assert_eq!(rb_count(&model(600)).unwrap(), 16);
        assert_eq!(rb_count(&model(10_000)).unwrap(), 1);
        assert!(rb_count(&model(10_001)).is_err());
    }
}
