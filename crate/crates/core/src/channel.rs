//! Output densities of the normalized non-coherent channels.
//!
//! Input `x >= 0` is the transmitted energy. The main channel output has
//! density `p_x(y) = exp(-y / (1 + g x)) / (1 + g x)` with `g = theta^2`; the
//! warden sees the same law with `g = 1`.

use crate::dist::DiscreteDist;
use crate::error::{Error, Result};

/// Above this exponent densities are evaluated in log space.
const LOG_SPACE_CUTOFF: f64 = 700.0;

/// Normalized main-channel gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    theta_m: f64,
}

impl ChannelParams {
    pub fn new(theta_m: f64) -> Result<Self> {
        if !(theta_m.is_finite() && theta_m > 0.0) {
            return Err(Error::InvalidGain(theta_m));
        }
        Ok(ChannelParams { theta_m })
    }

    pub fn theta(&self) -> f64 {
        self.theta_m
    }

    /// `theta^2`.
    pub fn gain_sq(&self) -> f64 {
        self.theta_m * self.theta_m
    }
}

/// Which receiver an output density refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    Main(ChannelParams),
    Warden,
}

impl Link {
    pub fn gain_sq(&self) -> f64 {
        match self {
            Link::Main(ch) => ch.gain_sq(),
            Link::Warden => 1.0,
        }
    }
}

/// Exponential density with mean `1 + g x`, evaluated at `t`.
pub fn density(x: f64, t: f64, gain_sq: f64) -> f64 {
    let s = 1.0 + gain_sq * x;
    let e = t / s;
    if e > LOG_SPACE_CUTOFF {
        (-e - s.ln()).exp()
    } else {
        (-e).exp() / s
    }
}

pub fn density_main(x: f64, y: f64, ch: &ChannelParams) -> f64 {
    density(x, y, ch.gain_sq())
}

pub fn density_warden(x: f64, z: f64) -> f64 {
    density(x, z, 1.0)
}

pub fn mixture_density(mu: &DiscreteDist, t: f64, link: Link) -> f64 {
    ExpMixture::new(mu, link.gain_sq()).density(t)
}

/// `D(p_x || p_0) = g x - ln(1 + g x)`.
pub fn kl_single(x: f64, gain_sq: f64) -> f64 {
    let u = gain_sq * x;
    if u < 1e-4 {
        // u^2/2 - u^3/3 + u^4/4 - ...
        let mut term = u * u;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term / k as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= u;
        }
        sum
    } else {
        u - u.ln_1p()
    }
}

/// Mean of the mixture output, `1 + g E[X]`.
pub fn output_mean(mu: &DiscreteDist, link: Link) -> f64 {
    1.0 + link.gain_sq() * mu.mean()
}

/// The output mixture `sum_i w_i exp(-t / s_i) / s_i` with `s_i = 1 + g x_i`.
#[derive(Debug, Clone)]
pub struct ExpMixture {
    weights: Vec<f64>,
    scales: Vec<f64>,
    ln_weights: Vec<f64>,
    ln_scales: Vec<f64>,
}

impl ExpMixture {
    pub fn new(mu: &DiscreteDist, gain_sq: f64) -> Self {
        let weights: Vec<f64> = mu.atoms().iter().map(|a| a.p).collect();
        let scales: Vec<f64> = mu.atoms().iter().map(|a| 1.0 + gain_sq * a.x).collect();
        let ln_weights = weights.iter().map(|w| w.ln()).collect();
        let ln_scales = scales.iter().map(|s| s.ln()).collect();
        ExpMixture {
            weights,
            scales,
            ln_weights,
            ln_scales,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn max_scale(&self) -> f64 {
        self.scales.iter().copied().fold(1.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.scales)
            .map(|(w, s)| w * s)
            .sum()
    }

    pub fn density(&self, t: f64) -> f64 {
        if t / self.max_scale() > LOG_SPACE_CUTOFF {
            return self.ln_density(t).exp();
        }
        self.weights
            .iter()
            .zip(&self.scales)
            .map(|(w, s)| w * (-t / s).exp() / s)
            .sum()
    }

    /// Log density via log-sum-exp.
    pub fn ln_density(&self, t: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.weights.len() {
            best = best.max(self.ln_weights[i] - t / self.scales[i] - self.ln_scales[i]);
        }
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            acc += (self.ln_weights[i] - t / self.scales[i] - self.ln_scales[i] - best).exp();
        }
        best + acc.ln()
    }

    /// `f(t) / e^{-t} - 1`, exact zero contribution from atoms at the origin.
    pub fn ratio_minus_one(&self, t: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.scales)
            .zip(&self.ln_scales)
            .map(|((w, s), ls)| {
                if *s == 1.0 {
                    0.0
                } else {
                    w * (t * (1.0 - 1.0 / s) - ls).exp_m1()
                }
            })
            .sum()
    }

    /// `ln(f(t) / e^{-t})`.
    pub fn ln_ratio(&self, t: f64) -> f64 {
        let phi = self.ratio_minus_one(t);
        if phi.is_finite() && phi < 1e300 {
            phi.ln_1p()
        } else {
            self.ln_density(t) + t
        }
    }
}
