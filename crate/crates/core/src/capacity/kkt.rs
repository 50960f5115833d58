//! KKT function of the divergence-constrained problem and its certificate.

use rayon::prelude::*;

use super::constrained::ConstrainedSolution;
use crate::channel::{ChannelParams, ExpMixture};
use crate::dist::DiscreteDist;
use crate::error::Result;
use crate::quad::{integrate_semi_infinite, QuadratureConfig};

/// Evaluation points: zero plus `points` log-spaced values on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl GridSpec {
    pub fn new(x_max: f64) -> Self {
        GridSpec {
            points: 400,
            x_min: 1e-4 * x_max,
            x_max,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let n = self.points.max(2);
        let ratio = (self.x_max / self.x_min).ln();
        out.extend((0..n).map(|j| self.x_min * (ratio * j as f64 / (n - 1) as f64).exp()));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `max_x w(x) - A` over the grid and the support.
    pub grid_max_violation: f64,
    /// Location of the largest violation.
    pub worst_x: f64,
    /// `max_i |w(x_i) - A|` over the support.
    pub support_deviation: f64,
    pub grid: GridSpec,
    /// Multiplier used to evaluate `w`.
    pub gamma: f64,
}

/// Main-channel term `int p_x ln(p_x / r)` and warden term
/// `int q_x ln(f / q0)` of the KKT function.
pub(crate) fn kkt_terms(
    x: f64,
    main: &ExpMixture,
    warden: &ExpMixture,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let g = ch.gain_sq();
    let s_main = 1.0 + g * x;
    let gm = main.mean() - 1.0;
    let local = cfg.with_decay(1.0 / s_main).with_envelope(1.0 + gm, 1);
    let cross = integrate_semi_infinite(
        |y| (-y / s_main).exp() / s_main * main.ln_density(y),
        &local,
    )?
    .value;
    // int p_x ln p_x = -ln(1 + g x) - 1
    let main_term = -s_main.ln() - 1.0 - cross;

    let s_w = 1.0 + x;
    let m = warden.mean() - 1.0;
    let local = cfg.with_decay(1.0 / s_w).with_envelope(1.0 + m, 1);
    let warden_term =
        integrate_semi_infinite(|z| (-z / s_w).exp() / s_w * warden.ln_ratio(z), &local)?.value;
    Ok((main_term, warden_term))
}

/// `w(x, mu1, nu) = int p_x ln(p_x / r) - gamma (int q_x ln(f / q0) - nu)`.
pub fn kkt_w(
    x: f64,
    mu1: &DiscreteDist,
    nu: f64,
    gamma: f64,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let main = ExpMixture::new(mu1, ch.gain_sq());
    let warden = ExpMixture::new(mu1, 1.0);
    let (a, b) = kkt_terms(x, &main, &warden, ch, cfg)?;
    Ok(a - gamma * (b - nu))
}

/// Evaluates `w - A` on the grid and the support of `sol.mu_star`.
pub fn kkt_verify(
    sol: &ConstrainedSolution,
    ch: &ChannelParams,
    grid: &GridSpec,
    cfg: &QuadratureConfig,
) -> Result<KktReport> {
    let main = ExpMixture::new(&sol.mu_star, ch.gain_sq());
    let warden = ExpMixture::new(&sol.mu_star, 1.0);
    let w = |x: f64| -> Result<f64> {
        let (a, b) = kkt_terms(x, &main, &warden, ch, cfg)?;
        Ok(a - sol.gamma_kkt * (b - sol.nu) - sol.a_value)
    };
    let support: Vec<f64> = sol.mu_star.locations().collect();
    let support_gaps = support
        .par_iter()
        .map(|&x| w(x))
        .collect::<Result<Vec<f64>>>()?;
    let mut points = grid.points();
    points.extend(&support);
    let gaps = points
        .par_iter()
        .map(|&x| w(x))
        .collect::<Result<Vec<f64>>>()?;
    let (mut worst_x, mut grid_max_violation) = (points[0], f64::NEG_INFINITY);
    for (x, v) in points.iter().zip(&gaps) {
        if *v > grid_max_violation {
            grid_max_violation = *v;
            worst_x = *x;
        }
    }
    let support_deviation = support_gaps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(KktReport {
        grid_max_violation,
        worst_x,
        support_deviation,
        grid: *grid,
        gamma: sol.gamma_kkt,
    })
}
