//! The covert-capacity objective, its bounds and optimizers, the
//! divergence-constrained capacity problem and its KKT certificate.

mod constrained;
mod fixed_k;
mod kkt;
pub mod nelder_mead;

pub use constrained::{
    estimate_gamma, solve_constrained, ConstrainedSolution, SolveDiagnostics, DEGENERATE_MASS,
};
pub use fixed_k::{optimize_fixed_k, optimize_ladder, FixedKResult, OptConfig};
pub use kkt::{kkt_verify, kkt_w, GridSpec, KktReport};

use crate::channel::{kl_single, ChannelParams, ExpMixture, Link};
use crate::dist::DiscreteDist;
use crate::divergence::{chi2_closed, kl_quadrature};
use crate::error::{Error, Result};
use crate::quad::{integrate_semi_infinite, QuadratureConfig};

/// Allowed disagreement between the two mutual-information formulas.
pub const MI_CONSISTENCY_TOL: f64 = 1e-7;

/// `E_mu[theta^2 X - ln(1 + theta^2 X)]`.
pub fn expected_kl_single(mu: &DiscreteDist, gain_sq: f64) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| a.p * kl_single(a.x, gain_sq))
        .sum()
}

/// `I = E[D(p_X || p_0)] - D(r || p_0)`.
pub(crate) fn mutual_information_primary(
    mu: &DiscreteDist,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let g = ch.gain_sq();
    let mix = ExpMixture::new(mu, g);
    let d = kl_quadrature(&mix, cfg)?.0;
    Ok((expected_kl_single(mu, g) - d).max(0.0))
}

/// `I = -int r ln r - E[ln(1 + theta^2 X)] - 1`.
pub fn mutual_information_entropy_form(
    mu: &DiscreteDist,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let g = ch.gain_sq();
    let mix = ExpMixture::new(mu, g);
    let gm = g * mu.mean();
    let local = cfg
        .with_decay(1.0 / mix.max_scale())
        .with_envelope(1.0 + gm, 1);
    let h = integrate_semi_infinite(
        |t| {
            let lr = mix.ln_density(t);
            -lr.exp() * lr
        },
        &local,
    )?
    .value;
    let e_log: f64 = mu.atoms().iter().map(|a| a.p * (g * a.x).ln_1p()).sum();
    Ok(h - e_log - 1.0)
}

/// Mutual information of the main channel in nats, cross-checked by two
/// independent formulas.
pub fn mutual_information(
    mu: &DiscreteDist,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let first = mutual_information_primary(mu, ch, cfg)?;
    let second = mutual_information_entropy_form(mu, ch, cfg)?;
    if (first - second).abs() > MI_CONSISTENCY_TOL {
        return Err(Error::ConsistencyFailure { first, second });
    }
    Ok(first)
}

/// Objective from raw atoms: `sqrt2 E[kl] / sqrt(chi2)`.
pub(crate) fn objective_raw(xs: &[f64], ps: &[f64], gain_sq: f64) -> f64 {
    let mut num = 0.0;
    for (x, p) in xs.iter().zip(ps) {
        num += p * kl_single(*x, gain_sq);
    }
    let mut den = 0.0;
    for (xi, pi) in xs.iter().zip(ps) {
        for (xj, pj) in xs.iter().zip(ps) {
            let u = xi * xj;
            den += pi * pj * u / (1.0 - u);
        }
    }
    std::f64::consts::SQRT_2 * num / den.sqrt()
}

/// Covert-capacity objective `sqrt(2) E[theta^2 X - ln(1 + theta^2 X)] / sqrt(chi2)`.
pub fn covert_objective(mu: &DiscreteDist, ch: &ChannelParams) -> Result<f64> {
    let chi2 = chi2_closed(mu)?;
    if mu.off_zero_mass() == 0.0 || chi2 <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(std::f64::consts::SQRT_2 * expected_kl_single(mu, ch.gain_sq()) / chi2.sqrt())
}

/// `I(mu) / sqrt(D(warden output || q0))`.
pub fn throughput_ratio(
    mu: &DiscreteDist,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if mu.off_zero_mass() == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let d = kl_quadrature(&ExpMixture::new(mu, Link::Warden.gain_sq()), cfg)?.0;
    if d <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(mutual_information(mu, ch, cfg)? / d.sqrt())
}

/// Single-atom objective `sqrt(2 (1 - x^2)) / x * (theta^2 x - ln(1 + theta^2 x))`.
pub fn lower_bound_integrand(x: f64, ch: &ChannelParams) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    (2.0 * (1.0 - x * x)).sqrt() / x * kl_single(x, ch.gain_sq())
}

/// Golden-section maximization of `f` on `[a, b]` to width `tol`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Best single-atom value and its location: `(value, argmax)`.
pub fn lower_bound(ch: &ChannelParams) -> (f64, f64) {
    const GRID: usize = 1024;
    let step = 1.0 / GRID as f64;
    let (mut best_j, mut best_v) = (GRID, 0.0);
    for j in 1..=GRID {
        let v = lower_bound_integrand(j as f64 * step, ch);
        if v > best_v {
            best_v = v;
            best_j = j;
        }
    }
    let lo = (best_j as f64 - 1.0) * step;
    let hi = ((best_j as f64 + 1.0) * step).min(1.0);
    let (x, v) = golden_max(|x| lower_bound_integrand(x, ch), lo, hi, 1e-10);
    if v >= best_v {
        (v, x)
    } else {
        (best_v, best_j as f64 * step)
    }
}

/// `sqrt(2) theta^2`.
pub fn upper_bound(ch: &ChannelParams) -> f64 {
    std::f64::consts::SQRT_2 * ch.gain_sq()
}

/// Closed-form gradient `dD/dx_i` of the warden divergence with respect to
/// the location of atom `i`.
pub fn kl_gradient_position(mu: &DiscreteDist, i: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let atoms = mu.atoms();
    let atom = *atoms.get(i).ok_or(Error::AtomIndexOutOfRange {
        index: i,
        len: atoms.len(),
    })?;
    let mix = ExpMixture::new(mu, 1.0);
    let s = 1.0 + atom.x;
    let m = mu.mean();
    let local = cfg
        .with_decay(1.0 / s)
        .with_envelope((2.0 + m) * (1.0 + s), 2)
        .with_abs_tol(cfg.abs_tol.min(cfg.rel_tol * 1e-3));
    let q = integrate_semi_infinite(
        |z| (z - s) * (-z / s).exp() / s * (mix.ln_ratio(z) + 1.0),
        &local,
    )?;
    Ok(atom.p / (s * s) * q.value)
}
