//! Divergences between an output mixture and the unit-exponential output of
//! the silent input, in closed form and by quadrature, plus the analytic
//! bounds that relate them.

use statrs::function::gamma::gamma;

use crate::channel::{ExpMixture, Link};
use crate::dist::DiscreteDist;
use crate::error::{Error, Result};
use crate::quad::{integrate_semi_infinite, QuadratureConfig};

/// How a divergence value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    /// Relative entropy in nats.
    pub kl: f64,
    /// Chi-square divergence; `f64::INFINITY` when the integral diverges.
    pub chi2: f64,
    pub method: Method,
    pub err_estimate: f64,
}

/// `(1 + phi) ln(1 + phi) - phi`, accurate for small `|phi|`.
fn kl_kernel(phi: f64) -> f64 {
    if phi.abs() < 1e-2 {
        let mut term = phi * phi;
        let mut sum = 0.0;
        for k in 2..14 {
            let kf = k as f64;
            sum += term / (kf * (kf - 1.0)) * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= phi;
        }
        sum
    } else {
        (1.0 + phi) * phi.ln_1p() - phi
    }
}

/// Lower bound on `D(f || Exp(1))` from the mean of `f`: among all densities
/// with a given mean the exponential one is closest to the base.
fn kl_lower_from_mean(mix: &ExpMixture) -> f64 {
    let u = mix.mean() - 1.0;
    crate::channel::kl_single(u, 1.0)
}

/// Tightens the absolute tolerance so tiny divergences keep relative accuracy.
pub(crate) fn scaled_tolerance(cfg: &QuadratureConfig, magnitude: f64) -> QuadratureConfig {
    let floor = cfg.rel_tol * magnitude;
    if floor > 0.0 && floor < cfg.abs_tol {
        cfg.with_abs_tol(floor.max(1e-300))
    } else {
        *cfg
    }
}

/// `D(f || q0)` integrand for the mixture `mix`.
pub(crate) fn kl_integrand(mix: &ExpMixture, t: f64) -> f64 {
    let phi = mix.ratio_minus_one(t);
    if phi.is_finite() && phi < 1e200 {
        (-t).exp() * kl_kernel(phi)
    } else {
        let lf = mix.ln_density(t);
        let f = lf.exp();
        f * (lf + t) - f + (-t).exp()
    }
}

/// Quadrature `D(w o mu || p0)` without building a report.
pub(crate) fn kl_quadrature(mix: &ExpMixture, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let smax = mix.max_scale();
    let gm = mix.mean() - 1.0;
    if gm == 0.0 {
        return Ok((0.0, 0.0));
    }
    let local = scaled_tolerance(cfg, kl_lower_from_mean(mix))
        .with_decay(1.0 / smax)
        .with_envelope(2.0 + gm, 1);
    let q = integrate_semi_infinite(|t| kl_integrand(mix, t), &local)?;
    Ok((q.value.max(0.0), q.err_estimate))
}

/// Relative entropy of the output mixture to the silent output, by quadrature.
pub fn kl_mixture_vs_base(
    mu: &DiscreteDist,
    link: Link,
    cfg: &QuadratureConfig,
) -> Result<DivergenceReport> {
    let g = link.gain_sq();
    let mix = ExpMixture::new(mu, g);
    let (kl, err_estimate) = kl_quadrature(&mix, cfg)?;
    let chi2 = chi2_closed_gain(mu, g).unwrap_or(f64::INFINITY);
    Ok(DivergenceReport {
        kl,
        chi2,
        method: Method::Quadrature,
        err_estimate,
    })
}

fn chi2_closed_gain(mu: &DiscreteDist, g: f64) -> Result<f64> {
    let a = g * mu.support_max();
    if a >= 1.0 {
        return Err(Error::SupportNotBelowOne(mu.support_max()));
    }
    let atoms = mu.atoms();
    let mut sum = 0.0;
    for ai in atoms {
        for aj in atoms {
            let u = g * g * ai.x * aj.x;
            sum += ai.p * aj.p * u / (1.0 - u);
        }
    }
    Ok(sum)
}

/// Chi-square divergence of the warden output mixture, closed form.
pub fn chi2_closed(mu: &DiscreteDist) -> Result<f64> {
    chi2_closed_gain(mu, 1.0)
}

/// Chi-square divergence of the warden output mixture, `int f^2 / q0 - 1`.
pub fn chi2_quadrature(mu: &DiscreteDist, cfg: &QuadratureConfig) -> Result<f64> {
    let a = mu.support_max();
    if a >= 1.0 {
        return Err(Error::SupportNotBelowOne(a));
    }
    let mix = ExpMixture::new(mu, 1.0);
    if mu.off_zero_mass() == 0.0 {
        return Ok(0.0);
    }
    let smax = mix.max_scale();
    let local = scaled_tolerance(cfg, kl_lower_from_mean(&mix))
        .with_decay(2.0 / smax - 1.0)
        .with_envelope(3.0, 0);
    let q = integrate_semi_infinite(
        |t| {
            let phi = mix.ratio_minus_one(t);
            if phi.is_finite() && phi < 1e150 {
                let h = (-0.5 * t).exp() * phi;
                h * h
            } else {
                (2.0 * mix.ln_density(t) + t).exp()
            }
        },
        &local,
    )?;
    Ok(q.value.max(0.0))
}

/// Leading term of `D(beta q_a + (1 - beta) q_0 || q_0)` as `beta -> 0`.
pub fn two_point_kl_asymptotic(a: f64, beta: f64) -> Result<f64> {
    if a == 1.0 {
        return Err(Error::AEqualsOne);
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("a = {a} must be positive")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} outside (0, 1)"
        )));
    }
    if a < 1.0 {
        return Ok(a * a * beta * beta / (2.0 * (1.0 - a * a)));
    }
    let r = 1.0 / a;
    let bracket = gamma(-r) * gamma(2.0 + r) / ((1.0 + r) * (1.0 + r))
        + a * a * gamma(1.0 - r) * gamma(1.0 + r);
    Ok(beta.powf(1.0 + r) * (1.0 + a).powf(-1.0 - r) * (1.0 + r) * bracket)
}

/// `int_0^M e^{c z} dz`.
fn int_exp(c: f64, m: f64) -> f64 {
    if (c * m).abs() < 1e-12 {
        m * (1.0 + 0.5 * c * m)
    } else {
        (c * m).exp_m1() / c
    }
}

/// `int_M^inf z e^{-z / b} dz`.
fn int_z_exp_tail(b: f64, m: f64) -> f64 {
    b * b * (-m / b).exp() * (m / b + 1.0)
}

/// Cutoff `M = (1 + a)/a * (2 + ln(1/nu)/2)` used with the divergence bounds.
pub fn default_cutoff(a: f64, nu: f64) -> f64 {
    (1.0 + a) / a * (2.0 + 0.5 * (1.0 / nu).ln())
}

/// Upper bound on the warden relative entropy in terms of chi-square.
pub fn kl_upper_bound_via_chi2(mu: &DiscreteDist, cutoff: f64, eps: f64) -> Result<f64> {
    let a = mu.support_max();
    let chi2 = chi2_closed(mu)?;
    if !(cutoff > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} and eps {eps} must be positive"
        )));
    }
    let m = mu.mean();
    let c4 = -1.0 + 4.0 * a / (1.0 + a);
    Ok(0.5 * chi2
        + m.powi(3)
        + m.powi(4) * int_exp(c4, cutoff)
        + int_z_exp_tail(1.0 + eps, cutoff)
        + m / eps * int_z_exp_tail(1.0 + a, cutoff))
}

/// Upper bound on half the warden chi-square in terms of relative entropy.
pub fn chi2_upper_bound_via_kl(
    mu: &DiscreteDist,
    cutoff: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let a = mu.support_max();
    if a >= 1.0 {
        return Err(Error::SupportNotBelowOne(a));
    }
    let mix = ExpMixture::new(mu, 1.0);
    let ratio = 1.0 + mix.ratio_minus_one(cutoff);
    if !(ratio >= std::f64::consts::E) {
        return Err(Error::PreconditionRatioBelowE(ratio));
    }
    let d = kl_quadrature(&mix, cfg)?.0;
    if 2.0 * d.sqrt() + d >= 0.5 {
        return Err(Error::PreconditionDivergenceTooLarge(d));
    }
    let m = mu.mean();
    let c3 = -1.0 + 3.0 * a / (1.0 + a);
    let c2 = -1.0 + 2.0 * a / (1.0 + a);
    Ok(d + 0.5 * m.powi(3) * int_exp(c3, cutoff)
        + 0.5 * m * m * (c2 * cutoff).exp() / -c2
        + 2.0 * m.powi(3))
}

/// Largest admissible `s` for [`phi_rel`].
pub fn phi_rel_s_max(mu: &DiscreteDist) -> f64 {
    0.2 / (1.0 + mu.support_max())
}

/// `-ln E[(p_X(Y) / r(Y))^s]` with `X ~ mu` and `Y` the channel output.
pub fn phi_rel(s: f64, mu: &DiscreteDist, link: Link, cfg: &QuadratureConfig) -> Result<f64> {
    let s_max = phi_rel_s_max(mu);
    if !(0.0..=s_max).contains(&s) {
        return Err(Error::SExceedsSafeRange { s, s_max });
    }
    if s == 0.0 || mu.len() == 1 {
        return Ok(0.0);
    }
    let mix = ExpMixture::new(mu, link.gain_sq());
    let weights = mix.weights().to_vec();
    let scales = mix.scales().to_vec();
    let local = cfg.with_decay(1.0 / mix.max_scale()).with_envelope(3.0, 1);
    let q = integrate_semi_infinite(
        |y| {
            let lr = mix.ln_density(y);
            weights
                .iter()
                .zip(&scales)
                .map(|(w, sc)| {
                    let lp = -y / sc - sc.ln();
                    w * lp.exp() * (s * (lp - lr)).exp_m1()
                })
                .sum()
        },
        &local,
    )?;
    Ok(-q.value.ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::kl_single;
    use std::f64::consts::{LN_2, PI};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn kernel_branches_agree() {
        for phi in [-0.0099f64, 0.0099] {
            let direct = (1.0 + phi) * phi.ln_1p() - phi;
            assert!((kl_kernel(phi) / direct - 1.0).abs() < 1e-11);
        }
        let (below, above) = (kl_kernel(0.01 - 1e-15), kl_kernel(0.01 + 1e-15));
        assert!((below / above - 1.0).abs() < 1e-11);
        let tiny = 1e-8f64;
        assert!((kl_kernel(tiny) / (tiny * tiny / 2.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_input_has_zero_divergence() {
        let r = kl_mixture_vs_base(&DiscreteDist::zero(), Link::Warden, &cfg()).unwrap();
        assert_eq!(r.kl, 0.0);
        assert_eq!(r.chi2, 0.0);
    }

    #[test]
    fn singleton_matches_closed_form() {
        let r =
            kl_mixture_vs_base(&DiscreteDist::point(1.0).unwrap(), Link::Warden, &cfg()).unwrap();
        assert!((r.kl - (1.0 - LN_2)).abs() < 1e-8);
        assert!((r.kl - kl_single(1.0, 1.0)).abs() < 1e-8);
        assert_eq!(r.chi2, f64::INFINITY);
    }

    #[test]
    fn small_two_point_mixture() {
        let mu = DiscreteDist::new_validated(&[(0.0, 0.99), (0.5, 0.01)]).unwrap();
        let r = kl_mixture_vs_base(&mu, Link::Warden, &cfg()).unwrap();
        let approx = 0.25 * 1e-4 / 1.5;
        assert!((r.kl / approx - 1.0).abs() < 0.05, "{}", r.kl);
    }

    #[test]
    fn chi2_values() {
        assert_eq!(chi2_closed(&DiscreteDist::zero()).unwrap(), 0.0);
        let half = DiscreteDist::point(0.5).unwrap();
        assert!((chi2_closed(&half).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((chi2_quadrature(&half, &cfg()).unwrap() - 1.0 / 3.0).abs() < 1e-8);
        let mu = DiscreteDist::new_validated(&[(0.0, 0.9), (0.5, 0.1)]).unwrap();
        assert!((chi2_closed(&mu).unwrap() - 1.0 / 300.0).abs() < 1e-15);
        assert!((chi2_quadrature(&mu, &cfg()).unwrap() - 1.0 / 300.0).abs() < 1e-8);
        let wide = DiscreteDist::point(1.2).unwrap();
        assert!(matches!(
            chi2_closed(&wide),
            Err(Error::SupportNotBelowOne(_))
        ));
        assert!(matches!(
            chi2_quadrature(&wide, &cfg()),
            Err(Error::SupportNotBelowOne(_))
        ));
    }

    #[test]
    fn gamma_values_needed() {
        let sp = PI.sqrt();
        assert!((gamma(0.5) - sp).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * sp).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * sp).abs() < 1e-14);
        assert!((gamma(2.5) - 0.75 * sp).abs() < 1e-14);
    }

    #[test]
    fn two_point_asymptotic_forms() {
        assert!(matches!(
            two_point_kl_asymptotic(1.0, 0.1),
            Err(Error::AEqualsOne)
        ));
        let v = two_point_kl_asymptotic(0.5, 1e-3).unwrap();
        assert!((v - 0.25e-6 / 1.5).abs() < 1e-20);
        // a = 2 by hand: only half-integer gammas appear
        let sp = PI.sqrt();
        let bracket = (-2.0 * sp) * (0.75 * sp) / 2.25 + 4.0 * sp * (0.5 * sp);
        let want = 1e-3f64.powf(1.5) * 3.0f64.powf(-1.5) * 1.5 * bracket;
        let got = two_point_kl_asymptotic(2.0, 1e-3).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_dominate() {
        let mu = DiscreteDist::point(0.5)
            .unwrap()
            .mix_with_zero(0.1)
            .unwrap();
        let d = kl_mixture_vs_base(&mu, Link::Warden, &cfg()).unwrap().kl;
        assert!(kl_upper_bound_via_chi2(&mu, 20.0, 0.1).unwrap() >= d);
        let z = kl_upper_bound_via_chi2(&DiscreteDist::zero(), 20.0, 0.1).unwrap();
        assert!(z >= 0.0);

        let mu = DiscreteDist::point(0.5)
            .unwrap()
            .mix_with_zero(0.05)
            .unwrap();
        let b = chi2_upper_bound_via_kl(&mu, 25.0, &cfg()).unwrap();
        assert!(b >= 0.5 * 0.0025 / 3.0);
        assert!(matches!(
            chi2_upper_bound_via_kl(&DiscreteDist::zero(), 25.0, &cfg()),
            Err(Error::PreconditionRatioBelowE(_))
        ));
    }

    #[test]
    fn phi_rel_edges() {
        let mu = DiscreteDist::new_validated(&[(0.0, 0.9), (0.5, 0.1)]).unwrap();
        assert_eq!(phi_rel(0.0, &mu, Link::Warden, &cfg()).unwrap(), 0.0);
        for s in [0.01, 0.1] {
            assert_eq!(
                phi_rel(s, &DiscreteDist::zero(), Link::Warden, &cfg()).unwrap(),
                0.0
            );
        }
        assert!(matches!(
            phi_rel(0.5, &mu, Link::Warden, &cfg()),
            Err(Error::SExceedsSafeRange { .. })
        ));
    }
}
