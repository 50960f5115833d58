//! Maximum main-channel mutual information subject to a bound `nu` on the
//! warden's relative entropy, `A(nu)`.
//!
//! An input is written as `alpha * shape + (1 - alpha) * delta_0` where the
//! shape carries `k` atoms in `(0, x_cap]`. For each shape the mixing weight
//! is the largest one meeting the constraint; the divergence is convex in
//! `alpha` and vanishes at zero, so that weight is found by a bracketed
//! root search. Shapes are optimized by Nelder-Mead, adding atoms where the
//! KKT function of the current optimum peaks.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;

use super::fixed_k::{decode, encode, OptConfig};
use super::kkt::{kkt_terms, kkt_verify, GridSpec, KktReport};
use super::mutual_information_primary;
use super::nelder_mead::{minimize, NmOptions};
use crate::channel::{ChannelParams, ExpMixture};
use crate::dist::DiscreteDist;
use crate::divergence::kl_quadrature;
use crate::error::{Error, Result};
use crate::quad::QuadratureConfig;

/// Solutions with less off-zero mass than this count as the silent input.
pub const DEGENERATE_MASS: f64 = 1e-5;
/// Relative half-width of the finite-difference multiplier estimate.
pub const FD_STEP: f64 = 0.05;
/// Relative accuracy of the binding constraint.
const CONSTRAINT_RTOL: f64 = 1e-10;
/// Points of the coarse KKT scan used to place new atoms.
const GROWTH_GRID: usize = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// Off-zero atoms in the returned solution.
    pub atoms: usize,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// Whether every local search met its tolerance.
    pub converged: bool,
    /// Warden relative entropy at the solution.
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    pub mu_star: DiscreteDist,
    pub a_value: f64,
    pub nu: f64,
    /// Central difference of `A` over `[nu (1 - h), nu (1 + h)]`.
    pub gamma_fd: f64,
    /// `theta^2 (1 + x) / (x (1 + theta^2 x))` at the largest atom `x`.
    pub gamma_support: f64,
    /// Multiplier fitted so that the KKT function equals `A` on the support.
    pub gamma_kkt: f64,
    pub kkt: KktReport,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone)]
struct Core {
    mu_star: DiscreteDist,
    a_value: f64,
    gamma_kkt: f64,
    diagnostics: SolveDiagnostics,
}

type CacheKey = (u64, u64, [u64; 10], [u64; 6]);

fn cache() -> &'static Mutex<HashMap<CacheKey, Core>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Core>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

#[derive(Debug, Clone)]
struct Point {
    xs: Vec<f64>,
    ps: Vec<f64>,
    value: f64,
}

struct Problem<'a> {
    nu: f64,
    ch: &'a ChannelParams,
    opt: &'a OptConfig,
    cfg: &'a QuadratureConfig,
    evals: AtomicUsize,
}

impl Problem<'_> {
    fn divergence(&self, mu: &DiscreteDist) -> Result<f64> {
        Ok(kl_quadrature(&ExpMixture::new(mu, 1.0), self.cfg)?.0)
    }

    /// Largest mixing weight in `(0, 1]` whose warden divergence is at most `nu`.
    fn feasible_alpha(&self, shape: &DiscreteDist) -> Result<f64> {
        let d1 = self.divergence(shape)?;
        if d1 <= self.nu {
            return Ok(1.0);
        }
        let ln_nu = self.nu.ln();
        // h(l) = ln D(e^l) - ln nu. Convexity of D in alpha with D(0) = 0
        // gives D(a') <= (a'/a) D(a), so l - h(l) is always feasible.
        let mut hi = (0.0, d1.ln() - ln_nu);
        let l0 = -hi.1;
        let mut lo = (
            l0,
            self.divergence(&shape.mix_with_zero(l0.exp())?)?.ln() - ln_nu,
        );
        if lo.1 >= 0.0 {
            return Ok(l0.exp());
        }
        let mut side = 0i32;
        for _ in 0..80 {
            let mut l = lo.0 - lo.1 * (hi.0 - lo.0) / (hi.1 - lo.1);
            if !(l > lo.0 && l < hi.0) {
                l = 0.5 * (lo.0 + hi.0);
            }
            let d = self.divergence(&shape.mix_with_zero(l.exp())?)?;
            let h = d.ln() - ln_nu;
            if (d - self.nu).abs() <= CONSTRAINT_RTOL * self.nu {
                return Ok(l.exp());
            }
            // Illinois modification keeps both ends moving.
            if h < 0.0 {
                lo = (l, h);
                if side == -1 {
                    hi.1 *= 0.5;
                }
                side = -1;
            } else {
                hi = (l, h);
                if side == 1 {
                    lo.1 *= 0.5;
                }
                side = 1;
            }
            if hi.0 - lo.0 < 1e-15 {
                break;
            }
        }
        Ok(lo.0.exp())
    }

    /// Best information for a shape under the constraint; returns the value
    /// and the resulting input.
    fn evaluate(&self, xs: &[f64], ps: &[f64]) -> Result<(f64, DiscreteDist)> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ps.iter().copied()).collect();
        let shape = DiscreteDist::new_validated(&pairs)?;
        let alpha = self.feasible_alpha(&shape)?;
        let info = |a: f64| -> Result<(f64, DiscreteDist)> {
            let mu = shape.mix_with_zero(a)?;
            Ok((mutual_information_primary(&mu, self.ch, self.cfg)?, mu))
        };
        let at_edge = info(alpha)?;
        let inside = info(alpha * 0.999)?;
        if inside.0 <= at_edge.0 {
            return Ok(at_edge);
        }
        // Information peaks before the constraint binds.
        let (a, _) = super::golden_max(
            |a| info(a).map(|r| r.0).unwrap_or(f64::NEG_INFINITY),
            0.0,
            alpha,
            1e-9 * alpha,
        );
        info(a)
    }

    fn value(&self, xs: &[f64], ps: &[f64]) -> f64 {
        self.evaluate(xs, ps).map(|r| r.0).unwrap_or(f64::NAN)
    }

    fn refine(&self, start: &Point, step: f64) -> (Point, bool) {
        let k = start.xs.len();
        let x_cap = self.opt.x_cap;
        let nm = NmOptions {
            max_evals: self.opt.max_evals,
            f_tol: 1e-13,
            x_tol: 1e-8,
            restarts: 2,
        };
        let res = minimize(
            |p| {
                let (xs, ps) = decode(p, k, x_cap);
                -self.value(&xs, &ps)
            },
            &encode(&start.xs, &start.ps, x_cap),
            step,
            &nm,
        );
        let (xs, ps) = decode(&res.x, k, x_cap);
        let value = -res.f;
        if value >= start.value {
            (Point { xs, ps, value }, res.converged)
        } else {
            (start.clone(), res.converged)
        }
    }

    /// Multiplier making `w(x_i) = A` hold in the least-squares sense on the support.
    fn fit_gamma(&self, mu: &DiscreteDist, a_value: f64) -> Result<f64> {
        let main = ExpMixture::new(mu, self.ch.gain_sq());
        let warden = ExpMixture::new(mu, 1.0);
        let (mut num, mut den) = (0.0, 0.0);
        for x in mu.locations() {
            let (a, b) = kkt_terms(x, &main, &warden, self.ch, self.cfg)?;
            let c = b - self.nu;
            num += c * (a - a_value);
            den += c * c;
        }
        Ok(if den > 0.0 { (num / den).max(0.0) } else { 0.0 })
    }

    /// Grid location where the KKT function most exceeds `A`, away from the support.
    fn growth_site(&self, mu: &DiscreteDist, a_value: f64, gamma: f64) -> Result<f64> {
        let main = ExpMixture::new(mu, self.ch.gain_sq());
        let warden = ExpMixture::new(mu, 1.0);
        let grid = GridSpec {
            points: GROWTH_GRID,
            ..GridSpec::new(self.opt.x_cap)
        };
        let support: Vec<f64> = mu.locations().collect();
        let candidates: Vec<f64> = grid
            .points()
            .into_iter()
            .filter(|&x| x > 0.0 && support.iter().all(|&s| (x - s).abs() > 0.05 * s.max(0.05)))
            .collect();
        let gaps = candidates
            .par_iter()
            .map(|&x| {
                let (a, b) = kkt_terms(x, &main, &warden, self.ch, self.cfg)?;
                Ok(a - gamma * (b - self.nu) - a_value)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = (candidates[0], f64::NEG_INFINITY);
        for (x, g) in candidates.iter().zip(&gaps) {
            if *g > best.1 {
                best = (*x, *g);
            }
        }
        Ok(best.0)
    }
}

fn solve_core(
    nu: f64,
    ch: &ChannelParams,
    opt: &OptConfig,
    cfg: &QuadratureConfig,
) -> Result<Core> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "nu = {nu} must be positive"
        )));
    }
    let key = (
        nu.to_bits(),
        ch.theta().to_bits(),
        opt.fingerprint(),
        cfg.fingerprint(),
    );
    if let Some(hit) = cache().lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }

    let pb = Problem {
        nu,
        ch,
        opt,
        cfg,
        evals: AtomicUsize::new(0),
    };
    let x_cap = opt.x_cap;
    let n = opt.lattice_points.max(4);
    let grid: Vec<f64> = (0..n)
        .map(|j| x_cap * (j as f64 + 0.5) / n as f64)
        .collect();
    let mut starts: Vec<Point> = grid
        .par_iter()
        .map(|&x| Point {
            xs: vec![x],
            ps: vec![1.0],
            value: pb.value(&[x], &[1.0]),
        })
        .collect();
    starts.retain(|p| p.value.is_finite());
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no feasible start".into()));
    }
    starts.sort_by(|a, b| b.value.total_cmp(&a.value));
    starts.truncate(3);
    let refined: Vec<(Point, bool)> = starts.par_iter().map(|p| pb.refine(p, 0.5)).collect();
    let mut converged = refined.iter().all(|r| r.1);
    let mut best = refined
        .into_iter()
        .map(|r| r.0)
        .max_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(b.xs[0].total_cmp(&a.xs[0]))
        })
        .expect("non-empty");

    let (_, mut mu) = pb.evaluate(&best.xs, &best.ps)?;
    let mut gamma = pb.fit_gamma(&mu, best.value)?;
    while best.xs.len() < opt.max_atoms {
        let site = pb.growth_site(&mu, best.value, gamma)?;
        let mut xs = best.xs.clone();
        let mut ps: Vec<f64> = best.ps.iter().map(|p| 0.95 * p).collect();
        xs.push(site);
        ps.push(0.05);
        let start = Point {
            value: pb.value(&xs, &ps),
            xs,
            ps,
        };
        let (cand, ok) = pb.refine(&start, 0.3);
        if !(cand.value > best.value + opt.growth_tol) {
            break;
        }
        converged &= ok;
        best = cand;
        mu = pb.evaluate(&best.xs, &best.ps)?.1;
        gamma = pb.fit_gamma(&mu, best.value)?;
    }

    let divergence = pb.divergence(&mu)?;
    let core = Core {
        diagnostics: SolveDiagnostics {
            atoms: mu.locations().filter(|&x| x > 0.0).count(),
            evaluations: pb.evals.load(Ordering::Relaxed),
            converged,
            divergence,
        },
        mu_star: mu,
        a_value: best.value,
        gamma_kkt: gamma,
    };
    cache()
        .lock()
        .expect("cache lock")
        .insert(key, core.clone());
    Ok(core)
}

fn gamma_fd(nu: f64, ch: &ChannelParams, opt: &OptConfig, cfg: &QuadratureConfig) -> Result<f64> {
    let up = solve_core(nu * (1.0 + FD_STEP), ch, opt, cfg)?.a_value;
    let down = solve_core(nu * (1.0 - FD_STEP), ch, opt, cfg)?.a_value;
    Ok(((up - down) / (2.0 * FD_STEP * nu)).max(0.0))
}

fn gamma_support(mu: &DiscreteDist, ch: &ChannelParams) -> f64 {
    let x = mu.support_max();
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let g = ch.gain_sq();
    g * (1.0 + x) / (x * (1.0 + g * x))
}

/// Solves the constrained problem at level `nu` and certifies the result.
pub fn solve_constrained(
    nu: f64,
    ch: &ChannelParams,
    opt: &OptConfig,
    cfg: &QuadratureConfig,
) -> Result<ConstrainedSolution> {
    let core = solve_core(nu, ch, opt, cfg)?;
    let mut sol = ConstrainedSolution {
        gamma_fd: gamma_fd(nu, ch, opt, cfg)?,
        gamma_support: gamma_support(&core.mu_star, ch),
        gamma_kkt: core.gamma_kkt,
        mu_star: core.mu_star,
        a_value: core.a_value,
        nu,
        kkt: KktReport {
            grid_max_violation: 0.0,
            worst_x: 0.0,
            support_deviation: 0.0,
            grid: GridSpec::new(opt.x_cap),
            gamma: core.gamma_kkt,
        },
        diagnostics: core.diagnostics,
    };
    sol.kkt = kkt_verify(&sol, ch, &GridSpec::new(opt.x_cap), cfg)?;
    Ok(sol)
}

/// Multiplier estimates `(gamma_fd, gamma_support)` at level `nu`.
pub fn estimate_gamma(
    nu: f64,
    ch: &ChannelParams,
    opt: &OptConfig,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let core = solve_core(nu, ch, opt, cfg)?;
    if core.mu_star.off_zero_mass() < DEGENERATE_MASS {
        return Err(Error::DegenerateSolution);
    }
    Ok((
        gamma_fd(nu, ch, opt, cfg)?,
        gamma_support(&core.mu_star, ch),
    ))
}
