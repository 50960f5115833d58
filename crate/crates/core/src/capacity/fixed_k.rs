//! Multi-start maximization of the covert-capacity objective over inputs
//! with a fixed number of atoms inside `(0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::nelder_mead::{minimize, NmOptions};
use super::objective_raw;
use crate::channel::ChannelParams;
use crate::dist::DiscreteDist;

/// Optimizer settings shared by the fixed-k and constrained solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub seed: u64,
    /// Location grid size of the start lattice.
    pub lattice_points: usize,
    /// Probability levels of the start lattice.
    pub simplex_levels: usize,
    /// Random starts when the lattice is too large (k > 3).
    pub random_starts: usize,
    /// Best lattice points handed to local refinement.
    pub refine_top: usize,
    /// Evaluation budget per local refinement.
    pub max_evals: usize,
    /// Atoms stay in `(0, 1 - eps_supp]` for the unconstrained objective.
    pub eps_supp: f64,
    /// Support cap for the constrained problem.
    pub x_cap: f64,
    /// Most off-zero atoms tried by the constrained solver.
    pub max_atoms: usize,
    /// Minimum gain in value that justifies another atom.
    pub growth_tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            seed: 0,
            lattice_points: 32,
            simplex_levels: 10,
            random_starts: 256,
            refine_top: 8,
            max_evals: 4000,
            eps_supp: 1e-6,
            x_cap: 5.0,
            max_atoms: 4,
            growth_tol: 1e-7,
        }
    }
}

impl OptConfig {
    pub fn fingerprint(&self) -> [u64; 10] {
        [
            self.seed,
            self.lattice_points as u64,
            self.simplex_levels as u64,
            self.random_starts as u64,
            self.refine_top as u64,
            self.max_evals as u64,
            self.eps_supp.to_bits(),
            self.x_cap.to_bits(),
            self.max_atoms as u64,
            self.growth_tol.to_bits(),
        ]
    }
}

/// Best `k`-atom input found.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedKResult {
    pub k: usize,
    /// Off-zero atoms only; mixing in mass at zero leaves the value unchanged.
    pub mu: DiscreteDist,
    pub value: f64,
    pub starts: usize,
    /// Max minus min over the locally refined values.
    pub spread: f64,
    pub evaluations: usize,
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps unconstrained parameters to atoms: `k` location coordinates then
/// `k - 1` weight logits (the last logit is pinned at zero).
pub(crate) fn decode(params: &[f64], k: usize, x_max: f64) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = params[..k].iter().map(|&u| x_max * sigmoid(u)).collect();
    let mut logits: Vec<f64> = params[k..].to_vec();
    logits.push(0.0);
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    (xs, exps.iter().map(|e| e / total).collect())
}

pub(crate) fn encode(xs: &[f64], ps: &[f64], x_max: f64) -> Vec<f64> {
    let k = xs.len();
    let mut out: Vec<f64> = xs
        .iter()
        .map(|&x| logit((x / x_max).clamp(1e-12, 1.0 - 1e-12)))
        .collect();
    let last = ps[k - 1].max(1e-300).ln();
    out.extend(ps[..k - 1].iter().map(|p| p.max(1e-300).ln() - last));
    out
}

/// All compositions of `levels` into `k` positive parts.
fn compositions(levels: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![levels]];
    }
    let mut out = Vec::new();
    for first in 1..=levels.saturating_sub(k - 1) {
        for mut rest in compositions(levels - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Strictly increasing index tuples of length `k` from `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone)]
struct Candidate {
    xs: Vec<f64>,
    ps: Vec<f64>,
    value: f64,
}

/// Orders by value (descending), breaking near-ties by the smaller atom vector.
fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    if (a.value - b.value).abs() > 1e-12 {
        return b.value.total_cmp(&a.value);
    }
    let key = |c: &Candidate| {
        let mut pairs: Vec<(f64, f64)> = c.xs.iter().copied().zip(c.ps.iter().copied()).collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        pairs
    };
    let (ka, kb) = (key(a), key(b));
    for (pa, pb) in ka.iter().zip(&kb) {
        let o = pa.0.total_cmp(&pb.0).then(pa.1.total_cmp(&pb.1));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn start_points(k: usize, x_max: f64, opt: &OptConfig) -> Vec<(Vec<f64>, Vec<f64>)> {
    if k <= 3 {
        let n = opt.lattice_points.max(k);
        let grid: Vec<f64> = (0..n)
            .map(|j| x_max * (j as f64 + 0.5) / n as f64)
            .collect();
        let weights: Vec<Vec<f64>> = compositions(opt.simplex_levels.max(k), k)
            .into_iter()
            .map(|c| {
                let total: usize = c.iter().sum();
                c.iter().map(|&v| v as f64 / total as f64).collect()
            })
            .collect();
        let mut out = Vec::new();
        for idx in combinations(n, k) {
            let xs: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            for ps in &weights {
                out.push((xs.clone(), ps.clone()));
            }
        }
        out
    } else {
        let mut rng =
            ChaCha8Rng::seed_from_u64(opt.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        (0..opt.random_starts)
            .map(|_| {
                let xs: Vec<f64> = (0..k).map(|_| x_max * rng.gen_range(0.01..1.0)).collect();
                let raw: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
                let total: f64 = raw.iter().sum();
                (xs, raw.iter().map(|r| r / total).collect())
            })
            .collect()
    }
}

fn refine(
    k: usize,
    x_max: f64,
    gain_sq: f64,
    start: &Candidate,
    opt: &OptConfig,
) -> (Candidate, usize) {
    let nm = NmOptions {
        max_evals: opt.max_evals,
        ..NmOptions::default()
    };
    let x0 = encode(&start.xs, &start.ps, x_max);
    let res = minimize(
        |p| {
            let (xs, ps) = decode(p, k, x_max);
            -objective_raw(&xs, &ps, gain_sq)
        },
        &x0,
        0.5,
        &nm,
    );
    let (xs, ps) = decode(&res.x, k, x_max);
    let value = objective_raw(&xs, &ps, gain_sq);
    let cand = Candidate { xs, ps, value };
    if cand.value >= start.value {
        (cand, res.evals)
    } else {
        (start.clone(), res.evals)
    }
}

fn to_dist(c: &Candidate) -> DiscreteDist {
    let pairs: Vec<(f64, f64)> = c.xs.iter().copied().zip(c.ps.iter().copied()).collect();
    DiscreteDist::new_validated(&pairs).expect("optimizer produces valid atoms")
}

/// Best values for `k = 1..=k_max`; each level is seeded with the previous
/// optimum (one atom split in two), so values are non-decreasing in `k`.
pub fn optimize_ladder(k_max: usize, ch: &ChannelParams, opt: &OptConfig) -> Vec<FixedKResult> {
    let x_max = 1.0 - opt.eps_supp;
    let g = ch.gain_sq();
    let mut out: Vec<FixedKResult> = Vec::new();
    let mut previous: Option<Candidate> = None;
    for k in 1..=k_max {
        let raw = start_points(k, x_max, opt);
        let mut lattice: Vec<Candidate> = raw
            .into_par_iter()
            .map(|(xs, ps)| {
                let value = objective_raw(&xs, &ps, g);
                Candidate { xs, ps, value }
            })
            .collect();
        let starts = lattice.len();
        lattice.sort_by(better);
        lattice.truncate(opt.refine_top.max(1));
        if let Some(prev) = &previous {
            let heaviest = (0..prev.ps.len())
                .max_by(|&a, &b| prev.ps[a].total_cmp(&prev.ps[b]))
                .unwrap_or(0);
            let mut xs = prev.xs.clone();
            let mut ps = prev.ps.clone();
            ps[heaviest] *= 0.5;
            xs.push(xs[heaviest]);
            ps.push(ps[heaviest]);
            lattice.push(Candidate {
                value: objective_raw(&xs, &ps, g),
                xs,
                ps,
            });
        }
        let refined: Vec<(Candidate, usize)> = lattice
            .par_iter()
            .map(|c| refine(k, x_max, g, c, opt))
            .collect();
        let evaluations = starts + refined.iter().map(|r| r.1).sum::<usize>();
        let mut cands: Vec<Candidate> = refined.into_iter().map(|r| r.0).collect();
        let hi = cands
            .iter()
            .map(|c| c.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = cands.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        cands.sort_by(better);
        let best = cands.swap_remove(0);
        out.push(FixedKResult {
            k,
            mu: to_dist(&best),
            value: best.value,
            starts,
            spread: hi - lo,
            evaluations,
        });
        previous = Some(best);
    }
    out
}

/// Maximizes the objective over `k` atoms in `(0, 1 - eps_supp]`.
pub fn optimize_fixed_k(
    k: usize,
    ch: &ChannelParams,
    opt: &OptConfig,
) -> crate::Result<FixedKResult> {
    if !(1..=6).contains(&k) {
        return Err(crate::Error::InvalidArgument(format!(
            "k = {k} outside 1..=6"
        )));
    }
    Ok(optimize_ladder(k, ch, opt).pop().expect("k >= 1"))
}
