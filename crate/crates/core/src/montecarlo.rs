//! Sampling experiments: a radiometer detector against the warden's
//! hypothesis test, and a Monte-Carlo relative-entropy estimate.
//!
//! Every block draws from its own ChaCha stream selected by `(seed, stream)`,
//! so results do not depend on how rayon schedules the work.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::ExpMixture;
use crate::dist::DiscreteDist;
use crate::divergence::kl_quadrature;
use crate::error::{Error, Result};
use crate::fmt17;
use crate::quad::QuadratureConfig;

/// Thresholds swept by the radiometer.
pub const THRESHOLDS: usize = 512;
const KL_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Blocklength.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Covertness budget used to build the transmitted input.
    pub delta: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 || !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "simulation config {self:?}"
            )));
        }
        Ok(())
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// Smallest `P_FA + P_MD` over the threshold sweep, both tail directions.
    pub min_error_sum: f64,
    /// `1 - sqrt(n D)`.
    pub bound: f64,
    pub std_err: f64,
    pub thresholds_scanned: usize,
    pub p_false_alarm: f64,
    pub p_missed_detection: f64,
    /// Warden relative entropy per channel use.
    pub divergence: f64,
    pub sim: SimConfig,
}

impl DetectionReport {
    pub const CSV_HEADER: &'static str = "statistic,n,trials,min_error_sum,bound,std_err,seed";

    pub fn to_csv(&self) -> String {
        format!(
            "{}\nradiometer,{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            self.sim.n,
            self.sim.trials,
            fmt17(self.min_error_sum),
            fmt17(self.bound),
            fmt17(self.std_err),
            self.sim.seed
        )
    }
}

struct Sampler {
    cumulative: Vec<f64>,
    scales: Vec<f64>,
}

impl Sampler {
    fn new(mu: &DiscreteDist) -> Self {
        let mut acc = 0.0;
        let cumulative = mu
            .atoms()
            .iter()
            .map(|a| {
                acc += a.p;
                acc
            })
            .collect();
        Sampler {
            cumulative,
            scales: mu.atoms().iter().map(|a| 1.0 + a.x).collect(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let i = if self.scales.len() == 1 {
            0
        } else {
            let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
            self.cumulative
                .partition_point(|&c| c <= u)
                .min(self.scales.len() - 1)
        };
        let e: f64 = rng.sample(Exp1);
        self.scales[i] * e
    }
}

/// `n` warden outputs for inputs drawn i.i.d. from `mu`.
pub fn sample_block(mu: &DiscreteDist, n: usize, stream: RngStream) -> Vec<f64> {
    let sampler = Sampler::new(mu);
    let mut rng = stream.rng();
    (0..n).map(|_| sampler.draw(&mut rng)).collect()
}

fn block_energy(sampler: &Sampler, n: usize, stream: RngStream) -> f64 {
    let mut rng = stream.rng();
    (0..n).map(|_| sampler.draw(&mut rng)).sum()
}

/// Radiometer `T = sum z_i` between silence and `mu`, best threshold.
pub fn radiometer_detect(
    mu: &DiscreteDist,
    sim: &SimConfig,
    cfg: &QuadratureConfig,
) -> Result<DetectionReport> {
    sim.validate()?;
    let silent = Sampler::new(&DiscreteDist::zero());
    let active = Sampler::new(mu);
    let stream = |t: usize, h: u64| RngStream {
        seed: sim.seed,
        stream: 2 * t as u64 + h,
    };
    let mut t0: Vec<f64> = (0..sim.trials)
        .into_par_iter()
        .map(|t| block_energy(&silent, sim.n, stream(t, 0)))
        .collect();
    let mut t1: Vec<f64> = (0..sim.trials)
        .into_par_iter()
        .map(|t| block_energy(&active, sim.n, stream(t, 1)))
        .collect();
    t0.sort_by(f64::total_cmp);
    t1.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = t0.iter().chain(&t1).copied().collect();
    pooled.sort_by(f64::total_cmp);

    let trials = sim.trials as f64;
    let (mut best, mut pfa_best, mut pmd_best) = (f64::INFINITY, 0.0, 0.0);
    for j in 0..THRESHOLDS {
        let idx = (((j as f64 + 0.5) / THRESHOLDS as f64) * pooled.len() as f64) as usize;
        let tau = pooled[idx.min(pooled.len() - 1)];
        let below0 = t0.partition_point(|&v| v <= tau) as f64 / trials;
        let below1 = t1.partition_point(|&v| v <= tau) as f64 / trials;
        // Declare "transmitting" above tau, or below tau.
        for (pfa, pmd) in [(1.0 - below0, below1), (below0, 1.0 - below1)] {
            if pfa + pmd < best {
                best = pfa + pmd;
                pfa_best = pfa;
                pmd_best = pmd;
            }
        }
    }
    let std_err =
        (pfa_best * (1.0 - pfa_best) / trials + pmd_best * (1.0 - pmd_best) / trials).sqrt();
    let divergence = kl_quadrature(&ExpMixture::new(mu, 1.0), cfg)?.0;
    Ok(DetectionReport {
        min_error_sum: best,
        bound: 1.0 - (sim.n as f64 * divergence).sqrt(),
        std_err,
        thresholds_scanned: THRESHOLDS,
        p_false_alarm: pfa_best,
        p_missed_detection: pmd_best,
        divergence,
        sim: *sim,
    })
}

/// Sample mean of `ln(f(Z) / q0(Z))` for `Z ~ f`, with its standard error.
pub fn kl_monte_carlo(mu: &DiscreteDist, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("samples = {samples}")));
    }
    let mix = ExpMixture::new(mu, 1.0);
    let sampler = Sampler::new(mu);
    let chunks = samples.div_ceil(KL_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = KL_CHUNK.min(samples - c * KL_CHUNK);
            let mut rng = RngStream {
                seed,
                stream: c as u64,
            }
            .rng();
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let v = mix.ln_ratio(sampler.draw(&mut rng));
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
