//! Adaptive Gauss-Kronrod quadrature on `[0, inf)` for integrands with a
//! known exponential envelope `|f(t)| <= C (1 + t^k) exp(-r t)`.

use crate::error::{Error, Result};

/// Tolerances and truncation policy for semi-infinite integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Slowest exponential decay rate `r` of the envelope.
    pub decay_rate: f64,
    /// Envelope constant `C`.
    pub envelope_scale: f64,
    /// Envelope polynomial degree `k`, at most 3.
    pub envelope_power: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            decay_rate: 1.0,
            envelope_scale: 1.0,
            envelope_power: 1,
        }
    }
}

impl QuadratureConfig {
    pub fn with_decay(mut self, rate: f64) -> Self {
        self.decay_rate = rate;
        self
    }

    pub fn with_envelope(mut self, scale: f64, power: u32) -> Self {
        self.envelope_scale = scale;
        self.envelope_power = power.min(3);
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.max_subdivisions >= 1
            && self.decay_rate > 0.0
            && self.decay_rate.is_finite()
            && self.envelope_scale > 0.0
            && self.envelope_scale.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "quadrature config {self:?}"
            )))
        }
    }

    /// Stable fingerprint for memoization keys.
    pub fn fingerprint(&self) -> [u64; 6] {
        [
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits(),
            self.max_subdivisions as u64,
            self.decay_rate.to_bits(),
            self.envelope_scale.to_bits(),
            self.envelope_power as u64,
        ]
    }
}

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub err_estimate: f64,
    /// Truncation point of the domain.
    pub cutoff: f64,
    pub subdivisions: usize,
}

// 7-point Gauss / 15-point Kronrod nodes and weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn checked<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand(t))
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = checked(f, center - dx)?;
        let hi = checked(f, center + dx)?;
        f1[j] = lo;
        f2[j] = hi;
        res_k += WGK[j] * (lo + hi);
        res_abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (lo + hi);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { a, b, value, err })
}

/// `C * int_M^inf (1 + t^k) e^{-r t} dt`.
pub fn envelope_tail(cfg: &QuadratureConfig, m: f64) -> f64 {
    let r = cfg.decay_rate;
    let k = cfg.envelope_power as i32;
    let e = (-r * m).exp();
    // int_M^inf t^k e^{-rt} = e^{-rM} sum_j k!/j! M^j / r^{k-j+1}
    let mut poly = 0.0;
    let mut fact_ratio = 1.0;
    for j in (0..=k).rev() {
        poly += fact_ratio * m.powi(j) / r.powi(k - j + 1);
        fact_ratio *= j as f64;
    }
    cfg.envelope_scale * e * (1.0 / r + poly)
}

/// Tail budget: well inside `abs_tol / 10` so truncation never dominates.
fn tail_target(cfg: &QuadratureConfig) -> f64 {
    cfg.abs_tol * 1e-3
}

/// Smallest (to 0.1%) cutoff `M` with envelope tail below the tail budget.
pub fn truncation_point(cfg: &QuadratureConfig) -> f64 {
    let target = tail_target(cfg);
    let mut hi = 1.0 / cfg.decay_rate;
    while envelope_tail(cfg, hi) > target {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if envelope_tail(cfg, lo) <= target {
        return lo;
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if envelope_tail(cfg, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrates `f` over `[0, inf)`.
pub fn integrate_semi_infinite<F>(f: F, cfg: &QuadratureConfig) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let cutoff = truncation_point(cfg);
    let tail = envelope_tail(cfg, cutoff);

    let scale = 1.0 / cfg.decay_rate;
    let mut edges = vec![0.0];
    let mut b = scale.min(cutoff);
    edges.push(b);
    while b < cutoff {
        b = (2.0 * b).min(cutoff);
        edges.push(b);
    }
    let mut panels = Vec::with_capacity(edges.len() + 64);
    for w in edges.windows(2) {
        panels.push(gk15(&f, w[0], w[1])?);
    }

    let mut subdivisions = 0;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                err_estimate: err + tail,
                cutoff,
                subdivisions,
            });
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::MaxSubdivisionsExceeded {
                subdivisions,
                err_estimate: err + tail,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::MaxSubdivisionsExceeded {
                subdivisions,
                err_estimate: err + tail,
            });
        }
        panels.push(gk15(&f, p.a, mid)?);
        panels.push(gk15(&f, mid, p.b)?);
        subdivisions += 1;
    }
}
