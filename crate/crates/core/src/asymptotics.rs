//! Inputs `mu_n = alpha_n mu + (1 - alpha_n) delta_0` with the mixing weight
//! chosen so that `n chi2(mu_n) = delta`, and their convergence diagnostics.

use rayon::prelude::*;

use crate::capacity::{covert_objective, mutual_information};
use crate::channel::{ChannelParams, ExpMixture};
use crate::dist::DiscreteDist;
use crate::divergence::{chi2_closed, kl_quadrature};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::quad::QuadratureConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRow {
    pub n: u64,
    pub alpha_n: f64,
    /// `n D(f_n || q0)`.
    pub n_kl: f64,
    /// `n chi2(f_n || q0) / 2`.
    pub n_chi2_half: f64,
    /// `I(mu_n) / sqrt(D(f_n || q0))`.
    pub ratio: f64,
    pub mutual_information: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDiagnostics {
    pub delta: f64,
    pub rows: Vec<SequenceRow>,
    /// Objective value of the base input, the limit of `ratio`.
    pub limit_value: f64,
}

/// `alpha_n = sqrt(delta / (n chi2(mu)))`.
pub fn mixing_weight(mu: &DiscreteDist, delta: f64, n: u64) -> Result<f64> {
    if !(delta > 0.0 && n > 0) {
        return Err(Error::InvalidArgument(format!("delta = {delta}, n = {n}")));
    }
    let chi2 = chi2_closed(mu)?;
    if chi2 <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let alpha = (delta / (n as f64 * chi2)).sqrt();
    if alpha > 1.0 {
        return Err(Error::AlphaExceedsOne(alpha));
    }
    Ok(alpha)
}

pub fn build_sequence_element(mu: &DiscreteDist, delta: f64, n: u64) -> Result<DiscreteDist> {
    mu.mix_with_zero(mixing_weight(mu, delta, n)?)
}

fn row(
    mu: &DiscreteDist,
    delta: f64,
    n: u64,
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<SequenceRow> {
    let alpha_n = mixing_weight(mu, delta, n)?;
    let mu_n = mu.mix_with_zero(alpha_n)?;
    let nf = n as f64;
    let d = kl_quadrature(&ExpMixture::new(&mu_n, 1.0), cfg)?.0;
    let info = mutual_information(&mu_n, ch, cfg)?;
    if d <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(SequenceRow {
        n,
        alpha_n,
        n_kl: nf * d,
        n_chi2_half: nf * chi2_closed(&mu_n)? / 2.0,
        ratio: info / d.sqrt(),
        mutual_information: info,
    })
}

/// One row per blocklength, in the order given.
pub fn diagnostics(
    mu: &DiscreteDist,
    delta: f64,
    n_list: &[u64],
    ch: &ChannelParams,
    cfg: &QuadratureConfig,
) -> Result<SequenceDiagnostics> {
    let limit_value = covert_objective(mu, ch)?;
    let rows = n_list
        .par_iter()
        .map(|&n| row(mu, delta, n, ch, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceDiagnostics {
        delta,
        rows,
        limit_value,
    })
}

impl SequenceDiagnostics {
    pub const CSV_HEADER: &'static str = "n,alpha_n,n_kl,n_chi2_half,ratio";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                fmt17(r.alpha_n),
                fmt17(r.n_kl),
                fmt17(r.n_chi2_half),
                fmt17(r.ratio)
            ));
        }
        out
    }
}
