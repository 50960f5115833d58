//! Finite discrete probability measures on `[0, inf)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;

/// Locations closer than this are merged into one atom.
pub const MERGE_TOL: f64 = 1e-12;
/// Allowed deviation of the probability sum at construction.
pub const SUM_TOL: f64 = 1e-9;
/// Atoms lighter than this are dropped after a transform.
pub const PRUNE_TOL: f64 = 1e-15;

/// A single mass point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// Discrete distribution with strictly increasing locations and positive
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    atoms: Vec<Atom>,
}

impl DiscreteDist {
    /// Validates, sorts and merges `(location, probability)` pairs.
    pub fn new_validated(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut sum = 0.0;
        for &(x, p) in pairs {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::NegativeLocation(x));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::NonpositiveProbability(p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::ProbabilitySumMismatch(sum));
        }
        let atoms = pairs.iter().map(|&(x, p)| Atom { x, p }).collect();
        Self::normalize(atoms)
    }

    /// Point mass at `x`.
    pub fn point(x: f64) -> Result<Self> {
        Self::new_validated(&[(x, 1.0)])
    }

    /// Point mass at zero.
    pub fn zero() -> Self {
        DiscreteDist {
            atoms: vec![Atom { x: 0.0, p: 1.0 }],
        }
    }

    /// Sort, merge near-duplicates, prune negligible atoms and renormalize.
    fn normalize(mut atoms: Vec<Atom>) -> Result<Self> {
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.x - last.x <= MERGE_TOL => last.p += a.p,
                _ => merged.push(a),
            }
        }
        let total: f64 = merged.iter().map(|a| a.p).sum();
        merged.retain(|a| a.p >= PRUNE_TOL * total);
        let total: f64 = merged.iter().map(|a| a.p).sum();
        if merged.is_empty() || total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        for a in &mut merged {
            a.p /= total;
        }
        Ok(DiscreteDist { atoms: merged })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.x)
    }

    /// Returns `alpha * self + (1 - alpha) * delta_0`.
    pub fn mix_with_zero(&self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidMixingWeight(alpha));
        }
        if alpha == 1.0 {
            return Ok(self.clone());
        }
        if alpha == 0.0 {
            return Ok(Self::zero());
        }
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                x: a.x,
                p: alpha * a.p,
            })
            .collect();
        atoms.push(Atom {
            x: 0.0,
            p: 1.0 - alpha,
        });
        Self::normalize(atoms)
    }

    /// Moves all mass above `a` onto a single atom at `a`.
    pub fn ceil_transform(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidCeiling(a));
        }
        if self.support_max() <= a {
            return Ok(self.clone());
        }
        let atoms = self
            .atoms
            .iter()
            .map(|at| Atom {
                x: at.x.min(a),
                p: at.p,
            })
            .collect();
        Self::normalize(atoms)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.p * a.x).sum()
    }

    pub fn support_max(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.x)
    }

    /// Total probability on `(a, inf)`.
    pub fn mass_above(&self, a: f64) -> f64 {
        self.atoms.iter().filter(|at| at.x > a).map(|at| at.p).sum()
    }

    /// Total probability on `(0, inf)`.
    pub fn off_zero_mass(&self) -> f64 {
        self.mass_above(0.0)
    }

    pub fn has_zero_atom(&self) -> bool {
        self.atoms.first().is_some_and(|a| a.x == 0.0)
    }

    pub fn is_point_mass_at_zero(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].x == 0.0
    }

    /// Serializes as `{"atoms":[{"x":..,"p":..}]}` with 17 significant digits.
    pub fn to_json(&self) -> String {
        let body: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("{{\"x\":{},\"p\":{}}}", fmt17(a.x), fmt17(a.p)))
            .collect();
        format!("{{\"atoms\":[{}]}}", body.join(","))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: Wire = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("distribution JSON: {e}")))?;
        let pairs: Vec<(f64, f64)> = wire.atoms.iter().map(|a| (a.x, a.p)).collect();
        Self::new_validated(&pairs)
    }
}
