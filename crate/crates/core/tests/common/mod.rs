//! Brute-force reference integrals shared by the integration tests.
#![allow(dead_code)]

/// Composite Simpson rule on `[0, upper]` with `panels` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, upper: f64, panels: usize) -> f64 {
    let h = upper / panels as f64;
    let mut acc = f(0.0) + f(upper);
    for j in 1..panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(j as f64 * h);
    }
    acc * h / 3.0
}

/// Warden output density for atoms `(x, p)`, summed term by term.
pub fn mixture(atoms: &[(f64, f64)], gain_sq: f64, t: f64) -> f64 {
    atoms
        .iter()
        .map(|&(x, p)| {
            let s = 1.0 + gain_sq * x;
            p * (-t / s).exp() / s
        })
        .sum()
}

fn span(atoms: &[(f64, f64)], gain_sq: f64) -> f64 {
    let smax = atoms
        .iter()
        .map(|a| 1.0 + gain_sq * a.0)
        .fold(1.0, f64::max);
    80.0 * smax
}

/// `D(f || Exp(1))` with `phi = f e^t - 1` formed atom by atom.
pub fn kl_reference(atoms: &[(f64, f64)], gain_sq: f64) -> f64 {
    simpson(
        |t| {
            let phi: f64 = atoms
                .iter()
                .map(|&(x, p)| {
                    let s = 1.0 + gain_sq * x;
                    p * ((t * (1.0 - 1.0 / s)).exp() / s - 1.0)
                })
                .sum();
            if phi.abs() < 1e-300 {
                return 0.0;
            }
            (-t).exp() * ((1.0 + phi) * phi.ln_1p() - phi)
        },
        span(atoms, gain_sq),
        400_000,
    )
}

/// `-int f ln f` of the output mixture.
pub fn entropy_reference(atoms: &[(f64, f64)], gain_sq: f64) -> f64 {
    simpson(
        |t| {
            let f = mixture(atoms, gain_sq, t);
            if f > 0.0 {
                -f * f.ln()
            } else {
                0.0
            }
        },
        span(atoms, gain_sq),
        400_000,
    )
}

/// `int f^2 e^t dt - 1` for the warden.
pub fn chi2_reference(atoms: &[(f64, f64)]) -> f64 {
    let smax = atoms.iter().map(|a| 1.0 + a.0).fold(1.0, f64::max);
    let decay = 2.0 / smax - 1.0;
    simpson(
        |t| {
            let mut acc = 0.0;
            for &(xi, pi) in atoms {
                for &(xj, pj) in atoms {
                    let (si, sj) = (1.0 + xi, 1.0 + xj);
                    acc += pi * pj / (si * sj) * (-t * (1.0 / si + 1.0 / sj - 1.0)).exp();
                }
            }
            acc
        },
        60.0 / decay,
        400_000,
    ) - 1.0
}
