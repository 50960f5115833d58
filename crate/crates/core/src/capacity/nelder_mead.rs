//! Derivative-free downhill simplex minimization.

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Stop when the relative spread of simplex values falls below this,
    pub f_tol: f64,
    /// or when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 4000,
            f_tol: 1e-15,
            x_tol: 1e-9,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], evals: &mut usize) -> f64 {
    *evals += 1;
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` starting from `x0` with initial edge length `step`.
pub fn minimize<F>(mut f: F, x0: &[f64], step: f64, opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut best_x = x0.to_vec();
    let mut best_f = eval(&mut f, x0, &mut evals);
    if n == 0 {
        return NmResult {
            x: best_x,
            f: best_f,
            evals,
            converged: true,
        };
    }
    let mut converged = false;
    for round in 0..=opts.restarts {
        let edge = if round == 0 {
            step
        } else {
            step * 0.1f64.powi(round as i32)
        };
        let (x, fx, ok) = run(&mut f, &best_x, best_f, edge, opts, &mut evals);
        let improved = fx < best_f - opts.f_tol;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if !ok || (round > 0 && !improved) {
            break;
        }
    }
    NmResult {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}

fn run<F>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    step: f64,
    opts: &NmOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut values = vec![f0];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        values.push(eval(f, &p, evals));
        simplex.push(p);
    }
    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (lo, hi, second) = (order[0], order[n], order[n - 1]);

        let spread = (values[hi] - values[lo]).abs();
        let diameter = simplex
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[lo])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter <= opts.x_tol || spread <= opts.f_tol * (1.0 + values[lo].abs()) {
            return (simplex[lo].clone(), values[lo], true);
        }
        if *evals >= opts.max_evals {
            return (simplex[lo].clone(), values[lo], false);
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[hi])
                .map(|(c, h)| c + t * (h - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(f, &xr, evals);
        if fr < values[lo] {
            let xe = along(-2.0);
            let fe = eval(f, &xe, evals);
            if fe < fr {
                simplex[hi] = xe;
                values[hi] = fe;
            } else {
                simplex[hi] = xr;
                values[hi] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[hi] = xr;
            values[hi] = fr;
            continue;
        }
        let xc = if fr < values[hi] {
            along(-0.5)
        } else {
            along(0.5)
        };
        let fc = eval(f, &xc, evals);
        if fc < values[hi].min(fr) {
            simplex[hi] = xc;
            values[hi] = fc;
            continue;
        }
        let best = simplex[lo].clone();
        for &i in &order[1..] {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&best)
                .map(|(p, b)| b + 0.5 * (p - b))
                .collect();
            values[i] = eval(f, &shrunk, evals);
            simplex[i] = shrunk;
        }
    }
}
