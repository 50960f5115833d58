use std::fs;

use covertcap_core::asymptotics::{build_sequence_element, diagnostics};
use covertcap_core::capacity::{
    kkt_w, lower_bound, lower_bound_integrand, optimize_ladder, solve_constrained, upper_bound,
};
use covertcap_core::montecarlo::radiometer_detect;
use covertcap_core::{fmt17, ChannelParams, DiscreteDist, OptConfig, QuadratureConfig, SimConfig};

use crate::args::{Cli, Command, OutputArgs, SearchArgs};
use crate::output::{csv_row, plot_blocks, write_artifact, RunManifest};
use crate::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = QuadratureConfig::default();
    match &cli.command {
        Command::Bounds { theta, output } => bounds(*theta, output),
        Command::Curve {
            theta_min,
            theta_max,
            steps,
            kmax,
            search,
            output,
        } => curve(*theta_min, *theta_max, *steps, *kmax, search, output),
        Command::Conjecture {
            theta,
            tol,
            search,
            output,
        } => conjecture(*theta, *tol, search, output),
        Command::Kkt {
            nu,
            theta,
            search,
            output,
        } => kkt(*nu, *theta, search, output, &cfg),
        Command::Asymptotics {
            dist,
            delta,
            n,
            theta,
            output,
        } => asymptotics(dist, *delta, n, *theta, output, &cfg),
        Command::Simulate {
            dist,
            n,
            trials,
            seed,
            delta,
            output,
        } => simulate(dist, *n, *trials, *seed, *delta, output, &cfg),
    }
}

fn emit(
    output: &OutputArgs,
    csv: &str,
    plot: impl FnOnce() -> String,
    manifest: &RunManifest,
) -> Result<(), CliError> {
    if let Some(path) = &output.out {
        write_artifact(path, csv, manifest)?;
    }
    if let Some(path) = &output.plot_data {
        write_artifact(path, &plot(), manifest)?;
    }
    Ok(())
}

fn opt_config(search: &SearchArgs) -> Result<OptConfig, CliError> {
    if !(search.x_cap.is_finite() && search.x_cap > 0.0) {
        return Err(CliError::Usage(format!(
            "--x-cap must be positive, got {}",
            search.x_cap
        )));
    }
    Ok(OptConfig {
        seed: search.seed,
        x_cap: search.x_cap,
        ..OptConfig::default()
    })
}

fn read_dist(arg: &str) -> Result<DiscreteDist, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)?,
        None => arg.to_string(),
    };
    Ok(DiscreteDist::from_json(&text)?)
}

fn parse_n_list(arg: &str) -> Result<Vec<u64>, CliError> {
    arg.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let v: f64 = tok
                .parse()
                .map_err(|_| CliError::Usage(format!("--n entry {tok:?} is not a number")))?;
            if !(v >= 1.0 && v.fract() == 0.0 && v < 2f64.powi(53)) {
                return Err(CliError::Usage(format!(
                    "--n entry {tok:?} is not a positive integer"
                )));
            }
            Ok(v as u64)
        })
        .collect()
}

fn bounds(theta: f64, output: &OutputArgs) -> Result<(), CliError> {
    let ch = ChannelParams::new(theta)?;
    let (lower, argmax) = lower_bound(&ch);
    let upper = upper_bound(&ch);
    println!("theta  {theta}");
    println!("lower  {lower:.10} at x = {argmax:.6}");
    println!("upper  {upper:.10}");

    let csv = String::from("theta,lower,argmax,upper\n")
        + &csv_row(&[fmt17(theta), fmt17(lower), fmt17(argmax), fmt17(upper)]);
    let plot = || {
        let points = (1..1000)
            .map(|j| {
                let x = j as f64 / 1000.0;
                (x, lower_bound_integrand(x, &ch))
            })
            .collect();
        plot_blocks(&[("single-atom objective", points)])
    };
    let manifest = RunManifest::new("bounds", 0).param("theta", theta);
    emit(output, &csv, plot, &manifest)
}

fn curve(
    theta_min: f64,
    theta_max: f64,
    steps: usize,
    kmax: usize,
    search: &SearchArgs,
    output: &OutputArgs,
) -> Result<(), CliError> {
    if !(theta_min > 0.0 && theta_max > theta_min && theta_max.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 0 < --theta-min < --theta-max, got {theta_min} and {theta_max}"
        )));
    }
    if steps < 2 {
        return Err(CliError::Usage(format!(
            "--steps must be at least 2, got {steps}"
        )));
    }
    if !(1..=4).contains(&kmax) {
        return Err(CliError::Usage(format!(
            "--kmax must be in 1..=4, got {kmax}"
        )));
    }
    let opt = opt_config(search)?;

    let mut header = vec!["theta".to_string(), "lower".to_string()];
    header.extend((1..=kmax).map(|k| format!("V{k}")));
    header.push("upper".to_string());
    let mut csv = csv_row(&header);
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); kmax + 2];

    let ratio = (theta_max / theta_min).ln();
    for j in 0..steps {
        let theta = if j + 1 == steps {
            theta_max
        } else {
            theta_min * (ratio * j as f64 / (steps - 1) as f64).exp()
        };
        let ch = ChannelParams::new(theta)?;
        let (lower, _) = lower_bound(&ch);
        let ladder = optimize_ladder(kmax, &ch, &opt);
        let mut row = vec![lower];
        row.extend(ladder.iter().map(|r| r.value));
        row.push(upper_bound(&ch));
        for (s, v) in series.iter_mut().zip(&row) {
            s.push((theta, *v));
        }
        let cells: Vec<String> = std::iter::once(theta)
            .chain(row.iter().copied())
            .map(fmt17)
            .collect();
        println!("{}", cells.join("  "));
        csv.push_str(&csv_row(&cells));
    }

    let plot = || {
        let named: Vec<(&str, Vec<(f64, f64)>)> = header[1..]
            .iter()
            .map(String::as_str)
            .zip(series.iter().cloned())
            .collect();
        plot_blocks(&named)
    };
    let manifest = RunManifest::new("curve", search.seed)
        .param("theta_min", theta_min)
        .param("theta_max", theta_max)
        .param("steps", steps)
        .param("kmax", kmax)
        .param("x_cap", search.x_cap)
        .param("spacing", "geometric");
    emit(output, &csv, plot, &manifest)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn conjecture(
    theta: f64,
    tol: f64,
    search: &SearchArgs,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let ch = ChannelParams::new(theta)?;
    if !(tol >= 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be nonnegative, got {tol}"
        )));
    }
    let opt = opt_config(search)?;
    let ladder = optimize_ladder(3, &ch, &opt);
    let v: Vec<f64> = ladder.iter().map(|r| r.value).collect();
    let one_atom = (v[0] - v[1]).abs() <= tol;
    let two_atoms = (v[1] - v[2]).abs() <= tol;
    for r in &ladder {
        println!(
            "V{}  {:.12}  spread {:.3e} over {} starts  support {:?}",
            r.k,
            r.value,
            r.spread,
            r.starts,
            r.mu.locations().collect::<Vec<_>>()
        );
    }
    println!(
        "one off-zero atom plus zero   |V1 - V2| = {:.3e}  {}",
        (v[0] - v[1]).abs(),
        verdict(one_atom)
    );
    println!(
        "two off-zero atoms            |V2 - V3| = {:.3e}  {}",
        (v[1] - v[2]).abs(),
        verdict(two_atoms)
    );

    let mut csv = String::from("theta,tol,V1,V2,V3,spread1,spread2,spread3,one_atom,two_atoms\n");
    let mut cells = vec![fmt17(theta), fmt17(tol)];
    cells.extend(v.iter().map(|x| fmt17(*x)));
    cells.extend(ladder.iter().map(|r| fmt17(r.spread)));
    cells.push(verdict(one_atom).into());
    cells.push(verdict(two_atoms).into());
    csv.push_str(&csv_row(&cells));
    let plot = || {
        let points = ladder.iter().map(|r| (r.k as f64, r.value)).collect();
        plot_blocks(&[("best value by atom count", points)])
    };
    let manifest = RunManifest::new("conjecture", search.seed)
        .param("theta", theta)
        .param("tol", tol)
        .param("x_cap", search.x_cap);
    emit(output, &csv, plot, &manifest)
}

fn kkt(
    nu: f64,
    theta: f64,
    search: &SearchArgs,
    output: &OutputArgs,
    cfg: &QuadratureConfig,
) -> Result<(), CliError> {
    let ch = ChannelParams::new(theta)?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(CliError::Usage(format!("--nu must be positive, got {nu}")));
    }
    let opt = opt_config(search)?;
    let sol = solve_constrained(nu, &ch, &opt, cfg)?;
    let k = &sol.kkt;
    println!("A(nu)               {:.12e}", sol.a_value);
    println!("divergence          {:.12e}", sol.diagnostics.divergence);
    println!("input               {}", sol.mu_star.to_json());
    println!("gamma (KKT fit)     {:.6}", sol.gamma_kkt);
    println!("gamma (fin. diff.)  {:.6}", sol.gamma_fd);
    println!("gamma (support)     {:.6}", sol.gamma_support);
    println!(
        "max violation       {:.3e} at x = {:.6}",
        k.grid_max_violation, k.worst_x
    );
    println!("support deviation   {:.3e}", k.support_deviation);
    println!("converged           {}", sol.diagnostics.converged);

    let mut csv = String::from(
        "nu,theta,a_value,divergence,gamma_kkt,gamma_fd,gamma_support,grid_max_violation,worst_x,support_deviation,atoms\n",
    );
    csv.push_str(&csv_row(&[
        fmt17(nu),
        fmt17(theta),
        fmt17(sol.a_value),
        fmt17(sol.diagnostics.divergence),
        fmt17(sol.gamma_kkt),
        fmt17(sol.gamma_fd),
        fmt17(sol.gamma_support),
        fmt17(k.grid_max_violation),
        fmt17(k.worst_x),
        fmt17(k.support_deviation),
        sol.diagnostics.atoms.to_string(),
    ]));
    let mut plot_err = None;
    let plot = || {
        let points = k
            .grid
            .points()
            .into_iter()
            .filter_map(
                |x| match kkt_w(x, &sol.mu_star, nu, sol.gamma_kkt, &ch, cfg) {
                    Ok(w) => Some((x, w - sol.a_value)),
                    Err(e) => {
                        plot_err.get_or_insert(e);
                        None
                    }
                },
            )
            .collect();
        plot_blocks(&[("w(x) - A", points)])
    };
    let manifest = RunManifest::new("kkt", search.seed)
        .param("nu", nu)
        .param("theta", theta)
        .param("x_cap", search.x_cap);
    emit(output, &csv, plot, &manifest)?;
    match plot_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn asymptotics(
    dist: &str,
    delta: f64,
    n: &str,
    theta: f64,
    output: &OutputArgs,
    cfg: &QuadratureConfig,
) -> Result<(), CliError> {
    let mu = read_dist(dist)?;
    let ch = ChannelParams::new(theta)?;
    let n_list = parse_n_list(n)?;
    let d = diagnostics(&mu, delta, &n_list, &ch, cfg)?;
    println!("limit value {:.12}", d.limit_value);
    println!(
        "{:>12}  {:>12}  {:>14}  {:>14}  {:>12}",
        "n", "alpha_n", "n*D", "n*chi2/2", "ratio"
    );
    for r in &d.rows {
        println!(
            "{:>12}  {:>12.6e}  {:>14.8e}  {:>14.8e}  {:>12.8}",
            r.n, r.alpha_n, r.n_kl, r.n_chi2_half, r.ratio
        );
    }
    let plot = || {
        let points = d.rows.iter().map(|r| (r.n as f64, r.ratio)).collect();
        plot_blocks(&[("I / sqrt(D)", points)])
    };
    let manifest = RunManifest::new("asymptotics", 0)
        .param("dist", mu.to_json())
        .param("delta", delta)
        .param("n", n)
        .param("theta", theta);
    emit(output, &d.to_csv(), plot, &manifest)
}

fn simulate(
    dist: &str,
    n: usize,
    trials: usize,
    seed: u64,
    delta: f64,
    output: &OutputArgs,
    cfg: &QuadratureConfig,
) -> Result<(), CliError> {
    let base = read_dist(dist)?;
    let sim = SimConfig {
        n,
        trials,
        seed,
        delta,
    };
    sim.validate()?;
    let mu = build_sequence_element(&base, delta, n as u64)?;
    let r = radiometer_detect(&mu, &sim, cfg)?;
    println!("transmitted input   {}", mu.to_json());
    println!("n D                 {:.8e}", n as f64 * r.divergence);
    println!(
        "min P_FA + P_MD     {:.6}  (P_FA {:.4}, P_MD {:.4})",
        r.min_error_sum, r.p_false_alarm, r.p_missed_detection
    );
    println!("std err             {:.6}", r.std_err);
    println!("bound 1 - sqrt(nD)  {:.6}", r.bound);
    let plot = || {
        plot_blocks(&[
            ("min_error_sum", vec![(n as f64, r.min_error_sum)]),
            ("bound", vec![(n as f64, r.bound)]),
        ])
    };
    let manifest = RunManifest::new("simulate", seed)
        .param("dist", base.to_json())
        .param("n", n)
        .param("trials", trials)
        .param("delta", delta);
    emit(output, &r.to_csv(), plot, &manifest)
}
