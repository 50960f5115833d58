//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use covertcap_core::asymptotics::build_sequence_element;
use covertcap_core::asymptotics::diagnostics;
use covertcap_core::capacity::{
    covert_objective, estimate_gamma, kl_gradient_position, lower_bound, mutual_information,
    mutual_information_entropy_form, optimize_ladder, solve_constrained, upper_bound,
};
use covertcap_core::channel::kl_single;
use covertcap_core::divergence::{
    chi2_closed, chi2_quadrature, kl_mixture_vs_base, phi_rel, two_point_kl_asymptotic,
};
use covertcap_core::montecarlo::radiometer_detect;
use covertcap_core::{ChannelParams, DiscreteDist, Link, OptConfig, QuadratureConfig, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ch(theta: f64) -> ChannelParams {
    ChannelParams::new(theta).unwrap()
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

fn random_dist(rng: &mut ChaCha8Rng, max_atoms: usize, x_max: f64) -> DiscreteDist {
    let k = rng.gen_range(1..=max_atoms);
    let raw: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            let x = if rng.gen_bool(0.25) {
                0.0
            } else {
                rng.gen_range(0.01..x_max)
            };
            (x, rng.gen_range(0.05..1.0))
        })
        .collect();
    let total: f64 = raw.iter().map(|r| r.1).sum();
    let pairs: Vec<(f64, f64)> = raw.iter().map(|&(x, w)| (x, w / total)).collect();
    DiscreteDist::new_validated(&pairs).unwrap()
}

fn warden_kl(mu: &DiscreteDist, cfg: &QuadratureConfig) -> Result<f64, String> {
    kl_mixture_vs_base(mu, Link::Warden, cfg)
        .map(|r| r.kl)
        .map_err(e)
}

fn c1_closed_form_kl() -> Outcome {
    let mut worst = 0.0f64;
    for x in [0.1, 0.5, 1.0, 2.0] {
        for g in [1.0f64, 2.0] {
            let mu = DiscreteDist::point(x).map_err(e)?;
            let q = kl_mixture_vs_base(&mu, Link::Main(ch(g.sqrt())), &cfg())
                .map_err(e)?
                .kl;
            worst = worst.max((q - kl_single(x, g)).abs());
        }
    }
    Ok((
        worst <= 1e-8,
        format!("max |closed - quadrature| = {worst:.2e} (tol 1e-8)"),
    ))
}

fn c2_chi2_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mu = random_dist(&mut rng, 4, 0.9);
        let a = chi2_closed(&mu).map_err(e)?;
        let b = chi2_quadrature(&mu, &cfg()).map_err(e)?;
        worst = worst.max((a - b).abs());
    }
    Ok((
        worst <= 1e-8,
        format!("50 inputs, max |closed - quadrature| = {worst:.2e} (tol 1e-8)"),
    ))
}

fn two_point_ratio(a: f64, beta: f64) -> Result<f64, String> {
    let mu = DiscreteDist::new_validated(&[(0.0, 1.0 - beta), (a, beta)]).map_err(e)?;
    Ok(warden_kl(&mu, &cfg())? / two_point_kl_asymptotic(a, beta).map_err(e)?)
}

fn c3_two_point() -> Outcome {
    let r2 = two_point_ratio(0.5, 1e-2)?;
    let r3 = two_point_ratio(0.5, 1e-3)?;
    let r_big = two_point_ratio(2.0, 1e-3)?;
    let ok = (r2 - 1.0).abs() <= 0.05
        && (r3 - 1.0).abs() <= 0.02
        && (r3 - 1.0).abs() < (r2 - 1.0).abs()
        && (r_big - 1.0).abs() <= 0.1;
    Ok((
        ok,
        format!("a=0.5: {r2:.5} (beta 1e-2, tol 0.05), {r3:.5} (beta 1e-3, tol 0.02); a=2: {r_big:.5} (tol 0.1)"),
    ))
}

fn c4_information_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mu = random_dist(&mut rng, 4, 4.0);
        let c = ch(rng.gen_range(0.3..3.0));
        let first = mutual_information(&mu, &c, &cfg()).map_err(e)?;
        let second = mutual_information_entropy_form(&mu, &c, &cfg()).map_err(e)?;
        worst = worst.max((first - second).abs());
    }
    let mut det = 0.0f64;
    for x in [0.0, 0.3, 1.0, 4.0] {
        let mu = DiscreteDist::point(x).map_err(e)?;
        det = det.max(mutual_information(&mu, &ch(1.2), &cfg()).map_err(e)?.abs());
    }
    Ok((
        worst <= 1e-7 && det <= 1e-8,
        format!(
            "max formula gap {worst:.2e} (tol 1e-7); max |I| on point masses {det:.2e} (tol 1e-8)"
        ),
    ))
}

fn c5_scale_invariance() -> Outcome {
    let cases = [
        DiscreteDist::point(0.5).map_err(e)?,
        DiscreteDist::new_validated(&[(0.2, 0.3), (0.8, 0.7)]).map_err(e)?,
        DiscreteDist::new_validated(&[(0.0, 0.5), (0.1, 0.2), (0.6, 0.3)]).map_err(e)?,
    ];
    let mut worst = 0.0f64;
    for mu in &cases {
        let base = covert_objective(mu, &ch(1.0)).map_err(e)?;
        for alpha in [1e-3, 0.1, 1.0] {
            let v = covert_objective(&mu.mix_with_zero(alpha).map_err(e)?, &ch(1.0)).map_err(e)?;
            worst = worst.max((v - base).abs());
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max change {worst:.2e} (tol 1e-12)"),
    ))
}

fn c6_bound_ordering() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for theta in [0.5, 1.0, 2.0] {
        let c = ch(theta);
        let (lower, _) = lower_bound(&c);
        let v: Vec<f64> = optimize_ladder(3, &c, &OptConfig::default())
            .iter()
            .map(|r| r.value)
            .collect();
        let chain = [lower, v[0], v[1], v[2], upper_bound(&c)];
        ok &= chain.windows(2).all(|w| w[0] <= w[1] + 1e-6);
        if theta == 1.0 {
            ok &= (lower - 0.2467).abs() <= 5e-4 && (v[0] - lower).abs() <= 1e-6;
            detail.push(format!(
                "theta=1 lower {lower:.6} V1-lower {:.1e}",
                v[0] - lower
            ));
        }
    }
    detail.push(
        "ordering lower <= V1 <= V2 <= V3 <= sqrt2 theta^2 (slack 1e-6) at theta 0.5,1,2".into(),
    );
    Ok((ok, detail.join("; ")))
}

fn c7_conjecture() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for theta in [0.5, 1.0, 2.0] {
        let ladder = optimize_ladder(3, &ch(theta), &OptConfig::default());
        let (d12, d23) = (
            (ladder[1].value - ladder[0].value).abs(),
            (ladder[2].value - ladder[1].value).abs(),
        );
        ok &= d12 <= 1e-3 && d23 <= 1e-3;
        let spread = ladder.iter().map(|r| r.spread).fold(0.0, f64::max);
        detail.push(format!(
            "theta={theta}: |V2-V1| {d12:.1e} |V3-V2| {d23:.1e} spread {spread:.1e}"
        ));
    }
    Ok((ok, format!("{} (tol 1e-3)", detail.join("; "))))
}

fn c8_kkt_certificate() -> Outcome {
    let start = Instant::now();
    let sol = solve_constrained(1e-3, &ch(1.0), &OptConfig::default(), &cfg()).map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    let tol = 1e-4 * sol.a_value.abs().max(1.0);
    let constraint = (sol.diagnostics.divergence - 1e-3).abs();
    let ok = constraint <= 1e-9
        && sol.mu_star.has_zero_atom()
        && sol.kkt.grid_max_violation <= tol
        && sol.kkt.support_deviation <= tol
        && sol.mu_star.mean() <= 2.0 * 1e-3f64.sqrt() + 1e-3
        && elapsed <= 300.0;
    Ok((
        ok,
        format!(
            "A {:.6e}, |D - nu| {constraint:.1e}, violation {:.1e}, support dev {:.1e} (tol {tol:.0e}), {elapsed:.1}s",
            sol.a_value, sol.kkt.grid_max_violation, sol.kkt.support_deviation
        ),
    ))
}

fn moved(mu: &DiscreteDist, i: usize, dx: f64) -> Result<DiscreteDist, String> {
    let pairs: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .enumerate()
        .map(|(j, a)| (if j == i { a.x + dx } else { a.x }, a.p))
        .collect();
    DiscreteDist::new_validated(&pairs).map_err(e)
}

fn c9_gradient() -> Outcome {
    let tight = cfg().with_abs_tol(1e-14).with_rel_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut positive = true;
    let mut cases = 0;
    while cases < 20 {
        let mu = random_dist(&mut rng, 4, 3.0);
        let off: Vec<usize> = (0..mu.len()).filter(|&i| mu.atoms()[i].x > 0.0).collect();
        if off.is_empty() {
            continue;
        }
        cases += 1;
        let i = off[rng.gen_range(0..off.len())];
        let h = 1e-3 * mu.atoms()[i].x.max(0.1);
        let fd = (warden_kl(&moved(&mu, i, h)?, &tight)? - warden_kl(&moved(&mu, i, -h)?, &tight)?)
            / (2.0 * h);
        let g = kl_gradient_position(&mu, i, &tight).map_err(e)?;
        worst = worst.max((g / fd - 1.0).abs());
        positive &= kl_gradient_position(&mu, off[0], &cfg()).map_err(e)? > 0.0;
    }
    Ok((
        worst <= 1e-5 && positive,
        format!("20 cases, max relative error {worst:.2e} (tol 1e-5); smallest-atom gradient positive: {positive}"),
    ))
}

fn c10_ceiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    let mut worst_slack = f64::INFINITY;
    for _ in 0..30 {
        let mu = random_dist(&mut rng, 4, 4.0);
        let a = rng.gen_range(0.05..4.0);
        let c = ch(rng.gen_range(0.5..2.0));
        let capped = mu.ceil_transform(a).map_err(e)?;
        ok &= warden_kl(&capped, &cfg())? <= warden_kl(&mu, &cfg())?;
        let loss = mutual_information(&mu, &c, &cfg()).map_err(e)?
            - mutual_information(&capped, &c, &cfg()).map_err(e)?;
        let allowance = c.gain_sq() * mu.support_max() * mu.mass_above(a) + 1e-9;
        ok &= loss <= allowance;
        worst_slack = worst_slack.min(allowance - loss);
    }
    Ok((
        ok,
        format!("30 cases, D never increases; min slack in information bound {worst_slack:.2e}"),
    ))
}

fn c11_value_function() -> Outcome {
    let c = ch(1.0);
    let opt = OptConfig::default();
    let nus = [1e-4, 4e-4, 1.6e-3, 6.4e-3];
    let a = |nu: f64| {
        solve_constrained(nu, &c, &opt, &cfg())
            .map(|s| s.a_value)
            .map_err(e)
    };
    let values = nus
        .iter()
        .map(|&nu| a(nu))
        .collect::<Result<Vec<f64>, String>>()?;
    let mut ok = values.windows(2).all(|w| w[1] >= w[0]);
    let mut concavity_gap = f64::NEG_INFINITY;
    for i in 0..nus.len() - 1 {
        let mid = a(0.5 * (nus[i] + nus[i + 1]))?;
        concavity_gap = concavity_gap.max(0.5 * (values[i] + values[i + 1]) - mid);
    }
    ok &= concavity_gap <= 1e-6;
    let gammas = nus
        .iter()
        .map(|&nu| estimate_gamma(nu, &c, &opt, &cfg()).map(|g| g.0).map_err(e))
        .collect::<Result<Vec<f64>, String>>()?;
    let secant = |i: usize, j: usize| (values[j] - values[i]) / (nus[j] - nus[i]);
    for (i, g) in gammas.iter().enumerate().take(nus.len() - 1).skip(1) {
        ok &= secant(i, i + 1) <= *g && *g <= secant(i - 1, i);
    }
    ok &= gammas.windows(2).all(|w| w[0] > w[1]);
    Ok((
        ok,
        format!(
            "A {}; max midpoint gap {concavity_gap:.1e} (tol 1e-6); gamma_fd {gammas:.3?}",
            values
                .iter()
                .map(|v| format!("{v:.4e}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    ))
}

fn c12_phi_taylor() -> Outcome {
    let c = ch(1.0);
    let cases = [
        DiscreteDist::new_validated(&[(0.0, 0.5), (1.0, 0.5)]).map_err(e)?,
        DiscreteDist::new_validated(&[(0.0, 0.8), (0.4, 0.1), (2.0, 0.1)]).map_err(e)?,
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    for mu in &cases {
        ok &= phi_rel(0.0, mu, Link::Main(c), &cfg()).map_err(e)?.abs() <= 1e-10;
        let info = mutual_information(mu, &c, &cfg()).map_err(e)?;
        for h in [1e-3, 1e-4] {
            let gap = (phi_rel(h, mu, Link::Main(c), &cfg()).map_err(e)? / h + info).abs();
            ok &= gap <= 10.0 * h;
            worst = worst.max(gap / h);
        }
    }
    Ok((
        ok,
        format!("phi_rel(0) = 0; max |slope + I| / h = {worst:.3} (tol 10)"),
    ))
}

fn c13_asymptotics() -> Outcome {
    let half = DiscreteDist::point(0.5).map_err(e)?;
    let n_list = [1_000u64, 10_000, 100_000, 1_000_000];
    let d = diagnostics(&half, 0.01, &n_list, &ch(1.0), &cfg()).map_err(e)?;
    let chi_gap = d
        .rows
        .iter()
        .map(|r| (r.n_chi2_half - 0.005).abs())
        .fold(0.0, f64::max);
    let last = d.rows.last().ok_or("no rows")?;
    let kl_ratio = last.n_kl / 0.005;
    let ok = chi_gap <= 1e-15
        && (0.99..=1.01).contains(&kl_ratio)
        && (last.ratio - 0.23157).abs() <= 1e-2;
    Ok((
        ok,
        format!(
            "max |n chi2/2 - 0.005| {chi_gap:.1e}; n=1e6: nD/(delta/2) {kl_ratio:.5}, throughput ratio {:.5}",
            last.ratio
        ),
    ))
}

fn c14_monte_carlo() -> Outcome {
    let start = Instant::now();
    let sim = SimConfig {
        n: 1000,
        trials: 10_000,
        seed: 7,
        delta: 0.01,
    };
    let mu = build_sequence_element(
        &DiscreteDist::point(0.5).map_err(e)?,
        sim.delta,
        sim.n as u64,
    )
    .map_err(e)?;
    let r = radiometer_detect(&mu, &sim, &cfg()).map_err(e)?;
    let control = radiometer_detect(&DiscreteDist::zero(), &sim, &cfg()).map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = r.min_error_sum >= r.bound - 3.0 * r.std_err
        && (control.min_error_sum - 1.0).abs() <= 3.0 * control.std_err
        && elapsed <= 120.0;
    Ok((
        ok,
        format!(
            "seed 7: min error {:.4} vs bound {:.4} - 3*{:.4}; control {:.4} +- 3*{:.4}; {elapsed:.1}s",
            r.min_error_sum, r.bound, r.std_err, control.min_error_sum, control.std_err
        ),
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_covertcap"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(e)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {status}"))
    }
}

fn c15_determinism() -> Outcome {
    let half = r#"{"atoms":[{"x":0.5,"p":1.0}]}"#;
    let commands: Vec<Vec<&str>> = vec![
        vec!["bounds", "--theta", "1"],
        vec![
            "curve",
            "--theta-min",
            "0.5",
            "--theta-max",
            "2",
            "--steps",
            "3",
            "--kmax",
            "2",
        ],
        vec!["conjecture", "--theta", "1", "--tol", "1e-3"],
        vec!["kkt", "--nu", "1e-3", "--theta", "1"],
        vec![
            "asymptotics",
            "--dist",
            half,
            "--delta",
            "0.01",
            "--n",
            "1e3,1e6",
        ],
        vec![
            "simulate", "--dist", half, "--n", "1000", "--trials", "2000", "--seed", "7",
            "--delta", "0.01",
        ],
    ];
    let runs = [
        tempfile::tempdir().map_err(e)?,
        tempfile::tempdir().map_err(e)?,
    ];
    let mut files = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let (out, plot) = (format!("o{i}.csv"), format!("p{i}.dat"));
        let mut args = cmd.clone();
        args.extend(["--out", &out, "--plot-data", &plot]);
        for dir in &runs {
            run_cli(dir.path(), &args)?;
        }
        for name in [
            out.clone(),
            format!("{out}.manifest.json"),
            plot.clone(),
            format!("{plot}.manifest.json"),
        ] {
            let a = std::fs::read(runs[0].path().join(&name)).map_err(e)?;
            let b = std::fs::read(runs[1].path().join(&name)).map_err(e)?;
            if a != b {
                return Ok((false, format!("{name} differs between runs of {cmd:?}")));
            }
            files += 1;
        }
    }
    Ok((
        true,
        format!("6 commands, {files} output files byte-identical across reruns"),
    ))
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("closed-form vs quadrature KL", c1_closed_form_kl),
        ("chi2 oracle agreement", c2_chi2_oracle),
        ("two-point asymptotics", c3_two_point),
        ("mutual-information consistency", c4_information_consistency),
        ("objective scale invariance", c5_scale_invariance),
        ("bound ordering", c6_bound_ordering),
        ("few-atom optimality", c7_conjecture),
        ("KKT certificate", c8_kkt_certificate),
        ("gradient check", c9_gradient),
        ("ceiling transform", c10_ceiling),
        ("A(nu) shape", c11_value_function),
        ("phi_rel Taylor", c12_phi_taylor),
        ("asymptotics", c13_asymptotics),
        ("Monte-Carlo covertness", c14_monte_carlo),
        ("determinism", c15_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(r)) => r,
            Ok(Err(msg)) => (false, format!("error: {msg}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
