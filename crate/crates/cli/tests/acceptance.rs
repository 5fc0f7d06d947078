//! Acceptance suite: ten criteria, each checked against a reference computed
//! here without the library's own reference helpers.

use std::f64::consts::PI;
use std::time::Instant;

use roughpath_core::calculus::green_eval;
use roughpath_core::diagnostics::{condition_sums, ensemble_seed, g_norm, wiener_row, GNormConfig, SeriesTail, Verdict};
use roughpath_core::generate::{self, Analytic, OscillatoryParams};
use roughpath_core::integrator::{adversarial_integrand, integrate, integrate_state_only, staircase_integral, ConvergenceConfig};
use roughpath_core::ode::{continuity_sweep, solve, LinearField, OdeProblem, SolverConfig};
use roughpath_core::{DyadicPath, QuadratureConfig, ScalarField};

type Curve = fn(f64) -> f64;
type Field = fn(f64, f64) -> f64;

struct Row {
    id: u8,
    name: &'static str,
    ok: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

fn run(id: u8, name: &'static str, budget: f64, f: fn() -> (bool, String)) -> Row {
    let t = Instant::now();
    let (ok, detail) = f();
    let seconds = t.elapsed().as_secs_f64();
    Row { id, name, ok: ok && seconds < budget, detail, seconds, budget }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Composite 5-point Gauss-Legendre on `n` equal pieces.
fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let m = a + (i as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(m + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

// cell averages straight from the samples: mean of trapezoids over each cell
fn brute_averages(g: &DyadicPath, k: u32) -> Vec<f64> {
    let s = g.samples();
    let width = 1usize << (g.level() - k);
    (0..1usize << k)
        .map(|n| s[n * width..=(n + 1) * width].windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / width as f64)
        .collect()
}

fn c1_pyramid() -> (bool, String) {
    const TOL: f64 = 1e-12;
    let mut parent = 0.0f64;
    let mut direct = 0.0f64;
    for i in 0..1000 {
        let g = generate::brownian(12, ensemble_seed(7, i)).unwrap();
        let p = g.pyramid();
        for k in 0..11 {
            let (up, down) = (p.level(k).unwrap(), p.level(k + 1).unwrap());
            for (n, &h) in up.iter().enumerate() {
                parent = parent.max((h - 0.5 * (down[2 * n] + down[2 * n + 1])).abs());
            }
        }
        if i % 100 == 0 {
            for k in [0, 5, 11] {
                let b = brute_averages(&g, k);
                direct = direct.max(max_abs(p.level(k).unwrap().iter().zip(&b).map(|(x, y)| x - y)));
            }
        }
    }
    (parent < TOL && direct < TOL, format!("parent {parent:.1e}, brute force {direct:.1e} (tol {TOL:.0e})"))
}

fn smooth_paths() -> Vec<DyadicPath> {
    let fs: [Curve; 6] = [
        |t| 4.0 * t * (1.0 - t),
        |t| (6.0 * t).sin(),
        |t| 1.0 - (-3.0 * t).exp(),
        |t| t * t * t - 0.5 * t,
        |t| -1.5 * t * (3.0 * t).sin(),
        |t| 0.7 * t + 0.2 * (10.0 * t).cos() - 0.2,
    ];
    let mut v: Vec<DyadicPath> = [Analytic::Linear, Analytic::Square, Analytic::Sine, Analytic::Sqrt]
        .into_iter()
        .map(|k| generate::analytic(k, 16).unwrap())
        .collect();
    v.extend(fs.iter().map(|&f| DyadicPath::from_fn(16, f).unwrap()));
    v
}

fn closed_form_worst(g: &DyadicPath) -> f64 {
    let quad = QuadratureConfig::tight();
    let rel = |v: f64, e: f64| (v - e).abs() / e.abs().max(1e-6);
    let sin_exp = |x: f64| x.exp() * ((2.0 * x).sin() - 2.0 * (2.0 * x).cos()) / 5.0;
    let mut worst = 0.0f64;
    for s in [0.5, 1.0] {
        let x = g.eval(s);
        worst = worst.max(rel(integrate_state_only(|y| y, g, 0.0, s, &quad).unwrap(), 0.5 * x * x));
        for b in [0.3, 0.7] {
            let v = integrate_state_only(|y: f64| y.abs().powf(b), g, 0.0, s, &quad).unwrap();
            worst = worst.max(rel(v, x.signum() * x.abs().powf(1.0 + b) / (1.0 + b)));
        }
        let v = integrate_state_only(|y: f64| (2.0 * y).sin() * y.exp(), g, 0.0, s, &quad).unwrap();
        worst = worst.max(rel(v, sin_exp(x) - sin_exp(0.0)));
    }
    worst
}

fn c2_closed_forms() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut cross = 0.0f64;
    for i in 0..50 {
        let g = generate::brownian(16, ensemble_seed(11, i)).unwrap();
        worst = worst.max(closed_form_worst(&g));
        let full = integrate(&ScalarField::state_only(|x| x), &g, 0.0, 1.0, &ConvergenceConfig::default()).unwrap();
        let x1 = g.end() - g.start();
        cross = cross.max((full.value - 0.5 * x1 * (g.end() + g.start())).abs());
    }
    for g in smooth_paths() {
        worst = worst.max(closed_form_worst(&g));
    }
    (worst < 1e-8 && cross < 1e-4, format!("relative {worst:.1e} (tol 1e-8), staircase vs closed form {cross:.1e} (tol 1e-4)"))
}

fn c3_young() -> (bool, String) {
    let paths: [(Curve, Curve); 2] = [(|t| t * t, |t| 2.0 * t), (f64::sin, f64::cos)];
    let fields: [Field; 2] = [|t, x| t.sin() * x, |t, x| t + x * x];
    let mut worst = 0.0f64;
    for (g, dg) in paths {
        let path = DyadicPath::from_fn(16, g).unwrap();
        for f in fields {
            let v = integrate(&ScalarField::new(f), &path, 0.0, 1.0, &ConvergenceConfig { tol: 1e-10, ..Default::default() }).unwrap();
            let exact = gauss(|t| f(t, g(t)) * dg(t), 0.0, 1.0, 256);
            worst = worst.max((v.value - exact).abs());
        }
    }
    (worst < 1e-6, format!("max error {worst:.1e} (tol 1e-6)"))
}

fn c4_adversarial() -> (bool, String) {
    const BETA: f64 = 0.4;
    let mut paths: Vec<DyadicPath> = (0..20).map(|i| generate::brownian(12, ensemble_seed(23, i)).unwrap()).collect();
    for f in [|t: f64| t, |t: f64| t * t, f64::sin, f64::sqrt, |t: f64| (5.0 * t).cos()] {
        paths.push(DyadicPath::from_fn(12, f).unwrap());
    }
    let quad = QuadratureConfig::tight();
    let mut worst = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for g in &paths {
        let p = g.pyramid();
        for k_max in [3u32, 5, 7] {
            let adv = adversarial_integrand(&p, BETA, k_max).unwrap();
            let v = staircase_integral(&adv.field(), &p, 0.0, 1.0, k_max, &quad).unwrap();
            // double sum from brute-force averages
            let mut sum = 0.0;
            for k in 1..k_max {
                let h = brute_averages(g, k + 1);
                let w = (-((k + 1) as f64) * BETA).exp2();
                sum += h.chunks(2).map(|c| w * (c[1] - c[0]).abs()).sum::<f64>();
            }
            let scale = sum.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((v - sum).abs() / scale);
            oracle_gap = oracle_gap.max((adv.predicted - sum).abs() / scale);
        }
    }
    (worst < 1e-12, format!("staircase vs double sum {worst:.1e}, library prediction vs double sum {oracle_gap:.1e} (tol 1e-12)"))
}

fn c5_wiener() -> (bool, String) {
    let rows: Vec<f64> = (0..200).map(|i| wiener_row(&[12], 18, ensemble_seed(0, i)).unwrap()[0]).collect();
    let n = rows.len() as f64;
    let mean = rows.iter().sum::<f64>() / n;
    let var = rows.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let target = (2.0 / (3.0 * PI)).sqrt();
    let target_var = (2.0 / 3.0) * (-13f64).exp2() - (2.0 / (3.0 * PI)) * (-12f64).exp2();
    let z = (mean - target).abs() / se;
    let dv = (var - target_var).abs() / target_var;
    (z < 3.0 && dv < 0.5, format!("mean {mean:.6} vs {target:.6} ({z:.2} SE), variance {var:.3e} vs {target_var:.3e} ({:.0}%)", 100.0 * dv))
}

fn c6_ito() -> (bool, String) {
    let quad = QuadratureConfig::tight();
    let mut means = Vec::new();
    for level in [12u32, 14, 16] {
        let mut total = 0.0;
        for i in 0..100 {
            let g = generate::brownian(level, ensemble_seed(0, i)).unwrap();
            let s = g.samples();
            let dt = g.step();
            let pathwise = integrate_state_only(|x| x * x, &g, 0.0, 1.0, &quad).unwrap();
            let ito: f64 = s.windows(2).map(|w| w[0] * w[0] * (w[1] - w[0])).sum();
            // ½ ∫ f'(g) dτ with f' = 2x, trapezoid on the grid
            let corr: f64 = s.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
            total += (pathwise - ito - corr).abs();
        }
        means.push(total / 100.0);
    }
    let ok = means[2] < 0.05 && means[0] > means[1] && means[1] > means[2];
    (ok, format!("mean |residual| {:.4}, {:.4}, {:.4} at K = 12, 14, 16 (tol 0.05)", means[0], means[1], means[2]))
}

fn c7_oscillatory() -> (bool, String) {
    let (alpha, beta) = (0.45, 0.45);
    let shifts = [0.0, 2.0, 4.0];
    let mut logs = Vec::new();
    let mut hol = Vec::new();
    for shift in shifts {
        let params = OscillatoryParams { alpha, beta, shift, packets: 5 };
        let k = params.required_level();
        let g = generate::oscillatory(&params, k).unwrap();
        let cfg = GNormConfig { scan_depth: k.min(14), span_levels: 2, tail: SeriesTail::Interpolant };
        logs.push(g_norm(&g.pyramid(), beta, alpha * beta / (1.0 - alpha), &cfg).unwrap().value.log2());
        hol.push(g.holder_seminorm(alpha, k.min(8)).unwrap().seminorm_lower_bound);
    }
    // least squares over A = 0, 2, 4
    let fitted = {
        let my = logs.iter().sum::<f64>() / 3.0;
        shifts.iter().zip(&logs).map(|(x, y)| (x - 2.0) * (y - my)).sum::<f64>() / 8.0
    };
    let target = 0.1 / 0.55;
    let lo = hol.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hol.iter().cloned().fold(0.0, f64::max);
    let ok = (fitted - target).abs() / target < 0.15 && (hi - lo) / lo < 0.10;
    (ok, format!("slope {fitted:.4} vs {target:.4} (15%), Hölder spread {:.1}% (10%)", 100.0 * (hi - lo) / lo))
}

fn c8_counterexample() -> (bool, String) {
    let g = generate::counterexample(0.3, 0.3, 20).unwrap();
    let r = condition_sums(&g.pyramid(), 0.3).unwrap();
    let sums = r.partial_sums();
    let tail = &sums[sums.len() - 6..];
    // partial sums are running totals of the terms
    let mut acc = 0.0;
    let consistent = r.terms().iter().zip(&sums).all(|(t, s)| {
        acc += t;
        (acc - s).abs() <= 1e-12 * acc.abs().max(1.0)
    });
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let fine = g.holder_seminorm(0.3, 8).unwrap().seminorm_lower_bound;
    let coarse = generate::counterexample(0.3, 0.3, 14).unwrap().holder_seminorm(0.3, 8).unwrap().seminorm_lower_bound;
    let ok = consistent && increasing && r.verdict == Verdict::Diverging && fine < 2.0 * coarse;
    (ok, format!("last sums {:.3} .. {:.3}, verdict {:?}, Hölder {fine:.4} vs {coarse:.4} at K=14", tail[0], tail[5], r.verdict))
}

fn exp_problem(driver: DyadicPath, beta: f64) -> OdeProblem {
    OdeProblem::new(Box::new(LinearField::scalar(1.0, 0.0).unwrap()), vec![driver], vec![1.0], beta).unwrap()
}

fn c9_ode() -> (bool, String) {
    let cfg = SolverConfig { level: Some(12), ..Default::default() };
    let sol = solve(&exp_problem(DyadicPath::from_fn(16, |t| t).unwrap(), 0.5), &cfg).unwrap();
    let lin = max_abs(sol.times.iter().zip(&sol.values[0]).map(|(t, y)| y - t.exp()));
    let x = generate::oscillatory(&OscillatoryParams { alpha: 0.45, beta: 0.45, shift: 0.0, packets: 5 }, 16).unwrap();
    let sol = solve(&exp_problem(x.clone(), 0.45), &cfg).unwrap();
    let osc = max_abs(sol.times.iter().zip(&sol.values[0]).map(|(t, y)| y - x.eval(*t).exp()));

    let paths: [(Curve, Curve); 2] = [(|t| t * t, |t| 2.0 * t), (f64::sin, f64::cos)];
    let fields: [(Field, Field); 3] = [
        (|t, x| t * x, |_, x| x),
        (|t, x| t.sin() * x, |t, x| t.cos() * x),
        (|t, x| t + x * x, |_, _| 1.0),
    ];
    let mut green = 0.0f64;
    let mut vs_oracle = 0.0f64;
    for (g, dg) in paths {
        let path = DyadicPath::from_fn(16, g).unwrap();
        for (f, ft) in fields {
            let field = ScalarField::new(f).with_dt_partial(ft);
            let d = integrate(&field, &path, 0.0, 1.0, &ConvergenceConfig { tol: 1e-10, ..Default::default() }).unwrap();
            let ge = green_eval(&field, &path, 1.0, &QuadratureConfig::tight()).unwrap();
            green = green.max((d.value - ge.total).abs());
            vs_oracle = vs_oracle.max((ge.total - gauss(|t| f(t, g(t)) * dg(t), 0.0, 1.0, 256)).abs());
        }
    }
    let ok = lin < 1e-6 && osc < 1e-4 && green < 1e-5 && vs_oracle < 1e-5;
    (ok, format!("x=t {lin:.1e} (1e-6), oscillatory {osc:.1e} (1e-4), Green gap {green:.1e}, Green vs quadrature {vs_oracle:.1e} (1e-5)"))
}

fn c10_continuity() -> (bool, String) {
    let eps = [1e-1, 1e-2, 1e-3];
    let base = exp_problem(DyadicPath::from_fn(14, |t| t).unwrap(), 0.5);
    let sweep = continuity_sweep(
        &base,
        |e| Ok(exp_problem(DyadicPath::from_fn(14, move |t| (1.0 + e) * t).unwrap(), 0.5)),
        &eps,
        &SolverConfig::default(),
    )
    .unwrap();
    let scaled: Vec<f64> = sweep.iter().map(|s| s.scaled_output).collect();
    // y = exp((1+ε)t), so the sup gap sits at t = 1
    let exact: Vec<f64> = eps.iter().map(|&e: &f64| ((1.0 + e).exp() - 1f64.exp()) / e).collect();
    let agree = scaled.iter().zip(&exact).all(|(a, b)| (a - b).abs() / b < 0.01);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    (agree && hi / lo < 2.0, format!("gap/eps {:.3}, {:.3}, {:.3}; spread {:.3} (< 2)", scaled[0], scaled[1], scaled[2], hi / lo))
}

#[test]
fn acceptance() {
    let rows = [
        run(1, "pyramid exactness", 5.0, c1_pyramid),
        run(2, "closed forms", 120.0, c2_closed_forms),
        run(3, "Young oracle", 60.0, c3_young),
        run(4, "adversarial identity", 60.0, c4_adversarial),
        run(5, "Wiener constant", 300.0, c5_wiener),
        run(6, "Itô residual", 180.0, c6_ito),
        run(7, "oscillatory scaling", 120.0, c7_oscillatory),
        run(8, "counterexample divergence", 60.0, c8_counterexample),
        run(9, "ODE exactness", 180.0, c9_ode),
        run(10, "continuity", 60.0, c10_continuity),
    ];
    for r in &rows {
        println!(
            "[{}] {:>2} {:<26} {} [{:.2} s / {:.0} s]",
            if r.ok { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail,
            r.seconds,
            r.budget
        );
    }
    let failed: Vec<u8> = rows.iter().filter(|r| !r.ok).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
