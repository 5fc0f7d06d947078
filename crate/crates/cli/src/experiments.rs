//! The ten acceptance experiments behind `roughpath reproduce`.

use std::time::Instant;

use rayon::ThreadPool;
use serde::Serialize;
use serde_json::{json, Value};

use roughpath_core::calculus::green_eval;
use roughpath_core::diagnostics::{condition_sums, ensemble_seed, g_norm, GNormConfig, SeriesTail, Verdict};
use roughpath_core::generate::{self, Analytic, OscillatoryParams};
use roughpath_core::integrator::{
    adversarial_integrand, integrate, integrate_state_only, staircase_integral, ConvergenceConfig,
};
use roughpath_core::ode::{continuity_sweep, solve, LinearField, OdeProblem, SolverConfig};
use roughpath_core::{DyadicPath, QuadratureConfig, ScalarField};

use crate::app::{ito_ensemble, wiener_ensemble};
use crate::error::CliResult;
use crate::oracle;
use crate::parallel;

struct Check {
    passed: bool,
    summary: String,
    metrics: Value,
}

type Field = fn(f64, f64) -> f64;
type Runner = fn(&ThreadPool) -> CliResult<Check>;

#[derive(Debug)]
pub struct Experiment {
    pub id: u8,
    pub name: &'static str,
    pub budget_secs: f64,
    runner: Runner,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub within_budget: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub summary: String,
    pub metrics: Value,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<26} {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.summary,
            self.seconds,
            self.budget_seconds
        )
    }
}

impl Experiment {
    pub fn run(&self, pool: &ThreadPool) -> CliResult<Outcome> {
        let t = Instant::now();
        let c = (self.runner)(pool)?;
        let seconds = t.elapsed().as_secs_f64();
        let within_budget = seconds < self.budget_secs;
        Ok(Outcome {
            id: self.id,
            name: self.name,
            passed: c.passed && within_budget,
            within_budget,
            seconds,
            budget_seconds: self.budget_secs,
            summary: c.summary,
            metrics: c.metrics,
        })
    }
}

pub static ALL: [Experiment; 10] = [
    Experiment { id: 1, name: "pyramid-exactness", budget_secs: 5.0, runner: pyramid_exactness },
    Experiment { id: 2, name: "closed-forms", budget_secs: 120.0, runner: closed_forms },
    Experiment { id: 3, name: "young-oracle", budget_secs: 60.0, runner: young_oracle },
    Experiment { id: 4, name: "adversarial-identity", budget_secs: 60.0, runner: adversarial_identity },
    Experiment { id: 5, name: "wiener-constant", budget_secs: 300.0, runner: wiener_constant },
    Experiment { id: 6, name: "ito-residual", budget_secs: 180.0, runner: ito_residual },
    Experiment { id: 7, name: "oscillatory-scaling", budget_secs: 120.0, runner: oscillatory_scaling },
    Experiment { id: 8, name: "counterexample-divergence", budget_secs: 60.0, runner: counterexample_divergence },
    Experiment { id: 9, name: "ode-exactness", budget_secs: 180.0, runner: ode_exactness },
    Experiment { id: 10, name: "continuity", budget_secs: 60.0, runner: continuity },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    ALL.iter().find(|e| e.name == name)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn pyramid_exactness(pool: &ThreadPool) -> CliResult<Check> {
    const PATHS: usize = 1000;
    const LEVEL: u32 = 12;
    const TOL: f64 = 1e-12;
    let errs = parallel::map_indexed(pool, PATHS, |i| {
        let g = generate::brownian(LEVEL, ensemble_seed(0, i))?;
        let p = g.pyramid();
        let mut parent = 0.0f64;
        for k in 0..LEVEL - 1 {
            let (up, down) = (p.level(k)?, p.level(k + 1)?);
            for (n, &h) in up.iter().enumerate() {
                parent = parent.max((h - 0.5 * (down[2 * n] + down[2 * n + 1])).abs());
            }
        }
        // cell averages straight from the samples, trapezoid on each fine cell
        let s = g.samples();
        let mut direct = 0.0f64;
        for k in 0..LEVEL {
            let width = 1usize << (LEVEL - k);
            for (n, &h) in p.level(k)?.iter().enumerate() {
                let cells = &s[n * width..=(n + 1) * width];
                let sum: f64 = cells.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
                direct = direct.max((h - sum / width as f64).abs());
            }
        }
        Ok::<_, roughpath_core::Error>((parent, direct))
    })?;
    let parent = max_abs(errs.iter().map(|e| e.0));
    let direct = max_abs(errs.iter().map(|e| e.1));
    Ok(Check {
        passed: parent < TOL && direct < TOL,
        summary: format!("parent-mean error {parent:.1e}, direct average error {direct:.1e}"),
        metrics: json!({ "paths": PATHS, "level": LEVEL, "parent_error": parent, "direct_error": direct, "tol": TOL }),
    })
}

fn bump(t: f64) -> f64 {
    t * (1.0 - t) * 4.0
}
fn wave(t: f64) -> f64 {
    (6.0 * t).sin()
}
fn decay(t: f64) -> f64 {
    1.0 - (-3.0 * t).exp()
}
fn cubic(t: f64) -> f64 {
    t * t * t - 0.5 * t
}
fn swing(t: f64) -> f64 {
    -1.5 * (3.0 * t).sin() * t
}
fn ramp(t: f64) -> f64 {
    0.7 * t + 0.2 * (10.0 * t).cos() - 0.2
}

/// The ten smooth reference paths.
pub fn analytic_family() -> [Analytic; 10] {
    [
        Analytic::Linear,
        Analytic::Square,
        Analytic::Sine,
        Analytic::Sqrt,
        Analytic::Custom(bump),
        Analytic::Custom(wave),
        Analytic::Custom(decay),
        Analytic::Custom(cubic),
        Analytic::Custom(swing),
        Analytic::Custom(ramp),
    ]
}

/// Relative error with a floor on the denominator.
fn rel(value: f64, exact: f64) -> f64 {
    (value - exact).abs() / exact.abs().max(1e-6)
}

fn closed_form_errors(g: &DyadicPath, quad: &QuadratureConfig) -> roughpath_core::Result<f64> {
    let mut worst = 0.0f64;
    for s in [0.5, 1.0] {
        let x = g.eval(s);
        let v = integrate_state_only(|x| x, g, 0.0, s, quad)?;
        worst = worst.max(rel(v, x * x / 2.0));
        for beta in [0.3, 0.7] {
            let v = integrate_state_only(|x: f64| x.abs().powf(beta), g, 0.0, s, quad)?;
            worst = worst.max(rel(v, oracle::abs_power_primitive(beta, x)));
        }
        let v = integrate_state_only(|x: f64| (2.0 * x).sin() * x.exp(), g, 0.0, s, quad)?;
        let exact = oracle::sin_exp_primitive(2.0, 1.0, x) - oracle::sin_exp_primitive(2.0, 1.0, 0.0);
        worst = worst.max(rel(v, exact));
    }
    Ok(worst)
}

fn closed_forms(pool: &ThreadPool) -> CliResult<Check> {
    const BROWNIAN: usize = 50;
    const LEVEL: u32 = 16;
    const REL_TOL: f64 = 1e-8;
    const CROSS_TOL: f64 = 1e-4;
    let quad = QuadratureConfig::tight();
    let brown = parallel::map_indexed(pool, BROWNIAN, |i| {
        let g = generate::brownian(LEVEL, ensemble_seed(0, i))?;
        let err = closed_form_errors(&g, &quad)?;
        let full = integrate(&ScalarField::state_only(|x| x), &g, 0.0, 1.0, &ConvergenceConfig::default())?;
        let direct = integrate_state_only(|x| x, &g, 0.0, 1.0, &quad)?;
        Ok::<_, roughpath_core::Error>((err, (full.value - direct).abs()))
    })?;
    let mut smooth = 0.0f64;
    for kind in analytic_family() {
        smooth = smooth.max(closed_form_errors(&generate::analytic(kind, LEVEL)?, &quad)?);
    }
    let brown_err = max_abs(brown.iter().map(|b| b.0));
    let cross = max_abs(brown.iter().map(|b| b.1));
    let worst = brown_err.max(smooth);
    Ok(Check {
        passed: worst < REL_TOL && cross < CROSS_TOL,
        summary: format!("max relative error {worst:.1e}, staircase cross-check {cross:.1e}"),
        metrics: json!({
            "brownian_paths": BROWNIAN, "analytic_paths": 10, "level": LEVEL,
            "brownian_rel_error": brown_err, "analytic_rel_error": smooth,
            "cross_check": cross, "rel_tol": REL_TOL, "cross_tol": CROSS_TOL,
        }),
    })
}

fn smooth_drivers() -> [(&'static str, Analytic); 2] {
    [("t^2", Analytic::Square), ("sin t", Analytic::Sine)]
}

fn young_oracle(_: &ThreadPool) -> CliResult<Check> {
    const LEVEL: u32 = 16;
    const TOL: f64 = 1e-6;
    let fields: [(&str, Field); 2] = [("sin(t) x", |t, x| t.sin() * x), ("t + x^2", |t, x| t + x * x)];
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (gname, kind) in smooth_drivers() {
        let g = generate::analytic(kind, LEVEL)?;
        for (fname, f) in fields {
            let field = ScalarField::new(f);
            let r = integrate(&field, &g, 0.0, 1.0, &ConvergenceConfig { tol: 1e-10, ..Default::default() })?;
            let dg = |t: f64| kind.derivative(t).expect("builtin paths have derivatives");
            let exact = oracle::riemann_stieltjes(f, |t| kind.eval(t), dg, 0.0, 1.0);
            let err = (r.value - exact).abs();
            worst = worst.max(err);
            rows.push(json!({ "path": gname, "field": fname, "value": r.value, "oracle": exact, "error": err }));
        }
    }
    Ok(Check {
        passed: worst < TOL,
        summary: format!("max error {worst:.1e} against Riemann-Stieltjes"),
        metrics: json!({ "level": LEVEL, "tol": TOL, "cases": rows }),
    })
}

fn adversarial_identity(pool: &ThreadPool) -> CliResult<Check> {
    const BROWNIAN: usize = 20;
    const LEVEL: u32 = 12;
    const BETA: f64 = 0.4;
    const TOL: f64 = 1e-12;
    let analytic = [
        Analytic::Linear,
        Analytic::Square,
        Analytic::Sine,
        Analytic::Sqrt,
        Analytic::Custom(wave),
    ];
    let mut paths = parallel::map_indexed(pool, BROWNIAN, |i| generate::brownian(LEVEL, ensemble_seed(0, i)))?;
    for kind in analytic {
        paths.push(generate::analytic(kind, LEVEL)?);
    }
    let quad = QuadratureConfig::tight();
    let errs = parallel::map_indexed(pool, paths.len(), |i| {
        let p = paths[i].pyramid();
        let mut worst = 0.0f64;
        for k_max in [3, 5, 7] {
            let adv = adversarial_integrand(&p, BETA, k_max)?;
            let v = staircase_integral(&adv.field(), &p, 0.0, 1.0, k_max, &quad)?;
            worst = worst.max((v - adv.predicted).abs() / adv.predicted.abs().max(f64::MIN_POSITIVE));
        }
        Ok::<_, roughpath_core::Error>(worst)
    })?;
    let worst = max_abs(errs);
    Ok(Check {
        passed: worst < TOL,
        summary: format!("max relative deviation {worst:.1e} over 25 paths"),
        metrics: json!({ "paths": paths.len(), "level": LEVEL, "beta": BETA, "k_max": [3, 5, 7], "rel_error": worst, "tol": TOL }),
    })
}

fn wiener_constant(pool: &ThreadPool) -> CliResult<Check> {
    const PATHS: usize = 200;
    const LEVEL: u32 = 18;
    const K: u32 = 12;
    let r = wiener_ensemble(&[K], PATHS, LEVEL, 0, pool)?;
    let e = &r.entries[0];
    let target_var = oracle::wiener_variance(K);
    let z = (e.mean - oracle::WIENER_MEAN).abs() / e.std_error;
    let var_rel = (e.variance - target_var).abs() / target_var;
    Ok(Check {
        passed: z < 3.0 && var_rel < 0.5,
        summary: format!("mean {:.6} ({z:.2} SE off), variance off by {:.1}%", e.mean, 100.0 * var_rel),
        metrics: json!({
            "paths": PATHS, "level": LEVEL, "k": K, "mean": e.mean, "std_error": e.std_error,
            "target_mean": oracle::WIENER_MEAN, "variance": e.variance, "target_variance": target_var,
        }),
    })
}

fn ito_residual(pool: &ThreadPool) -> CliResult<Check> {
    const PATHS: usize = 100;
    const TOL: f64 = 0.05;
    let mut means = Vec::new();
    for level in [12, 14, 16] {
        means.push(ito_ensemble("x^2", PATHS, level, 0, 1.0, pool)?.mean_abs_residual);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let last = means[2];
    Ok(Check {
        passed: last < TOL && decreasing,
        summary: format!("mean |residual| {:.4} / {:.4} / {:.4} at K = 12, 14, 16", means[0], means[1], means[2]),
        metrics: json!({ "paths": PATHS, "levels": [12, 14, 16], "mean_abs_residual": means, "tol": TOL }),
    })
}

fn oscillatory_scaling(_: &ThreadPool) -> CliResult<Check> {
    const ALPHA: f64 = 0.45;
    const BETA: f64 = 0.45;
    const PACKETS: u32 = 5;
    const SLOPE_TOL: f64 = 0.15;
    const HOLDER_TOL: f64 = 0.10;
    let gamma = ALPHA * BETA / (1.0 - ALPHA);
    let target = (1.0 - ALPHA - BETA) / (1.0 - ALPHA);
    let shifts = [0.0, 2.0, 4.0];
    let mut logs = Vec::new();
    let mut holders = Vec::new();
    for &shift in &shifts {
        let params = OscillatoryParams { alpha: ALPHA, beta: BETA, shift, packets: PACKETS };
        let level = params.required_level();
        let g = generate::oscillatory(&params, level)?;
        let cfg = GNormConfig { scan_depth: level.min(14), span_levels: 2, tail: SeriesTail::Interpolant };
        logs.push(g_norm(&g.pyramid(), BETA, gamma, &cfg)?.value.log2());
        holders.push(g.holder_seminorm(ALPHA, level.min(8))?.seminorm_lower_bound);
    }
    let slope = fit_slope(&shifts, &logs);
    let (lo, hi) = holders.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = (hi - lo) / lo;
    let slope_rel = (slope - target).abs() / target;
    Ok(Check {
        passed: slope_rel < SLOPE_TOL && spread < HOLDER_TOL,
        summary: format!("slope {slope:.4} vs {target:.4}, Hölder spread {:.1}%", 100.0 * spread),
        metrics: json!({ "shifts": shifts, "log2_g": logs, "holder": holders, "slope": slope, "target": target, "packets": PACKETS }),
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn counterexample_divergence(_: &ThreadPool) -> CliResult<Check> {
    const ALPHA: f64 = 0.3;
    const BETA: f64 = 0.3;
    const LEVEL: u32 = 20;
    const COARSE: u32 = 14;
    const LAST: usize = 6;
    let g = generate::counterexample(ALPHA, BETA, LEVEL)?;
    let r = condition_sums(&g.pyramid(), BETA)?;
    let sums = r.partial_sums();
    let tail = &sums[sums.len() - LAST..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let fine = g.holder_seminorm(ALPHA, 8)?.seminorm_lower_bound;
    let coarse = generate::counterexample(ALPHA, BETA, COARSE)?.holder_seminorm(ALPHA, 8)?.seminorm_lower_bound;
    let diverging = r.verdict == Verdict::Diverging;
    Ok(Check {
        passed: increasing && diverging && fine < 2.0 * coarse,
        summary: format!(
            "partial sums {:.3} -> {:.3}, verdict {:?}, Hölder {fine:.4} at K={LEVEL} vs {coarse:.4} at K={COARSE}",
            tail[0],
            tail[LAST - 1],
            r.verdict
        ),
        metrics: json!({ "level": LEVEL, "partial_sums_tail": tail, "verdict": r.verdict, "holder_fine": fine, "holder_coarse": coarse }),
    })
}

fn linear_problem(driver: DyadicPath, beta: f64) -> roughpath_core::Result<OdeProblem> {
    OdeProblem::new(Box::new(LinearField::scalar(1.0, 0.0)?), vec![driver], vec![1.0], beta)
}

fn ode_exactness(_: &ThreadPool) -> CliResult<Check> {
    const LEVEL: u32 = 16;
    const SOLVER_LEVEL: u32 = 12;
    const LINEAR_TOL: f64 = 1e-6;
    const OSC_TOL: f64 = 1e-4;
    const GREEN_TOL: f64 = 1e-5;
    let cfg = SolverConfig { level: Some(SOLVER_LEVEL), ..Default::default() };

    let t = DyadicPath::from_fn(LEVEL, |t| t)?;
    let sol = solve(&linear_problem(t, 0.5)?, &cfg)?;
    let lin = max_abs(sol.times.iter().zip(&sol.values[0]).map(|(t, y)| y - t.exp()));

    let params = OscillatoryParams { alpha: 0.45, beta: 0.45, shift: 0.0, packets: 5 };
    let x = generate::oscillatory(&params, LEVEL)?;
    let sol = solve(&linear_problem(x.clone(), 0.45)?, &cfg)?;
    let osc = max_abs(sol.times.iter().zip(&sol.values[0]).map(|(t, y)| y - x.eval(*t).exp()));

    let fields: [(&str, Field, Field); 3] = [
        ("t x", |t, x| t * x, |_, x| x),
        ("sin(t) x", |t, x| t.sin() * x, |t, x| t.cos() * x),
        ("t + x^2", |t, x| t + x * x, |_, _| 1.0),
    ];
    let mut green = 0.0f64;
    for (_, kind) in smooth_drivers() {
        let g = generate::analytic(kind, LEVEL)?;
        for (_, f, ft) in fields {
            let field = ScalarField::new(f).with_dt_partial(ft);
            let direct = integrate(&field, &g, 0.0, 1.0, &ConvergenceConfig { tol: 1e-10, ..Default::default() })?;
            let ge = green_eval(&field, &g, 1.0, &QuadratureConfig::tight())?;
            green = green.max((direct.value - ge.total).abs());
        }
    }
    Ok(Check {
        passed: lin < LINEAR_TOL && osc < OSC_TOL && green < GREEN_TOL,
        summary: format!("x = t error {lin:.1e}, oscillatory driver error {osc:.1e}, Green gap {green:.1e}"),
        metrics: json!({ "solver_level": SOLVER_LEVEL, "linear_error": lin, "oscillatory_error": osc, "green_gap": green }),
    })
}

fn continuity(_: &ThreadPool) -> CliResult<Check> {
    const LEVEL: u32 = 14;
    let eps = [1e-1, 1e-2, 1e-3];
    let base = linear_problem(DyadicPath::from_fn(LEVEL, |t| t)?, 0.5)?;
    let sweep = continuity_sweep(
        &base,
        |e| linear_problem(DyadicPath::from_fn(LEVEL, |t| (1.0 + e) * t)?, 0.5),
        &eps,
        &SolverConfig::default(),
    )?;
    let scaled: Vec<f64> = sweep.iter().map(|s| s.scaled_output).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    Ok(Check {
        passed: lo > 0.0 && hi / lo < 2.0,
        summary: format!("sup gap / eps = {:.3}, {:.3}, {:.3}", scaled[0], scaled[1], scaled[2]),
        metrics: json!({ "epsilons": eps, "scaled_output": scaled, "ratio": hi / lo }),
    })
}
