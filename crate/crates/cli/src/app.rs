//! Argument parsing and subcommand dispatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use rayon::ThreadPool;
use serde::Serialize;

use roughpath_core::calculus::{green_eval, ito_residual, GreenEvaluation, ItoReport};
use roughpath_core::diagnostics::{condition_sums, ensemble_seed, wiener_row, WienerReport};
use roughpath_core::generate::{self, Analytic, OscillatoryParams};
use roughpath_core::integrator::{integrate, ConvergenceConfig};
use roughpath_core::ode::{picard_bounds, solve, OdeProblem, OdeSolution, SolverConfig};
use roughpath_core::{DyadicPath, IntegralResult, QuadratureConfig};

use crate::error::{invalid, CliError, CliResult};
use crate::experiments;
use crate::fields;
use crate::io;
use crate::parallel;

#[derive(Debug, Parser)]
#[command(name = "roughpath", version, about = "Staircase integrals, diagnostics and driven ODEs on dyadic paths")]
pub struct Cli {
    /// Worker threads (falls back to ROUGHPATH_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key = value file with defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sampled path.
    GenPath(GenPath),
    /// Dump the dyadic average pyramid as k,n,h.
    Averages(Averages),
    /// Condition-series diagnostics.
    Diagnose(Diagnose),
    /// Staircase integral of a field along a path.
    Integrate(Integrate),
    /// Direct integral versus the Green-formula evaluation.
    GreenCheck(GreenCheck),
    /// Pathwise integral versus Itô sums on Brownian paths.
    ItoCompare(ItoCompare),
    /// Monte-Carlo of the Wiener statistic.
    WienerMc(WienerMc),
    /// Windowed Picard solve of a driven ODE.
    SolveOde(SolveOde),
    /// Run one acceptance experiment (or `all`).
    Reproduce(Reproduce),
}

#[derive(Debug, Args)]
pub struct GenPath {
    /// brownian, oscillatory, counterexample, linear, square, sine, sqrt.
    #[arg(long)]
    pub kind: String,
    #[arg(long = "K")]
    pub level: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.45)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.45)]
    pub beta: f64,
    /// Amplitude shift A of the oscillatory path.
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,
    #[arg(long, default_value_t = 5)]
    pub packets: u32,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub pyramid_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Averages {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Diagnose {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub beta: f64,
    /// Print the JSON report instead of a table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Integrate {
    #[arg(long)]
    pub path: PathBuf,
    /// Expression in t and x, or identity, square, cube.
    #[arg(long)]
    pub field: String,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 4)]
    pub min_level: u32,
    #[arg(long)]
    pub max_level: Option<u32>,
    /// Literal staircase without the endpoint connectors.
    #[arg(long)]
    pub no_closure: bool,
    #[arg(long, default_value = "-")]
    pub json_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GreenCheck {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub field: String,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value = "-")]
    pub json_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ItoCompare {
    /// Function of x.
    #[arg(long, default_value = "square")]
    pub phi: String,
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long = "K", default_value_t = 16)]
    pub level: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Per-path seed,residual rows.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub json_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WienerMc {
    #[arg(long, default_value_t = 200)]
    pub paths: usize,
    #[arg(long = "K", default_value_t = 18)]
    pub level: u32,
    #[arg(long, value_delimiter = ',', default_value = "12")]
    pub levels: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub json_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveOde {
    /// Driver CSV files, one per driver dimension.
    #[arg(long, value_delimiter = ',', required = true)]
    pub drivers: Vec<PathBuf>,
    /// linear, bilinear or expression.
    #[arg(long = "F", default_value = "linear")]
    pub field: String,
    /// State dimension.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Linear: a_ijk ordered (i*d + j)*m + k. Bilinear: c_ij.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coef: Vec<f64>,
    /// Linear offsets b_ij.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub offset: Vec<f64>,
    /// One expression per component, row-major; variables t, y1.., x1...
    #[arg(long, action = ArgAction::Append, allow_hyphen_values = true)]
    pub expr: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub y0: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Solution grid level (default K - 4).
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub initial_window: Option<f64>,
    /// Seed the first window from the field's declared Hölder constants.
    #[arg(long)]
    pub suggest_window: bool,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Diagnostics sidecar; defaults to <out>.json when --out is a file.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Reproduce {
    /// Experiment name, or `all`.
    pub name: String,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

fn subcommand_name(args: &[OsString]) -> Option<String> {
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    args.iter().skip(1).filter_map(|a| a.to_str()).find(|a| names.iter().any(|n| n == a)).map(str::to_string)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Splices config-file entries in front of the subcommand's own flags.
fn with_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(cfg) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = subcommand_name(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&cfg).map_err(|e| invalid(format!("cannot read config {}: {e}", cfg.display())))?;
    let entries = crate::config::parse(&text)?;
    let cmd = Cli::command();
    let sc = cmd.find_subcommand(&sub).expect("subcommand listed above");
    let mut known = BTreeMap::new();
    for a in sc.get_arguments() {
        if let Some(long) = a.get_long() {
            if long == "config" || long == "help" {
                continue;
            }
            let takes = !matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count);
            known.insert(long.to_string(), takes);
        }
    }
    if a_positional(sc) && entries.keys().any(|k| k == "name") {
        return Err(invalid("positional arguments cannot come from the config file"));
    }
    let extra = crate::config::to_args(&entries, &known)?;
    let pos = args.iter().position(|a| a.to_str() == Some(sub.as_str())).expect("found above");
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn a_positional(sc: &clap::Command) -> bool {
    sc.get_arguments().any(|a| a.is_positional())
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let mut cmd = Cli::command().args_override_self(true);
    for name in cmd.get_subcommands().map(|c| c.get_name().to_string()).collect::<Vec<_>>() {
        cmd = cmd.mut_subcommand(name, |c| c.args_override_self(true));
    }
    let matches = match cmd.try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> i32 {
    let payload = e.payload();
    eprintln!("{}", serde_json::to_string(&payload).unwrap_or_else(|_| e.to_string()));
    payload.exit_code
}

fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be positive, got {v}")))
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let pool = parallel::pool(cli.threads)?;
    match cli.command {
        Command::GenPath(a) => gen_path(a),
        Command::Averages(a) => {
            let p = io::read_path_file(&a.path)?;
            let mut w = io::create(&a.out)?;
            io::write_pyramid(&mut w, &p.pyramid())?;
            Ok(w.flush()?)
        }
        Command::Diagnose(a) => diagnose(a),
        Command::Integrate(a) => integrate_cmd(a),
        Command::GreenCheck(a) => green_check(a),
        Command::ItoCompare(a) => ito_compare(a, &pool),
        Command::WienerMc(a) => wiener_mc(a, &pool),
        Command::SolveOde(a) => solve_ode(a),
        Command::Reproduce(a) => reproduce(a, &pool),
    }
}

fn generated(a: &GenPath) -> CliResult<DyadicPath> {
    Ok(match a.kind.as_str() {
        "brownian" => generate::brownian(a.level, a.seed)?,
        "oscillatory" => {
            let params = OscillatoryParams {
                alpha: a.alpha,
                beta: a.beta,
                shift: a.shift,
                packets: a.packets,
            };
            generate::oscillatory(&params, a.level)?
        }
        "counterexample" => generate::counterexample(a.alpha, a.beta, a.level)?,
        "linear" => generate::analytic(Analytic::Linear, a.level)?,
        "square" => generate::analytic(Analytic::Square, a.level)?,
        "sine" => generate::analytic(Analytic::Sine, a.level)?,
        "sqrt" => generate::analytic(Analytic::Sqrt, a.level)?,
        other => return Err(invalid(format!("unknown path kind {other:?}"))),
    })
}

fn gen_path(a: GenPath) -> CliResult<()> {
    let p = generated(&a)?;
    let mut w = io::create(&a.out)?;
    io::write_path(&mut w, &p)?;
    w.flush()?;
    if let Some(out) = &a.pyramid_out {
        let mut w = io::create(out)?;
        io::write_pyramid(&mut w, &p.pyramid())?;
        w.flush()?;
    }
    Ok(())
}

fn diagnose(a: Diagnose) -> CliResult<()> {
    let p = io::read_path_file(&a.path)?;
    let r = condition_sums(&p.pyramid(), a.beta)?;
    if let Some(out) = &a.json_out {
        io::write_json(out, &r)?;
    }
    let mut out = std::io::stdout().lock();
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
    } else {
        writeln!(out, "{:>4} {:>14} {:>14} {:>14}", "k", "B", "term", "partial_sum")?;
        for l in &r.levels {
            writeln!(out, "{:>4} {:>14.6e} {:>14.6e} {:>14.6e}", l.k, l.levy_area, l.term, l.partial_sum)?;
        }
        writeln!(out, "verdict: {:?} ({})", r.verdict, r.rule)?;
    }
    Ok(())
}

fn integrate_cmd(a: Integrate) -> CliResult<()> {
    check_positive("tol", a.tol)?;
    let p = io::read_path_file(&a.path)?;
    let f = fields::scalar_field(&a.field)?;
    let cfg = ConvergenceConfig {
        min_level: a.min_level,
        max_level: a.max_level,
        tol: a.tol,
        closure: !a.no_closure,
        ..Default::default()
    };
    let r = integrate(&f, &p, a.a, a.b, &cfg)?;
    io::write_json(&a.json_out, &r)?;
    if !r.converged {
        return Err(CliError::NotConverged(format!(
            "levels {}..={} did not settle within {:e}",
            r.levels_used.0, r.levels_used.1, a.tol
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct GreenReport {
    pub value_direct: f64,
    pub value_green: f64,
    pub difference: f64,
    pub direct: IntegralResult,
    pub green: GreenEvaluation,
}

fn green_check(a: GreenCheck) -> CliResult<()> {
    check_positive("tol", a.tol)?;
    let p = io::read_path_file(&a.path)?;
    let f = fields::scalar_field(&a.field)?;
    let cfg = ConvergenceConfig {
        tol: a.tol,
        ..Default::default()
    };
    let direct = integrate(&f, &p, 0.0, a.s, &cfg)?;
    let green = green_eval(&f, &p, a.s, &QuadratureConfig::tight())?;
    let report = GreenReport {
        value_direct: direct.value,
        value_green: green.total,
        difference: direct.value - green.total,
        direct,
        green,
    };
    io::write_json(&a.json_out, &report)?;
    if !report.direct.converged {
        return Err(CliError::NotConverged("direct integral did not settle".into()));
    }
    Ok(())
}

/// Itô comparison over `paths` Brownian seeds, in parallel.
pub fn ito_ensemble(phi: &str, paths: usize, level: u32, seed: u64, s: f64, pool: &ThreadPool) -> CliResult<ItoReport> {
    if paths == 0 {
        return Err(invalid("--paths must be positive"));
    }
    let (f, df) = fields::state_function(phi)?;
    let quad = QuadratureConfig::tight();
    let residuals = parallel::map_indexed(pool, paths, |i| {
        let g = generate::brownian(level, ensemble_seed(seed, i))?;
        ito_residual(|x| f.eval(&[x]), |x| df.eval(&[x]), &g, s, level, &quad)
    })?;
    Ok(ItoReport::from_residuals(residuals, s, level, level, seed))
}

fn ito_compare(a: ItoCompare, pool: &ThreadPool) -> CliResult<()> {
    let r = ito_ensemble(&a.phi, a.paths, a.level, a.seed, a.s, pool)?;
    if let Some(out) = &a.csv_out {
        let rows: Vec<(u64, f64)> = r
            .residuals
            .iter()
            .enumerate()
            .map(|(i, x)| (ensemble_seed(a.seed, i), x.residual))
            .collect();
        let mut w = io::create(out)?;
        io::write_ensemble(&mut w, &rows)?;
        w.flush()?;
    }
    io::write_json(&a.json_out, &r)
}

/// Wiener statistics over `paths` Brownian seeds, in parallel.
pub fn wiener_ensemble(ks: &[u32], paths: usize, level: u32, seed: u64, pool: &ThreadPool) -> CliResult<WienerReport> {
    if paths < 2 {
        return Err(invalid("--paths must be at least 2"));
    }
    if ks.is_empty() {
        return Err(invalid("--levels must not be empty"));
    }
    let rows = parallel::map_indexed(pool, paths, |i| wiener_row(ks, level, ensemble_seed(seed, i)))?;
    Ok(WienerReport::from_rows(ks, &rows, level, seed))
}

fn wiener_mc(a: WienerMc, pool: &ThreadPool) -> CliResult<()> {
    let r = wiener_ensemble(&a.levels, a.paths, a.level, a.seed, pool)?;
    io::write_json(&a.json_out, &r)
}

#[derive(Debug, Serialize)]
pub struct OdeSidecar<'a> {
    pub m: usize,
    pub d: usize,
    pub beta: f64,
    pub tol: f64,
    pub initial_window: Option<f64>,
    pub solution: &'a OdeSolution,
}

fn solve_ode(a: SolveOde) -> CliResult<()> {
    check_positive("tol", a.tol)?;
    let drivers = a.drivers.iter().map(|p| io::read_path_file(p)).collect::<CliResult<Vec<_>>>()?;
    let d = drivers.len();
    let field = fields::driven_field(&a.field, a.m, d, &a.coef, &a.offset, &a.expr)?;
    let mut problem = OdeProblem::new(field, drivers, a.y0.clone(), a.beta)?.with_horizon(a.horizon)?;
    if let Some(alpha) = a.alpha {
        problem = problem.with_alpha(alpha)?;
    }
    let mut initial = a.initial_window;
    if a.suggest_window && initial.is_none() {
        initial = Some(picard_bounds(&problem, 1.0)?.suggested_window);
    }
    let cfg = SolverConfig {
        level: a.level,
        tol: a.tol,
        initial_window: initial,
        ..Default::default()
    };
    let sol = solve(&problem, &cfg)?;
    let mut w = io::create(&a.out)?;
    io::write_solution(&mut w, &sol.times, &sol.values)?;
    w.flush()?;
    let sidecar = a.json_out.clone().or_else(|| sidecar_path(&a.out));
    if let Some(path) = sidecar {
        let s = OdeSidecar {
            m: a.m,
            d,
            beta: a.beta,
            tol: a.tol,
            initial_window: initial,
            solution: &sol,
        };
        io::write_json(&path, &s)?;
    }
    if !sol.converged {
        return Err(CliError::NotConverged(format!("fixed-point residual {:e} exceeds 5 tol", sol.residual)));
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> Option<PathBuf> {
    if out.as_os_str() == "-" {
        return None;
    }
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    Some(PathBuf::from(s))
}

fn reproduce(a: Reproduce, pool: &ThreadPool) -> CliResult<()> {
    let selected: Vec<&experiments::Experiment> = if a.name == "all" {
        experiments::ALL.iter().collect()
    } else {
        vec![experiments::find(&a.name).ok_or_else(|| {
            invalid(format!(
                "unknown experiment {:?}; expected all or one of {}",
                a.name,
                experiments::ALL.iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
            ))
        })?]
    };
    let mut outcomes = Vec::new();
    for e in selected {
        let o = e.run(pool)?;
        writeln!(std::io::stdout(), "{}", o.line())?;
        outcomes.push(o);
    }
    if let Some(out) = &a.json_out {
        io::write_json(out, &outcomes)?;
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("failed: {}", failed.join(", "))))
    }
}
