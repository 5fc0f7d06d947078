//! Picard iteration for `dy = F(t, y, x) dx` driven by irregular paths.
//!
//! Component `i` of the equation reads
//! `y_i(t) = y0_i + Σ_j ∫_0^t F_ij(u, y(u), x(u)) dx_j(u)`, each integral being
//! the staircase integral of `f_ij(t, ξ) = F_ij(t, y(t), x_1(t), .., ξ, .., x_d(t))`
//! along the driver `x_j`. The solution lives on the dyadic grid of level `L`
//! and is interpolated linearly in between.
//!
//! [`solve`] splits `[0, T]` into windows, iterates the Picard map on each one
//! from the constant extension of the window's start value and halves the
//! window when the iteration does not settle.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{condition_sums, g_norm, GNormConfig, Verdict};
use crate::integrator::{staircase_prefix_window, Dependence, Integrand};
use crate::path::{grid_point, holder_seminorm, interpolate, AveragePyramid, DyadicPath, HolderEstimate};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

/// Hölder data of one component `F_ij`, in the notation of the boundedness lemma:
/// `t` is `|F_ij, H_θ(t)|`, `y` is `Σ_k |F_ij, H_θ(y_k)|`, `x` is
/// `Σ_{k≠j} |F_ij, H_θ(x_k)|`, all taken over the ball of the given radius.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentConstants {
    pub t: f64,
    pub y: f64,
    pub x: f64,
    /// `sup |F_ij|` over the ball, if known.
    pub sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldConstants {
    pub theta: f64,
    /// Row-major, entry `i * d + j`.
    pub components: Vec<ComponentConstants>,
}

/// Matrix-valued field `F: (t, y, x) -> L(R^d, R^m)`.
pub trait DrivenField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn driver_dim(&self) -> usize;
    fn eval(&self, i: usize, j: usize, t: f64, y: &[f64], x: &[f64]) -> f64;

    /// Whether `F_ij` depends on its own driver coordinate `x_j`. When it
    /// does not, the component integrand is time-only and much cheaper.
    fn depends_on_driver(&self, _i: usize, _j: usize) -> bool {
        true
    }

    /// Declared Hölder constants on `|y|, |x| ≤ radius`.
    fn constants(&self, _radius: f64) -> Option<FieldConstants> {
        None
    }

    /// `∂F_ij/∂y_k`, if the field provides it.
    fn y_gradient(&self, _i: usize, _j: usize, _k: usize, _t: f64, _y: &[f64], _x: &[f64]) -> Option<f64> {
        None
    }
}

/// `F_ij = Σ_k a_ijk y_k + b_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    m: usize,
    d: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LinearField {
    /// `a` has `m*d*m` entries ordered `(i*d + j)*m + k`; `b` has `m*d`.
    pub fn new(m: usize, d: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::DimensionMismatch("field dimensions must be positive"));
        }
        if a.len() != m * d * m || b.len() != m * d {
            return Err(Error::DimensionMismatch("linear field coefficients"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("linear field coefficients must be finite"));
        }
        Ok(LinearField { m, d, a, b })
    }

    /// Scalar `F(t, y, x) = a y + b`.
    pub fn scalar(a: f64, b: f64) -> Result<Self> {
        Self::new(1, 1, vec![a], vec![b])
    }
}

impl DrivenField for LinearField {
    fn state_dim(&self) -> usize {
        self.m
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, j: usize, _t: f64, y: &[f64], _x: &[f64]) -> f64 {
        let row = &self.a[(i * self.d + j) * self.m..][..self.m];
        row.iter().zip(y).map(|(a, y)| a * y).sum::<f64>() + self.b[i * self.d + j]
    }
    fn depends_on_driver(&self, _i: usize, _j: usize) -> bool {
        false
    }
    fn constants(&self, radius: f64) -> Option<FieldConstants> {
        let components = (0..self.m * self.d)
            .map(|c| {
                let row = &self.a[c * self.m..][..self.m];
                let y: f64 = row.iter().map(|a| a.abs()).sum();
                ComponentConstants {
                    t: 0.0,
                    y,
                    x: 0.0,
                    sup: Some(y * radius + self.b[c].abs()),
                }
            })
            .collect();
        Some(FieldConstants { theta: 1.0, components })
    }
    fn y_gradient(&self, i: usize, j: usize, k: usize, _t: f64, _y: &[f64], _x: &[f64]) -> Option<f64> {
        Some(self.a[(i * self.d + j) * self.m + k])
    }
}

/// `F_ij = c_ij y_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearField {
    m: usize,
    d: usize,
    c: Vec<f64>,
}

impl BilinearField {
    pub fn new(m: usize, d: usize, c: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 || c.len() != m * d {
            return Err(Error::DimensionMismatch("bilinear field coefficients"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("bilinear field coefficients must be finite"));
        }
        Ok(BilinearField { m, d, c })
    }
}

impl DrivenField for BilinearField {
    fn state_dim(&self) -> usize {
        self.m
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, j: usize, _t: f64, y: &[f64], x: &[f64]) -> f64 {
        self.c[i * self.d + j] * y[i] * x[j]
    }
    fn constants(&self, radius: f64) -> Option<FieldConstants> {
        let components = self
            .c
            .iter()
            .map(|c| ComponentConstants {
                t: 0.0,
                y: c.abs() * radius,
                x: 0.0,
                sup: Some(c.abs() * radius * radius),
            })
            .collect();
        Some(FieldConstants { theta: 1.0, components })
    }
    fn y_gradient(&self, i: usize, j: usize, k: usize, _t: f64, _y: &[f64], x: &[f64]) -> Option<f64> {
        Some(if k == i { self.c[i * self.d + j] * x[j] } else { 0.0 })
    }
}

type FieldFn = Box<dyn Fn(usize, usize, f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// Closure-backed field.
pub struct FnField {
    m: usize,
    d: usize,
    f: FieldFn,
    driver_free: bool,
    constants: Option<FieldConstants>,
}

impl FnField {
    pub fn new<F>(m: usize, d: usize, f: F) -> Self
    where
        F: Fn(usize, usize, f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        FnField {
            m,
            d,
            f: Box::new(f),
            driver_free: false,
            constants: None,
        }
    }

    /// Declares that no component reads its own driver coordinate.
    pub fn driver_free(mut self) -> Self {
        self.driver_free = true;
        self
    }

    /// Constants are taken as valid for every radius.
    pub fn with_constants(mut self, c: FieldConstants) -> Self {
        self.constants = Some(c);
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("m", &self.m)
            .field("d", &self.d)
            .field("driver_free", &self.driver_free)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl DrivenField for FnField {
    fn state_dim(&self) -> usize {
        self.m
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, j: usize, t: f64, y: &[f64], x: &[f64]) -> f64 {
        (self.f)(i, j, t, y, x)
    }
    fn depends_on_driver(&self, _i: usize, _j: usize) -> bool {
        !self.driver_free
    }
    fn constants(&self, _radius: f64) -> Option<FieldConstants> {
        self.constants.clone()
    }
}

/// The driven system.
pub struct OdeProblem {
    pub field: Box<dyn DrivenField>,
    pub drivers: Vec<DyadicPath>,
    pub y0: Vec<f64>,
    /// Hölder exponent assumed for the drivers; only the bounds use it.
    pub alpha: f64,
    /// Working Hölder exponent of the solution.
    pub beta: f64,
    pub horizon: f64,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("m", &self.field.state_dim())
            .field("d", &self.field.driver_dim())
            .field("drivers", &self.drivers.len())
            .field("y0", &self.y0)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl OdeProblem {
    /// Horizon 1 and `alpha = beta`.
    pub fn new(field: Box<dyn DrivenField>, drivers: Vec<DyadicPath>, y0: Vec<f64>, beta: f64) -> Result<Self> {
        let p = OdeProblem {
            field,
            drivers,
            y0,
            alpha: beta,
            beta,
            horizon: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.field.state_dim()
    }

    pub fn driver_dim(&self) -> usize {
        self.field.driver_dim()
    }

    /// Coarsest driver resolution.
    pub fn resolution(&self) -> u32 {
        self.drivers.iter().map(DyadicPath::level).min().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = (self.state_dim(), self.driver_dim());
        if m == 0 || d == 0 {
            return Err(Error::DimensionMismatch("field dimensions must be positive"));
        }
        if self.drivers.len() != d {
            return Err(Error::DimensionMismatch("one driver per driver dimension"));
        }
        if self.y0.len() != m {
            return Err(Error::DimensionMismatch("y0 length must equal the state dimension"));
        }
        if let Some(i) = self.y0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) || !(self.alpha > 0.0 && self.alpha <= 1.0) || self.beta > self.alpha {
            return Err(Error::BadExponents {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if !(self.horizon > 0.0 && self.horizon <= 1.0) {
            return Err(Error::InvalidParameter("horizon must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Exponents `γ` and `β0` of the driver class; need `0 < β − γ < β0 < θβ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Exponents {
    pub gamma: f64,
    pub beta0: f64,
}

impl Exponents {
    /// Puts `β − γ` at `θβ/2` and `β0` halfway between that and `θβ`.
    pub fn default_for(beta: f64, theta: f64) -> Self {
        Exponents {
            gamma: beta * (1.0 - theta) + theta * beta / 2.0,
            beta0: 0.75 * theta * beta,
        }
    }

    pub fn validate(&self, beta: f64, theta: f64) -> Result<()> {
        let ok = self.gamma > 0.0 && beta - self.gamma > 0.0 && beta - self.gamma < self.beta0 && self.beta0 < theta * beta;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("exponents must satisfy 0 < beta - gamma < beta0 < theta beta"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    /// Solution grid level; defaults to `K - 4`.
    pub level: Option<u32>,
    pub tol: f64,
    pub max_iterations: usize,
    /// First window length; defaults to the whole horizon.
    pub initial_window: Option<f64>,
    /// Shortest admissible window; defaults to one grid step.
    pub min_window: Option<f64>,
    pub quad: QuadratureConfig,
    /// Re-evaluate the fixed-point residual one integrator level finer.
    pub residual_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            level: None,
            tol: 1e-10,
            max_iterations: 100,
            initial_window: None,
            min_window: None,
            quad: QuadratureConfig::default(),
            residual_check: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive"));
        }
        for w in [self.initial_window, self.min_window].into_iter().flatten() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter("window lengths must be positive"));
            }
        }
        self.quad.validate()
    }
}

/// One accepted window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowReport {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
    /// Mean of the last (up to three) ratios of successive sup-norm changes.
    pub contraction_ratio: f64,
    pub final_change: f64,
    /// Attempts rejected before this window was accepted.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdeSolution {
    pub level: u32,
    pub integration_level: u32,
    pub times: Vec<f64>,
    /// `values[i][j] = y_i(t_j)`.
    pub values: Vec<Vec<f64>>,
    pub windows: Vec<WindowReport>,
    /// `max_j |y(t_j) − y0 − ∫_0^{t_j} F dx|` at `residual_level`; NaN when skipped.
    pub residual: f64,
    pub residual_level: Option<u32>,
    pub converged: bool,
    /// Lower bounds from the dyadic pair scan, one per component.
    pub holder: Vec<HolderEstimate>,
    /// Condition-series verdict of each driver at exponent `θβ`.
    pub driver_verdicts: Vec<Verdict>,
}

impl OdeSolution {
    /// Component `i` as a path on the solution grid (only when `T = 1`).
    pub fn component(&self, i: usize) -> Result<DyadicPath> {
        DyadicPath::new(self.values[i].clone(), self.level)
    }
}

struct ComponentIntegrand<'a> {
    problem: &'a OdeProblem,
    y: &'a [Vec<f64>],
    level: u32,
    i: usize,
    j: usize,
}

impl ComponentIntegrand<'_> {
    fn with_state<R>(&self, t: f64, xj: f64, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        let mut ys = [0.0; 8];
        let mut xs = [0.0; 8];
        let (mut yv, mut xv) = (Vec::new(), Vec::new());
        let m = self.y.len();
        let d = self.problem.drivers.len();
        let y: &mut [f64] = if m <= 8 {
            &mut ys[..m]
        } else {
            yv.resize(m, 0.0);
            &mut yv
        };
        for (k, v) in y.iter_mut().enumerate() {
            *v = interpolate(&self.y[k], self.level, t);
        }
        let x: &mut [f64] = if d <= 8 {
            &mut xs[..d]
        } else {
            xv.resize(d, 0.0);
            &mut xv
        };
        for (k, v) in x.iter_mut().enumerate() {
            *v = if k == self.j { xj } else { self.problem.drivers[k].eval(t) };
        }
        f(y, x)
    }
}

impl Integrand for ComponentIntegrand<'_> {
    fn eval(&self, t: f64, xj: f64) -> f64 {
        let xj = if self.problem.field.depends_on_driver(self.i, self.j) {
            xj
        } else {
            self.problem.drivers[self.j].eval(t)
        };
        self.with_state(t, xj, |y, x| self.problem.field.eval(self.i, self.j, t, y, x))
    }

    fn dependence(&self) -> Dependence {
        if self.problem.field.depends_on_driver(self.i, self.j) {
            Dependence::Both
        } else {
            Dependence::TimeOnly
        }
    }
}

struct Workspace<'a> {
    problem: &'a OdeProblem,
    pyramids: Vec<AveragePyramid>,
    level: u32,
    quad: QuadratureConfig,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a OdeProblem, level: u32, quad: QuadratureConfig) -> Self {
        Workspace {
            problem,
            pyramids: problem.drivers.iter().map(DyadicPath::pyramid).collect(),
            level,
            quad,
        }
    }

    /// `start + Σ_j ∫_{t_j0}^{t} F_ij dx_j` for `t = t_j0..=t_j1`, component by component.
    fn sweep(&self, y: &[Vec<f64>], start: &[f64], j0: usize, j1: usize, k: u32) -> Result<Vec<Vec<f64>>> {
        let d = self.problem.driver_dim();
        let mut out = Vec::with_capacity(y.len());
        for (i, s) in start.iter().enumerate() {
            let mut acc = vec![*s; j1 - j0 + 1];
            for j in 0..d {
                let f = ComponentIntegrand {
                    problem: self.problem,
                    y,
                    level: self.level,
                    i,
                    j,
                };
                let part = staircase_prefix_window(&f, &self.problem.drivers[j], &self.pyramids[j], k, self.level, j0, j1, &self.quad)?;
                for (a, v) in acc.iter_mut().zip(&part) {
                    *a += v;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn check_levels(problem: &OdeProblem, level: Option<u32>) -> Result<(u32, u32)> {
    let big_k = problem.resolution();
    if big_k < 7 {
        return Err(Error::ResolutionTooCoarse { need: 7, have: big_k });
    }
    let l = level.unwrap_or(big_k - 4);
    if l == 0 || l + 3 > big_k {
        return Err(Error::LevelOutOfRange {
            level: l,
            min: 1,
            max: big_k - 3,
        });
    }
    Ok((l, big_k))
}

fn grid_index(t: f64, level: u32) -> Result<usize> {
    let scaled = t * (1u64 << level) as f64;
    let n = scaled.round();
    if (scaled - n).abs() > 1e-9 {
        return Err(Error::InvalidParameter("times must lie on the solver grid"));
    }
    Ok(n as usize)
}

/// `(T_{x,F} y)(t)` on the grid points of `[a, b]`, with the integrals taken at
/// level `K − 3`. `y_current[i]` holds `y_i` at the grid points of `[a, b]` on
/// level `level` (default `K − 4`); the start value is `y_current(a)`.
pub fn picard_operator(
    problem: &OdeProblem,
    y_current: &[Vec<f64>],
    a: f64,
    b: f64,
    level: Option<u32>,
    quad: &QuadratureConfig,
) -> Result<Vec<Vec<f64>>> {
    problem.validate()?;
    let (l, big_k) = check_levels(problem, level)?;
    if !(0.0..=1.0).contains(&a) || !(a..=1.0).contains(&b) || a >= b {
        return Err(Error::BadInterval { a, b });
    }
    let (j0, j1) = (grid_index(a, l)?, grid_index(b, l)?);
    if y_current.len() != problem.state_dim() || y_current.iter().any(|c| c.len() != j1 - j0 + 1) {
        return Err(Error::DimensionMismatch("y_current must hold every grid point of [a, b]"));
    }
    let full: Vec<Vec<f64>> = y_current
        .iter()
        .map(|c| {
            let mut v = vec![c[0]; (1usize << l) + 1];
            v[j0..=j1].copy_from_slice(c);
            // constant extension keeps the interpolant finite outside the window
            for x in &mut v[j1 + 1..] {
                *x = c[c.len() - 1];
            }
            v
        })
        .collect();
    let start: Vec<f64> = y_current.iter().map(|c| c[0]).collect();
    Workspace::new(problem, l, *quad).sweep(&full, &start, j0, j1, big_k - 3)
}

enum Attempt {
    Accepted(WindowReport),
    Rejected { non_finite: bool },
}

fn sup_change(old: &[Vec<f64>], new: &[Vec<f64>], j0: usize) -> f64 {
    let mut worst = 0.0f64;
    for (o, n) in old.iter().zip(new) {
        for (k, v) in n.iter().enumerate() {
            let d = (v - o[j0 + k]).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

fn mean_ratio(changes: &[f64]) -> f64 {
    let n = changes.len();
    if n < 2 {
        return 0.0;
    }
    let from = n.saturating_sub(4);
    let ratios: Vec<f64> = changes[from..]
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

fn run_window(ws: &Workspace<'_>, y: &mut [Vec<f64>], j0: usize, j1: usize, k: u32, cfg: &SolverConfig) -> Result<Attempt> {
    let start: Vec<f64> = y.iter().map(|c| c[j0]).collect();
    for (c, s) in y.iter_mut().zip(&start) {
        for v in &mut c[j0..] {
            *v = *s;
        }
    }
    let mut changes = Vec::new();
    for it in 1..=cfg.max_iterations {
        let next = ws.sweep(y, &start, j0, j1, k)?;
        let change = sup_change(y, &next, j0);
        if !change.is_finite() || next.iter().flatten().any(|v| !v.is_finite()) {
            return Ok(Attempt::Rejected { non_finite: true });
        }
        for (c, n) in y.iter_mut().zip(&next) {
            c[j0..=j1].copy_from_slice(n);
            let last = n[n.len() - 1];
            for v in &mut c[j1 + 1..] {
                *v = last;
            }
        }
        changes.push(change);
        let ratio = mean_ratio(&changes);
        if change < cfg.tol && ratio < 1.0 {
            return Ok(Attempt::Accepted(WindowReport {
                start: grid_point(j0, ws.level),
                end: grid_point(j1, ws.level),
                iterations: it,
                contraction_ratio: ratio,
                final_change: change,
                rejected: 0,
            }));
        }
        if changes.len() >= 4 && ratio >= 1.0 {
            return Ok(Attempt::Rejected { non_finite: false });
        }
    }
    Ok(Attempt::Rejected { non_finite: false })
}

/// Windowed Picard solve on `[0, T]`.
pub fn solve(problem: &OdeProblem, cfg: &SolverConfig) -> Result<OdeSolution> {
    problem.validate()?;
    cfg.validate()?;
    let (l, big_k) = check_levels(problem, cfg.level)?;
    let k_int = big_k - 3;
    let total = grid_index(problem.horizon, l)?;
    if total == 0 {
        return Err(Error::InvalidParameter("horizon shorter than one grid step"));
    }
    let steps_of = |w: f64| ((w * (1u64 << l) as f64).floor() as usize).clamp(1, total);
    let min_steps = cfg.min_window.map_or(1, steps_of);
    let mut width = cfg.initial_window.map_or(total, steps_of);

    let ws = Workspace::new(problem, l, cfg.quad);
    let points = (1usize << l) + 1;
    let mut y: Vec<Vec<f64>> = problem.y0.iter().map(|v| vec![*v; points]).collect();
    let mut windows = Vec::new();
    let mut j0 = 0usize;
    let mut rejected = 0usize;
    while j0 < total {
        let j1 = (j0 + width).min(total);
        match run_window(&ws, &mut y, j0, j1, k_int, cfg)? {
            Attempt::Accepted(mut rep) => {
                rep.rejected = rejected;
                rejected = 0;
                windows.push(rep);
                j0 = j1;
                width = (2 * width).min(total - j0).max(1);
            }
            Attempt::Rejected { non_finite } => {
                rejected += 1;
                let w = j1 - j0;
                if w / 2 < min_steps || w == 1 {
                    let (start, end) = (grid_point(j0, l), grid_point(j1, l));
                    return Err(if non_finite {
                        Error::NonFiniteIterate { start, end }
                    } else {
                        Error::WindowUnderflow { start, end }
                    });
                }
                width = w / 2;
            }
        }
    }
    for c in &mut y {
        c.truncate(total + 1);
    }

    let (residual, residual_level) = if cfg.residual_check {
        let k = big_k - 2;
        let mut full = y.clone();
        for c in &mut full {
            let last = c[total];
            c.resize(points, last);
        }
        let check = ws.sweep(&full, &problem.y0, 0, total, k)?;
        (sup_change(&y, &check, 0), Some(k))
    } else {
        (f64::NAN, None)
    };
    let converged = residual_level.is_none() || residual <= 5.0 * cfg.tol;

    let max_lag = l.min(8);
    let holder = if total == 1usize << l {
        y.iter()
            .map(|c| holder_seminorm(c, l, problem.beta, max_lag))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let theta = problem.field.constants(1.0).map_or(1.0, |c| c.theta);
    let driver_verdicts = ws
        .pyramids
        .iter()
        .map(|p| condition_sums(p, theta * problem.beta).map(|r| r.verdict))
        .collect::<Result<Vec<_>>>()?;

    Ok(OdeSolution {
        level: l,
        integration_level: k_int,
        times: (0..=total).map(|j| grid_point(j, l)).collect(),
        values: y,
        windows,
        residual,
        residual_level,
        converged,
        holder,
        driver_verdicts,
    })
}

/// Plug-in values of the boundedness lemma for the component integrands.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub theta: f64,
    pub radius: f64,
    pub exponents: Exponents,
    /// `sup_ξ |f_ij(·, ξ), H_θβ|` bounds at the horizon, row-major.
    pub components: Vec<f64>,
    /// `|x_j, H_α|` lower bounds from the pair scan.
    pub driver_holder: Vec<f64>,
    /// `|x_j, G_{β0, γ}|` estimates.
    pub driver_g: Vec<f64>,
    /// Contraction factor `Σ_ij B_ij |x_j, G| T^{γ − β(1−θ)}` at the horizon.
    pub factor: f64,
    /// Largest `T 2^-n` where the factor is at most 1/2.
    pub suggested_window: f64,
}

pub fn picard_bounds(problem: &OdeProblem, y_seminorm: f64) -> Result<BoundReport> {
    problem.validate()?;
    if !(y_seminorm >= 0.0 && y_seminorm.is_finite()) {
        return Err(Error::InvalidParameter("y_seminorm must be finite and non-negative"));
    }
    let (alpha, beta, big_t) = (problem.alpha, problem.beta, problem.horizon);
    let x_sup = problem
        .drivers
        .iter()
        .map(|p| {
            let (lo, hi) = p.min_max();
            lo.abs().max(hi.abs())
        })
        .fold(0.0, f64::max);
    let y_sup = problem.y0.iter().fold(0.0f64, |m, v| m.max(v.abs())) + y_seminorm * big_t.powf(beta);
    let radius = x_sup.max(y_sup);
    let consts = problem.field.constants(radius).ok_or(Error::MissingConstants)?;
    let (m, d) = (problem.state_dim(), problem.driver_dim());
    if consts.components.len() != m * d {
        return Err(Error::DimensionMismatch("field constants"));
    }
    let theta = consts.theta;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter("theta must lie in (0, 1]"));
    }
    let exponents = Exponents::default_for(beta, theta);
    let driver_holder: Vec<f64> = problem
        .drivers
        .iter()
        .map(|p| p.holder_seminorm(alpha, p.level().min(10)).map(|h| h.seminorm_lower_bound))
        .collect::<Result<_>>()?;
    let driver_g: Vec<f64> = problem
        .drivers
        .iter()
        .map(|p| g_norm(&p.pyramid(), exponents.beta0, exponents.gamma, &GNormConfig::default()).map(|g| g.value))
        .collect::<Result<_>>()?;
    let x_holder = driver_holder.iter().fold(0.0f64, |a, b| a.max(*b));
    let bound = |c: &ComponentConstants, t: f64| {
        c.t * t.powf(theta * (1.0 - beta)) + c.y * y_seminorm + c.x * x_holder * t.powf(theta * (alpha - beta))
    };
    let factor_at = |t: f64| {
        let p = exponents.gamma - beta * (1.0 - theta);
        consts
            .components
            .iter()
            .enumerate()
            .map(|(c, k)| bound(k, t) * driver_g[c % d] * t.powf(p))
            .sum::<f64>()
    };
    let components = consts.components.iter().map(|c| bound(c, big_t)).collect();
    let factor = factor_at(big_t);
    let mut suggested = big_t;
    for _ in 0..40 {
        if factor_at(suggested) <= 0.5 {
            break;
        }
        suggested *= 0.5;
    }
    Ok(BoundReport {
        theta,
        radius,
        exponents,
        components,
        driver_holder,
        driver_g,
        factor,
        suggested_window: suggested,
    })
}

/// Input and output distances between two solved problems.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuityReport {
    pub y0_gap: f64,
    pub driver_sup_gap: f64,
    pub driver_holder_gap: f64,
    pub driver_g_gap: f64,
    /// `max |F − F̃|` along the first solution and driver, over grid points.
    pub field_sup_gap: f64,
    pub input_distance: f64,
    pub output_sup: f64,
    /// Pair-scan lower bound of `|y − ỹ, H_β|`, worst component.
    pub output_holder: f64,
    /// `output_sup / input_distance`; NaN when the inputs coincide.
    pub ratio: f64,
}

fn path_gap(a: &DyadicPath, b: &DyadicPath) -> Result<DyadicPath> {
    let level = a.level().min(b.level());
    let (a, b) = (a.coarsen(level)?, b.coarsen(level)?);
    DyadicPath::new(a.samples().iter().zip(b.samples()).map(|(x, y)| x - y).collect(), level)
}

pub fn continuity_experiment(a: &OdeProblem, b: &OdeProblem, cfg: &SolverConfig) -> Result<ContinuityReport> {
    if a.state_dim() != b.state_dim() || a.driver_dim() != b.driver_dim() {
        return Err(Error::DimensionMismatch("problems must share dimensions"));
    }
    if a.horizon != b.horizon {
        return Err(Error::InvalidParameter("problems must share the horizon"));
    }
    let sa = solve(a, cfg)?;
    let sb = solve(b, cfg)?;
    if sa.level != sb.level {
        return Err(Error::InvalidParameter("solutions landed on different grids"));
    }
    let beta = a.beta;
    let theta = a.field.constants(1.0).map_or(1.0, |c| c.theta);
    let ex = Exponents::default_for(beta, theta);
    let y0_gap = a.y0.iter().zip(&b.y0).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let (mut sup_gap, mut hol_gap, mut g_gap) = (0.0f64, 0.0f64, 0.0f64);
    for (x, z) in a.drivers.iter().zip(&b.drivers) {
        let gap = path_gap(x, z)?;
        let (lo, hi) = gap.min_max();
        sup_gap = sup_gap.max(lo.abs().max(hi.abs()));
        hol_gap = hol_gap.max(gap.holder_seminorm(a.alpha, gap.level().min(10))?.seminorm_lower_bound);
        g_gap = g_gap.max(g_norm(&gap.pyramid(), ex.beta0, ex.gamma, &GNormConfig::default())?.value);
    }
    let (m, d) = (a.state_dim(), a.driver_dim());
    let mut field_gap = 0.0f64;
    let mut ys = vec![0.0; m];
    let mut xs = vec![0.0; d];
    for (n, &t) in sa.times.iter().enumerate() {
        for (i, v) in ys.iter_mut().enumerate() {
            *v = sa.values[i][n];
        }
        for (j, v) in xs.iter_mut().enumerate() {
            *v = a.drivers[j].eval(t);
        }
        for i in 0..m {
            for j in 0..d {
                let g = (a.field.eval(i, j, t, &ys, &xs) - b.field.eval(i, j, t, &ys, &xs)).abs();
                field_gap = field_gap.max(g);
            }
        }
    }
    let mut output_sup = 0.0f64;
    let mut output_holder = 0.0f64;
    for (u, v) in sa.values.iter().zip(&sb.values) {
        let diff: Vec<f64> = u.iter().zip(v).map(|(p, q)| p - q).collect();
        output_sup = diff.iter().fold(output_sup, |m, x| m.max(x.abs()));
        if diff.len() == (1usize << sa.level) + 1 {
            let h = holder_seminorm(&diff, sa.level, beta, sa.level.min(8))?;
            output_holder = output_holder.max(h.seminorm_lower_bound);
        }
    }
    let input_distance = y0_gap + sup_gap + hol_gap + g_gap + field_gap;
    Ok(ContinuityReport {
        y0_gap,
        driver_sup_gap: sup_gap,
        driver_holder_gap: hol_gap,
        driver_g_gap: g_gap,
        field_sup_gap: field_gap,
        input_distance,
        output_sup,
        output_holder,
        ratio: if input_distance > 0.0 {
            output_sup / input_distance
        } else {
            f64::NAN
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepEntry {
    pub epsilon: f64,
    pub report: ContinuityReport,
    /// `output_sup / ε`.
    pub scaled_output: f64,
}

/// Runs [`continuity_experiment`] against `perturb(ε)` for each `ε`.
pub fn continuity_sweep<P>(base: &OdeProblem, mut perturb: P, epsilons: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepEntry>>
where
    P: FnMut(f64) -> Result<OdeProblem>,
{
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter("perturbation sizes must be positive"));
            }
            let other = perturb(eps)?;
            let report = continuity_experiment(base, &other, cfg)?;
            Ok(SweepEntry {
                epsilon: eps,
                scaled_output: report.output_sup / eps,
                report,
            })
        })
        .collect()
}
