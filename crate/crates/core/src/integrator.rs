//! Staircase line integrals and their limit.
//!
//! At level `k` the staircase through the averages `h[k][n]` is integrated as
//!
//! ```text
//! S_k = Σ_{n = first+1}^{last} ∫_{h[k][n-1]}^{h[k][n]} f(t_{k,n}, x) dx
//! ```
//!
//! where `first..=last` are the level-`k` cells whose parent cell lies in
//! `[a, b]` (see [`index_range`]). [`integrate`] by default also adds the two
//! vertical connectors `∫_{g(a)}^{h_first} f(a, x) dx` and
//! `∫_{h_last}^{g(b)} f(b, x) dx`, so the staircase joins the actual path
//! endpoints. The limit is the same; the connectors make state-only
//! integrands exact at every level and additivity exact at dyadic points.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{mu_with, GapTable, SeriesTail};
use crate::path::{grid_point, AveragePyramid, DyadicPath, HolderEstimate};
use crate::quadrature::{self, QuadratureConfig};
use crate::stats::pairwise_sum;
use crate::{Error, Result};

/// Which arguments an integrand actually uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Dependence {
    TimeOnly,
    StateOnly,
    #[default]
    Both,
}

/// Declared Hölder regularity in `t`, uniform in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeHolder {
    pub beta: f64,
    /// `sup_x |f(·, x), H_β|`.
    pub constant: f64,
}

/// A two-argument integrand `f(t, x)`.
pub trait Integrand {
    fn eval(&self, t: f64, x: f64) -> f64;

    fn dependence(&self) -> Dependence {
        Dependence::Both
    }

    fn has_dt_partial(&self) -> bool {
        false
    }

    /// `∂f/∂t`; only meaningful when [`has_dt_partial`](Self::has_dt_partial).
    fn dt_partial(&self, _t: f64, _x: f64) -> f64 {
        f64::NAN
    }

    fn time_holder(&self) -> Option<TimeHolder> {
        None
    }

    fn sup_bound(&self) -> Option<f64> {
        None
    }
}

type Fn2 = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Closure-backed [`Integrand`] with optional metadata.
pub struct ScalarField {
    eval: Fn2,
    dt: Option<Fn2>,
    dependence: Dependence,
    holder: Option<TimeHolder>,
    sup: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dependence", &self.dependence)
            .field("dt_partial", &self.dt.is_some())
            .field("holder", &self.holder)
            .field("sup_bound", &self.sup)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self {
            eval: Box::new(f),
            dt: None,
            dependence: Dependence::Both,
            holder: None,
            sup: None,
        }
    }

    /// `f(t, x) = φ(t)`.
    pub fn time_only<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        let mut s = Self::new(move |t, _| f(t));
        s.dependence = Dependence::TimeOnly;
        s
    }

    /// `f(t, x) = φ(x)`; the `t`-partial is identically zero.
    pub fn state_only<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        let mut s = Self::new(move |_, x| f(x));
        s.dependence = Dependence::StateOnly;
        s.dt = Some(Box::new(|_, _| 0.0));
        s.holder = Some(TimeHolder {
            beta: 1.0,
            constant: 0.0,
        });
        s
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Self::state_only(move |_| c);
        s.sup = Some(c.abs());
        s
    }

    pub fn with_dt_partial<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(mut self, d: F) -> Self {
        self.dt = Some(Box::new(d));
        self
    }

    pub fn with_time_holder(mut self, beta: f64, constant: f64) -> Self {
        self.holder = Some(TimeHolder { beta, constant });
        self
    }

    pub fn with_sup_bound(mut self, sup: f64) -> Self {
        self.sup = Some(sup);
        self
    }

    pub fn with_dependence(mut self, d: Dependence) -> Self {
        self.dependence = d;
        self
    }
}

impl Integrand for ScalarField {
    fn eval(&self, t: f64, x: f64) -> f64 {
        (self.eval)(t, x)
    }

    fn dependence(&self) -> Dependence {
        self.dependence
    }

    fn has_dt_partial(&self) -> bool {
        self.dt.is_some()
    }

    fn dt_partial(&self, t: f64, x: f64) -> f64 {
        self.dt.as_ref().map_or(f64::NAN, |d| d(t, x))
    }

    fn time_holder(&self) -> Option<TimeHolder> {
        self.holder
    }

    fn sup_bound(&self) -> Option<f64> {
        self.sup
    }
}

impl<I: Integrand + ?Sized> Integrand for &I {
    fn eval(&self, t: f64, x: f64) -> f64 {
        (**self).eval(t, x)
    }
    fn dependence(&self) -> Dependence {
        (**self).dependence()
    }
    fn has_dt_partial(&self) -> bool {
        (**self).has_dt_partial()
    }
    fn dt_partial(&self, t: f64, x: f64) -> f64 {
        (**self).dt_partial(t, x)
    }
    fn time_holder(&self) -> Option<TimeHolder> {
        (**self).time_holder()
    }
    fn sup_bound(&self) -> Option<f64> {
        (**self).sup_bound()
    }
}

/// Level-`k` cells `first..=last` whose parent cell lies in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexRange {
    pub k: u32,
    pub first: usize,
    pub last: usize,
}

/// `Ok(None)` when no parent cell fits in `[a, b]`.
pub fn index_range(a: f64, b: f64, k: u32) -> Result<Option<IndexRange>> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::BadInterval { a, b });
    }
    if k == 0 || k > crate::path::MAX_LEVEL {
        return Err(Error::LevelOutOfRange {
            level: k,
            min: 1,
            max: crate::path::MAX_LEVEL,
        });
    }
    let scale = (1u64 << (k - 1)) as f64;
    let p_lo = (a * scale).ceil() as i64;
    let p_hi = (b * scale).floor() as i64 - 1;
    if p_hi < p_lo {
        return Ok(None);
    }
    Ok(Some(IndexRange {
        k,
        first: 2 * p_lo as usize,
        last: 2 * p_hi as usize + 1,
    }))
}

fn inner<I: Integrand + ?Sized>(f: &I, t: f64, x0: f64, x1: f64, quad: &QuadratureConfig) -> Result<f64> {
    if x0 == x1 {
        return Ok(0.0);
    }
    if f.dependence() == Dependence::TimeOnly {
        let v = f.eval(t, x0);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { t, x: x0 });
        }
        return Ok(v * (x1 - x0));
    }
    quadrature::integrate(|x| f.eval(t, x), x0, x1, quad).map_err(|e| match e {
        Error::NonFiniteIntegrand { t: x, .. } => Error::NonFiniteIntegrand { t, x },
        other => other,
    })
}

fn time_values<I: Integrand + ?Sized>(f: &I, k: u32, from: usize, to: usize) -> Result<Vec<f64>> {
    (from..=to)
        .map(|n| {
            let t = grid_point(n, k);
            let v = f.eval(t, 0.0);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteIntegrand { t, x: 0.0 })
            }
        })
        .collect()
}

/// Sum over `n = first+1..=last` of `φ(t_n)(h_n - h_{n-1})`, written by
/// summation by parts so that constant `φ` telescopes exactly.
fn time_only_sum(phi: &[f64], h: &[f64]) -> f64 {
    // phi[i] and h[i] belong to n = first + i
    let m = h.len() - 1;
    if m == 0 {
        return 0.0;
    }
    let mid: Vec<f64> = (1..m).map(|i| h[i] * (phi[i + 1] - phi[i])).collect();
    phi[m] * h[m] - phi[1] * h[0] - pairwise_sum(&mid)
}

fn level_row(p: &AveragePyramid, k: u32) -> Result<&[f64]> {
    if k == 0 || k >= p.depth() {
        return Err(Error::LevelOutOfRange {
            level: k,
            min: 1,
            max: p.depth().saturating_sub(1),
        });
    }
    p.level(k)
}

/// The level-`k` sum exactly as displayed above, without connectors.
pub fn staircase_integral<I: Integrand + ?Sized>(
    f: &I,
    p: &AveragePyramid,
    a: f64,
    b: f64,
    k: u32,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let h = level_row(p, k)?;
    let r = index_range(a, b, k)?.ok_or(Error::EmptyLevel { level: k, a, b })?;
    literal_sum(f, h, r, quad)
}

fn literal_sum<I: Integrand + ?Sized>(f: &I, h: &[f64], r: IndexRange, quad: &QuadratureConfig) -> Result<f64> {
    let hs = &h[r.first..=r.last];
    if f.dependence() == Dependence::TimeOnly {
        let phi = time_values(f, r.k, r.first, r.last)?;
        return Ok(time_only_sum(&phi, hs));
    }
    let cells = (r.first + 1..=r.last)
        .map(|n| inner(f, grid_point(n, r.k), h[n - 1], h[n], quad))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&cells))
}

/// Level-`k` sum with the endpoint connectors.
pub fn closed_staircase_integral<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    p: &AveragePyramid,
    a: f64,
    b: f64,
    k: u32,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let h = level_row(p, k)?;
    let r = index_range(a, b, k)?.ok_or(Error::EmptyLevel { level: k, a, b })?;
    let body = literal_sum(f, h, r, quad)?;
    let left = inner(f, a, path.eval(a), h[r.first], quad)?;
    let right = inner(f, b, h[r.last], path.eval(b), quad)?;
    Ok(left + body + right)
}

/// Closed level-`k` staircase integrals over `[0, t_j]` for every grid point
/// `t_j = j 2^-grid_level`; entry 0 is 0. Needs `grid_level < k`.
pub fn staircase_prefix<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    p: &AveragePyramid,
    k: u32,
    grid_level: u32,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    staircase_prefix_window(f, path, p, k, grid_level, 0, 1usize << grid_level, quad)
}

/// As [`staircase_prefix`] but over `[t_{j0}, t_j]` for `j = j0..=j1`.
#[allow(clippy::too_many_arguments)]
pub fn staircase_prefix_window<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    p: &AveragePyramid,
    k: u32,
    grid_level: u32,
    j0: usize,
    j1: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let h = level_row(p, k)?;
    if grid_level >= k {
        return Err(Error::LevelOutOfRange {
            level: grid_level,
            min: 0,
            max: k - 1,
        });
    }
    if j0 > j1 || j1 > (1usize << grid_level) {
        return Err(Error::BadInterval {
            a: grid_point(j0, grid_level),
            b: grid_point(j1, grid_level),
        });
    }
    let stride = 1usize << (k - grid_level);
    let first = j0 * stride;
    let end = if j1 == 0 { 0 } else { j1 * stride - 1 };
    // cells[i] is the cell n = first + 1 + i
    let cells: Vec<f64> = if end <= first {
        Vec::new()
    } else if f.dependence() == Dependence::TimeOnly {
        let phi = time_values(f, k, first + 1, end)?;
        (first + 1..=end).map(|n| phi[n - first - 1] * (h[n] - h[n - 1])).collect()
    } else {
        (first + 1..=end)
            .map(|n| inner(f, grid_point(n, k), h[n - 1], h[n], quad))
            .collect::<Result<_>>()?
    };
    let t0 = grid_point(j0, grid_level);
    let left = inner(f, t0, path.eval(t0), h[first], quad)?;
    let mut out = Vec::with_capacity(j1 - j0 + 1);
    out.push(0.0);
    let mut acc = left;
    let mut n = first;
    for j in j0 + 1..=j1 {
        let last = j * stride - 1;
        // the block of cells since the previous grid point, summed pairwise
        acc += pairwise_sum(&cells[n - first..last - first]);
        n = last;
        let t = grid_point(j, grid_level);
        out.push(acc + inner(f, t, h[last], path.eval(t), quad)?);
    }
    Ok(out)
}

/// Options for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceConfig {
    pub min_level: u32,
    /// Defaults to `K - 2`.
    pub max_level: Option<u32>,
    /// Absolute tolerance on consecutive level differences.
    pub tol: f64,
    pub quad: QuadratureConfig,
    /// Add the endpoint connectors.
    pub closure: bool,
    /// Hölder estimate of the path, used for the error bound.
    pub path_holder: Option<HolderEstimate>,
    /// Keep refining after convergence, up to `max_level`.
    pub exhaust_levels: bool,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            min_level: 4,
            max_level: None,
            tol: 1e-8,
            quad: QuadratureConfig::default(),
            closure: true,
            path_holder: None,
            exhaust_levels: false,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive"));
        }
        if self.min_level == 0 {
            return Err(Error::InvalidParameter("min_level must be at least 1"));
        }
        self.quad.validate()
    }

    fn level_span(&self, path_level: u32) -> Result<(u32, u32)> {
        let cap = path_level.saturating_sub(2);
        let hi = self.max_level.map_or(cap, |m| m.min(cap));
        if path_level < self.min_level + 2 || hi < self.min_level {
            return Err(Error::ResolutionTooCoarse {
                need: self.min_level + 2,
                have: path_level,
            });
        }
        Ok((self.min_level, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelValue {
    pub k: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralResult {
    pub value: f64,
    pub level_values: Vec<LevelValue>,
    /// Bound from the integrand and path regularity, when both are declared.
    pub error_estimate: Option<f64>,
    pub converged: bool,
    pub levels_used: (u32, u32),
    pub closure: bool,
}

/// Staircase limit over `[a, b]`.
pub fn integrate<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    a: f64,
    b: f64,
    cfg: &ConvergenceConfig,
) -> Result<IntegralResult> {
    integrate_on(f, path, &path.pyramid(), a, b, cfg)
}

/// As [`integrate`] with a precomputed pyramid of `path`.
pub fn integrate_on<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    p: &AveragePyramid,
    a: f64,
    b: f64,
    cfg: &ConvergenceConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::BadInterval { a, b });
    }
    let (lo, hi) = cfg.level_span(path.level())?;
    let mut values: Vec<LevelValue> = Vec::new();
    let mut small = 0;
    let mut converged = false;
    for k in lo..=hi {
        if index_range(a, b, k)?.is_none() {
            continue;
        }
        let v = if cfg.closure {
            closed_staircase_integral(f, path, p, a, b, k, &cfg.quad)?
        } else {
            staircase_integral(f, p, a, b, k, &cfg.quad)?
        };
        if let Some(prev) = values.last() {
            if (v - prev.value).abs() < cfg.tol {
                small += 1;
            } else {
                small = 0;
            }
        }
        values.push(LevelValue { k, value: v });
        if small >= 2 {
            converged = true;
            if !cfg.exhaust_levels {
                break;
            }
        }
    }
    let last = values.last().ok_or(Error::EmptyLevel { level: hi, a, b })?;
    let first_k = values[0].k;
    Ok(IntegralResult {
        value: last.value,
        levels_used: (first_k, last.k),
        error_estimate: error_estimate(f, p, a, b, cfg.path_holder.as_ref()),
        converged,
        closure: cfg.closure,
        level_values: values,
    })
}

/// `|f, CH_β| μ(g, a, b, β) + 8 |f, C| |g, H_α| (b - a)^α`, when every
/// constant is declared. The factor 8 is a heuristic upper constant.
pub fn error_estimate<I: Integrand + ?Sized>(
    f: &I,
    p: &AveragePyramid,
    a: f64,
    b: f64,
    holder: Option<&HolderEstimate>,
) -> Option<f64> {
    let th = f.time_holder()?;
    let sup = f.sup_bound()?;
    let g = holder?;
    let mu = if th.constant == 0.0 {
        0.0
    } else {
        let beta = th.beta.min(1.0 - 1e-12);
        mu_with(&GapTable::new(p, SeriesTail::Truncated), a, b, beta).ok()?.value
    };
    Some(th.constant * mu + 8.0 * sup * g.seminorm_lower_bound * (b - a).powf(g.exponent))
}

/// `∫_{g(a)}^{g(b)} φ(x) dx`.
pub fn integrate_state_only<F: FnMut(f64) -> f64>(
    phi: F,
    path: &DyadicPath,
    a: f64,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(0.0 <= a && a <= b && b <= 1.0) {
        return Err(Error::BadInterval { a, b });
    }
    quadrature::integrate(phi, path.eval(a), path.eval(b), quad)
}

/// Integrand whose level-`k_max` staircase integral is the predicted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialIntegrand {
    /// `f` sampled on the path grid; piecewise linear at every level `< K`.
    pub samples: DyadicPath,
    pub predicted: f64,
    pub beta: f64,
    pub k_max: u32,
}

impl AdversarialIntegrand {
    pub fn field(&self) -> ScalarField {
        let s = self.samples.clone();
        ScalarField::time_only(move |t| s.eval(t))
    }
}

/// `f = Σ_{k=1}^{k_max-1} Σ_n f_{k,n}` with `f_{k,n}` the tent on
/// `[n 2^-k, (n+1) 2^-k]` peaking at the midpoint with value
/// `2^{-(k+1)β} sign(h[k+1][2n+1] - h[k+1][2n])` (0 on ties).
pub fn adversarial_integrand(p: &AveragePyramid, beta: f64, k_max: u32) -> Result<AdversarialIntegrand> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter("beta must lie in (0, 1)"));
    }
    let big_k = p.source_resolution();
    if k_max < 2 || k_max + 2 > big_k {
        return Err(Error::LevelOutOfRange {
            level: k_max,
            min: 2,
            max: big_k.saturating_sub(2),
        });
    }
    let n = 1usize << big_k;
    let mut s = alloc::vec![0.0; n + 1];
    let mut predicted = Vec::new();
    for k in 1..k_max {
        let child = p.level(k + 1)?;
        let amp = (-((k + 1) as f64) * beta).exp2();
        let width = 1usize << (big_k - k);
        let half = width / 2;
        for c in 0..(1usize << k) {
            let d = child[2 * c + 1] - child[2 * c];
            predicted.push(amp * d.abs());
            let sign = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                continue;
            };
            let base = c * width;
            for u in 1..width {
                let tent = if u <= half { u } else { width - u };
                s[base + u] += sign * amp * tent as f64 / half as f64;
            }
        }
    }
    Ok(AdversarialIntegrand {
        samples: DyadicPath::new(s, big_k)?,
        predicted: pairwise_sum(&predicted),
        beta,
        k_max,
    })
}

/// Values of `t ↦ ∫_0^t f dg` on the grid `j 2^-grid_level`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndefiniteIntegral {
    pub grid_level: u32,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub converged: bool,
    pub levels_used: (u32, u32),
    /// Sup-norm difference between the last two levels.
    pub last_change: f64,
}

pub fn indefinite_integral<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    grid_level: u32,
    cfg: &ConvergenceConfig,
) -> Result<IndefiniteIntegral> {
    indefinite_integral_on(f, path, &path.pyramid(), grid_level, cfg)
}

pub fn indefinite_integral_on<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    p: &AveragePyramid,
    grid_level: u32,
    cfg: &ConvergenceConfig,
) -> Result<IndefiniteIntegral> {
    cfg.validate()?;
    let (lo, hi) = cfg.level_span(path.level())?;
    let lo = lo.max(grid_level + 1);
    if lo > hi {
        return Err(Error::ResolutionTooCoarse {
            need: grid_level + 3,
            have: path.level(),
        });
    }
    let mut prev: Option<Vec<f64>> = None;
    let mut small = 0;
    let mut converged = false;
    let mut change = f64::INFINITY;
    let mut used = lo;
    for k in lo..=hi {
        let cur = staircase_prefix(f, path, p, k, grid_level, &cfg.quad)?;
        if let Some(old) = &prev {
            change = old.iter().zip(&cur).fold(0.0, |m, (x, y)| m.max((x - y).abs()));
            small = if change < cfg.tol { small + 1 } else { 0 };
        }
        prev = Some(cur);
        used = k;
        if small >= 2 {
            converged = true;
            if !cfg.exhaust_levels {
                break;
            }
        }
    }
    let values = prev.unwrap_or_default();
    Ok(IndefiniteIntegral {
        grid_level,
        times: (0..values.len()).map(|j| grid_point(j, grid_level)).collect(),
        values,
        converged,
        levels_used: (lo, used),
        last_change: change,
    })
}
