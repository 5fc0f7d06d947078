//! Green-formula evaluation, integration by parts and Itô/Stratonovich sums.

use alloc::vec::Vec;

use crate::generate;
use crate::integrator::{integrate_state_only, Dependence, Integrand};
use crate::path::{grid_point, DyadicPath};
use crate::quadrature::{self, QuadratureConfig};
use crate::stats::{pairwise_sum, EnsembleStats};
use crate::{Error, Result};

/// Outer integrals over `[0, s]` are split into pieces no finer than this
/// level, and no finer than the path grid.
pub const OUTER_LEVEL: u32 = 12;

/// `∫_0^s f(t, g(t)) dg(t)` in the reduced Green form
///
/// ```text
/// total = -∫_0^s ∫_{ℓ(t)}^{g(t)} ∂_t f(t, x) dx dt + (g(s)/s) ∫_0^s f(t, ℓ(t)) dt
/// ```
///
/// with the chord `ℓ(t) = g(s) t / s`. Paths with `g(0) != 0` are shifted to
/// start at 0 and the integrand is shifted accordingly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreenEvaluation {
    pub s: f64,
    pub chord_slope: f64,
    /// The double integral, before the minus sign.
    pub area_term: f64,
    pub chord_term: f64,
    pub total: f64,
    /// True when the `t`-partial vanishes and the area term was not computed.
    pub area_skipped: bool,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::BadInterval { a: 0.0, b: s });
    }
    Ok(())
}

/// Adaptive integral of `h` over `[0, s]`, split at the dyadic points of
/// level `min(K, OUTER_LEVEL)` so kinks of the path sit at piece boundaries.
fn outer<F: FnMut(f64) -> Result<f64>>(
    mut h: F,
    path_level: u32,
    s: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let level = path_level.min(OUTER_LEVEL);
    let pieces = (s * (1u64 << level) as f64).ceil() as usize;
    let mut parts = Vec::with_capacity(pieces);
    let mut failure = None;
    for i in 0..pieces {
        let lo = grid_point(i, level);
        let hi = grid_point(i + 1, level).min(s);
        if hi <= lo {
            continue;
        }
        let v = quadrature::integrate(
            |t| match h(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            quad,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        parts.push(v);
    }
    Ok(pairwise_sum(&parts))
}

pub fn green_eval<I: Integrand + ?Sized>(
    f: &I,
    path: &DyadicPath,
    s: f64,
    quad: &QuadratureConfig,
) -> Result<GreenEvaluation> {
    check_s(s)?;
    let state_only = f.dependence() == Dependence::StateOnly;
    if !state_only && !f.has_dt_partial() {
        return Err(Error::MissingDerivative);
    }
    let g0 = path.start();
    let gs = path.eval(s) - g0;
    let slope = gs / s;
    let k = path.level();
    let chord_term = slope * outer(|t| Ok(f.eval(t, slope * t + g0)), k, s, quad)?;
    let area_term = if state_only {
        0.0
    } else {
        outer(
            |t| {
                let lo = slope * t + g0;
                let hi = path.eval(t);
                quadrature::integrate(|x| f.dt_partial(t, x), lo, hi, quad)
            },
            k,
            s,
            quad,
        )?
    };
    Ok(GreenEvaluation {
        s,
        chord_slope: slope,
        area_term,
        chord_term,
        total: chord_term - area_term,
        area_skipped: state_only,
    })
}

/// `∫_0^s φ dg = φ(s) g(s) - φ(0) g(0) - ∫_0^s g φ' dt`.
pub fn integration_by_parts<F, D>(phi: F, dphi: D, path: &DyadicPath, s: f64, quad: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    check_s(s)?;
    let inner = outer(|t| Ok(path.eval(t) * dphi(t)), path.level(), s, quad)?;
    Ok(phi(s) * path.eval(s) - phi(0.0) * path.start() - inner)
}

/// Evaluation point of a Riemann sum over `[t_j, t_{j+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    /// `φ(g(t_j))`, the Itô sum.
    #[default]
    LeftPoint,
    /// `φ((g(t_j) + g(t_{j+1})) / 2)`, the Stratonovich sum.
    Midpoint,
}

/// `Σ φ(·)(g(t_{j+1}) - g(t_j))` on the grid of step `2^-level` up to `s`; a
/// final partial step ends at `s` itself.
pub fn ito_reference<F: Fn(f64) -> f64>(phi: F, path: &DyadicPath, s: f64, level: u32, scheme: Scheme) -> Result<f64> {
    check_s(s)?;
    if level == 0 || level > path.level() {
        return Err(Error::LevelOutOfRange {
            level,
            min: 1,
            max: path.level(),
        });
    }
    let stride = 1usize << (path.level() - level);
    let v = path.samples();
    let full = (s * (1u64 << level) as f64).floor() as usize;
    let mut terms = Vec::with_capacity(full + 1);
    let term = |a: f64, b: f64| match scheme {
        Scheme::LeftPoint => phi(a) * (b - a),
        Scheme::Midpoint => phi(0.5 * (a + b)) * (b - a),
    };
    for j in 0..full {
        terms.push(term(v[j * stride], v[(j + 1) * stride]));
    }
    let t_end = grid_point(full, level);
    if t_end < s {
        terms.push(term(v[full * stride], path.eval(s)));
    }
    Ok(pairwise_sum(&terms))
}

/// Per-path pieces of the Itô correction identity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ItoResidual {
    /// `∫_{g(0)}^{g(s)} φ`.
    pub pathwise: f64,
    pub ito: f64,
    pub stratonovich: f64,
    /// `½ ∫_0^s φ'(g(τ)) dτ`.
    pub correction: f64,
    /// `pathwise - ito - correction`.
    pub residual: f64,
}

pub fn ito_residual<F, D>(phi: F, dphi: D, path: &DyadicPath, s: f64, level: u32, quad: &QuadratureConfig) -> Result<ItoResidual>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let pathwise = integrate_state_only(&phi, path, 0.0, s, quad)?;
    let ito = ito_reference(&phi, path, s, level, Scheme::LeftPoint)?;
    let stratonovich = ito_reference(&phi, path, s, level, Scheme::Midpoint)?;
    let correction = 0.5 * outer(|t| Ok(dphi(path.eval(t))), path.level(), s, quad)?;
    Ok(ItoResidual {
        pathwise,
        ito,
        stratonovich,
        correction,
        residual: pathwise - ito - correction,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ItoReport {
    pub s: f64,
    pub path_level: u32,
    pub sum_level: u32,
    pub seed: u64,
    pub mean_abs_residual: f64,
    pub max_abs_residual: f64,
    /// Mean of `|pathwise - stratonovich|`.
    pub mean_abs_stratonovich_gap: f64,
    pub residual_stats: EnsembleStats,
    pub residuals: Vec<ItoResidual>,
}

impl ItoReport {
    /// Aggregates residuals in the given (seed) order.
    pub fn from_residuals(residuals: Vec<ItoResidual>, s: f64, path_level: u32, sum_level: u32, seed: u64) -> Self {
        let abs: Vec<f64> = residuals.iter().map(|r| r.residual.abs()).collect();
        let raw: Vec<f64> = residuals.iter().map(|r| r.residual).collect();
        let strat: Vec<f64> = residuals.iter().map(|r| (r.pathwise - r.stratonovich).abs()).collect();
        let n = residuals.len().max(1) as f64;
        Self {
            s,
            path_level,
            sum_level,
            seed,
            mean_abs_residual: pairwise_sum(&abs) / n,
            max_abs_residual: abs.iter().fold(0.0, |m: f64, &v| m.max(v)),
            mean_abs_stratonovich_gap: pairwise_sum(&strat) / n,
            residual_stats: EnsembleStats::from_samples(&raw),
            residuals,
        }
    }
}

/// Residuals over Brownian paths with seeds `seed, seed + 1, ...`; the
/// sums use the finest grid.
pub fn ito_compare<F, D>(
    phi: F,
    dphi: D,
    n_paths: usize,
    path_level: u32,
    seed: u64,
    s: f64,
    quad: &QuadratureConfig,
) -> Result<ItoReport>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive"));
    }
    let mut out = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let g = generate::brownian(path_level, crate::diagnostics::ensemble_seed(seed, i))?;
        out.push(ito_residual(&phi, &dphi, &g, s, path_level, quad)?);
    }
    Ok(ItoReport::from_residuals(out, s, path_level, path_level, seed))
}
