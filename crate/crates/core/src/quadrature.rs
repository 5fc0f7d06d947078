//! One-dimensional Gauss–Legendre quadrature with bisection refinement.
//!
//! Every inner `∫ f(t, x) dx` of a staircase and the outer integrals of the
//! calculus module go through [`integrate`]. An interval is accepted when the
//! eight-point rule on it agrees with the sum of the rules on its halves.

use crate::{Error, Result};

const NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Tolerances for [`integrate`].
///
/// A piece `[a, b]` of the full interval `[lo, hi]` is accepted when the
/// bisection difference is below `abs_tol * (b - a) / (hi - lo)` or below
/// `rel_tol` times the piece estimate. `max_splits` caps the total number of
/// bisections for one call.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_splits: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-13,
            max_splits: 256,
        }
    }
}

impl QuadratureConfig {
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_splits: 20_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol >= 0.0) || self.max_splits == 0 {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive"));
        }
        Ok(())
    }
}

/// Fixed eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Adaptive integral of `f` over `[a, b]`; `b < a` flips the sign.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, cfg).map(|v| -v);
    }
    let density = cfg.abs_tol / (b - a);
    let rel = cfg.rel_tol.max(16.0 * f64::EPSILON);
    let mut splits = 0usize;
    let whole = gauss_legendre8(&mut f, a, b);
    let value = refine(&mut f, a, b, whole, density, rel, cfg.max_splits, &mut splits)?;
    if !value.is_finite() {
        return Err(locate_non_finite(&mut f, a, b));
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    density: f64,
    rel: f64,
    max_splits: usize,
    splits: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = gauss_legendre8(f, a, m);
    let right = gauss_legendre8(f, m, b);
    let halves = left + right;
    if !halves.is_finite() {
        return Ok(halves);
    }
    let err = (whole - halves).abs();
    if err <= density * (b - a) || err <= rel * halves.abs() || m <= a || m >= b {
        return Ok(halves);
    }
    if *splits >= max_splits {
        return Err(Error::QuadratureFailure { a, b, max_splits });
    }
    *splits += 1;
    let l = refine(f, a, m, left, density, rel, max_splits, splits)?;
    let r = refine(f, m, b, right, density, rel, max_splits, splits)?;
    Ok(l + r)
}

fn locate_non_finite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Error {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for x in NODES {
        for t in [mid - half * x, mid + half * x] {
            if !f(t).is_finite() {
                return Error::NonFiniteIntegrand { t, x: f64::NAN };
            }
        }
    }
    Error::NonFiniteIntegrand { t: mid, x: f64::NAN }
}
