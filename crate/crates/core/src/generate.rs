//! Path generators.
//!
//! Brownian paths use the Lévy midpoint construction. The value at `t = 1`
//! comes from stream 0 of a ChaCha8 generator seeded with `seed`, and the
//! midpoints of level `j` come from stream `j` in increasing `t`. A path at
//! resolution `K` therefore agrees with the same seed at any finer
//! resolution on the shared grid points.

use alloc::vec;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::path::{grid_point, DyadicPath};
use crate::{Error, Result};

pub fn brownian(level: u32, seed: u64) -> Result<DyadicPath> {
    if level == 0 || level > crate::path::MAX_LEVEL {
        return Err(Error::BadResolution(level));
    }
    let n = 1usize << level;
    let mut s = vec![0.0; n + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    s[n] = StandardNormal.sample(&mut rng);
    for j in 1..=level {
        rng.set_stream(j as u64);
        rng.set_word_pos(0);
        let sd = grid_point(1, j + 1).sqrt();
        let stride = 1usize << (level - j);
        for i in (stride..n).step_by(2 * stride) {
            let z: f64 = StandardNormal.sample(&mut rng);
            s[i] = 0.5 * (s[i - stride] + s[i + stride]) + sd * z;
        }
    }
    DyadicPath::new(s, level)
}

/// Parameters of the high-frequency oscillation path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatoryParams {
    pub alpha: f64,
    pub beta: f64,
    /// Frequency shift `A >= 0`.
    pub shift: f64,
    /// Number of packets `m = 1..=packets`.
    pub packets: u32,
}

impl OscillatoryParams {
    fn validate(&self) -> Result<()> {
        let (a, b) = (self.alpha, self.beta);
        if !(a > 0.0 && b > 0.0 && a + b < 1.0) {
            return Err(Error::BadExponents { alpha: a, beta: b });
        }
        if !(self.shift >= 0.0) || !self.shift.is_finite() {
            return Err(Error::InvalidParameter("shift must be finite and nonnegative"));
        }
        if self.packets == 0 {
            return Err(Error::InvalidParameter("at least one packet is required"));
        }
        Ok(())
    }

    /// Smallest integer `n_m >= (A + alpha m) / (1 - alpha)`.
    pub fn frequency(&self, m: u32) -> u32 {
        let x = (self.shift + self.alpha * m as f64) / (1.0 - self.alpha);
        let r = x.round();
        let n = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
        n.max(0.0) as u32
    }

    /// Tent level `N = n_m + m` of packet `m`.
    pub fn tent_level(&self, m: u32) -> u32 {
        self.frequency(m) + m
    }

    /// Resolution needed to sample every packet.
    pub fn required_level(&self) -> u32 {
        (1..=self.packets).map(|m| self.tent_level(m)).max().unwrap_or(0) + 2
    }
}

/// Sum of tent packets on `[2^-m, 2^-m+1]`: `2^{n_m}` tents of width `2^-N`
/// with peak `2^{-(N+1) alpha}` at their midpoints.
pub fn oscillatory(params: &OscillatoryParams, level: u32) -> Result<DyadicPath> {
    params.validate()?;
    let need = params.required_level();
    if level < need {
        return Err(Error::ResolutionTooCoarse { need, have: level });
    }
    if level > crate::path::MAX_LEVEL {
        return Err(Error::BadResolution(level));
    }
    let n = 1usize << level;
    let mut s = vec![0.0; n + 1];
    for m in 1..=params.packets.min(level) {
        let tl = params.tent_level(m);
        let peak = (-((tl + 1) as f64) * params.alpha).exp2();
        let per_tent = 1usize << (level - tl);
        let half = per_tent / 2;
        let lo = n >> m;
        let hi = lo << 1;
        for (i, v) in s.iter_mut().enumerate().take(hi).skip(lo) {
            let u = (i - lo) % per_tent;
            let d = if u <= half { u } else { per_tent - u };
            *v += peak * d as f64 / half as f64;
        }
    }
    DyadicPath::new(s, level)
}

/// Smallest level index used by the non-summable path.
pub fn counterexample_start(alpha: f64, beta: f64) -> Result<u32> {
    let gamma = alpha + beta;
    if !(alpha > 0.0 && beta > 0.0 && gamma < 1.0) {
        return Err(Error::BadExponents { alpha, beta });
    }
    let c = 4.0 / ((1.0 - gamma).exp2() - 1.0);
    Ok((c.log2() / gamma + 1.0).floor() as u32)
}

/// Hölder-`alpha` path whose Lévy-area series at exponent `beta` diverges:
/// on each `J_k = [r^k, r^{k-1}]`, `r = 2^{-(1-alpha-beta)}`, every level-`k`
/// cell in `J_k` carries a triangle of height `2^{-(k+1) alpha}` over its left
/// half. Levels with `k + 2 > K` are not representable and are dropped.
pub fn counterexample(alpha: f64, beta: f64, level: u32) -> Result<DyadicPath> {
    let k0 = counterexample_start(alpha, beta)?;
    if level < k0 + 4 {
        return Err(Error::ResolutionTooCoarse {
            need: k0 + 4,
            have: level,
        });
    }
    if level > crate::path::MAX_LEVEL {
        return Err(Error::BadResolution(level));
    }
    let r = (-(1.0 - alpha - beta)).exp2();
    let n = 1usize << level;
    let mut s = vec![0.0; n + 1];
    for k in k0 + 1..=level - 2 {
        let j_lo = r.powi(k as i32);
        let j_hi = r.powi(k as i32 - 1);
        let scale = (1u64 << k) as f64;
        let first = (j_lo * scale).ceil() as usize;
        let last = ((j_hi * scale).floor() as usize).min(1 << k);
        if last <= first {
            continue;
        }
        let height = (-((k + 1) as f64) * alpha).exp2();
        let cell = 1usize << (level - k);
        let quarter = cell / 4;
        for m in first..last {
            let base = m * cell;
            for u in 0..=2 * quarter {
                let d = if u <= quarter { u } else { 2 * quarter - u };
                s[base + u] = height * d as f64 / quarter as f64;
            }
        }
    }
    DyadicPath::new(s, level)
}

/// Smooth reference paths.
#[derive(Debug, Clone, Copy)]
pub enum Analytic {
    Linear,
    Square,
    Sine,
    Sqrt,
    Custom(fn(f64) -> f64),
}

impl Analytic {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Analytic::Linear => t,
            Analytic::Square => t * t,
            Analytic::Sine => t.sin(),
            Analytic::Sqrt => t.sqrt(),
            Analytic::Custom(f) => f(t),
        }
    }

    /// Derivative, where it has a closed form.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Analytic::Linear => Some(1.0),
            Analytic::Square => Some(2.0 * t),
            Analytic::Sine => Some(t.cos()),
            Analytic::Sqrt => Some(0.5 / t.sqrt()),
            Analytic::Custom(_) => None,
        }
    }
}

pub fn analytic(kind: Analytic, level: u32) -> Result<DyadicPath> {
    DyadicPath::from_fn(level, |t| kind.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn var(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn brownian_starts_at_zero_and_is_reproducible() {
        let a = brownian(10, 3).unwrap();
        assert_eq!(a.start(), 0.0);
        assert_eq!(a, brownian(10, 3).unwrap());
        assert_ne!(a, brownian(10, 4).unwrap());
    }

    #[test]
    fn brownian_refines_consistently() {
        let coarse = brownian(6, 11).unwrap();
        let fine = brownian(12, 11).unwrap();
        assert_eq!(fine.coarsen(6).unwrap(), coarse);
    }

    #[test]
    fn brownian_marginal_variances() {
        let n = 10_000;
        let paths: Vec<_> = (0..n).map(|s| brownian(2, s).unwrap()).collect();
        let end: Vec<f64> = paths.iter().map(|p| p.end()).collect();
        let mid: Vec<f64> = paths.iter().map(|p| p.samples()[2]).collect();
        // standard error of a sample variance is sigma^2 sqrt(2 / (n - 1))
        let se = (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var(&end) - 1.0).abs() < 3.0 * se);
        assert!((var(&mid) - 0.5).abs() < 3.0 * 0.5 * se);
    }

    #[test]
    fn brownian_disjoint_increments_uncorrelated() {
        let n = 10_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for s in 0..n {
            let p = brownian(3, s).unwrap();
            let v = p.samples();
            let x = v[2] - v[1];
            let y = v[7] - v[5];
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "{rho}");
    }

    #[test]
    fn oscillatory_support_and_count() {
        let p = OscillatoryParams {
            alpha: 0.45,
            beta: 0.45,
            shift: 0.0,
            packets: 1,
        };
        let nm = p.frequency(1);
        assert_eq!(nm, 1);
        let k = p.required_level();
        let g = oscillatory(&p, k).unwrap();
        let s = g.samples();
        let n = s.len() - 1;
        assert!(s[..n / 2].iter().all(|&v| v == 0.0));
        // one local maximum per tent
        let peaks = (1..n).filter(|&i| s[i] > s[i - 1] && s[i] > s[i + 1]).count();
        assert_eq!(peaks, 1 << nm);
    }

    #[test]
    fn oscillatory_rejects_bad_input() {
        let mut p = OscillatoryParams {
            alpha: 0.6,
            beta: 0.5,
            shift: 0.0,
            packets: 2,
        };
        assert!(matches!(oscillatory(&p, 20), Err(Error::BadExponents { .. })));
        p.beta = 0.3;
        let need = p.required_level();
        assert_eq!(
            oscillatory(&p, need - 1).unwrap_err(),
            Error::ResolutionTooCoarse {
                need,
                have: need - 1
            }
        );
    }

    #[test]
    fn oscillatory_frequency_rule() {
        let p = OscillatoryParams {
            alpha: 0.5,
            beta: 0.25,
            shift: 1.0,
            packets: 3,
        };
        for m in 1..=3 {
            let x = (1.0 + 0.5 * m as f64) / 0.5;
            let n = p.frequency(m) as f64;
            assert!(n >= x - 1e-9 && n < x + 1.0);
        }
        // integer boundary is kept, not pushed up by rounding
        assert_eq!(p.frequency(2), 4);
    }

    #[test]
    fn counterexample_start_level() {
        assert_eq!(counterexample_start(0.3, 0.3).unwrap(), 7);
        assert!(matches!(counterexample(0.6, 0.6, 20), Err(Error::BadExponents { .. })));
        assert!(matches!(
            counterexample(0.3, 0.3, 10),
            Err(Error::ResolutionTooCoarse { need: 11, have: 10 })
        ));
    }

    #[test]
    fn counterexample_is_nonnegative_with_expected_heights() {
        let g = counterexample(0.3, 0.3, 14).unwrap();
        let (lo, hi) = g.min_max();
        assert_eq!(lo, 0.0);
        assert!(hi <= (-(9.0 * 0.3f64)).exp2() + 1e-15);
    }

    #[test]
    fn analytic_values() {
        let l = analytic(Analytic::Linear, 4).unwrap();
        assert_eq!(l.samples()[3], 3.0 / 16.0);
        let sq = analytic(Analytic::Square, 4).unwrap();
        assert_eq!(sq.eval(0.75), 9.0 / 16.0);
        let s = analytic(Analytic::Sine, 4).unwrap();
        assert!((s.end() - 0.841_470_984_807_896_5).abs() < 1e-15);
    }
}
