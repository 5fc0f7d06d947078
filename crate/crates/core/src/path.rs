//! Paths sampled on the dyadic grid of `[0, 1]` and their cell averages.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Finest supported resolution. `2^28 + 1` samples is already 2 GiB.
pub const MAX_LEVEL: u32 = 28;

/// A continuous path on `[0, 1]` given by its values on the grid
/// `n * 2^-K`, `n = 0..=2^K`, and evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPath {
    level: u32,
    samples: Vec<f64>,
}

impl DyadicPath {
    pub fn new(samples: Vec<f64>, level: u32) -> Result<Self> {
        check_level(level)?;
        let expected = (1usize << level) + 1;
        if samples.len() != expected {
            return Err(Error::LengthMismatch {
                level,
                expected,
                actual: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { level, samples })
    }

    /// Samples `f` at every grid point of level `level`.
    pub fn from_fn<F: FnMut(f64) -> f64>(level: u32, mut f: F) -> Result<Self> {
        check_level(level)?;
        let n = 1usize << level;
        let samples = (0..=n).map(|i| f(grid_point(i, level))).collect();
        Self::new(samples, level)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Grid step `2^-K`.
    pub fn step(&self) -> f64 {
        grid_point(1, self.level)
    }

    pub fn start(&self) -> f64 {
        self.samples[0]
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// Piecewise-linear interpolant; `t` is clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.samples, self.level, t)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Samples of the same path at the coarser level `level`.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level > self.level || level == 0 {
            return Err(Error::LevelOutOfRange {
                level,
                min: 1,
                max: self.level,
            });
        }
        let stride = 1usize << (self.level - level);
        let samples = self.samples.iter().step_by(stride).copied().collect();
        Self::new(samples, level)
    }

    /// Pointwise map of the samples, for example scaling or shifting.
    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.samples.iter().copied().map(f).collect(), self.level)
    }

    pub fn pyramid(&self) -> AveragePyramid {
        AveragePyramid::new(self)
    }

    pub fn holder_seminorm(&self, alpha: f64, max_lag_levels: u32) -> Result<HolderEstimate> {
        holder_seminorm(&self.samples, self.level, alpha, max_lag_levels)
    }
}

fn check_level(level: u32) -> Result<()> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::BadResolution(level));
    }
    Ok(())
}

/// `n * 2^-level`, exact in binary floating point.
pub fn grid_point(n: usize, level: u32) -> f64 {
    n as f64 / (1u64 << level) as f64
}

/// Linear interpolation of grid samples at level `level`.
pub fn interpolate(samples: &[f64], level: u32, t: f64) -> f64 {
    let cells = samples.len() - 1;
    let u = t.clamp(0.0, 1.0) * (1u64 << level) as f64;
    let i = (u.floor() as usize).min(cells - 1);
    let frac = u - i as f64;
    if frac == 0.0 {
        samples[i]
    } else if frac == 1.0 {
        samples[i + 1]
    } else {
        samples[i] + frac * (samples[i + 1] - samples[i])
    }
}

/// Dyadic cell averages `h[k][n] = 2^k ∫ g` over `[n 2^-k, (n+1) 2^-k]` for
/// `k = 0..K-1`, exact for the interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragePyramid {
    source_level: u32,
    levels: Vec<Vec<f64>>,
    increments: Vec<f64>,
    endpoints: (f64, f64),
}

impl AveragePyramid {
    pub fn new(path: &DyadicPath) -> Self {
        let k = path.level;
        let s = &path.samples;
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(k as usize);
        let finest: Vec<f64> = (0..1usize << (k - 1))
            .map(|n| (s[2 * n] + 2.0 * s[2 * n + 1] + s[2 * n + 2]) * 0.25)
            .collect();
        levels.push(finest);
        while levels.last().map_or(0, Vec::len) > 1 {
            let child = levels.last().unwrap();
            let parent = child.chunks_exact(2).map(|c| (c[0] + c[1]) * 0.5).collect();
            levels.push(parent);
        }
        levels.reverse();
        let increments = s.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            source_level: k,
            levels,
            increments,
            endpoints: (path.start(), path.end()),
        }
    }

    /// Resolution `K` of the path the pyramid was built from.
    pub fn source_resolution(&self) -> u32 {
        self.source_level
    }

    /// Number of stored levels, `K`.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, k: u32) -> Result<&[f64]> {
        self.levels
            .get(k as usize)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level: k,
                min: 0,
                max: self.depth() - 1,
            })
    }

    /// `h[k][n]`; panics when out of range.
    pub fn get(&self, k: u32, n: usize) -> f64 {
        self.levels[k as usize][n]
    }

    /// Sample increments `g((i+1) 2^-K) - g(i 2^-K)` of the source path.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `(g(0), g(1))` of the source path.
    pub fn endpoints(&self) -> (f64, f64) {
        self.endpoints
    }
}

/// Lower bound for the Hölder-`alpha` seminorm from a scan of grid pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderEstimate {
    pub exponent: f64,
    pub seminorm_lower_bound: f64,
    pub max_lag_levels: u32,
    pub pairs_scanned: u64,
    /// Grid pair attaining the bound, `(s, t)` with `s < t`.
    pub argmax: (f64, f64),
}

/// Scans pairs `(t_{j,i}, t_{j,i+l})` for every level `j <= level` and lag
/// `1 <= l <= 2^max_lag_levels`. Each grid pair is visited at most once.
pub fn holder_seminorm(samples: &[f64], level: u32, alpha: f64, max_lag_levels: u32) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter("Hölder exponent must lie in (0, 1]"));
    }
    if samples.len() != (1usize << level) + 1 {
        return Err(Error::LengthMismatch {
            level,
            expected: (1usize << level) + 1,
            actual: samples.len(),
        });
    }
    let max_lag = 1usize << max_lag_levels.min(level);
    let mut best = 0.0;
    let mut argmax = (0.0, 1.0);
    let mut pairs = 0u64;
    let mut weights = Vec::with_capacity(max_lag + 1);
    for j in 0..=level {
        let stride = 1usize << (level - j);
        let cells = 1usize << j;
        let width = grid_point(1, j);
        let lags = max_lag.min(cells);
        weights.clear();
        weights.extend((0..=lags).map(|l| (l as f64 * width).powf(-alpha)));
        // lags up to half the next level's window were scanned there as 2l
        let skip = if j < level { max_lag.min(cells << 1) / 2 } else { 0 };
        for l in skip + 1..=lags {
            let w = weights[l];
            for i in 0..=cells - l {
                let d = (samples[(i + l) * stride] - samples[i * stride]).abs() * w;
                if d > best {
                    best = d;
                    argmax = (grid_point(i, j), grid_point(i + l, j));
                }
            }
            pairs += (cells - l + 1) as u64;
        }
    }
    Ok(HolderEstimate {
        exponent: alpha,
        seminorm_lower_bound: best,
        max_lag_levels,
        pairs_scanned: pairs,
        argmax,
    })
}
