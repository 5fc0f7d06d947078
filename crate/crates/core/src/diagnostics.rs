//! Functionals of the average pyramid that decide or bound integral existence.
//!
//! Everything here is built from the child gaps
//! `d[k][c] = |h[k+1][2c] - h[k+1][2c+1]|`, available for `k <= K - 2`.
//! The Lévy area between the level-`k` and level-`k+1` staircases is taken as
//! `|B_k| = 2^-(k+1) Σ_c d[k][c]`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::generate;
use crate::path::{grid_point, AveragePyramid};
use crate::stats::{pairwise_sum, EnsembleStats};
use crate::{Error, Result};

/// `sqrt(2 / (3π))`, the almost-sure limit of the Wiener statistic.
pub const WIENER_LIMIT: f64 = 0.460_658_865_961_780_6;

/// Levels below `K - WIENER_GUARD` are the only ones the Wiener statistic accepts.
pub const WIENER_GUARD: u32 = 6;

/// How infinite level sums are closed beyond the last resolved level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SeriesTail {
    /// Stop at level `K - 2`.
    #[default]
    Truncated,
    /// Treat the path as exactly piecewise linear on its grid: add level
    /// `K - 1` from the sample increments and the geometric tail of all finer
    /// levels, on which each level sums to half the total variation.
    Interpolant,
}

fn child_gaps(p: &AveragePyramid, k: u32) -> Vec<f64> {
    p.levels()[k as usize + 1]
        .chunks_exact(2)
        .map(|c| (c[0] - c[1]).abs())
        .collect()
}

fn check_gap_level(p: &AveragePyramid, k: u32) -> Result<()> {
    let max = p.depth().saturating_sub(2);
    if p.depth() < 2 || k > max {
        return Err(Error::LevelOutOfRange { level: k, min: 0, max });
    }
    Ok(())
}

/// Sum of child gaps at level `k`.
pub fn gap_sum(p: &AveragePyramid, k: u32) -> Result<f64> {
    check_gap_level(p, k)?;
    Ok(pairwise_sum(&child_gaps(p, k)))
}

/// Child gaps at every level with per-level prefix sums, for repeated
/// interval queries.
#[derive(Debug, Clone)]
pub struct GapTable {
    prefix: Vec<Vec<f64>>,
    /// Per-level sum for every level beyond the table, when the tail is used.
    tail_level_sum: Option<Vec<f64>>,
    source_level: u32,
}

impl GapTable {
    pub fn new(p: &AveragePyramid, tail: SeriesTail) -> Self {
        let rows = p.depth().saturating_sub(1);
        let mut prefix: Vec<Vec<f64>> = (0..rows).map(|k| prefix_of(&child_gaps(p, k))).collect();
        let mut tail_level_sum = None;
        if tail == SeriesTail::Interpolant {
            let inc = p.increments();
            let last: Vec<f64> = inc.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1]).abs()).collect();
            prefix.push(prefix_of(&last));
            let half: Vec<f64> = inc.iter().map(|d| 0.5 * d.abs()).collect();
            tail_level_sum = Some(prefix_of(&half));
        }
        Self {
            prefix,
            tail_level_sum,
            source_level: p.source_resolution(),
        }
    }

    /// Highest explicitly tabulated level.
    pub fn last_level(&self) -> Option<u32> {
        (self.prefix.len() as u32).checked_sub(1)
    }

    pub fn has_tail(&self) -> bool {
        self.tail_level_sum.is_some()
    }

    /// Sum of gaps of the level-`k` cells inside `[a, b]`.
    pub fn range_sum(&self, k: u32, a: f64, b: f64) -> f64 {
        let row = &self.prefix[k as usize];
        let cells = row.len() - 1;
        let scale = (1u64 << k) as f64;
        let lo = ((a * scale).ceil().max(0.0) as usize).min(cells);
        let hi = ((b * scale).floor().max(0.0) as usize).min(cells);
        if hi <= lo {
            0.0
        } else {
            row[hi] - row[lo]
        }
    }

    pub fn level_sum(&self, k: u32) -> f64 {
        *self.prefix[k as usize].last().unwrap()
    }

    /// Common per-level sum of all levels `>= K` restricted to grid cells in
    /// `[a, b]`, present with the interpolant tail.
    pub fn tail_sum(&self, a: f64, b: f64) -> Option<f64> {
        let row = self.tail_level_sum.as_ref()?;
        let cells = row.len() - 1;
        let scale = (1u64 << self.source_level) as f64;
        let lo = ((a * scale).ceil().max(0.0) as usize).min(cells);
        let hi = ((b * scale).floor().max(0.0) as usize).min(cells);
        Some(if hi <= lo { 0.0 } else { row[hi] - row[lo] })
    }
}

fn prefix_of(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// `|B_k|` for `k <= K - 2`.
pub fn levy_area(p: &AveragePyramid, k: u32) -> Result<f64> {
    Ok(grid_point(1, k + 1) * gap_sum(p, k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

/// Trend rule used for [`Verdict`].
pub const VERDICT_RULE: &str = "last 4 terms: nondecreasing => diverging; \
fitted geometric ratio < 0.95 (or all zero) => converging; otherwise inconclusive";

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesLevel {
    pub k: u32,
    /// `|B_{k-1}|`.
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub levy_area: f64,
    /// `2^{k(1-β)} |B_{k-1}|`.
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    pub beta: f64,
    pub levels: Vec<SeriesLevel>,
    pub verdict: Verdict,
    pub rule: String,
    pub truncation_level: u32,
    /// Geometric ratio fitted to the last four terms, when defined.
    pub fitted_ratio: Option<f64>,
}

impl DiagnosticsReport {
    pub fn terms(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.term).collect()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.partial_sum).collect()
    }
}

/// Terms `2^{k(1-β)} |B_{k-1}|` for `k = 1..=K-1` with partial sums and a
/// trend verdict.
pub fn condition_sums(p: &AveragePyramid, beta: f64) -> Result<DiagnosticsReport> {
    check_beta(beta)?;
    let mut levels = Vec::new();
    let mut partial = 0.0;
    for k in 1..p.depth() {
        let b = levy_area(p, k - 1)?;
        let term = (k as f64 * (1.0 - beta)).exp2() * b;
        partial += term;
        levels.push(SeriesLevel {
            k,
            levy_area: b,
            term,
            partial_sum: partial,
        });
    }
    let terms: Vec<f64> = levels.iter().map(|l| l.term).collect();
    let (verdict, fitted_ratio) = classify(&terms);
    Ok(DiagnosticsReport {
        beta,
        levels,
        verdict,
        rule: String::from(VERDICT_RULE),
        truncation_level: p.depth().saturating_sub(2),
        fitted_ratio,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter("beta must lie in (0, 1)"));
    }
    Ok(())
}

/// Applies [`VERDICT_RULE`] to the tail of a term sequence.
pub fn classify(terms: &[f64]) -> (Verdict, Option<f64>) {
    if terms.len() < 4 {
        return (Verdict::Inconclusive, None);
    }
    let tail = &terms[terms.len() - 4..];
    if tail.iter().all(|&t| t == 0.0) {
        return (Verdict::Converging, Some(0.0));
    }
    if tail.windows(2).all(|w| w[1] >= w[0]) {
        return (Verdict::Diverging, fit_ratio(tail));
    }
    match fit_ratio(tail) {
        Some(r) if r < 0.95 => (Verdict::Converging, Some(r)),
        Some(r) => (Verdict::Inconclusive, Some(r)),
        // a decreasing tail that hits zero
        None if tail[3] == 0.0 => (Verdict::Converging, None),
        None => (Verdict::Inconclusive, None),
    }
}

/// Least-squares slope of `log2 t` against the index, as a ratio `2^slope`.
fn fit_ratio(tail: &[f64]) -> Option<f64> {
    if tail.iter().any(|&t| !(t > 0.0)) {
        return None;
    }
    let n = tail.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = tail.iter().map(|t| t.log2()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, t) in tail.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (t.log2() - ym);
        sxx += dx * dx;
    }
    Some((sxy / sxx).exp2())
}

/// Value of the `μ` functional with the levels actually summed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuValue {
    pub value: f64,
    /// First summed level is `k0 + 1`.
    pub k0: u32,
    pub truncation_level: u32,
    pub tail: SeriesTail,
}

/// `k0 = floor(log2(2 / (b - a)))`.
pub fn mu_start(a: f64, b: f64) -> u32 {
    (2.0 / (b - a)).log2().floor().max(0.0) as u32
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::BadInterval { a, b });
    }
    Ok(())
}

/// `μ(g, a, b, β) = Σ_{k > k0} 2^{1-(k+1)β} Σ_{cells c ⊂ [a,b]} d[k][c]`.
pub fn mu_functional(p: &AveragePyramid, a: f64, b: f64, beta: f64) -> Result<MuValue> {
    mu_with(&GapTable::new(p, SeriesTail::Truncated), a, b, beta)
}

pub fn mu_with(table: &GapTable, a: f64, b: f64, beta: f64) -> Result<MuValue> {
    check_interval(a, b)?;
    check_beta(beta)?;
    let k0 = mu_start(a, b);
    let weights = MuWeights::new(beta, table);
    Ok(MuValue {
        value: weights.mu(table, a, b, k0),
        k0,
        truncation_level: table.last_level().unwrap_or(0),
        tail: if table.has_tail() {
            SeriesTail::Interpolant
        } else {
            SeriesTail::Truncated
        },
    })
}

struct MuWeights {
    beta: f64,
    level: Vec<f64>,
}

impl MuWeights {
    fn new(beta: f64, table: &GapTable) -> Self {
        let level = (0..table.prefix.len()).map(|k| weight(beta, k)).collect();
        Self { beta, level }
    }

    fn mu(&self, table: &GapTable, a: f64, b: f64, k0: u32) -> f64 {
        let mut acc = 0.0;
        for k in (k0 as usize + 1)..self.level.len() {
            acc += self.level[k] * table.range_sum(k as u32, a, b);
        }
        if let Some(t) = table.tail_sum(a, b) {
            let first = (k0 as usize + 1).max(self.level.len());
            acc += t * weight(self.beta, first) / (1.0 - (-self.beta).exp2());
        }
        acc
    }
}

/// `2^{1-(k+1)β}`.
fn weight(beta: f64, k: usize) -> f64 {
    (1.0 - (k as f64 + 1.0) * beta).exp2()
}

/// Supremum of `μ(g, a, b, β) / (b - a)^{β+γ}` over scanned dyadic intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GNormEstimate {
    pub beta: f64,
    pub gamma: f64,
    pub value: f64,
    pub argmax: (f64, f64),
    pub intervals_scanned: u64,
    pub scan_depth: u32,
    pub span_levels: u32,
    pub truncation_level: u32,
    pub tail: SeriesTail,
}

/// Options for [`g_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GNormConfig {
    /// Largest level `j` of interval endpoints `t_{j,i}`.
    pub scan_depth: u32,
    /// Intervals `[t_{j,i}, t_{j,i+l}]` with `l <= 2^span_levels`.
    pub span_levels: u32,
    pub tail: SeriesTail,
}

impl Default for GNormConfig {
    fn default() -> Self {
        Self {
            scan_depth: 12,
            span_levels: 2,
            tail: SeriesTail::Truncated,
        }
    }
}

pub fn g_norm(p: &AveragePyramid, beta: f64, gamma: f64, cfg: &GNormConfig) -> Result<GNormEstimate> {
    check_beta(beta)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive"));
    }
    let table = GapTable::new(p, cfg.tail);
    let weights = MuWeights::new(beta, &table);
    let e = beta + gamma;
    let depth = cfg.scan_depth.min(p.source_resolution());
    let span = 1usize << cfg.span_levels.min(depth);
    let mut best = 0.0;
    let mut argmax = (0.0, 1.0);
    let mut count = 0u64;
    for j in 0..=depth {
        let cells = 1usize << j;
        let width = grid_point(1, j);
        // lag l at level j equals lag 2l at level j+1; scan each interval once
        let skip = if j < depth { span.min(cells << 1) / 2 } else { 0 };
        for l in skip + 1..=span.min(cells) {
            let len = l as f64 * width;
            let k0 = mu_start(0.0, len);
            let norm = len.powf(-e);
            for i in 0..=cells - l {
                let a = grid_point(i, j);
                let b = grid_point(i + l, j);
                let r = weights.mu(&table, a, b, k0) * norm;
                count += 1;
                if r > best {
                    best = r;
                    argmax = (a, b);
                }
            }
        }
    }
    Ok(GNormEstimate {
        beta,
        gamma,
        value: best,
        argmax,
        intervals_scanned: count,
        scan_depth: depth,
        span_levels: cfg.span_levels,
        truncation_level: table.last_level().unwrap_or(0),
        tail: cfg.tail,
    })
}

/// Best constant `C` with `Σ_{k > k0} T_k <= C 2^{-β k0}` over resolved `k0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatorConstant {
    pub value: f64,
    /// Set when the series terms do not decay within the resolution.
    pub infinite: bool,
    pub argmax_k0: u32,
    pub truncation_level: u32,
    pub tail: SeriesTail,
}

pub fn operator_condition(p: &AveragePyramid, beta: f64, tail: SeriesTail) -> Result<OperatorConstant> {
    let report = condition_sums(p, beta)?;
    let terms = report.terms();
    // closed tail Σ_{k >= K} 2^{-kβ} TV/2 of the interpolant
    let extra = match tail {
        SeriesTail::Truncated => 0.0,
        SeriesTail::Interpolant => {
            let tv = pairwise_sum(&p.increments().iter().map(|d| d.abs()).collect::<Vec<_>>());
            let kk = p.source_resolution() as f64;
            0.5 * tv * (-kk * beta).exp2() / (1.0 - (-beta).exp2())
        }
    };
    // terms[i] is T_{i+1}; suffix[i] = Σ_{j >= i} terms[j]
    let mut suffix = alloc::vec![0.0; terms.len() + 1];
    suffix[terms.len()] = extra;
    for i in (0..terms.len()).rev() {
        suffix[i] = suffix[i + 1] + terms[i];
    }
    let mut best = 0.0;
    let mut arg = 1;
    for (k0, &tail) in suffix.iter().enumerate().take(terms.len()).skip(1) {
        let v = (beta * k0 as f64).exp2() * tail;
        if v > best {
            best = v;
            arg = k0 as u32;
        }
    }
    let infinite = report.verdict == Verdict::Diverging;
    Ok(OperatorConstant {
        value: if infinite { f64::INFINITY } else { best },
        infinite,
        argmax_k0: arg,
        truncation_level: report.truncation_level,
        tail,
    })
}

/// `Σ (h[k+1][2c] - h[k+1][2c+1])^2` over level-`k` cells inside `[a, b]`.
pub fn quadratic_functional(p: &AveragePyramid, a: f64, b: f64, k: u32) -> Result<f64> {
    check_interval(a, b)?;
    check_gap_level(p, k)?;
    let scale = (1u64 << k) as f64;
    let lo = (a * scale).ceil() as usize;
    let hi = ((b * scale).floor() as usize).min(1 << k);
    if hi <= lo {
        return Ok(0.0);
    }
    let sq: Vec<f64> = child_gaps(p, k)[lo..hi].iter().map(|d| d * d).collect();
    Ok(pairwise_sum(&sq))
}

/// [`quadratic_functional`] for every level `0..=K-2`.
pub fn quadratic_sweep(p: &AveragePyramid, a: f64, b: f64) -> Result<Vec<f64>> {
    (0..p.depth().saturating_sub(1))
        .map(|k| quadratic_functional(p, a, b, k))
        .collect()
}

/// `2^{-k/2} Σ_m |h[k+1][2m+1] - h[k+1][2m]|`, for `k <= K - 6`.
pub fn wiener_statistic(p: &AveragePyramid, k: u32) -> Result<f64> {
    let max = p.source_resolution().saturating_sub(WIENER_GUARD);
    if k > max || p.source_resolution() < WIENER_GUARD {
        return Err(Error::LevelOutOfRange { level: k, min: 0, max });
    }
    Ok((-(k as f64) / 2.0).exp2() * gap_sum(p, k)?)
}

/// Variance of the Wiener statistic at level `k` under Wiener measure.
pub fn wiener_variance(k: u32) -> f64 {
    let k = k as f64;
    (2.0 / 3.0) * (-(k + 1.0)).exp2() - (2.0 / (3.0 * core::f64::consts::PI)) * (-k).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WienerEntry {
    pub k: u32,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub target_mean: f64,
    pub target_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WienerReport {
    pub level: u32,
    pub n_paths: usize,
    pub seed: u64,
    pub entries: Vec<WienerEntry>,
}

impl WienerReport {
    /// Aggregates per-path rows `rows[path][i]` for `ks[i]`, in row order.
    pub fn from_rows(ks: &[u32], rows: &[Vec<f64>], level: u32, seed: u64) -> Self {
        let entries = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                let s = EnsembleStats::from_samples(&col);
                WienerEntry {
                    k,
                    mean: s.mean,
                    variance: s.variance,
                    std_error: s.std_error,
                    target_mean: WIENER_LIMIT,
                    target_variance: wiener_variance(k),
                }
            })
            .collect();
        Self {
            level,
            n_paths: rows.len(),
            seed,
            entries,
        }
    }
}

/// Seed of path `i` in an ensemble started at `seed`.
pub fn ensemble_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Wiener statistics of one Brownian path at each `k`.
pub fn wiener_row(ks: &[u32], level: u32, seed: u64) -> Result<Vec<f64>> {
    let p = generate::brownian(level, seed)?.pyramid();
    ks.iter().map(|&k| wiener_statistic(&p, k)).collect()
}

/// Sequential Monte-Carlo estimate over `n_paths` Brownian paths.
pub fn wiener_mc(ks: &[u32], n_paths: usize, level: u32, seed: u64) -> Result<WienerReport> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive"));
    }
    let max = level.saturating_sub(WIENER_GUARD);
    if let Some(&k) = ks.iter().find(|&&k| k > max) {
        return Err(Error::LevelOutOfRange { level: k, min: 0, max });
    }
    let rows = (0..n_paths)
        .map(|i| wiener_row(ks, level, ensemble_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WienerReport::from_rows(ks, &rows, level, seed))
}
