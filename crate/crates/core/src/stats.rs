//! Order-fixed summation and ensemble moments.


/// Pairwise (cascade) sum. The association order depends only on the length,
/// so results do not depend on how the inputs were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().fold(0.0, |a, &x| a + x);
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Sample mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl EnsembleStats {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = pairwise_sum(v) / n as f64;
        let variance = if n > 1 {
            let sq: alloc::vec::Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            pairwise_sum(&sq) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            count: n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// Standard error of the sample variance under a normal approximation.
    pub fn variance_std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.variance * (2.0 / (self.count - 1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn pairwise_matches_exact_small_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn moments_of_known_sample() {
        let s = EnsembleStats::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.std_error - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn singleton_has_zero_variance() {
        let s = EnsembleStats::from_samples(&[0.7]);
        assert_eq!(s.mean, 0.7);
        assert_eq!(s.variance, 0.0);
    }
}
