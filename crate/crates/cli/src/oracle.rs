//! Reference values computed without the staircase machinery.

/// Adaptive Simpson on `[a, b]` with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `∫_a^b f(t, g(t)) g'(t) dt` for a differentiable path.
pub fn riemann_stieltjes<F, G, D>(f: F, g: G, dg: D, a: f64, b: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    // split so each piece is smooth enough for a tight per-piece tolerance
    let pieces = 64;
    (0..pieces)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / pieces as f64;
            let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
            simpson(&|t| f(t, g(t)) * dg(t), lo, hi, 1e-14)
        })
        .sum()
}

/// Antiderivative of `sin(a x) e^{b x}`.
pub fn sin_exp_primitive(a: f64, b: f64, x: f64) -> f64 {
    (b * x).exp() * (b * (a * x).sin() - a * (a * x).cos()) / (a * a + b * b)
}

/// Antiderivative of `|x|^β` vanishing at 0.
pub fn abs_power_primitive(beta: f64, x: f64) -> f64 {
    x.signum() * x.abs().powf(beta + 1.0) / (beta + 1.0)
}

pub const WIENER_MEAN: f64 = 0.460_658_865_961_780_6;

/// `(2/3) 2^{-(k+1)} − (2/(3π)) 2^{-k}`.
pub fn wiener_variance(k: u32) -> f64 {
    let two_k = (k as f64).exp2();
    (2.0 / 3.0) / (2.0 * two_k) - 2.0 / (3.0 * std::f64::consts::PI) / two_k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_on_polynomials_and_exp() {
        assert!((simpson(&|t| t * t * t, 0.0, 2.0, 1e-14) - 4.0).abs() < 1e-13);
        assert!((simpson(&f64::exp, 0.0, 1.0, 1e-14) - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn stieltjes_of_t_dt2() {
        // ∫ t d(t^2) = 2/3
        let v = riemann_stieltjes(|t, _| t, |t| t * t, |t| 2.0 * t, 0.0, 1.0);
        assert!((v - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn primitives_differentiate_back() {
        let h = 1e-6;
        for x in [-0.7, 0.2, 1.4] {
            let d = (sin_exp_primitive(2.0, 1.0, x + h) - sin_exp_primitive(2.0, 1.0, x - h)) / (2.0 * h);
            assert!((d - (2.0 * x).sin() * x.exp()).abs() < 1e-8);
            let d = (abs_power_primitive(0.3, x + h) - abs_power_primitive(0.3, x - h)) / (2.0 * h);
            assert!((d - x.abs().powf(0.3)).abs() < 1e-8);
        }
    }

    #[test]
    fn wiener_constants() {
        assert!((WIENER_MEAN - (2.0 / (3.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
        let v = wiener_variance(12);
        assert!((v - ((2.0 / 3.0) * 2f64.powi(-13) - (2.0 / (3.0 * std::f64::consts::PI)) * 2f64.powi(-12))).abs() < 1e-20);
    }
}
