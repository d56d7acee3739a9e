//! Adaptive integration on top of the double-exponential rule: an interval
//! whose error estimate misses the target is bisected.

use quadrature::double_exponential;

const MAX_DEPTH: u32 = 12;
/// Estimates below this many ulps of the value are roundoff.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Integral of `f` over `[a, b]` with absolute error at most
/// `max(abs_tol, rel_tol |I|)` as judged by the rule's own estimate.
pub fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let whole = double_exponential::integrate(f, a, b, abs_tol);
    let target = abs_tol.max(rel_tol * whole.integral.abs()).max(ROUNDOFF * whole.integral.abs());
    refine(f, a, b, whole.integral, whole.error_estimate, target, 0)
}

fn refine<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, value: f64, err: f64, target: f64, depth: u32) -> f64 {
    if err <= target.max(ROUNDOFF * value.abs()) || depth >= MAX_DEPTH {
        return value;
    }
    let m = 0.5 * (a + b);
    let half = 0.5 * target;
    let left = double_exponential::integrate(f, a, m, half);
    let right = double_exponential::integrate(f, m, b, half);
    refine(f, a, m, left.integral, left.error_estimate, half, depth + 1)
        + refine(f, m, b, right.integral, right.error_estimate, half, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory_integrands() {
        let v = integrate(|x| x * x * x, 0.0, 2.0, 1e-12, 0.0);
        assert!((v - 4.0).abs() < 1e-12);
        let v = integrate(|x| (40.0 * x).sin().powi(2), 0.0, std::f64::consts::PI, 1e-10, 0.0);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let v = integrate(|x: f64| (2.0 * x).exp(), 0.0, 20.0, 1e-8, 1e-13);
        let exact = ((40.0f64).exp() - 1.0) / 2.0;
        assert!((v - exact).abs() <= 1e-12 * exact);
    }
}
