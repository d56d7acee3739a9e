//! Principal symbols of boundary operators and the closed-form roots of the
//! augmented quartic `σ⁴ + (ξ_d² + |ξ′|²)²`.
//!
//! A [`BoundarySymbol`] of order `k` is stored as its `ξ_d` coefficients
//! `c_0, …, c_min(3,k)`, each one a complex polynomial in the tangential
//! variables `ξ′` of total degree `k − j`. Evaluation always goes through the
//! complex path, so the same code serves real frequencies and the shifted
//! arguments `ξ′ + iτ∇φ` of the conjugated analysis.

mod text;

pub mod presets;

pub use text::{format_symbol, parse_symbol};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};

pub type C64 = Complex64;

/// Frequency `(σ, ξ′)` dual to `(s, x′)`. `r = |ξ′|` is cached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentialFrequency {
    sigma: f64,
    xi_prime: Vec<f64>,
    r: f64,
}

impl TangentialFrequency {
    pub fn new(sigma: f64, xi_prime: Vec<f64>) -> Self {
        let r = xi_prime.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self { sigma, xi_prime, r }
    }

    /// One tangential variable, `ξ′ = r`.
    pub fn scalar(sigma: f64, r: f64) -> Self {
        Self { sigma, xi_prime: vec![r], r: r.abs() }
    }

    /// `ξ′ = r · direction / |direction|`. A zero direction falls back to `e₁`.
    pub fn along(sigma: f64, r: f64, direction: &[f64]) -> Self {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        let xi_prime = if norm > 0.0 {
            direction.iter().map(|d| r * d / norm).collect()
        } else {
            let mut v = vec![0.0; direction.len().max(1)];
            v[0] = r;
            v
        };
        Self::new(sigma, xi_prime)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi_prime(&self) -> &[f64] {
        &self.xi_prime
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.xi_prime.len()
    }

    /// `Λ = (σ⁴ + r⁴)^{1/4}`.
    pub fn lambda(&self) -> f64 {
        (self.sigma.powi(4) + self.r.powi(4)).sqrt().sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0 && self.r == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.sigma * factor, self.xi_prime.iter().map(|x| x * factor).collect())
    }

    pub fn xi_prime_complex(&self) -> Vec<C64> {
        self.xi_prime.iter().map(|&x| C64::new(x, 0.0)).collect()
    }
}

/// `coeff · Π ξ′ᵢ^{exponents[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: C64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn eval(&self, xi: &[C64]) -> C64 {
        self.exponents.iter().zip(xi).fold(self.coeff, |acc, (&e, &x)| acc * x.powu(e))
    }
}

/// Complex polynomial in the tangential variables.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TangentialPoly {
    pub terms: Vec<Monomial>,
}

impl TangentialPoly {
    pub fn eval(&self, xi: &[C64]) -> C64 {
        self.terms.iter().map(|t| t.eval(xi)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, merging it into an existing one with equal exponents.
    pub fn push(&mut self, coeff: C64, exponents: Vec<u32>) {
        match self.terms.iter_mut().find(|t| t.exponents == exponents) {
            Some(t) => t.coeff += coeff,
            None => self.terms.push(Monomial { coeff, exponents }),
        }
    }
}

/// Principal symbol `Σ_j c_j(ξ′) ξ_d^j` of a boundary operator of order `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySymbol {
    order: u32,
    dim: usize,
    coeffs: Vec<TangentialPoly>,
}

impl BoundarySymbol {
    /// The zero symbol of the given order in `dim` tangential variables.
    pub fn zero(order: u32, dim: usize) -> Self {
        let len = order.min(3) as usize + 1;
        Self { order, dim, coeffs: vec![TangentialPoly::default(); len] }
    }

    /// Builds a symbol from a raw coefficient table.
    ///
    /// Shapes are validated (table length, exponent vector lengths) but the
    /// homogeneity of each coefficient is not, so that malformed tables can
    /// be represented and caught by [`BoundarySymbol::homogeneity_degree_check`].
    pub fn from_table(order: u32, dim: usize, coeffs: Vec<TangentialPoly>) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::Precondition("tangential dimension must be at least 1".into()));
        }
        let len = order.min(3) as usize + 1;
        if coeffs.len() != len {
            return Err(LabError::Precondition(format!(
                "order {order} needs {len} coefficients, got {}",
                coeffs.len()
            )));
        }
        for poly in &coeffs {
            if poly.terms.iter().any(|t| t.exponents.len() != dim) {
                return Err(LabError::Precondition(format!("exponent vectors must have length {dim}")));
            }
        }
        Ok(Self { order, dim, coeffs })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &[TangentialPoly] {
        &self.coeffs
    }

    /// Adds `coeff · Π ξ′ᵢ^{eᵢ}` to the coefficient of `ξ_d^j`.
    ///
    /// # Panics
    /// If `j` exceeds `min(3, k)`, the exponent length differs from the
    /// dimension, or the total degree is not `k − j`.
    pub fn with_term(mut self, j: usize, coeff: C64, exponents: &[u32]) -> Self {
        assert!(j < self.coeffs.len(), "power {j} of xi_d out of range");
        assert_eq!(exponents.len(), self.dim, "exponent length");
        assert_eq!(
            exponents.iter().sum::<u32>() + j as u32,
            self.order,
            "monomial is not of total degree {}",
            self.order
        );
        self.coeffs[j].push(coeff, exponents.to_vec());
        self
    }

    /// Adds `coeff · |ξ′|^power` (even `power`) to the coefficient of `ξ_d^j`,
    /// expanded through `|ξ′|² = Σ ξ′ᵢ²`.
    pub fn with_isotropic(mut self, j: usize, coeff: C64, power: u32) -> Self {
        assert!(power.is_multiple_of(2), "isotropic factors need an even power");
        assert!(j < self.coeffs.len(), "power {j} of xi_d out of range");
        assert_eq!(power + j as u32, self.order, "wrong isotropic degree");
        for (mult, exps) in squared_norm_power(self.dim, power / 2) {
            self.coeffs[j].push(coeff * mult, exps);
        }
        self
    }

    /// Adds the linear form `Σ wᵢ ξ′ᵢ` to the coefficient of `ξ_d^j`.
    pub fn with_linear(mut self, j: usize, weights: &[C64]) -> Self {
        assert_eq!(weights.len(), self.dim, "weight length");
        assert!(j < self.coeffs.len(), "power {j} of xi_d out of range");
        assert_eq!(j as u32 + 1, self.order, "linear form has degree 1");
        for (i, &w) in weights.iter().enumerate() {
            let mut e = vec![0; self.dim];
            e[i] = 1;
            self.coeffs[j].push(w, e);
        }
        self
    }

    /// Values of `c_0..c_3` at a (possibly complex) tangential point; missing
    /// powers are zero.
    pub fn coefficients_at(&self, xi: &[C64]) -> [C64; 4] {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (slot, poly) in out.iter_mut().zip(&self.coeffs) {
            *slot = poly.eval(xi);
        }
        out
    }

    /// `ξ_d` coefficients of `ξ_d ↦ b(xi, ξ_d + shift)`.
    pub fn shifted_coefficients_at(&self, xi: &[C64], shift: C64) -> [C64; 4] {
        let c = self.coefficients_at(xi);
        let mut out = [C64::new(0.0, 0.0); 4];
        for (j, &cj) in c.iter().enumerate() {
            let mut s_pow = C64::new(1.0, 0.0);
            for m in (0..=j).rev() {
                out[m] += cj * binomial(j, m) * s_pow;
                s_pow *= shift;
            }
        }
        out
    }

    pub fn eval_complex(&self, xi: &[C64], xi_d: C64) -> C64 {
        horner(&self.coefficients_at(xi), xi_d)
    }

    pub fn eval_derivative_complex(&self, xi: &[C64], xi_d: C64) -> C64 {
        horner(&derivative_coefficients(&self.coefficients_at(xi)), xi_d)
    }

    pub fn eval(&self, freq: &TangentialFrequency, xi_d: C64) -> C64 {
        self.eval_complex(&freq.xi_prime_complex(), xi_d)
    }

    pub fn eval_derivative(&self, freq: &TangentialFrequency, xi_d: C64) -> C64 {
        self.eval_derivative_complex(&freq.xi_prime_complex(), xi_d)
    }

    /// Checks the degree bookkeeping term by term.
    pub fn is_homogeneous(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(j, poly)| poly.terms.iter().all(|t| t.degree() + j as u32 == self.order))
    }

    /// Random scaling test: `c_j(λξ′) = λ^{k−j} c_j(ξ′)` at `samples` random
    /// `(ξ′, λ)` pairs, to `1e-10` relative.
    pub fn homogeneity_degree_check(&self, samples: usize) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f4b);
        (0..samples.max(1)).all(|_| {
            let xi: Vec<C64> = (0..self.dim).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
            let lambda: f64 = rng.random_range(0.25..4.0);
            let scaled: Vec<C64> = xi.iter().map(|x| x * lambda).collect();
            self.coeffs.iter().enumerate().all(|(j, poly)| {
                let expected = poly.eval(&xi) * lambda.powi(self.order as i32 - j as i32);
                let got = poly.eval(&scaled);
                let scale: f64 = poly.terms.iter().map(|t| t.eval(&scaled).norm()).sum::<f64>().max(f64::MIN_POSITIVE);
                (got - expected).norm() <= 1e-10 * scale
            })
        })
    }
}

pub(crate) fn horner(coeffs: &[C64; 4], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub(crate) fn derivative_coefficients(c: &[C64; 4]) -> [C64; 4] {
    [c[1], c[2] * 2.0, c[3] * 3.0, C64::new(0.0, 0.0)]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Terms of `(Σ_{i<dim} ξᵢ²)^p` as (multinomial coefficient, exponents).
fn squared_norm_power(dim: usize, p: u32) -> Vec<(f64, Vec<u32>)> {
    fn go(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            go(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    go(dim, p, &mut Vec::new(), &mut parts);
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    parts
        .into_iter()
        .map(|ks| {
            let mult = fact(p) / ks.iter().map(|&k| fact(k)).product::<f64>();
            (mult, ks.iter().map(|k| 2 * k).collect())
        })
        .collect()
}

/// The two roots in `ξ_d` with positive imaginary part of
/// `σ⁴ + (ξ_d² + r²)² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AugmentedRootPair {
    pub rho1: C64,
    pub rho2: C64,
    pub lambda_cap: f64,
}

/// Closed-form upper roots `ρ₁ = −a + ib`, `ρ₂ = a + ib`.
///
/// `a` is computed as `σ²/√(2(m + r²))` with `m = √(σ⁴ + r⁴)`, which is the
/// same number as `√((m − r²)/2)` without the cancellation for small `σ`.
pub fn augmented_roots(freq: &TangentialFrequency) -> Result<AugmentedRootPair> {
    if freq.is_degenerate() {
        return Err(LabError::DegenerateFrequency("(sigma, xi') = (0, 0)"));
    }
    let s2 = freq.sigma * freq.sigma;
    let r2 = freq.r * freq.r;
    let m = s2.hypot(r2);
    let a = s2 / (2.0 * (m + r2)).sqrt();
    let b = ((m + r2) / 2.0).sqrt();
    Ok(AugmentedRootPair { rho1: C64::new(-a, b), rho2: C64::new(a, b), lambda_cap: m.sqrt() })
}

/// Double root `i r` of `p⁺(ξ_d) = (ξ_d − i r)²`.
pub fn p_plus_root(freq: &TangentialFrequency) -> Result<C64> {
    if freq.r <= 0.0 {
        return Err(LabError::DegenerateFrequency("r = 0 has no p+ root"));
    }
    Ok(C64::new(0.0, freq.r))
}

/// `σ⁴ + (ξ_d² + r²)²`.
pub fn augmented_quartic(sigma: f64, r: f64, xi_d: C64) -> C64 {
    let t = xi_d * xi_d + r * r;
    t * t + sigma.powi(4)
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;
    use nalgebra::Matrix4;
    use proptest::prelude::*;
    use rand::Rng;

    const I: C64 = C64::new(0.0, 1.0);

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_fixtures() {
        let f = TangentialFrequency::scalar(0.3, 1.0);
        let (_, hinged_b2) = hinged_pair(1);
        assert_eq!(hinged_b2.eval(&f, I), c(1.0, 0.0));

        let (_, clamped_b2) = clamped_pair(1);
        let r = 1.7;
        let fr = TangentialFrequency::scalar(0.0, r);
        assert!((clamped_b2.eval(&fr, c(0.0, r)) - c(r, 0.0)).norm() < 1e-15);

        let (obs_b1, _) = observation_pair(-2.0, 1);
        assert_eq!(obs_b1.eval(&f, I), c(-3.0, 0.0));
    }

    #[test]
    fn derivative_fixtures() {
        let (b1, clamped_b2) = clamped_pair(1);
        let f = TangentialFrequency::scalar(0.5, 2.0);
        assert_eq!(clamped_b2.eval_derivative(&f, c(3.0, -1.0)), c(0.0, -1.0));
        assert_eq!(b1.eval_derivative(&f, c(3.0, -1.0)), c(0.0, 0.0));

        let (_, hinged_b2) = hinged_pair(1);
        let r = 1.3;
        let d = hinged_b2.eval_derivative(&f, c(0.0, r));
        assert!((d - c(0.0, -2.0 * r)).norm() < 1e-15);
    }

    #[test]
    fn roots_fixtures() {
        let p = augmented_roots(&TangentialFrequency::scalar(0.0, 1.0)).unwrap();
        assert_eq!(p.rho1, I);
        assert_eq!(p.rho2, I);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = augmented_roots(&TangentialFrequency::scalar(1.0, 0.0)).unwrap();
        assert!((p.rho2 - c(s, s)).norm() < 1e-15);
        assert!((p.rho1 - c(-s, s)).norm() < 1e-15);

        let p = augmented_roots(&TangentialFrequency::scalar(1.0, 1.0)).unwrap();
        assert!((p.rho1.norm_sqr() - 2f64.sqrt()).abs() < 1e-14);
        assert!((p.rho2.norm_sqr() - 2f64.sqrt()).abs() < 1e-14);

        assert!(augmented_roots(&TangentialFrequency::scalar(0.0, 0.0)).is_err());
    }

    /// Companion-matrix eigenvalues of `ξ⁴ + 2r²ξ² + r⁴ + σ⁴` as oracle. The
    /// polynomial is taken in `y = ξ − 0.3` because the unshifted companion
    /// matrix of `ξ⁴ + 1` is a fixed point of the unshifted QR sweep.
    #[test]
    fn roots_match_companion_matrix() {
        let shift: f64 = 0.3;
        for &(sigma, r) in &[(1.0, 0.0), (1.0, 1.0), (0.3, 2.0), (2.5, 0.7), (0.0, 1.0)] {
            let p = [f64::powi(r, 4) + f64::powi(sigma, 4), 0.0, 2.0 * r * r, 0.0, 1.0];
            let mut q = [0.0; 5];
            for (j, &pj) in p.iter().enumerate() {
                for (k, qk) in q.iter_mut().enumerate().take(j + 1) {
                    *qk += binomial(j, k) * pj * shift.powi((j - k) as i32);
                }
            }
            #[rustfmt::skip]
            let comp = Matrix4::new(
                0.0, 0.0, 0.0, -q[0],
                1.0, 0.0, 0.0, -q[1],
                0.0, 1.0, 0.0, -q[2],
                0.0, 0.0, 1.0, -q[3],
            );
            let mut upper: Vec<C64> = comp
                .try_schur(1e-15, 100_000)
                .expect("schur iteration converges")
                .complex_eigenvalues()
                .iter()
                .map(|z| z + shift)
                .filter(|z| z.im > 0.0)
                .collect();
            upper.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            let roots = augmented_roots(&TangentialFrequency::scalar(sigma, r)).unwrap();
            if sigma == 0.0 {
                // Double root: eigenvalues split by ~sqrt(eps).
                assert!(upper.iter().all(|z| (z - roots.rho1).norm() < 1e-6));
                continue;
            }
            assert_eq!(upper.len(), 2);
            assert!((roots.rho1 - upper[0]).norm() < 1e-9, "{sigma} {r}");
            assert!((roots.rho2 - upper[1]).norm() < 1e-9, "{sigma} {r}");
        }
    }

    #[test]
    fn p_plus() {
        for r in [1.0, 2.0, 0.5] {
            assert_eq!(p_plus_root(&TangentialFrequency::scalar(0.4, r)).unwrap(), c(0.0, r));
        }
        assert!(p_plus_root(&TangentialFrequency::scalar(1.0, 0.0)).is_err());
    }

    #[test]
    fn homogeneity_check_detects_corruption() {
        for (b1, b2) in [clamped_pair(2), hinged_pair(2), free_pair(3), observation_pair(-2.0, 2)] {
            assert!(b1.homogeneity_degree_check(20));
            assert!(b2.homogeneity_degree_check(20));
        }
        let (b1, _) = free_pair(1);
        let mut table = b1.coefficients().to_vec();
        table[0].terms[0].exponents[0] += 1;
        let bad = BoundarySymbol::from_table(b1.order(), 1, table).unwrap();
        assert!(!bad.homogeneity_degree_check(20));
        assert!(!bad.is_homogeneous());
    }

    #[test]
    fn isotropic_expansion_matches_norm_power() {
        let b = BoundarySymbol::zero(4, 3).with_isotropic(0, c(2.0, -1.0), 4);
        let xi = [c(0.3, 0.0), c(-1.2, 0.0), c(0.7, 0.0)];
        let r2: f64 = xi.iter().map(|x| x.re * x.re).sum();
        let want = c(2.0, -1.0) * r2 * r2;
        assert!((b.coefficients_at(&xi)[0] - want).norm() < 1e-13);
    }

    #[test]
    fn shifted_coefficients_reproduce_shifted_evaluation() {
        let (b1, b2) = free_pair(2);
        let xi = [c(0.4, 0.2), c(-0.3, 1.1)];
        let shift = c(0.2, 0.9);
        for b in [b1, b2] {
            let sc = b.shifted_coefficients_at(&xi, shift);
            for z in [c(0.0, 0.0), c(1.0, -2.0), c(-0.5, 0.3)] {
                let direct = b.eval_complex(&xi, z + shift);
                assert!((horner(&sc, z) - direct).norm() < 1e-12);
            }
        }
    }

    fn freq_strategy() -> impl Strategy<Value = TangentialFrequency> {
        (-3.0..3.0f64, -3.0..3.0f64)
            .prop_filter("non-degenerate", |(s, r)| s.abs() + r.abs() > 1e-3)
            .prop_map(|(s, r)| TangentialFrequency::scalar(s, r))
    }

    proptest! {
        #[test]
        fn roots_solve_quartic(f in freq_strategy()) {
            let p = augmented_roots(&f).unwrap();
            let scale = p.lambda_cap.powi(4);
            for rho in [p.rho1, p.rho2] {
                prop_assert!(augmented_quartic(f.sigma(), f.r(), rho).norm() <= 1e-10 * scale);
                prop_assert!(rho.im > 0.0);
                prop_assert!((rho.norm_sqr() - scale.sqrt()).abs() <= 1e-12 * scale.sqrt());
            }
            prop_assert_eq!(p.rho1, -p.rho2.conj());
            prop_assert_eq!(p.rho1 == p.rho2, f.sigma() == 0.0);
        }

        #[test]
        fn roots_are_homogeneous(f in freq_strategy(), lambda in 0.01..100.0f64) {
            let p = augmented_roots(&f).unwrap();
            let q = augmented_roots(&f.scaled(lambda)).unwrap();
            prop_assert!((q.rho1 - p.rho1 * lambda).norm() <= 1e-12 * q.rho1.norm());
            prop_assert!((q.rho2 - p.rho2 * lambda).norm() <= 1e-12 * q.rho2.norm());
        }

        #[test]
        fn derivative_matches_central_difference(
            f in freq_strategy(), re in -2.0..2.0f64, im in -2.0..2.0f64,
        ) {
            let (b1, b2) = free_pair(1);
            let z = c(re, im);
            let h = 1e-5;
            for b in [b1, b2] {
                let fd = (b.eval(&f, z + h) - b.eval(&f, z - h)) / (2.0 * h);
                let scale = 1.0 + b.eval_derivative(&f, z).norm();
                prop_assert!((fd - b.eval_derivative(&f, z)).norm() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn rho1_is_minus_conj_rho2_on_many_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let f = TangentialFrequency::new(
                rng.random_range(-5.0..5.0),
                vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
            );
            let p = augmented_roots(&f).unwrap();
            assert_eq!(p.rho1, -p.rho2.conj());
        }
    }
}
