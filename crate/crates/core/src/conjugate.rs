//! Root analysis of the weighted augmented symbol.
//!
//! Conjugating `D_s⁴ + Δ²` by a Carleman weight `e^{τφ}` shifts every dual
//! variable by `iτ` times the matching derivative of `φ`. The quartic then
//! splits as `ℓ₁ℓ₂` with `ℓ_j(ξ_d) = (ξ_d + iτ∂_dφ)² + γ_j` and
//! `γ_j = (−1)^j i(σ + iτ∂_sφ)² + |ξ′ + iτ∇′φ|²` (complex quadratic form, not
//! a modulus). Everything here depends on the weight only through
//! [`ConjugationPoint`].

use std::cmp::Ordering;

use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec::{map_indexed, Exec};
use crate::ls::{derivative_det, root_det};
use crate::symbol::{augmented_roots, horner, BoundarySymbol, TangentialFrequency, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Two upper roots closer than this times `Λ` count as a double root.
pub const NEAR_DOUBLE_TOL: f64 = 1e-8;

/// Weight derivatives at one boundary point, together with `τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugationPoint {
    tau: f64,
    phi_s: f64,
    phi_xp: Vec<f64>,
    phi_d: f64,
}

impl ConjugationPoint {
    /// `τ = 0` is accepted and gives the unconjugated symbol.
    pub fn new(tau: f64, phi_s: f64, phi_xp: Vec<f64>, phi_d: f64) -> Result<Self> {
        if !(phi_d > 0.0 && phi_d.is_finite()) {
            return Err(LabError::Precondition(format!("normal derivative must be positive, got {phi_d}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(LabError::Precondition(format!("tau must be nonnegative, got {tau}")));
        }
        if !phi_s.is_finite() || phi_xp.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Precondition("weight derivatives must be finite".into()));
        }
        Ok(Self { tau, phi_s, phi_xp, phi_d })
    }

    pub fn unweighted(dim: usize) -> Self {
        Self { tau: 0.0, phi_s: 0.0, phi_xp: vec![0.0; dim], phi_d: 1.0 }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi_s(&self) -> f64 {
        self.phi_s
    }

    pub fn phi_xp(&self) -> &[f64] {
        &self.phi_xp
    }

    pub fn phi_d(&self) -> f64 {
        self.phi_d
    }

    fn phi_xp_norm(&self) -> f64 {
        self.phi_xp.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `(|∂_sφ| + |∇′φ|) / ∂_dφ`.
    pub fn mu0(&self) -> f64 {
        (self.phi_s.abs() + self.phi_xp_norm()) / self.phi_d
    }

    pub fn tau_phi_d(&self) -> f64 {
        self.tau * self.phi_d
    }

    fn shifted_xi(&self, freq: &TangentialFrequency) -> Vec<C64> {
        freq.xi_prime().iter().zip(&self.phi_xp).map(|(&x, &p)| C64::new(x, self.tau * p)).collect()
    }
}

fn check_dims(point: &ConjugationPoint, freq: &TangentialFrequency) -> Result<()> {
    if point.phi_xp.len() != freq.dim() {
        return Err(LabError::Precondition(format!(
            "weight gradient has dimension {}, frequency {}",
            point.phi_xp.len(),
            freq.dim()
        )));
    }
    Ok(())
}

fn check_factor(j: u8) -> Result<()> {
    if j == 1 || j == 2 {
        Ok(())
    } else {
        Err(LabError::Precondition(format!("factor index must be 1 or 2, got {j}")))
    }
}

fn parity(j: u8) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `(−1)^j i(σ + iτ∂_sφ)² + Σ(ξ′ᵢ + iτ∂ᵢφ)²`.
pub fn gamma_j(j: u8, point: &ConjugationPoint, freq: &TangentialFrequency) -> Result<C64> {
    check_factor(j)?;
    check_dims(point, freq)?;
    let s = C64::new(freq.sigma(), point.tau * point.phi_s);
    let r_quad: C64 = point.shifted_xi(freq).iter().map(|z| z * z).sum();
    Ok(I * parity(j) * s * s + r_quad)
}

/// Same number as [`gamma_j`], assembled from its five real-variable pieces:
/// `|ξ′|² − τ²|∇′φ|² + 2iτ⟨ξ′, ∇′φ⟩ + (−1)^j i(σ² − τ²(∂_sφ)²) − (−1)^j 2στ∂_sφ`.
pub fn alpha_squared(j: u8, point: &ConjugationPoint, freq: &TangentialFrequency) -> Result<C64> {
    check_factor(j)?;
    check_dims(point, freq)?;
    let tau = point.tau;
    let pairing: f64 = freq.xi_prime().iter().zip(&point.phi_xp).map(|(x, p)| x * p).sum();
    let sign = parity(j);
    let terms = [
        C64::new(freq.r() * freq.r(), 0.0),
        C64::new(-tau * tau * point.phi_xp_norm().powi(2), 0.0),
        C64::new(0.0, 2.0 * tau * pairing),
        C64::new(0.0, sign * (freq.sigma().powi(2) - (tau * point.phi_s).powi(2))),
        C64::new(-sign * 2.0 * freq.sigma() * tau * point.phi_s, 0.0),
    ];
    Ok(terms.iter().sum())
}

/// Principal square root; purely imaginary results are taken with `Im > 0`.
pub fn principal_sqrt(z: C64) -> C64 {
    let w = z.sqrt();
    if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
        -w
    } else {
        w
    }
}

/// Roots of one factor `ℓ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorRoots {
    pub j: u8,
    pub gamma: C64,
    pub alpha: C64,
    pub pi_plus: C64,
    pub pi_minus: C64,
    /// `γ_j` on the closed negative real axis: both roots sit at
    /// `−iτ∂_dφ ± √(−γ_j)`.
    pub real_negative: bool,
}

pub fn conjugated_roots(j: u8, point: &ConjugationPoint, freq: &TangentialFrequency) -> Result<FactorRoots> {
    let gamma = gamma_j(j, point, freq)?;
    let shift = C64::new(0.0, -point.tau_phi_d());
    let real_negative = gamma.im == 0.0 && gamma.re < 0.0;
    let alpha = if real_negative { C64::new(0.0, (-gamma.re).sqrt()) } else { principal_sqrt(gamma) };
    Ok(FactorRoots { j, gamma, alpha, pi_plus: shift + I * alpha, pi_minus: shift - I * alpha, real_negative })
}

/// `ℓ_j(ξ_d) = (ξ_d + iτ∂_dφ)² + γ_j`.
pub fn factor_poly(roots: &FactorRoots, point: &ConjugationPoint, xi_d: C64) -> C64 {
    let z = xi_d + C64::new(0.0, point.tau_phi_d());
    z * z + roots.gamma
}

/// The augmented quartic with every dual variable shifted by the weight.
pub fn conjugated_quartic(point: &ConjugationPoint, freq: &TangentialFrequency, xi_d: C64) -> C64 {
    let s = C64::new(freq.sigma(), point.tau * point.phi_s);
    let r_quad: C64 = point.shifted_xi(freq).iter().map(|z| z * z).sum();
    let z = xi_d + C64::new(0.0, point.tau_phi_d());
    let t = z * z + r_quad;
    t * t + s.powu(4)
}

/// Trichotomy of `4x₀² Re m − 4x₀⁴ + (Im m)²`, which has the sign of
/// `(Re √m)² − x₀²`.
pub fn sign_char_lem1(x0: f64, m: C64) -> Result<Ordering> {
    if x0 == 0.0 {
        return Err(LabError::Precondition("x0 must be nonzero".into()));
    }
    let x2 = x0 * x0;
    let value = 4.0 * x2 * m.re - 4.0 * x2 * x2 + m.im * m.im;
    Ok(value.partial_cmp(&0.0).unwrap_or(Ordering::Equal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootCase {
    /// No root in the closed upper half plane.
    Case1,
    /// One root in the closed upper half plane.
    Case2,
    /// Two distinct upper roots.
    Case3,
    /// Double upper root (`σ = 0`, `τ∂_sφ = 0`).
    Case4,
}

impl RootCase {
    pub fn upper_count(self) -> usize {
        match self {
            RootCase::Case1 => 0,
            RootCase::Case2 => 1,
            RootCase::Case3 | RootCase::Case4 => 2,
        }
    }

    pub fn label(self) -> u8 {
        match self {
            RootCase::Case1 => 1,
            RootCase::Case2 => 2,
            RootCase::Case3 => 3,
            RootCase::Case4 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub case: RootCase,
    pub factors: [FactorRoots; 2],
    /// Roots with `Im ≥ 0`, factor 2 first. At `τ = 0` this puts `ρ₁` before `ρ₂`.
    pub upper: Vec<C64>,
    /// Two upper roots within `1e-8 Λ` that were not promoted to Case 4.
    pub near_double: bool,
    /// Some upper root lies exactly on the real axis.
    pub real_axis_root: bool,
}

pub fn classify_configuration(point: &ConjugationPoint, freq: &TangentialFrequency) -> Result<Classification> {
    let f1 = conjugated_roots(1, point, freq)?;
    let f2 = conjugated_roots(2, point, freq)?;
    let upper: Vec<C64> =
        [f2.pi_plus, f2.pi_minus, f1.pi_plus, f1.pi_minus].into_iter().filter(|z| z.im >= 0.0).collect();
    let real_axis_root = upper.iter().any(|z| z.im == 0.0);
    let mut near_double = false;
    let case = match upper.len() {
        0 => RootCase::Case1,
        1 => RootCase::Case2,
        2 => {
            let close = (upper[0] - upper[1]).norm() < NEAR_DOUBLE_TOL * freq.lambda();
            if freq.sigma() == 0.0 && point.tau * point.phi_s == 0.0 && close {
                RootCase::Case4
            } else {
                near_double = close;
                RootCase::Case3
            }
        }
        n => return Err(LabError::Inconsistent(format!("{n} roots in the upper half plane, at most 2 expected"))),
    };
    Ok(Classification { case, factors: [f1, f2], upper, near_double, real_axis_root })
}

/// Case-dependent conjugated determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatedDet {
    pub case: RootCase,
    pub value: C64,
}

/// Natural size of the weighted frequency, used to normalize determinants.
pub fn conjugated_scale(point: &ConjugationPoint, freq: &TangentialFrequency) -> f64 {
    freq.lambda() + point.tau * (point.phi_s.abs() + point.phi_xp_norm() + point.phi_d)
}

pub fn ls_conjugated_det(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
) -> Result<ConjugatedDet> {
    let class = classify_configuration(point, freq)?;
    ls_conjugated_det_with(b1, b2, point, freq, &class)
}

fn ls_conjugated_det_with(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
    class: &Classification,
) -> Result<ConjugatedDet> {
    if b1.dim() != freq.dim() || b2.dim() != freq.dim() {
        return Err(LabError::Precondition("symbol and frequency dimensions differ".into()));
    }
    let xi = point.shifted_xi(freq);
    let shift = C64::new(0.0, point.tau_phi_d());
    let value = match class.case {
        RootCase::Case1 => C64::new(1.0, 0.0),
        RootCase::Case2 => {
            let z = class.upper[0] + shift;
            let (v1, v2) = (b1.eval_complex(&xi, z), b2.eval_complex(&xi, z));
            if v1.norm() >= v2.norm() {
                v1
            } else {
                v2
            }
        }
        RootCase::Case3 => root_det(b1, b2, &xi, class.upper[0] + shift, class.upper[1] + shift),
        RootCase::Case4 => derivative_det(b1, b2, &xi, class.upper[0] + shift),
    };
    Ok(ConjugatedDet { case: class.case, value })
}

/// `(gap, bound)` with `gap = |iα_j − ρ| + τ|∇′φ|` and
/// `bound = (1 + c) μ₀ |ρ|`, where `ρ` is the unweighted upper root that the
/// factor `j` deforms (`ρ₂` for `j = 1`, `ρ₁` for `j = 2`).
pub fn small_perturbation_gap(
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
    j: u8,
    c: f64,
) -> Result<(f64, f64)> {
    let roots = conjugated_roots(j, point, freq)?;
    if roots.pi_plus.im < 0.0 {
        return Err(LabError::Precondition(format!(
            "hypothesis Im pi_{j},+ >= 0 violated (Im = {:e})",
            roots.pi_plus.im
        )));
    }
    let unweighted = augmented_roots(freq)?;
    let rho = if j == 1 { unweighted.rho2 } else { unweighted.rho1 };
    let gap = (I * roots.alpha - rho).norm() + point.tau * point.phi_xp_norm();
    let bound = (1.0 + c) * point.mu0() * rho.norm();
    Ok((gap, bound))
}

/// Constants of the low-frequency sufficient condition for `Im π_{j,+} < 0`,
/// valid for `μ₀ ≤ k0` with `k0 ≤ 0.35`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientConstants {
    pub k0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SufficientConstants {
    pub fn for_ratio(k0: f64) -> Self {
        Self { k0, c1: (8.0 * k0 + 4.0 * k0.powi(3)) / 3.0 + 4.0 * k0, c2: 4.0 + 4.0 * k0 * k0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientCheck {
    pub holds: bool,
    pub im_pi_plus: f64,
}

/// Tests `(τ∂_dφ)⁴ ≥ C₁|ρ|³τ∂_dφ + C₂(τ∂_dφ)²|ρ|² + σ⁴ + (τ∂_sφ)⁴` with
/// `|ρ|² = √(σ⁴ + r⁴)`. When it holds, `Im π_{j,+} < 0` is checked directly
/// and a violation is returned as [`LabError::LemmaFalsified`].
pub fn im_pi_plus_sufficient(
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
    constants: SufficientConstants,
    j: u8,
) -> Result<SufficientCheck> {
    if point.mu0() > constants.k0 {
        return Err(LabError::Precondition(format!("mu0 = {} exceeds K0 = {}", point.mu0(), constants.k0)));
    }
    let t = point.tau_phi_d();
    let rho = freq.lambda();
    let rhs = constants.c1 * rho.powi(3) * t
        + constants.c2 * t * t * rho * rho
        + freq.sigma().powi(4)
        + (point.tau * point.phi_s).powi(4);
    let holds = t.powi(4) >= rhs;
    let im_pi_plus = conjugated_roots(j, point, freq)?.pi_plus.im;
    if holds && im_pi_plus >= 0.0 {
        return Err(LabError::LemmaFalsified(format!("sufficient condition holds but Im pi_{j},+ = {im_pi_plus:e}")));
    }
    Ok(SufficientCheck { holds, im_pi_plus })
}

/// Rows: coefficients of `b_{1,φ}`, `b_{2,φ}` in `ξ_d`, then the banded
/// coefficients of `ξ_d^i κ⁺` where `κ⁺` is the monic polynomial with the
/// upper roots.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityMatrix {
    pub m_plus: usize,
    pub entries: DMatrix<C64>,
}

impl PositivityMatrix {
    pub fn m_prime(&self) -> usize {
        6 - self.m_plus
    }

    pub fn norm(&self) -> f64 {
        self.singular_values().iter().copied().fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.entries.clone().svd(false, false).singular_values.iter().copied().collect()
    }

    /// Number of singular values above `1e-8 ‖M‖`.
    pub fn rank(&self) -> usize {
        let sv = self.singular_values();
        let tol = 1e-8 * sv.iter().copied().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > tol).count()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { m_plus: self.m_plus, entries: self.entries.map(|z| z * factor) }
    }
}

pub fn build_positivity_matrix(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
    m_plus: usize,
) -> Result<PositivityMatrix> {
    if m_plus > 2 {
        return Err(LabError::Precondition(format!("m_plus must be 0, 1 or 2, got {m_plus}")));
    }
    let class = classify_configuration(point, freq)?;
    if class.case.upper_count() != m_plus {
        return Err(LabError::Inconsistent(format!(
            "m_plus = {m_plus} but the configuration is {:?} with {} upper roots",
            class.case,
            class.case.upper_count()
        )));
    }
    let xi = point.shifted_xi(freq);
    let shift = C64::new(0.0, point.tau_phi_d());
    let mut kappa = vec![C64::new(1.0, 0.0)];
    for &root in &class.upper {
        let mut next = vec![C64::new(0.0, 0.0); kappa.len() + 1];
        for (i, &k) in kappa.iter().enumerate() {
            next[i + 1] += k;
            next[i] -= k * root;
        }
        kappa = next;
    }
    let rows = 6 - m_plus;
    let mut m = DMatrix::from_element(rows, 4, C64::new(0.0, 0.0));
    for (row, b) in [b1, b2].into_iter().enumerate() {
        let coeffs = b.shifted_coefficients_at(&xi, shift);
        for (col, &v) in coeffs.iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    for band in 0..4 - m_plus {
        for (i, &k) in kappa.iter().enumerate() {
            m[(2 + band, band + i)] = k;
        }
    }
    Ok(PositivityMatrix { m_plus, entries: m })
}

/// Smallest eigenvalue of `MᴴM`.
pub fn gram_lower_bound(m: &PositivityMatrix) -> f64 {
    let gram: Matrix4<C64> = {
        let g = m.entries.adjoint() * &m.entries;
        Matrix4::from_fn(|i, j| g[(i, j)])
    };
    gram.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// One row of a `τ` sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateRow {
    pub tau: f64,
    pub sigma: f64,
    pub r: f64,
    pub mu0: f64,
    pub case: u8,
    pub im_pi_1p: f64,
    pub im_pi_2p: f64,
    pub abs_det_normalized: f64,
    pub rank: usize,
    pub gram_min: f64,
}

/// Evaluates the classification, determinant and positivity matrix for each `τ`.
pub fn sweep_tau(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    point: &ConjugationPoint,
    freq: &TangentialFrequency,
    taus: &[f64],
    exec: Exec,
) -> Result<Vec<ConjugateRow>> {
    let k_sum = (b1.order() + b2.order()) as i32;
    map_indexed(exec, taus.len(), |i| {
        let p = ConjugationPoint::new(taus[i], point.phi_s, point.phi_xp.clone(), point.phi_d)?;
        let class = classify_configuration(&p, freq)?;
        let det = ls_conjugated_det_with(b1, b2, &p, freq, &class)?;
        let m = build_positivity_matrix(b1, b2, &p, freq, class.case.upper_count())?;
        Ok(ConjugateRow {
            tau: p.tau,
            sigma: freq.sigma(),
            r: freq.r(),
            mu0: p.mu0(),
            case: class.case.label(),
            im_pi_1p: class.factors[0].pi_plus.im,
            im_pi_2p: class.factors[1].pi_plus.im,
            abs_det_normalized: det.value.norm() / conjugated_scale(&p, freq).powi(k_sum),
            rank: m.rank(),
            gram_min: gram_lower_bound(&m),
        })
    })
    .into_iter()
    .collect()
}

/// `ξ_d` coefficients of `b(ξ′ + iτ∇′φ, ξ_d + iτ∂_dφ)`.
pub fn conjugated_coefficients(b: &BoundarySymbol, point: &ConjugationPoint, freq: &TangentialFrequency) -> [C64; 4] {
    b.shifted_coefficients_at(&point.shifted_xi(freq), C64::new(0.0, point.tau_phi_d()))
}

/// `b(ξ′ + iτ∇′φ, ξ_d + iτ∂_dφ)`.
pub fn eval_conjugated(b: &BoundarySymbol, point: &ConjugationPoint, freq: &TangentialFrequency, xi_d: C64) -> C64 {
    horner(&conjugated_coefficients(b, point, freq), xi_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ls::ls_det_q;
    use crate::symbol::presets::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn f(sigma: f64, r: f64) -> TangentialFrequency {
        TangentialFrequency::scalar(sigma, r)
    }

    fn pt(tau: f64, phi_s: f64, phi_xp: f64, phi_d: f64) -> ConjugationPoint {
        ConjugationPoint::new(tau, phi_s, vec![phi_xp], phi_d).unwrap()
    }

    #[test]
    fn point_validation() {
        assert!(ConjugationPoint::new(1.0, 0.0, vec![0.0], 0.0).is_err());
        assert!(ConjugationPoint::new(-1.0, 0.0, vec![0.0], 1.0).is_err());
        assert!((pt(3.0, 0.1, -0.2, 2.0).mu0() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn gamma_fixtures() {
        let p0 = ConjugationPoint::unweighted(1);
        let fr = f(0.7, 1.3);
        for j in [1u8, 2] {
            let want = c(1.69, parity(j) * 0.49);
            assert!((gamma_j(j, &p0, &fr).unwrap() - want).norm() < 1e-15);
        }
        // ξ′ = e₁, τ∇′φ = e₁: (1 + i)² = 2i for both factors.
        let p = pt(1.0, 0.0, 1.0, 1.0);
        for j in [1u8, 2] {
            assert!((gamma_j(j, &p, &f(0.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        }
        let p = pt(2.0, 0.0, 0.3, 1.0);
        let fr = f(0.9, 0.4);
        let diff = gamma_j(1, &p, &fr).unwrap() - gamma_j(2, &p, &fr).unwrap();
        assert!((diff - c(0.0, -2.0 * 0.81)).norm() < 1e-15);
        assert!(gamma_j(3, &p, &fr).is_err());
    }

    #[test]
    fn alpha_squared_fixtures() {
        let p = ConjugationPoint::new(1.5, 0.0, vec![0.4, -0.2], 1.0).unwrap();
        let fr = TangentialFrequency::new(0.0, vec![0.3, 0.8]);
        assert_eq!(alpha_squared(1, &p, &fr).unwrap(), alpha_squared(2, &p, &fr).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = ConjugationPoint::new(
                rng.random_range(0.0..5.0),
                rng.random_range(-1.0..1.0),
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                rng.random_range(0.1..2.0),
            )
            .unwrap();
            let fr = TangentialFrequency::new(
                rng.random_range(-2.0..2.0),
                vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
            );
            for j in [1u8, 2] {
                let g = gamma_j(j, &p, &fr).unwrap();
                assert!((alpha_squared(j, &p, &fr).unwrap() - g).norm() <= 1e-12 * (1.0 + g.norm()));
            }
        }
    }

    #[test]
    fn root_fixtures() {
        // γ = (2i)² = −4 from ξ′ = 0, τ∂′φ = 2.
        let p = pt(2.0, 0.0, 1.0, 0.5);
        let roots = conjugated_roots(1, &p, &f(0.0, 0.0)).unwrap();
        assert_eq!(roots.gamma, c(-4.0, 0.0));
        assert!(roots.real_negative);
        let mut pair = [roots.pi_plus, roots.pi_minus];
        pair.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((pair[0] - c(-2.0, -1.0)).norm() < 1e-15);
        assert!((pair[1] - c(2.0, -1.0)).norm() < 1e-15);

        let p = pt(0.4, 0.0, 0.0, 1.5);
        let roots = conjugated_roots(2, &p, &f(0.0, 1.0)).unwrap();
        assert_eq!(roots.alpha, c(1.0, 0.0));
        assert!((roots.pi_plus - c(0.0, 1.0 - 0.6)).norm() < 1e-15);

        let p = ConjugationPoint::new(1.0, 0.0, vec![0.0, 1.0], 0.7).unwrap();
        let fr = TangentialFrequency::new(0.0, vec![1.0, 0.0]);
        let roots = conjugated_roots(1, &p, &fr).unwrap();
        assert_eq!(roots.gamma, c(0.0, 0.0));
        assert_eq!(roots.pi_plus, roots.pi_minus);
        assert!((roots.pi_plus - c(0.0, -0.7)).norm() < 1e-15);
    }

    #[test]
    fn principal_sqrt_branch() {
        assert_eq!(principal_sqrt(c(-4.0, 0.0)), c(0.0, 2.0));
        assert_eq!(principal_sqrt(c(-4.0, -0.0)), c(0.0, 2.0));
        assert!(principal_sqrt(c(1.0, -3.0)).re > 0.0);
    }

    #[test]
    fn lem1_fixtures() {
        assert_eq!(sign_char_lem1(2.0, c(1.0, 0.0)).unwrap(), Ordering::Less);
        assert_eq!(sign_char_lem1(2.0, c(4.0, 0.0)).unwrap(), Ordering::Equal);
        assert_eq!(sign_char_lem1(0.5, c(4.0, 0.0)).unwrap(), Ordering::Greater);
        assert!(sign_char_lem1(0.0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn classification_examples() {
        let fr = f(0.6, 0.9);
        assert_eq!(classify_configuration(&pt(100.0, 0.0, 0.0, 1.0), &fr).unwrap().case, RootCase::Case1);
        let unweighted = ConjugationPoint::unweighted(1);
        assert_eq!(classify_configuration(&unweighted, &fr).unwrap().case, RootCase::Case3);
        assert_eq!(classify_configuration(&unweighted, &f(0.0, 1.0)).unwrap().case, RootCase::Case4);

        // Between the two imaginary parts of the unweighted roots only one survives.
        let roots = augmented_roots(&fr).unwrap();
        assert_eq!(roots.rho1.im, roots.rho2.im);
        let fr2 = TangentialFrequency::scalar(0.6, 0.9);
        let p = pt(0.5, 0.3, 0.0, 1.0);
        let class = classify_configuration(&p, &fr2).unwrap();
        let ims = [class.factors[0].pi_plus.im, class.factors[1].pi_plus.im];
        let expected = ims.iter().filter(|&&v| v >= 0.0).count();
        assert_eq!(class.case.upper_count(), expected);
    }

    #[test]
    fn case_two_appears_with_tangential_time_weight() {
        // τ∂_sφ ≠ 0 separates the two factors; scan τ until one root crosses.
        let fr = f(1.0, 0.5);
        let found = (1..400).any(|k| {
            let p = pt(k as f64 * 0.005, 0.5, 0.0, 1.0);
            classify_configuration(&p, &fr).unwrap().case == RootCase::Case2
        });
        assert!(found);
    }

    #[test]
    fn unweighted_determinant_matches_augmented() {
        let p = ConjugationPoint::unweighted(1);
        for (b1, b2) in [clamped_pair(1), hinged_pair(1), free_pair(1), neumann_pair(1)] {
            for &(s, r) in &[(0.5, 1.0), (1.0, 0.0), (-0.3, 2.0), (0.0, 1.0)] {
                let got = ls_conjugated_det(&b1, &b2, &p, &f(s, r)).unwrap().value;
                let want = ls_det_q(&b1, &b2, &f(s, r)).unwrap();
                assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()), "{s} {r}");
            }
        }
        let (o1, o2) = observation_pair(-2.0, 1);
        let zero = f(3f64.powf(0.25), 1.0);
        assert!(ls_conjugated_det(&o1, &o2, &p, &zero).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn clamped_small_weight_keeps_half_the_determinant() {
        let (b1, b2) = clamped_pair(1);
        let fr = f(1.0, 1.0);
        let base = ls_det_q(&b1, &b2, &fr).unwrap().norm();
        for k in 1..50 {
            let p = pt(k as f64 * 0.02, 0.01, 0.02, 1.0);
            let class = classify_configuration(&p, &fr).unwrap();
            if class.case != RootCase::Case3 {
                continue;
            }
            let det = ls_conjugated_det(&b1, &b2, &p, &fr).unwrap();
            assert!(det.value.norm() >= 0.5 * base, "tau {}", p.tau());
        }
    }

    #[test]
    fn perturbation_gap_vanishes_for_normal_weight() {
        let fr = f(1.0, 1.0);
        for j in [1u8, 2] {
            let (gap, bound) = small_perturbation_gap(&pt(0.3, 0.0, 0.0, 1.0), &fr, j, 1.0).unwrap();
            assert!(gap < 1e-15);
            assert_eq!(bound, 0.0);
        }
        assert!(small_perturbation_gap(&pt(100.0, 0.0, 0.0, 1.0), &fr, 1, 1.0).is_err());
    }

    #[test]
    fn perturbation_gap_is_proportional_to_mu0() {
        let fr = f(1.0, 1.0);
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let tau = k as f64 * 0.005;
            let p = pt(tau, 0.025, 0.025, 1.0);
            for j in [1u8, 2] {
                if let Ok((gap, _)) = small_perturbation_gap(&p, &fr, j, 0.0) {
                    worst = worst.max(gap / (p.mu0() * 2f64.sqrt().sqrt()));
                }
            }
        }
        assert!(worst > 0.0 && worst < 3.0, "{worst}");
    }

    #[test]
    fn positivity_matrix_examples() {
        let (b1, b2) = clamped_pair(1);
        let p = pt(0.2, 0.05, 0.05, 1.0);
        let fr = f(0.8, 0.9);
        let m = build_positivity_matrix(&b1, &b2, &p, &fr, 2).unwrap();
        assert_eq!(m.entries.shape(), (4, 4));
        assert_eq!(m.rank(), 4);
        let g = gram_lower_bound(&m);
        assert!(g > 0.0);
        assert!((gram_lower_bound(&m.scaled(3.0)) - 9.0 * g).abs() <= 1e-10 * 9.0 * g);
        assert!(matches!(build_positivity_matrix(&b1, &b2, &p, &fr, 1), Err(LabError::Inconsistent(_))));
        assert!(build_positivity_matrix(&b1, &b2, &p, &fr, 3).is_err());

        let (o1, o2) = observation_pair(-2.0, 1);
        let unweighted = ConjugationPoint::unweighted(1);
        let m = build_positivity_matrix(&o1, &o2, &unweighted, &f(3f64.powf(0.25), 1.0), 2).unwrap();
        assert!(m.rank() < 4);
        assert!(gram_lower_bound(&m) <= 1e-10 * m.norm().powi(2));

        let low = pt(50.0, 0.0, 0.0, 1.0);
        let m = build_positivity_matrix(&o1, &o2, &low, &fr, 0).unwrap();
        assert_eq!(m.entries.shape(), (6, 4));
        assert_eq!(m.rank(), 4);
    }

    #[test]
    fn sufficient_condition_never_falsified() {
        let k0 = 0.3;
        let consts = SufficientConstants::for_ratio(k0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut held = 0;
        for _ in 0..20_000 {
            let phi_d = 1.0;
            let a: f64 = rng.random_range(0.0..1.0);
            let budget = k0 * rng.random_range(0.0..1.0);
            let phi_s = a * budget * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let phi_x = (1.0 - a) * budget * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let p = pt(10f64.powf(rng.random_range(-2.0..2.0)), phi_s, phi_x, phi_d);
            let fr = f(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for j in [1u8, 2] {
                if im_pi_plus_sufficient(&p, &fr, consts, j).unwrap().holds {
                    held += 1;
                }
            }
        }
        assert!(held > 1000);

        let low = pt(1e3, 0.0, 0.0, 1.0);
        let check = im_pi_plus_sufficient(&low, &f(0.6, 0.8), consts, 1).unwrap();
        assert!(check.holds && check.im_pi_plus < 0.0);
        let slow = pt(0.01, 0.0, 0.0, 1.0);
        assert!(!im_pi_plus_sufficient(&slow, &f(0.6, 0.8), consts, 1).unwrap().holds);
        assert!(im_pi_plus_sufficient(&pt(1.0, 1.0, 0.0, 1.0), &f(0.6, 0.8), consts, 1).is_err());
    }

    #[test]
    fn tau_to_zero_continuity() {
        let (b1, b2) = clamped_pair(1);
        let fr = f(0.7, 0.6);
        let base = ls_det_q(&b1, &b2, &fr).unwrap();
        let gaps: Vec<f64> = (1..=6)
            .map(|k| {
                let p = pt(10f64.powi(-k), 0.3, -0.4, 1.0);
                (ls_conjugated_det(&b1, &b2, &p, &fr).unwrap().value - base).norm()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn sweep_matches_between_execution_modes() {
        let (b1, b2) = clamped_pair(1);
        let taus: Vec<f64> = (0..50).map(|k| k as f64 * 0.05).collect();
        let p = pt(0.0, 0.1, 0.1, 1.0);
        let fr = f(0.5, 0.9);
        let a = sweep_tau(&b1, &b2, &p, &fr, &taus, Exec::Parallel).unwrap();
        let b = sweep_tau(&b1, &b2, &p, &fr, &taus, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].case, 3);
        assert_eq!(a.last().unwrap().case, 1);
    }

    fn point_strategy() -> impl Strategy<Value = (ConjugationPoint, TangentialFrequency)> {
        (0.0..5.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.05..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(t, s, x, d, sig, r)| (pt(t, s, x, d), f(sig, r)))
    }

    proptest! {
        #[test]
        fn factor_roots_solve_their_factor((p, fr) in point_strategy(), j in 1u8..=2) {
            let roots = conjugated_roots(j, &p, &fr).unwrap();
            let scale = 1.0 + roots.gamma.norm() + p.tau_phi_d().powi(2);
            prop_assert!(factor_poly(&roots, &p, roots.pi_plus).norm() <= 1e-9 * scale);
            prop_assert!(factor_poly(&roots, &p, roots.pi_minus).norm() <= 1e-9 * scale);
            if p.tau() > 0.0 {
                prop_assert!(roots.pi_minus.im < 0.0);
            }
        }

        #[test]
        fn factors_multiply_to_conjugated_quartic(
            (p, fr) in point_strategy(), re in -3.0..3.0f64, im in -3.0..3.0f64,
        ) {
            let z = c(re, im);
            let f1 = conjugated_roots(1, &p, &fr).unwrap();
            let f2 = conjugated_roots(2, &p, &fr).unwrap();
            let product = factor_poly(&f1, &p, z) * factor_poly(&f2, &p, z);
            let quartic = conjugated_quartic(&p, &fr, z);
            let roots_form = [f1.pi_plus, f1.pi_minus, f2.pi_plus, f2.pi_minus]
                .iter()
                .fold(c(1.0, 0.0), |acc, &w| acc * (z - w));
            let scale = (z.norm() + conjugated_scale(&p, &fr)).powi(4);
            prop_assert!((product - quartic).norm() <= 1e-9 * scale);
            prop_assert!((roots_form - quartic).norm() <= 1e-9 * scale);
        }
    }
}
