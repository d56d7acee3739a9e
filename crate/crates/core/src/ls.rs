//! Lopatinskii-Shapiro determinants for `Δ²` and for the augmented operator
//! `D_s⁴ + Δ²`, sampled certification on the quartic sphere, and the
//! consistency checks tying the two together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec::{map_indexed, Exec};
use crate::symbol::{augmented_roots, p_plus_root, BoundarySymbol, TangentialFrequency, C64};

/// Relative width of the band around `σ = 0` where the augmented determinant
/// is replaced by the double-root (derivative) form.
pub const NEAR_DOUBLE_BAND: f64 = 1e-8;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LsMode {
    StaticP,
    AugmentedQ,
}

fn check_pair(b1: &BoundarySymbol, b2: &BoundarySymbol, freq: &TangentialFrequency) -> Result<()> {
    if b1.dim() != b2.dim() || b1.dim() != freq.dim() {
        return Err(LabError::Precondition(format!(
            "dimension mismatch: b1 {}, b2 {}, frequency {}",
            b1.dim(),
            b2.dim(),
            freq.dim()
        )));
    }
    Ok(())
}

/// `b1·∂b2 − b2·∂b1` at the double root `i r` of `p⁺`.
pub fn ls_det_p(b1: &BoundarySymbol, b2: &BoundarySymbol, freq: &TangentialFrequency) -> Result<C64> {
    check_pair(b1, b2, freq)?;
    let rho = p_plus_root(freq)?;
    let xi = freq.xi_prime_complex();
    Ok(derivative_det(b1, b2, &xi, rho))
}

pub(crate) fn derivative_det(b1: &BoundarySymbol, b2: &BoundarySymbol, xi: &[C64], z: C64) -> C64 {
    b1.eval_complex(xi, z) * b2.eval_derivative_complex(xi, z)
        - b2.eval_complex(xi, z) * b1.eval_derivative_complex(xi, z)
}

pub(crate) fn root_det(b1: &BoundarySymbol, b2: &BoundarySymbol, xi: &[C64], z1: C64, z2: C64) -> C64 {
    b1.eval_complex(xi, z1) * b2.eval_complex(xi, z2) - b2.eval_complex(xi, z1) * b1.eval_complex(xi, z2)
}

/// True when `|σ| < 1e-8 Λ`, where [`ls_det_q`] switches to the double-root form.
pub fn in_double_root_band(freq: &TangentialFrequency) -> bool {
    freq.sigma().abs() < NEAR_DOUBLE_BAND * freq.lambda()
}

/// `b1(ρ₁) b2(ρ₂) − b2(ρ₁) b1(ρ₂)` at the upper augmented roots.
///
/// Inside the double-root band this returns [`ls_det_p`] instead. The sign of
/// `σ` is irrelevant since the roots only see `σ²` and `σ⁴`.
pub fn ls_det_q(b1: &BoundarySymbol, b2: &BoundarySymbol, freq: &TangentialFrequency) -> Result<C64> {
    check_pair(b1, b2, freq)?;
    let roots = augmented_roots(freq)?;
    if in_double_root_band(freq) {
        return ls_det_p(b1, b2, freq);
    }
    Ok(root_det(b1, b2, &freq.xi_prime_complex(), roots.rho1, roots.rho2))
}

fn antisym(a: &[C64; 4], c: &[C64; 4], j: usize, m: usize) -> C64 {
    a[j] * c[m] - a[m] * c[j]
}

/// Six-term expansion of [`ls_det_q`] in the `ξ_d` coefficients of the pair
/// and symmetric functions of `(ρ₁, ρ₂)`.
pub fn expand_k(b1: &BoundarySymbol, b2: &BoundarySymbol, freq: &TangentialFrequency) -> Result<C64> {
    check_pair(b1, b2, freq)?;
    let roots = augmented_roots(freq)?;
    if in_double_root_band(freq) {
        return expand_kprime(b1, b2, freq);
    }
    let xi = freq.xi_prime_complex();
    let (a, c) = (b1.coefficients_at(&xi), b2.coefficients_at(&xi));
    let (r1, r2) = (roots.rho1, roots.rho2);
    let prod = r1 * r2;
    let mut k = C64::new(0.0, 0.0);
    for m in 1..4 {
        for j in 0..m {
            let d = (m - j) as u32;
            k += antisym(&a, &c, j, m) * prod.powu(j as u32) * (r2.powu(d) - r1.powu(d));
        }
    }
    Ok(k)
}

/// Expansion of [`ls_det_p`]: `Σ_{j<m} (a_j c_m − a_m c_j)(m − j) ρ^{j+m−1}`.
pub fn expand_kprime(b1: &BoundarySymbol, b2: &BoundarySymbol, freq: &TangentialFrequency) -> Result<C64> {
    check_pair(b1, b2, freq)?;
    let rho = p_plus_root(freq)?;
    let xi = freq.xi_prime_complex();
    let (a, c) = (b1.coefficients_at(&xi), b2.coefficients_at(&xi));
    let mut k = C64::new(0.0, 0.0);
    for m in 1..4 {
        for j in 0..m {
            k += antisym(&a, &c, j, m) * (m - j) as f64 * rho.powu((j + m - 1) as u32);
        }
    }
    Ok(k)
}

/// One evaluated point of a sphere scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereSample {
    pub theta: f64,
    pub sigma: f64,
    pub r: f64,
    pub det: C64,
    pub normalized_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsReport {
    pub mode: LsMode,
    pub min_normalized_det: f64,
    pub argmin_point: TangentialFrequency,
    pub argmin_theta: f64,
    pub certified: bool,
    pub threshold: f64,
    pub samples: usize,
}

/// Settings of a sphere scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereScan {
    pub mode: LsMode,
    pub n: usize,
    pub threshold: f64,
    /// Direction of `ξ′`; `e₁` when `None`.
    pub direction: Option<Vec<f64>>,
    pub exec: Exec,
}

impl SphereScan {
    pub fn new(mode: LsMode, n: usize) -> Self {
        Self { mode, n, threshold: DEFAULT_THRESHOLD, direction: None, exec: Exec::default() }
    }
}

/// `i`-th point of the endpoint-inclusive angle grid on `σ⁴ + r⁴ = 1`:
/// `θ = i (π/2)/(n − 1)`, `σ = √sin θ`, `r = √cos θ`.
pub fn sphere_point(i: usize, n: usize) -> (f64, f64, f64) {
    let theta = i as f64 * std::f64::consts::FRAC_PI_2 / (n - 1) as f64;
    // cos(π/2) is 6e-17, not 0; pin the endpoint so that r = 0 there.
    let (s, c) = if i + 1 == n { (1.0, 0.0) } else { theta.sin_cos() };
    (theta, s.sqrt(), c.sqrt())
}

/// Samples the quartic sphere and returns the report with the per-point table.
pub fn scan_sphere(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    scan: &SphereScan,
) -> Result<(LsReport, Vec<SphereSample>)> {
    if scan.n < 16 {
        return Err(LabError::Precondition(format!("sphere scan needs n >= 16, got {}", scan.n)));
    }
    let dim = b1.dim();
    let direction = scan.direction.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    });
    if direction.len() != dim {
        return Err(LabError::Precondition("direction has the wrong dimension".into()));
    }
    let k_sum = (b1.order() + b2.order()) as i32;

    let evaluated = map_indexed(scan.exec, scan.n, |i| {
        let (theta, sigma, r) = sphere_point(i, scan.n);
        let freq = TangentialFrequency::along(sigma, r, &direction);
        let (det, scale) = match scan.mode {
            LsMode::AugmentedQ => (ls_det_q(b1, b2, &freq)?, freq.lambda().powi(k_sum)),
            LsMode::StaticP => {
                if r == 0.0 {
                    return Ok(None);
                }
                (ls_det_p(b1, b2, &freq)?, r.powi(k_sum - 1))
            }
        };
        Ok(Some(SphereSample { theta, sigma, r, det, normalized_abs: det.norm() / scale }))
    });
    let table: Vec<SphereSample> = evaluated.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();

    // Table is in θ order, so a strict comparison keeps the smallest θ on ties.
    let best = table
        .iter()
        .fold(None::<&SphereSample>, |best, s| match best {
            Some(b) if b.normalized_abs <= s.normalized_abs => Some(b),
            _ => Some(s),
        })
        .expect("scan has at least 15 points");
    let report = LsReport {
        mode: scan.mode,
        min_normalized_det: best.normalized_abs,
        argmin_point: TangentialFrequency::along(best.sigma, best.r, &direction),
        argmin_theta: best.theta,
        certified: best.normalized_abs > scan.threshold,
        threshold: scan.threshold,
        samples: table.len(),
    };
    Ok((report, table))
}

pub fn certify_sphere(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    mode: LsMode,
    n: usize,
    threshold: f64,
) -> Result<LsReport> {
    let scan = SphereScan { threshold, ..SphereScan::new(mode, n) };
    scan_sphere(b1, b2, &scan).map(|(report, _)| report)
}

/// For each `σ`, the relative gap `|K/(ρ₂ − ρ₁) − K′| / |K′|` between the
/// divided augmented determinant and the static one.
pub fn sigma_limit_consistency(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    r: f64,
    sigmas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if r <= 0.0 {
        return Err(LabError::Precondition("r must be positive".into()));
    }
    if sigmas.iter().any(|&s| s <= 0.0) || sigmas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::Precondition("sigmas must be positive and strictly decreasing".into()));
    }
    let mut xi_prime = vec![0.0; b1.dim()];
    xi_prime[0] = r;
    let static_freq = TangentialFrequency::new(0.0, xi_prime);
    let kp = ls_det_p(b1, b2, &static_freq)?;
    if kp == C64::new(0.0, 0.0) {
        return Err(LabError::DivisionByZero("static determinant vanishes"));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let freq = TangentialFrequency::new(sigma, static_freq.xi_prime().to_vec());
            let roots = augmented_roots(&freq)?;
            let k = root_det(b1, b2, &freq.xi_prime_complex(), roots.rho1, roots.rho2);
            let gap = (k / (roots.rho2 - roots.rho1) - kp).norm() / kp.norm();
            Ok((sigma, gap))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub base_abs: f64,
    pub min_abs: f64,
    /// `min_abs ≥ ½ base_abs`.
    pub stable: bool,
}

fn disk_sample(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let rad = radius * rng.random::<f64>().sqrt();
    C64::from_polar(rad, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Minimum of the augmented determinant over `n` random perturbations: each
/// root moved by a complex `δ` with `|δ| ≤ ε` and `ξ′` moved by a complex
/// `ζ′` with `|ζ′| ≤ ε`.
pub fn perturbation_scan(
    b1: &BoundarySymbol,
    b2: &BoundarySymbol,
    freq: &TangentialFrequency,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    check_pair(b1, b2, freq)?;
    let roots = augmented_roots(freq)?;
    let limit = roots.rho1.norm().min(roots.rho2.norm());
    if !(epsilon >= 0.0 && epsilon < limit) {
        return Err(LabError::EpsilonTooLarge { epsilon, limit });
    }
    let base_abs = ls_det_q(b1, b2, freq)?.norm();
    let band = in_double_root_band(freq);
    let xi = freq.xi_prime_complex();
    let per_component = epsilon / (freq.dim() as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_abs = base_abs;
    for _ in 0..n {
        let zeta: Vec<C64> = xi.iter().map(|&x| x + disk_sample(&mut rng, per_component)).collect();
        let d1 = disk_sample(&mut rng, epsilon);
        let d2 = disk_sample(&mut rng, epsilon);
        let det = if band {
            derivative_det(b1, b2, &zeta, C64::new(0.0, freq.r()) + d1)
        } else {
            root_det(b1, b2, &zeta, roots.rho1 + d1, roots.rho2 + d2)
        };
        min_abs = min_abs.min(det.norm());
    }
    Ok(PerturbationReport { epsilon, samples: n, seed, base_abs, min_abs, stable: min_abs >= 0.5 * base_abs })
}
