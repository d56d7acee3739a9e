//! Boundary-operator pairs used throughout the crate. Each function returns
//! `(b1, b2)` in `dim` tangential variables.

use super::{BoundarySymbol, C64};

const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn e0(dim: usize) -> Vec<u32> {
    vec![0; dim]
}

/// `(u, Δu)`: `b1 = 1`, `b2 = −ξ_d²`.
pub fn hinged_pair(dim: usize) -> (BoundarySymbol, BoundarySymbol) {
    (
        BoundarySymbol::zero(0, dim).with_term(0, ONE, &e0(dim)),
        BoundarySymbol::zero(2, dim).with_term(2, -ONE, &e0(dim)),
    )
}

/// `(u, ∂ₙu)`: `b1 = 1`, `b2 = −iξ_d`.
pub fn clamped_pair(dim: usize) -> (BoundarySymbol, BoundarySymbol) {
    (BoundarySymbol::zero(0, dim).with_term(0, ONE, &e0(dim)), BoundarySymbol::zero(1, dim).with_term(1, -I, &e0(dim)))
}

/// `(∂ₙu, ∂ₙΔu)`: `b1 = −iξ_d`, `b2 = iξ_d³`.
pub fn neumann_pair(dim: usize) -> (BoundarySymbol, BoundarySymbol) {
    (BoundarySymbol::zero(1, dim).with_term(1, -I, &e0(dim)), BoundarySymbol::zero(3, dim).with_term(3, I, &e0(dim)))
}

/// `((∂ₙ² + 2Δ′)u, ∂ₙ³u)`: `b1 = −ξ_d² − 2|ξ′|²`, `b2 = iξ_d³`.
pub fn free_pair(dim: usize) -> (BoundarySymbol, BoundarySymbol) {
    (
        BoundarySymbol::zero(2, dim).with_term(2, -ONE, &e0(dim)).with_isotropic(0, -2.0 * ONE, 2),
        BoundarySymbol::zero(3, dim).with_term(3, I, &e0(dim)),
    )
}

/// `b1 = ξ_d² + α|ξ′|²`, `b2 = ξ_d`. Satisfies the static condition for
/// every `α ≠ −1` but loses the augmented one at `σ⁴ = (α² − 1)|ξ′|⁴` when
/// `α < −1`.
pub fn observation_pair(alpha: f64, dim: usize) -> (BoundarySymbol, BoundarySymbol) {
    (
        BoundarySymbol::zero(2, dim).with_term(2, ONE, &e0(dim)).with_isotropic(0, alpha * ONE, 2),
        BoundarySymbol::zero(1, dim).with_term(1, ONE, &e0(dim)),
    )
}

/// First-order oblique pair: `b1 = −iξ_d` and
/// `b2 = ⟨ξ′, t′ + iv′⟩ − ξ_d(t_ν + iv_ν)`.
pub fn oblique_pair(t_tan: &[f64], v_tan: &[f64], t_normal: f64, v_normal: f64) -> (BoundarySymbol, BoundarySymbol) {
    assert_eq!(t_tan.len(), v_tan.len(), "tangential parts must share a dimension");
    let dim = t_tan.len();
    let w: Vec<C64> = t_tan.iter().zip(v_tan).map(|(&t, &v)| C64::new(t, v)).collect();
    (
        BoundarySymbol::zero(1, dim).with_term(1, -I, &e0(dim)),
        BoundarySymbol::zero(1, dim).with_linear(0, &w).with_term(1, -C64::new(t_normal, v_normal), &e0(dim)),
    )
}
