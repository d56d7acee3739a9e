//! Finite-difference `d⁴/dx⁴` on an interval with ghost-point boundary rows.
//!
//! Nodes are `x_i = i h`, `i = 0..=n+1`, `h = L/(n+1)`. Ends of kind
//! [`BcKind::Hinged`] or [`BcKind::Clamped`] fix `u = 0` at the end node, so
//! it is dropped; [`BcKind::Free`] and [`BcKind::NeumannPair`] keep it as an
//! unknown, which makes the system `n + (number of such ends)` in size.
//!
//! The raw ghost-eliminated matrix `G` is not symmetric when an end node is
//! kept, but `W G` is, with `W = diag(½ at kept end nodes, 1 elsewhere)`:
//! these are the trapezoid weights of the discrete `L²` product. The stored
//! operator is `W^{1/2} G W^{−1/2}`, symmetric to the last bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MAX_DENSE: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
    h: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 {
            return Err(LabError::Precondition(format!("grid needs n >= 8 interior points, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(LabError::Precondition(format!("length must be positive, got {length}")));
        }
        Ok(Self { n, length, h: length / (n + 1) as f64 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Boundary pair at one end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcKind {
    /// `u = u′ = 0`
    Clamped,
    /// `u = u″ = 0`
    Hinged,
    /// `u″ = u‴ = 0`
    Free,
    /// `u′ = u‴ = 0`
    NeumannPair,
}

impl BcKind {
    fn keeps_end_node(self) -> bool {
        matches!(self, BcKind::Free | BcKind::NeumannPair)
    }

    /// Ghost values `u_{−1}`, `u_{−2}` as combinations of `(u_0, u_1, u_2)`,
    /// counting nodes inward from the end.
    fn ghosts(self) -> [[f64; 3]; 2] {
        match self {
            BcKind::Hinged => [[0.0, -1.0, 0.0], [0.0, 0.0, 0.0]],
            BcKind::Clamped => [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
            BcKind::Free => [[2.0, -1.0, 0.0], [4.0, -4.0, 1.0]],
            BcKind::NeumannPair => [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcPair {
    pub left: BcKind,
    pub right: BcKind,
}

impl BcPair {
    pub fn both(kind: BcKind) -> Self {
        Self { left: kind, right: kind }
    }
}

/// Assembled operator together with the data needed to read its vectors as
/// grid functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BiharmonicOperator {
    pub grid: Grid1D,
    pub bc: BcPair,
    /// `W^{1/2} G W^{−1/2}`, exactly symmetric.
    pub matrix: DMatrix<f64>,
    /// Quadrature weights of the unknowns.
    pub weights: Vec<f64>,
    /// Positions of the unknowns.
    pub nodes: Vec<f64>,
}

impl BiharmonicOperator {
    pub fn size(&self) -> usize {
        self.weights.len()
    }

    /// `h Σ wᵢ uᵢ vᵢ`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_inner(self.grid.h, &self.weights, u, v)
    }

    /// `G u` for a grid function `u` (unsymmetrized ghost-eliminated stencil).
    pub fn apply_stencil(&self, u: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let scaled = DVector::from_iterator(u.len(), u.iter().zip(&s).map(|(x, w)| x * w));
        let out = &self.matrix * scaled;
        out.iter().zip(&s).map(|(x, w)| x / w).collect()
    }
}

pub(crate) fn weighted_inner(h: f64, w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    h * w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum::<f64>()
}

pub fn assemble(grid: &Grid1D, bc: BcPair) -> BiharmonicOperator {
    let n = grid.n;
    let first = if bc.left.keeps_end_node() { 0 } else { 1 };
    let last = if bc.right.keeps_end_node() { n + 1 } else { n };
    let size = last - first + 1;
    let unknown = |node: i64| -> Option<usize> {
        (node >= first as i64 && node <= last as i64).then(|| (node - first as i64) as usize)
    };

    let end = n as i64 + 1;
    // Expands global node `k`, possibly a ghost, into unknowns.
    let expand = |k: i64| -> Vec<(usize, f64)> {
        let (kind, depth) = if k < 0 {
            (bc.left, -k)
        } else if k > end {
            (bc.right, k - end)
        } else {
            return unknown(k).map(|u| vec![(u, 1.0)]).unwrap_or_default();
        };
        let inward = |m: i64| if k < 0 { m } else { end - m };
        kind.ghosts()[depth as usize - 1]
            .iter()
            .zip(0i64..)
            .filter(|(&c, _)| c != 0.0)
            .filter_map(|(&c, m)| unknown(inward(m)).map(|u| (u, c)))
            .collect()
    };

    let mut g = DMatrix::<f64>::zeros(size, size);
    let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
    for row in 0..size {
        let node = (row + first) as i64;
        for (d, &c) in stencil.iter().enumerate() {
            for (col, v) in expand(node + d as i64 - 2) {
                g[(row, col)] += c * v;
            }
        }
    }

    let mut weights = vec![1.0; size];
    if bc.left.keeps_end_node() {
        weights[0] = 0.5;
    }
    if bc.right.keeps_end_node() {
        weights[size - 1] = 0.5;
    }
    let h4 = grid.h.powi(4);
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            // W G is symmetric in exact integer arithmetic; build each pair
            // from the upper entry so the stored matrix is bitwise symmetric.
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            let s = weights[a] * g[(a, b)] / h4;
            matrix[(i, j)] = s / (weights[a] * weights[b]).sqrt();
        }
    }
    let nodes = (first..=last).map(|k| k as f64 * grid.h).collect();
    BiharmonicOperator { grid: *grid, bc, matrix, weights, nodes }
}

fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    const MAX_ITER: usize = 100_000;
    if matrix.nrows() > MAX_DENSE + 2 {
        return Err(LabError::Precondition(format!("dense eigensolver limited to {MAX_DENSE} unknowns")));
    }
    SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, MAX_ITER).ok_or(LabError::NoConvergence(MAX_ITER))
}

fn spectral_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Smallest eigenvalue at least `−1e-9 ‖A‖`.
pub fn check_nonnegativity(matrix: &DMatrix<f64>) -> Result<bool> {
    let eig = symmetric_eigen(matrix)?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min >= -1e-9 * spectral_norm(&values))
}

/// Eigenpairs sorted by eigenvalue, with eigenvectors as grid functions
/// orthonormal for `⟨u, v⟩_h = h Σ wᵢ uᵢ vᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub mu: Vec<f64>,
    /// Column `j` is `φ_j` sampled at [`EigenDecomposition::nodes`].
    pub phi: DMatrix<f64>,
    /// Added to every eigenvalue when the smallest one was not positive.
    pub shift: f64,
    pub h: f64,
    pub weights: Vec<f64>,
    pub nodes: Vec<f64>,
    /// The decomposed symmetric matrix, unshifted.
    pub matrix: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_inner(self.h, &self.weights, u, v)
    }

    pub fn mode(&self, j: usize) -> Vec<f64> {
        self.phi.column(j).iter().copied().collect()
    }

    /// Number of eigenvalues `≤ mu`.
    pub fn count_below(&self, mu: f64) -> usize {
        self.mu.partition_point(|&m| m <= mu)
    }

    /// `Σ c_j φ_j` on the grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(coeffs);
        (self.phi.columns(0, coeffs.len()) * c).iter().copied().collect()
    }

    /// Euclidean-unit eigenvectors of [`EigenDecomposition::matrix`] as columns.
    pub fn unit_vectors(&self) -> DMatrix<f64> {
        let mut q = self.phi.clone();
        for (i, mut row) in q.row_iter_mut().enumerate() {
            row *= (self.h * self.weights[i]).sqrt();
        }
        q
    }

    /// Eigenvalues of [`EigenDecomposition::matrix`], without the shift.
    pub fn raw_values(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m - self.shift).collect()
    }

    /// Coefficients `⟨u, φ_j⟩_h` for all modes.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|j| self.inner(u, self.phi.column(j).as_slice())).collect()
    }
}

/// Decomposes the assembled operator, shifting by `1 + |μ_min|` when the
/// smallest eigenvalue is not positive. Anything below `10 ε √n ‖A‖` is
/// roundoff and counts as zero.
pub fn eigendecompose(op: &BiharmonicOperator) -> Result<EigenDecomposition> {
    let mut eig = eigendecompose_matrix(&op.matrix, op.grid.h, &op.weights)?;
    eig.nodes = op.nodes.clone();
    Ok(eig)
}

/// Symmetric input `A` interpreted as `W^{1/2} G W^{−1/2}` with node weights
/// `weights`; eigenvectors are returned as `W^{−1/2} v / √h`.
pub fn eigendecompose_matrix(matrix: &DMatrix<f64>, h: f64, weights: &[f64]) -> Result<EigenDecomposition> {
    let n = matrix.nrows();
    if matrix.ncols() != n || weights.len() != n {
        return Err(LabError::Precondition("matrix and weights must agree in size".into()));
    }
    if matrix != &matrix.transpose() {
        return Err(LabError::Precondition("matrix is not symmetric".into()));
    }
    let eig = symmetric_eigen(matrix)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let norm = spectral_norm(&raw);
    let zero_tol = 10.0 * f64::EPSILON * (n as f64).sqrt() * norm;
    let shift = if raw[0] <= zero_tol { 1.0 + raw[0].abs() } else { 0.0 };

    let scale: Vec<f64> = weights.iter().map(|w| 1.0 / (w * h).sqrt()).collect();
    let mut phi = DMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        // Largest entry positive, so output does not depend on solver signs.
        let imax = col.iamax();
        let sign = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            phi[(i, j)] = sign * col[i] * scale[i];
        }
    }
    Ok(EigenDecomposition {
        mu: raw.iter().map(|m| m + shift).collect(),
        phi,
        shift,
        h,
        weights: weights.to_vec(),
        nodes: (1..=n).map(|k| k as f64 * h).collect(),
        matrix: matrix.clone(),
    })
}

/// Eigenvalues `(κ_j + κ_k)²` of the hinged plate on a rectangle, from the
/// 1-D hinged decompositions in each direction (`κ = √μ`), ascending.
pub fn hinged_rectangle_eigenvalues(x: &EigenDecomposition, y: &EigenDecomposition, count: usize) -> Vec<f64> {
    let kx: Vec<f64> = x.mu.iter().map(|m| (m - x.shift).sqrt()).collect();
    let ky: Vec<f64> = y.mu.iter().map(|m| (m - y.shift).sqrt()).collect();
    let mut all: Vec<f64> = kx.iter().flat_map(|a| ky.iter().map(move |b| (a + b).powi(2))).collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}
