//! Double-double refinement of low eigenpairs, and singular values of the
//! refined modes restricted to a subset of nodes.
//!
//! Low eigenvectors of a stiff symmetric matrix come out of a dense solver
//! with errors near `ε ‖A‖ / gap`, which swamps the tiny singular values
//! that restrictions of several modes to a short window produce.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{LabError, Result};
use crate::exec::{map_indexed, Exec};

const MAX_SWEEPS: usize = 60;
const MAX_ITERS: usize = 10;

/// Eigenpairs of the stored symmetric matrix `A`, in double-double.
#[derive(Debug, Clone)]
pub struct RefinedModes {
    /// Eigenvalues of `A` (no shift applied).
    pub values: Vec<TwoFloat>,
    /// Euclidean-unit eigenvectors of `A`.
    pub vectors: Vec<Vec<TwoFloat>>,
    /// Largest `‖r_j‖ / gap_j` over the refined modes; a bound on the
    /// eigenvector error up to a modest factor.
    pub accuracy: f64,
}

fn sparse_rows(a: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).filter(|&k| a[(i, k)] != 0.0).map(|k| (k, a[(i, k)])).collect()).collect()
}

fn dot(u: &[TwoFloat], v: &[TwoFloat]) -> TwoFloat {
    u.iter().zip(v).fold(TwoFloat::from(0.0), |acc, (a, b)| acc + a * b)
}

fn residual(rows: &[Vec<(usize, f64)>], x: &[TwoFloat], lambda: TwoFloat) -> Vec<TwoFloat> {
    rows.iter()
        .zip(x)
        .map(|(row, xi)| row.iter().fold(TwoFloat::from(0.0), |acc, &(k, a)| acc + x[k] * a) - lambda * xi)
        .collect()
}

/// Refines the `count` lowest eigenpairs of `a`, starting from the f64
/// eigenvectors `q` (columns, sorted by `values`).
pub fn refine_low_modes(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    values: &[f64],
    count: usize,
    exec: Exec,
) -> Result<RefinedModes> {
    let n = a.nrows();
    if count > n || q.ncols() != n || values.len() != n {
        return Err(LabError::Precondition(format!("cannot refine {count} of {n} modes")));
    }
    let rows = sparse_rows(a);
    let refined = map_indexed(exec, count, |j| refine_one(&rows, q, values, j));
    let mut out = RefinedModes { values: Vec::with_capacity(count), vectors: Vec::with_capacity(count), accuracy: 0.0 };
    for r in refined {
        let (lambda, x, acc) = r?;
        out.values.push(lambda);
        out.vectors.push(x);
        out.accuracy = out.accuracy.max(acc);
    }
    Ok(out)
}

fn refine_one(
    rows: &[Vec<(usize, f64)>],
    q: &DMatrix<f64>,
    values: &[f64],
    j: usize,
) -> Result<(TwoFloat, Vec<TwoFloat>, f64)> {
    let n = rows.len();
    let gap = (0..n).filter(|&k| k != j).map(|k| (values[k] - values[j]).abs()).fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(LabError::Singular(format!("eigenvalue {j} is not simple")));
    }
    let mut x: Vec<TwoFloat> = q.column(j).iter().map(|&v| TwoFloat::from(v)).collect();
    let mut lambda = TwoFloat::from(values[j]);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let r = residual(rows, &x, lambda);
        let r64: Vec<f64> = r.iter().map(|v| v.hi()).collect();
        let rnorm = r64.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm >= best {
            break;
        }
        best = rnorm;
        // δ = −Σ_{k≠j} (q_kᵀ r) / (λ_k − λ_j) q_k
        let mut delta = vec![0.0; n];
        for k in (0..n).filter(|&k| k != j) {
            let col = q.column(k);
            let c = col.iter().zip(&r64).map(|(a, b)| a * b).sum::<f64>() / (values[k] - lambda.hi());
            for (d, qk) in delta.iter_mut().zip(col.iter()) {
                *d -= c * qk;
            }
        }
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi += *d;
        }
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let ax = residual(rows, &x, TwoFloat::from(0.0));
        lambda = dot(&x, &ax);
    }
    let r = residual(rows, &x, lambda);
    let rnorm = dot(&r, &r).sqrt().hi();
    let acc = (rnorm / gap).max(f64::EPSILON * f64::EPSILON);
    Ok((lambda, x, acc))
}

/// Thin SVD of a tall matrix given by columns, in double-double.
#[derive(Debug, Clone)]
pub struct ColumnSvd {
    /// Singular values, unsorted; entry `k` belongs to `right[k]`.
    pub singular: Vec<TwoFloat>,
    /// Right singular vectors.
    pub right: Vec<Vec<TwoFloat>>,
}

impl ColumnSvd {
    pub fn argmin(&self) -> usize {
        (0..self.singular.len())
            .min_by(|&a, &b| self.singular[a].partial_cmp(&self.singular[b]).expect("finite"))
            .expect("nonempty")
    }
}

/// One-sided Jacobi on the columns.
pub fn column_svd(mut cols: Vec<Vec<TwoFloat>>) -> Result<ColumnSvd> {
    let d = cols.len();
    if d == 0 {
        return Err(LabError::Precondition("no columns".into()));
    }
    let zero = TwoFloat::from(0.0);
    let one = TwoFloat::from(1.0);
    let mut v: Vec<Vec<TwoFloat>> = (0..d).map(|k| (0..d).map(|i| if i == k { one } else { zero }).collect()).collect();
    let tol = 1e-31;
    for sweep in 0.. {
        if sweep == MAX_SWEEPS {
            return Err(LabError::NoConvergence(MAX_SWEEPS));
        }
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == zero || gamma.abs().hi() <= tol * (alpha * beta).sqrt().hi() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma * 2.0);
                let t = zeta.signum() / (zeta.abs() + (one + zeta * zeta).sqrt());
                let t = if zeta == zero { one } else { t };
                let c = one / (one + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let singular = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    // Right singular vector `k` is column `k` of the accumulated rotation.
    let right = (0..d).map(|k| v[k].clone()).collect();
    Ok(ColumnSvd { singular, right })
}

fn rotate(cols: &mut [Vec<TwoFloat>], p: usize, q: usize, c: TwoFloat, s: TwoFloat) {
    let (lo, hi) = cols.split_at_mut(q);
    for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}
