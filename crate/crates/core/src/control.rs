//! Lebeau-Robbiano null control of `ẏ = −Py + 1_ω v` on a discrete
//! eigenbasis. In eigencoordinates `ċ = −Dc + B w` with `B_jk = ⟨φ_j, 1_ω φ_k⟩_h`
//! and `v = 1_ω Σ_k w_k φ_k`, so every stage has a closed-form solution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::biharmonic::EigenDecomposition;
use crate::error::{LabError, Result};
use crate::exec::{map_indexed, Exec};
use crate::probe::{restricted_gram, ObservationWindow};

/// Low-mode projections after a control stage must be this small relative
/// to `‖y0‖`.
pub const LOW_MODE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 256;
/// Stored control samples are spaced so that `μ_max Δt` stays below this
/// for the controlled modes.
pub const MAX_DECAY_PER_SAMPLE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub t_start: f64,
    pub t_control: f64,
    pub t_decay: f64,
    pub cutoff: f64,
}

impl Stage {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.t_control + self.t_decay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrSchedule {
    pub horizon: f64,
    pub base: f64,
    pub stages: Vec<Stage>,
}

impl LrSchedule {
    /// Cutoffs `base·16^k` up to the first one `≥ mu_max`; stage `k` lasts
    /// `T·2^{−(k+1)} / (1 − 2^{−K})` and spends `control_fraction` of it
    /// controlling.
    pub fn dyadic(horizon: f64, base: f64, mu_max: f64, control_fraction: f64) -> Result<Self> {
        if !(horizon > 0.0 && base > 0.0 && control_fraction > 0.0 && control_fraction <= 1.0) {
            return Err(LabError::Precondition(format!(
                "need T > 0, base > 0, control fraction in (0, 1]; got {horizon}, {base}, {control_fraction}"
            )));
        }
        if !mu_max.is_finite() {
            return Err(LabError::Precondition("largest eigenvalue is not finite".into()));
        }
        let mut count = 1;
        while base * 16f64.powi(count as i32 - 1) < mu_max {
            count += 1;
        }
        let norm = 1.0 - 0.5f64.powi(count as i32);
        let mut stages = Vec::with_capacity(count);
        let mut t = 0.0;
        for k in 0..count {
            let length = if k + 1 == count { horizon - t } else { horizon * 0.5f64.powi(k as i32 + 1) / norm };
            let t_control = control_fraction * length;
            stages.push(Stage {
                t_start: t,
                t_control,
                t_decay: length - t_control,
                cutoff: base * 16f64.powi(k as i32),
            });
            t += length;
        }
        Ok(Self { horizon, base, stages })
    }
}

/// Exact decay `c_j ← e^{−μ_j dt} c_j`.
pub fn simulate_free(eig: &EigenDecomposition, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt >= 0.0) || y.len() != eig.len() {
        return Err(LabError::Precondition(format!("need dt ≥ 0 and {} coefficients", eig.len())));
    }
    Ok(y.iter().zip(&eig.mu).map(|(c, m)| c * (-m * dt).exp()).collect())
}

/// `(1 − e^{−x t}) / x`, stable for small `x t`.
fn decay_integral(x: f64, t: f64) -> f64 {
    if x == 0.0 {
        t
    } else {
        -(-x * t).exp_m1() / x
    }
}

/// Eigencoordinate model of the controlled system.
#[derive(Debug, Clone)]
struct ControlSystem {
    mu: Vec<f64>,
    /// `B` over all modes.
    b: DMatrix<f64>,
    /// `φ_k` at the window nodes, one row per node.
    phi_omega: DMatrix<f64>,
    omega_nodes: Vec<usize>,
}

impl ControlSystem {
    fn new(eig: &EigenDecomposition, omega: &ObservationWindow) -> Result<Self> {
        let n = eig.len();
        let b = restricted_gram(eig, omega, n)?;
        let omega_nodes: Vec<usize> = (0..n).filter(|&i| omega.mask()[i]).collect();
        let phi_omega = DMatrix::from_fn(omega_nodes.len(), n, |r, k| eig.phi[(omega_nodes[r], k)]);
        if eig.mu.iter().any(|&m| !(m > 0.0)) {
            return Err(LabError::Precondition("eigenvalues must be positive".into()));
        }
        Ok(Self { mu: eig.mu.clone(), b, phi_omega, omega_nodes })
    }

    fn len(&self) -> usize {
        self.mu.len()
    }

    fn gramian(&self, modes: usize, duration: f64) -> DMatrix<f64> {
        DMatrix::from_fn(modes, modes, |i, j| self.b[(i, j)] * decay_integral(self.mu[i] + self.mu[j], duration))
    }

    /// `w_k(t) = e^{−μ_k (d − t)} η_k`.
    fn weights_at(&self, eta: &[f64], duration: f64, t: f64) -> DVector<f64> {
        DVector::from_iterator(eta.len(), eta.iter().zip(&self.mu).map(|(e, m)| e * (-m * (duration - t)).exp()))
    }

    /// Closed-form state at time `t` into a control stage.
    fn state_at(&self, c0: &[f64], eta: &[f64], duration: f64, t: f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let forced: f64 = eta
                    .iter()
                    .enumerate()
                    .map(|(j, e)| {
                        self.b[(i, j)]
                            * e
                            * (-self.mu[j] * (duration - t)).exp()
                            * decay_integral(self.mu[i] + self.mu[j], t)
                    })
                    .sum();
                c0[i] * (-self.mu[i] * t).exp() + forced
            })
            .collect()
    }

    fn control_norm(&self, w: &DVector<f64>) -> f64 {
        let m = w.len();
        let bw = self.b.view((0, 0), (m, m)) * w;
        w.dot(&bw).max(0.0).sqrt()
    }

    fn nodal(&self, w: &DVector<f64>) -> DVector<f64> {
        self.phi_omega.columns(0, w.len()) * w
    }
}

/// Solves `W x = rhs` after Jacobi scaling. Falls back to a truncated
/// pseudo-inverse when the scaled Cholesky factor is numerically singular.
fn solve_gramian(w: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let n = w.nrows();
    if let Some(j) = (0..n).find(|&j| !(w[(j, j)] > 0.0)) {
        return Err(LabError::Singular(format!("mode {j} is invisible on the control window")));
    }
    let s = DVector::from_fn(n, |j, _| 1.0 / w[(j, j)].sqrt());
    let scaled = DMatrix::from_fn(n, n, |i, j| s[i] * w[(i, j)] * s[j]);
    let r = rhs.component_mul(&s);
    let tol = n as f64 * f64::EPSILON;
    if let Some(ch) = scaled.clone().cholesky() {
        let d = ch.l_dirty().diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v * v), hi.max(v * v)));
        if lo > tol * hi {
            return Ok((ch.solve(&r).component_mul(&s), false));
        }
    }
    let se = SymmetricEigen::new(scaled);
    let top = se.eigenvalues.amax();
    let mut x = DVector::zeros(n);
    for (k, &lambda) in se.eigenvalues.iter().enumerate() {
        if lambda > tol * top {
            let v = se.eigenvectors.column(k);
            x += v * (v.dot(&r) / lambda);
        }
    }
    Ok((x.component_mul(&s), true))
}

/// Minimal-norm control of the modes `μ_j ≤ cutoff` to zero over `duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowModeControl {
    pub modes: usize,
    pub duration: f64,
    /// `w(t) = e^{−D(d−t)} η`.
    pub eta: Vec<f64>,
    /// Full state at the end of the control window.
    pub post_state: Vec<f64>,
    /// `‖v‖_{L²((0,d)×Ω)} = √(ηᵀ W η)`.
    pub cost: f64,
    /// Norm of the controlled block of `post_state`.
    pub low_mode_residual: f64,
    pub regularized: bool,
}

impl LowModeControl {
    pub fn coefficients_at(&self, t: f64, mu: &[f64]) -> Vec<f64> {
        self.eta.iter().zip(mu).map(|(e, m)| e * (-m * (self.duration - t)).exp()).collect()
    }
}

fn control_stage(sys: &ControlSystem, y: &[f64], cutoff: f64, duration: f64) -> Result<LowModeControl> {
    if !(duration > 0.0) || y.len() != sys.len() {
        return Err(LabError::Precondition(format!("need duration > 0 and {} coefficients", sys.len())));
    }
    let modes = sys.mu.partition_point(|&m| m <= cutoff);
    if modes == 0 {
        return Err(LabError::Precondition(format!("no eigenvalue below cutoff {cutoff}")));
    }
    let w = sys.gramian(modes, duration);
    let rhs = DVector::from_fn(modes, |j, _| -y[j] * (-sys.mu[j] * duration).exp());
    let (eta, regularized) = solve_gramian(&w, &rhs)?;
    let eta: Vec<f64> = eta.iter().copied().collect();
    let post_state = sys.state_at(y, &eta, duration, duration);
    let low_mode_residual = post_state[..modes].iter().map(|v| v * v).sum::<f64>().sqrt();
    let e = DVector::from_column_slice(&eta);
    let cost = e.dot(&(&w * &e)).max(0.0).sqrt();
    Ok(LowModeControl { modes, duration, eta, post_state, cost, low_mode_residual, regularized })
}

pub fn low_mode_control(
    eig: &EigenDecomposition,
    omega: &ObservationWindow,
    y: &[f64],
    cutoff: f64,
    duration: f64,
) -> Result<LowModeControl> {
    control_stage(&ControlSystem::new(eig, omega)?, y, cutoff, duration)
}

/// Control values on the window nodes, sampled uniformly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredControl {
    pub t_start: f64,
    pub dt: f64,
    /// Grid indices of the window nodes (columns of `values`).
    pub nodes: Vec<usize>,
    /// Row `k` is `v(t_start + k·dt, ·)` on the window.
    pub values: DMatrix<f64>,
}

impl StoredControl {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.dt * (self.values.nrows() - 1) as f64
    }

    /// First sample row and weights of the four-point Lagrange
    /// interpolant at `t`.
    fn stencil(&self, t: f64) -> (usize, [f64; 4]) {
        let last = self.values.nrows() - 1;
        let p = (t - self.t_start) / self.dt;
        if last < 3 {
            let k = (p.round().max(0.0) as usize).min(last);
            return (k, [1.0, 0.0, 0.0, 0.0]);
        }
        let k = (p.floor() as isize).clamp(1, last as isize - 2) as usize;
        let u = p - k as f64;
        let nodes = [-1.0, 0.0, 1.0, 2.0];
        let mut l = [0.0; 4];
        for (a, &xa) in nodes.iter().enumerate() {
            l[a] = nodes.iter().filter(|&&xb| xb != xa).map(|&xb| (u - xb) / (xa - xb)).product();
        }
        (k - 1, l)
    }

    /// Four-point Lagrange interpolation in time.
    pub fn interpolate(&self, t: f64) -> DVector<f64> {
        let (first, l) = self.stencil(t);
        let mut out = DVector::zeros(self.values.ncols());
        for (a, la) in l.iter().enumerate().filter(|(_, la)| **la != 0.0) {
            out += self.values.row(first + a).transpose() * *la;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageReport {
    pub cutoff: f64,
    pub modes: usize,
    pub t_start: f64,
    pub t_control: f64,
    pub t_decay: f64,
    pub incoming_norm: f64,
    pub stage_cost: f64,
    /// Norm right after the control window.
    pub post_stage_norm: f64,
    pub low_mode_residual: f64,
    pub regularized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state_norm: f64,
    pub control_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlResult {
    pub schedule: LrSchedule,
    pub final_state: Vec<f64>,
    pub final_norm: f64,
    /// `‖v‖_{L²((0,T)×Ω)}`.
    pub cost: f64,
    pub per_stage: Vec<StageReport>,
    pub trajectory: Vec<TrajectorySample>,
    pub controls: Vec<StoredControl>,
    /// Smallest `C` with `stage_cost ≤ C e^{C μ_k^{1/4}} · incoming_norm`
    /// over all stages.
    pub tradeoff_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("stage {stage} failed: {reason}")]
pub struct StageFailure {
    pub stage: usize,
    pub reason: String,
    /// Everything up to the failing stage.
    pub partial: Box<ControlResult>,
}

impl From<StageFailure> for LabError {
    fn from(f: StageFailure) -> Self {
        LabError::Inconsistent(f.to_string())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest `C ≥ 0` with `C e^{C q} ≥ ratio`.
fn tradeoff(ratio: f64, q: f64) -> f64 {
    if !(ratio > 0.0) {
        return 0.0;
    }
    let f = |c: f64| c * (c * q).exp() - ratio;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Runs the schedule from `y0` (eigencoordinates). Each stage stores at
/// least `samples + 1` control values, more when the fastest controlled
/// mode needs them, and contributes about `samples` trajectory rows.
pub fn run_lr(
    eig: &EigenDecomposition,
    omega: &ObservationWindow,
    y0: &[f64],
    schedule: &LrSchedule,
    samples: usize,
) -> std::result::Result<ControlResult, StageFailure> {
    let fail = |stage: usize, reason: String, partial: ControlResult| StageFailure {
        stage,
        reason,
        partial: Box::new(partial),
    };
    let mut result = ControlResult {
        schedule: schedule.clone(),
        final_state: y0.to_vec(),
        final_norm: norm(y0),
        cost: 0.0,
        per_stage: Vec::new(),
        trajectory: vec![TrajectorySample { t: 0.0, state_norm: norm(y0), control_norm: 0.0 }],
        controls: Vec::new(),
        tradeoff_constant: 0.0,
    };
    let sys = match ControlSystem::new(eig, omega) {
        Ok(s) => s,
        Err(e) => return Err(fail(0, e.to_string(), result)),
    };
    if y0.len() != sys.len() || samples < 4 {
        return Err(fail(0, format!("need {} coefficients and at least 4 samples", sys.len()), result));
    }
    let y0_norm = norm(y0);
    let mut state = y0.to_vec();
    let mut cost2 = 0.0;
    for (k, stage) in schedule.stages.iter().enumerate() {
        let incoming = norm(&state);
        let ctl = match control_stage(&sys, &state, stage.cutoff, stage.t_control) {
            Ok(c) => c,
            Err(e) => return Err(fail(k, e.to_string(), result)),
        };
        if ctl.low_mode_residual > LOW_MODE_TOLERANCE * y0_norm {
            let reason =
                format!("low-mode residual {:e} exceeds {:e}", ctl.low_mode_residual, LOW_MODE_TOLERANCE * y0_norm);
            return Err(fail(k, reason, result));
        }

        let fastest = sys.mu[ctl.modes - 1] * stage.t_control;
        let stored = samples.max((fastest / MAX_DECAY_PER_SAMPLE).ceil() as usize);
        let stride = stored.div_ceil(samples);
        let dt = stage.t_control / stored as f64;
        let mut values = DMatrix::zeros(stored + 1, sys.omega_nodes.len());
        for s in 0..=stored {
            let t = s as f64 * dt;
            let w = sys.weights_at(&ctl.eta, stage.t_control, t);
            values.row_mut(s).copy_from(&sys.nodal(&w).transpose());
            if s > 0 && (s % stride == 0 || s == stored) {
                let y = sys.state_at(&state, &ctl.eta, stage.t_control, t);
                result.trajectory.push(TrajectorySample {
                    t: stage.t_start + t,
                    state_norm: norm(&y),
                    control_norm: sys.control_norm(&w),
                });
            }
        }
        result.controls.push(StoredControl { t_start: stage.t_start, dt, nodes: sys.omega_nodes.clone(), values });

        let post_norm = norm(&ctl.post_state);
        let decay_samples = samples / 4;
        for s in 1..=decay_samples {
            let t = stage.t_decay * s as f64 / decay_samples as f64;
            let y = simulate_free(eig, &ctl.post_state, t).expect("sizes checked");
            result.trajectory.push(TrajectorySample {
                t: stage.t_start + stage.t_control + t,
                state_norm: norm(&y),
                control_norm: 0.0,
            });
        }
        state = simulate_free(eig, &ctl.post_state, stage.t_decay).expect("sizes checked");
        cost2 += ctl.cost * ctl.cost;
        if incoming > 0.0 {
            let c = tradeoff(ctl.cost / incoming, stage.cutoff.powf(0.25));
            result.tradeoff_constant = result.tradeoff_constant.max(c);
        }
        result.per_stage.push(StageReport {
            cutoff: stage.cutoff,
            modes: ctl.modes,
            t_start: stage.t_start,
            t_control: stage.t_control,
            t_decay: stage.t_decay,
            incoming_norm: incoming,
            stage_cost: ctl.cost,
            post_stage_norm: post_norm,
            low_mode_residual: ctl.low_mode_residual,
            regularized: ctl.regularized,
        });
        result.final_norm = norm(&state);
        result.final_state = state.clone();
        result.cost = cost2.sqrt();
    }
    Ok(result)
}

/// Unit vector of `len` eigencoordinates with independent Gaussian
/// directions, reproducible from `seed`.
pub fn random_unit_state(len: usize, seed: u64) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Independent runs in parallel, in input order.
pub fn run_lr_batch(
    eig: &EigenDecomposition,
    omega: &ObservationWindow,
    initial: &[Vec<f64>],
    schedule: &LrSchedule,
    samples: usize,
    exec: Exec,
) -> Vec<std::result::Result<ControlResult, StageFailure>> {
    map_indexed(exec, initial.len(), |i| run_lr(eig, omega, &initial[i], schedule, samples))
}

/// `∫₀¹ e^{−z(1−u)} u^p du` for `p = 0..=3`.
fn exp_moments(z: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    if z < 1.0 {
        // Σ_k (−z)^k p! / (k+p+1)!
        for (p, slot) in out.iter_mut().enumerate() {
            let mut term = 1.0 / (p + 1) as f64;
            let mut sum = term;
            for k in 1..40 {
                term *= -z / (k + p + 1) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        out[0] = -(-z).exp_m1() / z;
        for p in 1..4 {
            out[p] = (1.0 - p as f64 * out[p - 1]) / z;
        }
    }
    out
}

/// Monomial coefficients of the Lagrange basis on `u = 0, ⅓, ⅔, 1`.
fn lagrange_monomials() -> DMatrix<f64> {
    let nodes: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    let vander = DMatrix::from_fn(4, 4, |q, p| nodes[q].powi(p as i32));
    // Column q of V⁻¹ holds the coefficients of ℓ_q.
    vander.try_inverse().expect("distinct nodes")
}

/// Re-integrates `ċ = −Dc + P_ω v` from the stored controls with an
/// exponential integrator: exact decay, forcing interpolated in time and
/// integrated exactly against the exponential on each of `refinement`
/// substeps per stored sample.
pub fn verify_by_resimulation(
    eig: &EigenDecomposition,
    omega: &ObservationWindow,
    controls: &[StoredControl],
    y0: &[f64],
    horizon: f64,
    refinement: usize,
) -> Result<f64> {
    if refinement == 0 || y0.len() != eig.len() {
        return Err(LabError::Precondition(format!("need refinement ≥ 1 and {} coefficients", eig.len())));
    }
    let n = eig.len();
    let window: Vec<usize> = (0..n).filter(|&i| omega.mask()[i]).collect();
    // Forcing g = F v with F_{k,x} = h w_x φ_k(x).
    let forcing = DMatrix::from_fn(n, window.len(), |k, r| {
        let i = window[r];
        eig.h * eig.weights[i] * eig.phi[(i, k)]
    });
    let basis = lagrange_monomials();
    let nodes = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];

    let mut ordered: Vec<&StoredControl> = controls.iter().collect();
    ordered.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    let mut c = y0.to_vec();
    let mut t = 0.0;
    for ctl in ordered {
        if ctl.nodes != window {
            return Err(LabError::Precondition("stored control does not match the window".into()));
        }
        if ctl.t_start < t - 1e-12 {
            return Err(LabError::Precondition("stored controls overlap".into()));
        }
        c = simulate_free(eig, &c, (ctl.t_start - t).max(0.0))?;
        let steps = (ctl.values.nrows() - 1) * refinement;
        let delta = ctl.dt / refinement as f64;
        // Per-mode quadrature weights for the four substep nodes.
        let weights: Vec<[f64; 4]> = eig
            .mu
            .iter()
            .map(|&m| {
                let moments = exp_moments(m * delta);
                let mut w = [0.0; 4];
                for (q, wq) in w.iter_mut().enumerate() {
                    *wq = delta * (0..4).map(|p| basis[(p, q)] * moments[p]).sum::<f64>();
                }
                w
            })
            .collect();
        let decay: Vec<f64> = eig.mu.iter().map(|m| (-m * delta).exp()).collect();
        // Interpolation is linear, so interpolate the forcing samples directly.
        let g_samples = &forcing * ctl.values.transpose();
        let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for s in 0..steps {
            let t0 = ctl.t_start + s as f64 * delta;
            for (q, u) in nodes.iter().enumerate() {
                let (first, l) = ctl.stencil(t0 + u * delta);
                g[q].iter_mut().for_each(|v| *v = 0.0);
                for (a, la) in l.iter().enumerate().filter(|(_, la)| **la != 0.0) {
                    for (gk, sk) in g[q].iter_mut().zip(g_samples.column(first + a).iter()) {
                        *gk += la * sk;
                    }
                }
            }
            for k in 0..n {
                c[k] = decay[k] * c[k] + (0..4).map(|q| weights[k][q] * g[q][k]).sum::<f64>();
            }
        }
        t = ctl.t_end();
    }
    if horizon < t - 1e-12 {
        return Err(LabError::Precondition("controls extend past the horizon".into()));
    }
    c = simulate_free(eig, &c, (horizon - t).max(0.0))?;
    Ok(norm(&c))
}
