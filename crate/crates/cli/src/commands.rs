//! One function per subcommand. Each validates its section, runs the
//! experiment and returns the files to write together with the exit status.

use lslab::biharmonic::{assemble, eigendecompose, BcPair, EigenDecomposition, Grid1D, MAX_DENSE};
use lslab::conjugate::{sweep_tau, ConjugationPoint};
use lslab::control::{random_unit_state, run_lr, verify_by_resimulation, LrSchedule, StageReport};
use lslab::ls::{scan_sphere, LsMode, LsReport, SphereScan};
use lslab::probe::{fit_scaling, observability_sweep, ObservationWindow, ScalingFit};
use lslab::symbol::TangentialFrequency;
use lslab::Exec;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, GridConfig, ScanMode};
use crate::output::{num, Csv, Report};
use crate::CliError;

/// Final state norm, relative to `‖y0‖`, that counts as null-controlled.
pub const NULL_TOLERANCE: f64 = 1e-8;

/// Files to write (name, contents) and the process status: 0 when the
/// check passed, 1 when it ran but did not pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub status: u8,
    pub summary: String,
}

pub fn run(command: Command, cfg: &ExperimentConfig, expect_violation: bool) -> Result<Outcome, CliError> {
    match command {
        Command::LsCheck => ls_check(cfg, expect_violation),
        Command::Conjugate => conjugate(cfg),
        Command::Eigs => eigs(cfg),
        Command::Probe => probe(cfg),
        Command::Control => control(cfg),
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(input(format!("{name} must be positive and finite, got {v}")))
    }
}

fn report_json<T: Serialize>(command: Command, cfg: &ExperimentConfig, result: &T) -> (String, String) {
    (format!("{}.json", command.name()), Report::new(command, cfg, result).to_json())
}

#[derive(Serialize)]
struct LsCheckResult<'a> {
    #[serde(flatten)]
    report: &'a LsReport,
    expect_violation: bool,
    passed: bool,
}

fn ls_check(cfg: &ExperimentConfig, expect_violation: bool) -> Result<Outcome, CliError> {
    let c = &cfg.ls_check;
    let (b1, b2) = c.pair.build()?;
    if c.samples < 16 {
        return Err(input(format!("samples must be at least 16, got {}", c.samples)));
    }
    positive("threshold", c.threshold)?;
    if let Some(d) = &c.direction {
        if d.len() != b1.dim() || !d.iter().any(|x| *x != 0.0) || d.iter().any(|x| !x.is_finite()) {
            return Err(input(format!("direction must be a finite nonzero vector of length {}", b1.dim())));
        }
    }
    let mode = match c.mode {
        ScanMode::Augmented => LsMode::AugmentedQ,
        ScanMode::Static => LsMode::StaticP,
    };
    let scan = SphereScan {
        mode,
        n: c.samples,
        threshold: c.threshold,
        direction: c.direction.clone(),
        exec: Exec::default(),
    };
    let (report, table) = scan_sphere(&b1, &b2, &scan)?;
    let passed = report.certified != expect_violation;

    let mut files =
        vec![report_json(Command::LsCheck, cfg, &LsCheckResult { report: &report, expect_violation, passed })];
    if c.write_csv {
        let mut csv = Csv::new(&["theta", "sigma", "r", "re_det", "im_det", "normalized_abs"]);
        for s in &table {
            csv.row(&[num(s.theta), num(s.sigma), num(s.r), num(s.det.re), num(s.det.im), num(s.normalized_abs)]);
        }
        files.push(("ls-check.csv".into(), csv.into_string()));
    }
    let p = &report.argmin_point;
    let summary = format!(
        "{}: minimum normalized determinant {} at sigma = {}, r = {}",
        if report.certified { "certified" } else { "not certified" },
        num(report.min_normalized_det),
        num(p.sigma()),
        num(p.r())
    );
    Ok(Outcome { files, status: u8::from(!passed), summary })
}

#[derive(Serialize)]
struct ConjugateResult {
    rows: usize,
    /// Rows per root case 1 to 4.
    case_counts: [usize; 4],
    min_abs_det_normalized: f64,
    rank_deficient_rows: usize,
    min_gram: f64,
}

fn conjugate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.conjugate;
    let (b1, b2) = c.pair.build()?;
    if c.xi_prime.len() != b1.dim() || c.phi_xp.len() != b1.dim() {
        return Err(input(format!("xi_prime and phi_xp must have length {}", b1.dim())));
    }
    if !(c.sigma.is_finite() && c.xi_prime.iter().all(|x| x.is_finite())) {
        return Err(input("frequency must be finite"));
    }
    if !(c.tau_max >= 0.0 && c.tau_max.is_finite()) || c.tau_steps == 0 {
        return Err(input("need tau_max >= 0 and tau_steps >= 1"));
    }
    let point = ConjugationPoint::new(0.0, c.phi_s, c.phi_xp.clone(), c.phi_d)?;
    let freq = TangentialFrequency::new(c.sigma, c.xi_prime.clone());
    let taus: Vec<f64> = (0..c.tau_steps)
        .map(|k| if c.tau_steps == 1 { 0.0 } else { c.tau_max * k as f64 / (c.tau_steps - 1) as f64 })
        .collect();
    let rows = sweep_tau(&b1, &b2, &point, &freq, &taus, Exec::default())?;

    let mut csv = Csv::new(&[
        "tau",
        "sigma",
        "r",
        "mu0",
        "case",
        "im_pi_1p",
        "im_pi_2p",
        "abs_det_normalized",
        "rank",
        "gram_min",
    ]);
    let mut case_counts = [0; 4];
    for r in &rows {
        case_counts[r.case as usize - 1] += 1;
        csv.row(&[
            num(r.tau),
            num(r.sigma),
            num(r.r),
            num(r.mu0),
            r.case.to_string(),
            num(r.im_pi_1p),
            num(r.im_pi_2p),
            num(r.abs_det_normalized),
            r.rank.to_string(),
            num(r.gram_min),
        ]);
    }
    let result = ConjugateResult {
        rows: rows.len(),
        case_counts,
        min_abs_det_normalized: rows.iter().map(|r| r.abs_det_normalized).fold(f64::INFINITY, f64::min),
        rank_deficient_rows: rows.iter().filter(|r| r.rank < 4).count(),
        min_gram: rows.iter().map(|r| r.gram_min).fold(f64::INFINITY, f64::min),
    };
    let summary = format!(
        "{} tau values, cases {:?}, {} rank-deficient",
        result.rows, result.case_counts, result.rank_deficient_rows
    );
    Ok(Outcome {
        files: vec![report_json(Command::Conjugate, cfg, &result), ("conjugate.csv".into(), csv.into_string())],
        status: 0,
        summary,
    })
}

fn decompose(grid: &GridConfig) -> Result<EigenDecomposition, CliError> {
    if !(8..=MAX_DENSE).contains(&grid.n) {
        return Err(input(format!("grid n must be in 8..={MAX_DENSE}, got {}", grid.n)));
    }
    positive("length", grid.length)?;
    let g = Grid1D::new(grid.n, grid.length)?;
    Ok(eigendecompose(&assemble(&g, BcPair { left: grid.left, right: grid.right }))?)
}

fn window(eig: &EigenDecomposition, w: [f64; 2]) -> Result<ObservationWindow, CliError> {
    if !(w[0] < w[1]) || !w.iter().all(|x| x.is_finite()) {
        return Err(input(format!("window must satisfy a < b, got [{}, {}]", w[0], w[1])));
    }
    Ok(ObservationWindow::interval(eig, w[0], w[1])?)
}

#[derive(Serialize)]
struct EigsResult {
    size: usize,
    h: f64,
    shift: f64,
    rows: usize,
    mu_min: f64,
    mu_max: f64,
}

fn eigs(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.eigs;
    let eig = decompose(&c.grid)?;
    let count = c.count.unwrap_or(eig.len());
    if count == 0 || count > eig.len() {
        return Err(input(format!("count must be in 1..={}", eig.len())));
    }
    let mut csv = Csv::new(&["j", "mu_j", "mu_j^{1/4}"]);
    for (j, mu) in eig.mu[..count].iter().enumerate() {
        csv.row(&[(j + 1).to_string(), num(*mu), num(mu.powf(0.25))]);
    }
    let result = EigsResult {
        size: eig.len(),
        h: eig.h,
        shift: eig.shift,
        rows: count,
        mu_min: eig.mu[0],
        mu_max: eig.mu[eig.len() - 1],
    };
    let summary = format!("{} eigenvalues, mu_1 = {}", eig.len(), num(eig.mu[0]));
    let mut files = vec![report_json(Command::Eigs, cfg, &result), ("eigs.csv".into(), csv.into_string())];
    if c.vectors {
        let header: Vec<String> =
            std::iter::once("x".to_string()).chain((1..=count).map(|j| format!("phi_{j}"))).collect();
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut vectors = Csv::new(&refs);
        for (i, x) in eig.nodes.iter().enumerate() {
            let row: Vec<String> = std::iter::once(num(*x)).chain((0..count).map(|j| num(eig.phi[(i, j)]))).collect();
            vectors.row(&row);
        }
        files.push(("eigs-vectors.csv".into(), vectors.into_string()));
    }
    Ok(Outcome { files, status: 0, summary })
}

#[derive(Serialize)]
struct ProbeResult {
    window_measure: f64,
    thresholds: usize,
    singular: usize,
    /// Least-squares `log K ≈ slope μ^{1/4} + intercept`; absent with fewer
    /// than four finite constants.
    fit: Option<ScalingFit>,
    log_k_range: f64,
}

fn probe(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.probe;
    let eig = decompose(&c.grid)?;
    let omega = window(&eig, c.window)?;
    if c.modes == 0 || c.modes > eig.len() {
        return Err(input(format!("modes must be in 1..={}", eig.len())));
    }
    let mus = eig.mu[..c.modes].to_vec();
    let points = observability_sweep(&eig, &omega, &mus, Exec::default())?;

    let mut csv = Csv::new(&["mu", "mu_quarter", "dim", "K", "logK"]);
    for p in &points {
        csv.row(&[num(p.mu), num(p.mu.powf(0.25)), p.dim.to_string(), num(p.k), num(p.k.ln())]);
    }
    let finite: Vec<f64> = points.iter().map(|p| p.k.ln()).filter(|v| v.is_finite()).collect();
    let log_k_range = if finite.is_empty() {
        0.0
    } else {
        finite.iter().copied().fold(f64::NEG_INFINITY, f64::max) - finite.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let fit = if finite.len() == points.len() && points.len() >= 4 { Some(fit_scaling(&points)?) } else { None };
    let result = ProbeResult {
        window_measure: omega.measure(),
        thresholds: points.len(),
        singular: points.iter().filter(|p| p.singular).count(),
        fit,
        log_k_range,
    };
    let summary = match &fit {
        Some(f) => format!("slope {} of log K against mu^(1/4), max residual {}", num(f.slope), num(f.max_residual)),
        None => format!("{} thresholds, {} unresolved", result.thresholds, result.singular),
    };
    Ok(Outcome {
        files: vec![report_json(Command::Probe, cfg, &result), ("probe.csv".into(), csv.into_string())],
        status: 0,
        summary,
    })
}

#[derive(Serialize)]
struct ControlSummary<'a> {
    initial_norm: f64,
    final_norm: f64,
    reached: bool,
    cost: f64,
    tradeoff_constant: f64,
    /// Final norm re-integrated from the stored controls.
    #[serde(skip_serializing_if = "Option::is_none")]
    resimulated_final_norm: Option<f64>,
    stages: &'a [StageReport],
}

fn control(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.control;
    positive("horizon", c.horizon)?;
    positive("base", c.base)?;
    if !(c.control_fraction > 0.0 && c.control_fraction <= 1.0) {
        return Err(input("control_fraction must be in (0, 1]"));
    }
    if c.samples < 4 {
        return Err(input("samples must be at least 4"));
    }
    let eig = decompose(&c.grid)?;
    let omega = window(&eig, c.window)?;
    let y0 = match c.initial_mode {
        Some(k) if (1..=eig.len()).contains(&k) => (0..eig.len()).map(|i| if i + 1 == k { 1.0 } else { 0.0 }).collect(),
        Some(k) => return Err(input(format!("initial_mode must be in 1..={}, got {k}", eig.len()))),
        None => random_unit_state(eig.len(), cfg.seed),
    };
    let mu_max = eig.mu[eig.len() - 1];
    let schedule = LrSchedule::dyadic(c.horizon, c.base, mu_max, c.control_fraction)?;
    let res = run_lr(&eig, &omega, &y0, &schedule, c.samples).map_err(lslab::LabError::from)?;
    let resimulated = if c.refinement > 0 {
        Some(verify_by_resimulation(&eig, &omega, &res.controls, &y0, c.horizon, c.refinement)?)
    } else {
        None
    };
    let y0_norm = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reached =
        res.final_norm <= NULL_TOLERANCE * y0_norm && resimulated.is_none_or(|r| r <= NULL_TOLERANCE * y0_norm);
    let summary = ControlSummary {
        initial_norm: y0_norm,
        final_norm: res.final_norm,
        reached,
        cost: res.cost,
        tradeoff_constant: res.tradeoff_constant,
        resimulated_final_norm: resimulated,
        stages: &res.per_stage,
    };
    let mut csv = Csv::new(&["t", "y_norm", "v_norm"]);
    for s in &res.trajectory {
        csv.row(&[num(s.t), num(s.state_norm), num(s.control_norm)]);
    }
    let text = format!(
        "{} stages over T = {}, final norm {}, cost {}",
        res.per_stage.len(),
        num(c.horizon),
        num(res.final_norm),
        num(res.cost)
    );
    Ok(Outcome {
        files: vec![report_json(Command::Control, cfg, &summary), ("control-trajectory.csv".into(), csv.into_string())],
        status: u8::from(!reached),
        summary: text,
    })
}
