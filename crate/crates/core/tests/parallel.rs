//! Parallel and sequential sweeps must agree bit for bit.

use std::f64::consts::PI;

use lslab::biharmonic::{assemble, eigendecompose, BcKind, BcPair, Grid1D};
use lslab::conjugate::{sweep_tau, ConjugationPoint};
use lslab::control::{run_lr_batch, LrSchedule};
use lslab::ls::{scan_sphere, LsMode, SphereScan};
use lslab::probe::{observability_sweep, ObservationWindow};
use lslab::symbol::presets::observation_pair;
use lslab::symbol::TangentialFrequency;
use lslab::Exec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sphere_scan(alpha in -3.0..1.0f64, n in 16usize..300, augmented: bool) {
        let (b1, b2) = observation_pair(alpha, 2);
        let mode = if augmented { LsMode::AugmentedQ } else { LsMode::StaticP };
        let par = SphereScan { exec: Exec::Parallel, direction: Some(vec![1.0, 0.5]), ..SphereScan::new(mode, n) };
        let seq = SphereScan { exec: Exec::Sequential, ..par.clone() };
        prop_assert_eq!(scan_sphere(&b1, &b2, &par).unwrap(), scan_sphere(&b1, &b2, &seq).unwrap());
    }

    #[test]
    fn tau_sweep(sigma in 0.01..2.0f64, r in 0.01..2.0f64, phi_s in -1.0..1.0f64, phi_d in 0.1..2.0f64) {
        let (b1, b2) = observation_pair(-2.0, 1);
        let point = ConjugationPoint::new(0.0, phi_s, vec![0.3], phi_d).unwrap();
        let freq = TangentialFrequency::scalar(sigma, r);
        let taus: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let par = sweep_tau(&b1, &b2, &point, &freq, &taus, Exec::Parallel).unwrap();
        let seq = sweep_tau(&b1, &b2, &point, &freq, &taus, Exec::Sequential).unwrap();
        prop_assert_eq!(par, seq);
    }
}

#[test]
fn observability_and_control_batches() {
    let eig = eigendecompose(&assemble(&Grid1D::new(24, PI).unwrap(), BcPair::both(BcKind::Hinged))).unwrap();
    let omega = ObservationWindow::interval(&eig, 0.0, 0.3 * PI).unwrap();
    let mus = eig.mu[..6].to_vec();
    assert_eq!(
        observability_sweep(&eig, &omega, &mus, Exec::Parallel).unwrap(),
        observability_sweep(&eig, &omega, &mus, Exec::Sequential).unwrap()
    );

    let schedule = LrSchedule::dyadic(1.0, 1.0, *eig.mu.last().unwrap(), 0.5).unwrap();
    let initial: Vec<Vec<f64>> = (0..3).map(|s| (0..eig.len()).map(|k| ((s * 7 + k) as f64).sin()).collect()).collect();
    let par = run_lr_batch(&eig, &omega, &initial, &schedule, 16, Exec::Parallel);
    let seq = run_lr_batch(&eig, &omega, &initial, &schedule, 16, Exec::Sequential);
    assert_eq!(par, seq);
}
