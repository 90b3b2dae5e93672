use biphoton::polarization::{
    concurrence, fidelity_singlet, full_settings, model_state, reconstruct_mle, reconstruct_mle_report,
    simulate_tomography, state_purity, tangle, trace_distance, TwoQubitState,
};
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;

fn su2(theta: f64, alpha: f64, beta: f64) -> Matrix2<Complex64> {
    let (c, s) = (theta.cos(), theta.sin());
    Matrix2::new(
        Complex64::from_polar(c, alpha),
        Complex64::from_polar(s, beta),
        -Complex64::from_polar(s, -beta),
        Complex64::from_polar(c, -alpha),
    )
}

fn check_invariants(s: &TwoQubitState) -> Result<(), TestCaseError> {
    let rho: &Matrix4<Complex64> = s.rho();
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    prop_assert!(herm <= 1e-10);
    prop_assert!((rho.trace().re - 1.0).abs() <= 1e-9);
    prop_assert!(rho.symmetric_eigenvalues().min() >= -1e-9);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn model_states_are_valid(p in 0.0f64..=1.0, e in 0.0f64..=1.0, phi in -6.3f64..6.3) {
        let s = model_state(p, e, phi).unwrap();
        check_invariants(&s)?;
        let f = fidelity_singlet(&s);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&state_purity(&s)));
        prop_assert!((0.0..=1.0 + 1e-9).contains(&tangle(&s)));
    }

    #[test]
    fn werner_closed_forms(p in 0.0f64..=1.0) {
        let s = model_state(p, 0.0, 0.0).unwrap();
        prop_assert!((fidelity_singlet(&s) - (1.0 - 0.75 * p)).abs() < 1e-9);
        prop_assert!((state_purity(&s) - (1.0 - 1.5 * p + 0.75 * p * p)).abs() < 1e-9);
        let c = (1.0 - 1.5 * p).max(0.0);
        prop_assert!((concurrence(&s) - c).abs() < 1e-9);
        prop_assert!((tangle(&s) - c * c).abs() < 1e-9);
    }

    #[test]
    fn local_unitary_invariance(
        p in 0.0f64..0.6, e in 0.0f64..0.5, phi in -3.2f64..3.2,
        u in (0.0f64..1.6, -3.2f64..3.2, -3.2f64..3.2),
        v in (0.0f64..1.6, -3.2f64..3.2, -3.2f64..3.2),
    ) {
        let s = model_state(p, e, phi).unwrap();
        let t = s.local_unitary(&su2(u.0, u.1, u.2), &su2(v.0, v.1, v.2)).unwrap();
        check_invariants(&t)?;
        prop_assert!((tangle(&s) - tangle(&t)).abs() < 1e-9, "{} vs {}", tangle(&s), tangle(&t));
        prop_assert!((state_purity(&s) - state_purity(&t)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reconstructions_are_valid(p in 0.0f64..=1.0, e in 0.0f64..=1.0, phi in -3.2f64..3.2, seed in any::<u64>()) {
        let s = model_state(p, e, phi).unwrap();
        let recs = simulate_tomography(&s, &full_settings(), 1000, seed).unwrap();
        check_invariants(&reconstruct_mle(&recs).unwrap())?;
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn werner_round_trip_over_seeds() {
    let s = model_state(0.04, 0.0, 0.0).unwrap();
    for seed in 0..20 {
        let recs = simulate_tomography(&s, &full_settings(), 10_000, seed).unwrap();
        let f = fidelity_singlet(&reconstruct_mle(&recs).unwrap());
        assert!((f - 0.97).abs() < 0.01, "seed {seed}: {f}");
    }
}

#[test]
fn error_shrinks_with_counts() {
    let s = model_state(0.03, 0.05, 0.1).unwrap();
    let medians: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| {
            median(
                (0..9)
                    .map(|seed| {
                        let recs = simulate_tomography(&s, &full_settings(), n, seed).unwrap();
                        trace_distance(&reconstruct_mle(&recs).unwrap(), &s)
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn optimizer_converges() {
    let s = model_state(0.021, 0.0, 0.0).unwrap();
    let recs = simulate_tomography(&s, &full_settings(), 10_000, 7).unwrap();
    let rep = reconstruct_mle_report(&recs).unwrap();
    assert!(rep.converged, "{rep:?}");
}
