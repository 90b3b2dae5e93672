use biphoton::dispersion::CrystalAxes;
use biphoton::jsa::{
    apply_filter, compute_jsa, marginal_spectrum, optimize_pump_bandwidth, schmidt_decompose, Arm, FilterSpec,
    FrequencyGrid, JointAmplitude,
};
use biphoton::phasematch::{CrystalSpec, PumpSpec};
use proptest::prelude::*;

fn default_jsa(points: usize) -> JointAmplitude {
    let grid = FrequencyGrid::default().with_points(points).unwrap();
    compute_jsa(&PumpSpec::default_ti_sapphire(), &CrystalSpec::default_ktp(), &grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn normalization_and_schmidt_sums(
        center in 775.0f64..795.0,
        fwhm in 1.0f64..12.0,
        length in 0.5f64..5.0,
        points in prop::sample::select(vec![32usize, 64]),
        filter_fwhm in 3.0f64..30.0,
        filter_shift in -5.0f64..5.0,
    ) {
        let pump = PumpSpec::new(center, fwhm, 81.0).unwrap();
        let crystal = CrystalSpec::new(length, 46.15, 20.0, CrystalAxes::ktp_type_ii()).unwrap();
        let grid = FrequencyGrid::new(2.0 * center, 2.0 * center, 60.0, points).unwrap();
        let jsa = compute_jsa(&pump, &crystal, &grid).unwrap();
        prop_assert!((jsa.norm() - 1.0).abs() < 1e-9);
        let s = schmidt_decompose(&jsa).unwrap();
        prop_assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((s.purity * s.schmidt_number - 1.0).abs() < 1e-9);
        prop_assert!(s.purity > 0.0 && s.purity <= 1.0 + 1e-12);

        let f = FilterSpec::gaussian(2.0 * center + filter_shift, filter_fwhm).unwrap();
        let filtered = apply_filter(&jsa, Some(&f), Some(&f)).unwrap();
        prop_assert!((filtered.norm() - 1.0).abs() < 1e-9);
        let surv = filtered.filter_survival().unwrap();
        for v in [surv.signal, surv.idler, surv.joint] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(surv.joint <= surv.signal.min(surv.idler) + 1e-12);
        let fs = schmidt_decompose(&filtered).unwrap();
        prop_assert!((fs.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn default_profile_purity_and_marginals() {
    let jsa = default_jsa(512);
    let s = schmidt_decompose(&jsa).unwrap();
    assert!((s.purity - 0.84).abs() < 0.03, "{}", s.purity);
    for arm in [Arm::Signal, Arm::Idler] {
        let m = marginal_spectrum(&jsa, arm).unwrap();
        assert!((m.fwhm_nm - 15.0).abs() < 2.0, "{arm} FWHM {}", m.fwhm_nm);
        let lobe = m.central_lobe_span_nm.unwrap();
        assert!((lobe - 35.0).abs() < 5.0, "{arm} central lobe {lobe}");
    }
}

#[test]
fn eight_nm_filters() {
    let jsa = default_jsa(512);
    let f = FilterSpec::gaussian(1570.0, 8.0).unwrap();
    let filtered = apply_filter(&jsa, Some(&f), Some(&f)).unwrap();
    let s = schmidt_decompose(&filtered).unwrap();
    assert!(s.purity >= 0.98, "{}", s.purity);
    let surv = filtered.filter_survival().unwrap();
    for arm in [Arm::Signal, Arm::Idler] {
        assert!((surv.arm(arm) - 0.5).abs() < 0.15, "{arm} survival {}", surv.arm(arm));
        assert!((surv.heralding_factor(arm) - 0.5).abs() < 0.15);
    }
}

#[test]
fn filtering_does_not_lower_purity() {
    let jsa = default_jsa(512);
    let base = schmidt_decompose(&jsa).unwrap().purity;
    let fwhm = marginal_spectrum(&jsa, Arm::Signal).unwrap().fwhm_nm;
    for width in [4.0, 8.0, 12.0] {
        assert!(width < fwhm);
        let f = FilterSpec::gaussian(1570.0, width).unwrap();
        let p = schmidt_decompose(&apply_filter(&jsa, Some(&f), Some(&f)).unwrap()).unwrap().purity;
        assert!(p >= base, "{width} nm: {p} < {base}");
    }
}

#[test]
fn rank_one_product_is_pure() {
    let grid = FrequencyGrid::default().with_points(128).unwrap();
    let ls = grid.wavelengths_nm(Arm::Signal);
    let li = grid.wavelengths_nm(Arm::Idler);
    let g = |l: f64, c: f64, w: f64| (-((l - c) / w).powi(2)).exp();
    let m = nalgebra::DMatrix::from_fn(128, 128, |i, j| {
        num_complex::Complex64::new(g(ls[i], 1568.0, 6.0) * g(li[j], 1572.0, 9.0), 0.0)
    });
    let jsa = JointAmplitude::from_matrix(grid, m).unwrap();
    assert!((schmidt_decompose(&jsa).unwrap().purity - 1.0).abs() < 1e-12);
}

#[test]
fn longer_crystal_prefers_narrower_pump() {
    let grid = FrequencyGrid::default().with_points(128).unwrap();
    let two = CrystalSpec::default_ktp();
    let four = two.with_length(4.0).unwrap();
    let a = optimize_pump_bandwidth(&two, 785.0, (1.0, 12.0), &grid).unwrap();
    let b = optimize_pump_bandwidth(&four, 785.0, (1.0, 12.0), &grid).unwrap();
    assert!(b.best_fwhm_nm < a.best_fwhm_nm, "{} vs {}", b.best_fwhm_nm, a.best_fwhm_nm);
}

#[test]
fn deterministic_across_runs() {
    let a = default_jsa(128);
    let b = default_jsa(128);
    assert!(a.amplitudes().iter().zip(b.amplitudes().iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}
