use biphoton::dispersion::CrystalAxes;
use biphoton::interference::{
    coincidence_probability, heralded_spectral_state, hom_curve, hom_visibility, multipair_visibility_bound,
    SpectralState,
};
use biphoton::jsa::{compute_jsa, schmidt_decompose, Arm, FilterSpec, FrequencyGrid, JointAmplitude};
use biphoton::phasematch::{CrystalSpec, PumpSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_state(center: f64, fwhm: f64, length: f64, arm: Arm, filter: Option<f64>) -> (SpectralState, f64) {
    let pump = PumpSpec::new(center, fwhm, 81.0).unwrap();
    let crystal = CrystalSpec::new(length, 46.15, 20.0, CrystalAxes::ktp_type_ii()).unwrap();
    let grid = FrequencyGrid::new(1570.0, 1570.0, 60.0, 32).unwrap();
    let jsa = compute_jsa(&pump, &crystal, &grid).unwrap();
    let purity = schmidt_decompose(&jsa).unwrap().purity;
    let f = filter.map(|w| FilterSpec::gaussian(1570.0, w).unwrap());
    (heralded_spectral_state(&jsa, arm, f.as_ref()).unwrap(), purity)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn visibility_properties(
        c1 in 780.0f64..790.0, f1 in 1.0f64..12.0, l1 in 0.5f64..4.0,
        c2 in 780.0f64..790.0, f2 in 1.0f64..12.0, l2 in 0.5f64..4.0,
        arm in prop::sample::select(vec![Arm::Signal, Arm::Idler]),
        phase in -3.2f64..3.2,
    ) {
        let (a, pa) = random_state(c1, f1, l1, arm, None);
        let (b, _) = random_state(c2, f2, l2, arm, Some(10.0));
        let vab = hom_visibility(&a, &b).unwrap();
        prop_assert_eq!(vab.to_bits(), hom_visibility(&b, &a).unwrap().to_bits());
        let vaa = hom_visibility(&a, &a).unwrap();
        prop_assert!((vaa - a.purity()).abs() < 1e-9);
        prop_assert!((vaa - pa).abs() < 1e-9, "{vaa} vs Schmidt {pa}");
        prop_assert!(vab <= (a.purity() * b.purity()).sqrt() + 1e-9);
        let curve = hom_curve(&a, &b, &[0.0]).unwrap();
        prop_assert!((curve.coincidence_probability[0] - 0.5 * (1.0 - vab)).abs() < 1e-9);
        prop_assert!((hom_visibility(&a.with_global_phase(phase), &b).unwrap() - vab).abs() < 1e-12);
    }
}

fn gaussian_state(grid: &FrequencyGrid, center_nm: f64, width_nm: f64) -> (SpectralState, Vec<Complex64>) {
    let ls = grid.wavelengths_nm(Arm::Signal);
    let amp: Vec<Complex64> = ls
        .iter()
        .map(|&l| Complex64::from_polar((-((l - center_nm) / width_nm).powi(2)).exp(), 0.02 * (l - center_nm)))
        .collect();
    let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<Complex64> = amp.iter().map(|z| z / norm).collect();
    let n = psi.len();
    // Rank-one joint amplitude with an arbitrary idler profile.
    let m = DMatrix::from_fn(n, n, |i, j| psi[i] * Complex64::new((-((j as f64 - 60.0) / 9.0).powi(2)).exp(), 0.0));
    let jsa = JointAmplitude::from_matrix(*grid, m).unwrap();
    (heralded_spectral_state(&jsa, Arm::Signal, None).unwrap(), psi)
}

#[test]
fn dip_matches_direct_overlap_for_pure_states() {
    let grid = FrequencyGrid::default().with_points(128).unwrap();
    let (a, pa) = gaussian_state(&grid, 1568.0, 6.0);
    let (b, pb) = gaussian_state(&grid, 1571.0, 8.0);
    let w = grid.omegas(Arm::Signal);
    for tau in [-800.0, -250.0, 0.0, 120.0, 600.0] {
        let overlap: Complex64 = (0..w.len())
            .map(|k| pa[k].conj() * pb[k] * Complex64::from_polar(1.0, w[k] * tau))
            .sum();
        let oracle = 0.5 * (1.0 - overlap.norm_sqr());
        let p = coincidence_probability(&a, &b, tau).unwrap();
        assert!((p - oracle).abs() < 1e-12, "τ = {tau}: {p} vs {oracle}");
    }
}

#[test]
fn default_heralded_state() {
    let grid = FrequencyGrid::default().with_points(256).unwrap();
    let jsa = compute_jsa(&PumpSpec::default_ti_sapphire(), &CrystalSpec::default_ktp(), &grid).unwrap();
    let purity = schmidt_decompose(&jsa).unwrap().purity;
    for arm in [Arm::Signal, Arm::Idler] {
        let s = heralded_spectral_state(&jsa, arm, None).unwrap();
        assert!((hom_visibility(&s, &s).unwrap() - purity).abs() < 1e-9);
    }
    // The dip recovers the baseline far from zero delay.
    let s = heralded_spectral_state(&jsa, Arm::Signal, None).unwrap();
    let curve = hom_curve(&s, &s, &[-3000.0, 0.0, 3000.0]).unwrap();
    assert!((curve.coincidence_probability[0] - 0.5).abs() < 1e-3);
    assert!((curve.visibility - purity).abs() < 1e-9);
}

#[test]
fn multipair_bound_is_exact() {
    assert_eq!(multipair_visibility_bound(0.0015).unwrap(), 0.997);
}
