use biphoton::dispersion::CrystalAxes;
use biphoton::phasematch::{gvm_angle, gvm_degenerate_wavelength, phase_mismatch, solve_poling_period, CrystalSpec};
use biphoton::units::nm_to_omega;
use biphoton::Error;
use proptest::prelude::*;

fn idler_for(lp: f64, ls: f64) -> f64 {
    1.0 / (1.0 / lp - 1.0 / ls)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_round_trip(lp in 760.0f64..810.0, ls in 1450.0f64..1700.0, t in 10.0f64..60.0) {
        let li = idler_for(lp, ls);
        prop_assume!(li > 1400.0 && li < 1740.0);
        let axes = CrystalAxes::ktp_type_ii();
        let period = solve_poling_period(lp, ls, li, t, &axes).unwrap();
        let crystal = CrystalSpec::new(2.0, period, t, axes).unwrap();
        let dk = phase_mismatch(&crystal, nm_to_omega(ls), nm_to_omega(li)).unwrap();
        prop_assert!(dk.abs() < 1e-10, "ΔK = {dk} rad/µm");
    }

    #[test]
    fn thermal_expansion_off_is_bit_identical(ls in 1500.0f64..1650.0, li in 1500.0f64..1650.0) {
        let axes = CrystalAxes::ktp_type_ii().without_thermal();
        let a = CrystalSpec::new(2.0, 46.15, 20.0, axes.clone()).unwrap();
        let b = CrystalSpec::new(2.0, 46.15, 21.0, axes).unwrap();
        let (ws, wi) = (nm_to_omega(ls), nm_to_omega(li));
        prop_assert_eq!(
            phase_mismatch(&a, ws, wi).unwrap().to_bits(),
            phase_mismatch(&b, ws, wi).unwrap().to_bits()
        );
    }
}

/// Finds the grating frequency 1/Λ that zeroes ΔK by plain bisection.
fn bisect_inverse_period(ls: f64, li: f64, t: f64) -> f64 {
    let axes = CrystalAxes::ktp_type_ii();
    let mismatch = |g: f64| {
        let c = CrystalSpec::new(2.0, 1.0 / g, t, axes.clone()).unwrap();
        phase_mismatch(&c, nm_to_omega(ls), nm_to_omega(li)).unwrap()
    };
    let (mut a, mut b) = (1.0 / 200.0, 1.0 / 5.0);
    let fa = mismatch(a);
    assert!(fa.signum() != mismatch(b).signum());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if mismatch(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn closed_form_matches_bisection() {
    for (ls, t) in [(1570.0, 20.0), (1550.0, 35.0), (1600.0, 50.0)] {
        let li = idler_for(785.0, ls);
        let solved = solve_poling_period(785.0, ls, li, t, &CrystalAxes::ktp_type_ii()).unwrap();
        let oracle = 1.0 / bisect_inverse_period(ls, li, t);
        assert!(((solved - oracle) / oracle).abs() < 1e-10, "{solved} vs {oracle}");
    }
}

#[test]
fn degenerate_design_point() {
    let axes = CrystalAxes::ktp_type_ii();
    let period = solve_poling_period(785.0, 1570.0, 1570.0, 20.0, &axes).unwrap();
    assert!((period - 46.15).abs() < 0.4, "{period}");
    let lam = gvm_degenerate_wavelength(&axes, 20.0).unwrap();
    assert!((lam - 1582.0).abs() < 3.0, "{lam}");
}

#[test]
fn gvm_angle_is_45_at_gvm_wavelength() {
    let axes = CrystalAxes::ktp_type_ii();
    for t in [20.0, 40.0] {
        let lam = gvm_degenerate_wavelength(&axes, t).unwrap();
        let theta = gvm_angle(lam / 2.0, lam, lam, &axes, t).unwrap();
        assert!((theta - 45.0).abs() < 1e-4, "{theta}");
    }
}

#[test]
fn energy_violation_is_rejected() {
    let axes = CrystalAxes::ktp_type_ii();
    assert!(matches!(
        solve_poling_period(785.0, 1570.0, 1571.0, 20.0, &axes),
        Err(Error::InvalidInput(_))
    ));
}
