//! Phase mismatch, poling-period design and group-velocity matching.

use serde::{Deserialize, Serialize};

use crate::dispersion::CrystalAxes;
use crate::error::{Error, Result};
use crate::units::nm_to_omega;

/// Energy-conservation tolerance on `1/λp − 1/λs − 1/λi`, nm⁻¹.
pub const ENERGY_TOLERANCE_PER_NM: f64 = 1e-9;

/// Downconversion wavelength window searched by [`gvm_degenerate_wavelength`], nm.
pub const GVM_SEARCH_WINDOW_NM: (f64, f64) = (1400.0, 1700.0);

/// A periodically poled crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub length_mm: f64,
    /// Poling period at the axes' reference temperature, µm. `f64::INFINITY`
    /// describes an unpoled crystal.
    pub poling_period_um: f64,
    pub temperature_c: f64,
    pub axes: CrystalAxes,
}

impl CrystalSpec {
    pub fn new(length_mm: f64, poling_period_um: f64, temperature_c: f64, axes: CrystalAxes) -> Result<Self> {
        let c = CrystalSpec { length_mm, poling_period_um, temperature_c, axes };
        c.validate()?;
        Ok(c)
    }

    /// The 2 mm, 46.15 µm ppKTP crystal at 20 °C.
    pub fn default_ktp() -> Self {
        Self::new(2.0, 46.15, 20.0, CrystalAxes::ktp_type_ii()).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm.is_finite() && self.length_mm > 0.0) {
            return Err(Error::InvalidInput(format!(
                "crystal length_mm must be positive, got {}",
                self.length_mm
            )));
        }
        if !(self.poling_period_um > 0.0) {
            return Err(Error::InvalidInput(format!(
                "crystal poling_period_um must be positive, got {}",
                self.poling_period_um
            )));
        }
        if !self.temperature_c.is_finite() {
            return Err(Error::InvalidInput("crystal temperature_c must be finite".into()));
        }
        Ok(())
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }

    /// Poling period at the crystal temperature, µm.
    pub fn effective_period_um(&self) -> f64 {
        let dt = self.temperature_c - self.axes.reference_temperature_c();
        let alpha = self.axes.poling_expansion();
        if alpha == 0.0 || dt == 0.0 {
            self.poling_period_um
        } else {
            self.poling_period_um * (1.0 + alpha * dt)
        }
    }

    /// Same crystal with another poling period.
    pub fn with_period(&self, poling_period_um: f64) -> Result<Self> {
        Self::new(self.length_mm, poling_period_um, self.temperature_c, self.axes.clone())
    }

    pub fn with_length(&self, length_mm: f64) -> Result<Self> {
        Self::new(length_mm, self.poling_period_um, self.temperature_c, self.axes.clone())
    }
}

/// A pulsed pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub center_wavelength_nm: f64,
    /// Intensity FWHM of the pump spectrum, nm.
    pub intensity_fwhm_nm: f64,
    pub repetition_rate_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_duration_fs: Option<f64>,
}

impl PumpSpec {
    pub fn new(center_wavelength_nm: f64, intensity_fwhm_nm: f64, repetition_rate_mhz: f64) -> Result<Self> {
        let p = PumpSpec {
            center_wavelength_nm,
            intensity_fwhm_nm,
            repetition_rate_mhz,
            pulse_duration_fs: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// 785 nm, 5.35 nm FWHM, 81 MHz, ~170 fs.
    pub fn default_ti_sapphire() -> Self {
        PumpSpec {
            center_wavelength_nm: 785.0,
            intensity_fwhm_nm: 5.35,
            repetition_rate_mhz: 81.0,
            pulse_duration_fs: Some(170.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("pump {name} must be positive, got {v}")))
            }
        };
        positive("center_wavelength_nm", self.center_wavelength_nm)?;
        positive("intensity_fwhm_nm", self.intensity_fwhm_nm)?;
        positive("repetition_rate_mhz", self.repetition_rate_mhz)?;
        if let Some(d) = self.pulse_duration_fs {
            positive("pulse_duration_fs", d)?;
        }
        if self.intensity_fwhm_nm >= self.center_wavelength_nm {
            return Err(Error::InvalidInput(
                "pump intensity_fwhm_nm must be smaller than center_wavelength_nm".into(),
            ));
        }
        Ok(())
    }

    pub fn center_omega(&self) -> f64 {
        nm_to_omega(self.center_wavelength_nm)
    }

    /// Pulse period, ns.
    pub fn period_ns(&self) -> f64 {
        1e3 / self.repetition_rate_mhz
    }
}

/// Wavenumber mismatch without the grating term, rad/µm.
pub fn unpoled_mismatch(axes: &CrystalAxes, temperature_c: f64, omega_s: f64, omega_i: f64) -> Result<f64> {
    let kp = axes.pump.wavenumber_at(omega_s + omega_i, temperature_c)?;
    let ks = axes.signal.wavenumber_at(omega_s, temperature_c)?;
    let ki = axes.idler.wavenumber_at(omega_i, temperature_c)?;
    // Grouped so that exchanging identical daughter axes is exact.
    Ok(kp - (ks + ki))
}

/// Phase mismatch `ΔK = k_p(ωs+ωi) − k_s(ωs) − k_i(ωi) ∓ 2π/Λ` in rad/µm.
///
/// A square poling pattern supplies grating vectors of both signs; the one
/// that compensates the material mismatch is used, so the grating term always
/// carries the sign of the unpoled mismatch. With the shipped type-II KTP
/// binding the unpoled mismatch is negative.
pub fn phase_mismatch(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    let dk0 = unpoled_mismatch(&crystal.axes, crystal.temperature_c, omega_s, omega_i)?;
    let period = crystal.effective_period_um();
    if period.is_infinite() {
        return Ok(dk0);
    }
    let grating = std::f64::consts::TAU / period;
    Ok(dk0 - dk0.signum() * grating)
}

fn check_energy(lambda_p: f64, lambda_s: f64, lambda_i: f64) -> Result<()> {
    for (name, v) in [("pump", lambda_p), ("signal", lambda_s), ("idler", lambda_i)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} wavelength must be positive, got {v}")));
        }
    }
    let residual = 1.0 / lambda_p - 1.0 / lambda_s - 1.0 / lambda_i;
    if residual.abs() > ENERGY_TOLERANCE_PER_NM {
        return Err(Error::InvalidInput(format!(
            "energy conservation violated: 1/λp − 1/λs − 1/λi = {residual:.3e} nm⁻¹"
        )));
    }
    Ok(())
}

/// Poling period (µm, at the axes' reference temperature) that phase matches
/// the triple `λp → λs + λi` at `temperature_c`.
pub fn solve_poling_period(
    lambda_p: f64,
    lambda_s: f64,
    lambda_i: f64,
    temperature_c: f64,
    axes: &CrystalAxes,
) -> Result<f64> {
    check_energy(lambda_p, lambda_s, lambda_i)?;
    // Pump frequency is taken as the sum so the returned period matches
    // phase_mismatch exactly at (ωs, ωi).
    let dk0 = unpoled_mismatch(axes, temperature_c, nm_to_omega(lambda_s), nm_to_omega(lambda_i))?;
    if dk0 == 0.0 || !dk0.is_finite() {
        return Err(Error::NoSolution(format!(
            "unpoled mismatch is {dk0}; no finite poling period phase matches"
        )));
    }
    let effective = std::f64::consts::TAU / dk0.abs();
    let dt = temperature_c - axes.reference_temperature_c();
    let alpha = axes.poling_expansion();
    if alpha == 0.0 || dt == 0.0 {
        Ok(effective)
    } else {
        Ok(effective / (1.0 + alpha * dt))
    }
}

/// Orientation of the phase-matching ridge in the (ωs, ωi) plane, degrees in
/// (−180, 180]: `atan2(k's − k'p, k'p − k'i)`.
pub fn gvm_angle(
    lambda_p: f64,
    lambda_s: f64,
    lambda_i: f64,
    axes: &CrystalAxes,
    temperature_c: f64,
) -> Result<f64> {
    let kp = axes.pump.inverse_group_velocity(lambda_p, temperature_c)?;
    let ks = axes.signal.inverse_group_velocity(lambda_s, temperature_c)?;
    let ki = axes.idler.inverse_group_velocity(lambda_i, temperature_c)?;
    let num = ks - kp;
    let den = kp - ki;
    let scale = kp.abs().max(ks.abs()).max(ki.abs());
    if num.abs() <= 1e-9 * scale && den.abs() <= 1e-9 * scale {
        return Err(Error::Degenerate(
            "k's = k'p = k'i: ridge orientation is undefined".into(),
        ));
    }
    let theta = num.atan2(den).to_degrees();
    Ok(if theta <= -180.0 { theta + 360.0 } else { theta })
}

/// `k'p(λ/2) − (k's(λ) + k'i(λ))/2` in fs/µm for degenerate downconversion at λ.
pub fn gvm_residual(axes: &CrystalAxes, temperature_c: f64, lambda_nm: f64) -> Result<f64> {
    let kp = axes.pump.inverse_group_velocity(lambda_nm / 2.0, temperature_c)?;
    let ks = axes.signal.inverse_group_velocity(lambda_nm, temperature_c)?;
    let ki = axes.idler.inverse_group_velocity(lambda_nm, temperature_c)?;
    Ok(kp - 0.5 * (ks + ki))
}

/// Degenerate downconversion wavelength (nm) at which `k'p = (k's + k'i)/2`,
/// found by bisection inside [`GVM_SEARCH_WINDOW_NM`].
pub fn gvm_degenerate_wavelength(axes: &CrystalAxes, temperature_c: f64) -> Result<f64> {
    let (lo, hi) = GVM_SEARCH_WINDOW_NM;
    const SAMPLES: usize = 30;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|j| lo + (hi - lo) * j as f64 / SAMPLES as f64)
        .collect();
    let gs = xs
        .iter()
        .map(|&x| gvm_residual(axes, temperature_c, x))
        .collect::<Result<Vec<_>>>()?;
    let scale = axes.pump.inverse_group_velocity(lo / 2.0, temperature_c)?.abs();
    if gs.iter().all(|g| g.abs() <= 1e-9 * scale) {
        return Err(Error::Degenerate(
            "group velocities are matched across the whole window; the condition does not select a wavelength".into(),
        ));
    }
    let bracket = xs
        .windows(2)
        .zip(gs.windows(2))
        .find(|(_, g)| g[0] == 0.0 || g[0].signum() != g[1].signum());
    let Some((x, g)) = bracket else {
        return Err(Error::NoSolution(format!(
            "k'p − (k's + k'i)/2 does not change sign in {lo}–{hi} nm"
        )));
    };
    if g[0] == 0.0 {
        return Ok(x[0]);
    }
    let (mut a, mut b, mut ga) = (x[0], x[1], g[0]);
    while b - a > 1e-7 {
        let m = 0.5 * (a + b);
        let gm = gvm_residual(axes, temperature_c, m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
