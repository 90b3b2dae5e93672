//! Conversions between the nm reporting unit and the internal angular
//! frequency variable (rad/fs). Every wavelength/frequency mapping in the
//! crate goes through these functions.

use std::f64::consts::TAU;

/// Speed of light in µm/fs.
pub const SPEED_OF_LIGHT_UM_PER_FS: f64 = 0.299_792_458;

/// Vacuum wavelength (nm) to angular frequency (rad/fs).
#[inline]
pub fn nm_to_omega(wavelength_nm: f64) -> f64 {
    TAU * SPEED_OF_LIGHT_UM_PER_FS / (wavelength_nm * 1e-3)
}

/// Angular frequency (rad/fs) to vacuum wavelength (nm).
#[inline]
pub fn omega_to_nm(omega: f64) -> f64 {
    TAU * SPEED_OF_LIGHT_UM_PER_FS / omega * 1e3
}

/// Width in angular frequency of the wavelength interval
/// `[center - width/2, center + width/2]`.
pub fn wavelength_width_to_omega(center_nm: f64, width_nm: f64) -> f64 {
    nm_to_omega(center_nm - 0.5 * width_nm) - nm_to_omega(center_nm + 0.5 * width_nm)
}
