//! Discretized joint spectral amplitude `f(ωs, ωi) = N·α(ωs+ωi)·φ(ωs, ωi)`,
//! spectral filtering, Schmidt analysis and marginals.

mod filter;
mod grid;
mod marginal;
mod optimize;
mod schmidt;

pub use filter::{apply_filter, FilterShape, FilterSpec, FilterSurvival};
pub use grid::{Arm, FrequencyGrid};
pub use marginal::{marginal_spectrum, MarginalSpectrum, CENTRAL_LOBE_THRESHOLD};
pub use optimize::{optimize_pump_bandwidth, BandwidthOptimum, BANDWIDTH_TOLERANCE_NM};
pub use schmidt::{schmidt_decompose, SchmidtSpectrum};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phasematch::{phase_mismatch, CrystalSpec, PumpSpec};
use crate::units::{omega_to_nm, wavelength_width_to_omega};

/// Amplitude 1/e half-width σp (rad/fs) of the pump envelope.
///
/// The intensity FWHM in nm is mapped to an interval in ω around the pump
/// center; the intensity `|α|² = exp(−2δ²/σp²)` has FWHM `σp·√(2 ln 2)`.
pub fn pump_sigma(pump: &PumpSpec) -> f64 {
    let fwhm_omega = wavelength_width_to_omega(pump.center_wavelength_nm, pump.intensity_fwhm_nm);
    fwhm_omega / (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Pump envelope `α(ωs+ωi) = exp[−(ωs+ωi−ωp)²/σp²]`.
pub fn pump_envelope(omega_s: f64, omega_i: f64, pump: &PumpSpec) -> Complex64 {
    let detuning = omega_s + omega_i - pump.center_omega();
    let sigma = pump_sigma(pump);
    Complex64::new((-(detuning * detuning) / (sigma * sigma)).exp(), 0.0)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `sinc(x)·exp(−ix)` for `x = L·ΔK/2`.
pub fn phasematching_from_argument(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, -x) * sinc(x)
}

/// Phase-matching function `sinc(LΔK/2)·exp(−iLΔK/2)`.
pub fn phasematching_function(omega_s: f64, omega_i: f64, crystal: &CrystalSpec) -> Result<Complex64> {
    let dk = phase_mismatch(crystal, omega_s, omega_i)?;
    Ok(phasematching_from_argument(0.5 * crystal.length_um() * dk))
}

/// A joint spectral amplitude sampled on a [`FrequencyGrid`]; rows index the
/// signal frequency, columns the idler frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAmplitude {
    grid: FrequencyGrid,
    amplitudes: DMatrix<Complex64>,
    normalized: bool,
    central_lobe: Option<DMatrix<bool>>,
    filter_survival: Option<FilterSurvival>,
}

impl JointAmplitude {
    /// Wraps a matrix and normalizes it so that `Σ|f|²·Δωs·Δωi = 1`. An all-zero
    /// matrix is kept as is and flagged as not normalized.
    pub fn from_matrix(grid: FrequencyGrid, amplitudes: DMatrix<Complex64>) -> Result<Self> {
        grid.validate()?;
        let n = grid.points_per_axis;
        if amplitudes.nrows() != n || amplitudes.ncols() != n {
            return Err(Error::GridMismatch(format!(
                "matrix is {}×{}, grid has {n} points per axis",
                amplitudes.nrows(),
                amplitudes.ncols()
            )));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("amplitude matrix has non-finite entries".into()));
        }
        let mut jsa = JointAmplitude {
            grid,
            amplitudes,
            normalized: false,
            central_lobe: None,
            filter_survival: None,
        };
        jsa.normalize();
        Ok(jsa)
    }

    fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let scale = 1.0 / norm.sqrt();
            self.amplitudes.iter_mut().for_each(|z| *z *= scale);
            self.normalized = true;
        } else {
            self.normalized = false;
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Cells of the central phase-matching lobe (`|LΔK/2| < π`), when the
    /// amplitude was built from a crystal.
    pub fn central_lobe(&self) -> Option<&DMatrix<bool>> {
        self.central_lobe.as_ref()
    }

    /// Transmission bookkeeping from the last [`apply_filter`].
    pub fn filter_survival(&self) -> Option<&FilterSurvival> {
        self.filter_survival.as_ref()
    }

    /// `Σ|f|²·Δωs·Δωi`, summed row by row.
    pub fn norm(&self) -> f64 {
        let n = self.amplitudes.nrows();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..self.amplitudes.ncols() {
                total += self.amplitudes[(i, j)].norm_sqr();
            }
        }
        total * self.grid.cell_area()
    }

    /// Joint spectral intensity `|f|²`.
    pub fn intensity(&self) -> DMatrix<f64> {
        self.amplitudes.map(|z| z.norm_sqr())
    }

    /// Amplitude matrix scaled by `√(Δωs·Δωi)`, whose Frobenius norm is 1 when
    /// normalized.
    pub fn discrete_amplitudes(&self) -> DMatrix<Complex64> {
        self.amplitudes.clone() * Complex64::new(self.grid.cell_area().sqrt(), 0.0)
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: DMatrix<Complex64>, survival: Option<FilterSurvival>) -> Self {
        let mut out = JointAmplitude {
            grid: self.grid,
            amplitudes,
            normalized: false,
            central_lobe: self.central_lobe.clone(),
            filter_survival: survival,
        };
        out.normalize();
        out
    }
}

fn check_axis_range(set: &crate::dispersion::SellmeierSet, lo_omega: f64, hi_omega: f64, t: f64) -> Result<()> {
    set.refractive_index(omega_to_nm(lo_omega), t)?;
    set.refractive_index(omega_to_nm(hi_omega), t)?;
    Ok(())
}

/// Samples the joint spectral amplitude of `pump` in `crystal` on `grid`.
///
/// The whole grid (signal, idler and summed pump frequencies) is checked
/// against the dispersion ranges first. Rows are evaluated in parallel; each
/// element depends only on its own frequencies, so the result does not depend
/// on scheduling.
pub fn compute_jsa(pump: &PumpSpec, crystal: &CrystalSpec, grid: &FrequencyGrid) -> Result<JointAmplitude> {
    pump.validate()?;
    crystal.validate()?;
    grid.validate()?;
    let t = crystal.temperature_c;
    let (s_lo, s_hi) = grid.omega_bounds(Arm::Signal);
    let (i_lo, i_hi) = grid.omega_bounds(Arm::Idler);
    check_axis_range(&crystal.axes.signal, s_lo, s_hi, t)?;
    check_axis_range(&crystal.axes.idler, i_lo, i_hi, t)?;
    check_axis_range(&crystal.axes.pump, s_lo + i_lo, s_hi + i_hi, t)?;

    let ws = grid.omegas(Arm::Signal);
    let wi = grid.omegas(Arm::Idler);
    let half_length = 0.5 * crystal.length_um();
    let n = grid.points_per_axis;

    let rows: Vec<Vec<(Complex64, bool)>> = ws
        .par_iter()
        .map(|&w_s| {
            wi.iter()
                .map(|&w_i| {
                    let alpha = pump_envelope(w_s, w_i, pump);
                    let x = half_length * phase_mismatch(crystal, w_s, w_i)?;
                    Ok((alpha * phasematching_from_argument(x), x.abs() < std::f64::consts::PI))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let amplitudes = DMatrix::from_fn(n, n, |i, j| rows[i][j].0);
    let lobe = DMatrix::from_fn(n, n, |i, j| rows[i][j].1);
    let mut jsa = JointAmplitude::from_matrix(*grid, amplitudes)?;
    if !jsa.normalized {
        return Err(Error::Degenerate(
            "joint amplitude vanishes on the whole grid".into(),
        ));
    }
    jsa.central_lobe = Some(lobe);
    Ok(jsa)
}
