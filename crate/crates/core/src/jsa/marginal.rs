use serde::{Deserialize, Serialize};

use super::{Arm, JointAmplitude};
use crate::error::{Error, Result};

/// Fraction of the peak that delimits the central-lobe support.
pub const CENTRAL_LOBE_THRESHOLD: f64 = 0.01;

/// Single-arm intensity spectrum on an ascending wavelength axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpectrum {
    pub arm: Arm,
    pub wavelengths_nm: Vec<f64>,
    /// Sums to 1.
    pub intensity: Vec<f64>,
    pub fwhm_nm: f64,
    /// Width of the region where the central phase-matching lobe's marginal
    /// exceeds [`CENTRAL_LOBE_THRESHOLD`] of its peak. Only available for
    /// amplitudes built from a crystal.
    pub central_lobe_span_nm: Option<f64>,
}

/// Width of the contiguous region around the peak where `y ≥ level·max`,
/// with linear interpolation of both crossings.
pub(crate) fn width_at_level(x: &[f64], y: &[f64], level: f64) -> f64 {
    let (peak, ymax) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let target = level * ymax;
    let crossing = |inside: usize, outside: usize| -> f64 {
        let (y0, y1) = (y[inside], y[outside]);
        let t = (y0 - target) / (y0 - y1);
        x[inside] + t * (x[outside] - x[inside])
    };
    let mut lo = peak;
    while lo > 0 && y[lo - 1] >= target {
        lo -= 1;
    }
    let left = if lo == 0 { x[0] } else { crossing(lo, lo - 1) };
    let mut hi = peak;
    while hi + 1 < y.len() && y[hi + 1] >= target {
        hi += 1;
    }
    let right = if hi + 1 == y.len() { x[hi] } else { crossing(hi, hi + 1) };
    (right - left).abs()
}

/// Row or column sums of `|f|²`, mapped onto an ascending nm axis.
pub fn marginal_spectrum(jsa: &JointAmplitude, arm: Arm) -> Result<MarginalSpectrum> {
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let intensity = jsa.intensity();
    let sums = |mask: Option<&nalgebra::DMatrix<bool>>| -> Vec<f64> {
        let n = intensity.nrows();
        let keep = |r: usize, c: usize| mask.map_or(true, |m| m[(r, c)]);
        let mut out: Vec<f64> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let (r, c) = match arm {
                            Arm::Signal => (k, l),
                            Arm::Idler => (l, k),
                        };
                        if keep(r, c) { intensity[(r, c)] } else { 0.0 }
                    })
                    .sum()
            })
            .collect();
        // Grid is ascending in ω, so reverse for ascending λ.
        out.reverse();
        out
    };
    let mut wavelengths = jsa.grid().wavelengths_nm(arm);
    wavelengths.reverse();
    let mut spectrum = sums(None);
    let total: f64 = spectrum.iter().sum();
    spectrum.iter_mut().for_each(|v| *v /= total);
    let fwhm_nm = width_at_level(&wavelengths, &spectrum, 0.5);
    let central_lobe_span_nm = jsa.central_lobe().and_then(|mask| {
        let lobe = sums(Some(mask));
        if lobe.iter().all(|&v| v <= 0.0) {
            None
        } else {
            Some(width_at_level(&wavelengths, &lobe, CENTRAL_LOBE_THRESHOLD))
        }
    });
    Ok(MarginalSpectrum {
        arm,
        wavelengths_nm: wavelengths,
        intensity: spectrum,
        fwhm_nm,
        central_lobe_span_nm,
    })
}
