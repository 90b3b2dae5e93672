use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Arm, JointAmplitude};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// A bandpass filter, specified by its intensity transmission in wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub shape: FilterShape,
    #[serde(default = "unit")]
    pub peak_transmission: f64,
}

fn unit() -> f64 {
    1.0
}

impl FilterSpec {
    pub fn new(center_nm: f64, fwhm_nm: f64, shape: FilterShape, peak_transmission: f64) -> Result<Self> {
        let f = FilterSpec { center_nm, fwhm_nm, shape, peak_transmission };
        f.validate()?;
        Ok(f)
    }

    pub fn gaussian(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        Self::new(center_nm, fwhm_nm, FilterShape::Gaussian, 1.0)
    }

    pub fn rectangular(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        Self::new(center_nm, fwhm_nm, FilterShape::Rectangular, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_nm.is_finite() && self.fwhm_nm > 0.0) {
            return Err(Error::InvalidInput(format!("filter fwhm_nm must be positive, got {}", self.fwhm_nm)));
        }
        if !(self.center_nm.is_finite() && self.center_nm > 0.0) {
            return Err(Error::InvalidInput(format!("filter center_nm must be positive, got {}", self.center_nm)));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "filter peak_transmission must lie in (0, 1], got {}",
                self.peak_transmission
            )));
        }
        Ok(())
    }

    /// Intensity transmission at `wavelength_nm`.
    pub fn transmission(&self, wavelength_nm: f64) -> f64 {
        let d = wavelength_nm - self.center_nm;
        match self.shape {
            FilterShape::Gaussian => {
                self.peak_transmission * (-4.0 * std::f64::consts::LN_2 * d * d / (self.fwhm_nm * self.fwhm_nm)).exp()
            }
            FilterShape::Rectangular => {
                if d.abs() <= 0.5 * self.fwhm_nm {
                    self.peak_transmission
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fractions of the joint spectral intensity that pass the filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSurvival {
    /// Through the signal filter alone (1 without a signal filter).
    pub signal: f64,
    /// Through the idler filter alone.
    pub idler: f64,
    /// Through both filters.
    pub joint: f64,
}

impl FilterSurvival {
    pub fn arm(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Signal => self.signal,
            Arm::Idler => self.idler,
        }
    }

    /// Probability that the photon in `arm` passes its filter given that its
    /// partner passed: the filter's factor in that arm's Klyshko efficiency.
    pub fn heralding_factor(&self, arm: Arm) -> f64 {
        let partner = self.arm(arm.other());
        if partner > 0.0 {
            self.joint / partner
        } else {
            0.0
        }
    }
}

fn transmissions(jsa: &JointAmplitude, arm: Arm, filter: Option<&FilterSpec>) -> Result<Vec<f64>> {
    let n = jsa.grid().points_per_axis;
    let Some(filter) = filter else {
        return Ok(vec![1.0; n]);
    };
    filter.validate()?;
    let t: Vec<f64> = jsa
        .grid()
        .wavelengths_nm(arm)
        .into_iter()
        .map(|l| filter.transmission(l))
        .collect();
    if t.iter().all(|&x| x <= 0.0) {
        return Err(Error::EmptyFilter(format!(
            "{arm} filter at {} nm (FWHM {} nm) transmits nothing on the grid",
            filter.center_nm, filter.fwhm_nm
        )));
    }
    Ok(t)
}

/// Multiplies the amplitude by `√T` of each supplied filter and renormalizes.
/// The surviving intensity fractions are attached to the result.
pub fn apply_filter(
    jsa: &JointAmplitude,
    signal_filter: Option<&FilterSpec>,
    idler_filter: Option<&FilterSpec>,
) -> Result<JointAmplitude> {
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let ts = transmissions(jsa, Arm::Signal, signal_filter)?;
    let ti = transmissions(jsa, Arm::Idler, idler_filter)?;
    let intensity = jsa.intensity();
    let n = intensity.nrows();
    let (mut total, mut s, mut i_only, mut joint) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            let p = intensity[(r, c)];
            total += p;
            s += p * ts[r];
            i_only += p * ti[c];
            joint += p * ts[r] * ti[c];
        }
    }
    let survival = FilterSurvival {
        signal: s / total,
        idler: i_only / total,
        joint: joint / total,
    };
    if survival.joint <= 0.0 {
        return Err(Error::EmptyFilter(
            "no joint spectral intensity survives the filters".into(),
        ));
    }
    let amp = jsa.amplitudes();
    let filtered = DMatrix::from_fn(n, n, |r, c| {
        amp[(r, c)] * Complex64::new((ts[r] * ti[c]).sqrt(), 0.0)
    });
    Ok(jsa.with_amplitudes(filtered, Some(survival)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::{compute_jsa, FrequencyGrid};
    use crate::phasematch::{CrystalSpec, PumpSpec};

    fn small_jsa() -> JointAmplitude {
        let grid = FrequencyGrid::default().with_points(64).unwrap();
        compute_jsa(&PumpSpec::default_ti_sapphire(), &CrystalSpec::default_ktp(), &grid).unwrap()
    }

    #[test]
    fn transmission_shapes() {
        let g = FilterSpec::gaussian(1570.0, 8.0).unwrap();
        assert!((g.transmission(1570.0) - 1.0).abs() < 1e-15);
        assert!((g.transmission(1574.0) - 0.5).abs() < 1e-12);
        let r = FilterSpec::new(1570.0, 8.0, FilterShape::Rectangular, 0.9).unwrap();
        assert_eq!(r.transmission(1573.9), 0.9);
        assert_eq!(r.transmission(1574.1), 0.0);
        assert!(FilterSpec::new(1570.0, 8.0, FilterShape::Gaussian, 0.0).is_err());
        assert!(FilterSpec::gaussian(1570.0, -1.0).is_err());
    }

    #[test]
    fn wide_filter_is_identity() {
        let jsa = small_jsa();
        let f = FilterSpec::gaussian(1570.0, 1e7).unwrap();
        let out = apply_filter(&jsa, Some(&f), Some(&f)).unwrap();
        let s = out.filter_survival().unwrap();
        assert!((s.joint - 1.0).abs() < 1e-9);
        let diff = (out.amplitudes() - jsa.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let peak = jsa.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9 * peak);
    }

    #[test]
    fn stays_normalized() {
        let jsa = small_jsa();
        let f = FilterSpec::gaussian(1570.0, 8.0).unwrap();
        let out = apply_filter(&jsa, Some(&f), None).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-9);
        let s = out.filter_survival().unwrap();
        assert_eq!(s.idler, 1.0);
        assert_eq!(s.joint, s.signal);
        assert!((s.heralding_factor(Arm::Signal) - s.signal).abs() < 1e-15);
        assert!((s.heralding_factor(Arm::Idler) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn filter_off_grid_is_empty() {
        let jsa = small_jsa();
        let f = FilterSpec::rectangular(1300.0, 8.0).unwrap();
        assert!(matches!(apply_filter(&jsa, Some(&f), None), Err(Error::EmptyFilter(_))));
    }
}
