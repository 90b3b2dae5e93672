use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{nm_to_omega, omega_to_nm};

/// One of the two downconverted fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::Signal => Arm::Idler,
            Arm::Idler => Arm::Signal,
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        })
    }
}

impl std::str::FromStr for Arm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signal" => Ok(Arm::Signal),
            "idler" => Ok(Arm::Idler),
            _ => Err(Error::InvalidInput(format!("unknown arm '{s}'"))),
        }
    }
}

/// Square sampling grid over (ωs, ωi).
///
/// Each axis spans `center ± half_span` in wavelength and is sampled
/// uniformly in angular frequency, in ascending ω (so descending λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub center_signal_nm: f64,
    pub center_idler_nm: f64,
    pub half_span_nm: f64,
    pub points_per_axis: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid {
            center_signal_nm: 1570.0,
            center_idler_nm: 1570.0,
            half_span_nm: 60.0,
            points_per_axis: 512,
        }
    }
}

impl FrequencyGrid {
    pub fn new(center_signal_nm: f64, center_idler_nm: f64, half_span_nm: f64, points_per_axis: usize) -> Result<Self> {
        let g = FrequencyGrid { center_signal_nm, center_idler_nm, half_span_nm, points_per_axis };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 16 || !self.points_per_axis.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid points_per_axis must be a power of two ≥ 16, got {}",
                self.points_per_axis
            )));
        }
        if !(self.half_span_nm.is_finite() && self.half_span_nm > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid half_span_nm must be positive, got {}",
                self.half_span_nm
            )));
        }
        for (name, c) in [("center_signal_nm", self.center_signal_nm), ("center_idler_nm", self.center_idler_nm)] {
            if !(c.is_finite() && c > self.half_span_nm) {
                return Err(Error::InvalidInput(format!(
                    "grid {name} must exceed half_span_nm, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_points(&self, points_per_axis: usize) -> Result<Self> {
        Self::new(self.center_signal_nm, self.center_idler_nm, self.half_span_nm, points_per_axis)
    }

    pub fn center_nm(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Signal => self.center_signal_nm,
            Arm::Idler => self.center_idler_nm,
        }
    }

    /// (lowest, highest) angular frequency of an axis.
    pub fn omega_bounds(&self, arm: Arm) -> (f64, f64) {
        let c = self.center_nm(arm);
        (nm_to_omega(c + self.half_span_nm), nm_to_omega(c - self.half_span_nm))
    }

    pub fn omega_step(&self, arm: Arm) -> f64 {
        let (lo, hi) = self.omega_bounds(arm);
        (hi - lo) / (self.points_per_axis - 1) as f64
    }

    /// Sample frequencies of an axis, ascending.
    pub fn omegas(&self, arm: Arm) -> Vec<f64> {
        let (lo, _) = self.omega_bounds(arm);
        let step = self.omega_step(arm);
        (0..self.points_per_axis).map(|j| lo + step * j as f64).collect()
    }

    /// Sample wavelengths of an axis in the same (descending) order as [`Self::omegas`].
    pub fn wavelengths_nm(&self, arm: Arm) -> Vec<f64> {
        self.omegas(arm).into_iter().map(omega_to_nm).collect()
    }

    /// Area element `Δωs·Δωi`.
    pub fn cell_area(&self) -> f64 {
        self.omega_step(Arm::Signal) * self.omega_step(Arm::Idler)
    }
}
