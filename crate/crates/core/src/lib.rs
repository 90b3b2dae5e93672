//! Design and simulation of spectrally engineered photon-pair sources.
//!
//! The modules follow the modelling chain of a periodically poled KTP
//! downconversion source: crystal [`dispersion`], [`phasematch`]ing and
//! poling design, the joint spectral amplitude ([`jsa`]) with its Schmidt
//! purity, two-source [`interference`], the [`polarization`] state of a
//! Sagnac configuration with tomography, the time-of-flight
//! [`spectrometer`], and heralding [`efficiency`].

pub mod dispersion;
pub mod efficiency;
pub mod error;
pub mod interference;
pub mod jsa;
pub mod phasematch;
pub mod polarization;
pub mod spectrometer;
pub mod units;

pub use dispersion::{CrystalAxes, DispersionRegistry, SellmeierFormula, SellmeierSet};
pub use error::{Error, Result};
pub use jsa::{Arm, FilterSpec, FrequencyGrid, JointAmplitude};
pub use phasematch::{CrystalSpec, PumpSpec};
