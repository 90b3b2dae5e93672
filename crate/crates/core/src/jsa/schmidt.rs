use serde::{Deserialize, Serialize};

use super::JointAmplitude;
use crate::error::{Error, Result};

/// Normalized Schmidt coefficients `λk` of a joint amplitude, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub coefficients: Vec<f64>,
    /// `Σ λk²`, the heralded single-photon purity.
    pub purity: f64,
    /// `1 / Σ λk²`.
    pub schmidt_number: f64,
}

impl SchmidtSpectrum {
    /// Builds a spectrum from non-negative weights, normalizing them to sum
    /// to 1 and sorting descending (ties keep their input order).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("Schmidt weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("all Schmidt weights are zero".into()));
        }
        let mut order: Vec<usize> = (0..weights.len()).collect();
        // Stable sort keeps the original index order for equal weights.
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
        let coefficients: Vec<f64> = order.into_iter().map(|k| weights[k] / total).collect();
        let purity: f64 = coefficients.iter().map(|l| l * l).sum();
        Ok(SchmidtSpectrum {
            coefficients,
            purity,
            schmidt_number: 1.0 / purity,
        })
    }

    /// Coefficients above `threshold`.
    pub fn significant(&self, threshold: f64) -> &[f64] {
        let k = self.coefficients.partition_point(|&c| c > threshold);
        &self.coefficients[..k]
    }
}

/// Schmidt decomposition through the singular values of the discretized
/// amplitude: `λk = σk² / Σσ²`.
pub fn schmidt_decompose(jsa: &JointAmplitude) -> Result<SchmidtSpectrum> {
    if jsa.amplitudes().iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("joint amplitude is identically zero".into()));
    }
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let sv = jsa.discrete_amplitudes().singular_values();
    let weights: Vec<f64> = sv.iter().map(|s| s * s).collect();
    SchmidtSpectrum::from_weights(&weights)
}
