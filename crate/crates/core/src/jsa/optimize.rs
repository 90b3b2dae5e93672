use serde::{Deserialize, Serialize};

use super::{compute_jsa, schmidt_decompose, FrequencyGrid};
use crate::error::{Error, Result};
use crate::phasematch::{CrystalSpec, PumpSpec};

/// Golden-section stopping width, nm.
pub const BANDWIDTH_TOLERANCE_NM: f64 = 0.01;

/// Repetition rate used for the trial pumps; it does not enter the purity.
const TRIAL_REPETITION_RATE_MHZ: f64 = 81.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthOptimum {
    pub best_fwhm_nm: f64,
    pub best_purity: f64,
    /// Every (FWHM nm, purity) evaluated, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Pump intensity FWHM in `window_nm` that maximizes the unfiltered Schmidt
/// purity, by golden-section search.
pub fn optimize_pump_bandwidth(
    crystal: &CrystalSpec,
    pump_center_nm: f64,
    window_nm: (f64, f64),
    grid: &FrequencyGrid,
) -> Result<BandwidthOptimum> {
    let (lo, hi) = window_nm;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "bandwidth window [{lo}, {hi}] nm must be positive and ordered"
        )));
    }
    let mut trace = Vec::new();
    let mut purity = |fwhm: f64| -> Result<f64> {
        let pump = PumpSpec::new(pump_center_nm, fwhm, TRIAL_REPETITION_RATE_MHZ)?;
        let p = schmidt_decompose(&compute_jsa(&pump, crystal, grid)?)?.purity;
        trace.push((fwhm, p));
        Ok(p)
    };

    let f_lo = purity(lo)?;
    let f_hi = purity(hi)?;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = purity(c)?;
    let mut fd = purity(d)?;
    while b - a > BANDWIDTH_TOLERANCE_NM {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = purity(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = purity(d)?;
        }
    }
    let (best_fwhm_nm, best_purity) = if fc >= fd { (c, fc) } else { (d, fd) };
    let edge = BANDWIDTH_TOLERANCE_NM;
    if best_fwhm_nm - lo < edge || hi - best_fwhm_nm < edge || best_purity < f_lo.max(f_hi) {
        return Err(Error::Search {
            reason: format!("window [{lo}, {hi}] nm does not bracket a purity maximum"),
            trace,
        });
    }
    Ok(BandwidthOptimum { best_fwhm_nm, best_purity, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_window_without_interior_maximum() {
        let grid = FrequencyGrid::default().with_points(64).unwrap();
        let err = optimize_pump_bandwidth(&CrystalSpec::default_ktp(), 785.0, (2.0, 2.5), &grid).unwrap_err();
        match err {
            Error::Search { trace, .. } => assert!(trace.len() > 3),
            other => panic!("expected a search error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_window() {
        let grid = FrequencyGrid::default().with_points(16).unwrap();
        assert!(optimize_pump_bandwidth(&CrystalSpec::default_ktp(), 785.0, (5.0, 4.0), &grid).is_err());
    }
}
