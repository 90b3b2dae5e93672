//! Fixtures shared by the benchmarks.

use biphoton::jsa::compute_jsa;
use biphoton::polarization::{full_settings, model_state, simulate_tomography, TomographyRecord};
use biphoton::{CrystalSpec, FrequencyGrid, JointAmplitude, PumpSpec};

/// Default source sampled on `points`² cells.
pub fn default_jsa(points: usize) -> JointAmplitude {
    let grid = FrequencyGrid::default().with_points(points).expect("power-of-two grid");
    compute_jsa(&PumpSpec::default_ti_sapphire(), &CrystalSpec::default_ktp(), &grid).expect("default source")
}

/// Full 36-setting data set for a slightly depolarized singlet.
pub fn werner_records(mean_counts: u64, seed: u64) -> Vec<TomographyRecord> {
    let state = model_state(0.028, 0.0, 0.0).expect("valid state");
    simulate_tomography(&state, &full_settings(), mean_counts, seed).expect("valid counts")
}
