//! Two-source Hong–Ou–Mandel interference of heralded photons.
//!
//! A heralded photon is described by its reduced spectral density matrix on
//! the frequency axis of the joint amplitude grid. Interference between two
//! independent sources is governed by the overlap `Tr(ρa·ρb)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::{Arm, FilterSpec, JointAmplitude};

/// Reduced spectral state of a heralded photon; discrete density matrix with
/// unit trace on the sampled frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    omegas: Vec<f64>,
    density: DMatrix<Complex64>,
}

impl SpectralState {
    /// Validates Hermiticity (1e-10), unit trace (1e-9) and positivity
    /// (eigenvalues ≥ −1e-10).
    pub fn new(omegas: Vec<f64>, density: DMatrix<Complex64>) -> Result<Self> {
        let n = omegas.len();
        if density.nrows() != n || density.ncols() != n {
            return Err(Error::GridMismatch(format!(
                "density is {}×{} but the axis has {n} samples",
                density.nrows(),
                density.ncols()
            )));
        }
        let herm = (&density - density.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("density is not Hermitian (deviation {herm:.2e})")));
        }
        let tr = density.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("density trace is {tr}, expected 1")));
        }
        let min_eig = density
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!("density has eigenvalue {min_eig:.2e}")));
        }
        Ok(SpectralState { omegas, density })
    }

    /// Frequency axis, rad/fs.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Frequency axis as wavelengths, nm.
    pub fn wavelengths_nm(&self) -> Vec<f64> {
        self.omegas.iter().map(|&w| crate::units::omega_to_nm(w)).collect()
    }

    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.density
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.density.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Same state with every basis vector multiplied by a common phase.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let u = Complex64::from_polar(1.0, phase);
        let density = self.density.map(|z| u * z * u.conj());
        SpectralState { omegas: self.omegas.clone(), density }
    }
}

/// Reduced state of the photon in `heralded_arm` after detecting its partner.
/// A herald filter, when given, acts on the traced (heralding) arm.
pub fn heralded_spectral_state(
    jsa: &JointAmplitude,
    heralded_arm: Arm,
    herald_filter: Option<&FilterSpec>,
) -> Result<SpectralState> {
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let grid = jsa.grid();
    let mut m = jsa.discrete_amplitudes();
    if heralded_arm == Arm::Idler {
        m = m.transpose();
    }
    if let Some(f) = herald_filter {
        f.validate()?;
        let traced = grid.wavelengths_nm(heralded_arm.other());
        for (h, l) in traced.iter().enumerate() {
            let a = Complex64::new(f.transmission(*l).sqrt(), 0.0);
            m.column_mut(h).iter_mut().for_each(|z| *z *= a);
        }
    }
    let mut rho = &m * m.adjoint();
    let tr = rho.trace().re;
    if !(tr > 0.0) {
        return Err(Error::Degenerate("no heralded amplitude survives the herald filter".into()));
    }
    rho.iter_mut().for_each(|z| *z /= tr);
    // Exact Hermitian symmetry; the product is Hermitian up to rounding.
    let n = rho.nrows();
    for i in 0..n {
        rho[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    Ok(SpectralState { omegas: grid.omegas(heralded_arm), density: rho })
}

fn check_axes(a: &SpectralState, b: &SpectralState) -> Result<()> {
    let same = a.omegas.len() == b.omegas.len()
        && a.omegas.iter().zip(&b.omegas).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs());
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "spectral states live on different frequency axes; recompute them on a shared grid".into(),
        ))
    }
}

/// Overlap `Re Tr(ρa·ρb)`, clamped to [0, 1].
pub fn hom_visibility(a: &SpectralState, b: &SpectralState) -> Result<f64> {
    check_axes(a, b)?;
    // Tr(ρa ρb) = Σ ρa_jk ρb_kj = Σ ρa_jk conj(ρb_jk) for Hermitian ρb.
    let overlap: f64 = a
        .density
        .iter()
        .zip(b.density.iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    Ok(overlap.clamp(0.0, 1.0))
}

/// Coincidence probability versus relative delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomCurve {
    pub delays_fs: Vec<f64>,
    pub coincidence_probability: Vec<f64>,
    /// `1 − min/baseline` with the large-delay baseline ½.
    pub visibility: f64,
}

/// Large-delay coincidence probability of a balanced beam splitter.
pub const HOM_BASELINE: f64 = 0.5;

/// `P(τ) = ½[1 − Re Tr(ρa·D(τ)·ρb·D(−τ))]`, `D(τ) = diag(e^{iωτ})`.
///
/// The sampled frequency axis makes `P` periodic in τ with period `2π/Δω`;
/// delays should stay well inside half of that.
pub fn coincidence_probability(a: &SpectralState, b: &SpectralState, delay_fs: f64) -> Result<f64> {
    check_axes(a, b)?;
    Ok(coincidence_unchecked(a, b, delay_fs))
}

fn coincidence_unchecked(a: &SpectralState, b: &SpectralState, delay_fs: f64) -> f64 {
    let w0 = a.omegas[a.omegas.len() / 2];
    let phase: Vec<Complex64> = a
        .omegas
        .iter()
        .map(|w| Complex64::from_polar(1.0, (w - w0) * delay_fs))
        .collect();
    let n = phase.len();
    let mut overlap = 0.0;
    for k in 0..n {
        for j in 0..n {
            // ρa_jk·e^{iω_k τ}·ρb_kj·e^{−iω_j τ}
            overlap += (a.density[(j, k)] * phase[k] * b.density[(k, j)] * phase[j].conj()).re;
        }
    }
    0.5 * (1.0 - overlap)
}

pub fn hom_curve(a: &SpectralState, b: &SpectralState, delays_fs: &[f64]) -> Result<HomCurve> {
    check_axes(a, b)?;
    let coincidence_probability: Vec<f64> = delays_fs
        .par_iter()
        .map(|&t| coincidence_unchecked(a, b, t))
        .collect();
    let min = coincidence_probability.iter().copied().fold(f64::INFINITY, f64::min);
    let visibility = if min.is_finite() {
        (1.0 - min / HOM_BASELINE).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(HomCurve {
        delays_fs: delays_fs.to_vec(),
        coincidence_probability,
        visibility,
    })
}

/// Upper bound on two-source visibility from double-pair emission,
/// `1 − 2·p_c` for pair probability per pulse `p_c ∈ [0, 0.25)`.
pub fn multipair_visibility_bound(pair_probability: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&pair_probability) {
        return Err(Error::InvalidInput(format!(
            "pair probability per pulse must lie in [0, 0.25), got {pair_probability}"
        )));
    }
    Ok(1.0 - 2.0 * pair_probability)
}

/// Spectral and multi-pair contributions to the expected visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityBudget {
    pub spectral: f64,
    pub multipair_bound: f64,
    pub total: f64,
}

pub fn visibility_budget(spectral: f64, pair_probability: f64) -> Result<VisibilityBudget> {
    let multipair_bound = multipair_visibility_bound(pair_probability)?;
    Ok(VisibilityBudget {
        spectral,
        multipair_bound,
        total: spectral * multipair_bound,
    })
}
