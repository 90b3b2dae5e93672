//! Two-qubit polarization states: model states of the Sagnac output and the
//! fidelity, purity and tangle figures of merit.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

mod tomography;

pub use tomography::{
    expected_tomography, full_settings, read_records_csv, reconstruct_mle, reconstruct_mle_report,
    simulate_tomography, write_records_csv, MleReport, Projector, Setting, TomographyRecord,
    MLE_GRADIENT_TOLERANCE, MLE_MAX_ITERATIONS,
};

type C = Complex64;

const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Density matrix in the |HH⟩, |HV⟩, |VH⟩, |VV⟩ basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<C>,
}

impl TwoQubitState {
    /// Validates Hermiticity (1e-10), unit trace (1e-9) and positivity
    /// (smallest eigenvalue ≥ −1e-9).
    pub fn new(rho: Matrix4<C>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("ρ is not Hermitian (deviation {herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("Tr ρ = {tr}, expected 1")));
        }
        let min = rho.symmetric_eigenvalues().min();
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("ρ has eigenvalue {min:.3e}")));
        }
        Ok(TwoQubitState { rho })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: Vector4<C>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / C::new(norm, 0.0);
        Self::new(psi * psi.adjoint())
    }

    pub fn singlet() -> Self {
        Self::pure(singlet_vector()).unwrap()
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState { rho: Matrix4::identity() * c(0.25, 0.0) }
    }

    /// `(1 − p)·|Ψ⁻⟩⟨Ψ⁻| + p·I/4`.
    pub fn werner(depolarization: f64) -> Result<Self> {
        model_state(depolarization, 0.0, 0.0)
    }

    pub fn rho(&self) -> &Matrix4<C> {
        &self.rho
    }

    /// Applies `U ⊗ V`.
    pub fn local_unitary(&self, u: &nalgebra::Matrix2<C>, v: &nalgebra::Matrix2<C>) -> Result<Self> {
        let w = u.kronecker(v);
        Self::new(w * self.rho * w.adjoint())
    }
}

/// `|Ψ⁻⟩ = (|HV⟩ − |VH⟩)/√2`.
pub fn singlet_vector() -> Vector4<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0))
}

/// Singlet with amplitude imbalance and phase error, mixed with white noise:
/// `(1 − p)|ψ⟩⟨ψ| + p·I/4`, `|ψ⟩ ∝ |HV⟩ − (1 − ε)·e^{iφ}|VH⟩`.
pub fn model_state(depolarization: f64, amplitude_imbalance: f64, phase_error: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&depolarization) {
        return Err(Error::InvalidInput(format!("depolarization must lie in [0, 1], got {depolarization}")));
    }
    if !(0.0..=1.0).contains(&amplitude_imbalance) {
        return Err(Error::InvalidInput(format!(
            "amplitude imbalance must lie in [0, 1], got {amplitude_imbalance}"
        )));
    }
    if !phase_error.is_finite() {
        return Err(Error::InvalidInput("phase error must be finite".into()));
    }
    let b = C::from_polar(1.0 - amplitude_imbalance, phase_error);
    let psi = Vector4::new(c(0.0, 0.0), c(1.0, 0.0), -b, c(0.0, 0.0));
    let psi = psi / C::new(psi.norm(), 0.0);
    let pure = psi * psi.adjoint();
    let rho = pure * c(1.0 - depolarization, 0.0) + Matrix4::identity() * c(0.25 * depolarization, 0.0);
    TwoQubitState::new(rho)
}

/// `⟨Ψ⁻|ρ|Ψ⁻⟩`.
pub fn fidelity_singlet(state: &TwoQubitState) -> f64 {
    let psi = singlet_vector();
    (psi.adjoint() * state.rho * psi)[(0, 0)].re
}

/// `Tr(ρ²)`.
pub fn state_purity(state: &TwoQubitState) -> f64 {
    state.rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigenvalues below this are treated as zero when factorizing ρ; they are
/// rounding noise for unit-trace 4×4 matrices, and their square roots would
/// otherwise leak ~1e-8 into the concurrence of pure states.
const RANK_TOLERANCE: f64 = 1e-13;

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`, with λ the decreasing
/// square roots of the eigenvalues of `ρ·ρ̃`, `ρ̃ = (σy⊗σy)ρ*(σy⊗σy)`.
///
/// With `ρ = AA†` and `B = (σy⊗σy)A*`, the λ are the singular values of
/// `A†B`, which avoids taking square roots of near-zero eigenvalues.
pub fn concurrence(state: &TwoQubitState) -> f64 {
    // σy⊗σy in the HH, HV, VH, VV basis.
    let mut yy = Matrix4::<C>::zeros();
    yy[(0, 3)] = c(-1.0, 0.0);
    yy[(1, 2)] = c(1.0, 0.0);
    yy[(2, 1)] = c(1.0, 0.0);
    yy[(3, 0)] = c(-1.0, 0.0);
    let eig = state.rho.symmetric_eigen();
    let d = eig
        .eigenvalues
        .map(|l| C::new(if l > RANK_TOLERANCE { l.sqrt() } else { 0.0 }, 0.0));
    let a = eig.eigenvectors * Matrix4::from_diagonal(&d);
    let b = yy * a.map(|z| z.conj());
    let mut lambdas: Vec<f64> = (a.adjoint() * b).singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Squared concurrence.
pub fn tangle(state: &TwoQubitState) -> f64 {
    concurrence(state).powi(2)
}

/// `½·Σ|eig(ρa − ρb)|`.
pub fn trace_distance(a: &TwoQubitState, b: &TwoQubitState) -> f64 {
    0.5 * (a.rho - b.rho).symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singlet_metrics() {
        let s = TwoQubitState::singlet();
        assert!((fidelity_singlet(&s) - 1.0).abs() < 1e-12);
        assert!((state_purity(&s) - 1.0).abs() < 1e-12);
        assert!((tangle(&s) - 1.0).abs() < 1e-9);
        assert!(trace_distance(&model_state(0.0, 0.0, 0.0).unwrap(), &s) < 1e-12);
    }

    #[test]
    fn triplet_is_orthogonal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = TwoQubitState::pure(Vector4::new(c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0))).unwrap();
        assert!(fidelity_singlet(&t).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_metrics() {
        let m = model_state(1.0, 0.0, 0.0).unwrap();
        assert!((fidelity_singlet(&m) - 0.25).abs() < 1e-12);
        assert!((state_purity(&m) - 0.25).abs() < 1e-12);
        assert!(tangle(&m).abs() < 1e-12);
        assert!(trace_distance(&m, &TwoQubitState::maximally_mixed()) < 1e-12);
    }

    #[test]
    fn werner_closed_forms() {
        let w = model_state(0.04, 0.0, 0.0).unwrap();
        assert!((fidelity_singlet(&w) - 0.97).abs() < 1e-12);
        assert!((state_purity(&w) - 0.9412).abs() < 1e-12);
        // Singlet weight 0.9: C = (3·0.9 − 1)/2 = 0.85.
        let w = TwoQubitState::new(
            singlet_vector() * singlet_vector().adjoint() * c(0.9, 0.0) + Matrix4::identity() * c(0.025, 0.0),
        )
        .unwrap();
        assert!((concurrence(&w) - 0.85).abs() < 1e-9);
        assert!((tangle(&w) - 0.7225).abs() < 1e-9);
    }

    #[test]
    fn product_state_has_no_tangle() {
        let hv = TwoQubitState::pure(Vector4::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).unwrap();
        assert!(tangle(&hv) < 1e-12);
        assert!(model_state(0.0, 1.0, 0.0).map(|s| tangle(&s)).unwrap() < 1e-12);
    }

    #[test]
    fn imbalance_and_phase() {
        // |HV⟩ − e^{iφ}|VH⟩ has fidelity cos²(φ/2) with the singlet.
        let s = model_state(0.0, 0.0, 0.5).unwrap();
        assert!((fidelity_singlet(&s) - (0.25f64).cos().powi(2)).abs() < 1e-12);
        assert!((tangle(&s) - 1.0).abs() < 1e-9, "{}", tangle(&s));
    }

    #[test]
    fn rejects_out_of_range_and_invalid_matrices() {
        assert!(model_state(1.5, 0.0, 0.0).is_err());
        assert!(model_state(0.0, -0.1, 0.0).is_err());
        assert!(TwoQubitState::new(Matrix4::identity() * c(0.5, 0.0)).is_err());
        let mut m = Matrix4::<C>::zeros();
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(TwoQubitState::new(m).is_err());
    }
}
