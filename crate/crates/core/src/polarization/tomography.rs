//! Overcomplete two-qubit tomography: Poisson simulation over the 36
//! products of the H/V, D/A, R/L eigenstates, and maximum-likelihood
//! reconstruction through a lower-triangular factorization `ρ ∝ T†T`.

use std::fmt;
use std::io;
use std::str::FromStr;

use nalgebra::{DMatrix, SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::TwoQubitState;
use crate::error::{Error, Result};

type C = Complex64;

/// Stopping threshold on the gradient norm of the count-normalized
/// negative log-likelihood.
pub const MLE_GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MLE_MAX_ITERATIONS: usize = 100_000;

const NPARAMS: usize = 16;
type Params = SVector<f64, NPARAMS>;
type Hessian = SMatrix<f64, NPARAMS, NPARAMS>;

/// Single-qubit projector label. `R = (H − iV)/√2`, `L = (H + iV)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Projector {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Projector {
    pub const ALL: [Projector; 6] = [Projector::H, Projector::V, Projector::D, Projector::A, Projector::R, Projector::L];

    pub fn ket(self) -> Vector2<C> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            Projector::H => (C::new(1.0, 0.0), C::new(0.0, 0.0)),
            Projector::V => (C::new(0.0, 0.0), C::new(1.0, 0.0)),
            Projector::D => (C::new(s, 0.0), C::new(s, 0.0)),
            Projector::A => (C::new(s, 0.0), C::new(-s, 0.0)),
            Projector::R => (C::new(s, 0.0), C::new(0.0, -s)),
            Projector::L => (C::new(s, 0.0), C::new(0.0, s)),
        };
        Vector2::new(a, b)
    }
}

impl fmt::Display for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Projector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(Projector::H),
            "V" => Ok(Projector::V),
            "D" => Ok(Projector::D),
            "A" => Ok(Projector::A),
            "R" => Ok(Projector::R),
            "L" => Ok(Projector::L),
            other => Err(Error::InvalidInput(format!("unknown projector label '{other}'"))),
        }
    }
}

/// Projector pair (first qubit, second qubit).
pub type Setting = (Projector, Projector);

/// The 36 product settings in row-major label order.
pub fn full_settings() -> Vec<Setting> {
    Projector::ALL
        .iter()
        .flat_map(|&a| Projector::ALL.iter().map(move |&b| (a, b)))
        .collect()
}

fn product_ket(s: Setting) -> Vector4<C> {
    let (a, b) = (s.0.ket(), s.1.ket());
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

fn setting_label(s: Setting) -> String {
    format!("{}{}", s.0, s.1)
}

/// One measured setting. Serializes as `setting_a,setting_b,counts,integration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub setting_a: Projector,
    pub setting_b: Projector,
    pub counts: u64,
    pub integration_s: f64,
}

impl TomographyRecord {
    pub fn new(setting: Setting, counts: u64, integration_s: f64) -> Result<Self> {
        let r = TomographyRecord { setting_a: setting.0, setting_b: setting.1, counts, integration_s };
        r.validate()?;
        Ok(r)
    }

    pub fn setting(&self) -> Setting {
        (self.setting_a, self.setting_b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.integration_s.is_finite() && self.integration_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "integration time for setting {} must be positive, got {}",
                setting_label(self.setting()),
                self.integration_s
            )));
        }
        Ok(())
    }
}

fn probability(state: &TwoQubitState, s: Setting) -> f64 {
    let v = product_ket(s);
    (v.adjoint() * state.rho() * v)[(0, 0)].re.max(0.0)
}

/// Poisson counts with mean `mean_counts·Tr(ρP)` for every setting, 1 s
/// integration each. Deterministic for a given seed.
pub fn simulate_tomography(
    state: &TwoQubitState,
    settings: &[Setting],
    mean_counts: u64,
    seed: u64,
) -> Result<Vec<TomographyRecord>> {
    if mean_counts < 1 {
        return Err(Error::InvalidInput("mean counts per setting must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    settings
        .iter()
        .map(|&s| {
            let mean = mean_counts as f64 * probability(state, s);
            let counts = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::InvalidInput(format!("Poisson mean {mean}: {e}")))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            TomographyRecord::new(s, counts, 1.0)
        })
        .collect()
}

/// Noiseless records: expected counts rounded to the nearest integer.
pub fn expected_tomography(state: &TwoQubitState, settings: &[Setting], mean_counts: u64) -> Vec<TomographyRecord> {
    settings
        .iter()
        .map(|&s| TomographyRecord {
            setting_a: s.0,
            setting_b: s.1,
            counts: (mean_counts as f64 * probability(state, s)).round() as u64,
            integration_s: 1.0,
        })
        .collect()
}

/// Hermitian projector as a real 16-vector (diagonal, then real and
/// imaginary parts of the upper triangle).
fn hermitian_coordinates(v: &Vector4<C>) -> [f64; 16] {
    let p = v * v.adjoint();
    let mut out = [0.0; 16];
    let mut k = 0;
    for i in 0..4 {
        out[k] = p[(i, i)].re;
        k += 1;
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            out[k] = p[(i, j)].re;
            out[k + 1] = p[(i, j)].im;
            k += 2;
        }
    }
    out
}

fn check_complete(records: &[TomographyRecord]) -> Result<()> {
    let mut present: Vec<Setting> = records.iter().map(|r| r.setting()).collect();
    present.sort();
    present.dedup();
    let m = DMatrix::from_fn(present.len().max(1), 16, |r, c| {
        present.get(r).map_or(0.0, |&s| hermitian_coordinates(&product_ket(s))[c])
    });
    let sv = m.singular_values();
    let max = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * max.max(1.0)).count();
    if rank < 16 {
        let missing = full_settings()
            .into_iter()
            .filter(|s| !present.contains(s))
            .map(setting_label)
            .collect();
        return Err(Error::RankDeficient { missing });
    }
    Ok(())
}

/// Result of a likelihood maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct MleReport {
    pub state: TwoQubitState,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Poisson deviance per recorded count at the optimum; zero for a
    /// perfect fit.
    pub deviance_per_count: f64,
}

struct Likelihood {
    kets: Vec<Vector4<C>>,
    counts: Vec<f64>,
    /// Expected-count scale per unit `Tr(T†T·P)`: `t_s·Σn/Σt`.
    exposure: Vec<f64>,
    total: f64,
}

fn lower_triangular(x: &Params) -> SMatrix<C, 4, 4> {
    let mut t = SMatrix::<C, 4, 4>::zeros();
    for i in 0..4 {
        t[(i, i)] = C::new(x[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            t[(i, j)] = C::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

impl Likelihood {
    fn new(records: &[TomographyRecord]) -> Result<Self> {
        let total: f64 = records.iter().map(|r| r.counts as f64).sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("tomography records contain no counts".into()));
        }
        let time: f64 = records.iter().map(|r| r.integration_s).sum();
        Ok(Likelihood {
            kets: records.iter().map(|r| product_ket(r.setting())).collect(),
            counts: records.iter().map(|r| r.counts as f64).collect(),
            exposure: records.iter().map(|r| r.integration_s * total / time).collect(),
            total,
        })
    }

    /// Count-normalized Poisson deviance and its gradient.
    fn evaluate(&self, x: &Params, want_grad: bool) -> (f64, Params) {
        let t = lower_triangular(x);
        let mut f = 0.0;
        let mut g = Params::zeros();
        for ((v, &n), &e) in self.kets.iter().zip(&self.counts).zip(&self.exposure) {
            let w = t * v;
            let q = w.norm_squared();
            let mu = e * q;
            if n > 0.0 {
                if mu <= 0.0 {
                    return (f64::INFINITY, g);
                }
                f += mu - n - n * (mu / n).ln();
            } else {
                f += mu;
            }
            if want_grad {
                let coef = if n > 0.0 { e - n / q } else { e };
                // d|Tv|²/dT_ij = 2·conj(w_i)·v_j for the real part, its
                // negated imaginary part for the imaginary part.
                for i in 0..4 {
                    g[i] += coef * 2.0 * (w[i].conj() * v[i]).re;
                }
                let mut k = 4;
                for i in 1..4 {
                    for j in 0..i {
                        let z = w[i].conj() * v[j];
                        g[k] += coef * 2.0 * z.re;
                        g[k + 1] -= coef * 2.0 * z.im;
                        k += 2;
                    }
                }
            }
        }
        (f / self.total, g / self.total)
    }
}

/// Positivity-constrained maximum-likelihood state.
pub fn reconstruct_mle(records: &[TomographyRecord]) -> Result<TwoQubitState> {
    reconstruct_mle_report(records).map(|r| r.state)
}

/// BFGS ascent on the Poisson likelihood with backtracking line search,
/// stopping at [`MLE_GRADIENT_TOLERANCE`] or [`MLE_MAX_ITERATIONS`].
pub fn reconstruct_mle_report(records: &[TomographyRecord]) -> Result<MleReport> {
    for r in records {
        r.validate()?;
    }
    check_complete(records)?;
    let lik = Likelihood::new(records)?;

    // T = I: ρ = I/4, and the expected total matches the recorded total
    // for the full setting set.
    let mut x = Params::zeros();
    for i in 0..4 {
        x[i] = 1.0;
    }
    let (mut f, mut g) = lik.evaluate(&x, true);
    let mut h = Hessian::identity();
    let mut iterations = 0;
    while g.norm() >= MLE_GRADIENT_TOLERANCE && iterations < MLE_MAX_ITERATIONS {
        iterations += 1;
        let mut dir = -(h * g);
        if dir.dot(&g) >= 0.0 {
            h = Hessian::identity();
            dir = -g;
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = x + dir * step;
            let (ft, _) = lik.evaluate(&trial, false);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if h == Hessian::identity() {
                // No further decrease representable.
                break;
            }
            h = Hessian::identity();
            continue;
        };
        let (_, gn) = lik.evaluate(&xn, true);
        let s = xn - x;
        let y = gn - g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = Hessian::identity();
            let a = i - s * y.transpose() * rho;
            h = a * h * a.transpose() + s * s.transpose() * rho;
        }
        x = xn;
        f = fnew;
        g = gn;
    }

    let t = lower_triangular(&x);
    let a = t.adjoint() * t;
    let tr = a.trace().re;
    let mut rho = a / C::new(tr, 0.0);
    for i in 0..4 {
        rho[(i, i)].im = 0.0;
        for j in (i + 1)..4 {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    let gradient_norm = g.norm();
    Ok(MleReport {
        state: TwoQubitState::new(rho)?,
        iterations,
        gradient_norm,
        converged: gradient_norm < MLE_GRADIENT_TOLERANCE,
        deviance_per_count: f,
    })
}

pub fn write_records_csv<W: io::Write>(writer: W, records: &[TomographyRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidInput(format!("writing tomography CSV: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("writing tomography CSV: {e}")))
}

pub fn read_records_csv<R: io::Read>(reader: R) -> Result<Vec<TomographyRecord>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rd.deserialize::<TomographyRecord>().enumerate() {
        // Header is line 1.
        let r = row.map_err(|e| Error::InvalidInput(format!("tomography CSV line {}: {e}", k + 2)))?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}
