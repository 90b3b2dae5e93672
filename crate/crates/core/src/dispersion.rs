//! Refractive index, wavenumber and inverse group velocity of crystal axes.
//!
//! Sellmeier coefficients are data: a [`SellmeierSet`] pairs a coefficient
//! list with a [`SellmeierFormula`] tag that says how to read it. The shipped
//! [`DispersionRegistry::builtin`] holds the two KTP axes used by the default
//! source design; further sets can be registered in code or loaded from a TOML
//! file (see `docs/dispersion-file.md`).
//!
//! Internally everything is evaluated in angular frequency (rad/fs); the
//! public wavelength arguments are in nm.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{nm_to_omega, omega_to_nm, SPEED_OF_LIGHT_UM_PER_FS};

/// Default central-difference step for `∂k/∂ω`, in rad/fs.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-4;

/// Default reference temperature of a Sellmeier fit, °C.
pub const DEFAULT_REFERENCE_TEMPERATURE_C: f64 = 20.0;

/// How the coefficient list of a [`SellmeierSet`] is interpreted
/// (λ in µm throughout).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SellmeierFormula {
    /// `n = c0`. Dispersionless; used for synthetic checks.
    Constant,
    /// `n² = A + Σ Bᵢ / (1 − Cᵢ/λ²) − D·λ²` with coefficients
    /// `[A, B1, C1, …, Bk, Ck, D]`.
    PoleForm,
    /// `n² = 1 + Σ Bᵢ·λ² / (λ² − Cᵢ)` with coefficients `[B1, C1, …]`.
    Standard,
}

impl SellmeierFormula {
    fn check_len(self, len: usize) -> std::result::Result<(), String> {
        let ok = match self {
            SellmeierFormula::Constant => len == 1,
            SellmeierFormula::PoleForm => len >= 2 && len % 2 == 0,
            SellmeierFormula::Standard => len >= 2 && len % 2 == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{len} coefficients do not fit the {self:?} formula"))
        }
    }

    fn index(self, c: &[f64], lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        match self {
            SellmeierFormula::Constant => c[0],
            SellmeierFormula::PoleForm => {
                let (a, rest) = c.split_first().unwrap();
                let (d, poles) = rest.split_last().unwrap();
                let sum: f64 = poles
                    .chunks_exact(2)
                    .map(|p| p[0] / (1.0 - p[1] / l2))
                    .sum();
                (a + sum - d * l2).sqrt()
            }
            SellmeierFormula::Standard => {
                let sum: f64 = c.chunks_exact(2).map(|p| p[0] * l2 / (l2 - p[1])).sum();
                (1.0 + sum).sqrt()
            }
        }
    }
}

/// Temperature dependence of one axis.
///
/// `Δn(λ, T) = n₁(λ)·ΔT + n₂(λ)·ΔT²` with `nⱼ(λ) = Σₘ aⱼₘ / λᵐ` (λ in µm) and
/// `ΔT = T − reference`. The poling period expands linearly as
/// `Λ(T) = Λ·(1 + α·ΔT)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ThermalModel {
    #[serde(default)]
    pub dn_dt_linear: Vec<f64>,
    #[serde(default)]
    pub dn_dt_quadratic: Vec<f64>,
    /// Linear thermal expansion along the poling direction, 1/°C.
    #[serde(default)]
    pub poling_expansion: f64,
}

impl ThermalModel {
    fn index_shift(&self, lambda_um: f64, delta_t: f64) -> f64 {
        let poly = |a: &[f64]| -> f64 {
            a.iter()
                .enumerate()
                .map(|(m, am)| am / lambda_um.powi(m as i32))
                .sum()
        };
        poly(&self.dn_dt_linear) * delta_t + poly(&self.dn_dt_quadratic) * delta_t * delta_t
    }
}

fn default_reference_temperature() -> f64 {
    DEFAULT_REFERENCE_TEMPERATURE_C
}

/// A named Sellmeier coefficient set for one crystal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierSet {
    pub name: String,
    pub formula: SellmeierFormula,
    pub coefficients: Vec<f64>,
    /// Inclusive validity interval in nm.
    pub valid_range_nm: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalModel>,
    #[serde(default = "default_reference_temperature")]
    pub reference_temperature_c: f64,
    /// Where the coefficients come from.
    #[serde(default)]
    pub provenance: String,
}

impl SellmeierSet {
    pub fn new(
        name: impl Into<String>,
        formula: SellmeierFormula,
        coefficients: Vec<f64>,
        valid_range_nm: [f64; 2],
    ) -> Result<Self> {
        let set = SellmeierSet {
            name: name.into(),
            formula,
            coefficients,
            valid_range_nm,
            thermal: None,
            reference_temperature_c: DEFAULT_REFERENCE_TEMPERATURE_C,
            provenance: String::new(),
        };
        set.validate()?;
        Ok(set)
    }

    /// A dispersionless set with index `n` over 200–5000 nm.
    pub fn constant(name: impl Into<String>, n: f64) -> Result<Self> {
        Self::new(name, SellmeierFormula::Constant, vec![n], [200.0, 5000.0])
    }

    pub fn with_thermal(mut self, thermal: ThermalModel) -> Self {
        self.thermal = Some(thermal);
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    /// Checks the set invariants: a non-empty range, a coefficient count that
    /// matches the formula and a finite index above 1 across the range.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Registry(format!("set '{}': {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::Registry("Sellmeier set with empty name".into()));
        }
        let [lo, hi] = self.valid_range_nm;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return bad(format!("empty or invalid valid range [{lo}, {hi}] nm"));
        }
        if let Err(msg) = self.formula.check_len(self.coefficients.len()) {
            return bad(msg);
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        if !self.reference_temperature_c.is_finite() {
            return bad("non-finite reference temperature".into());
        }
        for k in 0..=64 {
            let nm = lo + (hi - lo) * k as f64 / 64.0;
            let n = self.formula.index(&self.coefficients, nm * 1e-3);
            if !(n.is_finite() && n > 1.0) {
                return bad(format!("index {n} at {nm:.1} nm is not a finite value above 1"));
            }
        }
        Ok(())
    }

    fn check_range(&self, wavelength_nm: f64) -> Result<()> {
        let [lo, hi] = self.valid_range_nm;
        if wavelength_nm >= lo && wavelength_nm <= hi {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                set: self.name.clone(),
                wavelength_nm,
                min_nm: lo,
                max_nm: hi,
            })
        }
    }

    /// Index without range checking or thermal correction.
    pub fn base_index(&self, wavelength_nm: f64) -> f64 {
        self.formula.index(&self.coefficients, wavelength_nm * 1e-3)
    }

    /// Refractive index at `wavelength_nm` and `temperature_c`.
    pub fn refractive_index(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64> {
        self.check_range(wavelength_nm)?;
        let n = self.base_index(wavelength_nm);
        let delta_t = temperature_c - self.reference_temperature_c;
        match &self.thermal {
            Some(th) if delta_t != 0.0 => Ok(n + th.index_shift(wavelength_nm * 1e-3, delta_t)),
            _ => Ok(n),
        }
    }

    /// Wavenumber `k = 2π·n/λ` in rad/µm.
    pub fn wavenumber(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64> {
        self.wavenumber_at(nm_to_omega(wavelength_nm), temperature_c)
    }

    /// Wavenumber at angular frequency `omega` (rad/fs), in rad/µm.
    pub fn wavenumber_at(&self, omega: f64, temperature_c: f64) -> Result<f64> {
        let n = self.refractive_index(omega_to_nm(omega), temperature_c)?;
        Ok(n * omega / SPEED_OF_LIGHT_UM_PER_FS)
    }

    /// Inverse group velocity `k' = ∂k/∂ω` in fs/µm, central difference with
    /// [`DEFAULT_DERIVATIVE_STEP`].
    pub fn inverse_group_velocity(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64> {
        self.inverse_group_velocity_at(
            nm_to_omega(wavelength_nm),
            temperature_c,
            DEFAULT_DERIVATIVE_STEP,
        )
    }

    /// Inverse group velocity at `omega` (rad/fs) with an explicit step (rad/fs).
    /// Both `omega ± step` must map into the valid range.
    pub fn inverse_group_velocity_at(&self, omega: f64, temperature_c: f64, step: f64) -> Result<f64> {
        if !(step > 0.0 && step < omega) {
            return Err(Error::InvalidInput(format!(
                "derivative step {step} rad/fs must lie in (0, ω)"
            )));
        }
        let k_plus = self.wavenumber_at(omega + step, temperature_c)?;
        let k_minus = self.wavenumber_at(omega - step, temperature_c)?;
        Ok((k_plus - k_minus) / (2.0 * step))
    }

    /// Linear poling-period expansion coefficient (0 without a thermal model).
    pub fn poling_expansion(&self) -> f64 {
        self.thermal.as_ref().map_or(0.0, |t| t.poling_expansion)
    }
}

/// Which field of the three-wave interaction an axis carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRole {
    Pump,
    Signal,
    Idler,
}

/// Binding of pump, signal and idler to Sellmeier sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalAxes {
    pub pump: SellmeierSet,
    pub signal: SellmeierSet,
    pub idler: SellmeierSet,
}

impl CrystalAxes {
    /// Unrestricted binding (type-0/type-I style or synthetic checks).
    pub fn new(pump: SellmeierSet, signal: SellmeierSet, idler: SellmeierSet) -> Self {
        CrystalAxes { pump, signal, idler }
    }

    /// Type-II binding: signal and idler must sit on different axes.
    pub fn type_ii(pump: SellmeierSet, signal: SellmeierSet, idler: SellmeierSet) -> Result<Self> {
        if signal.name == idler.name {
            return Err(Error::InvalidInput(format!(
                "type-II configuration needs orthogonal signal and idler axes, both are '{}'",
                signal.name
            )));
        }
        Ok(Self::new(pump, signal, idler))
    }

    /// The default ppKTP binding: pump and idler on y, signal on z.
    pub fn ktp_type_ii() -> Self {
        let reg = DispersionRegistry::builtin();
        Self::type_ii(
            reg.get(KTP_Y).unwrap().clone(),
            reg.get(KTP_Z).unwrap().clone(),
            reg.get(KTP_Y).unwrap().clone(),
        )
        .unwrap()
    }

    pub fn get(&self, role: AxisRole) -> &SellmeierSet {
        match role {
            AxisRole::Pump => &self.pump,
            AxisRole::Signal => &self.signal,
            AxisRole::Idler => &self.idler,
        }
    }

    /// Poling expansion coefficient, taken from the pump-axis set.
    pub fn poling_expansion(&self) -> f64 {
        self.pump.poling_expansion()
    }

    /// Reference temperature of the poling period (pump-axis set).
    pub fn reference_temperature_c(&self) -> f64 {
        self.pump.reference_temperature_c
    }

    /// Copy of the binding with every thermal model removed.
    pub fn without_thermal(&self) -> Self {
        let strip = |s: &SellmeierSet| SellmeierSet { thermal: None, ..s.clone() };
        Self::new(strip(&self.pump), strip(&self.signal), strip(&self.idler))
    }
}

/// Name of the shipped KTP y-axis set.
pub const KTP_Y: &str = "ktp_y";
/// Name of the shipped KTP z-axis set.
pub const KTP_Z: &str = "ktp_z";

// Thermo-optic polynomials for flux-grown KTP, ×1e-6 (linear) and ×1e-8
// (quadratic) in the Σ a_m/λ^m form.
const KTP_Y_DN_DT_1: [f64; 4] = [6.2897e-6, 6.3061e-6, -6.0629e-6, 2.6486e-6];
const KTP_Y_DN_DT_2: [f64; 4] = [-0.14445e-8, 2.2244e-8, -3.5770e-8, 1.3470e-8];
const KTP_Z_DN_DT_1: [f64; 4] = [9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6];
const KTP_Z_DN_DT_2: [f64; 4] = [-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8];
const KTP_X_EXPANSION: f64 = 6.7e-6;

/// A collection of uniquely named Sellmeier sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DispersionRegistry {
    sets: BTreeMap<String, SellmeierSet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    version: u32,
    #[serde(default, rename = "set")]
    sets: Vec<SellmeierSet>,
}

#[derive(Serialize)]
struct RegistryFileOut<'a> {
    version: u32,
    #[serde(rename = "set")]
    sets: Vec<&'a SellmeierSet>,
}

/// Current version of the dispersion file schema.
pub const REGISTRY_FILE_VERSION: u32 = 1;

impl DispersionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The shipped KTP sets.
    ///
    /// * `ktp_y`: n_y of flux-grown KTP (König & Wong 2004 fit).
    /// * `ktp_z`: n_z of flux-grown KTP (Fradkin-Kashi et al. 1999 fit).
    ///
    /// Both carry the Emanueli & Arie thermo-optic polynomials and the
    /// x-axis expansion coefficient, referenced to 20 °C.
    pub fn builtin() -> Self {
        let ktp_y = SellmeierSet::new(
            KTP_Y,
            SellmeierFormula::PoleForm,
            vec![2.09930, 0.922683, 0.0467695, 0.0138408],
            [400.0, 1750.0],
        )
        .unwrap()
        .with_thermal(ThermalModel {
            dn_dt_linear: KTP_Y_DN_DT_1.to_vec(),
            dn_dt_quadratic: KTP_Y_DN_DT_2.to_vec(),
            poling_expansion: KTP_X_EXPANSION,
        })
        .with_provenance("KTP n_y: K\u{f6}nig & Wong, Appl. Phys. Lett. 84, 1644 (2004); thermal: Emanueli & Arie, Appl. Opt. 42, 6661 (2003)");
        let ktp_z = SellmeierSet::new(
            KTP_Z,
            SellmeierFormula::PoleForm,
            vec![2.12725, 1.18431, 0.0514852, 0.6603, 100.00507, 0.00968956],
            [430.0, 3540.0],
        )
        .unwrap()
        .with_thermal(ThermalModel {
            dn_dt_linear: KTP_Z_DN_DT_1.to_vec(),
            dn_dt_quadratic: KTP_Z_DN_DT_2.to_vec(),
            poling_expansion: KTP_X_EXPANSION,
        })
        .with_provenance("KTP n_z: Fradkin et al., Appl. Phys. Lett. 74, 914 (1999); thermal: Emanueli & Arie, Appl. Opt. 42, 6661 (2003)");
        let mut reg = Self::new();
        reg.register(ktp_y).unwrap();
        reg.register(ktp_z).unwrap();
        reg
    }

    /// Adds a set; names must be unique.
    pub fn register(&mut self, set: SellmeierSet) -> Result<()> {
        set.validate()?;
        if self.sets.contains_key(&set.name) {
            return Err(Error::Registry(format!("duplicate set name '{}'", set.name)));
        }
        self.sets.insert(set.name.clone(), set);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&SellmeierSet> {
        self.sets.get(name).ok_or_else(|| {
            Error::Registry(format!(
                "unknown set '{name}' (known: {})",
                self.sets.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Parses a registry from the TOML dispersion-file format.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: RegistryFile =
            toml::from_str(text).map_err(|e| Error::Registry(e.to_string()))?;
        if file.version != REGISTRY_FILE_VERSION {
            return Err(Error::Registry(format!(
                "unsupported dispersion file version {} (expected {REGISTRY_FILE_VERSION})",
                file.version
            )));
        }
        let mut reg = Self::new();
        for set in file.sets {
            reg.register(set)?;
        }
        Ok(reg)
    }

    pub fn to_toml_string(&self) -> String {
        let out = RegistryFileOut {
            version: REGISTRY_FILE_VERSION,
            sets: self.sets.values().collect(),
        };
        toml::to_string(&out).expect("registry serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Registry(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Registry(msg) => Error::Registry(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Resolves a pump/signal/idler binding by set names.
    pub fn axes(&self, pump: &str, signal: &str, idler: &str) -> Result<CrystalAxes> {
        Ok(CrystalAxes::new(
            self.get(pump)?.clone(),
            self.get(signal)?.clone(),
            self.get(idler)?.clone(),
        ))
    }
}
