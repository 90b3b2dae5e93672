//! Klyshko heralding efficiencies from measured rates and forward loss
//! budgets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::{Arm, FilterSurvival};

/// Singles and coincidence rates, counts/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSummary {
    pub singles_signal: f64,
    pub singles_idler: f64,
    pub coincidences: f64,
    pub integration_s: f64,
    /// Accidental coincidence rate. Subtracted from the coincidences only
    /// when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accidentals: Option<f64>,
}

impl CountSummary {
    pub fn new(singles_signal: f64, singles_idler: f64, coincidences: f64, integration_s: f64) -> Result<Self> {
        let c = CountSummary { singles_signal, singles_idler, coincidences, integration_s, accidentals: None };
        c.validate()?;
        Ok(c)
    }

    pub fn with_accidentals(mut self, rate: f64) -> Result<Self> {
        self.accidentals = Some(rate);
        self.validate()?;
        Ok(self)
    }

    /// Coincidences after the optional accidental subtraction.
    pub fn net_coincidences(&self) -> f64 {
        (self.coincidences - self.accidentals.unwrap_or(0.0)).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("singles_signal", self.singles_signal),
            ("singles_idler", self.singles_idler),
            ("coincidences", self.coincidences),
            ("accidentals", self.accidentals.unwrap_or(0.0)),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be a non-negative rate, got {v}")));
            }
        }
        if !(self.integration_s.is_finite() && self.integration_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "integration time must be positive, got {} s",
                self.integration_s
            )));
        }
        let net = self.net_coincidences();
        if net > self.singles_signal.min(self.singles_idler) {
            return Err(Error::InvalidInput(format!(
                "coincidences ({net}/s) exceed the smaller singles rate ({}/s)",
                self.singles_signal.min(self.singles_idler)
            )));
        }
        Ok(())
    }

    /// Same measurement with the arms exchanged.
    pub fn swapped(&self) -> Self {
        CountSummary {
            singles_signal: self.singles_idler,
            singles_idler: self.singles_signal,
            ..*self
        }
    }
}

/// Klyshko efficiencies `(η_signal, η_idler)` with `η_signal = C/S_idler` and
/// `η_idler = C/S_signal`.
pub fn klyshko(counts: &CountSummary) -> Result<(f64, f64)> {
    counts.validate()?;
    if counts.singles_signal == 0.0 || counts.singles_idler == 0.0 {
        return Err(Error::InvalidInput(
            "Klyshko efficiency is undefined with zero singles in a heralding arm".into(),
        ));
    }
    let c = counts.net_coincidences();
    Ok((c / counts.singles_idler, c / counts.singles_signal))
}

/// Multiplicative transmissions seen by one photon, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmBudget {
    pub detector_efficiency: f64,
    pub optics_transmission: f64,
    pub fiber_coupling: f64,
    /// Spatial-mode overlap between the pair and the collection modes,
    /// supplied by the user.
    pub mode_overlap: f64,
    /// Conditional filter transmission given that the partner passed.
    pub filter_survival: f64,
}

impl Default for ArmBudget {
    fn default() -> Self {
        ArmBudget {
            detector_efficiency: 1.0,
            optics_transmission: 1.0,
            fiber_coupling: 1.0,
            mode_overlap: 1.0,
            filter_survival: 1.0,
        }
    }
}

impl ArmBudget {
    pub fn factors(&self) -> [(&'static str, f64); 5] {
        [
            ("detector_efficiency", self.detector_efficiency),
            ("optics_transmission", self.optics_transmission),
            ("fiber_coupling", self.fiber_coupling),
            ("mode_overlap", self.mode_overlap),
            ("filter_survival", self.filter_survival),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.factors() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        self.factors().iter().map(|f| f.1).product()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossBudget {
    pub signal: ArmBudget,
    pub idler: ArmBudget,
}

impl LossBudget {
    pub fn symmetric(arm: ArmBudget) -> Self {
        LossBudget { signal: arm, idler: arm }
    }

    pub fn arm(&self, arm: Arm) -> &ArmBudget {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.idler.validate()
    }

    /// Inserts the conditional survivals recorded by
    /// [`apply_filter`](crate::jsa::apply_filter).
    pub fn with_filter_survival(mut self, survival: &FilterSurvival) -> Self {
        self.signal.filter_survival = survival.heralding_factor(Arm::Signal);
        self.idler.filter_survival = survival.heralding_factor(Arm::Idler);
        self
    }
}

/// Predicted Klyshko efficiency of the photon in `heralded_arm`: the product
/// of that arm's transmissions.
pub fn predict_heralding(budget: &LossBudget, heralded_arm: Arm) -> Result<f64> {
    budget.validate()?;
    Ok(budget.arm(heralded_arm).transmission())
}

/// Poisson singles and coincidences for a source emitting `pair_rate` pairs
/// per second through `budget`. Filter transmissions come from `survival`
/// rather than the budget's `filter_survival` fields, which are ignored.
pub fn simulate_counts(
    budget: &LossBudget,
    survival: Option<&FilterSurvival>,
    pair_rate: f64,
    integration_s: f64,
    seed: u64,
) -> Result<CountSummary> {
    budget.validate()?;
    if !(pair_rate.is_finite() && pair_rate > 0.0 && integration_s.is_finite() && integration_s > 0.0) {
        return Err(Error::InvalidInput("pair rate and integration time must be positive".into()));
    }
    let strip = |a: &ArmBudget| ArmBudget { filter_survival: 1.0, ..*a }.transmission();
    let (ts, ti) = (strip(&budget.signal), strip(&budget.idler));
    let fs = survival.copied().unwrap_or(FilterSurvival { signal: 1.0, idler: 1.0, joint: 1.0 });
    let pairs = pair_rate * integration_s;
    let means = [pairs * ts * fs.signal, pairs * ti * fs.idler, pairs * ts * ti * fs.joint];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |m: f64| -> Result<f64> {
        if m <= 0.0 {
            return Ok(0.0);
        }
        let d = Poisson::new(m).map_err(|e| Error::InvalidInput(format!("Poisson mean {m}: {e}")))?;
        Ok(d.sample(&mut rng))
    };
    let s = draw(means[0])?;
    let i = draw(means[1])?;
    let c = draw(means[2])?.min(s).min(i);
    CountSummary::new(s / integration_s, i / integration_s, c / integration_s, integration_s)
}
