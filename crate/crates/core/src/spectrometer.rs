//! Fiber time-of-flight spectrometer: linear wavelength-to-delay mapping in
//! dispersion-compensating fiber, sampling of the joint spectral intensity
//! and coincidence-time histogramming within one pump period.

use std::io;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::jsa::{Arm, JointAmplitude};
use crate::phasematch::PumpSpec;
use crate::units::omega_to_nm;

/// Coincidence-card bin width used by the presets, ns.
pub const DEFAULT_BIN_SIZE_NS: f64 = 0.128;

/// Dispersion-compensating fiber characterized by its total group delay
/// slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcfSpec {
    /// ps/nm; normal-dispersion fiber delays longer wavelengths less, so
    /// this is usually negative.
    pub total_dispersion_ps_per_nm: f64,
    pub reference_wavelength_nm: f64,
    /// Arrival time of the reference wavelength, ns.
    pub insertion_delay_ns: f64,
}

impl DcfSpec {
    pub fn new(total_dispersion_ps_per_nm: f64, reference_wavelength_nm: f64, insertion_delay_ns: f64) -> Result<Self> {
        let d = DcfSpec { total_dispersion_ps_per_nm, reference_wavelength_nm, insertion_delay_ns };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_dispersion_ps_per_nm.is_finite() && self.total_dispersion_ps_per_nm != 0.0) {
            return Err(Error::InvalidInput(format!(
                "DCF total dispersion must be finite and non-zero, got {} ps/nm",
                self.total_dispersion_ps_per_nm
            )));
        }
        if !(self.reference_wavelength_nm.is_finite() && self.reference_wavelength_nm > 0.0) {
            return Err(Error::InvalidInput(format!(
                "DCF reference wavelength must be positive, got {} nm",
                self.reference_wavelength_nm
            )));
        }
        if !self.insertion_delay_ns.is_finite() {
            return Err(Error::InvalidInput("DCF insertion delay must be finite".into()));
        }
        Ok(())
    }

    /// Signal-arm preset, inferred rather than measured: 0.128 ns bins
    /// resolve 0.31 nm.
    pub fn preset_signal() -> Self {
        DcfSpec {
            total_dispersion_ps_per_nm: -DEFAULT_BIN_SIZE_NS * 1e3 / 0.31,
            reference_wavelength_nm: 1570.0,
            insertion_delay_ns: 0.0,
        }
    }

    /// Idler-arm preset, inferred: 0.128 ns bins resolve 0.33 nm.
    pub fn preset_idler() -> Self {
        DcfSpec {
            total_dispersion_ps_per_nm: -DEFAULT_BIN_SIZE_NS * 1e3 / 0.33,
            reference_wavelength_nm: 1570.0,
            insertion_delay_ns: 0.0,
        }
    }

    /// Spectral span that fits in `window_ns` without wrapping, nm.
    pub fn usable_bandwidth_nm(&self, window_ns: f64) -> f64 {
        window_ns * 1e3 / self.total_dispersion_ps_per_nm.abs()
    }
}

/// `t = t0 + D·(λ − λref)`, ns.
pub fn wavelength_to_arrival(dcf: &DcfSpec, wavelength_nm: f64) -> f64 {
    dcf.insertion_delay_ns + dcf.total_dispersion_ps_per_nm * 1e-3 * (wavelength_nm - dcf.reference_wavelength_nm)
}

pub fn arrival_to_wavelength(dcf: &DcfSpec, arrival_ns: f64) -> f64 {
    dcf.reference_wavelength_nm + (arrival_ns - dcf.insertion_delay_ns) / (dcf.total_dispersion_ps_per_nm * 1e-3)
}

/// Wavelength spanned by one time bin, nm.
pub fn resolution_estimate(dcf: &DcfSpec, bin_size_ns: f64) -> f64 {
    bin_size_ns * 1e3 / dcf.total_dispersion_ps_per_nm.abs()
}

/// Time between pump pulses, ns.
pub fn pulse_window_ns(repetition_rate_mhz: f64) -> f64 {
    1e3 / repetition_rate_mhz
}

/// Two-dimensional arrival-time histogram, rows signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TofHistogram {
    pub signal_edges_ns: Vec<f64>,
    pub idler_edges_ns: Vec<f64>,
    /// `counts[signal bin][idler bin]`.
    pub counts: Vec<Vec<u64>>,
    pub bin_size_ns: f64,
    pub window_ns: f64,
    pub total_pairs: u64,
    /// Pairs whose arrival fell outside the principal window of either arm
    /// (they would alias onto a neighbouring pulse) or past the last full
    /// bin. They are not histogrammed.
    pub flagged_pairs: u64,
    pub warnings: Vec<String>,
}

fn edges(start: f64, bin: f64, nbins: usize) -> Vec<f64> {
    (0..=nbins).map(|k| start + k as f64 * bin).collect()
}

fn bin_centers(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

impl TofHistogram {
    pub fn nbins(&self) -> (usize, usize) {
        (self.signal_edges_ns.len() - 1, self.idler_edges_ns.len() - 1)
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn signal_centers_ns(&self) -> Vec<f64> {
        bin_centers(&self.signal_edges_ns)
    }

    pub fn idler_centers_ns(&self) -> Vec<f64> {
        bin_centers(&self.idler_edges_ns)
    }

    /// Bin centers mapped back through the fiber, nm.
    pub fn implied_wavelengths_nm(&self, arm: Arm, dcf: &DcfSpec) -> Vec<f64> {
        let c = match arm {
            Arm::Signal => self.signal_centers_ns(),
            Arm::Idler => self.idler_centers_ns(),
        };
        c.into_iter().map(|t| arrival_to_wavelength(dcf, t)).collect()
    }

    pub fn marginal(&self, arm: Arm) -> Vec<u64> {
        match arm {
            Arm::Signal => self.counts.iter().map(|r| r.iter().sum()).collect(),
            Arm::Idler => {
                let (_, ni) = self.nbins();
                (0..ni).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
            }
        }
    }

    /// Merges `factor` adjacent bins along both axes; trailing bins that do
    /// not fill a group are dropped.
    pub fn aggregate(&self, factor: usize) -> Result<TofHistogram> {
        if factor == 0 {
            return Err(Error::InvalidInput("aggregation factor must be positive".into()));
        }
        let (ns, ni) = self.nbins();
        let (ms, mi) = (ns / factor, ni / factor);
        let mut counts = vec![vec![0u64; mi]; ms];
        for (a, row) in counts.iter_mut().enumerate() {
            for (b, c) in row.iter_mut().enumerate() {
                for r in &self.counts[a * factor..(a + 1) * factor] {
                    *c += r[b * factor..(b + 1) * factor].iter().sum::<u64>();
                }
            }
        }
        let bin = self.bin_size_ns * factor as f64;
        Ok(TofHistogram {
            signal_edges_ns: edges(self.signal_edges_ns[0], bin, ms),
            idler_edges_ns: edges(self.idler_edges_ns[0], bin, mi),
            counts,
            bin_size_ns: bin,
            window_ns: self.window_ns,
            total_pairs: self.total_pairs,
            flagged_pairs: self.flagged_pairs,
            warnings: self.warnings.clone(),
        })
    }

    /// CSV with idler bin centers in the first row, signal bin centers in the
    /// first column and counts in the body.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let err = |e: csv::Error| Error::InvalidInput(format!("writing histogram CSV: {e}"));
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(writer);
        let mut header = vec!["t_signal_ns\\t_idler_ns".to_string()];
        header.extend(self.idler_centers_ns().iter().map(|t| format!("{t:.6}")));
        w.write_record(&header).map_err(err)?;
        for (t, row) in self.signal_centers_ns().iter().zip(&self.counts) {
            let mut rec = vec![format!("{t:.6}")];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("writing histogram CSV: {e}")))
    }
}

struct Layout {
    start_s: f64,
    start_i: f64,
    nbins: usize,
    window: f64,
}

fn layout(dcf_s: &DcfSpec, dcf_i: &DcfSpec, pump: &PumpSpec, bin_size_ns: f64) -> Result<Layout> {
    dcf_s.validate()?;
    dcf_i.validate()?;
    pump.validate()?;
    let window = pulse_window_ns(pump.repetition_rate_mhz);
    if !(bin_size_ns.is_finite() && bin_size_ns > 0.0 && bin_size_ns <= window) {
        return Err(Error::InvalidInput(format!(
            "bin size must lie in (0, {window}] ns, got {bin_size_ns}"
        )));
    }
    Ok(Layout {
        start_s: dcf_s.insertion_delay_ns - 0.5 * window,
        start_i: dcf_i.insertion_delay_ns - 0.5 * window,
        nbins: (window / bin_size_ns).floor() as usize,
        window,
    })
}

impl Layout {
    fn bin(&self, start: f64, bin: f64, t: f64) -> Option<usize> {
        let x = (t - start) / bin;
        if x >= 0.0 && x < self.nbins as f64 {
            Some(x as usize)
        } else {
            None
        }
    }
}

fn wrap_warnings(jsa: &JointAmplitude, dcf_s: &DcfSpec, dcf_i: &DcfSpec, window: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (arm, dcf) in [(Arm::Signal, dcf_s), (Arm::Idler, dcf_i)] {
        let lam = jsa.grid().wavelengths_nm(arm);
        let t: Vec<f64> = lam.iter().map(|&l| wavelength_to_arrival(dcf, l)).collect();
        let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if hi - lo > window {
            out.push(format!(
                "{arm} grid spans {:.3} ns of arrival time, more than the {window:.3} ns pulse window; \
                 only {:.2} nm fit without wrapping",
                hi - lo,
                dcf.usable_bandwidth_nm(window)
            ));
        }
    }
    out
}

/// Samples `total_pairs` frequency pairs from `|f|²`, maps them to arrival
/// times and histograms those that land inside the principal pump window.
/// Within a grid cell the frequencies are drawn uniformly.
pub fn simulate_jsi_histogram(
    jsa: &JointAmplitude,
    dcf_s: &DcfSpec,
    dcf_i: &DcfSpec,
    pump: &PumpSpec,
    bin_size_ns: f64,
    total_pairs: u64,
    seed: u64,
) -> Result<TofHistogram> {
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let lay = layout(dcf_s, dcf_i, pump, bin_size_ns)?;
    let grid = jsa.grid();
    let ws = grid.omegas(Arm::Signal);
    let wi = grid.omegas(Arm::Idler);
    let (dws, dwi) = (grid.omega_step(Arm::Signal), grid.omega_step(Arm::Idler));
    let intensity = jsa.intensity();
    let n = ws.len();

    // Cumulative distribution over cells in row-major order.
    let mut cdf = Vec::with_capacity(n * n);
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            acc += intensity[(r, c)];
            cdf.push(acc);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; lay.nbins]; lay.nbins];
    let mut flagged = 0;
    for _ in 0..total_pairs {
        let u: f64 = rng.random::<f64>() * acc;
        let cell = cdf.partition_point(|&v| v <= u).min(n * n - 1);
        let (r, c) = (cell / n, cell % n);
        let os = ws[r] + (rng.random::<f64>() - 0.5) * dws;
        let oi = wi[c] + (rng.random::<f64>() - 0.5) * dwi;
        let ts = wavelength_to_arrival(dcf_s, omega_to_nm(os));
        let ti = wavelength_to_arrival(dcf_i, omega_to_nm(oi));
        match (lay.bin(lay.start_s, bin_size_ns, ts), lay.bin(lay.start_i, bin_size_ns, ti)) {
            (Some(a), Some(b)) => counts[a][b] += 1,
            _ => flagged += 1,
        }
    }

    let mut warnings = wrap_warnings(jsa, dcf_s, dcf_i, lay.window);
    if flagged > 0 {
        warnings.push(format!("{flagged} of {total_pairs} pairs fell outside the principal window and were dropped"));
    }
    Ok(TofHistogram {
        signal_edges_ns: edges(lay.start_s, bin_size_ns, lay.nbins),
        idler_edges_ns: edges(lay.start_i, bin_size_ns, lay.nbins),
        counts,
        bin_size_ns,
        window_ns: lay.window,
        total_pairs,
        flagged_pairs: flagged,
        warnings,
    })
}

fn overlaps(lo: f64, hi: f64, start: f64, bin: f64, nbins: usize) -> Vec<(usize, f64)> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let width = hi - lo;
    let first = ((lo - start) / bin).floor().max(0.0) as usize;
    let last = (((hi - start) / bin).floor().max(-1.0) + 1.0).min(nbins as f64) as usize;
    (first..last)
        .filter_map(|k| {
            let a = start + k as f64 * bin;
            let o = (hi.min(a + bin) - lo.max(a)).max(0.0);
            (o > 0.0).then(|| (k, o / width))
        })
        .collect()
}

/// Noise-free expected bin probabilities: each grid cell's `|f|²` weight is
/// spread over the bins its arrival-time footprint overlaps. Rows signal.
pub fn expected_jsi_histogram(
    jsa: &JointAmplitude,
    dcf_s: &DcfSpec,
    dcf_i: &DcfSpec,
    pump: &PumpSpec,
    bin_size_ns: f64,
) -> Result<DMatrix<f64>> {
    if !jsa.is_normalized() {
        return Err(Error::InvalidInput("joint amplitude is not normalized".into()));
    }
    let lay = layout(dcf_s, dcf_i, pump, bin_size_ns)?;
    let grid = jsa.grid();
    let footprint = |arm: Arm, dcf: &DcfSpec, start: f64| -> Vec<Vec<(usize, f64)>> {
        let step = grid.omega_step(arm);
        grid.omegas(arm)
            .iter()
            .map(|&w| {
                let a = wavelength_to_arrival(dcf, omega_to_nm(w - 0.5 * step));
                let b = wavelength_to_arrival(dcf, omega_to_nm(w + 0.5 * step));
                overlaps(a, b, start, bin_size_ns, lay.nbins)
            })
            .collect()
    };
    let fs = footprint(Arm::Signal, dcf_s, lay.start_s);
    let fi = footprint(Arm::Idler, dcf_i, lay.start_i);
    let intensity = jsa.intensity();
    let mut out = DMatrix::zeros(lay.nbins, lay.nbins);
    for (r, bins_s) in fs.iter().enumerate() {
        for (c, bins_i) in fi.iter().enumerate() {
            let p = intensity[(r, c)];
            if p == 0.0 {
                continue;
            }
            for &(a, wa) in bins_s {
                for &(b, wb) in bins_i {
                    out[(a, b)] += p * wa * wb;
                }
            }
        }
    }
    Ok(out)
}

/// Pearson χ² test of independence between signal and idler bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl IndependenceTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Smallest expected cell count allowed in the independence test.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Groups contiguous bins so that every group holds at least `min` counts;
/// a short remainder joins the last group.
fn pool_bins(marginal: &[u64], min: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    let mut acc = 0u64;
    for (k, &m) in marginal.iter().enumerate() {
        current.push(k);
        acc += m;
        if acc as f64 >= min {
            groups.push(std::mem::take(&mut current));
            acc = 0;
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    groups
}

/// Pearson χ² test of independence between signal and idler arrival bins.
///
/// Adjacent sparse bins are pooled, per arm, until each group holds at least
/// `√(MIN_EXPECTED_COUNT·N)` counts, which keeps every expected cell count at
/// or above [`MIN_EXPECTED_COUNT`]. Pooling categories of an independent table
/// leaves it independent.
pub fn chi_square_independence(hist: &TofHistogram) -> Result<IndependenceTest> {
    let total = hist.total_counts() as f64;
    let min = (MIN_EXPECTED_COUNT * total).sqrt();
    let rg = pool_bins(&hist.marginal(Arm::Signal), min);
    let cg = pool_bins(&hist.marginal(Arm::Idler), min);
    if rg.len() < 2 || cg.len() < 2 {
        return Err(Error::Degenerate(
            "independence test needs at least two well-populated bin groups per arm".into(),
        ));
    }
    let table: Vec<Vec<f64>> = rg
        .iter()
        .map(|rows| {
            cg.iter()
                .map(|cols| rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).map(|(r, c)| hist.counts[r][c] as f64).sum())
                .collect()
        })
        .collect();
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cg.len()).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            let e = row_sums[r] * col_sums[c] / total;
            let d = n - e;
            stat += d * d / e;
        }
    }
    let dof = (rg.len() - 1) * (cg.len() - 1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(format!("χ² distribution: {e}")))?;
    Ok(IndependenceTest { statistic: stat, degrees_of_freedom: dof, p_value: dist.sf(stat) })
}

/// Count-weighted Pearson correlation between signal and idler bin centers.
pub fn arrival_correlation(hist: &TofHistogram) -> Result<f64> {
    let ts = hist.signal_centers_ns();
    let ti = hist.idler_centers_ns();
    let total = hist.total_counts() as f64;
    if total < 2.0 {
        return Err(Error::Degenerate("correlation needs at least two counts".into()));
    }
    let (mut ms, mut mi) = (0.0, 0.0);
    for (a, row) in hist.counts.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            ms += n as f64 * ts[a];
            mi += n as f64 * ti[b];
        }
    }
    ms /= total;
    mi /= total;
    let (mut sss, mut sii, mut ssi) = (0.0, 0.0, 0.0);
    for (a, row) in hist.counts.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            let (x, y) = (ts[a] - ms, ti[b] - mi);
            sss += n as f64 * x * x;
            sii += n as f64 * y * y;
            ssi += n as f64 * x * y;
        }
    }
    if sss == 0.0 || sii == 0.0 {
        return Err(Error::Degenerate("one arm occupies a single bin".into()));
    }
    Ok(ssi / (sss * sii).sqrt())
}

/// Pearson correlation between histogram counts and a same-shaped matrix.
pub fn histogram_correlation(hist: &TofHistogram, reference: &DMatrix<f64>) -> Result<f64> {
    let (ns, ni) = hist.nbins();
    if reference.nrows() != ns || reference.ncols() != ni {
        return Err(Error::GridMismatch(format!(
            "histogram is {ns}×{ni} but the reference is {}×{}",
            reference.nrows(),
            reference.ncols()
        )));
    }
    let x: Vec<f64> = hist.counts.iter().flatten().map(|&c| c as f64).collect();
    // Row-major to match the histogram.
    let y: Vec<f64> = (0..ns).flat_map(|r| (0..ni).map(move |c| (r, c))).map(|(r, c)| reference[(r, c)]).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("constant histogram".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
