//! Subcommand bodies. Each returns the text to print on stdout.

use std::path::{Path, PathBuf};

use biphoton::efficiency::{klyshko, predict_heralding, simulate_counts, CountSummary, LossBudget};
use biphoton::interference::{heralded_spectral_state, hom_curve, hom_visibility, visibility_budget};
use biphoton::jsa::{apply_filter, compute_jsa, marginal_spectrum, schmidt_decompose, FilterSurvival};
use biphoton::phasematch::{gvm_angle, gvm_degenerate_wavelength, solve_poling_period};
use biphoton::polarization::{
    concurrence, fidelity_singlet, full_settings, model_state, read_records_csv, reconstruct_mle_report,
    simulate_tomography, state_purity, tangle, write_records_csv, TwoQubitState,
};
use biphoton::spectrometer::{
    arrival_correlation, chi_square_independence, pulse_window_ns, resolution_estimate, simulate_jsi_histogram,
};
use biphoton::{Arm, FilterSpec, JointAmplitude};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{delay_axis, LoadedConfig, Stream};
use crate::error::CliError;
use crate::output::{in_dir, strip_comments, to_json, write_file, write_json, CsvText};

/// Significance level of the reported independence test.
pub const INDEPENDENCE_SIGNIFICANCE: f64 = 0.01;

/// Number of leading Schmidt coefficients listed in reports.
const REPORTED_MODES: usize = 10;

pub struct Context<'a> {
    pub loaded: &'a LoadedConfig,
    pub out: Option<PathBuf>,
    pub json: bool,
}

impl Context<'_> {
    fn digest(&self) -> &str {
        &self.loaded.digest
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.loaded.config.output_dir.clone())
    }

    fn out_file(&self, default_name: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| self.loaded.config.output_dir.join(default_name))
    }

    fn render<T: Serialize>(&self, report: &T, text: String) -> String {
        if self.json {
            to_json(report) + "\n"
        } else {
            text
        }
    }
}

fn jsa_for(ctx: &Context, filters: Option<(Option<FilterSpec>, Option<FilterSpec>)>) -> Result<(JointAmplitude, Option<JointAmplitude>), CliError> {
    let cfg = &ctx.loaded.config;
    let crystal = ctx.loaded.crystal()?;
    let raw = compute_jsa(&cfg.pump, &crystal, &cfg.grid)?;
    let (fs, fi) = filters.unwrap_or((cfg.filters.signal, cfg.filters.idler));
    if fs.is_none() && fi.is_none() {
        return Ok((raw, None));
    }
    let filtered = apply_filter(&raw, fs.as_ref(), fi.as_ref())?;
    Ok((raw, Some(filtered)))
}

#[derive(Serialize)]
pub struct DesignReport {
    pub config_sha256: String,
    pub temperature_c: f64,
    pub pump_wavelength_nm: f64,
    pub degenerate_wavelength_nm: f64,
    pub poling_period_um: f64,
    pub gvm_wavelength_nm: f64,
    /// Ridge orientation at the configured pump with degenerate daughters.
    pub gvm_angle_deg: f64,
    /// Ridge orientation when pumping at half the GVM wavelength.
    pub gvm_angle_at_gvm_deg: f64,
}

pub fn design(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.loaded.config;
    let crystal = ctx.loaded.crystal()?;
    let t = crystal.temperature_c;
    let lp = cfg.pump.center_wavelength_nm;
    let ld = 2.0 * lp;
    let gvm = gvm_degenerate_wavelength(&crystal.axes, t)?;
    let report = DesignReport {
        config_sha256: ctx.digest().to_string(),
        temperature_c: t,
        pump_wavelength_nm: lp,
        degenerate_wavelength_nm: ld,
        poling_period_um: solve_poling_period(lp, ld, ld, t, &crystal.axes)?,
        gvm_wavelength_nm: gvm,
        gvm_angle_deg: gvm_angle(lp, ld, ld, &crystal.axes, t)?,
        gvm_angle_at_gvm_deg: gvm_angle(gvm / 2.0, gvm, gvm, &crystal.axes, t)?,
    };
    write_json(&in_dir(&ctx.out_dir(), "design.json"), &report)?;
    let text = format!(
        "poling_period_um {:.4}\ngvm_wavelength_nm {:.3}\ngvm_angle_deg {:.3}\ngvm_angle_at_gvm_deg {:.3}\n",
        report.poling_period_um, report.gvm_wavelength_nm, report.gvm_angle_deg, report.gvm_angle_at_gvm_deg
    );
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct SchmidtReport {
    pub config_sha256: String,
    pub points_per_axis: usize,
    pub purity: f64,
    pub schmidt_number: f64,
    pub leading_coefficients: Vec<f64>,
    pub signal_fwhm_nm: f64,
    pub idler_fwhm_nm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub central_lobe_span_nm: Option<f64>,
    /// Present when filters were applied; the CSVs then hold the filtered
    /// amplitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unfiltered_purity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_survival: Option<FilterSurvival>,
}

fn grid_comment(jsa: &JointAmplitude) -> String {
    let g = jsa.grid();
    format!(
        "grid center_signal_nm={} center_idler_nm={} half_span_nm={} points_per_axis={} rows=signal cols=idler order=ascending_omega",
        g.center_signal_nm, g.center_idler_nm, g.half_span_nm, g.points_per_axis
    )
}

pub fn jsa_compute(ctx: &Context) -> Result<String, CliError> {
    let (raw, filtered) = jsa_for(ctx, None)?;
    let jsa = filtered.as_ref().unwrap_or(&raw);
    let schmidt = schmidt_decompose(jsa)?;
    let ms = marginal_spectrum(jsa, Arm::Signal)?;
    let mi = marginal_spectrum(jsa, Arm::Idler)?;
    let report = SchmidtReport {
        config_sha256: ctx.digest().to_string(),
        points_per_axis: jsa.grid().points_per_axis,
        purity: schmidt.purity,
        schmidt_number: schmidt.schmidt_number,
        leading_coefficients: schmidt.coefficients.iter().take(REPORTED_MODES).copied().collect(),
        signal_fwhm_nm: ms.fwhm_nm,
        idler_fwhm_nm: mi.fwhm_nm,
        central_lobe_span_nm: ms.central_lobe_span_nm,
        unfiltered_purity: match filtered {
            Some(_) => Some(schmidt_decompose(&raw)?.purity),
            None => None,
        },
        filter_survival: jsa.filter_survival().copied(),
    };

    let g = jsa.grid();
    let ls = g.wavelengths_nm(Arm::Signal);
    let li = g.wavelengths_nm(Arm::Idler);
    let a = jsa.amplitudes();
    let mut amp = CsvText::new(ctx.digest());
    amp.comment(&grid_comment(jsa)).comment("amplitude normalized to sum |f|^2 dws dwi = 1, omega in rad/fs");
    amp.header(
        std::iter::once("lambda_signal_nm".to_string())
            .chain(li.iter().flat_map(|l| [format!("re@{l}"), format!("im@{l}")])),
    );
    let mut jsi = CsvText::new(ctx.digest());
    jsi.comment(&grid_comment(jsa)).comment("joint spectral intensity |f|^2");
    jsi.header(std::iter::once("lambda_signal_nm".to_string()).chain(li.iter().map(|l| l.to_string())));
    for (r, l) in ls.iter().enumerate() {
        amp.row(std::iter::once(*l).chain((0..a.ncols()).flat_map(|c| [a[(r, c)].re, a[(r, c)].im])));
        jsi.row(std::iter::once(*l).chain((0..a.ncols()).map(|c| a[(r, c)].norm_sqr())));
    }
    let dir = ctx.out_dir();
    write_file(&in_dir(&dir, "jsa_amplitude.csv"), amp.into_string().as_bytes())?;
    write_file(&in_dir(&dir, "jsi.csv"), jsi.into_string().as_bytes())?;
    write_json(&in_dir(&dir, "schmidt.json"), &report)?;

    let mut text = format!(
        "purity {:.6}\nschmidt_number {:.6}\nsignal_fwhm_nm {:.3}\nidler_fwhm_nm {:.3}\n",
        report.purity, report.schmidt_number, report.signal_fwhm_nm, report.idler_fwhm_nm
    );
    if let Some(p) = report.unfiltered_purity {
        text += &format!("unfiltered_purity {p:.6}\n");
    }
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct HomReport {
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_fwhm_nm: Option<f64>,
    pub heralded_purity: f64,
    /// Overlap of two identical heralded photons.
    pub spectral_visibility: f64,
    /// `1 − min P / ½` over the sampled delays.
    pub dip_visibility: f64,
    pub multipair_bound: f64,
    pub expected_visibility: f64,
    /// Delays beyond this alias on the sampled frequency axis.
    pub max_unaliased_delay_fs: f64,
}

pub fn hom(ctx: &Context, filter_nm: Option<f64>, delays: Option<(f64, f64, f64)>) -> Result<String, CliError> {
    let cfg = &ctx.loaded.config;
    let filters = match filter_nm {
        Some(w) => {
            let fs = FilterSpec::gaussian(cfg.grid.center_signal_nm, w)
                .map_err(|e| CliError::Usage(format!("--filter-nm: {e}")))?;
            let fi = FilterSpec::gaussian(cfg.grid.center_idler_nm, w)
                .map_err(|e| CliError::Usage(format!("--filter-nm: {e}")))?;
            Some((Some(fs), Some(fi)))
        }
        None => None,
    };
    let (start, stop, step) = delays.unwrap_or((cfg.hom.delay_start_fs, cfg.hom.delay_stop_fs, cfg.hom.delay_step_fs));
    let axis = delay_axis(start, stop, step).map_err(|m| CliError::Usage(format!("--delays: {m}")))?;

    let (raw, filtered) = jsa_for(ctx, filters)?;
    let jsa = filtered.as_ref().unwrap_or(&raw);
    let state = heralded_spectral_state(jsa, Arm::Signal, None)?;
    let spectral = hom_visibility(&state, &state)?;
    let curve = hom_curve(&state, &state, &axis)?;
    let budget = visibility_budget(spectral, cfg.hom.pair_probability)?;
    let report = HomReport {
        config_sha256: ctx.digest().to_string(),
        filter_fwhm_nm: filter_nm,
        heralded_purity: state.purity(),
        spectral_visibility: spectral,
        dip_visibility: curve.visibility,
        multipair_bound: budget.multipair_bound,
        expected_visibility: budget.total,
        max_unaliased_delay_fs: std::f64::consts::PI / jsa.grid().omega_step(Arm::Signal),
    };

    let mut csv = CsvText::new(ctx.digest());
    csv.header(["delay_fs", "coincidence_probability"]);
    for (t, p) in curve.delays_fs.iter().zip(&curve.coincidence_probability) {
        csv.row([*t, *p]);
    }
    let dir = ctx.out_dir();
    write_file(&in_dir(&dir, "hom.csv"), csv.into_string().as_bytes())?;
    write_json(&in_dir(&dir, "hom.json"), &report)?;
    let text = format!(
        "spectral_visibility {:.6}\ndip_visibility {:.6}\nmultipair_bound {:.6}\nexpected_visibility {:.6}\n",
        report.spectral_visibility, report.dip_visibility, report.multipair_bound, report.expected_visibility
    );
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct StateSummary {
    pub fidelity_singlet: f64,
    pub purity: f64,
    pub concurrence: f64,
    pub tangle: f64,
}

impl StateSummary {
    fn of(s: &TwoQubitState) -> Self {
        StateSummary {
            fidelity_singlet: fidelity_singlet(s),
            purity: state_purity(s),
            concurrence: concurrence(s),
            tangle: tangle(s),
        }
    }

    fn text(&self) -> String {
        format!(
            "fidelity_singlet {:.6}\npurity {:.6}\nconcurrence {:.6}\ntangle {:.6}\n",
            self.fidelity_singlet, self.purity, self.concurrence, self.tangle
        )
    }
}

#[derive(Serialize)]
pub struct TomoSimulateReport {
    pub config_sha256: String,
    pub seed: u64,
    pub records: usize,
    pub output: PathBuf,
    pub true_state: StateSummary,
}

pub fn tomo_simulate(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.loaded.config;
    let t = &cfg.tomography;
    let state = model_state(t.depolarization, t.amplitude_imbalance, t.phase_error)?;
    let seed = cfg.seeds.for_stream(Stream::Tomography);
    let records = simulate_tomography(&state, &full_settings(), t.mean_counts, seed)?;
    let mut bytes = crate::output::digest_comment(ctx.digest()).into_bytes();
    write_records_csv(&mut bytes, &records)?;
    let path = ctx.out_file("tomography.csv");
    write_file(&path, &bytes)?;
    let report = TomoSimulateReport {
        config_sha256: ctx.digest().to_string(),
        seed,
        records: records.len(),
        output: path,
        true_state: StateSummary::of(&state),
    };
    let text = format!("records {}\n", report.records) + &report.true_state.text();
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct TomoReconstructReport {
    pub config_sha256: String,
    pub input_sha256: String,
    pub records: usize,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub deviance_per_count: f64,
    pub state: StateSummary,
    /// Row-major `[re, im]` pairs of the reconstructed density matrix.
    pub density_matrix: Vec<Vec<[f64; 2]>>,
}

pub fn tomo_reconstruct(ctx: &Context, input: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(input).map_err(|e| CliError::io(input, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::io(input, "not UTF-8"))?;
    let records = read_records_csv(strip_comments(&text).as_bytes())?;
    let mle = reconstruct_mle_report(&records)?;
    let rho = mle.state.rho();
    let report = TomoReconstructReport {
        config_sha256: ctx.digest().to_string(),
        input_sha256: hex::encode(Sha256::digest(&bytes)),
        records: records.len(),
        iterations: mle.iterations,
        converged: mle.converged,
        gradient_norm: mle.gradient_norm,
        deviance_per_count: mle.deviance_per_count,
        state: StateSummary::of(&mle.state),
        density_matrix: (0..4).map(|r| (0..4).map(|c| [rho[(r, c)].re, rho[(r, c)].im]).collect()).collect(),
    };
    write_json(&ctx.out_file("tomography_mle.json"), &report)?;
    let text = format!("iterations {}\nconverged {}\n", report.iterations, report.converged) + &report.state.text();
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct IndependenceSummary {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub significance: f64,
    pub independent: bool,
}

#[derive(Serialize)]
pub struct SpectroReport {
    pub config_sha256: String,
    pub seed: u64,
    pub output: PathBuf,
    pub window_ns: f64,
    pub bins_per_axis: usize,
    pub signal_resolution_nm: f64,
    pub idler_resolution_nm: f64,
    pub total_pairs: u64,
    pub flagged_pairs: u64,
    pub arrival_correlation: f64,
    pub independence: IndependenceSummary,
    pub warnings: Vec<String>,
}

pub fn spectro_simulate(ctx: &Context, pairs: Option<u64>) -> Result<String, CliError> {
    let cfg = &ctx.loaded.config;
    let sp = &cfg.spectrometer;
    let pairs = pairs.unwrap_or(sp.pairs);
    if pairs == 0 {
        return Err(CliError::Usage("--pairs must be at least 1".into()));
    }
    let (raw, filtered) = jsa_for(ctx, None)?;
    let jsa = filtered.as_ref().unwrap_or(&raw);
    let seed = cfg.seeds.for_stream(Stream::Spectrometer);
    let hist = simulate_jsi_histogram(jsa, &sp.signal_dcf, &sp.idler_dcf, &cfg.pump, sp.bin_size_ns, pairs, seed)?;
    let test = chi_square_independence(&hist)?;

    let mut bytes = crate::output::digest_comment(ctx.digest()).into_bytes();
    bytes.extend(
        format!(
            "# bin_size_ns={} window_ns={} total_pairs={} flagged_pairs={} seed={seed}\n",
            hist.bin_size_ns, hist.window_ns, hist.total_pairs, hist.flagged_pairs
        )
        .bytes(),
    );
    hist.write_csv(&mut bytes)?;
    let path = ctx.out_file("hist.csv");
    write_file(&path, &bytes)?;

    let report = SpectroReport {
        config_sha256: ctx.digest().to_string(),
        seed,
        output: path,
        window_ns: pulse_window_ns(cfg.pump.repetition_rate_mhz),
        bins_per_axis: hist.nbins().0,
        signal_resolution_nm: resolution_estimate(&sp.signal_dcf, sp.bin_size_ns),
        idler_resolution_nm: resolution_estimate(&sp.idler_dcf, sp.bin_size_ns),
        total_pairs: hist.total_pairs,
        flagged_pairs: hist.flagged_pairs,
        arrival_correlation: arrival_correlation(&hist)?,
        independence: IndependenceSummary {
            statistic: test.statistic,
            degrees_of_freedom: test.degrees_of_freedom,
            p_value: test.p_value,
            significance: INDEPENDENCE_SIGNIFICANCE,
            independent: test.passes(INDEPENDENCE_SIGNIFICANCE),
        },
        warnings: hist.warnings.clone(),
    };
    let text = format!(
        "window_ns {:.4}\nresolution_nm {:.4} {:.4}\nflagged_pairs {}\narrival_correlation {:.5}\nchi_square {:.2} dof {} p {:.3e} independent {}\n",
        report.window_ns,
        report.signal_resolution_nm,
        report.idler_resolution_nm,
        report.flagged_pairs,
        report.arrival_correlation,
        test.statistic,
        test.degrees_of_freedom,
        test.p_value,
        report.independence.independent
    );
    Ok(ctx.render(&report, text))
}

#[derive(Serialize)]
pub struct KlyshkoRow {
    pub counts: CountSummary,
    pub heralding_signal: f64,
    pub heralding_idler: f64,
}

#[derive(Serialize)]
pub struct EfficiencyReport {
    pub config_sha256: String,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_idler: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_survival: Option<FilterSurvival>,
    pub measured: Vec<KlyshkoRow>,
}

fn klyshko_row(c: CountSummary) -> Result<KlyshkoRow, CliError> {
    let (s, i) = klyshko(&c)?;
    Ok(KlyshkoRow { counts: c, heralding_signal: s, heralding_idler: i })
}

pub fn read_counts(path: &Path) -> Result<Vec<CountSummary>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, row) in rd.deserialize::<CountSummary>().enumerate() {
        let c = row.map_err(|e| CliError::io(path, format!("row {}: {e}", k + 1)))?;
        c.validate()?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(CliError::io(path, "no count rows"));
    }
    Ok(out)
}

pub fn read_budget(path: &Path) -> Result<LossBudget, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let budget: LossBudget = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            origin: path.display().to_string(),
            line: Some(e.line()),
            message: e.to_string(),
        })?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Parse {
            origin: path.display().to_string(),
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?
    };
    budget.validate()?;
    Ok(budget)
}

pub fn efficiency(ctx: &Context, counts: Option<&Path>, budget: Option<&Path>) -> Result<String, CliError> {
    let cfg = &ctx.loaded.config;
    let report = if let Some(path) = counts {
        EfficiencyReport {
            config_sha256: ctx.digest().to_string(),
            source: format!("counts {}", path.display()),
            predicted_signal: None,
            predicted_idler: None,
            filter_survival: None,
            measured: read_counts(path)?.into_iter().map(klyshko_row).collect::<Result<_, _>>()?,
        }
    } else {
        let (base, source) = match budget {
            Some(p) => (read_budget(p)?, format!("budget {}", p.display())),
            None => (cfg.efficiency.budget, "config budget".to_string()),
        };
        let (_, filtered) = jsa_for(ctx, None)?;
        let survival = filtered.as_ref().and_then(|j| j.filter_survival()).copied();
        let full = match &survival {
            Some(s) => base.with_filter_survival(s),
            None => base,
        };
        let seed = cfg.seeds.for_stream(Stream::Efficiency);
        let sim = simulate_counts(
            &base,
            survival.as_ref(),
            cfg.efficiency.pair_rate_hz,
            cfg.efficiency.integration_s,
            seed,
        )?;
        EfficiencyReport {
            config_sha256: ctx.digest().to_string(),
            source,
            predicted_signal: Some(predict_heralding(&full, Arm::Signal)?),
            predicted_idler: Some(predict_heralding(&full, Arm::Idler)?),
            filter_survival: survival,
            measured: vec![klyshko_row(sim)?],
        }
    };
    write_json(&in_dir(&ctx.out_dir(), "efficiency.json"), &report)?;
    let mut text = String::new();
    if let (Some(s), Some(i)) = (report.predicted_signal, report.predicted_idler) {
        text += &format!("predicted {s:.4} {i:.4}\n");
    }
    for row in &report.measured {
        text += &format!("klyshko {:.4} {:.4}\n", row.heralding_signal, row.heralding_idler);
    }
    Ok(ctx.render(&report, text))
}
