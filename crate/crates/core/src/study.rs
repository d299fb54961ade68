//! Experiment configuration and the full interval study.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{self, Characterization, CircuitConfig, CircuitKind};
use crate::classify::{
    self, AnchorSet, ClassifyThresholds, ClusterStats, CurveRow, IntervalClass, PeakCountTable,
    PhasePoint,
};
use crate::device::{MemristorParams, DEFAULT_DT};
use crate::dsp::{self, PeakCriteria, PeakList, Spectrum, SpectrumAnalyzer};
use crate::error::{Error, Result};
use crate::plot::{self, PlotKind};
use crate::psycho::{self, AmplitudeLaw, DissonanceParams};
use crate::reservoir::{self, GenerationTrace, SnesmConfig, SNESM_AMP_GAIN};
use crate::score::{self, IntervalSpec, Quality, DEFAULT_BASE_FREQS};
use crate::store;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub series_resistance: f64,
    pub amp_gain: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        let c = CircuitConfig::default();
        Self {
            series_resistance: c.series_resistance,
            amp_gain: c.amp_gain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnesmSection {
    pub delay: f64,
    pub feedback_gain: f64,
    pub generations: usize,
    pub pulse_duration: f64,
    pub damping: f64,
    pub tone_amplitude: f64,
    /// Amplifier gain of the node inside the loop.
    pub amp_gain: f64,
    pub dt: f64,
}

impl Default for SnesmSection {
    fn default() -> Self {
        let s = SnesmConfig::default();
        Self {
            delay: s.delay,
            feedback_gain: s.feedback_gain,
            generations: s.generations,
            pulse_duration: s.pulse_duration,
            damping: s.damping,
            tone_amplitude: s.tone_amplitude,
            amp_gain: SNESM_AMP_GAIN,
            dt: s.dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub rel_threshold: f64,
    pub min_base_width: usize,
    pub eps: f64,
    pub absolute_fraction: f64,
    pub perfect_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let p = PeakCriteria::default();
        let t = ClassifyThresholds::default();
        Self {
            rel_threshold: p.rel_threshold,
            min_base_width: p.min_base_width,
            eps: t.eps,
            absolute_fraction: t.absolute_fraction,
            perfect_fraction: t.perfect_fraction,
        }
    }
}

impl AnalysisConfig {
    pub fn peak_criteria(&self) -> PeakCriteria {
        PeakCriteria {
            min_base_width: self.min_base_width,
            rel_threshold: self.rel_threshold,
        }
    }

    pub fn thresholds(&self) -> ClassifyThresholds {
        ClassifyThresholds {
            eps: self.eps,
            absolute_fraction: self.absolute_fraction,
            perfect_fraction: self.perfect_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub a4_hz: f64,
    pub base_freqs: Vec<f64>,
    pub intervals: Vec<Quality>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            a4_hz: 440.0,
            base_freqs: DEFAULT_BASE_FREQS.to_vec(),
            intervals: Quality::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub base_hz: f64,
    pub partials: usize,
    pub law: AmplitudeLaw,
    pub step: f64,
    pub params: DissonanceParams,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            base_hz: 110.0,
            partials: 6,
            law: AmplitudeLaw::Uniform,
            step: 0.005,
            params: DissonanceParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationConfig {
    pub freq_hz: f64,
    pub amp_v: f64,
    /// Drive time discarded before the 2 s analysis window.
    pub settle_s: f64,
}

impl Default for CharacterizationConfig {
    fn default() -> Self {
        Self {
            freq_hz: 55.0,
            amp_v: 20.0,
            settle_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub write_windows: bool,
    pub write_spectra: bool,
    pub plots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            write_windows: true,
            write_spectra: false,
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub memristor: MemristorParams,
    pub circuit: CircuitSection,
    pub snesm: SnesmSection,
    pub analysis: AnalysisConfig,
    pub score: ScoreConfig,
    pub oracle: OracleConfig,
    pub characterization: CharacterizationConfig,
    pub outputs: OutputOptions,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            memristor: MemristorParams::default(),
            circuit: CircuitSection::default(),
            snesm: SnesmSection::default(),
            analysis: AnalysisConfig::default(),
            score: ScoreConfig::default(),
            oracle: OracleConfig::default(),
            characterization: CharacterizationConfig::default(),
            outputs: OutputOptions::default(),
            output_dir: PathBuf::from("study_out"),
        }
    }
}

fn positive(out: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        out.push(format!("{name} must be positive"));
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn circuit_config(&self) -> CircuitConfig {
        CircuitConfig {
            series_resistance: self.circuit.series_resistance,
            amp_gain: self.circuit.amp_gain,
            memristor: self.memristor,
        }
    }

    pub fn snesm_config(&self) -> SnesmConfig {
        let s = &self.snesm;
        SnesmConfig {
            delay: s.delay,
            feedback_gain: s.feedback_gain,
            generations: s.generations,
            pulse_duration: s.pulse_duration,
            damping: s.damping,
            tone_amplitude: s.tone_amplitude,
            circuit: CircuitConfig {
                amp_gain: s.amp_gain,
                ..self.circuit_config()
            },
            dt: s.dt,
        }
    }

    pub fn intervals(&self) -> Result<Vec<IntervalSpec>> {
        let mut out = Vec::new();
        for &b in &self.score.base_freqs {
            for &q in &self.score.intervals {
                out.push(IntervalSpec::new(q, b)?);
            }
        }
        Ok(out)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = self.memristor.problems("memristor");
        positive(
            &mut out,
            "circuit.series_resistance",
            self.circuit.series_resistance,
        );
        positive(&mut out, "circuit.amp_gain", self.circuit.amp_gain);
        // memristor problems were already reported once
        out.extend(
            self.snesm_config()
                .problems("snesm")
                .into_iter()
                .filter(|p| !p.starts_with("snesm.circuit.memristor"))
                .map(|p| p.replace("snesm.circuit.amp_gain", "snesm.amp_gain"))
                .map(|p| p.replace("snesm.circuit.", "circuit.")),
        );
        let a = &self.analysis;
        if !(a.rel_threshold >= 0.0 && a.rel_threshold <= 1.0) {
            out.push("analysis.rel_threshold must lie in [0, 1]".into());
        }
        if a.min_base_width < 3 {
            out.push("analysis.min_base_width must be at least 3".into());
        }
        out.extend(a.thresholds().problems("analysis"));
        positive(&mut out, "score.a4_hz", self.score.a4_hz);
        if self.score.base_freqs.is_empty() {
            out.push("score.base_freqs must not be empty".into());
        }
        for (i, &b) in self.score.base_freqs.iter().enumerate() {
            positive(&mut out, &format!("score.base_freqs[{i}]"), b);
        }
        if self.score.intervals.is_empty() {
            out.push("score.intervals must not be empty".into());
        }
        positive(&mut out, "oracle.base_hz", self.oracle.base_hz);
        positive(&mut out, "oracle.step", self.oracle.step);
        if self.oracle.partials == 0 {
            out.push("oracle.partials must be at least 1".into());
        }
        if let AmplitudeLaw::Geometric(rho) = self.oracle.law {
            positive(&mut out, "oracle.law", rho);
        }
        if let Err(Error::Validation(p)) = self.oracle.params.validate() {
            out.extend(p.into_iter().map(|s| format!("oracle.params.{s}")));
        }
        let c = &self.characterization;
        positive(&mut out, "characterization.freq_hz", c.freq_hz);
        positive(&mut out, "characterization.amp_v", c.amp_v);
        if !(c.settle_s >= 0.0 && c.settle_s.is_finite()) {
            out.push("characterization.settle_s must be non-negative".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            out.push("output_dir must not be empty".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(p))
        }
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

/// Spectra, peaks and phase points of one SNESM run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAnalysis {
    pub trace: GenerationTrace,
    pub spectra: Vec<Spectrum>,
    pub peaks: Vec<PeakList>,
    pub points: Vec<PhasePoint>,
}

pub fn analyze_windows(
    windows: &[Vec<f64>],
    f0: f64,
    criteria: PeakCriteria,
) -> Result<(Vec<Spectrum>, Vec<PeakList>)> {
    let len = windows.first().map_or(dsp::WINDOW_LEN, Vec::len);
    let analyzer = SpectrumAnalyzer::new(len.max(2), dsp::ANALYSIS_RATE);
    let mut spectra = Vec::with_capacity(windows.len());
    let mut peaks = Vec::with_capacity(windows.len());
    for (g, w) in windows.iter().enumerate() {
        let sp = analyzer.magnitude_spectrum(w)?;
        let mut pl = dsp::normalize_peaks(dsp::detect_peaks(&sp, criteria), f0)?;
        pl.generation = g;
        spectra.push(sp);
        peaks.push(pl);
    }
    Ok((spectra, peaks))
}

pub fn analyze_trace(trace: GenerationTrace, criteria: PeakCriteria) -> Result<RunAnalysis> {
    let (spectra, peaks) = analyze_windows(&trace.windows, trace.interval.f_lower, criteria)?;
    let points = classify::phase_points(&peaks);
    Ok(RunAnalysis {
        trace,
        spectra,
        peaks,
        points,
    })
}

/// Re-detects peaks of an existing run under different criteria.
pub fn redetect(run: &RunAnalysis, criteria: PeakCriteria) -> Result<Vec<PeakList>> {
    run.spectra
        .iter()
        .enumerate()
        .map(|(g, sp)| {
            let mut pl =
                dsp::normalize_peaks(dsp::detect_peaks(sp, criteria), run.trace.interval.f_lower)?;
            pl.generation = g;
            Ok(pl)
        })
        .collect()
}

pub fn simulate_interval(iv: &IntervalSpec, cfg: &ExperimentConfig) -> Result<RunAnalysis> {
    let trace = reservoir::run_snesm(iv, &cfg.snesm_config())?;
    analyze_trace(trace, cfg.analysis.peak_criteria())
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Validation(vec!["jobs must be at least 1".into()]));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

/// Runs every configured interval in parallel; results keep input order.
pub fn simulate_study(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<RunAnalysis>> {
    cfg.validate()?;
    let specs = cfg.intervals()?;
    thread_pool(jobs)?.install(|| {
        specs
            .par_iter()
            .map(|iv| simulate_interval(iv, cfg))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub interval: Quality,
    pub base_hz: f64,
    pub label: String,
    pub expected_anchor: Option<AnchorSet>,
    pub class: IntervalClass,
    pub stats: Option<ClusterStats>,
}

pub fn interval_report(run: &RunAnalysis, th: &ClassifyThresholds) -> Result<IntervalReport> {
    let iv = &run.trace.interval;
    Ok(IntervalReport {
        interval: iv.quality,
        base_hz: iv.f_lower,
        label: iv.label(),
        expected_anchor: AnchorSet::for_quality(iv.quality),
        class: classify::classify_interval(&run.points, th),
        stats: if run.points.is_empty() {
            None
        } else {
            Some(classify::cluster_report(&run.points, th.eps)?)
        },
    })
}

pub fn peak_table(runs: &[RunAnalysis]) -> PeakCountTable {
    let mut t = PeakCountTable::default();
    for r in runs {
        t.push_run(r.trace.interval.quality, r.trace.interval.f_lower, &r.peaks);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_s: f64,
    pub runs: Vec<RunTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub runs: usize,
    pub files: Vec<FileEntry>,
    pub timings: Timings,
}

pub const MANIFEST: &str = "manifest.json";

pub fn file_index(root: &Path, files: &[PathBuf]) -> Result<Vec<FileEntry>> {
    let mut out = files
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            let rel = p.strip_prefix(root).unwrap_or(p);
            Ok(FileEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

pub fn write_curve(path: &Path, curve: &[CurveRow], bases: &[f64]) -> Result<()> {
    let mut wr = store::csv_writer(path)?;
    let mut header = vec![
        "interval".to_string(),
        "ratio".into(),
        "ratio_value".into(),
        "mean".into(),
    ];
    header.extend(
        bases
            .iter()
            .map(|b| format!("score_{}", score::format_hz(*b))),
    );
    wr.write_record(&header)?;
    for row in curve {
        let mut rec = vec![
            row.quality.name().to_string(),
            row.ratio.to_string(),
            row.ratio.value().to_string(),
            row.mean.to_string(),
        ];
        for b in bases {
            rec.push(
                row.bases
                    .iter()
                    .find(|s| s.base_hz == *b)
                    .map_or(String::new(), |s| s.score.to_string()),
            );
        }
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curve_generations(path: &Path, table: &PeakCountTable) -> Result<()> {
    let mut rows = table.rows.clone();
    rows.sort_by(|a, b| {
        (a.quality, a.generation)
            .cmp(&(b.quality, b.generation))
            .then(a.base_hz.total_cmp(&b.base_hz))
    });
    let mut wr = store::csv_writer(path)?;
    wr.write_record([
        "interval",
        "base_hz",
        "generation",
        "peak_count",
        "reciprocal",
    ])?;
    for r in rows {
        let recip = if r.peak_count == 0 {
            0.0
        } else {
            1.0 / r.peak_count as f64
        };
        wr.write_record([
            r.quality.name().to_string(),
            r.base_hz.to_string(),
            r.generation.to_string(),
            r.peak_count.to_string(),
            recip.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

pub fn write_points<'a>(
    path: &Path,
    runs: impl IntoIterator<Item = (&'a IntervalSpec, &'a [PhasePoint])>,
) -> Result<()> {
    let mut wr = store::csv_writer(path)?;
    wr.write_record(["interval", "base_hz", "d1", "d2", "d3"])?;
    for (iv, pts) in runs {
        for p in pts {
            wr.write_record([
                iv.quality.name().to_string(),
                iv.f_lower.to_string(),
                p.d[0].to_string(),
                p.d[1].to_string(),
                p.d[2].to_string(),
            ])?;
        }
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dissonance_curve(path: &Path, curve: &[psycho::CurvePoint]) -> Result<()> {
    let mut wr = store::csv_writer(path)?;
    wr.write_record(["ratio", "dissonance"])?;
    for p in curve {
        wr.write_record([p.ratio.to_string(), p.dissonance.to_string()])?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

/// Dissonance curve on `[1, 2.1]`, so the octave is an interior point.
pub fn oracle_curve(o: &OracleConfig) -> Result<Vec<psycho::CurvePoint>> {
    let grid = psycho::ratio_grid(1.0, 2.1 + 1e-9, o.step)?;
    psycho::dissonance_curve(o.base_hz, o.partials, o.law, &grid, &o.params)
}

pub fn characterize_all(cfg: &ExperimentConfig) -> Result<Vec<Characterization>> {
    let c = &cfg.characterization;
    let circuit = cfg.circuit_config();
    CircuitKind::ALL
        .par_iter()
        .map(|&k| {
            circuit::characterize(k, &circuit, c.freq_hz, c.amp_v, c.settle_s, DEFAULT_DT)
                .map(|(_, ch)| ch)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub manifest: RunManifest,
    pub curve: Vec<CurveRow>,
    pub reports: Vec<IntervalReport>,
}

fn write_run_files(dir: &Path, run: &RunAnalysis, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let snesm = cfg.snesm_config();
    let mut files = if cfg.outputs.write_windows {
        store::write_run(dir, &run.trace, &snesm)?
    } else {
        store::create_dir(dir)?;
        let p = dir.join(store::RUN_INFO);
        store::write_json(&p, &store::RunInfo::new(&run.trace, &snesm))?;
        vec![p]
    };
    for pl in &run.peaks {
        files.push(store::write_peaks(dir, pl)?);
    }
    if cfg.outputs.write_spectra {
        for (g, sp) in run.spectra.iter().enumerate() {
            files.push(store::write_spectrum(dir, g, sp)?);
        }
    }
    Ok(files)
}

/// Simulates, analyzes and writes the whole study under `cfg.output_dir`.
/// The manifest is written last.
pub fn run_full_study(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<StudyResult> {
    let started = Instant::now();
    cfg.validate()?;
    let root = cfg.output_dir.clone();
    store::create_dir(&root)?;
    let runs_dir = root.join("runs");
    store::create_dir(&runs_dir)?;
    let specs = cfg.intervals()?;
    let pool = thread_pool(jobs)?;

    let outputs: Vec<(RunAnalysis, Vec<PathBuf>, f64)> = pool.install(|| {
        specs
            .par_iter()
            .map(|iv| {
                let t = Instant::now();
                let run = simulate_interval(iv, cfg)?;
                let files = write_run_files(&runs_dir.join(iv.label()), &run, cfg)?;
                Ok((run, files, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let characterization = pool.install(|| characterize_all(cfg))?;

    let mut files: Vec<PathBuf> = outputs.iter().flat_map(|o| o.1.clone()).collect();
    let runs: Vec<RunAnalysis> = outputs.iter().map(|o| o.0.clone()).collect();
    let timings = outputs
        .iter()
        .map(|o| RunTiming {
            label: o.0.trace.interval.label(),
            seconds: o.2,
        })
        .collect();

    let table = peak_table(&runs);
    let curve = classify::consonance_curve(&table)?;
    let th = cfg.analysis.thresholds();
    let reports = runs
        .iter()
        .map(|r| interval_report(r, &th))
        .collect::<Result<Vec<_>>>()?;

    let curve_csv = root.join("curve.csv");
    write_curve(&curve_csv, &curve, &cfg.score.base_freqs)?;
    let gens_csv = root.join("curve_generations.csv");
    write_curve_generations(&gens_csv, &table)?;
    let points_csv = root.join("points.csv");
    write_points(
        &points_csv,
        runs.iter()
            .map(|r| (&r.trace.interval, r.points.as_slice())),
    )?;
    let report_json = root.join("report.json");
    store::write_json(&report_json, &reports)?;
    let circuits_json = root.join("circuits.json");
    store::write_json(&circuits_json, &characterization)?;
    let oracle_csv = root.join("dissonance_curve.csv");
    write_dissonance_curve(&oracle_csv, &oracle_curve(&cfg.oracle)?)?;
    let config_json = root.join("config.json");
    store::write_json(&config_json, cfg)?;
    files.extend([
        curve_csv.clone(),
        gens_csv,
        points_csv.clone(),
        report_json,
        circuits_json,
        oracle_csv.clone(),
        config_json,
    ]);

    if cfg.outputs.plots {
        for (csv, kind, name) in [
            (&curve_csv, PlotKind::Line, "curve.svg"),
            (&oracle_csv, PlotKind::Line, "dissonance_curve.svg"),
            (&points_csv, PlotKind::Scatter3dProjections, "points.svg"),
        ] {
            let svg = root.join(name);
            match plot::emit_plot(csv, kind, &svg) {
                Ok(()) => files.push(svg),
                // too few phase points to draw is not a study failure
                Err(Error::Validation(_)) if kind == PlotKind::Scatter3dProjections => {}
                Err(e) => return Err(e),
            }
        }
    }

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.hash()?,
        runs: runs.len(),
        files: file_index(&root, &files)?,
        timings: Timings {
            total_s: started.elapsed().as_secs_f64(),
            runs: timings,
        },
    };
    store::write_json(&root.join(MANIFEST), &manifest)?;
    Ok(StudyResult {
        manifest,
        curve,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"snesm": {"feedback_gain": 0.3}}"#).unwrap();
        assert_eq!(cfg.snesm.feedback_gain, 0.3);
        assert_eq!(cfg.snesm_config().circuit.amp_gain, SNESM_AMP_GAIN);
        assert_eq!(cfg.circuit_config().amp_gain, 10.0);
        assert!(ExperimentConfig::from_json(r#"{"snesm": {"gain": 0.3}}"#).is_err());
    }

    #[test]
    fn validation_lists_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.memristor.rmin = 500.0;
        cfg.snesm.pulse_duration = 1.0;
        cfg.analysis.eps = -1.0;
        cfg.score.base_freqs = vec![55.0, 0.0];
        let Err(Error::Validation(p)) = cfg.validate() else {
            panic!("expected validation error");
        };
        let joined = p.join("\n");
        for field in [
            "memristor.",
            "snesm.pulse_duration",
            "analysis.eps",
            "score.base_freqs[1]",
        ] {
            assert!(joined.contains(field), "{field} missing from {joined}");
        }
    }

    #[test]
    fn oracle_grid_reaches_octave() {
        let c = oracle_curve(&OracleConfig::default()).unwrap();
        assert!(c.last().unwrap().ratio >= 2.0);
        assert_eq!(c[0].ratio, 1.0);
    }
}
