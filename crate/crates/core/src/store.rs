//! On-disk layout of a single SNESM run directory.
//!
//! ```text
//! run.json            RunInfo
//! gen_<g>.csv         t_s, v
//! spectrum_<g>.csv    frequency_hz, magnitude
//! peaks_<g>.csv       frequency_hz, normalized, magnitude
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::{Peak, PeakList, Spectrum};
use crate::error::{Error, Result};
use crate::reservoir::{GenerationTrace, SnesmConfig};
use crate::score::IntervalSpec;

pub const RUN_INFO: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub label: String,
    pub interval: IntervalSpec,
    pub ratio: String,
    pub generations: usize,
    pub sample_rate: f64,
    pub snesm: SnesmConfig,
}

impl RunInfo {
    pub fn new(trace: &GenerationTrace, cfg: &SnesmConfig) -> Self {
        Self {
            label: trace.interval.label(),
            interval: trace.interval,
            ratio: trace.interval.ratio.to_string(),
            generations: trace.windows.len(),
            sample_rate: trace.sample_rate(),
            snesm: *cfg,
        }
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn gen_file(dir: &Path, stem: &str, g: usize) -> PathBuf {
    dir.join(format!("{stem}_{g}.csv"))
}

/// Writes run.json and one CSV per generation window. Returns written files.
pub fn write_run(dir: &Path, trace: &GenerationTrace, cfg: &SnesmConfig) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let info = RunInfo::new(trace, cfg);
    let mut files = vec![dir.join(RUN_INFO)];
    write_json(&files[0], &info)?;
    let rate = trace.sample_rate();
    for (g, w) in trace.windows.iter().enumerate() {
        let path = gen_file(dir, "gen", g);
        let mut wr = csv_writer(&path)?;
        wr.write_record(["t_s", "v"])?;
        let t0 = g as f64 * cfg.delay;
        for (n, &v) in w.iter().enumerate() {
            wr.write_record([(t0 + n as f64 / rate).to_string(), v.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

pub fn read_info(dir: &Path) -> Result<RunInfo> {
    read_json(&dir.join(RUN_INFO))
}

pub fn read_run(dir: &Path) -> Result<(RunInfo, Vec<Vec<f64>>)> {
    let info = read_info(dir)?;
    let mut windows = Vec::with_capacity(info.generations);
    for g in 0..info.generations {
        let path = gen_file(dir, "gen", g);
        let mut rd = csv_reader(&path)?;
        let mut w = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            w.push(parse_field(&rec, 1, &path)?);
        }
        windows.push(w);
    }
    Ok((info, windows))
}

fn parse_field(rec: &csv::StringRecord, idx: usize, path: &Path) -> Result<f64> {
    rec.get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| {
            Error::Validation(vec![format!(
                "{}: bad value in column {idx}",
                path.display()
            )])
        })
}

pub fn write_spectrum(dir: &Path, g: usize, sp: &Spectrum) -> Result<PathBuf> {
    let path = gen_file(dir, "spectrum", g);
    let mut wr = csv_writer(&path)?;
    wr.write_record(["frequency_hz", "magnitude"])?;
    for (k, m) in sp.magnitudes.iter().enumerate() {
        wr.write_record([sp.frequency(k).to_string(), m.to_string()])?;
    }
    wr.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn write_peaks(dir: &Path, pl: &PeakList) -> Result<PathBuf> {
    let path = gen_file(dir, "peaks", pl.generation);
    let mut wr = csv_writer(&path)?;
    wr.write_record(["frequency_hz", "normalized", "magnitude"])?;
    for p in &pl.peaks {
        wr.write_record([
            p.frequency.to_string(),
            p.normalized.to_string(),
            p.magnitude.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_peaks(dir: &Path, generations: usize) -> Result<Vec<PeakList>> {
    (0..generations)
        .map(|g| {
            let path = gen_file(dir, "peaks", g);
            let mut rd = csv_reader(&path)?;
            let mut peaks = Vec::new();
            for rec in rd.records() {
                let rec = rec?;
                peaks.push(Peak {
                    frequency: parse_field(&rec, 0, &path)?,
                    normalized: parse_field(&rec, 1, &path)?,
                    magnitude: parse_field(&rec, 2, &path)?,
                });
            }
            Ok(PeakList {
                generation: g,
                peaks,
            })
        })
        .collect()
}

/// Run directories under `dir`: `dir` itself if it holds run.json, else
/// its immediate subdirectories that do (sorted by name).
pub fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(RUN_INFO).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|e| Error::io(&d, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&d, e))?;
            let path = entry.path();
            if path.is_dir() {
                if path.join(RUN_INFO).is_file() {
                    out.push(path);
                } else {
                    stack.push(path);
                }
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Validation(vec![format!(
            "{}: no run directories found",
            dir.display()
        )]));
    }
    Ok(out)
}
