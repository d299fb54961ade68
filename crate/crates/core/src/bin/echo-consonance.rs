use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use echo_consonance::circuit::{self, CircuitKind};
use echo_consonance::classify;
use echo_consonance::device::DEFAULT_DT;
use echo_consonance::plot::{self, PlotKind};
use echo_consonance::psycho::{self, AmplitudeLaw, DissonanceParams};
use echo_consonance::reservoir;
use echo_consonance::score::{self, IntervalSpec, Quality};
use echo_consonance::store;
use echo_consonance::study::{self, ExperimentConfig, IntervalReport};
use echo_consonance::{Error, Result};

const OUT_ENV: &str = "ECHO_CONSONANCE_OUT";

#[derive(Parser)]
#[command(
    name = "echo-consonance",
    version,
    about = "Memristive echo-state reservoir for musical interval classification"
)]
struct Cli {
    /// Experiment configuration (JSON); defaults apply to omitted fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for batch work (default: all processors).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output location; falls back to $ECHO_CONSONANCE_OUT.
    #[arg(long, env = OUT_ENV, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sensory dissonance of two harmonic tones against their ratio.
    DissonanceCurve {
        #[arg(long, default_value_t = 110.0)]
        base_hz: f64,
        #[arg(long, default_value_t = 6)]
        partials: usize,
        /// uniform or geo:RHO
        #[arg(long, default_value = "uniform")]
        law: AmplitudeLaw,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        /// Grid end; past 2 so the octave is an interior point.
        #[arg(long, default_value_t = 2.1)]
        max_ratio: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Transient simulation of one circuit under a sine drive.
    SimulateCircuit {
        #[command(flatten)]
        drive: Drive,
        #[command(flatten)]
        out: OutArg,
    },
    /// (V, I) loop and lobe report of one circuit under a sine drive.
    Hysteresis {
        #[command(flatten)]
        drive: Drive,
        /// Drive cycles discarded before measuring lobes.
        #[arg(long, default_value_t = 1)]
        settle_cycles: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Single-node echo-state machine runs.
    Snesm {
        #[command(subcommand)]
        command: SnesmCommand,
    },
    /// Spectra and peaks of every generation window of one or more runs.
    Spectra {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Readouts over analyzed runs.
    Classify {
        #[command(subcommand)]
        command: ClassifyCommand,
    },
    /// Full interval study.
    Study {
        #[command(subcommand)]
        command: StudyCommand,
    },
    /// SVG rendering of a curve or points CSV.
    Plot {
        #[arg(long = "in", value_name = "CSV")]
        input: PathBuf,
        /// line or scatter3d-projections
        #[arg(long, default_value = "line")]
        kind: PlotKind,
        #[command(flatten)]
        out: OutArg,
    },
    /// Interval material.
    Intervals {
        #[command(subcommand)]
        command: IntervalsCommand,
    },
}

#[derive(Args)]
struct Drive {
    #[arg(long, value_parser = parse_kind)]
    kind: CircuitKind,
    #[arg(long, default_value_t = 55.0)]
    freq_hz: f64,
    #[arg(long, default_value_t = 20.0)]
    amp_v: f64,
    #[arg(long, default_value_t = 1.0)]
    duration_s: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt_s: f64,
}

#[derive(Subcommand)]
enum SnesmCommand {
    Run {
        #[arg(long, value_parser = parse_quality)]
        interval: Quality,
        #[arg(long)]
        base_hz: f64,
        /// Feedback gain of the delay loop.
        #[arg(long)]
        gain: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum ClassifyCommand {
    /// Reciprocal peak-count curve.
    Peaks {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Phase-portrait points and cluster report; --out POINTS.csv,REPORT.json or DIR.
    Portrait {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    Run {
        /// Comma-separated interval names (default: all thirteen).
        #[arg(long, value_delimiter = ',', value_parser = parse_quality)]
        intervals: Option<Vec<Quality>>,
        /// Comma-separated base frequencies in Hz.
        #[arg(long, value_delimiter = ',')]
        bases: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum IntervalsCommand {
    /// CSV of name, ratio, f_lower, f_upper on stdout.
    List {
        #[arg(long, value_delimiter = ',')]
        bases: Option<Vec<f64>>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<CircuitKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_quality(s: &str) -> std::result::Result<Quality, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn require_out(out: &OutArg) -> Result<PathBuf> {
    out.out.clone().ok_or_else(|| {
        Error::Validation(vec![format!(
            "no output location: pass --out or set {OUT_ENV}"
        )])
    })
}

/// A file destination: `path` itself, or `path/default` when `path` is a
/// directory or has no extension.
fn out_file(out: &OutArg, default: &str) -> Result<PathBuf> {
    let p = require_out(out)?;
    if p.is_dir() || p.extension().is_none() {
        store::create_dir(&p)?;
        Ok(p.join(default))
    } else {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            store::create_dir(parent)?;
        }
        Ok(p)
    }
}

fn out_dir(out: &OutArg) -> Result<PathBuf> {
    let p = require_out(out)?;
    store::create_dir(&p)?;
    Ok(p)
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Validation(_) => 2,
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::DissonanceCurve {
            base_hz,
            partials,
            law,
            step,
            max_ratio,
            out,
        } => {
            let grid = psycho::ratio_grid(1.0, max_ratio + 1e-9, step)?;
            let curve = psycho::dissonance_curve(
                base_hz,
                partials,
                law,
                &grid,
                &DissonanceParams::default(),
            )?;
            let path = out_file(&out, "dissonance_curve.csv")?;
            study::write_dissonance_curve(&path, &curve)?;
            let minima: Vec<String> = psycho::local_minima(&curve)
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect();
            eprintln!("local minima: {}", minima.join(" "));
            println!("{}", path.display());
        }
        Command::SimulateCircuit { drive, out } => {
            let res = circuit::run_transient(
                drive.kind,
                &cfg.circuit_config(),
                circuit::sine_drive(drive.freq_hz, drive.amp_v),
                drive.duration_s,
                drive.dt_s,
            )?;
            let path = out_file(&out, &format!("{}.csv", drive.kind.name()))?;
            let mut wr = store::csv_writer(&path)?;
            let mut header = vec![
                "t_s".to_string(),
                "v_source".into(),
                "v_out".into(),
                "i_source".into(),
            ];
            header.extend((1..=res.states.len()).map(|k| format!("r{k}")));
            wr.write_record(&header)?;
            for n in 0..res.len() {
                let mut rec = vec![
                    (n as f64 / res.sample_rate).to_string(),
                    res.v_source[n].to_string(),
                    res.v_out[n].to_string(),
                    res.i_source[n].to_string(),
                ];
                rec.extend(res.states.iter().map(|s| s[n].to_string()));
                wr.write_record(&rec)?;
            }
            wr.flush().map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            println!("{}", path.display());
        }
        Command::Hysteresis {
            drive,
            settle_cycles,
            out,
        } => {
            let res = circuit::run_transient(
                drive.kind,
                &cfg.circuit_config(),
                circuit::sine_drive(drive.freq_hz, drive.amp_v),
                drive.duration_s,
                drive.dt_s,
            )?;
            let report = circuit::hysteresis_report_settled(&res, drive.freq_hz, settle_cycles)?;
            let dir = out_dir(&out)?;
            let csv = dir.join(format!("{}_loop.csv", drive.kind.name()));
            let mut wr = store::csv_writer(&csv)?;
            wr.write_record(["v", "i"])?;
            for (v, i) in res.v_source.iter().zip(&res.i_source) {
                wr.write_record([v.to_string(), i.to_string()])?;
            }
            wr.flush().map_err(|e| Error::Io {
                path: csv.clone(),
                source: e,
            })?;
            let json = dir.join(format!("{}_hysteresis.json", drive.kind.name()));
            store::write_json(&json, &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Snesm {
            command:
                SnesmCommand::Run {
                    interval,
                    base_hz,
                    gain,
                    out,
                },
        } => {
            let mut snesm = cfg.snesm_config();
            if let Some(g) = gain {
                snesm.feedback_gain = g;
            }
            snesm.validate()?;
            let iv = IntervalSpec::new(interval, base_hz)?;
            let trace = reservoir::run_snesm(&iv, &snesm)?;
            let dir = out_dir(&out)?;
            store::write_run(&dir, &trace, &snesm)?;
            println!("{}", dir.display());
        }
        Command::Spectra { input, out } => {
            let root = out_dir(&out)?;
            let runs = store::find_runs(&input)?;
            let single = runs.len() == 1 && runs[0] == input;
            for run_dir in runs {
                let (info, windows) = store::read_run(&run_dir)?;
                let (spectra, peaks) = study::analyze_windows(
                    &windows,
                    info.interval.f_lower,
                    cfg.analysis.peak_criteria(),
                )?;
                let dest = if single {
                    root.clone()
                } else {
                    root.join(&info.label)
                };
                store::create_dir(&dest)?;
                store::write_json(&dest.join(store::RUN_INFO), &info)?;
                for (g, sp) in spectra.iter().enumerate() {
                    store::write_spectrum(&dest, g, sp)?;
                }
                for pl in &peaks {
                    store::write_peaks(&dest, pl)?;
                }
                let counts: Vec<String> = peaks.iter().map(|p| p.len().to_string()).collect();
                eprintln!("{}: peaks per generation {}", info.label, counts.join(" "));
            }
            println!("{}", root.display());
        }
        Command::Classify { command } => classify_cmd(command, &cfg)?,
        Command::Study {
            command:
                StudyCommand::Run {
                    intervals,
                    bases,
                    out,
                },
        } => {
            let mut cfg = cfg;
            if let Some(q) = intervals {
                cfg.score.intervals = q;
            }
            if let Some(b) = bases {
                cfg.score.base_freqs = b;
            }
            if let Some(dir) = out.out {
                cfg.output_dir = dir;
            }
            let result = study::run_full_study(&cfg, cli.jobs)?;
            for row in &result.curve {
                eprintln!(
                    "{:>9} {:>6} mean 1/peaks {:.4}",
                    row.quality.name(),
                    row.ratio.to_string(),
                    row.mean
                );
            }
            for r in &result.reports {
                eprintln!("{:>16} {}", r.label, r.class.name());
            }
            println!("{}", cfg.output_dir.join(study::MANIFEST).display());
        }
        Command::Plot { input, kind, out } => {
            let stem = input
                .file_stem()
                .map_or("plot".into(), |s| s.to_string_lossy().into_owned());
            let path = out_file(&out, &format!("{stem}.svg"))?;
            plot::emit_plot(&input, kind, &path)?;
            println!("{}", path.display());
        }
        Command::Intervals {
            command: IntervalsCommand::List { bases },
        } => {
            let bases = bases.unwrap_or_else(|| cfg.score.base_freqs.clone());
            let mut wr = csv::Writer::from_writer(std::io::stdout());
            wr.write_record(["name", "ratio", "f_lower", "f_upper"])?;
            for iv in score::interval_set(&bases)? {
                wr.write_record([
                    iv.quality.name().to_string(),
                    iv.ratio.to_string(),
                    iv.f_lower.to_string(),
                    iv.f_upper.to_string(),
                ])?;
            }
            wr.flush().map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    Ok(())
}

struct LoadedRun {
    info: store::RunInfo,
    peaks: Vec<echo_consonance::dsp::PeakList>,
}

fn load_analyzed(input: &Path) -> Result<Vec<LoadedRun>> {
    store::find_runs(input)?
        .into_iter()
        .map(|dir| {
            let info = store::read_info(&dir)?;
            let peaks = store::read_peaks(&dir, info.generations)?;
            Ok(LoadedRun { info, peaks })
        })
        .collect()
}

fn classify_cmd(command: ClassifyCommand, cfg: &ExperimentConfig) -> Result<()> {
    match command {
        ClassifyCommand::Peaks { input, out } => {
            let runs = load_analyzed(&input)?;
            let mut table = classify::PeakCountTable::default();
            for r in &runs {
                table.push_run(r.info.interval.quality, r.info.interval.f_lower, &r.peaks);
            }
            let curve = classify::consonance_curve(&table)?;
            let mut bases: Vec<f64> = runs.iter().map(|r| r.info.interval.f_lower).collect();
            bases.sort_by(f64::total_cmp);
            bases.dedup();
            let path = out_file(&out, "curve.csv")?;
            study::write_curve(&path, &curve, &bases)?;
            let gens = path.with_file_name(format!(
                "{}_generations.csv",
                path.file_stem()
                    .map_or("curve".into(), |s| s.to_string_lossy().into_owned())
            ));
            study::write_curve_generations(&gens, &table)?;
            println!("{}", path.display());
        }
        ClassifyCommand::Portrait { input, out } => {
            let spec = require_out(&out)?;
            let text = spec.to_string_lossy().into_owned();
            let (points_path, report_path) = match text.split_once(',') {
                Some((a, b)) => (PathBuf::from(a), PathBuf::from(b)),
                None => {
                    store::create_dir(&spec)?;
                    (spec.join("points.csv"), spec.join("report.json"))
                }
            };
            for p in [&points_path, &report_path] {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    store::create_dir(parent)?;
                }
            }
            let runs = load_analyzed(&input)?;
            let th = cfg.analysis.thresholds();
            let pts: Vec<_> = runs
                .iter()
                .map(|r| classify::phase_points(&r.peaks))
                .collect();
            study::write_points(
                &points_path,
                runs.iter()
                    .zip(&pts)
                    .map(|(r, p)| (&r.info.interval, p.as_slice())),
            )?;
            let reports = runs
                .iter()
                .zip(&pts)
                .map(|(r, p)| {
                    Ok(IntervalReport {
                        interval: r.info.interval.quality,
                        base_hz: r.info.interval.f_lower,
                        label: r.info.label.clone(),
                        expected_anchor: classify::AnchorSet::for_quality(r.info.interval.quality),
                        class: classify::classify_interval(p, &th),
                        stats: if p.is_empty() {
                            None
                        } else {
                            Some(classify::cluster_report(p, th.eps)?)
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            store::write_json(&report_path, &reports)?;
            for r in &reports {
                eprintln!("{:>16} {}", r.label, r.class.name());
            }
            println!("{}", points_path.display());
        }
    }
    Ok(())
}
