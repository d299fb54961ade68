//! The three fixed memristive topologies, their transient simulation and
//! loop/harmonic characterization.
//!
//! Every memristor is a plain resistor at a frozen instant, so each network
//! reduces to closed-form divider algebra. Bridge layout:
//!
//! ```text
//!   source ── Rs ──┬──────────────┐ top
//!                  M1 (fwd)       M3 (rev)
//!                  ├── left       ├── right
//!                  M2 (rev)       M4 (fwd)
//!                  └──────────────┴── ground
//! ```
//!
//! Device voltages are reported top-minus-bottom in circuit frame; the
//! orientation flip happens inside the device equations.

use serde::{Deserialize, Serialize};

use crate::device::{self, MemristorParams, MemristorState, Orientation};
use crate::dsp::{self, Spectrum};
use crate::error::{Error, Result};
use crate::ode::{self, Stage, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    /// Memristor in series with a resistor.
    SeriesMr,
    /// Four-memristor bridge behind a series resistor.
    WienBridge,
    /// Bridge followed by an ideal differential amplifier.
    BridgeSynapse,
}

impl CircuitKind {
    pub const ALL: [CircuitKind; 3] = [
        CircuitKind::SeriesMr,
        CircuitKind::WienBridge,
        CircuitKind::BridgeSynapse,
    ];

    pub fn orientations(self) -> &'static [Orientation] {
        use Orientation::*;
        match self {
            CircuitKind::SeriesMr => &[Forward],
            CircuitKind::WienBridge | CircuitKind::BridgeSynapse => {
                &[Forward, Reversed, Reversed, Forward]
            }
        }
    }

    pub fn device_count(self) -> usize {
        self.orientations().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            CircuitKind::SeriesMr => "series",
            CircuitKind::WienBridge => "wien",
            CircuitKind::BridgeSynapse => "synapse",
        }
    }
}

impl std::str::FromStr for CircuitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" | "series_mr" => Ok(CircuitKind::SeriesMr),
            "wien" | "wien_bridge" => Ok(CircuitKind::WienBridge),
            "synapse" | "bridge_synapse" => Ok(CircuitKind::BridgeSynapse),
            other => Err(Error::domain(format!("unknown circuit kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub series_resistance: f64,
    pub amp_gain: f64,
    pub memristor: MemristorParams,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            series_resistance: 2000.0,
            amp_gain: DEFAULT_AMP_GAIN,
            memristor: MemristorParams::default(),
        }
    }
}

pub const DEFAULT_AMP_GAIN: f64 = 10.0;

impl CircuitConfig {
    pub fn problems(&self, scope: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.series_resistance > 0.0 && self.series_resistance.is_finite()) {
            out.push(format!("{scope}.series_resistance must be positive"));
        }
        if !(self.amp_gain > 0.0 && self.amp_gain.is_finite()) {
            out.push(format!("{scope}.amp_gain must be positive"));
        }
        out.extend(self.memristor.problems(&format!("{scope}.memristor")));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems("circuit");
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Instantaneous operating point of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSolution {
    device_voltages: [f64; MAX_DIM],
    count: usize,
    pub v_out: f64,
    pub i_source: f64,
}

impl NetworkSolution {
    pub fn device_voltages(&self) -> &[f64] {
        &self.device_voltages[..self.count]
    }
}

/// Solves the resistive network for the given device states at source
/// voltage `v_in`. States must lie inside the clamp interval.
pub fn solve_network(
    kind: CircuitKind,
    cfg: &CircuitConfig,
    states: &[f64],
    v_in: f64,
) -> NetworkSolution {
    assert_eq!(
        states.len(),
        kind.device_count(),
        "state count for {kind:?}"
    );
    let p = &cfg.memristor;
    let mut res = [0.0; MAX_DIM];
    for (r_out, &r) in res.iter_mut().zip(states) {
        *r_out = device::resistance_in_bounds(p.clamp(r), p);
    }
    solve_with_resistances(kind, cfg, &res[..states.len()], v_in)
}

fn solve_with_resistances(
    kind: CircuitKind,
    cfg: &CircuitConfig,
    res: &[f64],
    v_in: f64,
) -> NetworkSolution {
    let rs = cfg.series_resistance;
    match kind {
        CircuitKind::SeriesMr => {
            let i = v_in / (res[0] + rs);
            NetworkSolution {
                device_voltages: [i * res[0], 0.0, 0.0, 0.0],
                count: 1,
                v_out: i * res[0],
                i_source: i,
            }
        }
        CircuitKind::WienBridge | CircuitKind::BridgeSynapse => {
            let left = res[0] + res[1];
            let right = res[2] + res[3];
            let bridge = left * right / (left + right);
            let i = v_in / (rs + bridge);
            let top = i * bridge;
            let mid_left = top * res[1] / left;
            let mid_right = top * res[3] / right;
            let diff = mid_left - mid_right;
            let v_out = if kind == CircuitKind::BridgeSynapse {
                cfg.amp_gain * diff
            } else {
                diff
            };
            NetworkSolution {
                device_voltages: [top - mid_left, mid_left, top - mid_right, mid_right],
                count: 4,
                v_out,
                i_source: i,
            }
        }
    }
}

/// A circuit instance advanced step by step.
#[derive(Debug, Clone)]
pub struct Circuit {
    kind: CircuitKind,
    cfg: CircuitConfig,
    states: Vec<MemristorState>,
}

impl Circuit {
    pub fn new(kind: CircuitKind, cfg: CircuitConfig) -> Self {
        let states = kind
            .orientations()
            .iter()
            .map(|&o| MemristorState::new(&cfg.memristor, o))
            .collect();
        Self { kind, cfg, states }
    }

    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    pub fn states(&self) -> &[MemristorState] {
        &self.states
    }

    pub fn set_state(&mut self, index: usize, r: f64) {
        self.states[index].r = self.cfg.memristor.clamp(r);
    }

    fn state_values(&self) -> ([f64; MAX_DIM], usize) {
        let mut r = [0.0; MAX_DIM];
        for (dst, st) in r.iter_mut().zip(&self.states) {
            *dst = st.r;
        }
        (r, self.states.len())
    }

    pub fn observe(&self, v_in: f64) -> NetworkSolution {
        let (r, n) = self.state_values();
        solve_network(self.kind, &self.cfg, &r[..n], v_in)
    }

    /// One coupled RK4 step. `drive` holds the source voltage at the start,
    /// midpoint and end of the step; every stage re-solves the network with
    /// its own stage states.
    pub fn step(&mut self, dt: f64, drive: [f64; 3]) {
        let (mut r, n) = self.state_values();
        let kind = self.kind;
        let cfg = &self.cfg;
        let orientations = kind.orientations();
        ode::rk4_step(&mut r[..n], dt, |stage, s, out| {
            let v_in = match stage {
                Stage::Start => drive[0],
                Stage::Mid => drive[1],
                Stage::End => drive[2],
            };
            let sol = solve_network(kind, cfg, s, v_in);
            for ((rate, &v), o) in out.iter_mut().zip(sol.device_voltages()).zip(orientations) {
                *rate = device::state_rate(o.apply(v), &cfg.memristor);
            }
        });
        let p = &self.cfg.memristor;
        for (st, &value) in self.states.iter_mut().zip(&r[..n]) {
            st.r = p.clamp(value);
            debug_assert!(st.r >= p.rmin && st.r <= p.rmax);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub sample_rate: f64,
    pub v_source: Vec<f64>,
    pub v_out: Vec<f64>,
    pub i_source: Vec<f64>,
    /// One series per device.
    pub states: Vec<Vec<f64>>,
}

impl TransientResult {
    pub fn len(&self) -> usize {
        self.v_source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_source.is_empty()
    }
}

/// Simulates `duration` seconds of the circuit under `drive`, recording
/// every step (samples at t = n dt, n = 0..duration/dt).
pub fn run_transient<F>(
    kind: CircuitKind,
    cfg: &CircuitConfig,
    drive: F,
    duration: f64,
    dt: f64,
) -> Result<TransientResult>
where
    F: Fn(f64) -> f64,
{
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(Error::domain("duration and dt must be positive"));
    }
    cfg.validate()?;
    let steps = (duration / dt).round() as usize;
    let mut circuit = Circuit::new(kind, *cfg);
    let n_dev = kind.device_count();
    let mut out = TransientResult {
        sample_rate: 1.0 / dt,
        v_source: Vec::with_capacity(steps),
        v_out: Vec::with_capacity(steps),
        i_source: Vec::with_capacity(steps),
        states: vec![Vec::with_capacity(steps); n_dev],
    };
    for n in 0..steps {
        let t = n as f64 * dt;
        let v = drive(t);
        let sol = circuit.observe(v);
        out.v_source.push(v);
        out.v_out.push(sol.v_out);
        out.i_source.push(sol.i_source);
        for (series, st) in out.states.iter_mut().zip(circuit.states()) {
            series.push(st.r);
        }
        circuit.step(dt, [v, drive(t + 0.5 * dt), drive(t + dt)]);
    }
    Ok(out)
}

impl CircuitKind {
    /// Signal whose harmonic content characterizes the circuit: the loop
    /// current for the passive networks, the amplifier output for the synapse.
    pub fn harmonic_observable(self) -> Observable {
        match self {
            CircuitKind::SeriesMr | CircuitKind::WienBridge => Observable::SourceCurrent,
            CircuitKind::BridgeSynapse => Observable::Output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SourceCurrent,
    Output,
}

impl TransientResult {
    pub fn series(&self, which: Observable) -> &[f64] {
        match which {
            Observable::SourceCurrent => &self.i_source,
            Observable::Output => &self.v_out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisReport {
    /// Mean enclosed area per positive-voltage lobe (V·A).
    pub lobe_pos: f64,
    /// Mean enclosed area per negative-voltage lobe (V·A).
    pub lobe_neg: f64,
    pub cycles: usize,
    pub max_abs_current: f64,
    /// Largest |I| at an interpolated V = 0 crossing, relative to max |I|.
    pub pinch_ratio: f64,
}

impl HysteresisReport {
    pub fn lobe_asymmetry(&self) -> f64 {
        let m = self.lobe_pos.max(self.lobe_neg);
        if m == 0.0 {
            0.0
        } else {
            (self.lobe_pos - self.lobe_neg).abs() / m
        }
    }
}

/// (V_source, I_source) loop lobes after discarding the first drive cycle.
pub fn hysteresis_report(res: &TransientResult, drive_hz: f64) -> Result<HysteresisReport> {
    hysteresis_report_settled(res, drive_hz, 1)
}

/// As [`hysteresis_report`] but discarding `settle_cycles` drive cycles.
/// The bridges take about six cycles to reach their periodic regime.
pub fn hysteresis_report_settled(
    res: &TransientResult,
    drive_hz: f64,
    settle_cycles: usize,
) -> Result<HysteresisReport> {
    if !(drive_hz > 0.0) {
        return Err(Error::domain("drive frequency must be positive"));
    }
    let per_cycle = res.sample_rate / drive_hz;
    let total_cycles = res.len() as f64 / per_cycle;
    let needed = (settle_cycles + 1).max(2) as f64;
    if total_cycles < needed {
        return Err(Error::domain(format!(
            "need at least {needed} drive cycles, record holds {total_cycles:.3}"
        )));
    }
    let start = (per_cycle * settle_cycles as f64).ceil() as usize;
    let v = &res.v_source[start..];
    let i = &res.i_source[start..];

    let max_abs_current = i.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut pinch = 0.0f64;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    // current excursion as a polyline starting and ending on V = 0
    let mut lobe: Vec<(f64, f64)> = Vec::new();
    let mut inside = false;
    for k in 0..v.len() {
        if k > 0 {
            let (v0, v1) = (v[k - 1], v[k]);
            if (v0 >= 0.0) != (v1 >= 0.0) {
                let w = v0 / (v0 - v1);
                let ic = i[k - 1] + w * (i[k] - i[k - 1]);
                pinch = pinch.max(ic.abs());
                lobe.push((0.0, ic));
                if inside {
                    let a = shoelace(&lobe).abs();
                    if v0 >= 0.0 {
                        pos.push(a);
                    } else {
                        neg.push(a);
                    }
                }
                inside = true;
                lobe.clear();
                lobe.push((0.0, ic));
            }
        }
        lobe.push((v[k], i[k]));
    }
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    Ok(HysteresisReport {
        lobe_pos: mean(&pos),
        lobe_neg: mean(&neg),
        cycles: pos.len().min(neg.len()),
        max_abs_current,
        pinch_ratio: if max_abs_current > 0.0 {
            pinch / max_abs_current
        } else {
            0.0
        },
    })
}

fn shoelace(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for k in 0..n {
        let (x0, y0) = pts[k];
        let (x1, y1) = pts[(k + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

/// Total harmonic distortion from nearest-bin magnitudes up to Nyquist.
pub fn thd(spectrum: &Spectrum, fundamental: f64) -> Result<f64> {
    if !(fundamental > 0.0) || fundamental > spectrum.nyquist() {
        return Err(Error::domain(format!(
            "fundamental {fundamental} Hz outside spectrum range"
        )));
    }
    let h1 = spectrum.magnitude_at(fundamental).unwrap_or(0.0);
    if h1 <= 0.0 {
        return Err(Error::domain("zero magnitude at the fundamental"));
    }
    let mut sum = 0.0;
    let mut k = 2;
    while (k as f64) * fundamental <= spectrum.nyquist() {
        let m = spectrum.magnitude_at(k as f64 * fundamental).unwrap_or(0.0);
        sum += m * m;
        k += 1;
    }
    Ok(sum.sqrt() / h1)
}

/// Summary of one sinusoidal characterization run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub kind: CircuitKind,
    pub freq_hz: f64,
    pub amp_v: f64,
    pub observable: Observable,
    pub thd: f64,
    /// |Y(2f)| / |Y(f)| of the observable.
    pub second_harmonic_ratio: f64,
    pub hysteresis: HysteresisReport,
}

pub fn sine_drive(freq_hz: f64, amp_v: f64) -> impl Fn(f64) -> f64 {
    move |t| amp_v * (2.0 * std::f64::consts::PI * freq_hz * t).sin()
}

/// Drives the circuit with a sine for `settle + 2 s`, then analyzes the
/// final 2 s (decimated to the analysis rate) and the loop over the same
/// span.
pub fn characterize(
    kind: CircuitKind,
    cfg: &CircuitConfig,
    freq_hz: f64,
    amp_v: f64,
    settle: f64,
    dt: f64,
) -> Result<(TransientResult, Characterization)> {
    let window_s = dsp::WINDOW_LEN as f64 / dsp::ANALYSIS_RATE;
    let res = run_transient(kind, cfg, sine_drive(freq_hz, amp_v), settle + window_s, dt)?;
    let factor = (res.sample_rate / dsp::ANALYSIS_RATE).round() as usize;
    if factor == 0 || (factor as f64 * dsp::ANALYSIS_RATE - res.sample_rate).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "dt must divide the analysis period, got sample rate {}",
            res.sample_rate
        )));
    }
    let observable = kind.harmonic_observable();
    let dec = dsp::decimate(res.series(observable), factor, res.sample_rate);
    if dec.len() < dsp::WINDOW_LEN {
        return Err(Error::domain("record shorter than one analysis window"));
    }
    let sp = dsp::magnitude_spectrum(&dec[dec.len() - dsp::WINDOW_LEN..])?;
    let thd = thd(&sp, freq_hz)?;
    let h1 = sp.magnitude_at(freq_hz).unwrap_or(0.0);
    let h2 = sp.magnitude_at(2.0 * freq_hz).unwrap_or(0.0);
    let settle_cycles = ((settle * freq_hz).floor() as usize).max(1);
    let hysteresis = hysteresis_report_settled(&res, freq_hz, settle_cycles)?;
    Ok((
        res,
        Characterization {
            kind,
            freq_hz,
            amp_v,
            observable,
            thd,
            second_harmonic_ratio: h2 / h1,
            hysteresis,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DEFAULT_DT;

    fn cfg() -> CircuitConfig {
        CircuitConfig::default()
    }

    #[test]
    fn kinds_parse() {
        for k in CircuitKind::ALL {
            assert_eq!(k.name().parse::<CircuitKind>().unwrap(), k);
        }
        assert!("mna".parse::<CircuitKind>().is_err());
    }

    #[test]
    fn zero_drive_is_quiet() {
        for k in CircuitKind::ALL {
            let res = run_transient(k, &cfg(), |_| 0.0, 0.05, DEFAULT_DT).unwrap();
            assert!(res.v_out.iter().all(|&v| v == 0.0));
            let r0 = cfg().memristor.rinit;
            assert!(res.states.iter().flatten().all(|&r| r == r0));
        }
    }

    #[test]
    fn balanced_bridge_has_zero_output() {
        let sol = solve_network(CircuitKind::BridgeSynapse, &cfg(), &[390.0; 4], 5.0);
        assert!(sol.v_out.abs() < 1e-12);
        let r = device::resistance(390.0, &cfg().memristor).unwrap();
        let expected = 5.0 / (cfg().series_resistance + r);
        assert!((sol.i_source - expected).abs() < 1e-15);
    }

    #[test]
    fn series_divider() {
        let p = cfg().memristor;
        let r = device::resistance(200.0, &p).unwrap();
        let sol = solve_network(CircuitKind::SeriesMr, &cfg(), &[200.0], 3.0);
        assert!((sol.i_source - 3.0 / (r + 2000.0)).abs() < 1e-15);
        assert!((sol.v_out - 3.0 * r / (r + 2000.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_resistor_has_no_lobes() {
        let n = 4 * 1192;
        let sample_rate = 65536.0;
        let v: Vec<f64> = (0..n)
            .map(|k| 20.0 * (2.0 * std::f64::consts::PI * 55.0 * k as f64 / sample_rate).sin())
            .collect();
        let i = v.iter().map(|x| x / 3000.0).collect();
        let res = TransientResult {
            sample_rate,
            v_source: v.clone(),
            v_out: v,
            i_source: i,
            states: vec![],
        };
        let rep = hysteresis_report(&res, 55.0).unwrap();
        assert!(rep.lobe_pos < 1e-12 && rep.lobe_neg < 1e-12, "{rep:?}");
        assert!(rep.cycles >= 2);
    }

    #[test]
    fn too_short_for_hysteresis() {
        let res = run_transient(
            CircuitKind::SeriesMr,
            &cfg(),
            sine_drive(55.0, 20.0),
            0.03,
            DEFAULT_DT,
        )
        .unwrap();
        assert!(hysteresis_report(&res, 55.0).is_err());
    }

    #[test]
    fn thd_examples() {
        let n = dsp::WINDOW_LEN;
        let fs = dsp::ANALYSIS_RATE;
        let sine: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * 64.0 * k as f64 / fs).sin())
            .collect();
        let sp = dsp::magnitude_spectrum(&sine).unwrap();
        assert!(thd(&sp, 64.0).unwrap() < 1e-9);

        // band-limited square wave with on-bin odd harmonics
        let f = 8.0;
        let sq: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 / fs;
                let mut s = 0.0;
                let mut h = 1;
                while (h as f64) * f < fs / 2.0 {
                    s += (2.0 * std::f64::consts::PI * h as f64 * f * t).sin() / h as f64;
                    h += 2;
                }
                s
            })
            .collect();
        let sp = dsp::magnitude_spectrum(&sq).unwrap();
        let mut expect = 0.0;
        let mut h = 3;
        while (h as f64) * f < fs / 2.0 {
            expect += 1.0 / (h * h) as f64;
            h += 2;
        }
        let got = thd(&sp, f).unwrap();
        assert!((got - expect.sqrt()).abs() < 1e-6, "{got}");
        assert!((got - 0.4834).abs() < 1e-3);

        let zero = dsp::magnitude_spectrum(&vec![0.0; n]).unwrap();
        assert!(thd(&zero, 64.0).is_err());
        assert!(thd(&sp, 5000.0).is_err());
    }

    #[test]
    fn series_hysteresis_is_pinched() {
        let res = run_transient(
            CircuitKind::SeriesMr,
            &cfg(),
            sine_drive(55.0, 20.0),
            0.5,
            DEFAULT_DT,
        )
        .unwrap();
        let rep = hysteresis_report(&res, 55.0).unwrap();
        assert!(rep.pinch_ratio < 1e-6, "{rep:?}");
        assert!(rep.lobe_pos > 0.0 && rep.lobe_neg > 0.0);
    }

    #[test]
    fn states_stay_in_bounds() {
        let p = cfg().memristor;
        for k in CircuitKind::ALL {
            let res = run_transient(k, &cfg(), sine_drive(55.0, 40.0), 0.3, DEFAULT_DT).unwrap();
            assert!(res
                .states
                .iter()
                .flatten()
                .all(|&r| r >= p.rmin && r <= p.rmax));
        }
    }
}
