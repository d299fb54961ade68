//! Single-node echo-state machine: the bridge synapse inside a delayed
//! feedback loop.
//!
//! The loop signal entering the node is
//! `u(t) = pulse(t) + feedback_gain * v_out(t - delay)`. The recorded trace
//! is `u` itself, so generation 0 is the input pulse and generation `g >= 1`
//! is the `g`-th echo.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitConfig, CircuitKind};
use crate::device::DEFAULT_DT;
use crate::dsp::{self, ANALYSIS_RATE};
use crate::error::{Error, Result};
use crate::score::{IntervalSpec, Ratio};

/// Amplifier gain of the node inside the loop. The standalone circuit
/// default of 10 makes the loop gain exceed 1 at `feedback_gain = 0.5`.
pub const SNESM_AMP_GAIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnesmConfig {
    pub delay: f64,
    pub feedback_gain: f64,
    pub generations: usize,
    pub pulse_duration: f64,
    pub damping: f64,
    pub tone_amplitude: f64,
    pub circuit: CircuitConfig,
    pub dt: f64,
}

impl Default for SnesmConfig {
    fn default() -> Self {
        Self {
            delay: 2.0,
            feedback_gain: 0.5,
            generations: 10,
            pulse_duration: 2.0,
            damping: 2.0,
            tone_amplitude: 10.0,
            circuit: CircuitConfig {
                amp_gain: SNESM_AMP_GAIN,
                ..CircuitConfig::default()
            },
            dt: DEFAULT_DT,
        }
    }
}

/// `x / unit` when it is within 1e-9 of a positive integer.
fn whole_multiple(x: f64, unit: f64) -> Option<usize> {
    let k = x / unit;
    let rounded = k.round();
    (rounded >= 1.0 && (k - rounded).abs() < 1e-9).then_some(rounded as usize)
}

impl SnesmConfig {
    pub fn problems(&self, scope: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("{scope}.dt must be positive"));
        } else {
            if whole_multiple(self.delay, self.dt).is_none() {
                out.push(format!("{scope}.delay must be a whole number of dt steps"));
            }
            if whole_multiple(1.0 / self.dt, ANALYSIS_RATE).is_none() {
                out.push(format!(
                    "{scope}.dt must divide the {ANALYSIS_RATE} Hz analysis period"
                ));
            }
        }
        if !(self.delay > 0.0) {
            out.push(format!("{scope}.delay must be positive"));
        }
        if self.delay != self.pulse_duration {
            out.push(format!("{scope}.pulse_duration must equal delay"));
        }
        if self.generations == 0 {
            out.push(format!("{scope}.generations must be at least 1"));
        }
        if !(self.feedback_gain >= 0.0 && self.feedback_gain.is_finite()) {
            out.push(format!("{scope}.feedback_gain must be non-negative"));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            out.push(format!("{scope}.damping must be non-negative"));
        }
        if !(self.tone_amplitude >= 0.0 && self.tone_amplitude.is_finite()) {
            out.push(format!("{scope}.tone_amplitude must be non-negative"));
        }
        if whole_multiple(self.delay * ANALYSIS_RATE, 1.0).is_none() {
            out.push(format!("{scope}.delay must span whole analysis samples"));
        }
        out.extend(self.circuit.problems(&format!("{scope}.circuit")));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems("snesm");
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn delay_steps(&self) -> usize {
        (self.delay / self.dt).round() as usize
    }

    pub fn decimation(&self) -> usize {
        (1.0 / self.dt / ANALYSIS_RATE).round() as usize
    }

    pub fn window_len(&self) -> usize {
        (self.delay * ANALYSIS_RATE).round() as usize
    }

    pub fn total_time(&self) -> f64 {
        self.generations as f64 * self.delay
    }
}

/// Damped, gated sum of the interval's tones at time `t`.
pub fn synth_pulse(interval: &IntervalSpec, cfg: &SnesmConfig, t: f64) -> f64 {
    if !(0.0..cfg.pulse_duration).contains(&t) {
        return 0.0;
    }
    let envelope = cfg.tone_amplitude * (-cfg.damping * t).exp();
    interval
        .tones()
        .iter()
        .map(|&f| (2.0 * PI * f * t).sin())
        .sum::<f64>()
        * envelope
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub interval: IntervalSpec,
    /// Loop signal at the analysis rate, one window per generation.
    pub windows: Vec<Vec<f64>>,
}

impl GenerationTrace {
    pub fn sample_rate(&self) -> f64 {
        ANALYSIS_RATE
    }
}

/// Output of a raw loop simulation at the integration rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRecord {
    pub sample_rate: f64,
    /// Signal entering the node.
    pub loop_input: Vec<f64>,
    /// Node output.
    pub node_output: Vec<f64>,
}

/// Runs the delayed-feedback loop around a bridge synapse for
/// `generations * delay` seconds with an arbitrary external input.
pub fn run_loop<F>(input: F, cfg: &SnesmConfig) -> Result<LoopRecord>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let dt = cfg.dt;
    let delay = cfg.delay_steps();
    let steps = cfg.generations * delay;
    let gain = cfg.feedback_gain;
    let mut node = Circuit::new(CircuitKind::BridgeSynapse, cfg.circuit);
    let mut loop_input = Vec::with_capacity(steps);
    let mut node_output = Vec::with_capacity(steps);

    // Output delayed by `delay` steps, read at sample n - delay (+1 at the step end).
    let echo = |out: &[f64], n: usize| -> f64 {
        if n >= delay {
            out[n - delay]
        } else {
            0.0
        }
    };

    for n in 0..steps {
        let t = n as f64 * dt;
        let u0 = input(t) + gain * echo(&node_output, n);
        let y = node.observe(u0).v_out;
        loop_input.push(u0);
        node_output.push(y);
        // the sample at n + 1 - delay is known because delay >= 1
        let e0 = echo(&node_output, n);
        let e1 = echo(&node_output, n + 1);
        let u_mid = input(t + 0.5 * dt) + gain * 0.5 * (e0 + e1);
        let u1 = input(t + dt) + gain * e1;
        node.step(dt, [u0, u_mid, u1]);
        if !y.is_finite() {
            return Err(Error::domain(format!("loop diverged at t = {t} s")));
        }
    }
    Ok(LoopRecord {
        sample_rate: 1.0 / dt,
        loop_input,
        node_output,
    })
}

/// Decimates a loop record to the analysis rate and tiles it into windows.
pub fn slice_generations(signal: &[f64], cfg: &SnesmConfig) -> Vec<Vec<f64>> {
    let decimated = dsp::decimate(signal, cfg.decimation(), 1.0 / cfg.dt);
    decimated
        .chunks(cfg.window_len())
        .take(cfg.generations)
        .map(<[f64]>::to_vec)
        .collect()
}

pub fn run_snesm(interval: &IntervalSpec, cfg: &SnesmConfig) -> Result<GenerationTrace> {
    let record = run_loop(|t| synth_pulse(interval, cfg, t), cfg)?;
    Ok(GenerationTrace {
        interval: *interval,
        windows: slice_generations(&record.loop_input, cfg),
    })
}

/// Comb spacing, as a fraction of the lower tone, produced by repeated
/// sum and difference mixing of tones in ratio `p/q`: `1/q`.
pub fn mixing_grid(ratio: Ratio) -> Result<Ratio> {
    if ratio.num() < ratio.den() {
        return Err(Error::domain(format!("ratio {ratio} is below unison")));
    }
    Ratio::new(1, ratio.den())
}

/// Parses a ratio string and returns its mixing comb spacing.
pub fn mixing_grid_str(ratio: &str) -> Result<Ratio> {
    mixing_grid(Ratio::parse(ratio)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::Quality;

    #[test]
    fn pulse_values() {
        let cfg = SnesmConfig::default();
        let uni = IntervalSpec::new(Quality::Unison, 55.0).unwrap();
        assert_eq!(synth_pulse(&uni, &cfg, 0.0), 0.0);
        let quarter = synth_pulse(&uni, &cfg, 1.0 / 220.0);
        assert!((quarter - 10.0 * (-2.0f64 / 220.0).exp()).abs() < 1e-12);
        assert!((quarter - 9.9096).abs() < 1e-4);
        let fifth = IntervalSpec::new(Quality::Perfect5, 55.0).unwrap();
        assert_eq!(synth_pulse(&fifth, &cfg, 2.0), 0.0);
        assert_eq!(synth_pulse(&fifth, &cfg, 7.3), 0.0);
    }

    #[test]
    fn mixing_grid_examples() {
        assert_eq!(mixing_grid_str("3/2").unwrap(), Ratio::new(1, 2).unwrap());
        assert_eq!(mixing_grid_str("4/3").unwrap(), Ratio::new(1, 3).unwrap());
        assert_eq!(mixing_grid_str("1/1").unwrap(), Ratio::new(1, 1).unwrap());
        assert!(mixing_grid_str("1.5").is_err());
        assert!(mixing_grid_str("2/3").is_err());
    }

    #[test]
    fn config_validation() {
        SnesmConfig::default().validate().unwrap();
        let bad = SnesmConfig {
            pulse_duration: 1.0,
            dt: 1e-5,
            ..Default::default()
        };
        let Err(Error::Validation(problems)) = bad.validate() else {
            panic!("expected validation failure");
        };
        assert!(problems.len() >= 2, "{problems:?}");
    }

    #[test]
    fn derived_sizes() {
        let cfg = SnesmConfig::default();
        assert_eq!(cfg.delay_steps(), 131072);
        assert_eq!(cfg.decimation(), 8);
        assert_eq!(cfg.window_len(), 16384);
        assert_eq!(cfg.total_time(), 20.0);
    }

    fn short() -> SnesmConfig {
        SnesmConfig {
            delay: 0.25,
            pulse_duration: 0.25,
            generations: 4,
            ..Default::default()
        }
    }

    #[test]
    fn silent_input_gives_silent_windows() {
        let cfg = SnesmConfig {
            tone_amplitude: 0.0,
            ..short()
        };
        let iv = IntervalSpec::new(Quality::Perfect5, 55.0).unwrap();
        let tr = run_snesm(&iv, &cfg).unwrap();
        assert_eq!(tr.windows.len(), 4);
        assert!(tr.windows.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn windows_tile_the_decimated_signal() {
        let cfg = short();
        let iv = IntervalSpec::new(Quality::Unison, 55.0).unwrap();
        let rec = run_loop(|t| synth_pulse(&iv, &cfg, t), &cfg).unwrap();
        let dec = dsp::decimate(&rec.loop_input, cfg.decimation(), rec.sample_rate);
        let windows = slice_generations(&rec.loop_input, &cfg);
        assert!(windows.iter().all(|w| w.len() == cfg.window_len()));
        assert_eq!(windows.concat(), dec);
        // generation 0 holds the pulse alone
        let first = &rec.loop_input[..cfg.delay_steps()];
        for (n, &u) in first.iter().enumerate().step_by(97) {
            assert_eq!(u, synth_pulse(&iv, &cfg, n as f64 * cfg.dt));
        }
        assert!(rec.node_output.iter().all(|y| y.is_finite()));
    }
}
