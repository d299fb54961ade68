//! Threshold-type memristor with a bounded internal state.
//!
//! The state `r` lives on a capacitor-like integrator and is driven by the
//! terminal voltage through a three-branch rate law: a slow linear drift
//! between the thresholds and fast saturating switching outside them. The
//! instantaneous resistance depends on `r` only, so the device is a plain
//! resistor at any frozen instant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode;

/// Default integration step, 2^-16 s.
pub const DEFAULT_DT: f64 = 1.0 / 65536.0;

/// Argument magnitude (in units of the steepness) beyond which the sigmoid
/// is returned as exactly 0 or 1.
const SIGMOID_SATURATION: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemristorParams {
    pub rmin: f64,
    pub rmax: f64,
    pub rinit: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub vt_r: f64,
    pub vt_l: f64,
    pub yo: f64,
    pub m: f64,
    pub fo: f64,
    pub lo: f64,
}

impl Default for MemristorParams {
    fn default() -> Self {
        Self {
            rmin: 100.0,
            rmax: 390.0,
            rinit: 390.0,
            alpha: 40000.0,
            beta: 10.0,
            gamma: 0.2,
            vt_r: 1.5,
            vt_l: -1.5,
            yo: 0.0001,
            m: 82.0,
            fo: 310.0,
            lo: 4.0,
        }
    }
}

impl MemristorParams {
    /// Collects every violated invariant, prefixed with `scope`.
    pub fn problems(&self, scope: &str) -> Vec<String> {
        let mut out = Vec::new();
        let all = [
            self.rmin, self.rmax, self.rinit, self.alpha, self.beta, self.gamma, self.vt_r,
            self.vt_l, self.yo, self.m, self.fo, self.lo,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            out.push(format!("{scope}: all parameters must be finite"));
        }
        if !(self.rmin < self.rmax) {
            out.push(format!("{scope}.rmin must be below rmax"));
        }
        if !(self.rmin <= self.rinit && self.rinit <= self.rmax) {
            out.push(format!("{scope}.rinit must lie in [rmin, rmax]"));
        }
        if !(self.vt_l < 0.0 && 0.0 < self.vt_r) {
            out.push(format!("{scope}: thresholds must satisfy vt_l < 0 < vt_r"));
        }
        if !(self.yo > 0.0) {
            out.push(format!("{scope}.yo must be positive"));
        }
        if !(self.gamma > 0.0) {
            out.push(format!("{scope}.gamma must be positive"));
        }
        if self.rmin > 0.0 && !(self.length(self.rmin) > 0.0) {
            out.push(format!("{scope}: length scale is non-positive at rmin"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems("memristor");
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn length(&self, r: f64) -> f64 {
        self.lo - self.lo * self.m / r
    }

    #[inline]
    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.rmin, self.rmax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forward,
    Reversed,
}

impl Orientation {
    /// Voltage seen by the device equations for a terminal voltage `v`.
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Orientation::Forward => v,
            Orientation::Reversed => -v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    pub r: f64,
    pub orientation: Orientation,
}

impl MemristorState {
    pub fn new(params: &MemristorParams, orientation: Orientation) -> Self {
        Self {
            r: params.rinit,
            orientation,
        }
    }
}

/// Logistic step `1 / (exp(-y/yo) + 1)`, saturating to exactly 0 or 1 far
/// from the origin.
#[inline]
pub fn smooth_step(y: f64, yo: f64) -> f64 {
    let x = y / yo;
    if x > SIGMOID_SATURATION {
        1.0
    } else if x < -SIGMOID_SATURATION {
        0.0
    } else {
        1.0 / ((-x).exp() + 1.0)
    }
}

/// dr/dt for a device voltage `v` (already oriented).
pub fn state_rate(v: f64, p: &MemristorParams) -> f64 {
    let below = v - p.vt_l;
    let above = v - p.vt_r;
    let left = -p.alpha * (below / (p.gamma + below.abs())) * smooth_step(-v + p.vt_l, p.yo);
    let middle = -p.beta * v * smooth_step(below, p.yo) * smooth_step(-v + p.vt_r, p.yo);
    let right = -p.alpha * (above / (p.gamma + above.abs())) * smooth_step(above, p.yo);
    left + middle + right
}

/// Resistance `fo * exp(2 L) / L` with `L = Lo (1 - m / r)`.
pub fn resistance(r: f64, p: &MemristorParams) -> Result<f64> {
    let length = p.length(r);
    if !(r > 0.0) || !(length > 0.0) {
        return Err(Error::domain(format!(
            "resistance undefined at r = {r}: length scale {length} is not positive"
        )));
    }
    Ok(p.fo * (2.0 * length).exp() / length)
}

/// Resistance for a state already known to lie inside the clamp interval.
#[inline]
pub(crate) fn resistance_in_bounds(r: f64, p: &MemristorParams) -> f64 {
    let length = p.length(r);
    debug_assert!(length > 0.0, "state {r} outside the resistive domain");
    p.fo * (2.0 * length).exp() / length
}

/// Integrates the state over `dt` with the terminal voltage held at `v`,
/// then projects it back onto `[rmin, rmax]`.
pub fn advance_state(st: MemristorState, v: f64, dt: f64, p: &MemristorParams) -> MemristorState {
    let seen = st.orientation.apply(v);
    let mut r = [st.r];
    ode::rk4_step(&mut r, dt, |_, _, out| out[0] = state_rate(seen, p));
    MemristorState {
        r: p.clamp(r[0]),
        orientation: st.orientation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_saturation() {
        assert_eq!(smooth_step(0.0, 1e-4), 0.5);
        assert!((smooth_step(0.5, 1e-4) - 1.0).abs() < 1e-300);
        assert!(smooth_step(-0.5, 1e-4).abs() < 1e-300);
        assert!(smooth_step(1e-5, 1e-4) > 0.5);
    }

    #[test]
    fn rate_branches() {
        let p = MemristorParams::default();
        assert_eq!(state_rate(0.0, &p), 0.0);
        assert!((state_rate(1.0, &p) + 10.0).abs() < 1e-6);
        assert!((state_rate(2.0, &p) + 28571.43).abs() < 0.1);
        assert!((state_rate(-2.0, &p) - 28571.43).abs() < 0.1);
    }

    #[test]
    fn resistance_values() {
        let p = MemristorParams::default();
        let hi = resistance(390.0, &p).unwrap();
        let lo = resistance(100.0, &p).unwrap();
        assert!((hi / 5.441e4 - 1.0).abs() < 1e-3, "{hi}");
        assert!((lo / 1817.2 - 1.0).abs() < 1e-3, "{lo}");
        assert!(hi > lo);
    }

    #[test]
    fn resistance_rejects_non_positive_length() {
        let p = MemristorParams::default();
        assert!(matches!(resistance(82.0, &p), Err(Error::Domain(_))));
        assert!(matches!(resistance(50.0, &p), Err(Error::Domain(_))));
        assert!(matches!(resistance(0.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn advance_state_directions() {
        let p = MemristorParams::default();
        let st = MemristorState::new(&p, Orientation::Forward);
        let dt = DEFAULT_DT;
        assert!(advance_state(st, 2.0, dt, &p).r < 390.0);
        assert_eq!(advance_state(st, -2.0, dt, &p).r, 390.0);
        assert_eq!(advance_state(st, 0.0, dt, &p).r, 390.0);

        let rev = MemristorState::new(&p, Orientation::Reversed);
        assert!(advance_state(rev, -2.0, dt, &p).r < 390.0);
        assert_eq!(advance_state(rev, 2.0, dt, &p).r, 390.0);
    }

    #[test]
    fn advance_state_hits_lower_bound() {
        let p = MemristorParams::default();
        let mut st = MemristorState::new(&p, Orientation::Forward);
        for _ in 0..2000 {
            st = advance_state(st, 5.0, DEFAULT_DT, &p);
            assert!(st.r >= p.rmin && st.r <= p.rmax);
        }
        assert_eq!(st.r, p.rmin);
    }

    #[test]
    fn default_params_validate() {
        MemristorParams::default().validate().unwrap();
        let bad = MemristorParams {
            rmin: 400.0,
            yo: 0.0,
            ..Default::default()
        };
        match bad.validate() {
            Err(Error::Validation(v)) => assert!(v.len() >= 2, "{v:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
