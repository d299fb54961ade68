//! Sethares sensory dissonance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DissonanceParams {
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub s1: f64,
    pub s2: f64,
    pub x_star: f64,
}

impl Default for DissonanceParams {
    fn default() -> Self {
        Self {
            b1: 3.51,
            b2: 5.75,
            c1: 5.0,
            c2: -5.0,
            s1: 0.0207,
            s2: 18.96,
            x_star: 0.24,
        }
    }
}

impl DissonanceParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.b1 > 0.0 && self.b1 < self.b2) {
            bad.push("b1/b2: need 0 < b1 < b2".to_string());
        }
        if !(self.s1 > 0.0) {
            bad.push("s1: must be positive".to_string());
        }
        if !(self.s2 > 0.0) {
            bad.push("s2: must be positive".to_string());
        }
        if !(self.x_star > 0.0) {
            bad.push("x_star: must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Frequency difference of maximal roughness above `f_low`.
    pub fn max_roughness_delta(&self, f_low: f64) -> f64 {
        let s = self.x_star / (self.s1 * f_low + self.s2);
        (self.b2 / self.b1).ln() / ((self.b2 - self.b1) * s)
    }
}

pub fn pair_dissonance(f1: f64, f2: f64, l1: f64, l2: f64, p: &DissonanceParams) -> Result<f64> {
    if !(f1 > 0.0 && f2 > 0.0) {
        return Err(Error::domain(format!(
            "frequencies must be positive, got {f1} and {f2}"
        )));
    }
    if !(l1 >= 0.0 && l2 >= 0.0) {
        return Err(Error::domain(format!(
            "loudness must be non-negative, got {l1} and {l2}"
        )));
    }
    Ok(pair_unchecked(f1, f2, l1, l2, p))
}

fn pair_unchecked(f1: f64, f2: f64, l1: f64, l2: f64, p: &DissonanceParams) -> f64 {
    let df = (f2 - f1).abs();
    let s = p.x_star / (p.s1 * f1.min(f2) + p.s2);
    let d = l1.min(l2) * (p.c1 * (-p.b1 * s * df).exp() + p.c2 * (-p.b2 * s * df).exp());
    // c1 + c2 = 0 leaves a rounding residue at df = 0
    d.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partial {
    pub frequency: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialSet {
    partials: Vec<Partial>,
}

impl PartialSet {
    pub fn new(mut partials: Vec<Partial>) -> Result<Self> {
        for p in &partials {
            if !(p.frequency > 0.0) {
                return Err(Error::domain(format!(
                    "partial frequency must be positive, got {}",
                    p.frequency
                )));
            }
            if !(p.amplitude >= 0.0) {
                return Err(Error::domain(format!(
                    "partial amplitude must be non-negative, got {}",
                    p.amplitude
                )));
            }
        }
        partials.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Ok(Self { partials })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(frequency, amplitude)| Partial {
                    frequency,
                    amplitude,
                })
                .collect(),
        )
    }

    pub fn partials(&self) -> &[Partial] {
        &self.partials
    }

    pub fn len(&self) -> usize {
        self.partials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }
}

pub fn total_dissonance(tones: &PartialSet, p: &DissonanceParams) -> Result<f64> {
    if tones.is_empty() {
        return Err(Error::domain("total dissonance of an empty partial set"));
    }
    let ps = tones.partials();
    let mut sum = 0.0;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            sum += pair_unchecked(
                ps[i].frequency,
                ps[j].frequency,
                ps[i].amplitude,
                ps[j].amplitude,
                p,
            );
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeLaw {
    Uniform,
    Geometric(f64),
}

impl AmplitudeLaw {
    /// Loudness of harmonic `k` (1-based).
    pub fn amplitude(self, k: usize) -> f64 {
        match self {
            AmplitudeLaw::Uniform => 1.0,
            AmplitudeLaw::Geometric(rho) => rho.powi(k as i32 - 1),
        }
    }
}

impl std::str::FromStr for AmplitudeLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(AmplitudeLaw::Uniform);
        }
        if let Some(rho) = s.strip_prefix("geo:") {
            let rho: f64 = rho
                .parse()
                .map_err(|_| Error::domain(format!("bad geometric ratio '{rho}'")))?;
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::domain(format!(
                    "geometric ratio must be positive, got {rho}"
                )));
            }
            return Ok(AmplitudeLaw::Geometric(rho));
        }
        Err(Error::domain(format!(
            "unknown amplitude law '{s}' (expected uniform or geo:RHO)"
        )))
    }
}

pub fn harmonic_tone(f: f64, n_partials: usize, law: AmplitudeLaw) -> Vec<Partial> {
    (1..=n_partials)
        .map(|k| Partial {
            frequency: k as f64 * f,
            amplitude: law.amplitude(k),
        })
        .collect()
}

/// Ratio grid from `start` to `stop` inclusive.
pub fn ratio_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop > start) {
        return Err(Error::domain(format!(
            "bad ratio grid {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ratio: f64,
    pub dissonance: f64,
}

pub fn dissonance_curve(
    f_base: f64,
    n_partials: usize,
    law: AmplitudeLaw,
    ratios: &[f64],
    p: &DissonanceParams,
) -> Result<Vec<CurvePoint>> {
    if n_partials == 0 {
        return Err(Error::domain("n_partials must be at least 1"));
    }
    if !(f_base > 0.0) {
        return Err(Error::domain(format!(
            "base frequency must be positive, got {f_base}"
        )));
    }
    if ratios.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("ratio grid must be strictly increasing"));
    }
    match (ratios.first(), ratios.last()) {
        (Some(&lo), Some(&hi)) if lo <= 1.0 + 1e-12 && hi >= 2.0 - 1e-12 => {}
        _ => return Err(Error::domain("ratio grid must cover [1, 2]")),
    }
    if ratios[0] <= 0.0 {
        return Err(Error::domain("ratios must be positive"));
    }
    let lower = harmonic_tone(f_base, n_partials, law);
    ratios
        .iter()
        .map(|&ratio| {
            let mut all = lower.clone();
            all.extend(harmonic_tone(ratio * f_base, n_partials, law));
            let set = PartialSet::new(all)?;
            Ok(CurvePoint {
                ratio,
                dissonance: total_dissonance(&set, p)?,
            })
        })
        .collect()
}

/// Interior strict local minima (plateaus report their first point).
pub fn local_minima(curve: &[CurvePoint]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < curve.len() {
        let d = curve[i].dissonance;
        if d < curve[i - 1].dissonance {
            let mut j = i;
            while j + 1 < curve.len() && curve[j + 1].dissonance == d {
                j += 1;
            }
            if j + 1 < curve.len() && curve[j + 1].dissonance > d {
                out.push(curve[i].ratio);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}
