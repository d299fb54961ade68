//! Just-intonation pitch material: the C-major scale anchored on A4 and the
//! thirteen two-tone intervals from unison to octave.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact positive rational in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::domain(format!("ratio {num}/{den} is not positive")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn scale(self, f: f64) -> f64 {
        f * self.num as f64 / self.den as f64
    }

    /// Parses `p/q` or a bare integer.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("'{s}' is not an exact ratio p/q"));
        match s.split_once('/') {
            Some((p, q)) => Ratio::new(
                p.trim().parse().map_err(|_| bad())?,
                q.trim().parse().map_err(|_| bad())?,
            ),
            None => Ratio::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Unison,
    Minor2,
    Major2,
    Minor3,
    Major3,
    Perfect4,
    Tritone,
    Perfect5,
    Minor6,
    Major6,
    Minor7,
    Major7,
    Octave,
}

impl Quality {
    pub const ALL: [Quality; 13] = [
        Quality::Unison,
        Quality::Minor2,
        Quality::Major2,
        Quality::Minor3,
        Quality::Major3,
        Quality::Perfect4,
        Quality::Tritone,
        Quality::Perfect5,
        Quality::Minor6,
        Quality::Major6,
        Quality::Minor7,
        Quality::Major7,
        Quality::Octave,
    ];

    pub fn ratio(self) -> Ratio {
        let (p, q) = match self {
            Quality::Unison => (1, 1),
            Quality::Minor2 => (16, 15),
            Quality::Major2 => (9, 8),
            Quality::Minor3 => (6, 5),
            Quality::Major3 => (5, 4),
            Quality::Perfect4 => (4, 3),
            Quality::Tritone => (64, 45),
            Quality::Perfect5 => (3, 2),
            Quality::Minor6 => (8, 5),
            Quality::Major6 => (5, 3),
            Quality::Minor7 => (16, 9),
            Quality::Major7 => (15, 8),
            Quality::Octave => (2, 1),
        };
        Ratio { num: p, den: q }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quality::Unison => "unison",
            Quality::Minor2 => "minor2",
            Quality::Major2 => "major2",
            Quality::Minor3 => "minor3",
            Quality::Major3 => "major3",
            Quality::Perfect4 => "perfect4",
            Quality::Tritone => "tritone",
            Quality::Perfect5 => "perfect5",
            Quality::Minor6 => "minor6",
            Quality::Major6 => "major6",
            Quality::Minor7 => "minor7",
            Quality::Major7 => "major7",
            Quality::Octave => "octave",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quality::ALL
            .iter()
            .copied()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown interval '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub name: String,
    pub frequency: f64,
}

/// C-major degrees relative to C, with their letter names.
const DEGREES: [(&str, u64, u64); 7] = [
    ("C", 1, 1),
    ("D", 9, 8),
    ("E", 5, 4),
    ("F", 4, 3),
    ("G", 3, 2),
    ("A", 5, 3),
    ("B", 15, 8),
];

/// Just-intonation C-major scale from A1 to E4, anchored so that A4 = `a4`.
pub fn build_scale(a4: f64) -> Result<Vec<Note>> {
    if !(a4 > 0.0 && a4.is_finite()) {
        return Err(Error::domain("reference A4 must be positive"));
    }
    // A is the 5/3 degree of C, so C4 = (3/5) A4.
    let c4 = a4 * 3.0 / 5.0;
    let mut notes = Vec::new();
    for octave in 1..=4i32 {
        let c = c4 * 2f64.powi(octave - 4);
        for &(letter, p, q) in &DEGREES {
            let below_a1 = octave == 1 && !matches!(letter, "A" | "B");
            let above_e4 = octave == 4 && !matches!(letter, "C" | "D" | "E");
            if below_a1 || above_e4 {
                continue;
            }
            notes.push(Note {
                name: format!("{letter}{octave}"),
                frequency: c * p as f64 / q as f64,
            });
        }
    }
    Ok(notes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub quality: Quality,
    pub ratio: Ratio,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl IntervalSpec {
    pub fn new(quality: Quality, f_lower: f64) -> Result<Self> {
        if !(f_lower > 0.0 && f_lower.is_finite()) {
            return Err(Error::domain("base frequency must be positive"));
        }
        let ratio = quality.ratio();
        Ok(Self {
            quality,
            ratio,
            f_lower,
            f_upper: ratio.scale(f_lower),
        })
    }

    /// Distinct tone frequencies (one for unison).
    pub fn tones(&self) -> Vec<f64> {
        if self.quality == Quality::Unison {
            vec![self.f_lower]
        } else {
            vec![self.f_lower, self.f_upper]
        }
    }

    /// Directory-safe label, e.g. `perfect5_55`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.quality.name(), format_hz(self.f_lower))
    }
}

/// Shortest round-trip decimal for a frequency.
pub fn format_hz(f: f64) -> String {
    format!("{f}")
}

pub const DEFAULT_BASE_FREQS: [f64; 3] = [61.875, 66.0, 88.0];

/// All thirteen qualities at every base frequency, base-major order.
pub fn interval_set(base_freqs: &[f64]) -> Result<Vec<IntervalSpec>> {
    let mut out = Vec::with_capacity(base_freqs.len() * Quality::ALL.len());
    for &base in base_freqs {
        for q in Quality::ALL {
            out.push(IntervalSpec::new(q, base)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freq(notes: &[Note], name: &str) -> f64 {
        notes.iter().find(|n| n.name == name).unwrap().frequency
    }

    #[test]
    fn scale_anchors() {
        let notes = build_scale(440.0).unwrap();
        assert_eq!(freq(&notes, "C2"), 66.0);
        assert_eq!(freq(&notes, "B1"), 61.875);
        assert_eq!(freq(&notes, "A1"), 55.0);
        assert_eq!(freq(&notes, "A2"), 110.0);
        assert_eq!(freq(&notes, "A3"), 220.0);
        assert_eq!(freq(&notes, "E2"), 82.5);
        assert_eq!(freq(&notes, "F2"), 88.0);
        assert_eq!(notes.first().unwrap().name, "A1");
        assert_eq!(notes.last().unwrap().name, "E4");
        assert!(notes.windows(2).all(|w| w[0].frequency < w[1].frequency));
        assert!(build_scale(0.0).is_err());
    }

    #[test]
    fn interval_examples() {
        let m2 = IntervalSpec::new(Quality::Minor2, 61.875).unwrap();
        assert_eq!(m2.f_upper, 66.0);
        let tt = IntervalSpec::new(Quality::Tritone, 61.875).unwrap();
        assert_eq!(tt.f_upper, 88.0);
        let p5 = IntervalSpec::new(Quality::Perfect5, 55.0).unwrap();
        assert_eq!(p5.f_upper, 82.5);
    }

    #[test]
    fn ratios_are_reduced_and_exact() {
        for q in Quality::ALL {
            let r = q.ratio();
            assert_eq!(gcd(r.num(), r.den()), 1, "{q}");
            assert_eq!(Ratio::new(r.num() * 7, r.den() * 7).unwrap(), r);
            // f_lower = 45 * 15 * ... makes every product an exact integer
            let base = (45 * 8 * 9 * 5) as f64;
            let spec = IntervalSpec::new(q, base).unwrap();
            assert_eq!(spec.f_upper * r.den() as f64, base * r.num() as f64);
        }
    }

    #[test]
    fn octave_matches_unison_an_octave_up() {
        for base in DEFAULT_BASE_FREQS {
            let oct = IntervalSpec::new(Quality::Octave, base).unwrap();
            let uni = IntervalSpec::new(Quality::Unison, 2.0 * base).unwrap();
            assert_eq!(oct.f_upper, uni.f_upper);
        }
    }

    #[test]
    fn set_cardinality() {
        let set = interval_set(&DEFAULT_BASE_FREQS).unwrap();
        assert_eq!(set.len(), 39);
        assert!(interval_set(&[-1.0]).is_err());
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(Ratio::parse("6/4").unwrap(), Ratio::new(3, 2).unwrap());
        assert_eq!(Ratio::parse("2").unwrap().value(), 2.0);
        assert!(Ratio::parse("1.5").is_err());
        assert!(Ratio::parse("0/3").is_err());
        assert_eq!("tritone".parse::<Quality>().unwrap(), Quality::Tritone);
    }
}
