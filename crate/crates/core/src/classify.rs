//! Readouts: reciprocal peak-count consonance curve and the phase portrait
//! of consecutive normalized peak spacings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsp::PeakList;
use crate::error::{Error, Result};
use crate::score::{Quality, Ratio};

/// Generations averaged by the consonance score.
pub const SCORED_GENERATIONS: std::ops::RangeInclusive<usize> = 1..=9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCountRow {
    pub quality: Quality,
    pub base_hz: f64,
    pub generation: usize,
    pub peak_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakCountTable {
    pub rows: Vec<PeakCountRow>,
}

impl PeakCountTable {
    pub fn push_run(&mut self, quality: Quality, base_hz: f64, lists: &[PeakList]) {
        for pl in lists {
            self.rows.push(PeakCountRow {
                quality,
                base_hz,
                generation: pl.generation,
                peak_count: pl.len(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseScore {
    pub base_hz: f64,
    /// 1/peak_count for generations 1..=9 (0 for a window without peaks).
    pub per_generation: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub quality: Quality,
    pub ratio: Ratio,
    /// Mean of the per-base scores.
    pub mean: f64,
    pub bases: Vec<BaseScore>,
}

fn reciprocal(count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        1.0 / count as f64
    }
}

pub fn consonance_curve(table: &PeakCountTable) -> Result<Vec<CurveRow>> {
    // (quality, base bits) -> generation -> count; BTreeMap keeps the output
    // independent of row order
    let mut runs: BTreeMap<(Quality, u64), BTreeMap<usize, usize>> = BTreeMap::new();
    for row in &table.rows {
        let gens = runs
            .entry((row.quality, row.base_hz.to_bits()))
            .or_default();
        if gens.insert(row.generation, row.peak_count).is_some() {
            return Err(Error::domain(format!(
                "duplicate row for {} at {} Hz, generation {}",
                row.quality.name(),
                row.base_hz,
                row.generation
            )));
        }
    }
    let mut by_quality: BTreeMap<Quality, Vec<BaseScore>> = BTreeMap::new();
    for ((quality, bits), gens) in runs {
        let base_hz = f64::from_bits(bits);
        let per_generation = SCORED_GENERATIONS
            .map(|g| {
                gens.get(&g).map(|&c| reciprocal(c)).ok_or_else(|| {
                    Error::domain(format!(
                        "{} at {base_hz} Hz is missing generation {g}",
                        quality.name()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let score = per_generation.iter().sum::<f64>() / per_generation.len() as f64;
        by_quality.entry(quality).or_default().push(BaseScore {
            base_hz,
            per_generation,
            score,
        });
    }
    let mut rows: Vec<CurveRow> = by_quality
        .into_iter()
        .map(|(quality, mut bases)| {
            bases.sort_by(|a, b| a.base_hz.total_cmp(&b.base_hz));
            let mean = bases.iter().map(|b| b.score).sum::<f64>() / bases.len() as f64;
            CurveRow {
                quality,
                ratio: quality.ratio(),
                mean,
                bases,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.ratio.value().total_cmp(&b.ratio.value()));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub generation: usize,
    pub d: [f64; 3],
}

/// Consecutive differences of normalized peak frequencies, three at a time,
/// pooled over all generations.
pub fn phase_points(lists: &[PeakList]) -> Vec<PhasePoint> {
    let mut out = Vec::new();
    for pl in lists {
        let f: Vec<f64> = pl.peaks.iter().map(|p| p.normalized).collect();
        for w in f.windows(4) {
            out.push(PhasePoint {
                generation: pl.generation,
                d: [w[1] - w[0], w[2] - w[1], w[3] - w[2]],
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSet {
    Absolute,
    Fifth,
    Fourth,
}

const THIRD: f64 = 1.0 / 3.0;
const TWO_THIRDS: f64 = 2.0 / 3.0;

impl AnchorSet {
    pub const ALL: [AnchorSet; 3] = [AnchorSet::Absolute, AnchorSet::Fifth, AnchorSet::Fourth];

    pub fn anchors(self) -> &'static [[f64; 3]] {
        match self {
            AnchorSet::Absolute => &[[1.0, 1.0, 1.0]],
            AnchorSet::Fifth => &[[0.5, 0.5, 0.5]],
            AnchorSet::Fourth => &[
                [THIRD, THIRD, THIRD],
                [THIRD, THIRD, TWO_THIRDS],
                [THIRD, TWO_THIRDS, THIRD],
                [THIRD, TWO_THIRDS, TWO_THIRDS],
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnchorSet::Absolute => "absolute",
            AnchorSet::Fifth => "fifth",
            AnchorSet::Fourth => "fourth",
        }
    }

    /// Anchor set a quality is expected to cluster on, if any.
    pub fn for_quality(q: Quality) -> Option<AnchorSet> {
        match q {
            Quality::Unison | Quality::Octave => Some(AnchorSet::Absolute),
            Quality::Perfect5 => Some(AnchorSet::Fifth),
            Quality::Perfect4 => Some(AnchorSet::Fourth),
            _ => None,
        }
    }

    pub fn distance(self, p: [f64; 3]) -> f64 {
        self.anchors()
            .iter()
            .map(|a| dist(*a, p))
            .fold(f64::INFINITY, f64::min)
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Nearest anchor set within `eps` of `p`.
pub fn assign(p: [f64; 3], eps: f64) -> Option<AnchorSet> {
    AnchorSet::ALL
        .iter()
        .map(|&s| (s, s.distance(p)))
        .filter(|&(_, d)| d <= eps)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyThresholds {
    pub eps: f64,
    pub absolute_fraction: f64,
    pub perfect_fraction: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            eps: 0.1,
            absolute_fraction: 0.9,
            perfect_fraction: 0.75,
        }
    }
}

impl ClassifyThresholds {
    pub fn problems(&self, scope: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            out.push(format!("{scope}.eps must be positive"));
        }
        for (name, v) in [
            ("absolute_fraction", self.absolute_fraction),
            ("perfect_fraction", self.perfect_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{scope}.{name} must lie in [0, 1]"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub points: usize,
    pub centroid: [f64; 3],
    pub dispersion: f64,
    /// Distance of each point to the nearest anchor of any set.
    pub anchor_distances: Vec<f64>,
    /// Fraction of points within eps of each anchor set (sets may overlap).
    pub fraction_within_eps: BTreeMap<AnchorSet, f64>,
    /// Fraction of points whose nearest in-range anchor belongs to each set.
    pub assigned_fraction: BTreeMap<AnchorSet, f64>,
}

pub fn cluster_report(points: &[PhasePoint], eps: f64) -> Result<ClusterStats> {
    if points.is_empty() {
        return Err(Error::domain("cluster report needs at least one point"));
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for k in 0..3 {
            centroid[k] += p.d[k] / n;
        }
    }
    let dispersion = points.iter().map(|p| dist(p.d, centroid)).sum::<f64>() / n;
    let anchor_distances = points
        .iter()
        .map(|p| {
            AnchorSet::ALL
                .iter()
                .map(|s| s.distance(p.d))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut within = BTreeMap::new();
    let mut assigned = BTreeMap::new();
    for s in AnchorSet::ALL {
        let w = points.iter().filter(|p| s.distance(p.d) <= eps).count();
        let a = points
            .iter()
            .filter(|p| assign(p.d, eps) == Some(s))
            .count();
        within.insert(s, w as f64 / n);
        assigned.insert(s, a as f64 / n);
    }
    Ok(ClusterStats {
        points: points.len(),
        centroid,
        dispersion,
        anchor_distances,
        fraction_within_eps: within,
        assigned_fraction: assigned,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalClass {
    Absolute,
    Perfect,
    Dissonant,
}

impl IntervalClass {
    pub fn name(self) -> &'static str {
        match self {
            IntervalClass::Absolute => "absolute",
            IntervalClass::Perfect => "perfect",
            IntervalClass::Dissonant => "dissonant",
        }
    }
}

pub fn classify_interval(points: &[PhasePoint], th: &ClassifyThresholds) -> IntervalClass {
    if points.is_empty() {
        return IntervalClass::Dissonant;
    }
    let n = points.len() as f64;
    let count = |pred: &dyn Fn(AnchorSet) -> bool| {
        points
            .iter()
            .filter(|p| assign(p.d, th.eps).is_some_and(pred))
            .count() as f64
            / n
    };
    if count(&|s| s == AnchorSet::Absolute) >= th.absolute_fraction {
        IntervalClass::Absolute
    } else if count(&|s| s != AnchorSet::Absolute) >= th.perfect_fraction {
        IntervalClass::Perfect
    } else {
        IntervalClass::Dissonant
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Peak;

    fn list(generation: usize, normalized: &[f64]) -> PeakList {
        PeakList {
            generation,
            peaks: normalized
                .iter()
                .map(|&n| Peak {
                    frequency: n * 55.0,
                    normalized: n,
                    magnitude: 1.0,
                })
                .collect(),
        }
    }

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        dist(a, b) < 1e-12
    }

    #[test]
    fn phase_point_examples() {
        let pts = phase_points(&[list(1, &[1.0, 2.0, 3.0, 4.0, 5.0])]);
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| close(p.d, [1.0; 3])));

        let pts = phase_points(&[list(1, &[0.5, 1.0, 1.5, 2.0, 2.5])]);
        assert!(pts.iter().all(|p| close(p.d, [0.5; 3])));

        let pts = phase_points(&[list(2, &[THIRD, TWO_THIRDS, 1.0, 4.0 / 3.0, 2.0])]);
        assert!(close(pts[0].d, [THIRD; 3]));
        assert!(close(pts[1].d, [THIRD, THIRD, TWO_THIRDS]));

        let pts = phase_points(&[list(0, &[1.0, 1.5]), list(1, &[1.0, 2.0, 3.0])]);
        assert!(pts.is_empty());
    }

    fn table(counts: &[(Quality, f64, [usize; 10])]) -> PeakCountTable {
        let mut t = PeakCountTable::default();
        for &(q, b, c) in counts {
            for (g, &k) in c.iter().enumerate() {
                t.rows.push(PeakCountRow {
                    quality: q,
                    base_hz: b,
                    generation: g,
                    peak_count: k,
                });
            }
        }
        t
    }

    #[test]
    fn curve_scores_and_order() {
        let t = table(&[
            (
                Quality::Minor2,
                66.0,
                [2, 10, 10, 10, 10, 10, 10, 10, 10, 10],
            ),
            (Quality::Unison, 66.0, [1, 3, 3, 3, 3, 3, 3, 3, 3, 3]),
            (Quality::Unison, 61.875, [1, 3, 3, 3, 3, 3, 3, 3, 3, 6]),
        ]);
        let c = consonance_curve(&t).unwrap();
        assert_eq!(c[0].quality, Quality::Unison);
        assert_eq!(c[1].quality, Quality::Minor2);
        assert_eq!(c[0].bases[0].base_hz, 61.875);
        assert!((c[0].bases[1].score - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[1].mean - 0.1).abs() < 1e-15);

        let mut rev = t.clone();
        rev.rows.reverse();
        assert_eq!(consonance_curve(&rev).unwrap(), c);
    }

    #[test]
    fn curve_rejects_missing_generation() {
        let mut t = table(&[(Quality::Octave, 66.0, [1; 10])]);
        t.rows.retain(|r| r.generation != 5);
        assert!(consonance_curve(&t).is_err());
    }

    fn pts(ds: &[[f64; 3]]) -> Vec<PhasePoint> {
        ds.iter()
            .map(|&d| PhasePoint { generation: 1, d })
            .collect()
    }

    #[test]
    fn classification() {
        let th = ClassifyThresholds::default();
        assert_eq!(
            classify_interval(&pts(&[[1.0; 3]; 5]), &th),
            IntervalClass::Absolute
        );
        let fourth = pts(&[
            [THIRD, THIRD, THIRD],
            [THIRD, TWO_THIRDS, THIRD],
            [0.35, 0.66, 0.68],
        ]);
        assert_eq!(classify_interval(&fourth, &th), IntervalClass::Perfect);
        let rough = pts(&[[0.05, 0.02, 0.9], [0.06, 0.07, 0.01], [1.0; 3]]);
        assert_eq!(classify_interval(&rough, &th), IntervalClass::Dissonant);
        assert_eq!(classify_interval(&[], &th), IntervalClass::Dissonant);
    }

    #[test]
    fn report_statistics() {
        let r = cluster_report(&pts(&[[0.5; 3], [0.5, 0.5, 0.6]]), 0.1).unwrap();
        assert_eq!(r.points, 2);
        assert!(close(r.centroid, [0.5, 0.5, 0.55]));
        assert!((r.dispersion - 0.05).abs() < 1e-12);
        assert_eq!(r.fraction_within_eps[&AnchorSet::Fifth], 1.0);
        assert_eq!(r.fraction_within_eps[&AnchorSet::Absolute], 0.0);
        assert!((r.anchor_distances[1] - 0.1).abs() < 1e-12);
        assert!(cluster_report(&[], 0.1).is_err());
    }

    #[test]
    fn nearest_anchor_wins() {
        // within 0.1 of both (1/2,1/2,1/2) and (1/3,2/3,2/3)
        let p = [0.4192, 0.5808, 0.5808];
        assert!(AnchorSet::Fifth.distance(p) <= 0.15);
        assert!(AnchorSet::Fourth.distance(p) <= 0.15);
        assert_eq!(assign(p, 0.15), Some(AnchorSet::Fifth));
        assert_eq!(assign([0.414, 0.586, 0.586], 0.15), Some(AnchorSet::Fourth));
        assert_eq!(assign([3.0; 3], 0.15), None);
    }
}
