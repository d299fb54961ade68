//! Rectangle-window magnitude spectra, decimation to the analysis rate and
//! local-maximum peak picking.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate of every analysed window, Hz.
pub const ANALYSIS_RATE: f64 = 8192.0;
/// Samples per generation window at the analysis rate (2 s).
pub const WINDOW_LEN: usize = 16384;
/// Pass-band edge of the anti-alias guard applied before decimation, Hz.
pub const GUARD_CUTOFF: f64 = 3000.0;
pub const DEFAULT_MIN_BASE_WIDTH: usize = 4;
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-3;

/// One-sided magnitude spectrum, bins `0..=N/2`, unnormalized DFT scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub bin_width: f64,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    pub fn nearest_bin(&self, freq: f64) -> usize {
        (freq / self.bin_width).round() as usize
    }

    pub fn magnitude_at(&self, freq: f64) -> Option<f64> {
        self.magnitudes.get(self.nearest_bin(freq)).copied()
    }

    pub fn nyquist(&self) -> f64 {
        self.frequency(self.magnitudes.len().saturating_sub(1))
    }
}

/// FFT plan bound to a fixed window length and sample rate.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    len: usize,
    sample_rate: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer")
            .field("len", &self.len)
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

impl Default for SpectrumAnalyzer {
    fn default() -> Self {
        Self::new(WINDOW_LEN, ANALYSIS_RATE)
    }
}

impl SpectrumAnalyzer {
    pub fn new(len: usize, sample_rate: f64) -> Self {
        assert!(len >= 2, "window length must be at least 2");
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self {
            len,
            sample_rate,
            fft,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn magnitude_spectrum(&self, window: &[f64]) -> Result<Spectrum> {
        if window.len() != self.len {
            return Err(Error::domain(format!(
                "window has {} samples, expected {}",
                window.len(),
                self.len
            )));
        }
        let mut buf: Vec<Complex<f64>> = window.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        let magnitudes = buf[..=self.len / 2].iter().map(|c| c.norm()).collect();
        Ok(Spectrum {
            bin_width: self.sample_rate / self.len as f64,
            magnitudes,
        })
    }
}

/// Spectrum of a default-length window at the analysis rate.
pub fn magnitude_spectrum(window: &[f64]) -> Result<Spectrum> {
    SpectrumAnalyzer::default().magnitude_spectrum(window)
}

/// Symmetric Blackman-windowed sinc low-pass, unit DC gain.
fn lowpass_taps(cutoff: f64, sample_rate: f64, half_len: usize) -> Vec<f64> {
    let n = 2 * half_len + 1;
    let fc = cutoff / sample_rate;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let k = i as f64 - half_len as f64;
            let sinc = if k == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * k).sin() / (PI * k)
            };
            let w = 0.42 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()
                + 0.08 * (4.0 * PI * i as f64 / (n - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Low-passes `signal` with a centred (zero-phase) FIR guard and keeps every
/// `factor`-th sample, starting with sample 0. Samples beyond the record are
/// treated as zero.
pub fn decimate(signal: &[f64], factor: usize, sample_rate: f64) -> Vec<f64> {
    assert!(factor >= 1, "decimation factor must be positive");
    if factor == 1 {
        return signal.to_vec();
    }
    let cutoff = GUARD_CUTOFF.min(0.35 * sample_rate / factor as f64);
    let half = 32 * factor;
    let taps = lowpass_taps(cutoff, sample_rate, half);
    let out_len = signal.len().div_ceil(factor);
    (0..out_len)
        .map(|m| {
            let centre = (m * factor) as isize;
            let start = centre - half as isize;
            let lo = (-start).max(0) as usize;
            let hi = (signal.len() as isize - start)
                .min(taps.len() as isize)
                .max(0) as usize;
            let mut acc = 0.0;
            for k in lo..hi {
                acc += taps[k] * signal[(start + k as isize) as usize];
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub normalized: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakList {
    pub generation: usize,
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakCriteria {
    /// Minimum number of bins from base to base of a peak.
    pub min_base_width: usize,
    /// Magnitude floor relative to the spectrum maximum.
    pub rel_threshold: f64,
}

impl Default for PeakCriteria {
    fn default() -> Self {
        Self {
            min_base_width: DEFAULT_MIN_BASE_WIDTH,
            rel_threshold: DEFAULT_REL_THRESHOLD,
        }
    }
}

/// Local maxima of the interior bins whose monotone rise-fall support spans
/// at least `min_base_width` bins and whose magnitude reaches
/// `rel_threshold` of the spectrum maximum. Flat tops report their centre
/// bin. The returned peaks carry `normalized = 1` until
/// [`normalize_peaks`] is applied.
pub fn detect_peaks(sp: &Spectrum, criteria: PeakCriteria) -> PeakList {
    let m = &sp.magnitudes;
    let n = m.len();
    let max = m.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if n < 3 || !(max > 0.0) {
        return PeakList {
            generation: 0,
            peaks,
        };
    }
    let floor = criteria.rel_threshold * max;
    let mut i = 1;
    while i < n - 1 {
        if m[i] > m[i - 1] {
            let mut plateau_end = i;
            while plateau_end + 1 < n - 1 && m[plateau_end + 1] == m[i] {
                plateau_end += 1;
            }
            if m[plateau_end + 1] < m[i] {
                let mut left = i;
                while left > 0 && m[left - 1] < m[left] {
                    left -= 1;
                }
                let mut right = plateau_end;
                while right + 1 < n && m[right + 1] < m[right] {
                    right += 1;
                }
                let width = right - left + 1;
                if width >= criteria.min_base_width && m[i] >= floor && m[i] > 0.0 {
                    let apex = (i + plateau_end) / 2;
                    peaks.push(Peak {
                        frequency: sp.frequency(apex),
                        normalized: 1.0,
                        magnitude: m[apex],
                    });
                }
            }
            i = plateau_end + 1;
        } else {
            i += 1;
        }
    }
    PeakList {
        generation: 0,
        peaks,
    }
}

/// Expresses peak frequencies as multiples of `f0`.
pub fn normalize_peaks(mut pl: PeakList, f0: f64) -> Result<PeakList> {
    if !(f0 > 0.0) {
        return Err(Error::domain("normalizing frequency must be positive"));
    }
    for p in &mut pl.peaks {
        p.normalized = p.frequency / f0;
    }
    Ok(pl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(mags: &[f64]) -> Spectrum {
        Spectrum {
            bin_width: 1.0,
            magnitudes: mags.to_vec(),
        }
    }

    #[test]
    fn zero_window_gives_zero_spectrum() {
        let sp = magnitude_spectrum(&vec![0.0; WINDOW_LEN]).unwrap();
        assert_eq!(sp.magnitudes.len(), WINDOW_LEN / 2 + 1);
        assert!(sp.magnitudes.iter().all(|&m| m == 0.0));
        assert_eq!(sp.bin_width, 0.5);
        assert!(detect_peaks(&sp, PeakCriteria::default()).is_empty());
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(
            magnitude_spectrum(&[0.0; 100]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn on_bin_sine_has_half_length_magnitude() {
        let x: Vec<f64> = (0..WINDOW_LEN)
            .map(|n| (2.0 * PI * 55.0 * n as f64 / ANALYSIS_RATE).sin())
            .collect();
        let sp = magnitude_spectrum(&x).unwrap();
        let bin = sp.nearest_bin(55.0);
        assert_eq!(bin, 110);
        assert!((sp.magnitudes[bin] - WINDOW_LEN as f64 / 2.0).abs() < 1e-6);
        let others = sp
            .magnitudes
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != bin)
            .map(|(_, &m)| m)
            .fold(0.0, f64::max);
        assert!(others < 1e-6);
    }

    #[test]
    fn triangular_bump_is_one_peak() {
        let sp = spectrum(&[0.0, 0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0, 0.0]);
        let pl = detect_peaks(&sp, PeakCriteria::default());
        assert_eq!(pl.len(), 1);
        assert_eq!(pl.peaks[0].frequency, 4.0);
    }

    #[test]
    fn narrow_bump_rejected_by_base_width() {
        // support 0..2 is three bins
        let sp = spectrum(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(detect_peaks(&sp, PeakCriteria::default()).is_empty());
        let loose = PeakCriteria {
            min_base_width: 3,
            ..Default::default()
        };
        assert_eq!(detect_peaks(&sp, loose).len(), 1);
    }

    #[test]
    fn plateau_reports_centre() {
        let sp = spectrum(&[0.0, 1.0, 3.0, 3.0, 3.0, 1.0, 0.0]);
        let pl = detect_peaks(&sp, PeakCriteria::default());
        assert_eq!(pl.len(), 1);
        assert_eq!(pl.peaks[0].frequency, 3.0);
    }

    #[test]
    fn threshold_drops_small_peaks() {
        let sp = spectrum(&[0.0, 1.0, 10.0, 1.0, 0.0, 0.001, 0.002, 0.001, 0.0, 0.0]);
        assert_eq!(detect_peaks(&sp, PeakCriteria::default()).len(), 1);
        let loose = PeakCriteria {
            rel_threshold: 1e-5,
            ..Default::default()
        };
        assert_eq!(detect_peaks(&sp, loose).len(), 2);
    }

    #[test]
    fn edges_are_not_peaks() {
        let sp = spectrum(&[5.0, 4.0, 3.0, 2.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(detect_peaks(&sp, PeakCriteria::default()).is_empty());
    }

    #[test]
    fn normalization() {
        let pl = PeakList {
            generation: 3,
            peaks: [55.0, 110.0, 165.0]
                .iter()
                .map(|&f| Peak {
                    frequency: f,
                    normalized: 1.0,
                    magnitude: 1.0,
                })
                .collect(),
        };
        let out = normalize_peaks(pl, 55.0).unwrap();
        let n: Vec<f64> = out.peaks.iter().map(|p| p.normalized).collect();
        assert_eq!(n, vec![1.0, 2.0, 3.0]);
        assert_eq!(out.generation, 3);
        assert!(normalize_peaks(PeakList::default(), 55.0)
            .unwrap()
            .is_empty());
        assert!(normalize_peaks(PeakList::default(), 0.0).is_err());
    }

    #[test]
    fn decimation_keeps_passband_and_rejects_stopband() {
        let fs = 65536.0;
        let n = 65536;
        let tone = |f: f64| -> Vec<f64> {
            (0..n)
                .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
                .collect()
        };
        let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let pass = decimate(&tone(440.0), 8, fs);
        assert_eq!(pass.len(), n / 8);
        let inner = &pass[200..pass.len() - 200];
        assert!((rms(inner) - 0.5f64.sqrt()).abs() < 1e-4, "{}", rms(inner));
        let stop = decimate(&tone(6000.0), 8, fs);
        assert!(rms(&stop[200..stop.len() - 200]) < 1e-3);
    }
}
