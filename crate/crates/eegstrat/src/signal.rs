//! Windowing, discrete spectral analysis, and NeuroSky-compatible band
//! features for single-channel EEG.
//!
//! Windows are 8 seconds at 256 Hz (2048 samples), giving a bin resolution of
//! 0.125 Hz. The one-sided power spectrum is normalized so that summing it
//! over a tiling of `[0, Nyquist]` recovers the window's variance (Parseval).

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SAMPLE_RATE: f64 = 256.0;
pub const WINDOW_LEN: usize = 2048;
pub const NYQUIST: f64 = SAMPLE_RATE / 2.0;

/// One 8-second, 256 Hz, single-channel segment with an optional
/// seizure/non-seizure label.
#[derive(Clone, Debug, PartialEq)]
pub struct RawWindow {
    samples: Vec<f64>,
    label: Option<u8>,
}

impl RawWindow {
    pub fn new(samples: Vec<f64>, label: Option<u8>) -> Result<Self> {
        if samples.len() != WINDOW_LEN {
            return Err(Error::Invalid(format!(
                "raw window must have {} samples, got {}",
                WINDOW_LEN,
                samples.len()
            )));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(l) = label {
            if l > 1 {
                return Err(Error::Invalid(format!("label must be 0 or 1, got {l}")));
            }
        }
        Ok(Self { samples, label })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn label(&self) -> Option<u8> {
        self.label
    }
}

/// The eight NeuroSky band names.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandName {
    Delta,
    Theta,
    LowAlpha,
    HighAlpha,
    LowBeta,
    HighBeta,
    LowGamma,
    MidGamma,
}

impl BandName {
    pub const ALL: [BandName; 8] = [
        BandName::Delta,
        BandName::Theta,
        BandName::LowAlpha,
        BandName::HighAlpha,
        BandName::LowBeta,
        BandName::HighBeta,
        BandName::LowGamma,
        BandName::MidGamma,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::LowAlpha => "low_alpha",
            BandName::HighAlpha => "high_alpha",
            BandName::LowBeta => "low_beta",
            BandName::HighBeta => "high_beta",
            BandName::LowGamma => "low_gamma",
            BandName::MidGamma => "mid_gamma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        BandName::ALL
            .iter()
            .copied()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown band name: {s}")))
    }
}

/// A frequency interval `[lo, hi)` in Hz (upper edge inclusive only at the
/// Nyquist frequency).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: BandName,
    pub lo: f64,
    pub hi: f64,
}

impl BandDefinition {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= 0.0 && self.lo < self.hi && self.hi <= NYQUIST) {
            return Err(Error::Invalid(format!(
                "band {}: need 0 <= lo < hi <= {}, got [{}, {})",
                self.name.as_str(),
                NYQUIST,
                self.lo,
                self.hi
            )));
        }
        Ok(())
    }
}

/// The published NeuroSky band edges, in ascending order.
pub fn default_bands() -> [BandDefinition; 8] {
    let edges = [
        (BandName::Delta, 0.5, 2.75),
        (BandName::Theta, 3.5, 6.75),
        (BandName::LowAlpha, 7.5, 9.25),
        (BandName::HighAlpha, 10.0, 11.75),
        (BandName::LowBeta, 13.0, 16.75),
        (BandName::HighBeta, 18.0, 29.75),
        (BandName::LowGamma, 31.0, 39.75),
        (BandName::MidGamma, 41.0, 49.75),
    ];
    edges.map(|(name, lo, hi)| BandDefinition { name, lo, hi })
}

/// Checks an 8-band set: each name exactly once, valid edges, pairwise
/// non-overlapping, sorted by `lo`.
pub fn validate_band_set(bands: &[BandDefinition]) -> Result<()> {
    if bands.len() != 8 {
        return Err(Error::Invalid(format!(
            "band set must have 8 bands, got {}",
            bands.len()
        )));
    }
    for name in BandName::ALL {
        if bands.iter().filter(|b| b.name == name).count() != 1 {
            return Err(Error::Invalid(format!(
                "band set must contain {} exactly once",
                name.as_str()
            )));
        }
    }
    for b in bands {
        b.validate()?;
    }
    for pair in bands.windows(2) {
        if pair[1].lo < pair[0].hi {
            return Err(Error::Invalid(format!(
                "bands {} and {} overlap or are unsorted",
                pair[0].name.as_str(),
                pair[1].name.as_str()
            )));
        }
    }
    Ok(())
}

/// The 10-component per-window feature: 8 band powers plus attention and
/// meditation proxies in `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandVector {
    pub delta: f64,
    pub theta: f64,
    pub low_alpha: f64,
    pub high_alpha: f64,
    pub low_beta: f64,
    pub high_beta: f64,
    pub low_gamma: f64,
    pub mid_gamma: f64,
    pub attention: f64,
    pub meditation: f64,
}

impl BandVector {
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.delta,
            self.theta,
            self.low_alpha,
            self.high_alpha,
            self.low_beta,
            self.high_beta,
            self.low_gamma,
            self.mid_gamma,
            self.attention,
            self.meditation,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Result<Self> {
        if let Some(index) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        for (i, &v) in a[..8].iter().enumerate() {
            if v < 0.0 {
                return Err(Error::Invalid(format!(
                    "band power {} is negative: {v}",
                    BandName::ALL[i].as_str()
                )));
            }
        }
        for (label, v) in [("attention", a[8]), ("meditation", a[9])] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Invalid(format!("{label} must be in [0, 100], got {v}")));
            }
        }
        Ok(Self {
            delta: a[0],
            theta: a[1],
            low_alpha: a[2],
            high_alpha: a[3],
            low_beta: a[4],
            high_beta: a[5],
            low_gamma: a[6],
            mid_gamma: a[7],
            attention: a[8],
            meditation: a[9],
        })
    }

    pub const FIELD_NAMES: [&'static str; 10] = [
        "delta",
        "theta",
        "low_alpha",
        "high_alpha",
        "low_beta",
        "high_beta",
        "low_gamma",
        "mid_gamma",
        "attention",
        "meditation",
    ];
}

/// Contiguous segments of length `window_len` every `hop` samples.
/// A signal shorter than `window_len` yields no segments.
pub fn segment_windows(signal: &[f64], window_len: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if window_len == 0 || hop == 0 {
        return Err(Error::Invalid(
            "window_len and hop must be positive".into(),
        ));
    }
    if let Some(index) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut out = Vec::new();
    if signal.len() < window_len {
        return Ok(out);
    }
    let mut start = 0;
    while start + window_len <= signal.len() {
        out.push(signal[start..start + window_len].to_vec());
        start += hop;
    }
    Ok(out)
}

/// One-sided power spectrum of a mean-removed window.
///
/// Bin `k` covers frequency `k * fs / T`. Interior bins carry the doubled
/// two-sided power, so a tiling of `[0, Nyquist]` sums to the variance.
///
/// ```
/// use eegstrat::signal::{power_spectrum, RawWindow, SAMPLE_RATE, WINDOW_LEN};
///
/// // A unit 10 Hz tone lands in bin 80 (10 Hz * 2048 / 256 Hz) with its
/// // full variance of 0.5.
/// let samples: Vec<f64> = (0..WINDOW_LEN)
///     .map(|n| (2.0 * std::f64::consts::PI * 10.0 * n as f64 / SAMPLE_RATE).sin())
///     .collect();
/// let spectrum = power_spectrum(&RawWindow::new(samples, None)?);
/// assert!((spectrum[80] - 0.5).abs() < 1e-9);
/// # Ok::<(), eegstrat::Error>(())
/// ```
pub fn power_spectrum(window: &RawWindow) -> Vec<f64> {
    let t = window.samples().len();
    let mean = window.samples().iter().sum::<f64>() / t as f64;
    let mut buf: Vec<Complex<f64>> = window
        .samples()
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(t).process(&mut buf);
    let t2 = (t * t) as f64;
    (0..=t / 2)
        .map(|k| {
            let factor = if k == 0 || k == t / 2 { 1.0 } else { 2.0 };
            factor * buf[k].norm_sqr() / t2
        })
        .collect()
}

/// Total power inside a band: bins with `lo <= f < hi`, the upper edge being
/// inclusive only when `hi` is the Nyquist frequency.
pub fn band_power(spectrum: &[f64], band: &BandDefinition) -> Result<f64> {
    band.validate()?;
    let t = (spectrum.len() - 1) * 2;
    let df = SAMPLE_RATE / t as f64;
    let include_hi = band.hi >= NYQUIST;
    let mut total = 0.0;
    for (k, &p) in spectrum.iter().enumerate() {
        let f = k as f64 * df;
        if f >= band.lo && (f < band.hi || (include_hi && f <= band.hi)) {
            total += p;
        }
    }
    Ok(total)
}

/// Full 10-component feature vector for one window.
///
/// Attention is `100·β/(β+α+θ)` and meditation `100·α/(α+β+θ)` with
/// `α = low+high alpha`, `β = low+high beta`, `θ = theta`; both fall back to
/// the neutral 50 when the denominator is zero.
pub fn band_feature_vector(window: &RawWindow, bands: &[BandDefinition]) -> Result<BandVector> {
    validate_band_set(bands)?;
    let spectrum = power_spectrum(window);
    let power_of = |name: BandName| -> Result<f64> {
        let band = bands.iter().find(|b| b.name == name).expect("validated set");
        band_power(&spectrum, band)
    };
    let delta = power_of(BandName::Delta)?;
    let theta = power_of(BandName::Theta)?;
    let low_alpha = power_of(BandName::LowAlpha)?;
    let high_alpha = power_of(BandName::HighAlpha)?;
    let low_beta = power_of(BandName::LowBeta)?;
    let high_beta = power_of(BandName::HighBeta)?;
    let low_gamma = power_of(BandName::LowGamma)?;
    let mid_gamma = power_of(BandName::MidGamma)?;
    let alpha = low_alpha + high_alpha;
    let beta = low_beta + high_beta;
    let denom = alpha + beta + theta;
    let (attention, meditation) = if denom == 0.0 {
        (50.0, 50.0)
    } else {
        (
            (100.0 * beta / denom).clamp(0.0, 100.0),
            (100.0 * alpha / denom).clamp(0.0, 100.0),
        )
    };
    Ok(BandVector {
        delta,
        theta,
        low_alpha,
        high_alpha,
        low_beta,
        high_beta,
        low_gamma,
        mid_gamma,
        attention,
        meditation,
    })
}

/// Parses a band-edge config: one `name = lo,hi` line per band, `#` comments.
pub fn parse_band_config(text: &str) -> Result<Vec<BandDefinition>> {
    let mut bands = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            location: format!("line {}", lineno + 1),
            message,
        };
        let (name, edges) = line
            .split_once('=')
            .ok_or_else(|| err("expected 'name = lo,hi'".into()))?;
        let name = BandName::parse(name.trim())?;
        let (lo, hi) = edges
            .split_once(',')
            .ok_or_else(|| err("expected 'lo,hi'".into()))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|e| err(format!("bad lo: {e}")))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|e| err(format!("bad hi: {e}")))?;
        bands.push(BandDefinition { name, lo, hi });
    }
    validate_band_set(&bands)?;
    Ok(bands)
}

/// Inverse of [`parse_band_config`]; output is byte-stable.
pub fn format_band_config(bands: &[BandDefinition]) -> String {
    let mut out = String::new();
    for b in bands {
        out.push_str(&format!("{} = {},{}\n", b.name.as_str(), b.lo, b.hi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    pub fn tone(freq: f64, amplitude: f64) -> RawWindow {
        let samples: Vec<f64> = (0..WINDOW_LEN)
            .map(|n| amplitude * (2.0 * PI * freq * n as f64 / SAMPLE_RATE).sin())
            .collect();
        RawWindow::new(samples, None).unwrap()
    }

    /// Four bands tiling [0, Nyquist]; last band's upper edge is inclusive.
    fn tiling_bands() -> Vec<BandDefinition> {
        [
            (BandName::Delta, 0.0, 32.0),
            (BandName::Theta, 32.0, 64.0),
            (BandName::LowAlpha, 64.0, 96.0),
            (BandName::HighAlpha, 96.0, 128.0),
        ]
        .map(|(name, lo, hi)| BandDefinition { name, lo, hi })
        .to_vec()
    }

    #[test]
    fn segment_counts() {
        let sig = vec![0.0; 2048];
        assert_eq!(segment_windows(&sig, 2048, 2048).unwrap().len(), 1);
        let sig = vec![0.0; 4096];
        let segs = segment_windows(&sig, 2048, 1024).unwrap();
        assert_eq!(segs.len(), 3);
        let sig = vec![0.0; 2047];
        assert_eq!(segment_windows(&sig, 2048, 1).unwrap().len(), 0);
    }

    #[test]
    fn segment_rejects_non_finite() {
        let mut sig = vec![0.0; 10];
        sig[4] = f64::INFINITY;
        match segment_windows(&sig, 2, 2).unwrap_err() {
            Error::NonFinite { index } => assert_eq!(index, 4),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn zero_and_constant_windows_have_zero_spectrum() {
        let zero = RawWindow::new(vec![0.0; WINDOW_LEN], None).unwrap();
        assert!(power_spectrum(&zero).iter().all(|&p| p == 0.0));
        let constant = RawWindow::new(vec![3.7; WINDOW_LEN], None).unwrap();
        for &p in &power_spectrum(&constant) {
            assert!(p.abs() < 1e-18);
        }
    }

    #[test]
    fn integer_bin_sinusoid_concentrates_in_its_bin() {
        // Closed form: a 10 Hz tone lands exactly in bin 80 at 0.125 Hz
        // resolution.
        let spectrum = power_spectrum(&tone(10.0, 1.0));
        let peak = spectrum[80];
        assert_relative_eq!(peak, 0.5, max_relative = 1e-9);
        for (k, &p) in spectrum.iter().enumerate() {
            if k != 80 {
                assert!(p < 1e-9 * peak, "bin {k} holds {p}");
            }
        }
    }

    #[test]
    fn band_power_examples() {
        let spectrum = power_spectrum(&tone(10.0, 1.0));
        let bands = default_bands();
        let low_alpha = band_power(&spectrum, &bands[2]).unwrap();
        assert!(low_alpha < 1e-9, "10 Hz tone leaked {low_alpha} into low_alpha");
        let high_alpha = band_power(&spectrum, &bands[3]).unwrap();
        assert_relative_eq!(high_alpha, 0.5, epsilon = 1e-6);
        let zero = vec![0.0; WINDOW_LEN / 2 + 1];
        assert_eq!(band_power(&zero, &bands[0]).unwrap(), 0.0);
    }

    #[test]
    fn band_power_rejects_bands_outside_nyquist() {
        let spectrum = vec![0.0; WINDOW_LEN / 2 + 1];
        let band = BandDefinition {
            name: BandName::Delta,
            lo: 100.0,
            hi: 200.0,
        };
        assert!(band_power(&spectrum, &band).is_err());
    }

    #[test]
    fn feature_vector_neutral_fallback() {
        let zero = RawWindow::new(vec![0.0; WINDOW_LEN], None).unwrap();
        let v = band_feature_vector(&zero, &default_bands()).unwrap();
        assert_eq!(v.as_array()[..8], [0.0; 8]);
        assert_eq!(v.attention, 50.0);
        assert_eq!(v.meditation, 50.0);
    }

    #[test]
    fn pure_beta_tone_has_full_attention() {
        // 20 Hz sits in high_beta [18, 29.75).
        let v = band_feature_vector(&tone(20.0, 1.0), &default_bands()).unwrap();
        assert_relative_eq!(v.attention, 100.0, epsilon = 1e-6);
        assert!(v.meditation < 1e-6);
    }

    #[test]
    fn equal_alpha_beta_theta_gives_thirds() {
        let mut samples = vec![0.0; WINDOW_LEN];
        for (s, n) in samples.iter_mut().zip(0..) {
            let t = n as f64 / SAMPLE_RATE;
            *s = (2.0 * PI * 8.5 * t).sin()
                + (2.0 * PI * 14.0 * t).sin()
                + (2.0 * PI * 5.0 * t).sin();
        }
        let w = RawWindow::new(samples, None).unwrap();
        let v = band_feature_vector(&w, &default_bands()).unwrap();
        assert_relative_eq!(v.attention, 100.0 / 3.0, epsilon = 1e-3);
        assert_relative_eq!(v.meditation, 100.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn feature_vector_is_deterministic() {
        let w = tone(12.5, 2.0);
        let a = band_feature_vector(&w, &default_bands()).unwrap();
        let b = band_feature_vector(&w, &default_bands()).unwrap();
        assert_eq!(a.as_array(), b.as_array());
    }

    #[test]
    fn band_config_round_trip() {
        let bands = default_bands();
        let text = format_band_config(&bands);
        let parsed = parse_band_config(&text).unwrap();
        assert_eq!(parsed.as_slice(), bands.as_slice());
        assert!(parse_band_config("delta = 1").is_err());
        assert!(parse_band_config("sleep = 1,2").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn parseval_tiling_matches_variance(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..WINDOW_LEN).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mean = samples.iter().sum::<f64>() / WINDOW_LEN as f64;
            let variance = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / WINDOW_LEN as f64;
            let w = RawWindow::new(samples, None).unwrap();
            let spectrum = power_spectrum(&w);
            let total: f64 = tiling_bands()
                .iter()
                .map(|b| band_power(&spectrum, b).unwrap())
                .sum();
            prop_assert!((total - variance).abs() <= 1e-6 * variance.max(1e-12));
        }

        #[test]
        fn band_powers_ignore_constant_offset(seed in 0u64..1000, offset in -50.0f64..50.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..WINDOW_LEN).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shifted: Vec<f64> = samples.iter().map(|v| v + offset).collect();
            let a = power_spectrum(&RawWindow::new(samples, None).unwrap());
            let b = power_spectrum(&RawWindow::new(shifted, None).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-9));
            }
        }

        #[test]
        fn scaling_squares_powers_and_keeps_proxies(seed in 0u64..1000, c in 0.5f64..4.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..WINDOW_LEN).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = samples.iter().map(|v| v * c).collect();
            let bands = default_bands();
            let a = band_feature_vector(&RawWindow::new(samples, None).unwrap(), &bands).unwrap();
            let b = band_feature_vector(&RawWindow::new(scaled, None).unwrap(), &bands).unwrap();
            let (aa, ba) = (a.as_array(), b.as_array());
            for i in 0..8 {
                prop_assert!((ba[i] - c * c * aa[i]).abs() <= 1e-9 * (c * c * aa[i]).abs().max(1e-12));
            }
            prop_assert!((ba[8] - aa[8]).abs() < 1e-9);
            prop_assert!((ba[9] - aa[9]).abs() < 1e-9);
        }
    }
}
