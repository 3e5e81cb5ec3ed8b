//! Ground-truth synthetic data: band-limited sinusoid windows and two-group
//! cohorts with known separability.

use rand::Rng;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::embed::{Condition, WindowRecord};
use crate::signal::{band_feature_vector, default_bands, BandName, RawWindow, SAMPLE_RATE, WINDOW_LEN};
use crate::{Error, Result};

/// Per-band sinusoid amplitudes, ordered like [`BandName::ALL`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    pub amplitudes: [f64; 8],
}

impl BandProfile {
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.amplitudes.iter().position(|&a| !(a >= 0.0)) {
            return Err(Error::Invalid(format!(
                "profile amplitude for {} must be >= 0, got {}",
                BandName::ALL[i].as_str(),
                self.amplitudes[i]
            )));
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self { amplitudes: [0.0; 8] }
    }
}

/// Midpoints of the default band intervals, one tone per band.
pub fn band_center_frequencies() -> [f64; 8] {
    default_bands().map(|b| (b.lo + b.hi) / 2.0)
}

/// One synthetic window: per-band tones at their center frequencies with
/// random phase, plus Gaussian noise.
pub fn synth_raw_window(
    profile: &BandProfile,
    noise_sigma: f64,
    label: Option<u8>,
    rng: &mut dyn RngCore,
) -> Result<RawWindow> {
    profile.validate()?;
    if noise_sigma < 0.0 {
        return Err(Error::Invalid(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let centers = band_center_frequencies();
    let phases: [f64; 8] = std::array::from_fn(|_| (&mut *rng).random_range(0.0..2.0 * PI));
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let samples: Vec<f64> = (0..WINDOW_LEN)
        .map(|n| {
            let t = n as f64 / SAMPLE_RATE;
            let mut v = 0.0;
            for b in 0..8 {
                if profile.amplitudes[b] > 0.0 {
                    v += profile.amplitudes[b] * (2.0 * PI * centers[b] * t + phases[b]).sin();
                }
            }
            if noise_sigma > 0.0 {
                v += noise.sample(&mut *rng);
            }
            v
        })
        .collect();
    RawWindow::new(samples, label)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    pub n_patients: usize,
    pub profile: BandProfile,
    /// Relative per-patient amplitude jitter (e.g. 0.05 for 5%).
    pub jitter: f64,
}

/// Two-group cohort description, the oracle for end-to-end runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohortSpec {
    pub group_a: GroupSpec,
    pub group_b: GroupSpec,
    pub windows_per_condition: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("a", &self.group_a), ("b", &self.group_b)] {
            if g.n_patients == 0 {
                return Err(Error::Invalid(format!("group {name}: zero patients")));
            }
            if g.jitter < 0.0 {
                return Err(Error::Invalid(format!("group {name}: negative jitter")));
            }
            g.profile.validate()?;
        }
        if self.windows_per_condition == 0 {
            return Err(Error::Invalid("zero windows per condition".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Invalid("negative noise sigma".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientLabel {
    pub patient_id: String,
    pub label: u8,
}

/// Everything one cohort produces: consumer-format records, labeled raw
/// windows (group label as proxy class), and the ground-truth patient labels.
#[derive(Clone, Debug)]
pub struct Cohort {
    pub records: Vec<WindowRecord>,
    pub raw_windows: Vec<RawWindow>,
    pub labels: Vec<PatientLabel>,
}

/// Deterministic cohort generation: group A patients carry label 1, group B
/// label 0.
pub fn synth_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bands = default_bands();
    let mut cohort = Cohort {
        records: Vec::new(),
        raw_windows: Vec::new(),
        labels: Vec::new(),
    };
    for (prefix, group, label) in [("a", &spec.group_a, 1u8), ("b", &spec.group_b, 0u8)] {
        for p in 0..group.n_patients {
            let pid = format!("{prefix}{:02}", p + 1);
            cohort.labels.push(PatientLabel {
                patient_id: pid.clone(),
                label,
            });
            // Patient-level amplitude jitter, shared by all their windows.
            let amplitudes: [f64; 8] = std::array::from_fn(|b| {
                let u: f64 = rng.random_range(-1.0..1.0);
                (group.profile.amplitudes[b] * (1.0 + group.jitter * u)).max(0.0)
            });
            let profile = BandProfile { amplitudes };
            let mut index = 0u32;
            for condition in [Condition::Rest, Condition::Active] {
                for _ in 0..spec.windows_per_condition {
                    let raw = synth_raw_window(&profile, spec.noise_sigma, Some(label), &mut rng)?;
                    let band = band_feature_vector(&raw, &bands)?;
                    cohort.records.push(WindowRecord {
                        patient_id: pid.clone(),
                        condition,
                        window_index: index,
                        band,
                    });
                    cohort.raw_windows.push(raw);
                    index += 1;
                }
            }
        }
    }
    Ok(cohort)
}

/// A 13/12 two-group spec with disjoint band profiles (theta-dominant vs
/// beta-dominant), used by tests and the demo pipeline.
pub fn separable_cohort_spec(seed: u64) -> CohortSpec {
    let mut theta_dominant = [0.0; 8];
    theta_dominant[1] = 1.0; // theta
    theta_dominant[0] = 0.3; // some delta
    let mut beta_dominant = [0.0; 8];
    beta_dominant[4] = 1.0; // low beta
    beta_dominant[5] = 0.5; // high beta
    CohortSpec {
        group_a: GroupSpec {
            n_patients: 13,
            profile: BandProfile {
                amplitudes: theta_dominant,
            },
            jitter: 0.05,
        },
        group_b: GroupSpec {
            n_patients: 12,
            profile: BandProfile {
                amplitudes: beta_dominant,
            },
            jitter: 0.05,
        },
        windows_per_condition: 4,
        noise_sigma: 0.05,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::power_spectrum;

    #[test]
    fn single_band_window_round_trips_through_band_features() {
        let mut profile = BandProfile::zero();
        profile.amplitudes[3] = 1.0; // high_alpha
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = synth_raw_window(&profile, 0.0, None, &mut rng).unwrap();
        let v = band_feature_vector(&w, &default_bands()).unwrap();
        let a = v.as_array();
        let peak = a[3];
        assert!(peak > 0.0);
        for (i, &p) in a[..8].iter().enumerate() {
            if i != 3 {
                assert!(p < 1e-6 * peak, "band {i} holds {p}");
            }
        }
    }

    #[test]
    fn noiseless_single_band_keeps_999_permille_of_power_in_band() {
        let mut profile = BandProfile::zero();
        profile.amplitudes[5] = 2.0; // high_beta
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = synth_raw_window(&profile, 0.0, None, &mut rng).unwrap();
        let spectrum = power_spectrum(&w);
        let total: f64 = spectrum.iter().sum();
        let band = default_bands()[5];
        let in_band = crate::signal::band_power(&spectrum, &band).unwrap();
        assert!(in_band / total >= 0.999);
    }

    #[test]
    fn zero_profile_without_noise_is_zero_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = synth_raw_window(&BandProfile::zero(), 0.0, None, &mut rng).unwrap();
        assert!(w.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_amplitude_is_rejected() {
        let mut profile = BandProfile::zero();
        profile.amplitudes[0] = -1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(synth_raw_window(&profile, 0.0, None, &mut rng).is_err());
    }

    #[test]
    fn cohort_is_seed_deterministic_and_seed_sensitive() {
        let spec = separable_cohort_spec(11);
        let a = synth_cohort(&spec).unwrap();
        let b = synth_cohort(&spec).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.raw_windows.iter().zip(&b.raw_windows) {
            assert_eq!(x.samples(), y.samples());
        }
        let mut spec2 = spec.clone();
        spec2.seed = 12;
        let c = synth_cohort(&spec2).unwrap();
        assert_ne!(
            a.raw_windows[0].samples(),
            c.raw_windows[0].samples()
        );
    }

    #[test]
    fn cohort_counts_and_labels() {
        let spec = separable_cohort_spec(3);
        let cohort = synth_cohort(&spec).unwrap();
        assert_eq!(cohort.labels.len(), 25);
        assert_eq!(cohort.labels.iter().filter(|l| l.label == 1).count(), 13);
        assert_eq!(cohort.records.len(), 25 * 2 * 4);
        assert_eq!(cohort.raw_windows.len(), 25 * 2 * 4);
    }
}
