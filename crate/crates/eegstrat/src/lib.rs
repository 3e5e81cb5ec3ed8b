//! Single-channel EEG stratification toolkit.
//!
//! The crate turns raw or band-feature EEG windows into deep embeddings and
//! groups patients with unsupervised clustering:
//!
//! * [`signal`] — windowing, power spectra, NeuroSky-style band features.
//! * [`nn`] — a small reverse-mode differentiation engine with the layers the
//!   models need (dense, grouped 1-D convolution, batch norm, ELU, pooling,
//!   dropout) plus BCE/MSE losses and Adam.
//! * [`models`] — the generator head, the EEGNet-8-2 classifier with an
//!   embedding tap, and the contextual autoencoder.
//! * [`train`] — supervised seizure-model training and unsupervised
//!   autoencoder training, both seed-deterministic.
//! * [`embed`] — window-level embedding extraction and patient aggregation.
//! * [`cluster`] — K-means, Ward agglomerative, diagonal GMM-EM and spectral
//!   clustering, plus the PCA/eigendecomposition substrate.
//! * [`eval`] — best-permutation accuracy, cluster balance, stratification
//!   reports.
//! * [`synth`] — synthetic cohorts with known ground truth.
//! * [`io`] — CSV schemas, checkpoints, reports, run manifests.
//! * [`cli`] — the batch command-line front end.
//!
//! # Example: synthetic cohort to stratification report
//!
//! ```
//! use eegstrat::cluster::PointSet;
//! use eegstrat::embed::extract_autoencoder_patient_embeddings;
//! use eegstrat::eval::evaluate_all;
//! use eegstrat::synth::{separable_cohort_spec, synth_cohort, CohortSpec};
//! use eegstrat::train::{train_autoencoder, TrainConfig};
//!
//! // A small two-group cohort with disjoint band profiles.
//! let mut spec = separable_cohort_spec(7);
//! spec.group_a.n_patients = 4;
//! spec.group_b.n_patients = 4;
//! let cohort = synth_cohort(&spec)?;
//!
//! // Train the contextual autoencoder and aggregate per patient.
//! let cfg = TrainConfig { epochs: 10, batch_size: 16, seed: 1, ..TrainConfig::default() };
//! let (model, _report) = train_autoencoder(&cohort.records, &cfg)?;
//! let embeddings = extract_autoencoder_patient_embeddings(&model, &cohort.records)?;
//!
//! // Cluster and score against the known group labels.
//! let points = PointSet::new(embeddings.iter().map(|e| e.vector.clone()).collect())?;
//! let truth: Vec<usize> = embeddings
//!     .iter()
//!     .map(|e| {
//!         cohort.labels.iter().find(|l| l.patient_id == e.patient_id).unwrap().label as usize
//!     })
//!     .collect();
//! let report = evaluate_all(&points, &truth, 0)?;
//! assert_eq!(report.methods.len(), 4);
//! # Ok::<(), eegstrat::Error>(())
//! ```

pub mod cli;
pub mod cluster;
pub mod embed;
pub mod error;
pub mod eval;
pub mod io;
pub mod models;
pub mod nn;
pub mod signal;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
