//! Seed-deterministic training loops: supervised generator+EEGNet on labeled
//! raw windows, and unsupervised autoencoder on consumer-EEG windows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::WindowRecord;
use crate::models::{
    AutoencoderConfig, AutoencoderModel, ContextAutoencoder, Eegnet82, EegnetConfig,
    GeneratorConfig, GeneratorHead, SeizureModel, Standardizer,
};
use crate::nn::{AdamHyper, AdamState, Graph, Tensor};
use crate::signal::{band_feature_vector, BandDefinition, RawWindow};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: 1e-3,
            batch_size: 64,
            val_fraction: 0.2,
            early_stop_patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.early_stop_patience == 0 {
            return Err(Error::Invalid(
                "epochs, batch_size and patience must be positive".into(),
            ));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Invalid(format!(
                "val_fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Invalid(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }

    fn adam(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr,
            ..AdamHyper::default()
        }
    }
}

/// Per-epoch curves plus where and why training stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub best_epoch: usize,
    pub stopping_reason: String,
}

/// Stratified index split: per class, a seeded shuffle feeds the validation
/// set; class ratios are preserved within one sample.
fn stratified_split(
    labels: &[u8],
    val_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(rng);
        let n_val = ((idx.len() as f64 * val_fraction).round() as usize)
            .clamp(1, idx.len().saturating_sub(1).max(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn batch_tensor(features: &[[f64; 10]], idx: &[usize]) -> Tensor {
    let data: Vec<f64> = idx.iter().flat_map(|&i| features[i]).collect();
    Tensor::new(vec![idx.len(), 10], data).expect("finite features")
}

/// Joint supervised training of generator + EEGNet with class-weighted BCE.
pub fn train_seizure_model(
    windows: &[RawWindow],
    bands: &[BandDefinition],
    cfg: &TrainConfig,
) -> Result<(SeizureModel, TrainReport)> {
    train_seizure_model_with(
        GeneratorConfig::default(),
        EegnetConfig::default(),
        windows,
        bands,
        cfg,
    )
}

/// Same as [`train_seizure_model`] with explicit architecture configs
/// (reduced widths are useful for fast checks).
pub fn train_seizure_model_with(
    gen_cfg: GeneratorConfig,
    net_cfg: EegnetConfig,
    windows: &[RawWindow],
    bands: &[BandDefinition],
    cfg: &TrainConfig,
) -> Result<(SeizureModel, TrainReport)> {
    cfg.validate()?;
    if gen_cfg.out_len != net_cfg.input_len {
        return Err(Error::Shape(format!(
            "generator output length {} != eegnet input length {}",
            gen_cfg.out_len, net_cfg.input_len
        )));
    }
    if windows.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    let labels: Vec<u8> = windows
        .iter()
        .map(|w| {
            w.label()
                .ok_or_else(|| Error::Invalid("unlabeled window in training set".into()))
        })
        .collect::<Result<_>>()?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos < 2 || n_neg < 2 {
        return Err(Error::Invalid(format!(
            "need >= 2 windows per class, got {n_pos} positive / {n_neg} negative"
        )));
    }

    let features: Vec<[f64; 10]> = windows
        .iter()
        .map(|w| band_feature_vector(w, bands).map(|v| v.as_array()))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, val_idx) = stratified_split(&labels, cfg.val_fraction, &mut rng);

    // Inverse-frequency class weights from the training subset.
    let t_pos = train_idx.iter().filter(|&&i| labels[i] == 1).count();
    let t_neg = train_idx.len() - t_pos;
    let total = train_idx.len() as f64;
    let weight_of = |label: u8| -> f64 {
        match label {
            1 => total / (2.0 * t_pos.max(1) as f64),
            _ => total / (2.0 * t_neg.max(1) as f64),
        }
    };

    let mut generator = GeneratorHead::new(gen_cfg, &mut rng);
    let mut eegnet = Eegnet82::new(net_cfg, &mut rng)?;
    let mut gen_adam = AdamState::new(generator.params.tensors(), cfg.adam());
    let mut net_adam = AdamState::new(eegnet.params.tensors(), cfg.adam());

    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        val_accuracy: Vec::new(),
        best_epoch: 0,
        stopping_reason: String::new(),
    };
    let mut best_val = f64::INFINITY;
    let mut best_state: Option<(Vec<Tensor>, Vec<Tensor>, Eegnet82)> = None;
    let mut patience_left = cfg.early_stop_patience;

    let mut order = train_idx.clone();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x_t = batch_tensor(&features, chunk);
            let batch_labels: Vec<f64> = chunk.iter().map(|&i| labels[i] as f64).collect();
            let batch_weights: Vec<f64> = chunk.iter().map(|&i| weight_of(labels[i])).collect();
            let mut g = Graph::new();
            let x = g.leaf(x_t);
            let gen_bound = generator.params.bind(&mut g);
            let net_bound = eegnet.params.bind(&mut g);
            let wave = generator.forward(&mut g, x, &gen_bound)?;
            let (prob, _) = eegnet.forward_train(&mut g, wave, &net_bound, &mut rng)?;
            let loss = g.bce_loss(prob, &batch_labels, Some(&batch_weights))?;
            epoch_loss += g.value(loss).scalar_value() * chunk.len() as f64;
            let grads = g.backward(loss)?;
            let gen_grads = generator.params.collect_grads(&g, &grads, &gen_bound);
            let net_grads = eegnet.params.collect_grads(&g, &grads, &net_bound);
            gen_adam.step(generator.params.tensors_mut(), &gen_grads)?;
            net_adam.step(eegnet.params.tensors_mut(), &net_grads)?;
        }
        report.train_loss.push(epoch_loss / order.len() as f64);

        // Validation in eval mode with the same class weights.
        let x_t = batch_tensor(&features, &val_idx);
        let val_labels: Vec<f64> = val_idx.iter().map(|&i| labels[i] as f64).collect();
        let val_weights: Vec<f64> = val_idx.iter().map(|&i| weight_of(labels[i])).collect();
        let mut g = Graph::new();
        let x = g.leaf(x_t);
        let gen_bound = generator.params.bind(&mut g);
        let net_bound = eegnet.params.bind(&mut g);
        let wave = generator.forward(&mut g, x, &gen_bound)?;
        let (prob, _) = eegnet.forward_eval(&mut g, wave, &net_bound)?;
        let loss = g.bce_loss(prob, &val_labels, Some(&val_weights))?;
        let val_loss = g.value(loss).scalar_value();
        let correct = g
            .value(prob)
            .data()
            .iter()
            .zip(&val_labels)
            .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
            .count();
        report.val_loss.push(val_loss);
        report.val_accuracy.push(correct as f64 / val_labels.len() as f64);

        if val_loss < best_val {
            best_val = val_loss;
            report.best_epoch = epoch;
            best_state = Some((
                generator.params.tensors().to_vec(),
                eegnet.params.tensors().to_vec(),
                eegnet.clone(),
            ));
            patience_left = cfg.early_stop_patience;
        } else {
            patience_left -= 1;
            if patience_left == 0 {
                report.stopping_reason = format!("early_stop(epoch={epoch})");
                break;
            }
        }
    }
    if report.stopping_reason.is_empty() {
        report.stopping_reason = "max_epochs".into();
    }
    if let Some((gen_t, net_t, net_snapshot)) = best_state {
        generator.params.restore(gen_t)?;
        eegnet = net_snapshot;
        eegnet.params.restore(net_t)?;
    }
    Ok((SeizureModel { generator, eegnet }, report))
}

/// Unsupervised autoencoder training on standardized band vectors.
pub fn train_autoencoder(
    records: &[WindowRecord],
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    train_autoencoder_with(AutoencoderConfig::default(), records, cfg)
}

pub fn train_autoencoder_with(
    ae_cfg: AutoencoderConfig,
    records: &[WindowRecord],
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    if records.len() < cfg.batch_size {
        return Err(Error::Invalid(format!(
            "need at least batch_size={} windows, got {}",
            cfg.batch_size,
            records.len()
        )));
    }
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.band.as_array().to_vec()).collect();
    let standardizer = Standardizer::fit(&rows)?;
    let standardized: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.apply(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut all: Vec<usize> = (0..records.len()).collect();
    all.shuffle(&mut rng);
    let n_val = ((records.len() as f64 * cfg.val_fraction).round() as usize)
        .clamp(1, records.len() - 1);
    let val_idx: Vec<usize> = all[..n_val].to_vec();
    let mut train_idx: Vec<usize> = all[n_val..].to_vec();

    let mut net = ContextAutoencoder::new(ae_cfg, &mut rng);
    let mut adam = AdamState::new(net.params.tensors(), cfg.adam());

    let make_batch = |idx: &[usize]| -> Tensor {
        let data: Vec<f64> = idx.iter().flat_map(|&i| standardized[i].clone()).collect();
        Tensor::new(vec![idx.len(), ae_cfg.in_dim], data).expect("finite features")
    };

    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        val_accuracy: Vec::new(),
        best_epoch: 0,
        stopping_reason: String::new(),
    };
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<Vec<Tensor>> = None;
    let mut patience_left = cfg.early_stop_patience;

    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let x_t = make_batch(chunk);
            let target = x_t.clone();
            let mut g = Graph::new();
            let x = g.leaf(x_t);
            let bound = net.params.bind(&mut g);
            let (recon, _) = net.forward(&mut g, x, &bound)?;
            let loss = g.mse_loss(recon, &target)?;
            epoch_loss += g.value(loss).scalar_value() * chunk.len() as f64;
            let grads = g.backward(loss)?;
            let pgrads = net.params.collect_grads(&g, &grads, &bound);
            adam.step(net.params.tensors_mut(), &pgrads)?;
        }
        report.train_loss.push(epoch_loss / train_idx.len() as f64);

        let x_t = make_batch(&val_idx);
        let target = x_t.clone();
        let mut g = Graph::new();
        let x = g.leaf(x_t);
        let bound = net.params.bind(&mut g);
        let (recon, _) = net.forward(&mut g, x, &bound)?;
        let loss = g.mse_loss(recon, &target)?;
        let val_loss = g.value(loss).scalar_value();
        report.val_loss.push(val_loss);

        if val_loss < best_val {
            best_val = val_loss;
            report.best_epoch = epoch;
            best_params = Some(net.params.tensors().to_vec());
            patience_left = cfg.early_stop_patience;
        } else {
            patience_left -= 1;
            if patience_left == 0 {
                report.stopping_reason = format!("early_stop(epoch={epoch})");
                break;
            }
        }
    }
    if report.stopping_reason.is_empty() {
        report.stopping_reason = "max_epochs".into();
    }
    if let Some(p) = best_params {
        net.params.restore(p)?;
    }
    Ok((AutoencoderModel { net, standardizer }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Condition;
    use crate::signal::{default_bands, BandVector};
    use crate::synth::{synth_cohort, synth_raw_window, BandProfile, CohortSpec, GroupSpec};

    fn small_gen() -> GeneratorConfig {
        GeneratorConfig {
            in_dim: 10,
            hidden: 16,
            out_len: 64,
        }
    }

    fn small_net() -> EegnetConfig {
        EegnetConfig {
            input_len: 64,
            f1: 2,
            depth_multiplier: 2,
            f2: 4,
            temporal_kernel: 8,
            separable_kernel: 4,
            pool1: 4,
            pool2: 8,
            dropout_p: 0.1,
            ..EegnetConfig::default()
        }
    }

    fn two_class_windows(per_class: usize, seed: u64) -> Vec<crate::signal::RawWindow> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut theta = BandProfile::zero();
        theta.amplitudes[1] = 1.0;
        let mut beta = BandProfile::zero();
        beta.amplitudes[4] = 1.0;
        let mut out = Vec::new();
        for _ in 0..per_class {
            out.push(synth_raw_window(&theta, 0.05, Some(1), &mut rng).unwrap());
            out.push(synth_raw_window(&beta, 0.05, Some(0), &mut rng).unwrap());
        }
        out
    }

    #[test]
    fn stratified_split_preserves_ratio_within_one() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 4 == 0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (train, val) = stratified_split(&labels, 0.2, &mut rng);
        assert_eq!(train.len() + val.len(), 100);
        let val_pos = val.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(val_pos, 5); // 20% of 25 positives
        assert_eq!(val.len(), 20);
    }

    #[test]
    fn seizure_training_is_separable_and_deterministic() {
        let windows = two_class_windows(40, 5);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 16,
            seed: 7,
            ..TrainConfig::default()
        };
        let (_, report_a) =
            train_seizure_model_with(small_gen(), small_net(), &windows, &default_bands(), &cfg)
                .unwrap();
        let best_acc = report_a
            .val_accuracy
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        assert!(best_acc >= 0.95, "best val accuracy {best_acc}");

        let (_, report_b) =
            train_seizure_model_with(small_gen(), small_net(), &windows, &default_bands(), &cfg)
                .unwrap();
        assert_eq!(report_a, report_b);
    }

    #[test]
    fn rejects_single_class_and_unlabeled() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut profile = BandProfile::zero();
        profile.amplitudes[1] = 1.0;
        let same: Vec<_> = (0..8)
            .map(|_| synth_raw_window(&profile, 0.01, Some(1), &mut rng).unwrap())
            .collect();
        let cfg = TrainConfig::default();
        assert!(
            train_seizure_model_with(small_gen(), small_net(), &same, &default_bands(), &cfg)
                .is_err()
        );
        let unlabeled = vec![synth_raw_window(&profile, 0.01, None, &mut rng).unwrap()];
        assert!(
            train_seizure_model_with(small_gen(), small_net(), &unlabeled, &default_bands(), &cfg)
                .is_err()
        );
    }

    #[test]
    fn early_stopping_restores_best_validation_loss() {
        let windows = two_class_windows(20, 9);
        let cfg = TrainConfig {
            epochs: 25,
            batch_size: 16,
            early_stop_patience: 3,
            seed: 1,
            ..TrainConfig::default()
        };
        let (_, report) =
            train_seizure_model_with(small_gen(), small_net(), &windows, &default_bands(), &cfg)
                .unwrap();
        let best = report.val_loss[report.best_epoch];
        for &v in &report.val_loss {
            assert!(best <= v + 1e-12);
        }
    }

    fn repeated_records(n: usize, v: [f64; 10]) -> Vec<WindowRecord> {
        (0..n)
            .map(|i| WindowRecord {
                patient_id: format!("p{}", i % 3),
                condition: if i % 2 == 0 {
                    Condition::Rest
                } else {
                    Condition::Active
                },
                window_index: i as u32,
                band: BandVector::from_array(v).unwrap(),
            })
            .collect()
    }

    #[test]
    fn autoencoder_learns_a_constant_dataset() {
        let records = repeated_records(64, [1.0, 2.0, 0.5, 0.1, 3.0, 0.2, 0.0, 0.4, 40.0, 60.0]);
        let cfg = TrainConfig {
            epochs: 40,
            batch_size: 16,
            seed: 3,
            ..TrainConfig::default()
        };
        let (_, report) = train_autoencoder(&records, &cfg).unwrap();
        // Constant features are floored to z = 0, so the reconstruction
        // target is reachable quickly.
        assert!(*report.train_loss.last().unwrap() < 1e-3);
    }

    #[test]
    fn autoencoder_loss_is_non_increasing_on_moving_average() {
        let cohort = synth_cohort(&CohortSpec {
            group_a: GroupSpec {
                n_patients: 4,
                profile: BandProfile {
                    amplitudes: [0.5, 1.0, 0.2, 0.1, 0.8, 0.3, 0.05, 0.02],
                },
                jitter: 0.2,
            },
            group_b: GroupSpec {
                n_patients: 4,
                profile: BandProfile {
                    amplitudes: [0.1, 0.2, 0.9, 0.7, 0.1, 0.9, 0.3, 0.1],
                },
                jitter: 0.2,
            },
            windows_per_condition: 6,
            noise_sigma: 0.05,
            seed: 21,
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 16,
            seed: 4,
            ..TrainConfig::default()
        };
        let (_, report) = train_autoencoder(&cohort.records, &cfg).unwrap();
        let ma: Vec<f64> = report
            .train_loss
            .windows(5)
            .map(|w| w.iter().sum::<f64>() / 5.0)
            .collect();
        for pair in ma.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "moving average rose: {pair:?}");
        }
    }

    #[test]
    fn autoencoder_same_seed_gives_identical_models() {
        let records = repeated_records(48, [1.0, 2.0, 0.5, 0.1, 3.0, 0.2, 0.0, 0.4, 40.0, 60.0]);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 8,
            ..TrainConfig::default()
        };
        let (m1, r1) = train_autoencoder(&records, &cfg).unwrap();
        let (m2, r2) = train_autoencoder(&records, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(m1.net.params, m2.net.params);
        assert_eq!(m1.standardizer, m2.standardizer);
    }

    #[test]
    fn autoencoder_requires_a_full_batch() {
        let records = repeated_records(8, [1.0; 10]);
        let cfg = TrainConfig {
            batch_size: 16,
            ..TrainConfig::default()
        };
        assert!(train_autoencoder(&records, &cfg).is_err());
    }
}
