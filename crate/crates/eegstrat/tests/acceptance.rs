//! Acceptance suite. Each test covers one numbered criterion and prints a
//! `criterion N ... PASS` line on success (visible with `--nocapture`).
//!
//! Criterion 7 depends on real datasets that ship separately; without them
//! it reports a skip and passes. Supply the files through the environment
//! variables named in that test to exercise the full path.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use eegstrat::cluster::{
    gmm_cluster, jacobi_eigh, kmeans_cluster, normalized_laplacian, spectral_cluster,
    ward_cluster, GmmConfig, KmeansConfig, PointSet, SpectralConfig, WardConfig,
};
use eegstrat::embed::{
    extract_autoencoder_patient_embeddings, extract_eegnet_patient_embeddings, EmbeddingSource,
};
use eegstrat::eval::{clustering_accuracy, evaluate_all};
use eegstrat::io::{load_checkpoint, save_checkpoint, Checkpoint};
use eegstrat::models::{
    Eegnet82, EegnetConfig, GeneratorConfig, GeneratorHead, SeizureModel,
};
use eegstrat::nn::gradcheck::{central_difference_gradients, max_relative_error};
use eegstrat::nn::{Graph, Padding, Tensor};
use eegstrat::signal::{
    band_power, default_bands, power_spectrum, RawWindow, SAMPLE_RATE, WINDOW_LEN,
};
use eegstrat::synth::{
    separable_cohort_spec, synth_cohort, synth_raw_window, BandProfile, CohortSpec, GroupSpec,
};
use eegstrat::train::{train_seizure_model, TrainConfig};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-0.9..0.9)).collect();
    Tensor::new(shape, data).unwrap()
}

/// Gradcheck one subgraph: `build` maps bound parameter vars to a scalar
/// loss var. Parameters are checked; the input is folded into `build`.
fn check_op(name: &str, params: &[Tensor], build: impl Fn(&mut Graph, &[eegstrat::nn::Var]) -> eegstrat::nn::Var) {
    let forward = |tensors: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<_> = tensors.iter().map(|t| g.leaf(t.clone())).collect();
        let loss = build(&mut g, &vars);
        g.value(loss).scalar_value()
    };
    let mut g = Graph::new();
    let vars: Vec<_> = params.iter().map(|t| g.leaf(t.clone())).collect();
    let loss = build(&mut g, &vars);
    let grads = g.backward(loss).unwrap();
    let analytic: Vec<Tensor> = vars
        .iter()
        .map(|&v| grads.get(v).cloned().unwrap())
        .collect();
    let numeric = central_difference_gradients(params, forward, 1e-4);
    let err = max_relative_error(&analytic, &numeric);
    assert!(err < 1e-4, "{name}: max relative error {err}");
}

#[test]
fn criterion_1_gradient_correctness() {
    let start = Instant::now();
    let mut r = rng(100);

    let x = random_tensor(vec![3, 5], &mut r);
    let w = random_tensor(vec![4, 5], &mut r);
    let b = random_tensor(vec![4], &mut r);
    check_op("dense", &[x.clone(), w, b], |g, v| {
        let y = g.dense(v[0], v[1], v[2]).unwrap();
        g.sum(y)
    });

    check_op("elu", &[x.clone()], |g, v| {
        let y = g.elu(v[0], 1.0);
        let y2 = g.mul(y, y).unwrap();
        g.sum(y2)
    });

    check_op("sigmoid", &[x.clone()], |g, v| {
        let y = g.sigmoid(v[0]);
        g.sum(y)
    });

    let cx = random_tensor(vec![2, 4, 12], &mut r);
    let ck = random_tensor(vec![6, 2, 3], &mut r);
    check_op("conv1d grouped", &[cx.clone(), ck], |g, v| {
        let y = g.conv1d(v[0], v[1], 2, Padding::Same).unwrap();
        let y2 = g.mul(y, y).unwrap();
        g.sum(y2)
    });

    let gamma = random_tensor(vec![4], &mut r);
    let beta = random_tensor(vec![4], &mut r);
    check_op("batchnorm train", &[cx.clone(), gamma, beta], |g, v| {
        let (y, _, _) = g.batchnorm_train(v[0], v[1], v[2], 1e-5).unwrap();
        let y2 = g.mul(y, y).unwrap();
        g.sum(y2)
    });

    check_op("avg pool", &[cx.clone()], |g, v| {
        let y = g.avg_pool(v[0], 3).unwrap();
        let y2 = g.mul(y, y).unwrap();
        g.sum(y2)
    });

    let probs_in = random_tensor(vec![4], &mut r);
    check_op("bce", &[probs_in], |g, v| {
        let p = g.sigmoid(v[0]);
        g.bce_loss(p, &[1.0, 0.0, 1.0, 0.0], Some(&[0.4, 1.6, 1.0, 1.0]))
            .unwrap()
    });

    let target = random_tensor(vec![3, 5], &mut r);
    check_op("mse", &[x], |g, v| g.mse_loss(v[0], &target).unwrap());

    // Composed generator + classifier at reduced width (<= 1e3 params).
    let gen_cfg = GeneratorConfig { in_dim: 10, hidden: 8, out_len: 64 };
    let net_cfg = EegnetConfig {
        input_len: 64,
        f1: 2,
        depth_multiplier: 2,
        f2: 4,
        temporal_kernel: 8,
        separable_kernel: 4,
        pool1: 4,
        pool2: 8,
        dropout_p: 0.0,
        ..EegnetConfig::default()
    };
    let generator = GeneratorHead::new(gen_cfg, &mut r);
    let eegnet = Eegnet82::new(net_cfg, &mut r).unwrap();
    let n_params = generator.params.scalar_count() + eegnet.parameter_count();
    assert!(n_params <= 1000, "reduced model has {n_params} params");

    let bands = random_tensor(vec![2, 10], &mut r);
    let labels = [1.0, 0.0];
    let model = SeizureModel { generator, eegnet };
    let n_gen = model.generator.params.len();

    let forward = |tensors: &[Tensor]| -> f64 {
        let mut m = model.clone();
        m.generator
            .params
            .restore(tensors[..n_gen].to_vec())
            .unwrap();
        m.eegnet.params.restore(tensors[n_gen..].to_vec()).unwrap();
        let mut g = Graph::new();
        let x = g.leaf(bands.clone());
        let gb = m.generator.params.bind(&mut g);
        let nb = m.eegnet.params.bind(&mut g);
        let wave = m.generator.forward(&mut g, x, &gb).unwrap();
        let (prob, _) = m
            .eegnet
            .forward_train(&mut g, wave, &nb, &mut rng(0))
            .unwrap();
        let loss = g.bce_loss(prob, &labels, None).unwrap();
        g.value(loss).scalar_value()
    };

    let mut all_params: Vec<Tensor> = model.generator.params.tensors().to_vec();
    all_params.extend_from_slice(model.eegnet.params.tensors());

    let mut m = model.clone();
    let mut g = Graph::new();
    let x = g.leaf(bands.clone());
    let gb = m.generator.params.bind(&mut g);
    let nb = m.eegnet.params.bind(&mut g);
    let wave = m.generator.forward(&mut g, x, &gb).unwrap();
    let (prob, _) = m
        .eegnet
        .forward_train(&mut g, wave, &nb, &mut rng(0))
        .unwrap();
    let loss = g.bce_loss(prob, &labels, None).unwrap();
    let grads = g.backward(loss).unwrap();
    let mut analytic = m.generator.params.collect_grads(&g, &grads, &gb);
    analytic.extend(m.eegnet.params.collect_grads(&g, &grads, &nb));

    let numeric = central_difference_gradients(&all_params, forward, 1e-4);
    let err = max_relative_error(&analytic, &numeric);
    assert!(err < 1e-4, "composed model: max relative error {err}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 1 min");
    println!("criterion 1 (gradient correctness): PASS ({elapsed:?})");
}

#[test]
fn criterion_2_spectral_fidelity() {
    // 10 Hz is an integer bin at 2048 samples / 256 Hz (bin 80).
    let samples: Vec<f64> = (0..WINDOW_LEN)
        .map(|n| (2.0 * std::f64::consts::PI * 10.0 * n as f64 / SAMPLE_RATE).sin())
        .collect();
    let window = RawWindow::new(samples, None).unwrap();
    let spectrum = power_spectrum(&window);
    let total: f64 = spectrum.iter().sum();
    let in_bin = spectrum[80];
    assert!(
        in_bin / total >= 0.99999,
        "bin 80 holds only {} of total power",
        in_bin / total
    );

    // Parseval on a band set tiling [0, Nyquist]: band powers sum to the
    // signal variance.
    let tiling = [
        ("delta", 0.0, 16.0),
        ("theta", 16.0, 32.0),
        ("low_alpha", 32.0, 48.0),
        ("high_alpha", 48.0, 64.0),
        ("low_beta", 64.0, 80.0),
        ("high_beta", 80.0, 96.0),
        ("low_gamma", 96.0, 112.0),
        ("mid_gamma", 112.0, 128.0),
    ];
    let mut r = rng(2);
    let noise: Vec<f64> = (0..WINDOW_LEN).map(|_| r.random_range(-1.0..1.0)).collect();
    let mean = noise.iter().sum::<f64>() / WINDOW_LEN as f64;
    let variance =
        noise.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / WINDOW_LEN as f64;
    let window = RawWindow::new(noise, None).unwrap();
    let spectrum = power_spectrum(&window);
    let mut banded = 0.0;
    for (name, lo, hi) in tiling {
        let band = eegstrat::signal::BandDefinition {
            name: eegstrat::signal::BandName::parse(name).unwrap(),
            lo,
            hi,
        };
        banded += band_power(&spectrum, &band).unwrap();
    }
    let rel = (banded - variance).abs() / variance;
    assert!(rel < 1e-6, "Parseval relative error {rel}");
    println!("criterion 2 (spectral fidelity): PASS");
}

#[test]
fn criterion_3_architecture_contract() {
    let cfg = EegnetConfig::default();
    assert_eq!(cfg.f2, 16);
    assert_eq!(cfg.input_len / (cfg.pool1 * cfg.pool2), 64);
    assert_eq!(cfg.embedding_dim(), 1024);

    // Live forward confirms the shape chain on a (1, 2048) input.
    let mut r = rng(3);
    let generator = GeneratorHead::new(GeneratorConfig::default(), &mut r);
    let mut eegnet = Eegnet82::new(cfg, &mut r).unwrap();
    let mut g = Graph::new();
    let x = g.leaf(random_tensor(vec![2, 1, 2048], &mut r));
    let nb = eegnet.params.bind(&mut g);
    let (_, emb) = eegnet.forward_train(&mut g, x, &nb, &mut rng(0)).unwrap();
    assert_eq!(g.value(emb).shape(), &[2, 1024]);
    assert_eq!(generator.config.out_len, 2048);

    // Patient aggregation dims: mean || std doubles each source dim.
    assert_eq!(EmbeddingSource::Eegnet.patient_dim(), 2048);
    assert_eq!(EmbeddingSource::Autoencoder.patient_dim(), 32);
    println!("criterion 3 (architecture contract): PASS");
}

/// 100 windows per class with disjoint band profiles.
fn separable_windows(seed: u64) -> Vec<RawWindow> {
    let mut r = rng(seed);
    let mut theta = BandProfile::zero();
    theta.amplitudes[1] = 1.0;
    let mut beta = BandProfile::zero();
    beta.amplitudes[4] = 1.0;
    let mut out = Vec::new();
    for _ in 0..100 {
        out.push(synth_raw_window(&theta, 0.05, Some(1), &mut r).unwrap());
        out.push(synth_raw_window(&beta, 0.05, Some(0), &mut r).unwrap());
    }
    out
}

#[test]
fn criterion_4_optimization_sanity() {
    let start = Instant::now();
    let windows = separable_windows(41);
    let cfg = TrainConfig { seed: 4, ..TrainConfig::default() };
    let (_, report) = train_seizure_model(&windows, &default_bands(), &cfg).unwrap();
    let best = report.val_accuracy.iter().cloned().fold(0.0f64, f64::max);
    assert!(best >= 0.95, "best validation accuracy {best}");

    // Shuffled labels: same windows, labels randomly reassigned. Accuracy
    // should stay near chance.
    let mut r = rng(42);
    let shuffled: Vec<RawWindow> = windows
        .iter()
        .map(|w| RawWindow::new(w.samples().to_vec(), Some(r.random_range(0..2) as u8)).unwrap())
        .collect();
    let (_, null_report) = train_seizure_model(&shuffled, &default_bands(), &cfg).unwrap();
    let final_acc = *null_report.val_accuracy.last().unwrap();
    assert!(
        (0.35..=0.65).contains(&final_acc),
        "shuffled-label accuracy {final_acc} outside [0.35, 0.65]"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}, budget 5 min");
    println!("criterion 4 (optimization sanity): PASS ({elapsed:?})");
}

#[test]
fn criterion_5_clustering_properties() {
    // Two blobs with sigma 1, centers 10 sigma apart, in 3-d.
    let mut r = rng(5);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for c in 0..2usize {
        for _ in 0..20 {
            rows.push(vec![
                c as f64 * 10.0 + noise.sample(&mut r),
                noise.sample(&mut r),
                noise.sample(&mut r),
            ]);
            truth.push(c);
        }
    }
    let points = PointSet::new(rows).unwrap();

    let km = kmeans_cluster(&points, &KmeansConfig::default()).unwrap();
    for w in km.inertia_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "kmeans inertia increased: {w:?}");
    }
    assert_eq!(clustering_accuracy(&km.assignment, &truth).unwrap(), 1.0);

    let wd = ward_cluster(&points, &WardConfig::default()).unwrap();
    assert_eq!(clustering_accuracy(&wd, &truth).unwrap(), 1.0);

    let gm = gmm_cluster(&points, &GmmConfig::default()).unwrap();
    for w in gm.ll_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "gmm log-likelihood decreased: {w:?}");
    }
    assert_eq!(clustering_accuracy(&gm.assignment, &truth).unwrap(), 1.0);

    let sp = spectral_cluster(&points, &SpectralConfig::default()).unwrap();
    assert_eq!(clustering_accuracy(&sp, &truth).unwrap(), 1.0);

    // Laplacian PSD.
    let lap = normalized_laplacian(&points).unwrap();
    let (values, _) = jacobi_eigh(&lap).unwrap();
    assert!(values[0] > -1e-9, "Laplacian eigenvalue {}", values[0]);

    // Jacobi residual bound on random symmetric matrices.
    for n in [3usize, 8, 20] {
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = r.random_range(-3.0..3.0);
                s[i][j] = v;
                s[j][i] = v;
            }
        }
        let (vals, vecs) = jacobi_eigh(&s).unwrap();
        let frob = s
            .iter()
            .flat_map(|row| row.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let mut residual = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|k| s[i][k] * vecs[k][j]).sum();
                residual = residual.max((av - vals[j] * vecs[i][j]).abs());
            }
        }
        assert!(
            residual <= 1e-8 * frob.max(1.0),
            "n={n}: residual {residual} vs bound {}",
            1e-8 * frob.max(1.0)
        );
    }
    println!("criterion 5 (clustering properties): PASS");
}

#[test]
fn criterion_6_end_to_end_oracle() {
    let start = Instant::now();
    let cohort = synth_cohort(&separable_cohort_spec(61)).unwrap();
    let truth: Vec<usize> = cohort.labels.iter().map(|l| l.label as usize).collect();

    // Supervised path: train on the cohort's raw windows, embed, cluster.
    let cfg = TrainConfig { seed: 6, ..TrainConfig::default() };
    let (model, _) = train_seizure_model(&cohort.raw_windows, &default_bands(), &cfg).unwrap();
    let eegnet_embeddings =
        extract_eegnet_patient_embeddings(&model, &cohort.records).unwrap();
    let points = PointSet::new(
        eegnet_embeddings.iter().map(|e| e.vector.clone()).collect(),
    )
    .unwrap();
    let eegnet_truth: Vec<usize> = eegnet_embeddings
        .iter()
        .map(|e| {
            truth[cohort
                .labels
                .iter()
                .position(|l| l.patient_id == e.patient_id)
                .unwrap()]
        })
        .collect();
    let report = evaluate_all(&points, &eegnet_truth, 6).unwrap();
    for m in &report.methods {
        assert!(
            m.accuracy >= 0.9,
            "eegnet source, {}: accuracy {} = {}/{}",
            m.method,
            m.accuracy,
            m.correct,
            m.total
        );
    }

    // Unsupervised path.
    let (ae, _) = eegstrat::train::train_autoencoder(&cohort.records, &cfg).unwrap();
    let ae_embeddings = extract_autoencoder_patient_embeddings(&ae, &cohort.records).unwrap();
    let points = PointSet::new(ae_embeddings.iter().map(|e| e.vector.clone()).collect()).unwrap();
    let ae_truth: Vec<usize> = ae_embeddings
        .iter()
        .map(|e| {
            truth[cohort
                .labels
                .iter()
                .position(|l| l.patient_id == e.patient_id)
                .unwrap()]
        })
        .collect();
    let report = evaluate_all(&points, &ae_truth, 6).unwrap();
    for m in &report.methods {
        assert!(
            m.accuracy >= 0.9,
            "autoencoder source, {}: accuracy {} = {}/{}",
            m.method,
            m.accuracy,
            m.correct,
            m.total
        );
    }

    // Null cohort: both groups share one profile, so no structure exists and
    // accuracy should sit near chance on average.
    let shared = BandProfile {
        amplitudes: [0.4, 0.8, 0.3, 0.2, 0.7, 0.4, 0.1, 0.05],
    };
    let mut means = Vec::new();
    for seed in 0..20u64 {
        let null_spec = CohortSpec {
            group_a: GroupSpec { n_patients: 13, profile: shared, jitter: 0.05 },
            group_b: GroupSpec { n_patients: 12, profile: shared, jitter: 0.05 },
            windows_per_condition: 4,
            noise_sigma: 0.05,
            seed: 1000 + seed,
        };
        let null = synth_cohort(&null_spec).unwrap();
        let (ae, _) = eegstrat::train::train_autoencoder(
            &null.records,
            &TrainConfig { seed, epochs: 20, ..TrainConfig::default() },
        )
        .unwrap();
        let embeddings = extract_autoencoder_patient_embeddings(&ae, &null.records).unwrap();
        let points =
            PointSet::new(embeddings.iter().map(|e| e.vector.clone()).collect()).unwrap();
        let null_truth: Vec<usize> = embeddings
            .iter()
            .map(|e| {
                null.labels
                    .iter()
                    .find(|l| l.patient_id == e.patient_id)
                    .unwrap()
                    .label as usize
            })
            .collect();
        let report = evaluate_all(&points, &null_truth, seed).unwrap();
        let mean: f64 =
            report.methods.iter().map(|m| m.accuracy).sum::<f64>() / report.methods.len() as f64;
        means.push(mean);
    }
    let grand_mean = means.iter().sum::<f64>() / means.len() as f64;
    assert!(
        (0.5..=0.75).contains(&grand_mean),
        "null cohort mean accuracy {grand_mean} outside [0.5, 0.75]"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}, budget 10 min");
    println!("criterion 6 (end-to-end oracle): PASS ({elapsed:?})");
}

#[test]
fn criterion_7_real_data_conditional() {
    // Real-data reproduction needs the clinical corpus (raw-window CSV) and
    // the consumer-headset window CSV, which do not ship with this
    // repository. Point these variables at local copies to run the check:
    //   EEGSTRAT_RAW_CSV      raw windows (record_id,label,s0..s2047)
    //   EEGSTRAT_WINDOW_CSV   band-power windows (13-column schema)
    //   EEGSTRAT_LABELS_CSV   optional patient labels (patient_id,label)
    let raw = std::env::var("EEGSTRAT_RAW_CSV").ok();
    let windows = std::env::var("EEGSTRAT_WINDOW_CSV").ok();
    let (Some(raw), Some(windows)) = (raw, windows) else {
        println!(
            "criterion 7 (real-data reproduction): SKIPPED - set \
             EEGSTRAT_RAW_CSV and EEGSTRAT_WINDOW_CSV to run against real data"
        );
        return;
    };

    let raw_windows = eegstrat::io::read_raw_windows(Path::new(&raw)).unwrap();
    let records = eegstrat::io::read_window_csv(Path::new(&windows)).unwrap();
    let cfg = TrainConfig::default();
    let (model, report) =
        train_seizure_model(&raw_windows, &default_bands(), &cfg).unwrap();
    let val_acc = report.val_accuracy[report.best_epoch];
    if !(0.70..=0.80).contains(&val_acc) {
        println!(
            "note: validation accuracy {val_acc:.4} outside the expected \
             [0.70, 0.80] band (reported, not asserted)"
        );
    }

    let embeddings = extract_eegnet_patient_embeddings(&model, &records).unwrap();
    let points =
        PointSet::new(embeddings.iter().map(|e| e.vector.clone()).collect()).unwrap();
    if let Ok(labels_path) = std::env::var("EEGSTRAT_LABELS_CSV") {
        let labels = eegstrat::io::read_labels_csv(Path::new(&labels_path)).unwrap();
        let truth: Vec<usize> = embeddings
            .iter()
            .map(|e| {
                labels
                    .iter()
                    .find(|l| l.patient_id == e.patient_id)
                    .expect("label for every embedded patient")
                    .label as usize
            })
            .collect();
        let report = evaluate_all(&points, &truth, 0).unwrap();
        for m in &report.methods {
            println!(
                "real data, {}: accuracy {}/{} = {:.4}",
                m.method, m.correct, m.total, m.accuracy
            );
        }
    }
    println!("criterion 7 (real-data reproduction): PASS (ran on supplied data)");
}

#[test]
fn criterion_8_determinism_and_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // Checkpoint byte-idempotence through a real training run.
    let windows = separable_windows(81);
    let small: Vec<RawWindow> = windows.into_iter().take(40).collect();
    let cfg = TrainConfig { epochs: 2, batch_size: 16, seed: 8, ..TrainConfig::default() };
    let (model, _) = train_seizure_model(&small, &default_bands(), &cfg).unwrap();
    let p1 = d.join("c1.json");
    let p2 = d.join("c2.json");
    save_checkpoint(&Checkpoint::from_seizure_model(&model, cfg.seed), &p1).unwrap();
    let loaded = load_checkpoint(&p1).unwrap();
    save_checkpoint(&loaded, &p2).unwrap();
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "checkpoint save/load/save not byte-idempotent"
    );

    // Manifest replay: run evaluate, rebuild the command from its manifest,
    // and require byte-identical output.
    let bin = env!("CARGO_BIN_EXE_eegstrat");
    let spec = CohortSpec {
        group_a: GroupSpec {
            n_patients: 4,
            profile: BandProfile { amplitudes: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] },
            jitter: 0.05,
        },
        group_b: GroupSpec {
            n_patients: 4,
            profile: BandProfile { amplitudes: [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0] },
            jitter: 0.05,
        },
        windows_per_condition: 4,
        noise_sigma: 0.05,
        seed: 88,
    };
    let spec_path = d.join("cohort.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let data = d.join("data");
    let status = Command::new(bin)
        .args(["synth", "--spec", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    let model_path = d.join("ae.json");
    let report_path = d.join("ae_report.json");
    let status = Command::new(bin)
        .args([
            "train-ae",
            "--windows", data.join("windows.csv").to_str().unwrap(),
            "--out", model_path.to_str().unwrap(),
            "--report", report_path.to_str().unwrap(),
            "--epochs", "5",
            "--batch-size", "16",
            "--seed", "2",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let emb = d.join("e.csv");
    let status = Command::new(bin)
        .args([
            "embed",
            "--windows", data.join("windows.csv").to_str().unwrap(),
            "--model", model_path.to_str().unwrap(),
            "--source", "autoencoder",
            "--out", emb.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let eval1 = d.join("eval1.json");
    let status = Command::new(bin)
        .args([
            "evaluate",
            "--embeddings", emb.to_str().unwrap(),
            "--labels", data.join("labels.csv").to_str().unwrap(),
            "--source", "autoencoder",
            "--seed", "7",
            "--out", eval1.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    // Replay straight from the recorded manifest.
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.join("eval1.json.manifest.json")).unwrap(),
    )
    .unwrap();
    let command = manifest["command"].as_str().unwrap();
    let eval2 = d.join("eval2.json");
    let mut args: Vec<String> = vec![command.to_string()];
    for (flag, value) in manifest["flags"].as_object().unwrap() {
        let value = if flag == "--out" {
            eval2.to_str().unwrap().to_string()
        } else {
            value.as_str().unwrap().to_string()
        };
        args.push(flag.clone());
        args.push(value);
    }
    let status = Command::new(bin).args(&args).status().unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(&eval1).unwrap(),
        std::fs::read(&eval2).unwrap(),
        "replayed evaluate output differs"
    );
    println!("criterion 8 (determinism and persistence): PASS");
}
