//! Batch command-line front end composing the pipeline modules.
//!
//! Every run writes a `RunManifest` next to its primary output. Exit codes:
//! 0 success, 1 validation error, 2 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cluster::{
    gmm_cluster, kmeans_cluster, preprocess, spectral_cluster, standardize, ward_cluster,
    ClusterAssignment, GmmConfig, KmeansConfig, PointSet, PreprocessConfig, SpectralConfig,
    WardConfig,
};
use crate::embed::{
    extract_autoencoder_patient_embeddings, extract_eegnet_patient_embeddings, Condition,
    EmbeddingSource, WindowRecord,
};
use crate::eval::evaluate_all;
use crate::io::{
    load_checkpoint, read_embeddings_csv, read_json, read_labels_csv, read_raw_windows,
    read_window_csv, save_checkpoint, write_embeddings_csv, write_json, write_labels_csv,
    write_raw_windows, write_window_csv, Checkpoint, RunManifest,
};
use crate::signal::{band_feature_vector, default_bands, parse_band_config, BandDefinition};
use crate::synth::{synth_cohort, CohortSpec};
use crate::train::{train_autoencoder, train_seizure_model, TrainConfig};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "eegstrat",
    version,
    about = "EEG band-power embedding and patient stratification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-group cohort from a JSON spec.
    Synth(SynthArgs),
    /// Compute band-power feature CSV from raw windows.
    Bandpower(BandpowerArgs),
    /// Train the generator + EEGNet classifier on labeled raw windows.
    TrainEegnet(TrainEegnetArgs),
    /// Train the contextual autoencoder on band-power windows.
    TrainAe(TrainAeArgs),
    /// Extract per-patient embeddings from a trained model.
    Embed(EmbedArgs),
    /// Run one clustering algorithm over patient embeddings.
    Cluster(ClusterArgs),
    /// Score all four clustering algorithms against patient labels.
    Evaluate(EvaluateArgs),
    /// Render an evaluation JSON as a plain-text table.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long = "batch-size", default_value_t = 64)]
    batch_size: usize,
    #[arg(long = "val-fraction", default_value_t = 0.2)]
    val_fraction: f64,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainFlags {
    fn to_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            val_fraction: self.val_fraction,
            early_stop_patience: self.patience,
            seed: self.seed,
        }
    }

    fn manifest(&self, m: RunManifest) -> RunManifest {
        m.flag("--epochs", self.epochs)
            .flag("--lr", self.lr)
            .flag("--batch-size", self.batch_size)
            .flag("--val-fraction", self.val_fraction)
            .flag("--patience", self.patience)
            .flag("--seed", self.seed)
            .seed(self.seed)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// CohortSpec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BandpowerArgs {
    /// Raw window CSV (record_id,label,s0..s2047).
    #[arg(long)]
    raw: PathBuf,
    /// Output window CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional band-edge config file; defaults to the consumer-headset set.
    #[arg(long)]
    bands: Option<PathBuf>,
    /// patient_id written for every row.
    #[arg(long = "patient-id", default_value = "p00")]
    patient_id: String,
    /// Condition written for every row (rest or active).
    #[arg(long, default_value = "rest")]
    condition: String,
}

#[derive(Args)]
struct TrainEegnetArgs {
    #[arg(long)]
    raw: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Training report JSON output path.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    bands: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct TrainAeArgs {
    /// Window CSV input.
    #[arg(long)]
    windows: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    windows: PathBuf,
    /// Model checkpoint path.
    #[arg(long)]
    model: PathBuf,
    /// Embedding source: eegnet or autoencoder; must match the checkpoint.
    #[arg(long)]
    source: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Algorithm: kmeans, ward, gmm, or spectral.
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Force PCA to this dimension before clustering.
    #[arg(long = "reduce-dim")]
    reduce_dim: Option<usize>,
    /// Output assignment CSV (patient_id,cluster).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Patient label CSV (patient_id,label).
    #[arg(long)]
    labels: PathBuf,
    /// Expected embedding source; rejected if the CSV disagrees.
    #[arg(long)]
    source: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluation JSON produced by the evaluate subcommand.
    #[arg(long)]
    evaluation: PathBuf,
    /// Output text file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        Error::Csv(inner) => {
            if inner.is_io_error() {
                2
            } else {
                1
            }
        }
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Bandpower(a) => cmd_bandpower(a),
        Command::TrainEegnet(a) => cmd_train_eegnet(a),
        Command::TrainAe(a) => cmd_train_ae(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Manifest path for a file-valued `--out`.
fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn load_bands(path: &Option<PathBuf>) -> Result<Vec<BandDefinition>> {
    match path {
        Some(p) => parse_band_config(&std::fs::read_to_string(p)?),
        None => Ok(default_bands().to_vec()),
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec: CohortSpec = read_json(&a.spec)?;
    let cohort = synth_cohort(&spec)?;
    std::fs::create_dir_all(&a.out)?;
    write_window_csv(&a.out.join("windows.csv"), &cohort.records)?;
    write_raw_windows(&a.out.join("raw_windows.csv"), &cohort.raw_windows)?;
    write_labels_csv(&a.out.join("labels.csv"), &cohort.labels)?;
    RunManifest::new("synth")
        .flag("--spec", a.spec.display())
        .flag("--out", a.out.display())
        .seed(spec.seed)
        .input(&a.spec)?
        .write(&a.out.join("manifest.json"))
}

fn cmd_bandpower(a: BandpowerArgs) -> Result<()> {
    let bands = load_bands(&a.bands)?;
    let condition = Condition::parse(&a.condition)?;
    let windows = read_raw_windows(&a.raw)?;
    let records: Vec<WindowRecord> = windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            Ok(WindowRecord {
                patient_id: a.patient_id.clone(),
                condition,
                window_index: i as u32,
                band: band_feature_vector(w, &bands)?,
            })
        })
        .collect::<Result<_>>()?;
    write_window_csv(&a.out, &records)?;
    let mut manifest = RunManifest::new("bandpower")
        .flag("--raw", a.raw.display())
        .flag("--out", a.out.display())
        .flag("--patient-id", &a.patient_id)
        .flag("--condition", a.condition)
        .input(&a.raw)?;
    if let Some(b) = &a.bands {
        manifest = manifest.flag("--bands", b.display()).input(b)?;
    }
    manifest.write(&manifest_path(&a.out))
}

fn cmd_train_eegnet(a: TrainEegnetArgs) -> Result<()> {
    let bands = load_bands(&a.bands)?;
    let windows = read_raw_windows(&a.raw)?;
    let cfg = a.train.to_config();
    let (model, report) = train_seizure_model(&windows, &bands, &cfg)?;
    save_checkpoint(&Checkpoint::from_seizure_model(&model, cfg.seed), &a.out)?;
    write_json(&a.report, &report)?;
    let mut manifest = a.train.manifest(
        RunManifest::new("train-eegnet")
            .flag("--raw", a.raw.display())
            .flag("--out", a.out.display())
            .flag("--report", a.report.display())
            .input(&a.raw)?,
    );
    if let Some(b) = &a.bands {
        manifest = manifest.flag("--bands", b.display()).input(b)?;
    }
    manifest.write(&manifest_path(&a.out))
}

fn cmd_train_ae(a: TrainAeArgs) -> Result<()> {
    let records = read_window_csv(&a.windows)?;
    let cfg = a.train.to_config();
    let (model, report) = train_autoencoder(&records, &cfg)?;
    save_checkpoint(&Checkpoint::from_autoencoder_model(&model, cfg.seed), &a.out)?;
    write_json(&a.report, &report)?;
    a.train
        .manifest(
            RunManifest::new("train-ae")
                .flag("--windows", a.windows.display())
                .flag("--out", a.out.display())
                .flag("--report", a.report.display())
                .input(&a.windows)?,
        )
        .write(&manifest_path(&a.out))
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let source = EmbeddingSource::parse(&a.source)?;
    let records = read_window_csv(&a.windows)?;
    let checkpoint = load_checkpoint(&a.model)?;
    let embeddings = match source {
        EmbeddingSource::Eegnet => {
            let model = checkpoint.into_seizure_model()?;
            extract_eegnet_patient_embeddings(&model, &records)?
        }
        EmbeddingSource::Autoencoder => {
            let model = checkpoint.into_autoencoder_model()?;
            extract_autoencoder_patient_embeddings(&model, &records)?
        }
    };
    write_embeddings_csv(&a.out, &embeddings)?;
    RunManifest::new("embed")
        .flag("--windows", a.windows.display())
        .flag("--model", a.model.display())
        .flag("--source", a.source)
        .flag("--out", a.out.display())
        .input(&a.windows)?
        .input(&a.model)?
        .write(&manifest_path(&a.out))
}

fn embeddings_to_points(
    embeddings: &[crate::embed::PatientEmbedding],
) -> Result<(Vec<String>, PointSet)> {
    let ids: Vec<String> = embeddings.iter().map(|e| e.patient_id.clone()).collect();
    let rows: Vec<Vec<f64>> = embeddings.iter().map(|e| e.vector.clone()).collect();
    Ok((ids, PointSet::new(rows)?))
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let embeddings = read_embeddings_csv(&a.embeddings)?;
    let (ids, points) = embeddings_to_points(&embeddings)?;
    // Default policy mirrors evaluate: distance methods get z-scores,
    // density/affinity methods get the PCA projection.
    let reduced = |dim: usize| -> Result<PointSet> {
        Ok(preprocess(&points, &PreprocessConfig { target_dim: dim })?.points)
    };
    let assignment: ClusterAssignment = match a.method.as_str() {
        "kmeans" => {
            let input = match a.reduce_dim {
                Some(d) => reduced(d)?,
                None => standardize(&points)?,
            };
            kmeans_cluster(&input, &KmeansConfig { k: a.k, seed: a.seed, ..KmeansConfig::default() })?
                .assignment
        }
        "ward" => {
            let input = match a.reduce_dim {
                Some(d) => reduced(d)?,
                None => standardize(&points)?,
            };
            ward_cluster(&input, &WardConfig { k: a.k })?
        }
        "gmm" => {
            let input = reduced(a.reduce_dim.unwrap_or(10))?;
            gmm_cluster(&input, &GmmConfig { k: a.k, seed: a.seed, ..GmmConfig::default() })?
                .assignment
        }
        "spectral" => {
            let input = reduced(a.reduce_dim.unwrap_or(10))?;
            spectral_cluster(&input, &SpectralConfig { k: a.k, seed: a.seed })?
        }
        other => {
            return Err(Error::Invalid(format!(
                "unknown method {other:?} (expected kmeans, ward, gmm, or spectral)"
            )))
        }
    };
    let mut writer = csv::Writer::from_path(&a.out)?;
    writer.write_record(["patient_id", "cluster"])?;
    for (id, label) in ids.iter().zip(&assignment.labels) {
        writer.write_record([id.as_str(), &label.to_string()])?;
    }
    writer.flush().map_err(Error::Io)?;
    let mut manifest = RunManifest::new("cluster")
        .flag("--embeddings", a.embeddings.display())
        .flag("--method", &a.method)
        .flag("--k", a.k)
        .flag("--seed", a.seed)
        .flag("--out", a.out.display())
        .seed(a.seed)
        .input(&a.embeddings)?;
    if let Some(d) = a.reduce_dim {
        manifest = manifest.flag("--reduce-dim", d);
    }
    manifest.write(&manifest_path(&a.out))
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let source = EmbeddingSource::parse(&a.source)?;
    let embeddings = read_embeddings_csv(&a.embeddings)?;
    if let Some(e) = embeddings.iter().find(|e| e.source != source) {
        return Err(Error::Invalid(format!(
            "embedding for {} has source {}, expected {}",
            e.patient_id,
            e.source.as_str(),
            source.as_str()
        )));
    }
    let labels = read_labels_csv(&a.labels)?;
    let truth: Vec<usize> = embeddings
        .iter()
        .map(|e| {
            labels
                .iter()
                .find(|l| l.patient_id == e.patient_id)
                .map(|l| l.label as usize)
                .ok_or_else(|| {
                    Error::Invalid(format!("no label for patient {}", e.patient_id))
                })
        })
        .collect::<Result<_>>()?;
    let (_, points) = embeddings_to_points(&embeddings)?;
    let report = evaluate_all(&points, &truth, a.seed)?;
    write_json(&a.out, &report)?;
    RunManifest::new("evaluate")
        .flag("--embeddings", a.embeddings.display())
        .flag("--labels", a.labels.display())
        .flag("--source", a.source)
        .flag("--seed", a.seed)
        .flag("--out", a.out.display())
        .seed(a.seed)
        .input(&a.embeddings)?
        .input(&a.labels)?
        .write(&manifest_path(&a.out))
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let report: crate::eval::StratificationReport = read_json(&a.evaluation)?;
    let mut text = format!(
        "patients: {}\nembedding dim: {}\n\n{:<10} {:>9} {:>9} {}\n",
        report.n_patients, report.embedding_dim, "method", "accuracy", "correct", "sizes"
    );
    for m in &report.methods {
        text.push_str(&format!(
            "{:<10} {:>9.4} {:>4}/{:<4} {:?}\n",
            m.method, m.accuracy, m.correct, m.total, m.cluster_sizes
        ));
    }
    match &a.out {
        Some(out) => {
            std::fs::write(out, &text)?;
            RunManifest::new("report")
                .flag("--evaluation", a.evaluation.display())
                .flag("--out", out.display())
                .input(&a.evaluation)?
                .write(&manifest_path(out))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
