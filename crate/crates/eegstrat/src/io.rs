//! Persistence: dataset CSVs, patient embeddings, versioned model
//! checkpoints, report JSON, and run manifests.
//!
//! Every writer is deterministic: fixed field order, shortest round-trip
//! decimal floats, `\n` line endings. Readers validate instead of coercing.

use std::collections::BTreeMap;
use std::io::Read as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::{Condition, EmbeddingSource, PatientEmbedding, WindowRecord};
use crate::models::{
    AutoencoderConfig, AutoencoderModel, ContextAutoencoder, Eegnet82, EegnetConfig,
    GeneratorConfig, GeneratorHead, RunningStats, SeizureModel, Standardizer,
};
use crate::nn::Params;
use crate::signal::{BandVector, RawWindow, WINDOW_LEN};
use crate::synth::PatientLabel;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Window CSV (consumer-headset schema)
// ---------------------------------------------------------------------------

const WINDOW_HEADER: [&str; 13] = [
    "patient_id",
    "condition",
    "window_index",
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

fn check_header(actual: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if actual.len() != expected.len() {
        return Err(Error::Parse {
            location: "header".into(),
            message: format!("expected {} columns, got {}", expected.len(), actual.len()),
        });
    }
    for (i, want) in expected.iter().enumerate() {
        if &actual[i] != *want {
            return Err(Error::Parse {
                location: "header".into(),
                message: format!("column {i} must be {want}, got {}", &actual[i]),
            });
        }
    }
    Ok(())
}

fn parse_f64(cell: &str, row: usize, col: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        location: format!("row {row}, column {col}"),
        message: format!("not a number: {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            location: format!("row {row}, column {col}"),
            message: "non-finite value".into(),
        });
    }
    Ok(v)
}

pub fn read_window_csv(path: &Path) -> Result<Vec<WindowRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    check_header(reader.headers()?, &WINDOW_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, after header
        if record.len() != WINDOW_HEADER.len() {
            return Err(Error::Parse {
                location: format!("row {row}"),
                message: format!("expected 13 cells, got {}", record.len()),
            });
        }
        let condition = Condition::parse(&record[1]).map_err(|e| Error::Parse {
            location: format!("row {row}, column condition"),
            message: e.to_string(),
        })?;
        let window_index: u32 = record[2].trim().parse().map_err(|_| Error::Parse {
            location: format!("row {row}, column window_index"),
            message: format!("not an unsigned integer: {:?}", &record[2]),
        })?;
        let mut values = [0.0f64; 10];
        for (j, v) in values.iter_mut().enumerate() {
            *v = parse_f64(&record[j + 3], row, WINDOW_HEADER[j + 3])?;
        }
        let band = BandVector::from_array(values).map_err(|e| Error::Parse {
            location: format!("row {row}"),
            message: e.to_string(),
        })?;
        out.push(WindowRecord {
            patient_id: record[0].to_string(),
            condition,
            window_index,
            band,
        });
    }
    Ok(out)
}

pub fn write_window_csv(path: &Path, records: &[WindowRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(WINDOW_HEADER)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.patient_id.clone(),
            r.condition.as_str().to_string(),
            r.window_index.to_string(),
        ];
        row.extend(r.band.as_array().iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Raw window CSV (pre-converted clinical segments)
// ---------------------------------------------------------------------------

fn raw_header() -> Vec<String> {
    let mut h = vec!["record_id".to_string(), "label".to_string()];
    h.extend((0..WINDOW_LEN).map(|i| format!("s{i}")));
    h
}

pub fn read_raw_windows(path: &Path) -> Result<Vec<RawWindow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let expected = raw_header();
    let expected_refs: Vec<&str> = expected.iter().map(String::as_str).collect();
    check_header(reader.headers()?, &expected_refs)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != WINDOW_LEN + 2 {
            return Err(Error::Parse {
                location: format!("row {row}"),
                message: format!(
                    "expected {} samples, got {}",
                    WINDOW_LEN,
                    record.len().saturating_sub(2)
                ),
            });
        }
        let label: u8 = match record[1].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    location: format!("row {row}, column label"),
                    message: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        let samples: Vec<f64> = (0..WINDOW_LEN)
            .map(|j| parse_f64(&record[j + 2], row, &format!("s{j}")))
            .collect::<Result<_>>()?;
        out.push(RawWindow::new(samples, Some(label))?);
    }
    Ok(out)
}

pub fn write_raw_windows(path: &Path, windows: &[RawWindow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(raw_header())?;
    for (i, w) in windows.iter().enumerate() {
        let label = w.label().ok_or_else(|| {
            Error::Invalid(format!("window {i} has no label; raw CSV requires one"))
        })?;
        let mut row: Vec<String> = vec![format!("r{i:05}"), label.to_string()];
        row.extend(w.samples().iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Patient label and embedding CSVs
// ---------------------------------------------------------------------------

pub fn read_labels_csv(path: &Path) -> Result<Vec<PatientLabel>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    check_header(reader.headers()?, &["patient_id", "label"])?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let label: u8 = match record.get(1).unwrap_or("").trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    location: format!("row {row}, column label"),
                    message: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        out.push(PatientLabel {
            patient_id: record[0].to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn write_labels_csv(path: &Path, labels: &[PatientLabel]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["patient_id", "label"])?;
    for l in labels {
        writer.write_record([l.patient_id.as_str(), &l.label.to_string()])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Embedding CSV header: `patient_id,source,n_windows,e0..e{d-1}`. All rows
/// in one file share the source and dimension.
pub fn write_embeddings_csv(path: &Path, embeddings: &[PatientEmbedding]) -> Result<()> {
    let Some(first) = embeddings.first() else {
        return Err(Error::Invalid("no embeddings to write".into()));
    };
    let dim = first.vector.len();
    let mut header = vec![
        "patient_id".to_string(),
        "source".to_string(),
        "n_windows".to_string(),
    ];
    header.extend((0..dim).map(|i| format!("e{i}")));
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&header)?;
    for e in embeddings {
        if e.source != first.source || e.vector.len() != dim {
            return Err(Error::Invalid(format!(
                "embedding for {} mixes source or dimension within one file",
                e.patient_id
            )));
        }
        let mut row = vec![
            e.patient_id.clone(),
            e.source.as_str().to_string(),
            e.n_windows.to_string(),
        ];
        row.extend(e.vector.iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_embeddings_csv(path: &Path) -> Result<Vec<PatientEmbedding>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 4
        || &headers[0] != "patient_id"
        || &headers[1] != "source"
        || &headers[2] != "n_windows"
    {
        return Err(Error::Parse {
            location: "header".into(),
            message: "expected patient_id,source,n_windows,e0..".into(),
        });
    }
    let dim = headers.len() - 3;
    for (i, name) in headers.iter().skip(3).enumerate() {
        if name != format!("e{i}") {
            return Err(Error::Parse {
                location: "header".into(),
                message: format!("embedding column {} must be e{i}, got {name}", i + 3),
            });
        }
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let source = EmbeddingSource::parse(&record[1]).map_err(|e| Error::Parse {
            location: format!("row {row}, column source"),
            message: e.to_string(),
        })?;
        let n_windows: usize = record[2].trim().parse().map_err(|_| Error::Parse {
            location: format!("row {row}, column n_windows"),
            message: format!("not an unsigned integer: {:?}", &record[2]),
        })?;
        let vector: Vec<f64> = (0..dim)
            .map(|j| parse_f64(&record[j + 3], row, &format!("e{j}")))
            .collect::<Result<_>>()?;
        out.push(PatientEmbedding::new(
            record[0].to_string(),
            source,
            vector,
            n_windows,
        )?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

pub const CHECKPOINT_VERSION: u32 = 1;
pub const KIND_SEIZURE: &str = "generator+eegnet";
pub const KIND_AUTOENCODER: &str = "autoencoder";

/// Versioned text checkpoint. Field order is fixed by declaration, floats
/// use shortest round-trip decimals, so save is byte-deterministic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_config: Option<GeneratorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eegnet_config: Option<EegnetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub autoencoder_config: Option<AutoencoderConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_params: Option<Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eegnet_params: Option<Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub autoencoder_params: Option<Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bn_running: Option<[RunningStats; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
}

impl Checkpoint {
    pub fn from_seizure_model(model: &SeizureModel, seed: u64) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            kind: KIND_SEIZURE.to_string(),
            seed,
            generator_config: Some(model.generator.config),
            eegnet_config: Some(model.eegnet.config),
            autoencoder_config: None,
            generator_params: Some(model.generator.params.clone()),
            eegnet_params: Some(model.eegnet.params.clone()),
            autoencoder_params: None,
            bn_running: Some([
                model.eegnet.bn1.clone(),
                model.eegnet.bn2.clone(),
                model.eegnet.bn3.clone(),
            ]),
            standardizer: None,
        }
    }

    pub fn from_autoencoder_model(model: &AutoencoderModel, seed: u64) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            kind: KIND_AUTOENCODER.to_string(),
            seed,
            generator_config: None,
            eegnet_config: None,
            autoencoder_config: Some(model.net.config),
            generator_params: None,
            eegnet_params: None,
            autoencoder_params: Some(model.net.params.clone()),
            bn_running: None,
            standardizer: Some(model.standardizer.clone()),
        }
    }

    /// Rebuild the supervised model; fails on kind mismatch or if parameter
    /// counts disagree with the stored architecture.
    pub fn into_seizure_model(self) -> Result<SeizureModel> {
        if self.kind != KIND_SEIZURE {
            return Err(Error::Checkpoint(format!(
                "checkpoint kind is {:?}, expected {KIND_SEIZURE:?}",
                self.kind
            )));
        }
        let gen_cfg = self
            .generator_config
            .ok_or_else(|| Error::Checkpoint("missing generator_config".into()))?;
        let net_cfg = self
            .eegnet_config
            .ok_or_else(|| Error::Checkpoint("missing eegnet_config".into()))?;
        let gen_params = self
            .generator_params
            .ok_or_else(|| Error::Checkpoint("missing generator_params".into()))?;
        let net_params = self
            .eegnet_params
            .ok_or_else(|| Error::Checkpoint("missing eegnet_params".into()))?;
        let [bn1, bn2, bn3] = self
            .bn_running
            .ok_or_else(|| Error::Checkpoint("missing batchnorm running stats".into()))?;

        let mut generator = GeneratorHead::zeroed(gen_cfg);
        if gen_params.scalar_count() != generator.params.scalar_count() {
            return Err(Error::Checkpoint(format!(
                "generator parameter count {} does not match config ({})",
                gen_params.scalar_count(),
                generator.params.scalar_count()
            )));
        }
        restore_named(&mut generator.params, &gen_params)?;

        let mut eegnet = Eegnet82::new(net_cfg, &mut crate::models::ZeroRng)?;
        if net_params.scalar_count() != eegnet.parameter_count() {
            return Err(Error::Checkpoint(format!(
                "eegnet parameter count {} does not match config ({})",
                net_params.scalar_count(),
                eegnet.parameter_count()
            )));
        }
        restore_named(&mut eegnet.params, &net_params)?;
        eegnet.bn1 = bn1;
        eegnet.bn2 = bn2;
        eegnet.bn3 = bn3;
        Ok(SeizureModel { generator, eegnet })
    }

    pub fn into_autoencoder_model(self) -> Result<AutoencoderModel> {
        if self.kind != KIND_AUTOENCODER {
            return Err(Error::Checkpoint(format!(
                "checkpoint kind is {:?}, expected {KIND_AUTOENCODER:?}",
                self.kind
            )));
        }
        let cfg = self
            .autoencoder_config
            .ok_or_else(|| Error::Checkpoint("missing autoencoder_config".into()))?;
        let params = self
            .autoencoder_params
            .ok_or_else(|| Error::Checkpoint("missing autoencoder_params".into()))?;
        let standardizer = self
            .standardizer
            .ok_or_else(|| Error::Checkpoint("missing standardization stats".into()))?;
        let mut net = ContextAutoencoder::zeroed(cfg);
        if params.scalar_count() != net.params.scalar_count() {
            return Err(Error::Checkpoint(format!(
                "autoencoder parameter count {} does not match config ({})",
                params.scalar_count(),
                net.params.scalar_count()
            )));
        }
        restore_named(&mut net.params, &params)?;
        Ok(AutoencoderModel { net, standardizer })
    }
}

/// Shape- and name-checked parameter restore.
fn restore_named(target: &mut Params, source: &Params) -> Result<()> {
    if target.names() != source.names() {
        return Err(Error::Checkpoint(format!(
            "parameter names {:?} do not match expected {:?}",
            source.names(),
            target.names()
        )));
    }
    for (idx, tensor) in source.tensors().iter().enumerate() {
        if tensor.shape() != target.tensor(idx).shape() {
            return Err(Error::Checkpoint(format!(
                "parameter {} has shape {:?}, expected {:?}",
                source.names()[idx],
                tensor.shape(),
                target.tensor(idx).shape()
            )));
        }
    }
    target.restore(source.tensors().to_vec())
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(checkpoint)?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::Io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        Error::Checkpoint(format!("unreadable checkpoint (empty or truncated?): {e}"))
    })?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
        Some(v) => {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {v}, expected {CHECKPOINT_VERSION}"
            )))
        }
        None => return Err(Error::Checkpoint("missing version field".into())),
    }
    let checkpoint: Checkpoint = serde_json::from_value(value)
        .map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
    for params in [
        &checkpoint.generator_params,
        &checkpoint.eegnet_params,
        &checkpoint.autoencoder_params,
    ]
    .into_iter()
    .flatten()
    {
        for (name, tensor) in params.names().iter().zip(params.tensors()) {
            let product: usize = tensor.shape().iter().product();
            if product != tensor.data().len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: shape product {product} != data length {}",
                    tensor.data().len()
                )));
            }
        }
    }
    Ok(checkpoint)
}

// ---------------------------------------------------------------------------
// Report JSON and run manifests
// ---------------------------------------------------------------------------

/// Pretty JSON with a trailing newline; byte-deterministic for a fixed value.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::Io)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to replay a run: the command, its resolved flags,
/// seeds, and digests of every input file. No timestamps, so replaying a
/// run regenerates the manifest byte-identically too.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Flag name -> resolved value, sorted by name.
    pub flags: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// Input path -> sha256 hex digest, sorted by path.
    pub input_digests: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            flags: BTreeMap::new(),
            seeds: Vec::new(),
            input_digests: BTreeMap::new(),
        }
    }

    pub fn flag(mut self, name: &str, value: impl ToString) -> Self {
        self.flags.insert(name.to_string(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.input_digests
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ZeroRng;
    use crate::synth::{separable_cohort_spec, synth_cohort};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn window_csv_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let mut spec = separable_cohort_spec(1);
        spec.group_a.n_patients = 2;
        spec.group_b.n_patients = 2;
        spec.windows_per_condition = 2;
        let cohort = synth_cohort(&spec).unwrap();
        write_window_csv(&path, &cohort.records).unwrap();
        let back = read_window_csv(&path).unwrap();
        assert_eq!(back, cohort.records);
    }

    #[test]
    fn window_csv_empty_and_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("w.csv");
        std::fs::write(&path, format!("{}\n", WINDOW_HEADER.join(","))).unwrap();
        assert!(read_window_csv(&path).unwrap().is_empty());

        // Unknown condition names the row.
        let mut bad = WINDOW_HEADER.join(",");
        bad.push_str("\np1,sleep,0,1,1,1,1,1,1,1,1,50,50\n");
        std::fs::write(&path, bad).unwrap();
        let err = read_window_csv(&path).unwrap_err().to_string();
        assert!(err.contains("row 2"), "error was: {err}");
        assert!(err.contains("sleep"));

        // Reordered columns are rejected by name.
        let reordered = "condition,patient_id,window_index,delta,theta,low_alpha,high_alpha,low_beta,high_beta,low_gamma,mid_gamma,attention,meditation\n";
        std::fs::write(&path, reordered).unwrap();
        let err = read_window_csv(&path).unwrap_err().to_string();
        assert!(err.contains("patient_id"), "error was: {err}");

        // Non-numeric cell reports row and column.
        let mut nonnum = WINDOW_HEADER.join(",");
        nonnum.push_str("\np1,rest,0,1,abc,1,1,1,1,1,1,50,50\n");
        std::fs::write(&path, nonnum).unwrap();
        let err = read_window_csv(&path).unwrap_err().to_string();
        assert!(err.contains("theta") && err.contains("row 2"), "error was: {err}");
    }

    #[test]
    fn raw_windows_round_trip_full_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        let mut spec = separable_cohort_spec(2);
        spec.group_a.n_patients = 1;
        spec.group_b.n_patients = 1;
        spec.windows_per_condition = 1;
        let cohort = synth_cohort(&spec).unwrap();
        write_raw_windows(&path, &cohort.raw_windows).unwrap();
        let back = read_raw_windows(&path).unwrap();
        assert_eq!(back.len(), cohort.raw_windows.len());
        for (a, b) in back.iter().zip(&cohort.raw_windows) {
            assert_eq!(a.samples(), b.samples());
            assert_eq!(a.label(), b.label());
        }
    }

    #[test]
    fn raw_windows_reject_bad_shape_and_label() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        // 2047 samples.
        let mut header = vec!["record_id".to_string(), "label".to_string()];
        header.extend((0..2047).map(|i| format!("s{i}")));
        let mut text = header.join(",");
        text.push('\n');
        std::fs::write(&path, &text).unwrap();
        assert!(read_raw_windows(&path).is_err());

        // Label 2.
        let mut good_header = raw_header().join(",");
        good_header.push('\n');
        good_header.push_str("r0,2");
        for _ in 0..WINDOW_LEN {
            good_header.push_str(",0");
        }
        good_header.push('\n');
        std::fs::write(&path, good_header).unwrap();
        let err = read_raw_windows(&path).unwrap_err().to_string();
        assert!(err.contains("label"), "error was: {err}");
    }

    #[test]
    fn labels_and_embeddings_round_trip() {
        let dir = tempdir().unwrap();
        let labels = vec![
            PatientLabel { patient_id: "a01".into(), label: 1 },
            PatientLabel { patient_id: "b01".into(), label: 0 },
        ];
        let lpath = dir.path().join("labels.csv");
        write_labels_csv(&lpath, &labels).unwrap();
        assert_eq!(read_labels_csv(&lpath).unwrap(), labels);

        let embeddings = vec![
            PatientEmbedding::new(
                "a01".into(),
                EmbeddingSource::Autoencoder,
                (0..32).map(|i| i as f64 * 0.125).collect(),
                8,
            )
            .unwrap(),
            PatientEmbedding::new(
                "b01".into(),
                EmbeddingSource::Autoencoder,
                (0..32).map(|i| -(i as f64) / 3.0).collect(),
                8,
            )
            .unwrap(),
        ];
        let epath = dir.path().join("e.csv");
        write_embeddings_csv(&epath, &embeddings).unwrap();
        let back = read_embeddings_csv(&epath).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&embeddings) {
            assert_eq!(a.patient_id, b.patient_id);
            assert_eq!(a.vector, b.vector);
            assert_eq!(a.n_windows, b.n_windows);
        }
    }

    fn small_seizure_model() -> SeizureModel {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gen_cfg = GeneratorConfig { in_dim: 10, hidden: 4, out_len: 32 };
        let net_cfg = EegnetConfig {
            input_len: 32,
            f1: 2,
            depth_multiplier: 2,
            f2: 4,
            temporal_kernel: 8,
            separable_kernel: 4,
            pool1: 4,
            pool2: 8,
            ..EegnetConfig::default()
        };
        let generator = GeneratorHead::new(gen_cfg, &mut rng);
        let mut eegnet = Eegnet82::new(net_cfg, &mut rng).unwrap();
        // Seed running stats so eval mode works after load.
        eegnet.bn1.update(&vec![0.1; 2], &vec![1.0; 2], 0.1);
        eegnet.bn2.update(&vec![0.2; 4], &vec![1.5; 4], 0.1);
        eegnet.bn3.update(&vec![0.3; 4], &vec![2.0; 4], 0.1);
        SeizureModel { generator, eegnet }
    }

    #[test]
    fn checkpoint_save_load_save_is_byte_idempotent() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        let model = small_seizure_model();
        let ckpt = Checkpoint::from_seizure_model(&model, 9);
        save_checkpoint(&ckpt, &p1).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn checkpoint_restores_parameters_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.json");
        let model = small_seizure_model();
        save_checkpoint(&Checkpoint::from_seizure_model(&model, 0), &path).unwrap();
        let restored = load_checkpoint(&path).unwrap().into_seizure_model().unwrap();
        assert_eq!(restored.generator.params, model.generator.params);
        assert_eq!(restored.eegnet.params, model.eegnet.params);
        assert_eq!(restored.eegnet.bn2, model.eegnet.bn2);
    }

    #[test]
    fn checkpoint_kind_mismatch_names_both_kinds() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.json");
        let model = small_seizure_model();
        save_checkpoint(&Checkpoint::from_seizure_model(&model, 0), &path).unwrap();
        let err = load_checkpoint(&path)
            .unwrap()
            .into_autoencoder_model()
            .unwrap_err()
            .to_string();
        assert!(err.contains(KIND_SEIZURE) && err.contains(KIND_AUTOENCODER));
    }

    #[test]
    fn checkpoint_rejects_empty_file_and_bad_version() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, "").unwrap();
        assert!(load_checkpoint(&path).is_err());
        std::fs::write(&path, "{\"version\": 999, \"kind\": \"autoencoder\", \"seed\": 0}")
            .unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("version"));
    }

    #[test]
    fn checkpoint_rejects_parameter_count_mismatch() {
        let model = small_seizure_model();
        let mut ckpt = Checkpoint::from_seizure_model(&model, 0);
        // Claim a wider config than the stored tensors.
        ckpt.eegnet_config = Some(EegnetConfig {
            input_len: 64,
            f1: 2,
            depth_multiplier: 2,
            f2: 4,
            temporal_kernel: 8,
            separable_kernel: 4,
            pool1: 4,
            pool2: 8,
            ..EegnetConfig::default()
        });
        let err = ckpt.into_seizure_model().unwrap_err().to_string();
        assert!(err.contains("parameter count"), "error was: {err}");
    }

    #[test]
    fn autoencoder_checkpoint_round_trip_and_missing_stats() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ae.json");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ContextAutoencoder::new(AutoencoderConfig::default(), &mut rng);
        let standardizer = Standardizer::fit(&[vec![1.0; 10], vec![2.0; 10]]).unwrap();
        let model = AutoencoderModel { net, standardizer };
        save_checkpoint(&Checkpoint::from_autoencoder_model(&model, 3), &path).unwrap();
        let back = load_checkpoint(&path).unwrap().into_autoencoder_model().unwrap();
        assert_eq!(back.net.params, model.net.params);
        assert_eq!(back.standardizer, model.standardizer);

        let mut stripped = Checkpoint::from_autoencoder_model(&model, 3);
        stripped.standardizer = None;
        let err = stripped.into_autoencoder_model().unwrap_err().to_string();
        assert!(err.contains("standardization"));
    }

    #[test]
    fn manifest_is_deterministic_and_digests_inputs() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.csv");
        std::fs::write(&input, "hello\n").unwrap();
        let m1 = RunManifest::new("evaluate")
            .flag("--seed", 7)
            .flag("--k", 2)
            .seed(7)
            .input(&input)
            .unwrap();
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        m1.write(&p1).unwrap();
        let m2: RunManifest = read_json(&p1).unwrap();
        assert_eq!(m1, m2);
        m2.write(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // Known digest of "hello\n".
        assert_eq!(
            m1.input_digests.values().next().unwrap(),
            "5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03"
        );
    }

    #[test]
    fn zeroed_models_exist_for_restore_paths() {
        // ZeroRng keeps Eegnet82::new deterministic without a seeded RNG.
        let net = Eegnet82::new(EegnetConfig::default(), &mut ZeroRng).unwrap();
        assert_eq!(net.parameter_count(), 2145);
    }
}
