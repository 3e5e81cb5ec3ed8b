//! Window-level embedding extraction and patient-level aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::models::{AutoencoderModel, SeizureModel, Standardizer};
use crate::nn::{Graph, Tensor};
use crate::signal::BandVector;
use crate::{Error, Result};

/// Recording condition of a consumer-EEG window.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Rest,
    Active,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Rest => "rest",
            Condition::Active => "active",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rest" => Ok(Condition::Rest),
            "active" => Ok(Condition::Active),
            other => Err(Error::Invalid(format!(
                "unknown condition: {other} (expected rest or active)"
            ))),
        }
    }
}

/// One 1-second consumer-EEG window: patient, condition, band features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub patient_id: String,
    pub condition: Condition,
    pub window_index: u32,
    pub band: BandVector,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Eegnet,
    Autoencoder,
}

impl EmbeddingSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingSource::Eegnet => "eegnet",
            EmbeddingSource::Autoencoder => "autoencoder",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eegnet" => Ok(EmbeddingSource::Eegnet),
            "autoencoder" => Ok(EmbeddingSource::Autoencoder),
            other => Err(Error::Invalid(format!(
                "unknown embedding source: {other}"
            ))),
        }
    }

    /// Patient-level dimension: mean‖std doubles the window dimension.
    pub fn patient_dim(&self) -> usize {
        match self {
            EmbeddingSource::Eegnet => 2048,
            EmbeddingSource::Autoencoder => 32,
        }
    }
}

/// Aggregated per-patient vector (elementwise mean ‖ population std).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatientEmbedding {
    pub patient_id: String,
    pub source: EmbeddingSource,
    pub vector: Vec<f64>,
    pub n_windows: usize,
}

impl PatientEmbedding {
    pub fn new(
        patient_id: String,
        source: EmbeddingSource,
        vector: Vec<f64>,
        n_windows: usize,
    ) -> Result<Self> {
        if vector.len() != source.patient_dim() {
            return Err(Error::Shape(format!(
                "patient embedding for source {} must have {} dims, got {}",
                source.as_str(),
                source.patient_dim(),
                vector.len()
            )));
        }
        if n_windows == 0 {
            return Err(Error::Invalid("patient embedding needs >= 1 window".into()));
        }
        if let Some(index) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            patient_id,
            source,
            vector,
            n_windows,
        })
    }
}

/// Per-patient condition summaries: for each of (rest, active), the mean
/// standardized power of six feature groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextSummary {
    /// 12 values: rest six groups then active six groups.
    pub values: Vec<f64>,
    pub rest_missing: bool,
    pub active_missing: bool,
}

pub const CONTEXT_DIM: usize = 12;

/// Six feature groups over a standardized 10-vector: delta, theta,
/// alpha (low+high), beta (low+high), gamma (low+mid), proxy mean.
fn group_means(z: &[f64]) -> [f64; 6] {
    [
        z[0],
        z[1],
        (z[2] + z[3]) / 2.0,
        (z[4] + z[5]) / 2.0,
        (z[6] + z[7]) / 2.0,
        (z[8] + z[9]) / 2.0,
    ]
}

/// Condition summaries for one patient's windows. A condition with no
/// windows contributes zeros and sets its missing flag.
pub fn context_summaries(
    windows: &[WindowRecord],
    standardizer: &Standardizer,
) -> Result<ContextSummary> {
    if windows.is_empty() {
        return Err(Error::Invalid("context summaries: no windows".into()));
    }
    let mut values = vec![0.0; CONTEXT_DIM];
    let mut missing = [true, true];
    for (slot, condition) in [(0usize, Condition::Rest), (1, Condition::Active)] {
        let mut acc = [0.0; 6];
        let mut count = 0usize;
        for w in windows.iter().filter(|w| w.condition == condition) {
            let z = standardizer.apply(&w.band.as_array());
            for (a, g) in acc.iter_mut().zip(group_means(&z)) {
                *a += g;
            }
            count += 1;
        }
        if count > 0 {
            missing[slot] = false;
            for (out, a) in values[slot * 6..(slot + 1) * 6].iter_mut().zip(acc) {
                *out = a / count as f64;
            }
        }
    }
    Ok(ContextSummary {
        values,
        rest_missing: missing[0],
        active_missing: missing[1],
    })
}

/// Flattened penultimate EEGNet feature map for one band vector.
pub fn eegnet_window_embedding(model: &SeizureModel, band: &BandVector) -> Result<Vec<f64>> {
    Ok(eegnet_window_embeddings(model, std::slice::from_ref(band))?.remove(0))
}

/// Batched variant of [`eegnet_window_embedding`]; rows align with input.
pub fn eegnet_window_embeddings(
    model: &SeizureModel,
    bands: &[BandVector],
) -> Result<Vec<Vec<f64>>> {
    if bands.is_empty() {
        return Ok(Vec::new());
    }
    let n = bands.len();
    let data: Vec<f64> = bands.iter().flat_map(|b| b.as_array()).collect();
    let mut g = Graph::new();
    let x = g.leaf(Tensor::new(vec![n, 10], data)?);
    let (_, emb) = model.forward_eval(&mut g, x)?;
    let dim = model.eegnet.config.embedding_dim();
    let flat = g.value(emb).data();
    Ok((0..n).map(|i| flat[i * dim..(i + 1) * dim].to_vec()).collect())
}

/// 16-d contextual embedding: autoencoder code (4) ‖ patient context (12).
pub fn autoencoder_window_embedding(
    model: &AutoencoderModel,
    record: &WindowRecord,
    context: &ContextSummary,
) -> Result<Vec<f64>> {
    if context.values.len() != CONTEXT_DIM {
        return Err(Error::Shape(format!(
            "context must have {} values, got {}",
            CONTEXT_DIM,
            context.values.len()
        )));
    }
    let z = model.standardizer.apply(&record.band.as_array());
    let mut g = Graph::new();
    let x = g.leaf(Tensor::new(vec![1, z.len()], z)?);
    let bound = model.net.params.bind(&mut g);
    let (_, code) = model.net.forward(&mut g, x, &bound)?;
    let mut out = g.value(code).data().to_vec();
    out.extend_from_slice(&context.values);
    Ok(out)
}

/// Elementwise mean ‖ population standard deviation over one patient's
/// window embeddings.
pub fn aggregate_patient(
    patient_id: &str,
    source: EmbeddingSource,
    window_embeddings: &[Vec<f64>],
) -> Result<PatientEmbedding> {
    if window_embeddings.is_empty() {
        return Err(Error::Invalid(format!(
            "patient {patient_id}: no window embeddings"
        )));
    }
    let d = window_embeddings[0].len();
    if window_embeddings.iter().any(|e| e.len() != d) {
        return Err(Error::Shape(format!(
            "patient {patient_id}: inconsistent embedding dimensions"
        )));
    }
    let n = window_embeddings.len() as f64;
    let mut mean = vec![0.0; d];
    for e in window_embeddings {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut std = vec![0.0; d];
    for e in window_embeddings {
        for ((s, m), v) in std.iter_mut().zip(&mean).zip(e) {
            *s += (v - m) * (v - m);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
    }
    let mut vector = mean;
    vector.extend(std);
    PatientEmbedding::new(
        patient_id.to_string(),
        source,
        vector,
        window_embeddings.len(),
    )
}

/// Records grouped by patient id, in deterministic (sorted) order.
pub fn group_by_patient(records: &[WindowRecord]) -> BTreeMap<String, Vec<&WindowRecord>> {
    let mut map: BTreeMap<String, Vec<&WindowRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.patient_id.clone()).or_default().push(r);
    }
    map
}

/// Full EEGNet-path extraction: one patient embedding per patient id.
pub fn extract_eegnet_patient_embeddings(
    model: &SeizureModel,
    records: &[WindowRecord],
) -> Result<Vec<PatientEmbedding>> {
    let mut out = Vec::new();
    for (pid, windows) in group_by_patient(records) {
        let bands: Vec<BandVector> = windows.iter().map(|w| w.band).collect();
        let embs = eegnet_window_embeddings(model, &bands)?;
        out.push(aggregate_patient(&pid, EmbeddingSource::Eegnet, &embs)?);
    }
    Ok(out)
}

/// Full autoencoder-path extraction with shared per-patient context.
pub fn extract_autoencoder_patient_embeddings(
    model: &AutoencoderModel,
    records: &[WindowRecord],
) -> Result<Vec<PatientEmbedding>> {
    let mut out = Vec::new();
    for (pid, windows) in group_by_patient(records) {
        let owned: Vec<WindowRecord> = windows.iter().map(|&w| w.clone()).collect();
        let context = context_summaries(&owned, &model.standardizer)?;
        let mut embs = Vec::with_capacity(owned.len());
        for w in &owned {
            embs.push(autoencoder_window_embedding(model, w, &context)?);
        }
        out.push(aggregate_patient(&pid, EmbeddingSource::Autoencoder, &embs)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AutoencoderConfig, ContextAutoencoder};

    fn record(pid: &str, condition: Condition, idx: u32, a: [f64; 10]) -> WindowRecord {
        WindowRecord {
            patient_id: pid.into(),
            condition,
            window_index: idx,
            band: BandVector::from_array(a).unwrap(),
        }
    }

    fn identity_standardizer() -> Standardizer {
        Standardizer {
            mean: vec![0.0; 10],
            std: vec![1.0; 10],
            floored: vec![],
        }
    }

    fn band(a: [f64; 10]) -> [f64; 10] {
        a
    }

    #[test]
    fn aggregate_single_window_has_zero_std() {
        let e: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let agg = aggregate_patient_raw(&[e.clone()]);
        assert_eq!(&agg[..8], e.as_slice());
        assert!(agg[8..].iter().all(|&v| v == 0.0));
    }

    // Unvalidated aggregation used by dimension-free tests.
    fn aggregate_patient_raw(embs: &[Vec<f64>]) -> Vec<f64> {
        let d = embs[0].len();
        let n = embs.len() as f64;
        let mut mean = vec![0.0; d];
        for e in embs {
            for (m, v) in mean.iter_mut().zip(e) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; d];
        for e in embs {
            for ((s, m), v) in std.iter_mut().zip(&mean).zip(e) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in std.iter_mut() {
            *s = s.sqrt();
        }
        mean.extend(std);
        mean
    }

    #[test]
    fn aggregate_opposite_windows() {
        let e = vec![1.0, -2.0, 3.0];
        let neg: Vec<f64> = e.iter().map(|v| -v).collect();
        let agg = aggregate_patient_raw(&[e.clone(), neg]);
        assert_eq!(&agg[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&agg[3..], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn aggregate_identical_windows_matches_single_copy() {
        let e = vec![0.5, 1.5];
        let once = aggregate_patient_raw(&[e.clone()]);
        let thrice = aggregate_patient_raw(&[e.clone(), e.clone(), e]);
        assert_eq!(once, thrice);
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let a = vec![1.0, 2.0];
        let b = vec![3.0, -1.0];
        let c = vec![0.0, 4.0];
        let x = aggregate_patient_raw(&[a.clone(), b.clone(), c.clone()]);
        let y = aggregate_patient_raw(&[c, a, b]);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn patient_embedding_enforces_source_dimension() {
        assert!(PatientEmbedding::new("p".into(), EmbeddingSource::Eegnet, vec![0.0; 2048], 1).is_ok());
        assert!(PatientEmbedding::new("p".into(), EmbeddingSource::Eegnet, vec![0.0; 32], 1).is_err());
        assert!(
            PatientEmbedding::new("p".into(), EmbeddingSource::Autoencoder, vec![0.0; 32], 1).is_ok()
        );
    }

    #[test]
    fn context_missing_condition_is_zeroed_and_flagged() {
        let r = record("p1", Condition::Rest, 0, band([1.0; 10]));
        let s = context_summaries(&[r], &identity_standardizer()).unwrap();
        assert!(!s.rest_missing);
        assert!(s.active_missing);
        assert!(s.values[6..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn context_symmetry_for_identical_conditions() {
        let a = record("p1", Condition::Rest, 0, band([2.0; 10]));
        let b = record("p1", Condition::Active, 1, band([2.0; 10]));
        let s = context_summaries(&[a, b], &identity_standardizer()).unwrap();
        assert_eq!(&s.values[..6], &s.values[6..]);
    }

    #[test]
    fn context_hand_example() {
        // Two rest windows with known values; standardizer is the identity,
        // so group values are plain means.
        let a = record(
            "p1",
            Condition::Rest,
            0,
            [1.0, 2.0, 3.0, 5.0, 1.0, 3.0, 0.0, 2.0, 10.0, 30.0],
        );
        let b = record(
            "p1",
            Condition::Rest,
            1,
            [3.0, 4.0, 1.0, 3.0, 3.0, 5.0, 4.0, 2.0, 20.0, 40.0],
        );
        let s = context_summaries(&[a, b], &identity_standardizer()).unwrap();
        // Hand arithmetic: mean over windows of group means.
        // delta: (1+3)/2 = 2; theta: (2+4)/2 = 3; alpha: (4+2)/2 = 3;
        // beta: (2+4)/2 = 3; gamma: (1+3)/2 = 2; proxy: (20+30)/2 = 25.
        assert_eq!(&s.values[..6], &[2.0, 3.0, 3.0, 3.0, 2.0, 25.0]);
        assert!(context_summaries(&[], &identity_standardizer()).is_err());
    }

    #[test]
    fn autoencoder_embedding_is_sixteen_dimensional_with_shared_context() {
        let model = AutoencoderModel {
            net: ContextAutoencoder::zeroed(AutoencoderConfig::default()),
            standardizer: identity_standardizer(),
        };
        let a = record("p1", Condition::Rest, 0, band([1.0; 10]));
        let b = record("p1", Condition::Active, 1, band([0.5; 10]));
        let ctx = context_summaries(&[a.clone(), b.clone()], &model.standardizer).unwrap();
        let ea = autoencoder_window_embedding(&model, &a, &ctx).unwrap();
        let eb = autoencoder_window_embedding(&model, &b, &ctx).unwrap();
        assert_eq!(ea.len(), 16);
        assert_eq!(eb.len(), 16);
        assert_eq!(&ea[4..], &eb[4..]);
        // Zero-weight encoder: code components are zero.
        assert!(ea[..4].iter().all(|&v| v == 0.0));
    }
}
