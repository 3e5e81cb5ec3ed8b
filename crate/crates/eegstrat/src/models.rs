//! The three fixed architectures: the generator head that lifts a 10-d band
//! vector to a pseudo-waveform, the EEGNet-8-2 classifier with an embedding
//! tap, and the contextual autoencoder.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::nn::{uniform_init, Graph, Params, Padding, Tensor, Var};
use crate::{Error, Result};

const ELU_ALPHA: f64 = 1.0;

/// Per-feature z-scoring statistics, variance floored at 1e-12.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Indices of features whose variance hit the floor.
    pub floored: Vec<usize>,
}

impl Standardizer {
    pub const VARIANCE_FLOOR: f64 = 1e-12;

    /// Fit over rows of equal length.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("standardizer: empty dataset".into()));
        }
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for row in rows {
            if row.len() != d {
                return Err(Error::Shape("standardizer: ragged rows".into()));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(row) {
                *v += (x - m) * (x - m);
            }
        }
        let mut floored = Vec::new();
        let std: Vec<f64> = var
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = v / n as f64;
                if v < Self::VARIANCE_FLOOR {
                    floored.push(i);
                    Self::VARIANCE_FLOOR.sqrt()
                } else {
                    v.sqrt()
                }
            })
            .collect();
        Ok(Self { mean, std, floored })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Per-channel running mean/variance for batch norm inference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub initialized: bool,
}

impl RunningStats {
    fn new(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
            initialized: false,
        }
    }

    /// First batch seeds the stats directly; later batches blend with
    /// `momentum`.
    pub(crate) fn update(&mut self, batch_mean: &[f64], batch_var: &[f64], momentum: f64) {
        if !self.initialized {
            self.mean.copy_from_slice(batch_mean);
            self.var.copy_from_slice(batch_var);
            self.initialized = true;
        } else {
            for (r, b) in self.mean.iter_mut().zip(batch_mean) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
            for (r, b) in self.var.iter_mut().zip(batch_var) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Generator head
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_len: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            in_dim: 10,
            hidden: 256,
            out_len: 2048,
        }
    }
}

/// Dense 10→hidden (ELU) then hidden→2048 (linear), reshaped to `(1, 2048)`.
#[derive(Clone, Debug)]
pub struct GeneratorHead {
    pub config: GeneratorConfig,
    pub params: Params,
}

impl GeneratorHead {
    // Params order: w1, b1, w2, b2.
    pub fn new(config: GeneratorConfig, rng: &mut dyn RngCore) -> Self {
        let mut params = Params::new();
        params.add(
            "gen.w1",
            uniform_init(vec![config.hidden, config.in_dim], config.in_dim, rng),
        );
        params.add("gen.b1", Tensor::zeros(vec![config.hidden]));
        params.add(
            "gen.w2",
            uniform_init(vec![config.out_len, config.hidden], config.hidden, rng),
        );
        params.add("gen.b2", Tensor::zeros(vec![config.out_len]));
        Self { config, params }
    }

    pub fn zeroed(config: GeneratorConfig) -> Self {
        let mut params = Params::new();
        params.add("gen.w1", Tensor::zeros(vec![config.hidden, config.in_dim]));
        params.add("gen.b1", Tensor::zeros(vec![config.hidden]));
        params.add("gen.w2", Tensor::zeros(vec![config.out_len, config.hidden]));
        params.add("gen.b2", Tensor::zeros(vec![config.out_len]));
        Self { config, params }
    }

    /// `x` is `[N, in_dim]`; output is `[N, 1, out_len]`.
    pub fn forward(&self, g: &mut Graph, x: Var, bound: &[Var]) -> Result<Var> {
        let n = {
            let xs = g.value(x).shape();
            if xs.len() != 2 || xs[1] != self.config.in_dim {
                return Err(Error::Shape(format!(
                    "generator: expected [N, {}], got {:?}",
                    self.config.in_dim, xs
                )));
            }
            xs[0]
        };
        let h = g.dense(x, bound[0], bound[1])?;
        let h = g.elu(h, ELU_ALPHA);
        let y = g.dense(h, bound[2], bound[3])?;
        g.reshape(y, vec![n, 1, self.config.out_len])
    }
}

// ---------------------------------------------------------------------------
// EEGNet-8-2
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EegnetConfig {
    pub input_len: usize,
    pub f1: usize,
    pub depth_multiplier: usize,
    pub f2: usize,
    pub temporal_kernel: usize,
    pub separable_kernel: usize,
    pub pool1: usize,
    pub pool2: usize,
    pub dropout_p: f64,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for EegnetConfig {
    fn default() -> Self {
        Self {
            input_len: 2048,
            f1: 8,
            depth_multiplier: 2,
            f2: 16,
            temporal_kernel: 64,
            separable_kernel: 16,
            pool1: 4,
            pool2: 8,
            dropout_p: 0.25,
            bn_eps: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

impl EegnetConfig {
    pub fn depth_channels(&self) -> usize {
        self.f1 * self.depth_multiplier
    }

    /// Flattened penultimate dimension: `F2 * input_len / (pool1 * pool2)`.
    pub fn embedding_dim(&self) -> usize {
        self.f2 * self.input_len / (self.pool1 * self.pool2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len % (self.pool1 * self.pool2) != 0 {
            return Err(Error::Invalid(format!(
                "eegnet: input length {} not divisible by pool product {}",
                self.input_len,
                self.pool1 * self.pool2
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Invalid(format!(
                "eegnet: dropout probability {} outside [0, 1)",
                self.dropout_p
            )));
        }
        Ok(())
    }
}

/// EEGNet-8-2 with a flattened penultimate embedding tap.
#[derive(Clone, Debug)]
pub struct Eegnet82 {
    pub config: EegnetConfig,
    pub params: Params,
    pub bn1: RunningStats,
    pub bn2: RunningStats,
    pub bn3: RunningStats,
}

impl Eegnet82 {
    // Params order: temporal, bn1_gamma, bn1_beta, depthwise, bn2_gamma,
    // bn2_beta, sep_depth, sep_point, bn3_gamma, bn3_beta, head_w, head_b.
    pub fn new(config: EegnetConfig, rng: &mut dyn RngCore) -> Result<Self> {
        config.validate()?;
        let dc = config.depth_channels();
        let emb = config.embedding_dim();
        let mut params = Params::new();
        params.add(
            "eegnet.temporal",
            uniform_init(
                vec![config.f1, 1, config.temporal_kernel],
                config.temporal_kernel,
                rng,
            ),
        );
        params.add("eegnet.bn1.gamma", Tensor::new(vec![config.f1], vec![1.0; config.f1])?);
        params.add("eegnet.bn1.beta", Tensor::zeros(vec![config.f1]));
        params.add("eegnet.depthwise", uniform_init(vec![dc, 1, 1], 1, rng));
        params.add("eegnet.bn2.gamma", Tensor::new(vec![dc], vec![1.0; dc])?);
        params.add("eegnet.bn2.beta", Tensor::zeros(vec![dc]));
        params.add(
            "eegnet.sep_depth",
            uniform_init(vec![dc, 1, config.separable_kernel], config.separable_kernel, rng),
        );
        params.add("eegnet.sep_point", uniform_init(vec![config.f2, dc, 1], dc, rng));
        params.add("eegnet.bn3.gamma", Tensor::new(vec![config.f2], vec![1.0; config.f2])?);
        params.add("eegnet.bn3.beta", Tensor::zeros(vec![config.f2]));
        params.add("eegnet.head_w", uniform_init(vec![1, emb], emb, rng));
        params.add("eegnet.head_b", Tensor::zeros(vec![1]));
        Ok(Self {
            config,
            params,
            bn1: RunningStats::new(config.f1),
            bn2: RunningStats::new(dc),
            bn3: RunningStats::new(config.f2),
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    fn check_input(&self, g: &Graph, x: Var) -> Result<usize> {
        let xs = g.value(x).shape();
        if xs.len() != 3 || xs[1] != 1 || xs[2] != self.config.input_len {
            return Err(Error::Shape(format!(
                "eegnet: expected [N, 1, {}], got {:?}",
                self.config.input_len, xs
            )));
        }
        Ok(xs[0])
    }

    /// Training-mode forward over `[N, 1, L]`: batch-stat batch norm (running
    /// stats updated), dropout from `rng`. Returns `(probability [N],
    /// embedding [N, emb])`.
    pub fn forward_train(
        &mut self,
        g: &mut Graph,
        x: Var,
        bound: &[Var],
        rng: &mut dyn RngCore,
    ) -> Result<(Var, Var)> {
        let n = self.check_input(g, x)?;
        let cfg = self.config;
        let c = g.conv1d(x, bound[0], 1, Padding::Same)?;
        let (c, m1, v1) = g.batchnorm_train(c, bound[1], bound[2], cfg.bn_eps)?;
        self.bn1.update(&m1, &v1, cfg.bn_momentum);
        let c = g.conv1d(c, bound[3], cfg.f1, Padding::Same)?;
        let (c, m2, v2) = g.batchnorm_train(c, bound[4], bound[5], cfg.bn_eps)?;
        self.bn2.update(&m2, &v2, cfg.bn_momentum);
        let c = g.elu(c, ELU_ALPHA);
        let c = g.avg_pool(c, cfg.pool1)?;
        let c = if cfg.dropout_p > 0.0 {
            g.dropout(c, cfg.dropout_p, rng)
        } else {
            c
        };
        let c = g.conv1d(c, bound[6], cfg.depth_channels(), Padding::Same)?;
        let c = g.conv1d(c, bound[7], 1, Padding::Same)?;
        let (c, m3, v3) = g.batchnorm_train(c, bound[8], bound[9], cfg.bn_eps)?;
        self.bn3.update(&m3, &v3, cfg.bn_momentum);
        let c = g.elu(c, ELU_ALPHA);
        let c = g.avg_pool(c, cfg.pool2)?;
        let c = if cfg.dropout_p > 0.0 {
            g.dropout(c, cfg.dropout_p, rng)
        } else {
            c
        };
        let emb = g.reshape(c, vec![n, cfg.embedding_dim()])?;
        let logit = g.dense(emb, bound[10], bound[11])?;
        let prob = g.sigmoid(logit);
        let prob = g.reshape(prob, vec![n])?;
        Ok((prob, emb))
    }

    /// Inference-mode forward: running-stat batch norm, no dropout.
    /// Deterministic; errors if the running stats were never initialized.
    pub fn forward_eval(&self, g: &mut Graph, x: Var, bound: &[Var]) -> Result<(Var, Var)> {
        if !(self.bn1.initialized && self.bn2.initialized && self.bn3.initialized) {
            return Err(Error::Invalid(
                "eegnet: eval mode before any training step (batch norm running stats uninitialized)"
                    .into(),
            ));
        }
        let n = self.check_input(g, x)?;
        let cfg = self.config;
        let c = g.conv1d(x, bound[0], 1, Padding::Same)?;
        let c = g.batchnorm_eval(c, bound[1], bound[2], &self.bn1.mean, &self.bn1.var, cfg.bn_eps)?;
        let c = g.conv1d(c, bound[3], cfg.f1, Padding::Same)?;
        let c = g.batchnorm_eval(c, bound[4], bound[5], &self.bn2.mean, &self.bn2.var, cfg.bn_eps)?;
        let c = g.elu(c, ELU_ALPHA);
        let c = g.avg_pool(c, cfg.pool1)?;
        let c = g.conv1d(c, bound[6], cfg.depth_channels(), Padding::Same)?;
        let c = g.conv1d(c, bound[7], 1, Padding::Same)?;
        let c = g.batchnorm_eval(c, bound[8], bound[9], &self.bn3.mean, &self.bn3.var, cfg.bn_eps)?;
        let c = g.elu(c, ELU_ALPHA);
        let c = g.avg_pool(c, cfg.pool2)?;
        let emb = g.reshape(c, vec![n, cfg.embedding_dim()])?;
        let logit = g.dense(emb, bound[10], bound[11])?;
        let prob = g.sigmoid(logit);
        let prob = g.reshape(prob, vec![n])?;
        Ok((prob, emb))
    }
}

// ---------------------------------------------------------------------------
// Contextual autoencoder
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub in_dim: usize,
    pub hidden: usize,
    pub code_dim: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            in_dim: 10,
            hidden: 8,
            code_dim: 4,
        }
    }
}

/// Symmetric 10→8→4→8→10 network; the 4-d code is the encoder output.
#[derive(Clone, Debug)]
pub struct ContextAutoencoder {
    pub config: AutoencoderConfig,
    pub params: Params,
}

impl ContextAutoencoder {
    // Params order: w_e1, b_e1, w_e2, b_e2, w_d1, b_d1, w_d2, b_d2.
    pub fn new(config: AutoencoderConfig, rng: &mut dyn RngCore) -> Self {
        let mut params = Params::new();
        params.add(
            "ae.enc.w1",
            uniform_init(vec![config.hidden, config.in_dim], config.in_dim, rng),
        );
        params.add("ae.enc.b1", Tensor::zeros(vec![config.hidden]));
        params.add(
            "ae.enc.w2",
            uniform_init(vec![config.code_dim, config.hidden], config.hidden, rng),
        );
        params.add("ae.enc.b2", Tensor::zeros(vec![config.code_dim]));
        params.add(
            "ae.dec.w1",
            uniform_init(vec![config.hidden, config.code_dim], config.code_dim, rng),
        );
        params.add("ae.dec.b1", Tensor::zeros(vec![config.hidden]));
        params.add(
            "ae.dec.w2",
            uniform_init(vec![config.in_dim, config.hidden], config.hidden, rng),
        );
        params.add("ae.dec.b2", Tensor::zeros(vec![config.in_dim]));
        Self { config, params }
    }

    pub fn zeroed(config: AutoencoderConfig) -> Self {
        let mut rng = ZeroRng;
        let mut model = Self::new(config, &mut rng);
        for t in model.params.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        model
    }

    /// `x` is `[N, in_dim]` (standardized). Returns `(reconstruction, code)`.
    pub fn forward(&self, g: &mut Graph, x: Var, bound: &[Var]) -> Result<(Var, Var)> {
        let xs = g.value(x).shape();
        if xs.len() != 2 || xs[1] != self.config.in_dim {
            return Err(Error::Shape(format!(
                "autoencoder: expected [N, {}], got {:?}",
                self.config.in_dim, xs
            )));
        }
        let h = g.dense(x, bound[0], bound[1])?;
        let h = g.elu(h, ELU_ALPHA);
        let code = g.dense(h, bound[2], bound[3])?;
        let h = g.dense(code, bound[4], bound[5])?;
        let h = g.elu(h, ELU_ALPHA);
        let recon = g.dense(h, bound[6], bound[7])?;
        Ok((recon, code))
    }
}

/// Trained autoencoder together with the feature standardization it expects.
#[derive(Clone, Debug)]
pub struct AutoencoderModel {
    pub net: ContextAutoencoder,
    pub standardizer: Standardizer,
}

/// Generator head and EEGNet trained jointly on labeled raw windows.
#[derive(Clone, Debug)]
pub struct SeizureModel {
    pub generator: GeneratorHead,
    pub eegnet: Eegnet82,
}

impl SeizureModel {
    /// Inference pass: band batch `[N, 10]` → `(probability [N], embedding)`.
    pub fn forward_eval(&self, g: &mut Graph, bands: Var) -> Result<(Var, Var)> {
        let gen_bound = self.generator.params.bind(g);
        let net_bound = self.eegnet.params.bind(g);
        let wave = self.generator.forward(g, bands, &gen_bound)?;
        self.eegnet.forward_eval(g, wave, &net_bound)
    }
}

pub(crate) struct ZeroRng;

impl RngCore for ZeroRng {
    fn next_u32(&mut self) -> u32 {
        0
    }
    fn next_u64(&mut self) -> u64 {
        0
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch(rows: &[Vec<f64>]) -> Tensor {
        let n = rows.len();
        let d = rows[0].len();
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Tensor::new(vec![n, d], data).unwrap()
    }

    #[test]
    fn generator_zero_weights_give_zero_waveform() {
        let model = GeneratorHead::zeroed(GeneratorConfig::default());
        let mut g = Graph::new();
        let x = g.leaf(batch(&[vec![0.0; 10]]));
        let bound = model.params.bind(&mut g);
        let y = model.forward(&mut g, x, &bound).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 1, 2048]);
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generator_output_length_and_injectivity_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GeneratorHead::new(GeneratorConfig::default(), &mut rng);
        let mut g = Graph::new();
        let x = g.leaf(batch(&[
            vec![1.0, 0.0, 2.0, 0.5, 0.1, 0.0, 0.0, 0.0, 40.0, 60.0],
            vec![0.0, 1.0, 0.0, 0.5, 0.2, 0.1, 0.0, 0.0, 50.0, 50.0],
        ]));
        let bound = model.params.bind(&mut g);
        let y = model.forward(&mut g, x, &bound).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 1, 2048]);
        let data = g.value(y).data();
        assert_ne!(&data[..2048], &data[2048..]);
    }

    #[test]
    fn generator_rejects_wrong_input_length() {
        let model = GeneratorHead::zeroed(GeneratorConfig::default());
        let mut g = Graph::new();
        let x = g.leaf(batch(&[vec![0.0; 9]]));
        let bound = model.params.bind(&mut g);
        assert!(model.forward(&mut g, x, &bound).is_err());
    }

    #[test]
    fn eegnet_shape_chain() {
        // 10 → (1,2048) → (16,512) → (16,64) → 1024 → 1.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = EegnetConfig::default();
        assert_eq!(cfg.embedding_dim(), 1024);
        let mut net = Eegnet82::new(cfg, &mut rng).unwrap();
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(vec![2, 1, 2048]));
        let bound = net.params.bind(&mut g);
        let (prob, emb) = net
            .forward_train(&mut g, x, &bound, &mut rng)
            .unwrap();
        assert_eq!(g.value(prob).shape(), &[2]);
        assert_eq!(g.value(emb).shape(), &[2, 1024]);
        for &p in g.value(prob).data() {
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn eegnet_parameter_count_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Eegnet82::new(EegnetConfig::default(), &mut rng).unwrap();
        assert_eq!(net.parameter_count(), 2145);
    }

    #[test]
    fn eegnet_zero_affine_gives_zero_embedding_and_half_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Eegnet82::new(EegnetConfig::default(), &mut rng).unwrap();
        // Zero the final batch norm affine and the head: the embedding is
        // then beta-driven zeros and the head emits sigmoid(0).
        for idx in [8, 9, 10, 11] {
            for v in net.params.tensors_mut()[idx].data_mut() {
                *v = 0.0;
            }
        }
        net.config.dropout_p = 0.0;
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(vec![1, 1, 2048]));
        let bound = net.params.bind(&mut g);
        let (prob, emb) = net.forward_train(&mut g, x, &bound, &mut rng).unwrap();
        assert!(g.value(emb).data().iter().all(|&v| v == 0.0));
        assert_eq!(g.value(prob).data(), &[0.5]);
    }

    #[test]
    fn eegnet_eval_before_training_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Eegnet82::new(EegnetConfig::default(), &mut rng).unwrap();
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(vec![1, 1, 2048]));
        let bound = net.params.bind(&mut g);
        assert!(net.forward_eval(&mut g, x, &bound).is_err());
    }

    #[test]
    fn eegnet_eval_is_deterministic_and_matches_frozen_train_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut cfg = EegnetConfig::default();
        cfg.input_len = 128;
        cfg.dropout_p = 0.0;
        let mut net = Eegnet82::new(cfg, &mut rng).unwrap();
        let data: Vec<f64> = (0..2 * 128).map(|i| ((i * 37) % 13) as f64 / 13.0).collect();
        let x_t = Tensor::new(vec![2, 1, 128], data).unwrap();

        // One train pass freezes running stats to this batch's statistics.
        let mut g = Graph::new();
        let x = g.leaf(x_t.clone());
        let bound = net.params.bind(&mut g);
        let (prob_train, emb_train) = net.forward_train(&mut g, x, &bound, &mut rng).unwrap();
        let (pt, et) = (
            g.value(prob_train).data().to_vec(),
            g.value(emb_train).data().to_vec(),
        );

        let run_eval = || {
            let mut g = Graph::new();
            let x = g.leaf(x_t.clone());
            let bound = net.params.bind(&mut g);
            let (p, e) = net.forward_eval(&mut g, x, &bound).unwrap();
            (g.value(p).data().to_vec(), g.value(e).data().to_vec())
        };
        let (p1, e1) = run_eval();
        let (p2, e2) = run_eval();
        assert_eq!(p1, p2);
        assert_eq!(e1, e2);
        for (a, b) in pt.iter().zip(&p1) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in et.iter().zip(&e1) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn autoencoder_shapes_and_zero_case() {
        let model = ContextAutoencoder::zeroed(AutoencoderConfig::default());
        let mut g = Graph::new();
        let x = g.leaf(batch(&[vec![0.0; 10]]));
        let bound = model.params.bind(&mut g);
        let (recon, code) = model.forward(&mut g, x, &bound).unwrap();
        assert_eq!(g.value(recon).shape(), &[1, 10]);
        assert_eq!(g.value(code).shape(), &[1, 4]);
        assert!(g.value(recon).data().iter().all(|&v| v == 0.0));
        assert!(g.value(code).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardizer_floors_constant_features() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 4.0], vec![1.0, 6.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.floored, vec![0]);
        let z = s.apply(&[1.0, 4.0]);
        assert_eq!(z[0], 0.0);
        assert!(z[1].abs() < 1e-12);
    }
}
