//! Differentiable-layer substrate: tensors, a reverse-mode tape, losses,
//! Adam, and finite-difference verification helpers.

mod adam;
mod graph;
pub mod gradcheck;
mod tensor;

pub use adam::{AdamHyper, AdamState};
pub use graph::{Gradients, Graph, Padding, Var, BCE_CLAMP};
pub use tensor::Tensor;

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A named, ordered collection of trainable tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Params {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> usize {
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Total scalar parameter count.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Replace all tensors; shapes must match entry by entry.
    pub fn restore(&mut self, tensors: Vec<Tensor>) -> Result<()> {
        if tensors.len() != self.tensors.len()
            || tensors
                .iter()
                .zip(&self.tensors)
                .any(|(a, b)| !a.same_shape(b))
        {
            return Err(Error::Shape("params restore: shape set mismatch".into()));
        }
        self.tensors = tensors;
        Ok(())
    }

    /// Insert every tensor as a graph leaf, returning the vars in order.
    pub fn bind(&self, g: &mut Graph) -> Vec<Var> {
        self.tensors.iter().map(|t| g.leaf(t.clone())).collect()
    }

    /// Collect gradients for previously bound vars, zeros where unreachable.
    pub fn collect_grads(&self, g: &Graph, grads: &Gradients, vars: &[Var]) -> Vec<Tensor> {
        vars.iter().map(|&v| g.grad_or_zero(grads, v)).collect()
    }
}

impl Default for Params {
    fn default() -> Self {
        Self::new()
    }
}

/// Weight tensor drawn from `U(−√(1/fan_in), +√(1/fan_in))`.
pub fn uniform_init(shape: Vec<usize>, fan_in: usize, rng: &mut dyn RngCore) -> Tensor {
    let bound = (1.0 / fan_in as f64).sqrt();
    let len: usize = shape.iter().product();
    let data: Vec<f64> = (0..len)
        .map(|_| (&mut *rng).random_range(-bound..bound))
        .collect();
    Tensor::new(shape, data).expect("finite init")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn elu_matches_closed_form() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[3], &[0.0, 2.0, -1.0]));
        let y = g.elu(x, 1.0);
        let out = g.value(y).data();
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 2.0);
        assert_relative_eq!(out[2], (-1.0f64).exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn dense_hand_example() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 2], &[1.0, 1.0]));
        let w = g.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let b = g.leaf(t(&[2], &[0.0, 0.0]));
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[3.0, 7.0]);
    }

    #[test]
    fn dense_identity_and_zero_input() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 2], &[4.0, -5.0]));
        let w = g.leaf(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
        let b = g.leaf(t(&[2], &[0.0, 0.0]));
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[4.0, -5.0]);

        let x0 = g.leaf(t(&[1, 2], &[0.0, 0.0]));
        let w2 = g.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let b2 = g.leaf(t(&[2], &[7.0, -1.0]));
        let y0 = g.dense(x0, w2, b2).unwrap();
        assert_eq!(g.value(y0).data(), &[7.0, -1.0]);
    }

    #[test]
    fn dense_rejects_shape_mismatch() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 3], &[1.0; 3]));
        let w = g.leaf(t(&[2, 2], &[1.0; 4]));
        let b = g.leaf(t(&[2], &[0.0; 2]));
        assert!(g.dense(x, w, b).is_err());
    }

    #[test]
    fn conv1d_scaling_kernel() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]));
        let k = g.leaf(t(&[1, 1, 1], &[2.0]));
        let y = g.conv1d(x, k, 1, Padding::Same).unwrap();
        assert_eq!(g.value(y).data(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn conv1d_sliding_sum_valid() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]));
        let k = g.leaf(t(&[1, 1, 2], &[1.0, 1.0]));
        let y = g.conv1d(x, k, 1, Padding::Valid).unwrap();
        assert_eq!(g.value(y).data(), &[3.0, 5.0, 7.0]);
    }

    #[test]
    fn conv1d_depthwise_degenerate() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let k = g.leaf(t(&[2, 1, 1], &[10.0, -1.0]));
        let y = g.conv1d(x, k, 2, Padding::Same).unwrap();
        assert_eq!(g.value(y).data(), &[10.0, 20.0, 30.0, -4.0, -5.0, -6.0]);
    }

    #[test]
    fn conv1d_same_padding_puts_extra_zero_right_for_even_kernels() {
        // K=2: pad_left = 0, pad_right = 1.
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 3], &[1.0, 2.0, 3.0]));
        let k = g.leaf(t(&[1, 1, 2], &[1.0, 1.0]));
        let y = g.conv1d(x, k, 1, Padding::Same).unwrap();
        assert_eq!(g.value(y).data(), &[3.0, 5.0, 3.0]);
    }

    #[test]
    fn conv1d_matches_naive_triple_loop() {
        // Brute-force oracle: direct sliding-window cross-correlation.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = 17;
        let k = 5;
        let x: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
        let kern: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut expected = vec![0.0; l - k + 1];
        for t0 in 0..l - k + 1 {
            for j in 0..k {
                expected[t0] += x[t0 + j] * kern[j];
            }
        }
        let mut g = Graph::new();
        let xv = g.leaf(t(&[1, 1, l], &x));
        let kv = g.leaf(t(&[1, 1, k], &kern));
        let y = g.conv1d(xv, kv, 1, Padding::Valid).unwrap();
        assert_eq!(g.value(y).data(), expected.as_slice());
    }

    #[test]
    fn batchnorm_constant_channel_outputs_beta() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[2, 1, 2], &[5.0, 5.0, 5.0, 5.0]));
        let gamma = g.leaf(t(&[1], &[1.0]));
        let beta = g.leaf(t(&[1], &[3.0]));
        let (y, mean, var) = g.batchnorm_train(x, gamma, beta, 1e-5).unwrap();
        assert_eq!(mean, vec![5.0]);
        assert_eq!(var, vec![0.0]);
        for &v in g.value(y).data() {
            assert_relative_eq!(v, 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn batchnorm_zero_gamma_outputs_beta() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]));
        let gamma = g.leaf(t(&[1], &[0.0]));
        let beta = g.leaf(t(&[1], &[-2.0]));
        let (y, _, _) = g.batchnorm_train(x, gamma, beta, 1e-5).unwrap();
        for &v in g.value(y).data() {
            assert_eq!(v, -2.0);
        }
    }

    #[test]
    fn batchnorm_normalized_batch_passes_through() {
        // Per-channel mean 0, variance 1 already.
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 2], &[1.0, -1.0]));
        let gamma = g.leaf(t(&[1], &[1.0]));
        let beta = g.leaf(t(&[1], &[0.0]));
        let (y, _, _) = g.batchnorm_train(x, gamma, beta, 1e-5).unwrap();
        for (&o, &i) in g.value(y).data().iter().zip([1.0, -1.0].iter()) {
            assert_relative_eq!(o, i, epsilon = 1e-4);
        }
    }

    #[test]
    fn avg_pool_examples() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]));
        let y = g.avg_pool(x, 2).unwrap();
        assert_eq!(g.value(y).data(), &[1.5, 3.5]);
        let y1 = g.avg_pool(x, 1).unwrap();
        assert_eq!(g.value(y1).data(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(g.avg_pool(x, 3).is_err());
    }

    #[test]
    fn bce_closed_forms() {
        let mut g = Graph::new();
        let p = g.leaf(t(&[1], &[0.5]));
        let loss = g.bce_loss(p, &[1.0], None).unwrap();
        assert_relative_eq!(g.value(loss).scalar_value(), 2.0f64.ln(), max_relative = 1e-12);

        let p2 = g.leaf(t(&[2], &[0.9, 0.1]));
        let loss2 = g.bce_loss(p2, &[1.0, 0.0], None).unwrap();
        assert_relative_eq!(
            g.value(loss2).scalar_value(),
            -(0.9f64.ln()),
            max_relative = 1e-12
        );

        // Perfect prediction after clamping.
        let p3 = g.leaf(t(&[2], &[1.0, 0.0]));
        let loss3 = g.bce_loss(p3, &[1.0, 0.0], None).unwrap();
        assert!(g.value(loss3).scalar_value() <= 1e-6);
    }

    #[test]
    fn bce_rejects_bad_labels_and_lengths() {
        let mut g = Graph::new();
        let p = g.leaf(t(&[2], &[0.5, 0.5]));
        assert!(g.bce_loss(p, &[1.0], None).is_err());
        assert!(g.bce_loss(p, &[1.0, 0.5], None).is_err());
    }

    #[test]
    fn mse_examples() {
        let mut g = Graph::new();
        let p = g.leaf(t(&[2], &[1.0, 1.0]));
        let loss = g.mse_loss(p, &t(&[2], &[0.0, 0.0])).unwrap();
        assert_eq!(g.value(loss).scalar_value(), 1.0);

        let p2 = g.leaf(t(&[1], &[3.0]));
        let loss2 = g.mse_loss(p2, &t(&[1], &[1.0])).unwrap();
        assert_eq!(g.value(loss2).scalar_value(), 4.0);

        let loss3 = g.mse_loss(p, &t(&[2], &[1.0, 1.0])).unwrap();
        assert_eq!(g.value(loss3).scalar_value(), 0.0);
    }

    #[test]
    fn backward_linear_and_square() {
        // loss = w·x with x = 3 → dloss/dw = 3.
        let mut g = Graph::new();
        let w = g.leaf(t(&[1], &[2.0]));
        let x = g.leaf(t(&[1], &[3.0]));
        let prod = g.mul(w, x).unwrap();
        let loss = g.sum(prod);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[3.0]);

        // loss = w² at w = 2 → gradient 4.
        let mut g = Graph::new();
        let w = g.leaf(t(&[1], &[2.0]));
        let sq = g.mul(w, w).unwrap();
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[2], &[1.0, 2.0]));
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn unreachable_parameter_gets_zero_gradient() {
        let mut g = Graph::new();
        let w = g.leaf(t(&[1], &[2.0]));
        let unused = g.leaf(t(&[3], &[1.0, 1.0, 1.0]));
        let sq = g.mul(w, w).unwrap();
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert!(grads.get(unused).is_none());
        assert_eq!(g.grad_or_zero(&grads, unused).data(), &[0.0, 0.0, 0.0]);
    }

    /// Builds a small composite network and checks its gradients against
    /// central finite differences (the independent oracle).
    fn composite_loss(params: &[Tensor]) -> f64 {
        let mut g = Graph::new();
        let x = g.leaf(t(
            &[2, 1, 8],
            &[
                0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.05, -0.1, //
                -0.3, 0.25, 0.4, -0.15, 0.1, -0.2, 0.3, 0.05,
            ],
        ));
        let pv: Vec<Var> = params.iter().map(|p| g.leaf(p.clone())).collect();
        let c = g.conv1d(x, pv[0], 1, Padding::Same).unwrap();
        let (bn, _, _) = g.batchnorm_train(c, pv[1], pv[2], 1e-5).unwrap();
        let a = g.elu(bn, 1.0);
        let pool = g.avg_pool(a, 2).unwrap();
        let flat = g.reshape(pool, vec![2, 8]).unwrap();
        let d = g.dense(flat, pv[3], pv[4]).unwrap();
        let s = g.sigmoid(d);
        let sf = g.reshape(s, vec![2]).unwrap();
        let loss = g.bce_loss(sf, &[1.0, 0.0], Some(&[1.5, 0.5])).unwrap();
        g.value(loss).scalar_value()
    }

    #[test]
    fn composite_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = vec![
            uniform_init(vec![2, 1, 3], 3, &mut rng),
            t(&[2], &[1.0, 0.9]),
            t(&[2], &[0.1, -0.1]),
            uniform_init(vec![1, 8], 8, &mut rng),
            t(&[1], &[0.05]),
        ];
        // Analytic gradients via the tape.
        let mut g = Graph::new();
        let x = g.leaf(t(
            &[2, 1, 8],
            &[
                0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.05, -0.1, //
                -0.3, 0.25, 0.4, -0.15, 0.1, -0.2, 0.3, 0.05,
            ],
        ));
        let pv: Vec<Var> = params.iter().map(|p| g.leaf(p.clone())).collect();
        let c = g.conv1d(x, pv[0], 1, Padding::Same).unwrap();
        let (bn, _, _) = g.batchnorm_train(c, pv[1], pv[2], 1e-5).unwrap();
        let a = g.elu(bn, 1.0);
        let pool = g.avg_pool(a, 2).unwrap();
        let flat = g.reshape(pool, vec![2, 8]).unwrap();
        let d = g.dense(flat, pv[3], pv[4]).unwrap();
        let s = g.sigmoid(d);
        let sf = g.reshape(s, vec![2]).unwrap();
        let loss = g.bce_loss(sf, &[1.0, 0.0], Some(&[1.5, 0.5])).unwrap();
        let grads = g.backward(loss).unwrap();
        let analytic: Vec<Tensor> = pv.iter().map(|&v| g.grad_or_zero(&grads, v)).collect();

        let numeric = gradcheck::central_difference_gradients(&params, composite_loss, 1e-4);
        let err = gradcheck::max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn dropout_is_seeded_and_scales() {
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new();
            let x = g.leaf(t(&[1, 1, 8], &[1.0; 8]));
            let y = g.dropout(x, 0.25, &mut rng);
            g.value(y).data().to_vec()
        };
        assert_eq!(run(7), run(7));
        for v in run(7) {
            assert!(v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-12);
        }
    }
}
