//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates per parameter tensor, plus the step count.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &[Tensor], hyper: AdamHyper) -> Self {
        Self {
            hyper,
            t: 0,
            m: params
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
            v: params
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update: `θ ← θ − lr·m̂/(√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam: {} params, {} grads, state holds {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, g), (m, v)) in params
            .iter()
            .zip(grads)
            .zip(self.m.iter().zip(&self.v))
        {
            if !p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v) {
                return Err(Error::Shape(format!(
                    "adam: param {:?} vs grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.t += 1;
        let AdamHyper {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let pd = p.data_mut();
            for (((pi, &gi), mi), vi) in pd
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_is_identity() {
        let mut params = vec![Tensor::vector(&[1.5, -2.0])];
        let grads = vec![Tensor::vector(&[0.0, 0.0])];
        let mut state = AdamState::new(&params, AdamHyper::default());
        state.step(&mut params, &grads).unwrap();
        assert_eq!(params[0].data(), &[1.5, -2.0]);
    }

    #[test]
    fn first_step_is_nearly_signed_lr() {
        // Closed form: m̂ = g, v̂ = g², Δθ = −lr·g/(|g| + ε) → −lr·sign(g).
        let mut params = vec![Tensor::vector(&[0.0])];
        let grads = vec![Tensor::vector(&[0.5])];
        let mut state = AdamState::new(&params, AdamHyper::default());
        state.step(&mut params, &grads).unwrap();
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert_relative_eq!(params[0].data()[0], expected, max_relative = 1e-12);
        assert_relative_eq!(params[0].data()[0], -1e-3, max_relative = 1e-6);
    }

    #[test]
    fn two_identical_gradient_steps_match_hand_recurrence() {
        // Scripted evaluation of the two-step recurrence with g = 1.
        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 1e-3f64, 1e-8f64);
        let g = 1.0;
        let m1 = (1.0 - b1) * g;
        let v1 = (1.0 - b2) * g * g;
        let d1 = -lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        let m2 = b1 * m1 + (1.0 - b1) * g;
        let v2 = b2 * v1 + (1.0 - b2) * g * g;
        let d2 = -lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);

        let mut params = vec![Tensor::vector(&[0.0])];
        let grads = vec![Tensor::vector(&[g])];
        let mut state = AdamState::new(&params, AdamHyper::default());
        state.step(&mut params, &grads).unwrap();
        assert_relative_eq!(params[0].data()[0], d1, max_relative = 1e-12);
        state.step(&mut params, &grads).unwrap();
        assert_relative_eq!(params[0].data()[0], d1 + d2, max_relative = 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut params = vec![Tensor::vector(&[1.0])];
        let grads = vec![Tensor::vector(&[1.0, 2.0])];
        let mut state = AdamState::new(&params, AdamHyper::default());
        assert!(state.step(&mut params, &grads).is_err());
    }
}
