//! Central finite-difference gradients for verifying the reverse sweep.
//!
//! These helpers only call the forward path, so they stay independent of the
//! backward implementation they are used to check.

use super::tensor::Tensor;

/// Gradient of `f` at `params` by central differences with step `h`.
pub fn central_difference_gradients<F>(params: &[Tensor], mut f: F, h: f64) -> Vec<Tensor>
where
    F: FnMut(&[Tensor]) -> f64,
{
    let mut work: Vec<Tensor> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut g = Tensor::zeros(params[pi].shape().to_vec());
        for j in 0..params[pi].len() {
            let orig = work[pi].data()[j];
            work[pi].data_mut()[j] = orig + h;
            let fp = f(&work);
            work[pi].data_mut()[j] = orig - h;
            let fm = f(&work);
            work[pi].data_mut()[j] = orig;
            g.data_mut()[j] = (fp - fm) / (2.0 * h);
        }
        grads.push(g);
    }
    grads
}

/// Max over all entries of `|a - n| / max(1, |a|, |n|)`.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        for (&av, &nv) in a.data().iter().zip(n.data()) {
            let denom = av.abs().max(nv.abs()).max(1.0);
            worst = worst.max((av - nv).abs() / denom);
        }
    }
    worst
}
