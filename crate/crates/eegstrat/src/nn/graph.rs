//! Reverse-mode differentiation over a flat tape of tensor ops.
//!
//! A [`Graph`] records every forward operation as a node holding its value,
//! its parent indices, and a backward closure. Because nodes are appended in
//! forward order, walking the tape backwards is already a topological order,
//! so [`Graph::backward`] is a single reverse sweep that accumulates gradients
//! into each node.

use rand::RngCore;

use super::tensor::Tensor;
use crate::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Zero-padding policy for 1-D convolution.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Output length equals input length; for even kernels the extra zero
    /// goes on the right.
    Same,
    /// No padding; output length is `L - K + 1`.
    Valid,
}

/// Clamp bound applied to predictions inside the BCE loss.
pub const BCE_CLAMP: f64 = 1e-7;

type BackFn = Box<dyn Fn(&Tensor, &[&Tensor]) -> Vec<Tensor>>;

struct Node {
    value: Tensor,
    parents: Vec<usize>,
    backward: Option<BackFn>,
}

/// Gradients of a scalar loss with respect to every node of the graph.
pub struct Gradients {
    by_node: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `v`, or `None` if `v` does not reach the
    /// loss.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.by_node[v.0].as_ref()
    }
}

/// Reverse-mode differentiation tape.
///
/// Operations append nodes and return [`Var`] handles; [`Graph::backward`]
/// runs one reverse sweep from a scalar loss.
///
/// ```
/// use eegstrat::nn::{Graph, Tensor};
///
/// // d/dw sum(w * x) at w = [2, 3], x = [4, 5] is x itself.
/// let mut g = Graph::new();
/// let w = g.leaf(Tensor::vector(&[2.0, 3.0]));
/// let x = g.leaf(Tensor::vector(&[4.0, 5.0]));
/// let y = g.mul(w, x)?;
/// let loss = g.sum(y);
/// let grads = g.backward(loss)?;
/// assert_eq!(grads.get(w).unwrap().data(), &[4.0, 5.0]);
/// # Ok::<(), eegstrat::Error>(())
/// ```
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient for `v`, materializing zeros when `v` is unreachable from the
    /// loss.
    pub fn grad_or_zero(&self, grads: &Gradients, v: Var) -> Tensor {
        grads
            .get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(self.value(v).shape().to_vec()))
    }

    fn push(&mut self, value: Tensor, parents: Vec<usize>, backward: Option<BackFn>) -> Var {
        self.nodes.push(Node {
            value,
            parents,
            backward,
        });
        Var(self.nodes.len() - 1)
    }

    /// Insert a constant or parameter leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, vec![], None)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !va.same_shape(vb) {
            return Err(Error::Shape(format!(
                "add: {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let mut out = va.clone();
        out.add_assign(vb);
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(|g, _| vec![g.clone(), g.clone()])),
        ))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !va.same_shape(vb) {
            return Err(Error::Shape(format!(
                "mul: {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let data: Vec<f64> = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(|g, p| {
                let da: Vec<f64> = g.data().iter().zip(p[1].data()).map(|(g, y)| g * y).collect();
                let db: Vec<f64> = g.data().iter().zip(p[0].data()).map(|(g, x)| g * x).collect();
                vec![
                    Tensor::new(p[0].shape().to_vec(), da).unwrap(),
                    Tensor::new(p[1].shape().to_vec(), db).unwrap(),
                ]
            })),
        ))
    }

    /// Sum of all entries, as a scalar node.
    pub fn sum(&mut self, a: Var) -> Var {
        let total: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(
            Tensor::scalar(total),
            vec![a.0],
            Some(Box::new(|g, p| {
                let gv = g.scalar_value();
                vec![Tensor::new(p[0].shape().to_vec(), vec![gv; p[0].len()]).unwrap()]
            })),
        )
    }

    /// Fully connected layer: `y = x Wᵀ + b` over a batch.
    ///
    /// `x` is `[N, n_in]`, `w` is `[n_out, n_in]`, `b` is `[n_out]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (
            self.nodes[x.0].value.shape().to_vec(),
            self.nodes[w.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        if xs.len() != 2 || ws.len() != 2 || bs.len() != 1 || xs[1] != ws[1] || ws[0] != bs[0] {
            return Err(Error::Shape(format!(
                "dense: x {:?}, w {:?}, b {:?}",
                xs, ws, bs
            )));
        }
        let (n, n_in, n_out) = (xs[0], xs[1], ws[0]);
        let xv = self.nodes[x.0].value.data();
        let wv = self.nodes[w.0].value.data();
        let bv = self.nodes[b.0].value.data();
        let mut out = vec![0.0; n * n_out];
        for i in 0..n {
            for o in 0..n_out {
                let mut acc = bv[o];
                let xrow = &xv[i * n_in..(i + 1) * n_in];
                let wrow = &wv[o * n_in..(o + 1) * n_in];
                for (xi, wi) in xrow.iter().zip(wrow) {
                    acc += xi * wi;
                }
                out[i * n_out + o] = acc;
            }
        }
        let out = Tensor::new(vec![n, n_out], out)?;
        Ok(self.push(
            out,
            vec![x.0, w.0, b.0],
            Some(Box::new(move |g, p| {
                let gv = g.data();
                let xv = p[0].data();
                let wv = p[1].data();
                let mut dx = vec![0.0; n * n_in];
                let mut dw = vec![0.0; n_out * n_in];
                let mut db = vec![0.0; n_out];
                for i in 0..n {
                    for o in 0..n_out {
                        let go = gv[i * n_out + o];
                        db[o] += go;
                        for j in 0..n_in {
                            dx[i * n_in + j] += go * wv[o * n_in + j];
                            dw[o * n_in + j] += go * xv[i * n_in + j];
                        }
                    }
                }
                vec![
                    Tensor::new(vec![n, n_in], dx).unwrap(),
                    Tensor::new(vec![n_out, n_in], dw).unwrap(),
                    Tensor::new(vec![n_out], db).unwrap(),
                ]
            })),
        ))
    }

    /// Elementwise exponential linear unit.
    pub fn elu(&mut self, x: Var, alpha: f64) -> Var {
        let data: Vec<f64> = self.nodes[x.0]
            .value
            .data()
            .iter()
            .map(|&v| if v > 0.0 { v } else { alpha * (v.exp() - 1.0) })
            .collect();
        let out = Tensor::new(self.nodes[x.0].value.shape().to_vec(), data).unwrap();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, p| {
                let d: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(p[0].data())
                    .map(|(g, &v)| if v > 0.0 { *g } else { g * alpha * v.exp() })
                    .collect();
                vec![Tensor::new(p[0].shape().to_vec(), d).unwrap()]
            })),
        )
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let data: Vec<f64> = self.nodes[x.0]
            .value
            .data()
            .iter()
            .map(|&v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let out = Tensor::new(self.nodes[x.0].value.shape().to_vec(), data).unwrap();
        let cached = out.clone();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, p| {
                let d: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(cached.data())
                    .map(|(g, &y)| g * y * (1.0 - y))
                    .collect();
                vec![Tensor::new(p[0].shape().to_vec(), d).unwrap()]
            })),
        )
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.nodes[x.0].value.reshaped(shape)?;
        Ok(self.push(
            out,
            vec![x.0],
            Some(Box::new(|g, p| {
                vec![g.reshaped(p[0].shape().to_vec()).unwrap()]
            })),
        ))
    }

    /// Grouped 1-D cross-correlation without bias.
    ///
    /// `x` is `[N, C_in, L]`, `kernels` is `[C_out, C_in/groups, K]`.
    pub fn conv1d(&mut self, x: Var, kernels: Var, groups: usize, padding: Padding) -> Result<Var> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        let ks = self.nodes[kernels.0].value.shape().to_vec();
        if xs.len() != 3 || ks.len() != 3 {
            return Err(Error::Shape(format!("conv1d: x {:?}, kernels {:?}", xs, ks)));
        }
        let (n, c_in, l) = (xs[0], xs[1], xs[2]);
        let (c_out, cpg, k) = (ks[0], ks[1], ks[2]);
        if groups == 0 || c_in % groups != 0 || c_out % groups != 0 || cpg != c_in / groups {
            return Err(Error::Shape(format!(
                "conv1d: C_in {} / groups {} incompatible with kernel group size {}",
                c_in, groups, cpg
            )));
        }
        let (pad_left, l_out) = match padding {
            Padding::Same => ((k - 1) / 2, l),
            Padding::Valid => {
                if k > l {
                    return Err(Error::Shape(format!(
                        "conv1d: kernel {} longer than input {}",
                        k, l
                    )));
                }
                (0, l - k + 1)
            }
        };
        let out_per_group = c_out / groups;
        let xv = self.nodes[x.0].value.data();
        let kv = self.nodes[kernels.0].value.data();
        let mut out = vec![0.0; n * c_out * l_out];
        for ni in 0..n {
            for co in 0..c_out {
                let g = co / out_per_group;
                for t in 0..l_out {
                    let mut acc = 0.0;
                    for (cl, ci) in (g * cpg..(g + 1) * cpg).enumerate() {
                        let xbase = ni * c_in * l + ci * l;
                        let kbase = co * cpg * k + cl * k;
                        for j in 0..k {
                            let s = t + j;
                            if s < pad_left {
                                continue;
                            }
                            let s = s - pad_left;
                            if s >= l {
                                continue;
                            }
                            acc += xv[xbase + s] * kv[kbase + j];
                        }
                    }
                    out[ni * c_out * l_out + co * l_out + t] = acc;
                }
            }
        }
        let out = Tensor::new(vec![n, c_out, l_out], out)?;
        Ok(self.push(
            out,
            vec![x.0, kernels.0],
            Some(Box::new(move |gy, p| {
                let gv = gy.data();
                let xv = p[0].data();
                let kv = p[1].data();
                let mut dx = vec![0.0; n * c_in * l];
                let mut dk = vec![0.0; c_out * cpg * k];
                for ni in 0..n {
                    for co in 0..c_out {
                        let g = co / out_per_group;
                        for t in 0..l_out {
                            let go = gv[ni * c_out * l_out + co * l_out + t];
                            if go == 0.0 {
                                continue;
                            }
                            for (cl, ci) in (g * cpg..(g + 1) * cpg).enumerate() {
                                let xbase = ni * c_in * l + ci * l;
                                let kbase = co * cpg * k + cl * k;
                                for j in 0..k {
                                    let s = t + j;
                                    if s < pad_left {
                                        continue;
                                    }
                                    let s = s - pad_left;
                                    if s >= l {
                                        continue;
                                    }
                                    dx[xbase + s] += go * kv[kbase + j];
                                    dk[kbase + j] += go * xv[xbase + s];
                                }
                            }
                        }
                    }
                }
                vec![
                    Tensor::new(vec![n, c_in, l], dx).unwrap(),
                    Tensor::new(vec![c_out, cpg, k], dk).unwrap(),
                ]
            })),
        ))
    }

    /// Batch normalization over `[N, C, L]` using batch statistics.
    ///
    /// Returns the output node plus the per-channel batch mean and (biased)
    /// variance so the caller can maintain running statistics.
    pub fn batchnorm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<(Var, Vec<f64>, Vec<f64>)> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("batchnorm: x {:?}", xs)));
        }
        let (n, c, l) = (xs[0], xs[1], xs[2]);
        let gs = self.nodes[gamma.0].value.shape();
        let bs = self.nodes[beta.0].value.shape();
        if gs != [c] || bs != [c] {
            return Err(Error::Shape(format!(
                "batchnorm: gamma {:?}, beta {:?}, C={}",
                gs, bs, c
            )));
        }
        let m = (n * l) as f64;
        let xv = self.nodes[x.0].value.data();
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * l + ci * l;
                for t in 0..l {
                    mean[ci] += xv[base + t];
                }
            }
        }
        for v in mean.iter_mut() {
            *v /= m;
        }
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * l + ci * l;
                for t in 0..l {
                    let d = xv[base + t] - mean[ci];
                    var[ci] += d * d;
                }
            }
        }
        for v in var.iter_mut() {
            *v /= m;
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
        let gv = self.nodes[gamma.0].value.data();
        let bv = self.nodes[beta.0].value.data();
        let mut out = vec![0.0; n * c * l];
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * l + ci * l;
                for t in 0..l {
                    let xhat = (xv[base + t] - mean[ci]) * inv_std[ci];
                    out[base + t] = gv[ci] * xhat + bv[ci];
                }
            }
        }
        let out = Tensor::new(vec![n, c, l], out)?;
        let (mean_c, inv_std_c) = (mean.clone(), inv_std.clone());
        let var_out = var;
        let node = self.push(
            out,
            vec![x.0, gamma.0, beta.0],
            Some(Box::new(move |gy, p| {
                let gyv = gy.data();
                let xv = p[0].data();
                let gv = p[1].data();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                // Sums needed by the batch-stat chain rule.
                for ni in 0..n {
                    for ci in 0..c {
                        let base = ni * c * l + ci * l;
                        for t in 0..l {
                            let xhat = (xv[base + t] - mean_c[ci]) * inv_std_c[ci];
                            dgamma[ci] += gyv[base + t] * xhat;
                            dbeta[ci] += gyv[base + t];
                        }
                    }
                }
                let mut dx = vec![0.0; n * c * l];
                for ni in 0..n {
                    for ci in 0..c {
                        let base = ni * c * l + ci * l;
                        for t in 0..l {
                            let xhat = (xv[base + t] - mean_c[ci]) * inv_std_c[ci];
                            dx[base + t] = gv[ci] * inv_std_c[ci]
                                * (gyv[base + t] - dbeta[ci] / m - xhat * dgamma[ci] / m);
                        }
                    }
                }
                vec![
                    Tensor::new(vec![n, c, l], dx).unwrap(),
                    Tensor::new(vec![c], dgamma).unwrap(),
                    Tensor::new(vec![c], dbeta).unwrap(),
                ]
            })),
        );
        Ok((node, mean, var_out))
    }

    /// Batch normalization in inference mode, using frozen running stats.
    pub fn batchnorm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: &[f64],
        running_var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("batchnorm: x {:?}", xs)));
        }
        let (n, c, l) = (xs[0], xs[1], xs[2]);
        if running_mean.len() != c || running_var.len() != c {
            return Err(Error::Shape(format!(
                "batchnorm eval: running stats {} vs C={}",
                running_mean.len(),
                c
            )));
        }
        let inv_std: Vec<f64> = running_var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
        let mean = running_mean.to_vec();
        let xv = self.nodes[x.0].value.data();
        let gv = self.nodes[gamma.0].value.data();
        let bv = self.nodes[beta.0].value.data();
        let mut out = vec![0.0; n * c * l];
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * l + ci * l;
                for t in 0..l {
                    out[base + t] = gv[ci] * (xv[base + t] - mean[ci]) * inv_std[ci] + bv[ci];
                }
            }
        }
        let out = Tensor::new(vec![n, c, l], out)?;
        let (mean_c, inv_std_c) = (mean, inv_std);
        Ok(self.push(
            out,
            vec![x.0, gamma.0, beta.0],
            Some(Box::new(move |gy, p| {
                let gyv = gy.data();
                let xv = p[0].data();
                let gv = p[1].data();
                let mut dx = vec![0.0; n * c * l];
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                for ni in 0..n {
                    for ci in 0..c {
                        let base = ni * c * l + ci * l;
                        for t in 0..l {
                            let xhat = (xv[base + t] - mean_c[ci]) * inv_std_c[ci];
                            dx[base + t] = gyv[base + t] * gv[ci] * inv_std_c[ci];
                            dgamma[ci] += gyv[base + t] * xhat;
                            dbeta[ci] += gyv[base + t];
                        }
                    }
                }
                vec![
                    Tensor::new(vec![n, c, l], dx).unwrap(),
                    Tensor::new(vec![c], dgamma).unwrap(),
                    Tensor::new(vec![c], dbeta).unwrap(),
                ]
            })),
        ))
    }

    /// Non-overlapping mean pooling along the last axis of `[N, C, L]`.
    pub fn avg_pool(&mut self, x: Var, width: usize) -> Result<Var> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("avg_pool: x {:?}", xs)));
        }
        let (n, c, l) = (xs[0], xs[1], xs[2]);
        if width == 0 || l % width != 0 {
            return Err(Error::Shape(format!(
                "avg_pool: length {} not divisible by width {}",
                l, width
            )));
        }
        let l_out = l / width;
        let xv = self.nodes[x.0].value.data();
        let mut out = vec![0.0; n * c * l_out];
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * l + ci * l;
                let obase = ni * c * l_out + ci * l_out;
                for t in 0..l_out {
                    let mut acc = 0.0;
                    for j in 0..width {
                        acc += xv[base + t * width + j];
                    }
                    out[obase + t] = acc / width as f64;
                }
            }
        }
        let out = Tensor::new(vec![n, c, l_out], out)?;
        Ok(self.push(
            out,
            vec![x.0],
            Some(Box::new(move |gy, _| {
                let gyv = gy.data();
                let mut dx = vec![0.0; n * c * l];
                for ni in 0..n {
                    for ci in 0..c {
                        let base = ni * c * l + ci * l;
                        let obase = ni * c * l_out + ci * l_out;
                        for t in 0..l_out {
                            let g = gyv[obase + t] / width as f64;
                            for j in 0..width {
                                dx[base + t * width + j] += g;
                            }
                        }
                    }
                }
                vec![Tensor::new(vec![n, c, l], dx).unwrap()]
            })),
        ))
    }

    /// Inverted dropout; draws one Bernoulli mask from `rng` at record time.
    pub fn dropout(&mut self, x: Var, p: f64, rng: &mut dyn RngCore) -> Var {
        debug_assert!((0.0..1.0).contains(&p));
        let len = self.nodes[x.0].value.len();
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..len)
            .map(|_| {
                let u: f64 = rand::Rng::random(&mut *rng);
                if u < p {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        let data: Vec<f64> = self.nodes[x.0]
            .value
            .data()
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let out = Tensor::new(self.nodes[x.0].value.shape().to_vec(), data).unwrap();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |gy, p| {
                let d: Vec<f64> = gy.data().iter().zip(&mask).map(|(g, m)| g * m).collect();
                vec![Tensor::new(p[0].shape().to_vec(), d).unwrap()]
            })),
        )
    }

    /// Mean binary cross-entropy over a batch of probabilities, with optional
    /// per-sample weights. Predictions are clamped to `[1e-7, 1 - 1e-7]`.
    pub fn bce_loss(
        &mut self,
        pred: Var,
        labels: &[f64],
        weights: Option<&[f64]>,
    ) -> Result<Var> {
        let pv = self.nodes[pred.0].value.data();
        if pv.len() != labels.len() {
            return Err(Error::Shape(format!(
                "bce: {} predictions vs {} labels",
                pv.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::Invalid(format!(
                "bce: label at index {i} is {}, expected 0 or 1",
                labels[i]
            )));
        }
        let w: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != labels.len() {
                    return Err(Error::Shape(format!(
                        "bce: {} weights vs {} labels",
                        w.len(),
                        labels.len()
                    )));
                }
                w.to_vec()
            }
            None => vec![1.0; labels.len()],
        };
        let wsum: f64 = w.iter().sum();
        let lo = BCE_CLAMP;
        let hi = 1.0 - BCE_CLAMP;
        let mut loss = 0.0;
        for ((&p, &y), &wi) in pv.iter().zip(labels).zip(&w) {
            let p = p.clamp(lo, hi);
            loss -= wi * (y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        }
        loss /= wsum;
        let labels = labels.to_vec();
        Ok(self.push(
            Tensor::scalar(loss),
            vec![pred.0],
            Some(Box::new(move |gy, p| {
                let g = gy.scalar_value();
                let d: Vec<f64> = p[0]
                    .data()
                    .iter()
                    .zip(labels.iter().zip(&w))
                    .map(|(&pv, (&y, &wi))| {
                        if pv <= lo || pv >= hi {
                            0.0
                        } else {
                            g * wi / wsum * (pv - y) / (pv * (1.0 - pv))
                        }
                    })
                    .collect();
                vec![Tensor::new(p[0].shape().to_vec(), d).unwrap()]
            })),
        ))
    }

    /// Mean squared error against a constant target.
    pub fn mse_loss(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let pv = &self.nodes[pred.0].value;
        if !pv.same_shape(target) {
            return Err(Error::Shape(format!(
                "mse: pred {:?} vs target {:?}",
                pv.shape(),
                target.shape()
            )));
        }
        let n = pv.len() as f64;
        let loss: f64 = pv
            .data()
            .iter()
            .zip(target.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        let target = target.clone();
        Ok(self.push(
            Tensor::scalar(loss),
            vec![pred.0],
            Some(Box::new(move |gy, p| {
                let g = gy.scalar_value();
                let d: Vec<f64> = p[0]
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(pv, t)| g * 2.0 * (pv - t) / n)
                    .collect();
                vec![Tensor::new(p[0].shape().to_vec(), d).unwrap()]
            })),
        ))
    }

    /// Reverse sweep from a scalar `loss` node. Nodes that do not reach the
    /// loss keep a `None` gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::Invalid(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut by_node: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        by_node[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(grad) = by_node[idx].take() else {
                continue;
            };
            if let Some(back) = &self.nodes[idx].backward {
                let parent_values: Vec<&Tensor> = self.nodes[idx]
                    .parents
                    .iter()
                    .map(|&p| &self.nodes[p].value)
                    .collect();
                let parent_grads = back(&grad, &parent_values);
                debug_assert_eq!(parent_grads.len(), self.nodes[idx].parents.len());
                for (&p, pg) in self.nodes[idx].parents.iter().zip(parent_grads) {
                    match &mut by_node[p] {
                        Some(existing) => existing.add_assign(&pg),
                        slot @ None => *slot = Some(pg),
                    }
                }
            }
            by_node[idx] = Some(grad);
        }
        Ok(Gradients { by_node })
    }
}
