use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Smooth rectifier `ln(1 + e^x)`.
    Softplus,
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Softplus => {
                if pre >= 0.0 {
                    1.0 / (1.0 + (-pre).exp())
                } else {
                    let e = pre.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
        }
    }
}

/// Output transform applied after the last dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Linear,
    /// `lo + (hi - lo) * (tanh(z) + 1) / 2`, one bound pair per output.
    Bounded { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
}

/// Parameters of a dense network, stored as one flat vector.
///
/// Layer `l` occupies `outputs * inputs` weights (row-major, one row per
/// output unit) followed by `outputs` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<LayerShape>,
    pub hidden_activation: Activation,
    pub head: Head,
    pub theta: Vec<f64>,
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    pub input: Matrix,
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl MlpParams {
    /// Fan-in uniform initialization; the last layer is drawn from
    /// `U(-final_scale, final_scale)`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_activation: Activation,
        head: Head,
        final_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Dimension(format!("invalid layer sizes {sizes:?}")));
        }
        let layers: Vec<LayerShape> = sizes
            .windows(2)
            .map(|w| LayerShape {
                inputs: w[0],
                outputs: w[1],
            })
            .collect();
        let out_dim = *sizes.last().unwrap();
        if let Head::Bounded { lo, hi } = &head {
            if lo.len() != out_dim || hi.len() != out_dim || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                return Err(Error::Dimension("bounded head needs lo < hi per output".into()));
            }
        }
        let mut theta = Vec::new();
        let n_layers = layers.len();
        for (l, s) in layers.iter().enumerate() {
            let bound = if l + 1 == n_layers {
                final_scale
            } else {
                1.0 / (s.inputs as f64).sqrt()
            };
            for _ in 0..(s.inputs + 1) * s.outputs {
                theta.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(Self {
            layers,
            hidden_activation,
            head,
            theta,
        })
    }

    /// Builds a network from explicit per-layer `(weights, biases)`.
    pub fn from_layers(
        layers: &[(Vec<Vec<f64>>, Vec<f64>)],
        hidden_activation: Activation,
        head: Head,
    ) -> Result<Self> {
        let mut shapes = Vec::new();
        let mut theta = Vec::new();
        for (w, b) in layers {
            let outputs = w.len();
            let inputs = w.first().map(|r| r.len()).unwrap_or(0);
            if b.len() != outputs || w.iter().any(|r| r.len() != inputs) {
                return Err(Error::Dimension("ragged layer".into()));
            }
            if let Some(prev) = shapes.last() {
                let prev: &LayerShape = prev;
                if prev.outputs != inputs {
                    return Err(Error::Dimension(format!(
                        "layer expects {inputs} inputs, previous layer has {} outputs",
                        prev.outputs
                    )));
                }
            }
            shapes.push(LayerShape { inputs, outputs });
            for r in w {
                theta.extend_from_slice(r);
            }
            theta.extend_from_slice(b);
        }
        let p = Self {
            layers: shapes,
            hidden_activation,
            head,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Dimension("network has no layers".into()));
        }
        for w in self.layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Dimension("adjacent layer sizes differ".into()));
            }
        }
        let expect: usize = self.layers.iter().map(|s| (s.inputs + 1) * s.outputs).sum();
        if expect != self.theta.len() {
            return Err(Error::Dimension(format!(
                "parameter vector has {} entries, shapes need {expect}",
                self.theta.len()
            )));
        }
        if let Head::Bounded { lo, hi } = &self.head {
            if lo.len() != self.output_dim() || hi.len() != self.output_dim() {
                return Err(Error::Dimension("bounded head size".into()));
            }
        }
        if self.theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|s| s.outputs).unwrap_or(0)
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// Offset of layer `l`'s weights in `theta`.
    fn offset(&self, l: usize) -> usize {
        self.layers[..l].iter().map(|s| (s.inputs + 1) * s.outputs).sum()
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers == other.layers && self.theta.len() == other.theta.len()
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<(Matrix, Cache)> {
        if x.cols != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} features, network expects {}",
                x.cols,
                self.input_dim()
            )));
        }
        let batch = x.rows;
        let n_layers = self.layers.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post: Vec<Matrix> = Vec::with_capacity(n_layers);
        let mut off = 0;
        for (l, s) in self.layers.iter().enumerate() {
            let (inp, out) = (s.inputs, s.outputs);
            let w = &self.theta[off..off + inp * out];
            let b = &self.theta[off + inp * out..off + inp * out + out];
            off += (inp + 1) * out;
            let a_prev = if l == 0 { x } else { &post[l - 1] };
            let mut z = Matrix::zeros(batch, out);
            for r in 0..batch {
                z.row_mut(r).copy_from_slice(b);
            }
            gemm(
                batch,
                inp,
                out,
                &a_prev.data,
                (inp as isize, 1),
                w,
                (1, inp as isize),
                1.0,
                &mut z.data,
                (out as isize, 1),
            );
            let a = if l + 1 < n_layers {
                let act = self.hidden_activation;
                Matrix::from_vec(batch, out, z.data.iter().map(|&v| act.apply(v)).collect())
            } else {
                match &self.head {
                    Head::Linear => z.clone(),
                    Head::Bounded { .. } => {
                        Matrix::from_vec(batch, out, z.data.iter().map(|v| v.tanh()).collect())
                    }
                }
            };
            pre.push(z);
            post.push(a);
        }
        let last = post.last().unwrap();
        let y = match &self.head {
            Head::Linear => last.clone(),
            Head::Bounded { lo, hi } => {
                let mut y = last.clone();
                for r in 0..batch {
                    for ((v, l), h) in y.row_mut(r).iter_mut().zip(lo).zip(hi) {
                        *v = (l + (h - l) * 0.5 * (*v + 1.0)).clamp(*l, *h);
                    }
                }
                y
            }
        };
        Ok((
            y,
            Cache {
                input: x.clone(),
                pre,
                post,
            },
        ))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Cache)> {
        let (y, c) = self.forward_batch(&Matrix::from_vec(1, x.len(), x.to_vec()))?;
        Ok((y.data, c))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Reverse-mode gradients of `sum(upstream * y)` with respect to every
    /// parameter (summed over the batch) and to every input row.
    pub fn backward_batch(&self, cache: &Cache, upstream: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        let n_layers = self.layers.len();
        if cache.pre.len() != n_layers
            || cache.input.cols != self.input_dim()
            || upstream.cols != self.output_dim()
            || upstream.rows != cache.input.rows
            || cache.pre.iter().zip(&self.layers).any(|(z, s)| z.cols != s.outputs)
        {
            return Err(Error::Dimension("cache does not match network or upstream".into()));
        }
        let batch = upstream.rows;
        let mut grads = vec![0.0; self.theta.len()];

        // dL/dz of the last layer
        let mut dz = upstream.clone();
        if let Head::Bounded { lo, hi } = &self.head {
            let t = &cache.post[n_layers - 1];
            for r in 0..batch {
                let tr = t.row(r);
                for (j, g) in dz.row_mut(r).iter_mut().enumerate() {
                    *g *= 0.5 * (hi[j] - lo[j]) * (1.0 - tr[j] * tr[j]);
                }
            }
        }

        for l in (0..n_layers).rev() {
            let s = self.layers[l];
            let (inp, out) = (s.inputs, s.outputs);
            let off = self.offset(l);
            let a_prev = if l == 0 { &cache.input } else { &cache.post[l - 1] };
            {
                let (gw, gb) = grads[off..off + (inp + 1) * out].split_at_mut(inp * out);
                // dW = dz^T a_prev
                gemm(
                    out,
                    batch,
                    inp,
                    &dz.data,
                    (1, out as isize),
                    &a_prev.data,
                    (inp as isize, 1),
                    0.0,
                    gw,
                    (inp as isize, 1),
                );
                for r in 0..batch {
                    for (g, d) in gb.iter_mut().zip(dz.row(r)) {
                        *g += d;
                    }
                }
            }
            // dA_prev = dz W
            let w = &self.theta[off..off + inp * out];
            let mut da = Matrix::zeros(batch, inp);
            gemm(
                batch,
                out,
                inp,
                &dz.data,
                (out as isize, 1),
                w,
                (inp as isize, 1),
                0.0,
                &mut da.data,
                (inp as isize, 1),
            );
            if l == 0 {
                return Ok((grads, da));
            }
            let act = self.hidden_activation;
            let (zp, ap) = (&cache.pre[l - 1], &cache.post[l - 1]);
            for ((g, &z), &a) in da.data.iter_mut().zip(&zp.data).zip(&ap.data) {
                *g *= act.derivative(z, a);
            }
            dz = da;
        }
        unreachable!("network has at least one layer")
    }

    pub fn backward(&self, cache: &Cache, upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let up = Matrix::from_vec(1, upstream.len(), upstream.to_vec());
        if up.cols != self.output_dim() {
            return Err(Error::Dimension("upstream gradient size".into()));
        }
        let (g, dx) = self.backward_batch(cache, &up)?;
        Ok((g, dx.data))
    }
}

/// `target <- (1 - tau) * target + tau * online`, elementwise.
pub fn soft_update(target: &mut MlpParams, online: &MlpParams, tau: f64) -> Result<()> {
    if !target.same_shape(online) {
        return Err(Error::Dimension("soft update between different shapes".into()));
    }
    if tau == 1.0 {
        target.theta.copy_from_slice(&online.theta);
        return Ok(());
    }
    for (t, o) in target.theta.iter_mut().zip(&online.theta) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}
