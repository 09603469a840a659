use std::fmt;
use std::str::FromStr;

use super::{Batch, Targets};
use crate::error::{check_len, Error, Result};
use crate::params::{init_params, InitKind, InitScheme, ParamVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output. The ReLU
    /// subgradient at 0 is 0.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputLoss {
    /// Softmax over the outputs followed by cross-entropy against a class index.
    SoftmaxCrossEntropy,
    /// Mean over output units of the squared error.
    MeanSquare,
}

/// Layer sizes and nonlinearities of a fully connected network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpShape {
    layers: Vec<usize>,
    activations: Vec<Activation>,
    output: OutputLoss,
}

impl MlpShape {
    /// Same activation on every hidden layer.
    pub fn new(layers: Vec<usize>, activation: Activation, output: OutputLoss) -> Result<Self> {
        let hidden = layers.len().saturating_sub(2);
        Self::with_activations(layers, vec![activation; hidden], output)
    }

    pub fn with_activations(layers: Vec<usize>, activations: Vec<Activation>, output: OutputLoss) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidDimension(
                "an MLP needs at least an input and an output layer".into(),
            ));
        }
        if layers.contains(&0) {
            return Err(Error::InvalidDimension(format!("layer sizes must be positive: {layers:?}")));
        }
        check_len("hidden activations", layers.len() - 2, activations.len())?;
        Ok(Self {
            layers,
            activations,
            output,
        })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn output(&self) -> OutputLoss {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layers.last().unwrap()
    }

    /// `sum(n_i * n_{i+1} + n_{i+1})` over consecutive layers.
    pub fn num_params(&self) -> usize {
        self.layers.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// One `(len, fan_in)` block per layer, weights and biases together.
    pub fn fan_in_blocks(&self) -> Vec<(usize, usize)> {
        self.layers.windows(2).map(|p| (p[0] * p[1] + p[1], p[0])).collect()
    }
}

/// Fully connected network used as a loss over flat parameter vectors.
///
/// Parameters are laid out layer by layer: the `n_out x n_in` weight matrix in
/// row-major order followed by the `n_out` biases.
#[derive(Debug, Clone)]
pub struct Mlp {
    shape: MlpShape,
    offsets: Vec<usize>,
}

impl Mlp {
    pub fn new(shape: MlpShape) -> Self {
        let mut offsets = vec![0];
        for p in shape.layers.windows(2) {
            offsets.push(offsets.last().unwrap() + p[0] * p[1] + p[1]);
        }
        Self { shape, offsets }
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn num_params(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn init_params(&self, kind: InitKind, rng: &mut RngStream) -> Result<ParamVector> {
        let blocks = self.shape.fan_in_blocks();
        let scheme = match kind {
            InitKind::StandardNormal => InitScheme::StandardNormal,
            InitKind::FanInScaled => InitScheme::FanInScaled { blocks: &blocks },
        };
        init_params(self.num_params(), scheme, rng)
    }

    fn layer<'w>(&self, w: &'w [f64], l: usize) -> (&'w [f64], &'w [f64]) {
        let (n_in, n_out) = (self.shape.layers[l], self.shape.layers[l + 1]);
        let start = self.offsets[l];
        let split = start + n_in * n_out;
        (&w[start..split], &w[split..split + n_out])
    }

    /// Activations of every layer; index 0 is the input and the last entry is
    /// the raw output (pre-softmax).
    fn forward(&self, w: &[f64], features: &[f64], rows: usize) -> Result<Vec<Vec<f64>>> {
        check_len("mlp parameters", self.num_params(), w.len())?;
        check_len("mlp input", rows * self.shape.input_dim(), features.len())?;
        let depth = self.shape.layers.len() - 1;
        let mut acts = Vec::with_capacity(depth + 1);
        acts.push(features.to_vec());
        for l in 0..depth {
            let (n_in, n_out) = (self.shape.layers[l], self.shape.layers[l + 1]);
            let (weights, biases) = self.layer(w, l);
            let prev = &acts[l];
            let mut out = vec![0.0; rows * n_out];
            for r in 0..rows {
                let x = &prev[r * n_in..(r + 1) * n_in];
                for (o, z) in out[r * n_out..(r + 1) * n_out].iter_mut().enumerate() {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    *z = biases[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            if l + 1 < depth {
                let act = self.shape.activations[l];
                out.iter_mut().for_each(|z| *z = act.apply(*z));
            }
            acts.push(out);
        }
        if let Some(index) = acts[depth].iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "mlp activations",
                index,
            });
        }
        Ok(acts)
    }

    /// Raw network outputs (logits for softmax networks), row-major.
    pub fn outputs(&self, w: &[f64], features: &[f64]) -> Result<Vec<f64>> {
        let rows = features.len() / self.shape.input_dim();
        let mut acts = self.forward(w, features, rows)?;
        Ok(acts.pop().unwrap())
    }

    /// Arg-max class per row.
    pub fn predict_classes(&self, w: &[f64], features: &[f64]) -> Result<Vec<usize>> {
        let d_out = self.shape.output_dim();
        let out = self.outputs(w, features)?;
        Ok(out
            .chunks(d_out)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect())
    }

    /// Per-row losses and, when requested, the gradient of the output w.r.t.
    /// the raw outputs scaled by `scale`.
    fn output_terms(&self, out: &[f64], targets: &Targets, rows: usize, scale: f64, delta: Option<&mut [f64]>) -> Result<f64> {
        let d_out = self.shape.output_dim();
        let mut total = 0.0;
        let mut delta = delta;
        for r in 0..rows {
            let z = &out[r * d_out..(r + 1) * d_out];
            match self.shape.output {
                OutputLoss::SoftmaxCrossEntropy => {
                    let label = match targets {
                        Targets::Classes(labels) => labels[r],
                        Targets::Values { .. } => {
                            return Err(Error::Config("softmax cross-entropy needs class labels".into()))
                        }
                    };
                    if label >= d_out {
                        return Err(Error::InvalidDimension(format!(
                            "class index {label} out of range for {d_out} outputs"
                        )));
                    }
                    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    total += lse - z[label];
                    if let Some(d) = delta.as_deref_mut() {
                        for (j, dj) in d[r * d_out..(r + 1) * d_out].iter_mut().enumerate() {
                            let p = (z[j] - lse).exp();
                            *dj = scale * (p - if j == label { 1.0 } else { 0.0 });
                        }
                    }
                }
                OutputLoss::MeanSquare => {
                    let inv = 1.0 / d_out as f64;
                    for j in 0..d_out {
                        let t = match targets {
                            Targets::Classes(labels) => {
                                if labels[r] >= d_out {
                                    return Err(Error::InvalidDimension(format!(
                                        "class index {} out of range for {d_out} outputs",
                                        labels[r]
                                    )));
                                }
                                if labels[r] == j {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            Targets::Values { values, .. } => values[r * d_out + j],
                        };
                        let e = z[j] - t;
                        total += inv * e * e;
                        if let Some(d) = delta.as_deref_mut() {
                            d[r * d_out + j] = scale * 2.0 * inv * e;
                        }
                    }
                }
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFinite {
                context: "mlp loss",
                index: 0,
            });
        }
        Ok(total)
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        check_len("batch feature columns", self.shape.input_dim(), batch.cols())?;
        if let Targets::Values { dim, .. } = batch.targets() {
            check_len("batch target columns", self.shape.output_dim(), *dim)?;
        }
        Ok(())
    }

    /// Sum of per-instance losses over the batch.
    pub fn summed_loss(&self, w: &[f64], batch: &Batch) -> Result<f64> {
        self.check_batch(batch)?;
        let rows = batch.len();
        let mut acts = self.forward(w, batch.features(), rows)?;
        let out = acts.pop().unwrap();
        self.output_terms(&out, batch.targets(), rows, 1.0, None)
    }

    /// Mean per-instance loss over the batch.
    pub fn loss(&self, w: &[f64], batch: &Batch) -> Result<f64> {
        Ok(self.summed_loss(w, batch)? / batch.len() as f64)
    }

    /// Mean loss and its gradient by backpropagation.
    pub fn loss_and_grad(&self, w: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let rows = batch.len();
        let acts = self.forward(w, batch.features(), rows)?;
        let depth = self.shape.layers.len() - 1;
        let scale = 1.0 / rows as f64;
        let mut delta = vec![0.0; rows * self.shape.output_dim()];
        let total = self.output_terms(&acts[depth], batch.targets(), rows, scale, Some(&mut delta))?;

        let mut grad = vec![0.0; self.num_params()];
        for l in (0..depth).rev() {
            let (n_in, n_out) = (self.shape.layers[l], self.shape.layers[l + 1]);
            let prev = &acts[l];
            let start = self.offsets[l];
            let (gw, rest) = grad[start..].split_at_mut(n_in * n_out);
            let gb = &mut rest[..n_out];
            for r in 0..rows {
                let x = &prev[r * n_in..(r + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[r * n_out + o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let (weights, _) = self.layer(w, l);
            let act = self.shape.activations[l - 1];
            let mut next = vec![0.0; rows * n_in];
            for r in 0..rows {
                let dr = &delta[r * n_out..(r + 1) * n_out];
                let nr = &mut next[r * n_in..(r + 1) * n_in];
                for (o, &d) in dr.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (n, wi) in nr.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                        *n += d * wi;
                    }
                }
                for (n, a) in nr.iter_mut().zip(&prev[r * n_in..(r + 1) * n_in]) {
                    *n *= act.derivative_from_output(*a);
                }
            }
            delta = next;
        }
        Ok((total * scale, grad))
    }

    /// Mean loss and classification accuracy (for class-labelled batches).
    pub fn evaluate(&self, w: &[f64], batch: &Batch) -> Result<(f64, Option<f64>)> {
        let loss = self.loss(w, batch)?;
        let accuracy = match batch.targets() {
            Targets::Classes(labels) => {
                let predicted = self.predict_classes(w, batch.features())?;
                let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
                Some(hits as f64 / labels.len() as f64)
            }
            Targets::Values { .. } => None,
        };
        Ok((loss, accuracy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{AdamConfig, AdamState};

    fn softmax_net(layers: Vec<usize>, act: Activation) -> Mlp {
        Mlp::new(MlpShape::new(layers, act, OutputLoss::SoftmaxCrossEntropy).unwrap())
    }

    #[test]
    fn parameter_count() {
        let shape = MlpShape::new(vec![4, 5, 3], Activation::Relu, OutputLoss::SoftmaxCrossEntropy).unwrap();
        assert_eq!(shape.num_params(), 4 * 5 + 5 + 5 * 3 + 3);
        assert_eq!(shape.fan_in_blocks(), vec![(25, 4), (18, 5)]);
        assert!(MlpShape::new(vec![4], Activation::Relu, OutputLoss::MeanSquare).is_err());
        assert!(MlpShape::new(vec![4, 0, 2], Activation::Relu, OutputLoss::MeanSquare).is_err());
    }

    #[test]
    fn zero_weights_give_log_c() {
        let net = softmax_net(vec![3, 4], Activation::Relu);
        let w = vec![0.0; net.num_params()];
        let batch = Batch::classification(vec![0.1, 0.5, -2.0, 1.0, 1.0, 3.0, 0.0, 0.0, 7.0, -1.0, 2.0, 2.0], 3, vec![0, 1, 2, 3]).unwrap();
        assert!((net.loss(&w, &batch).unwrap() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mean_square_zero_at_own_outputs() {
        let net = Mlp::new(MlpShape::new(vec![2, 3, 2], Activation::Tanh, OutputLoss::MeanSquare).unwrap());
        let w: Vec<f64> = (0..net.num_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = vec![0.2, -0.4, 1.5, 0.3];
        let y = net.outputs(&w, &x).unwrap();
        let batch = Batch::regression(x, 2, y, 2).unwrap();
        assert_eq!(net.loss(&w, &batch).unwrap(), 0.0);
    }

    #[test]
    fn batch_loss_is_mean_of_singletons() {
        let net = softmax_net(vec![3, 4, 2], Activation::Tanh);
        let w: Vec<f64> = (0..net.num_params()).map(|i| (i as f64).cos() * 0.5).collect();
        let batch = Batch::classification((0..15).map(|i| i as f64 * 0.1 - 0.7).collect(), 3, vec![0, 1, 1, 0, 1]).unwrap();
        let mean = (0..batch.len()).map(|i| net.loss(&w, &batch.slice_row(i)).unwrap()).sum::<f64>() / 5.0;
        assert!((net.loss(&w, &batch).unwrap() - mean).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let net = softmax_net(vec![3, 2], Activation::Relu);
        let batch = Batch::classification(vec![0.0; 3], 3, vec![1]).unwrap();
        assert!(matches!(net.loss(&[0.0; 3], &batch), Err(Error::Shape { .. })));
        let wide = Batch::classification(vec![0.0; 4], 4, vec![1]).unwrap();
        assert!(matches!(net.loss(&[0.0; 8], &wide), Err(Error::Shape { .. })));
        let bad_label = Batch::classification(vec![0.0; 3], 3, vec![2]).unwrap();
        assert!(net.loss(&[0.0; 8], &bad_label).is_err());
    }

    #[test]
    fn overflowing_weights_are_numeric_errors() {
        let net = Mlp::new(MlpShape::new(vec![1, 1], Activation::Relu, OutputLoss::MeanSquare).unwrap());
        let batch = Batch::regression(vec![1e300], 1, vec![0.0], 1).unwrap();
        assert!(matches!(net.loss(&[1e300, 0.0], &batch), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gradient_vanishes_at_fitted_point() {
        let net = Mlp::new(MlpShape::new(vec![2, 3, 1], Activation::Tanh, OutputLoss::MeanSquare).unwrap());
        let batch = Batch::regression(vec![0.5, -0.25], 2, vec![0.3], 1).unwrap();
        let mut w: Vec<f64> = (0..net.num_params()).map(|i| 0.1 * (i as f64 + 1.0).sin()).collect();
        let mut state = AdamState::new(w.len(), AdamConfig { lr: 0.01, ..AdamConfig::default() });
        for _ in 0..20_000 {
            let (_, g) = net.loss_and_grad(&w, &batch).unwrap();
            state.update(&mut w, &g).unwrap();
        }
        let (loss, g) = net.loss_and_grad(&w, &batch).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(loss < 1e-12 && norm < 1e-6, "loss {loss}, |g| {norm}");
    }

    #[test]
    fn swapping_hidden_units_swaps_gradient_blocks() {
        let net = softmax_net(vec![3, 4, 2], Activation::Tanh);
        let w: Vec<f64> = (0..net.num_params()).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.1).collect();
        let batch = Batch::classification(vec![0.3, -0.1, 0.8, 1.0, 0.2, -0.5], 3, vec![1, 0]).unwrap();
        // swap hidden units 1 and 2: rows of W1, entries of b1, columns of W2
        let swap = |v: &[f64]| {
            let mut s = v.to_vec();
            for i in 0..3 {
                s.swap(3 + i, 6 + i);
            }
            s.swap(12 + 1, 12 + 2);
            for o in 0..2 {
                s.swap(16 + o * 4 + 1, 16 + o * 4 + 2);
            }
            s
        };
        let (la, ga) = net.loss_and_grad(&w, &batch).unwrap();
        let (lb, gb) = net.loss_and_grad(&swap(&w), &batch).unwrap();
        assert!((la - lb).abs() < 1e-15);
        for (a, b) in swap(&ga).iter().zip(&gb) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
