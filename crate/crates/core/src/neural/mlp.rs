//! Dense feed-forward network with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`. Layer `l` maps `widths[l]` inputs
//! to `widths[l + 1]` outputs and stores its row-major weight matrix
//! (`fan_out x fan_in`) followed by its bias vector. Hidden layers use tanh,
//! the output layer is linear.

use rand::Rng;

use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Per-layer outputs of the most recent [`Mlp::forward_cached`] call.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// tanh through a single `exp` (or `exp_m1` near zero); agrees with
/// `f64::tanh` to within a few ulp and is noticeably cheaper.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let a = x.abs();
    let t = if a > 0.55 {
        1.0 - 2.0 / ((2.0 * a).exp() + 1.0)
    } else {
        let e = (-2.0 * a).exp_m1();
        -e / (2.0 + e)
    };
    t.copysign(x)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(widths: &[usize]) -> Self {
        assert!(
            widths.len() >= 2,
            "an mlp needs at least input and output widths"
        );
        assert!(
            widths.iter().all(|&w| w > 0),
            "layer widths must be positive"
        );
        let mut offsets = Vec::with_capacity(widths.len());
        let mut off = 0;
        for w in widths.windows(2) {
            offsets.push(off);
            off += (w[0] + 1) * w[1];
        }
        offsets.push(off);
        Self {
            widths: widths.to_vec(),
            params: vec![0.0; off],
            offsets,
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(widths);
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let start = net.offsets[l];
            for p in &mut net.params[start..start + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self, NeuralError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(NeuralError::Shape(format!("bad layer widths {widths:?}")));
        }
        let mut net = Self::zeros(widths);
        if params.len() != net.params.len() {
            return Err(NeuralError::Shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            Activation::Identity
        } else {
            Activation::Tanh
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.widths == other.widths
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(x, &mut cache);
        cache.acts.pop().unwrap()
    }

    pub fn forward_cached<'c>(&self, x: &[f64], cache: &'c mut ForwardCache) -> &'c [f64] {
        assert_eq!(x.len(), self.input_dim(), "input width mismatch");
        cache.acts.resize_with(self.widths.len(), Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[self.offsets[l]..self.offsets[l] + fan_in * fan_out];
            let b = &self.params[self.offsets[l] + fan_in * fan_out..self.offsets[l + 1]];
            let act = self.activation(l);
            let (prev, rest) = cache.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            out.clear();
            out.extend(w.chunks_exact(fan_in).zip(b).map(|(row, bias)| {
                let z = dot(row, input) + bias;
                act.apply(z)
            }));
        }
        cache.output()
    }

    /// Backpropagate `d_out` (gradient of the loss w.r.t. the last forward
    /// output) and accumulate parameter gradients into `grad`. When `d_input`
    /// is given it receives the gradient w.r.t. the network input.
    pub fn backward(
        &self,
        cache: &mut ForwardCache,
        d_out: &[f64],
        grad: &mut [f64],
        d_input: Option<&mut [f64]>,
    ) {
        assert_eq!(grad.len(), self.params.len());
        self.backprop(cache, d_out, Some(grad), d_input);
    }

    /// Gradient w.r.t. the input only; parameter gradients are skipped.
    pub fn input_gradient(&self, cache: &mut ForwardCache, d_out: &[f64], d_input: &mut [f64]) {
        self.backprop(cache, d_out, None, Some(d_input));
    }

    fn backprop(
        &self,
        cache: &mut ForwardCache,
        d_out: &[f64],
        mut grad: Option<&mut [f64]>,
        d_input: Option<&mut [f64]>,
    ) {
        assert_eq!(d_out.len(), self.output_dim());
        let n = self.num_layers();
        let ForwardCache {
            acts,
            delta,
            delta_prev,
        } = cache;
        let last = self.activation(n - 1);
        delta.clear();
        delta.extend(
            d_out
                .iter()
                .zip(&acts[n])
                .map(|(g, y)| g * last.derivative_from_output(*y)),
        );
        let mut d_input = d_input;
        for l in (0..n).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let off = self.offsets[l];
            let input = &acts[l];
            if let Some(grad) = grad.as_deref_mut() {
                let (gw, gb) = grad[off..self.offsets[l + 1]].split_at_mut(fan_in * fan_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (g, x) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                        *g += d * x;
                    }
                    gb[o] += d;
                }
            }
            let need_prev = l > 0 || d_input.is_some();
            if !need_prev {
                break;
            }
            let w = &self.params[off..off + fan_in * fan_out];
            delta_prev.clear();
            delta_prev.resize(fan_in, 0.0);
            for (row, &d) in w.chunks_exact(fan_in).zip(delta.iter()) {
                if d == 0.0 {
                    continue;
                }
                for (dp, wi) in delta_prev.iter_mut().zip(row) {
                    *dp += wi * d;
                }
            }
            if l == 0 {
                if let Some(di) = d_input.take() {
                    di.copy_from_slice(delta_prev);
                }
                break;
            }
            let act = self.activation(l - 1);
            for (dp, y) in delta_prev.iter_mut().zip(&acts[l]) {
                *dp *= act.derivative_from_output(*y);
            }
            std::mem::swap(delta, delta_prev);
        }
    }
}
