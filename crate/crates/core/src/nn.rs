//! Dense feed-forward networks with hand-written backpropagation.
//!
//! Shared by the GAN (generator and critic) and the feed-forward
//! classifier. Hidden layers use rectifier units; the last layer is linear
//! and callers apply their own output head. Parameters live in one flat
//! vector so per-example gradients can be clipped and noised as plain
//! vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, needed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[l]` is the input to layer `l` (post-activation of `l - 1`).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer; the last entry is the network output.
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `sizes` lists layer widths
    /// from input to output and needs at least two entries.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output width");
        let mut params = Vec::with_capacity(Self::count_params(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-limit..=limit));
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    fn count_params(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of layer `l`'s weight block; its bias block follows it.
    fn offset(&self, l: usize) -> usize {
        Self::count_params(&self.sizes[..=l])
    }

    fn layer(&self, l: usize, x: &[f64], out: &mut Vec<f64>) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        out.clear();
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            out.push(b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_width());
        let layers = self.sizes.len() - 1;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in 0..layers {
            self.layer(l, &cur, &mut next);
            if l + 1 < layers {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        let layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        let mut cur = x.to_vec();
        for l in 0..layers {
            let mut z = Vec::new();
            self.layer(l, &cur, &mut z);
            let next = if l + 1 < layers {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                Vec::new()
            };
            inputs.push(std::mem::replace(&mut cur, next));
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output)
    /// and returns d(loss)/d(input).
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut delta = grad_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let input = &trace.inputs[l];
            let w = &self.params[off..off + n_in * n_out];
            let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut grad_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * input[i];
                    grad_in[i] += d * row[i];
                }
            }
            if l > 0 {
                for (g, &z) in grad_in.iter_mut().zip(&trace.pre[l - 1]) {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = grad_in;
        }
        delta
    }

    /// Plain gradient descent step.
    pub fn sgd_step(&mut self, grad: &[f64], lr: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }

    pub fn clamp_params(&mut self, bound: f64) {
        for p in &mut self.params {
            *p = p.clamp(-bound, bound);
        }
    }

    pub fn max_abs_param(&self) -> f64 {
        self.params.iter().fold(0.0, |m, p| m.max(p.abs()))
    }
}

/// Adam optimiser state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Loss = 0.5 * ||net(x) - target||^2; compares backward() with central
    /// finite differences on every parameter and input coordinate.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sizes in [vec![3, 5, 2], vec![4, 6, 5, 1], vec![2, 3]] {
            let net = Mlp::new(&sizes, &mut rng);
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let target: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let loss = |n: &Mlp, x: &[f64]| {
                n.forward(x).iter().zip(&target).map(|(a, b)| 0.5 * (a - b).powi(2)).sum::<f64>()
            };
            let trace = net.forward_trace(&x);
            let gout: Vec<f64> = trace.output().iter().zip(&target).map(|(a, b)| a - b).collect();
            let mut grad = vec![0.0; net.n_params()];
            let gin = net.backward(&trace, &gout, &mut grad);
            let h = 1e-6;
            for k in 0..net.n_params() {
                let mut p = net.clone();
                p.params_mut()[k] += h;
                let up = loss(&p, &x);
                p.params_mut()[k] -= 2.0 * h;
                let down = loss(&p, &x);
                let fd = (up - down) / (2.0 * h);
                assert!((fd - grad[k]).abs() <= 1e-5 * fd.abs().max(1e-3), "param {k}: {fd} vs {}", grad[k]);
            }
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let up = loss(&net, &xp);
                xp[i] -= 2.0 * h;
                let down = loss(&net, &xp);
                let fd = (up - down) / (2.0 * h);
                assert!((fd - gin[i]).abs() <= 1e-5 * fd.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn forward_trace_agrees_with_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 4, 4, 2], &mut rng);
        let x = [0.3, -0.7, 1.1];
        assert_eq!(net.forward(&x), net.forward_trace(&x).output());
        assert_eq!(net.n_params(), 3 * 4 + 4 + 4 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn clamp_bounds_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(&[8, 8, 1], &mut rng);
        net.clamp_params(0.01);
        assert!(net.max_abs_param() <= 0.01);
    }
}
