//! Minimal dense policy/value network with hand-derived reverse-mode
//! gradients, an RMSProp optimizer with global-norm clipping, and a flat
//! little-endian f64 snapshot format.
//!
//! Everything is f64 end to end so the finite-difference gradient oracle has
//! enough precision to certify the analytic gradients to 1e-4.

use std::io::{self, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("observation length {got} does not match network input {expect}")]
    ShapeMismatch { expect: usize, got: usize },
    #[error("parameter vector length {got} does not match network size {expect}")]
    ParamCount { expect: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a parameter snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("snapshot header promises {expect} parameters but the file holds {got}")]
    BadLength { expect: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetShape {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
}

/// Offsets of one affine layer inside the flat parameter vector. Weights are
/// stored input-major: the `fan_out` weights of input j are contiguous, which
/// makes both the sparse forward pass and the backward column updates walk
/// contiguous memory.
#[derive(Debug, Clone, Copy)]
struct Layer {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

impl Layer {
    fn param_count(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
}

/// Shared-trunk rectifier network with an action-logits head and a scalar
/// state-value head. Parameters live in one flat vector.
#[derive(Debug, Clone)]
pub struct DenseNet {
    shape: NetShape,
    trunk: Vec<Layer>,
    policy: Layer,
    value: Layer,
    params: Vec<f64>,
}

/// Post-rectifier trunk activations plus both head outputs for one input.
/// Cached by the rollout loop so the update never re-runs its forward passes.
#[derive(Debug, Clone)]
pub struct Activations {
    pub hidden: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl Activations {
    pub fn zeros(shape: &NetShape) -> Activations {
        Activations {
            hidden: shape.hidden.iter().map(|&n| vec![0.0; n]).collect(),
            logits: vec![0.0; shape.actions],
            value: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoeffs {
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Means over the batch. `total = policy + value_coef*value - entropy_coef*entropy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// One transition of an update batch. `ret` and `advantage` are data: the
/// policy-gradient term treats the advantage as a constant.
#[derive(Debug, Clone, Copy)]
pub struct A2cSample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub ret: f64,
    pub advantage: f64,
}

fn layer_offsets(shape: &NetShape) -> (Vec<Layer>, Layer, Layer, usize) {
    let mut offset = 0;
    let mut trunk = Vec::with_capacity(shape.hidden.len());
    let mut fan_in = shape.input;
    for &fan_out in &shape.hidden {
        let l = Layer { w: offset, b: offset + fan_in * fan_out, fan_in, fan_out };
        offset += l.param_count();
        trunk.push(l);
        fan_in = fan_out;
    }
    let policy = Layer { w: offset, b: offset + fan_in * shape.actions, fan_in, fan_out: shape.actions };
    let offset = offset + policy.param_count();
    let value = Layer { w: offset, b: offset + fan_in, fan_in, fan_out: 1 };
    let total = offset + value.param_count();
    (trunk, policy, value, total)
}

impl DenseNet {
    /// Fresh network with scaled-uniform fan-in weight init and zero biases.
    pub fn init(shape: NetShape, seed: u64) -> DenseNet {
        let (trunk, policy, value, total) = layer_offsets(&shape);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in trunk.iter().chain([&policy, &value]) {
            let bound = 1.0 / (layer.fan_in as f64).sqrt();
            for w in &mut params[layer.w..layer.w + layer.fan_in * layer.fan_out] {
                *w = rng.gen_range(-bound..bound);
            }
        }
        DenseNet { shape, trunk, policy, value, params }
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), NnError> {
        if params.len() != self.params.len() {
            return Err(NnError::ParamCount { expect: self.params.len(), got: params.len() });
        }
        self.params = params;
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `out = b + W^T x`, skipping zero inputs. Observation planes are mostly
    /// zeros, so this is the hot-path win; adding a skipped zero column would
    /// contribute exactly +0.0 anyway.
    fn affine(&self, layer: Layer, x: &[f64], out: &mut [f64]) {
        let w = &self.params[layer.w..layer.w + layer.fan_in * layer.fan_out];
        let b = &self.params[layer.b..layer.b + layer.fan_out];
        out.copy_from_slice(b);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = &w[j * layer.fan_out..(j + 1) * layer.fan_out];
            if xj == 1.0 {
                for (o, c) in out.iter_mut().zip(col) {
                    *o += c;
                }
            } else {
                for (o, c) in out.iter_mut().zip(col) {
                    *o += xj * c;
                }
            }
        }
    }

    pub fn forward_into(&self, x: &[f64], acts: &mut Activations) {
        debug_assert_eq!(x.len(), self.shape.input);
        let Activations { hidden, logits, value } = acts;
        for (l, layer) in self.trunk.iter().enumerate() {
            let (prev, rest) = hidden.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &prev[l - 1] };
            let h = &mut rest[0];
            self.affine(*layer, input, h);
            for v in h.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let last: &[f64] = if self.trunk.is_empty() { x } else { &hidden[self.trunk.len() - 1] };
        self.affine(self.policy, last, logits);
        let mut v = [0.0];
        self.affine(self.value, last, &mut v);
        *value = v[0];
    }

    /// Deterministic `(action logits, state value)` for one observation.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64), NnError> {
        if x.len() != self.shape.input {
            return Err(NnError::ShapeMismatch { expect: self.shape.input, got: x.len() });
        }
        let mut acts = Activations::zeros(&self.shape);
        self.forward_into(x, &mut acts);
        Ok((acts.logits, acts.value))
    }

    /// Mean A2C loss over the batch, recomputing all forward passes. Used by
    /// the finite-difference oracle and anywhere activations are not cached.
    pub fn a2c_loss(&self, samples: &[A2cSample], coeffs: LossCoeffs) -> LossStats {
        let mut acts = Activations::zeros(&self.shape);
        let inv_m = 1.0 / samples.len() as f64;
        let (mut policy, mut value, mut entropy) = (0.0, 0.0, 0.0);
        for s in samples {
            self.forward_into(s.input, &mut acts);
            let (logp, h) = log_softmax_entropy(&acts.logits);
            policy += inv_m * (-logp[s.action] * s.advantage);
            let err = s.ret - acts.value;
            value += inv_m * err * err;
            entropy += inv_m * h;
        }
        LossStats {
            total: policy + coeffs.value_coef * value - coeffs.entropy_coef * entropy,
            policy,
            value,
            entropy,
        }
    }

    /// Exact reverse-mode gradient of the A2C loss, recomputing forwards.
    pub fn a2c_backward(&self, samples: &[A2cSample], coeffs: LossCoeffs) -> (LossStats, Vec<f64>) {
        let mut acts: Vec<Activations> = Vec::with_capacity(samples.len());
        for s in samples {
            let mut a = Activations::zeros(&self.shape);
            self.forward_into(s.input, &mut a);
            acts.push(a);
        }
        self.a2c_backward_with(samples, &acts, coeffs)
    }

    /// Gradient from cached activations. The activations must come from this
    /// exact parameter vector (the synchronous trainer guarantees that).
    pub fn a2c_backward_with(
        &self,
        samples: &[A2cSample],
        acts: &[Activations],
        coeffs: LossCoeffs,
    ) -> (LossStats, Vec<f64>) {
        assert_eq!(samples.len(), acts.len());
        let m = samples.len() as f64;
        let inv_m = 1.0 / m;
        let mut grad = vec![0.0; self.params.len()];
        let (mut policy_sum, mut value_sum, mut entropy_sum) = (0.0, 0.0, 0.0);

        let width = self
            .shape
            .hidden
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max(self.policy.fan_in)
            .max(1);
        let mut delta = vec![0.0; width];
        let mut delta_prev = vec![0.0; width];
        let mut g_z = vec![0.0; self.shape.actions];

        let (cv, ce) = (coeffs.value_coef, coeffs.entropy_coef);

        for (s, a) in samples.iter().zip(acts) {
            let (logp, h_ent) = log_softmax_entropy(&a.logits);
            policy_sum += inv_m * (-logp[s.action] * s.advantage);
            let err = s.ret - a.value;
            value_sum += inv_m * err * err;
            entropy_sum += inv_m * h_ent;

            for (o, gz) in g_z.iter_mut().enumerate() {
                let p = logp[o].exp();
                let onehot = if o == s.action { 1.0 } else { 0.0 };
                *gz = inv_m * (s.advantage * (p - onehot) + ce * p * (logp[o] + h_ent));
            }
            let g_v = inv_m * cv * 2.0 * (a.value - s.ret);

            let last = if self.trunk.is_empty() { s.input } else { &a.hidden[self.trunk.len() - 1] };
            let d = &mut delta[..self.policy.fan_in];
            d.iter_mut().for_each(|v| *v = 0.0);

            // policy head
            {
                let l = self.policy;
                let w = &self.params[l.w..l.w + l.fan_in * l.fan_out];
                let gw = &mut grad[l.w..l.w + l.fan_in * l.fan_out];
                for (j, &xj) in last.iter().enumerate() {
                    let col_w = &w[j * l.fan_out..(j + 1) * l.fan_out];
                    let col_g = &mut gw[j * l.fan_out..(j + 1) * l.fan_out];
                    let mut acc = 0.0;
                    for ((gz, cw), cg) in g_z.iter().zip(col_w).zip(col_g) {
                        acc += cw * gz;
                        if xj != 0.0 {
                            *cg += xj * gz;
                        }
                    }
                    d[j] += acc;
                }
                let gb = &mut grad[l.b..l.b + l.fan_out];
                for (g, gz) in gb.iter_mut().zip(&g_z) {
                    *g += gz;
                }
            }
            // value head
            {
                let l = self.value;
                let w = &self.params[l.w..l.w + l.fan_in];
                let gw = &mut grad[l.w..l.w + l.fan_in];
                for (j, &xj) in last.iter().enumerate() {
                    d[j] += w[j] * g_v;
                    if xj != 0.0 {
                        gw[j] += xj * g_v;
                    }
                }
                grad[l.b] += g_v;
            }

            // trunk, last layer to first
            for li in (0..self.trunk.len()).rev() {
                let l = self.trunk[li];
                let h = &a.hidden[li];
                // rectifier gate
                for (dv, &hv) in delta[..l.fan_out].iter_mut().zip(h) {
                    if hv <= 0.0 {
                        *dv = 0.0;
                    }
                }
                let x: &[f64] = if li == 0 { s.input } else { &a.hidden[li - 1] };
                let w = &self.params[l.w..l.w + l.fan_in * l.fan_out];
                let gw = &mut grad[l.w..l.w + l.fan_in * l.fan_out];
                if li == 0 {
                    for (j, &xj) in x.iter().enumerate() {
                        if xj == 0.0 {
                            continue;
                        }
                        let col_g = &mut gw[j * l.fan_out..(j + 1) * l.fan_out];
                        for (cg, dv) in col_g.iter_mut().zip(&delta[..l.fan_out]) {
                            *cg += xj * dv;
                        }
                    }
                } else {
                    for (j, &xj) in x.iter().enumerate() {
                        let col_w = &w[j * l.fan_out..(j + 1) * l.fan_out];
                        let mut acc = 0.0;
                        if xj == 0.0 {
                            for (cw, dv) in col_w.iter().zip(&delta[..l.fan_out]) {
                                acc += cw * dv;
                            }
                        } else {
                            let col_g = &mut gw[j * l.fan_out..(j + 1) * l.fan_out];
                            for ((cw, cg), dv) in col_w.iter().zip(col_g).zip(&delta[..l.fan_out]) {
                                acc += cw * dv;
                                *cg += xj * dv;
                            }
                        }
                        delta_prev[j] = acc;
                    }
                }
                let gb = &mut grad[l.b..l.b + l.fan_out];
                for (g, dv) in gb.iter_mut().zip(&delta[..l.fan_out]) {
                    *g += dv;
                }
                if li > 0 {
                    delta[..l.fan_in].copy_from_slice(&delta_prev[..l.fan_in]);
                }
            }
        }

        let stats = LossStats {
            total: policy_sum + cv * value_sum - ce * entropy_sum,
            policy: policy_sum,
            value: value_sum,
            entropy: entropy_sum,
        };
        (stats, grad)
    }
}

/// Numerically stable log-softmax plus Shannon entropy of the softmax.
fn log_softmax_entropy(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &z in logits {
        sum += (z - max).exp();
    }
    let log_sum = sum.ln();
    let logp: Vec<f64> = logits.iter().map(|&z| z - max - log_sum).collect();
    let entropy = -logp.iter().map(|&lp| lp.exp() * lp).sum::<f64>();
    (logp, entropy)
}

/// Softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let (logp, _) = log_softmax_entropy(logits);
    logp.iter().map(|&lp| lp.exp()).collect()
}

/// Shannon entropy (nats) of the softmax distribution.
pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax_entropy(logits).1
}

/// Samples an action from the softmax distribution; returns the action index
/// and its log-probability.
pub fn sample_action<R: Rng>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let (logp, _) = log_softmax_entropy(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut action = logp.len() - 1;
    for (i, &lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            action = i;
            break;
        }
    }
    (action, logp[action])
}

/// RMSProp state with a global gradient-norm clip, one slot per parameter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub max_grad_norm: f64,
    pub step_count: u64,
    sq_avg: Vec<f64>,
}

impl OptimizerState {
    pub fn new(param_count: usize) -> OptimizerState {
        OptimizerState {
            learning_rate: 7e-4,
            decay: 0.99,
            epsilon: 1e-5,
            max_grad_norm: 0.5,
            step_count: 0,
            sq_avg: vec![0.0; param_count],
        }
    }

    pub fn sq_avg(&self) -> &[f64] {
        &self.sq_avg
    }
}

/// Scales `g` in place so its L2 norm does not exceed `max_norm`; returns the
/// pre-clip norm.
pub fn clip_global_norm(g: &mut [f64], max_norm: f64) -> f64 {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        g.iter_mut().for_each(|v| *v *= scale);
    }
    norm
}

/// One RMSProp step on the clipped gradient.
pub fn rmsprop_update(net: &mut DenseNet, grad: &[f64], opt: &mut OptimizerState) {
    assert_eq!(grad.len(), net.params.len());
    assert_eq!(opt.sq_avg.len(), net.params.len());
    let mut g = grad.to_vec();
    clip_global_norm(&mut g, opt.max_grad_norm);
    for ((p, m), gi) in net.params.iter_mut().zip(&mut opt.sq_avg).zip(&g) {
        *m = opt.decay * *m + (1.0 - opt.decay) * gi * gi;
        *p -= opt.learning_rate * gi / (*m + opt.epsilon).sqrt();
    }
    opt.step_count += 1;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Compares the analytic gradient against central finite differences
/// (h = 1e-5) on up to `max_coords` randomly chosen parameters.
/// Relative error is `|fd - g| / max(1e-6, |fd| + |g|)`.
pub fn grad_check(
    net: &DenseNet,
    samples: &[A2cSample],
    coeffs: LossCoeffs,
    tol: f64,
    seed: u64,
    max_coords: usize,
) -> GradCheckReport {
    const H: f64 = 1e-5;
    let (_, grad) = net.a2c_backward(samples, coeffs);
    let n = net.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<usize> = (0..n).collect();
    if n > max_coords {
        for i in 0..max_coords {
            let j = rng.gen_range(i..n);
            coords.swap(i, j);
        }
        coords.truncate(max_coords);
    }

    let mut probe = net.clone();
    let mut max_rel: f64 = 0.0;
    for &k in &coords {
        let orig = probe.params[k];
        probe.params[k] = orig + H;
        let hi = probe.a2c_loss(samples, coeffs).total;
        probe.params[k] = orig - H;
        let lo = probe.a2c_loss(samples, coeffs).total;
        probe.params[k] = orig;
        let fd = (hi - lo) / (2.0 * H);
        let rel = (fd - grad[k]).abs() / (fd.abs() + grad[k].abs()).max(1e-6);
        max_rel = max_rel.max(rel);
    }
    GradCheckReport { checked: coords.len(), max_rel_err: max_rel, pass: max_rel < tol }
}

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"CGNP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Writes the parameters as a 16-byte header (magic, version, count) followed
/// by little-endian f64 values.
pub fn save_params(net: &DenseNet, path: &Path) -> io::Result<()> {
    let mut buf = Vec::with_capacity(16 + net.params.len() * 8);
    buf.extend_from_slice(&SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)
}

/// Reads a parameter snapshot back into a flat vector.
pub fn load_params(path: &Path) -> Result<Vec<f64>, SnapshotError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || bytes[..4] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let got = (bytes.len() - 16) as u64 / 8;
    if got != count || (bytes.len() - 16) % 8 != 0 {
        return Err(SnapshotError::BadLength { expect: count, got });
    }
    Ok(bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
