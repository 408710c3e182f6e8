use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::arch::ArchDescriptor;
use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
struct DenseSlot {
    weights: usize,
    bias: usize,
    inputs: usize,
    outputs: usize,
    /// Offsets of the layer-norm gain and bias vectors.
    norm: Option<(usize, usize)>,
    residual: bool,
}

impl DenseSlot {
    fn end(&self) -> usize {
        match self.norm {
            Some((_, beta)) => beta + self.outputs,
            None => self.bias + self.outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    hidden: Vec<DenseSlot>,
    heads: Vec<DenseSlot>,
    total: usize,
}

impl Layout {
    fn new(arch: &ArchDescriptor) -> Self {
        let mut offset = 0;
        let mut slot = |inputs: usize, outputs: usize, norm: bool, residual: bool| {
            let weights = offset;
            let bias = weights + inputs * outputs;
            let norm = norm.then(|| (bias + outputs, bias + 2 * outputs));
            let s = DenseSlot {
                weights,
                bias,
                inputs,
                outputs,
                norm,
                residual,
            };
            offset = s.end();
            s
        };
        let widths = &arch.layer_widths;
        let hidden: Vec<_> = (0..arch.hidden_layers())
            .map(|l| slot(widths[l], widths[l + 1], arch.layer_norm[l], arch.residual[l]))
            .collect();
        let trunk = widths[widths.len() - 2];
        let out = arch.output_width();
        let heads: Vec<_> = (0..arch.output_heads)
            .map(|_| slot(trunk, out, false, false))
            .collect();
        Layout {
            hidden,
            heads,
            total: offset,
        }
    }
}

/// Weights, biases and layer-norm parameters of a dense network, stored flat
/// in layer order: for each hidden layer `W` (row-major, `out x in`), `b`,
/// then layer-norm gain and bias when enabled; then every head's `W`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    arch: ArchDescriptor,
    layout: Layout,
    fingerprint: u64,
    values: Vec<f64>,
}

/// Activations recorded by a forward pass, consumed by [`NetParams::backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    fingerprint: u64,
    input: Vec<f64>,
    hidden: Vec<LayerRecord>,
    heads: Vec<Option<LayerRecord>>,
}

#[derive(Debug, Clone)]
struct LayerRecord {
    /// Input to the activation (after layer-norm when enabled).
    pre: Vec<f64>,
    /// Activation output, before any shortcut is added.
    act: Vec<f64>,
    /// Layer output (activation plus shortcut).
    out: Vec<f64>,
    /// Normalized values and inverse standard deviation.
    norm: Option<(Vec<f64>, f64)>,
}

/// Gradient of a scalar with respect to every parameter and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn fingerprint(arch: &ArchDescriptor) -> u64 {
    // FNV-1a over the descriptor encoding.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for &w in &arch.layer_widths {
        eat(w as u64);
    }
    eat(arch.activation.tag() as u64);
    eat(arch.output_activation.tag() as u64);
    for (&n, &r) in arch.layer_norm.iter().zip(&arch.residual) {
        eat(n as u64 | (r as u64) << 1);
    }
    eat(arch.output_heads as u64);
    h
}

impl NetParams {
    /// All-zero parameters (layer-norm gains included).
    pub fn zeros(arch: ArchDescriptor) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let values = vec![0.0; layout.total];
        Ok(NetParams {
            fingerprint: fingerprint(&arch),
            arch,
            layout,
            values,
        })
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`, layer-norm gain 1 and bias 0.
    pub fn init<R: Rng + ?Sized>(arch: ArchDescriptor, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let slots: Vec<DenseSlot> = p.layout.hidden.iter().chain(&p.layout.heads).cloned().collect();
        for s in slots {
            let bound = 1.0 / (s.inputs as f64).sqrt();
            for v in &mut p.values[s.weights..s.bias + s.outputs] {
                *v = rng.random_range(-bound..=bound);
            }
            if let Some((gain, _)) = s.norm {
                p.values[gain..gain + s.outputs].fill(1.0);
            }
        }
        Ok(p)
    }

    pub fn from_values(arch: ArchDescriptor, values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        if values.len() != p.values.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                p.values.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p.describe_index(i)));
        }
        p.values = values;
        Ok(p)
    }

    pub fn arch(&self) -> &ArchDescriptor {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn heads(&self) -> usize {
        self.arch.output_heads
    }

    /// Human-readable location of a flat parameter index.
    pub fn describe_index(&self, index: usize) -> String {
        let named = |kind: &str, n: usize, s: &DenseSlot| -> Option<String> {
            if index < s.weights || index >= s.end() {
                return None;
            }
            let part = if index < s.bias {
                "weights"
            } else if index < s.bias + s.outputs {
                "bias"
            } else if matches!(s.norm, Some((_, beta)) if index >= beta) {
                "layer-norm bias"
            } else {
                "layer-norm gain"
            };
            Some(format!("{kind} {n} {part}"))
        };
        self.layout
            .hidden
            .iter()
            .enumerate()
            .find_map(|(n, s)| named("hidden layer", n, s))
            .or_else(|| {
                self.layout
                    .heads
                    .iter()
                    .enumerate()
                    .find_map(|(n, s)| named("output head", n, s))
            })
            .unwrap_or_else(|| format!("parameter {index}"))
    }

    /// Flat index range of one head's weights and bias.
    pub fn head_range(&self, head: usize) -> std::ops::Range<usize> {
        let s = &self.layout.heads[head];
        s.weights..s.end()
    }

    /// Mask that is false for layer-norm parameters (used by parameter-space noise).
    pub fn perturbable_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.values.len()];
        for s in &self.layout.hidden {
            if let Some((gain, _)) = s.norm {
                mask[gain..s.end()].fill(false);
            }
        }
        mask
    }

    /// Copy with independent `N(0, sigma^2)` noise added to every weight and bias.
    pub fn perturbed<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> NetParams {
        let mut out = self.clone();
        for (v, keep) in out.values.iter_mut().zip(self.perturbable_mask()) {
            if keep {
                let n: f64 = StandardNormal.sample(rng);
                *v += sigma * n;
            }
        }
        out
    }

    /// Polyak averaging `self <- (1 - rho) self + rho online`.
    pub fn soft_update_from(&mut self, online: &NetParams, rho: f64) -> Result<()> {
        if online.fingerprint != self.fingerprint {
            return Err(Error::Shape("soft update between different architectures".into()));
        }
        if rho == 1.0 {
            self.values.copy_from_slice(&online.values);
        } else if rho != 0.0 {
            for (t, o) in self.values.iter_mut().zip(&online.values) {
                *t = (1.0 - rho) * *t + rho * o;
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.arch.input_width() {
            return Err(Error::Shape(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.arch.input_width()
            )));
        }
        Ok(())
    }

    fn dense(&self, s: &DenseSlot, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let w = &self.values[s.weights..s.bias];
        let b = &self.values[s.bias..s.bias + s.outputs];
        out.extend(
            w.chunks_exact(s.inputs)
                .zip(b)
                .map(|(row, &bias)| bias + dot(row, x)),
        );
    }

    fn hidden_forward(&self, s: &DenseSlot, x: &[f64]) -> LayerRecord {
        let mut pre = Vec::with_capacity(s.outputs);
        self.dense(s, x, &mut pre);
        let norm = s.norm.map(|(gain, beta)| {
            let n = pre.len() as f64;
            let mean = pre.iter().sum::<f64>() / n;
            let var = pre.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n;
            let inv_std = 1.0 / (var + LN_EPS).sqrt();
            let zhat: Vec<f64> = pre.iter().map(|z| (z - mean) * inv_std).collect();
            let g = &self.values[gain..gain + s.outputs];
            let bt = &self.values[beta..beta + s.outputs];
            for (((p, zh), g), bt) in pre.iter_mut().zip(&zhat).zip(g).zip(bt) {
                *p = g * zh + bt;
            }
            (zhat, inv_std)
        });
        let act_fn = self.arch.activation;
        let act: Vec<f64> = pre.iter().map(|&z| act_fn.apply(z)).collect();
        let out = if s.residual {
            act.iter().zip(x).map(|(a, x)| a + x).collect()
        } else {
            act.clone()
        };
        LayerRecord {
            pre,
            act,
            out,
            norm,
        }
    }

    fn head_forward(&self, head: usize, trunk: &[f64]) -> LayerRecord {
        let s = &self.layout.heads[head];
        let mut pre = Vec::with_capacity(s.outputs);
        self.dense(s, trunk, &mut pre);
        let f = self.arch.output_activation;
        let act: Vec<f64> = pre.iter().map(|&z| f.apply(z)).collect();
        LayerRecord {
            pre,
            out: act.clone(),
            act,
            norm: None,
        }
    }

    fn trunk_forward(&self, input: &[f64]) -> Vec<LayerRecord> {
        let mut records: Vec<LayerRecord> = Vec::with_capacity(self.layout.hidden.len());
        for s in &self.layout.hidden {
            let x = records.last().map_or(input, |r| r.out.as_slice());
            let rec = self.hidden_forward(s, x);
            records.push(rec);
        }
        records
    }

    /// Evaluates every head. Deterministic: identical inputs give bit-identical outputs.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<Vec<f64>>, Cache)> {
        self.check_input(input)?;
        let hidden = self.trunk_forward(input);
        let trunk = hidden.last().map_or(input, |r| r.out.as_slice());
        let heads: Vec<LayerRecord> = (0..self.heads()).map(|h| self.head_forward(h, trunk)).collect();
        let outputs = heads.iter().map(|r| r.out.clone()).collect();
        Ok((
            outputs,
            Cache {
                fingerprint: self.fingerprint,
                input: input.to_vec(),
                hidden,
                heads: heads.into_iter().map(Some).collect(),
            },
        ))
    }

    /// Evaluates a single head; the cache only supports gradients through that head.
    pub fn forward_head(&self, input: &[f64], head: usize) -> Result<(Vec<f64>, Cache)> {
        self.check_input(input)?;
        if head >= self.heads() {
            return Err(Error::IndexOutOfRange {
                index: head,
                size: self.heads(),
            });
        }
        let hidden = self.trunk_forward(input);
        let trunk = hidden.last().map_or(input, |r| r.out.as_slice());
        let rec = self.head_forward(head, trunk);
        let out = rec.out.clone();
        let mut heads = vec![None; self.heads()];
        heads[head] = Some(rec);
        Ok((
            out,
            Cache {
                fingerprint: self.fingerprint,
                input: input.to_vec(),
                hidden,
                heads,
            },
        ))
    }

    /// Output of head 0 without keeping a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.predict_head(input, 0)
    }

    pub fn predict_head(&self, input: &[f64], head: usize) -> Result<Vec<f64>> {
        self.forward_head(input, head).map(|(out, _)| out)
    }

    /// Gradient of `sum_h outputs_h . output_gradient_h`. An empty vector for a
    /// head stands for a zero gradient on that head.
    pub fn backward(&self, cache: &Cache, output_gradient: &[Vec<f64>]) -> Result<Gradients> {
        let mut params = vec![0.0; self.values.len()];
        let heads: Vec<(usize, &[f64])> = output_gradient
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(h, g)| (h, g.as_slice()))
            .collect();
        if output_gradient.len() != self.heads() {
            return Err(Error::Shape(format!(
                "expected gradients for {} heads, got {}",
                self.heads(),
                output_gradient.len()
            )));
        }
        let input = self.accumulate(cache, &heads, &mut params)?;
        Ok(Gradients { params, input })
    }

    /// Adds the parameter gradient into `acc` and returns the input gradient.
    pub fn accumulate(&self, cache: &Cache, heads: &[(usize, &[f64])], acc: &mut [f64]) -> Result<Vec<f64>> {
        if acc.len() != self.values.len() {
            return Err(Error::Shape("gradient buffer has wrong length".into()));
        }
        self.propagate(cache, heads, Some(acc))
    }

    /// Input gradient only; parameter gradients are not formed.
    pub fn input_gradient(&self, cache: &Cache, heads: &[(usize, &[f64])]) -> Result<Vec<f64>> {
        self.propagate(cache, heads, None)
    }

    fn propagate(&self, cache: &Cache, heads: &[(usize, &[f64])], mut acc: Option<&mut [f64]>) -> Result<Vec<f64>> {
        if cache.fingerprint != self.fingerprint || cache.heads.len() != self.heads() {
            return Err(Error::StaleCache);
        }
        let trunk_in: &[f64] = cache.hidden.last().map_or(&cache.input, |r| &r.out);
        let mut d_trunk = vec![0.0; trunk_in.len()];
        for &(h, grad) in heads {
            let rec = cache
                .heads
                .get(h)
                .and_then(Option::as_ref)
                .ok_or(Error::StaleCache)?;
            let s = &self.layout.heads[h];
            if grad.len() != s.outputs {
                return Err(Error::Shape(format!(
                    "head {h} gradient has length {}, expected {}",
                    grad.len(),
                    s.outputs
                )));
            }
            let f = self.arch.output_activation;
            let dz: Vec<f64> = grad
                .iter()
                .zip(rec.pre.iter().zip(&rec.act))
                .map(|(g, (&z, &y))| g * f.derivative(z, y))
                .collect();
            self.dense_backward(s, trunk_in, &dz, acc.as_deref_mut(), &mut d_trunk);
        }

        let mut d_out = d_trunk;
        for (l, s) in self.layout.hidden.iter().enumerate().rev() {
            let rec = &cache.hidden[l];
            let x: &[f64] = if l == 0 { &cache.input } else { &cache.hidden[l - 1].out };
            let f = self.arch.activation;
            let mut dz: Vec<f64> = d_out
                .iter()
                .zip(rec.pre.iter().zip(&rec.act))
                .map(|(g, (&z, &y))| g * f.derivative(z, y))
                .collect();
            if let (Some((gain, beta)), Some((zhat, inv_std))) = (s.norm, rec.norm.as_ref()) {
                let n = s.outputs as f64;
                let mut sum_d = 0.0;
                let mut sum_dz = 0.0;
                for i in 0..s.outputs {
                    if let Some(acc) = acc.as_deref_mut() {
                        acc[gain + i] += dz[i] * zhat[i];
                        acc[beta + i] += dz[i];
                    }
                    let dzh = dz[i] * self.values[gain + i];
                    dz[i] = dzh;
                    sum_d += dzh;
                    sum_dz += dzh * zhat[i];
                }
                for i in 0..s.outputs {
                    dz[i] = inv_std / n * (n * dz[i] - sum_d - zhat[i] * sum_dz);
                }
            }
            let mut dx = if s.residual { d_out.clone() } else { vec![0.0; x.len()] };
            self.dense_backward(s, x, &dz, acc.as_deref_mut(), &mut dx);
            d_out = dx;
        }
        Ok(d_out)
    }

    fn dense_backward(&self, s: &DenseSlot, x: &[f64], dz: &[f64], mut acc: Option<&mut [f64]>, dx: &mut [f64]) {
        let w = &self.values[s.weights..s.bias];
        for (o, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            if let Some(acc) = acc.as_deref_mut() {
                acc[s.bias + o] += d;
                let row = s.weights + o * s.inputs;
                for (a, &xi) in acc[row..row + s.inputs].iter_mut().zip(x) {
                    *a += d * xi;
                }
            }
            for (dxi, &wi) in dx.iter_mut().zip(&w[o * s.inputs..(o + 1) * s.inputs]) {
                *dxi += d * wi;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n * n + n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    }

    #[test]
    fn identity_linear_layer() {
        let arch = ArchDescriptor::mlp(2, &[], 2, Activation::Linear);
        let p = NetParams::from_values(arch, identity(2)).unwrap();
        assert_eq!(p.predict(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_tanh_layer_outputs_zero() {
        let arch = ArchDescriptor::mlp(3, &[], 4, Activation::Linear).with_output_activation(Activation::Tanh);
        let p = NetParams::zeros(arch).unwrap();
        assert_eq!(p.predict(&[0.3, -7.0, 2.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn residual_with_zero_inner_weights_is_identity() {
        let arch = ArchDescriptor::mlp(2, &[2], 2, Activation::Tanh).with_residual_where_possible();
        let mut p = NetParams::zeros(arch).unwrap();
        // Hidden layer is all zero; head is the identity.
        let head = p.head_range(0);
        p.values_mut()[head].copy_from_slice(&identity(2));
        assert_eq!(p.predict(&[0.25, -1.5]).unwrap(), vec![0.25, -1.5]);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = NetParams::zeros(ArchDescriptor::mlp(3, &[4], 1, Activation::Tanh)).unwrap();
        assert!(matches!(p.predict(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn linear_gradient_row_equals_input() {
        let arch = ArchDescriptor::mlp(3, &[], 2, Activation::Linear);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = NetParams::init(arch, &mut rng).unwrap();
        let x = [0.5, -1.0, 2.0];
        let (_, cache) = p.forward(&x).unwrap();
        let g = p.backward(&cache, &[vec![0.0, 1.0]]).unwrap();
        // Row 1 of W sits at offsets 3..6.
        assert_eq!(&g.params[3..6], &x);
        assert_eq!(&g.params[0..3], &[0.0; 3]);
        assert_eq!(g.params[7], 1.0);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let arch = ArchDescriptor::mlp(4, &[5, 5], 3, Activation::Tanh).with_layer_norm(true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = NetParams::init(arch, &mut rng).unwrap();
        let (_, cache) = p.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = p.backward(&cache, &[vec![0.0; 3]]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = NetParams::init(ArchDescriptor::mlp(2, &[3], 1, Activation::Tanh), &mut rng).unwrap();
        let b = NetParams::init(ArchDescriptor::mlp(2, &[4], 1, Activation::Tanh), &mut rng).unwrap();
        let (_, cache) = a.forward(&[1.0, 2.0]).unwrap();
        assert!(matches!(b.backward(&cache, &[vec![1.0]]), Err(Error::StaleCache)));
    }

    #[test]
    fn layer_norm_standardizes_pre_gain() {
        let arch = ArchDescriptor::mlp(6, &[16, 16], 1, Activation::Tanh).with_layer_norm(true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = NetParams::init(arch, &mut rng).unwrap();
        let (_, cache) = p.forward(&[0.3, -0.2, 1.0, 2.0, -1.5, 0.7]).unwrap();
        for rec in &cache.hidden {
            let (zhat, _) = rec.norm.as_ref().unwrap();
            let n = zhat.len() as f64;
            let mean = zhat.iter().sum::<f64>() / n;
            let var = zhat.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn masked_head_receives_no_gradient() {
        let arch = ArchDescriptor::mlp(3, &[4], 2, Activation::Tanh).with_heads(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NetParams::init(arch, &mut rng).unwrap();
        let (_, cache) = p.forward(&[1.0, -1.0, 0.5]).unwrap();
        let g = p.backward(&cache, &[vec![1.0, 1.0], vec![], vec![0.5, -0.5]]).unwrap();
        assert!(g.params[p.head_range(1)].iter().all(|&v| v == 0.0));
        assert!(g.params[p.head_range(0)].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let arch = ArchDescriptor::mlp(2, &[3], 1, Activation::Tanh);
        let online = NetParams::init(arch.clone(), &mut rng).unwrap();
        let mut target = NetParams::init(arch, &mut rng).unwrap();
        let before = target.clone();
        target.soft_update_from(&online, 0.0).unwrap();
        assert_eq!(target, before);
        target.soft_update_from(&online, 1.0).unwrap();
        assert_eq!(target.values(), online.values());
    }

    #[test]
    fn describe_index_names_layers() {
        let arch = ArchDescriptor::mlp(2, &[3], 1, Activation::Tanh).with_layer_norm(true);
        let p = NetParams::zeros(arch).unwrap();
        assert_eq!(p.describe_index(0), "hidden layer 0 weights");
        assert_eq!(p.describe_index(6), "hidden layer 0 bias");
        assert_eq!(p.describe_index(9), "hidden layer 0 layer-norm gain");
        assert_eq!(p.describe_index(12), "hidden layer 0 layer-norm bias");
        assert_eq!(p.describe_index(15), "output head 0 weights");
    }

    #[test]
    fn input_gradient_matches_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let arch = ArchDescriptor::mlp(3, &[4, 4], 2, Activation::Tanh)
            .with_layer_norm(true)
            .with_residual_where_possible()
            .with_heads(2);
        let p = NetParams::init(arch, &mut rng).unwrap();
        let (_, cache) = p.forward(&[0.3, -0.2, 0.9]).unwrap();
        let g = p.backward(&cache, &[vec![], vec![1.0, -0.5]]).unwrap();
        let only = p.input_gradient(&cache, &[(1, &[1.0, -0.5])]).unwrap();
        assert_eq!(g.input, only);
    }
}
