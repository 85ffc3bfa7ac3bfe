//! Batched forward and reverse-mode passes.
//!
//! Activations are batch-major: `[B, C, H, W]` for feature maps, `[B, N]`
//! after flattening. Convolutions are lowered to one GEMM per batch through
//! an im2col buffer that is kept in the trace for the backward pass.

use super::spec::{Activation, ConvGeometry, LayerSpec, ModelSpec, Parameters, Shape, OUTPUT_CLASSES};
use crate::error::{Error, Result};

/// Probability floor inside the cross-entropy logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
enum Op {
    Conv { geom: ConvGeometry, kernel: usize, gather: Vec<u32> },
    Dense { inputs: usize, outputs: usize, kernel: usize },
    Relu,
    Flatten,
    Softmax,
}

/// A [`ModelSpec`] with resolved geometry, ready to execute.
#[derive(Clone, Debug)]
pub struct Network {
    spec: ModelSpec,
    ops: Vec<Op>,
    sizes: Vec<usize>,
}

/// Activations recorded by a forward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    batch: usize,
    acts: Vec<Vec<f64>>,
    cols: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

/// Reusable buffers for [`Network::backward_with`].
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    delta: Vec<f64>,
    next: Vec<f64>,
    dy: Vec<f64>,
    dcol: Vec<f64>,
}

impl Trace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Class probabilities, `[B, 4]` row-major.
    pub fn probabilities(&self) -> &[f64] {
        self.acts.last().expect("trace holds the output")
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
    csc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert!((m - 1) * rsc + (n - 1) * csc < c.len());
    // SAFETY: the asserts above keep every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

const PAD: u32 = u32::MAX;

/// For every output position and kernel tap `(c, ki, kj)`, the offset of
/// the input value it reads within one sample, or [`PAD`].
fn gather_table(g: &ConvGeometry) -> Vec<u32> {
    let mut table = Vec::with_capacity(g.out_positions() * g.patch_len());
    for oy in 0..g.ho {
        for ox in 0..g.wo {
            for c in 0..g.c_in {
                for ki in 0..g.kh {
                    let iy = (oy * g.stride + ki * g.dilation) as isize - g.pad_top as isize;
                    for kj in 0..g.kw {
                        let ix = (ox * g.stride + kj * g.dilation) as isize - g.pad_left as isize;
                        table.push(if iy < 0 || iy >= g.h as isize || ix < 0 || ix >= g.w as isize {
                            PAD
                        } else {
                            ((c * g.h + iy as usize) * g.w + ix as usize) as u32
                        });
                    }
                }
            }
        }
    }
    table
}

/// Patch matrix `[B * P, K]`: one row per output position, one column per
/// kernel tap.
fn im2col(table: &[u32], sample_len: usize, input: &[f64], batch: usize, cols: &mut [f64]) {
    let block = table.len();
    for b in 0..batch {
        let sample = &input[b * sample_len..][..sample_len];
        for (dst, &i) in cols[b * block..][..block].iter_mut().zip(table) {
            *dst = if i == PAD { 0.0 } else { sample[i as usize] };
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the input.
fn col2im(table: &[u32], sample_len: usize, cols: &[f64], batch: usize, out: &mut [f64]) {
    out.fill(0.0);
    let block = table.len();
    for b in 0..batch {
        let sample = &mut out[b * sample_len..][..sample_len];
        for (&v, &i) in cols[b * block..][..block].iter().zip(table) {
            if i != PAD {
                sample[i as usize] += v;
            }
        }
    }
}

/// `out[b, f, p] = tmp[b * P + p, f] + bias[f]`.
fn positions_to_maps(tmp: &[f64], bias: &[f64], batch: usize, p: usize, out: &mut [f64]) {
    let f_count = bias.len();
    for b in 0..batch {
        for (f, &bf) in bias.iter().enumerate() {
            let dst = &mut out[(b * f_count + f) * p..][..p];
            for (pos, d) in dst.iter_mut().enumerate() {
                *d = tmp[(b * p + pos) * f_count + f] + bf;
            }
        }
    }
}

/// One convolution on a single `[C, H, W]` input.
pub(crate) fn conv_single(g: &ConvGeometry, input: &[f64], kernels: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    let k = g.patch_len();
    let p = g.out_positions();
    if input.len() != g.c_in * g.h * g.w || kernels.len() != g.filters * k || bias.len() != g.filters {
        return Err(Error::shape("conv2d operand sizes do not match the geometry"));
    }
    let mut col = vec![0.0; p * k];
    im2col(&gather_table(g), input.len(), input, 1, &mut col);
    let mut tmp = vec![0.0; p * g.filters];
    gemm(p, k, g.filters, &col, k, 1, kernels, 1, k, 0.0, &mut tmp, g.filters, 1);
    let mut out = vec![0.0; g.filters * p];
    positions_to_maps(&tmp, bias, 1, p, &mut out);
    Ok(out)
}

impl Network {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let shapes = spec.output_shapes()?;
        let [c, h, w] = spec.input;
        let mut prev = Shape::Map { c, h, w };
        let mut ops = Vec::with_capacity(spec.layers.len());
        let mut sizes = vec![prev.size()];
        let mut param = 0;
        for (layer, next) in spec.layers.iter().zip(&shapes) {
            let op = match (*layer, prev) {
                (LayerSpec::Conv2d { filters, kernel_h, kernel_w, stride, dilation, padding }, Shape::Map { c, h, w }) => {
                    let geom = ConvGeometry::resolve(c, h, w, filters, kernel_h, kernel_w, stride, dilation, padding)?;
                    param += 2;
                    Op::Conv { gather: gather_table(&geom), geom, kernel: param - 2 }
                }
                (LayerSpec::Dense { units }, Shape::Flat(n)) => {
                    param += 2;
                    Op::Dense { inputs: n, outputs: units, kernel: param - 2 }
                }
                (LayerSpec::Flatten, _) => Op::Flatten,
                (LayerSpec::Activation { activation: Activation::Relu }, _) => Op::Relu,
                (LayerSpec::Activation { activation: Activation::Softmax }, _) => Op::Softmax,
                _ => unreachable!("validated by output_shapes"),
            };
            ops.push(op);
            sizes.push(next.size());
            prev = *next;
        }
        Ok(Network { spec: spec.clone(), ops, sizes })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    /// Forward pass over `inputs` holding `batch` samples back to back.
    pub fn forward(&self, params: &Parameters, inputs: &[f64], batch: usize) -> Result<Trace> {
        let mut trace = Trace::default();
        self.forward_into(params, inputs, batch, &mut trace)?;
        Ok(trace)
    }

    /// Like [`Network::forward`], reusing the buffers of `trace`.
    pub fn forward_into(&self, params: &Parameters, inputs: &[f64], batch: usize, trace: &mut Trace) -> Result<()> {
        if inputs.len() != batch * self.input_len() {
            return Err(Error::shape(format!(
                "expected {batch} inputs of {} values, got {} values",
                self.input_len(),
                inputs.len()
            )));
        }
        let n = self.ops.len();
        trace.batch = batch;
        trace.acts.resize_with(n + 1, Vec::new);
        trace.cols.resize_with(n, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(inputs);
        for (l, op) in self.ops.iter().enumerate() {
            let (done, rest) = trace.acts.split_at_mut(l + 1);
            let x = &done[l];
            let y = &mut rest[0];
            // Every branch below overwrites all of `y`.
            y.resize(batch * self.sizes[l + 1], 0.0);
            match op {
                Op::Conv { geom, kernel, gather } => {
                    let g = geom;
                    let k = g.patch_len();
                    let p = g.out_positions();
                    let width = batch * p;
                    let col = &mut trace.cols[l];
                    col.resize(width * k, 0.0);
                    im2col(gather, g.c_in * g.h * g.w, x, batch, col);
                    let w = params.tensors[*kernel].data();
                    let bias = params.tensors[kernel + 1].data();
                    let tmp = &mut trace.tmp;
                    tmp.resize(width * g.filters, 0.0);
                    gemm(width, k, g.filters, col, k, 1, w, 1, k, 0.0, tmp, g.filters, 1);
                    positions_to_maps(tmp, bias, batch, p, y);
                }
                Op::Dense { inputs, outputs, kernel } => {
                    let w = params.tensors[*kernel].data();
                    let bias = params.tensors[kernel + 1].data();
                    for row in y.chunks_exact_mut(*outputs) {
                        row.copy_from_slice(bias);
                    }
                    gemm(batch, *inputs, *outputs, x, *inputs, 1, w, 1, *inputs, 1.0, y, *outputs, 1);
                }
                Op::Relu => {
                    for (d, &s) in y.iter_mut().zip(x) {
                        *d = if s > 0.0 { s } else { 0.0 };
                    }
                }
                Op::Flatten => y.copy_from_slice(x),
                Op::Softmax => {
                    let n = self.sizes[l];
                    for (src, dst) in x.chunks_exact(n).zip(y.chunks_exact_mut(n)) {
                        softmax_into(src, dst);
                    }
                }
            }
        }
        Ok(())
    }

    /// Accumulates `scale * d(sum of per-sample cross-entropy)/d(params)`
    /// into `grads` and returns the summed loss.
    pub fn backward(&self, params: &Parameters, trace: &Trace, labels: &[u8], scale: f64, grads: &mut Parameters) -> Result<f64> {
        self.backward_with(params, trace, labels, scale, grads, &mut Scratch::default())
    }

    pub fn backward_with(
        &self,
        params: &Parameters,
        trace: &Trace,
        labels: &[u8],
        scale: f64,
        grads: &mut Parameters,
        scratch: &mut Scratch,
    ) -> Result<f64> {
        let batch = trace.batch;
        if labels.len() != batch {
            return Err(Error::shape(format!("{} labels for a batch of {batch}", labels.len())));
        }
        let probs = trace.probabilities();
        let mut loss = 0.0;
        let Scratch { delta, next, dy, dcol } = scratch;
        delta.clear();
        delta.resize(batch * OUTPUT_CLASSES, 0.0);
        for (b, &label) in labels.iter().enumerate() {
            let label = label as usize;
            if label >= OUTPUT_CLASSES {
                return Err(Error::InvalidLabel(label as u8));
            }
            let row = &probs[b * OUTPUT_CLASSES..][..OUTPUT_CLASSES];
            loss += cross_entropy(row, label);
            if row[label] < LOG_FLOOR {
                continue;
            }
            for (k, d) in delta[b * OUTPUT_CLASSES..][..OUTPUT_CLASSES].iter_mut().enumerate() {
                let target = if k == label { 1.0 } else { 0.0 };
                *d = scale * (row[k] - target);
            }
        }

        // `delta` is the gradient at the softmax input; walk the rest back.
        let last = self.ops.len() - 1;
        debug_assert!(matches!(self.ops[last], Op::Softmax));
        for l in (0..last).rev() {
            let x = &trace.acts[l];
            let need_input_grad = l > 0;
            match &self.ops[l] {
                Op::Conv { geom, kernel, gather } => {
                    let g = geom;
                    let k = g.patch_len();
                    let p = g.out_positions();
                    let width = batch * p;
                    // dy is `[B * P, F]`, matching the patch-matrix rows.
                    let fc = g.filters;
                    dy.resize(width * fc, 0.0);
                    for b in 0..batch {
                        for f in 0..fc {
                            let src = &delta[(b * fc + f) * p..][..p];
                            for (pos, &v) in src.iter().enumerate() {
                                dy[(b * p + pos) * fc + f] = v;
                            }
                        }
                    }
                    let col = &trace.cols[l];
                    {
                        let (gw, gb) = grads.tensors.split_at_mut(kernel + 1);
                        gemm(fc, width, k, dy, 1, fc, col, k, 1, 1.0, gw[*kernel].data_mut(), k, 1);
                        let gb = gb[0].data_mut();
                        for row in dy.chunks_exact(fc) {
                            for (acc, v) in gb.iter_mut().zip(row) {
                                *acc += v;
                            }
                        }
                    }
                    if need_input_grad {
                        let w = params.tensors[*kernel].data();
                        dcol.resize(width * k, 0.0);
                        gemm(width, fc, k, dy, fc, 1, w, k, 1, 0.0, dcol, k, 1);
                        next.resize(x.len(), 0.0);
                        col2im(gather, g.c_in * g.h * g.w, dcol, batch, next);
                        std::mem::swap(delta, next);
                    }
                }
                Op::Dense { inputs, outputs, kernel } => {
                    let (n_in, n_out) = (*inputs, *outputs);
                    {
                        let (gw, gb) = grads.tensors.split_at_mut(kernel + 1);
                        gemm(n_out, batch, n_in, delta, 1, n_out, x, n_in, 1, 1.0, gw[*kernel].data_mut(), n_in, 1);
                        let gb = gb[0].data_mut();
                        for row in delta.chunks_exact(n_out) {
                            for (acc, d) in gb.iter_mut().zip(row) {
                                *acc += d;
                            }
                        }
                    }
                    if need_input_grad {
                        let w = params.tensors[*kernel].data();
                        next.resize(batch * n_in, 0.0);
                        gemm(batch, n_out, n_in, delta, n_out, 1, w, n_in, 1, 0.0, next, n_in, 1);
                        std::mem::swap(delta, next);
                    }
                }
                Op::Relu => {
                    // Subgradient 0 at exactly 0.
                    for (d, &y) in delta.iter_mut().zip(&trace.acts[l + 1]) {
                        if y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Op::Flatten => {}
                Op::Softmax => unreachable!("softmax is final"),
            }
        }
        Ok(loss)
    }
}

pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// `-ln(max(prob[label], 1e-12))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(LOG_FLOOR).ln()
}

/// Class probabilities for a single input.
pub fn forward(spec: &ModelSpec, params: &Parameters, input: &[f64]) -> Result<Vec<f64>> {
    let net = Network::new(spec)?;
    params.check_against(spec)?;
    Ok(net.forward(params, input, 1)?.probabilities().to_vec())
}

/// Gradient of the single-sample cross-entropy.
pub fn backward(spec: &ModelSpec, params: &Parameters, input: &[f64], label: u8) -> Result<Parameters> {
    let net = Network::new(spec)?;
    params.check_against(spec)?;
    let trace = net.forward(params, input, 1)?;
    let mut grads = params.zeros_like();
    net.backward(params, &trace, &[label], 1.0, &mut grads)?;
    Ok(grads)
}

/// Single-sample loss, used by finite-difference checks and saliency.
pub fn loss(spec: &ModelSpec, params: &Parameters, input: &[f64], label: u8) -> Result<f64> {
    let probs = forward(spec, params, input)?;
    Ok(cross_entropy(&probs, label as usize))
}
