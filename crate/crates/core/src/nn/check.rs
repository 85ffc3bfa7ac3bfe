//! Central finite-difference gradient checks and kernel zero-inflation.

use rand::Rng;

use super::engine::Network;
use super::spec::{ModelSpec, Parameters};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::noise::SeedSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientProbe {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

const REL_FLOOR: f64 = 1e-8;

fn mean_loss(net: &Network, params: &Parameters, inputs: &[f64], labels: &[u8]) -> Result<f64> {
    let trace = net.forward(params, inputs, labels.len())?;
    let mut sink = params.zeros_like();
    Ok(net.backward(params, &trace, labels, 1.0, &mut sink)? / labels.len() as f64)
}

/// Compares backprop gradients of the batch-mean cross-entropy against
/// `(L(w + h) - L(w - h)) / 2h` at each `(tensor, index)` in `picks`.
pub fn gradient_check(
    spec: &ModelSpec,
    params: &Parameters,
    inputs: &[f64],
    labels: &[u8],
    picks: &[(usize, usize)],
    h: f64,
) -> Result<Vec<GradientProbe>> {
    let net = Network::new(spec)?;
    params.check_against(spec)?;
    let trace = net.forward(params, inputs, labels.len())?;
    let mut grads = params.zeros_like();
    net.backward(params, &trace, labels, 1.0 / labels.len() as f64, &mut grads)?;
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(picks.len());
    for &(tensor, index) in picks {
        if tensor >= params.tensors.len() || index >= params.tensors[tensor].len() {
            return Err(Error::param(format!("no parameter {index} in tensor {tensor}")));
        }
        let w = params.tensors[tensor].data()[index];
        probe.tensors[tensor].data_mut()[index] = w + h;
        let up = mean_loss(&net, &probe, inputs, labels)?;
        probe.tensors[tensor].data_mut()[index] = w - h;
        let down = mean_loss(&net, &probe, inputs, labels)?;
        probe.tensors[tensor].data_mut()[index] = w;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads.tensors[tensor].data()[index];
        out.push(GradientProbe { tensor, index, analytic, numeric, rel_error: relative_error(analytic, numeric, REL_FLOOR) });
    }
    Ok(out)
}

/// `count` random positions in each listed tensor.
pub fn pick_parameters(params: &Parameters, tensors: &[usize], count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = SeedSpec::new(seed).rng(0);
    let mut out = Vec::with_capacity(tensors.len() * count);
    for &t in tensors {
        let n = params.tensors[t].len();
        for _ in 0..count {
            out.push((t, rng.gen_range(0..n)));
        }
    }
    out
}

/// Spreads `[F, C, kh, kw]` kernel taps `dilation` apart with zeros in
/// between, so an undilated convolution with the result equals a dilated
/// one with the original.
pub fn inflate_kernel(kernels: &Tensor, dilation: usize) -> Result<Tensor> {
    let &[f, c, kh, kw] = kernels.shape() else {
        return Err(Error::shape("kernels must be [F,C,kh,kw]"));
    };
    if dilation == 0 {
        return Err(Error::param("dilation must be at least 1"));
    }
    let (eh, ew) = ((kh - 1) * dilation + 1, (kw - 1) * dilation + 1);
    let mut out = vec![0.0; f * c * eh * ew];
    for fc in 0..f * c {
        for i in 0..kh {
            for j in 0..kw {
                out[fc * eh * ew + i * dilation * ew + j * dilation] = kernels.data()[fc * kh * kw + i * kw + j];
            }
        }
    }
    Tensor::from_vec(vec![f, c, eh, ew], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;

    #[test]
    fn inflation_places_taps() {
        let k = Tensor::from_vec(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = inflate_kernel(&k, 2).unwrap();
        assert_eq!(e.shape(), &[1, 1, 3, 3]);
        assert_eq!(e.data(), &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 4.0]);
    }

    #[test]
    fn dense_gradients_agree() {
        let spec = ModelSpec::new([1, 2, 2], vec![LayerSpec::Flatten, LayerSpec::Dense { units: 4 }, LayerSpec::softmax()]).unwrap();
        let params = Parameters::init(&spec, 3).unwrap();
        let input = [0.5, -1.0, 0.25, 2.0];
        let picks = pick_parameters(&params, &[0, 1], 4, 1);
        for pr in gradient_check(&spec, &params, &input, &[2], &picks, 1e-5).unwrap() {
            assert!(pr.rel_error < 1e-6, "{pr:?}");
        }
    }
}
