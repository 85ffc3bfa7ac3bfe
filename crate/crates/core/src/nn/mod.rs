//! A small f64 network engine: 2-D convolutions, dense layers, ReLU and a
//! softmax head, with reverse-mode gradients and Adam.

pub mod check;
pub mod engine;
pub mod io;
pub mod optim;
pub mod spec;
pub mod tensor;
pub mod train;

pub use check::{gradient_check, inflate_kernel, pick_parameters, relative_error, GradientProbe};
pub use engine::{backward, cross_entropy, forward, loss, Network, Scratch, Trace, LOG_FLOOR};
pub use io::{read_manifest_file, ModelFile, ModelManifest};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use spec::{Activation, ConvGeometry, LayerSpec, ModelSpec, Padding, Parameters, Shape, OUTPUT_CLASSES};
pub use tensor::Tensor;
pub use train::{
    evaluate, history_csv, predict_all, train, train_with_progress, EpochStats, Evaluation, MemorySource, SampleSource,
    Subset, TrainConfig, TrainOutcome,
};

use crate::error::{Error, Result};

/// Standalone cross-correlation of a `[C, H, W]` input with `[F, C, kh, kw]`
/// kernels and `F` biases.
pub fn conv2d(
    input: &Tensor,
    kernels: &Tensor,
    bias: &[f64],
    stride: usize,
    dilation: usize,
    padding: Padding,
) -> Result<Tensor> {
    let (&[c, h, w], &[f, kc, kh, kw]) = (input.shape(), kernels.shape()) else {
        return Err(Error::shape("conv2d takes a [C,H,W] input and [F,C,kh,kw] kernels"));
    };
    if kc != c || bias.len() != f {
        return Err(Error::shape(format!("kernels {:?} and {} biases do not fit input {:?}", kernels.shape(), bias.len(), input.shape())));
    }
    let g = ConvGeometry::resolve(c, h, w, f, kh, kw, stride, dilation, padding)?;
    engine::conv_single(&g, input.data(), kernels.data(), bias).map(|data| Tensor::from_vec(vec![f, g.ho, g.wo], data))?
}
