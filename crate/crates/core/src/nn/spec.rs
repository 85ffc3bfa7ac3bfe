//! Layer and model descriptions, shape inference and parameter layout.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

pub const OUTPUT_CLASSES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        dilation: usize,
        padding: Padding,
    },
    Dense {
        units: usize,
    },
    Flatten,
    Activation {
        activation: Activation,
    },
}

impl LayerSpec {
    /// 3x3 convolution with stride 1.
    pub fn conv3x3(filters: usize, dilation: usize, padding: Padding) -> Self {
        LayerSpec::Conv2d { filters, kernel_h: 3, kernel_w: 3, stride: 1, dilation, padding }
    }

    pub fn relu() -> Self {
        LayerSpec::Activation { activation: Activation::Relu }
    }

    pub fn softmax() -> Self {
        LayerSpec::Activation { activation: Activation::Softmax }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv2d { filters, kernel_h, kernel_w, stride, dilation, padding } => write!(
                f,
                "conv2d filters={filters} kernel={kernel_h}x{kernel_w} stride={stride} dilation={dilation} padding={}",
                match padding {
                    Padding::Same => "same",
                    Padding::Valid => "valid",
                }
            ),
            LayerSpec::Dense { units } => write!(f, "dense units={units}"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Activation { activation: Activation::Relu } => f.write_str("relu"),
            LayerSpec::Activation { activation: Activation::Softmax } => f.write_str("softmax"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or_else(|| Error::Parse("empty layer description".into()))?;
        let mut kv = std::collections::HashMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("bad layer field {p:?}")))?;
            kv.insert(k, v);
        }
        let num = |key: &str| -> Result<usize> {
            kv.get(key)
                .ok_or_else(|| Error::Parse(format!("layer {kind} missing {key}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("layer {kind}: bad {key}")))
        };
        match kind {
            "conv2d" => {
                let kernel = kv.get("kernel").ok_or_else(|| Error::Parse("conv2d missing kernel".into()))?;
                let (kh, kw) = kernel.split_once('x').ok_or_else(|| Error::Parse(format!("bad kernel {kernel:?}")))?;
                let padding = match kv.get("padding").copied() {
                    Some("same") => Padding::Same,
                    Some("valid") => Padding::Valid,
                    other => return Err(Error::Parse(format!("bad padding {other:?}"))),
                };
                Ok(LayerSpec::Conv2d {
                    filters: num("filters")?,
                    kernel_h: kh.parse().map_err(|_| Error::Parse("bad kernel height".into()))?,
                    kernel_w: kw.parse().map_err(|_| Error::Parse("bad kernel width".into()))?,
                    stride: num("stride")?,
                    dilation: num("dilation")?,
                    padding,
                })
            }
            "dense" => Ok(LayerSpec::Dense { units: num("units")? }),
            "flatten" => Ok(LayerSpec::Flatten),
            "relu" => Ok(LayerSpec::relu()),
            "softmax" => Ok(LayerSpec::softmax()),
            other => Err(Error::Parse(format!("unknown layer kind {other:?}"))),
        }
    }
}

/// Activation shape between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Map { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn size(&self) -> usize {
        match *self {
            Shape::Map { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }
}

/// Resolved convolution geometry for a given input shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub filters: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub dilation: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub ho: usize,
    pub wo: usize,
}

impl ConvGeometry {
    #[allow(clippy::too_many_arguments)]
    pub fn resolve(
        c_in: usize,
        h: usize,
        w: usize,
        filters: usize,
        kh: usize,
        kw: usize,
        stride: usize,
        dilation: usize,
        padding: Padding,
    ) -> Result<Self> {
        if stride == 0 || dilation == 0 || kh == 0 || kw == 0 || filters == 0 {
            return Err(Error::shape("conv2d needs positive filters, kernel, stride and dilation"));
        }
        let kh_eff = (kh - 1) * dilation + 1;
        let kw_eff = (kw - 1) * dilation + 1;
        let (pad_h, pad_w) = match padding {
            Padding::Same => (kh_eff - 1, kw_eff - 1),
            Padding::Valid => (0, 0),
        };
        let hp = h + pad_h;
        let wp = w + pad_w;
        if hp < kh_eff || wp < kw_eff {
            return Err(Error::shape(format!(
                "conv2d output extent is not positive: input {h}x{w}, effective kernel {kh_eff}x{kw_eff}"
            )));
        }
        Ok(ConvGeometry {
            c_in,
            h,
            w,
            filters,
            kh,
            kw,
            stride,
            dilation,
            pad_top: pad_h / 2,
            pad_left: pad_w / 2,
            ho: (hp - kh_eff) / stride + 1,
            wo: (wp - kw_eff) / stride + 1,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.c_in * self.kh * self.kw
    }

    pub fn out_positions(&self) -> usize {
        self.ho * self.wo
    }
}

/// Layered network with input `C x H x W` and 4 output classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(input: [usize; 3], layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = ModelSpec { input, layers };
        spec.output_shapes()?;
        Ok(spec)
    }

    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }

    /// Shape after each layer; validates the whole stack.
    pub fn output_shapes(&self) -> Result<Vec<Shape>> {
        let [c, h, w] = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::shape("input extents must be positive"));
        }
        let mut shape = Shape::Map { c, h, w };
        let mut out = Vec::with_capacity(self.layers.len());
        let last = self.layers.len().checked_sub(1).ok_or_else(|| Error::shape("model has no layers"))?;
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (*layer, shape) {
                (LayerSpec::Conv2d { filters, kernel_h, kernel_w, stride, dilation, padding }, Shape::Map { c, h, w }) => {
                    let g = ConvGeometry::resolve(c, h, w, filters, kernel_h, kernel_w, stride, dilation, padding)?;
                    Shape::Map { c: filters, h: g.ho, w: g.wo }
                }
                (LayerSpec::Conv2d { .. }, Shape::Flat(_)) => {
                    return Err(Error::shape(format!("layer {i}: conv2d after flatten")));
                }
                (LayerSpec::Dense { units }, Shape::Flat(_)) => {
                    if units == 0 {
                        return Err(Error::shape(format!("layer {i}: dense needs units > 0")));
                    }
                    Shape::Flat(units)
                }
                (LayerSpec::Dense { .. }, Shape::Map { .. }) => {
                    return Err(Error::shape(format!("layer {i}: dense needs a flatten first")));
                }
                (LayerSpec::Flatten, s) => Shape::Flat(s.size()),
                (LayerSpec::Activation { activation: Activation::Relu }, s) => s,
                (LayerSpec::Activation { activation: Activation::Softmax }, s) => {
                    if i != last {
                        return Err(Error::shape("softmax is only allowed as the final layer"));
                    }
                    s
                }
            };
            out.push(shape);
        }
        if self.layers[last] != LayerSpec::softmax() || shape != Shape::Flat(OUTPUT_CLASSES) {
            return Err(Error::shape("model must end with dense(4) + softmax"));
        }
        Ok(out)
    }

    /// Shapes of the trainable tensors in storage order: for each conv or
    /// dense layer, the kernel (`[out, in, kh, kw]` or `[out, in]`) then
    /// the bias.
    pub fn param_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let shapes = self.output_shapes()?;
        let [c, h, w] = self.input;
        let mut prev = Shape::Map { c, h, w };
        let mut out = Vec::new();
        for (layer, next) in self.layers.iter().zip(shapes) {
            match (*layer, prev) {
                (LayerSpec::Conv2d { filters, kernel_h, kernel_w, .. }, Shape::Map { c, .. }) => {
                    out.push(vec![filters, c, kernel_h, kernel_w]);
                    out.push(vec![filters]);
                }
                (LayerSpec::Dense { units }, Shape::Flat(n)) => {
                    out.push(vec![units, n]);
                    out.push(vec![units]);
                }
                _ => {}
            }
            prev = next;
        }
        Ok(out)
    }

    /// Total trainable weights.
    pub fn param_count(&self) -> Result<usize> {
        Ok(self.param_shapes()?.iter().map(|s| s.iter().product::<usize>()).sum())
    }
}

/// Trainable tensors in [`ModelSpec::param_shapes`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub tensors: Vec<Tensor>,
}

impl Parameters {
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        Ok(Parameters { tensors: spec.param_shapes()?.into_iter().map(Tensor::zeros).collect() })
    }

    /// He-style uniform initialisation: kernels drawn from
    /// `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, biases zero.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(spec)?;
        for t in params.tensors.iter_mut() {
            if t.shape().len() < 2 {
                continue;
            }
            let fan_in: usize = t.shape()[1..].iter().product();
            let limit = (6.0 / fan_in as f64).sqrt();
            for v in t.data_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Parameters { tensors: self.tensors.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect() }
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        let want = spec.param_shapes()?;
        let have: Vec<Vec<usize>> = self.tensors.iter().map(|t| t.shape().to_vec()).collect();
        if want != have {
            return Err(Error::shape(format!("parameter shapes {have:?} do not fit the model ({want:?})")));
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        for t in &mut self.tensors {
            t.fill(value);
        }
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &Parameters) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }
}
