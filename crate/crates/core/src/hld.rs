//! High-level decoding: the nearest-border decoder followed by a classifier
//! that predicts which logical operator the correction left behind.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decode::simple_decode;
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, Correction, LogicalClass, Syndrome};
use crate::nn::{
    train, LayerSpec, ModelFile, ModelSpec, Network, Padding, Parameters, SampleSource, TrainConfig, TrainOutcome,
    EpochStats, OUTPUT_CLASSES,
};
use crate::noise::NoiseModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Depolarizing,
    Phenomenological,
}

impl NoiseKind {
    pub fn of(noise: &NoiseModel) -> Self {
        match noise {
            NoiseModel::Depolarizing(_) => NoiseKind::Depolarizing,
            NoiseModel::Phenomenological(_) => NoiseKind::Phenomenological,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(NoiseKind::Depolarizing),
            1 => Ok(NoiseKind::Phenomenological),
            _ => Err(Error::param(format!("unknown noise kind {code}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Depolarizing => "depolarizing",
            NoiseKind::Phenomenological => "phenomenological",
        }
    }

    /// Input channels of the reference architectures: one for the single
    /// perfect round, four for three noisy rounds plus the perfect one.
    pub fn default_channels(self) -> usize {
        match self {
            NoiseKind::Depolarizing => 1,
            NoiseKind::Phenomenological => 4,
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depolarizing" | "depolarising" => Ok(NoiseKind::Depolarizing),
            "phenomenological" | "noisy" => Ok(NoiseKind::Phenomenological),
            _ => Err(Error::Parse(format!("unknown noise kind {s:?}"))),
        }
    }
}

/// Conv/dense layout of one reference CNN. Every conv layer has 64 3x3
/// filters; the first is 'same'-padded, the rest 'valid'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub distance: usize,
    pub noise: NoiseKind,
    pub conv_layers: usize,
    pub dense_layers: usize,
    pub dense_width: usize,
    /// False for the small-distance entries used for desk-scale runs.
    pub published: bool,
}

const fn arch(distance: usize, noise: NoiseKind, conv_layers: usize, dense_layers: usize, dense_width: usize, published: bool) -> Architecture {
    Architecture { distance, noise, conv_layers, dense_layers, dense_width, published }
}

pub const CONV_FILTERS: usize = 64;

pub const ARCHITECTURES: [Architecture; 10] = [
    arch(3, NoiseKind::Depolarizing, 2, 1, 128, false),
    arch(5, NoiseKind::Depolarizing, 2, 1, 256, false),
    arch(7, NoiseKind::Depolarizing, 3, 1, 512, true),
    arch(9, NoiseKind::Depolarizing, 4, 1, 1024, true),
    arch(11, NoiseKind::Depolarizing, 6, 2, 1024, true),
    arch(3, NoiseKind::Phenomenological, 2, 1, 128, false),
    arch(5, NoiseKind::Phenomenological, 2, 1, 256, false),
    arch(7, NoiseKind::Phenomenological, 3, 2, 1024, true),
    arch(9, NoiseKind::Phenomenological, 3, 2, 1024, true),
    arch(11, NoiseKind::Phenomenological, 4, 2, 512, true),
];

pub fn architecture(distance: usize, noise: NoiseKind) -> Result<Architecture> {
    ARCHITECTURES
        .iter()
        .find(|a| a.distance == distance && a.noise == noise)
        .copied()
        .ok_or_else(|| Error::param(format!("no reference architecture for d={distance}, {} noise", noise.name())))
}

pub fn build_cnn(distance: usize, noise: NoiseKind, dilated: bool) -> Result<ModelSpec> {
    build_cnn_with_channels(distance, noise, dilated, noise.default_channels())
}

/// Reference CNN for `(distance, noise)` with an explicit input channel
/// count. `dilated` sets dilation 2 on every conv layer but the first.
pub fn build_cnn_with_channels(distance: usize, noise: NoiseKind, dilated: bool, channels: usize) -> Result<ModelSpec> {
    let a = architecture(distance, noise)?;
    let g = 2 * distance - 1;
    let mut layers = Vec::new();
    for i in 0..a.conv_layers {
        let (dilation, padding) = match i {
            0 => (1, Padding::Same),
            _ => (if dilated { 2 } else { 1 }, Padding::Valid),
        };
        layers.push(LayerSpec::conv3x3(CONV_FILTERS, dilation, padding));
        layers.push(LayerSpec::relu());
    }
    layers.push(LayerSpec::Flatten);
    for _ in 0..a.dense_layers {
        layers.push(LayerSpec::Dense { units: a.dense_width });
        layers.push(LayerSpec::relu());
    }
    layers.push(LayerSpec::Dense { units: OUTPUT_CLASSES });
    layers.push(LayerSpec::softmax());
    ModelSpec::new([channels, g, g], layers)
}

/// Fully connected network with three hidden ReLU layers.
pub fn build_ffnn(distance: usize, widths: [usize; 3], channels: usize) -> Result<ModelSpec> {
    if widths.contains(&0) || channels == 0 {
        return Err(Error::param("hidden widths and channel count must be positive"));
    }
    let g = 2 * distance - 1;
    let mut layers = vec![LayerSpec::Flatten];
    for w in widths {
        layers.push(LayerSpec::Dense { units: w });
        layers.push(LayerSpec::relu());
    }
    layers.push(LayerSpec::Dense { units: OUTPUT_CLASSES });
    layers.push(LayerSpec::softmax());
    ModelSpec::new([channels, g, g], layers)
}

/// Every reference architecture with its trainable weight count, one per
/// line: `d=7 noise=depolarizing conv=3 dense=1 width=512 params=... published=true`.
pub fn architecture_manifest() -> String {
    let mut out = String::new();
    for a in &ARCHITECTURES {
        let params = build_cnn(a.distance, a.noise, false).and_then(|s| s.param_count()).unwrap_or(0);
        let dilated = build_cnn(a.distance, a.noise, true).and_then(|s| s.param_count()).ok();
        let _ = write!(
            out,
            "d={} noise={} conv={} dense={} width={} params={}",
            a.distance,
            a.noise.name(),
            a.conv_layers,
            a.dense_layers,
            a.dense_width,
            params
        );
        if let Some(n) = dilated {
            let _ = write!(out, " dilated_params={n}");
        }
        let _ = writeln!(out, " published={}", a.published);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: [f64; 4],
    pub class: LogicalClass,
}

impl Prediction {
    pub fn from_probabilities(probs: &[f64]) -> Self {
        let probabilities: [f64; 4] = probs.try_into().expect("four class probabilities");
        let class = LogicalClass::from_code(crate::nn::train::argmax(&probabilities) as u8).expect("argmax below 4");
        Prediction { probabilities, class }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HldOutcome {
    pub correction: Correction,
    pub prediction: Prediction,
}

/// A trained classifier bound to a layout.
#[derive(Clone, Debug)]
pub struct HighLevelDecoder {
    layout: CodeLayout,
    spec: ModelSpec,
    params: Parameters,
    net: Network,
}

impl HighLevelDecoder {
    pub fn new(layout: CodeLayout, spec: ModelSpec, params: Parameters) -> Result<Self> {
        params.check_against(&spec)?;
        let g = layout.grid_size();
        if spec.input[1] != g || spec.input[2] != g {
            return Err(Error::shape(format!("model input {:?} does not fit a {g}x{g} grid", spec.input)));
        }
        let net = Network::new(&spec)?;
        Ok(HighLevelDecoder { layout, spec, params, net })
    }

    pub fn from_model(model: &ModelFile) -> Result<Self> {
        let g = model.spec.input[1];
        if g % 2 == 0 {
            return Err(Error::shape("model input extent is not a code grid"));
        }
        Self::new(CodeLayout::new(g.div_ceil(2))?, model.spec.clone(), model.params.clone())
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn channels(&self) -> usize {
        self.spec.input[0]
    }

    pub fn predict_input(&self, input: &[f64]) -> Result<Prediction> {
        let trace = self.net.forward(&self.params, input, 1)?;
        Ok(Prediction::from_probabilities(trace.probabilities()))
    }

    pub fn predict(&self, stack: &[Syndrome]) -> Result<Prediction> {
        if stack.len() != self.channels() {
            return Err(Error::shape(format!("model expects {} syndromes, got {}", self.channels(), stack.len())));
        }
        let input = self.layout.encode_input(stack)?;
        self.predict_input(input.data())
    }

    /// Nearest-border correction of the final syndrome, composed with the
    /// representative of the predicted logical class.
    pub fn decode_full(&self, stack: &[Syndrome]) -> Result<HldOutcome> {
        let prediction = self.predict(stack)?;
        let last = stack.last().ok_or(Error::EmptyStack)?;
        let correction = fix_up(&self.layout, last, prediction.class)?;
        Ok(HldOutcome { correction, prediction })
    }
}

/// `simple_decode(syndrome)` composed with the logical operator of `class`.
pub fn fix_up(layout: &CodeLayout, syndrome: &Syndrome, class: LogicalClass) -> Result<Correction> {
    simple_decode(layout, syndrome).compose(&layout.logical_operator(class))
}

#[derive(Clone, Debug)]
pub struct ProtocolOutcome {
    pub params: Parameters,
    pub histories: Vec<Vec<EpochStats>>,
}

/// Trains stage after stage; every stage after the first starts from the
/// weights the previous one produced.
pub fn train_protocol(spec: &ModelSpec, stages: &[(&dyn SampleSource, TrainConfig)]) -> Result<ProtocolOutcome> {
    if stages.is_empty() {
        return Err(Error::param("training protocol has no stages"));
    }
    let mut params: Option<Parameters> = None;
    let mut histories = Vec::with_capacity(stages.len());
    for (data, config) in stages {
        let mut config = config.clone();
        if let Some(p) = params.take() {
            config.init_parameters = Some(p);
        }
        let TrainOutcome { params: p, history } = train(spec, *data, None, &config)?;
        params = Some(p);
        histories.push(history);
    }
    Ok(ProtocolOutcome { params: params.expect("at least one stage"), histories })
}
