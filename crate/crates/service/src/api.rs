//! Request and response bodies, and the handlers behind them as plain
//! functions.

use qeclab::dataset::label_record;
use qeclab::decode::{mwpm_decode, simple_decode};
use qeclab::explain::{occlusion_saliency, OcclusionConfig};
use qeclab::hld::HighLevelDecoder;
use qeclab::noise::{sample as draw, NoiseModel, SeedSpec};
use qeclab::{Cell, CellRole, CodeLayout, LogicalClass, Pauli, PauliError, Syndrome};
use serde::{Deserialize, Serialize};

use crate::models::ModelStore;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError { status: 400, code: code.to_string(), message: message.into() }
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        ApiError { status: 404, code: code.to_string(), message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError { status: 500, code: "internal".to_string(), message: message.into() }
    }
}

impl From<qeclab::Error> for ApiError {
    fn from(e: qeclab::Error) -> Self {
        match e {
            qeclab::Error::Io(_) | qeclab::Error::Format(_) => ApiError::internal(e.to_string()),
            _ => ApiError::bad_request("invalid-request", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// `[row, col]`.
pub type Coord = [usize; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedError {
    pub row: usize,
    pub col: usize,
    pub pauli: Pauli,
}

fn code_layout(d: usize) -> ApiResult<CodeLayout> {
    CodeLayout::new(d).map_err(|e| ApiError::bad_request("invalid-distance", e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub row: usize,
    pub col: usize,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutResponse {
    pub d: usize,
    pub grid: usize,
    pub cells: Vec<CellInfo>,
    pub logical_x: Vec<Coord>,
    pub logical_z: Vec<Coord>,
}

fn role_name(role: CellRole) -> &'static str {
    match role {
        CellRole::Data => "data",
        CellRole::StabX => "stab-x",
        CellRole::StabZ => "stab-z",
    }
}

fn coords(cells: &[Cell]) -> Vec<Coord> {
    cells.iter().map(|c| [c.row, c.col]).collect()
}

pub fn layout(d: usize) -> ApiResult<LayoutResponse> {
    let l = code_layout(d)?;
    let cells = (0..l.cell_count())
        .map(|i| {
            let c = l.cell(i);
            CellInfo { row: c.row, col: c.col, role: role_name(l.role(c)).to_string() }
        })
        .collect();
    Ok(LayoutResponse {
        d,
        grid: l.grid_size(),
        cells,
        logical_x: coords(l.logical_x_support()),
        logical_z: coords(l.logical_z_support()),
    })
}

fn build_error(l: &CodeLayout, placed: &[PlacedError]) -> ApiResult<PauliError> {
    let mut e = PauliError::identity(l);
    for p in placed {
        let cell = Cell::new(p.row, p.col);
        e.apply(l, cell, p.pauli).map_err(|err| ApiError::bad_request("invalid-cell", err.to_string()))?;
    }
    Ok(e)
}

fn build_syndrome(l: &CodeLayout, flipped: &[Coord]) -> ApiResult<Syndrome> {
    let cells: Vec<Cell> = flipped.iter().map(|&[r, c]| Cell::new(r, c)).collect();
    Syndrome::from_flipped(l, &cells).map_err(|err| ApiError::bad_request("invalid-cell", err.to_string()))
}

fn placed(e: &PauliError) -> Vec<PlacedError> {
    e.support().into_iter().map(|(c, pauli)| PlacedError { row: c.row, col: c.col, pauli }).collect()
}

/// Either explicit errors or explicit syndrome rounds, never both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeInput {
    #[serde(default)]
    pub placed_errors: Option<Vec<PlacedError>>,
    #[serde(default)]
    pub syndromes: Option<Vec<Vec<Coord>>>,
}

pub struct Resolved {
    pub error: Option<PauliError>,
    pub stack: Vec<Syndrome>,
}

/// Placed errors yield their perfect syndrome, repeated `channels` times.
pub fn resolve(l: &CodeLayout, input: &ProbeInput, channels: usize) -> ApiResult<Resolved> {
    match (&input.placed_errors, &input.syndromes) {
        (Some(p), None) => {
            let error = build_error(l, p)?;
            let s = l.syndrome_of(&error);
            Ok(Resolved { error: Some(error), stack: vec![s; channels] })
        }
        (None, Some(rounds)) => {
            if rounds.is_empty() {
                return Err(ApiError::bad_request("invalid-request", "syndromes must hold at least one round"));
            }
            let stack = rounds.iter().map(|r| build_syndrome(l, r)).collect::<ApiResult<Vec<_>>>()?;
            Ok(Resolved { error: None, stack })
        }
        _ => Err(ApiError::bad_request("invalid-request", "give exactly one of placed_errors and syndromes")),
    }
}

fn model_for(store: &ModelStore, id: Option<&str>, d: usize) -> ApiResult<std::sync::Arc<HighLevelDecoder>> {
    let id = id.ok_or_else(|| ApiError::bad_request("missing-model", "model_id is required"))?;
    let model = store.get(id)?;
    if model.layout().distance() != d {
        return Err(ApiError::bad_request(
            "model-mismatch",
            format!("model {id:?} decodes d={}, not d={d}", model.layout().distance()),
        ));
    }
    Ok(model)
}

fn check_channels(model: &HighLevelDecoder, stack: &[Syndrome]) -> ApiResult<()> {
    if stack.len() != model.channels() {
        return Err(ApiError::bad_request(
            "invalid-request",
            format!("model expects {} syndrome rounds, got {}", model.channels(), stack.len()),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderName {
    Simple,
    Mwpm,
    Hld,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeRequest {
    pub d: usize,
    #[serde(flatten)]
    pub input: ProbeInput,
    pub decoder: DecoderName,
    #[serde(default)]
    pub model_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResponse {
    pub d: usize,
    pub decoder: DecoderName,
    pub syndromes: Vec<Vec<Coord>>,
    pub correction: Vec<PlacedError>,
    /// Present when the true error is known, i.e. for placed errors.
    pub residual_class: Option<LogicalClass>,
    pub predicted_class: Option<LogicalClass>,
    pub probabilities: Option<[f64; 4]>,
}

pub fn decode(store: &ModelStore, req: &DecodeRequest) -> ApiResult<DecodeResponse> {
    let l = code_layout(req.d)?;
    let model = match req.decoder {
        DecoderName::Hld => Some(model_for(store, req.model_id.as_deref(), req.d)?),
        _ => None,
    };
    let resolved = resolve(&l, &req.input, model.as_ref().map_or(1, |m| m.channels()))?;
    let last = resolved.stack.last().expect("non-empty stack");
    let (correction, prediction) = match &model {
        None if req.decoder == DecoderName::Simple => (simple_decode(&l, last), None),
        None => (mwpm_decode(&l, last), None),
        Some(m) => {
            check_channels(m, &resolved.stack)?;
            let out = m.decode_full(&resolved.stack)?;
            (out.correction, Some(out.prediction))
        }
    };
    let residual_class = match &resolved.error {
        Some(e) => Some(l.logical_class(&e.compose(&correction)?)?),
        None => None,
    };
    Ok(DecodeResponse {
        d: req.d,
        decoder: req.decoder,
        syndromes: resolved.stack.iter().map(|s| coords(&s.flipped())).collect(),
        correction: placed(&correction),
        residual_class,
        predicted_class: prediction.map(|p| p.class),
        probabilities: prediction.map(|p| p.probabilities),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyRequest {
    pub d: usize,
    pub model_id: String,
    #[serde(flatten)]
    pub input: ProbeInput,
    #[serde(default)]
    pub patch: Option<usize>,
    #[serde(default)]
    pub stride: Option<usize>,
    /// Class the loss is measured against; the model's own prediction
    /// when absent.
    #[serde(default)]
    pub reference: Option<LogicalClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyResponse {
    pub coarse: Vec<Vec<f64>>,
    pub upsampled: Vec<Vec<f64>>,
    pub predicted_class: LogicalClass,
    pub probabilities: [f64; 4],
    pub reference_class: LogicalClass,
    pub patch: usize,
    pub stride: usize,
}

pub fn saliency(store: &ModelStore, req: &SaliencyRequest) -> ApiResult<SaliencyResponse> {
    let l = code_layout(req.d)?;
    let model = model_for(store, Some(&req.model_id), req.d)?;
    let resolved = resolve(&l, &req.input, model.channels())?;
    check_channels(&model, &resolved.stack)?;
    let defaults = OcclusionConfig::default();
    let config = OcclusionConfig::with_patch(req.patch.unwrap_or(defaults.patch_h), req.stride.unwrap_or(defaults.stride));
    let g = l.grid_size();
    config.positions(g, g).map_err(|e| ApiError::bad_request("invalid-patch", e.to_string()))?;
    let input = l.encode_input(&resolved.stack)?;
    let map = occlusion_saliency(model.network(), model.params(), input.data(), req.reference, &config)?;
    Ok(SaliencyResponse {
        coarse: map.coarse[0].nested(),
        upsampled: map.upsampled[0].nested(),
        predicted_class: map.prediction.class,
        probabilities: map.prediction.probabilities,
        reference_class: map.reference,
        patch: config.patch_h,
        stride: config.stride,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseName {
    Depolarizing,
    Phenomenological,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRequest {
    pub d: usize,
    pub noise: NoiseName,
    pub p: f64,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub cycles: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResponse {
    pub d: usize,
    pub seed: u64,
    pub error: Vec<PlacedError>,
    /// Every round fed to a decoder, the perfect one last.
    pub syndromes: Vec<Vec<Coord>>,
    pub final_perfect: Vec<Coord>,
    pub label: LogicalClass,
}

pub fn sample(req: &SampleRequest) -> ApiResult<SampleResponse> {
    let l = code_layout(req.d)?;
    let invalid = |e: qeclab::Error| ApiError::bad_request("invalid-noise", e.to_string());
    let noise = match req.noise {
        NoiseName::Depolarizing => NoiseModel::depolarizing(req.p).map_err(invalid)?,
        NoiseName::Phenomenological => {
            let (Some(q), Some(cycles)) = (req.q, req.cycles) else {
                return Err(ApiError::bad_request("invalid-noise", "phenomenological noise needs q and cycles"));
            };
            NoiseModel::phenomenological(req.p, q, cycles).map_err(invalid)?
        }
    };
    let seed = req.seed.unwrap_or_else(rand::random);
    let s = draw(&l, &noise, SeedSpec::new(seed), 0);
    let label = label_record(&l, &s.error, s.final_perfect())?;
    Ok(SampleResponse {
        d: req.d,
        seed,
        error: placed(&s.error),
        syndromes: s.stack.iter().map(|x| coords(&x.flipped())).collect(),
        final_perfect: coords(&s.final_perfect().flipped()),
        label,
    })
}
