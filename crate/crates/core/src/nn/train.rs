//! Mini-batch training and batched evaluation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{cross_entropy, Network, Scratch, Trace};
use super::optim::{adam_step, AdamConfig, AdamState};
use super::spec::{ModelSpec, Parameters, OUTPUT_CLASSES};
use crate::error::{Error, Result};
use crate::noise::SeedSpec;

/// Random-access labelled inputs.
pub trait SampleSource: Sync {
    fn len(&self) -> usize;

    /// `[C, H, W]` of every input.
    fn input_shape(&self) -> [usize; 3];

    /// Writes input `index` into `out` and returns its label.
    fn fill(&self, index: usize, out: &mut [f64]) -> u8;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input_len(&self) -> usize {
        self.input_shape().iter().product()
    }
}

/// In-memory inputs, mostly for tests and crafted sets.
#[derive(Clone, Debug, Default)]
pub struct MemorySource {
    pub shape: [usize; 3],
    pub inputs: Vec<f64>,
    pub labels: Vec<u8>,
}

impl MemorySource {
    pub fn new(shape: [usize; 3]) -> Self {
        MemorySource { shape, inputs: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, input: &[f64], label: u8) {
        assert_eq!(input.len(), self.shape.iter().product::<usize>());
        self.inputs.extend_from_slice(input);
        self.labels.push(label);
    }
}

impl SampleSource for MemorySource {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn input_shape(&self) -> [usize; 3] {
        self.shape
    }

    fn fill(&self, index: usize, out: &mut [f64]) -> u8 {
        let n = out.len();
        out.copy_from_slice(&self.inputs[index * n..][..n]);
        self.labels[index]
    }
}

/// A subset of another source, addressed through an index list.
pub struct Subset<'a, S: SampleSource + ?Sized> {
    pub source: &'a S,
    pub indices: Vec<usize>,
}

impl<S: SampleSource + ?Sized> SampleSource for Subset<'_, S> {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn input_shape(&self) -> [usize; 3] {
        self.source.input_shape()
    }

    fn fill(&self, index: usize, out: &mut [f64]) -> u8 {
        self.source.fill(self.indices[index], out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub shuffle: bool,
    /// Gradients of a mini-batch are computed in this many fixed slices and
    /// summed in order, so the result does not depend on the thread count.
    pub grad_chunks: usize,
    pub init_parameters: Option<Parameters>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 20,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            grad_chunks: 1,
            init_parameters: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be at least 1"));
        }
        if self.grad_chunks == 0 {
            return Err(Error::param("gradient chunk count must be at least 1"));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, as seen during the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub eval_loss: Option<f64>,
    pub eval_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: Parameters,
    pub history: Vec<EpochStats>,
}

/// Loss and accuracy over a whole source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub count: usize,
}

pub(crate) fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..probs.len() {
        if probs[k] > probs[best] {
            best = k;
        }
    }
    best
}

fn check_shapes(spec: &ModelSpec, source: &dyn SampleSource) -> Result<()> {
    if source.input_shape() != spec.input {
        return Err(Error::shape(format!(
            "data shape {:?} does not match model input {:?}",
            source.input_shape(),
            spec.input
        )));
    }
    Ok(())
}

const EVAL_BATCH: usize = 256;

/// Class probabilities for every sample, in source order.
pub fn predict_all(net: &Network, params: &Parameters, source: &dyn SampleSource) -> Result<(Vec<f64>, Vec<u8>)> {
    check_shapes(net.spec(), source)?;
    let n = source.len();
    let len = source.input_len();
    let chunks: Vec<(usize, usize)> = (0..n).step_by(EVAL_BATCH).map(|s| (s, (s + EVAL_BATCH).min(n))).collect();
    let parts: Vec<Result<(Vec<f64>, Vec<u8>)>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut inputs = vec![0.0; (end - start) * len];
            let mut labels = Vec::with_capacity(end - start);
            for (i, slot) in (start..end).zip(inputs.chunks_exact_mut(len)) {
                labels.push(source.fill(i, slot));
            }
            let trace = net.forward(params, &inputs, end - start)?;
            Ok((trace.probabilities().to_vec(), labels))
        })
        .collect();
    let mut probs = Vec::with_capacity(n * OUTPUT_CLASSES);
    let mut labels = Vec::with_capacity(n);
    for part in parts {
        let (p, l) = part?;
        probs.extend(p);
        labels.extend(l);
    }
    Ok((probs, labels))
}

pub fn evaluate(spec: &ModelSpec, params: &Parameters, source: &dyn SampleSource) -> Result<Evaluation> {
    let net = Network::new(spec)?;
    params.check_against(spec)?;
    let (probs, labels) = predict_all(&net, params, source)?;
    Ok(summarize(&probs, &labels))
}

fn summarize(probs: &[f64], labels: &[u8]) -> Evaluation {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (row, &label) in probs.chunks_exact(OUTPUT_CLASSES).zip(labels) {
        loss += cross_entropy(row, label as usize);
        if argmax(row) == label as usize {
            correct += 1;
        }
    }
    let count = labels.len();
    let denom = count.max(1) as f64;
    Evaluation { loss: loss / denom, accuracy: correct as f64 / denom, count }
}

/// Gradient of the batch-mean loss. Returns the summed loss and the number
/// of correct argmax predictions.
fn batch_gradient(
    net: &Network,
    params: &Parameters,
    inputs: &[f64],
    labels: &[u8],
    chunks: usize,
    grads: &mut Parameters,
    trace: &mut Trace,
    scratch: &mut Scratch,
) -> Result<(f64, usize)> {
    let batch = labels.len();
    let len = net.input_len();
    let scale = 1.0 / batch as f64;
    let tally = |trace: &Trace, labels: &[u8]| {
        trace
            .probabilities()
            .chunks_exact(OUTPUT_CLASSES)
            .zip(labels)
            .filter(|(row, &l)| argmax(row) == l as usize)
            .count()
    };
    grads.fill(0.0);
    if chunks <= 1 || batch < 2 {
        net.forward_into(params, inputs, batch, trace)?;
        let loss = net.backward_with(params, trace, labels, scale, grads, scratch)?;
        return Ok((loss, tally(trace, labels)));
    }
    let per = batch.div_ceil(chunks);
    let parts: Vec<Result<(Parameters, f64, usize)>> = labels
        .chunks(per)
        .zip(inputs.chunks(per * len))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(l, x)| {
            let trace = net.forward(params, x, l.len())?;
            let mut g = params.zeros_like();
            let loss = net.backward(params, &trace, l, scale, &mut g)?;
            Ok((g, loss, tally(&trace, l)))
        })
        .collect();
    let mut loss = 0.0;
    let mut correct = 0;
    for part in parts {
        let (g, l, c) = part?;
        grads.add_assign(&g);
        loss += l;
        correct += c;
    }
    Ok((loss, correct))
}

/// Mini-batch Adam training. Bit-reproducible for a fixed configuration.
pub fn train(spec: &ModelSpec, data: &dyn SampleSource, eval: Option<&dyn SampleSource>, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(spec, data, eval, config, |_| {})
}

pub fn train_with_progress(
    spec: &ModelSpec,
    data: &dyn SampleSource,
    eval: Option<&dyn SampleSource>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    config.validate()?;
    check_shapes(spec, data)?;
    if let Some(e) = eval {
        check_shapes(spec, e)?;
    }
    if data.is_empty() {
        return Err(Error::param("training set is empty"));
    }
    let net = Network::new(spec)?;
    let seeds = SeedSpec::new(config.seed);
    let mut params = match &config.init_parameters {
        Some(p) => {
            p.check_against(spec)?;
            p.clone()
        }
        None => Parameters::init(spec, seeds.derive(1).master_seed)?,
    };
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let len = data.input_len();
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut inputs = vec![0.0; config.batch_size * len];
    let mut labels = Vec::with_capacity(config.batch_size);
    let mut trace = Trace::default();
    let mut scratch = Scratch::default();
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.sort_unstable();
            order.shuffle(&mut seeds.derive(2).rng(epoch as u64));
        }
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            labels.clear();
            for (&i, slot) in batch.iter().zip(inputs.chunks_exact_mut(len)) {
                labels.push(data.fill(i, slot));
            }
            let x = &inputs[..batch.len() * len];
            let (loss, c) = batch_gradient(&net, &params, x, &labels, config.grad_chunks, &mut grads, &mut trace, &mut scratch)?;
            loss_sum += loss;
            correct += c;
            adam_step(&mut params, &grads, &mut state, &config.adam);
        }
        let (eval_loss, eval_accuracy) = match eval {
            Some(e) if !e.is_empty() => {
                let (probs, labels) = predict_all(&net, &params, e)?;
                let s = summarize(&probs, &labels);
                (Some(s.loss), Some(s.accuracy))
            }
            _ => (None, None),
        };
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
            eval_loss,
            eval_accuracy,
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok(TrainOutcome { params, history })
}

/// Per-epoch history as CSV.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,eval_loss,eval_accuracy\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.epoch,
            s.train_loss,
            s.train_accuracy,
            opt(s.eval_loss),
            opt(s.eval_accuracy)
        ));
    }
    out
}
