//! Monte Carlo logical error rates. Every decoder in one call sees the same
//! error samples, drawn by index from one master seed.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{mwpm_decode, simple_decode};
use crate::error::{Error, Result};
use crate::hld::{fix_up, HighLevelDecoder, Prediction};
use crate::lattice::{CodeLayout, LogicalClass};
use crate::noise::{sample, NoiseModel, NoiseSample, SeedSpec};

#[derive(Clone, Copy, Debug)]
pub enum Decoder<'a> {
    Simple,
    Mwpm,
    Hld(&'a HighLevelDecoder),
    /// Predicts class I for every input: the nearest-border decoder on the
    /// final perfect syndrome, with no logical fix-up.
    AlwaysI,
}

impl Decoder<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Decoder::Simple => "simple",
            Decoder::Mwpm => "mwpm",
            Decoder::Hld(_) => "hld",
            Decoder::AlwaysI => "always-i",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub decoder: String,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub cycles: usize,
    pub n: usize,
    pub failures: usize,
    pub rate: f64,
    pub stderr: f64,
    pub accuracy: f64,
}

impl EvalPoint {
    pub fn new(decoder: &str, layout: &CodeLayout, noise: &NoiseModel, n: usize, failures: usize) -> Self {
        let rate = failures as f64 / n as f64;
        EvalPoint {
            decoder: decoder.to_string(),
            d: layout.distance(),
            p: noise.p(),
            q: noise.q(),
            cycles: noise.cycles(),
            n,
            failures,
            rate,
            stderr: binomial_stderr(rate, n),
            accuracy: 1.0 - rate,
        }
    }
}

/// `sqrt(rate * (1 - rate) / n)`.
pub fn binomial_stderr(rate: f64, n: usize) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

/// Separation of two rates in units of their combined standard error.
pub fn separation(a: &EvalPoint, b: &EvalPoint) -> f64 {
    let s = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    if s == 0.0 {
        if a.rate == b.rate {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.rate - b.rate).abs() / s
    }
}

/// Whether `decoder` fails on `sample`. Classical decoders decode the final
/// perfect syndrome under depolarizing noise and the last noisy round
/// otherwise, where a residual with a nontrivial true syndrome also counts
/// as a failure.
fn fails(layout: &CodeLayout, noise: &NoiseModel, decoder: &Decoder, s: &NoiseSample, prediction: Option<&Prediction>) -> Result<bool> {
    let correction = match decoder {
        Decoder::Simple | Decoder::Mwpm => {
            let syndrome = match noise {
                NoiseModel::Depolarizing(_) => s.final_perfect(),
                NoiseModel::Phenomenological(_) => s.last_measured(),
            };
            if matches!(decoder, Decoder::Simple) {
                simple_decode(layout, syndrome)
            } else {
                mwpm_decode(layout, syndrome)
            }
        }
        Decoder::AlwaysI => simple_decode(layout, s.final_perfect()),
        Decoder::Hld(_) => fix_up(layout, s.final_perfect(), prediction.expect("hld prediction").class)?,
    };
    let residual = s.error.compose(&correction)?;
    if !layout.syndrome_of(&residual).is_trivial() {
        return Ok(true);
    }
    Ok(layout.logical_class_unchecked(&residual) != LogicalClass::I)
}

const CHUNK: usize = 1024;

/// Per-sample failure flags, `[decoder][sample]`.
pub fn paired_failures(decoders: &[Decoder], layout: &CodeLayout, noise: &NoiseModel, n: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    if n == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    for dec in decoders {
        if let Decoder::Hld(h) = dec {
            if h.layout().distance() != layout.distance() || h.channels() != noise.channels() {
                return Err(Error::shape("model does not match the evaluated code and noise"));
            }
        }
    }
    let seed = SeedSpec::new(seed);
    let chunks: Vec<Result<Vec<Vec<bool>>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(n);
            let samples: Vec<NoiseSample> = range.map(|i| sample(layout, noise, seed, i as u64)).collect();
            let mut out = Vec::with_capacity(decoders.len());
            for dec in decoders {
                let predictions = match dec {
                    Decoder::Hld(h) => Some(predict_batch(h, &samples)?),
                    _ => None,
                };
                let mut flags = Vec::with_capacity(samples.len());
                for (i, s) in samples.iter().enumerate() {
                    flags.push(fails(layout, noise, dec, s, predictions.as_ref().map(|p| &p[i]))?);
                }
                out.push(flags);
            }
            Ok(out)
        })
        .collect();
    let mut result = vec![Vec::with_capacity(n); decoders.len()];
    for chunk in chunks {
        for (acc, flags) in result.iter_mut().zip(chunk?) {
            acc.extend(flags);
        }
    }
    Ok(result)
}

fn predict_batch(h: &HighLevelDecoder, samples: &[NoiseSample]) -> Result<Vec<Prediction>> {
    let mut inputs = Vec::with_capacity(samples.len() * h.spec().input_len());
    for s in samples {
        inputs.extend_from_slice(h.layout().encode_input(&s.stack)?.data());
    }
    let trace = h.network().forward(h.params(), &inputs, samples.len())?;
    Ok(trace.probabilities().chunks_exact(4).map(Prediction::from_probabilities).collect())
}

/// One point per decoder, all on the same samples.
pub fn evaluate_paired(decoders: &[Decoder], layout: &CodeLayout, noise: &NoiseModel, n: usize, seed: u64) -> Result<Vec<EvalPoint>> {
    let flags = paired_failures(decoders, layout, noise, n, seed)?;
    Ok(decoders
        .iter()
        .zip(flags)
        .map(|(dec, f)| EvalPoint::new(dec.name(), layout, noise, n, f.iter().filter(|&&x| x).count()))
        .collect())
}

pub fn logical_error_rate(decoder: Decoder, layout: &CodeLayout, noise: &NoiseModel, n: usize, seed: u64) -> Result<EvalPoint> {
    Ok(evaluate_paired(&[decoder], layout, noise, n, seed)?.remove(0))
}

/// Points for every `(noise, decoder)` pair, noise-major. Each noise setting
/// reuses `seed`, so neighbouring points share random numbers.
pub fn sweep_curve(decoders: &[Decoder], layout: &CodeLayout, noises: &[NoiseModel], n: usize, seed: u64) -> Result<Vec<EvalPoint>> {
    if decoders.is_empty() || noises.is_empty() {
        return Err(Error::param("sweep needs at least one decoder and one noise setting"));
    }
    let mut out = Vec::with_capacity(decoders.len() * noises.len());
    for noise in noises {
        out.extend(evaluate_paired(decoders, layout, noise, n, seed)?);
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "decoder,d,p,q,cycles,n,rate,stderr,accuracy";

pub fn to_csv(points: &[EvalPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for pt in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            pt.decoder, pt.d, pt.p, pt.q, pt.cycles, pt.n, pt.rate, pt.stderr, pt.accuracy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_never_fails() {
        let l = CodeLayout::new(3).unwrap();
        for noise in [NoiseModel::depolarizing(0.0).unwrap(), NoiseModel::phenomenological(0.0, 0.0, 3).unwrap()] {
            let pts = evaluate_paired(&[Decoder::Simple, Decoder::Mwpm, Decoder::AlwaysI], &l, &noise, 50, 1).unwrap();
            assert!(pts.iter().all(|p| p.rate == 0.0 && p.stderr == 0.0 && p.accuracy == 1.0));
        }
    }

    #[test]
    fn stderr_formula() {
        let l = CodeLayout::new(3).unwrap();
        let noise = NoiseModel::depolarizing(0.1).unwrap();
        let pt = EvalPoint::new("mwpm", &l, &noise, 400, 100);
        assert_eq!(pt.rate, 0.25);
        assert_eq!(pt.stderr, (0.25f64 * 0.75 / 400.0).sqrt());
    }

    #[test]
    fn single_point_sweep_matches() {
        let l = CodeLayout::new(5).unwrap();
        let noise = NoiseModel::depolarizing(0.08).unwrap();
        let a = logical_error_rate(Decoder::Mwpm, &l, &noise, 2000, 3).unwrap();
        let b = sweep_curve(&[Decoder::Mwpm], &l, &[noise], 2000, 3).unwrap();
        assert_eq!(vec![a], b);
        assert!(to_csv(&b).starts_with("decoder,d,p,q,cycles,n,rate,stderr,accuracy\nmwpm,5,0.08,0,0,2000,"));
    }
}
