//! Model files: a line-oriented text manifest, a `weights N` line, then `N`
//! little-endian `f64` values in parameter order.
//!
//! ```text
//! qeclab-model 1
//! input 1 9 9
//! layer conv2d filters=64 kernel=3x3 stride=1 dilation=1 padding=same
//! ...
//! seed 7
//! meta distance 5
//! weights 841220
//! <binary>
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::spec::{LayerSpec, ModelSpec, Parameters};
use super::Tensor;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "qeclab-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub spec: ModelSpec,
    pub params: Parameters,
    pub seed: u64,
    /// Free-form training metadata; keys must not contain whitespace.
    pub metadata: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(spec: ModelSpec, params: Parameters, seed: u64) -> Self {
        ModelFile { spec, params, seed, metadata: BTreeMap::new() }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.params.check_against(&self.spec)?;
        let [c, h, wd] = self.spec.input;
        writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
        writeln!(w, "input {c} {h} {wd}")?;
        for layer in &self.spec.layers {
            writeln!(w, "layer {layer}")?;
        }
        writeln!(w, "seed {}", self.seed)?;
        for (k, v) in &self.metadata {
            if k.is_empty() || k.contains(char::is_whitespace) || v.contains('\n') {
                return Err(Error::format(format!("metadata entry {k:?} cannot be stored")));
            }
            writeln!(w, "meta {k} {v}")?;
        }
        writeln!(w, "weights {}", self.params.scalar_count())?;
        let mut blob = Vec::with_capacity(self.params.scalar_count() * 8);
        for t in &self.params.tensors {
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&blob)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let (spec, seed, metadata, count) = read_manifest(&mut r)?;
        let shapes = spec.param_shapes()?;
        let expected: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        if expected != count {
            return Err(Error::format(format!("manifest declares {count} weights, layers need {expected}")));
        }
        let mut blob = vec![0u8; count * 8];
        r.read_exact(&mut blob).map_err(|_| Error::format("weight blob is truncated"))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::format("trailing bytes after weight blob"));
        }
        let mut values = blob.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()));
        let mut tensors = Vec::with_capacity(shapes.len());
        for shape in shapes {
            let n = shape.iter().product();
            tensors.push(Tensor::from_vec(shape, values.by_ref().take(n).collect())?);
        }
        Ok(ModelFile { spec, params: Parameters { tensors }, seed, metadata })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(fs::File::open(path)?)
    }
}

/// Manifest only, without touching the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelManifest {
    pub spec: ModelSpec,
    pub seed: u64,
    pub metadata: BTreeMap<String, String>,
    pub weight_count: usize,
}

pub fn read_manifest_file(path: impl AsRef<Path>) -> Result<ModelManifest> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let (spec, seed, metadata, weight_count) = read_manifest(&mut r)?;
    Ok(ModelManifest { spec, seed, metadata, weight_count })
}

fn read_manifest(r: &mut impl BufRead) -> Result<(ModelSpec, u64, BTreeMap<String, String>, usize)> {
    let mut line = String::new();
    let mut next = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::format("manifest ended early"));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };
    let head = next(r)?;
    let version = head
        .strip_prefix(MODEL_MAGIC)
        .map(str::trim)
        .ok_or_else(|| Error::format("not a model file"))?;
    if version != MODEL_VERSION.to_string() {
        return Err(Error::format(format!("unsupported model version {version}")));
    }
    let mut input = None;
    let mut layers = Vec::new();
    let mut seed = 0;
    let mut metadata = BTreeMap::new();
    loop {
        let l = next(r)?;
        let (key, rest) = l.split_once(' ').unwrap_or((l.as_str(), ""));
        match key {
            "input" => {
                let dims: Vec<usize> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::format(format!("bad input dimension {t:?}"))))
                    .collect::<Result<_>>()?;
                let dims: [usize; 3] = dims.try_into().map_err(|_| Error::format("input needs three dimensions"))?;
                input = Some(dims);
            }
            "layer" => layers.push(rest.parse::<LayerSpec>()?),
            "seed" => seed = rest.trim().parse().map_err(|_| Error::format("bad seed"))?,
            "meta" => {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                metadata.insert(k.to_string(), v.to_string());
            }
            "weights" => {
                let count = rest.trim().parse().map_err(|_| Error::format("bad weight count"))?;
                let input = input.ok_or_else(|| Error::format("manifest has no input line"))?;
                let spec = ModelSpec::new(input, layers)?;
                return Ok((spec, seed, metadata, count));
            }
            other => return Err(Error::format(format!("unknown manifest entry {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::Padding;

    fn model() -> ModelFile {
        let spec = ModelSpec::new(
            [1, 5, 5],
            vec![
                LayerSpec::conv3x3(4, 1, Padding::Same),
                LayerSpec::relu(),
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 4 },
                LayerSpec::softmax(),
            ],
        )
        .unwrap();
        let params = Parameters::init(&spec, 9).unwrap();
        let mut m = ModelFile::new(spec, params, 9);
        m.metadata.insert("distance".into(), "3".into());
        m.metadata.insert("note".into(), "two words".into());
        m
    }

    #[test]
    fn round_trip() {
        let m = model();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = ModelFile::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.meta("note"), Some("two words"));
    }

    #[test]
    fn rejects_damage() {
        let m = model();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert!(ModelFile::read_from(&buf[..buf.len() - 1]).is_err());
        let mut longer = buf.clone();
        longer.push(0);
        assert!(ModelFile::read_from(&longer[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'x';
        assert!(ModelFile::read_from(&bad[..]).is_err());
    }
}
