//! Labelled syndrome datasets: generation, chain augmentation, the `SYQD`
//! file format and train/eval splitting.
//!
//! File layout (little-endian): `"SYQD"`, u16 version, u16 d, u16 channels,
//! u16 cycles, u8 noise kind, f64 p, f64 q, u64 record count, u64 master
//! seed, then fixed-size records. A record is one label byte followed by
//! one bit-packed block per channel: bit `j` (LSB first) is the outcome of
//! the `j`-th measurement cell in row-major order, 1 meaning flipped.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::simple_decode;
use crate::error::{Error, Result};
use crate::lattice::{Cell, CodeLayout, LogicalClass, Pauli, PauliError, Syndrome};
use crate::nn::SampleSource;
use crate::noise::{sample, NoiseModel, SeedSpec};

pub const MAGIC: &[u8; 4] = b"SYQD";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 * 4 + 1 + 8 * 4;

const BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u16,
    pub distance: u16,
    pub channels: u16,
    pub cycles: u16,
    pub noise_kind: u8,
    pub p: f64,
    pub q: f64,
    pub record_count: u64,
    pub master_seed: u64,
}

impl DatasetHeader {
    pub fn for_noise(layout: &CodeLayout, noise: &NoiseModel, record_count: u64, master_seed: u64) -> Self {
        DatasetHeader {
            version: FORMAT_VERSION,
            distance: layout.distance() as u16,
            channels: noise.channels() as u16,
            cycles: noise.cycles() as u16,
            noise_kind: noise.kind_code(),
            p: noise.p(),
            q: noise.q(),
            record_count,
            master_seed,
        }
    }

    pub fn layout(&self) -> Result<CodeLayout> {
        CodeLayout::new(self.distance as usize)
    }

    /// Measurement outcomes per channel, `2d(d-1)`.
    pub fn bits_per_channel(&self) -> usize {
        let d = self.distance as usize;
        2 * d * (d - 1)
    }

    pub fn record_len(&self) -> usize {
        1 + self.channels as usize * self.bits_per_channel().div_ceil(8)
    }

    pub fn noise_name(&self) -> &'static str {
        match self.noise_kind {
            0 => "depolarizing",
            1 => "phenomenological",
            _ => "unknown",
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..8].copy_from_slice(&self.distance.to_le_bytes());
        b[8..10].copy_from_slice(&self.channels.to_le_bytes());
        b[10..12].copy_from_slice(&self.cycles.to_le_bytes());
        b[12] = self.noise_kind;
        b[13..21].copy_from_slice(&self.p.to_le_bytes());
        b[21..29].copy_from_slice(&self.q.to_le_bytes());
        b[29..37].copy_from_slice(&self.record_count.to_le_bytes());
        b[37..45].copy_from_slice(&self.master_seed.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN || &b[0..4] != MAGIC {
            return Err(Error::format("missing SYQD magic"));
        }
        let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let h = DatasetHeader {
            version: u16_at(4),
            distance: u16_at(6),
            channels: u16_at(8),
            cycles: u16_at(10),
            noise_kind: b[12],
            p: f64::from_le_bytes(b[13..21].try_into().unwrap()),
            q: f64::from_le_bytes(b[21..29].try_into().unwrap()),
            record_count: u64_at(29),
            master_seed: u64_at(37),
        };
        if h.version != FORMAT_VERSION {
            return Err(Error::format(format!("unsupported dataset version {}", h.version)));
        }
        if h.layout().is_err() {
            return Err(Error::format(format!("invalid distance {} in header", h.distance)));
        }
        if h.noise_kind > 1 || h.channels == 0 {
            return Err(Error::format("invalid noise kind or channel count in header"));
        }
        let expected_channels = if h.noise_kind == 0 { 1 } else { h.cycles + 1 };
        if h.channels != expected_channels {
            return Err(Error::format(format!("{} channels do not fit {} cycles", h.channels, h.cycles)));
        }
        Ok(h)
    }
}

/// One labelled syndrome stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub label: LogicalClass,
    pub stack: Vec<Syndrome>,
}

impl Record {
    pub fn encode(&self, layout: &CodeLayout, out: &mut Vec<u8>) {
        out.push(self.label.code());
        let cells = layout.measurement_cells();
        for s in &self.stack {
            let start = out.len();
            out.resize(start + cells.len().div_ceil(8), 0);
            for (j, &c) in cells.iter().enumerate() {
                if s.is_flipped(layout, c) {
                    out[start + j / 8] |= 1 << (j % 8);
                }
            }
        }
    }

    pub fn decode(layout: &CodeLayout, channels: usize, bytes: &[u8]) -> Result<Self> {
        let label = LogicalClass::from_code(bytes[0])?;
        let cells = layout.measurement_cells();
        let block = cells.len().div_ceil(8);
        let mut stack = Vec::with_capacity(channels);
        for ch in 0..channels {
            let bits = &bytes[1 + ch * block..][..block];
            let flipped: Vec<Cell> = cells.iter().enumerate().filter(|(j, _)| bits[j / 8] >> (j % 8) & 1 == 1).map(|(_, &c)| c).collect();
            stack.push(Syndrome::from_flipped(layout, &flipped)?);
        }
        Ok(Record { label, stack })
    }
}

/// Class left behind by the nearest-border decoder:
/// `logical_class(cumulative ∘ simple_decode(syndrome))`.
pub fn label_record(layout: &CodeLayout, cumulative: &PauliError, decode_syndrome: &Syndrome) -> Result<LogicalClass> {
    let correction = simple_decode(layout, decode_syndrome);
    layout.logical_class(&cumulative.compose(&correction)?)
}

/// Records held in memory in their on-disk encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    header: DatasetHeader,
    layout: CodeLayout,
    records: Vec<u8>,
    /// Grid index of each measurement cell, cached for input decoding.
    cell_index: Vec<usize>,
}

impl Dataset {
    fn with_records(header: DatasetHeader, records: Vec<u8>) -> Result<Self> {
        let layout = header.layout()?;
        let cell_index = layout.measurement_cells().iter().map(|&c| layout.index(c)).collect();
        let ds = Dataset { header, layout, records, cell_index };
        if ds.records.len() != ds.header.record_count as usize * ds.header.record_len() {
            return Err(Error::format("record data does not match the header count"));
        }
        Ok(ds)
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.header.record_count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.header.channels as usize
    }

    fn raw(&self, i: usize) -> &[u8] {
        let n = self.header.record_len();
        &self.records[i * n..][..n]
    }

    pub fn label(&self, i: usize) -> LogicalClass {
        LogicalClass::from_code(self.raw(i)[0]).expect("labels are validated on load")
    }

    pub fn record(&self, i: usize) -> Record {
        Record::decode(&self.layout, self.channels(), self.raw(i)).expect("records are validated on load")
    }

    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    /// Counts of I, X, Z, Y labels.
    pub fn label_histogram(&self) -> [u64; 4] {
        let mut h = [0u64; 4];
        for i in 0..self.len() {
            h[self.raw(i)[0] as usize] += 1;
        }
        h
    }

    /// Records at `indices`, in that order, under the same header fields.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut records = Vec::with_capacity(indices.len() * self.header.record_len());
        for &i in indices {
            records.extend_from_slice(self.raw(i));
        }
        let header = DatasetHeader { record_count: indices.len() as u64, ..self.header };
        Dataset::with_records(header, records).expect("subset of a valid dataset")
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.header.to_bytes())?;
        w.write_all(&self.records)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        r.read_exact(&mut head).map_err(|_| Error::format("file shorter than a dataset header"))?;
        let header = DatasetHeader::from_bytes(&head)?;
        let mut records = Vec::new();
        r.read_to_end(&mut records)?;
        if records.len() != header.record_count as usize * header.record_len() {
            return Err(Error::format(format!(
                "header declares {} records of {} bytes, file holds {} bytes",
                header.record_count,
                header.record_len(),
                records.len()
            )));
        }
        let n = header.record_len();
        if records.chunks_exact(n).any(|r| r[0] > 3) {
            return Err(Error::format("record with invalid label"));
        }
        Dataset::with_records(header, records)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Dataset::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl SampleSource for Dataset {
    fn len(&self) -> usize {
        Dataset::len(self)
    }

    fn input_shape(&self) -> [usize; 3] {
        let g = self.layout.grid_size();
        [self.channels(), g, g]
    }

    fn fill(&self, index: usize, out: &mut [f64]) -> u8 {
        let raw = self.raw(index);
        let plane = self.layout.cell_count();
        let block = self.cell_index.len().div_ceil(8);
        out.fill(0.0);
        for ch in 0..self.channels() {
            let bits = &raw[1 + ch * block..][..block];
            let dst = &mut out[ch * plane..][..plane];
            for (j, &idx) in self.cell_index.iter().enumerate() {
                dst[idx] = if bits[j / 8] >> (j % 8) & 1 == 1 { -1.0 } else { 1.0 };
            }
        }
        raw[0]
    }
}

fn encode_parallel(layout: &CodeLayout, count: usize, record_len: usize, make: impl Fn(u64) -> Result<Record> + Sync) -> Result<Vec<u8>> {
    let blocks: Vec<Result<Vec<u8>>> = (0..count.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let end = ((b + 1) * BLOCK).min(count);
            let mut out = Vec::with_capacity((end - b * BLOCK) * record_len);
            for i in b * BLOCK..end {
                make(i as u64)?.encode(layout, &mut out);
            }
            Ok(out)
        })
        .collect();
    let mut records = Vec::with_capacity(count * record_len);
    for b in blocks {
        records.extend(b?);
    }
    Ok(records)
}

/// Record `index` of a noise dataset.
pub fn noise_record(layout: &CodeLayout, noise: &NoiseModel, seed: SeedSpec, index: u64) -> Result<Record> {
    let s = sample(layout, noise, seed, index);
    let label = label_record(layout, &s.error, s.final_perfect())?;
    Ok(Record { label, stack: s.stack })
}

/// `count` labelled records, record `i` determined by `(master_seed, i)`.
pub fn generate(layout: &CodeLayout, noise: &NoiseModel, count: usize, master_seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::param("record count must be at least 1"));
    }
    let header = DatasetHeader::for_noise(layout, noise, count as u64, master_seed);
    let seed = SeedSpec::new(master_seed);
    let records = encode_parallel(layout, count, header.record_len(), |i| noise_record(layout, noise, seed, i))?;
    Dataset::with_records(header, records)
}

/// Generates a dataset straight into `sink`, header first.
pub fn generate_dataset(layout: &CodeLayout, noise: &NoiseModel, count: usize, master_seed: u64, sink: impl Write) -> Result<DatasetHeader> {
    let ds = generate(layout, noise, count, master_seed)?;
    ds.write_to(sink)?;
    Ok(ds.header)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub chain_length: usize,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec { chain_length: 5 }
    }
}

/// One straight run of identical single-qubit errors. X chains run down an
/// even column, Z chains along an even row; `start` counts data cells along
/// the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub pauli: Pauli,
    pub line: usize,
    pub start: usize,
    pub length: usize,
}

impl Chain {
    pub fn cells(&self) -> Vec<Cell> {
        (self.start..self.start + self.length)
            .map(|k| match self.pauli {
                Pauli::Z => Cell::new(self.line, 2 * k),
                _ => Cell::new(2 * k, self.line),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainMix {
    XOnly,
    ZOnly,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectedChains {
    pub mix: ChainMix,
    pub chains: Vec<Chain>,
    pub error: PauliError,
    pub record: Record,
}

fn draw_chain<R: Rng>(layout: &CodeLayout, pauli: Pauli, length: usize, rng: &mut R) -> Chain {
    let d = layout.distance();
    let line = 2 * rng.gen_range(0..d);
    let start = rng.gen_range(0..=d - length);
    Chain { pauli, line, start, length }
}

/// A pure chain sample: with probability 1/3 each, one X chain, one Z
/// chain, or one of each, at uniformly random line and offset.
pub fn inject_chain(layout: &CodeLayout, spec: AugmentationSpec, seed: SeedSpec, index: u64) -> Result<InjectedChains> {
    let l = spec.chain_length;
    if l == 0 || l > layout.distance() {
        return Err(Error::param(format!("chain length {l} must lie in 1..={}", layout.distance())));
    }
    let mut rng = seed.rng(index);
    let mix = match rng.gen_range(0..3) {
        0 => ChainMix::XOnly,
        1 => ChainMix::ZOnly,
        _ => ChainMix::Both,
    };
    let paulis: &[Pauli] = match mix {
        ChainMix::XOnly => &[Pauli::X],
        ChainMix::ZOnly => &[Pauli::Z],
        ChainMix::Both => &[Pauli::X, Pauli::Z],
    };
    let chains: Vec<Chain> = paulis.iter().map(|&p| draw_chain(layout, p, l, &mut rng)).collect();
    let mut error = PauliError::identity(layout);
    for ch in &chains {
        for c in ch.cells() {
            error.apply(layout, c, ch.pauli)?;
        }
    }
    let syndrome = layout.syndrome_of(&error);
    let label = label_record(layout, &error, &syndrome)?;
    let record = Record { label, stack: vec![syndrome] };
    Ok(InjectedChains { mix, chains, error, record })
}

pub fn inject_chain_record(layout: &CodeLayout, spec: AugmentationSpec, seed: SeedSpec, index: u64) -> Result<Record> {
    inject_chain(layout, spec, seed, index).map(|c| c.record)
}

/// Pure chain records as a single-channel dataset.
pub fn generate_chains(layout: &CodeLayout, spec: AugmentationSpec, count: usize, master_seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::param("record count must be at least 1"));
    }
    let noise = NoiseModel::depolarizing(0.0)?;
    let header = DatasetHeader::for_noise(layout, &noise, count as u64, master_seed);
    let seed = SeedSpec::new(master_seed);
    let records = encode_parallel(layout, count, header.record_len(), |i| inject_chain_record(layout, spec, seed, i))?;
    Dataset::with_records(header, records)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancedCounts {
    pub chains: usize,
    pub base: usize,
    pub hard: usize,
    pub p_base: f64,
    pub p_hard: f64,
}

/// Chain records, depolarizing records at `p_base` and at `p_hard`,
/// concatenated and shuffled with a seeded permutation. The header carries
/// `p = p_base`.
pub fn build_enhanced_set(layout: &CodeLayout, spec: AugmentationSpec, counts: EnhancedCounts, master_seed: u64) -> Result<Dataset> {
    let total = counts.chains + counts.base + counts.hard;
    if total == 0 {
        return Err(Error::param("enhanced set needs at least one record"));
    }
    let root = SeedSpec::new(master_seed);
    let base_noise = NoiseModel::depolarizing(counts.p_base)?;
    let hard_noise = NoiseModel::depolarizing(counts.p_hard)?;
    let header = DatasetHeader::for_noise(layout, &base_noise, total as u64, master_seed);
    let len = header.record_len();
    let mut records = Vec::with_capacity(total * len);
    if counts.chains > 0 {
        let s = root.derive(1);
        records.extend(encode_parallel(layout, counts.chains, len, |i| inject_chain_record(layout, spec, s, i))?);
    }
    for (n, noise, tag) in [(counts.base, base_noise, 2), (counts.hard, hard_noise, 3)] {
        if n > 0 {
            let s = root.derive(tag);
            records.extend(encode_parallel(layout, n, len, |i| noise_record(layout, &noise, s, i))?);
        }
    }
    let joined = Dataset::with_records(header, records)?;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut root.derive(4).rng(0));
    Ok(joined.subset(&order))
}

/// Seeded split: `floor(fraction * count)` records go to the eval part,
/// both parts keep the original record order.
pub fn split_eval(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("eval fraction {fraction} must lie in (0, 1)")));
    }
    let n = data.len();
    let k = (fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeedSpec::new(seed).derive(5).rng(0));
    let mut eval: Vec<usize> = order[..k].to_vec();
    let mut train: Vec<usize> = order[k..].to_vec();
    eval.sort_unstable();
    train.sort_unstable();
    Ok((data.subset(&train), data.subset(&eval)))
}
