//! Occlusion saliency: mask a small patch of the input, record how much the
//! loss moves, `(loss(original) - loss(masked))^2`, for every patch position.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hld::Prediction;
use crate::lattice::LogicalClass;
use crate::nn::{cross_entropy, Network, Parameters};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMasking {
    /// All channels of a patch are masked together; one map.
    Joint,
    /// One channel at a time; one map per channel.
    PerChannel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionConfig {
    pub patch_h: usize,
    pub patch_w: usize,
    pub stride: usize,
    pub mask_value: f64,
    pub masking: ChannelMasking,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig { patch_h: 2, patch_w: 2, stride: 1, mask_value: 0.0, masking: ChannelMasking::Joint }
    }
}

impl OcclusionConfig {
    pub fn with_patch(patch: usize, stride: usize) -> Self {
        OcclusionConfig { patch_h: patch, patch_w: patch, stride, ..Self::default() }
    }

    /// Patch positions along each axis of an `h x w` input.
    pub fn positions(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if self.patch_h == 0 || self.patch_w == 0 || self.stride == 0 {
            return Err(Error::param("patch size and stride must be positive"));
        }
        if self.patch_h > h || self.patch_w > w {
            return Err(Error::param(format!("{}x{} patch does not fit a {h}x{w} input", self.patch_h, self.patch_w)));
        }
        Ok(((h - self.patch_h) / self.stride + 1, (w - self.patch_w) / self.stride + 1))
    }
}

/// Row-major matrix of saliency values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Positions attaining the maximum.
    pub fn argmax(&self) -> Vec<(usize, usize)> {
        let m = self.max();
        (0..self.values.len()).filter(|&i| self.values[i] == m).map(|i| (i / self.cols, i % self.cols)).collect()
    }

    pub fn nested(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit graymap, scaled so the maximum maps to 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        let max = self.max();
        out.extend(self.values.iter().map(|&v| if max > 0.0 { (v / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 }));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    pub config: OcclusionConfig,
    /// One coarse map per masked channel group, indexed by patch position.
    pub coarse: Vec<Grid>,
    /// Coarse maps expanded onto the input grid.
    pub upsampled: Vec<Grid>,
    pub reference: LogicalClass,
    pub prediction: Prediction,
}

/// Each input cell takes the largest value among the patches covering it;
/// cells no patch covers stay 0.
pub fn upsample_overlay(coarse: &Grid, config: &OcclusionConfig, h: usize, w: usize) -> Grid {
    let mut out = Grid::zeros(h, w);
    for pr in 0..coarse.rows {
        for pc in 0..coarse.cols {
            let v = coarse.get(pr, pc);
            for r in pr * config.stride..(pr * config.stride + config.patch_h).min(h) {
                for c in pc * config.stride..(pc * config.stride + config.patch_w).min(w) {
                    let cell = &mut out.values[r * w + c];
                    *cell = cell.max(v);
                }
            }
        }
    }
    out
}

const MASK_BATCH: usize = 64;

/// Occlusion map of `input` (shape `net.spec().input`). The loss is taken
/// against `reference`, or against the model's own prediction on the
/// unmasked input when `reference` is `None`.
pub fn occlusion_saliency(
    net: &Network,
    params: &Parameters,
    input: &[f64],
    reference: Option<LogicalClass>,
    config: &OcclusionConfig,
) -> Result<SaliencyMap> {
    let [channels, h, w] = net.spec().input;
    let (rows, cols) = config.positions(h, w)?;
    let base = net.forward(params, input, 1)?;
    let prediction = Prediction::from_probabilities(base.probabilities());
    let reference = reference.unwrap_or(prediction.class);
    let base_loss = cross_entropy(base.probabilities(), reference.code() as usize);

    let groups: Vec<Option<usize>> = match config.masking {
        ChannelMasking::Joint => vec![None],
        ChannelMasking::PerChannel => (0..channels).map(Some).collect(),
    };
    let plane = h * w;
    let mut jobs = Vec::with_capacity(groups.len() * rows * cols);
    for (gi, &group) in groups.iter().enumerate() {
        for pr in 0..rows {
            for pc in 0..cols {
                jobs.push((gi, group, pr, pc));
            }
        }
    }
    let losses: Vec<Result<Vec<f64>>> = jobs
        .par_chunks(MASK_BATCH)
        .map(|chunk| {
            let mut batch = Vec::with_capacity(chunk.len() * input.len());
            for &(_, group, pr, pc) in chunk {
                let start = batch.len();
                batch.extend_from_slice(input);
                let masked = &mut batch[start..];
                let chans = match group {
                    Some(ch) => ch..ch + 1,
                    None => 0..channels,
                };
                for ch in chans {
                    for r in pr * config.stride..pr * config.stride + config.patch_h {
                        for c in pc * config.stride..pc * config.stride + config.patch_w {
                            masked[ch * plane + r * w + c] = config.mask_value;
                        }
                    }
                }
            }
            let trace = net.forward(params, &batch, chunk.len())?;
            Ok(trace.probabilities().chunks_exact(4).map(|p| cross_entropy(p, reference.code() as usize)).collect())
        })
        .collect();
    let mut coarse: Vec<Grid> = groups.iter().map(|_| Grid::zeros(rows, cols)).collect();
    let mut job = jobs.iter();
    for part in losses {
        for loss in part? {
            let &(gi, _, pr, pc) = job.next().expect("one loss per job");
            let diff = base_loss - loss;
            coarse[gi].values[pr * cols + pc] = diff * diff;
        }
    }
    let upsampled = coarse.iter().map(|g| upsample_overlay(g, config, h, w)).collect();
    Ok(SaliencyMap { config: *config, coarse, upsampled, reference, prediction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hld::{build_cnn, NoiseKind};

    #[test]
    fn position_counts() {
        let c = OcclusionConfig::default();
        assert_eq!(c.positions(9, 9).unwrap(), (8, 8));
        assert_eq!(OcclusionConfig::with_patch(4, 4).positions(28, 28).unwrap(), (7, 7));
        assert_eq!(OcclusionConfig::with_patch(9, 9).positions(9, 9).unwrap(), (1, 1));
        assert!(OcclusionConfig::with_patch(0, 1).positions(9, 9).is_err());
        assert!(OcclusionConfig::with_patch(10, 1).positions(9, 9).is_err());
    }

    #[test]
    fn full_patch_broadcasts() {
        let cfg = OcclusionConfig::with_patch(5, 5);
        let coarse = Grid { rows: 1, cols: 1, values: vec![0.7] };
        let up = upsample_overlay(&coarse, &cfg, 5, 5);
        assert!(up.values.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn overlay_takes_max() {
        let cfg = OcclusionConfig::default();
        let coarse = Grid { rows: 2, cols: 2, values: vec![1.0, 0.0, 0.0, 3.0] };
        let up = upsample_overlay(&coarse, &cfg, 3, 3);
        assert_eq!(up.values, vec![1.0, 1.0, 0.0, 1.0, 3.0, 3.0, 0.0, 3.0, 3.0]);
    }

    #[test]
    fn zero_model_zero_map() {
        let spec = build_cnn(3, NoiseKind::Depolarizing, false).unwrap();
        let net = Network::new(&spec).unwrap();
        let params = Parameters::zeros(&spec).unwrap();
        let input: Vec<f64> = (0..25).map(|i| if i % 2 == 1 { -1.0 } else { 0.0 }).collect();
        let map = occlusion_saliency(&net, &params, &input, None, &OcclusionConfig::default()).unwrap();
        assert_eq!(map.coarse.len(), 1);
        assert_eq!((map.coarse[0].rows, map.coarse[0].cols), (4, 4));
        assert!(map.coarse[0].values.iter().all(|&v| v == 0.0));
        assert_eq!((map.upsampled[0].rows, map.upsampled[0].cols), (5, 5));
    }

    #[test]
    fn pgm_header() {
        let g = Grid { rows: 1, cols: 2, values: vec![0.0, 2.0] };
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n2 1\n255\n"));
        assert_eq!(&pgm[pgm.len() - 2..], &[0, 255]);
        assert_eq!(g.to_csv(), "0,2\n");
    }
}
