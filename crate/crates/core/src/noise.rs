//! Error sampling under the depolarizing and phenomenological models.
//!
//! Every sample is keyed by `(master_seed, index)`: the pair is mixed into
//! a per-record seed, so records can be generated in any order or on any
//! number of threads and still come out identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, PauliError, Syndrome};

fn check_prob(name: &'static str, value: f64, allow_one: bool) -> Result<()> {
    let upper_ok = if allow_one { value <= 1.0 } else { value < 1.0 };
    if value.is_finite() && value >= 0.0 && upper_ok {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepolarizingParams {
    pub p: f64,
}

impl DepolarizingParams {
    pub fn new(p: f64) -> Result<Self> {
        check_prob("p", p, false)?;
        Ok(DepolarizingParams { p })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhenomenologicalParams {
    pub p: f64,
    pub q: f64,
    pub cycles: usize,
}

impl PhenomenologicalParams {
    /// `q = 1` is accepted: it deterministically complements every outcome.
    pub fn new(p: f64, q: f64, cycles: usize) -> Result<Self> {
        check_prob("p", p, false)?;
        check_prob("q", q, true)?;
        if cycles == 0 {
            return Err(Error::param("cycle count must be at least 1"));
        }
        Ok(PhenomenologicalParams { p, q, cycles })
    }
}

/// Either of the two supported noise models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    Depolarizing(DepolarizingParams),
    Phenomenological(PhenomenologicalParams),
}

impl NoiseModel {
    pub fn depolarizing(p: f64) -> Result<Self> {
        DepolarizingParams::new(p).map(NoiseModel::Depolarizing)
    }

    pub fn phenomenological(p: f64, q: f64, cycles: usize) -> Result<Self> {
        PhenomenologicalParams::new(p, q, cycles).map(NoiseModel::Phenomenological)
    }

    pub fn p(&self) -> f64 {
        match self {
            NoiseModel::Depolarizing(d) => d.p,
            NoiseModel::Phenomenological(ph) => ph.p,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            NoiseModel::Depolarizing(_) => 0.0,
            NoiseModel::Phenomenological(ph) => ph.q,
        }
    }

    /// Noisy measurement rounds; 0 for the single perfect round of the
    /// depolarizing model.
    pub fn cycles(&self) -> usize {
        match self {
            NoiseModel::Depolarizing(_) => 0,
            NoiseModel::Phenomenological(ph) => ph.cycles,
        }
    }

    /// Network input channels: one per noisy round plus the final perfect one.
    pub fn channels(&self) -> usize {
        self.cycles() + 1
    }

    pub fn kind_code(&self) -> u8 {
        match self {
            NoiseModel::Depolarizing(_) => 0,
            NoiseModel::Phenomenological(_) => 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::Depolarizing(_) => "depolarizing",
            NoiseModel::Phenomenological(_) => "phenomenological",
        }
    }
}

/// Master seed plus the fixed rule deriving per-record streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    pub fn record_seed(&self, index: u64) -> u64 {
        mix(self.master_seed, index)
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.record_seed(index))
    }

    /// Independent child seed, used to give sub-streams (dataset components,
    /// shuffles) their own key space.
    pub fn derive(&self, tag: u64) -> SeedSpec {
        SeedSpec::new(mix(self.master_seed ^ 0xA076_1D64_78BD_642F, tag))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Avalanche mixer for `(master, index)` pairs.
pub fn mix(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.rotate_left(32) ^ 0x2545_F491_4F6C_DD1D)
}

/// Applies one round of depolarizing noise onto `error` in place.
pub fn apply_depolarizing<R: Rng>(layout: &CodeLayout, p: f64, rng: &mut R, error: &mut PauliError) {
    if p == 0.0 {
        return;
    }
    let third = p / 3.0;
    for &cell in layout.data_cells() {
        let u: f64 = rng.gen();
        if u >= p {
            continue;
        }
        let i = layout.index(cell);
        if u < third {
            error.x_part_mut().toggle(i);
        } else if u < 2.0 * third {
            error.x_part_mut().toggle(i);
            error.z_part_mut().toggle(i);
        } else {
            error.z_part_mut().toggle(i);
        }
    }
}

pub fn sample_depolarizing(layout: &CodeLayout, params: DepolarizingParams, seed: SeedSpec, index: u64) -> PauliError {
    let mut rng = seed.rng(index);
    let mut e = PauliError::identity(layout);
    apply_depolarizing(layout, params.p, &mut rng, &mut e);
    e
}

/// Result of repeated noisy measurement rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoisyRun {
    pub cumulative: PauliError,
    pub noisy: Vec<Syndrome>,
    pub final_perfect: Syndrome,
}

impl NoisyRun {
    /// All syndromes in temporal order, final perfect round last.
    pub fn stack(&self) -> Vec<Syndrome> {
        let mut v = self.noisy.clone();
        v.push(self.final_perfect.clone());
        v
    }
}

pub fn run_noisy_cycles(layout: &CodeLayout, params: PhenomenologicalParams, seed: SeedSpec, index: u64) -> NoisyRun {
    let mut rng = seed.rng(index);
    let mut cumulative = PauliError::identity(layout);
    let mut noisy = Vec::with_capacity(params.cycles);
    for _ in 0..params.cycles {
        apply_depolarizing(layout, params.p, &mut rng, &mut cumulative);
        let mut s = layout.syndrome_of(&cumulative);
        if params.q > 0.0 {
            for &cell in layout.measurement_cells() {
                if rng.gen::<f64>() < params.q {
                    s.toggle_index(layout.index(cell));
                }
            }
        }
        noisy.push(s);
    }
    let final_perfect = layout.syndrome_of(&cumulative);
    NoisyRun { cumulative, noisy, final_perfect }
}

/// One draw from either model, reduced to what decoders and labelers need.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseSample {
    pub error: PauliError,
    /// Syndromes fed to the network, final perfect round last.
    pub stack: Vec<Syndrome>,
}

impl NoiseSample {
    pub fn final_perfect(&self) -> &Syndrome {
        self.stack.last().expect("stack holds at least the perfect round")
    }

    /// Last measured round: the noisy one if any, otherwise the perfect one.
    pub fn last_measured(&self) -> &Syndrome {
        if self.stack.len() >= 2 {
            &self.stack[self.stack.len() - 2]
        } else {
            self.final_perfect()
        }
    }
}

pub fn sample(layout: &CodeLayout, noise: &NoiseModel, seed: SeedSpec, index: u64) -> NoiseSample {
    match noise {
        NoiseModel::Depolarizing(params) => {
            let error = sample_depolarizing(layout, *params, seed, index);
            let s = layout.syndrome_of(&error);
            NoiseSample { error, stack: vec![s] }
        }
        NoiseModel::Phenomenological(params) => {
            let run = run_noisy_cycles(layout, *params, seed, index);
            let stack = run.stack();
            NoiseSample { error: run.cumulative, stack }
        }
    }
}
