//! WebAssembly bindings for the static demo page in `www/`.
//!
//! A [`Lab`] holds one code patch and the error currently placed on it.
//! Every method answers with a JSON string so the page needs no glue beyond
//! `JSON.parse`.

use qeclab::decode::{mwpm_decode, simple_decode};
use qeclab::noise::{sample, NoiseModel, SeedSpec};
use qeclab::{Cell, CellRole, CodeLayout, LogicalClass, Pauli, PauliError, Syndrome};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct PlacedError {
    row: usize,
    col: usize,
    pauli: Pauli,
}

#[derive(Serialize)]
struct Cells {
    data: Vec<Cell>,
    stab_x: Vec<Cell>,
    stab_z: Vec<Cell>,
    logical_x: Vec<Cell>,
    logical_z: Vec<Cell>,
}

#[derive(Serialize)]
struct State {
    d: usize,
    grid: usize,
    errors: Vec<PlacedError>,
    flipped: Vec<Cell>,
    class: Option<LogicalClass>,
}

#[derive(Serialize)]
struct Decoded {
    decoder: &'static str,
    correction: Vec<PlacedError>,
    residual: Vec<PlacedError>,
    residual_class: LogicalClass,
    success: bool,
}

fn placed(e: &PauliError) -> Vec<PlacedError> {
    e.support().into_iter().map(|(c, pauli)| PlacedError { row: c.row, col: c.col, pauli }).collect()
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain structs serialize")
}

fn parse_pauli(s: &str) -> Result<Pauli, String> {
    match s {
        "I" | "i" => Ok(Pauli::I),
        "X" | "x" => Ok(Pauli::X),
        "Y" | "y" => Ok(Pauli::Y),
        "Z" | "z" => Ok(Pauli::Z),
        _ => Err(format!("unknown pauli {s:?}")),
    }
}

#[wasm_bindgen]
pub struct Lab {
    layout: CodeLayout,
    error: PauliError,
}

#[wasm_bindgen]
impl Lab {
    #[wasm_bindgen(constructor)]
    pub fn new(d: usize) -> Result<Lab, String> {
        let layout = CodeLayout::new(d).map_err(|e| e.to_string())?;
        let error = PauliError::identity(&layout);
        Ok(Lab { layout, error })
    }

    pub fn distance(&self) -> usize {
        self.layout.distance()
    }

    /// Cell roles and logical supports, fixed for the patch.
    pub fn layout(&self) -> String {
        let l = &self.layout;
        json(&Cells {
            data: l.data_cells().to_vec(),
            stab_x: l.stab_x_cells().to_vec(),
            stab_z: l.stab_z_cells().to_vec(),
            logical_x: l.logical_x_support().to_vec(),
            logical_z: l.logical_z_support().to_vec(),
        })
    }

    /// Multiply `pauli` into the data qubit at (row, col).
    pub fn apply(&mut self, row: usize, col: usize, pauli: &str) -> Result<String, String> {
        let cell = Cell::new(row, col);
        if !self.layout.contains(cell) || self.layout.role(cell) != CellRole::Data {
            return Err(format!("({row}, {col}) is not a data qubit"));
        }
        self.error.apply(&self.layout, cell, parse_pauli(pauli)?).map_err(|e| e.to_string())?;
        Ok(self.state())
    }

    pub fn clear(&mut self) -> String {
        self.error = PauliError::identity(&self.layout);
        self.state()
    }

    /// Placed error, its perfect syndrome and, when the syndrome is trivial,
    /// the logical class of the error.
    pub fn state(&self) -> String {
        let s = self.layout.syndrome_of(&self.error);
        let class = s.is_trivial().then(|| self.layout.logical_class_unchecked(&self.error));
        json(&State {
            d: self.layout.distance(),
            grid: self.layout.grid_size(),
            errors: placed(&self.error),
            flipped: s.flipped(),
            class,
        })
    }

    /// Run `simple` or `mwpm` on the current syndrome and report the
    /// residual left after applying the correction.
    pub fn decode(&self, decoder: &str) -> Result<String, String> {
        let s: Syndrome = self.layout.syndrome_of(&self.error);
        let (name, correction) = match decoder {
            "simple" => ("simple", simple_decode(&self.layout, &s)),
            "mwpm" => ("mwpm", mwpm_decode(&self.layout, &s)),
            _ => return Err(format!("unknown decoder {decoder:?}")),
        };
        let residual = self.error.compose(&correction).map_err(|e| e.to_string())?;
        let residual_class = self.layout.logical_class(&residual).map_err(|e| e.to_string())?;
        Ok(json(&Decoded {
            decoder: name,
            correction: placed(&correction),
            residual: placed(&residual),
            residual_class,
            success: residual_class == LogicalClass::I,
        }))
    }

    /// Replace the placed error with a depolarizing sample.
    pub fn sample(&mut self, p: f64, seed: u64, index: u64) -> Result<String, String> {
        let noise = NoiseModel::depolarizing(p).map_err(|e| e.to_string())?;
        self.error = sample(&self.layout, &noise, SeedSpec::new(seed), index).error;
        Ok(self.state())
    }
}
