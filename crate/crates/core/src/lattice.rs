//! Planar surface-code geometry.
//!
//! The code of distance `d` lives on a `(2d-1) x (2d-1)` grid. Cells with
//! `row + col` even hold data qubits; the remaining cells hold measurement
//! qubits, X-type on even rows and Z-type on odd rows. The top and bottom
//! borders absorb X strings (they are the X sides), the left and right
//! borders absorb Z strings.

use std::fmt;
use std::ops::BitXor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

pub const MIN_DISTANCE: usize = 3;
pub const MAX_DISTANCE: usize = 25;

/// Grid coordinate `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl From<(usize, usize)> for Cell {
    fn from((row, col): (usize, usize)) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellRole {
    Data,
    StabX,
    StabZ,
}

/// Role of a cell under the fixed convention, independent of distance.
pub fn role_at(cell: Cell) -> CellRole {
    if (cell.row + cell.col) % 2 == 0 {
        CellRole::Data
    } else if cell.row % 2 == 0 {
        CellRole::StabX
    } else {
        CellRole::StabZ
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeLayout {
    distance: usize,
    grid: usize,
    data_cells: Vec<Cell>,
    stab_x: Vec<Cell>,
    stab_z: Vec<Cell>,
    measurement_cells: Vec<Cell>,
    logical_x: Vec<Cell>,
    logical_z: Vec<Cell>,
}

impl CodeLayout {
    pub fn new(distance: usize) -> Result<Self> {
        if distance % 2 == 0 || !(MIN_DISTANCE..=MAX_DISTANCE).contains(&distance) {
            return Err(Error::InvalidDistance(distance));
        }
        let grid = 2 * distance - 1;
        let mut data_cells = Vec::new();
        let mut stab_x = Vec::new();
        let mut stab_z = Vec::new();
        let mut measurement_cells = Vec::new();
        for row in 0..grid {
            for col in 0..grid {
                let cell = Cell::new(row, col);
                match role_at(cell) {
                    CellRole::Data => data_cells.push(cell),
                    CellRole::StabX => {
                        stab_x.push(cell);
                        measurement_cells.push(cell);
                    }
                    CellRole::StabZ => {
                        stab_z.push(cell);
                        measurement_cells.push(cell);
                    }
                }
            }
        }
        let logical_x = (0..grid).step_by(2).map(|r| Cell::new(r, 0)).collect();
        let logical_z = (0..grid).step_by(2).map(|c| Cell::new(0, c)).collect();
        Ok(CodeLayout {
            distance,
            grid,
            data_cells,
            stab_x,
            stab_z,
            measurement_cells,
            logical_x,
            logical_z,
        })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    /// Side length `2d - 1` of the square grid.
    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn cell_count(&self) -> usize {
        self.grid * self.grid
    }

    pub fn role(&self, cell: Cell) -> CellRole {
        role_at(cell)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.grid && cell.col < self.grid
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.grid + cell.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index / self.grid, index % self.grid)
    }

    pub fn data_cells(&self) -> &[Cell] {
        &self.data_cells
    }

    pub fn stab_x_cells(&self) -> &[Cell] {
        &self.stab_x
    }

    pub fn stab_z_cells(&self) -> &[Cell] {
        &self.stab_z
    }

    /// All measurement cells in row-major order. This is also the bit order
    /// used by the dataset record format.
    pub fn measurement_cells(&self) -> &[Cell] {
        &self.measurement_cells
    }

    /// Column-0 representative of the logical X operator.
    pub fn logical_x_support(&self) -> &[Cell] {
        &self.logical_x
    }

    /// Row-0 representative of the logical Z operator.
    pub fn logical_z_support(&self) -> &[Cell] {
        &self.logical_z
    }

    /// Grid neighbours `(r±1, c)`, `(r, c±1)` clipped to the grid.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let Cell { row, col } = cell;
        let up = row.checked_sub(1).map(|r| Cell::new(r, col));
        let down = (row + 1 < self.grid).then(|| Cell::new(row + 1, col));
        let left = col.checked_sub(1).map(|c| Cell::new(row, c));
        let right = (col + 1 < self.grid).then(|| Cell::new(row, col + 1));
        [up, down, left, right].into_iter().flatten()
    }

    fn check_data(&self, cell: Cell) -> Result<()> {
        if !self.contains(cell) || role_at(cell) != CellRole::Data {
            return Err(Error::NotDataCell(cell));
        }
        Ok(())
    }

    /// Stabilizer syndrome of `error`: a Z-type check flips when an odd number
    /// of its data neighbours carry X or Y, an X-type check when an odd number
    /// carry Z or Y.
    pub fn syndrome_of(&self, error: &PauliError) -> Syndrome {
        let mut syndrome = Syndrome::empty(self);
        for idx in error.x_part.ones() {
            for n in self.neighbors(self.cell(idx)) {
                if role_at(n) == CellRole::StabZ {
                    syndrome.bits.toggle(self.index(n));
                }
            }
        }
        for idx in error.z_part.ones() {
            for n in self.neighbors(self.cell(idx)) {
                if role_at(n) == CellRole::StabX {
                    syndrome.bits.toggle(self.index(n));
                }
            }
        }
        syndrome
    }

    /// Logical class of a residual that commutes with every stabilizer.
    pub fn logical_class(&self, residual: &PauliError) -> Result<LogicalClass> {
        if !self.syndrome_of(residual).is_trivial() {
            return Err(Error::NontrivialSyndrome);
        }
        Ok(self.logical_class_unchecked(residual))
    }

    /// Parity-based class without checking the syndrome first.
    pub fn logical_class_unchecked(&self, residual: &PauliError) -> LogicalClass {
        self.class_against(residual, &self.logical_x, &self.logical_z)
    }

    /// Class computed against arbitrary representatives of the logical
    /// supports. `x_rep` is the support of an X-type logical string and
    /// `z_rep` that of a Z-type one.
    pub fn class_against(&self, residual: &PauliError, x_rep: &[Cell], z_rep: &[Cell]) -> LogicalClass {
        let a = z_rep.iter().filter(|&&c| residual.x_part.get(self.index(c))).count() % 2;
        let b = x_rep.iter().filter(|&&c| residual.z_part.get(self.index(c))).count() % 2;
        LogicalClass::from_bits(a == 1, b == 1)
    }

    /// Canonical operator for a logical class (empty for `I`).
    pub fn logical_operator(&self, class: LogicalClass) -> PauliError {
        let mut op = PauliError::identity(self);
        if class.has_x() {
            for &c in &self.logical_x {
                op.x_part.toggle(self.index(c));
            }
        }
        if class.has_z() {
            for &c in &self.logical_z {
                op.z_part.toggle(self.index(c));
            }
        }
        op
    }

    /// Network input for a stack of syndromes: one channel per syndrome,
    /// measurement cells map unflipped to `+1` and flipped to `-1`, data cells
    /// stay `0`.
    pub fn encode_input(&self, stack: &[Syndrome]) -> Result<Tensor> {
        if stack.is_empty() {
            return Err(Error::EmptyStack);
        }
        let plane = self.cell_count();
        let mut data = vec![0.0; stack.len() * plane];
        for (ch, s) in stack.iter().enumerate() {
            s.check_layout(self)?;
            let base = ch * plane;
            for &cell in &self.measurement_cells {
                let idx = self.index(cell);
                data[base + idx] = if s.bits.get(idx) { -1.0 } else { 1.0 };
            }
        }
        Tensor::from_vec(vec![stack.len(), self.grid, self.grid], data)
    }
}

/// Fixed-width bit set over grid cell indices.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.ones()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_parts(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// Phase-free Pauli operator on the data qubits, stored as X and Z bit sets
/// over grid indices (`Y = X·Z`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliError {
    grid: usize,
    x_part: BitSet,
    z_part: BitSet,
}

/// A Pauli operator proposed to cancel a syndrome.
pub type Correction = PauliError;

impl PauliError {
    pub fn identity(layout: &CodeLayout) -> Self {
        let n = layout.cell_count();
        PauliError { grid: layout.grid_size(), x_part: BitSet::new(n), z_part: BitSet::new(n) }
    }

    pub fn from_cells(layout: &CodeLayout, cells: &[(Cell, Pauli)]) -> Result<Self> {
        let mut e = Self::identity(layout);
        for &(cell, p) in cells {
            e.apply(layout, cell, p)?;
        }
        Ok(e)
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    /// Multiplies `pauli` onto `cell` (group product, phases dropped).
    pub fn apply(&mut self, layout: &CodeLayout, cell: Cell, pauli: Pauli) -> Result<()> {
        layout.check_data(cell)?;
        if layout.grid_size() != self.grid {
            return Err(Error::LayoutMismatch);
        }
        let i = layout.index(cell);
        if pauli.has_x() {
            self.x_part.toggle(i);
        }
        if pauli.has_z() {
            self.z_part.toggle(i);
        }
        Ok(())
    }

    pub fn get(&self, layout: &CodeLayout, cell: Cell) -> Pauli {
        let i = layout.index(cell);
        Pauli::from_parts(self.x_part.get(i), self.z_part.get(i))
    }

    pub fn x_part(&self) -> &BitSet {
        &self.x_part
    }

    pub fn z_part(&self) -> &BitSet {
        &self.z_part
    }

    pub(crate) fn x_part_mut(&mut self) -> &mut BitSet {
        &mut self.x_part
    }

    pub(crate) fn z_part_mut(&mut self) -> &mut BitSet {
        &mut self.z_part
    }

    pub fn is_identity(&self) -> bool {
        self.x_part.is_zero() && self.z_part.is_zero()
    }

    /// Number of qubits with a non-identity Pauli.
    pub fn weight(&self) -> usize {
        let mut support = self.x_part.clone();
        for (a, b) in support.words.iter_mut().zip(&self.z_part.words) {
            *a |= b;
        }
        support.count_ones()
    }

    pub fn compose(&self, other: &PauliError) -> Result<PauliError> {
        if self.grid != other.grid {
            return Err(Error::LayoutMismatch);
        }
        let mut out = self.clone();
        out.x_part.xor_assign(&other.x_part);
        out.z_part.xor_assign(&other.z_part);
        Ok(out)
    }

    /// Non-identity entries in row-major order.
    pub fn support(&self) -> Vec<(Cell, Pauli)> {
        let mut idx: Vec<usize> = self.x_part.ones().chain(self.z_part.ones()).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter()
            .map(|i| {
                let cell = Cell::new(i / self.grid, i % self.grid);
                (cell, Pauli::from_parts(self.x_part.get(i), self.z_part.get(i)))
            })
            .collect()
    }
}

impl BitXor for &PauliError {
    type Output = PauliError;

    /// Panics on grid mismatch; use [`PauliError::compose`] for the checked form.
    fn bitxor(self, rhs: &PauliError) -> PauliError {
        self.compose(rhs).expect("composing errors from different layouts")
    }
}

/// Stabilizer outcome flips, indexed by grid cell. Only measurement cells
/// are ever set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syndrome {
    grid: usize,
    bits: BitSet,
}

impl Syndrome {
    pub fn empty(layout: &CodeLayout) -> Self {
        Syndrome { grid: layout.grid_size(), bits: BitSet::new(layout.cell_count()) }
    }

    pub fn from_flipped(layout: &CodeLayout, cells: &[Cell]) -> Result<Self> {
        let mut s = Self::empty(layout);
        for &cell in cells {
            if !layout.contains(cell) || role_at(cell) == CellRole::Data {
                return Err(Error::NotMeasurementCell(cell));
            }
            s.bits.toggle(layout.index(cell));
        }
        Ok(s)
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn is_flipped(&self, layout: &CodeLayout, cell: Cell) -> bool {
        self.bits.get(layout.index(cell))
    }

    pub(crate) fn toggle_index(&mut self, i: usize) {
        self.bits.toggle(i);
    }

    pub fn is_trivial(&self) -> bool {
        self.bits.is_zero()
    }

    pub fn flipped_count(&self) -> usize {
        self.bits.count_ones()
    }

    /// Flipped cells in row-major order.
    pub fn flipped(&self) -> Vec<Cell> {
        self.bits.ones().map(|i| Cell::new(i / self.grid, i % self.grid)).collect()
    }

    pub fn xor(&self, other: &Syndrome) -> Result<Syndrome> {
        if self.grid != other.grid {
            return Err(Error::LayoutMismatch);
        }
        let mut out = self.clone();
        out.bits.xor_assign(&other.bits);
        Ok(out)
    }

    pub(crate) fn check_layout(&self, layout: &CodeLayout) -> Result<()> {
        if self.grid != layout.grid_size() {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }
}

/// Logical action of a trivial-syndrome residual. Wire codes are
/// `I=0, X=1, Z=2, Y=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicalClass {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl LogicalClass {
    pub const ALL: [LogicalClass; 4] = [LogicalClass::I, LogicalClass::X, LogicalClass::Z, LogicalClass::Y];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => LogicalClass::I,
            (true, false) => LogicalClass::X,
            (false, true) => LogicalClass::Z,
            (true, true) => LogicalClass::Y,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(LogicalClass::I),
            1 => Ok(LogicalClass::X),
            2 => Ok(LogicalClass::Z),
            3 => Ok(LogicalClass::Y),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn has_x(self) -> bool {
        matches!(self, LogicalClass::X | LogicalClass::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, LogicalClass::Z | LogicalClass::Y)
    }

    /// Klein four-group product.
    pub fn compose(self, other: LogicalClass) -> LogicalClass {
        LogicalClass::from_bits(self.has_x() ^ other.has_x(), self.has_z() ^ other.has_z())
    }

    pub fn name(self) -> &'static str {
        match self {
            LogicalClass::I => "I",
            LogicalClass::X => "X",
            LogicalClass::Z => "Z",
            LogicalClass::Y => "Y",
        }
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LogicalClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(LogicalClass::I),
            "X" | "x" => Ok(LogicalClass::X),
            "Z" | "z" => Ok(LogicalClass::Z),
            "Y" | "y" => Ok(LogicalClass::Y),
            _ => Err(Error::Parse(format!("unknown logical class {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(d: usize) -> CodeLayout {
        CodeLayout::new(d).unwrap()
    }

    fn x_at(l: &CodeLayout, cells: &[(usize, usize)]) -> PauliError {
        let v: Vec<_> = cells.iter().map(|&c| (Cell::from(c), Pauli::X)).collect();
        PauliError::from_cells(l, &v).unwrap()
    }

    #[test]
    fn layout_counts() {
        let l = layout(3);
        assert_eq!(l.grid_size(), 5);
        assert_eq!(l.data_cells().len(), 13);
        assert_eq!(l.stab_x_cells().len(), 6);
        assert_eq!(l.stab_z_cells().len(), 6);
        assert_eq!(layout(7).grid_size(), 13);
        for d in (3..=25).step_by(2) {
            let l = layout(d);
            assert_eq!(l.data_cells().len(), d * d + (d - 1) * (d - 1));
            assert_eq!(l.stab_x_cells().len(), d * (d - 1));
            assert_eq!(l.stab_z_cells().len(), d * (d - 1));
            assert_eq!(l.logical_x_support().len(), d);
            assert_eq!(l.logical_z_support().len(), d);
        }
    }

    #[test]
    fn rejects_bad_distance() {
        for d in [0, 1, 2, 4, 8, 26, 27] {
            assert!(CodeLayout::new(d).is_err(), "d={d}");
        }
    }

    #[test]
    fn logical_x_support_d5() {
        let want: Vec<Cell> = [(0, 0), (2, 0), (4, 0), (6, 0), (8, 0)].map(Cell::from).to_vec();
        assert_eq!(layout(5).logical_x_support(), &want[..]);
    }

    #[test]
    fn single_x_and_y_syndromes() {
        let l = layout(3);
        assert!(l.syndrome_of(&PauliError::identity(&l)).is_trivial());
        let s = l.syndrome_of(&x_at(&l, &[(2, 2)]));
        assert_eq!(s.flipped(), vec![Cell::new(1, 2), Cell::new(3, 2)]);
        let y = PauliError::from_cells(&l, &[(Cell::new(2, 2), Pauli::Y)]).unwrap();
        let s = l.syndrome_of(&y);
        assert_eq!(s.flipped(), vec![Cell::new(1, 2), Cell::new(2, 1), Cell::new(2, 3), Cell::new(3, 2)]);
    }

    #[test]
    fn border_x_flips_one_check() {
        let l = layout(5);
        // (0,2) touches the top border; (4,4) is interior.
        assert_eq!(l.syndrome_of(&x_at(&l, &[(0, 2)])).flipped_count(), 1);
        assert_eq!(l.syndrome_of(&x_at(&l, &[(8, 4)])).flipped_count(), 1);
        assert_eq!(l.syndrome_of(&x_at(&l, &[(4, 4)])).flipped_count(), 2);
        assert_eq!(l.syndrome_of(&x_at(&l, &[(3, 3)])).flipped_count(), 2);
    }

    #[test]
    fn logical_classes() {
        let l = layout(5);
        assert_eq!(l.logical_class(&PauliError::identity(&l)).unwrap(), LogicalClass::I);
        let xs: Vec<_> = l.logical_x_support().iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(l.logical_class(&x_at(&l, &xs)).unwrap(), LogicalClass::X);
        for c in LogicalClass::ALL {
            assert_eq!(l.logical_class(&l.logical_operator(c)).unwrap(), c);
        }
        assert!(l.logical_class(&x_at(&l, &[(4, 4)])).is_err());
    }

    #[test]
    fn z_stabilizer_is_trivial() {
        let l = layout(5);
        for &s in l.stab_z_cells() {
            let cells: Vec<_> = l.neighbors(s).map(|c| (c, Pauli::Z)).collect();
            let e = PauliError::from_cells(&l, &cells).unwrap();
            assert_eq!(l.logical_class(&e).unwrap(), LogicalClass::I, "stabilizer at {s}");
        }
    }

    #[test]
    fn compose_table() {
        let l = layout(3);
        let x = PauliError::from_cells(&l, &[(Cell::new(0, 0), Pauli::X)]).unwrap();
        let z = PauliError::from_cells(&l, &[(Cell::new(0, 0), Pauli::Z)]).unwrap();
        assert!(x.compose(&x).unwrap().is_identity());
        assert_eq!(x.compose(&z).unwrap().get(&l, Cell::new(0, 0)), Pauli::Y);
        let z2 = PauliError::from_cells(&l, &[(Cell::new(2, 0), Pauli::Z)]).unwrap();
        assert_eq!(x.compose(&z2).unwrap().support(), vec![(Cell::new(0, 0), Pauli::X), (Cell::new(2, 0), Pauli::Z)]);
        let other = PauliError::identity(&layout(5));
        assert!(x.compose(&other).is_err());
    }

    #[test]
    fn rejects_non_data_cells() {
        let l = layout(3);
        assert!(PauliError::from_cells(&l, &[(Cell::new(0, 1), Pauli::X)]).is_err());
        assert!(PauliError::from_cells(&l, &[(Cell::new(5, 0), Pauli::X)]).is_err());
    }

    #[test]
    fn encode_shapes() {
        let l = layout(3);
        let t = l.encode_input(&[Syndrome::empty(&l)]).unwrap();
        assert_eq!(t.shape(), &[1, 5, 5]);
        assert_eq!(t.data().iter().filter(|&&v| v == 1.0).count(), 12);
        assert_eq!(t.data().iter().filter(|&&v| v == 0.0).count(), 13);
        let s = l.syndrome_of(&x_at(&l, &[(2, 2)]));
        let t = l.encode_input(&[s.clone(), s.clone(), s.clone(), s]).unwrap();
        assert_eq!(t.shape(), &[4, 5, 5]);
        assert_eq!(t.data()[l.index(Cell::new(1, 2))], -1.0);
        assert!(l.encode_input(&[]).is_err());
    }

    #[test]
    fn class_group_is_klein() {
        for a in LogicalClass::ALL {
            assert_eq!(a.compose(a), LogicalClass::I);
            assert_eq!(a.compose(LogicalClass::I), a);
            for b in LogicalClass::ALL {
                assert_eq!(a.compose(b), b.compose(a));
            }
        }
        assert_eq!(LogicalClass::X.compose(LogicalClass::Z), LogicalClass::Y);
    }
}
