//! Classical decoders: nearest-border ("simple") and exact minimum-weight
//! perfect matching.

pub mod blossom;
pub mod matching;

use serde::{Deserialize, Serialize};

pub use matching::{
    boundary_distance, brute_force_matching, build_matching_graph, min_weight_matching, MatchingGraph, MatchingSolution,
    Partner, Species, BRUTE_FORCE_LIMIT,
};

use crate::error::Result;
use crate::lattice::{role_at, Cell, CellRole, CodeLayout, Correction, PauliError, Syndrome};

/// Flipped checks of a syndrome, split by species.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectSet {
    pub z_defects: Vec<Cell>,
    pub x_defects: Vec<Cell>,
}

impl DefectSet {
    pub fn species(&self, species: Species) -> &[Cell] {
        match species {
            Species::Z => &self.z_defects,
            Species::X => &self.x_defects,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.z_defects.is_empty() && self.x_defects.is_empty()
    }
}

pub fn extract_defects(syndrome: &Syndrome) -> DefectSet {
    let mut set = DefectSet::default();
    for cell in syndrome.flipped() {
        match role_at(cell) {
            CellRole::StabZ => set.z_defects.push(cell),
            CellRole::StabX => set.x_defects.push(cell),
            CellRole::Data => unreachable!("syndromes never flag data cells"),
        }
    }
    set
}

/// Toggles the correcting Pauli of `species` on a data cell: X corrections
/// for Z-type defects, Z corrections for X-type defects.
fn flip(layout: &CodeLayout, out: &mut PauliError, species: Species, data: Cell) {
    let i = layout.index(data);
    match species {
        Species::Z => out.x_part_mut().toggle(i),
        Species::X => out.z_part_mut().toggle(i),
    }
}

/// Straight chain from a defect to its nearest absorbing border
/// (ties go to the top, respectively left, border).
fn chain_to_border(layout: &CodeLayout, out: &mut PauliError, species: Species, defect: Cell) {
    let g = layout.grid_size();
    let (coord, fixed) = match species {
        Species::Z => (defect.row, defect.col),
        Species::X => (defect.col, defect.row),
    };
    let up = (coord + 1) / 2;
    let down = (g - coord) / 2;
    let steps: Box<dyn Iterator<Item = usize>> = if up <= down {
        Box::new((0..coord).rev().step_by(2))
    } else {
        Box::new((coord + 1..g).step_by(2))
    };
    for k in steps {
        let cell = match species {
            Species::Z => Cell::new(k, fixed),
            Species::X => Cell::new(fixed, k),
        };
        flip(layout, out, species, cell);
    }
}

/// L-shaped chain between two same-species defects: vertical leg along
/// `a`'s column first, then horizontal along `b`'s row.
fn chain_between(layout: &CodeLayout, out: &mut PauliError, species: Species, a: Cell, b: Cell) {
    let (r0, r1) = (a.row.min(b.row), a.row.max(b.row));
    for r in (r0 + 1..r1).step_by(2) {
        flip(layout, out, species, Cell::new(r, a.col));
    }
    let (c0, c1) = (a.col.min(b.col), a.col.max(b.col));
    for c in (c0 + 1..c1).step_by(2) {
        flip(layout, out, species, Cell::new(b.row, c));
    }
}

/// Nearest-border decoder: every defect is joined to its closest
/// absorbing border by a straight chain.
pub fn simple_decode(layout: &CodeLayout, syndrome: &Syndrome) -> Correction {
    let defects = extract_defects(syndrome);
    let mut out = PauliError::identity(layout);
    for species in [Species::Z, Species::X] {
        for &d in defects.species(species) {
            chain_to_border(layout, &mut out, species, d);
        }
    }
    out
}

/// Correction together with the matching weight of each species.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MwpmOutcome {
    pub correction: Correction,
    pub z_weight: u64,
    pub x_weight: u64,
}

/// Minimum-weight perfect matching decoder. Species are matched
/// independently.
pub fn mwpm_decode(layout: &CodeLayout, syndrome: &Syndrome) -> Correction {
    mwpm_decode_detailed(layout, syndrome).expect("syndrome defects always match their species").correction
}

pub fn mwpm_decode_detailed(layout: &CodeLayout, syndrome: &Syndrome) -> Result<MwpmOutcome> {
    let defects = extract_defects(syndrome);
    let mut correction = PauliError::identity(layout);
    let mut weights = [0u64; 2];
    for (slot, species) in [Species::Z, Species::X].into_iter().enumerate() {
        let graph = build_matching_graph(layout, defects.species(species), species)?;
        let solution = min_weight_matching(&graph);
        realize(layout, &graph, &solution, &mut correction);
        weights[slot] = solution.total_weight;
    }
    Ok(MwpmOutcome { correction, z_weight: weights[0], x_weight: weights[1] })
}

/// Writes the chains of a matching onto `out`.
pub fn realize(layout: &CodeLayout, graph: &MatchingGraph, solution: &MatchingSolution, out: &mut PauliError) {
    for &(i, partner) in &solution.pairs {
        let a = graph.defects[i];
        match partner {
            Partner::Boundary => chain_to_border(layout, out, graph.species, a),
            Partner::Defect(j) => chain_between(layout, out, graph.species, a, graph.defects[j]),
        }
    }
}

/// Decoders usable without a trained model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalDecoder {
    Simple,
    Mwpm,
}

impl ClassicalDecoder {
    pub fn decode(self, layout: &CodeLayout, syndrome: &Syndrome) -> Correction {
        match self {
            ClassicalDecoder::Simple => simple_decode(layout, syndrome),
            ClassicalDecoder::Mwpm => mwpm_decode(layout, syndrome),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LogicalClass, Pauli};
    use crate::noise::{sample_depolarizing, DepolarizingParams, SeedSpec};

    fn layout(d: usize) -> CodeLayout {
        CodeLayout::new(d).unwrap()
    }

    fn single(l: &CodeLayout, cell: (usize, usize), p: Pauli) -> PauliError {
        PauliError::from_cells(l, &[(Cell::from(cell), p)]).unwrap()
    }

    #[test]
    fn defects_of_examples() {
        let l = layout(3);
        assert!(extract_defects(&Syndrome::empty(&l)).is_empty());
        let d = extract_defects(&l.syndrome_of(&single(&l, (2, 2), Pauli::X)));
        assert_eq!(d.z_defects, vec![Cell::new(1, 2), Cell::new(3, 2)]);
        assert!(d.x_defects.is_empty());
        let d = extract_defects(&l.syndrome_of(&single(&l, (2, 2), Pauli::Y)));
        assert_eq!(d.z_defects.len(), 2);
        assert_eq!(d.x_defects.len(), 2);
    }

    #[test]
    fn simple_decoder_chain_to_top() {
        let l = layout(3);
        assert!(simple_decode(&l, &Syndrome::empty(&l)).is_identity());
        let s = Syndrome::from_flipped(&l, &[Cell::new(1, 2)]).unwrap();
        let c = simple_decode(&l, &s);
        assert_eq!(c.support(), vec![(Cell::new(0, 2), Pauli::X)]);
        // X defect at (2,1): left distance 1, right 2.
        let s = Syndrome::from_flipped(&l, &[Cell::new(2, 1)]).unwrap();
        assert_eq!(simple_decode(&l, &s).support(), vec![(Cell::new(2, 0), Pauli::Z)]);
    }

    #[test]
    fn simple_decoder_lower_half_goes_down() {
        let l = layout(5);
        // Z check at row 5 of 9: up 3, down 2.
        let s = Syndrome::from_flipped(&l, &[Cell::new(5, 4)]).unwrap();
        let c = simple_decode(&l, &s);
        assert_eq!(c.support(), vec![(Cell::new(6, 4), Pauli::X), (Cell::new(8, 4), Pauli::X)]);
        assert_eq!(l.syndrome_of(&c), s);
        // Z check at row 3: up 2, down 3.
        let s = Syndrome::from_flipped(&l, &[Cell::new(3, 4)]).unwrap();
        let c = simple_decode(&l, &s);
        assert_eq!(c.support(), vec![(Cell::new(0, 4), Pauli::X), (Cell::new(2, 4), Pauli::X)]);
    }

    #[test]
    fn mwpm_prefers_pair() {
        let l = layout(3);
        assert!(mwpm_decode(&l, &Syndrome::empty(&l)).is_identity());
        let s = Syndrome::from_flipped(&l, &[Cell::new(1, 2), Cell::new(3, 2)]).unwrap();
        let out = mwpm_decode_detailed(&l, &s).unwrap();
        assert_eq!(out.z_weight, 1);
        assert_eq!(out.correction.support(), vec![(Cell::new(2, 2), Pauli::X)]);
    }

    #[test]
    fn both_decoders_neutralize_random_syndromes() {
        for d in [3, 5, 7] {
            let l = layout(d);
            for p in [0.05, 0.15] {
                let params = DepolarizingParams::new(p).unwrap();
                for i in 0..500 {
                    let e = sample_depolarizing(&l, params, SeedSpec::new(21), i);
                    let s = l.syndrome_of(&e);
                    assert_eq!(l.syndrome_of(&simple_decode(&l, &s)), s);
                    let out = mwpm_decode_detailed(&l, &s).unwrap();
                    assert_eq!(l.syndrome_of(&out.correction), s);
                    // Overlapping chains can only cancel flips.
                    let x_flips = out.correction.x_part().count_ones() as u64;
                    let z_flips = out.correction.z_part().count_ones() as u64;
                    assert!(x_flips <= out.z_weight && z_flips <= out.x_weight);
                }
            }
        }
    }

    #[test]
    fn short_chains_are_corrected() {
        // Every straight X or Z chain of length <= (d-1)/2 decodes to I.
        for d in [5, 7] {
            let l = layout(d);
            let max_len = (d - 1) / 2;
            let g = l.grid_size();
            for len in 1..=max_len {
                for line in 0..g {
                    for start in 0..g {
                        for (vertical, pauli) in [(true, Pauli::X), (false, Pauli::X), (true, Pauli::Z), (false, Pauli::Z)] {
                            let cells: Vec<Cell> = (0..len)
                                .map(|k| if vertical { Cell::new(start + 2 * k, line) } else { Cell::new(line, start + 2 * k) })
                                .collect();
                            if cells.iter().any(|&c| !l.contains(c) || role_at(c) != CellRole::Data) {
                                continue;
                            }
                            let e = PauliError::from_cells(&l, &cells.iter().map(|&c| (c, pauli)).collect::<Vec<_>>()).unwrap();
                            let s = l.syndrome_of(&e);
                            let residual = e.compose(&mwpm_decode(&l, &s)).unwrap();
                            assert_eq!(l.logical_class(&residual).unwrap(), LogicalClass::I, "d={d} {cells:?} {pauli:?}");
                        }
                    }
                }
            }
        }
    }
}
