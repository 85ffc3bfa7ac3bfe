//! Matching graphs for one stabilizer species and their exact solvers.

use serde::{Deserialize, Serialize};

use super::blossom::max_weight_matching;
use crate::error::{Error, Result};
use crate::lattice::{role_at, Cell, CellRole, CodeLayout};

/// Which checks are being matched. Z-type defects come from X errors and
/// are absorbed by the top/bottom borders; X-type defects come from Z errors
/// and are absorbed by the left/right borders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Z,
    X,
}

impl Species {
    pub fn role(self) -> CellRole {
        match self {
            Species::Z => CellRole::StabZ,
            Species::X => CellRole::StabX,
        }
    }
}

/// Endpoint of a matched pair: another defect or the defect's own virtual
/// boundary node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Partner {
    Defect(usize),
    Boundary,
}

/// Defects of one species plus one virtual boundary node per defect.
///
/// Node `i < n` is defect `i`; node `n + i` is the boundary copy of defect
/// `i`. Boundary copies are mutually connected at weight 0, so an even node
/// count and a perfect matching always exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingGraph {
    pub species: Species,
    pub defects: Vec<Cell>,
    pair_weights: Vec<u32>,
    boundary_weights: Vec<u32>,
}

impl MatchingGraph {
    pub fn defect_count(&self) -> usize {
        self.defects.len()
    }

    pub fn node_count(&self) -> usize {
        2 * self.defects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }

    /// Chain length between two defects.
    pub fn pair_weight(&self, i: usize, j: usize) -> u32 {
        self.pair_weights[i * self.defects.len() + j]
    }

    /// Chain length from a defect to its nearest absorbing border.
    pub fn boundary_weight(&self, i: usize) -> u32 {
        self.boundary_weights[i]
    }

    /// Weight between arbitrary nodes of the full graph.
    pub fn weight(&self, u: usize, v: usize) -> u32 {
        let n = self.defects.len();
        match (u < n, v < n) {
            (true, true) => self.pair_weight(u, v),
            (false, false) => 0,
            (true, false) => {
                if v - n == u {
                    self.boundary_weight(u)
                } else {
                    // A defect may only reach the border through its own copy.
                    u32::MAX
                }
            }
            (false, true) => self.weight(v, u),
        }
    }
}

/// Distance in data qubits from a check to the nearest absorbing border.
pub fn boundary_distance(layout: &CodeLayout, species: Species, cell: Cell) -> u32 {
    let g = layout.grid_size();
    let coord = match species {
        Species::Z => cell.row,
        Species::X => cell.col,
    };
    let near = (coord + 1) / 2;
    let far = (g - coord) / 2;
    near.min(far) as u32
}

pub fn build_matching_graph(layout: &CodeLayout, defects: &[Cell], species: Species) -> Result<MatchingGraph> {
    for &c in defects {
        if !layout.contains(c) || role_at(c) != species.role() {
            return Err(Error::WrongSpecies(c));
        }
    }
    let n = defects.len();
    let mut pair_weights = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (defects[i], defects[j]);
            pair_weights[i * n + j] = ((a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) / 2) as u32;
        }
    }
    let boundary_weights = defects.iter().map(|&c| boundary_distance(layout, species, c)).collect();
    Ok(MatchingGraph { species, defects: defects.to_vec(), pair_weights, boundary_weights })
}

/// Pairing of every defect, plus its total weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingSolution {
    /// `(i, Partner)` entries, each defect listed once; defect pairs appear
    /// with the smaller index first.
    pub pairs: Vec<(usize, Partner)>,
    pub total_weight: u64,
}

fn solution_from_partners(graph: &MatchingGraph, partner: &[Partner]) -> MatchingSolution {
    let mut pairs = Vec::new();
    let mut total = 0u64;
    for (i, &p) in partner.iter().enumerate() {
        match p {
            Partner::Boundary => {
                total += graph.boundary_weight(i) as u64;
                pairs.push((i, p));
            }
            Partner::Defect(j) if j > i => {
                total += graph.pair_weight(i, j) as u64;
                pairs.push((i, p));
            }
            Partner::Defect(_) => {}
        }
    }
    MatchingSolution { pairs, total_weight: total }
}

/// Exact minimum-weight perfect matching.
///
/// Each defect either pairs with another or exits through its boundary
/// copy. Pairing `i` with `j` saves `b_i + b_j - w_ij` relative to sending
/// both to the border, so the minimum perfect matching is the maximum-saving
/// matching on the defects alone.
pub fn min_weight_matching(graph: &MatchingGraph) -> MatchingSolution {
    let n = graph.defect_count();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let saving = graph.boundary_weight(i) as i64 + graph.boundary_weight(j) as i64 - graph.pair_weight(i, j) as i64;
            if saving > 0 {
                edges.push((i, j, saving));
            }
        }
    }
    let mate = max_weight_matching(n, &edges, false);
    let partner: Vec<Partner> = (0..n)
        .map(|i| match mate.get(i).copied().flatten() {
            Some(j) => Partner::Defect(j),
            None => Partner::Boundary,
        })
        .collect();
    solution_from_partners(graph, &partner)
}

/// Largest defect count the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Exhaustive minimum over all pairings (each defect to another defect or
/// to the border). Independent of the blossom solver; used as its oracle.
pub fn brute_force_matching(graph: &MatchingGraph) -> Result<MatchingSolution> {
    let n = graph.defect_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(n));
    }
    let mut current = vec![Partner::Boundary; n];
    let mut best = current.clone();
    let mut best_weight = u64::MAX;
    let mut used = vec![false; n];
    fn recurse(
        g: &MatchingGraph,
        used: &mut [bool],
        current: &mut [Partner],
        weight: u64,
        best: &mut Vec<Partner>,
        best_weight: &mut u64,
    ) {
        if weight >= *best_weight {
            return;
        }
        let Some(i) = used.iter().position(|&u| !u) else {
            *best_weight = weight;
            best.copy_from_slice(current);
            return;
        };
        used[i] = true;
        current[i] = Partner::Boundary;
        recurse(g, used, current, weight + g.boundary_weight(i) as u64, best, best_weight);
        for j in i + 1..used.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            current[i] = Partner::Defect(j);
            current[j] = Partner::Defect(i);
            recurse(g, used, current, weight + g.pair_weight(i, j) as u64, best, best_weight);
            used[j] = false;
        }
        used[i] = false;
    }
    recurse(graph, &mut used, &mut current, 0, &mut best, &mut best_weight);
    if n == 0 {
        best_weight = 0;
    }
    let sol = solution_from_partners(graph, &best);
    debug_assert_eq!(sol.total_weight, best_weight);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_d3() {
        let l = CodeLayout::new(3).unwrap();
        let g = build_matching_graph(&l, &[Cell::new(1, 2), Cell::new(3, 2)], Species::Z).unwrap();
        assert_eq!(g.pair_weight(0, 1), 1);
        assert_eq!(g.boundary_weight(0), 1);
        assert_eq!(g.boundary_weight(1), 1);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.weight(2, 3), 0);
        assert_eq!(brute_force_matching(&g).unwrap().total_weight, 1);
        assert_eq!(min_weight_matching(&g).total_weight, 1);
        let empty = build_matching_graph(&l, &[], Species::Z).unwrap();
        assert!(empty.is_empty());
        assert_eq!(brute_force_matching(&empty).unwrap().total_weight, 0);
        assert_eq!(min_weight_matching(&empty).total_weight, 0);
    }

    #[test]
    fn boundary_distances() {
        let l = CodeLayout::new(5).unwrap();
        // Z checks on odd rows: (r+1)/2 up, (2d-1-r)/2 down.
        assert_eq!(boundary_distance(&l, Species::Z, Cell::new(1, 0)), 1);
        assert_eq!(boundary_distance(&l, Species::Z, Cell::new(3, 4)), 2);
        assert_eq!(boundary_distance(&l, Species::Z, Cell::new(5, 4)), 2);
        assert_eq!(boundary_distance(&l, Species::Z, Cell::new(7, 2)), 1);
        assert_eq!(boundary_distance(&l, Species::X, Cell::new(4, 3)), 2);
        assert_eq!(boundary_distance(&l, Species::X, Cell::new(0, 7)), 1);
    }

    #[test]
    fn wrong_species_rejected() {
        let l = CodeLayout::new(3).unwrap();
        assert!(build_matching_graph(&l, &[Cell::new(0, 1)], Species::Z).is_err());
        assert!(build_matching_graph(&l, &[Cell::new(0, 0)], Species::X).is_err());
        assert!(build_matching_graph(&l, &[Cell::new(9, 1)], Species::X).is_err());
    }

    #[test]
    fn brute_force_size_limit() {
        let l = CodeLayout::new(9).unwrap();
        let cells: Vec<Cell> = l.stab_z_cells().iter().copied().take(BRUTE_FORCE_LIMIT + 1).collect();
        let g = build_matching_graph(&l, &cells, Species::Z).unwrap();
        assert!(matches!(brute_force_matching(&g), Err(Error::TooLarge(13))));
    }
}
