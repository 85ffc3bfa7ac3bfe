use proptest::prelude::*;
use qeclab::dataset::{generate, Dataset};
use qeclab::decode::{brute_force_matching, build_matching_graph, extract_defects, min_weight_matching, mwpm_decode, simple_decode, Species};
use qeclab::noise::NoiseModel;
use qeclab::{CodeLayout, LogicalClass, Pauli, PauliError};

fn error_strategy() -> impl Strategy<Value = (usize, Vec<u8>)> {
    prop_oneof![Just(3usize), Just(5), Just(7)].prop_flat_map(|d| {
        let n = d * d + (d - 1) * (d - 1);
        (Just(d), proptest::collection::vec(0u8..4, n))
    })
}

fn build(d: usize, paulis: &[u8]) -> (CodeLayout, PauliError) {
    let layout = CodeLayout::new(d).unwrap();
    let mut e = PauliError::identity(&layout);
    for (&cell, &p) in layout.data_cells().to_vec().iter().zip(paulis) {
        let pauli = match p {
            1 => Pauli::X,
            2 => Pauli::Z,
            3 => Pauli::Y,
            _ => continue,
        };
        e.apply(&layout, cell, pauli).unwrap();
    }
    (layout, e)
}

fn sparse(paulis: Vec<u8>, keep: usize) -> Vec<u8> {
    paulis.into_iter().enumerate().map(|(i, p)| if i % keep == 0 { p } else { 0 }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn syndrome_is_linear((d, a) in error_strategy(), b in proptest::collection::vec(0u8..4, 85)) {
        let (layout, ea) = build(d, &a);
        let (_, eb) = build(d, &b);
        let lhs = layout.syndrome_of(&ea.compose(&eb).unwrap());
        let rhs = layout.syndrome_of(&ea).xor(&layout.syndrome_of(&eb)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn decoders_neutralize((d, a) in error_strategy()) {
        let (layout, e) = build(d, &a);
        let s = layout.syndrome_of(&e);
        for c in [simple_decode(&layout, &s), mwpm_decode(&layout, &s)] {
            prop_assert_eq!(layout.syndrome_of(&c), s.clone());
        }
    }

    #[test]
    fn class_independent_of_representative((d, a) in error_strategy()) {
        // Neutralized residuals commute with every stabilizer, so their class
        // is the same against any choice of logical representatives.
        let (layout, e) = build(d, &a);
        let residual = e.compose(&simple_decode(&layout, &layout.syndrome_of(&e))).unwrap();
        let g = layout.grid_size();
        let last = g - 1;
        let x_rep: Vec<_> = (0..g).step_by(2).map(|r| qeclab::Cell::new(r, last)).collect();
        let z_rep: Vec<_> = (0..g).step_by(2).map(|c| qeclab::Cell::new(last, c)).collect();
        prop_assert_eq!(layout.class_against(&residual, &x_rep, &z_rep), layout.logical_class(&residual).unwrap());
    }

    #[test]
    fn logical_operators_have_their_class(code in 0u8..4) {
        let layout = CodeLayout::new(5).unwrap();
        let class = LogicalClass::from_code(code).unwrap();
        let op = layout.logical_operator(class);
        prop_assert!(layout.syndrome_of(&op).is_trivial());
        prop_assert_eq!(layout.logical_class(&op).unwrap(), class);
    }

    #[test]
    fn matching_agrees_with_enumeration(a in proptest::collection::vec(0u8..4, 41)) {
        let (layout, e) = build(5, &sparse(a, 3));
        let defects = extract_defects(&layout.syndrome_of(&e));
        for species in [Species::Z, Species::X] {
            let cells = defects.species(species);
            prop_assume!(cells.len() <= 10);
            let g = build_matching_graph(&layout, cells, species).unwrap();
            prop_assert_eq!(min_weight_matching(&g).total_weight, brute_force_matching(&g).unwrap().total_weight);
        }
    }
}

#[test]
fn dataset_bytes_round_trip() {
    let layout = CodeLayout::new(3).unwrap();
    for noise in [NoiseModel::depolarizing(0.1).unwrap(), NoiseModel::phenomenological(0.05, 0.05, 3).unwrap()] {
        let data = generate(&layout, &noise, 300, 9).unwrap();
        let mut bytes = Vec::new();
        data.write_to(&mut bytes).unwrap();
        let back = Dataset::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 300);
        for i in 0..300 {
            assert_eq!(back.record(i), data.record(i));
        }
        let mut again = Vec::new();
        generate(&layout, &noise, 300, 9).unwrap().write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
    }
}
