mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coproduct_relations_hold(spec in instance_spec()) {
        check_relations(&spec)?;
    }

    #[test]
    fn intermediate_generator_trace_and_norm(q in prop::sample::select(vec![3u64, 5, 7, 9]), k2 in 1u8..3, tw in any::<bool>()) {
        check_over_f(q, k2, tw)?;
    }

    #[test]
    fn stored_intermediate_generator(spec in instance_spec()) {
        check_stored_intermediate(&spec)?;
    }

    #[test]
    fn partner_round_trips_through_w_and_z(spec in instance_spec()) {
        check_round_trip(&spec)?;
    }

    #[test]
    fn transfer_exponent_is_a_character(
        spec in instance_spec(),
        g in (block_params(), block_params()),
        h in (block_params(), block_params()),
    ) {
        check_character(&spec, g, h)?;
    }

    #[test]
    fn index_is_a_cocycle(
        a in lattice_params(),
        b in prop::collection::vec(-2i32..4, 3),
        c in prop::collection::vec(-2i32..4, 3),
    ) {
        check_cocycle(a, b, c)?;
    }

    #[test]
    fn hermite_form_is_canonical(a in lattice_params(), extra in prop::collection::vec(0usize..81, 1..6)) {
        check_hermite(a, extra)?;
    }

    #[test]
    fn sublattices_by_multiplier_ring(q in prop::sample::select(vec![3u64, 5]), kind in 0u8..2, n in 0u32..4) {
        check_sublattice_counts(q, kind, n)?;
    }

    #[test]
    fn unit_index_by_enumeration(q in prop::sample::select(vec![3u64, 5]), kind in 0u8..3, n in 1u32..=3) {
        check_unit_index(q, kind, n)?;
    }

    #[test]
    fn matching_invariant_is_conjugation_invariant(
        spec in instance_spec(),
        g in (block_params(), block_params()),
    ) {
        check_conjugation_invariance(&spec, g)?;
    }
}
