mod common;

use common::*;
use orbfl::base_rings::Series;
use orbfl::linalg::Matrix;

const FUNCTIONS: [&str; 3] = ["0,1", "0,1,1", "1"];

#[test]
fn submodule_listing_has_the_expected_size() {
    // by length: 1, q + 1, 1 + q(q + 1), q + 1, 1 over F_3
    let amb = chains::Ambient::new(3);
    assert_eq!(amb.all_submodules().len(), 23);
}

#[test]
fn hecke_matches_chains_on_standard_lattice() {
    let f = field(3);
    let id = Matrix::identity_like(2, &Series::one(f, PREC));
    for h in FUNCTIONS {
        assert_eq!(check_hecke_against_chains(h, &id).unwrap(), 23);
    }
}

#[test]
fn hecke_matches_chains_after_translation() {
    let f = field(3);
    for (a, b, x, swap) in [(0, 1, vec![1], false), (1, 0, vec![2, 1], true), (-1, 2, vec![], false)] {
        let g = random_block(f, a, b, &x, swap);
        for h in FUNCTIONS {
            check_hecke_against_chains(h, &g).unwrap();
        }
    }
}
