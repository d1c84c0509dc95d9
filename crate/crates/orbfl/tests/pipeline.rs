//! End-to-end runs through generation, serialization and the verifiers.

use orbfl::biquadratic_core::{matching_invariant, same_invariant, Side};
use orbfl::closed_forms::{verify_afl, verify_fl, PredictionSource, Regime, Verdict};
use orbfl::instance::{generate, Generated, InstanceSpec};
use orbfl::lattice_engine::DEFAULT_GUARD;
use orbfl::orbital_integrals::{orbital_analytic, HeckeFunction};
use orbfl::quadratic_algebras::{conductor, AlgKind};
use orbfl::reduction::{reduced_wz, shift_pair, verify_orbit_reduction, ReductionError};

fn spec(regime: Regime, l: AlgKind, r: u32, v: Option<u32>, seed: u64) -> InstanceSpec {
    InstanceSpec::new(3, regime, l, r, v, seed)
}

#[test]
fn generated_conductor_is_recomputed() {
    let mut s = spec(Regime::SmallW, AlgKind::Unramified, 2, None, 7);
    s.k2_kind = Some(AlgKind::Ramified);
    let g = generate(&s).unwrap();
    assert_eq!(conductor(&g.instance.w).unwrap(), 2);
    assert_eq!(g.instance.r, 2);
}

#[test]
fn json_survives_a_round_trip() {
    for s in [
        spec(Regime::SmallW, AlgKind::Ramified, 1, None, 3),
        spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(4), 9),
        spec(Regime::UnitW, AlgKind::Unramified, 2, None, 11),
    ] {
        let g = generate(&s).unwrap();
        let text = g.to_json();
        let back = Generated::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        let p1 = orbital_analytic(&g.instance, &HeckeFunction::unit(), DEFAULT_GUARD).unwrap();
        let p2 = orbital_analytic(&back.instance, &HeckeFunction::unit(), DEFAULT_GUARD).unwrap();
        assert_eq!(p1, p2);
    }
}

#[test]
fn tampered_file_is_rejected() {
    let g = generate(&spec(Regime::SmallW, AlgKind::Unramified, 1, None, 1)).unwrap();
    let mut file = g.to_file();
    file.r = 3;
    let text = serde_json::to_string(&file).unwrap();
    assert!(Generated::from_json(&text).is_err());
    let bad_version = g.to_json().replace("orbfl-instance/1", "orbfl-instance/0");
    assert!(Generated::from_json(&bad_version).is_err());
}

#[test]
fn matched_sides_share_the_invariant() {
    for l in [AlgKind::Unramified, AlgKind::Ramified] {
        let g = generate(&spec(Regime::SmallW, l, 1, None, 5)).unwrap();
        let a = matching_invariant(&g.instance.analytic).unwrap();
        let b = matching_invariant(&g.instance.geometric.as_ref().unwrap().pair).unwrap();
        assert!(same_invariant(&a, &b));
    }
}

#[test]
fn fl_reports_pass_across_regimes() {
    let cases = [
        spec(Regime::SmallW, AlgKind::Unramified, 2, None, 1),
        spec(Regime::SmallW, AlgKind::Ramified, 2, None, 2),
        spec(Regime::UnitW, AlgKind::Ramified, 1, None, 3),
        spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(2), 4),
        spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(5), 5),
    ];
    for s in cases {
        let g = generate(&s).unwrap();
        let rep = verify_fl(&g.instance, Some(s.regime), DEFAULT_GUARD).unwrap();
        assert!(rep.all_pass(), "{s:?}: {rep:?}");
    }
}

#[test]
fn ramified_report_flags_the_central_value() {
    let g = generate(&spec(Regime::SmallW, AlgKind::Ramified, 1, None, 1)).unwrap();
    let rep = verify_fl(&g.instance, Some(Regime::SmallW), DEFAULT_GUARD).unwrap();
    assert_eq!(rep.analytic.value_at_s0, 1);
    assert!(rep.notes.iter().any(|n| n.contains('2')), "{:?}", rep.notes);
}

#[test]
fn afl_uses_derived_prediction_beyond_v1() {
    let g = generate(&spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(5), 2)).unwrap();
    let rep = verify_afl(&g.instance, DEFAULT_GUARD).unwrap();
    assert_eq!(rep.derivative, 3);
    assert_eq!(rep.prediction, PredictionSource::Derived);
    assert_eq!(rep.verdict, Verdict::Pass);
    let even = generate(&spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(4), 2)).unwrap();
    assert!(verify_afl(&even.instance, DEFAULT_GUARD).is_err());
}

#[test]
fn reduction_two_paths_agree() {
    for v in [2, 3, 4, 5] {
        let g = generate(&spec(Regime::UniformizerW, AlgKind::Ramified, 0, Some(v), 8)).unwrap();
        let red = shift_pair(&g.instance, Side::Analytic).unwrap();
        let (w, z) = reduced_wz(&g.instance, Side::Analytic).unwrap();
        assert!(w.approx_eq(&red.f_pair.w) && z.approx_eq(&red.f_pair.z), "v = {v}");
        red.l_pair.check_relations().unwrap();
        let rep = verify_orbit_reduction(&g.instance, DEFAULT_GUARD).unwrap();
        assert!(rep.passed, "v = {v}: {rep:?}");
        assert_eq!(rep.rank4.u_coeffs, vec![1; v as usize + 1]);
    }
}

#[test]
fn reduction_needs_ramified_maximal_order() {
    let unram = generate(&spec(Regime::SmallW, AlgKind::Unramified, 0, None, 1)).unwrap();
    assert!(matches!(shift_pair(&unram.instance, Side::Analytic), Err(ReductionError::Unsupported(_))));
    let cond = generate(&spec(Regime::SmallW, AlgKind::Ramified, 2, None, 1)).unwrap();
    assert!(matches!(verify_orbit_reduction(&cond.instance, DEFAULT_GUARD), Err(ReductionError::Conductor(2))));
}
