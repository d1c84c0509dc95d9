//! Strategies and property checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

pub mod chains;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use orbfl::base_rings::{Fq, ResidueField, Series};
use orbfl::biquadratic_core::{
    build_pair, embed_partner_from_wz, matching_invariant, same_invariant, EmbeddingPair, IntermediateGenerator,
};
use orbfl::closed_forms::Regime;
use orbfl::instance::{generate, InstanceSpec};
use orbfl::lattice_engine::{enumerate_between, hermite_form, index_exp, is_stable, Lattice};
use orbfl::linalg::Matrix;
use orbfl::orbital_integrals::{transfer_exponent, OrbitInstance};
use orbfl::quadratic_algebras::{count_sublattices_by_type, unit_index, AlgKind, QuadAlg};

pub const PREC: i32 = 24;

pub fn field(q: u64) -> ResidueField {
    ResidueField::with_order(q).unwrap()
}

pub fn fq(f: ResidueField, k: usize) -> Fq {
    f.elements().nth(k % f.order() as usize).unwrap()
}

fn kind_of(k: u8) -> AlgKind {
    match k % 3 {
        0 => AlgKind::Unramified,
        1 => AlgKind::Ramified,
        _ => AlgKind::Split,
    }
}

/// Specs that the generator accepts: every regime, both field kinds, conductors up to 2.
pub fn instance_spec() -> impl Strategy<Value = InstanceSpec> {
    let q = prop::sample::select(vec![3u64, 5, 7]);
    prop_oneof![
        (q.clone(), 0u8..2, 0u32..=2, any::<u64>())
            .prop_map(|(q, k, r, s)| InstanceSpec::new(q, Regime::SmallW, kind_of(k), r, None, s)),
        (q.clone(), 0u8..2, 0u32..=2, any::<u64>())
            .prop_map(|(q, k, r, s)| InstanceSpec::new(q, Regime::UnitW, kind_of(k), r, None, s)),
        (q, 2u32..=5, any::<u64>())
            .prop_map(|(q, v, s)| InstanceSpec::new(q, Regime::UniformizerW, AlgKind::Ramified, 0, Some(v), s)),
    ]
}

pub fn instance(spec: &InstanceSpec) -> Result<OrbitInstance, TestCaseError> {
    generate(spec).map(|g| g.instance).map_err(|e| TestCaseError::fail(format!("{spec:?}: {e}")))
}

fn pairs(inst: &OrbitInstance) -> Vec<&EmbeddingPair> {
    let mut v = vec![&inst.analytic];
    if let Some(g) = &inst.geometric {
        v.push(&g.pair);
    }
    v
}

pub fn check_relations(spec: &InstanceSpec) -> Result<(), TestCaseError> {
    let inst = instance(spec)?;
    for p in pairs(&inst) {
        p.check_relations().map_err(|e| TestCaseError::fail(format!("{:?} side: {e}", p.side)))?;
    }
    Ok(())
}

fn kron(a: &Matrix<Series>, b: &Matrix<Series>) -> Matrix<Series> {
    let (n, m) = (a.rows(), b.rows());
    Matrix::from_fn(n * m, n * m, |i, j| a.get(i / m, j / m) * b.get(i % m, j % m))
}

/// The intermediate generator built as an operator on `K1 ⊗ K2` must satisfy
/// `x^2 - trace3 x + norm3 = 0` and have F-trace `2 trace3`.
pub fn check_over_f(q: u64, k2: u8, twisted: bool) -> Result<(), TestCaseError> {
    let f = field(q);
    let k1 = QuadAlg::unramified(f, PREC);
    let k2 = match kind_of(k2) {
        AlgKind::Ramified => QuadAlg::ramified(f, twisted, PREC),
        kind => QuadAlg::of_kind(kind, f, PREC),
    };
    let inter = IntermediateGenerator::from_algebras(&k1, &k2);
    let z = k1.mult_matrix(&k1.gen());
    let zc = k1.mult_matrix(&k1.gen().conjugate());
    let p = k2.mult_matrix(&k2.gen());
    let pc = k2.mult_matrix(&k2.gen().conjugate());
    let x = kron(&z, &p).add(&kron(&zc, &pc));
    let id = Matrix::identity_like(4, &Series::one(f, PREC));
    let res = x.mul(&x).sub(&x.scale(&inter.trace3)).add(&id.scale(&inter.norm3));
    prop_assert!(res.is_zero(), "minimal polynomial residual is nonzero");
    let two = Series::from_int(f, 2, PREC);
    prop_assert!(x.trace().eq_upto_prec(&(&two * &inter.trace3)));
    Ok(())
}

pub fn check_stored_intermediate(spec: &InstanceSpec) -> Result<(), TestCaseError> {
    let inst = instance(spec)?;
    let expect = IntermediateGenerator::from_algebras(&inst.k1, &inst.k2);
    for p in pairs(&inst) {
        prop_assert!(p.inter.trace3.eq_upto_prec(&expect.trace3) && p.inter.norm3.eq_upto_prec(&expect.norm3));
    }
    Ok(())
}

pub fn check_round_trip(spec: &InstanceSpec) -> Result<(), TestCaseError> {
    let inst = instance(spec)?;
    for p in pairs(&inst) {
        let back = embed_partner_from_wz(&p.alg1, &p.img_gen1, &p.w, &p.z, &p.alg2)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(back.approx_eq(&p.img_gen2), "{:?} side does not round-trip", p.side);
    }
    Ok(())
}

/// `[[t^a, x], [0, t^b]]` times a permutation, with `x` a short random polynomial.
pub fn random_block(f: ResidueField, a: i32, b: i32, x: &[usize], swap: bool) -> Matrix<Series> {
    let coeffs: Vec<Fq> = x.iter().map(|&k| fq(f, k)).collect();
    let xs = Series::from_coeffs(f, 0, &coeffs, PREC);
    let m = Matrix::from_rows(vec![
        vec![Series::t_pow(f, a, PREC), xs],
        vec![Series::zero(f, PREC), Series::t_pow(f, b, PREC)],
    ]);
    if swap {
        let p = Matrix::from_rows(vec![
            vec![Series::zero(f, PREC), Series::one(f, PREC)],
            vec![Series::one(f, PREC), Series::zero(f, PREC)],
        ]);
        p.mul(&m)
    } else {
        m
    }
}

pub fn block_diag(a: &Matrix<Series>, b: &Matrix<Series>) -> Matrix<Series> {
    let zero = Matrix::zeros_like(a.rows(), b.cols(), &Series::zero(a.get(0, 0).field(), PREC));
    Matrix::blocks(a, &zero, &zero.transpose(), b)
}

pub type BlockParams = (i32, i32, Vec<usize>, bool);

pub fn block_params() -> impl Strategy<Value = BlockParams> {
    (0i32..3, 0i32..3, prop::collection::vec(0usize..9, 0..3), any::<bool>())
}

/// Moving `g0 O` to `g0 h O` with `h = diag(h+, h-)` shifts `log_q [Λ- : zΛ+]` by
/// `v(det h+) - v(det h-)`.
pub fn check_character(
    spec: &InstanceSpec,
    g: (BlockParams, BlockParams),
    h: (BlockParams, BlockParams),
) -> Result<(), TestCaseError> {
    let inst = instance(spec)?;
    let f = inst.l.field();
    let pair = &inst.analytic;
    let mk = |p: &BlockParams| random_block(f, p.0, p.1, &p.2, p.3);
    // enlarge Λ- so that zΛ+ stays inside it
    let gm = mk(&g.1).scale(&Series::t_pow(f, -12, PREC));
    let g0 = block_diag(&mk(&g.0), &gm);
    let (hp, hm) = (mk(&h.0), mk(&h.1));
    let hh = block_diag(&hp, &hm);
    let base = hermite_form(&g0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let moved = hermite_form(&g0.mul(&hh)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let e0 = transfer_exponent(&base, &pair.z, &pair.img_gen1).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let e1 = transfer_exponent(&moved, &pair.z, &pair.img_gen1).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let vp = (h.0 .0 + h.0 .1) as i64;
    let vm = (h.1 .0 + h.1 .1) as i64;
    prop_assert_eq!(e1 - e0, vp - vm);
    Ok(())
}

/// Random full-rank matrix: upper triangular powers of t times a unimodular lower factor.
pub fn random_lattice_matrix(f: ResidueField, n: usize, vals: &[i32], noise: &[usize]) -> Matrix<Series> {
    let mut k = 0;
    let mut next = || {
        k += 1;
        fq(f, noise[k % noise.len().max(1)] + k)
    };
    let upper = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Series::t_pow(f, vals[i], PREC),
        std::cmp::Ordering::Less => Series::from_coeffs(f, vals[i].min(0), &[next(), next()], PREC),
        std::cmp::Ordering::Greater => Series::zero(f, PREC),
    });
    let lower = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Series::one(f, PREC),
        std::cmp::Ordering::Greater => Series::from_coeffs(f, 0, &[next(), next()], PREC),
        std::cmp::Ordering::Less => Series::zero(f, PREC),
    });
    upper.mul(&lower)
}

pub fn lattice_params() -> impl Strategy<Value = (u64, usize, Vec<i32>, Vec<usize>)> {
    (prop::sample::select(vec![3u64, 5, 9]), 1usize..=3).prop_flat_map(|(q, n)| {
        (Just(q), Just(n), prop::collection::vec(-2i32..4, n), prop::collection::vec(0usize..81, 1..6))
    })
}

pub fn check_cocycle(
    a: (u64, usize, Vec<i32>, Vec<usize>),
    b: Vec<i32>,
    c: Vec<i32>,
) -> Result<(), TestCaseError> {
    let (q, n, va, noise) = a;
    let f = field(q);
    let mats: Vec<Matrix<Series>> = [&va, &b, &c]
        .iter()
        .map(|v| random_lattice_matrix(f, n, &v[..n], &noise))
        .collect();
    let lats: Vec<Lattice> = mats.iter().map(|m| hermite_form(m).unwrap()).collect();
    let i01 = index_exp(&lats[0], &lats[1]);
    let i12 = index_exp(&lats[1], &lats[2]);
    let i02 = index_exp(&lats[0], &lats[2]);
    prop_assert_eq!(i01 + i12, i02);
    // against determinants of the raw generators
    let dv = |m: &Matrix<Series>| m.det().unwrap().valuation() as i64;
    prop_assert_eq!(i01, dv(&mats[1]) - dv(&mats[0]));
    Ok(())
}

pub fn check_hermite(a: (u64, usize, Vec<i32>, Vec<usize>), extra: Vec<usize>) -> Result<(), TestCaseError> {
    let (q, n, v, noise) = a;
    let f = field(q);
    let m = random_lattice_matrix(f, n, &v, &noise);
    let h = hermite_form(&m).unwrap();
    prop_assert!(hermite_form(h.basis()).unwrap() == h, "not idempotent");
    // a unimodular change of generators gives the same canonical form
    let u = random_lattice_matrix(f, n, &vec![0; n], &extra);
    prop_assert!(hermite_form(&m.mul(&u)).unwrap() == h, "depends on the generators");
    // appending a redundant column changes nothing
    let col: Vec<Series> = m.column(0).iter().zip(m.column(n - 1)).map(|(x, y)| x + &y).collect();
    let wide = m.hstack(&Matrix::from_columns(&[col]));
    prop_assert!(hermite_form(&wide).unwrap() == h, "redundant generator changed the lattice");
    Ok(())
}

/// The smallest m with `t^m g Λ ⊆ Λ`, i.e. the conductor of the multiplier ring of Λ.
fn multiplier_conductor(alg: &QuadAlg, l: &Lattice) -> u32 {
    let g = alg.mult_matrix(&alg.gen());
    let f = alg.field();
    (0..=8u32)
        .find(|&m| is_stable(l, &g.scale(&Series::t_pow(f, m as i32, alg.prec()))).unwrap())
        .expect("multiplier ring has bounded conductor")
}

/// Index-q sublattices of R_n classified by their multiplier rings, by direct enumeration.
pub fn check_sublattice_counts(q: u64, kind: u8, n: u32) -> Result<(), TestCaseError> {
    let f = field(q);
    let kind = kind_of(kind % 2);
    let alg = QuadAlg::of_kind(kind, f, PREC);
    let rn = hermite_form(&alg.order_basis(n)).unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for l in enumerate_between(&rn, &rn.scale_t(1), &[], 64).unwrap() {
        if index_exp(&rn, &l) == 1 {
            *counts.entry(multiplier_conductor(&alg, &l)).or_insert(0u64) += 1;
        }
    }
    prop_assert_eq!(counts, count_sublattices_by_type(kind, n, q));
    Ok(())
}

/// `[O_L^× : R_n^×] = #(O_L / t^n)^× / #(O_F / t^n)^×`, counted element by element.
pub fn check_unit_index(q: u64, kind: u8, n: u32) -> Result<(), TestCaseError> {
    let f = field(q);
    let kind = kind_of(kind);
    let alg = QuadAlg::of_kind(kind, f, PREC);
    let residues: Vec<Series> = (0..(q as usize).pow(n))
        .map(|mut k| {
            let c: Vec<Fq> = (0..n)
                .map(|_| {
                    let d = k % q as usize;
                    k /= q as usize;
                    fq(f, d)
                })
                .collect();
            Series::from_coeffs(f, 0, &c, PREC)
        })
        .collect();
    let is_unit = |a: &Series, b: &Series| alg.elem(a.clone(), b.clone()).is_unit();
    let zero = Series::zero(f, PREC);
    let mut big = 0u64;
    for a in &residues {
        for b in &residues {
            big += is_unit(a, b) as u64;
        }
    }
    let small = residues.iter().filter(|a| is_unit(a, &zero)).count() as u64;
    prop_assert_eq!(big % small, 0);
    prop_assert_eq!(unit_index(kind, n, q), big / small);
    Ok(())
}

/// Conjugating both images by an element of GL_{2h}(F) leaves the matching invariant fixed.
pub fn check_conjugation_invariance(spec: &InstanceSpec, g: (BlockParams, BlockParams)) -> Result<(), TestCaseError> {
    let inst = instance(spec)?;
    let f = inst.l.field();
    let p = &inst.analytic;
    let mk = |b: &BlockParams| random_block(f, b.0, b.1, &b.2, b.3);
    let one = Series::one(f, PREC);
    let zero = Series::zero(f, PREC);
    // mix the two blocks so the conjugator is not block diagonal
    let mix = Matrix::from_fn(4, 4, |i, j| if i == j || (i + 2 == j) { one.clone() } else { zero.clone() });
    let g0 = block_diag(&mk(&g.0), &mk(&g.1)).mul(&mix);
    let gi = g0.inverse().map_err(|e| TestCaseError::fail(e.to_string()))?;
    let conj = |m: &Matrix<Series>| g0.mul(m).mul(&gi);
    let q = build_pair(p.side, &p.alg1, &p.alg2, conj(&p.img_gen1), conj(&p.img_gen2))
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let a = matching_invariant(p).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = matching_invariant(&q).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(same_invariant(&a, &b));
    if let Some(geo) = &inst.geometric {
        let c = matching_invariant(&geo.pair).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(same_invariant(&a, &c), "matched sides disagree");
    }
    Ok(())
}

/// `hecke_eval(f, gO^2, gΛ2)` against exhaustive chain listing, over every `O^2 ⊇ Λ2 ⊇ t^2 O^2`.
/// Returns the number of target lattices compared.
pub fn check_hecke_against_chains(f: &str, g: &Matrix<Series>) -> Result<usize, String> {
    use orbfl::orbital_integrals::{hecke_eval, HeckeFunction};
    let hf: HeckeFunction = f.parse().map_err(|e| format!("{e}"))?;
    let fld = field(3);
    let amb = chains::Ambient::new(3);
    let all = amb.all_submodules();
    let top = amb.everything();
    let o2 = amb.lattice(fld, &top, PREC).image(g).map_err(|e| e.to_string())?;
    for s in &all {
        let target = match hf.shift {
            0 => Some(s.clone()),
            1 => amb.divide_by_t(s),
            n => return Err(format!("shift {n} is outside the oracle's range")),
        };
        let expect = target.map_or(0, |t| amb.count_chains(&all, &top, &t, &hf.steps));
        let l2 = amb.lattice(fld, s, PREC).image(g).map_err(|e| e.to_string())?;
        let got = hecke_eval(&hf, &o2, &l2, 16).map_err(|e| e.to_string())?;
        if got != expect {
            return Err(format!("f = {f}: engine {got}, chain listing {expect} for a target of length {}", amb.length(s)));
        }
    }
    Ok(all.len())
}
