//! Orbital integrals of both sides: lattice counts, transfer factors and Hecke chains.

mod geometric;
mod hecke;

pub use geometric::{geometric_side, GeometricSide, TensorElem, TensorModel};
pub use hecke::{hecke_eval, HeckeFunction, ParseHeckeError};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::base_rings::{ArithError, Series};
use crate::biquadratic_core::{
    analytic_pair_for, build_matched_partner, regularity, zsq_in_l, CoreError, EmbeddingPair,
    IntermediateGenerator,
};
use crate::lattice_engine::{
    enumerate_between, hermite_form, index_exp, is_stable, split_by_idempotent, Lattice, LatticeError,
    PrimitivityDatum, Region,
};
use crate::linalg::Matrix;
use crate::quadratic_algebras::{abs_value_exponent, conductor, unit_index, AlgKind, QuadAlg, QuadElem, QuadError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrbitError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("the orbit is not regular semisimple")]
    NotRss,
    #[error("no geometric side: {0}")]
    NoGeometricSide(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
}

impl OrbitError {
    /// Whether the failure is an enumeration that hit the length guard.
    pub fn is_guard(&self) -> bool {
        matches!(self, OrbitError::Lattice(e) if e.is_guard())
    }
}

/// `Σ a_k u^{low + k}` with `u = -q^s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitalPolynomial {
    pub low: i64,
    pub coeffs: Vec<u64>,
    pub q: u64,
}

impl OrbitalPolynomial {
    pub fn new(q: u64, coeffs: Vec<u64>) -> Self {
        let mut p = OrbitalPolynomial { low: 0, coeffs, q };
        p.trim();
        p
    }

    /// Collects `(exponent, multiplicity)` terms.
    pub fn from_terms(q: u64, terms: impl IntoIterator<Item = (i64, u64)>) -> Self {
        let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
        for (e, m) in terms {
            *acc.entry(e).or_default() += m;
        }
        let Some((&lo, _)) = acc.iter().next() else {
            return OrbitalPolynomial { low: 0, coeffs: Vec::new(), q };
        };
        let hi = *acc.keys().next_back().expect("nonempty");
        let coeffs = (lo..=hi).map(|e| acc.get(&e).copied().unwrap_or(0)).collect();
        let mut p = OrbitalPolynomial { low: lo.min(0), coeffs, q };
        if lo > 0 {
            let mut padded = vec![0; lo as usize];
            padded.extend(p.coeffs);
            p.coeffs = padded;
        }
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    fn terms(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, &a)| (self.low + k as i64, a as i64))
    }

    /// `Σ a_k (-1)^k`.
    pub fn value_at_s0(&self) -> i64 {
        self.terms().map(|(k, a)| if k.rem_euclid(2) == 0 { a } else { -a }).sum()
    }

    /// `-(1/ln q) d/ds` at `s = 0`, i.e. `Σ a_k k (-1)^{k+1}`.
    pub fn afl_derivative(&self) -> i64 {
        self.terms().map(|(k, a)| if k.rem_euclid(2) == 0 { -k * a } else { k * a }).sum()
    }

    pub fn is_palindromic(&self) -> bool {
        self.coeffs.iter().eq(self.coeffs.iter().rev())
    }

    pub fn total(&self) -> u64 {
        self.coeffs.iter().sum()
    }

    pub fn to_dto(&self) -> OrbitalPolynomialDto {
        OrbitalPolynomialDto {
            u_coeffs: self.coeffs.clone(),
            u_shift: self.low,
            q: self.q,
            value_at_s0: self.value_at_s0(),
            afl_derivative: self.afl_derivative(),
        }
    }
}

impl fmt::Display for OrbitalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms()
            .filter(|&(_, a)| a != 0)
            .map(|(k, a)| match k {
                0 => format!("{a}"),
                1 => format!("{a}u"),
                _ => format!("{a}u^{k}"),
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn is_zero_i64(x: &i64) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitalPolynomialDto {
    pub u_coeffs: Vec<u64>,
    #[serde(default, skip_serializing_if = "is_zero_i64")]
    pub u_shift: i64,
    pub q: u64,
    pub value_at_s0: i64,
    pub afl_derivative: i64,
}

pub fn afl_derivative(p: &OrbitalPolynomial) -> i64 {
    p.afl_derivative()
}

/// A regular semisimple orbit given by `w ∈ L`, with both sides realised as matrix pairs.
#[derive(Debug, Clone)]
pub struct OrbitInstance {
    pub k1: QuadAlg,
    pub k2: QuadAlg,
    pub l: QuadAlg,
    pub w: QuadElem,
    pub r: u32,
    pub zsq: QuadElem,
    pub analytic: EmbeddingPair,
    pub geometric: Option<GeometricSide>,
    pub primitivity: PrimitivityDatum,
}

impl OrbitInstance {
    pub fn assemble(k1: &QuadAlg, k2: &QuadAlg, w: &QuadElem) -> Result<Self, OrbitError> {
        if k1.kind() != AlgKind::Unramified {
            return Err(OrbitError::Inconsistent("K1 must be unramified".into()));
        }
        if !w.is_integral() || w.b().is_zero() {
            return Err(OrbitError::Inconsistent("w must be integral and generate L".into()));
        }
        let inter = IntermediateGenerator::from_algebras(k1, k2);
        let zsq = zsq_in_l(&inter, w);
        if zsq.norm().is_zero() {
            return Err(OrbitError::NotRss);
        }
        let r = conductor(w)?;
        let geometric = geometric_side(k1, k2, w)?;
        let analytic = match &geometric {
            Some(g) => build_matched_partner(&g.pair, w)?,
            None => analytic_pair_for(&inter, w)?,
        };
        if !regularity(&analytic)?.is_rss {
            return Err(OrbitError::NotRss);
        }
        Ok(OrbitInstance {
            k1: k1.clone(),
            k2: k2.clone(),
            l: w.alg().clone(),
            w: w.clone(),
            r,
            zsq,
            analytic,
            geometric,
            primitivity: PrimitivityDatum::AnalyticRankTwo,
        })
    }

    pub fn q(&self) -> u64 {
        self.l.q()
    }

    /// `log_q |z^2|_L^{-1}`.
    pub fn v(&self) -> i64 {
        let e = abs_value_exponent(&self.zsq).expect("z^2 is nonzero");
        e.to_integer()
    }

    fn blocks(&self) -> Blocks {
        let z = &self.analytic.z;
        let w = &self.analytic.w;
        Blocks {
            b: z.submatrix(0, 2, 2, 4),
            c: z.submatrix(2, 4, 0, 2),
            w: w.submatrix(2, 4, 2, 4),
            lgen: self.l.mult_matrix(&self.l.gen()),
        }
    }
}

struct Blocks {
    b: Matrix<Series>,
    c: Matrix<Series>,
    w: Matrix<Series>,
    lgen: Matrix<Series>,
}

/// `log_q [Λ_- : z Λ_+]` for the splitting of Λ along the coordinate idempotent `e`.
pub fn transfer_exponent(l: &Lattice, z: &Matrix<Series>, e: &Matrix<Series>) -> Result<i64, OrbitError> {
    let (plus, minus) = split_by_idempotent(l, e)?;
    let n = l.dim();
    let one = Series::one(l.field(), l.prec());
    let pidx: Vec<usize> = (0..n).filter(|&i| e.get(i, i).eq_upto_prec(&one)).collect();
    let midx: Vec<usize> = (0..n).filter(|i| !pidx.contains(i)).collect();
    let c = Matrix::from_fn(midx.len(), pidx.len(), |i, j| z.get(midx[i], pidx[j]).clone());
    let zp = Matrix::from_fn(pidx.len(), pidx.len(), |i, j| z.get(pidx[i], pidx[j]).clone());
    if !zp.is_zero() {
        return Err(LatticeError::Unstable("z must exchange the two eigenspaces".into()).into());
    }
    let image = hermite_form(&c.mul(plus.basis()))?;
    if !minus.contains(&image)? {
        return Err(LatticeError::Unstable("z Λ_+ is not inside Λ_-".into()).into());
    }
    Ok(index_exp(&minus, &image))
}

fn block_lattice(plus: &Lattice, minus: &Lattice) -> Result<Lattice, OrbitError> {
    let f = plus.field();
    let prec = plus.prec().max(minus.prec());
    let zero = Matrix::zeros_like(2, 2, &Series::zero(f, prec));
    Ok(hermite_form(&Matrix::blocks(plus.basis(), &zero, &zero, minus.basis()))?)
}

/// Primitive `w`-stable splittings `Λ_+ ⊕ Λ_-` stable under z, each with its transfer exponent.
pub fn analytic_lattices(inst: &OrbitInstance, guard: usize) -> Result<Vec<(Lattice, i64)>, OrbitError> {
    windowed_lattices(inst, 0, guard)
}

/// Primitive splittings stable under `t^s w` and `t^s z`; `s = 0` gives the orbit's own lattices.
fn windowed_lattices(inst: &OrbitInstance, s: u32, guard: usize) -> Result<Vec<(Lattice, i64)>, OrbitError> {
    let bl = inst.blocks();
    let f = inst.l.field();
    let prec = inst.l.prec();
    let ts = Series::t_pow(f, s as i32, prec);
    let wt = bl.w.scale(&ts);
    let ol = Lattice::standard(f, 2, prec);
    let region = Region::new(&ol, &ol.scale_t((inst.r + s) as i32), std::slice::from_ref(&wt), guard)?;
    let cinv = bl.c.inverse()?;
    let e = inst.analytic.img_gen1.clone();
    let mut out = Vec::new();
    for sm in region.submodules()? {
        if !region.saturate(&sm, std::slice::from_ref(&bl.lgen))?.is_everything() {
            continue;
        }
        let minus = region.lattice_of(&sm)?;
        let top = minus.image(&cinv)?.scale_t(-(s as i32));
        let bot = minus.image(&bl.b)?.scale_t(s as i32);
        for plus in enumerate_between(&top, &bot, std::slice::from_ref(&wt), guard)? {
            let lam = block_lattice(&plus, &minus)?;
            let exp = transfer_exponent(&lam, &inst.analytic.z, &e)?;
            out.push((lam, exp));
        }
    }
    Ok(out)
}

/// Analytic orbital integral. The unit function uses the sum over orders `R_n`; other Hecke
/// functions sum chain counts over pairs of lattices.
pub fn orbital_analytic(inst: &OrbitInstance, f: &HeckeFunction, guard: usize) -> Result<OrbitalPolynomial, OrbitError> {
    if f.is_unit() {
        orbital_analytic_by_orders(inst, guard)
    } else {
        orbital_analytic_hecke(inst, f, guard)
    }
}

/// `Σ_{n ≤ r} [O_L^× : R_n^×] Σ_{R_n ⊇ Λ ⊇ z^2 R_n, wΛ ⊆ Λ} u^{log_q [R_n : Λ]}`.
pub fn orbital_analytic_by_orders(inst: &OrbitInstance, guard: usize) -> Result<OrbitalPolynomial, OrbitError> {
    let l = &inst.l;
    let q = inst.q();
    let wm = l.mult_matrix(&inst.w);
    let zm = l.mult_matrix(&inst.zsq);
    let mut terms = Vec::new();
    for n in 0..=inst.r {
        let top = hermite_form(&l.order_basis(n))?;
        let bot = top.image(&zm)?;
        let weight = unit_index(l.kind(), n, q);
        for lam in enumerate_between(&top, &bot, std::slice::from_ref(&wm), guard)? {
            terms.push((index_exp(&top, &lam), weight));
        }
    }
    Ok(OrbitalPolynomial::from_terms(q, terms))
}

/// The same integral as a direct sum of transfer factors over primitive lattices.
pub fn orbital_analytic_by_lattices(inst: &OrbitInstance, guard: usize) -> Result<OrbitalPolynomial, OrbitError> {
    let lats = analytic_lattices(inst, guard)?;
    Ok(OrbitalPolynomial::from_terms(inst.q(), lats.into_iter().map(|(_, e)| (e, 1))))
}

fn orbital_analytic_hecke(inst: &OrbitInstance, f: &HeckeFunction, guard: usize) -> Result<OrbitalPolynomial, OrbitError> {
    let s = f.total_index();
    let img3 = &inst.analytic.img_gen2;
    let mut terms = Vec::new();
    for (lam0, exp) in windowed_lattices(inst, s, guard)? {
        let top = lam0.scale_t(f.shift);
        let bot = top.scale_t(s as i32);
        let mut weight = 0;
        for lam3 in enumerate_between(&top, &bot, std::slice::from_ref(img3), guard)? {
            weight += hecke_eval(f, &lam0, &lam3, guard)?;
        }
        if weight > 0 {
            terms.push((exp, weight));
        }
    }
    Ok(OrbitalPolynomial::from_terms(inst.q(), terms))
}

/// Number of lattices stable under both geometric embeddings, modulo L^×.
pub fn orbital_geometric(inst: &OrbitInstance, f: &HeckeFunction, guard: usize) -> Result<u64, OrbitError> {
    if !f.is_unit() {
        return Err(OrbitError::Unsupported("geometric counts are implemented for the unit function".into()));
    }
    let side = inst.geometric.as_ref().ok_or_else(|| {
        OrbitError::NoGeometricSide(match inst.l.kind() {
            AlgKind::Split => "L is split, so the orbit is not elliptic".into(),
            _ => format!("z^2 is not a norm from K1 ⊗ L (v = {})", inst.v()),
        })
    })?;
    side.count(inst.r, guard)
}

/// Stability of a lattice under every matrix.
pub fn stable_under_all(l: &Lattice, ms: &[Matrix<Series>]) -> Result<bool, OrbitError> {
    for m in ms {
        if !is_stable(l, m)? {
            return Ok(false);
        }
    }
    Ok(true)
}
