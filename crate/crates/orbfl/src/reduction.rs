//! Maximal-order reduction: the shifted embedding `(1 + z)^{-1}(ζ - ζ^σ) + ζ^σ`, the reduced w and z,
//! and a comparison of the rank-4 orbital integral over F with the rank-2 one over L.

use serde::{Deserialize, Serialize};

use crate::base_rings::{Fq, ResidueField, Series};
use crate::base_rings::SeriesDto;
use crate::biquadratic_core::{build_pair, conj_image, CoreError, EmbeddingPair, PairDto, Side};
use crate::lattice_engine::{enumerate_between, hermite_form, index_exp, Lattice, LatticeError, Region};
use crate::linalg::Matrix;
use crate::orbital_integrals::{
    analytic_lattices, transfer_exponent, OrbitError, OrbitInstance, OrbitalPolynomial, OrbitalPolynomialDto,
};
use crate::quadratic_algebras::{AlgKind, QuadAlg, QuadAlgDto, QuadElem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("reduction needs O_F[w] = O_L, but the conductor is {0}")]
    Conductor(u32),
    #[error("1 + z is not invertible over O_F")]
    OnePlusZ,
    #[error("1 - z^2 is not invertible over O_F")]
    OneMinusZsq,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0} is not L-linear")]
    NotLLinear(&'static str),
    #[error("shifted generator breaks the {0} identity")]
    TraceNorm(&'static str),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl From<crate::base_rings::ArithError> for ReductionError {
    fn from(e: crate::base_rings::ArithError) -> Self {
        ReductionError::Core(e.into())
    }
}

impl ReductionError {
    pub fn is_guard(&self) -> bool {
        match self {
            ReductionError::Orbit(e) => e.is_guard(),
            ReductionError::Lattice(e) => e.is_guard(),
            _ => false,
        }
    }
}

/// Whether `det(M)` is a unit of O_F.
fn is_unit_matrix(m: &Matrix<Series>) -> Result<bool, ReductionError> {
    let d = m.det()?;
    Ok(!d.is_zero() && d.valuation() == 0 && m.entries().all(Series::is_integral))
}

/// `(1 + z)^{-1} (ζ - ζ^σ) + ζ^σ`.
pub fn shifted_generator(
    alg1: &QuadAlg,
    img_gen1: &Matrix<Series>,
    z: &Matrix<Series>,
) -> Result<Matrix<Series>, ReductionError> {
    let n = z.rows();
    let one = Matrix::identity_like(n, &Series::one(alg1.field(), alg1.prec()));
    let onepz = one.add(z);
    if !is_unit_matrix(&onepz)? {
        return Err(ReductionError::OnePlusZ);
    }
    let c1 = conj_image(alg1, img_gen1);
    Ok(onepz.inverse()?.mul(&img_gen1.sub(&c1)).add(&c1))
}

/// Base L = F_q((ϖ)) for ramified L with `ϖ^2 = d0 t`.
#[derive(Debug, Clone)]
pub struct LBase {
    pub l: QuadAlg,
    d0_inv: Fq,
    pub field: ResidueField,
    pub prec: i32,
}

impl LBase {
    pub fn new(l: &QuadAlg) -> Result<Self, ReductionError> {
        if l.kind() != AlgKind::Ramified {
            return Err(ReductionError::Unsupported(format!("reduction over {} L", l.kind())));
        }
        let field = l.field();
        // generator satisfies x^2 = d0 t
        let d0 = field.neg(l.gen_norm().coeff(1));
        let d0_inv = field.inv(d0).expect("ramified generator");
        Ok(LBase { l: l.clone(), d0_inv, field, prec: 2 * l.prec() })
    }

    /// `a(t) + b(t) ϖ` rewritten with `t = ϖ^2 / d0`.
    pub fn to_series(&self, x: &QuadElem) -> Series {
        let f = self.field;
        let (a, b) = (x.a(), x.b());
        let prec = (2 * a.prec()).min(2 * b.prec() + 1);
        let lo = [a, b].iter().filter(|s| !s.is_zero()).map(|s| 2 * s.valuation()).min();
        let Some(lo) = lo else {
            return Series::zero(f, prec);
        };
        let mut coeffs = vec![f.zero(); (prec - lo).max(0) as usize];
        for (src, odd) in [(a, 0), (b, 1)] {
            if src.is_zero() {
                continue;
            }
            for k in src.valuation()..src.prec() {
                let e = 2 * k + odd;
                if e >= prec {
                    break;
                }
                let scale = if k >= 0 {
                    f.pow(self.d0_inv, k as u64)
                } else {
                    f.pow(f.inv(self.d0_inv).expect("unit"), (-k) as u64)
                };
                coeffs[(e - lo) as usize] = f.mul(src.coeff(k), scale);
            }
        }
        Series::from_coeffs(f, lo, &coeffs, prec)
    }

    /// The 2x2 matrix over L of an L-linear map on `F^4 = L ⊕ L`.
    pub fn l_matrix(&self, m: &Matrix<Series>, what: &'static str) -> Result<Matrix<QuadElem>, ReductionError> {
        let g = self.l.mult_matrix(&self.l.gen());
        let zero = Matrix::zeros_like(2, 2, &Series::zero(self.field, self.l.prec()));
        let gg = Matrix::blocks(&g, &zero, &zero, &g);
        if !m.commutator(&gg).is_zero() {
            return Err(ReductionError::NotLLinear(what));
        }
        Ok(Matrix::from_fn(2, 2, |i, j| {
            let col = m.column(2 * j);
            self.l.elem(col[2 * i].clone(), col[2 * i + 1].clone())
        }))
    }

    pub fn series_matrix(&self, m: &Matrix<QuadElem>) -> Matrix<Series> {
        m.map(|x| self.to_series(x))
    }
}

#[derive(Debug, Clone)]
pub struct ReducedPair {
    pub base: QuadAlg,
    /// The shifted generator as a matrix over F.
    pub eta: Matrix<Series>,
    /// `(ζ, η)` as a pair over F, with w and z recomputed from the images.
    pub f_pair: EmbeddingPair,
    /// The same pair over the base L, at rank 2.
    pub l_pair: EmbeddingPair,
    pub w_red: Matrix<QuadElem>,
    pub z_red: Matrix<QuadElem>,
}

/// JSON form of a reduced pair; entries of `w_red`, `z_red` are `[a, b]` for `a + b ϖ_L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedPairDto {
    pub base: QuadAlgDto,
    pub pair: PairDto,
    pub w_red: Vec<Vec<[SeriesDto; 2]>>,
    pub z_red: Vec<Vec<[SeriesDto; 2]>>,
}

impl ReducedPair {
    pub fn to_dto(&self) -> ReducedPairDto {
        let rows = |m: &Matrix<QuadElem>| {
            (0..m.rows())
                .map(|i| m.row(i).iter().map(|x| [x.a().to_dto(), x.b().to_dto()]).collect())
                .collect()
        };
        ReducedPairDto {
            base: self.base.to_dto(),
            pair: self.l_pair.to_dto(),
            w_red: rows(&self.w_red),
            z_red: rows(&self.z_red),
        }
    }
}

fn side_pair(inst: &OrbitInstance, side: Side) -> Result<&EmbeddingPair, ReductionError> {
    match side {
        Side::Analytic => Ok(&inst.analytic),
        Side::Geometric => inst
            .geometric
            .as_ref()
            .map(|g| &g.pair)
            .ok_or_else(|| ReductionError::Unsupported("the instance has no geometric side".into())),
    }
}

pub fn shift_pair(inst: &OrbitInstance, side: Side) -> Result<ReducedPair, ReductionError> {
    if inst.r != 0 {
        return Err(ReductionError::Conductor(inst.r));
    }
    let pair = side_pair(inst, side)?;
    let base = LBase::new(&inst.l)?;
    let a = &pair.img_gen1;
    let c1 = conj_image(&pair.alg1, a);
    let eta = shifted_generator(&pair.alg1, a, &pair.z)?;
    let n = pair.dim();
    let one = Matrix::identity_like(n, &Series::one(inst.l.field(), inst.l.prec()));
    let onepz_inv = one.add(&pair.z).inverse()?;
    let eta_conj = onepz_inv.mul(&c1.sub(a)).add(a);
    if !eta.add(&eta_conj).approx_eq(&a.add(&c1)) {
        return Err(ReductionError::TraceNorm("trace"));
    }
    if !eta.mul(&eta_conj).approx_eq(&a.mul(&c1)) {
        return Err(ReductionError::TraceNorm("norm"));
    }
    let f_pair = build_pair(side, &pair.alg1, &pair.alg1, a.clone(), eta.clone())?;
    let w_red = base.l_matrix(&f_pair.w, "reduced w")?;
    let z_red = base.l_matrix(&f_pair.z, "reduced z")?;
    let alg_l = match pair.alg1.kind() {
        AlgKind::Split => QuadAlg::split(base.field, base.prec),
        _ => QuadAlg::unramified(base.field, base.prec),
    };
    let img1_l = base.series_matrix(&base.l_matrix(a, "first image")?);
    let eta_l = base.series_matrix(&base.l_matrix(&eta, "shifted generator")?);
    let l_pair = build_pair(side, &alg_l, &alg_l, img1_l, eta_l)?;
    Ok(ReducedPair { base: inst.l.clone(), eta, f_pair, l_pair, w_red, z_red })
}

/// `w_red = (1 - z^2)^{-1}(ζ^σ - ζ)^2 + 2ζζ^σ` and `z_red = -z(1 - z^2)^{-1}(ζ - ζ^σ)^2` over F.
pub fn reduced_wz(inst: &OrbitInstance, side: Side) -> Result<(Matrix<Series>, Matrix<Series>), ReductionError> {
    if inst.r != 0 {
        return Err(ReductionError::Conductor(inst.r));
    }
    let pair = side_pair(inst, side)?;
    let a = &pair.img_gen1;
    let c1 = conj_image(&pair.alg1, a);
    let n = pair.dim();
    let one = Matrix::identity_like(n, &Series::one(inst.l.field(), inst.l.prec()));
    let onemzz = one.sub(&pair.z.mul(&pair.z));
    if !is_unit_matrix(&onemzz)? {
        return Err(ReductionError::OneMinusZsq);
    }
    let inv = onemzz.inverse()?;
    let d = a.sub(&c1);
    let dsq = d.mul(&d);
    let two = Series::from_int(inst.l.field(), 2, inst.l.prec());
    let w = inv.mul(&dsq).add(&a.mul(&c1).scale(&two));
    let z = pair.z.mul(&inv).mul(&dsq).neg();
    Ok((w, z))
}

/// One enumerated lattice of the rank-4 computation and its rank-2 counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeMatch {
    /// `log_q [O_L : Λ_+]`, which identifies `Λ_+ = ϖ^a O_L` on both sides.
    pub a: i64,
    pub exponent_f: i64,
    pub exponent_l: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub v: i64,
    pub one_plus_z_invertible: bool,
    pub one_minus_z_invertible: bool,
    pub trace_norm_preserved: bool,
    pub closed_forms_match_recomputed: bool,
    pub rank4: OrbitalPolynomialDto,
    pub rank2: OrbitalPolynomialDto,
    pub polynomials_equal: bool,
    pub lattices: Vec<LatticeMatch>,
    pub exponents_agree: bool,
    pub geometric_rank4: Option<u64>,
    pub geometric_rank2: Option<u64>,
    pub passed: bool,
}

fn unit_det(inst: &OrbitInstance, sign: i64) -> Result<bool, ReductionError> {
    let z = &inst.analytic.z;
    let f = inst.l.field();
    let one = Matrix::identity_like(z.rows(), &Series::one(f, inst.l.prec()));
    is_unit_matrix(&one.add(&z.scale(&Series::from_int(f, sign, inst.l.prec()))))
}

/// Rank-2 analytic lattices over L: `Λ_- = O_L` and `Λ_+` between `B O_L` and `C^{-1} O_L`.
fn rank2_analytic(red: &ReducedPair) -> Result<Vec<(Lattice, i64)>, ReductionError> {
    let p = &red.l_pair;
    let zr = &p.z;
    let b = zr.submatrix(0, 1, 1, 2);
    let c = zr.submatrix(1, 2, 0, 1);
    let field = zr.get(0, 0).field();
    let prec = zr.get(0, 0).prec();
    let minus = Lattice::standard(field, 1, prec);
    let top = minus.image(&c.inverse()?)?;
    let bot = minus.image(&b)?;
    let wplus = p.w.submatrix(0, 1, 0, 1);
    let mut out = Vec::new();
    for plus in enumerate_between(&top, &bot, std::slice::from_ref(&wplus), usize::MAX)? {
        let zero = Matrix::zeros_like(1, 1, &Series::zero(field, prec));
        let lam = hermite_form(&Matrix::blocks(plus.basis(), &zero, &zero, minus.basis()))?;
        let exp = transfer_exponent(&lam, zr, &p.img_gen1)?;
        out.push((plus, exp));
    }
    Ok(out)
}

/// Rank-2 geometric count over L: lattices in `K1 L` stable under both images, modulo L^×.
fn rank2_geometric(red: &ReducedPair) -> Result<u64, ReductionError> {
    let p = &red.l_pair;
    let field = p.img_gen1.get(0, 0).field();
    let prec = p.img_gen1.get(0, 0).prec();
    // every O_{K1 L}-lattice in K1 L is a power of ϖ_L times the maximal order
    let top = Lattice::standard(field, 2, prec);
    let region = Region::new(&top, &top, &[p.img_gen1.clone(), p.img_gen2.clone()], usize::MAX)?;
    Ok(region.submodules()?.len() as u64)
}

/// Compares the rank-4 analytic integral over F with the rank-2 one over L lattice by lattice,
/// and the geometric counts when a geometric side exists.
pub fn verify_orbit_reduction(inst: &OrbitInstance, guard: usize) -> Result<ReductionReport, ReductionError> {
    if inst.analytic.h != 2 {
        return Err(ReductionError::Unsupported("reduction is implemented for h = 2".into()));
    }
    if inst.r != 0 {
        return Err(ReductionError::Conductor(inst.r));
    }
    let one_plus = unit_det(inst, 1)?;
    let one_minus = unit_det(inst, -1)?;
    let red = shift_pair(inst, Side::Analytic)?;
    let (w_cf, z_cf) = reduced_wz(inst, Side::Analytic)?;
    let closed_ok = w_cf.approx_eq(&red.f_pair.w) && z_cf.approx_eq(&red.f_pair.z);
    let q = inst.q();
    let rank4 = analytic_lattices(inst, guard)?;
    let rank2 = rank2_analytic(&red)?;
    let ol = Lattice::standard(inst.l.field(), 2, inst.l.prec());
    let mut lattices = Vec::new();
    for (lam, exp) in &rank4 {
        let plus = Lattice::from_basis(&lam.basis().submatrix(0, 2, 0, 2))?;
        let a = index_exp(&ol, &plus);
        let l_side = rank2.iter().find(|(p, _)| p.det_valuation() == a).map(|(_, e)| *e);
        lattices.push(LatticeMatch { a, exponent_f: *exp, exponent_l: l_side });
    }
    lattices.sort_by_key(|m| m.a);
    let exponents_agree =
        lattices.len() == rank2.len() && lattices.iter().all(|m| m.exponent_l == Some(m.exponent_f));
    let p4 = OrbitalPolynomial::from_terms(q, rank4.iter().map(|(_, e)| (*e, 1)));
    let p2 = OrbitalPolynomial::from_terms(q, rank2.iter().map(|(_, e)| (*e, 1)));
    let (g4, g2) = match &inst.geometric {
        Some(g) => {
            let red_g = shift_pair(inst, Side::Geometric)?;
            (Some(g.count(0, guard)?), Some(rank2_geometric(&red_g)?))
        }
        None => (None, None),
    };
    let polynomials_equal = p4 == p2;
    let passed = closed_ok && polynomials_equal && exponents_agree && g4 == g2;
    Ok(ReductionReport {
        v: inst.v(),
        one_plus_z_invertible: one_plus,
        one_minus_z_invertible: one_minus,
        trace_norm_preserved: true,
        closed_forms_match_recomputed: closed_ok,
        rank4: p4.to_dto(),
        rank2: p2.to_dto(),
        polynomials_equal,
        lattices,
        exponents_agree,
        geometric_rank4: g4,
        geometric_rank2: g2,
        passed,
    })
}
