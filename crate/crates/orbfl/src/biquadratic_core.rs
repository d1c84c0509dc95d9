//! Pairs of quadratic embeddings into Mat_{2h}(F): the elements w and z, their relations,
//! regular semisimplicity, matching invariants and analytic-side partners.

use serde::{Deserialize, Serialize};

use crate::base_rings::{ArithError, ResidueField, Series, SeriesDto};
use crate::linalg::{Matrix, Scalar};
use crate::quadratic_algebras::{AlgKind, QuadAlg, QuadAlgDto, QuadElem, QuadError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoreError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("image of generator {0} does not satisfy its minimal polynomial")]
    Minpoly(u8),
    #[error("coproduct relation ({0}) fails")]
    Relation(u8),
    #[error("pair is not regular semisimple")]
    NotRss,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("matching invariants differ")]
    InvariantMismatch,
    #[error("both pairs lie on the {0:?} side")]
    SameSide(Side),
    #[error("malformed pair: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Embeddings of (K1, K2).
    Geometric,
    /// Embeddings of (K0, K3).
    Analytic,
}

/// Trace and norm of the intermediate generator `ζ ⊗ ϖ + ζ^σ ⊗ ϖ^σ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateGenerator {
    pub trace3: Series,
    pub norm3: Series,
}

impl IntermediateGenerator {
    pub fn from_algebras(alg1: &QuadAlg, alg2: &QuadAlg) -> Self {
        let (s1, n1) = (alg1.gen_trace(), alg1.gen_norm());
        let (s2, n2) = (alg2.gen_trace(), alg2.gen_norm());
        let two = Series::from_int(alg1.field(), 2, alg1.prec());
        // tr(x^2) = s^2 - 2n
        let sq1 = &(s1 * s1) - &(&two * n1);
        let sq2 = &(s2 * s2) - &(&two * n2);
        IntermediateGenerator { trace3: s1 * s2, norm3: &(&sq1 * n2) + &(&sq2 * n1) }
    }

    /// The algebra generated by the intermediate generator.
    pub fn algebra(&self) -> Result<QuadAlg, CoreError> {
        Ok(QuadAlg::from_minpoly(self.trace3.clone(), self.norm3.clone())?)
    }
}

/// Images of the two generators in Mat_{2h}(F) together with w and z.
#[derive(Debug, Clone)]
pub struct EmbeddingPair {
    pub h: usize,
    pub side: Side,
    pub alg1: QuadAlg,
    pub alg2: QuadAlg,
    pub img_gen1: Matrix<Series>,
    pub img_gen2: Matrix<Series>,
    pub w: Matrix<Series>,
    pub z: Matrix<Series>,
    pub inter: IntermediateGenerator,
}

fn scalar(n: usize, s: &Series) -> Matrix<Series> {
    Matrix::scalar_like(n, s)
}

fn minpoly_residual(alg: &QuadAlg, m: &Matrix<Series>) -> Matrix<Series> {
    let n = m.rows();
    m.mul(m).sub(&m.scale(alg.gen_trace())).add(&scalar(n, alg.gen_norm()))
}

/// `trace(g) - M`, the image of the conjugate generator.
pub fn conj_image(alg: &QuadAlg, m: &Matrix<Series>) -> Matrix<Series> {
    scalar(m.rows(), alg.gen_trace()).sub(m)
}

/// Builds the pair and checks every coproduct relation.
pub fn build_pair(
    side: Side,
    alg1: &QuadAlg,
    alg2: &QuadAlg,
    img_gen1: Matrix<Series>,
    img_gen2: Matrix<Series>,
) -> Result<EmbeddingPair, CoreError> {
    let n = img_gen1.rows();
    if !img_gen1.is_square() || !n.is_multiple_of(2) || img_gen2.rows() != n || !img_gen2.is_square() {
        return Err(CoreError::Malformed(format!("images must be square of even size, got {n}")));
    }
    if !minpoly_residual(alg1, &img_gen1).is_zero() {
        return Err(CoreError::Minpoly(1));
    }
    if !minpoly_residual(alg2, &img_gen2).is_zero() {
        return Err(CoreError::Minpoly(2));
    }
    let c1 = conj_image(alg1, &img_gen1);
    let c2 = conj_image(alg2, &img_gen2);
    let w = img_gen1.mul(&img_gen2).add(&c2.mul(&c1));
    let z = img_gen2.mul(&img_gen1).sub(&img_gen1.mul(&img_gen2));
    let inter = IntermediateGenerator::from_algebras(alg1, alg2);
    let pair = EmbeddingPair {
        h: n / 2,
        side,
        alg1: alg1.clone(),
        alg2: alg2.clone(),
        img_gen1,
        img_gen2,
        w,
        z,
        inter,
    };
    pair.check_relations()?;
    Ok(pair)
}

impl EmbeddingPair {
    pub fn dim(&self) -> usize {
        2 * self.h
    }

    pub fn field(&self) -> ResidueField {
        self.alg1.field()
    }

    /// `w^2 - trace3 w + norm3`, which must equal `z^2`.
    pub fn zsq_from_w(&self) -> Matrix<Series> {
        let w = &self.w;
        w.mul(w).sub(&w.scale(&self.inter.trace3)).add(&scalar(self.dim(), &self.inter.norm3))
    }

    /// Relations (1)-(4) of the coproduct.
    pub fn check_relations(&self) -> Result<(), CoreError> {
        let a = &self.img_gen1;
        if !self.w.commutator(a).is_zero() {
            return Err(CoreError::Relation(1));
        }
        if !self.w.commutator(&self.z).is_zero() {
            return Err(CoreError::Relation(2));
        }
        let c1 = conj_image(&self.alg1, a);
        if !self.z.mul(a).sub(&c1.mul(&self.z)).is_zero() {
            return Err(CoreError::Relation(3));
        }
        if !self.zsq_from_w().sub(&self.z.mul(&self.z)).is_zero() {
            return Err(CoreError::Relation(4));
        }
        Ok(())
    }

    pub fn to_dto(&self) -> PairDto {
        let rows = |m: &Matrix<Series>| -> Vec<Vec<SeriesDto>> {
            (0..m.rows()).map(|i| m.row(i).iter().map(Series::to_dto).collect()).collect()
        };
        PairDto {
            h: self.h,
            side: self.side,
            alg1: self.alg1.to_dto(),
            alg2: self.alg2.to_dto(),
            img_gen1: rows(&self.img_gen1),
            img_gen2: rows(&self.img_gen2),
            prec: self.alg1.prec(),
        }
    }

    /// Rebuilds the pair from its serialized images, recomputing and re-validating w and z.
    pub fn from_dto(field: ResidueField, dto: &PairDto) -> Result<Self, CoreError> {
        let alg1 = QuadAlg::from_dto(field, &dto.alg1)?;
        let alg2 = QuadAlg::from_dto(field, &dto.alg2)?;
        let mat = |rows: &[Vec<SeriesDto>]| -> Result<Matrix<Series>, CoreError> {
            let r = rows
                .iter()
                .map(|r| r.iter().map(|s| Series::from_dto(field, s)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Matrix::from_rows(r))
        };
        let pair = build_pair(dto.side, &alg1, &alg2, mat(&dto.img_gen1)?, mat(&dto.img_gen2)?)?;
        if pair.h != dto.h {
            return Err(CoreError::Malformed(format!("declared h = {} but matrices give {}", dto.h, pair.h)));
        }
        Ok(pair)
    }
}

/// JSON form of a pair; w and z are recomputed on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDto {
    pub h: usize,
    pub side: Side,
    pub alg1: QuadAlgDto,
    pub alg2: QuadAlgDto,
    pub img_gen1: Vec<Vec<SeriesDto>>,
    pub img_gen2: Vec<Vec<SeriesDto>>,
    pub prec: i32,
}

/// `(w + z - ζ^σ trace(ϖ)) (ζ - ζ^σ)^{-1}`: the image of the second generator.
pub fn embed_partner_from_wz(
    alg1: &QuadAlg,
    img_gen1: &Matrix<Series>,
    w: &Matrix<Series>,
    z: &Matrix<Series>,
    alg2: &QuadAlg,
) -> Result<Matrix<Series>, CoreError> {
    let c1 = conj_image(alg1, img_gen1);
    if !w.commutator(img_gen1).is_zero() || !w.commutator(z).is_zero() {
        return Err(CoreError::Malformed("w must commute with the first image and with z".into()));
    }
    if !z.mul(img_gen1).sub(&c1.mul(z)).is_zero() {
        return Err(CoreError::Malformed("z is not semilinear for the first image".into()));
    }
    let diff_inv = img_gen1.sub(&c1).inverse()?;
    let x = w.add(z).sub(&c1.scale(alg2.gen_trace())).mul(&diff_inv);
    if !minpoly_residual(alg2, &x).is_zero() {
        return Err(CoreError::Minpoly(2));
    }
    Ok(x)
}

/// Outcome of the regular semisimplicity test.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub is_rss: bool,
    /// Characteristic polynomial of w over the first algebra, constant term first.
    pub w_minpoly_over_k1: Vec<QuadElem>,
    /// `v_t(det z)`, `None` when z is singular to the working precision.
    pub z_det_valuation: Option<i32>,
}

fn trace_over_k1(pair: &EmbeddingPair, x: &Matrix<Series>) -> Result<QuadElem, CoreError> {
    // tr_F(x) = τ + τ^σ and tr_F(A x) = ζ τ + ζ^σ τ^σ for the K1-trace τ
    let k = &pair.alg1;
    let zeta = k.gen();
    let zs = zeta.conjugate();
    let t1 = k.from_base(x.trace());
    let t2 = k.from_base(pair.img_gen1.mul(x).trace());
    Ok(t2.sub(&zs.mul(&t1)).mul(&zeta.sub(&zs).inv()?))
}

pub fn regularity(pair: &EmbeddingPair) -> Result<RegularityReport, CoreError> {
    let k = &pair.alg1;
    let det = pair.z.det()?;
    let z_det_valuation = (!det.is_zero()).then(|| det.valuation());
    let tau = trace_over_k1(pair, &pair.w)?;
    let (poly, separable) = match pair.h {
        1 => (vec![tau.neg(), k.one()], true),
        2 => {
            let tau2 = trace_over_k1(pair, &pair.w.mul(&pair.w))?;
            let two_inv = Series::from_int(k.field(), 2, k.prec()).inv()?;
            let nu = tau.mul(&tau).sub(&tau2).scale(&two_inv);
            let two = Series::from_int(k.field(), 2, k.prec());
            let disc = tau2.scale(&two).sub(&tau.mul(&tau));
            let sep = !disc.norm().is_zero();
            (vec![nu, tau.neg(), k.one()], sep)
        }
        h => return Err(CoreError::Unsupported(format!("regularity test for h = {h}"))),
    };
    Ok(RegularityReport { is_rss: separable && z_det_valuation.is_some(), w_minpoly_over_k1: poly, z_det_valuation })
}

/// Characteristic polynomial of w over F (constant term first).
pub fn matching_invariant(pair: &EmbeddingPair) -> Result<Vec<Series>, CoreError> {
    if !regularity(pair)?.is_rss {
        return Err(CoreError::NotRss);
    }
    Ok(pair.w.charpoly())
}

pub fn same_invariant(a: &[Series], b: &[Series]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_upto_prec(y))
}

/// The discrete valuation of a nonzero element of an étale quadratic algebra, per factor.
pub fn discrete_valuations(x: &QuadElem) -> Result<Vec<i32>, CoreError> {
    let alg = x.alg();
    match alg.kind() {
        AlgKind::Unramified => Ok(vec![x.a().val_bound().min(x.b().val_bound())]),
        AlgKind::Ramified => Ok(vec![x.norm_valuation()?]),
        AlgKind::Split => {
            let (u, v) = alg.split_pair(x).expect("split");
            if u.is_zero() || v.is_zero() {
                return Err(ArithError::InsufficientPrecision("zero split component".into()).into());
            }
            Ok(vec![u.valuation(), v.valuation()])
        }
    }
}

/// An element with prescribed discrete valuations: `t^m`, `ϖ^m` or `(t^m1, t^m2)`.
pub fn element_with_valuations(alg: &QuadAlg, vals: &[i32]) -> QuadElem {
    let f = alg.field();
    let p = alg.prec();
    match alg.kind() {
        AlgKind::Unramified => alg.from_base(Series::t_pow(f, vals[0], p)),
        AlgKind::Ramified => {
            let m = vals[0];
            let half = alg.from_base(Series::t_pow(f, m.div_euclid(2), p));
            if m.rem_euclid(2) == 1 {
                half.mul(&alg.gen())
            } else {
                half
            }
        }
        AlgKind::Split => {
            let x = Series::t_pow(f, vals[0], p);
            let y = Series::t_pow(f, vals[1], p);
            alg.elem(y.clone(), &x - &y)
        }
    }
}

/// `w^2 - trace3 w + norm3` evaluated in L.
pub fn zsq_in_l(inter: &IntermediateGenerator, w_elem: &QuadElem) -> QuadElem {
    let l = w_elem.alg();
    w_elem
        .mul(w_elem)
        .sub(&w_elem.scale(&inter.trace3))
        .add(&l.from_base(inter.norm3.clone()))
}

/// The analytic pair attached to `w_elem` ∈ L.
///
/// The first image is `diag(1, 1, 0, 0)`, w acts diagonally through `w_elem`, and z is
/// anti-diagonal with blocks `z0` and `Z / z0`, where `Z = w^2 - trace3 w + norm3` and
/// `z0 = ϖ_L^{⌈v_L(Z)/2⌉}` in each factor of L.
pub fn analytic_pair_for(inter: &IntermediateGenerator, w_elem: &QuadElem) -> Result<EmbeddingPair, CoreError> {
    let l = w_elem.alg();
    let f = l.field();
    let prec = l.prec();
    let zsq = zsq_in_l(inter, w_elem);
    let vals = discrete_valuations(&zsq)?;
    let half: Vec<i32> = vals.iter().map(|&v| (v + 1).div_euclid(2)).collect();
    let z0 = element_with_valuations(l, &half);
    let c = zsq.mul(&z0.inv()?);
    if !c.is_integral() {
        return Err(CoreError::Malformed("Z / z0 is not integral".into()));
    }
    let zero2 = Matrix::zeros_like(2, 2, &Series::zero(f, prec));
    let id2 = Matrix::identity_like(2, &Series::one(f, prec));
    let wm = l.mult_matrix(w_elem);
    let img1 = Matrix::blocks(&id2, &zero2, &zero2, &zero2);
    let w = Matrix::blocks(&wm, &zero2, &zero2, &wm);
    let z = Matrix::blocks(&zero2, &l.mult_matrix(&z0), &l.mult_matrix(&c), &zero2);
    let k0 = QuadAlg::split(f, prec);
    let k3 = inter.algebra()?;
    let img2 = embed_partner_from_wz(&k0, &img1, &w, &z, &k3)?;
    let partner = build_pair(Side::Analytic, &k0, &k3, img1, img2)?;
    if !partner.w.approx_eq(&w) || !partner.z.approx_eq(&z) {
        return Err(CoreError::Malformed("w, z not recovered from the partner".into()));
    }
    Ok(partner)
}

/// Analytic-side partner of a geometric pair whose w is multiplication by `w_elem` ∈ L.
pub fn build_matched_partner(pair: &EmbeddingPair, w_elem: &QuadElem) -> Result<EmbeddingPair, CoreError> {
    if pair.side != Side::Geometric {
        return Err(CoreError::SameSide(Side::Analytic));
    }
    if pair.h != 2 {
        return Err(CoreError::Unsupported(format!("partner synthesis for h = {}", pair.h)));
    }
    let source_inv = matching_invariant(pair)?;
    let partner = analytic_pair_for(&pair.inter, w_elem)?;
    if !same_invariant(&source_inv, &matching_invariant(&partner)?) {
        return Err(CoreError::InvariantMismatch);
    }
    Ok(partner)
}

/// Looks for `j` over K1 carrying the analytic pair onto the geometric one and checks that it
/// sends the intermediate generator to `ζ ⊗ ϖ + ζ^σ ⊗ ϖ^σ`.
pub fn verify_base_change(pair_g: &EmbeddingPair, pair_a: &EmbeddingPair) -> Result<bool, CoreError> {
    if pair_g.side == pair_a.side {
        return Err(CoreError::SameSide(pair_g.side));
    }
    let (g, a) = if pair_g.side == Side::Geometric { (pair_g, pair_a) } else { (pair_a, pair_g) };
    if !same_invariant(&matching_invariant(g)?, &matching_invariant(a)?) {
        return Err(CoreError::InvariantMismatch);
    }
    let k1 = &g.alg1;
    let lift = |m: &Matrix<Series>| m.map(|s| k1.from_base(s.clone()));
    let n = g.dim();
    let zeta = k1.gen();
    let zs = zeta.conjugate();
    let ag = lift(&g.img_gen1);
    let shift = Matrix::scalar_like(n, &zs);
    let e = ag.sub(&shift).scale(&zeta.sub(&zs).inv()?);
    let conds = [(lift(&a.img_gen1), e), (lift(&a.w), lift(&g.w)), (lift(&a.z), lift(&g.z))];
    // unknown j_{pq} at index p*n + q; rows encode (j X - Y j)_{ab}
    let zero = k1.zero();
    let mut rows = Vec::new();
    for (x, y) in &conds {
        for ra in 0..n {
            for cb in 0..n {
                let mut row = vec![zero.clone(); n * n];
                for c in 0..n {
                    row[ra * n + c] = row[ra * n + c].add(x.get(c, cb));
                    row[c * n + cb] = row[c * n + cb].sub(y.get(ra, c));
                }
                rows.push(row);
            }
        }
    }
    let system = Matrix::from_rows(rows);
    let basis = system.nullspace()?;
    if basis.is_empty() {
        return Ok(false);
    }
    let to_mat = |v: &[QuadElem]| Matrix::from_fn(n, n, |p, q| v[p * n + q].clone());
    let mut candidates: Vec<Vec<QuadElem>> = basis.clone();
    let coeffs = [k1.one(), zeta.clone(), zeta.add(&k1.one())];
    for c in &coeffs {
        let mut acc = basis[0].clone();
        for (i, b) in basis.iter().enumerate().skip(1) {
            let w = if i % 2 == 1 { c.clone() } else { c.mul(c) };
            acc = acc.iter().zip(b).map(|(x, y)| x.add(&w.mul(y))).collect();
        }
        candidates.push(acc);
    }
    let p = lift(&g.img_gen2);
    let tr2 = Matrix::scalar_like(n, &k1.from_base(g.alg2.gen_trace().clone()));
    let q_g = p.scale(&zeta).add(&tr2.sub(&p).scale(&zs));
    let q_a = lift(&a.img_gen2);
    for cand in candidates {
        let j = to_mat(&cand);
        let det = j.det()?;
        if det.vanishes() {
            continue;
        }
        return Ok(j.mul(&q_a).approx_eq(&q_g.mul(&j)));
    }
    Ok(false)
}
