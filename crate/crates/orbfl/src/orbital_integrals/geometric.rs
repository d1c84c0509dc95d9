//! The space K1 ⊗ L ≅ F^4 with ordered basis 1, g, ζ, ζg, where g generates L and ζ generates K1.

use crate::base_rings::Series;
use crate::biquadratic_core::{
    build_pair, discrete_valuations, element_with_valuations, embed_partner_from_wz, zsq_in_l, EmbeddingPair,
    IntermediateGenerator, Side,
};
use crate::lattice_engine::{hermite_form, is_stable, Lattice, Region};
use crate::linalg::Matrix;
use crate::quadratic_algebras::{AlgKind, QuadAlg, QuadElem};

use super::OrbitError;

/// `u0 + u1 ζ` with `u0, u1 ∈ L`.
#[derive(Debug, Clone)]
pub struct TensorElem {
    pub u0: QuadElem,
    pub u1: QuadElem,
}

#[derive(Debug, Clone)]
pub struct TensorModel {
    pub k1: QuadAlg,
    pub l: QuadAlg,
}

impl TensorModel {
    pub fn new(k1: &QuadAlg, l: &QuadAlg) -> Self {
        TensorModel { k1: k1.clone(), l: l.clone() }
    }

    fn s1(&self) -> &Series {
        self.k1.gen_trace()
    }

    fn n1(&self) -> &Series {
        self.k1.gen_norm()
    }

    pub fn scalar(&self, x: &QuadElem) -> TensorElem {
        TensorElem { u0: x.clone(), u1: self.l.zero() }
    }

    pub fn one(&self) -> TensorElem {
        self.scalar(&self.l.one())
    }

    pub fn zeta(&self) -> TensorElem {
        TensorElem { u0: self.l.zero(), u1: self.l.one() }
    }

    pub fn add(&self, a: &TensorElem, b: &TensorElem) -> TensorElem {
        TensorElem { u0: a.u0.add(&b.u0), u1: a.u1.add(&b.u1) }
    }

    pub fn sub(&self, a: &TensorElem, b: &TensorElem) -> TensorElem {
        TensorElem { u0: a.u0.sub(&b.u0), u1: a.u1.sub(&b.u1) }
    }

    pub fn mul(&self, a: &TensorElem, b: &TensorElem) -> TensorElem {
        let p = a.u1.mul(&b.u1);
        TensorElem {
            u0: a.u0.mul(&b.u0).sub(&p.scale(self.n1())),
            u1: a.u0.mul(&b.u1).add(&a.u1.mul(&b.u0)).add(&p.scale(self.s1())),
        }
    }

    pub fn scale(&self, a: &TensorElem, x: &QuadElem) -> TensorElem {
        TensorElem { u0: a.u0.mul(x), u1: a.u1.mul(x) }
    }

    /// The K1-conjugation `ζ ↦ ζ^σ`, trivial on L.
    pub fn sigma(&self, a: &TensorElem) -> TensorElem {
        TensorElem { u0: a.u0.add(&a.u1.scale(self.s1())), u1: a.u1.neg() }
    }

    /// `a σ(a)`, an element of L.
    pub fn norm(&self, a: &TensorElem) -> QuadElem {
        let (x, y) = (&a.u0, &a.u1);
        x.mul(x).add(&x.mul(y).scale(self.s1())).add(&y.mul(y).scale(self.n1()))
    }

    pub fn coords(&self, a: &TensorElem) -> Vec<Series> {
        vec![a.u0.a().clone(), a.u0.b().clone(), a.u1.a().clone(), a.u1.b().clone()]
    }

    pub fn basis(&self) -> [TensorElem; 4] {
        let g = self.l.gen();
        let z = self.l.zero();
        [
            self.one(),
            TensorElem { u0: g.clone(), u1: z.clone() },
            self.zeta(),
            TensorElem { u0: z, u1: g },
        ]
    }

    pub fn matrix_of(&self, f: impl Fn(&TensorElem) -> TensorElem) -> Matrix<Series> {
        let cols: Vec<Vec<Series>> = self.basis().iter().map(|b| self.coords(&f(b))).collect();
        Matrix::from_columns(&cols)
    }

    /// `γ O_{K1 ⊗ L}` when L is a field.
    pub fn ideal_lattice(&self, gamma: &TensorElem) -> Result<Lattice, OrbitError> {
        let cols: Vec<Vec<Series>> = self.basis().iter().map(|b| self.coords(&self.mul(gamma, b))).collect();
        Ok(hermite_form(&Matrix::from_columns(&cols))?)
    }

    /// The idempotent of K1 ⊗ L on which ζ acts as the generator of L; needs L ≅ K1 canonically.
    pub fn idempotent(&self) -> Result<TensorElem, OrbitError> {
        let g = self.l.gen();
        let gs = g.conjugate();
        let k = g.sub(&gs).inv()?;
        Ok(TensorElem { u0: gs.mul(&k).neg(), u1: k })
    }

    /// Solves `N(y) = target` for a unit target when K1 ⊗ L is an unramified field over L.
    pub fn solve_unit_norm(&self, target: &QuadElem) -> Result<TensorElem, OrbitError> {
        let f = self.l.field();
        let prec = self.l.prec();
        let residue = target.a().coeff(0);
        let mut start = None;
        'search: for a in f.elements() {
            for b in f.elements() {
                let cand = TensorElem {
                    u0: self.l.from_base(Series::constant(f, a, prec)),
                    u1: self.l.from_base(Series::constant(f, b, prec)),
                };
                if self.norm(&cand).a().coeff(0) == residue {
                    start = Some(cand);
                    break 'search;
                }
            }
        }
        let mut y = start.ok_or_else(|| OrbitError::Inconsistent("residue norm equation has no solution".into()))?;
        let half = Series::from_int(f, 2, prec).inv()?;
        for _ in 0..(2 * prec.max(1) as usize + 8) {
            let n = self.norm(&y);
            if n.approx_eq(target) {
                return Ok(y);
            }
            let corr = target.mul(&n.inv()?).sub(&self.l.one()).scale(&half).add(&self.l.one());
            y = self.scale(&y, &corr);
        }
        Err(OrbitError::Inconsistent("norm equation did not converge".into()))
    }
}

/// Geometric-side data: the model, the semilinear element y with `z(x) = y σ(x)`, the
/// saturations `γ O` that represent lattices modulo L^×, and the resulting pair.
#[derive(Debug, Clone)]
pub struct GeometricSide {
    pub model: TensorModel,
    pub y: TensorElem,
    pub gammas: Vec<TensorElem>,
    pub l_gen: Matrix<Series>,
    pub pair: EmbeddingPair,
}

/// Builds the geometric pair for `w ∈ L`; `None` when L is split or `z^2` is not a norm from K1 ⊗ L.
pub fn geometric_side(k1: &QuadAlg, k2: &QuadAlg, w: &QuadElem) -> Result<Option<GeometricSide>, OrbitError> {
    let l = w.alg();
    let model = TensorModel::new(k1, l);
    let inter = IntermediateGenerator::from_algebras(k1, k2);
    let zsq = zsq_in_l(&inter, w);
    let vals = discrete_valuations(&zsq)?;
    let (y, gammas) = match l.kind() {
        AlgKind::Split => return Ok(None),
        AlgKind::Unramified => {
            if !l.gen_trace().eq_upto_prec(k1.gen_trace()) || !l.gen_norm().eq_upto_prec(k1.gen_norm()) {
                return Err(OrbitError::Inconsistent("unramified L must share the generator of K1".into()));
            }
            let e1 = model.idempotent()?;
            let f = l.field();
            let shifted = |x: &QuadElem| model.add(&model.one(), &model.scale(&e1, &x.sub(&l.one())));
            let y = shifted(&zsq);
            let gammas = (0..=vals[0]).map(|m| shifted(&l.from_base(Series::t_pow(f, m, l.prec())))).collect();
            (y, gammas)
        }
        AlgKind::Ramified => {
            if vals[0] % 2 != 0 {
                return Ok(None);
            }
            let lambda = element_with_valuations(l, &[vals[0] / 2]);
            let unit = zsq.mul(&lambda.mul(&lambda).inv()?);
            let y0 = model.solve_unit_norm(&unit)?;
            (model.scale(&y0, &lambda), vec![model.one()])
        }
    };
    let a = model.matrix_of(|x| model.mul(&model.zeta(), x));
    let wm = model.matrix_of(|x| model.scale(x, w));
    let zm = model.matrix_of(|x| model.mul(&y, &model.sigma(x)));
    let img2 = embed_partner_from_wz(k1, &a, &wm, &zm, k2)?;
    let pair = build_pair(Side::Geometric, k1, k2, a, img2)?;
    let l_gen = model.matrix_of(|x| model.scale(x, &l.gen()));
    Ok(Some(GeometricSide { model, y, gammas, l_gen, pair }))
}

impl GeometricSide {
    /// Counts lattices stable under both images whose saturation is one of the chosen `γ O`.
    pub fn count(&self, r: u32, guard: usize) -> Result<u64, OrbitError> {
        let constraints = [self.pair.img_gen1.clone(), self.pair.img_gen2.clone()];
        let saturating = [self.pair.img_gen1.clone(), self.l_gen.clone()];
        let mut total = 0;
        for gamma in &self.gammas {
            let top = self.model.ideal_lattice(gamma)?;
            if !is_stable(&top, &self.pair.z)? {
                continue;
            }
            let bot = top.scale_t(r as i32);
            let region = Region::new(&top, &bot, &constraints, guard)?;
            for s in region.submodules()? {
                if region.saturate(&s, &saturating)?.is_everything() {
                    total += 1;
                }
            }
        }
        Ok(total)
    }
}
