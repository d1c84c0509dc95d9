//! Quadratic étale algebras over F, their orders R_n = O_F + t^n O_L and absolute values.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::base_rings::{ArithError, Fq, ResidueField, Series, SeriesDto};
use crate::lattice_engine::{hermite_form, LatticeError};
use crate::linalg::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuadError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Lattice(#[from] Box<LatticeError>),
    #[error("element lies in F and generates no quadratic order")]
    NotGenerator,
    #[error("generators do not span a full-rank lattice")]
    NotFullRank,
    #[error("bad minimal polynomial: {0}")]
    BadMinpoly(String),
    #[error("elements of different algebras")]
    AlgebraMismatch,
}

impl From<LatticeError> for QuadError {
    fn from(e: LatticeError) -> Self {
        QuadError::Lattice(Box::new(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum AlgKind {
    Split,
    Unramified,
    Ramified,
}

impl fmt::Display for AlgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgKind::Split => "split",
            AlgKind::Unramified => "unramified",
            AlgKind::Ramified => "ramified",
        })
    }
}

impl std::str::FromStr for AlgKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "split" => Ok(AlgKind::Split),
            "unramified" => Ok(AlgKind::Unramified),
            "ramified" => Ok(AlgKind::Ramified),
            other => Err(format!("unknown algebra kind '{other}'")),
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct AlgData {
    kind: AlgKind,
    field: ResidueField,
    /// Trace and norm of the generator g: its minimal polynomial is x^2 - s x + n.
    s: Series,
    n: Series,
    prec: i32,
}

/// A quadratic étale algebra F[g], g a root of `x^2 - s x + n`, with `{1, g}` an O_F-basis of O_L.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadAlg(Arc<AlgData>);

/// JSON form `{"kind": .., "minpoly": [n, -s, 1]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadAlgDto {
    pub kind: AlgKind,
    pub minpoly: Vec<SeriesDto>,
}

impl QuadAlg {
    fn build(kind: AlgKind, s: Series, n: Series, prec: i32) -> Self {
        let field = s.field();
        QuadAlg(Arc::new(AlgData { kind, field, s, n, prec }))
    }

    /// Root of `x^2 - x - c` with `1 + 4c` the first non-square found scanning constants.
    pub fn unramified(field: ResidueField, prec: i32) -> Self {
        let c = field
            .elements()
            .find(|&c| {
                let disc = field.add(field.one(), field.mul(field.from_int(4), c));
                !disc.is_zero() && !field.is_square(disc)
            })
            .expect("a non-square discriminant exists");
        let s = Series::one(field, prec);
        let n = Series::constant(field, field.neg(c), prec);
        Self::build(AlgKind::Unramified, s, n, prec)
    }

    /// Root of `x^2 - d`, with `d = t` or, when `twisted`, `d = ε t` for the least non-square ε.
    pub fn ramified(field: ResidueField, twisted: bool, prec: i32) -> Self {
        let eps = if twisted { field.nonsquare() } else { field.one() };
        let s = Series::zero(field, prec);
        let n = Series::monomial(field, field.neg(eps), 1, prec);
        Self::build(AlgKind::Ramified, s, n, prec)
    }

    /// F x F with generator (1, 0).
    pub fn split(field: ResidueField, prec: i32) -> Self {
        Self::build(AlgKind::Split, Series::one(field, prec), Series::zero(field, prec), prec)
    }

    pub fn of_kind(kind: AlgKind, field: ResidueField, prec: i32) -> Self {
        match kind {
            AlgKind::Split => Self::split(field, prec),
            AlgKind::Unramified => Self::unramified(field, prec),
            AlgKind::Ramified => Self::ramified(field, false, prec),
        }
    }

    /// Classifies `x^2 - s x + n` by its discriminant; the root must generate the maximal order.
    pub fn from_minpoly(s: Series, n: Series) -> Result<Self, QuadError> {
        if s.field() != n.field() {
            return Err(ArithError::FieldMismatch.into());
        }
        if !s.is_integral() || !n.is_integral() {
            return Err(QuadError::BadMinpoly("coefficients are not integral".into()));
        }
        let field = s.field();
        let four = Series::from_int(field, 4, s.prec());
        let disc = &(&s * &s) - &(&four * &n);
        if disc.is_zero() {
            return Err(QuadError::BadMinpoly("repeated root".into()));
        }
        let prec = s.prec().min(n.prec());
        let kind = match disc.valuation() {
            1 => AlgKind::Ramified,
            0 if field.is_square(disc.lead().expect("nonzero")) => AlgKind::Split,
            0 => AlgKind::Unramified,
            v => {
                return Err(QuadError::BadMinpoly(format!(
                    "discriminant valuation {v}: root does not generate the maximal order"
                )))
            }
        };
        if kind == AlgKind::Split && !(s == Series::one(field, s.prec()) && n.is_zero()) {
            return Err(QuadError::BadMinpoly("split algebras use the generator (1, 0)".into()));
        }
        Ok(Self::build(kind, s, n, prec))
    }

    pub fn kind(&self) -> AlgKind {
        self.0.kind
    }

    pub fn field(&self) -> ResidueField {
        self.0.field
    }

    pub fn q(&self) -> u64 {
        self.0.field.order()
    }

    pub fn prec(&self) -> i32 {
        self.0.prec
    }

    pub fn gen_trace(&self) -> &Series {
        &self.0.s
    }

    pub fn gen_norm(&self) -> &Series {
        &self.0.n
    }

    /// Coefficients `[n, -s, 1]` of the generator's minimal polynomial.
    pub fn minpoly(&self) -> [Series; 3] {
        [self.0.n.clone(), -&self.0.s, Series::one(self.field(), self.prec())]
    }

    /// `s^2 - 4n`.
    pub fn discriminant(&self) -> Series {
        let four = Series::from_int(self.field(), 4, self.prec());
        &(&self.0.s * &self.0.s) - &(&four * &self.0.n)
    }

    pub fn elem(&self, a: Series, b: Series) -> QuadElem {
        QuadElem { alg: self.clone(), a, b }
    }

    pub fn from_base(&self, a: Series) -> QuadElem {
        let z = Series::zero(self.field(), a.prec().max(self.prec()));
        self.elem(a, z)
    }

    pub fn zero(&self) -> QuadElem {
        self.from_base(Series::zero(self.field(), self.prec()))
    }

    pub fn one(&self) -> QuadElem {
        self.from_base(Series::one(self.field(), self.prec()))
    }

    pub fn gen(&self) -> QuadElem {
        self.elem(Series::zero(self.field(), self.prec()), Series::one(self.field(), self.prec()))
    }

    pub fn to_dto(&self) -> QuadAlgDto {
        QuadAlgDto { kind: self.kind(), minpoly: self.minpoly().iter().map(Series::to_dto).collect() }
    }

    pub fn from_dto(field: ResidueField, dto: &QuadAlgDto) -> Result<Self, QuadError> {
        if dto.minpoly.len() != 3 {
            return Err(QuadError::BadMinpoly("expected three coefficients".into()));
        }
        let c: Vec<Series> =
            dto.minpoly.iter().map(|d| Series::from_dto(field, d)).collect::<Result<_, _>>()?;
        if !(&c[2] - &Series::one(field, c[2].prec())).is_zero() {
            return Err(QuadError::BadMinpoly("minimal polynomial is not monic".into()));
        }
        let alg = Self::from_minpoly(-&c[1], c[0].clone())?;
        if alg.kind() != dto.kind {
            return Err(QuadError::BadMinpoly(format!("declared {} but minpoly is {}", dto.kind, alg.kind())));
        }
        Ok(alg)
    }

    /// Matrix of multiplication by `x` on the basis `{1, g}`.
    pub fn mult_matrix(&self, x: &QuadElem) -> Matrix<Series> {
        let (a, b) = (&x.a, &x.b);
        let c10 = -&(b * &self.0.n);
        let c11 = a + &(b * &self.0.s);
        Matrix::from_rows(vec![vec![a.clone(), c10], vec![b.clone(), c11]])
    }

    /// Element with the given `{1, g}` coordinates.
    pub fn from_coords(&self, v: &[Series]) -> QuadElem {
        self.elem(v[0].clone(), v[1].clone())
    }

    /// Coordinates `(x, y)` of an element of the split algebra F x F.
    pub fn split_pair(&self, x: &QuadElem) -> Option<(Series, Series)> {
        (self.kind() == AlgKind::Split).then(|| (&x.a + &x.b, x.a.clone()))
    }

    /// Basis matrix (columns in `{1, g}` coordinates) of `R_n = O_F + t^n O_L`.
    pub fn order_basis(&self, n: u32) -> Matrix<Series> {
        let f = self.field();
        let p = self.prec() + n as i32;
        Matrix::from_rows(vec![
            vec![Series::one(f, p), Series::zero(f, p)],
            vec![Series::zero(f, p), Series::t_pow(f, n as i32, self.prec())],
        ])
    }
}

/// `a + b g` in a [`QuadAlg`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadElem {
    alg: QuadAlg,
    a: Series,
    b: Series,
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})·g", self.a, self.b)
    }
}

impl QuadElem {
    pub fn alg(&self) -> &QuadAlg {
        &self.alg
    }

    pub fn a(&self) -> &Series {
        &self.a
    }

    pub fn b(&self) -> &Series {
        &self.b
    }

    pub fn coords(&self) -> [Series; 2] {
        [self.a.clone(), self.b.clone()]
    }

    fn same_alg(&self, o: &QuadElem) {
        assert!(self.alg == o.alg, "elements of different quadratic algebras");
    }

    pub fn add(&self, o: &QuadElem) -> QuadElem {
        self.same_alg(o);
        self.alg.elem(&self.a + &o.a, &self.b + &o.b)
    }

    pub fn sub(&self, o: &QuadElem) -> QuadElem {
        self.same_alg(o);
        self.alg.elem(&self.a - &o.a, &self.b - &o.b)
    }

    pub fn neg(&self) -> QuadElem {
        self.alg.elem(-&self.a, -&self.b)
    }

    /// `(a + b g)(c + d g) = (ac - bd n) + (ad + bc + bd s) g`.
    pub fn mul(&self, o: &QuadElem) -> QuadElem {
        self.same_alg(o);
        let bd = &self.b * &o.b;
        let a = &(&self.a * &o.a) - &(&bd * &self.alg.0.n);
        let b = &(&(&self.a * &o.b) + &(&self.b * &o.a)) + &(&bd * &self.alg.0.s);
        self.alg.elem(a, b)
    }

    pub fn scale(&self, c: &Series) -> QuadElem {
        self.alg.elem(c * &self.a, c * &self.b)
    }

    pub fn pow(&self, e: u32) -> QuadElem {
        let mut acc = self.alg.one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `σ(a + b g) = (a + b s) - b g`.
    pub fn conjugate(&self) -> QuadElem {
        self.alg.elem(&self.a + &(&self.b * &self.alg.0.s), -&self.b)
    }

    pub fn trace(&self) -> Series {
        let two = Series::from_int(self.a.field(), 2, self.a.prec().max(1));
        &(&two * &self.a) + &(&self.b * &self.alg.0.s)
    }

    pub fn norm(&self) -> Series {
        let ab = &self.a * &self.b;
        &(&(&self.a * &self.a) + &(&ab * &self.alg.0.s)) + &(&(&self.b * &self.b) * &self.alg.0.n)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn inv(&self) -> Result<QuadElem, QuadError> {
        let nm = self.norm();
        if nm.is_zero() {
            return Err(ArithError::NotInvertible(format!("{self} has zero norm")).into());
        }
        let ninv = nm.inv()?;
        Ok(self.conjugate().scale(&ninv))
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integral() && self.b.is_integral()
    }

    /// Integral with unit norm.
    pub fn is_unit(&self) -> bool {
        self.is_integral() && self.norm().valuation() == 0
    }

    /// Exponent of the O_F-lattice index `#(O_L / x O_L) = q^{v_F(N x)}`.
    pub fn norm_valuation(&self) -> Result<i32, QuadError> {
        let nm = self.norm();
        if nm.is_zero() {
            return Err(ArithError::InsufficientPrecision(format!("norm of {self} vanishes to precision")).into());
        }
        Ok(nm.valuation())
    }

    pub fn approx_eq(&self, o: &QuadElem) -> bool {
        self.sub(o).is_zero()
    }

    pub fn in_base(&self) -> bool {
        self.b.is_zero()
    }
}

impl Scalar for QuadElem {
    fn zero_like(&self) -> Self {
        self.alg.zero()
    }
    fn one_like(&self) -> Self {
        self.alg.one()
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negate(&self) -> Self {
        self.neg()
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn try_inverse(&self) -> Result<Self, ArithError> {
        self.inv().map_err(|e| match e {
            QuadError::Arith(a) => a,
            other => ArithError::NotInvertible(other.to_string()),
        })
    }
    fn weight(&self) -> i32 {
        self.a.val_bound().min(self.b.val_bound())
    }
}

/// `log_q |x|_L^{-1}` as an exact rational: `v_F(N_{L/F} x)`.
pub fn abs_value_exponent(x: &QuadElem) -> Result<Ratio<i64>, QuadError> {
    Ok(Ratio::from_integer(x.norm_valuation()? as i64))
}

/// The r with `O_F[w] = R_r`: the valuation of the g-coordinate.
pub fn conductor(w: &QuadElem) -> Result<u32, QuadError> {
    if w.b.is_zero() {
        return Err(QuadError::NotGenerator);
    }
    if !w.is_integral() {
        return Err(QuadError::BadMinpoly(format!("{w} is not integral")));
    }
    Ok(w.b.valuation() as u32)
}

/// The order `R_n` inside a quadratic algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderClass {
    pub alg: QuadAlg,
    pub n: u32,
}

/// `[O_L^x : R_n^x]`.
pub fn unit_index(kind: AlgKind, n: u32, q: u64) -> u64 {
    if n == 0 {
        return 1;
    }
    let qn1 = q.pow(n - 1);
    match kind {
        AlgKind::Unramified => qn1 * (q + 1),
        AlgKind::Ramified => qn1 * q,
        AlgKind::Split => qn1 * (q - 1),
    }
}

/// Index-q sublattices of `R_n` grouped by the conductor of their multiplier order.
pub fn count_sublattices_by_type(kind: AlgKind, n: u32, q: u64) -> BTreeMap<u32, u64> {
    let mut out = BTreeMap::new();
    if n >= 1 {
        out.insert(n + 1, q);
        out.insert(n - 1, 1);
        return out;
    }
    match kind {
        AlgKind::Unramified => {
            out.insert(1, q + 1);
        }
        AlgKind::Ramified => {
            out.insert(1, q);
            out.insert(0, 1);
        }
        AlgKind::Split => {
            out.insert(1, q - 1);
            out.insert(0, 2);
        }
    }
    out
}

/// Writes the lattice spanned by `gens` as `x R_n`.
pub fn classify_fractional(alg: &QuadAlg, gens: &[QuadElem]) -> Result<(u32, QuadElem), QuadError> {
    if gens.is_empty() {
        return Err(QuadError::NotFullRank);
    }
    let cols: Vec<Vec<Series>> = gens.iter().map(|g| g.coords().to_vec()).collect();
    let lat = hermite_form(&Matrix::from_columns(&cols)).map_err(|e| match e {
        LatticeError::RankDeficient => QuadError::NotFullRank,
        other => other.into(),
    })?;
    let h = lat.basis();
    let m = h.entries().map(Series::val_bound).min().expect("2x2");
    let hinv = h.inverse()?;
    let big_m = -hinv.entries().map(Series::val_bound).min().expect("2x2");
    let n = (big_m - m).max(0) as u32;
    let f = alg.field();
    let c0 = alg.from_coords(&h.column(0));
    let c1 = alg.from_coords(&h.column(1));
    let shift = Series::t_pow(f, -m, alg.prec());
    for x0 in f.elements() {
        for x1 in f.elements() {
            if x0.is_zero() && x1.is_zero() {
                continue;
            }
            let x = c0.scale(&Series::constant(f, x0, alg.prec())).add(&c1.scale(&Series::constant(f, x1, alg.prec())));
            if x.scale(&shift).is_unit() {
                return Ok((n, x));
            }
        }
    }
    Err(QuadError::NotFullRank)
}

/// Residue-level constant as a series of the algebra's precision.
pub fn constant(alg: &QuadAlg, c: Fq) -> Series {
    Series::constant(alg.field(), c, alg.prec())
}
