//! Full-rank O_F-lattices in F^n: Hermite forms, indices, stability and bounded enumeration.

mod quotient;

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

pub use quotient::{nullspace_fq, Poly, Quotient, SubModule};

use crate::base_rings::{ArithError, Fq, ResidueField, Series, SeriesDto};
use crate::linalg::Matrix;

/// Quotient length allowed in enumerations unless overridden.
pub const DEFAULT_GUARD: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("generators do not have full rank")]
    RankDeficient,
    #[error("quotient of length {len} exceeds the guard {guard}")]
    TooLarge { len: usize, guard: usize },
    #[error("lower lattice is not contained in the upper one")]
    NotContained,
    #[error("lattice is not stable under {0}")]
    Unstable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl LatticeError {
    pub fn is_guard(&self) -> bool {
        matches!(self, LatticeError::TooLarge { .. })
    }
}

/// A lattice in canonical column Hermite form.
///
/// The basis is upper triangular with `t^{d_i}` on the diagonal and entries above it reduced
/// below `t^{d_i}`; entries are exact Laurent polynomials carried at precision `cap`.
#[derive(Clone)]
pub struct Lattice {
    diag: Vec<i32>,
    basis: Matrix<Series>,
    cap: i32,
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Lattice(diag {:?}) {:?}", self.diag, self.basis)
    }
}

type Key = (Vec<i32>, Vec<(i32, Vec<Fq>)>);

impl Lattice {
    fn key(&self) -> Key {
        let mut ent = Vec::new();
        for j in 0..self.dim() {
            for i in 0..j {
                let s = self.basis.get(i, j);
                if s.is_zero() {
                    ent.push((i32::MAX, Vec::new()));
                } else {
                    let v = s.valuation();
                    ent.push((v, (v..self.diag[i]).map(|e| s.coeff(e)).collect()));
                }
            }
        }
        (self.diag.clone(), ent)
    }

    pub fn from_basis(m: &Matrix<Series>) -> Result<Self, LatticeError> {
        hermite_form(m)
    }

    /// O_F^n.
    pub fn standard(field: ResidueField, n: usize, prec: i32) -> Self {
        let basis = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                Series::one(field, prec)
            } else {
                Series::zero(field, prec)
            }
        });
        Lattice { diag: vec![0; n], basis, cap: prec }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn field(&self) -> ResidueField {
        self.basis.get(0, 0).field()
    }

    pub fn basis(&self) -> &Matrix<Series> {
        &self.basis
    }

    pub fn diag(&self) -> &[i32] {
        &self.diag
    }

    /// Precision carried by the canonical entries.
    pub fn prec(&self) -> i32 {
        self.cap
    }

    /// `v_t(det basis)`.
    pub fn det_valuation(&self) -> i64 {
        self.diag.iter().map(|&d| d as i64).sum()
    }

    /// `t^k Λ`.
    pub fn scale_t(&self, k: i32) -> Lattice {
        let basis = self.basis.map(|s| s.shift(k));
        hermite_form(&basis).expect("scaling keeps full rank")
    }

    /// `M Λ` for an invertible `M`.
    pub fn image(&self, m: &Matrix<Series>) -> Result<Lattice, LatticeError> {
        hermite_form(&m.mul(&self.basis))
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice, LatticeError> {
        hermite_form(&self.basis.hstack(&other.basis))
    }

    /// Coordinates of the columns of `m` in this lattice's basis.
    pub fn coordinates(&self, m: &Matrix<Series>) -> Result<Matrix<Series>, LatticeError> {
        Ok(self.basis.inverse()?.mul(m))
    }

    pub fn contains(&self, other: &Lattice) -> Result<bool, LatticeError> {
        let c = self.coordinates(&other.basis)?;
        let inside = c.entries().all(Series::is_integral);
        Ok(inside)
    }

    pub fn contains_vec(&self, v: &[Series]) -> Result<bool, LatticeError> {
        let c = self.basis.inverse()?.mul_vec(v);
        Ok(c.iter().all(Series::is_integral))
    }

    pub fn to_dto(&self) -> LatticeDto {
        LatticeDto {
            basis: (0..self.dim()).map(|i| self.basis.row(i).iter().map(Series::to_dto).collect()).collect(),
        }
    }

    pub fn from_dto(field: ResidueField, dto: &LatticeDto) -> Result<Self, LatticeError> {
        let rows = dto
            .basis
            .iter()
            .map(|r| r.iter().map(|s| Series::from_dto(field, s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        hermite_form(&Matrix::from_rows(rows))
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Lattice {}

impl Hash for Lattice {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// JSON form: rows of the canonical basis matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDto {
    pub basis: Vec<Vec<SeriesDto>>,
}

/// Canonical column Hermite form of the lattice generated by the columns of `m`.
///
/// Rows are processed bottom-up; the pivot is the entry of least valuation, ties going to the
/// lowest column index.
pub fn hermite_form(m: &Matrix<Series>) -> Result<Lattice, LatticeError> {
    let n = m.rows();
    let field = m.get(0, 0).field();
    let cap = m.entries().map(Series::prec).min().unwrap_or(0);
    let mut free: Vec<Vec<Series>> = m.columns();
    let mut cols: Vec<Vec<Series>> = Vec::with_capacity(n);
    let mut diag = vec![0; n];
    for i in (0..n).rev() {
        let idx = free
            .iter()
            .enumerate()
            .filter(|(_, c)| !c[i].is_zero())
            .min_by_key(|(j, c)| (c[i].valuation(), *j))
            .map(|(j, _)| j)
            .ok_or(LatticeError::RankDeficient)?;
        let mut piv = free.remove(idx);
        let d = piv[i].valuation();
        let unit_inv = piv[i].shift(-d).inv()?;
        piv = piv.iter().map(|x| x * &unit_inv).collect();
        piv[i] = Series::t_pow(field, d, cap.max(d + 1) - d);
        for c in free.iter_mut() {
            if c[i].is_zero() {
                continue;
            }
            let factor = c[i].shift(-d);
            for r in 0..n {
                if r != i {
                    c[r] = &c[r] - &(&factor * &piv[r]);
                }
            }
            c[i] = Series::zero(field, c[i].prec());
        }
        diag[i] = d;
        cols.push(piv);
    }
    cols.reverse();
    // reduce above the diagonal, nearest pivot first
    for j in 0..n {
        for i in (0..j).rev() {
            let d = diag[i];
            let e = cols[j][i].clone();
            if e.is_zero() && e.prec() >= d {
                continue;
            }
            if e.prec() < d {
                return Err(ArithError::InsufficientPrecision(format!(
                    "Hermite entry known only to O(t^{}) but reduction needs t^{d}",
                    e.prec()
                ))
                .into());
            }
            let head = e.head(d, e.prec());
            let quo = (&e - &head).shift(-d);
            if !quo.is_zero() {
                let ci = cols[i].clone();
                for r in 0..n {
                    cols[j][r] = &cols[j][r] - &(&quo * &ci[r]);
                }
            }
            cols[j][i] = head;
        }
    }
    let top = diag.iter().copied().max().unwrap_or(0);
    let cap = cap.max(top + 1);
    let basis = Matrix::from_fn(n, n, |i, j| {
        if i > j {
            Series::zero(field, cap)
        } else if i == j {
            Series::t_pow(field, diag[i], cap - diag[i])
        } else {
            cols[j][i].head(diag[i], cap)
        }
    });
    Ok(Lattice { diag, basis, cap })
}

/// `log_q [Λ1 : Λ2]`, the generalized index; negative when Λ2 is the larger one.
pub fn index_exp(l1: &Lattice, l2: &Lattice) -> i64 {
    assert_eq!(l1.dim(), l2.dim(), "lattices in different dimensions");
    l2.det_valuation() - l1.det_valuation()
}

/// Whether `M Λ ⊆ Λ`.
pub fn is_stable(l: &Lattice, m: &Matrix<Series>) -> Result<bool, LatticeError> {
    let c = l.coordinates(&m.mul(l.basis()))?;
    for x in c.entries() {
        if x.is_zero() {
            continue;
        }
        if x.valuation() < 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Splits Λ along a coordinate idempotent `e = diag(1,..,1,0,..,0)` (in any order).
///
/// Returns `eΛ` and `(1-e)Λ` as lattices in the coordinates selected by `e` and `1-e`.
pub fn split_by_idempotent(l: &Lattice, e: &Matrix<Series>) -> Result<(Lattice, Lattice), LatticeError> {
    let n = l.dim();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = e.get(i, j);
            if i != j && !x.is_zero() {
                return Err(LatticeError::Unsupported("idempotent must be a coordinate projection".into()));
            }
        }
        let d = e.get(i, i);
        if d.is_zero() {
            minus.push(i);
        } else if (d - &Series::one(d.field(), d.prec())).is_zero() {
            plus.push(i);
        } else {
            return Err(LatticeError::Unsupported("matrix is not idempotent".into()));
        }
    }
    if !is_stable(l, e)? {
        return Err(LatticeError::Unstable("the idempotent".into()));
    }
    let img = l.basis();
    let restrict = |rows: &[usize]| -> Result<Lattice, LatticeError> {
        let cols: Vec<Vec<Series>> = img
            .columns()
            .into_iter()
            .map(|c| rows.iter().map(|&r| c[r].clone()).collect::<Vec<_>>())
            .collect();
        hermite_form(&Matrix::from_columns(&cols))
    };
    Ok((restrict(&plus)?, restrict(&minus)?))
}

fn to_poly(s: &Series, k: usize) -> Result<Poly, LatticeError> {
    if (s.prec() as i64) < k as i64 {
        return Err(ArithError::InsufficientPrecision(format!("entry {s} needed modulo t^{k}")).into());
    }
    Ok((0..k as i32).map(|i| s.coeff(i)).collect())
}

fn from_poly(field: ResidueField, p: &[Fq], cap: i32) -> Series {
    Series::from_coeffs(field, 0, p, cap)
}

/// The finite region between two nested lattices, in coordinates of the upper one.
pub struct Region {
    top: Lattice,
    quotient: Quotient,
    bottom: Vec<Vec<Poly>>,
    post_filters: Vec<Matrix<Series>>,
    top_coords: Vec<Matrix<Series>>,
}

impl Region {
    /// Prepares `top ⊇ Λ ⊇ bot` with stability constraints; constraints that do not preserve
    /// `top` are checked after the fact.
    pub fn new(
        top: &Lattice,
        bot: &Lattice,
        constraints: &[Matrix<Series>],
        guard: usize,
    ) -> Result<Self, LatticeError> {
        let n = top.dim();
        let field = top.field();
        let x = top.basis().inverse()?;
        let b = x.mul(bot.basis());
        if b.entries().any(|s| !s.is_integral()) {
            return Err(LatticeError::NotContained);
        }
        let len = index_exp(top, bot);
        if len < 0 {
            return Err(LatticeError::NotContained);
        }
        if len as usize > guard {
            return Err(LatticeError::TooLarge { len: len as usize, guard });
        }
        let binv = b.inverse()?;
        let k = binv.entries().filter(|s| !s.is_zero()).map(|s| -s.valuation()).max().unwrap_or(0).max(0) as usize;
        let bottom = b
            .columns()
            .iter()
            .map(|c| c.iter().map(|s| to_poly(s, k)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let mut endos = Vec::new();
        let mut post = Vec::new();
        let mut top_coords = Vec::new();
        for m in constraints {
            let mc = x.mul(m).mul(top.basis());
            if mc.entries().all(Series::is_integral) {
                let rows = (0..n)
                    .map(|i| (0..n).map(|j| to_poly(mc.get(i, j), k)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                endos.push(rows);
                top_coords.push(mc);
            } else {
                post.push(m.clone());
            }
        }
        Ok(Region { top: top.clone(), quotient: Quotient::new(field, n, k, endos), bottom, post_filters: post, top_coords })
    }

    pub fn quotient(&self) -> &Quotient {
        &self.quotient
    }

    /// Constraint matrices that preserve the upper lattice, in its coordinates.
    pub fn constraints_in_top(&self) -> &[Matrix<Series>] {
        &self.top_coords
    }

    /// All constrained submodules, as canonical quotient data.
    pub fn submodules(&self) -> Result<Vec<SubModule>, LatticeError> {
        let all = self.quotient.enumerate_above(&self.bottom);
        if self.post_filters.is_empty() {
            return Ok(all);
        }
        let mut out = Vec::new();
        for s in all {
            let l = self.lattice_of(&s)?;
            let mut ok = true;
            for m in &self.post_filters {
                if !is_stable(&l, m)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Converts quotient data back to a lattice in the ambient space.
    pub fn lattice_of(&self, s: &SubModule) -> Result<Lattice, LatticeError> {
        let n = self.quotient.dim();
        let k = self.quotient.k();
        let field = self.top.field();
        let cap = self.top.prec().max(k as i32 + 1);
        let h = Matrix::from_fn(n, n, |i, j| {
            if s.diag[j] == k {
                if i == j {
                    Series::t_pow(field, k as i32, cap)
                } else {
                    Series::zero(field, cap)
                }
            } else {
                from_poly(field, &s.cols[j][i], cap)
            }
        });
        hermite_form(&self.top.basis().mul(&h))
    }

    /// Smallest constrained-and-extra-stable submodule containing `s`, e.g. a saturation.
    pub fn saturate(&self, s: &SubModule, extra: &[Matrix<Series>]) -> Result<SubModule, LatticeError> {
        let n = self.quotient.dim();
        let k = self.quotient.k();
        let x = self.top.basis().inverse()?;
        let mut endos = Vec::new();
        for m in extra {
            let mc = x.mul(m).mul(self.top.basis());
            if mc.entries().any(|e| !e.is_integral()) {
                return Err(LatticeError::Unstable("saturating operator".into()));
            }
            endos.push(
                (0..n)
                    .map(|i| (0..n).map(|j| to_poly(mc.get(i, j), k)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        let gens: Vec<Vec<Poly>> = (0..n).filter(|&j| s.diag[j] < k).map(|j| s.cols[j].clone()).collect();
        Ok(self.quotient.closure_with(&gens, &endos))
    }
}

/// All lattices `top ⊇ Λ ⊇ bot` stable under every constraint.
pub fn enumerate_between(
    top: &Lattice,
    bot: &Lattice,
    constraints: &[Matrix<Series>],
    guard: usize,
) -> Result<Vec<Lattice>, LatticeError> {
    let region = Region::new(top, bot, constraints, guard)?;
    region.submodules()?.iter().map(|s| region.lattice_of(s)).collect()
}

/// How the quotient by the torus is normalised when testing primitivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitivityDatum {
    /// Rank-2 analytic side: `Γ' = {(1, t^Z)}`, so primitivity means `O_L Λ_- = O_L`.
    AnalyticRankTwo,
    /// Geometric side: the saturation must be one of finitely many `γ O_{L'}`.
    Geometric { gammas: usize },
    /// Larger ranks need a chosen splitting that is not fixed here.
    Unspecified { h: usize },
}

/// `O_L Λ = O_L`, where `l_action` generates O_L over O_F acting on the ambient space.
pub fn is_primitive(l: &Lattice, datum: &PrimitivityDatum, l_action: &Matrix<Series>) -> Result<bool, LatticeError> {
    match datum {
        PrimitivityDatum::AnalyticRankTwo => {
            let std = Lattice::standard(l.field(), l.dim(), l.prec());
            if !std.contains(l)? {
                return Ok(false);
            }
            let region = Region::new(&std, l, &[], usize::MAX)?;
            let s = region.quotient().hermite(&region.lattice_submodule(l)?);
            Ok(region.saturate(&s, std::slice::from_ref(l_action))?.is_everything())
        }
        PrimitivityDatum::Geometric { .. } | PrimitivityDatum::Unspecified { .. } => Err(LatticeError::Unsupported(
            "primitivity for this datum is decided by the orbital-integral code".into(),
        )),
    }
}

impl Region {
    /// Generators of `l` in quotient coordinates; `l` must lie between the region's bounds.
    pub fn lattice_submodule(&self, l: &Lattice) -> Result<Vec<Vec<Poly>>, LatticeError> {
        let k = self.quotient.k();
        let c = self.top.coordinates(l.basis())?;
        c.columns().iter().map(|col| col.iter().map(|s| to_poly(s, k)).collect()).collect()
    }
}
