//! Truncated Laurent series over a finite residue field, modelling F_q((t)).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::field::{Fq, ResidueField};
use super::ArithError;

/// Valuation sentinel carried by elements that vanish to their precision.
pub const VAL_INF: i32 = i32::MAX;

/// Default number of known coefficients above the valuation origin.
pub const DEFAULT_PREC: i32 = 32;

/// `Σ_{i=val}^{prec-1} c_i t^i + O(t^prec)`.
///
/// Either `val == VAL_INF` and `coeffs` is empty (zero to precision `prec`), or
/// `coeffs[0] != 0` and `coeffs.len() == prec - val`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Series {
    field: ResidueField,
    val: i32,
    coeffs: Vec<Fq>,
    prec: i32,
}

/// JSON form of a series: `{"val": v, "coeffs": [[..], ..], "prec": N}`, `val` null for zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesDto {
    pub val: Option<i32>,
    pub coeffs: Vec<Vec<u32>>,
    pub prec: i32,
}

impl Series {
    pub fn zero(field: ResidueField, prec: i32) -> Self {
        Series { field, val: VAL_INF, coeffs: Vec::new(), prec }
    }

    /// Builds `Σ coeffs[i] t^(start+i) + O(t^prec)`, normalising leading zeros.
    pub fn from_coeffs(field: ResidueField, start: i32, coeffs: &[Fq], prec: i32) -> Self {
        let mut out = Vec::with_capacity((prec - start).max(0) as usize);
        for i in start..prec {
            let k = (i - start) as usize;
            out.push(coeffs.get(k).copied().unwrap_or(Fq::ZERO));
        }
        Self::normalized(field, start, out, prec)
    }

    pub fn from_ints(field: ResidueField, start: i32, coeffs: &[i64], prec: i32) -> Self {
        let c: Vec<Fq> = coeffs.iter().map(|&x| field.from_int(x)).collect();
        Self::from_coeffs(field, start, &c, prec)
    }

    pub fn constant(field: ResidueField, c: Fq, prec: i32) -> Self {
        Self::from_coeffs(field, 0, &[c], prec)
    }

    pub fn from_int(field: ResidueField, n: i64, prec: i32) -> Self {
        Self::constant(field, field.from_int(n), prec)
    }

    pub fn one(field: ResidueField, prec: i32) -> Self {
        Self::constant(field, field.one(), prec)
    }

    /// `c t^e` known to absolute precision `prec`.
    pub fn monomial(field: ResidueField, c: Fq, e: i32, prec: i32) -> Self {
        Self::from_coeffs(field, e, &[c], prec)
    }

    /// `t^e` with the same relative precision `rel` as a unit known to `rel` terms.
    pub fn t_pow(field: ResidueField, e: i32, rel: i32) -> Self {
        Self::monomial(field, field.one(), e, e + rel)
    }

    fn normalized(field: ResidueField, start: i32, mut coeffs: Vec<Fq>, prec: i32) -> Self {
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Series::zero(field, prec),
            Some(k) => {
                coeffs.drain(..k);
                Series { field, val: start + k as i32, coeffs, prec }
            }
        }
    }

    pub fn field(&self) -> ResidueField {
        self.field
    }

    pub fn prec(&self) -> i32 {
        self.prec
    }

    /// t-adic valuation, `VAL_INF` for an element that vanishes to its precision.
    pub fn valuation(&self) -> i32 {
        self.val
    }

    pub fn is_zero(&self) -> bool {
        self.val == VAL_INF
    }

    /// Relative precision: number of known coefficients from the valuation on.
    pub fn rel_prec(&self) -> i32 {
        if self.is_zero() {
            0
        } else {
            self.prec - self.val
        }
    }

    /// Lower bound on the valuation that is certain: `val`, or `prec` for zero.
    pub fn val_bound(&self) -> i32 {
        if self.is_zero() {
            self.prec
        } else {
            self.val
        }
    }

    /// Coefficient of `t^i`; `i` must lie below the precision.
    pub fn coeff(&self, i: i32) -> Fq {
        assert!(i < self.prec, "coefficient t^{i} beyond precision {}", self.prec);
        if self.is_zero() || i < self.val {
            Fq::ZERO
        } else {
            self.coeffs[(i - self.val) as usize]
        }
    }

    pub fn lead(&self) -> Option<Fq> {
        self.coeffs.first().copied()
    }

    pub fn is_unit(&self) -> bool {
        self.val == 0
    }

    pub fn is_integral(&self) -> bool {
        self.val_bound() >= 0
    }

    /// Drops coefficients at and above `t^n`.
    pub fn truncate(&self, n: i32) -> Series {
        if n >= self.prec {
            return self.clone();
        }
        if self.is_zero() || n <= self.val {
            return Series::zero(self.field, n);
        }
        let mut c = self.coeffs.clone();
        c.truncate((n - self.val) as usize);
        Series { field: self.field, val: self.val, coeffs: c, prec: n }
    }

    /// The part with exponents below `n`, as an exact element of precision `cap`.
    pub fn head(&self, n: i32, cap: i32) -> Series {
        let mut c = Vec::new();
        if !self.is_zero() {
            for i in self.val..n.min(self.prec) {
                c.push(self.coeff(i));
            }
        }
        let start = if self.is_zero() { 0 } else { self.val };
        Series::from_coeffs(self.field, start, &c, cap.max(start))
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: i32) -> Series {
        if self.is_zero() {
            return Series::zero(self.field, self.prec + k);
        }
        Series { field: self.field, val: self.val + k, coeffs: self.coeffs.clone(), prec: self.prec + k }
    }

    /// Raises the absolute precision to `n`, treating unknown terms as zero.
    pub fn lift_prec(&self, n: i32) -> Series {
        if n <= self.prec {
            return self.truncate(n);
        }
        let start = if self.is_zero() { n } else { self.val };
        let mut c: Vec<Fq> = (start..self.prec).map(|i| self.coeff(i)).collect();
        c.resize((n - start).max(0) as usize, Fq::ZERO);
        Self::normalized(self.field, start, c, n)
    }

    fn check_field(&self, other: &Series) -> Result<(), ArithError> {
        if self.field != other.field {
            return Err(ArithError::FieldMismatch);
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series, ArithError> {
        self.check_field(other)?;
        let prec = self.prec.min(other.prec);
        let lo = self.val_bound().min(other.val_bound()).min(prec);
        let f = self.field;
        let c: Vec<Fq> = (lo..prec)
            .map(|i| {
                let a = if i >= self.val && !self.is_zero() { self.coeff(i) } else { Fq::ZERO };
                let b = if i >= other.val && !other.is_zero() { other.coeff(i) } else { Fq::ZERO };
                f.add(a, b)
            })
            .collect();
        Ok(Self::normalized(f, lo, c, prec))
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series, ArithError> {
        self.checked_add(&other.neg_ref())
    }

    fn neg_ref(&self) -> Series {
        let f = self.field;
        Series {
            field: f,
            val: self.val,
            coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn scale(&self, c: Fq) -> Series {
        if c.is_zero() {
            return Series::zero(self.field, self.prec);
        }
        let f = self.field;
        Series {
            field: f,
            val: self.val,
            coeffs: self.coeffs.iter().map(|&x| f.mul(x, c)).collect(),
            prec: self.prec,
        }
    }

    pub fn checked_mul(&self, other: &Series) -> Result<Series, ArithError> {
        self.check_field(other)?;
        let f = self.field;
        if self.is_zero() || other.is_zero() {
            let prec = (self.prec.saturating_add(other.val_bound()))
                .min(other.prec.saturating_add(self.val_bound()));
            return Ok(Series::zero(f, prec));
        }
        let val = self.val + other.val;
        let prec = (self.prec + other.val).min(other.prec + self.val);
        let n = (prec - val) as usize;
        let mut c = vec![Fq::ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(n - i) {
                c[i + j] = f.add(c[i + j], f.mul(a, b));
            }
        }
        Ok(Self::normalized(f, val, c, prec))
    }

    /// Inverse with the same relative precision.
    pub fn inv(&self) -> Result<Series, ArithError> {
        if self.is_zero() {
            return Err(ArithError::InsufficientPrecision(format!(
                "cannot invert an element that vanishes to O(t^{})",
                self.prec
            )));
        }
        let f = self.field;
        let n = self.coeffs.len();
        let a0inv = f.inv(self.coeffs[0]).expect("leading coefficient is nonzero");
        let mut b = vec![Fq::ZERO; n];
        b[0] = a0inv;
        for k in 1..n {
            let mut s = Fq::ZERO;
            for i in 1..=k {
                s = f.add(s, f.mul(self.coeffs[i], b[k - i]));
            }
            b[k] = f.neg(f.mul(a0inv, s));
        }
        Ok(Series { field: f, val: -self.val, coeffs: b, prec: -self.val + n as i32 })
    }

    pub fn checked_div(&self, other: &Series) -> Result<Series, ArithError> {
        self.checked_mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Series {
        if e == 0 {
            return Series::one(self.field, self.rel_prec().max(1));
        }
        let mut acc = self.clone();
        for _ in 1..e {
            acc = &acc * self;
        }
        acc
    }

    /// Leading-term certified equality up to the smaller precision.
    pub fn eq_upto_prec(&self, other: &Series) -> bool {
        match self.checked_sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    pub fn to_dto(&self) -> SeriesDto {
        SeriesDto {
            val: if self.is_zero() { None } else { Some(self.val) },
            coeffs: self.coeffs.iter().map(|&c| self.field.coords(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn from_dto(field: ResidueField, dto: &SeriesDto) -> Result<Series, ArithError> {
        match dto.val {
            None => {
                if !dto.coeffs.is_empty() {
                    return Err(ArithError::BadField("zero series with coefficients".into()));
                }
                Ok(Series::zero(field, dto.prec))
            }
            Some(v) => {
                let c = dto.coeffs.iter().map(|c| field.from_coords(c)).collect::<Result<Vec<_>, _>>()?;
                if v > dto.prec || c.len() as i32 > dto.prec - v {
                    return Err(ArithError::BadField("coefficients beyond precision".into()));
                }
                Ok(Series::from_coeffs(field, v, &c, dto.prec))
            }
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if !self.is_zero() {
            for (k, &c) in self.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let e = self.val + k as i32;
                let cs = self.field.fmt_elem(c);
                terms.push(match e {
                    0 => cs,
                    1 if cs == "1" => "t".to_string(),
                    1 => format!("{cs}*t"),
                    _ if cs == "1" => format!("t^{e}"),
                    _ => format!("{cs}*t^{e}"),
                });
            }
        }
        if terms.is_empty() {
            write!(out, "O(t^{})", self.prec)
        } else {
            write!(out, "{} + O(t^{})", terms.join(" + "), self.prec)
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&Series> for &Series {
            type Output = Series;
            fn $m(self, rhs: &Series) -> Series {
                self.$checked(rhs).expect("series from different residue fields")
            }
        }
        impl $tr<Series> for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}
