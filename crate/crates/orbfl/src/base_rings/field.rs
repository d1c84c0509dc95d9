//! Finite residue fields F_p and F_{p^2}.

use serde::{Deserialize, Serialize};

use super::ArithError;

/// An element of F_p or F_{p^2}, written `c0 + c1*theta` with `theta^2 = nonresidue`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fq {
    pub c0: u32,
    pub c1: u32,
}

impl Fq {
    pub const ZERO: Fq = Fq { c0: 0, c1: 0 };

    pub fn is_zero(self) -> bool {
        self.c0 == 0 && self.c1 == 0
    }
}

/// The residue field F_q with q = p^deg, deg in {1, 2}, p an odd prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ResidueField {
    p: u32,
    deg: u8,
    nonresidue: u32,
}

/// JSON form `{"p": p, "deg": d, "modulus": [...]}`; modulus coefficients run from the constant term up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueFieldDto {
    pub p: u32,
    pub deg: u8,
    pub modulus: Vec<u32>,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

impl ResidueField {
    pub fn new(p: u32, deg: u8) -> Result<Self, ArithError> {
        if p == 2 {
            return Err(ArithError::UnsupportedCharacteristic(p));
        }
        if !is_prime(p) || p > 46_000 {
            return Err(ArithError::BadField(format!("{p} is not a supported odd prime")));
        }
        if deg != 1 && deg != 2 {
            return Err(ArithError::BadField(format!("degree {deg} not in {{1, 2}}")));
        }
        let nonresidue = (2..p)
            .find(|&a| pow_mod(a as u64, ((p - 1) / 2) as u64, p as u64) == (p - 1) as u64)
            .expect("odd primes have non-residues");
        Ok(ResidueField { p, deg, nonresidue })
    }

    /// Builds F_q from its cardinality.
    pub fn with_order(q: u64) -> Result<Self, ArithError> {
        if q < 2 {
            return Err(ArithError::BadField(format!("{q} is not a prime power")));
        }
        if let Ok(p) = u32::try_from(q) {
            if is_prime(p) {
                return Self::new(p, 1);
            }
        }
        let r = (q as f64).sqrt().round() as u64;
        for cand in r.saturating_sub(1)..=r + 1 {
            if cand * cand == q {
                if let Ok(p) = u32::try_from(cand) {
                    if is_prime(p) {
                        return Self::new(p, 2);
                    }
                }
            }
        }
        if q.is_multiple_of(2) && q.is_power_of_two() {
            return Err(ArithError::UnsupportedCharacteristic(2));
        }
        Err(ArithError::BadField(format!("q = {q} is not p or p^2 for an odd prime p")))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn deg(&self) -> u8 {
        self.deg
    }

    pub fn order(&self) -> u64 {
        (self.p as u64).pow(self.deg as u32)
    }

    /// Monic modulus over F_p, constant term first.
    pub fn modulus(&self) -> Vec<u32> {
        match self.deg {
            1 => vec![0, 1],
            _ => vec![self.p - self.nonresidue, 0, 1],
        }
    }

    pub fn to_dto(&self) -> ResidueFieldDto {
        ResidueFieldDto { p: self.p, deg: self.deg, modulus: self.modulus() }
    }

    pub fn from_dto(dto: &ResidueFieldDto) -> Result<Self, ArithError> {
        let f = Self::new(dto.p, dto.deg)?;
        if f.modulus() != dto.modulus {
            return Err(ArithError::BadField(format!(
                "modulus {:?} differs from the canonical {:?}",
                dto.modulus,
                f.modulus()
            )));
        }
        Ok(f)
    }

    pub fn zero(&self) -> Fq {
        Fq::ZERO
    }

    pub fn one(&self) -> Fq {
        Fq { c0: 1, c1: 0 }
    }

    pub fn from_int(&self, n: i64) -> Fq {
        Fq { c0: n.rem_euclid(self.p as i64) as u32, c1: 0 }
    }

    pub fn from_pair(&self, c0: i64, c1: i64) -> Fq {
        let c1 = if self.deg == 1 { 0 } else { c1.rem_euclid(self.p as i64) as u32 };
        Fq { c0: c0.rem_euclid(self.p as i64) as u32, c1 }
    }

    /// Prime-field coordinates, `deg` entries.
    pub fn coords(&self, a: Fq) -> Vec<u32> {
        match self.deg {
            1 => vec![a.c0],
            _ => vec![a.c0, a.c1],
        }
    }

    pub fn from_coords(&self, c: &[u32]) -> Result<Fq, ArithError> {
        if c.len() != self.deg as usize || c.iter().any(|&x| x >= self.p) {
            return Err(ArithError::BadField(format!("bad coefficient {c:?}")));
        }
        Ok(Fq { c0: c[0], c1: if self.deg == 2 { c[1] } else { 0 } })
    }

    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        Fq { c0: (a.c0 + b.c0) % self.p, c1: (a.c1 + b.c1) % self.p }
    }

    pub fn neg(&self, a: Fq) -> Fq {
        Fq { c0: (self.p - a.c0) % self.p, c1: (self.p - a.c1) % self.p }
    }

    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        let p = self.p as u64;
        let (a0, a1, b0, b1) = (a.c0 as u64, a.c1 as u64, b.c0 as u64, b.c1 as u64);
        if self.deg == 1 {
            return Fq { c0: (a0 * b0 % p) as u32, c1: 0 };
        }
        let c0 = (a0 * b0 + (a1 * b1 % p) * self.nonresidue as u64) % p;
        let c1 = (a0 * b1 + a1 * b0) % p;
        Fq { c0: c0 as u32, c1: c1 as u32 }
    }

    pub fn pow(&self, a: Fq, mut e: u64) -> Fq {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Fq) -> Option<Fq> {
        if a.is_zero() {
            return None;
        }
        Some(self.pow(a, self.order() - 2))
    }

    /// Frobenius-twisted conjugate over F_p (identity on F_p).
    pub fn conj(&self, a: Fq) -> Fq {
        Fq { c0: a.c0, c1: (self.p - a.c1) % self.p }
    }

    pub fn is_square(&self, a: Fq) -> bool {
        a.is_zero() || self.pow(a, (self.order() - 1) / 2) == self.one()
    }

    pub fn sqrt(&self, a: Fq) -> Option<Fq> {
        if !self.is_square(a) {
            return None;
        }
        self.elements().find(|&x| self.mul(x, x) == a)
    }

    /// The first non-square in enumeration order.
    pub fn nonsquare(&self) -> Fq {
        self.elements()
            .find(|&x| !self.is_square(x))
            .expect("odd-order fields contain non-squares")
    }

    /// All q elements, zero first, then ordered by (c1, c0).
    pub fn elements(&self) -> impl Iterator<Item = Fq> + '_ {
        let p = self.p;
        let hi = if self.deg == 2 { p } else { 1 };
        (0..hi).flat_map(move |c1| (0..p).map(move |c0| Fq { c0, c1 }))
    }

    pub fn units(&self) -> impl Iterator<Item = Fq> + '_ {
        self.elements().filter(|x| !x.is_zero())
    }

    pub fn is_prime_field(&self, a: Fq) -> bool {
        a.c1 == 0
    }

    pub fn fmt_elem(&self, a: Fq) -> String {
        match (self.deg, a.c1) {
            (1, _) | (_, 0) => a.c0.to_string(),
            _ if a.c0 == 0 => format!("{}θ", a.c1),
            _ => format!("({}+{}θ)", a.c0, a.c1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_and_composite() {
        assert!(matches!(ResidueField::new(2, 1), Err(ArithError::UnsupportedCharacteristic(2))));
        assert!(ResidueField::new(9, 1).is_err());
        assert!(ResidueField::with_order(4).is_err());
        assert!(ResidueField::with_order(6).is_err());
        assert_eq!(ResidueField::with_order(9).unwrap().deg(), 2);
        assert_eq!(ResidueField::with_order(25).unwrap().p(), 5);
    }

    #[test]
    fn field_axioms_exhaustive_f9() {
        let f = ResidueField::with_order(9).unwrap();
        let els: Vec<_> = f.elements().collect();
        assert_eq!(els.len(), 9);
        for &a in &els {
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            }
            for &b in &els {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.add(f.sub(a, b), b), a);
            }
        }
    }

    #[test]
    fn modulus_is_irreducible() {
        for q in [9u64, 25, 49] {
            let f = ResidueField::with_order(q).unwrap();
            let m = f.modulus();
            let p = f.p() as u64;
            for x in 0..p {
                let val = (m[0] as u64 + m[1] as u64 * x + m[2] as u64 * x * x) % p;
                assert_ne!(val, 0, "modulus has root {x} mod {p}");
            }
        }
    }

    #[test]
    fn squares_and_roots() {
        let f = ResidueField::with_order(5).unwrap();
        let squares: Vec<u32> = f.elements().filter(|&a| f.is_square(a)).map(|a| a.c0).collect();
        assert_eq!(squares, vec![0, 1, 4]);
        assert_eq!(f.nonsquare().c0, 2);
        let r = f.sqrt(f.from_int(4)).unwrap();
        assert_eq!(f.mul(r, r), f.from_int(4));
        let g = ResidueField::with_order(9).unwrap();
        // every element of F_3 is a square in F_9
        assert!(g.is_square(g.from_int(2)));
    }
}
