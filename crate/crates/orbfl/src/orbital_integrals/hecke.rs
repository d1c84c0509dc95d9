//! Spherical Hecke functions `R_n * T_{m1} * ... * T_{mk}` evaluated by counting lattice chains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice_engine::{enumerate_between, index_exp, Lattice, LatticeError};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HeckeFunction {
    pub shift: i32,
    pub steps: Vec<u32>,
}

impl HeckeFunction {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn is_unit(&self) -> bool {
        self.shift == 0 && self.steps.is_empty()
    }

    /// `Σ m_i`, the total index of a chain.
    pub fn total_index(&self) -> u32 {
        self.steps.iter().sum()
    }
}

impl fmt::Display for HeckeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R_{}", self.shift)?;
        for m in &self.steps {
            write!(f, "*T_{m}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("hecke function must be `n,m1,m2,...` with integers, got {0:?}")]
pub struct ParseHeckeError(String);

impl FromStr for HeckeFunction {
    type Err = ParseHeckeError;

    /// `"n,m1,m2,..."`; an empty string is the unit.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::unit());
        }
        let mut parts = s.split(',').map(str::trim);
        let bad = || ParseHeckeError(s.to_string());
        let shift = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let steps = parts.map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        Ok(HeckeFunction { shift, steps })
    }
}

/// Number of chains `Λ1 = Λ^0 ⊃ Λ^1 ⊃ ... ⊃ Λ^k = t^{-n} Λ2` with successive indices `q^{m_i}`.
pub fn hecke_eval(f: &HeckeFunction, l1: &Lattice, l2: &Lattice, guard: usize) -> Result<u64, LatticeError> {
    let bottom = l2.scale_t(-f.shift);
    if index_exp(l1, &bottom) != f.total_index() as i64 || !l1.contains(&bottom)? {
        return Ok(0);
    }
    chains(l1, &bottom, &f.steps, guard)
}

fn chains(top: &Lattice, bottom: &Lattice, steps: &[u32], guard: usize) -> Result<u64, LatticeError> {
    match steps {
        [] => Ok((top == bottom) as u64),
        [_] => Ok(1),
        [m, rest @ ..] => {
            let mut total = 0;
            for mid in enumerate_between(top, bottom, &[], guard)? {
                if index_exp(top, &mid) == *m as i64 {
                    total += chains(&mid, bottom, rest, guard)?;
                }
            }
            Ok(total)
        }
    }
}
