//! Exhaustive chain listing in `(F_p[t]/t^2)^2`, with no use of the lattice engine.

use std::collections::BTreeSet;

use orbfl::base_rings::{ResidueField, Series};
use orbfl::lattice_engine::{hermite_form, Lattice};
use orbfl::linalg::Matrix;

/// Truncation depth: every lattice handled lies between `O^2` and `t^2 O^2`.
const K: usize = 2;

/// Element `(x0 + x1 t, y0 + y1 t)` stored as `[x0, x1, y0, y1]`.
type Elem = [u8; 2 * K];

pub struct Ambient {
    p: u8,
    elems: Vec<Elem>,
}

/// A submodule as the set of its element indices.
pub type Sub = BTreeSet<usize>;

impl Ambient {
    pub fn new(p: u8) -> Self {
        let n = (p as usize).pow(2 * K as u32);
        let elems = (0..n)
            .map(|mut k| {
                let mut e = [0u8; 2 * K];
                for c in e.iter_mut() {
                    *c = (k % p as usize) as u8;
                    k /= p as usize;
                }
                e
            })
            .collect();
        Ambient { p, elems }
    }

    fn index(&self, e: &Elem) -> usize {
        e.iter().rev().fold(0, |acc, &c| acc * self.p as usize + c as usize)
    }

    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        std::array::from_fn(|i| (a[i] + b[i]) % self.p)
    }

    fn times_t(&self, a: &Elem) -> Elem {
        [0, a[0], 0, a[2]]
    }

    fn scale(&self, c: u8, a: &Elem) -> Elem {
        std::array::from_fn(|i| (a[i] * c) % self.p)
    }

    /// `O x + O y`: all `c0 x + c1 t x + d0 y + d1 t y`, since `t^2` kills the ambient module.
    pub fn span(&self, x: &Elem, y: &Elem) -> Sub {
        let gens = [*x, self.times_t(x), *y, self.times_t(y)];
        let mut set = Sub::new();
        for k in 0..(self.p as usize).pow(4) {
            let mut acc = [0u8; 2 * K];
            let mut k = k;
            for g in &gens {
                acc = self.add(&acc, &self.scale((k % self.p as usize) as u8, g));
                k /= self.p as usize;
            }
            set.insert(self.index(&acc));
        }
        set
    }

    /// All submodules, each generated by at most two elements.
    pub fn all_submodules(&self) -> Vec<Sub> {
        let mut found: BTreeSet<Sub> = BTreeSet::new();
        for a in &self.elems {
            for b in &self.elems {
                found.insert(self.span(a, b));
            }
        }
        found.into_iter().collect()
    }

    pub fn everything(&self) -> Sub {
        (0..self.elems.len()).collect()
    }

    /// `log_p` of the size.
    pub fn length(&self, s: &Sub) -> u32 {
        let mut n = s.len();
        let mut k = 0;
        while n > 1 {
            n /= self.p as usize;
            k += 1;
        }
        k
    }

    /// `{x : t x ∈ s}`, which is `t^{-1} s` when `s ⊆ t A`.
    pub fn divide_by_t(&self, s: &Sub) -> Option<Sub> {
        let inside_t = s.iter().all(|&i| self.elems[i][0] == 0 && self.elems[i][2] == 0);
        inside_t.then(|| (0..self.elems.len()).filter(|&i| s.contains(&self.index(&self.times_t(&self.elems[i])))).collect())
    }

    /// Chains `top = M0 ⊃ M1 ⊃ ... ⊃ Mk = bottom` with `length(M_{i-1}/M_i) = steps[i]`.
    pub fn count_chains(&self, all: &[Sub], top: &Sub, bottom: &Sub, steps: &[u32]) -> u64 {
        match steps {
            [] => (top == bottom) as u64,
            [m, rest @ ..] => all
                .iter()
                .filter(|mid| mid.is_subset(top) && bottom.is_subset(mid))
                .filter(|mid| self.length(top) - self.length(mid) == *m)
                .map(|mid| self.count_chains(all, mid, bottom, rest))
                .sum(),
        }
    }

    /// The lattice `s + t^2 O^2` in `F^2`.
    pub fn lattice(&self, f: ResidueField, s: &Sub, prec: i32) -> Lattice {
        let conv = |c0: u8, c1: u8| Series::from_ints(f, 0, &[c0 as i64, c1 as i64], prec);
        let mut cols: Vec<Vec<Series>> = s
            .iter()
            .map(|&i| {
                let e = self.elems[i];
                vec![conv(e[0], e[1]), conv(e[2], e[3])]
            })
            .collect();
        let t2 = Series::t_pow(f, K as i32, prec);
        let z = Series::zero(f, prec);
        cols.push(vec![t2.clone(), z.clone()]);
        cols.push(vec![z, t2]);
        hermite_form(&Matrix::from_columns(&cols)).expect("full rank")
    }
}
