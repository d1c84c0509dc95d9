//! Submodules of (O_F / t^k)^n: canonical forms, closure under endomorphisms, and enumeration.

use std::collections::{HashSet, VecDeque};

use crate::base_rings::{Fq, ResidueField};

/// Polynomial over F_q, low degree first.
pub type Poly = Vec<Fq>;

/// A submodule of `(O/t^k)^n` containing nothing beyond its canonical Hermite data.
///
/// Column `j` is upper triangular with `t^{diag[j]}` at row `j`; entries above the diagonal
/// are reduced below `t^{diag[i]}`. `diag[j] == k` encodes the generator `t^k e_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubModule {
    pub diag: Vec<usize>,
    pub cols: Vec<Vec<Poly>>,
}

impl SubModule {
    /// Length of the quotient `(O/t^k)^n / S`, i.e. `log_q` of the index.
    pub fn colength(&self) -> usize {
        self.diag.iter().sum()
    }

    pub fn is_everything(&self) -> bool {
        self.diag.iter().all(|&d| d == 0)
    }
}

/// Arithmetic in `(O/t^k)^n` with a fixed set of integral endomorphisms.
pub struct Quotient {
    f: ResidueField,
    n: usize,
    k: usize,
    endos: Vec<Vec<Vec<Poly>>>,
}

impl Quotient {
    /// `endos[m][i][j]` is the (i, j) entry of the m-th endomorphism, reduced mod t^k.
    pub fn new(f: ResidueField, n: usize, k: usize, endos: Vec<Vec<Vec<Poly>>>) -> Self {
        Quotient { f, n, k, endos }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn zero(&self) -> Poly {
        vec![Fq::ZERO; self.k]
    }

    fn val(&self, p: &[Fq]) -> usize {
        p.iter().position(|c| !c.is_zero()).unwrap_or(self.k)
    }

    fn mul(&self, a: &[Fq], b: &[Fq]) -> Poly {
        let mut out = self.zero();
        for (i, &x) in a.iter().enumerate().take(self.k) {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(self.k - i) {
                out[i + j] = self.f.add(out[i + j], self.f.mul(x, y));
            }
        }
        out
    }

    /// `v[i] -= c * w[i]` for all rows.
    fn axpy(&self, v: &mut [Poly], c: &[Fq], w: &[Poly]) {
        for (vi, wi) in v.iter_mut().zip(w) {
            let prod = self.mul(c, wi);
            for (a, b) in vi.iter_mut().zip(prod) {
                *a = self.f.sub(*a, b);
            }
        }
    }

    fn scale_vec(&self, c: &[Fq], v: &[Poly]) -> Vec<Poly> {
        v.iter().map(|p| self.mul(c, p)).collect()
    }

    /// `p / t^d` for `val(p) >= d`, padded with zeros (any lift works modulo the module).
    fn shift_down(&self, p: &[Fq], d: usize) -> Poly {
        let mut out = self.zero();
        out[..self.k - d].copy_from_slice(&p[d..self.k]);
        out
    }

    fn t_pow(&self, e: usize) -> Poly {
        let mut p = self.zero();
        if e < self.k {
            p[e] = self.f.one();
        }
        p
    }

    /// Inverse of a unit modulo t^k.
    fn unit_inv(&self, u: &[Fq]) -> Poly {
        let f = &self.f;
        let a0 = f.inv(u[0]).expect("unit");
        let mut b = self.zero();
        b[0] = a0;
        for m in 1..self.k {
            let mut s = Fq::ZERO;
            for i in 1..=m {
                s = f.add(s, f.mul(u[i], b[m - i]));
            }
            b[m] = f.neg(f.mul(a0, s));
        }
        b
    }

    fn is_zero_vec(&self, v: &[Poly]) -> bool {
        v.iter().all(|p| p.iter().all(|c| c.is_zero()))
    }

    /// Canonical form of the submodule generated by `gens`.
    pub fn hermite(&self, gens: &[Vec<Poly>]) -> SubModule {
        let (n, k) = (self.n, self.k);
        let mut free: Vec<Vec<Poly>> = gens.iter().filter(|g| !self.is_zero_vec(g)).cloned().collect();
        let mut diag = vec![k; n];
        let mut cols: Vec<Vec<Poly>> = vec![vec![self.zero(); n]; n];
        for i in (0..n).rev() {
            let best = free
                .iter()
                .enumerate()
                .map(|(idx, g)| (self.val(&g[i]), idx))
                .filter(|&(v, _)| v < k)
                .min();
            let Some((d, idx)) = best else { continue };
            let mut piv = free.swap_remove(idx);
            let unit = self.shift_down(&piv[i], d);
            let uinv = self.unit_inv(&unit);
            piv = self.scale_vec(&uinv, &piv);
            for g in free.iter_mut() {
                let e = self.val(&g[i]);
                if e < k {
                    let factor = self.shift_down(&g[i], d);
                    self.axpy(g, &factor, &piv);
                }
            }
            if d > 0 {
                let extra = self.scale_vec(&self.t_pow(k - d), &piv);
                free.push(extra);
            }
            free.retain(|g| !self.is_zero_vec(g));
            diag[i] = d;
            cols[i] = piv;
        }
        for j in 0..n {
            for i in (0..j).rev() {
                let d = diag[i];
                if d >= k || self.val(&cols[j][i]) >= k {
                    continue;
                }
                let mut quo = self.zero();
                quo[..k - d].copy_from_slice(&cols[j][i][d..k]);
                if quo.iter().any(|c| !c.is_zero()) {
                    let ci = cols[i].clone();
                    self.axpy(&mut cols[j], &quo, &ci);
                }
            }
        }
        SubModule { diag, cols }
    }

    /// Whether `v` lies in `s`.
    pub fn contains(&self, s: &SubModule, v: &[Poly]) -> bool {
        let mut x = v.to_vec();
        for i in (0..self.n).rev() {
            let d = s.diag[i];
            let e = self.val(&x[i]);
            if e >= self.k {
                continue;
            }
            if e < d {
                return false;
            }
            let c = self.shift_down(&x[i], d);
            self.axpy(&mut x, &c, &s.cols[i]);
        }
        true
    }

    fn generators(&self, s: &SubModule) -> Vec<Vec<Poly>> {
        (0..self.n).filter(|&j| s.diag[j] < self.k).map(|j| s.cols[j].clone()).collect()
    }

    fn apply(&self, m: &[Vec<Poly>], v: &[Poly]) -> Vec<Poly> {
        (0..self.n)
            .map(|i| {
                let mut acc = self.zero();
                for j in 0..self.n {
                    let p = self.mul(&m[i][j], &v[j]);
                    for (a, b) in acc.iter_mut().zip(p) {
                        *a = self.f.add(*a, b);
                    }
                }
                acc
            })
            .collect()
    }

    /// Smallest submodule containing `gens` and stable under the given endomorphisms.
    pub fn closure_with(&self, gens: &[Vec<Poly>], endos: &[Vec<Vec<Poly>>]) -> SubModule {
        let mut s = self.hermite(gens);
        loop {
            let mut extra = Vec::new();
            for m in endos {
                for g in self.generators(&s) {
                    let img = self.apply(m, &g);
                    if !self.contains(&s, &img) {
                        extra.push(img);
                    }
                }
            }
            if extra.is_empty() {
                return s;
            }
            let mut all = self.generators(&s);
            all.extend(extra);
            s = self.hermite(&all);
        }
    }

    pub fn closure(&self, gens: &[Vec<Poly>]) -> SubModule {
        self.closure_with(gens, &self.endos)
    }

    /// Vectors `x` with `t x in s`, one per line of the kernel of `s` mod t.
    fn covering_candidates(&self, s: &SubModule) -> Vec<Vec<Poly>> {
        let f = &self.f;
        let (n, k) = (self.n, self.k);
        // exact columns of the preimage lattice, degree <= k
        let exact: Vec<Vec<Vec<Fq>>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let mut p = vec![Fq::ZERO; k + 1];
                        if s.diag[j] == k {
                            if i == j {
                                p[k] = f.one();
                            }
                        } else {
                            p[..k].copy_from_slice(&s.cols[j][i]);
                        }
                        p
                    })
                    .collect()
            })
            .collect();
        // residue matrix: entry (i, j) = constant term of column j row i
        let red: Vec<Vec<Fq>> = (0..n).map(|i| (0..n).map(|j| exact[j][i][0]).collect()).collect();
        let kernel = nullspace_fq(f, &red, n);
        let mut out = Vec::new();
        for y in projective_points(f, &kernel) {
            let mut x = vec![self.zero(); n];
            for (j, &yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                for i in 0..n {
                    // coefficient e of (col_j * yj) / t lands at e - 1
                    for e in 1..=k {
                        let c = f.mul(exact[j][i][e], yj);
                        x[i][e - 1] = f.add(x[i][e - 1], c);
                    }
                }
            }
            out.push(x);
        }
        out
    }

    /// Every endomorphism-stable submodule containing `bottom`, found by climbing covering steps.
    pub fn enumerate_above(&self, bottom: &[Vec<Poly>]) -> Vec<SubModule> {
        let start = self.closure(bottom);
        let mut seen: HashSet<SubModule> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        let mut out = Vec::new();
        while let Some(s) = queue.pop_front() {
            if !s.is_everything() {
                let gens = self.generators(&s);
                for x in self.covering_candidates(&s) {
                    if self.contains(&s, &x) {
                        continue;
                    }
                    let mut g = gens.clone();
                    g.push(x);
                    let next = self.closure(&g);
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
            out.push(s);
        }
        out
    }
}

/// Basis of the kernel of an `n`-column matrix over F_q.
pub fn nullspace_fq(f: &ResidueField, rows: &[Vec<Fq>], n: usize) -> Vec<Vec<Fq>> {
    let mut a: Vec<Vec<Fq>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = f.inv(a[r][c]).expect("nonzero");
        for x in a[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let fac = a[i][c];
                for j in 0..n {
                    let v = f.mul(fac, a[r][j]);
                    a[i][j] = f.sub(a[i][j], v);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Fq::ZERO; n];
        v[free] = f.one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = f.neg(a[row][free]);
        }
        basis.push(v);
    }
    basis
}

/// One representative per line of the span of `basis`, normalised to leading coefficient 1.
fn projective_points(f: &ResidueField, basis: &[Vec<Fq>]) -> Vec<Vec<Fq>> {
    let dim = basis.len();
    let mut out = Vec::new();
    let elems: Vec<Fq> = f.elements().collect();
    for lead in 0..dim {
        // coefficient 1 at `lead`, zero before, anything after
        let tail = dim - lead - 1;
        let total = elems.len().pow(tail as u32);
        for code in 0..total {
            let mut coeffs = vec![Fq::ZERO; dim];
            coeffs[lead] = f.one();
            let mut c = code;
            for slot in coeffs.iter_mut().skip(lead + 1) {
                *slot = elems[c % elems.len()];
                c /= elems.len();
            }
            let n = basis.first().map_or(0, |b| b.len());
            let mut v = vec![Fq::ZERO; n];
            for (b, &cb) in basis.iter().zip(&coeffs) {
                if cb.is_zero() {
                    continue;
                }
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi = f.add(*vi, f.mul(cb, bi));
                }
            }
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vecs(f: &ResidueField, n: usize, k: usize, e: usize) -> Vec<Vec<Poly>> {
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let mut p = vec![Fq::ZERO; k];
                        if i == j && e < k {
                            p[e] = f.one();
                        }
                        p
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn submodules_of_plane_mod_t() {
        let f = ResidueField::new(3, 1).unwrap();
        let qt = Quotient::new(f, 2, 1, vec![]);
        let all = qt.enumerate_above(&[]);
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn submodules_of_cyclic_module() {
        // O/t^3: a chain of four submodules
        let f = ResidueField::new(5, 1).unwrap();
        let qt = Quotient::new(f, 1, 3, vec![]);
        assert_eq!(qt.enumerate_above(&[]).len(), 4);
    }

    #[test]
    fn hermite_is_canonical_under_generator_changes() {
        let f = ResidueField::new(3, 1).unwrap();
        let qt = Quotient::new(f, 2, 2, vec![]);
        let g1 = vec![vec![f.one(), f.one()], vec![Fq::ZERO, f.from_int(2)]];
        let g2 = vec![vec![Fq::ZERO, f.one()], vec![f.one(), Fq::ZERO]];
        let a = qt.hermite(&[g1.clone(), g2.clone()]);
        let sum: Vec<Poly> = g1.iter().zip(&g2).map(|(x, y)| vec![f.add(x[0], y[0]), f.add(x[1], y[1])]).collect();
        let b = qt.hermite(&[sum, g2, g1]);
        assert_eq!(a, b);
    }

    #[test]
    fn whole_space_and_zero() {
        let f = ResidueField::new(3, 1).unwrap();
        let qt = Quotient::new(f, 3, 2, vec![]);
        let full = qt.hermite(&unit_vecs(&f, 3, 2, 0));
        assert!(full.is_everything());
        let zero = qt.hermite(&[]);
        assert_eq!(zero.colength(), 6);
    }
}
