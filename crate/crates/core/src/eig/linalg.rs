//! Sparse assembly, bandwidth-reducing ordering, banded LU and shift-invert Arnoldi.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, VecDeque};

/// Real sparse matrix in compressed rows.
#[derive(Clone, Debug, Default)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Accumulates (row, col, value) entries, summing duplicates.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    n: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![BTreeMap::new(); n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            *self.rows[i].entry(j).or_insert(0.0) += v;
        }
    }

    pub fn build(self) -> SparseMatrix {
        let mut row_ptr = vec![0];
        let mut cols = vec![];
        let mut vals = vec![];
        for r in self.rows {
            for (j, v) in r {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { n: self.n, row_ptr, cols, vals }
    }
}

impl SparseMatrix {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn mul_c(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| x[j] * v).sum()).collect()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Restriction to the given index set (rows and columns), in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut t = Triplets::new(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    t.add(k, map[j], v);
                }
            }
        }
        t.build()
    }

    /// a A + b B on the union pattern.
    pub fn combine(a: f64, am: &SparseMatrix, b: f64, bm: &SparseMatrix) -> SparseMatrix {
        let mut t = Triplets::new(am.n);
        for i in 0..am.n {
            for (j, v) in am.row(i) {
                t.add(i, j, a * v);
            }
            for (j, v) in bm.row(i) {
                t.add(i, j, b * v);
            }
        }
        t.build()
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern; returns perm with new -> old.
pub fn rcm_order(m: &SparseMatrix) -> Vec<usize> {
    let n = m.n;
    let mut adj = vec![vec![]; n];
    for i in 0..n {
        for (j, _) in m.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !seen[i]).min_by_key(|&i| adj[i].len()).expect("unvisited node");
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !seen[v]).collect();
            nb.sort_by_key(|&v| adj[v].len());
            for v in nb {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization with partial pivoting of a band matrix.
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    /// row i holds columns i - kl .. i - kl + width
    data: Vec<f64>,
    piv: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    /// Factors the matrix after symmetric permutation by `perm` (new -> old).
    pub fn factor(m: &SparseMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = m.n;
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..n {
            for (j, _) in m.row(i) {
                let (a, b) = (inv[i], inv[j]);
                if a > b {
                    kl = kl.max(a - b);
                } else {
                    ku = ku.max(b - a);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in m.row(i) {
                let (a, b) = (inv[i], inv[j]);
                data[a * width + (b + kl - a)] += v;
            }
        }
        let mut lu = Self { n, kl, width, data, piv: vec![0; n], perm };
        lu.eliminate()?;
        Ok(lu)
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let off = (j + self.kl).checked_sub(i)?;
        (off < self.width).then_some(i * self.width + off)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 || best < 1e-15 * scale * f64::EPSILON {
                return Err(Error::Degenerate(format!("singular matrix at pivot {k}")));
            }
            self.piv[k] = p;
            let hi = (k + self.width - self.kl).min(n);
            if p != k {
                for j in k..hi {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    match (a, b) {
                        (Some(a), Some(b)) => self.data.swap(a, b),
                        (Some(a), None) => self.data[a] = 0.0,
                        _ => {}
                    }
                }
            }
            let d = self.get(k, k);
            for i in (k + 1)..=last {
                let li = self.idx(i, k).unwrap();
                let f = self.data[li] / d;
                if f == 0.0 {
                    continue;
                }
                self.data[li] = f;
                for j in (k + 1)..hi {
                    if let (Some(a), Some(b)) = (self.idx(k, j), self.idx(i, j)) {
                        let u = self.data[a];
                        if u != 0.0 {
                            self.data[b] -= f * u;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + self.kl).min(n - 1);
            for i in (k + 1)..=last {
                x[i] -= self.get(i, k) * x[k];
            }
        }
        for k in (0..n).rev() {
            let hi = (k + self.width - self.kl).min(n);
            let mut s = x[k];
            for j in (k + 1)..hi {
                s -= self.get(k, j) * x[j];
            }
            x[k] = s / self.get(k, k);
        }
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }

    pub fn bandwidth(&self) -> usize {
        self.kl
    }
}

/// Eigenpair of the pencil A x = lambda B x.
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: C64,
    pub vector: Vec<C64>,
    /// Relative Ritz residual of the shift-inverted operator.
    pub residual: f64,
}

/// Shift-invert Arnoldi for A x = lambda B x near `shift`; returns up to `nev` converged pairs
/// ordered by distance to the shift.
pub fn shift_invert_eigs(a: &SparseMatrix, b: &SparseMatrix, shift: f64, nev: usize, krylov: usize, seed: u64) -> Result<Vec<RitzPair>> {
    let n = a.n;
    let op_mat = SparseMatrix::combine(1.0, a, -shift, b);
    let lu = BandLu::factor(&op_mat, rcm_order(&op_mat))?;
    let m = krylov.min(n).max(nev.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v0);
    let mut basis = vec![v0];
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut dim = m;
    for j in 0..m {
        let mut w = lu.solve(&b.mul(&basis[j]));
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c: f64 = q.iter().zip(&w).map(|(x, y)| x * y).sum();
                h[(i, j)] += c;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= c * qk;
                }
            }
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        h[(j + 1, j)] = nw;
        if nw < 1e-14 * h.column(j).norm().max(1e-300) {
            dim = j + 1;
            break;
        }
        if j + 1 < m {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    let hm = h.view((0, 0), (dim, dim)).into_owned();
    let beta = h[(dim, dim - 1)];
    let thetas = hessenberg_eigenvalues(&hm)?;
    let hc: DMatrix<C64> = hm.map(|x| C64::new(x, 0.0));
    // largest |theta| are nearest the shift; only those get Ritz vectors
    let mut cand: Vec<C64> = thetas.iter().copied().filter(|t| t.norm() > 1e-300).collect();
    cand.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    cand.truncate((2 * nev + 10).min(cand.len()));
    let mut out = vec![];
    for theta in cand.iter() {
        let y = inverse_iteration(&hc, *theta);
        let res = beta * y[dim - 1].norm() / theta.norm();
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (k, q) in basis.iter().take(dim).enumerate() {
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += y[k] * qi;
            }
        }
        out.push(RitzPair { value: shift + 1.0 / theta, vector: x, residual: res });
    }
    out.sort_by(|p, q| (p.value - shift).norm().total_cmp(&(q.value - shift).norm()));
    out.retain(|p| p.residual < 1e-8);
    out.truncate(nev);
    Ok(out)
}

fn normalize(v: &mut [f64]) {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Eigenvalues of the small projected matrix; the Schur iteration is capped and retried with a looser tolerance.
fn hessenberg_eigenvalues(h: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = h.nrows();
    for eps in [f64::EPSILON, 1e-13, 1e-11] {
        if let Some(schur) = nalgebra::Schur::try_new(h.clone(), eps, 200 * n.max(10)) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::NotConverged(format!("Schur iteration on the {n}x{n} Arnoldi matrix")))
}

/// Inverse iteration on an upper Hessenberg matrix with O(m^2) elimination.
fn inverse_iteration(h: &DMatrix<C64>, theta: C64) -> Vec<C64> {
    let n = h.nrows();
    let eps = theta.norm() * 1e-10 + 1e-300;
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] -= theta + C64::new(eps, eps);
    }
    // LU with row swaps between neighbours only
    let mut swapped = vec![false; n];
    let mut mult = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        if a[(k + 1, k)].norm() > a[(k, k)].norm() {
            a.swap_rows(k, k + 1);
            swapped[k] = true;
        }
        let piv = if a[(k, k)].norm() == 0.0 { C64::new(eps, 0.0) } else { a[(k, k)] };
        let l = a[(k + 1, k)] / piv;
        mult[k] = l;
        for j in k..n {
            let t = a[(k, j)];
            a[(k + 1, j)] -= l * t;
        }
    }
    let mut y = vec![C64::new(1.0, 0.0); n];
    for _ in 0..3 {
        for k in 0..n.saturating_sub(1) {
            if swapped[k] {
                y.swap(k, k + 1);
            }
            let t = y[k];
            y[k + 1] -= mult[k] * t;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= a[(i, j)] * y[j];
            }
            let d = if a[(i, i)].norm() == 0.0 { C64::new(eps, 0.0) } else { a[(i, i)] };
            y[i] = acc / d;
        }
        let nz = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        y.iter_mut().for_each(|z| *z /= nz);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 2.0);
            if i > 0 {
                t.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn band_lu_solves_permuted_system() {
        let n = 40;
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 0.1);
            t.add(i, (i * 7 + 3) % n, 1.0);
            t.add((i * 7 + 3) % n, i, -0.5);
        }
        let m = t.build();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = m.mul(&x);
        let lu = BandLu::factor(&m, rcm_order(&m)).unwrap();
        let y = lu.solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn arnoldi_finds_smallest_laplacian_eigenvalues() {
        let n = 200;
        let a = laplacian_1d(n);
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 1.0);
        }
        let b = t.build();
        let pairs = shift_invert_eigs(&a, &b, 0.0, 4, 60, 7).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((p.value.re - exact).abs() < 1e-10 * exact && p.value.im.abs() < 1e-12);
        }
    }
}
