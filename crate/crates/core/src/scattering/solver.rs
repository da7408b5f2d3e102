//! Regular-grid Nystrom discretization of u = u_i + omega^2 int Gamma V u, applied by FFT convolution.

use super::green::{add_scaled, green_at, zero, Tensor};
use super::MediumConfig;
use crate::elastic_fields::LameParameters;
use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsOptions {
    /// Grid spacing; None picks `points_per_wavelength` over the shorter wavelength.
    pub h: Option<f64>,
    pub points_per_wavelength: f64,
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Largest unknown count for the dense LU fallback.
    pub dense_limit: usize,
    pub self_order: usize,
    pub near_order: usize,
    pub near_radius: i64,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self { h: None, points_per_wavelength: 10.0, tol: 1e-8, restart: 80, max_iter: 3000, dense_limit: 3000, self_order: 20, near_order: 10, near_radius: 2 }
    }
}

impl LsOptions {
    pub fn spacing(&self, params: &LameParameters) -> f64 {
        self.h.unwrap_or_else(|| 2.0 * PI / params.kp().max(params.ks()) / self.points_per_wavelength)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Global lattice index; the centre is ((i + 1/2) h, (j + 1/2) h).
    pub index: [i64; 2],
    pub center: [f64; 2],
    /// Fraction of the cell inside the support.
    pub fraction: f64,
    pub contrast: f64,
}

/// Integral of Gamma over the square of side h centred at `c`.
fn cell_integral(c: [f64; 2], h: f64, params: &LameParameters, order: usize) -> Result<Tensor> {
    let (x, w) = gauss_legendre(order);
    let mut acc = zero();
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let g = green_at(&[c[0] + 0.5 * h * a, c[1] + 0.5 * h * b], params)?;
            add_scaled(&mut acc, &g, wa * wb * 0.25 * h * h);
        }
    }
    Ok(acc)
}

/// Integral of Gamma over the square of side h centred at the source, in polar coordinates per quarter.
fn self_integral(h: f64, params: &LameParameters, order: usize) -> Result<Tensor> {
    let (x, w) = gauss_legendre(order);
    let mut acc = zero();
    for quarter in 0..4 {
        let axis = quarter as f64 * 0.5 * PI;
        for (a, wa) in x.iter().zip(&w) {
            let th = 0.25 * PI * a;
            let rmax = 0.5 * h / th.cos();
            let dir = [(axis + th).cos(), (axis + th).sin()];
            for (b, wb) in x.iter().zip(&w) {
                // r = rmax t^2 smooths the r log r behaviour at the source
                let t = 0.5 * (b + 1.0);
                let r = rmax * t * t;
                let jac = 2.0 * rmax * t * 0.5;
                let g = green_at(&[r * dir[0], r * dir[1]], params)?;
                add_scaled(&mut acc, &g, wa * 0.25 * PI * wb * jac * r);
            }
        }
    }
    Ok(acc)
}

struct Fft2 {
    px: usize,
    py: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(px: usize, py: usize) -> Self {
        let mut pl = FftPlanner::new();
        Self { px, py, fx: pl.plan_fft_forward(px), fy: pl.plan_fft_forward(py), ix: pl.plan_fft_inverse(px), iy: pl.plan_fft_inverse(py) }
    }

    fn run(&self, data: &mut [C64], inverse: bool) {
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        fx.process(data);
        let mut col = vec![C64::new(0.0, 0.0); self.py];
        for i in 0..self.px {
            for j in 0..self.py {
                col[j] = data[i + self.px * j];
            }
            fy.process(&mut col);
            for j in 0..self.py {
                data[i + self.px * j] = col[j];
            }
        }
        if inverse {
            let s = 1.0 / (self.px * self.py) as f64;
            data.iter_mut().for_each(|z| *z *= s);
        }
    }
}

/// Discretized operator u -> u - K u on the active cells of a medium.
pub struct LsSystem {
    pub params: LameParameters,
    pub h: f64,
    pub cells: Vec<GridCell>,
    lo: [i64; 2],
    nx: usize,
    ny: usize,
    /// omega^2 V f per cell.
    weights: Vec<f64>,
    table: Vec<Tensor>,
    kernel_hat: [[Vec<C64>; 2]; 2],
    fft: Fft2,
}

impl LsSystem {
    pub fn build(medium: &MediumConfig, params: &LameParameters, opts: &LsOptions) -> Result<Self> {
        let h = opts.spacing(params);
        if !(h > 0.0) {
            return invalid("grid spacing must be positive");
        }
        let outline = medium.outline()?;
        let (blo, bhi) = outline.bounding_box();
        let lo = [(blo[0] / h).floor() as i64, (blo[1] / h).floor() as i64];
        let hi = [(bhi[0] / h).ceil() as i64, (bhi[1] / h).ceil() as i64];
        let nx = (hi[0] - lo[0]) as usize;
        let ny = (hi[1] - lo[1]) as usize;
        let mut cells = vec![];
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                let a = [i as f64 * h, j as f64 * h];
                let b = [a[0] + h, a[1] + h];
                let f = outline.clipped_area(a, b) / (h * h);
                if f > 1e-12 {
                    let center = [a[0] + 0.5 * h, a[1] + 0.5 * h];
                    cells.push(GridCell { index: [i, j], center, fraction: f.min(1.0), contrast: medium.contrast_at(center) });
                }
            }
        }
        if cells.is_empty() {
            return invalid("medium support contains no grid cells");
        }
        let w2 = params.omega * params.omega;
        let weights = cells.iter().map(|c| w2 * c.contrast * c.fraction).collect();
        let (tx, ty) = (2 * nx - 1, 2 * ny - 1);
        let mut table = vec![zero(); tx * ty];
        for dj in -(ny as i64 - 1)..(ny as i64) {
            for di in -(nx as i64 - 1)..(nx as i64) {
                let off = [di as f64 * h, dj as f64 * h];
                let t = if di == 0 && dj == 0 {
                    self_integral(h, params, opts.self_order)?
                } else if di.abs().max(dj.abs()) <= opts.near_radius {
                    cell_integral(off, h, params, opts.near_order)?
                } else {
                    let mut g = green_at(&off, params)?;
                    for row in g.iter_mut() {
                        for v in row.iter_mut() {
                            *v *= h * h;
                        }
                    }
                    g
                };
                table[(di + nx as i64 - 1) as usize + tx * (dj + ny as i64 - 1) as usize] = t;
            }
        }
        let (px, py) = (2 * nx, 2 * ny);
        let fft = Fft2::new(px, py);
        let mut kernel_hat: [[Vec<C64>; 2]; 2] = Default::default();
        for a in 0..2 {
            for b in 0..2 {
                let mut grid = vec![C64::new(0.0, 0.0); px * py];
                for dj in -(ny as i64 - 1)..(ny as i64) {
                    for di in -(nx as i64 - 1)..(nx as i64) {
                        let t = &table[(di + nx as i64 - 1) as usize + tx * (dj + ny as i64 - 1) as usize];
                        let gi = di.rem_euclid(px as i64) as usize;
                        let gj = dj.rem_euclid(py as i64) as usize;
                        grid[gi + px * gj] = t[a][b];
                    }
                }
                fft.run(&mut grid, false);
                kernel_hat[a][b] = grid;
            }
        }
        Ok(Self { params: *params, h, cells, lo, nx, ny, weights, table, kernel_hat, fft })
    }

    pub fn unknowns(&self) -> usize {
        2 * self.cells.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    fn grid_index(&self, c: &GridCell) -> usize {
        (c.index[0] - self.lo[0]) as usize + 2 * self.nx * (c.index[1] - self.lo[1]) as usize
    }

    /// K u, with u stored as [u1, u2] per cell.
    pub fn apply_k(&self, u: &[C64]) -> Vec<C64> {
        let (px, py) = (2 * self.nx, 2 * self.ny);
        let mut x = [vec![C64::new(0.0, 0.0); px * py], vec![C64::new(0.0, 0.0); px * py]];
        for (k, c) in self.cells.iter().enumerate() {
            let g = self.grid_index(c);
            x[0][g] = u[2 * k] * self.weights[k];
            x[1][g] = u[2 * k + 1] * self.weights[k];
        }
        self.fft.run(&mut x[0], false);
        self.fft.run(&mut x[1], false);
        let mut y = [vec![C64::new(0.0, 0.0); px * py], vec![C64::new(0.0, 0.0); px * py]];
        for a in 0..2 {
            for m in 0..px * py {
                y[a][m] = self.kernel_hat[a][0][m] * x[0][m] + self.kernel_hat[a][1][m] * x[1][m];
            }
            self.fft.run(&mut y[a], true);
        }
        let mut out = vec![C64::new(0.0, 0.0); u.len()];
        for (k, c) in self.cells.iter().enumerate() {
            let g = self.grid_index(c);
            out[2 * k] = y[0][g];
            out[2 * k + 1] = y[1][g];
        }
        out
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        let k = self.apply_k(u);
        u.iter().zip(k).map(|(a, b)| a - b).collect()
    }

    fn dense(&self) -> DMatrix<C64> {
        let n = self.cells.len();
        let tx = 2 * self.nx - 1;
        let mut m = DMatrix::<C64>::identity(2 * n, 2 * n);
        for (r, c) in self.cells.iter().enumerate() {
            for (s, d) in self.cells.iter().enumerate() {
                let di = c.index[0] - d.index[0] + self.nx as i64 - 1;
                let dj = c.index[1] - d.index[1] + self.ny as i64 - 1;
                let t = &self.table[di as usize + tx * dj as usize];
                for a in 0..2 {
                    for b in 0..2 {
                        m[(2 * r + a, 2 * s + b)] -= t[a][b] * self.weights[s];
                    }
                }
            }
        }
        m
    }

    /// Solves (I - K) u = rhs.
    pub fn solve(&self, rhs: &[C64], opts: &LsOptions) -> Result<(Vec<C64>, IterationReport)> {
        let bnorm = norm(rhs);
        let mut warnings = vec![];
        if self.is_trivial() || bnorm == 0.0 {
            return Ok((rhs.to_vec(), IterationReport { method: "identity".into(), iterations: 0, relative_residual: 0.0, converged: true, unknowns: self.unknowns(), warnings }));
        }
        let (mut u, iters, _) = gmres(|v| self.apply(v), rhs, opts.tol, opts.restart, opts.max_iter);
        let mut method = "gmres".to_string();
        let mut res = norm(&sub(&self.apply(&u), rhs)) / bnorm;
        if !(res <= opts.tol) {
            if self.unknowns() <= opts.dense_limit {
                warnings.push(format!("GMRES stalled at relative residual {res:.3e}; dense LU fallback"));
                let sol = self.dense().lu().solve(&DVector::from_column_slice(rhs)).ok_or_else(|| Error::NotConverged("dense LU: singular system".into()))?;
                u = sol.iter().copied().collect();
                method = "dense-lu".into();
                res = norm(&sub(&self.apply(&u), rhs)) / bnorm;
            } else {
                return Err(Error::NotConverged(format!("GMRES reached relative residual {res:.3e} after {iters} iterations")));
            }
        }
        Ok((u, IterationReport { method, iterations: iters, relative_residual: res, converged: res <= opts.tol.max(1e-12), unknowns: self.unknowns(), warnings }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub unknowns: usize,
    pub warnings: Vec<String>,
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Restarted GMRES with Givens rotations; returns (x, iterations, converged).
pub fn gmres<F: Fn(&[C64]) -> Vec<C64>>(apply: F, b: &[C64], tol: f64, restart: usize, max_iter: usize) -> (Vec<C64>, usize, bool) {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return (x, 0, true);
    }
    let mut total = 0;
    while total < max_iter {
        let r = sub(b, &apply(&x));
        let beta = norm(&r);
        if beta <= tol * bnorm {
            return (x, total, true);
        }
        let m = restart.min(max_iter - total).max(1);
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&basis[k]);
            for (i, q) in basis.iter().enumerate() {
                let hik: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                hess[i][k] = hik;
                for (wj, qj) in w.iter_mut().zip(q) {
                    *wj -= hik * qj;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * hess[i][k] + sn[i].conj() * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            // rotation [c* s*; -s c] zeroes the subdiagonal
            cs[k] = a / den;
            sn[k] = bb / den;
            hess[k][k] = C64::new(den, 0.0);
            hess[k + 1][k] = C64::new(0.0, 0.0);
            let gk = g[k];
            g[k] = cs[k].conj() * gk;
            g[k + 1] = -sn[k] * gk;
            k_used = k + 1;
            total += 1;
            if g[k + 1].norm() <= tol * bnorm * 0.5 || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution
        let mut y = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * qi;
            }
        }
        if k_used == 0 {
            break;
        }
    }
    let res = norm(&sub(b, &apply(&x)));
    (x, total, res <= tol * bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 40;
        let m = DMatrix::<C64>::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(3.0, 0.5)
            } else {
                C64::new(((i * 7 + j * 3) % 11) as f64 / 40.0 - 0.1, ((i + 2 * j) % 5) as f64 / 50.0)
            }
        });
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let apply = |v: &[C64]| (&m * DVector::from_column_slice(v)).iter().copied().collect::<Vec<_>>();
        let (x, _, ok) = gmres(apply, &b, 1e-12, 10, 500);
        assert!(ok);
        let r = &m * DVector::from_column_slice(&x) - DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-10 * DVector::from_column_slice(&b).norm());
    }

    #[test]
    fn self_integral_matches_fine_cell_quadrature() {
        let p = LameParameters::new(1.0, 1.0, 3.0, 2).unwrap();
        let h = 0.1;
        let s = self_integral(h, &p, 20).unwrap();
        // split the cell into 4x4 sub-cells: the off-centre ones are regular
        let mut acc = zero();
        for a in 0..4 {
            for b in 0..4 {
                let c = [(a as f64 - 1.5) * h / 4.0, (b as f64 - 1.5) * h / 4.0];
                let t = cell_integral(c, h / 4.0, &p, 40).unwrap();
                add_scaled(&mut acc, &t, 1.0);
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[i][j] - acc[i][j]).norm() < 1e-4 * s[0][0].norm(), "{i}{j} {:?} {:?}", s[i][j], acc[i][j]);
            }
        }
        assert!(s[0][1].norm() < 1e-12 * s[0][0].norm());
    }
}
