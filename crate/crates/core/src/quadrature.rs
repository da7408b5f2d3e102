//! One-dimensional quadrature rules.

use crate::specfun::legendre_p_deriv;
use num_complex::Complex64 as C64;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p_deriv(n as u32, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_p_deriv(n as u32, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b] with `panels` equal panels.
pub fn gauss_panels(a: f64, b: f64, n: usize, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * panels);
    let len = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * len;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * len * (xi + 1.0), 0.5 * len * wi));
        }
    }
    out
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Gauss-Kronrod (7/15) integration of a complex integrand.
pub fn adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    let mut stack = vec![(a, b, gk15(&f, a, b))];
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut converged = true;
    let whole = stack[0].2 .0.norm();
    let mut evals = 0usize;
    while let Some((lo, hi, (v, e))) = stack.pop() {
        let tol = abs_tol.max(rel_tol * whole) * (hi - lo) / (b - a);
        if e <= tol || (hi - lo) < 1e-14 * (b - a).abs() || evals > 200_000 {
            if e > tol {
                converged = false;
            }
            total += v;
            err += e;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, gk15(&f, lo, mid)));
        stack.push((mid, hi, gk15(&f, mid, hi)));
        evals += 30;
    }
    QuadResult { value: total, error: err, converged }
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    adaptive(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol).value.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(9);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(16)).sum();
        assert!((s - 2.0 / 17.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive_real(|x| x.sqrt().ln(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((v + 0.5).abs() < 1e-10);
    }
}
