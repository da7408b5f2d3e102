use super::{Hessian, Jacobian, LameParameters, Vector, VectorField, I, ZERO};
use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;
use crate::specfun::{bessel_j_all, legendre_p_all, spherical_j_all};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Kernel sampled at N equispaced directions d_m = (cos 2 pi m/N, sin 2 pi m/N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerglotzKernel2D {
    pub g_p: Vec<C64>,
    pub g_s: Vec<C64>,
}

impl HerglotzKernel2D {
    pub fn new(g_p: Vec<C64>, g_s: Vec<C64>) -> Result<Self> {
        if g_p.len() != g_s.len() {
            return invalid("g_p and g_s need the same node count");
        }
        if g_p.len() < 8 {
            return invalid("a Herglotz kernel needs at least 8 nodes");
        }
        Ok(Self { g_p, g_s })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![ZERO; n], vec![ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.g_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_p.is_empty()
    }

    pub fn angle(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.len() as f64
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Trapezoid-rule L2 norms (||g_p||, ||g_s||) on the circle.
    pub fn norms(&self) -> (f64, f64) {
        let w = self.weight();
        let n = |g: &[C64]| (w * g.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        (n(&self.g_p), n(&self.g_s))
    }

    pub fn real_part(&self) -> Self {
        let re = |g: &[C64]| g.iter().map(|z| C64::new(z.re, 0.0)).collect();
        Self { g_p: re(&self.g_p), g_s: re(&self.g_s) }
    }

    pub fn imag_part(&self) -> Self {
        let im = |g: &[C64]| g.iter().map(|z| C64::new(z.im, 0.0)).collect();
        Self { g_p: im(&self.g_p), g_s: im(&self.g_s) }
    }

    pub fn field<'a>(&'a self, params: &'a LameParameters) -> HerglotzField2D<'a> {
        HerglotzField2D { kernel: self, params }
    }

    /// Direct trapezoid evaluation of the Herglotz integral.
    pub fn eval(&self, x: [f64; 2], params: &LameParameters) -> Vector<2> {
        self.field(params).value(x)
    }

    /// Jacobi-Anger series evaluation with Bessel orders up to 2 * l_max.
    pub fn eval_series(&self, x: [f64; 2], params: &LameParameters, l_max: usize) -> Vector<2> {
        let nmax = 2 * l_max;
        let r = x[0].hypot(x[1]);
        let phi = x[1].atan2(x[0]);
        let pref = (-I * PI / 4.0).exp();
        let mut out = [ZERO; 2];
        for (k, g, shear) in [(params.kp(), &self.g_p, false), (params.ks(), &self.g_s, true)] {
            let amp = (k / params.omega).sqrt() * self.weight();
            let jn = bessel_j_all(nmax, k * r);
            let mut ipow = C64::new(1.0, 0.0);
            for (n, jv) in jn.iter().enumerate() {
                let eps = if n == 0 { 1.0 } else { 2.0 };
                let mut c = [ZERO; 2];
                for (m, gm) in g.iter().enumerate() {
                    let a = self.angle(m);
                    let pol = if shear { [-a.sin(), a.cos()] } else { [a.cos(), a.sin()] };
                    let w = *gm * (n as f64 * (a - phi)).cos();
                    c[0] += w * pol[0];
                    c[1] += w * pol[1];
                }
                for i in 0..2 {
                    out[i] += pref * amp * eps * ipow * *jv * c[i];
                }
                ipow *= I;
            }
        }
        out
    }

    /// The value at the origin assembled from the real/imaginary kernel parts
    /// (the combination v^R(0) + i v^I(0) with the 1/sqrt(2) factors).
    pub fn origin_from_parts(&self, params: &LameParameters) -> Vector<2> {
        let w = self.weight();
        let part = |k: f64, g: &[C64], shear: bool, take_re: bool| -> [f64; 2] {
            let mut acc = [0.0; 2];
            for (m, z) in g.iter().enumerate() {
                let a = self.angle(m);
                let pol = if shear { [-a.sin(), a.cos()] } else { [a.cos(), a.sin()] };
                let val = if take_re { z.re } else { z.im };
                acc[0] += val * pol[0];
                acc[1] += val * pol[1];
            }
            let s = (k / params.omega).sqrt() * w / 2f64.sqrt();
            [acc[0] * s, acc[1] * s]
        };
        let (kp, ks) = (params.kp(), params.ks());
        let pr = part(kp, &self.g_p, false, true);
        let sr = part(ks, &self.g_s, true, true);
        let pi = part(kp, &self.g_p, false, false);
        let si = part(ks, &self.g_s, true, false);
        std::array::from_fn(|c| C64::new(pr[c] + sr[c] + pi[c] + si[c], pi[c] + si[c] - pr[c] - sr[c]))
    }

    /// Angular coefficient vectors (A_1, A_2, A_3) of order l for wave type p (shear = false) or s at x.
    pub fn series_coefficients(&self, x: [f64; 2], params: &LameParameters, l: usize, shear: bool) -> SeriesCoefficients {
        let phi = x[1].atan2(x[0]);
        let k = if shear { params.ks() } else { params.kp() };
        let g = if shear { &self.g_s } else { &self.g_p };
        let amp = (k / params.omega).sqrt() * self.weight();
        let mut a = [[0.0; 2]; 3];
        for (m, z) in g.iter().enumerate() {
            let ang = self.angle(m);
            let pol = if shear { [-ang.sin(), ang.cos()] } else { [ang.cos(), ang.sin()] };
            let th = ang - phi;
            let c_even = (2.0 * l as f64 * th).cos();
            let c_odd = ((2.0 * l as f64 - 1.0) * th).cos();
            for i in 0..2 {
                a[0][i] += amp * (z.re + z.im) * c_even * pol[i];
                a[1][i] += amp * (z.im - z.re) * c_odd * pol[i];
                a[2][i] += amp * (z.re - z.im) * c_even * pol[i];
            }
        }
        let norm = if shear { self.norms().1 } else { self.norms().0 };
        SeriesCoefficients { l, a, bound: 2.0 * (k * PI / params.omega).sqrt() * norm }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesCoefficients {
    pub l: usize,
    pub a: [[f64; 2]; 3],
    pub bound: f64,
}

impl SeriesCoefficients {
    pub fn within_bound(&self) -> bool {
        self.a.iter().all(|v| v[0].hypot(v[1]) <= self.bound * (1.0 + 1e-12))
    }
}

/// A 2D Herglotz kernel bound to Lame parameters, usable as a field with exact derivatives.
pub struct HerglotzField2D<'a> {
    pub kernel: &'a HerglotzKernel2D,
    pub params: &'a LameParameters,
}

impl HerglotzField2D<'_> {
    /// Calls sink(amplitude, polarization, direction, wavenumber) for every nonzero node.
    fn accumulate(&self, x: [f64; 2], mut sink: impl FnMut(C64, [f64; 2], [f64; 2], f64)) {
        let pref = (-I * PI / 4.0).exp() * self.kernel.weight();
        for (k, g, shear) in [(self.params.kp(), &self.kernel.g_p, false), (self.params.ks(), &self.kernel.g_s, true)] {
            let amp = pref * (k / self.params.omega).sqrt();
            for (m, gm) in g.iter().enumerate() {
                if *gm == ZERO {
                    continue;
                }
                let a = self.kernel.angle(m);
                let d = [a.cos(), a.sin()];
                let pol = if shear { [-d[1], d[0]] } else { d };
                let e = (I * k * (d[0] * x[0] + d[1] * x[1])).exp();
                sink(amp * *gm * e, pol, d, k);
            }
        }
    }
}

impl VectorField<2> for HerglotzField2D<'_> {
    fn value(&self, x: [f64; 2]) -> Vector<2> {
        let mut out = [ZERO; 2];
        self.accumulate(x, |c, pol, _, _| {
            out[0] += c * pol[0];
            out[1] += c * pol[1];
        });
        out
    }
    fn jacobian(&self, x: [f64; 2]) -> Jacobian<2> {
        let mut out = [[ZERO; 2]; 2];
        self.accumulate(x, |c, pol, d, k| {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += c * I * k * pol[i] * d[j];
                }
            }
        });
        out
    }
    fn hessian(&self, x: [f64; 2]) -> Hessian<2> {
        let mut out = [[[ZERO; 2]; 2]; 2];
        self.accumulate(x, |c, pol, d, k| {
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        out[i][j][l] -= c * k * k * pol[i] * d[j] * d[l];
                    }
                }
            }
        });
        out
    }
}

/// Kernel on the unit sphere: product Gauss-Legendre in cos(polar angle) times equispaced azimuth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerglotzKernel3D {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub g_p: Vec<[C64; 3]>,
    pub g_s: Vec<[C64; 3]>,
}

impl HerglotzKernel3D {
    pub fn sphere_rule(n_polar: usize, n_azimuth: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
        let (x, w) = gauss_legendre(n_polar);
        let mut dirs = Vec::new();
        let mut wts = Vec::new();
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..n_azimuth {
                let ph = 2.0 * PI * k as f64 / n_azimuth as f64;
                dirs.push([st * ph.cos(), st * ph.sin(), *ct]);
                wts.push(wt * 2.0 * PI / n_azimuth as f64);
            }
        }
        (dirs, wts)
    }

    /// Builds a kernel on the product rule from densities evaluated at each direction.
    pub fn from_fn(n_polar: usize, n_azimuth: usize, gp: impl Fn([f64; 3]) -> [C64; 3], gs: impl Fn([f64; 3]) -> [C64; 3]) -> Self {
        let (directions, weights) = Self::sphere_rule(n_polar, n_azimuth);
        let g_p = directions.iter().map(|d| gp(*d)).collect();
        let g_s = directions.iter().map(|d| gs(*d)).collect();
        Self { directions, weights, g_p, g_s }
    }

    fn kn(params: &LameParameters) -> [f64; 2] {
        [params.kp(), params.ks()]
    }

    /// Direct quadrature of the sphere integral (no normalization factors).
    pub fn eval(&self, x: [f64; 3], params: &LameParameters) -> Vector<3> {
        let [kp, ks] = Self::kn(params);
        let mut out = [ZERO; 3];
        for (m, d) in self.directions.iter().enumerate() {
            let t = d[0] * x[0] + d[1] * x[1] + d[2] * x[2];
            let ep = (I * kp * t).exp() * self.weights[m];
            let es = (I * ks * t).exp() * self.weights[m];
            for i in 0..3 {
                out[i] += ep * self.g_p[m][i] + es * self.g_s[m][i];
            }
        }
        out
    }

    /// Spherical-wave series: sum over n <= 2 l_max of i^n (2n+1) j_n(k|x|) P_n(xhat . d).
    pub fn eval_series(&self, x: [f64; 3], params: &LameParameters, l_max: usize) -> Vector<3> {
        let nmax = 2 * l_max;
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let xhat = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0, 0.0, 1.0] };
        let [kp, ks] = Self::kn(params);
        let jp = spherical_j_all(nmax, kp * r);
        let js = spherical_j_all(nmax, ks * r);
        let mut out = [ZERO; 3];
        for (m, d) in self.directions.iter().enumerate() {
            let c = xhat[0] * d[0] + xhat[1] * d[1] + xhat[2] * d[2];
            let p = legendre_p_all(nmax, c.clamp(-1.0, 1.0));
            let mut sp = ZERO;
            let mut ss = ZERO;
            let mut ipow = C64::new(1.0, 0.0);
            for n in 0..=nmax {
                let f = ipow * ((2 * n + 1) as f64 * p[n]);
                sp += f * jp[n];
                ss += f * js[n];
                ipow *= I;
            }
            for i in 0..3 {
                out[i] += (sp * self.g_p[m][i] + ss * self.g_s[m][i]) * self.weights[m];
            }
        }
        out
    }
}

impl VectorField<3> for (HerglotzKernel3D, LameParameters) {
    fn value(&self, x: [f64; 3]) -> Vector<3> {
        self.0.eval(x, &self.1)
    }
    fn jacobian(&self, x: [f64; 3]) -> Jacobian<3> {
        let [kp, ks] = HerglotzKernel3D::kn(&self.1);
        let k = &self.0;
        let mut out = [[ZERO; 3]; 3];
        for (m, d) in k.directions.iter().enumerate() {
            let t = d[0] * x[0] + d[1] * x[1] + d[2] * x[2];
            let ep = (I * kp * t).exp() * I * kp * k.weights[m];
            let es = (I * ks * t).exp() * I * ks * k.weights[m];
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += (ep * k.g_p[m][i] + es * k.g_s[m][i]) * d[j];
                }
            }
        }
        out
    }
    fn hessian(&self, x: [f64; 3]) -> Hessian<3> {
        let [kp, ks] = HerglotzKernel3D::kn(&self.1);
        let k = &self.0;
        let mut out = [[[ZERO; 3]; 3]; 3];
        for (m, d) in k.directions.iter().enumerate() {
            let t = d[0] * x[0] + d[1] * x[1] + d[2] * x[2];
            let ep = -(I * kp * t).exp() * kp * kp * k.weights[m];
            let es = -(I * ks * t).exp() * ks * ks * k.weights[m];
            for i in 0..3 {
                let c = ep * k.g_p[m][i] + es * k.g_s[m][i];
                for j in 0..3 {
                    for l in 0..3 {
                        out[i][j][l] += c * d[j] * d[l];
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::navier_apply;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> LameParameters {
        LameParameters::new(1.5, 1.0, 2.5, 2).unwrap()
    }

    fn random_kernel(n: usize, seed: u64) -> HerglotzKernel2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
        let gp = g();
        let gs = g();
        HerglotzKernel2D::new(gp, gs).unwrap()
    }

    #[test]
    fn delta_kernel_at_origin() {
        let p = params();
        let mut k = HerglotzKernel2D::zeros(16).unwrap();
        k.g_p[3] = C64::new(1.0, 0.0);
        let v = k.eval([0.0, 0.0], &p);
        let a = k.angle(3);
        let expect = (-I * PI / 4.0).exp() * (p.kp() / p.omega).sqrt() * (2.0 * PI / 16.0);
        assert!((v[0] - expect * a.cos()).norm() < 1e-14);
        assert!((v[1] - expect * a.sin()).norm() < 1e-14);
        let z = HerglotzKernel2D::zeros(16).unwrap().eval([0.3, 0.2], &p);
        assert_eq!(z, [ZERO; 2]);
    }

    #[test]
    fn series_matches_direct() {
        let p = params();
        let k = random_kernel(24, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let r: f64 = rng.gen_range(0.0..1.0);
            let t: f64 = rng.gen_range(-PI..PI);
            let x = [r * t.cos(), r * t.sin()];
            let a = k.eval(x, &p);
            let b = k.eval_series(x, &p, 40);
            for i in 0..2 {
                assert!((a[i] - b[i]).norm() < 1e-8);
            }
        }
        let o = k.origin_from_parts(&p);
        let d = k.eval([0.0, 0.0], &p);
        for i in 0..2 {
            assert!((o[i] - d[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn coefficient_bounds_hold() {
        let p = params();
        let k = random_kernel(32, 5);
        for l in 1..=20 {
            for shear in [false, true] {
                assert!(k.series_coefficients([0.3, -0.4], &p, l, shear).within_bound());
            }
        }
    }

    #[test]
    fn herglotz_field_solves_navier() {
        let p = params();
        let k = random_kernel(16, 1);
        let f = k.field(&p);
        let x = [0.4, 0.1];
        let l = navier_apply(&f, &p, x);
        let v = f.value(x);
        let scale = v[0].norm().max(v[1].norm());
        for i in 0..2 {
            assert!((l[i] + v[i] * p.omega.powi(2)).norm() < 1e-8 * scale * p.omega.powi(2));
        }
    }

    #[test]
    fn sphere_weights_and_series_3d() {
        let (_, w) = HerglotzKernel3D::sphere_rule(12, 24);
        assert!((w.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        let p = LameParameters::new(1.0, 1.0, 2.0, 3).unwrap();
        let k = HerglotzKernel3D::from_fn(
            16,
            32,
            |d| [C64::new(d[0], 0.2), C64::new(d[2] * d[1], 0.0), C64::new(1.0, -d[0])],
            |d| [C64::new(0.0, d[1]), C64::new(d[0] - d[2], 0.0), C64::new(0.3, 0.0)],
        );
        for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [0.0, 0.7, -0.7]] {
            let a = k.eval(x, &p);
            let b = k.eval_series(x, &p, 30);
            for i in 0..3 {
                assert!((a[i] - b[i]).norm() < 1e-7);
            }
        }
    }
}
