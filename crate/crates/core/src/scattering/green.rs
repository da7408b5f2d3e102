//! Kupradze fundamental tensor of the 2D Navier operator and its compressional/shear parts.

use crate::elastic_fields::LameParameters;
use crate::error::{invalid, Result};
use crate::specfun::hankel1_01;
use num_complex::Complex64 as C64;

pub type Tensor = [[C64; 2]; 2];

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: Tensor = [[C64 { re: 0.0, im: 0.0 }; 2]; 2];

/// grad grad H_0(k rho) as (coefficient of rr^T, coefficient of I).
fn hess_h0(k: f64, rho: f64) -> (C64, C64) {
    let (h0, h1) = hankel1_01(k * rho);
    let a = h1 * (k / rho);
    (-h0 * k * k + a * 2.0, -a)
}

fn assemble(rr: C64, id: C64, rhat: [f64; 2]) -> Tensor {
    std::array::from_fn(|i| std::array::from_fn(|j| rr * (rhat[i] * rhat[j]) + if i == j { id } else { C64::new(0.0, 0.0) }))
}

/// (p-part, s-part) of the tensor at separation d = x - y:
/// p = -(i / 4 omega^2) grad grad H_0(kp r), s = (i / 4 mu) H_0(ks r) I + (i / 4 omega^2) grad grad H_0(ks r).
pub fn green_parts(d: [f64; 2], params: &LameParameters) -> Result<(Tensor, Tensor)> {
    let rho = d[0].hypot(d[1]);
    if !(rho > 0.0) {
        return invalid("Green tensor needs distinct points");
    }
    let rhat = [d[0] / rho, d[1] / rho];
    let w2 = params.omega * params.omega;
    let (kp, ks) = (params.kp(), params.ks());
    let (prr, pid) = hess_h0(kp, rho);
    let (srr, sid) = hess_h0(ks, rho);
    let (h0s, _) = hankel1_01(ks * rho);
    let cp = -I / (4.0 * w2);
    let cs = I / (4.0 * w2);
    let p = assemble(prr * cp, pid * cp, rhat);
    let s = assemble(srr * cs, sid * cs + h0s * I / (4.0 * params.mu), rhat);
    Ok((p, s))
}

/// Gamma(x, y) = (i/4mu) H_0(ks|x-y|) I + (i/4omega^2) grad grad [H_0(ks|x-y|) - H_0(kp|x-y|)].
pub fn green_tensor_2d(x: [f64; 2], y: [f64; 2], params: &LameParameters) -> Result<Tensor> {
    green_at(&[x[0] - y[0], x[1] - y[1]], params)
}

pub(crate) fn green_at(d: &[f64; 2], params: &LameParameters) -> Result<Tensor> {
    let rho = d[0].hypot(d[1]);
    if !(rho > 0.0) {
        return invalid("Green tensor needs distinct points");
    }
    let rhat = [d[0] / rho, d[1] / rho];
    let w2 = params.omega * params.omega;
    let (h0p, h1p) = hankel1_01(params.kp() * rho);
    let (h0s, h1s) = hankel1_01(params.ks() * rho);
    let (kp, ks) = (params.kp(), params.ks());
    // the 1/rho^2 parts of the two Hessians cancel in the difference
    let a = (h1s * ks - h1p * kp) / rho;
    let rr = (-h0s * ks * ks + h0p * kp * kp + a * 2.0) * (I / (4.0 * w2));
    let id = h0s * (I / (4.0 * params.mu)) - a * (I / (4.0 * w2));
    Ok(assemble(rr, id, rhat))
}

pub fn apply(t: &Tensor, v: [C64; 2]) -> [C64; 2] {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}

pub(crate) fn add_scaled(acc: &mut Tensor, t: &Tensor, w: f64) {
    for i in 0..2 {
        for j in 0..2 {
            acc[i][j] += t[i][j] * w;
        }
    }
}

pub(crate) fn zero() -> Tensor {
    ZERO
}

/// Relative size of the transverse component of the compressional part at separation rho along e1.
pub fn p_part_transversality(rho: f64, params: &LameParameters) -> f64 {
    let (p, _) = green_parts([rho, 0.0], params).expect("rho > 0");
    p[1][1].norm() / p[0][0].norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic_fields::{navier_apply, FnField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> LameParameters {
        LameParameters::new(1.3, 0.8, 2.0, 2).unwrap()
    }

    #[test]
    fn reciprocity_and_coincident_error() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = green_tensor_2d(x, y, &p).unwrap();
            let b = green_tensor_2d(y, x, &p).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[j][i]).norm() <= 1e-12 * a[i][j].norm().max(1.0));
                }
            }
        }
        assert!(green_tensor_2d([1.0, 2.0], [1.0, 2.0], &p).is_err());
    }

    #[test]
    fn parts_sum_to_tensor() {
        let p = params();
        for d in [[0.3, -0.1], [2.0, 1.5], [-7.0, 0.2]] {
            let g = green_at(&d, &p).unwrap();
            let (a, b) = green_parts(d, &p).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g[i][j] - a[i][j] - b[i][j]).norm() < 1e-12 * g[i][j].norm().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn columns_solve_navier_away_from_source() {
        let p = params();
        for col in 0..2 {
            let f = FnField(move |x: [f64; 2]| {
                let g = green_at(&x, &p).unwrap();
                [g[0][col], g[1][col]]
            });
            for x in [[0.7, 0.4], [-1.1, 2.3]] {
                let l = navier_apply(&f, &p, x);
                let v = f.0(x);
                let scale = v[0].norm() + v[1].norm();
                for i in 0..2 {
                    assert!((l[i] + v[i] * p.omega.powi(2)).norm() < 1e-6 * scale, "{l:?} {v:?}");
                }
            }
        }
    }

    #[test]
    fn compressional_part_becomes_longitudinal() {
        let p = params();
        let lam = 2.0 * std::f64::consts::PI / p.kp();
        let t50 = p_part_transversality(50.0 * lam, &p);
        // the transverse term decays like 1/(kp r)
        assert!((t50 * p.kp() * 50.0 * lam - 1.0).abs() < 1e-2, "{t50}");
        assert!(p_part_transversality(500.0 * lam, &p) < 1e-3);
    }
}
