//! Separable transmission eigenpairs on a disk from Bessel potentials.

use super::{EigenFunctions, TransmissionEigenpair};
use crate::elastic_fields::{navier_apply, traction, Hessian, Jacobian, LameParameters, Vector, VectorField};
use crate::error::{invalid, Error, Result};
use crate::specfun::{bessel_j, bessel_j_deriv};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskConfig {
    pub radius: f64,
    /// Constant contrast q = 1 + V.
    pub q: f64,
    /// lambda, mu and operator flag; omega is overridden per evaluation.
    pub params: LameParameters,
}

impl DiskConfig {
    pub fn new(radius: f64, q: f64, params: LameParameters) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("disk radius must be positive");
        }
        if !(q > 0.0) {
            return invalid("contrast q must be positive");
        }
        if q == 1.0 {
            return Err(Error::Degenerate("q = 1: v = w solves the transmission problem for every omega".into()));
        }
        Ok(Self { radius, q, params })
    }

    fn at(&self, omega: f64) -> LameParameters {
        LameParameters { omega, flag: crate::elastic_fields::OperatorFlag::StandardNavier, ..self.params }
    }
}

/// Radial profiles of the mode (u_r, u_theta, t_r, t_theta) at r for potentials
/// phi = J_n(kp r) cos(n t), psi = J_n(ks r) sin(n t) (J_0(ks r) for n = 0); u_r ~ cos, u_theta ~ sin.
fn mode_columns(n: i32, kp: f64, ks: f64, r: f64, p: &LameParameters) -> [[f64; 4]; 2] {
    let nf = n as f64;
    let (jp, djp) = (bessel_j(n, kp * r), bessel_j_deriv(n, kp * r));
    let (js, djs) = (bessel_j(n, ks * r), bessel_j_deriv(n, ks * r));
    // J'' from Bessel's equation: J'' = -J'/x - (1 - n^2/x^2) J
    let d2 = |j: f64, dj: f64, x: f64| -dj / x - (1.0 - nf * nf / (x * x)) * j;
    let d2p = d2(jp, djp, kp * r);
    let d2s = d2(js, djs, ks * r);
    // phi column
    let ur_p = kp * djp;
    let ut_p = -nf / r * jp;
    let dur_p = kp * kp * d2p;
    let dut_p = nf / (r * r) * jp - nf / r * kp * djp;
    // psi column
    let ur_s = nf / r * js;
    let ut_s = -ks * djs;
    let dur_s = -nf / (r * r) * js + nf / r * ks * djs;
    let dut_s = -ks * ks * d2s;
    let tr_p = p.lambda * (-kp * kp * jp) + 2.0 * p.mu * dur_p;
    let tr_s = 2.0 * p.mu * dur_s;
    // t_theta = mu (d_r u_theta - u_theta / r + (1/r) d_theta u_r), d_theta cos = -n sin
    let tt_p = p.mu * (dut_p - ut_p / r - nf / r * ur_p);
    let tt_s = p.mu * (dut_s - ut_s / r - nf / r * ur_s);
    [[ur_p, ut_p, tr_p, tt_p], [ur_s, ut_s, tr_s, tt_s]]
}

fn mode_matrix(n: i32, omega: f64, cfg: &DiskConfig) -> Matrix4<f64> {
    let p = cfg.at(omega);
    let (kp, ks) = (p.kp(), p.ks());
    let sq = cfg.q.sqrt();
    let v = mode_columns(n, kp, ks, cfg.radius, &p);
    let w = mode_columns(n, sq * kp, sq * ks, cfg.radius, &p);
    let mut m = Matrix4::zeros();
    for row in 0..4 {
        m[(row, 0)] = v[0][row];
        m[(row, 1)] = v[1][row];
        m[(row, 2)] = -w[0][row];
        m[(row, 3)] = -w[1][row];
    }
    for row in 0..4 {
        let s = m.row(row).norm();
        if s > 0.0 {
            m.row_mut(row).scale_mut(1.0 / s);
        }
    }
    m
}

/// Row-normalized determinant of the 4x4 mode system.
pub fn disk_mode_determinant(n: i32, omega: f64, cfg: &DiskConfig) -> Result<f64> {
    if !(omega > 0.0) {
        return invalid("omega must be positive");
    }
    Ok(mode_matrix(n, omega, cfg).determinant())
}

/// Sign changes of the scaled determinant on a uniform scan.
pub fn disk_scan(n: i32, lo: f64, hi: f64, steps: usize, cfg: &DiskConfig) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![];
    let mut prev = (lo, disk_mode_determinant(n, lo, cfg)?);
    for k in 1..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let d = disk_mode_determinant(n, x, cfg)?;
        if d == 0.0 || d.signum() != prev.1.signum() {
            out.push((prev.0, x));
        }
        prev = (x, d);
    }
    Ok(out)
}

/// Displacement of one Bessel-potential mode: a phi-column plus b psi-column, with exact derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskModeField {
    pub n: i32,
    pub kp: f64,
    pub ks: f64,
    pub a: f64,
    pub b: f64,
}

/// Coefficients c[m] of J_{n+m}(k r) e^{i(n+m) t} for offsets m in -3..=3.
type Ladder = [C64; 7];

fn ladder_d1(c: &Ladder, k: f64) -> Ladder {
    // d1 F_n = (k/2)(F_{n-1} - F_{n+1})
    let mut o = [C64::new(0.0, 0.0); 7];
    for m in 0..7 {
        if m > 0 {
            o[m - 1] += c[m] * (0.5 * k);
        }
        if m < 6 {
            o[m + 1] -= c[m] * (0.5 * k);
        }
    }
    o
}

fn ladder_d2(c: &Ladder, k: f64) -> Ladder {
    // d2 F_n = (i k/2)(F_{n+1} + F_{n-1})
    let ik = C64::new(0.0, 0.5 * k);
    let mut o = [C64::new(0.0, 0.0); 7];
    for m in 0..7 {
        if m > 0 {
            o[m - 1] += c[m] * ik;
        }
        if m < 6 {
            o[m + 1] += c[m] * ik;
        }
    }
    o
}

fn ladder_eval(c: &Ladder, n: i32, k: f64, x: [f64; 2]) -> C64 {
    let r = x[0].hypot(x[1]);
    let t = x[1].atan2(x[0]);
    (0..7)
        .filter(|&m| c[m] != C64::new(0.0, 0.0))
        .map(|m| {
            let order = n + m as i32 - 3;
            c[m] * bessel_j(order, k * r) * C64::from_polar(1.0, order as f64 * t)
        })
        .sum()
}

impl DiskModeField {
    /// Derivatives of the potentials: returns (phi derivative, psi derivative) for a multi-index.
    fn potentials(&self, x: [f64; 2], ops: &[usize]) -> (f64, f64) {
        let mut base: Ladder = [C64::new(0.0, 0.0); 7];
        base[3] = C64::new(1.0, 0.0);
        let apply = |k: f64| {
            let mut c = base;
            for &o in ops {
                c = if o == 0 { ladder_d1(&c, k) } else { ladder_d2(&c, k) };
            }
            c
        };
        let phi = ladder_eval(&apply(self.kp), self.n, self.kp, x).re;
        // n = 0 has no sin(n t) factor; the torsional potential is J_0 itself
        let zs = ladder_eval(&apply(self.ks), self.n, self.ks, x);
        let psi = if self.n == 0 { zs.re } else { zs.im };
        (self.a * phi, self.b * psi)
    }

    /// u = grad phi + (d2 psi, -d1 psi); derivative of u_i along `ops`.
    fn component(&self, x: [f64; 2], i: usize, ops: &[usize]) -> f64 {
        let mut o1 = ops.to_vec();
        let mut o2 = ops.to_vec();
        o1.push(i);
        o2.push(1 - i);
        let (phi, _) = self.potentials(x, &o1);
        let (_, psi) = self.potentials(x, &o2);
        if i == 0 {
            phi + psi
        } else {
            phi - psi
        }
    }
}

impl VectorField<2> for DiskModeField {
    fn value(&self, x: [f64; 2]) -> Vector<2> {
        std::array::from_fn(|i| C64::new(self.component(x, i, &[]), 0.0))
    }
    fn jacobian(&self, x: [f64; 2]) -> Jacobian<2> {
        std::array::from_fn(|i| std::array::from_fn(|j| C64::new(self.component(x, i, &[j]), 0.0)))
    }
    fn hessian(&self, x: [f64; 2]) -> Hessian<2> {
        std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| C64::new(self.component(x, i, &[j, k]), 0.0))))
    }
}

/// A disk eigenpair: v from (kp, ks), w from sqrt(q) (kp, ks).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiskModePair {
    pub n: i32,
    pub radius: f64,
    pub q: f64,
    pub params: LameParameters,
    pub v: DiskModeField,
    pub w: DiskModeField,
    pub determinant: f64,
}

impl DiskModePair {
    /// Collocation residuals (pde_v, pde_w, dirichlet, traction) on `nb` boundary and about `ni` interior points.
    pub fn residuals(&self, nb: usize, ni: usize) -> [f64; 4] {
        let p = &self.params;
        let w2 = p.omega * p.omega;
        let norm = |z: Vector<2>| (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
        let rings = (ni as f64).sqrt().ceil() as usize;
        let (mut pv, mut pw, mut sv, mut sw) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for a in 0..rings {
            let r = self.radius * (a as f64 + 0.5) / rings as f64;
            for b in 0..rings {
                let t = 2.0 * PI * (b as f64 + 0.37) / rings as f64;
                let x = [r * t.cos(), r * t.sin()];
                let (lv, lw) = (navier_apply(&self.v, p, x), navier_apply(&self.w, p, x));
                let (v, w) = (self.v.value(x), self.w.value(x));
                pv = pv.max(norm([lv[0] + v[0] * w2, lv[1] + v[1] * w2]));
                pw = pw.max(norm([lw[0] + w[0] * w2 * self.q, lw[1] + w[1] * w2 * self.q]));
                sv = sv.max(norm(v) * w2);
                sw = sw.max(norm(w) * w2 * self.q);
            }
        }
        let (mut d, mut tr, mut sd, mut st) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..nb {
            let t = 2.0 * PI * (k as f64 + 0.21) / nb as f64;
            let nu = [t.cos(), t.sin()];
            let x = [self.radius * nu[0], self.radius * nu[1]];
            let (v, w) = (self.v.value(x), self.w.value(x));
            let (tv, tw) = (traction(&self.v, nu, x, p), traction(&self.w, nu, x, p));
            d = d.max(norm([v[0] - w[0], v[1] - w[1]]));
            tr = tr.max(norm([tv[0] - tw[0], tv[1] - tw[1]]));
            sd = sd.max(norm(v));
            st = st.max(norm(tv));
        }
        [pv / sv, pw / sw, d / sd, tr / st]
    }
}

/// Root of the scaled determinant in a sign-change bracket, with the null vector and certificates.
pub fn disk_te_solve(n: i32, bracket: (f64, f64), cfg: &DiskConfig) -> Result<TransmissionEigenpair> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return invalid("bracket must satisfy 0 < lo < hi");
    }
    let mut flo = disk_mode_determinant(n, lo, cfg)?;
    let fhi = disk_mode_determinant(n, hi, cfg)?;
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::NotConverged(format!("no sign change of the mode-{n} determinant on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = disk_mode_determinant(n, mid, cfg)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let omega = if disk_mode_determinant(n, lo, cfg)?.abs() <= disk_mode_determinant(n, hi, cfg)?.abs() { lo } else { hi };
    let m = mode_matrix(n, omega, cfg);
    let det = m.determinant();
    let svd = m.svd(true, true);
    let vt = svd.v_t.ok_or_else(|| Error::NotConverged("SVD of the mode matrix".into()))?;
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let z: Vector4<f64> = vt.row(imin).transpose();
    let params = cfg.at(omega);
    let sq = cfg.q.sqrt();
    let mut v = DiskModeField { n, kp: params.kp(), ks: params.ks(), a: z[0], b: z[1] };
    let mut w = DiskModeField { n, kp: sq * params.kp(), ks: sq * params.ks(), a: z[2], b: z[3] };
    // normalize so the largest sampled |v| is 1
    let mut vmax = 0.0f64;
    for a in 0..=16 {
        for b in 0..32 {
            let r = cfg.radius * a as f64 / 16.0;
            let t = 2.0 * PI * b as f64 / 32.0;
            let val = v.value([r * t.cos(), r * t.sin()]);
            vmax = vmax.max((val[0].norm_sqr() + val[1].norm_sqr()).sqrt());
        }
    }
    for f in [&mut v, &mut w] {
        f.a /= vmax;
        f.b /= vmax;
    }
    let pair = DiskModePair { n, radius: cfg.radius, q: cfg.q, params, v, w, determinant: det };
    let res = pair.residuals(64, 200);
    Ok(TransmissionEigenpair {
        omega,
        omega_sq: C64::new(omega * omega, 0.0),
        physical: true,
        residual_pde_v: res[0],
        residual_pde_w: res[1],
        residual_dirichlet: res[2],
        residual_traction: res[3],
        threshold: 1e-6,
        functions: EigenFunctions::Disk(pair),
    })
}

/// Smallest disk transmission eigenvalue over modes 0..=n_max below omega_max.
pub fn disk_smallest(cfg: &DiskConfig, n_max: i32, omega_max: f64, steps: usize) -> Result<TransmissionEigenpair> {
    let mut best: Option<TransmissionEigenpair> = None;
    for n in 0..=n_max {
        if let Some(&br) = disk_scan(n, 1e-3 * omega_max, omega_max, steps, cfg)?.first() {
            let pair = disk_te_solve(n, br, cfg)?;
            if best.as_ref().is_none_or(|b| pair.omega < b.omega) {
                best = Some(pair);
            }
        }
    }
    best.ok_or_else(|| Error::NotConverged(format!("no disk eigenvalue below {omega_max}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DiskConfig {
        DiskConfig::new(1.0, 4.0, LameParameters::new(1.0, 1.0, 1.0, 2).unwrap()).unwrap()
    }

    #[test]
    fn unit_contrast_is_rejected_and_singular() {
        let p = LameParameters::new(1.0, 1.0, 1.0, 2).unwrap();
        assert!(matches!(DiskConfig::new(1.0, 1.0, p), Err(Error::Degenerate(_))));
        let c = DiskConfig { radius: 1.0, q: 1.0, params: p };
        for n in 0..3 {
            assert!(disk_mode_determinant(n, 2.3, &c).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_even_in_mode_index() {
        let c = cfg();
        for n in 1..4 {
            for &om in &[0.7, 2.9, 5.1] {
                let a = disk_mode_determinant(n, om, &c).unwrap();
                let b = disk_mode_determinant(-n, om, &c).unwrap();
                assert!((a.abs() - b.abs()).abs() < 1e-12, "{n} {om} {a} {b}");
            }
        }
    }

    #[test]
    fn small_frequency_limit_is_finite() {
        let c = cfg();
        let a = disk_mode_determinant(1, 1e-3, &c).unwrap();
        let b = disk_mode_determinant(1, 1e-4, &c).unwrap();
        assert!(a.is_finite() && (a - b).abs() < 1e-5);
    }

    #[test]
    fn mode_field_solves_navier() {
        let p = LameParameters::new(1.0, 1.0, 2.0, 2).unwrap();
        let f = DiskModeField { n: 2, kp: p.kp(), ks: p.ks(), a: 0.7, b: -1.3 };
        let x = [0.3, -0.4];
        let l = navier_apply(&f, &p, x);
        let v = f.value(x);
        for i in 0..2 {
            assert!((l[i] + v[i] * 4.0).norm() < 1e-12);
        }
        let fd = crate::elastic_fields::fd_jacobian(|y| f.value(y), x, 1e-4);
        let ex = f.jacobian(x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((fd[i][j] - ex[i][j]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn n0_eigenpair_certified() {
        let c = cfg();
        let br = disk_scan(0, 0.5, 8.0, 300, &c).unwrap();
        assert!(!br.is_empty());
        let pair = disk_te_solve(0, br[0], &c).unwrap();
        let EigenFunctions::Disk(d) = &pair.functions else { panic!() };
        assert!(d.determinant.abs() < 1e-10);
        for r in [pair.residual_pde_v, pair.residual_pde_w, pair.residual_dirichlet, pair.residual_traction] {
            assert!(r < 1e-6, "{pair:?}");
        }
        let fine = d.residuals(128, 400);
        assert!(fine[2] <= 2.0 * pair.residual_dirichlet + 1e-12);
        assert!(disk_te_solve(0, (0.5, 0.50001), &c).is_err());
    }
}
