//! Lame parameters, vector fields, the Navier operator, tractions, plane waves,
//! Helmholtz splitting and Herglotz waves.

mod fit;
mod herglotz;

pub use fit::{herglotz_fit, herglotz_fit_lcurve, schedule_check, ApproxSchedule, FitReport, FitTarget, ScheduleRow, ScheduleTable};
pub use herglotz::{HerglotzField2D, HerglotzKernel2D, HerglotzKernel3D, SeriesCoefficients};

use crate::error::{invalid, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Vector<const D: usize> = [C64; D];
/// m[i][j] = d u_i / d x_j
pub type Jacobian<const D: usize> = [[C64; D]; D];
/// h[i][j][k] = d^2 u_i / d x_j d x_k
pub type Hessian<const D: usize> = [[[C64; D]; D]; D];

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Which second-order operator plays the role of L.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorFlag {
    /// lambda * Laplacian + (lambda + mu) grad div
    LambdaLaplacian,
    /// mu * Laplacian + (lambda + mu) grad div
    #[default]
    StandardNavier,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameParameters {
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    pub flag: OperatorFlag,
}

impl LameParameters {
    /// Validates strong convexity in dimension `dim`.
    pub fn new(lambda: f64, mu: f64, omega: f64, dim: usize) -> Result<Self> {
        if !(mu > 0.0) {
            return invalid(format!("shear modulus must be positive, got {mu}"));
        }
        if !(dim as f64 * lambda + 2.0 * mu > 0.0) {
            return invalid(format!("strong convexity fails: {dim}*lambda + 2*mu <= 0"));
        }
        if !(omega > 0.0) {
            return invalid(format!("frequency must be positive, got {omega}"));
        }
        Ok(Self { lambda, mu, omega, flag: OperatorFlag::StandardNavier })
    }

    pub fn with_flag(mut self, flag: OperatorFlag) -> Self {
        self.flag = flag;
        self
    }

    pub fn kp(&self) -> f64 {
        self.omega / (2.0 * self.mu + self.lambda).sqrt()
    }

    pub fn ks(&self) -> f64 {
        self.omega / self.mu.sqrt()
    }

    pub(crate) fn laplacian_coefficient(&self) -> f64 {
        match self.flag {
            OperatorFlag::LambdaLaplacian => self.lambda,
            OperatorFlag::StandardNavier => self.mu,
        }
    }
}

/// A complex vector field on R^D with optional exact derivatives.
pub trait VectorField<const D: usize>: Sync {
    fn value(&self, x: [f64; D]) -> Vector<D>;

    fn jacobian(&self, x: [f64; D]) -> Jacobian<D> {
        fd_jacobian(|y| self.value(y), x, 1e-3)
    }

    fn hessian(&self, x: [f64; D]) -> Hessian<D> {
        let mut h = [[[ZERO; D]; D]; D];
        let step = 1e-3;
        for k in 0..D {
            let jac = |t: f64| {
                let mut y = x;
                y[k] += t;
                self.jacobian(y)
            };
            let (a, b, c, d) = (jac(-2.0 * step), jac(-step), jac(step), jac(2.0 * step));
            for i in 0..D {
                for j in 0..D {
                    h[i][j][k] = (a[i][j] - b[i][j] * 8.0 + c[i][j] * 8.0 - d[i][j]) / (12.0 * step);
                }
            }
        }
        // symmetrize mixed partials
        for i in 0..D {
            for j in 0..D {
                for k in (j + 1)..D {
                    let m = (h[i][j][k] + h[i][k][j]) * 0.5;
                    h[i][j][k] = m;
                    h[i][k][j] = m;
                }
            }
        }
        h
    }
}

/// Fourth-order central-difference Jacobian.
pub fn fd_jacobian<const D: usize, F: Fn([f64; D]) -> Vector<D>>(f: F, x: [f64; D], step: f64) -> Jacobian<D> {
    let mut m = [[ZERO; D]; D];
    for j in 0..D {
        let at = |t: f64| {
            let mut y = x;
            y[j] += t;
            f(y)
        };
        let (a, b, c, d) = (at(-2.0 * step), at(-step), at(step), at(2.0 * step));
        for i in 0..D {
            m[i][j] = (a[i] - b[i] * 8.0 + c[i] * 8.0 - d[i]) / (12.0 * step);
        }
    }
    m
}

/// Wraps a closure as a field; derivatives by finite differences.
pub struct FnField<F>(pub F);

impl<const D: usize, F: Fn([f64; D]) -> Vector<D> + Sync> VectorField<D> for FnField<F> {
    fn value(&self, x: [f64; D]) -> Vector<D> {
        (self.0)(x)
    }
}

/// Sum of two fields.
pub struct SumField<'a, const D: usize>(pub &'a dyn VectorField<D>, pub &'a dyn VectorField<D>, pub C64);

impl<const D: usize> VectorField<D> for SumField<'_, D> {
    fn value(&self, x: [f64; D]) -> Vector<D> {
        let (a, b) = (self.0.value(x), self.1.value(x));
        std::array::from_fn(|i| a[i] + self.2 * b[i])
    }
    fn jacobian(&self, x: [f64; D]) -> Jacobian<D> {
        let (a, b) = (self.0.jacobian(x), self.1.jacobian(x));
        std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + self.2 * b[i][j]))
    }
    fn hessian(&self, x: [f64; D]) -> Hessian<D> {
        let (a, b) = (self.0.hessian(x), self.1.hessian(x));
        std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| a[i][j][k] + self.2 * b[i][j][k])))
    }
}

/// pol * exp(i k dir . x)
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave<const D: usize> {
    #[serde(with = "serde_arrays")]
    pub pol: [C64; D],
    #[serde(with = "serde_arrays")]
    pub dir: [f64; D],
    pub k: f64,
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    pub fn serialize<S: Serializer, T: Serialize, const D: usize>(a: &[T; D], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }
    pub fn deserialize<'de, De: Deserializer<'de>, T: Deserialize<'de>, const D: usize>(d: De) -> Result<[T; D], De::Error> {
        let v = Vec::<T>::deserialize(d)?;
        v.try_into().map_err(|_| serde::de::Error::custom("wrong array length"))
    }
}

impl<const D: usize> PlaneWave<D> {
    fn phase(&self, x: [f64; D]) -> C64 {
        let t: f64 = (0..D).map(|i| self.dir[i] * x[i]).sum();
        (I * self.k * t).exp()
    }
}

impl PlaneWave<2> {
    /// Compressional wave d exp(i k_p d.x) travelling at angle `angle`.
    pub fn p_wave(angle: f64, params: &LameParameters) -> Self {
        let d = [angle.cos(), angle.sin()];
        Self { pol: [C64::new(d[0], 0.0), C64::new(d[1], 0.0)], dir: d, k: params.kp() }
    }

    /// Shear wave d_perp exp(i k_s d.x), d_perp = d rotated by +pi/2.
    pub fn s_wave(angle: f64, params: &LameParameters) -> Self {
        let d = [angle.cos(), angle.sin()];
        Self { pol: [C64::new(-d[1], 0.0), C64::new(d[0], 0.0)], dir: d, k: params.ks() }
    }
}

impl<const D: usize> VectorField<D> for PlaneWave<D> {
    fn value(&self, x: [f64; D]) -> Vector<D> {
        let e = self.phase(x);
        std::array::from_fn(|i| self.pol[i] * e)
    }
    fn jacobian(&self, x: [f64; D]) -> Jacobian<D> {
        let e = self.phase(x) * I * self.k;
        std::array::from_fn(|i| std::array::from_fn(|j| self.pol[i] * e * self.dir[j]))
    }
    fn hessian(&self, x: [f64; D]) -> Hessian<D> {
        let e = -self.phase(x) * self.k * self.k;
        std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| self.pol[i] * e * self.dir[j] * self.dir[k])))
    }
}

/// L field(x) under the selected operator flag.
pub fn navier_apply<const D: usize>(field: &dyn VectorField<D>, params: &LameParameters, x: [f64; D]) -> Vector<D> {
    navier_from_hessian(&field.hessian(x), params)
}

pub fn navier_from_hessian<const D: usize>(h: &Hessian<D>, params: &LameParameters) -> Vector<D> {
    let c = params.laplacian_coefficient();
    std::array::from_fn(|i| {
        let lap: C64 = (0..D).map(|j| h[i][j][j]).sum();
        let grad_div: C64 = (0..D).map(|j| h[j][j][i]).sum();
        lap * c + grad_div * (params.lambda + params.mu)
    })
}

/// Traction from a Jacobian: 2 mu grad(v) nu + lambda nu div v + rotation term
/// (mu (d2 v1 - d1 v2) nu_perp in 2D, mu nu x curl v in 3D).
pub fn traction_from_jacobian<const D: usize>(m: &Jacobian<D>, nu: [f64; D], params: &LameParameters) -> Vector<D> {
    let div: C64 = (0..D).map(|i| m[i][i]).sum();
    let mut t: Vector<D> = std::array::from_fn(|i| {
        let dn: C64 = (0..D).map(|j| m[i][j] * nu[j]).sum();
        dn * (2.0 * params.mu) + div * (params.lambda * nu[i])
    });
    match D {
        2 => {
            let rot = m[0][1] - m[1][0];
            let perp = [-nu[1], nu[0]];
            for i in 0..2 {
                t[i] += rot * (params.mu * perp[i]);
            }
        }
        3 => {
            let curl = [m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]];
            let cross = [
                curl[2] * nu[1] - curl[1] * nu[2],
                curl[0] * nu[2] - curl[2] * nu[0],
                curl[1] * nu[0] - curl[0] * nu[1],
            ];
            for i in 0..3 {
                t[i] += cross[i] * params.mu;
            }
        }
        _ => panic!("traction is defined in two and three dimensions"),
    }
    t
}

/// Stress tensor applied to nu: lambda div(v) nu + mu (grad v + grad v^T) nu.
pub fn stress_normal<const D: usize>(m: &Jacobian<D>, nu: [f64; D], params: &LameParameters) -> Vector<D> {
    let div: C64 = (0..D).map(|i| m[i][i]).sum();
    std::array::from_fn(|i| {
        let s: C64 = (0..D).map(|j| (m[i][j] + m[j][i]) * nu[j]).sum();
        s * params.mu + div * (params.lambda * nu[i])
    })
}

pub fn traction<const D: usize>(field: &dyn VectorField<D>, nu: [f64; D], x: [f64; D], params: &LameParameters) -> Vector<D> {
    traction_from_jacobian(&field.jacobian(x), nu, params)
}

/// Pointwise compressional and shear parts of a time-harmonic field from its Hessian.
pub fn helmholtz_split_at(h: &Hessian<2>, params: &LameParameters) -> (Vector<2>, Vector<2>) {
    let kp2 = params.kp().powi(2);
    let ks2 = params.ks().powi(2);
    let grad_div: [C64; 2] = std::array::from_fn(|i| h[0][0][i] + h[1][1][i]);
    let lap: [C64; 2] = std::array::from_fn(|i| h[i][0][0] + h[i][1][1]);
    let p = std::array::from_fn(|i| -grad_div[i] / kp2);
    let s = std::array::from_fn(|i| (grad_div[i] - lap[i]) / ks2);
    (p, s)
}

/// Boundary coefficient profile eta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EtaProfile {
    Constant { value: f64 },
    /// base + slope . x
    Affine { base: f64, slope: [f64; 2] },
}

/// Real boundary coefficient eta together with its Holder exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParam {
    pub eta: EtaProfile,
    pub alpha: f64,
}

impl BoundaryParam {
    pub fn new(eta: EtaProfile, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("Holder exponent must lie in (0, 1), got {alpha}"));
        }
        let finite = match eta {
            EtaProfile::Constant { value } => value.is_finite(),
            EtaProfile::Affine { base, slope } => base.is_finite() && slope.iter().all(|s| s.is_finite()),
        };
        if !finite {
            return invalid("eta must be finite");
        }
        Ok(Self { eta, alpha })
    }

    pub fn constant(value: f64) -> Self {
        Self { eta: EtaProfile::Constant { value }, alpha: 0.5 }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self.eta {
            EtaProfile::Constant { value } => value,
            EtaProfile::Affine { base, slope } => base + slope[0] * x[0] + slope[1] * x[1],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.eta, EtaProfile::Constant { value } if value == 0.0)
            || matches!(self.eta, EtaProfile::Affine { base, slope } if base == 0.0 && slope == [0.0, 0.0])
    }
}

/// Vector field sampled on a uniform grid; row-major with x fastest.
#[derive(Clone, Debug)]
pub struct GridField {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Vector<2>>,
}

impl GridField {
    pub fn sample(field: &dyn VectorField<2>, origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(field.value([origin[0] + i as f64 * h, origin[1] + j as f64 * h]));
            }
        }
        Self { origin, h, nx, ny, values }
    }

    fn at(&self, i: usize, j: usize) -> Vector<2> {
        self.values[j * self.nx + i]
    }
}

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub p_part: GridField,
    pub s_part: GridField,
    /// max |u_p + u_s - u| / max |u| over interior points
    pub reconstruction_residual: f64,
    pub grid_too_coarse: bool,
}

/// Finite-difference compressional/shear split on the grid interior (two-cell margin, left at zero).
pub fn helmholtz_split(field: &GridField, params: &LameParameters, tol: f64) -> Result<SplitResult> {
    if field.nx < 5 || field.ny < 5 {
        return invalid("grid needs at least 5x5 points for the split");
    }
    let hh = field.h;
    let mut p = field.clone();
    let mut s = field.clone();
    for v in p.values.iter_mut().chain(s.values.iter_mut()) {
        *v = [ZERO; 2];
    }
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let d2 = |f: &dyn Fn(isize) -> C64| (-f(-2) + f(-1) * 16.0 - f(0) * 30.0 + f(1) * 16.0 - f(2)) / (12.0 * hh * hh);
    let d1 = |f: &dyn Fn(isize) -> C64| (f(-2) - f(-1) * 8.0 + f(1) * 8.0 - f(2)) / (12.0 * hh);
    for j in 2..field.ny - 2 {
        for i in 2..field.nx - 2 {
            let g = |di: isize, dj: isize, c: usize| field.at((i as isize + di) as usize, (j as isize + dj) as usize)[c];
            let mut hess = [[[ZERO; 2]; 2]; 2];
            for c in 0..2 {
                hess[c][0][0] = d2(&|t| g(t, 0, c));
                hess[c][1][1] = d2(&|t| g(0, t, c));
                let mixed = d1(&|t| d1(&|u| g(t, u, c)));
                hess[c][0][1] = mixed;
                hess[c][1][0] = mixed;
            }
            let (up, us) = helmholtz_split_at(&hess, params);
            let u = field.at(i, j);
            for c in 0..2 {
                worst = worst.max((up[c] + us[c] - u[c]).norm());
                scale = scale.max(u[c].norm());
            }
            p.values[j * field.nx + i] = up;
            s.values[j * field.nx + i] = us;
        }
    }
    let res = if scale > 0.0 { worst / scale } else { 0.0 };
    Ok(SplitResult { p_part: p, s_part: s, reconstruction_residual: res, grid_too_coarse: res > tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LameParameters {
        LameParameters::new(2.0, 1.0, 3.0, 2).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(LameParameters::new(1.0, 0.0, 1.0, 2).is_err());
        assert!(LameParameters::new(-1.5, 1.0, 1.0, 2).is_err());
        assert!(LameParameters::new(-0.5, 1.0, 1.0, 3).is_ok());
        let p = params();
        assert!((-(2.0 * p.mu + p.lambda) * p.kp().powi(2) + p.omega.powi(2)).abs() < 1e-12);
        assert!((-p.mu * p.ks().powi(2) + p.omega.powi(2)).abs() < 1e-12);
        assert!(p.kp() < p.ks());
    }

    #[test]
    fn plane_waves_solve_navier() {
        let p = params();
        for w in [PlaneWave::p_wave(0.7, &p), PlaneWave::s_wave(-1.2, &p)] {
            let x = [0.3, -0.8];
            let l = navier_apply(&w, &p, x);
            let v = w.value(x);
            for i in 0..2 {
                assert!((l[i] + v[i] * p.omega.powi(2)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_field_and_rigid_motions() {
        let p = params();
        let lin = FnField(|x: [f64; 2]| [C64::new(x[0], 0.0), ZERO]);
        let l = navier_apply(&lin, &p, [0.2, 0.1]);
        assert!(l[0].norm() < 1e-6 && l[1].norm() < 1e-6);
        let rot = FnField(|x: [f64; 2]| [C64::new(-x[1], 0.0), C64::new(x[0], 0.0)]);
        let t = traction(&rot, [0.6, 0.8], [0.1, 0.4], &p);
        assert!(t[0].norm() < 1e-10 && t[1].norm() < 1e-10);
        let v = FnField(|x: [f64; 2]| [C64::new(x[0], 0.0), C64::new(-x[1], 0.0)]);
        let t = traction(&v, [1.0, 0.0], [0.3, 0.3], &p);
        assert!((t[0] - 2.0).norm() < 1e-10 && t[1].norm() < 1e-10);
    }

    #[test]
    fn printed_traction_is_stress_times_normal() {
        let p = params();
        let w = SumField(&PlaneWave::p_wave(0.3, &p), &PlaneWave::s_wave(2.0, &p), C64::new(0.5, 1.0));
        let m = w.jacobian([0.2, 0.7]);
        let nu = [0.28, 0.96];
        let a = traction_from_jacobian(&m, nu, &p);
        let b = stress_normal(&m, nu, &p);
        for i in 0..2 {
            assert!((a[i] - b[i]).norm() < 1e-12);
        }
        let w3 = PlaneWave::<3> { pol: [C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.2, 0.5)], dir: [0.0, 0.6, 0.8], k: 1.7 };
        let m3 = w3.jacobian([0.1, 0.2, 0.3]);
        let nu3 = [0.48, 0.6, 0.64];
        let a = traction_from_jacobian(&m3, nu3, &p);
        let b = stress_normal(&m3, nu3, &p);
        for i in 0..3 {
            assert!((a[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_split_separates_wave_types() {
        let p = params();
        let pw = PlaneWave::p_wave(0.4, &p);
        let g = GridField::sample(&pw, [0.0, 0.0], 0.02, 21, 21);
        let r = helmholtz_split(&g, &p, 1e-6).unwrap();
        let smax = r.s_part.values.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
        assert!(smax < 1e-6, "{smax}");
        assert!(!r.grid_too_coarse);
        let sw = PlaneWave::s_wave(0.4, &p);
        let g = GridField::sample(&sw, [0.0, 0.0], 0.02, 21, 21);
        let r = helmholtz_split(&g, &p, 1e-6).unwrap();
        let pmax = r.p_part.values.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
        assert!(pmax < 1e-6, "{pmax}");
        let z = GridField::sample(&FnField(|_: [f64; 2]| [ZERO; 2]), [0.0, 0.0], 0.1, 6, 6);
        let r = helmholtz_split(&z, &p, 1e-6).unwrap();
        assert!(r.p_part.values.iter().all(|v| v[0] == ZERO));
    }
}
