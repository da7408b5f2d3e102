//! The complex geometric optics solution u = (exp(-s sqrt z), i exp(-s sqrt z)), z = x1 + i x2,
//! its closed-form integrals over corner sectors and edges, and certified decay bounds.

use crate::elastic_fields::{traction_from_jacobian, Hessian, Jacobian, LameParameters, Vector, VectorField};
use crate::error::{invalid, Error, Result};
use crate::geometry::{arc_quadrature, sector_quadrature, QuadTarget, SectorGeometry};
use crate::quadrature::{gauss_legendre, gauss_panels};
use crate::specfun::{gamma, lower_incomplete_gamma};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// mu(theta) = cos(theta/2) + i sin(theta/2)
pub fn mu_theta(theta: f64) -> C64 {
    C64::from_polar(1.0, 0.5 * theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgoField {
    pub s: f64,
}

fn on_cut(x: [f64; 2]) -> bool {
    x[1] == 0.0 && x[0] <= 0.0
}

impl CgoField {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return invalid(format!("CGO parameter must be positive, got {s}"));
        }
        Ok(Self { s })
    }

    fn first(&self, x: [f64; 2]) -> (C64, C64) {
        let sz = C64::new(x[0], x[1]).sqrt();
        (sz, (-self.s * sz).exp())
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<Vector<2>> {
        if on_cut(x) && x != [0.0, 0.0] {
            return Err(Error::InvalidInput(format!("point {x:?} lies on the branch cut")));
        }
        let (_, e) = self.first(x);
        Ok([e, I * e])
    }

    /// m[i][j] = d u_i / d x_j; the second row is i times the first.
    pub fn gradient(&self, x: [f64; 2]) -> Result<Jacobian<2>> {
        if x == [0.0, 0.0] {
            return Err(Error::InvalidInput("gradient is singular at the vertex".into()));
        }
        if on_cut(x) {
            return Err(Error::InvalidInput(format!("point {x:?} lies on the branch cut")));
        }
        let (sz, e) = self.first(x);
        let d1 = -self.s / (2.0 * sz) * e;
        let d2 = I * d1;
        Ok([[d1, d2], [I * d1, I * d2]])
    }

    /// mu grad(u) nu, the shear-gradient form of the traction used in the decay bounds.
    pub fn traction(&self, x: [f64; 2], nu: [f64; 2], params: &LameParameters) -> Result<Vector<2>> {
        let m = self.gradient(x)?;
        Ok(std::array::from_fn(|i| (m[i][0] * nu[0] + m[i][1] * nu[1]) * params.mu))
    }

    /// Stress-based traction 2 mu grad(u) nu + lambda nu div u + mu (d2 u1 - d1 u2) nu_perp.
    /// div u and the rotation both vanish, so this is exactly twice [`CgoField::traction`].
    pub fn full_traction(&self, x: [f64; 2], nu: [f64; 2], params: &LameParameters) -> Result<Vector<2>> {
        Ok(traction_from_jacobian(&self.gradient(x)?, nu, params))
    }
}

impl VectorField<2> for CgoField {
    fn value(&self, x: [f64; 2]) -> Vector<2> {
        let (_, e) = self.first(x);
        [e, I * e]
    }
    fn jacobian(&self, x: [f64; 2]) -> Jacobian<2> {
        let (sz, e) = self.first(x);
        let d1 = -self.s / (2.0 * sz) * e;
        [[d1, I * d1], [I * d1, -d1]]
    }
    fn hessian(&self, x: [f64; 2]) -> Hessian<2> {
        // d/dz of f(z) = exp(-s sqrt z): f' = -s/(2 sqrt z) f, f'' = (s^2/(4z) + s/(4 z^{3/2})) f
        let (sz, e) = self.first(x);
        let z = sz * sz;
        let f2 = (self.s * self.s / (4.0 * z) + self.s / (4.0 * z * sz)) * e;
        // d_j d_k f = c_j c_k f'' with c = (1, i)
        let c = [C64::new(1.0, 0.0), I];
        let mut h = [[[C64::new(0.0, 0.0); 2]; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                h[0][j][k] = c[j] * c[k] * f2;
                h[1][j][k] = I * c[j] * c[k] * f2;
            }
        }
        h
    }
}

/// Integral of u_1 over the infinite sector with angles (theta_min, theta_max).
pub fn sector_integral_exact(theta_min: f64, theta_max: f64, s: f64) -> C64 {
    6.0 * I * ((-2.0 * I * theta_max).exp() - (-2.0 * I * theta_min).exp()) / s.powi(4)
}

/// Integral of u_1 over the sector truncated at radius h: the infinite-sector value minus the
/// radial tail 2 e^-z (z^3 + 3z^2 + 6z + 6) / (s mu)^4, z = s mu sqrt(h), integrated in angle.
pub fn sector_integral_truncated(theta_min: f64, theta_max: f64, h: f64, s: f64) -> C64 {
    gauss_panels(theta_min, theta_max, 24, 8)
        .into_iter()
        .map(|(t, w)| {
            let sm = mu_theta(t) * s;
            let z = sm * h.sqrt();
            let tail = (-z).exp() * (((z + 3.0) * z + 6.0) * z + 6.0) * 2.0;
            (C64::new(12.0, 0.0) - tail) / sm.powi(4) * w
        })
        .sum()
}

/// Integral of u_1 along the ray at angle theta from 0 to h.
pub fn edge_integral_exact(theta: f64, h: f64, s: f64) -> C64 {
    let m = mu_theta(theta);
    let a = s * h.sqrt();
    let e = (-a * m).exp();
    2.0 / (s * s) * (1.0 / (m * m) - e / (m * m) - a * e / m)
}

/// Exact value of the integral of r^zeta exp(-s c sqrt r) over [0, h].
pub fn weighted_decay_integral(zeta: f64, s: f64, c: f64, h: f64) -> Result<f64> {
    if !(zeta >= 0.0) {
        return invalid("zeta must be nonnegative");
    }
    if !(s > 0.0 && c > 0.0 && h > 0.0) {
        return invalid("s, c and h must be positive");
    }
    let a = 2.0 * zeta + 2.0;
    Ok(2.0 * (s * c).powf(-a) * lower_incomplete_gamma(a, s * c * h.sqrt()))
}

/// mu(theta_m)^-2 + mu(theta_M)^-2; vanishes exactly when the opening is pi.
pub fn nondegeneracy(theta_min: f64, theta_max: f64) -> C64 {
    (-I * theta_min).exp() + (-I * theta_max).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    WeightedUpper,
    Tail,
    Norm,
    WeightedNorm,
    ArcH1,
    ArcTraction,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertificateParams {
    pub theta_min: f64,
    pub theta_max: f64,
    pub h: f64,
    pub s: f64,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kind: BoundKind,
    pub params: CertificateParams,
    pub computed: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl BoundCertificate {
    fn new(kind: BoundKind, params: CertificateParams, computed: f64, bound: f64) -> Self {
        Self { kind, params, computed, bound, satisfied: computed <= bound * (1.0 + 1e-9) }
    }

    pub fn ratio(&self) -> f64 {
        self.computed / self.bound
    }
}

/// Integral over the annular sector r in (r0, r1) of a function of (r, theta), tensor Gauss rule
/// with sqrt grading, refined until two levels agree.
fn polar_integral<F: Fn(f64, f64) -> f64>(sector: &SectorGeometry, r0: f64, r1: f64, f: F) -> Result<f64> {
    let (x, w) = gauss_legendre(24);
    let est = |p: usize| -> f64 {
        let dt = sector.opening() / p as f64;
        let du = 1.0 / p as f64;
        let mut acc = 0.0;
        for a in 0..p {
            for (xt, wt) in x.iter().zip(&w) {
                let t = sector.theta_min + dt * (a as f64 + 0.5 * (xt + 1.0));
                for b in 0..p {
                    for (xr, wr) in x.iter().zip(&w) {
                        let u = du * (b as f64 + 0.5 * (xr + 1.0));
                        let r = r0 + (r1 - r0) * u * u;
                        let jac = 2.0 * (r1 - r0) * u * r;
                        acc += 0.25 * dt * du * wt * wr * jac * f(r, t);
                    }
                }
            }
        }
        acc
    };
    let mut p = 1;
    let mut prev = est(p);
    while p < 64 {
        p *= 2;
        let cur = est(p);
        if (cur - prev).abs() <= 1e-12 * cur.abs() + 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!("polar quadrature did not settle (last change {:.3e})", (est(p) - prev).abs())))
}

/// Radius beyond which the CGO field is below exp(-60) relative to its vertex value.
fn effective_infinity(s: f64, delta: f64, h: f64) -> f64 {
    h.max((60.0 / (s * delta)).powi(2))
}

/// The six decay certificates for the CGO solution on a sector.
pub fn bound_certificates(sector: &SectorGeometry, s: f64, alpha: f64, params: &LameParameters) -> Result<Vec<BoundCertificate>> {
    let cgo = CgoField::new(s)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid("Holder exponent must lie in (0, 1)");
    }
    let th = sector.opening();
    let d = sector.decay_rate();
    let h = sector.h;
    let cp = CertificateParams { theta_min: sector.theta_min, theta_max: sector.theta_max, h, s, alpha };
    let abs_u1 = |r: f64, t: f64| (-s * r.sqrt() * (0.5 * t).cos()).exp();
    let big = effective_infinity(s, d, h);
    let mut out = vec![];

    let upper = polar_integral(sector, 0.0, big, |r, t| abs_u1(r, t) * r.powf(alpha))?;
    let upper_bound = 2.0 * th * gamma(2.0 * alpha + 4.0) / d.powf(2.0 * alpha + 4.0) * s.powf(-2.0 * alpha - 4.0);
    out.push(BoundCertificate::new(BoundKind::WeightedUpper, cp, upper, upper_bound));

    let tail = if big > h { polar_integral(sector, h, big, abs_u1)? } else { 0.0 };
    let tail_bound = 6.0 * th / d.powi(4) * s.powi(-4) * (-d * s * h.sqrt() / 2.0).exp();
    out.push(BoundCertificate::new(BoundKind::Tail, cp, tail, tail_bound));

    let norm2 = polar_integral(sector, 0.0, h, |r, t| 2.0 * abs_u1(r, t).powi(2))?;
    out.push(BoundCertificate::new(BoundKind::Norm, cp, norm2, th * h * h));

    let wnorm2 = polar_integral(sector, 0.0, h, |r, t| 2.0 * abs_u1(r, t).powi(2) * r.powf(2.0 * alpha))?;
    let wbound = s.powf(-4.0 * (alpha + 1.0)) * 4.0 * th / (4.0 * d * d).powf(2.0 * alpha + 2.0) * gamma(4.0 * alpha + 4.0);
    out.push(BoundCertificate::new(BoundKind::WeightedNorm, cp, wnorm2, wbound));

    // H1 trace norm on the arc: values plus tangential derivative
    let tgt = QuadTarget { rel_tol: 1e-12, ..Default::default() };
    let h1 = arc_quadrature(
        sector,
        |x| {
            let v = cgo.value(x);
            let m = cgo.jacobian(x);
            let r = x[0].hypot(x[1]);
            let tau = [-x[1] / r, x[0] / r];
            let mut acc = 0.0;
            for i in 0..2 {
                acc += v[i].norm_sqr() + (m[i][0] * tau[0] + m[i][1] * tau[1]).norm_sqr();
            }
            C64::new(acc, 0.0)
        },
        tgt,
    );
    if !h1.converged {
        return Err(Error::NotConverged("arc quadrature for the H1 certificate".into()));
    }
    let arc_bound = (h + s * s / 2.0).sqrt() * th.sqrt() * (-s * h.sqrt() * d).exp();
    out.push(BoundCertificate::new(BoundKind::ArcH1, cp, h1.value.re.sqrt(), arc_bound));

    let tr = arc_quadrature(
        sector,
        |x| {
            let r = x[0].hypot(x[1]);
            let t = cgo.traction(x, [x[0] / r, x[1] / r], params).expect("arc avoids the vertex");
            C64::new(t[0].norm_sqr() + t[1].norm_sqr(), 0.0)
        },
        tgt,
    );
    if !tr.converged {
        return Err(Error::NotConverged("arc quadrature for the traction certificate".into()));
    }
    let tr_bound = s * params.mu / 2f64.sqrt() * th.sqrt() * (-s * h.sqrt() * d).exp();
    out.push(BoundCertificate::new(BoundKind::ArcTraction, cp, tr.value.re.sqrt(), tr_bound));
    Ok(out)
}

/// Integral of u_1 over the truncated sector by quadrature.
pub fn sector_integral_quadrature(sector: &SectorGeometry, s: f64) -> Result<C64> {
    let cgo = CgoField::new(s)?;
    let abs_scale = 12.0 * sector.opening() / (sector.decay_rate() * s).powi(4);
    let r = sector_quadrature(sector, |x| cgo.value(x)[0], QuadTarget { abs_tol: 1e-14 * abs_scale, rel_tol: 1e-13, max_panels: 128 });
    if !r.converged {
        return Err(Error::NotConverged(format!("sector quadrature error estimate {:.3e}", r.error)));
    }
    Ok(r.value)
}

/// Right side of the tail certificate for the region outside radius h.
pub fn tail_bound(sector: &SectorGeometry, s: f64) -> f64 {
    let d = sector.decay_rate();
    6.0 * sector.opening() / d.powi(4) * s.powi(-4) * (-d * s * sector.h.sqrt() / 2.0).exp()
}
