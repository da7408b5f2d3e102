//! Green's identity for the Lame operator, the corner integral identity against the CGO solution,
//! and the dimension reduction operator with its reduced systems and cutoff constants.

use crate::cgo::CgoField;
use crate::elastic_fields::{navier_apply, traction, BoundaryParam, LameParameters, Vector, VectorField};
use crate::error::{invalid, Error, Result};
use crate::geometry::{arc_nodes, edge_nodes, polygon_boundary_nodes, polygon_nodes, Point, PolygonDomain, SectorGeometry};
use crate::quadrature::gauss_panels;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

fn norm_sqr<const D: usize>(a: &Vector<D>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Integration region for Green's identity.
#[derive(Clone, Copy, Debug)]
pub enum IdentityDomain<'a> {
    Sector(&'a SectorGeometry),
    Polygon(&'a PolygonDomain),
}

/// (point, weight) volume rule and (point, weight, outward normal) boundary rule.
type Rules = (Vec<(Point, f64)>, Vec<(Point, f64, Point)>);

fn sector_boundary(sector: &SectorGeometry, n: usize, panels: usize) -> Vec<(Point, f64, Point)> {
    let mut out = vec![];
    let nm = sector.normal_minus();
    out.extend(edge_nodes(sector.theta_min, sector.h, n, panels).into_iter().map(|(x, w)| (x, w, nm)));
    let np = sector.normal_plus();
    out.extend(edge_nodes(sector.theta_max, sector.h, n, panels).into_iter().map(|(x, w)| (x, w, np)));
    out.extend(arc_nodes(sector, n, panels).into_iter().map(|(x, w)| (x, w, [x[0] / sector.h, x[1] / sector.h])));
    out
}

fn rules(domain: IdentityDomain, level: usize) -> Result<Rules> {
    Ok(match domain {
        IdentityDomain::Sector(s) => (s.nodes(20, level, level), sector_boundary(s, 24, level)),
        IdentityDomain::Polygon(p) => (polygon_nodes(p, 12 * level)?, polygon_boundary_nodes(p, 16 * level)),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GreenReport {
    pub volume: C64,
    pub boundary: C64,
    pub residual: f64,
    /// Sum of the moduli of the four constituent integrals.
    pub scale: f64,
    /// Change in the residual between the two finest quadrature levels.
    pub quadrature_change: f64,
}

fn green_terms(u1: &dyn VectorField<2>, v1: &dyn VectorField<2>, params: &LameParameters, r: &Rules) -> [C64; 4] {
    let mut t = [ZERO; 4];
    for (x, w) in &r.0 {
        let (a, b) = (u1.value(*x), v1.value(*x));
        t[0] += dot(&navier_apply(u1, params, *x), &b) * *w;
        t[1] += dot(&navier_apply(v1, params, *x), &a) * *w;
    }
    for (x, w, nu) in &r.1 {
        let (a, b) = (u1.value(*x), v1.value(*x));
        t[2] += dot(&traction(u1, *nu, *x, params), &b) * *w;
        t[3] += dot(&traction(v1, *nu, *x, params), &a) * *w;
    }
    t
}

/// |int (L u1 . v1 - L v1 . u1) - int_boundary (T u1 . v1 - T v1 . u1)| with bilinear dot products.
pub fn green_residual(u1: &dyn VectorField<2>, v1: &dyn VectorField<2>, domain: IdentityDomain, params: &LameParameters) -> Result<GreenReport> {
    let eval = |level| -> Result<GreenReport> {
        let t = green_terms(u1, v1, params, &rules(domain, level)?);
        let volume = t[0] - t[1];
        let boundary = t[2] - t[3];
        Ok(GreenReport {
            volume,
            boundary,
            residual: (volume - boundary).norm(),
            scale: t.iter().map(|z| z.norm()).sum(),
            quadrature_change: 0.0,
        })
    };
    let coarse = eval(2)?;
    let mut fine = eval(4)?;
    fine.quadrature_change = (fine.volume - fine.boundary - coarse.volume + coarse.boundary).norm();
    if fine.quadrature_change > 1e-6 * fine.scale.max(1e-300) {
        return Err(Error::NotConverged(format!(
            "Green identity quadrature unsettled: change {:.3e} at scale {:.3e}",
            fine.quadrature_change, fine.scale
        )));
    }
    Ok(fine)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityMode {
    BoundaryExplicit,
    TransmissionConditioned,
}

/// Fields entering the corner identity on a sector S_h.
pub struct CornerInputs<'a> {
    /// Solves L v + omega^2 v = 0.
    pub v: &'a dyn VectorField<2>,
    /// Solves L w + omega^2 q w = 0.
    pub w: &'a dyn VectorField<2>,
    /// Herglotz surrogate of v.
    pub vj: &'a dyn VectorField<2>,
    pub q: &'a (dyn Fn(Point) -> f64 + Sync),
    pub eta: BoundaryParam,
    pub s: f64,
    pub sector: SectorGeometry,
    pub params: LameParameters,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CornerOptions {
    pub mode: IdentityMode,
    /// Relative interior PDE residual above which the inputs are rejected.
    pub pde_threshold: f64,
    /// Relative boundary-condition residual above which the transmission mode is downgraded.
    pub boundary_threshold: f64,
    /// Radial and angular panel count of the quadrature.
    pub panels: usize,
}

impl Default for CornerOptions {
    fn default() -> Self {
        Self { mode: IdentityMode::BoundaryExplicit, pde_threshold: 1e-6, boundary_threshold: 1e-3, panels: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CornerIdentityReport {
    pub i1: C64,
    pub i2: C64,
    pub i_lambda_h: C64,
    /// Edge integral of T(v - w) . u - T u . (v - w) in boundary-explicit mode, -(I_pm + I_pm_delta) otherwise.
    pub gamma_term: C64,
    pub i_pm: C64,
    pub i_pm_delta: C64,
    pub residual: f64,
    pub mode: IdentityMode,
    pub requested_mode: IdentityMode,
    pub term_scale: f64,
    pub boundary_explicit_residual: f64,
    pub transmission_residual: f64,
    /// ||v - w|| ||T u|| + ||T(v - w) + eta v|| ||u|| in L2 of the two edges.
    pub boundary_certificate: f64,
    pub dirichlet_residual: f64,
    pub traction_residual: f64,
    pub pde_residual_v: f64,
    pub pde_residual_w: f64,
    pub warnings: Vec<String>,
}

fn pde_residual(f: &dyn VectorField<2>, coef: &dyn Fn(Point) -> f64, params: &LameParameters, pts: &[(Point, f64)]) -> f64 {
    let w2 = params.omega * params.omega;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (x, _) in pts {
        let l = navier_apply(f, params, *x);
        let v = f.value(*x);
        let c = coef(*x) * w2;
        num = num.max(norm_sqr(&std::array::from_fn::<C64, 2, _>(|i| l[i] + v[i] * c)).sqrt());
        den = den.max(norm_sqr(&v).sqrt() * c.abs());
    }
    num / den.max(1e-300)
}

/// All terms of the corner identity by quadrature, with the residual of the requested form.
pub fn corner_identity(inp: &CornerInputs, opts: &CornerOptions) -> Result<CornerIdentityReport> {
    let p = &inp.params;
    let sec = &inp.sector;
    let cgo = CgoField::new(inp.s)?;
    if opts.panels == 0 {
        return invalid("panel count must be positive");
    }
    let mut warnings = vec![];
    let probe = sec.nodes(4, 2, 2);
    let one = |_: Point| 1.0;
    let pde_v = pde_residual(inp.v, &one, p, &probe);
    let pde_w = pde_residual(inp.w, inp.q, p, &probe);
    if pde_v > opts.pde_threshold || pde_w > opts.pde_threshold {
        return invalid(format!(
            "interior PDE residuals {pde_v:.3e} (v), {pde_w:.3e} (w) exceed threshold {:.1e}",
            opts.pde_threshold
        ));
    }
    let w2 = p.omega * p.omega;
    let (mut i1, mut i2) = (ZERO, ZERO);
    for (x, wt) in sec.nodes(20, opts.panels, opts.panels) {
        let u = cgo.value(x);
        let q = (inp.q)(x);
        let (v, w, vj) = (inp.v.value(x), inp.w.value(x), inp.vj.value(x));
        let a: Vector<2> = std::array::from_fn(|i| w[i] * q - vj[i]);
        i1 += dot(&a, &u) * (w2 * wt);
        i2 -= dot(&sub(&v, &vj), &u) * (w2 * wt);
    }
    let mut i_lambda = ZERO;
    for (x, wt) in arc_nodes(sec, 24, opts.panels) {
        let nu = [x[0] / sec.h, x[1] / sec.h];
        let u = cgo.value(x);
        let d = sub(&inp.v.value(x), &inp.w.value(x));
        let td = sub(&traction(inp.v, nu, x, p), &traction(inp.w, nu, x, p));
        i_lambda += (dot(&td, &u) - dot(&cgo.full_traction(x, nu, p)?, &d)) * wt;
    }
    let (mut gamma, mut i_pm, mut i_pm_delta) = (ZERO, ZERO, ZERO);
    let (mut d2, mut tr2, mut tu2, mut u2, mut v2, mut tv2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (theta, nu) in [(sec.theta_min, sec.normal_minus()), (sec.theta_max, sec.normal_plus())] {
        for (x, wt) in edge_nodes(theta, sec.h, 24, 2 * opts.panels) {
            let u = cgo.value(x);
            let tu = cgo.full_traction(x, nu, p)?;
            let (v, w, vj) = (inp.v.value(x), inp.w.value(x), inp.vj.value(x));
            let tv = traction(inp.v, nu, x, p);
            let d = sub(&v, &w);
            let td = sub(&tv, &traction(inp.w, nu, x, p));
            let eta = inp.eta.eval(x);
            gamma += (dot(&td, &u) - dot(&tu, &d)) * wt;
            i_pm += dot(&u, &vj) * (eta * wt);
            i_pm_delta += dot(&u, &sub(&v, &vj)) * (eta * wt);
            let jump: Vector<2> = std::array::from_fn(|i| td[i] + v[i] * eta);
            d2 += norm_sqr(&d) * wt;
            tr2 += norm_sqr(&jump) * wt;
            tu2 += norm_sqr(&tu) * wt;
            u2 += norm_sqr(&u) * wt;
            v2 += norm_sqr(&v) * wt;
            tv2 += norm_sqr(&tv) * wt;
        }
    }
    let certificate = d2.sqrt() * tu2.sqrt() + tr2.sqrt() * u2.sqrt();
    let dirichlet_residual = (d2 / v2.max(1e-300)).sqrt();
    let traction_residual = (tr2 / tv2.max(1e-300)).sqrt();
    let explicit = (i1 + i2 - i_lambda - gamma).norm();
    let conditioned = (i1 + i2 - i_lambda + i_pm + i_pm_delta).norm();
    let mut mode = opts.mode;
    if mode == IdentityMode::TransmissionConditioned && (dirichlet_residual > opts.boundary_threshold || traction_residual > opts.boundary_threshold) {
        warnings.push(format!(
            "boundary-condition residuals {dirichlet_residual:.3e} (Dirichlet), {traction_residual:.3e} (traction) exceed {:.1e}; reporting boundary-explicit form",
            opts.boundary_threshold
        ));
        mode = IdentityMode::BoundaryExplicit;
    }
    let (gamma_term, residual) = match mode {
        IdentityMode::BoundaryExplicit => (gamma, explicit),
        IdentityMode::TransmissionConditioned => (-(i_pm + i_pm_delta), conditioned),
    };
    Ok(CornerIdentityReport {
        i1,
        i2,
        i_lambda_h: i_lambda,
        gamma_term,
        i_pm,
        i_pm_delta,
        residual,
        mode,
        requested_mode: opts.mode,
        term_scale: i1.norm() + i2.norm() + i_lambda.norm() + gamma.norm(),
        boundary_explicit_residual: explicit,
        transmission_residual: conditioned,
        boundary_certificate: certificate,
        dirichlet_residual,
        traction_residual,
        pde_residual_v: pde_v,
        pde_residual_w: pde_w,
        warnings,
    })
}

/// Smooth bump exp(-1/(1 - tau^2)), tau = (t - center)/half_width, used to average out the edge direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub center: f64,
    pub half_width: f64,
    /// Half-height M of the ambient edge (-M, M).
    pub ambient_half_height: f64,
}

impl CutoffFunction {
    pub fn new(center: f64, half_width: f64, ambient_half_height: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return invalid("cutoff half-width must be positive");
        }
        if !(center - half_width >= -ambient_half_height && center + half_width <= ambient_half_height) {
            return invalid("cutoff support must lie inside the ambient edge");
        }
        Ok(Self { center, half_width, ambient_half_height })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    fn tau(&self, t: f64) -> Option<f64> {
        let tau = (t - self.center) / self.half_width;
        (tau.abs() < 1.0).then_some(tau)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.tau(t).map_or(0.0, |tau| (-1.0 / (1.0 - tau * tau)).exp())
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.tau(t).map_or(0.0, |tau| {
            let a = 1.0 - tau * tau;
            self.value(t) * (-2.0 * tau / (a * a)) / self.half_width
        })
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.tau(t).map_or(0.0, |tau| {
            let a = 1.0 - tau * tau;
            let g1 = -2.0 * tau / (a * a);
            let g2 = -2.0 / (a * a) - 8.0 * tau * tau / (a * a * a);
            self.value(t) * (g1 * g1 + g2) / (self.half_width * self.half_width)
        })
    }

    /// Gauss nodes covering the support.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let (a, b) = self.support();
        gauss_panels(a, b, 24, 16)
    }

    /// Integral of the bump.
    pub fn c_phi(&self) -> f64 {
        self.nodes().iter().map(|(t, w)| self.value(*t) * w).sum()
    }
}

/// R(g)(x') = integral of phi(x3) g(x', x3) dx3.
pub fn dimension_reduce<const N: usize, G>(g: G, cutoff: CutoffFunction) -> impl Fn(Point) -> [C64; N]
where
    G: Fn(Point, f64) -> [C64; N],
{
    let nodes = cutoff.nodes();
    move |xp| {
        let mut acc = [ZERO; N];
        for (t, w) in &nodes {
            let f = g(xp, *t);
            let c = cutoff.value(*t) * w;
            for i in 0..N {
                acc[i] += f[i] * c;
            }
        }
        acc
    }
}

/// |R(d3 g) + integral of phi' g| for a scalar profile in x3.
pub fn integration_by_parts_defect(g: impl Fn(f64) -> C64, dg: impl Fn(f64) -> C64, cutoff: &CutoffFunction) -> f64 {
    cutoff.nodes().iter().map(|(t, w)| (dg(*t) * cutoff.value(*t) + g(*t) * cutoff.derivative(*t)) * *w).sum::<C64>().norm()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReducedResidual {
    /// Residual of the in-plane 2x2 Lame block.
    pub in_plane: f64,
    /// Residual of the scalar out-of-plane block.
    pub out_of_plane: f64,
    pub residual: f64,
    pub scale: f64,
}

/// Residual of the reduced block system tilde-L R(v) = G1 at x' for a 3D solution v.
pub fn reduced_system_residual(v3d: &dyn VectorField<3>, cutoff: &CutoffFunction, params: &LameParameters, xp: Point) -> ReducedResidual {
    let c = params.laplacian_coefficient();
    let lm = params.lambda + params.mu;
    let w2 = params.omega * params.omega;
    let mut rv = [ZERO; 3];
    let mut rh = [[[ZERO; 2]; 2]; 3];
    let mut phi2 = [ZERO; 3];
    let mut phi1_grad3 = [ZERO; 2];
    let mut phi1_div = ZERO;
    for (t, w) in cutoff.nodes() {
        let x = [xp[0], xp[1], t];
        let (f0, f1, f2) = (cutoff.value(t) * w, cutoff.derivative(t) * w, cutoff.second_derivative(t) * w);
        let v = v3d.value(x);
        let m = v3d.jacobian(x);
        let h = v3d.hessian(x);
        for i in 0..3 {
            rv[i] += v[i] * f0;
            phi2[i] += v[i] * f2;
            for j in 0..2 {
                for k in 0..2 {
                    rh[i][j][k] += h[i][j][k] * f0;
                }
            }
        }
        for a in 0..2 {
            phi1_grad3[a] += m[2][a] * f1;
        }
        phi1_div += (m[0][0] + m[1][1]) * f1;
    }
    let mut lhs = [ZERO; 3];
    let mut rhs = [ZERO; 3];
    for a in 0..2 {
        lhs[a] = (rh[a][0][0] + rh[a][1][1]) * c + (rh[0][0][a] + rh[1][1][a]) * lm;
        rhs[a] = -rv[a] * w2 - phi2[a] * c + phi1_grad3[a] * lm;
    }
    lhs[2] = (rh[2][0][0] + rh[2][1][1]) * c;
    rhs[2] = -rv[2] * w2 - phi2[2] * (c + lm) + phi1_div * lm;
    let in_plane = ((lhs[0] - rhs[0]).norm_sqr() + (lhs[1] - rhs[1]).norm_sqr()).sqrt();
    let out_of_plane = (lhs[2] - rhs[2]).norm();
    let scale = norm_sqr(&rv).sqrt() * w2 + norm_sqr(&phi2).sqrt() * (c + lm) + (norm_sqr(&phi1_grad3) + phi1_div.norm_sqr()).sqrt() * lm;
    ReducedResidual { in_plane, out_of_plane, residual: in_plane.hypot(out_of_plane), scale }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CutoffConstants {
    pub c_phi: f64,
    pub c1_phi: f64,
    /// integral of phi(x3) sqrt(|x'|^2 + x3^2) dx3
    pub substitution_lhs: f64,
    /// |x'|^2 C1
    pub substitution_rhs: f64,
    pub substitution_defect: f64,
    pub identity_violation: bool,
    /// Largest angle arctan(|x3|/|x'|) over the support.
    pub max_angle: f64,
    /// sec^3(max_angle) C, the bound as stated.
    pub stated_bound: f64,
    pub stated_bound_holds: bool,
    /// sec^3(max_angle) C / |x'|, the bound with the substitution Jacobian kept.
    pub corrected_bound: f64,
    pub corrected_bound_holds: bool,
}

/// C = int phi and C1 = int phi(|x'| tan w) sec^3 w dw, with the substitution identity and the sec^3 bounds.
pub fn cutoff_constants(cutoff: &CutoffFunction, x_prime_norm: f64) -> Result<CutoffConstants> {
    if !(x_prime_norm > 0.0) {
        return invalid("|x'| must be positive");
    }
    let r = x_prime_norm;
    let c_phi = cutoff.c_phi();
    let (a, b) = cutoff.support();
    let lhs: f64 = cutoff.nodes().iter().map(|(t, w)| cutoff.value(*t) * (r * r + t * t).sqrt() * w).sum();
    // angle panels break at the images of a uniform x3 grid
    let pieces = 64;
    let brk = |k: usize| ((a + (b - a) * k as f64 / pieces as f64) / r).atan();
    let c1: f64 = (0..pieces)
        .flat_map(|k| gauss_panels(brk(k), brk(k + 1), 24, 1))
        .map(|(om, w)| cutoff.value(r * om.tan()) * om.cos().powi(-3) * w)
        .sum();
    let rhs = r * r * c1;
    let defect = (lhs - rhs).abs() / lhs.abs();
    let max_angle = (a.abs().max(b.abs()) / r).atan();
    let sec3 = max_angle.cos().powi(-3);
    let stated = sec3 * c_phi;
    let corrected = sec3 * c_phi / r;
    Ok(CutoffConstants {
        c_phi,
        c1_phi: c1,
        substitution_lhs: lhs,
        substitution_rhs: rhs,
        substitution_defect: defect,
        identity_violation: defect > 1e-10,
        max_angle,
        stated_bound: stated,
        stated_bound_holds: c1 > 0.0 && c1 < stated,
        corrected_bound: corrected,
        corrected_bound_holds: c1 > 0.0 && c1 < corrected,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MeanValueWitness {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub in_range: bool,
    /// Nonnegative a with (|x'|^2 + a^2)^(l - 1/2) = ratio, when in range.
    pub witness: Option<f64>,
}

/// ratio = int phi (|x'|^2 + x3^2)^l / int phi (|x'|^2 + x3^2)^(1/2), checked against the
/// range of (|x'|^2 + a^2)^(l - 1/2) over the support.
pub fn mean_value_witness(cutoff: &CutoffFunction, x_prime_norm: f64, l: u32) -> Result<MeanValueWitness> {
    if !(x_prime_norm > 0.0) {
        return invalid("|x'| must be positive");
    }
    if l == 0 {
        return invalid("l must be a positive integer");
    }
    let r2 = x_prime_norm * x_prime_norm;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, w) in cutoff.nodes() {
        let g = r2 + t * t;
        let f = cutoff.value(t) * w;
        num += f * g.powi(l as i32);
        den += f * g.sqrt();
    }
    let ratio = num / den;
    let (a, b) = cutoff.support();
    let tmin2 = if a <= 0.0 && b >= 0.0 { 0.0 } else { (a * a).min(b * b) };
    let tmax2 = (a * a).max(b * b);
    let e = l as f64 - 0.5;
    let lower = (r2 + tmin2).powf(e);
    let upper = (r2 + tmax2).powf(e);
    let slack = 1e-12 * upper;
    let in_range = ratio >= lower - slack && ratio <= upper + slack;
    let witness = in_range.then(|| (ratio.powf(1.0 / e) - r2).max(0.0).sqrt());
    Ok(MeanValueWitness { ratio, lower, upper, in_range, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic_fields::{HerglotzKernel2D, PlaneWave};

    fn params() -> LameParameters {
        LameParameters::new(1.5, 1.0, 2.0, 2).unwrap()
    }

    #[test]
    fn green_identity_plane_waves() {
        let p = params();
        let sec = SectorGeometry::new(-0.7, 0.8, 1.2).unwrap();
        let a = PlaneWave::p_wave(0.3, &p);
        let b = PlaneWave::s_wave(2.2, &p);
        let rep = green_residual(&a, &b, IdentityDomain::Sector(&sec), &p).unwrap();
        assert!(rep.residual < 1e-8 * rep.scale, "{rep:?}");
        let same = green_residual(&a, &a, IdentityDomain::Sector(&sec), &p).unwrap();
        assert!(same.residual < 1e-14 * same.scale.max(1.0));
        let poly = PolygonDomain::new(vec![[0.0, 0.0], [1.0, 0.2], [0.6, 1.1], [-0.2, 0.7]]).unwrap();
        let rep = green_residual(&a, &b, IdentityDomain::Polygon(&poly), &p).unwrap();
        assert!(rep.residual < 1e-8 * rep.scale, "{rep:?}");
    }

    #[test]
    fn green_identity_cgo_against_herglotz() {
        let p = params();
        let sec = SectorGeometry::new(-0.6, 0.9, 1.0).unwrap();
        let g: Vec<C64> = (0..16).map(|m| C64::new((m as f64 * 0.3).cos(), 0.1 * m as f64)).collect();
        let ker = HerglotzKernel2D::new(g.clone(), g.iter().map(|z| z * 0.5).collect()).unwrap();
        let field = ker.field(&p);
        let cgo = CgoField::new(3.0).unwrap();
        let rep = green_residual(&cgo, &field, IdentityDomain::Sector(&sec), &p).unwrap();
        assert!(rep.residual < 1e-7 * rep.scale, "{rep:?}");
    }

    #[test]
    fn corner_identity_identical_fields() {
        let p = params();
        let v = PlaneWave::p_wave(0.4, &p);
        let one = |_: Point| 1.0;
        let inp = CornerInputs { v: &v, w: &v, vj: &v, q: &one, eta: BoundaryParam::constant(0.0), s: 4.0, sector: SectorGeometry::new(-0.5, 0.7, 1.0).unwrap(), params: p };
        for mode in [IdentityMode::BoundaryExplicit, IdentityMode::TransmissionConditioned] {
            let rep = corner_identity(&inp, &CornerOptions { mode, ..Default::default() }).unwrap();
            assert_eq!(rep.mode, mode);
            assert!((rep.i1 + rep.i2).norm() < 1e-12 && rep.i_lambda_h.norm() < 1e-12 && rep.residual < 1e-10);
        }
    }

    #[test]
    fn corner_identity_independent_plane_waves() {
        let p = params();
        let q: f64 = 2.5;
        let v = PlaneWave::s_wave(1.1, &p);
        let mut w = PlaneWave::p_wave(-0.4, &p);
        w.k *= q.sqrt();
        let vj = PlaneWave::p_wave(2.0, &p);
        let qf = move |_: Point| q;
        let inp = CornerInputs { v: &v, w: &w, vj: &vj, q: &qf, eta: BoundaryParam::constant(0.7), s: 5.0, sector: SectorGeometry::new(-0.9, 0.4, 1.3).unwrap(), params: p };
        let rep = corner_identity(&inp, &CornerOptions { mode: IdentityMode::TransmissionConditioned, ..Default::default() }).unwrap();
        assert_eq!(rep.mode, IdentityMode::BoundaryExplicit);
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.residual < 1e-7 * rep.term_scale, "{rep:?}");
        assert!(rep.transmission_residual <= rep.boundary_certificate * (1.0 + 1e-8) + 1e-7 * rep.term_scale);
        let bad = PlaneWave { k: 1.7, ..v };
        let inp = CornerInputs { v: &bad, ..inp };
        assert!(corner_identity(&inp, &CornerOptions::default()).is_err());
    }

    #[test]
    fn bump_derivatives_and_reduction() {
        let cut = CutoffFunction::new(0.1, 0.3, 1.0).unwrap();
        for &t in &[-0.1, 0.05, 0.2, 0.35] {
            let h = 1e-5;
            let d = (cut.value(t + h) - cut.value(t - h)) / (2.0 * h);
            let d2 = (cut.derivative(t + h) - cut.derivative(t - h)) / (2.0 * h);
            assert!((d - cut.derivative(t)).abs() < 1e-7);
            assert!((d2 - cut.second_derivative(t)).abs() < 1e-5);
        }
        let c = cut.c_phi();
        assert!(c > 0.0);
        let r = dimension_reduce(|x: Point, _t| [C64::new(x[0], x[1])], cut);
        assert!((r([0.3, 0.4])[0] - C64::new(0.3 * c, 0.4 * c)).norm() < 1e-14);
        let odd = dimension_reduce(|x: Point, t| [C64::new((t - 0.1) * x[0], 0.0)], cut);
        assert!(odd([2.0, 0.0])[0].norm() < 1e-15);
        let ibp = integration_by_parts_defect(|t| C64::new((3.0 * t).sin(), t * t), |t| C64::new(3.0 * (3.0 * t).cos(), 2.0 * t), &cut);
        assert!(ibp < 1e-10);
        assert!(CutoffFunction::new(0.9, 0.3, 1.0).is_err());
    }

    #[test]
    fn reduced_system_for_plane_waves() {
        let p = LameParameters::new(1.2, 0.8, 2.5, 3).unwrap();
        let cut = CutoffFunction::new(0.0, 0.25, 1.0).unwrap();
        let dir = [0.48, -0.6, 0.64];
        let kp = p.kp();
        let ks = p.ks();
        let pw = PlaneWave::<3> { pol: dir.map(|d| C64::new(d, 0.0)), dir, k: kp };
        let sw = PlaneWave::<3> { pol: [C64::new(0.8, 0.0), C64::new(0.64, 0.0), C64::new(0.0, 0.0)], dir, k: ks };
        for f in [&pw as &dyn VectorField<3>, &sw] {
            for xp in [[0.1, 0.2], [-0.4, 0.3], [0.7, -0.5]] {
                let r = reduced_system_residual(f, &cut, &p, xp);
                assert!(r.residual < 1e-6 * r.scale, "{r:?}");
            }
        }
        let flat = PlaneWave::<3> { pol: [C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(0.0, 0.0)], dir: [0.6, 0.8, 0.0], k: kp };
        let r = reduced_system_residual(&flat, &cut, &p, [0.2, 0.1]);
        assert!(r.residual < 1e-8 * r.scale);
    }

    #[test]
    fn cutoff_constant_substitution() {
        for &l in &[0.1, 0.25, 0.5] {
            let cut = CutoffFunction::new(0.0, l, 1.0).unwrap();
            for &r in &[0.01, 0.5, 1.0, 10.0] {
                let k = cutoff_constants(&cut, r).unwrap();
                assert!(!k.identity_violation, "L={l} r={r} defect {}", k.substitution_defect);
                assert!(k.corrected_bound_holds);
            }
        }
    }

    #[test]
    fn mean_value_witness_in_range() {
        let cut = CutoffFunction::new(0.0, 0.25, 1.0).unwrap();
        for l in 1..=5 {
            for &r in &[0.05, 0.3, 2.0] {
                let m = mean_value_witness(&cut, r, l).unwrap();
                assert!(m.in_range && m.witness.unwrap() < 0.25, "{m:?}");
            }
        }
        let narrow = CutoffFunction::new(0.0, 1e-3, 1.0).unwrap();
        let m = mean_value_witness(&narrow, 0.3, 3).unwrap();
        assert!(m.in_range && (m.ratio / 0.09f64.powf(2.5) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn stated_sec_cubed_bound_fails_at_moderate_distance() {
        let cut = CutoffFunction::new(0.0, 0.25, 1.0).unwrap();
        let k = cutoff_constants(&cut, 0.5).unwrap();
        assert!(!k.stated_bound_holds && k.c1_phi > 1.4 * k.stated_bound);
        assert!(k.corrected_bound_holds);
        for &r in &[0.1, 1.0, 5.0] {
            assert!(cutoff_constants(&cut, r).unwrap().stated_bound_holds);
        }
    }
}
