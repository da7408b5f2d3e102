//! Forward elastic scattering by a penetrable medium: volume integral solve, far field, radiation checks.

mod experiments;
pub mod green;
mod solver;

pub use experiments::{
    corner_scattering_experiment, rigid_motion_check, uniqueness_experiment, CornerScatteringReport, EquivarianceReport, IncidenceRow,
    SeparationReport,
};
pub use green::{green_parts, green_tensor_2d, p_part_transversality, Tensor};
pub use solver::{gmres, GridCell, IterationReport, LsOptions, LsSystem};

use crate::elastic_fields::{helmholtz_split, GridField, HerglotzKernel2D, LameParameters, PlaneWave, Vector, VectorField};
use crate::error::{invalid, Result};
use crate::geometry::{Point, PolygonDomain};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Support {
    Polygon { polygon: PolygonDomain },
    Disk { center: Point, radius: f64 },
}

/// Contrast V on the support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Contrast {
    Constant { value: f64 },
    /// amplitude exp(-|x - center|^2 / width^2)
    Gaussian { amplitude: f64, center: Point, width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumConfig {
    pub support: Support,
    pub contrast: Contrast,
}

/// Vertex count of the polygon standing in for a disk support (divisible by 4).
const DISK_SIDES: usize = 720;

impl MediumConfig {
    pub fn new(support: Support, contrast: Contrast) -> Result<Self> {
        if let Support::Disk { radius, .. } = support {
            if !(radius > 0.0) {
                return invalid("disk radius must be positive");
            }
        }
        match contrast {
            Contrast::Constant { value } if !value.is_finite() => return invalid("contrast must be bounded"),
            Contrast::Gaussian { amplitude, width, .. } if !(amplitude.is_finite() && width > 0.0) => {
                return invalid("gaussian contrast needs finite amplitude and positive width")
            }
            _ => {}
        }
        Ok(Self { support, contrast })
    }

    pub fn polygon(polygon: PolygonDomain, v0: f64) -> Result<Self> {
        Self::new(Support::Polygon { polygon }, Contrast::Constant { value: v0 })
    }

    pub fn disk(center: Point, radius: f64, v0: f64) -> Result<Self> {
        Self::new(Support::Disk { center, radius }, Contrast::Constant { value: v0 })
    }

    pub fn contrast_at(&self, x: Point) -> f64 {
        match self.contrast {
            Contrast::Constant { value } => value,
            Contrast::Gaussian { amplitude, center, width } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                amplitude * (-r2 / (width * width)).exp()
            }
        }
    }

    /// q = 1 + V.
    pub fn q_at(&self, x: Point) -> f64 {
        1.0 + self.contrast_at(x)
    }

    pub fn is_trivial(&self) -> bool {
        match self.contrast {
            Contrast::Constant { value } => value == 0.0,
            Contrast::Gaussian { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// Support as a polygon (disks become a regular polygon with a vertex on the +x axis).
    pub fn outline(&self) -> Result<PolygonDomain> {
        match &self.support {
            Support::Polygon { polygon } => Ok(polygon.clone()),
            Support::Disk { center, radius } => PolygonDomain::regular(DISK_SIDES, *radius, *center),
        }
    }

    /// Rotation about the origin followed by a shift.
    pub fn transformed(&self, angle: f64, shift: Point) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        let mv = |p: Point| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]];
        let support = match &self.support {
            Support::Polygon { polygon } => Support::Polygon { polygon: polygon.transformed(angle, shift) },
            Support::Disk { center, radius } => Support::Disk { center: mv(*center), radius: *radius },
        };
        let contrast = match self.contrast {
            Contrast::Gaussian { amplitude, center, width } => Contrast::Gaussian { amplitude, center: mv(center), width },
            k => k,
        };
        Self { support, contrast }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Incident {
    PlaneP { angle: f64 },
    PlaneS { angle: f64 },
    Herglotz { kernel: HerglotzKernel2D },
}

impl Incident {
    pub fn field<'a>(&'a self, params: &'a LameParameters) -> Box<dyn VectorField<2> + 'a> {
        match self {
            Incident::PlaneP { angle } => Box::new(PlaneWave::p_wave(*angle, params)),
            Incident::PlaneS { angle } => Box::new(PlaneWave::s_wave(*angle, params)),
            Incident::Herglotz { kernel } => Box::new(kernel.field(params)),
        }
    }

    pub fn rotated(&self, angle: f64) -> Result<Self> {
        match self {
            Incident::PlaneP { angle: a } => Ok(Incident::PlaneP { angle: a + angle }),
            Incident::PlaneS { angle: a } => Ok(Incident::PlaneS { angle: a + angle }),
            Incident::Herglotz { kernel } => {
                // exact only for rotations by whole node spacings
                let n = kernel.len();
                let steps = angle / (2.0 * PI / n as f64);
                if (steps - steps.round()).abs() > 1e-9 {
                    return invalid("Herglotz incidence rotates only by multiples of the node spacing");
                }
                let k = (steps.round() as i64).rem_euclid(n as i64) as usize;
                let rot = |v: &[C64]| (0..n).map(|m| v[(m + n - k) % n]).collect::<Vec<_>>();
                Ok(Incident::Herglotz { kernel: HerglotzKernel2D::new(rot(&kernel.g_p), rot(&kernel.g_s))? })
            }
        }
    }
}

/// Discrete total field at the cell centres of the medium.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LSSolution {
    pub params: LameParameters,
    pub h: f64,
    pub cells: Vec<GridCell>,
    pub incident_field: Vec<Vector<2>>,
    pub total_field: Vec<Vector<2>>,
    pub iteration_report: IterationReport,
}

fn to_flat(v: &[Vector<2>]) -> Vec<C64> {
    v.iter().flat_map(|z| [z[0], z[1]]).collect()
}

fn to_pairs(v: &[C64]) -> Vec<Vector<2>> {
    v.chunks(2).map(|c| [c[0], c[1]]).collect()
}

pub fn ls_solve(medium: &MediumConfig, incident: &Incident, params: &LameParameters, opts: &LsOptions) -> Result<LSSolution> {
    let sys = LsSystem::build(medium, params, opts)?;
    ls_solve_system(&sys, incident, opts)
}

pub fn ls_solve_system(sys: &LsSystem, incident: &Incident, opts: &LsOptions) -> Result<LSSolution> {
    let field = incident.field(&sys.params);
    let inc: Vec<Vector<2>> = sys.cells.iter().map(|c| field.value(c.center)).collect();
    let (u, mut report) = sys.solve(&to_flat(&inc), opts)?;
    let lam_min = 2.0 * PI / sys.params.kp().max(sys.params.ks());
    if sys.h > lam_min / 8.0 {
        report.warnings.push(format!("under-resolved: h = {} exceeds 1/8 of the shortest wavelength {lam_min}", sys.h));
    }
    Ok(LSSolution { params: sys.params, h: sys.h, cells: sys.cells.clone(), incident_field: inc, total_field: to_pairs(&u), iteration_report: report })
}

/// u_i + K u_i on the cells (first Born approximation).
pub fn born_field(sys: &LsSystem, incident: &Incident) -> Vec<Vector<2>> {
    let field = incident.field(&sys.params);
    let inc = to_flat(&sys.cells.iter().map(|c| field.value(c.center)).collect::<Vec<_>>());
    let k = sys.apply_k(&inc);
    to_pairs(&inc.iter().zip(k).map(|(a, b)| a + b).collect::<Vec<_>>())
}

impl LSSolution {
    fn densities(&self) -> impl Iterator<Item = (Point, Vector<2>)> + '_ {
        let w = self.params.omega.powi(2) * self.h * self.h;
        self.cells.iter().zip(&self.total_field).map(move |(c, u)| {
            let s = w * c.contrast * c.fraction;
            (c.center, [u[0] * s, u[1] * s])
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.cells.iter().map(|c| c.center[0].hypot(c.center[1])).fold(0.0, f64::max) + self.h
    }

    /// Scattered field at a point outside the support.
    pub fn scattered_at(&self, x: Point) -> Result<Vector<2>> {
        let (p, s) = self.scattered_split(x)?;
        Ok([p[0] + s[0], p[1] + s[1]])
    }

    /// Compressional and shear parts of the scattered field at x.
    pub fn scattered_split(&self, x: Point) -> Result<(Vector<2>, Vector<2>)> {
        let mut p = [C64::new(0.0, 0.0); 2];
        let mut s = [C64::new(0.0, 0.0); 2];
        for (y, d) in self.densities() {
            if d[0] == C64::new(0.0, 0.0) && d[1] == C64::new(0.0, 0.0) {
                continue;
            }
            let (gp, gs) = green_parts([x[0] - y[0], x[1] - y[1]], &self.params)?;
            let (a, b) = (green::apply(&gp, d), green::apply(&gs, d));
            for i in 0..2 {
                p[i] += a[i];
                s[i] += b[i];
            }
        }
        Ok((p, s))
    }

    pub fn max_relative_deviation(&self, other: &[Vector<2>]) -> f64 {
        let num = self.total_field.iter().zip(other).map(|(a, b)| (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sum::<f64>();
        let den = self.total_field.iter().map(|a| a[0].norm_sqr() + a[1].norm_sqr()).sum::<f64>();
        (num / den).sqrt()
    }
}

/// Far-field amplitudes on M equispaced directions; x_perp is x rotated by +pi/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldPattern {
    pub angles: Vec<f64>,
    pub u_p: Vec<C64>,
    pub u_s: Vec<C64>,
}

impl FarFieldPattern {
    pub fn direction(&self, m: usize) -> Point {
        [self.angles[m].cos(), self.angles[m].sin()]
    }

    /// u_t = u_p x + u_s x_perp.
    pub fn u_t(&self, m: usize) -> Vector<2> {
        let d = self.direction(m);
        [self.u_p[m] * d[0] - self.u_s[m] * d[1], self.u_p[m] * d[1] + self.u_s[m] * d[0]]
    }

    /// (u_t . x, u_t . x_perp), which recover (u_p, u_s).
    pub fn decompose(&self, m: usize) -> (C64, C64) {
        let d = self.direction(m);
        let t = self.u_t(m);
        (t[0] * d[0] + t[1] * d[1], -t[0] * d[1] + t[1] * d[0])
    }

    /// L2(S^1) norm of u_t by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        let w = 2.0 * PI / self.angles.len() as f64;
        (0..self.angles.len()).map(|m| self.u_p[m].norm_sqr() + self.u_s[m].norm_sqr()).sum::<f64>().sqrt() * w.sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.angles.len() != other.angles.len() {
            return invalid("far-field patterns use different direction sets");
        }
        let w = 2.0 * PI / self.angles.len() as f64;
        Ok((0..self.angles.len()).map(|m| (self.u_p[m] - other.u_p[m]).norm_sqr() + (self.u_s[m] - other.u_s[m]).norm_sqr()).sum::<f64>().sqrt() * w.sqrt())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("angle,re_u_p,im_u_p,re_u_s,im_u_s\n");
        for m in 0..self.angles.len() {
            let _ = writeln!(s, "{},{},{},{},{}", self.angles[m], self.u_p[m].re, self.u_p[m].im, self.u_s[m].re, self.u_s[m].im);
        }
        s
    }
}

pub fn far_field(solution: &LSSolution, m: usize) -> Result<FarFieldPattern> {
    if m < 16 {
        return invalid("far-field patterns need at least 16 directions");
    }
    let p = &solution.params;
    let (kp, ks) = (p.kp(), p.ks());
    let e = C64::from_polar(1.0, 0.25 * PI);
    let cp = e / (4.0 * (p.lambda + 2.0 * p.mu)) * (2.0 / (PI * kp)).sqrt();
    let cs = e / (4.0 * p.mu) * (2.0 / (PI * ks)).sqrt();
    let angles: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let mut u_p = vec![C64::new(0.0, 0.0); m];
    let mut u_s = vec![C64::new(0.0, 0.0); m];
    for (y, d) in solution.densities() {
        for k in 0..m {
            let x = [angles[k].cos(), angles[k].sin()];
            let along = d[0] * x[0] + d[1] * x[1];
            let across = -d[0] * x[1] + d[1] * x[0];
            let dot = x[0] * y[0] + x[1] * y[1];
            u_p[k] += cp * along * C64::from_polar(1.0, -kp * dot);
            u_s[k] += cs * across * C64::from_polar(1.0, -ks * dot);
        }
    }
    Ok(FarFieldPattern { angles, u_p, u_s })
}

/// |u_sc(R x) - e^{i kp R}/sqrt(R) u_p x - e^{i ks R}/sqrt(R) u_s x_perp| at one direction.
pub fn far_field_remainder(solution: &LSSolution, pattern: &FarFieldPattern, m: usize, radius: f64) -> Result<f64> {
    let d = pattern.direction(m);
    let u = solution.scattered_at([radius * d[0], radius * d[1]])?;
    let p = &solution.params;
    let sq = radius.sqrt();
    let ep = C64::from_polar(1.0, p.kp() * radius) / sq * pattern.u_p[m];
    let es = C64::from_polar(1.0, p.ks() * radius) / sq * pattern.u_s[m];
    let lead = [ep * d[0] - es * d[1], ep * d[1] + es * d[0]];
    Ok(((u[0] - lead[0]).norm_sqr() + (u[1] - lead[1]).norm_sqr()).sqrt())
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiationRow {
    pub radius: f64,
    /// sqrt(r) ||d_r u_p - i kp u_p||_{L2(circle)}
    pub p_residual: f64,
    pub s_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiationReport {
    pub rows: Vec<RadiationRow>,
    pub p_decreasing: bool,
    pub s_decreasing: bool,
    /// |div u_s| / (ks |u|) and |curl u_p| / (kp |u|), worst over sample points.
    pub div_s_relative: f64,
    pub curl_p_relative: f64,
    /// Grid Helmholtz split of the scattered field against the kernel split.
    pub split_consistency: f64,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0) || v.windows(2).all(|w| w[1] < w[0])
}

pub fn radiation_check(solution: &LSSolution, radii: &[f64], n_angles: usize) -> Result<RadiationReport> {
    let rs = solution.support_radius();
    if radii.iter().any(|&r| !(r > rs)) {
        return invalid(format!("radii must lie outside the support (radius {rs})"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("radii must be increasing");
    }
    let p = &solution.params;
    let (kp, ks) = (p.kp(), p.ks());
    let lam = 2.0 * PI / kp.max(ks);
    let step = lam / 200.0;
    let mut rows = vec![];
    for &r in radii {
        let (mut ep, mut es) = (0.0, 0.0);
        for a in 0..n_angles {
            let t = 2.0 * PI * a as f64 / n_angles as f64;
            let d = [t.cos(), t.sin()];
            let at = |rr: f64| solution.scattered_split([rr * d[0], rr * d[1]]);
            let (p0, s0) = at(r)?;
            let mut dp = [C64::new(0.0, 0.0); 2];
            let mut ds = [C64::new(0.0, 0.0); 2];
            for (off, wgt) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                let (pp, ss) = at(r + off * step)?;
                for i in 0..2 {
                    dp[i] += pp[i] * (wgt / (12.0 * step));
                    ds[i] += ss[i] * (wgt / (12.0 * step));
                }
            }
            for i in 0..2 {
                ep += (dp[i] - p0[i] * C64::new(0.0, kp)).norm_sqr();
                es += (ds[i] - s0[i] * C64::new(0.0, ks)).norm_sqr();
            }
        }
        let arc = 2.0 * PI * r / n_angles as f64;
        rows.push(RadiationRow { radius: r, p_residual: (ep * arc).sqrt() * r.sqrt(), s_residual: (es * arc).sqrt() * r.sqrt() });
    }
    // split cross-checks near the first circle
    let r0 = radii[0];
    let (mut div_s, mut curl_p, mut split) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..4 {
        let t = 0.5 * PI * a as f64 + 0.3;
        let x0 = [r0 * t.cos(), r0 * t.sin()];
        let g = lam / 20.0;
        let sample = |x: Point| solution.scattered_split(x);
        let d = |f: &dyn Fn(Point) -> Result<Vector<2>>, axis: usize, comp: usize| -> Result<C64> {
            let mut acc = C64::new(0.0, 0.0);
            for (off, wgt) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                let mut x = x0;
                x[axis] += off * g / 4.0;
                acc += f(x)?[comp] * (wgt / (12.0 * g / 4.0));
            }
            Ok(acc)
        };
        let pf = |x: Point| Ok(sample(x)?.0);
        let sf = |x: Point| Ok(sample(x)?.1);
        let (p0, s0) = sample(x0)?;
        let scale = (p0[0].norm_sqr() + p0[1].norm_sqr() + s0[0].norm_sqr() + s0[1].norm_sqr()).sqrt();
        if scale == 0.0 {
            continue;
        }
        let dv = d(&sf, 0, 0)? + d(&sf, 1, 1)?;
        let cu = d(&pf, 0, 1)? - d(&pf, 1, 0)?;
        div_s = div_s.max(dv.norm() / (ks * scale));
        curl_p = curl_p.max(cu.norm() / (kp * scale));
        let grid = GridField::sample(&ScatteredField(solution), [x0[0] - 4.0 * g, x0[1] - 4.0 * g], g, 9, 9);
        let sp = helmholtz_split(&grid, p, 1e-3)?;
        let gp = sp.p_part.values[4 * 9 + 4];
        split = split.max(((gp[0] - p0[0]).norm_sqr() + (gp[1] - p0[1]).norm_sqr()).sqrt() / scale);
    }
    let pr: Vec<f64> = rows.iter().map(|r| r.p_residual).collect();
    let sr: Vec<f64> = rows.iter().map(|r| r.s_residual).collect();
    Ok(RadiationReport {
        p_decreasing: strictly_decreasing(&pr),
        s_decreasing: strictly_decreasing(&sr),
        rows,
        div_s_relative: div_s,
        curl_p_relative: curl_p,
        split_consistency: split,
    })
}

struct ScatteredField<'a>(&'a LSSolution);

impl VectorField<2> for ScatteredField<'_> {
    fn value(&self, x: [f64; 2]) -> Vector<2> {
        self.0.scattered_at(x).unwrap_or([C64::new(f64::NAN, 0.0); 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LameParameters {
        LameParameters::new(1.0, 1.0, 2.0 * PI, 2).unwrap()
    }

    #[test]
    fn zero_contrast_passes_through() {
        let m = MediumConfig::disk([0.0, 0.0], 0.5, 0.0).unwrap();
        let sol = ls_solve(&m, &Incident::PlaneP { angle: 0.3 }, &params(), &LsOptions::default()).unwrap();
        assert_eq!(sol.total_field, sol.incident_field);
        let ff = far_field(&sol, 32).unwrap();
        assert_eq!(ff.l2_norm(), 0.0);
        let rad = radiation_check(&sol, &[2.0, 3.0], 16).unwrap();
        assert!(rad.rows.iter().all(|r| r.p_residual == 0.0 && r.s_residual == 0.0));
    }

    #[test]
    fn far_field_components_reconstruct() {
        let ff = FarFieldPattern {
            angles: (0..16).map(|k| 2.0 * PI * k as f64 / 16.0).collect(),
            u_p: (0..16).map(|k| C64::new(k as f64, 1.0)).collect(),
            u_s: (0..16).map(|k| C64::new(-1.0, 0.5 * k as f64)).collect(),
        };
        for m in 0..16 {
            let (a, b) = ff.decompose(m);
            assert!((a - ff.u_p[m]).norm() < 1e-12 && (b - ff.u_s[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_matches_disk_convolution() {
        // constant density on a disk, observed at its centre
        let p = LameParameters::new(1.0, 1.0, 3.0, 2).unwrap();
        let h = 0.02;
        let radius = 0.4;
        let m = MediumConfig::disk([0.5 * h, 0.5 * h], radius, 1.0).unwrap();
        let opts = LsOptions { h: Some(h), ..Default::default() };
        let sys = LsSystem::build(&m, &p, &opts).unwrap();
        let ones: Vec<C64> = (0..sys.unknowns()).map(|k| C64::new(if k % 2 == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
        let k = sys.apply_k(&ones);
        let c = sys.cells.iter().position(|c| c.index == [0, 0]).unwrap();
        let w2 = p.omega * p.omega;
        let radial = |kk: f64| {
            let (_, h1) = crate::specfun::hankel1_01(kk * radius);
            h1 * (radius / kk) + C64::new(0.0, 2.0 / (PI * kk * kk))
        };
        let exact = C64::new(0.0, 0.25) * 2.0 * PI * (radial(p.ks()) / (2.0 * p.mu) + radial(p.kp()) / (2.0 * (p.lambda + 2.0 * p.mu))) * w2;
        assert!((k[2 * c] - exact).norm() < 2e-3 * exact.norm(), "{:?} {exact:?}", k[2 * c]);
        assert!(k[2 * c + 1].norm() < 1e-10 * exact.norm());
    }

    fn triangle(v0: f64) -> MediumConfig {
        MediumConfig::polygon(PolygonDomain::regular(3, 1.0 / 3f64.sqrt(), [0.013, -0.021]).unwrap(), v0).unwrap()
    }

    fn opts() -> LsOptions {
        LsOptions { points_per_wavelength: 12.0, ..Default::default() }
    }

    #[test]
    fn born_deviation_is_second_order() {
        let p = params();
        let inc = Incident::PlaneP { angle: 0.4 };
        let dev = |eps: f64| {
            let sys = LsSystem::build(&triangle(eps), &p, &opts()).unwrap();
            let sol = ls_solve_system(&sys, &inc, &opts()).unwrap();
            let b = born_field(&sys, &inc);
            sol.total_field.iter().zip(&b).map(|(a, c)| (a[0] - c[0]).norm_sqr() + (a[1] - c[1]).norm_sqr()).sum::<f64>().sqrt()
        };
        let ratio = dev(0.04) / dev(0.02);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn far_field_norm_linear_in_small_contrast() {
        let p = params();
        let norm = |v0: f64| far_field(&ls_solve(&triangle(v0), &Incident::PlaneS { angle: 1.0 }, &p, &opts()).unwrap(), 32).unwrap().l2_norm();
        let ratio = norm(0.02) / norm(0.01);
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn far_field_matches_large_radius_evaluation() {
        let p = params();
        let sol = ls_solve(&triangle(1.0), &Incident::PlaneS { angle: 0.7 }, &p, &opts()).unwrap();
        let ff = far_field(&sol, 64).unwrap();
        let radii: Vec<f64> = (0..8).map(|k| 20.0 * 10f64.powf(k as f64 / 7.0)).collect();
        let rem: Vec<f64> = radii.iter().map(|&r| far_field_remainder(&sol, &ff, 11, r).unwrap()).collect();
        let slope = loglog_slope(&radii, &rem);
        assert!((slope + 1.5).abs() < 0.1, "{slope}");
        assert!(far_field(&sol, 8).is_err());
    }

    #[test]
    fn radiation_residuals_decay() {
        let p = params();
        let sol = ls_solve(&triangle(1.0), &Incident::PlaneP { angle: 0.2 }, &p, &opts()).unwrap();
        let rad = radiation_check(&sol, &[10.0, 20.0, 40.0], 48).unwrap();
        assert!(rad.p_decreasing && rad.s_decreasing, "{rad:?}");
        assert!(rad.div_s_relative < 1e-4 && rad.curl_p_relative < 1e-4);
        assert!(rad.split_consistency < 1e-2);
        assert!(radiation_check(&sol, &[0.1, 20.0], 16).is_err());
    }

    #[test]
    fn under_resolution_is_reported() {
        let o = LsOptions { h: Some(0.3), ..Default::default() };
        let sol = ls_solve(&triangle(1.0), &Incident::PlaneP { angle: 0.0 }, &params(), &o).unwrap();
        assert!(sol.iteration_report.warnings.iter().any(|w| w.contains("under-resolved")));
    }

    #[test]
    fn herglotz_rotation_needs_node_multiples() {
        let g = vec![C64::new(1.0, 0.0); 8];
        let inc = Incident::Herglotz { kernel: HerglotzKernel2D::new(g.clone(), g).unwrap() };
        assert!(inc.rotated(PI / 4.0).is_ok());
        assert!(inc.rotated(0.1).is_err());
    }

    #[test]
    fn corner_and_separation_experiments() {
        let p = params();
        let rep = corner_scattering_experiment(&triangle(1.0), &p, &opts(), 8, 32, 0.15).unwrap();
        assert_eq!(rep.rows.len(), 16);
        assert!(rep.min_far_field_norm > 1e-3 && rep.min_corner_average > 0.0);
        let zero = corner_scattering_experiment(&triangle(0.0), &p, &opts(), 2, 32, 0.15).unwrap();
        assert_eq!(zero.min_far_field_norm, 0.0);
        let a = triangle(1.0).outline().unwrap().area().sqrt() / 2.0;
        let sq = MediumConfig::polygon(PolygonDomain::rectangle(-a, -a, a, a).unwrap(), 1.0).unwrap();
        let inc = Incident::PlaneP { angle: 0.3 };
        let sep = uniqueness_experiment(&sq, &triangle(1.0), &inc, &p, &opts(), 32).unwrap();
        assert!(sep.distance > 1e-3);
        let same = uniqueness_experiment(&sq, &sq, &inc, &p, &opts(), 32).unwrap();
        assert!(same.distance <= 2.0 * same.residual_a.max(same.residual_b));
        let eq = rigid_motion_check(&triangle(1.0), &inc, &p, &opts(), 3, [1, 5], 32).unwrap();
        assert!(eq.relative_deviation < 1e-6);
    }

    #[test]
    fn gaussian_contrast_self_converges() {
        let p = params();
        let g = MediumConfig::new(Support::Disk { center: [0.0, 0.0], radius: 1.5 }, Contrast::Gaussian { amplitude: 0.5, center: [0.1, 0.0], width: 0.35 })
            .unwrap();
        let ff = |h: f64| far_field(&ls_solve(&g, &Incident::PlaneP { angle: 0.0 }, &p, &LsOptions { h: Some(h), ..opts() }).unwrap(), 32).unwrap();
        let (a, b, c) = (ff(0.1), ff(0.05), ff(0.025));
        let order = (a.distance(&b).unwrap() / b.distance(&c).unwrap()).log2();
        assert!(order >= 2.0, "{order}");
    }
}
