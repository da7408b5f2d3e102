//! Sectors, polygons, quadrature on corner regions and triangle meshes.

mod mesh;

pub use mesh::{corner_ball_average, mesh_polygon, mesh_sector, BoundaryEdge, BoundaryTag, MeshQuality, TriangleMesh};

use crate::error::{invalid, Result};
use crate::quadrature::{gauss_legendre, QuadResult};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 2];

/// Corner sector with apex at the origin: angles in (theta_m, theta_max), radius h.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorGeometry {
    pub theta_min: f64,
    pub theta_max: f64,
    pub h: f64,
}

impl SectorGeometry {
    pub fn new(theta_min: f64, theta_max: f64, h: f64) -> Result<Self> {
        let open = theta_max - theta_min;
        if !(theta_min > -PI && theta_max < PI) {
            return invalid(format!("sector angles must lie in (-pi, pi), got ({theta_min}, {theta_max})"));
        }
        if !(open > 0.0 && open < PI) {
            return invalid(format!("opening angle must be in (0, pi), got {open}"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("radius must be positive, got {h}"));
        }
        Ok(Self { theta_min, theta_max, h })
    }

    pub fn opening(&self) -> f64 {
        self.theta_max - self.theta_min
    }

    /// Smallest value of cos(theta/2) over the sector; the CGO decay rate.
    pub fn decay_rate(&self) -> f64 {
        (0.5 * self.theta_min).cos().min((0.5 * self.theta_max).cos())
    }

    pub fn with_radius(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn contains(&self, x: Point) -> bool {
        let r = x[0].hypot(x[1]);
        let t = x[1].atan2(x[0]);
        r < self.h && t > self.theta_min && t < self.theta_max
    }

    /// Outward unit normal on the edge at angle theta_min (Gamma minus).
    pub fn normal_minus(&self) -> Point {
        [self.theta_min.sin(), -self.theta_min.cos()]
    }

    /// Outward unit normal on the edge at angle theta_max (Gamma plus).
    pub fn normal_plus(&self) -> Point {
        [-self.theta_max.sin(), self.theta_max.cos()]
    }

    /// Tensor polar rule with sqrt grading toward the apex: r = h u^2.
    pub fn nodes(&self, n: usize, panels_r: usize, panels_t: usize) -> Vec<(Point, f64)> {
        let (x, w) = gauss_legendre(n);
        let mut out = Vec::with_capacity(n * n * panels_r * panels_t);
        let dt = self.opening() / panels_t as f64;
        let du = 1.0 / panels_r as f64;
        for pt in 0..panels_t {
            for (xt, wt) in x.iter().zip(&w) {
                let t = self.theta_min + dt * (pt as f64 + 0.5 * (xt + 1.0));
                let (s, c) = t.sin_cos();
                for pr in 0..panels_r {
                    for (xr, wr) in x.iter().zip(&w) {
                        let u = du * (pr as f64 + 0.5 * (xr + 1.0));
                        let r = self.h * u * u;
                        // dA = r dr dt, dr = 2 h u du
                        let wgt = 0.25 * dt * du * wt * wr * r * 2.0 * self.h * u;
                        out.push(([r * c, r * s], wgt));
                    }
                }
            }
        }
        out
    }
}

/// Accuracy target for adaptive corner quadrature.
#[derive(Clone, Copy, Debug)]
pub struct QuadTarget {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadTarget {
    fn default() -> Self {
        Self { abs_tol: 1e-300, rel_tol: 1e-12, max_panels: 64 }
    }
}

fn refine_until<F: FnMut(usize) -> C64>(mut est: F, target: QuadTarget) -> QuadResult {
    let mut panels = 1;
    let mut prev = est(panels);
    loop {
        panels *= 2;
        let cur = est(panels);
        let err = (cur - prev).norm();
        if err <= target.abs_tol.max(target.rel_tol * cur.norm()) {
            return QuadResult { value: cur, error: err, converged: true };
        }
        if panels >= target.max_panels {
            return QuadResult { value: cur, error: err, converged: false };
        }
        prev = cur;
    }
}

/// Area integral of f over the sector.
pub fn sector_quadrature<F: Fn(Point) -> C64>(sector: &SectorGeometry, f: F, target: QuadTarget) -> QuadResult {
    refine_until(
        |p| sector.nodes(20, p, p).iter().map(|(x, w)| f(*x) * *w).sum(),
        target,
    )
}

/// Integral of f along the ray at angle theta from the apex to radius h (arc length).
pub fn edge_quadrature<F: Fn(Point) -> C64>(theta: f64, h: f64, f: F, target: QuadTarget) -> QuadResult {
    let (s, c) = theta.sin_cos();
    edge_rule_refined(h, target, |r| f([r * c, r * s]))
}

fn edge_rule_refined<F: Fn(f64) -> C64>(h: f64, target: QuadTarget, g: F) -> QuadResult {
    let (x, w) = gauss_legendre(24);
    refine_until(
        |p| {
            let du = 1.0 / p as f64;
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..p {
                for (xi, wi) in x.iter().zip(&w) {
                    let u = du * (k as f64 + 0.5 * (xi + 1.0));
                    acc += g(h * u * u) * (0.5 * du * wi * 2.0 * h * u);
                }
            }
            acc
        },
        target,
    )
}

/// Quadrature nodes (point, weight) on the edge at angle theta, graded toward the apex.
pub fn edge_nodes(theta: f64, h: f64, n: usize, panels: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let (s, c) = theta.sin_cos();
    let du = 1.0 / panels as f64;
    let mut out = Vec::new();
    for k in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let u = du * (k as f64 + 0.5 * (xi + 1.0));
            let r = h * u * u;
            out.push(([r * c, r * s], 0.5 * du * wi * 2.0 * h * u));
        }
    }
    out
}

/// Quadrature nodes (point, weight) on the arc of radius h over the sector's angles.
pub fn arc_nodes(sector: &SectorGeometry, n: usize, panels: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let dt = sector.opening() / panels as f64;
    let mut out = Vec::new();
    for k in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let t = sector.theta_min + dt * (k as f64 + 0.5 * (xi + 1.0));
            out.push(([sector.h * t.cos(), sector.h * t.sin()], 0.5 * dt * wi * sector.h));
        }
    }
    out
}

/// Integral of f along the arc of radius h (arc length).
pub fn arc_quadrature<F: Fn(Point) -> C64>(sector: &SectorGeometry, f: F, target: QuadTarget) -> QuadResult {
    refine_until(
        |p| arc_nodes(sector, 24, p).iter().map(|(x, w)| f(*x) * *w).sum(),
        target,
    )
}

/// Collapsed Gauss rule on a triangle, exact for polynomials of degree 2n - 2.
pub fn triangle_nodes(a: Point, b: Point, c: Point, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    let mut out = Vec::with_capacity(n * n);
    for (xi, wi) in x.iter().zip(&w) {
        let u = 0.5 * (xi + 1.0);
        for (xj, wj) in x.iter().zip(&w) {
            let v = 0.5 * (xj + 1.0) * (1.0 - u);
            let p = [a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]), a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1])];
            out.push((p, 0.25 * wi * wj * (1.0 - u) * area2));
        }
    }
    out
}

/// Area rule on a polygon from a coarse triangulation.
pub fn polygon_nodes(poly: &PolygonDomain, n: usize) -> Result<Vec<(Point, f64)>> {
    let (lo, hi) = poly.bounding_box();
    let mesh = mesh_polygon(poly, (hi[0] - lo[0]).max(hi[1] - lo[1]))?;
    let mut out = vec![];
    for t in &mesh.triangles {
        out.extend(triangle_nodes(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], n));
    }
    Ok(out)
}

/// Boundary rule on a polygon: (point, weight, outward normal).
pub fn polygon_boundary_nodes(poly: &PolygonDomain, n: usize) -> Vec<(Point, f64, Point)> {
    let (x, w) = gauss_legendre(n);
    let m = poly.vertices.len();
    let mut out = vec![];
    for i in 0..m {
        let a = poly.vertices[i];
        let b = poly.vertices[(i + 1) % m];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let nu = [d[1] / len, -d[0] / len];
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            out.push(([a[0] + t * d[0], a[1] + t * d[1]], 0.5 * wi * len, nu));
        }
    }
    out
}

/// Simple polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonDomain {
    pub vertices: Vec<Point>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl PolygonDomain {
    /// Validates simplicity; clockwise input is reoriented.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return invalid("polygon needs at least 3 vertices");
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12 {
                return invalid("polygon has repeated vertices");
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(a, b, vertices[j], vertices[(j + 1) % n]) {
                    return invalid("polygon is not simple: edges intersect");
                }
            }
        }
        let poly = Self { vertices: vertices.clone() };
        if poly.signed_area() < 0.0 {
            vertices.reverse();
        }
        let poly = Self { vertices };
        if poly.signed_area().abs() < 1e-14 {
            return invalid("polygon has zero area");
        }
        Ok(poly)
    }

    pub fn regular(n: usize, radius: f64, center: Point) -> Result<Self> {
        let v = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::new(v)
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Interior angle at each vertex, in (0, 2 pi).
    pub fn interior_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let p = self.vertices[(i + n - 1) % n];
                let c = self.vertices[i];
                let q = self.vertices[(i + 1) % n];
                let a1 = (p[1] - c[1]).atan2(p[0] - c[0]);
                let a2 = (q[1] - c[1]).atan2(q[0] - c[0]);
                let mut d = a1 - a2;
                while d <= 0.0 {
                    d += 2.0 * PI;
                }
                while d > 2.0 * PI {
                    d -= 2.0 * PI;
                }
                d
            })
            .collect()
    }

    /// Vertices whose interior angle is below pi.
    pub fn convex_corners(&self) -> Vec<usize> {
        self.interior_angles()
            .iter()
            .enumerate()
            .filter(|(_, a)| **a < PI - 1e-12)
            .map(|(i, _)| i)
            .collect()
    }

    /// The local sector at a convex vertex, expressed in the frame with apex at the origin.
    pub fn corner_sector(&self, idx: usize, h: f64) -> Result<SectorGeometry> {
        let n = self.vertices.len();
        let c = self.vertices[idx];
        let q = self.vertices[(idx + 1) % n];
        let t1 = (q[1] - c[1]).atan2(q[0] - c[0]);
        let ang = self.interior_angles()[idx];
        if ang >= PI {
            return invalid("corner is not convex");
        }
        // rotate so the bisector points along +x
        let mid = t1 + 0.5 * ang;
        SectorGeometry::new(t1 - mid, t1 + ang - mid, h)
    }

    /// Rigid motion: rotation by angle about the origin followed by translation.
    pub fn transformed(&self, angle: f64, shift: Point) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| [c * v[0] - s * v[1] + shift[0], s * v[0] + c * v[1] + shift[1]])
                .collect(),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Area of the intersection with an axis-aligned box (polygon clipped against the box).
    pub fn clipped_area(&self, lo: Point, hi: Point) -> f64 {
        let mut poly = self.vertices.clone();
        for (axis, bound, keep_below) in [(0, lo[0], false), (0, hi[0], true), (1, lo[1], false), (1, hi[1], true)] {
            if poly.is_empty() {
                return 0.0;
            }
            let inside = |p: &Point| if keep_below { p[axis] <= bound } else { p[axis] >= bound };
            let mut out = Vec::with_capacity(poly.len() + 4);
            for i in 0..poly.len() {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let (ia, ib) = (inside(&a), inside(&b));
                if ia {
                    out.push(a);
                }
                if ia != ib {
                    let t = (bound - a[axis]) / (b[axis] - a[axis]);
                    out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                }
            }
            poly = out;
        }
        if poly.len() < 3 {
            return 0.0;
        }
        let n = poly.len();
        0.5 * (0..n)
            .map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1])
            .sum::<f64>()
            .abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_validation() {
        assert!(SectorGeometry::new(-0.5, 0.5, 1.0).is_ok());
        assert!(SectorGeometry::new(-2.0, 2.0, 1.0).is_err());
        assert!(SectorGeometry::new(0.1, 0.1, 1.0).is_err());
        assert!(SectorGeometry::new(-0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn sector_area_and_moments() {
        let s = SectorGeometry::new(-0.4, 1.1, 0.7).unwrap();
        let a = sector_quadrature(&s, |_| C64::new(1.0, 0.0), QuadTarget::default());
        assert!((a.value.re - 0.5 * 1.5 * 0.49).abs() < 1e-13);
        let arc = arc_quadrature(&s, |_| C64::new(1.0, 0.0), QuadTarget::default());
        assert!((arc.value.re - 1.5 * 0.7).abs() < 1e-13);
        let e = edge_quadrature(0.3, 0.7, |x| C64::new(x[0].hypot(x[1]), 0.0), QuadTarget::default());
        assert!((e.value.re - 0.245).abs() < 1e-13);
    }

    #[test]
    fn polygon_basics() {
        let sq = PolygonDomain::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(sq.signed_area() > 0.0);
        assert!(sq.contains([0.5, 0.5]) && !sq.contains([1.5, 0.5]));
        assert_eq!(sq.convex_corners().len(), 4);
        assert!((sq.clipped_area([0.5, 0.5], [2.0, 2.0]) - 0.25).abs() < 1e-15);
        let bow = PolygonDomain::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(bow.is_err());
        let l = PolygonDomain::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap();
        assert_eq!(l.convex_corners().len(), 5);
        let ang: f64 = l.interior_angles().iter().sum();
        assert!((ang - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn corner_sector_is_centered() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let s = sq.corner_sector(0, 0.3).unwrap();
        assert!((s.theta_min + PI / 4.0).abs() < 1e-14 && (s.theta_max - PI / 4.0).abs() < 1e-14);
    }
}
