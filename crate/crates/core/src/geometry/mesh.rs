use super::{Point, PolygonDomain, SectorGeometry};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    GammaMinus,
    GammaPlus,
    Arc,
    Outer(usize),
}

impl BoundaryTag {
    fn label(&self) -> String {
        match self {
            BoundaryTag::GammaMinus => "gamma-".into(),
            BoundaryTag::GammaPlus => "gamma+".into(),
            BoundaryTag::Arc => "arc".into(),
            BoundaryTag::Outer(k) => format!("outer:{k}"),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "gamma-" => Ok(BoundaryTag::GammaMinus),
            "gamma+" => Ok(BoundaryTag::GammaPlus),
            "arc" => Ok(BoundaryTag::Arc),
            _ => s
                .strip_prefix("outer:")
                .and_then(|k| k.parse().ok())
                .map(BoundaryTag::Outer)
                .ok_or_else(|| Error::Parse(format!("unknown boundary tag '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// Conforming triangulation with counter-clockwise triangles and tagged boundary edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn tri_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let la = dist(b, c);
    let lb = dist(a, c);
    let lc = dist(a, b);
    let ang = |opp: f64, s1: f64, s2: f64| ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0).acos();
    [ang(la, lb, lc), ang(lb, la, lc), ang(lc, la, lb)]
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    [
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ]
}

impl TriangleMesh {
    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.nodes[i]);
            for ang in tri_angles(a, b, c) {
                min_angle = min_angle.min(ang);
            }
            max_edge = max_edge.max(dist(a, b)).max(dist(b, c)).max(dist(c, a));
        }
        MeshQuality { min_angle_deg: min_angle.to_degrees(), max_edge }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * orient(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|e| dist(self.nodes[e.a], self.nodes[e.b])).sum()
    }

    /// Flags nodes that lie on a boundary edge.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.nodes.len()];
        for e in &self.boundary {
            f[e.a] = true;
            f[e.b] = true;
        }
        f
    }

    /// Triangle containing x and the barycentric coordinates of x in it.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (i, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.map(|k| self.nodes[k]);
            let area = orient(a, b, c);
            let l = [orient(x, b, c) / area, orient(a, x, c) / area, orient(a, b, x) / area];
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some((i, l));
            }
            if best.is_none_or(|(_, _, w)| worst > w) {
                best = Some((i, l, worst));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|(i, l, _)| (i, l))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.triangles.len(), self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{:.17e} {:.17e}", p[0], p[1]).unwrap();
        }
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "{}", self.boundary.len()).unwrap();
        for e in &self.boundary {
            writeln!(s, "{} {} {}", e.a, e.b, e.tag.label()).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("mesh text: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut header = lines.next().ok_or_else(|| bad("empty input"))?.split_whitespace();
        let ntri: usize = header.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("header"))?;
        let nnode: usize = header.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("header"))?;
        let mut nodes = Vec::with_capacity(nnode);
        for _ in 0..nnode {
            let l = lines.next().ok_or_else(|| bad("missing node"))?;
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad("node coordinate"))).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(bad("node line needs two numbers"));
            }
            nodes.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(ntri);
        for _ in 0..ntri {
            let l = lines.next().ok_or_else(|| bad("missing triangle"))?;
            let v: Vec<usize> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad("triangle index"))).collect::<Result<_>>()?;
            if v.len() != 3 || v.iter().any(|&k| k >= nnode) {
                return Err(bad("triangle line"));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let nb: usize = match lines.next() {
            Some(l) => l.parse().map_err(|_| bad("boundary count"))?,
            None => 0,
        };
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let l = lines.next().ok_or_else(|| bad("missing boundary edge"))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("boundary edge line"));
            }
            let a: usize = parts[0].parse().map_err(|_| bad("edge index"))?;
            let b: usize = parts[1].parse().map_err(|_| bad("edge index"))?;
            if a >= nnode || b >= nnode {
                return Err(bad("edge index out of range"));
            }
            boundary.push(BoundaryEdge { a, b, tag: BoundaryTag::parse(parts[2])? });
        }
        Ok(Self { nodes, triangles, boundary })
    }
}

struct Delaunay {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    edges: HashMap<(usize, usize), usize>,
}

fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let adx = a[0] - d[0];
    let ady = a[1] - d[1];
    let bdx = b[0] - d[0];
    let bdy = b[1] - d[1];
    let cdx = c[0] - d[0];
    let cdy = c[1] - d[1];
    (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
}

impl Delaunay {
    fn new(lo: Point, hi: Point) -> Self {
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let r = 20.0 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let pts = vec![[c[0] - 2.0 * r, c[1] - r], [c[0] + 2.0 * r, c[1] - r], [c[0], c[1] + 2.0 * r]];
        let mut d = Self { pts, tris: vec![], alive: vec![], edges: HashMap::new() };
        d.add_tri([0, 1, 2]);
        d
    }

    fn add_tri(&mut self, t: [usize; 3]) {
        let id = self.tris.len();
        self.tris.push(t);
        self.alive.push(true);
        for k in 0..3 {
            self.edges.insert((t[k], t[(k + 1) % 3]), id);
        }
    }

    fn kill(&mut self, id: usize) {
        self.alive[id] = false;
        let t = self.tris[id];
        for k in 0..3 {
            if self.edges.get(&(t[k], t[(k + 1) % 3])) == Some(&id) {
                self.edges.remove(&(t[k], t[(k + 1) % 3]));
            }
        }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a, b)) || self.edges.contains_key(&(b, a))
    }

    fn insert(&mut self, p: Point) -> usize {
        let scale = 1e-12;
        let mut start = None;
        for (i, t) in self.tris.iter().enumerate() {
            if !self.alive[i] {
                continue;
            }
            let [a, b, c] = t.map(|k| self.pts[k]);
            let area = orient(a, b, c);
            if orient(a, b, p) >= -scale * area && orient(b, c, p) >= -scale * area && orient(c, a, p) >= -scale * area {
                start = Some(i);
                break;
            }
        }
        let start = start.expect("point outside the bounding triangle");
        for &k in &self.tris[start] {
            if dist(self.pts[k], p) < 1e-13 {
                return k;
            }
        }
        let idx = self.pts.len();
        self.pts.push(p);
        let mut cavity = vec![start];
        let mut in_cav: HashMap<usize, ()> = HashMap::new();
        in_cav.insert(start, ());
        let mut i = 0;
        while i < cavity.len() {
            let t = self.tris[cavity[i]];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if let Some(&n) = self.edges.get(&(b, a)) {
                    if in_cav.contains_key(&n) {
                        continue;
                    }
                    let [x, y, z] = self.tris[n].map(|q| self.pts[q]);
                    if incircle(x, y, z, p) > 0.0 {
                        in_cav.insert(n, ());
                        cavity.push(n);
                    }
                }
            }
            i += 1;
        }
        let mut rim = Vec::new();
        for &c in &cavity {
            let t = self.tris[c];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let outside = self.edges.get(&(b, a)).is_none_or(|n| !in_cav.contains_key(n));
                if outside {
                    rim.push((a, b));
                }
            }
        }
        for &c in &cavity {
            self.kill(c);
        }
        for (a, b) in rim {
            self.add_tri([a, b, idx]);
        }
        idx
    }

    fn opposite(&self, a: usize, b: usize) -> Vec<usize> {
        let mut out = vec![];
        for key in [(a, b), (b, a)] {
            if let Some(&t) = self.edges.get(&key) {
                out.extend(self.tris[t].iter().copied().filter(|&v| v != a && v != b));
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Seg {
    a: usize,
    b: usize,
    side: usize,
}

fn encroaches(p: Point, a: Point, b: Point) -> bool {
    let d = (p[0] - a[0]) * (p[0] - b[0]) + (p[1] - a[1]) * (p[1] - b[1]);
    d < -1e-10 * dist(a, b).powi(2)
}

const MIN_ANGLE_TARGET: f64 = 28.0;

/// Quality Delaunay-refinement mesh of a simple polygon. Boundary edges are tagged by side index.
pub fn mesh_polygon(poly: &PolygonDomain, target: f64) -> Result<TriangleMesh> {
    let poly = PolygonDomain::new(poly.vertices.clone())?;
    if !(target > 0.0) {
        return Err(Error::InvalidInput("target edge length must be positive".into()));
    }
    let (segs, d) = refine(&poly, target)?;
    let super_ids = [0usize, 1, 2];
    let mut map = vec![usize::MAX; d.pts.len()];
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    for (i, t) in d.tris.iter().enumerate() {
        if !d.alive[i] || t.iter().any(|v| super_ids.contains(v)) {
            continue;
        }
        let [a, b, c] = t.map(|k| d.pts[k]);
        let cen = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        if !poly.contains(cen) {
            continue;
        }
        let mut tri = [0; 3];
        for k in 0..3 {
            if map[t[k]] == usize::MAX {
                map[t[k]] = nodes.len();
                nodes.push(d.pts[t[k]]);
            }
            tri[k] = map[t[k]];
        }
        triangles.push(tri);
    }
    let boundary = segs
        .iter()
        .map(|s| BoundaryEdge { a: map[s.a], b: map[s.b], tag: BoundaryTag::Outer(s.side) })
        .collect::<Vec<_>>();
    if boundary.iter().any(|e| e.a == usize::MAX || e.b == usize::MAX) {
        return Err(Error::Degenerate("boundary segment lost during meshing".into()));
    }
    Ok(TriangleMesh { nodes, triangles, boundary })
}

fn refine(poly: &PolygonDomain, target: f64) -> Result<(Vec<Seg>, Delaunay)> {
    let (lo, hi) = poly.bounding_box();
    let mut d = Delaunay::new(lo, hi);
    let n = poly.vertices.len();
    let vid: Vec<usize> = poly.vertices.iter().map(|&v| d.insert(v)).collect();
    let mut segs = Vec::new();
    for i in 0..n {
        let a = poly.vertices[i];
        let b = poly.vertices[(i + 1) % n];
        let pieces = (dist(a, b) / target).ceil().max(1.0) as usize;
        let mut prev = vid[i];
        for k in 1..pieces {
            let t = k as f64 / pieces as f64;
            let id = d.insert([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            segs.push(Seg { a: prev, b: id, side: i });
            prev = id;
        }
        segs.push(Seg { a: prev, b: vid[(i + 1) % n], side: i });
    }
    let max_circ = 0.635 * target;
    let min_angle = MIN_ANGLE_TARGET.to_radians();
    let small_input: Vec<usize> = poly
        .interior_angles()
        .iter()
        .zip(&vid)
        .filter(|(a, _)| **a < 1.1 * min_angle * 2.0)
        .map(|(_, &v)| v)
        .collect();
    let max_iter = 200_000;
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(Error::NotConverged("mesh refinement exceeded iteration cap".into()));
        }
        // conform and de-encroach boundary segments
        let mut split_any = false;
        let mut i = 0;
        while i < segs.len() {
            let s = segs[i];
            let (pa, pb) = (d.pts[s.a], d.pts[s.b]);
            let bad = !d.has_edge(s.a, s.b) || d.opposite(s.a, s.b).iter().any(|&v| encroaches(d.pts[v], pa, pb));
            if bad {
                let m = d.insert([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                segs[i] = Seg { a: s.a, b: m, side: s.side };
                segs.push(Seg { a: m, b: s.b, side: s.side });
                split_any = true;
                continue;
            }
            i += 1;
        }
        if split_any {
            continue;
        }
        // find the worst interior triangle
        let mut worst: Option<(usize, f64)> = None;
        for (ti, t) in d.tris.iter().enumerate() {
            if !d.alive[ti] || t.iter().any(|&v| v < 3) {
                continue;
            }
            let [a, b, c] = t.map(|k| d.pts[k]);
            let cen = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            if !poly.contains(cen) {
                continue;
            }
            let angs = tri_angles(a, b, c);
            let (kmin, amin) = angs.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &x)| if x < acc.1 { (k, x) } else { acc });
            let cc = circumcenter(a, b, c);
            let r = dist(cc, a);
            let skinny = amin < min_angle && !small_input.contains(&t[kmin]);
            let big = r > max_circ;
            if skinny || big {
                let score = if skinny { 10.0 + (min_angle - amin) } else { r / max_circ };
                if worst.is_none_or(|(_, s)| score > s) {
                    worst = Some((ti, score));
                }
            }
        }
        let Some((ti, _)) = worst else { break };
        let [a, b, c] = d.tris[ti].map(|k| d.pts[k]);
        let cc = circumcenter(a, b, c);
        let enc: Vec<usize> = (0..segs.len()).filter(|&k| encroaches(cc, d.pts[segs[k].a], d.pts[segs[k].b])).collect();
        if !enc.is_empty() || !poly.contains(cc) {
            let targets = if enc.is_empty() {
                // nearest segment to the off-domain circumcenter
                let k = (0..segs.len())
                    .min_by(|&x, &y| {
                        let mx = mid(d.pts[segs[x].a], d.pts[segs[x].b]);
                        let my = mid(d.pts[segs[y].a], d.pts[segs[y].b]);
                        dist(mx, cc).partial_cmp(&dist(my, cc)).unwrap()
                    })
                    .unwrap();
                vec![k]
            } else {
                enc
            };
            for k in targets {
                let s = segs[k];
                let m = d.insert(mid(d.pts[s.a], d.pts[s.b]));
                segs[k] = Seg { a: s.a, b: m, side: s.side };
                segs.push(Seg { a: m, b: s.b, side: s.side });
            }
            continue;
        }
        d.insert(cc);
    }
    Ok((segs, d))
}

fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Mesh of the polygonal sector with apex at the origin; the arc is split into `arc_pieces` chords.
pub fn mesh_sector(sector: &SectorGeometry, target: f64, arc_pieces: usize) -> Result<TriangleMesh> {
    let mut v = vec![[0.0, 0.0]];
    for k in 0..=arc_pieces {
        let t = sector.theta_min + sector.opening() * k as f64 / arc_pieces as f64;
        v.push([sector.h * t.cos(), sector.h * t.sin()]);
    }
    let poly = PolygonDomain::new(v)?;
    let mut mesh = mesh_polygon(&poly, target)?;
    let last = arc_pieces + 1;
    for e in mesh.boundary.iter_mut() {
        if let BoundaryTag::Outer(side) = e.tag {
            e.tag = if side == 0 {
                BoundaryTag::GammaMinus
            } else if side == last {
                BoundaryTag::GammaPlus
            } else {
                BoundaryTag::Arc
            };
        }
    }
    Ok(mesh)
}

/// Mean of f over the part of the ball B(corner, rho) covered by the mesh.
/// `f` receives the triangle index and barycentric coordinates.
pub fn corner_ball_average<F: Fn(usize, [f64; 3]) -> f64>(mesh: &TriangleMesh, f: F, corner: Point, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("ball radius must be positive".into()));
    }
    let levels = 16usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = t.map(|i| mesh.nodes[i]);
        let near = [a, b, c].iter().map(|p| dist(*p, corner)).fold(f64::INFINITY, f64::min);
        let longest = dist(a, b).max(dist(b, c)).max(dist(c, a));
        if near > rho + longest {
            continue;
        }
        let area = 0.5 * orient(a, b, c).abs();
        let sub = area / (levels * levels) as f64;
        // centroids of the uniform sub-triangulation
        for i in 0..levels {
            for j in 0..(levels - i) {
                let n = levels as f64;
                let up = [(i as f64 + 1.0 / 3.0) / n, (j as f64 + 1.0 / 3.0) / n];
                let mut cents = vec![up];
                if i + j + 1 < levels {
                    cents.push([(i as f64 + 2.0 / 3.0) / n, (j as f64 + 2.0 / 3.0) / n]);
                }
                for [l1, l2] in cents {
                    let l0 = 1.0 - l1 - l2;
                    let x = [l0 * a[0] + l1 * b[0] + l2 * c[0], l0 * a[1] + l1 * b[1] + l2 * c[1]];
                    if dist(x, corner) < rho {
                        num += f(ti, [l0, l1, l2]) * sub;
                        den += sub;
                    }
                }
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Degenerate("ball does not meet the mesh".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_conforming(m: &TriangleMesh) {
        let mut count: HashMap<(usize, usize), i32> = HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let bset: std::collections::HashSet<(usize, usize)> = m.boundary.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        for (e, c) in count {
            assert!(c == 2 || (c == 1 && bset.contains(&e)), "edge {e:?} count {c}");
        }
    }

    #[test]
    fn square_mesh_quality_and_area() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.1).unwrap();
        let q = m.quality();
        assert!(q.min_angle_deg >= 20.0, "{q:?}");
        assert!(q.max_edge <= 0.15, "{q:?}");
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert!((m.boundary_length() - 4.0).abs() < 1e-12);
        check_conforming(&m);
    }

    #[test]
    fn l_shape_and_triangle() {
        let l = PolygonDomain::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap();
        let m = mesh_polygon(&l, 0.2).unwrap();
        assert!((m.area() - 3.0).abs() < 1e-12);
        assert!(m.quality().min_angle_deg >= 20.0);
        check_conforming(&m);
        let tri = PolygonDomain::regular(3, 1.0, [0.0, 0.0]).unwrap();
        let m = mesh_polygon(&tri, 0.15).unwrap();
        assert!(m.quality().min_angle_deg >= 20.0);
        check_conforming(&m);
    }

    #[test]
    fn text_round_trip() {
        let s = SectorGeometry::new(-0.6, 0.6, 1.0).unwrap();
        let m = mesh_sector(&s, 0.2, 8).unwrap();
        assert!(m.boundary.iter().any(|e| e.tag == BoundaryTag::Arc));
        assert!(m.boundary.iter().any(|e| e.tag == BoundaryTag::GammaPlus));
        let back = TriangleMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ball_average_of_constant() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.1).unwrap();
        let v = corner_ball_average(&m, |_, _| 2.5, [0.0, 0.0], 0.3).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }
}
