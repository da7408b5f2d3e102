//! P1 finite elements for the coupled (v, w) transmission pencil with a shared boundary trace.

use super::linalg::{shift_invert_eigs, BandLu, SparseMatrix, Triplets, rcm_order};
use super::{EigenFunctions, TransmissionEigenpair};
use crate::elastic_fields::{BoundaryParam, LameParameters};
use crate::error::{invalid, Error, Result};
use crate::geometry::{corner_ball_average, Point, PolygonDomain, TriangleMesh};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Assembled pencil A z = omega^2 B z.
///
/// DOF layout: v at every node (2 per node), then w at interior nodes only;
/// w on the boundary reuses the v DOF.
#[derive(Clone, Debug)]
pub struct FemProblem {
    pub mesh: TriangleMesh,
    pub params: LameParameters,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub on_boundary: Vec<bool>,
    /// Interior index of each node (None on the boundary).
    pub interior_index: Vec<Option<usize>>,
    pub q_nodes: Vec<f64>,
    pub eta_zero: bool,
    /// Set when q = 1 everywhere and eta = 0: every single-field mode with v = w solves the system.
    pub degenerate: bool,
}

impl FemProblem {
    pub fn dofs(&self) -> usize {
        self.a.n
    }

    fn n_nodes(&self) -> usize {
        self.mesh.nodes.len()
    }

    pub fn v_dof(&self, node: usize, c: usize) -> usize {
        2 * node + c
    }

    pub fn w_dof(&self, node: usize, c: usize) -> usize {
        match self.interior_index[node] {
            Some(k) => 2 * self.n_nodes() + 2 * k + c,
            None => 2 * node + c,
        }
    }
}

fn gradients(p: [Point; 3]) -> Result<(f64, [[f64; 2]; 3])> {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * det.abs();
    if !(area > 1e-14) {
        return Err(Error::Degenerate("degenerate triangle in assembly".into()));
    }
    let g = std::array::from_fn(|a| {
        let (j, k) = ((a + 1) % 3, (a + 2) % 3);
        [(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det]
    });
    Ok((area, g))
}

/// Element stiffness entry for test (a, c) and trial (b, d).
fn stiffness(area: f64, g: &[[f64; 2]; 3], p: &LameParameters, a: usize, c: usize, b: usize, d: usize) -> f64 {
    let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
    let delta = if c == d { dot } else { 0.0 };
    area * (p.lambda * g[a][c] * g[b][d] + p.mu * (delta + g[a][d] * g[b][c]))
}

/// Element stiffness matrix over the 6 local DOFs (node-major).
pub fn element_stiffness(nodes: [Point; 3], params: &LameParameters) -> Result<[[f64; 6]; 6]> {
    let (area, g) = gradients(nodes)?;
    Ok(std::array::from_fn(|r| std::array::from_fn(|s| stiffness(area, &g, params, r / 2, r % 2, s / 2, s % 2))))
}

pub fn fem_te_assemble(mesh: &TriangleMesh, q: &dyn Fn(Point) -> f64, eta: &BoundaryParam, params: &LameParameters) -> Result<FemProblem> {
    let nn = mesh.nodes.len();
    let on_boundary = mesh.boundary_flags();
    let mut interior_index = vec![None; nn];
    let mut ni = 0;
    for i in 0..nn {
        if !on_boundary[i] {
            interior_index[i] = Some(ni);
            ni += 1;
        }
    }
    let q_nodes: Vec<f64> = mesh.nodes.iter().map(|&x| q(x)).collect();
    if q_nodes.iter().any(|v| !v.is_finite()) {
        return invalid("contrast must be bounded");
    }
    let n = 2 * nn + 2 * ni;
    let mut prob = FemProblem {
        mesh: mesh.clone(),
        params: *params,
        a: SparseMatrix::default(),
        b: SparseMatrix::default(),
        on_boundary,
        interior_index,
        q_nodes,
        eta_zero: eta.is_zero(),
        degenerate: false,
    };
    let mut ta = Triplets::new(n);
    let mut tb = Triplets::new(n);
    for t in &mesh.triangles {
        let p = t.map(|i| mesh.nodes[i]);
        let (area, g) = gradients(p)?;
        // q-weighted mass by edge-midpoint quadrature
        let mids: [Point; 3] = std::array::from_fn(|k| {
            let (i, j) = (k, (k + 1) % 3);
            [0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1])]
        });
        let qm = mids.map(q);
        let mq = |a: usize, b: usize| -> f64 {
            (0..3)
                .map(|k| {
                    let phi = |x: usize| if x == k || x == (k + 1) % 3 { 0.5 } else { 0.0 };
                    qm[k] * phi(a) * phi(b)
                })
                .sum::<f64>()
                * area
                / 3.0
        };
        for a in 0..3 {
            for b in 0..3 {
                let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                let mqab = mq(a, b);
                let (na, nb) = (t[a], t[b]);
                for c in 0..2 {
                    for d in 0..2 {
                        let k = stiffness(area, &g, params, a, c, b, d);
                        let rv = prob.v_dof(na, c);
                        ta.add(rv, prob.v_dof(nb, d), k);
                        if c == d {
                            tb.add(rv, prob.v_dof(nb, d), m);
                        }
                        if prob.on_boundary[na] {
                            ta.add(rv, prob.w_dof(nb, d), -k);
                            if c == d {
                                tb.add(rv, prob.w_dof(nb, d), -mqab);
                            }
                        } else {
                            let rw = prob.w_dof(na, c);
                            ta.add(rw, prob.w_dof(nb, d), k);
                            if c == d {
                                tb.add(rw, prob.w_dof(nb, d), mqab);
                            }
                        }
                    }
                }
            }
        }
    }
    // eta v on boundary rows, 3-point Gauss per edge
    if !prob.eta_zero {
        let gp = [(0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0)];
        for e in &mesh.boundary {
            let (pa, pb) = (mesh.nodes[e.a], mesh.nodes[e.b]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            for &(s, wgt) in &gp {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let et = eta.eval(x) * wgt * len;
                let phi = [(e.a, 1.0 - s), (e.b, s)];
                for &(i, fi) in &phi {
                    for &(j, fj) in &phi {
                        for c in 0..2 {
                            ta.add(prob.v_dof(i, c), prob.v_dof(j, c), et * fi * fj);
                        }
                    }
                }
            }
        }
    }
    prob.a = ta.build();
    prob.b = tb.build();
    prob.degenerate = prob.eta_zero && prob.q_nodes.iter().all(|&v| (v - 1.0).abs() < 1e-14);
    Ok(prob)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FemSolveOptions {
    pub shift: f64,
    pub krylov: usize,
    pub max_dof: usize,
    pub physical_tol: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for FemSolveOptions {
    fn default() -> Self {
        Self { shift: -1.0, krylov: 120, max_dof: 6000, physical_tol: 1e-6, threshold: 1e-6, seed: 7 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FemModeData {
    pub mesh: TriangleMesh,
    pub v: Vec<[C64; 2]>,
    pub w: Vec<[C64; 2]>,
    pub q_nodes: Vec<f64>,
    pub eta_zero: bool,
}

pub fn fem_te_solve(prob: &FemProblem, count: usize) -> Result<Vec<TransmissionEigenpair>> {
    fem_te_solve_with(prob, count, &FemSolveOptions::default())
}

/// Eigenpairs nearest the shift: physical ones first by Re omega^2, then the rest by |Im omega^2|.
pub fn fem_te_solve_with(prob: &FemProblem, count: usize, opts: &FemSolveOptions) -> Result<Vec<TransmissionEigenpair>> {
    if prob.degenerate {
        return Err(Error::Degenerate("q = 1 and eta = 0: every field with v = w solves the pencil".into()));
    }
    if prob.dofs() > opts.max_dof {
        return invalid(format!("{} DOF exceeds the cap of {}", prob.dofs(), opts.max_dof));
    }
    let zero_tol = 1e-9 * prob.a.frobenius() / prob.b.frobenius().max(1e-300);
    let mut krylov = opts.krylov;
    let mut pairs = loop {
        // the v = w harmonic-extension family sits at omega^2 = 0 with high multiplicity, so keep every converged pair
        let ritz = shift_invert_eigs(&prob.a, &prob.b, opts.shift, krylov, krylov, opts.seed)?;
        let physical = ritz.iter().filter(|p| is_physical(p.value, zero_tol, opts.physical_tol)).count();
        if physical >= count || krylov >= prob.dofs() {
            break ritz;
        }
        if krylov >= 480 {
            return Err(Error::NotConverged(format!("found {physical} of {count} physical eigenvalues with a Krylov space of {krylov}")));
        }
        krylov = (2 * krylov).min(prob.dofs());
    };
    pairs.retain(|p| p.value.norm() > zero_tol);
    let mut out: Vec<TransmissionEigenpair> = pairs
        .into_iter()
        .map(|p| build_pair(prob, p.value, p.vector, is_physical(p.value, zero_tol, opts.physical_tol), opts.threshold))
        .collect();
    out.sort_by(|x, y| {
        y.physical.cmp(&x.physical).then_with(|| {
            if x.physical {
                x.omega_sq.re.total_cmp(&y.omega_sq.re)
            } else {
                x.omega_sq.im.abs().total_cmp(&y.omega_sq.im.abs()).then(x.omega_sq.re.total_cmp(&y.omega_sq.re))
            }
        })
    });
    out.truncate(count);
    Ok(out)
}

fn is_physical(z: C64, zero_tol: f64, tol: f64) -> bool {
    z.re > zero_tol && z.im.abs() < tol * z.re
}

fn build_pair(prob: &FemProblem, value: C64, mut z: Vec<C64>, physical: bool, threshold: f64) -> TransmissionEigenpair {
    let nn = prob.n_nodes();
    // phase so the largest v entry is real, then max |v| = 1
    let (imax, vmax) = (0..2 * nn).map(|i| (i, z[i].norm())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let phase = if vmax > 0.0 { z[imax].conj() / (vmax * vmax) } else { C64::new(1.0, 0.0) };
    let vnode = |z: &[C64], i: usize| (z[2 * i].norm_sqr() + z[2 * i + 1].norm_sqr()).sqrt();
    z.iter_mut().for_each(|x| *x *= phase);
    let node_max = (0..nn).map(|i| vnode(&z, i)).fold(0.0, f64::max);
    if node_max > 0.0 {
        z.iter_mut().for_each(|x| *x /= node_max);
    }
    let az = prob.a.mul_c(&z);
    let bz = prob.b.mul_c(&z);
    let mut groups = [(0.0, 0.0); 3];
    for r in 0..prob.dofs() {
        let g = if r >= 2 * nn {
            1
        } else if prob.on_boundary[r / 2] {
            2
        } else {
            0
        };
        let res = az[r] - value * bz[r];
        groups[g].0 += res.norm_sqr();
        groups[g].1 += az[r].norm_sqr() + (value * bz[r]).norm_sqr();
    }
    let rel = |g: (f64, f64)| if g.1 > 0.0 { (g.0 / g.1).sqrt() } else { 0.0 };
    let v = (0..nn).map(|i| [z[prob.v_dof(i, 0)], z[prob.v_dof(i, 1)]]).collect();
    let w = (0..nn).map(|i| [z[prob.w_dof(i, 0)], z[prob.w_dof(i, 1)]]).collect();
    TransmissionEigenpair {
        omega: value.sqrt().re,
        omega_sq: value,
        physical,
        residual_pde_v: rel(groups[0]),
        residual_pde_w: rel(groups[1]),
        // the trace is shared, so v = w holds exactly on the boundary
        residual_dirichlet: 0.0,
        residual_traction: rel(groups[2]),
        threshold,
        functions: EigenFunctions::Fem(FemModeData {
            mesh: prob.mesh.clone(),
            v,
            w,
            q_nodes: prob.q_nodes.clone(),
            eta_zero: prob.eta_zero,
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub rho: f64,
    pub average: f64,
    pub normalized: f64,
}

fn check_corner(poly: &PolygonDomain, vertex: usize, rho_list: &[f64]) -> Result<()> {
    let n = poly.vertices.len();
    if vertex >= n {
        return invalid(format!("vertex {vertex} out of range"));
    }
    let opening = poly.interior_angles()[vertex];
    if (opening - PI).abs() < 1e-9 {
        return invalid("corner opening equals pi: no corner to analyse");
    }
    if rho_list.windows(2).any(|w| !(w[1] < w[0])) || rho_list.iter().any(|&r| !(r > 0.0)) {
        return invalid("rho list must be positive and strictly decreasing");
    }
    let x = poly.vertices[vertex];
    // the ball may only meet the two edges incident to the vertex
    let mut reach = f64::INFINITY;
    for k in 0..n {
        if k == vertex || (k + 1) % n == vertex {
            continue;
        }
        reach = reach.min(segment_distance(x, poly.vertices[k], poly.vertices[(k + 1) % n]));
    }
    if let Some(&r0) = rho_list.first() {
        if r0 >= reach {
            return Err(Error::InvalidInput(format!("ball of radius {r0} exits the corner neighbourhood (limit {reach})")));
        }
    }
    Ok(())
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

/// Ball averages of a nonnegative nodal quantity at a polygon corner, normalized by its nodal maximum.
pub fn corner_profile_nodal(mesh: &TriangleMesh, values: &[f64], poly: &PolygonDomain, vertex: usize, rho_list: &[f64]) -> Result<Vec<ProfileRow>> {
    check_corner(poly, vertex, rho_list)?;
    if values.len() != mesh.nodes.len() {
        return invalid("one value per mesh node required");
    }
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("quantity vanishes identically".into()));
    }
    let corner = poly.vertices[vertex];
    rho_list
        .iter()
        .map(|&rho| {
            let avg = corner_ball_average(mesh, |t, l| (0..3).map(|k| l[k] * values[mesh.triangles[t][k]]).sum(), corner, rho)?;
            Ok(ProfileRow { rho, average: avg, normalized: avg / peak })
        })
        .collect()
}

/// |V w| for eta = 0 pairs, |v| otherwise, averaged over shrinking balls at a corner.
pub fn corner_vanishing_profile(pair: &TransmissionEigenpair, poly: &PolygonDomain, vertex: usize, rho_list: &[f64]) -> Result<Vec<ProfileRow>> {
    let EigenFunctions::Fem(d) = &pair.functions else {
        return invalid("corner profiles need a FEM eigenpair on the polygon");
    };
    let norm = |z: &[C64; 2]| (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
    let values: Vec<f64> = if d.eta_zero {
        d.w.iter().zip(&d.q_nodes).map(|(w, q)| (q - 1.0).abs() * norm(w)).collect()
    } else {
        d.v.iter().map(norm).collect()
    };
    corner_profile_nodal(&d.mesh, &values, poly, vertex, rho_list)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub omega: f64,
    /// Smallest discrete Dirichlet eigenvalue, as a frequency.
    pub first_dirichlet: f64,
    /// Discrete Dirichlet eigenvalue nearest omega, as a frequency.
    pub nearest_dirichlet: f64,
    pub resonance_warning: bool,
    pub invertible: bool,
    pub response_norm: f64,
    pub eta_gap: f64,
    pub result: bool,
    pub warnings: Vec<String>,
}

/// Injectivity of the eta-to-response map through the interior Dirichlet problem L v + omega^2 q v = 0, v = (eta1 - eta2) u on the boundary.
pub fn eta_uniqueness_check(
    mesh: &TriangleMesh,
    q: &dyn Fn(Point) -> f64,
    params: &LameParameters,
    eta_1: f64,
    eta_2: f64,
    seed: u64,
) -> Result<UniquenessReport> {
    let prob = fem_te_assemble(mesh, q, &BoundaryParam::constant(0.0), params)?;
    let nn = mesh.nodes.len();
    let interior: Vec<usize> = (0..nn).filter(|&i| !prob.on_boundary[i]).flat_map(|i| [2 * i, 2 * i + 1]).collect();
    let boundary: Vec<usize> = (0..nn).filter(|&i| prob.on_boundary[i]).flat_map(|i| [2 * i, 2 * i + 1]).collect();
    if interior.is_empty() {
        return invalid("mesh has no interior nodes");
    }
    // single-field operators on the v block with weight q
    let (kfull, mq) = single_field(&prob);
    let kii = kfull.submatrix(&interior);
    let mii = mq.submatrix(&interior);
    let w2 = params.omega * params.omega;
    let first = shift_invert_eigs(&kii, &mii, 0.0, 1, 60, seed)?;
    let first_dirichlet = first.first().map(|p| p.value.re.max(0.0).sqrt()).ok_or_else(|| Error::NotConverged("first Dirichlet eigenvalue".into()))?;
    let near = shift_invert_eigs(&kii, &mii, w2 * (1.0 - 3e-3) - 1e-9, 1, 60, seed)?;
    let nearest_dirichlet = near.first().map(|p| p.value.re.max(0.0).sqrt()).unwrap_or(first_dirichlet);
    let mut warnings = vec![];
    let resonance_warning = (params.omega - nearest_dirichlet).abs() < 0.01 * nearest_dirichlet;
    if resonance_warning {
        warnings.push(format!("omega = {} is within 1% of the Dirichlet eigenvalue {}", params.omega, nearest_dirichlet));
    }
    if params.omega >= first_dirichlet {
        warnings.push(format!("omega = {} is not below the first Dirichlet eigenvalue {}", params.omega, first_dirichlet));
    }
    let op = SparseMatrix::combine(1.0, &kfull, -w2, &mq);
    let op_ii = op.submatrix(&interior);
    let lu = if resonance_warning { None } else { BandLu::factor(&op_ii, rcm_order(&op_ii)).ok() };
    let eta_gap = eta_1 - eta_2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = vec![0.0; 2 * nn];
    for &b in &boundary {
        full[b] = eta_gap * rng.gen_range(-1.0..1.0);
    }
    let (invertible, response_norm) = match &lu {
        Some(lu) => {
            let rhs: Vec<f64> = op.mul(&full).iter().enumerate().filter(|(i, _)| !prob.on_boundary[i / 2]).map(|(_, v)| -v).collect();
            let sol = lu.solve(&rhs);
            let trace = boundary.iter().map(|&b| full[b] * full[b]).sum::<f64>();
            let interior_norm = sol.iter().map(|v| v * v).sum::<f64>();
            (sol.iter().all(|v| v.is_finite()), (trace + interior_norm).sqrt())
        }
        None => (false, 0.0),
    };
    let result = invertible && (eta_gap == 0.0 || response_norm > 1e-12 * eta_gap.abs());
    Ok(UniquenessReport {
        omega: params.omega,
        first_dirichlet,
        nearest_dirichlet,
        resonance_warning,
        invertible,
        response_norm,
        eta_gap,
        result,
        warnings,
    })
}

/// Stiffness and q-mass restricted to the v block (all nodes).
fn single_field(prob: &FemProblem) -> (SparseMatrix, SparseMatrix) {
    let nn = prob.n_nodes();
    let mut tk = Triplets::new(2 * nn);
    let mut tm = Triplets::new(2 * nn);
    for t in &prob.mesh.triangles {
        let p = t.map(|i| prob.mesh.nodes[i]);
        let Ok((area, g)) = gradients(p) else { continue };
        let qa = t.map(|i| prob.q_nodes[i]);
        for a in 0..3 {
            for b in 0..3 {
                // lumped-average weight: q at the two nodes and the third
                let qw = (qa[a] + qa[b] + qa.iter().sum::<f64>()) / 5.0;
                let m = area / 12.0 * if a == b { 2.0 } else { 1.0 } * qw;
                for c in 0..2 {
                    for d in 0..2 {
                        tk.add(2 * t[a] + c, 2 * t[b] + d, stiffness(area, &g, &prob.params, a, c, b, d));
                    }
                    tm.add(2 * t[a] + c, 2 * t[b] + c, m);
                }
            }
        }
    }
    (tk.build(), tm.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh_polygon;

    fn params() -> LameParameters {
        LameParameters::new(1.0, 1.0, 1.0, 2).unwrap()
    }

    #[test]
    fn dof_count_and_degeneracy() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.25).unwrap();
        let nb = m.boundary_flags().iter().filter(|&&b| b).count();
        let ni = m.nodes.len() - nb;
        let p = fem_te_assemble(&m, &|_| 4.0, &BoundaryParam::constant(0.0), &params()).unwrap();
        assert_eq!(p.dofs(), 4 * ni + 2 * nb);
        assert!(!p.degenerate);
        let d = fem_te_assemble(&m, &|_| 1.0, &BoundaryParam::constant(0.0), &params()).unwrap();
        assert!(d.degenerate);
        assert!(matches!(fem_te_solve(&d, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn patch_test_linear_field() {
        let nodes = [[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]];
        let p = params();
        let k = element_stiffness(nodes, &p).unwrap();
        // u = (a x + b y, c x + d y): constant strain energy density
        let (a, b, c, d) = (0.3, -0.7, 1.1, 0.4);
        let u: Vec<f64> = nodes.iter().flat_map(|x| [a * x[0] + b * x[1], c * x[0] + d * x[1]]).collect();
        let energy: f64 = (0..6).map(|r| (0..6).map(|s| u[r] * k[r][s] * u[s]).sum::<f64>()).sum();
        let area = 0.5 * ((nodes[1][0] - nodes[0][0]) * (nodes[2][1] - nodes[0][1]) - (nodes[2][0] - nodes[0][0]) * (nodes[1][1] - nodes[0][1])).abs();
        let e12 = 0.5 * (b + c);
        let exact = area * (p.lambda * (a + d).powi(2) + 2.0 * p.mu * (a * a + d * d + 2.0 * e12 * e12));
        assert!((energy - exact).abs() < 1e-12 * exact.abs().max(1.0));
        // rigid motions are in the kernel
        let rigid: Vec<f64> = nodes.iter().flat_map(|x| [-x[1] + 0.5, x[0] - 0.2]).collect();
        for r in 0..6 {
            assert!((0..6).map(|s| k[r][s] * rigid[s]).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_profile_is_flat_and_sqrt_profile_scales() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.05).unwrap();
        let ones = vec![1.0; m.nodes.len()];
        let rows = corner_profile_nodal(&m, &ones, &sq, 0, &[0.4, 0.2, 0.1]).unwrap();
        for r in &rows {
            assert!((r.normalized - 1.0).abs() < 1e-12);
        }
        // mean of r^(1/2) over a quarter disk is 0.8 rho^(1/2)
        let root: Vec<f64> = m.nodes.iter().map(|x| x[0].hypot(x[1]).sqrt()).collect();
        for r in corner_profile_nodal(&m, &root, &sq, 0, &[0.4, 0.2]).unwrap() {
            assert!((r.average / (0.8 * r.rho.sqrt()) - 1.0).abs() < 0.03, "{r:?}");
        }
        assert!(corner_profile_nodal(&m, &ones, &sq, 0, &[1.2]).is_err());
        assert!(corner_profile_nodal(&m, &ones, &sq, 0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn eta_perturbation_is_continuous() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.12).unwrap();
        let solve = |eta: f64| fem_te_solve(&fem_te_assemble(&m, &|_| 4.0, &BoundaryParam::constant(eta), &params()).unwrap(), 2).unwrap();
        let base = solve(0.0);
        assert!(base.iter().all(|p| p.physical && p.certified()));
        let mut prev = f64::INFINITY;
        for eta in [0.5, 0.05, 0.005] {
            let change = solve(eta).iter().zip(&base).map(|(a, b)| (a.omega - b.omega).abs() / b.omega).fold(0.0, f64::max);
            assert!(change < prev, "{eta} {change}");
            prev = change;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn uniqueness_certificate_and_resonance() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.12).unwrap();
        let small = LameParameters::new(1.0, 1.0, 0.1, 2).unwrap();
        let r = eta_uniqueness_check(&m, &|_| 4.0, &small, 1.0, 2.0, 3).unwrap();
        assert!(r.result && r.invertible && !r.resonance_warning && r.response_norm > 0.0);
        assert!(eta_uniqueness_check(&m, &|_| 4.0, &small, 1.5, 1.5, 3).unwrap().result);
        let at = LameParameters::new(1.0, 1.0, r.first_dirichlet, 2).unwrap();
        let res = eta_uniqueness_check(&m, &|_| 4.0, &at, 1.0, 2.0, 3).unwrap();
        assert!(res.resonance_warning && !res.warnings.is_empty());
    }

    #[test]
    fn eigenpair_normalized_and_exported() {
        let sq = PolygonDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = mesh_polygon(&sq, 0.15).unwrap();
        let pair = &fem_te_solve(&fem_te_assemble(&m, &|_| 4.0, &BoundaryParam::constant(0.0), &params()).unwrap(), 1).unwrap()[0];
        let EigenFunctions::Fem(d) = &pair.functions else { panic!() };
        let vmax = d.v.iter().map(|z| (z[0].norm_sqr() + z[1].norm_sqr()).sqrt()).fold(0.0, f64::max);
        assert!((vmax - 1.0).abs() < 1e-12);
        let dir = std::env::temp_dir().join(format!("fem-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        pair.export(&dir, "pair").unwrap();
        let back = TriangleMesh::from_text(&std::fs::read_to_string(dir.join("pair.mesh")).unwrap()).unwrap();
        assert_eq!(back.nodes.len(), m.nodes.len());
        let csv = std::fs::read_to_string(dir.join("pair.csv")).unwrap();
        assert_eq!(csv.lines().count(), m.nodes.len() + 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
