use super::{navier_apply, HerglotzKernel2D, Jacobian, LameParameters, Vector, VectorField, I};
use crate::error::{invalid, Result};
use crate::geometry::SectorGeometry;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Values and Jacobians of a target field at weighted nodes of a corner sector.
#[derive(Clone, Debug)]
pub struct FitTarget {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<Vector<2>>,
    pub jacobians: Vec<Jacobian<2>>,
    /// max |L v + omega^2 v| / (omega^2 max |v|) over the nodes
    pub navier_residual: f64,
}

impl FitTarget {
    pub fn from_field(field: &dyn VectorField<2>, sector: &SectorGeometry, params: &LameParameters, n: usize) -> Self {
        let nodes = sector.nodes(n, 1, 1);
        let mut t = FitTarget { points: vec![], weights: vec![], values: vec![], jacobians: vec![], navier_residual: 0.0 };
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, (x, w)) in nodes.iter().enumerate() {
            let v = field.value(*x);
            t.points.push(*x);
            t.weights.push(*w);
            t.values.push(v);
            t.jacobians.push(field.jacobian(*x));
            scale = scale.max(v[0].norm()).max(v[1].norm());
            if k % 17 == 0 {
                let l = navier_apply(field, params, *x);
                let w2 = params.omega * params.omega;
                worst = worst.max((l[0] + v[0] * w2).norm()).max((l[1] + v[1] * w2).norm());
            }
        }
        t.navier_residual = if scale > 0.0 { worst / (params.omega.powi(2) * scale) } else { 0.0 };
        t
    }

    /// Discrete H1 norm of (target - field).
    pub fn h1_distance(&self, field: &dyn VectorField<2>) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.points.len() {
            let v = field.value(self.points[k]);
            let m = field.jacobian(self.points[k]);
            let mut s = 0.0;
            for i in 0..2 {
                s += (v[i] - self.values[k][i]).norm_sqr();
                for j in 0..2 {
                    s += (m[i][j] - self.jacobians[k][i][j]).norm_sqr();
                }
            }
            acc += self.weights[k] * s;
        }
        acc.sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.points.len() {
            let mut s = 0.0;
            for i in 0..2 {
                s += self.values[k][i].norm_sqr();
                for j in 0..2 {
                    s += self.jacobians[k][i][j].norm_sqr();
                }
            }
            acc += self.weights[k] * s;
        }
        acc.sqrt()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub nodes: usize,
    pub reg: f64,
    pub h1_error: f64,
    pub h1_relative_error: f64,
    pub norm_p: f64,
    pub norm_s: f64,
    pub condition_number: f64,
    pub ill_conditioned: bool,
    pub truncated_singular_values: usize,
    pub target_navier_residual: f64,
    pub warnings: Vec<String>,
}

const COND_LIMIT: f64 = 1e12;

/// Tikhonov-regularized least-squares Herglotz fit in the discrete H1 norm on the sector.
pub fn herglotz_fit(target: &FitTarget, params: &LameParameters, n_nodes: usize, reg: f64) -> Result<(HerglotzKernel2D, FitReport)> {
    if n_nodes < 8 {
        return invalid("fit needs at least 8 nodes");
    }
    if !(reg >= 0.0) {
        return invalid("regularization must be nonnegative");
    }
    let svd = design_svd(target, params, n_nodes);
    solve_with(target, params, n_nodes, reg, &svd)
}

struct Design {
    svd: nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: DVector<C64>,
}

fn design_svd(target: &FitTarget, params: &LameParameters, n: usize) -> Design {
    let rows = 6 * target.points.len();
    let mut a = DMatrix::<C64>::zeros(rows, 2 * n);
    let mut b = DVector::<C64>::zeros(rows);
    let pref = (-I * PI / 4.0).exp() * (2.0 * PI / n as f64);
    // the penalty reg * ||g||^2 uses the trapezoid weight; unknowns are scaled so it becomes reg * |y|^2
    let gscale = (n as f64 / (2.0 * PI)).sqrt();
    for (q, x) in target.points.iter().enumerate() {
        let sw = target.weights[q].sqrt();
        let r0 = 6 * q;
        for i in 0..2 {
            b[r0 + i] = target.values[q][i] * sw;
            for j in 0..2 {
                b[r0 + 2 + 2 * i + j] = target.jacobians[q][i][j] * sw;
            }
        }
        for m in 0..n {
            let ang = 2.0 * PI * m as f64 / n as f64;
            let d = [ang.cos(), ang.sin()];
            for (col, k, pol) in [(m, params.kp(), d), (n + m, params.ks(), [-d[1], d[0]])] {
                let e = pref * (k / params.omega).sqrt() * (I * k * (d[0] * x[0] + d[1] * x[1])).exp() * sw * gscale;
                for i in 0..2 {
                    a[(r0 + i, col)] = e * pol[i];
                    for j in 0..2 {
                        a[(r0 + 2 + 2 * i + j, col)] = e * I * k * pol[i] * d[j];
                    }
                }
            }
        }
    }
    Design { svd: a.svd(true, true), rhs: b }
}

fn solve_with(target: &FitTarget, params: &LameParameters, n: usize, reg: f64, d: &Design) -> Result<(HerglotzKernel2D, FitReport)> {
    let u = d.svd.u.as_ref().expect("left singular vectors");
    let vt = d.svd.v_t.as_ref().expect("right singular vectors");
    let sv = &d.svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-15 * smax;
    let mut y = DVector::<C64>::zeros(2 * n);
    let mut truncated = 0;
    let mut smin = f64::INFINITY;
    for (i, &s) in sv.iter().enumerate() {
        if s <= cutoff {
            truncated += 1;
            continue;
        }
        smin = smin.min(s);
        let coef = u.column(i).dotc(&d.rhs) * (s / (s * s + reg));
        y += vt.row(i).transpose().map(|z| z.conj()) * coef;
    }
    let gscale = (n as f64 / (2.0 * PI)).sqrt();
    let g: Vec<C64> = y.iter().map(|z| z * gscale).collect();
    let kernel = HerglotzKernel2D::new(g[..n].to_vec(), g[n..].to_vec())?;
    let cond = if smax > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    let field = kernel.field(params);
    let err = target.h1_distance(&field);
    let norm = target.h1_norm();
    let (np, ns) = kernel.norms();
    let mut warnings = vec![];
    if target.navier_residual > 1e-6 {
        warnings.push(format!("target Navier residual {:.3e} exceeds 1e-6", target.navier_residual));
    }
    let ill = cond > COND_LIMIT;
    if ill {
        warnings.push(format!("normal-equation condition number {cond:.3e} exceeds {COND_LIMIT:.0e}; truncated solve used"));
    }
    let report = FitReport {
        nodes: n,
        reg,
        h1_error: err,
        h1_relative_error: if norm > 0.0 { err / norm } else { err },
        norm_p: np,
        norm_s: ns,
        condition_number: cond,
        ill_conditioned: ill,
        truncated_singular_values: truncated,
        target_navier_residual: target.navier_residual,
        warnings,
    };
    Ok((kernel, report))
}

/// L-curve sweep over reg in {1e-4, 1e-5, ..., 1e-14}; returns the fit at the corner
/// (largest curvature of log residual versus log kernel norm) and every sweep report.
pub fn herglotz_fit_lcurve(target: &FitTarget, params: &LameParameters, n_nodes: usize) -> Result<(HerglotzKernel2D, FitReport, Vec<FitReport>)> {
    let d = design_svd(target, params, n_nodes);
    let mut fits = vec![];
    for e in 4..=14 {
        fits.push(solve_with(target, params, n_nodes, 10f64.powi(-e), &d)?);
    }
    let pts: Vec<(f64, f64)> = fits
        .iter()
        .map(|(_, r)| (r.h1_error.max(1e-300).ln(), (r.norm_p.hypot(r.norm_s)).max(1e-300).ln()))
        .collect();
    let mut best = fits.len() - 1;
    let mut best_curv = f64::NEG_INFINITY;
    for i in 1..pts.len() - 1 {
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        let (x2, y2) = pts[i + 1];
        let area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
        let a = (x1 - x0).hypot(y1 - y0);
        let b = (x2 - x1).hypot(y2 - y1);
        let c = (x2 - x0).hypot(y2 - y0);
        let denom = a * b * c;
        let curv = if denom > 1e-300 { 2.0 * area.abs() / denom } else { 0.0 };
        if curv > best_curv {
            best_curv = curv;
            best = i;
        }
    }
    // without a norm blow-up the curve has no corner; take the smallest error
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if best_curv < 1e-8 || hi - lo < 10f64.ln() {
        best = (0..fits.len()).min_by(|&a, &b| fits[a].1.h1_error.partial_cmp(&fits[b].1.h1_error).unwrap()).unwrap();
    }
    let reports = fits.iter().map(|(_, r)| r.clone()).collect();
    let (k, r) = fits.swap_remove(best);
    Ok((k, r, reports))
}

/// Target rates for the approximating sequence: error <= j^-gamma, ||g_p|| <= j^beta1, ||g_s|| <= j^beta2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ApproxSchedule {
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ApproxSchedule {
    pub fn new(gamma: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(gamma > 0.0 && beta1 > 0.0 && beta2 > 0.0) {
            return invalid("schedule exponents must be positive");
        }
        if !(gamma > beta1.max(beta2)) {
            return invalid("gamma must exceed max(beta1, beta2)");
        }
        Ok(Self { gamma, beta1, beta2 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleRow {
    pub j: usize,
    pub nodes: usize,
    pub error: f64,
    pub norm_p: f64,
    pub norm_s: f64,
    pub error_ok: bool,
    pub norm_p_ok: bool,
    pub norm_s_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleTable {
    pub rows: Vec<ScheduleRow>,
    /// least-squares slopes of log quantity versus log j
    pub error_exponent: f64,
    pub norm_p_exponent: f64,
    pub norm_s_exponent: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Checks each fit report (index j = 1, 2, ...) against the schedule.
pub fn schedule_check(reports: &[FitReport], schedule: &ApproxSchedule) -> Result<ScheduleTable> {
    if reports.windows(2).any(|w| w[1].nodes < w[0].nodes) {
        return invalid("node counts must be nondecreasing in j");
    }
    let rows: Vec<ScheduleRow> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let j = (i + 1) as f64;
            ScheduleRow {
                j: i + 1,
                nodes: r.nodes,
                error: r.h1_error,
                norm_p: r.norm_p,
                norm_s: r.norm_s,
                error_ok: r.h1_error <= j.powf(-schedule.gamma),
                norm_p_ok: r.norm_p <= j.powf(schedule.beta1),
                norm_s_ok: r.norm_s <= j.powf(schedule.beta2),
            }
        })
        .collect();
    let lj: Vec<f64> = rows.iter().map(|r| (r.j as f64).ln()).collect();
    let lg = |f: &dyn Fn(&ScheduleRow) -> f64| rows.iter().map(|r| f(r).max(1e-300).ln()).collect::<Vec<_>>();
    Ok(ScheduleTable {
        error_exponent: slope(&lj, &lg(&|r| r.error)),
        norm_p_exponent: slope(&lj, &lg(&|r| r.norm_p)),
        norm_s_exponent: slope(&lj, &lg(&|r| r.norm_s)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::PlaneWave;
    use super::*;

    fn setup() -> (LameParameters, SectorGeometry) {
        (LameParameters::new(1.0, 1.0, 3.0, 2).unwrap(), SectorGeometry::new(-0.6, 0.6, 2.5).unwrap())
    }

    #[test]
    fn self_consistent_fit() {
        let (p, s) = setup();
        let mut k = HerglotzKernel2D::zeros(16).unwrap();
        k.g_p[2] = C64::new(0.5, -0.2);
        k.g_s[7] = C64::new(-0.1, 0.3);
        let t = FitTarget::from_field(&k.field(&p), &s, &p, 14);
        let (_, r) = herglotz_fit(&t, &p, 16, 1e-12).unwrap();
        assert!(r.h1_error < 1e-8, "{r:?}");
    }

    #[test]
    fn zero_target_gives_zero_kernel() {
        let (p, s) = setup();
        let k = HerglotzKernel2D::zeros(16).unwrap();
        let t = FitTarget::from_field(&k.field(&p), &s, &p, 8);
        let (g, _) = herglotz_fit(&t, &p, 16, 1e-6).unwrap();
        assert!(g.g_p.iter().chain(&g.g_s).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn plane_wave_fit_concentrates() {
        let (p, s) = setup();
        let inc = 0.3;
        let w = PlaneWave::p_wave(inc, &p);
        let t = FitTarget::from_field(&w, &s, &p, 14);
        let (k, r, _) = herglotz_fit_lcurve(&t, &p, 64).unwrap();
        assert!(r.h1_relative_error < 1e-6, "{r:?}");
        let m = (0..64).max_by(|&a, &b| k.g_p[a].norm().partial_cmp(&k.g_p[b].norm()).unwrap()).unwrap();
        let ang = k.angle(m);
        let diff = ((ang - inc + PI).rem_euclid(2.0 * PI) - PI).abs();
        assert!(diff < 2.0 * PI / 64.0 * 1.01, "peak at {ang}");
    }

    #[test]
    fn residual_decreases_as_reg_shrinks() {
        let (p, s) = setup();
        let w = PlaneWave::s_wave(1.0, &p);
        let t = FitTarget::from_field(&w, &s, &p, 12);
        let (_, _, reps) = herglotz_fit_lcurve(&t, &p, 24).unwrap();
        for pair in reps.windows(2) {
            assert!(pair[1].h1_error <= pair[0].h1_error * (1.0 + 1e-6) + 1e-13);
        }
    }

    #[test]
    fn schedule_flags() {
        let sched = ApproxSchedule::new(2.0, 1.0, 1.0).unwrap();
        assert!(ApproxSchedule::new(1.0, 1.5, 0.5).is_err());
        let rep = |e: f64, n: usize| FitReport {
            nodes: n,
            reg: 0.0,
            h1_error: e,
            h1_relative_error: e,
            norm_p: 0.5,
            norm_s: 0.5,
            condition_number: 1.0,
            ill_conditioned: false,
            truncated_singular_values: 0,
            target_navier_residual: 0.0,
            warnings: vec![],
        };
        let reps: Vec<_> = (1..=6).map(|j| rep(0.1, 8 * j)).collect();
        let t = schedule_check(&reps, &sched).unwrap();
        assert!(t.rows[0].error_ok && !t.rows[5].error_ok);
        assert!(t.error_exponent.abs() < 1e-12);
    }
}
