//! Corner scattering, shape separation and rigid-motion experiments built on the volume solver.

use super::{far_field, ls_solve_system, FarFieldPattern, Incident, LsOptions, LsSystem, MediumConfig, Support};
use crate::elastic_fields::LameParameters;
use crate::error::{invalid, Result};
use crate::geometry::Point;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncidenceRow {
    pub kind: String,
    pub angle: f64,
    pub far_field_norm: f64,
    /// Smallest average of |u| over the cells within the ball around a support vertex.
    pub corner_average: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CornerScatteringReport {
    pub rows: Vec<IncidenceRow>,
    pub min_far_field_norm: f64,
    pub min_corner_average: f64,
    pub ball_radius: f64,
    pub warnings: Vec<String>,
}

fn corner_average(sys: &LsSystem, u: &[[C64; 2]], corners: &[Point], radius: f64) -> f64 {
    corners
        .iter()
        .map(|c| {
            let (mut s, mut n) = (0.0, 0usize);
            for (cell, v) in sys.cells.iter().zip(u) {
                if (cell.center[0] - c[0]).hypot(cell.center[1] - c[1]) <= radius {
                    s += (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                    n += 1;
                }
            }
            if n == 0 {
                f64::NAN
            } else {
                s / n as f64
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Solves for `n_incidences` P and S plane waves each, equispaced in angle.
pub fn corner_scattering_experiment(
    medium: &MediumConfig,
    params: &LameParameters,
    opts: &LsOptions,
    n_incidences: usize,
    n_directions: usize,
    ball_radius: f64,
) -> Result<CornerScatteringReport> {
    if n_incidences == 0 {
        return invalid("need at least one incidence direction");
    }
    let corners = match &medium.support {
        Support::Polygon { polygon } => polygon.vertices.clone(),
        Support::Disk { .. } => return invalid("corner experiment needs a polygonal support"),
    };
    let sys = LsSystem::build(medium, params, opts)?;
    let mut rows = vec![];
    let mut warnings = vec![];
    for k in 0..n_incidences {
        let angle = 2.0 * PI * k as f64 / n_incidences as f64;
        for (kind, inc) in [("p", Incident::PlaneP { angle }), ("s", Incident::PlaneS { angle })] {
            let sol = ls_solve_system(&sys, &inc, opts)?;
            for w in &sol.iteration_report.warnings {
                if !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
            let ff = far_field(&sol, n_directions)?;
            rows.push(IncidenceRow {
                kind: kind.into(),
                angle,
                far_field_norm: ff.l2_norm(),
                corner_average: corner_average(&sys, &sol.total_field, &corners, ball_radius),
                relative_residual: sol.iteration_report.relative_residual,
            });
        }
    }
    if rows.iter().any(|r| r.corner_average.is_nan()) {
        warnings.push("a corner ball holds no grid cell centre; increase the radius or refine".into());
    }
    Ok(CornerScatteringReport {
        min_far_field_norm: rows.iter().map(|r| r.far_field_norm).fold(f64::INFINITY, f64::min),
        min_corner_average: rows.iter().map(|r| r.corner_average).fold(f64::INFINITY, f64::min),
        rows,
        ball_radius,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    pub distance: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub residual_a: f64,
    pub residual_b: f64,
}

/// Far-field distance between two media under the same incidence.
pub fn uniqueness_experiment(
    a: &MediumConfig,
    b: &MediumConfig,
    incident: &Incident,
    params: &LameParameters,
    opts: &LsOptions,
    n_directions: usize,
) -> Result<SeparationReport> {
    let solve = |m: &MediumConfig| -> Result<(FarFieldPattern, f64)> {
        let sys = LsSystem::build(m, params, opts)?;
        let sol = ls_solve_system(&sys, incident, opts)?;
        Ok((far_field(&sol, n_directions)?, sol.iteration_report.relative_residual))
    };
    let (fa, ra) = solve(a)?;
    let (fb, rb) = solve(b)?;
    Ok(SeparationReport { distance: fa.distance(&fb)?, norm_a: fa.l2_norm(), norm_b: fb.l2_norm(), residual_a: ra, residual_b: rb })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub quarter_turns: i64,
    pub shift_cells: [i64; 2],
    /// max |predicted - computed| / max |computed| over far-field samples
    pub relative_deviation: f64,
}

/// Moves the medium by `quarter_turns` rotations about the origin then `shift_cells` whole cells,
/// and compares with the far field predicted from the unmoved one.
pub fn rigid_motion_check(
    medium: &MediumConfig,
    incident: &Incident,
    params: &LameParameters,
    opts: &LsOptions,
    quarter_turns: i64,
    shift_cells: [i64; 2],
    n_directions: usize,
) -> Result<EquivarianceReport> {
    if !n_directions.is_multiple_of(4) {
        return invalid("direction count must be divisible by 4");
    }
    let h = opts.spacing(params);
    let opts = LsOptions { h: Some(h), ..*opts };
    let angle = 0.5 * PI * quarter_turns as f64;
    let shift = [shift_cells[0] as f64 * h, shift_cells[1] as f64 * h];
    let (kin, dir) = match incident {
        Incident::PlaneP { angle: a } => (params.kp(), *a),
        Incident::PlaneS { angle: a } => (params.ks(), *a),
        Incident::Herglotz { .. } if shift_cells != [0, 0] => return invalid("shifted comparison needs a plane-wave incidence"),
        Incident::Herglotz { .. } => (0.0, 0.0),
    };
    let solve = |m: &MediumConfig, inc: &Incident| -> Result<FarFieldPattern> {
        let sys = LsSystem::build(m, params, &opts)?;
        far_field(&ls_solve_system(&sys, inc, &opts)?, n_directions)
    };
    let base = solve(medium, incident)?;
    let moved = solve(&medium.transformed(angle, shift), &incident.rotated(angle)?)?;
    let steps = (quarter_turns.rem_euclid(4) as usize) * n_directions / 4;
    let d = [(dir + angle).cos(), (dir + angle).sin()];
    let phase_in = C64::from_polar(1.0, kin * (d[0] * shift[0] + d[1] * shift[1]));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for m in 0..n_directions {
        let src = (m + n_directions - steps) % n_directions;
        let x = moved.direction(m);
        let xs = x[0] * shift[0] + x[1] * shift[1];
        let pp = base.u_p[src] * phase_in * C64::from_polar(1.0, -params.kp() * xs);
        let ps = base.u_s[src] * phase_in * C64::from_polar(1.0, -params.ks() * xs);
        worst = worst.max((pp - moved.u_p[m]).norm()).max((ps - moved.u_s[m]).norm());
        scale = scale.max(moved.u_p[m].norm()).max(moved.u_s[m].norm());
    }
    Ok(EquivarianceReport { quarter_turns, shift_cells, relative_deviation: if scale > 0.0 { worst / scale } else { worst } })
}
