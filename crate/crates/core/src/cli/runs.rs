use super::{csv, plot_script, Certificate, Ctx, RunOutput};
use crate::cgo::{
    bound_certificates, edge_integral_exact, sector_integral_exact, sector_integral_quadrature, sector_integral_truncated, tail_bound,
    weighted_decay_integral, CgoField,
};
use crate::eig::{
    corner_profile_nodal, corner_vanishing_profile, disk_mode_determinant, disk_smallest, eta_uniqueness_check, fem_te_assemble, fem_te_solve,
    DiskConfig, EigenFunctions, TransmissionEigenpair,
};
use crate::elastic_fields::{
    herglotz_fit, herglotz_fit_lcurve, BoundaryParam, FitTarget, HerglotzKernel2D, HerglotzKernel3D, LameParameters, PlaneWave, VectorField,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{edge_quadrature, mesh_polygon, PolygonDomain, QuadTarget, SectorGeometry};
use crate::identities::{
    corner_identity, cutoff_constants, dimension_reduce, green_residual, integration_by_parts_defect, mean_value_witness, reduced_system_residual,
    CornerInputs, CornerOptions, CutoffFunction, IdentityDomain, IdentityMode,
};
use crate::quadrature::adaptive_real;
use crate::scattering::{
    corner_scattering_experiment, far_field, far_field_remainder, loglog_slope, ls_solve, radiation_check, rigid_motion_check,
    uniqueness_experiment, Incident, LsOptions, MediumConfig,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;

pub(super) fn dispatch(name: &str, ctx: &Ctx) -> Result<RunOutput> {
    match name {
        "verify-cgo" => verify_cgo(ctx),
        "verify-herglotz" => verify_herglotz(ctx),
        "verify-identities" => verify_identities(ctx),
        "te-disk" => te_disk(ctx),
        "te-fem" => te_fem(ctx),
        "vanishing-profile" => vanishing_profile(ctx),
        "scatter" => scatter(ctx),
        "uniqueness" => uniqueness(ctx),
        "reduce-3d" => reduce_3d(ctx),
        other => invalid(format!("no runner for '{other}'")),
    }
}

fn lame(ctx: &Ctx, omega: f64, dim: usize) -> Result<LameParameters> {
    LameParameters::new(ctx.real("lambda")?, ctx.real("mu")?, omega, dim)
}

fn sector(v: &[f64]) -> Result<SectorGeometry> {
    SectorGeometry::new(v[0], v[1], v[2])
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// s-grid with ratio 1.3 starting two steps below `lo`; the first two points are dropped by the fit.
fn slope_grid(lo: f64, hi: f64) -> Vec<f64> {
    let start = lo / 1.69;
    (0..).map(|k| start * 1.3f64.powi(k)).take_while(|&s| s <= hi * (1.0 + 1e-12)).collect()
}

fn verify_cgo(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let params = lame(ctx, 1.0, 2)?;
    let h = ctx.real("h")?;
    let alpha = ctx.real("alpha")?;
    let s_list = ctx.reals("s_list")?.to_vec();
    let s_exact = ctx.real("s_exact")?;

    let mut rows = vec![];
    for [a, b] in ctx.pairs("certificate_sectors")? {
        let sec = SectorGeometry::new(a, b, h)?;
        for &s in &s_list {
            for c in bound_certificates(&sec, s, alpha, &params)? {
                let id = serde_json::to_value(c.kind)?.as_str().unwrap_or_default().to_string();
                out.certificates.push(Certificate::at_most(format!("{id} bound, sector ({a}, {b}), s = {s}"), c.ratio(), 1.0 + 1e-9));
                rows.push(vec![a.to_string(), b.to_string(), s.to_string(), id, c.computed.to_string(), c.bound.to_string(), c.ratio().to_string()]);
            }
        }
    }
    out.tables.push(("certificates.csv".into(), csv(&["theta_min", "theta_max", "s", "bound", "computed", "limit", "ratio"], rows)));

    let mut rows = vec![];
    let mut all_s = s_list.clone();
    all_s.push(s_exact);
    for [a, b] in ctx.pairs("sectors")? {
        let sec = SectorGeometry::new(a, b, h)?;
        for &s in &all_s {
            let q = sector_integral_quadrature(&sec, s)?;
            let exact = sector_integral_exact(a, b, s);
            let trunc = sector_integral_truncated(a, b, h, s);
            let tb = tail_bound(&sec, s);
            let floor = 1e-13 * exact.norm();
            out.certificates.push(Certificate::at_most(format!("sector ({a}, {b}) at s = {s} within tail bound"), (q - exact).norm(), tb + floor));
            if s == s_exact {
                out.certificates.push(Certificate::at_most(format!("sector ({a}, {b}) at s = {s} against truncated closed form"), rel(q, trunc), 1e-8));
            }
            rows.push([a, b, s, q.re, q.im, exact.re, exact.im, trunc.re, trunc.im, (q - exact).norm(), tb, rel(q, trunc)].iter().map(f64::to_string).collect());
        }
    }
    out.tables.push((
        "sector_integrals.csv".into(),
        csv(&["theta_min", "theta_max", "s", "re_quad", "im_quad", "re_exact", "im_exact", "re_truncated", "im_truncated", "abs_diff", "tail_bound", "rel_err_truncated"], rows),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst: f64 = 0.0;
    let mut rows = vec![];
    for _ in 0..20 {
        let t = rng.gen_range(-3.0..3.0);
        let s = rng.gen_range(1.0..40.0);
        let hh = rng.gen_range(0.1..2.0);
        let cgo = CgoField::new(s)?;
        let r = edge_quadrature(t, hh, |x| cgo.value(x)[0], QuadTarget { rel_tol: 1e-13, ..Default::default() });
        let e = edge_integral_exact(t, hh, s);
        let err = rel(r.value, e);
        worst = worst.max(err);
        rows.push([t, s, hh, e.re, e.im, err].iter().map(f64::to_string).collect());
    }
    out.certificates.push(Certificate::at_most("edge integral closed form, 20 random (theta, s, h)", worst, 1e-10));
    out.tables.push(("edge_integrals.csv".into(), csv(&["theta", "s", "h", "re_exact", "im_exact", "rel_err"], rows)));

    let grid = slope_grid(20.0, 200.0);
    let mut rows = vec![];
    let mut slopes = serde_json::Map::new();
    for &zeta in ctx.reals("zetas")? {
        let vals: Vec<f64> = grid.iter().map(|&s| weighted_decay_integral(zeta, s, 1.0, 1.0)).collect::<Result<_>>()?;
        let fit = loglog_slope(&grid[2..], &vals[2..]);
        out.certificates.push(Certificate::at_most(format!("decay slope for zeta = {zeta}"), (fit + 2.0 * zeta + 2.0).abs(), 0.05));
        let mut qworst: f64 = 0.0;
        for (&s, &v) in grid.iter().zip(&vals) {
            let quad = adaptive_real(|t| 2.0 * t.powf(2.0 * zeta + 1.0) * (-s * t).exp(), 0.0, 1.0, 0.0, 1e-14);
            qworst = qworst.max((quad - v).abs() / v);
            rows.push([zeta, s, v, quad].iter().map(f64::to_string).collect());
        }
        out.certificates.push(Certificate::at_most(format!("decay closed form against quadrature, zeta = {zeta}"), qworst, 1e-10));
        slopes.insert(zeta.to_string(), json!(fit));
    }
    out.details.insert("decay_slopes".into(), serde_json::Value::Object(slopes));
    out.tables.push(("decay.csv".into(), csv(&["zeta", "s", "closed_form", "quadrature"], rows)));
    out.plot = plot_script(
        "CGO decay law",
        "set logscale xy\nset xlabel 's'\nplot for [z in '0 0.5 1 2'] 'decay.csv' using 2:($1 == z+0 ? $3 : 1/0) with linespoints title 'zeta = '.z",
    );
    Ok(out)
}

fn verify_herglotz(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let p2 = lame(ctx, ctx.real("omega")?, 2)?;
    let p3 = lame(ctx, ctx.real("omega_3d")?, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let n = ctx.count("nodes")?;
    let mut g = || (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
    let (gp, gs) = (g(), g());
    let kernel = HerglotzKernel2D::new(gp, gs)?;
    let radius = ctx.real("radius")?;
    let l_max = ctx.count("l_max")?;
    let points = ctx.count("points")?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(1));
    let mut rows = vec![];
    let mut worst: f64 = 0.0;
    let mut bounds_ok = true;
    for k in 0..points {
        let r = radius * rng.gen_range(0.0f64..1.0).sqrt();
        let t = rng.gen_range(-PI..PI);
        let x = [r * t.cos(), r * t.sin()];
        let a = kernel.eval(x, &p2);
        let b = kernel.eval_series(x, &p2, l_max);
        let err = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        worst = worst.max(err);
        if k < 10 {
            for l in 0..=l_max {
                bounds_ok &= kernel.series_coefficients(x, &p2, l, false).within_bound() && kernel.series_coefficients(x, &p2, l, true).within_bound();
            }
        }
        rows.push(vec!["2".into(), x[0].to_string(), x[1].to_string(), "0".into(), err.to_string()]);
    }
    out.certificates.push(Certificate::at_most(format!("2D series (L = {l_max}) against direct quadrature, sup error"), worst, 1e-8));
    out.certificates.push(Certificate::flag("series coefficient bounds for every computed order", bounds_ok));

    let k3 = HerglotzKernel3D::from_fn(
        16,
        32,
        |d| [C64::new(d[0], 0.2), C64::new(d[2] * d[1], 0.0), C64::new(1.0, -d[0])],
        |d| [C64::new(0.0, d[1]), C64::new(d[0] - d[2], 0.0), C64::new(0.3, 0.0)],
    );
    let l3 = ctx.count("l_max_3d")?;
    let mut worst3: f64 = 0.0;
    for _ in 0..points {
        let mut x = [0.0; 3];
        loop {
            for c in x.iter_mut() {
                *c = rng.gen_range(-radius..radius);
            }
            if x.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
                break;
            }
        }
        let a = k3.eval(x, &p3);
        let b = k3.eval_series(x, &p3, l3);
        let err = (0..3).map(|i| (a[i] - b[i]).norm()).fold(0.0, f64::max);
        worst3 = worst3.max(err);
        rows.push(vec!["3".into(), x[0].to_string(), x[1].to_string(), x[2].to_string(), err.to_string()]);
    }
    out.certificates.push(Certificate::at_most(format!("3D series (L = {l3}) against direct quadrature, sup error"), worst3, 1e-7));
    out.tables.push(("series_errors.csv".into(), csv(&["dim", "x", "y", "z", "error"], rows)));

    let sec = sector(ctx.reals_n("sector", 3)?)?;
    let fit_nodes = ctx.count("fit_nodes")?;
    let target = FitTarget::from_field(&PlaneWave::p_wave(ctx.real("incidence")?, &p2), &sec, &p2, 14);
    let (_, best, curve) = herglotz_fit_lcurve(&target, &p2, fit_nodes)?;
    out.certificates.push(Certificate::at_most(format!("plane-wave H1 fit with {fit_nodes} nodes, relative error"), best.h1_relative_error, 1e-6));
    let mut own = HerglotzKernel2D::zeros(16)?;
    own.g_p[2] = C64::new(0.5, -0.2);
    own.g_s[7] = C64::new(-0.1, 0.3);
    let t2 = FitTarget::from_field(&own.field(&p2), &sec, &p2, 14);
    let (_, selfrep) = herglotz_fit(&t2, &p2, 16, 1e-12)?;
    out.certificates.push(Certificate::at_most("self-consistency fit, H1 error", selfrep.h1_error, 1e-8));
    out.warnings.extend(best.warnings.iter().cloned());
    out.details.insert("fit".into(), serde_json::to_value(&best)?);
    out.tables.push((
        "fit_lcurve.csv".into(),
        csv(&["reg", "h1_error", "h1_relative_error", "norm_p", "norm_s"], curve.iter().map(|r| [r.reg, r.h1_error, r.h1_relative_error, r.norm_p, r.norm_s].iter().map(f64::to_string).collect())),
    ));
    out.plot = plot_script("Herglotz fit L-curve", "set logscale xy\nset xlabel 'residual'\nset ylabel 'kernel norm'\nplot 'fit_lcurve.csv' using 2:($4+$5) with linespoints title 'L-curve'");
    Ok(out)
}

fn verify_identities(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let p = lame(ctx, ctx.real("omega")?, 2)?;
    let sec = sector(ctx.reals_n("sector", 3)?)?;
    let s = ctx.real("s")?;
    let mut rows = vec![];
    let mut push = |out: &mut RunOutput, name: &str, residual: f64, scale: f64, factor: f64| {
        out.certificates.push(Certificate::at_most(name, residual / scale.max(1e-300), factor));
        rows.push(vec![name.to_string(), residual.to_string(), scale.to_string()]);
    };

    let a = PlaneWave::p_wave(0.3, &p);
    let b = PlaneWave::s_wave(2.2, &p);
    let r = green_residual(&a, &b, IdentityDomain::Sector(&sec), &p)?;
    push(&mut out, "Green formula, P and S plane waves on the sector", r.residual, r.scale, 1e-7);
    let poly = PolygonDomain::new(vec![[0.0, 0.0], [1.0, 0.2], [0.6, 1.1], [-0.2, 0.7]])?;
    let r = green_residual(&a, &b, IdentityDomain::Polygon(&poly), &p)?;
    push(&mut out, "Green formula, plane waves on a quadrilateral", r.residual, r.scale, 1e-7);
    let g: Vec<C64> = (0..16).map(|m| C64::new((m as f64 * 0.3).cos(), 0.1 * m as f64)).collect();
    let ker = HerglotzKernel2D::new(g.clone(), g.iter().map(|z| z * 0.5).collect())?;
    let cgo = CgoField::new(s)?;
    let r = green_residual(&cgo, &ker.field(&p), IdentityDomain::Sector(&sec), &p)?;
    push(&mut out, "Green formula, CGO solution against a Herglotz wave", r.residual, r.scale, 1e-7);

    let q = ctx.real("q")?;
    let v = PlaneWave::s_wave(1.1, &p);
    let mut w = PlaneWave::p_wave(-0.4, &p);
    w.k *= q.sqrt();
    let vj = PlaneWave::p_wave(2.0, &p);
    let qf = move |_: [f64; 2]| q;
    let inp = CornerInputs { v: &v, w: &w, vj: &vj, q: &qf, eta: BoundaryParam::constant(ctx.real("eta")?), s, sector: sec, params: p };
    let rep = corner_identity(&inp, &CornerOptions::default())?;
    push(&mut out, "corner identity, boundary-explicit form, independent plane waves", rep.residual, rep.term_scale, 1e-7);

    // eigenpair inputs: disk transmission eigenfunctions on a sector at the disk centre
    let disk_q = ctx.real("disk_q")?;
    let cfg = DiskConfig::new(1.0, disk_q, p)?;
    let pair = disk_smallest(&cfg, 3, 6.0, 400)?;
    let EigenFunctions::Disk(d) = &pair.functions else { return invalid("disk solver returned a non-disk pair") };
    let es = sector(ctx.reals_n("eigen_sector", 3)?)?;
    let target = FitTarget::from_field(&d.v, &es, &d.params, 14);
    let (fit, fit_rep, _) = herglotz_fit_lcurve(&target, &d.params, 64)?;
    let field = fit.field(&d.params);
    let qd = move |_: [f64; 2]| disk_q;
    let inp = CornerInputs { v: &d.v, w: &d.w, vj: &field, q: &qd, eta: BoundaryParam::constant(0.0), s, sector: es, params: d.params };
    let rep = corner_identity(&inp, &CornerOptions { mode: IdentityMode::TransmissionConditioned, ..Default::default() })?;
    push(&mut out, "corner identity, boundary-explicit form, disk eigenpair", rep.boundary_explicit_residual, rep.term_scale, 1e-7);
    out.certificates.push(Certificate::at_most(
        "corner identity, transmission-conditioned residual over boundary certificate, disk eigenpair",
        rep.transmission_residual / rep.boundary_certificate.max(1e-300),
        10.0,
    ));
    out.warnings.extend(rep.warnings.iter().cloned());
    out.details.insert("eigen_corner_identity".into(), serde_json::to_value(&rep)?);
    out.details.insert("eigen_fit_relative_error".into(), json!(fit_rep.h1_relative_error));
    out.details.insert("eigen_omega".into(), json!(pair.omega));
    out.tables.push(("identities.csv".into(), csv(&["check", "residual", "scale"], rows)));
    out.plot = plot_script("identity residuals", "set logscale y\nset style data histograms\nplot 'identities.csv' using ($2/$3):xtic(1) title 'relative residual'");
    Ok(out)
}

fn eigen_rows(pairs: &[TransmissionEigenpair]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, e)| vec![k.to_string(), e.omega_sq.re.to_string(), e.omega_sq.im.to_string(), e.omega.to_string(), e.physical.to_string(), e.max_residual().to_string(), e.certified().to_string()])
        .collect()
}

const EIGEN_HEADER: [&str; 7] = ["index", "re_omega_sq", "im_omega_sq", "omega", "physical", "max_residual", "certified"];

fn te_disk(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let cfg = DiskConfig::new(ctx.real("radius")?, ctx.real("q")?, lame(ctx, 1.0, 2)?)?;
    let n_max = ctx.int("n_max")? as i32;
    let omega_max = ctx.real("omega_max")?;
    let steps = ctx.count("scan_steps")?;
    let pair = disk_smallest(&cfg, n_max, omega_max, steps)?;
    let EigenFunctions::Disk(d) = &pair.functions else { return invalid("disk solver returned a non-disk pair") };
    out.certificates.push(Certificate::at_most("scaled determinant at the root", d.determinant.abs(), 1e-10));
    for (name, r) in [("PDE residual of v", pair.residual_pde_v), ("PDE residual of w", pair.residual_pde_w), ("Dirichlet residual", pair.residual_dirichlet), ("traction residual", pair.residual_traction)] {
        out.certificates.push(Certificate::at_most(name, r, pair.threshold));
    }
    let coarse = d.residuals(64, 200);
    let fine = d.residuals(128, 800);
    let stable = coarse.iter().zip(&fine).all(|(c, f)| *f <= 2.0 * c + 1e-12);
    out.certificates.push(Certificate::flag("residuals stable under 2x collocation refinement", stable));
    out.details.insert("eigenpair".into(), pair.metadata());
    out.details.insert("refined_residuals".into(), json!(fine));
    pair.export(ctx.dir, "eigenpair")?;
    let mut rows = vec![];
    let mut header = vec!["omega".to_string()];
    header.extend((0..=n_max).map(|n| format!("det_n{n}")));
    for k in 1..=steps {
        let om = omega_max * k as f64 / steps as f64;
        let mut row = vec![om.to_string()];
        for n in 0..=n_max {
            row.push(disk_mode_determinant(n, om, &cfg)?.to_string());
        }
        rows.push(row);
    }
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.tables.push(("determinant_scan.csv".into(), csv(&h, rows)));
    out.plot = plot_script(
        "disk mode determinants",
        &format!("set xlabel 'omega'\nset yrange [-1:1]\nplot for [c=2:{}] 'determinant_scan.csv' using 1:c with lines", n_max + 2),
    );
    Ok(out)
}

fn shape_polygon(ctx: &Ctx) -> Result<PolygonDomain> {
    match ctx.text("shape")? {
        "regular" => PolygonDomain::regular(ctx.count("sides")?, ctx.real("radius")?, [0.0, 0.0]),
        "square" => {
            let s = ctx.real("side")?;
            PolygonDomain::rectangle(0.0, 0.0, s, s)
        }
        "polygon" => PolygonDomain::new(ctx.pairs("vertices")?),
        other => invalid(format!("unknown shape '{other}' (regular | square | polygon)")),
    }
}

fn first_physical(pairs: &[TransmissionEigenpair]) -> Option<&TransmissionEigenpair> {
    pairs.iter().find(|e| e.physical)
}

fn te_fem(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let params = lame(ctx, 1.0, 2)?;
    let poly = shape_polygon(ctx)?;
    let h = ctx.real("h")?;
    let q = ctx.real("q")?;
    let eta = ctx.real("eta")?;
    let count = ctx.count("count")?;
    let solve = |hh: f64| -> Result<Vec<TransmissionEigenpair>> {
        let mesh = mesh_polygon(&poly, hh)?;
        fem_te_solve(&fem_te_assemble(&mesh, &|_| q, &BoundaryParam::constant(eta), &params)?, count)
    };
    let pairs = solve(h)?;
    let first = first_physical(&pairs);
    out.certificates.push(Certificate::flag("certified physical eigenpair found", first.is_some_and(|e| e.certified())));
    out.tables.push(("eigenvalues.csv".into(), csv(&EIGEN_HEADER, eigen_rows(&pairs))));
    for (k, e) in pairs.iter().enumerate() {
        e.export(ctx.dir, &format!("eigenpair_{k}"))?;
    }
    let oracle = if ctx.text("shape")? == "regular" && eta == 0.0 {
        let om = first.map_or(6.0, |e| e.omega);
        Some(disk_smallest(&DiskConfig::new(ctx.real("radius")?, q, params)?, 4, 1.5 * om, 600)?.omega)
    } else {
        None
    };
    let mut rows = vec![vec![h.to_string(), first.map_or(f64::NAN, |e| e.omega).to_string()]];
    if let (Some(e), Some(o)) = (first, oracle) {
        out.certificates.push(Certificate::at_most("relative distance to the disk oracle", (e.omega - o).abs() / o, 0.05));
        out.details.insert("disk_oracle".into(), json!(o));
    }
    if ctx.flag("refine")? {
        let hf = h / 2f64.sqrt();
        let fine = solve(hf)?;
        let ff = first_physical(&fine);
        rows.push(vec![hf.to_string(), ff.map_or(f64::NAN, |e| e.omega).to_string()]);
        if let (Some(c), Some(f)) = (first, ff) {
            match oracle {
                Some(o) => out.certificates.push(Certificate::flag("refinement moves toward the disk oracle", (f.omega - o).abs() <= (c.omega - o).abs())),
                None => out.certificates.push(Certificate::at_most("relative change under refinement", (f.omega - c.omega).abs() / f.omega, 0.05)),
            }
        } else {
            out.certificates.push(Certificate::flag("physical eigenpair on the refined mesh", false));
        }
    }
    out.tables.push(("refinement.csv".into(), csv(&["h", "omega"], rows)));
    let om_check = ctx.real("eta_check_omega")?;
    if om_check > 0.0 {
        let [e1, e2] = <[f64; 2]>::try_from(ctx.reals_n("eta_pair", 2)?).map_err(|_| Error::InvalidInput("eta_pair".into()))?;
        let mesh = mesh_polygon(&poly, h)?;
        let rep = eta_uniqueness_check(&mesh, &|_| q, &lame(ctx, om_check, 2)?, e1, e2, ctx.seed)?;
        out.certificates.push(Certificate::flag(format!("eta uniqueness certificate at omega = {om_check}"), rep.result));
        out.warnings.extend(rep.warnings.iter().cloned());
        out.details.insert("eta_uniqueness".into(), serde_json::to_value(&rep)?);
    }
    out.details.insert("eigenpairs".into(), json!(pairs.iter().map(|e| e.metadata()).collect::<Vec<_>>()));
    out.plot = plot_script("FEM transmission eigenvalues", "set xlabel 'Re omega^2'\nset ylabel 'Im omega^2'\nplot 'eigenvalues.csv' using 2:3 with points pt 7 title 'omega^2'");
    Ok(out)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn vanishing_profile(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let params = lame(ctx, 1.0, 2)?;
    let side = ctx.real("side")?;
    let poly = PolygonDomain::rectangle(0.0, 0.0, side, side)?;
    let q = ctx.real("q")?;
    let mesh = mesh_polygon(&poly, ctx.real("h")?)?;
    let pairs = fem_te_solve(&fem_te_assemble(&mesh, &|_| q, &BoundaryParam::constant(0.0), &params)?, 4)?;
    let pair = first_physical(&pairs).ok_or_else(|| Error::NotConverged("no physical eigenpair on the square".into()))?;
    out.certificates.push(Certificate::flag("eigenpair certified", pair.certified()));
    let vertex = ctx.count("vertex")?;
    let rho = ctx.reals("rho_list")?;
    if rho.len() < 3 {
        return invalid("rho_list needs at least three radii");
    }
    let prof = corner_vanishing_profile(pair, &poly, vertex, rho)?;
    let norm: Vec<f64> = prof.iter().map(|r| r.normalized).collect();
    out.certificates.push(Certificate::flag("normalized averages strictly decrease over the three smallest radii", strictly_decreasing(&norm[norm.len() - 3..])));
    let EigenFunctions::Fem(d) = &pair.functions else { return invalid("expected a FEM eigenpair") };
    let control = corner_profile_nodal(&d.mesh, &vec![1.0; d.mesh.nodes.len()], &poly, vertex, rho)?;
    let spread = control.iter().map(|r| (r.normalized - 1.0).abs()).fold(0.0, f64::max);
    out.certificates.push(Certificate::at_most("constant control shows no decrease (max deviation from 1)", spread, 1e-9));
    out.details.insert("omega".into(), json!(pair.omega));
    out.details.insert("profile".into(), serde_json::to_value(&prof)?);
    out.tables.push((
        "profile.csv".into(),
        csv(&["rho", "average", "normalized", "control_normalized"], prof.iter().zip(&control).map(|(r, c)| [r.rho, r.average, r.normalized, c.normalized].iter().map(f64::to_string).collect())),
    ));
    out.plot = plot_script("corner vanishing profile", "set logscale xy\nset xlabel 'rho'\nplot 'profile.csv' using 1:3 with linespoints title '|V w| average', '' using 1:4 with linespoints title 'constant control'");
    Ok(out)
}

fn triangle(side: f64, center: [f64; 2]) -> Result<PolygonDomain> {
    PolygonDomain::regular(3, side / 3f64.sqrt(), center)
}

fn square(side: f64, center: [f64; 2]) -> Result<PolygonDomain> {
    let a = 0.5 * side;
    PolygonDomain::rectangle(center[0] - a, center[1] - a, center[0] + a, center[1] + a)
}

fn incidence(ctx: &Ctx, angle: f64) -> Result<Incident> {
    match ctx.text("incidence")? {
        "p" => Ok(Incident::PlaneP { angle }),
        "s" => Ok(Incident::PlaneS { angle }),
        other => invalid(format!("unknown incidence '{other}' (p | s)")),
    }
}

fn scatter(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let params = lame(ctx, ctx.real("omega")?, 2)?;
    let size = ctx.real("size")?;
    let off = ctx.reals_n("offset", 2)?;
    let c = [off[0], off[1]];
    let v0 = ctx.real("v0")?;
    let medium = match ctx.text("shape")? {
        "triangle" => MediumConfig::polygon(triangle(size, c)?, v0)?,
        "square" => MediumConfig::polygon(square(size, c)?, v0)?,
        "disk" => MediumConfig::disk(c, size, v0)?,
        "polygon" => MediumConfig::polygon(PolygonDomain::new(ctx.pairs("vertices")?.into_iter().map(|p| [p[0] + c[0], p[1] + c[1]]).collect())?, v0)?,
        other => return invalid(format!("unknown shape '{other}' (triangle | square | disk | polygon)")),
    };
    let opts = LsOptions { points_per_wavelength: ctx.real("points_per_wavelength")?, ..Default::default() };
    let inc = incidence(ctx, ctx.real("angle")?)?;
    let sol = ls_solve(&medium, &inc, &params, &opts)?;
    let rep = &sol.iteration_report;
    out.certificates.push(Certificate::at_most("solver relative residual", rep.relative_residual, opts.tol));
    out.warnings.extend(rep.warnings.iter().cloned());
    let m = ctx.count("directions")?;
    let ff = far_field(&sol, m)?;
    out.tables.push(("far_field.csv".into(), ff.to_csv()));
    out.details.insert("far_field_norm".into(), json!(ff.l2_norm()));
    out.details.insert("iteration_report".into(), serde_json::to_value(rep)?);

    let lam = 2.0 * PI / params.kp().max(params.ks());
    let radii: Vec<f64> = ctx.reals("radii")?.iter().map(|r| r * lam).collect();
    let rad = radiation_check(&sol, &radii, 64)?;
    out.certificates.push(Certificate::flag("compressional radiation residual decreasing over radii", rad.p_decreasing));
    out.certificates.push(Certificate::flag("shear radiation residual decreasing over radii", rad.s_decreasing));
    out.tables.push((
        "radiation.csv".into(),
        csv(&["radius", "p_residual", "s_residual"], rad.rows.iter().map(|r| [r.radius, r.p_residual, r.s_residual].iter().map(f64::to_string).collect())),
    ));
    out.details.insert("radiation".into(), serde_json::to_value(&rad)?);

    if medium.is_trivial() {
        out.warnings.push("V = 0: the scattered field and far field vanish identically".into());
    } else {
        let big: Vec<f64> = (0..8).map(|k| 20.0 * lam * 10f64.powf(k as f64 / 7.0)).collect();
        let dir = (m / 6).max(1);
        let rem: Vec<f64> = big.iter().map(|&r| far_field_remainder(&sol, &ff, dir, r)).collect::<Result<_>>()?;
        let slope = loglog_slope(&big, &rem);
        out.certificates.push(Certificate::at_most("far-field remainder slope over R in [20, 200] wavelengths, |slope + 1.5|", (slope + 1.5).abs(), 0.1));
        out.details.insert("far_field_remainder_slope".into(), json!(slope));
        let n_inc = ctx.count("incidences")?;
        if n_inc > 0 && ctx.text("shape")? != "disk" {
            let cs = corner_scattering_experiment(&medium, &params, &opts, n_inc, m, ctx.real("ball_radius")?)?;
            out.certificates.push(Certificate::at_least(format!("minimum far-field norm over {n_inc} P and S incidences"), cs.min_far_field_norm, 1e-3));
            out.certificates.push(Certificate::at_least("minimum corner ball average of |u|", cs.min_corner_average, 1e-12));
            out.warnings.extend(cs.warnings.iter().cloned());
            out.tables.push((
                "corner_scan.csv".into(),
                csv(&["kind", "angle", "far_field_norm", "corner_average", "relative_residual"], cs.rows.iter().map(|r| vec![r.kind.clone(), r.angle.to_string(), r.far_field_norm.to_string(), r.corner_average.to_string(), r.relative_residual.to_string()])),
            ));
        }
    }
    out.plot = plot_script("far-field pattern", "set xlabel 'angle'\nplot 'far_field.csv' using 1:(sqrt($2**2+$3**2)) with lines title '|u_p|', '' using 1:(sqrt($4**2+$5**2)) with lines title '|u_s|'");
    Ok(out)
}

fn named_polygon(name: &str, area: f64) -> Result<PolygonDomain> {
    let c = [0.013, -0.021];
    match name {
        "square" => square(area.sqrt(), c),
        "triangle" => triangle((4.0 * area / 3f64.sqrt()).sqrt(), c),
        other => invalid(format!("unknown shape '{other}' (square | triangle)")),
    }
}

fn uniqueness(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let params = lame(ctx, ctx.real("omega")?, 2)?;
    let area = ctx.real("area")?;
    let v0 = ctx.real("v0")?;
    let (na, nb) = (ctx.text("shape_a")?, ctx.text("shape_b")?);
    let a = MediumConfig::polygon(named_polygon(na, area)?, v0)?;
    let b = MediumConfig::polygon(named_polygon(nb, area)?, v0)?;
    let base = LsOptions { points_per_wavelength: ctx.real("points_per_wavelength")?, ..Default::default() };
    let opts = LsOptions { h: Some(base.spacing(&params)), ..base };
    let inc = incidence(ctx, ctx.real("angle")?)?;
    let m = ctx.count("directions")?;
    let sep = uniqueness_experiment(&a, &b, &inc, &params, &opts, m)?;
    if na == nb {
        out.certificates.push(Certificate::at_most("identical polygons: distance over 2 x solver residual", sep.distance, 2.0 * sep.residual_a.max(sep.residual_b)));
    } else {
        out.certificates.push(Certificate::at_least(format!("{na} against {nb}: far-field distance"), sep.distance, 1e-3));
    }
    let turns = ctx.int("quarter_turns")?;
    let sc = ctx.reals_n("shift_cells", 2)?;
    let cells = [sc[0].round() as i64, sc[1].round() as i64];
    let h = opts.h.unwrap_or_default();
    let angle = 0.5 * PI * turns as f64;
    let shift = [cells[0] as f64 * h, cells[1] as f64 * h];
    let moved = uniqueness_experiment(&a.transformed(angle, shift), &b.transformed(angle, shift), &inc.rotated(angle)?, &params, &opts, m)?;
    let change = if sep.distance > 0.0 { (moved.distance - sep.distance).abs() / sep.distance } else { moved.distance };
    out.certificates.push(Certificate::at_most("distance change under a rigid motion of both media and the incidence", change, 1e-6));
    let eq = rigid_motion_check(&a, &inc, &params, &opts, turns, cells, m)?;
    out.certificates.push(Certificate::at_most("far-field equivariance under the rigid motion", eq.relative_deviation, 1e-6));
    out.details.insert("separation".into(), serde_json::to_value(&sep)?);
    out.details.insert("moved_separation".into(), serde_json::to_value(&moved)?);
    out.details.insert("equivariance".into(), serde_json::to_value(&eq)?);
    let fa = far_field(&ls_solve(&a, &inc, &params, &opts)?, m)?;
    let fb = far_field(&ls_solve(&b, &inc, &params, &opts)?, m)?;
    out.tables.push(("far_field_a.csv".into(), fa.to_csv()));
    out.tables.push(("far_field_b.csv".into(), fb.to_csv()));
    out.plot = plot_script("far fields of the two media", "set xlabel 'angle'\nplot 'far_field_a.csv' using 1:(sqrt($2**2+$3**2+$4**2+$5**2)) with lines title 'medium a', 'far_field_b.csv' using 1:(sqrt($2**2+$3**2+$4**2+$5**2)) with lines title 'medium b'");
    Ok(out)
}

fn reduce_3d(ctx: &Ctx) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let p3 = lame(ctx, ctx.real("omega")?, 3)?;
    let cv = ctx.reals_n("cutoff", 3)?;
    let cut = CutoffFunction::new(cv[0], cv[1], cv[2])?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let ca = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let cb = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let f = |x: [f64; 2], t: f64| [C64::from_polar(1.0, x[0] + 2.0 * t), C64::new(x[1] * t * t, t)];
    let g = |x: [f64; 2], t: f64| [C64::new((x[0] * t).cos(), 0.0), C64::from_polar(1.0 + t, x[1])];
    let rf = dimension_reduce(f, cut);
    let rg = dimension_reduce(g, cut);
    let rfg = dimension_reduce(move |x, t| {
        let (a, b) = (f(x, t), g(x, t));
        [a[0] * ca + b[0] * cb, a[1] * ca + b[1] * cb]
    }, cut);
    let mut lin: f64 = 0.0;
    for x in [[0.1, 0.2], [-0.7, 0.4], [1.5, -2.0]] {
        let (u, a, b) = (rfg(x), rf(x), rg(x));
        for i in 0..2 {
            lin = lin.max((u[i] - a[i] * ca - b[i] * cb).norm() / u[i].norm().max(1.0));
        }
    }
    out.certificates.push(Certificate::at_most("linearity of the reduction", lin, 1e-12));
    let ibp = integration_by_parts_defect(|t| C64::from_polar(1.0 + t * t, 3.0 * t), |t| C64::from_polar(1.0, 3.0 * t) * C64::new(2.0 * t, 3.0 * (1.0 + t * t)), &cut);
    out.certificates.push(Certificate::at_most("integration by parts in the edge variable", ibp, 1e-10));

    let mut rows = vec![];
    let check_stated = ctx.flag("check_stated_bound")?;
    let l_max = ctx.int("l_max")?;
    let mut mv_rows = vec![];
    for &r in ctx.reals("x_prime")? {
        let k = cutoff_constants(&cut, r)?;
        out.certificates.push(Certificate::at_most(format!("substitution identity at |x'| = {r}"), k.substitution_defect, 1e-10));
        out.certificates.push(Certificate::flag(format!("sec^3 C / |x'| bound at |x'| = {r}"), k.corrected_bound_holds));
        if check_stated {
            out.certificates.push(Certificate::flag(format!("sec^3 C bound as stated at |x'| = {r}"), k.stated_bound_holds));
        }
        if !k.stated_bound_holds {
            out.warnings.push(format!("stated sec^3 bound fails at |x'| = {r}: C1 = {} exceeds {}", k.c1_phi, k.stated_bound));
        }
        rows.push([r, k.c_phi, k.c1_phi, k.substitution_defect, k.stated_bound, f64::from(u8::from(k.stated_bound_holds)), k.corrected_bound, f64::from(u8::from(k.corrected_bound_holds))].iter().map(f64::to_string).collect());
        for l in 1..=l_max.max(1) as u32 {
            let w = mean_value_witness(&cut, r, l)?;
            out.certificates.push(Certificate::flag(format!("mean-value witness in range, l = {l}, |x'| = {r}"), w.in_range));
            mv_rows.push(vec![r.to_string(), l.to_string(), w.ratio.to_string(), w.lower.to_string(), w.upper.to_string(), w.witness.map_or("nan".into(), |x| x.to_string())]);
        }
    }
    out.tables.push(("cutoff_constants.csv".into(), csv(&["x_prime", "c_phi", "c1_phi", "substitution_defect", "stated_bound", "stated_holds", "corrected_bound", "corrected_holds"], rows)));
    out.tables.push(("mean_value.csv".into(), csv(&["x_prime", "l", "ratio", "lower", "upper", "witness"], mv_rows)));

    let dir = [0.48, -0.6, 0.64];
    let pw = PlaneWave::<3> { pol: dir.map(|d| C64::new(d, 0.0)), dir, k: p3.kp() };
    let sw = PlaneWave::<3> { pol: [C64::new(0.8, 0.0), C64::new(0.64, 0.0), C64::new(0.0, 0.0)], dir, k: p3.ks() };
    let mut worst: f64 = 0.0;
    for fld in [&pw as &dyn VectorField<3>, &sw] {
        for xp in [[0.1, 0.2], [-0.4, 0.3], [0.7, -0.5]] {
            let r = reduced_system_residual(fld, &cut, &p3, xp);
            worst = worst.max(r.residual / r.scale.max(1e-300));
        }
    }
    out.certificates.push(Certificate::at_most("reduced system residual on 3D plane waves, relative", worst, 1e-6));
    out.plot = plot_script("cutoff constants", "set logscale xy\nset xlabel '|x prime|'\nplot 'cutoff_constants.csv' using 1:3 with linespoints title 'C1', '' using 1:5 with linespoints title 'stated bound', '' using 1:7 with linespoints title 'corrected bound'");
    Ok(out)
}
