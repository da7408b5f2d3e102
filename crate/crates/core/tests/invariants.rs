use elastic_corner::cgo::{edge_integral_exact, sector_integral_exact, sector_integral_truncated, CgoField};
use elastic_corner::cli::ExperimentConfig;
use elastic_corner::elastic_fields::{navier_apply, HerglotzKernel2D, LameParameters, PlaneWave, VectorField};
use elastic_corner::geometry::PolygonDomain;
use elastic_corner::scattering::green_tensor_2d;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn lame() -> impl Strategy<Value = LameParameters> {
    (0.2f64..3.0, 0.2f64..3.0, 0.5f64..6.0).prop_map(|(l, m, w)| LameParameters::new(l, m, w, 2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sector_integral_is_additive_in_angle(a in -1.5f64..-0.1, b in -0.1f64..0.4, c in 0.4f64..1.5, s in 1.0f64..50.0) {
        let whole = sector_integral_exact(a, c, s);
        let parts = sector_integral_exact(a, b, s) + sector_integral_exact(b, c, s);
        prop_assert!((whole - parts).norm() <= 1e-13 * whole.norm().max(1e-300) + 1e-300);
    }

    #[test]
    fn sector_integral_scales_as_inverse_fourth_power(a in -1.5f64..0.0, b in 0.01f64..1.5, s in 1.0f64..40.0, t in 1.1f64..4.0) {
        let r = sector_integral_exact(a, b, s * t) * t.powi(4);
        let base = sector_integral_exact(a, b, s);
        prop_assert!((r - base).norm() <= 1e-12 * base.norm());
    }

    #[test]
    fn truncated_sector_tends_to_infinite_sector(a in -1.2f64..0.0, b in 0.05f64..1.2, s in 60.0f64..120.0) {
        let exact = sector_integral_exact(a, b, s);
        let trunc = sector_integral_truncated(a, b, 1.0, s);
        prop_assert!((trunc - exact).norm() <= 1e-6 * exact.norm());
    }

    #[test]
    fn edge_integral_vanishes_as_length_shrinks(theta in -3.0f64..3.0, s in 1.0f64..20.0) {
        let v = edge_integral_exact(theta, 1e-10, s);
        prop_assert!(v.norm() < 1e-8);
    }

    #[test]
    fn cgo_solution_is_annihilated_by_navier(s in 0.5f64..10.0, r in 0.05f64..2.0, t in -2.5f64..2.5) {
        let p = LameParameters::new(1.3, 0.7, 1.0, 2).unwrap();
        let u = CgoField::new(s).unwrap();
        let x = [r * t.cos(), r * t.sin()];
        let n = navier_apply(&u, &p, x);
        let scale = u.value(x)[0].norm() * s * s / r;
        prop_assert!(n[0].norm() + n[1].norm() <= 1e-8 * scale.max(1e-300));
    }

    #[test]
    fn green_tensor_symmetric_even_and_rotation_covariant(p in lame(), r in 0.05f64..5.0, t in -3.0f64..3.0, phi in -3.0f64..3.0) {
        let d = [r * t.cos(), r * t.sin()];
        let g = green_tensor_2d(d, [0.0, 0.0], &p).unwrap();
        let gm = green_tensor_2d([0.0, 0.0], d, &p).unwrap();
        let scale = g.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((g[0][1] - g[1][0]).norm() <= 1e-12 * scale);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((g[i][j] - gm[i][j]).norm() <= 1e-12 * scale);
            }
        }
        let (c, s) = (phi.cos(), phi.sin());
        let rot = [[c, -s], [s, c]];
        let dr = [c * d[0] - s * d[1], s * d[0] + c * d[1]];
        let gr = green_tensor_2d(dr, [0.0, 0.0], &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut e = C64::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        e += rot[i][k] * g[k][l] * rot[j][l];
                    }
                }
                prop_assert!((gr[i][j] - e).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn plane_waves_solve_the_lame_system(p in lame(), angle in -3.0f64..3.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        for w in [PlaneWave::p_wave(angle, &p), PlaneWave::s_wave(angle, &p)] {
            let n = navier_apply(&w, &p, [x, y]);
            let u = w.value([x, y]);
            let res = n[0] + p.omega * p.omega * u[0];
            let res1 = n[1] + p.omega * p.omega * u[1];
            prop_assert!(res.norm() + res1.norm() <= 1e-5 * (1.0 + p.omega * p.omega));
        }
    }

    #[test]
    fn herglotz_series_matches_direct_evaluation(seed in 0u64..1000, x in -0.7f64..0.7, y in -0.7f64..0.7) {
        let p = LameParameters::new(1.0, 1.0, 2.0, 2).unwrap();
        let g: Vec<C64> = (0..12).map(|m| C64::from_polar(1.0, (seed as f64 + m as f64 * 1.7).sin())).collect();
        let k = HerglotzKernel2D::new(g.clone(), g.iter().rev().cloned().collect()).unwrap();
        let a = k.eval([x, y], &p);
        let b = k.eval_series([x, y], &p, 40);
        prop_assert!((a[0] - b[0]).norm() + (a[1] - b[1]).norm() < 1e-10);
    }

    #[test]
    fn rigid_motions_preserve_polygon_area(n in 3usize..9, r in 0.1f64..3.0, angle in -3.0f64..3.0, sx in -5.0f64..5.0, sy in -5.0f64..5.0) {
        let poly = PolygonDomain::regular(n, r, [0.1, -0.2]).unwrap();
        let moved = poly.transformed(angle, [sx, sy]);
        prop_assert!((poly.area() - moved.area()).abs() <= 1e-12 * poly.area());
    }

    #[test]
    fn config_text_round_trips(radius in 0.1f64..5.0, q in 1.5f64..9.0, seed in 0u64..u64::MAX) {
        let text = format!("experiment = te-disk\nseed = {seed}\nradius = {radius}\nq = {q}\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg.clone());
        prop_assert_eq!(ExperimentConfig::parse(&cfg.manifest().to_string()).unwrap(), cfg);
    }
}
