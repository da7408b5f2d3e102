//! Transmission eigenpairs: separable disk modes, P1 finite elements on polygons, and corner diagnostics.

pub mod disk;
pub mod fem;
pub mod linalg;

pub use disk::{disk_mode_determinant, disk_scan, disk_smallest, disk_te_solve, DiskConfig, DiskModeField, DiskModePair};
pub use fem::{
    corner_profile_nodal, corner_vanishing_profile, eta_uniqueness_check, fem_te_assemble, fem_te_solve, fem_te_solve_with, FemModeData,
    FemProblem, FemSolveOptions, ProfileRow, UniquenessReport,
};

use crate::elastic_fields::VectorField;
use crate::error::Result;
use crate::geometry::{mesh_polygon, PolygonDomain, TriangleMesh};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EigenFunctions {
    Disk(DiskModePair),
    Fem(FemModeData),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransmissionEigenpair {
    pub omega: f64,
    /// Spectral parameter of the pencil; real for physical pairs.
    pub omega_sq: C64,
    pub physical: bool,
    pub residual_pde_v: f64,
    pub residual_pde_w: f64,
    pub residual_dirichlet: f64,
    pub residual_traction: f64,
    pub threshold: f64,
    pub functions: EigenFunctions,
}

/// Mesh with nodal values of v and w.
pub type NodalPair = (TriangleMesh, Vec<[C64; 2]>, Vec<[C64; 2]>);

impl TransmissionEigenpair {
    pub fn max_residual(&self) -> f64 {
        [self.residual_pde_v, self.residual_pde_w, self.residual_dirichlet, self.residual_traction].into_iter().fold(0.0, f64::max)
    }

    pub fn certified(&self) -> bool {
        self.max_residual() < self.threshold
    }

    /// Mesh and nodal (v, w) values; disk pairs are sampled on a meshed 64-gon.
    pub fn nodal(&self) -> Result<NodalPair> {
        match &self.functions {
            EigenFunctions::Fem(d) => Ok((d.mesh.clone(), d.v.clone(), d.w.clone())),
            EigenFunctions::Disk(d) => {
                let poly = PolygonDomain::regular(64, d.radius, [0.0, 0.0])?;
                let mesh = mesh_polygon(&poly, d.radius / 12.0)?;
                let v = mesh.nodes.iter().map(|&x| d.v.value(x)).collect();
                let w = mesh.nodes.iter().map(|&x| d.w.value(x)).collect();
                Ok((mesh, v, w))
            }
        }
    }

    /// Writes `<stem>.json`, `<stem>.mesh` and `<stem>.csv` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        let (mesh, v, w) = self.nodal()?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.metadata())?)?;
        std::fs::write(dir.join(format!("{stem}.mesh")), mesh.to_text())?;
        let mut csv = String::from("node,x,y,re_v1,im_v1,re_v2,im_v2,re_w1,im_w1,re_w2,im_w2\n");
        for (i, x) in mesh.nodes.iter().enumerate() {
            let (a, b) = (v[i], w[i]);
            let _ = writeln!(
                csv,
                "{i},{},{},{},{},{},{},{},{},{},{}",
                x[0], x[1], a[0].re, a[0].im, a[1].re, a[1].im, b[0].re, b[0].im, b[1].re, b[1].im
            );
        }
        std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
        Ok(())
    }

    /// Metadata without the bulky nodal arrays.
    pub fn metadata(&self) -> serde_json::Value {
        let kind = match &self.functions {
            EigenFunctions::Disk(d) => serde_json::json!({"kind": "disk", "mode": d.n, "radius": d.radius, "q": d.q, "determinant": d.determinant}),
            EigenFunctions::Fem(d) => serde_json::json!({"kind": "fem", "nodes": d.mesh.nodes.len(), "triangles": d.mesh.triangles.len(), "eta_zero": d.eta_zero}),
        };
        serde_json::json!({
            "omega": self.omega,
            "omega_sq": [self.omega_sq.re, self.omega_sq.im],
            "physical": self.physical,
            "residual_pde_v": self.residual_pde_v,
            "residual_pde_w": self.residual_pde_w,
            "residual_dirichlet": self.residual_dirichlet,
            "residual_traction": self.residual_traction,
            "threshold": self.threshold,
            "certified": self.certified(),
            "functions": kind,
        })
    }
}
