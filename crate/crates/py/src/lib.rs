//! Python bindings: run experiments and evaluate a few closed forms.

use elastic_corner::cgo::sector_integral_exact;
use elastic_corner::cli::{list_experiments as listing, run, ExperimentConfig};
use elastic_corner::eig::{disk_smallest, DiskConfig};
use elastic_corner::elastic_fields::LameParameters;
use elastic_corner::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::path::PathBuf;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Parse(_) | Error::Degenerate(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Listing of experiments with parameters and defaults.
#[pyfunction]
fn list_experiments() -> String {
    listing()
}

/// Runs a key=value config (or manifest JSON) and returns (passed, summary).
#[pyfunction]
#[pyo3(signature = (config, output_dir, seed=None))]
fn run_experiment(config: &str, output_dir: PathBuf, seed: Option<u64>) -> PyResult<(bool, String)> {
    let mut cfg = ExperimentConfig::parse(config).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.output_dir = Some(output_dir.clone());
    let report = run(&cfg, &output_dir).map_err(to_py)?;
    Ok((report.passed, report.summary()))
}

/// Closed-form integral of the CGO solution's first component over the infinite sector.
#[pyfunction]
fn sector_integral(theta_min: f64, theta_max: f64, s: f64) -> (f64, f64) {
    let z = sector_integral_exact(theta_min, theta_max, s);
    (z.re, z.im)
}

/// Smallest transmission eigenvalue omega of the disk with constant contrast q.
#[pyfunction]
#[pyo3(signature = (radius, q, lam=1.0, mu=1.0))]
fn disk_eigenvalue(radius: f64, q: f64, lam: f64, mu: f64) -> PyResult<f64> {
    let params = LameParameters::new(lam, mu, 1.0, 2).map_err(to_py)?;
    let cfg = DiskConfig::new(radius, q, params).map_err(to_py)?;
    Ok(disk_smallest(&cfg, 3, 8.0, 400).map_err(to_py)?.omega)
}

#[pymodule]
fn elastic_corner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sector_integral, m)?)?;
    m.add_function(wrap_pyfunction!(disk_eigenvalue, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_and_listing() {
        let (re, im) = sector_integral(-0.5, 0.5, 10.0);
        assert!((re - 6.0 * 2.0 * 1f64.sin() * 1e-4).abs() < 1e-18 && im.abs() < 1e-18);
        assert_eq!(list_experiments().matches("verifies:").count(), 9);
        assert!((disk_eigenvalue(1.0, 4.0, 1.0, 1.0).unwrap() - 2.9026).abs() < 1e-3);
    }
}
