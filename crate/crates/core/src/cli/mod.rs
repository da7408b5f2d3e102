//! Config-driven experiment runner: flat key=value configs, manifests, JSON reports, CSV tables and gnuplot scripts.

mod runs;

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value as Json};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Real,
    Int,
    Bool,
    Text,
    Reals,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Reals(Vec<f64>),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Real(x) => format!("{x}"),
            Value::Int(x) => format!("{x}"),
            Value::Bool(x) => format!("{x}"),
            Value::Text(x) => x.clone(),
            Value::Reals(v) => v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

pub struct ExperimentInfo {
    pub name: &'static str,
    /// The result the experiment checks.
    pub verifies: &'static str,
    pub params: &'static [ParamSpec],
}

const fn p(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind, default, help }
}

use Kind::*;

const LAME: [ParamSpec; 2] = [p("lambda", Real, "1", "first Lame parameter"), p("mu", Real, "1", "shear modulus")];

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "verify-cgo",
        verifies: "closed-form sector and edge integrals of the CGO solution, the incomplete-gamma decay law, and the six decay bounds on truncated sectors",
        params: &[
            LAME[0],
            LAME[1],
            p("sectors", Reals, "-0.5, 0.5, -1.2, 0.3, 0.2, 1.4, -0.7853981633974483, 0.7853981633974483, -1.55, 1.55", "flattened (theta_min, theta_max) pairs for the integral checks"),
            p("certificate_sectors", Reals, "-0.5, 0.5, -1.2, 0.3, 0.2, 1.4", "flattened pairs for the bound certificates"),
            p("h", Real, "1", "sector radius"),
            p("s_list", Reals, "25, 50, 100", "CGO parameters for certificates and tail checks"),
            p("s_exact", Real, "20", "CGO parameter of the 1e-8 truncated closed-form check"),
            p("alpha", Real, "0.5", "Holder exponent in the weighted bounds"),
            p("zetas", Reals, "0, 0.5, 1, 2", "weights of the decay-law slope fits"),
        ],
    },
    ExperimentInfo {
        name: "verify-herglotz",
        verifies: "Jacobi-Anger series of elastic Herglotz waves in 2D and 3D, their coefficient bounds, and the H1 Herglotz approximation on a corner sector",
        params: &[
            p("lambda", Real, "1.5", "first Lame parameter"),
            LAME[1],
            p("omega", Real, "2.5", "frequency (2D)"),
            p("omega_3d", Real, "2", "frequency (3D)"),
            p("nodes", Int, "24", "kernel nodes of the random 2D kernel"),
            p("l_max", Int, "40", "2D series truncation"),
            p("l_max_3d", Int, "30", "3D series truncation"),
            p("points", Int, "100", "random evaluation points"),
            p("radius", Real, "1", "radius of the evaluation disk/ball"),
            p("fit_nodes", Int, "64", "Herglotz nodes of the fit"),
            p("sector", Reals, "-0.6, 0.6, 2.5", "theta_min, theta_max, h of the fit sector"),
            p("incidence", Real, "0.3", "direction of the plane-wave fit target"),
        ],
    },
    ExperimentInfo {
        name: "verify-identities",
        verifies: "Green's formula for the Lame operator and the corner integral identity against the CGO solution, including eigenpair inputs",
        params: &[
            p("lambda", Real, "1.5", "first Lame parameter"),
            LAME[1],
            p("omega", Real, "2", "frequency"),
            p("s", Real, "5", "CGO parameter"),
            p("sector", Reals, "-0.9, 0.4, 1.3", "theta_min, theta_max, h"),
            p("q", Real, "2.5", "contrast of the independent plane-wave pair"),
            p("eta", Real, "0.7", "boundary parameter of the plane-wave pair"),
            p("disk_q", Real, "4", "contrast of the disk eigenpair"),
            p("eigen_sector", Reals, "-1.2, 1.2, 0.5", "sector at the disk centre for the eigenpair inputs"),
        ],
    },
    ExperimentInfo {
        name: "te-disk",
        verifies: "transmission eigenvalues of a disk by Bessel mode matching, with certified eigenfunction residuals",
        params: &[
            LAME[0],
            LAME[1],
            p("radius", Real, "1", "disk radius"),
            p("q", Real, "4", "constant contrast q = 1 + V"),
            p("n_max", Int, "3", "largest angular mode scanned"),
            p("omega_max", Real, "6", "upper end of the frequency scan"),
            p("scan_steps", Int, "400", "scan points per mode"),
        ],
    },
    ExperimentInfo {
        name: "te-fem",
        verifies: "finite element transmission eigenvalues against the disk oracle, degeneracy detection, and the eta uniqueness certificate",
        params: &[
            LAME[0],
            LAME[1],
            p("shape", Text, "regular", "regular | square | polygon"),
            p("sides", Int, "64", "sides of the regular polygon"),
            p("radius", Real, "1", "circumradius of the regular polygon"),
            p("side", Real, "1", "square side"),
            p("vertices", Reals, "0, 0, 1, 0, 0.5, 0.8", "flattened polygon vertices"),
            p("h", Real, "0.1", "target mesh size"),
            p("q", Real, "4", "constant contrast"),
            p("eta", Real, "0", "constant boundary parameter"),
            p("count", Int, "4", "eigenpairs reported"),
            p("refine", Bool, "true", "also solve at h / sqrt 2"),
            p("eta_check_omega", Real, "0.1", "frequency of the eta uniqueness certificate (0 to skip)"),
            p("eta_pair", Reals, "1, 0", "eta_1, eta_2 of the uniqueness certificate"),
        ],
    },
    ExperimentInfo {
        name: "vanishing-profile",
        verifies: "vanishing of transmission eigenfunctions near a convex corner, measured by normalized ball averages",
        params: &[
            LAME[0],
            LAME[1],
            p("side", Real, "1", "square side"),
            p("h", Real, "0.05", "target mesh size"),
            p("q", Real, "4", "constant contrast"),
            p("vertex", Int, "0", "corner index"),
            p("rho_list", Reals, "0.4, 0.2, 0.1, 0.05", "strictly decreasing ball radii"),
        ],
    },
    ExperimentInfo {
        name: "scatter",
        verifies: "forward elastic scattering by a penetrable medium: far field, radiation condition, and corner scattering",
        params: &[
            LAME[0],
            LAME[1],
            p("omega", Real, "6.283185307179586", "frequency"),
            p("shape", Text, "triangle", "triangle | square | disk | polygon"),
            p("size", Real, "1", "triangle/square side or disk radius"),
            p("vertices", Reals, "0, 0, 1, 0, 0.5, 0.8", "flattened polygon vertices"),
            p("offset", Reals, "0.013, -0.021", "shift of the scatterer"),
            p("v0", Real, "1", "constant contrast V"),
            p("incidence", Text, "p", "p | s"),
            p("angle", Real, "0", "incidence direction"),
            p("directions", Int, "64", "far-field directions"),
            p("points_per_wavelength", Real, "12", "grid resolution"),
            p("radii", Reals, "10, 20, 40", "radiation check radii in shortest wavelengths"),
            p("incidences", Int, "8", "P and S incidences of the corner scan (0 to skip)"),
            p("ball_radius", Real, "0.15", "corner ball radius"),
        ],
    },
    ExperimentInfo {
        name: "uniqueness",
        verifies: "single-measurement far-field separation of polygonal media with corners, and invariance under rigid motions",
        params: &[
            LAME[0],
            LAME[1],
            p("omega", Real, "6.283185307179586", "frequency"),
            p("shape_a", Text, "square", "square | triangle"),
            p("shape_b", Text, "triangle", "square | triangle"),
            p("area", Real, "0.4330127018922193", "common area of the polygons"),
            p("v0", Real, "1", "constant contrast"),
            p("incidence", Text, "p", "p | s"),
            p("angle", Real, "0.3", "incidence direction"),
            p("directions", Int, "64", "far-field directions"),
            p("points_per_wavelength", Real, "12", "grid resolution"),
            p("quarter_turns", Int, "1", "rotation of the rigid motion"),
            p("shift_cells", Reals, "2, 3", "translation of the rigid motion in grid cells"),
        ],
    },
    ExperimentInfo {
        name: "reduce-3d",
        verifies: "the dimension reduction operator along an edge: linearity, integration by parts, the substitution identity, cutoff bounds, mean-value witnesses, and the reduced Lame system",
        params: &[
            p("lambda", Real, "1.2", "first Lame parameter"),
            p("mu", Real, "0.8", "shear modulus"),
            p("omega", Real, "2.5", "frequency"),
            p("cutoff", Reals, "0, 0.25, 1", "centre, half-width and ambient half-height of the cutoff"),
            p("x_prime", Reals, "0.01, 0.1, 0.5, 1, 10", "distances |x'| of the substitution and bound checks"),
            p("l_max", Int, "5", "largest mean-value exponent"),
            p("check_stated_bound", Bool, "true", "certify the sec^3 bound as stated (without the 1/|x'| factor)"),
        ],
    },
];

pub fn find_experiment(name: &str) -> Result<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<_> = EXPERIMENTS.iter().map(|e| e.name).collect();
        Error::InvalidInput(format!("unknown experiment '{name}'; valid options: {}", names.join(", ")))
    })
}

pub fn list_experiments() -> String {
    let mut s = String::new();
    for e in EXPERIMENTS {
        let _ = writeln!(s, "{}\n  verifies: {}", e.name, e.verifies);
        for p in e.params {
            let _ = writeln!(s, "    {:<22} = {:<28} {}", p.key, p.default, p.help);
        }
    }
    s
}

fn parse_value(kind: Kind, key: &str, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::Parse(format!("key '{key}': expected {what}, got '{raw}'"));
    let real = |t: &str| t.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    Ok(match kind {
        Kind::Real => Value::Real(real(raw).ok_or_else(|| bad("a real number"))?),
        Kind::Int => Value::Int(raw.trim().parse().map_err(|_| bad("an integer"))?),
        Kind::Bool => Value::Bool(raw.trim().parse().map_err(|_| bad("true or false"))?),
        Kind::Text => {
            let t = raw.trim();
            if t.is_empty() {
                return Err(bad("a non-empty string"));
            }
            Value::Text(t.to_string())
        }
        Kind::Reals => Value::Reals(
            raw.split(',').filter(|t| !t.trim().is_empty()).map(|t| real(t).ok_or_else(|| bad("a comma-separated list of reals"))).collect::<Result<_>>()?,
        ),
    })
}

/// A resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub parameters: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    /// Parses key=value text, or a manifest written by a previous run.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Self::from_manifest(text);
        }
        let mut raw = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            if raw.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key '{}'", n + 1, k.trim())));
            }
        }
        Self::resolve(raw)
    }

    fn from_manifest(text: &str) -> Result<Self> {
        let j: Json = serde_json::from_str(text)?;
        let mut raw = BTreeMap::new();
        let obj = j.as_object().ok_or_else(|| Error::Parse("manifest must be a JSON object".into()))?;
        for (k, v) in obj {
            match k.as_str() {
                "experiment" | "output_dir" => {
                    if let Some(s) = v.as_str() {
                        raw.insert(k.clone(), s.to_string());
                    }
                }
                "seed" => {
                    raw.insert(k.clone(), v.to_string());
                }
                "parameters" => {
                    let params = v.as_object().ok_or_else(|| Error::Parse("manifest parameters must be an object".into()))?;
                    for (pk, pv) in params {
                        let s = match pv {
                            Json::String(s) => s.clone(),
                            Json::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
                            other => other.to_string(),
                        };
                        raw.insert(pk.clone(), s);
                    }
                }
                "version" => {}
                other => return Err(Error::Parse(format!("unknown manifest field '{other}'"))),
            }
        }
        Self::resolve(raw)
    }

    fn resolve(mut raw: BTreeMap<String, String>) -> Result<Self> {
        let name = raw.remove("experiment").ok_or_else(|| Error::Parse("missing key 'experiment'".into()))?;
        let info = find_experiment(&name)?;
        let seed = match raw.remove("seed") {
            Some(s) => s.trim().parse().map_err(|_| Error::Parse(format!("key 'seed': expected a nonnegative integer, got '{s}'")))?,
            None => 0,
        };
        let output_dir = raw.remove("output_dir").map(PathBuf::from);
        let mut parameters = BTreeMap::new();
        for spec in info.params {
            let v = match raw.remove(spec.key) {
                Some(s) => parse_value(spec.kind, spec.key, &s)?,
                None => parse_value(spec.kind, spec.key, spec.default)?,
            };
            parameters.insert(spec.key.to_string(), v);
        }
        if let Some(k) = raw.keys().next() {
            let valid: Vec<_> = info.params.iter().map(|p| p.key).collect();
            return Err(Error::Parse(format!("unknown key '{k}' for {name}; valid keys: experiment, seed, output_dir, {}", valid.join(", "))));
        }
        Ok(Self { experiment: name, seed, output_dir, parameters })
    }

    pub fn manifest(&self) -> Json {
        json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "output_dir": self.output_dir.as_ref().map(|p| p.display().to_string()),
            "parameters": self.parameters,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }

    /// key=value rendering of the resolved config.
    pub fn to_text(&self) -> String {
        let mut s = format!("experiment = {}\nseed = {}\n", self.experiment, self.seed);
        if let Some(d) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", d.display());
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "{k} = {}", v.render());
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=", ">=" or "flag" (value 1 = pass).
    pub relation: String,
    pub passed: bool,
}

impl Certificate {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<=".into(), passed: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: ">=".into(), passed: value >= threshold }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, relation: "flag".into(), passed: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub passed: bool,
    pub certificates: Vec<Certificate>,
    pub warnings: Vec<String>,
    pub details: Json,
}

impl Report {
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}\n", self.experiment, if self.passed { "PASS" } else { "FAIL" });
        for c in &self.certificates {
            let _ = writeln!(s, "  [{}] {} ({:.4e} {} {:.4e})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.relation, c.threshold);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        s
    }
}

/// What a runner hands back; files are written by `run`.
#[derive(Default)]
pub(crate) struct RunOutput {
    pub certificates: Vec<Certificate>,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, Json>,
    /// (file name, CSV text)
    pub tables: Vec<(String, String)>,
    pub plot: String,
}

pub(crate) struct Ctx<'a> {
    pub params: &'a BTreeMap<String, Value>,
    pub seed: u64,
    pub dir: &'a Path,
}

impl Ctx<'_> {
    fn get(&self, key: &str) -> Result<&Value> {
        self.params.get(key).ok_or_else(|| Error::InvalidInput(format!("missing parameter '{key}'")))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Real(x) => Ok(*x),
            Value::Int(x) => Ok(*x as f64),
            _ => Err(Error::InvalidInput(format!("parameter '{key}' is not a real"))),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.get(key)? {
            Value::Int(x) => Ok(*x),
            _ => Err(Error::InvalidInput(format!("parameter '{key}' is not an integer"))),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        usize::try_from(self.int(key)?).map_err(|_| Error::InvalidInput(format!("parameter '{key}' must be nonnegative")))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            Value::Bool(x) => Ok(*x),
            _ => Err(Error::InvalidInput(format!("parameter '{key}' is not a boolean"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Value::Text(x) => Ok(x),
            _ => Err(Error::InvalidInput(format!("parameter '{key}' is not a string"))),
        }
    }

    pub fn reals(&self, key: &str) -> Result<&[f64]> {
        match self.get(key)? {
            Value::Reals(x) => Ok(x),
            _ => Err(Error::InvalidInput(format!("parameter '{key}' is not a list"))),
        }
    }

    /// A list of length `n`.
    pub fn reals_n(&self, key: &str, n: usize) -> Result<&[f64]> {
        let v = self.reals(key)?;
        if v.len() != n {
            return Err(Error::InvalidInput(format!("parameter '{key}' needs {n} values, got {}", v.len())));
        }
        Ok(v)
    }

    /// A flattened list of pairs.
    pub fn pairs(&self, key: &str) -> Result<Vec<[f64; 2]>> {
        let v = self.reals(key)?;
        if v.is_empty() || v.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!("parameter '{key}' needs a nonempty even number of values")));
        }
        Ok(v.chunks(2).map(|c| [c[0], c[1]]).collect())
    }
}

pub fn default_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(&cfg.experiment))
}

/// Runs one experiment and writes manifest.json, report.json, summary.txt, CSV tables and plot.gp into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&cfg.manifest())?)?;
    let ctx = Ctx { params: &cfg.parameters, seed: cfg.seed, dir };
    let out = runs::dispatch(&cfg.experiment, &ctx).map_err(|e| context(&cfg.experiment, e))?;
    let report = Report {
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        passed: !out.certificates.is_empty() && out.certificates.iter().all(|c| c.passed),
        certificates: out.certificates,
        warnings: out.warnings,
        details: Json::Object(out.details.into_iter().collect()),
    };
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    for (name, csv) in &out.tables {
        std::fs::write(dir.join(name), csv)?;
    }
    std::fs::write(dir.join("plot.gp"), &out.plot)?;
    std::fs::write(dir.join("summary.txt"), report.summary())?;
    Ok(report)
}

fn context(experiment: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{experiment}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{experiment}: {m}")),
        Error::NotConverged(m) => Error::NotConverged(format!("{experiment}: {m}")),
        other => other,
    }
}

/// CSV text from a header and rows of numbers.
pub(crate) fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub(crate) fn plot_script(title: &str, body: &str) -> String {
    format!("set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'plot.png'\nset title '{title}'\nset key autotitle columnhead\n{body}\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_rejects_unknown_keys() {
        let c = ExperimentConfig::parse("experiment = te-disk\n# comment\nq = 3.5\nseed = 4\n").unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.parameters["q"], Value::Real(3.5));
        assert_eq!(c.parameters["n_max"], Value::Int(3));
        assert!(ExperimentConfig::parse("experiment = te-disk\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = te-disk\nq = abc\n").is_err());
        assert!(ExperimentConfig::parse("q = 2\n").is_err());
        let e = ExperimentConfig::parse("experiment = nope\n").unwrap_err().to_string();
        assert!(e.contains("verify-cgo") && e.contains("reduce-3d"));
    }

    #[test]
    fn manifest_and_text_round_trip() {
        let c = ExperimentConfig::parse("experiment = vanishing-profile\nrho_list = 0.3, 0.15, 0.075\noutput_dir = out/x\n").unwrap();
        let m = serde_json::to_string(&c.manifest()).unwrap();
        assert_eq!(ExperimentConfig::parse(&m).unwrap(), c);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn nine_experiments_listed() {
        assert_eq!(EXPERIMENTS.len(), 9);
        let text = list_experiments();
        assert!(EXPERIMENTS.iter().all(|e| text.contains(e.name) && text.contains(e.verifies)));
        for e in EXPERIMENTS {
            for p in e.params {
                parse_value(p.kind, p.key, p.default).unwrap();
            }
        }
    }
}
