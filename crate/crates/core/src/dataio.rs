//! Binding-energy datasets, file formats, and persisted runs.
//!
//! Two dataset formats are supported: delimited text with a `v,E` header and
//! one pair per line, and a TOML record carrying the metadata by name.
//! Numbers are written in shortest round-trip form, so a save/load cycle
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{InversionConfig, InversionRun};
use crate::models::FitReport;
use crate::potentials::{PotentialShape, TabulatedShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exchange {
    Scalar,
    Pseudoscalar,
    Vector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    FermionFermion,
    FermionAntifermion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Constituent mass.
    pub mass: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exchange: Option<Exchange>,
    /// Mass of the exchanged boson.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exchange_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub system: Option<System>,
    /// Vertex form-factor parameter.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vertex_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub smoothing_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coupling_note: Option<String>,
}

impl Default for Metadata {
    fn default() -> Self {
        Self {
            mass: 1.0,
            exchange: None,
            exchange_mass: None,
            system: None,
            vertex_lambda: None,
            smoothing_mass: None,
            coupling_note: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    pub label: String,
    points: Vec<(f64, f64)>,
    pub metadata: Metadata,
}

impl DataSet {
    /// Couplings must increase strictly and energies decrease strictly.
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, metadata: Metadata) -> Result<Self> {
        if points.iter().any(|(v, e)| !v.is_finite() || !e.is_finite()) {
            return Err(Error::Parse("non-finite value in dataset".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::NonMonotoneAbscissae);
        }
        if points.windows(2).any(|w| w[1].1 >= w[0].1) {
            return Err(Error::Parse("energies must decrease strictly with the coupling".into()));
        }
        Ok(Self { label: label.into(), points, metadata })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_delimited(&self) -> String {
        let mut out = String::from("v,E\n");
        for (v, e) in &self.points {
            let _ = writeln!(out, "{v},{e}");
        }
        out
    }

    pub fn from_delimited(label: &str, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header v,E".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["v", "E"] {
            return Err(Error::Parse(format!("expected header v,E, found '{header}'")));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || Error::Parse(format!("malformed row {}: '{line}'", i + 1));
            let (v, e) = line.split_once(',').ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            let e: f64 = e.trim().parse().map_err(|_| bad())?;
            points.push((v, e));
        }
        Self::new(label, points, Metadata::default())
    }

    pub fn to_structured(&self) -> Result<String> {
        let (v, e) = self.points.iter().copied().unzip();
        let record = Record { label: self.label.clone(), metadata: self.metadata.clone(), v, e };
        toml::to_string(&record).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_structured(text: &str) -> Result<Self> {
        let r: Record = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if r.v.len() != r.e.len() {
            return Err(Error::Parse(format!("{} couplings but {} energies", r.v.len(), r.e.len())));
        }
        Self::new(r.label, r.v.into_iter().zip(r.e).collect(), r.metadata)
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    label: String,
    metadata: Metadata,
    v: Vec<f64>,
    #[serde(rename = "E")]
    e: Vec<f64>,
}

const ENERGIES: [f64; 10] = [-0.01, -0.02, -0.03, -0.04, -0.05, -0.10, -0.20, -0.30, -0.40, -0.50];

const TABLE: [(&str, [f64; 10]); 5] = [
    ("S1", [0.6217, 0.7998, 0.9510, 1.089, 1.222, 1.840, 3.049, 4.313, 5.656, 6.919]),
    ("S2", [2.008, 2.347, 2.627, 2.880, 3.119, 4.203, 6.227, 8.260, 10.40, 12.53]),
    ("P1", [17.89, 18.53, 18.80, 19.35, 19.66, 20.86, 22.51, 23.76, 24.81, 25.71]),
    ("P2", [33.61, 34.23, 34.68, 35.05, 35.36, 36.60, 38.25, 39.58, 41.00, 41.85]),
    ("V", [0.2598, 0.3907, 0.4984, 0.5934, 0.6802, 1.046, 1.626, 2.109, 2.534, 2.914]),
];

/// Labels of the embedded datasets.
pub const BUILTIN_LABELS: [&str; 5] = ["S1", "S2", "P1", "P2", "V"];

fn normalize(label: &str) -> String {
    label
        .trim()
        .chars()
        .map(|c| match c {
            '₁' => '1',
            '₂' => '2',
            c => c.to_ascii_uppercase(),
        })
        .collect()
}

/// One of the embedded Bethe-Salpeter datasets; `S₁` and `s1` are accepted for `S1`.
pub fn builtin(label: &str) -> Result<DataSet> {
    let key = normalize(label);
    let (name, v) = TABLE
        .iter()
        .find(|(name, _)| *name == key)
        .ok_or_else(|| Error::UnknownDataset(label.to_string()))?;
    let (exchange, exchange_mass, system) = match *name {
        "S1" => (Exchange::Scalar, 0.15, System::FermionFermion),
        "S2" => (Exchange::Scalar, 0.5, System::FermionFermion),
        "P1" => (Exchange::Pseudoscalar, 0.15, System::FermionFermion),
        "P2" => (Exchange::Pseudoscalar, 0.5, System::FermionFermion),
        _ => (Exchange::Vector, 0.0, System::FermionAntifermion),
    };
    let metadata = Metadata {
        mass: 1.0,
        exchange: Some(exchange),
        exchange_mass: Some(exchange_mass),
        system: Some(system),
        vertex_lambda: Some(2.0),
        smoothing_mass: Some(1.1),
        coupling_note: Some("v = g^2/(4 pi)".into()),
    };
    DataSet::new(*name, v.iter().copied().zip(ENERGIES).collect(), metadata)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Delimited,
    Structured,
}

impl Format {
    /// `.toml` is structured; anything else is delimited text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Format::Structured,
            _ => Format::Delimited,
        }
    }
}

pub fn load(path: &Path, format: Format) -> Result<DataSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    match format {
        Format::Delimited => {
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
            DataSet::from_delimited(label, &text)
        }
        Format::Structured => DataSet::from_structured(&text),
    }
}

pub fn save(data: &DataSet, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Delimited => data.to_delimited(),
        Format::Structured => data.to_structured()?,
    };
    write(path, &text)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn two_columns(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("{header}\n");
    for (a, b) in rows {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

fn parse_two_columns(text: &str) -> Result<Vec<(f64, f64)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|line| {
            let bad = || Error::Parse(format!("malformed row '{line}'"));
            let (a, b) = line.split_once(',').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Manifest of a persisted inversion run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: String,
    pub seed: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v0: Option<f64>,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub residual_tol: f64,
    pub mass: f64,
    pub extrapolation: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub abort_reason: Option<String>,
    pub residual_history: Vec<f64>,
    pub changes: Vec<f64>,
    pub trust_lo: Vec<f64>,
    pub trust_hi: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// Shape files, one per iterate; the seed is described by `seed`.
    pub shapes: Vec<String>,
    pub warnings: Vec<String>,
}

/// A run as read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub manifest: RunManifest,
    pub iterates: Vec<PotentialShape<f64>>,
    pub data: DataSet,
    /// `(u, F)` of the last solved iterate.
    pub final_curve: Vec<(f64, f64)>,
}

/// Writes `manifest.toml`, `data.csv`, `final_curve.csv` and one `shape_k.txt`
/// per tabulated iterate into `dir`.
pub fn save_run(dir: &Path, run: &InversionRun<f64>, data: &DataSet, config: &InversionConfig<f64>) -> Result<()> {
    create_dir(dir)?;
    let mut shapes = Vec::new();
    for (k, shape) in run.iterates.iter().enumerate().skip(1) {
        let PotentialShape::Tabulated(t) = shape else {
            return Err(Error::Inversion(format!("iterate {k} is not tabulated")));
        };
        let name = format!("shape_{k}.txt");
        write(&dir.join(&name), &t.to_text())?;
        shapes.push(name);
    }
    let manifest = RunManifest {
        dataset: data.label.clone(),
        seed: run.iterates[0].to_string(),
        v0: run.v0,
        max_iterations: config.max_iterations,
        convergence_tol: config.convergence_tol,
        residual_tol: config.residual_tol,
        mass: config.mass,
        extrapolation: config.extrapolation,
        converged: run.converged,
        abort_reason: run.abort_reason.clone(),
        residual_history: run.residual_history.clone(),
        changes: run.changes.clone(),
        trust_lo: run.trust_regions.iter().map(|t| t.0).collect(),
        trust_hi: run.trust_regions.iter().map(|t| t.1).collect(),
        r_grid: run.r_grid.clone(),
        shapes,
        warnings: run.warnings.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    write(&dir.join("manifest.toml"), &text)?;
    write(&dir.join("data.csv"), &data.to_delimited())?;
    let curve = run.final_curve.as_ref().map(|c| c.samples().to_vec()).unwrap_or_default();
    write(&dir.join("final_curve.csv"), &two_columns("u,F", curve))
}

pub fn load_run(dir: &Path) -> Result<StoredRun> {
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    };
    let manifest: RunManifest = toml::from_str(&read("manifest.toml")?).map_err(|e| Error::Parse(e.to_string()))?;
    let mut iterates = vec![PotentialShape::parse_spec(&manifest.seed)?];
    for name in &manifest.shapes {
        iterates.push(PotentialShape::Tabulated(TabulatedShape::from_text(&read(name)?)?));
    }
    let data = DataSet::from_delimited(&manifest.dataset, &read("data.csv")?)?;
    let final_curve = parse_two_columns(&read("final_curve.csv")?)?;
    Ok(StoredRun { manifest, iterates, data, final_curve })
}

/// What `emit_plot_data` renders.
pub enum PlotSource<'a> {
    Run(&'a StoredRun),
    Fit { report: &'a FitReport<f64>, data: &'a DataSet },
    Empty,
}

#[derive(Serialize)]
struct PlotManifest {
    kind: String,
    files: Vec<String>,
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Writes one delimited two-column file per series plus `manifest.toml`.
/// Returns the paths written.
pub fn emit_plot_data(source: PlotSource<'_>, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files: Vec<(String, String)> = Vec::new();
    let kind = match source {
        PlotSource::Run(run) => {
            let r_grid = &run.manifest.r_grid;
            for (k, shape) in run.iterates.iter().enumerate() {
                let rows = r_grid.iter().map(|&r| (r, shape.value(r)));
                files.push((format!("f_{k}.csv"), two_columns("r,f", rows)));
            }
            let v0 = run.manifest.v0.unwrap_or(0.0);
            let data = run.data.points().iter().map(|&(v, e)| (v - v0, e));
            files.push(("F_data.csv".into(), two_columns("u,F", data)));
            files.push(("F_model.csv".into(), two_columns("u,F", run.final_curve.iter().copied())));
            "run"
        }
        PlotSource::Fit { report, data } => {
            let p = report.params;
            let u: Vec<f64> = data.points().iter().map(|&(v, _)| v - p.v0).collect();
            let (u_lo, u_hi) = (u[0].max(1e-3), u[u.len() - 1]);
            let scale = 2.0 / (p.m * p.a);
            let shape = p.shape();
            let rows = geometric(scale / (2.0 * u_hi), 2.0 * scale / u_lo, 100).into_iter().map(|r| (r, shape.value(r)));
            files.push(("f_model.csv".into(), two_columns("r,f", rows)));
            let data_rows = data.points().iter().map(|&(v, e)| (v - p.v0, e));
            files.push(("F_data.csv".into(), two_columns("u,F", data_rows)));
            let model_rows = (0..=100).map(|i| {
                let x = u[0] + (u_hi - u[0]) * i as f64 / 100.0;
                (x, p.energy(x + p.v0))
            });
            files.push(("F_model.csv".into(), two_columns("u,F", model_rows)));
            "fit"
        }
        PlotSource::Empty => "empty",
    };
    let mut written = Vec::new();
    for (name, text) in &files {
        let path = dir.join(name);
        write(&path, text)?;
        written.push(path);
    }
    let manifest = PlotManifest { kind: kind.into(), files: files.into_iter().map(|f| f.0).collect() };
    let path = dir.join("manifest.toml");
    write(&path, &toml::to_string(&manifest).map_err(|e| Error::Parse(e.to_string()))?)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn builtin_sets_match_table() {
        let s1 = builtin("S₁").unwrap();
        assert_eq!(s1.len(), 10);
        assert_eq!(s1.points()[0], (0.6217, -0.01));
        let v = builtin("v").unwrap();
        assert_eq!(v.points()[0], (0.2598, -0.01));
        assert_eq!(v.points()[9], (2.914, -0.5));
        assert_eq!(v.metadata.system, Some(System::FermionAntifermion));
        assert_eq!(builtin("X"), Err(Error::UnknownDataset("X".into())));
    }

    #[test]
    fn embedded_digits_checksum() {
        let mut hasher = Sha256::new();
        for label in BUILTIN_LABELS {
            hasher.update(builtin(label).unwrap().to_delimited().as_bytes());
        }
        let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(digest, include_str!("../tests/fixtures/builtin.sha256").trim());
    }

    #[test]
    fn delimited_round_trip() {
        for label in BUILTIN_LABELS {
            let d = builtin(label).unwrap();
            let back = DataSet::from_delimited(label, &d.to_delimited()).unwrap();
            assert_eq!(back.points(), d.points());
        }
    }

    #[test]
    fn structured_round_trip_keeps_metadata() {
        let d = builtin("P2").unwrap();
        let back = DataSet::from_structured(&d.to_structured().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn delimited_errors() {
        assert!(matches!(DataSet::from_delimited("x", "1,2\n"), Err(Error::Parse(_))));
        assert_eq!(
            DataSet::from_delimited("x", "v,E\n2,-0.1\n1,-0.2\n"),
            Err(Error::NonMonotoneAbscissae)
        );
        assert!(matches!(DataSet::from_delimited("x", "v,E\n1;2\n"), Err(Error::Parse(_))));
        assert!(matches!(DataSet::from_delimited("x", ""), Err(Error::Parse(_))));
    }
}
