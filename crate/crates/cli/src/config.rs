//! Config files: TOML or JSON, parsed into a JSON value (so both formats hash
//! identically) and then into the per-command structs below.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};
use hilbert_ot::experiments::CompactSet;
use hilbert_ot::hilbert::HVec;
use hilbert_ot::maps::{affine_gaussian_map, gaussian_to_cube, PopulationMap};
use hilbert_ot::measures::{discretize_reference, DiscreteMeasure, Discretization, MeasureSpec};
use hilbert_ot::ot::{semidiscrete_solve, CertifyOptions, SemidiscreteConfig};
use hilbert_ot::ranks::{
    project_curves, read_curves_csv, BasisKind, LocalGcConfig, ProjectionConfig, Quadrature,
};
use hilbert_ot::experiments::StabilityConfig;

pub struct LoadedConfig {
    pub value: Value,
    /// SHA-256 of the canonical JSON form of `value`.
    pub hash: String,
    pub path: Option<PathBuf>,
    /// Relative data paths are resolved against this directory.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn parse<T: DeserializeOwned>(&self) -> CliResult<T> {
        serde_json::from_value(self.value.clone())
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }
}

/// Reads `path`; `seed` replaces the top-level `seed` key.
pub fn load(path: &Path, seed: Option<u64>) -> CliResult<LoadedConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?
    };
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    finish(value, seed, Some(path.to_path_buf()), base_dir)
}

/// Config for commands run without `--config`.
pub fn empty(seed: Option<u64>) -> LoadedConfig {
    finish(json!({}), seed, None, PathBuf::new()).expect("empty config is an object")
}

fn finish(
    mut value: Value,
    seed: Option<u64>,
    path: Option<PathBuf>,
    base_dir: PathBuf,
) -> CliResult<LoadedConfig> {
    let Value::Object(map) = &mut value else {
        return Err(CliError::Config("config must be a table/object".into()));
    };
    if let Some(s) = seed {
        map.insert("seed".into(), json!(s));
    }
    let canonical = canonical_json(&value);
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(LoadedConfig {
        value,
        hash,
        path,
        base_dir,
    })
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                let mut out = Map::new();
                for k in keys {
                    out.insert(k.clone(), sort(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(v)).expect("JSON values always serialise")
}

/// Regularity of `P` (connected support, null boundary) is not
/// checkable; configs assert it and the assertion is echoed in the metadata.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    #[default]
    Asserted,
}

/// A finite point set: inline, a CSV of coordinates (optional `weight`
/// column), or curves projected on a basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PointSource {
    Inline {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Csv {
        csv: PathBuf,
    },
    Curves {
        curves: PathBuf,
        basis: BasisKind,
        size: usize,
        #[serde(default = "trapezoid")]
        quadrature: Quadrature,
    },
}

fn trapezoid() -> Quadrature {
    Quadrature::Trapezoid
}

fn read(base: &Path, p: &Path) -> CliResult<fs::File> {
    let full = base.join(p);
    fs::File::open(&full).map_err(|e| CliError::Config(format!("cannot read {}: {e}", full.display())))
}

fn to_points(rows: Vec<Vec<f64>>) -> CliResult<Vec<HVec>> {
    rows.into_iter()
        .map(|r| HVec::new(r).map_err(CliError::from))
        .collect()
}

impl PointSource {
    pub fn load_points(&self, base: &Path) -> CliResult<(Vec<HVec>, Option<Vec<f64>>)> {
        match self {
            PointSource::Inline { points, weights } => Ok((to_points(points.clone())?, weights.clone())),
            PointSource::Csv { csv } => {
                let mut r = csv::Reader::from_reader(read(base, csv)?);
                let headers = r
                    .headers()
                    .map_err(|e| CliError::Config(format!("{}: {e}", csv.display())))?
                    .clone();
                let weight_col = headers.iter().position(|h| h.trim() == "weight");
                let mut rows = Vec::new();
                let mut weights = Vec::new();
                for rec in r.records() {
                    let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", csv.display())))?;
                    let mut row = Vec::new();
                    for (k, field) in rec.iter().enumerate() {
                        let v: f64 = field.trim().parse().map_err(|_| {
                            CliError::Config(format!("{}: not a number: {field:?}", csv.display()))
                        })?;
                        if Some(k) == weight_col {
                            weights.push(v);
                        } else {
                            row.push(v);
                        }
                    }
                    rows.push(row);
                }
                Ok((to_points(rows)?, weight_col.map(|_| weights)))
            }
            PointSource::Curves {
                curves,
                basis,
                size,
                quadrature,
            } => {
                let table = read_curves_csv(read(base, curves)?)?;
                let config = ProjectionConfig {
                    basis: *basis,
                    size: *size,
                    quadrature: quadrature.clone(),
                };
                Ok((project_curves(&table, &config)?, None))
            }
        }
    }

    /// As a measure; uniform weights unless given.
    pub fn load(&self, base: &Path) -> CliResult<DiscreteMeasure> {
        let (points, weights) = self.load_points(base)?;
        Ok(match weights {
            Some(w) => DiscreteMeasure::new(points, w)?,
            None => DiscreteMeasure::empirical(points)?,
        })
    }
}

/// A discrete target: explicit atoms or a discretised parametric measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSource {
    Spec {
        spec: MeasureSpec,
        /// Number of atoms (ignored by `rank`, which uses one per data point).
        #[serde(default)]
        atoms: Option<usize>,
        strategy: Discretization,
        #[serde(default)]
        seed: Option<u64>,
    },
    Atoms(PointSource),
}

impl TargetSource {
    pub fn seed(&self) -> Option<u64> {
        match self {
            TargetSource::Spec { seed, .. } => *seed,
            TargetSource::Atoms(_) => None,
        }
    }

    pub fn load(&self, base: &Path, default_seed: u64) -> CliResult<DiscreteMeasure> {
        match self {
            TargetSource::Atoms(p) => p.load(base),
            TargetSource::Spec {
                spec,
                atoms,
                strategy,
                seed,
            } => {
                let m = atoms.ok_or_else(|| CliError::Config("target spec needs `atoms`".into()))?;
                Ok(discretize_reference(spec, m, *strategy, seed.unwrap_or(default_seed))?.measure)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportConfig {
    pub source: PointSource,
    pub target: PointSource,
    #[serde(default = "cycle_len")]
    pub max_cycle_len: usize,
    #[serde(default)]
    pub seed: u64,
}

fn cycle_len() -> usize {
    CertifyOptions::default().max_cycle_len
}

impl TransportConfig {
    pub fn certify(&self) -> CertifyOptions {
        CertifyOptions {
            max_cycle_len: self.max_cycle_len,
            seed: self.seed,
            ..CertifyOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankConfig {
    pub data: PointSource,
    pub reference: TargetSource,
    #[serde(default)]
    pub seed: u64,
}

/// Where the population map `∇ψ` of an experiment comes from.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PopulationSource {
    /// Identity when both laws agree; Gaussian→Gaussian and Gaussian→cube in
    /// closed form.
    #[default]
    ClosedForm,
    Map { map: PopulationMap },
    /// `semidiscrete_solve` from the source to an `atoms`-point discretisation
    /// of the target.
    Semidiscrete {
        atoms: usize,
        strategy: Discretization,
        #[serde(default)]
        config: SemidiscreteConfig,
    },
}

impl PopulationSource {
    fn build(&self, p: &MeasureSpec, q: &MeasureSpec, seed: u64) -> CliResult<(PopulationMap, Value)> {
        match self {
            PopulationSource::ClosedForm => {
                let map = match (p, q) {
                    _ if p == q => PopulationMap::Identity { dim: p.dim() },
                    (MeasureSpec::Gaussian(a), MeasureSpec::Gaussian(b)) => {
                        PopulationMap::Gaussian(affine_gaussian_map(a, b)?)
                    }
                    (MeasureSpec::Gaussian(a), MeasureSpec::Cube(b)) => {
                        PopulationMap::GaussianToCube(gaussian_to_cube(a, b)?)
                    }
                    _ => {
                        return Err(CliError::Config(
                            "no closed-form map for these laws; use population.source = \"semidiscrete\""
                                .into(),
                        ))
                    }
                };
                Ok((map, json!({"source": "closed_form"})))
            }
            PopulationSource::Map { map } => Ok((map.clone(), json!({"source": "map"}))),
            PopulationSource::Semidiscrete {
                atoms,
                strategy,
                config,
            } => {
                let target = discretize_reference(q, *atoms, *strategy, seed)?.measure;
                let config = SemidiscreteConfig {
                    seed,
                    ..config.clone()
                };
                let sol = semidiscrete_solve(p, &target, &config)?;
                Ok((
                    PopulationMap::MaxAffine(sol.potential),
                    json!({
                        "source": "semidiscrete",
                        "atoms": atoms,
                        "iterations": sol.iterations,
                        "mismatch": sol.mismatch,
                        "config": config,
                    }),
                ))
            }
        }
    }
}

fn default_directions(d: usize) -> Vec<HVec> {
    (0..d.min(4)).map(|i| HVec::basis(d, i)).collect()
}

fn one() -> u64 {
    1
}

fn seeded_iid() -> Discretization {
    Discretization::SeededIid
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityFile {
    pub p: MeasureSpec,
    pub q: MeasureSpec,
    #[serde(default = "seeded_iid")]
    pub target_strategy: Discretization,
    #[serde(default)]
    pub target_atoms: Option<usize>,
    #[serde(default)]
    pub population: PopulationSource,
    pub n_grid: Vec<usize>,
    pub k: CompactSet,
    /// Defaults to the first (up to four) basis vectors.
    #[serde(default)]
    pub directions: Option<Vec<HVec>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub reps: u64,
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default)]
    pub anchor: Option<HVec>,
    #[serde(default)]
    pub potential_grid: Option<usize>,
    #[serde(default)]
    pub regularity: Regularity,
}

impl StabilityFile {
    pub fn build(&self) -> CliResult<(StabilityConfig, Value)> {
        let (population, meta) = self.population.build(&self.p, &self.q, self.seed)?;
        Ok((
            StabilityConfig {
                p: self.p.clone(),
                q: self.q.clone(),
                target_strategy: self.target_strategy,
                target_atoms: self.target_atoms,
                population,
                n_grid: self.n_grid.clone(),
                k: self.k.clone(),
                directions: self
                    .directions
                    .clone()
                    .unwrap_or_else(|| default_directions(self.p.dim())),
                seed: self.seed,
                reps: self.reps,
                bound: self.bound,
                anchor: self.anchor.clone(),
                potential_grid: self.potential_grid,
            },
            meta,
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalGcFile {
    pub data: MeasureSpec,
    pub reference: MeasureSpec,
    #[serde(default = "seeded_iid")]
    pub strategy: Discretization,
    #[serde(default)]
    pub population: PopulationSource,
    pub n_grid: Vec<usize>,
    pub k: CompactSet,
    #[serde(default)]
    pub directions: Option<Vec<HVec>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub reps: u64,
}

impl LocalGcFile {
    pub fn build(&self) -> CliResult<LocalGcConfig> {
        let (population, _) = self.population.build(&self.data, &self.reference, self.seed)?;
        Ok(LocalGcConfig {
            data: self.data.clone(),
            reference: self.reference.clone(),
            strategy: self.strategy,
            population,
            n_grid: self.n_grid.clone(),
            k: self.k.clone(),
            directions: self
                .directions
                .clone()
                .unwrap_or_else(|| default_directions(self.data.dim())),
            seed: self.seed,
            reps: self.reps,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleAConfig {
    #[serde(default = "twelve")]
    pub d: usize,
    #[serde(default = "powers_of_two")]
    pub n_grid: Vec<u64>,
}

fn twelve() -> usize {
    12
}

fn powers_of_two() -> Vec<u64> {
    vec![2, 4, 8, 16]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleBConfig {
    #[serde(default = "b_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "b_probes")]
    pub probes: Vec<f64>,
}

fn b_grid() -> Vec<u64> {
    vec![1, 2, 4, 8, 16, 32, 64, 128]
}

fn b_probes() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.9]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltFile {
    pub p: MeasureSpec,
    pub q: TargetSource,
    pub n: usize,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub semidiscrete: SemidiscreteConfig,
    #[serde(default = "mc_n")]
    pub mc_n: usize,
    #[serde(default)]
    pub regularity: Regularity,
}

fn mc_n() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullDomainConfig {
    #[serde(default = "ten")]
    pub d_max: usize,
    #[serde(default = "ten_thousand")]
    pub seeds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "twelve")]
    pub pathological_d: usize,
    #[serde(default = "hundred")]
    pub pathological_n: usize,
}

fn ten() -> usize {
    10
}

fn ten_thousand() -> u64 {
    10_000
}

fn hundred() -> usize {
    100
}
