//! Config-driven orchestration of the fill-tuning stages, the random
//! baseline, and grid export.
//!
//! Every stage reads its inputs from the output directory and writes its
//! own artifact there, so a staged run and a single-shot run produce the
//! same bytes. JSON artifacts carry a `config_hash` key; the field CSV
//! carries it in `field.meta.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frustration::{
    all_frustration_vectors, build_roughness_surface, select_fill_points, FrustrationVector, RoughnessParams,
    RoughnessSurface,
};
use crate::geometry::{Bounds, Point, RandomSource};
use crate::ktn::{explore_landscape, ExploreConfig, KineticTransitionNetwork};
use crate::optimize::BasinHoppingConfig;
use crate::oracle::{
    build_similarity_field, ConstantOracle, FieldConfig, LatentOracle, QuantizedDecoder, SimilarityField, TokenSequence,
};
use crate::surfaces::{demo_surface, AnalyticMixtureSurface, MixtureComponent, RbfSurface, Surface};

pub const FIELD_CSV: &str = "field.csv";
pub const FIELD_META: &str = "field.meta.json";
pub const SURFACE_JSON: &str = "surface.rbf.json";
pub const NETWORK_JSON: &str = "network.ktn.json";
pub const FRUSTRATION_JSON: &str = "frustration.json";
pub const ROUGHNESS_JSON: &str = "roughness.json";
pub const DATASET_JSONL: &str = "dataset.jsonl";
pub const BASELINE_JSONL: &str = "baseline.jsonl";
pub const GRID_CSV: &str = "grid.csv";

/// Where the similarity field, or the surface itself, comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Quantized decoder with `bins` bins per dimension; `symbols`
    /// optionally renames the bins.
    Quantized {
        bins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbols: Option<Vec<u32>>,
    },
    /// Every point decodes to `tokens`.
    Constant { tokens: Vec<u32> },
    /// A previously sampled field CSV; the sampling stage only copies it.
    FieldCsv { path: PathBuf },
    /// Gaussian mixture used directly as the surface; sampling and fitting
    /// are skipped.
    Analytic { components: Vec<MixtureComponent> },
    /// The seeded five-component demo mixture, used directly as the surface.
    Demo { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dimension: usize,
    /// Defaults to the unit cube.
    pub bounds: Option<Bounds>,
    pub oracle: OracleSpec,
    pub n_samples: usize,
    pub n_neighbors: usize,
    pub perturbation_radius: f64,
    pub ngram_n: usize,
    pub rbf_smoothing: f64,
    pub lengthscale: f64,
    pub sigma: f64,
    pub delta: f64,
    pub weight_floor: f64,
    pub scale_sigma_with_edge_length: bool,
    pub k_select: usize,
    pub explore: ExploreConfig,
    pub basin_hopping: BasinHoppingConfig,
    pub grid_resolution: usize,
    pub seed: u64,
    /// Not part of the config hash.
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dimension: 2,
            bounds: None,
            oracle: OracleSpec::Quantized { bins: 4, symbols: None },
            n_samples: 5000,
            n_neighbors: 10,
            perturbation_radius: 0.05,
            ngram_n: 2,
            rbf_smoothing: 1e-5,
            lengthscale: 80.0,
            sigma: 0.99,
            delta: 0.25,
            weight_floor: 0.0,
            scale_sigma_with_edge_length: false,
            k_select: 100,
            explore: ExploreConfig::default(),
            basin_hopping: BasinHoppingConfig {
                n_chains: 4,
                ..BasinHoppingConfig::default()
            },
            grid_resolution: 101,
            seed: 0,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Error::parse_json(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn bounds(&self) -> Result<Bounds> {
        match &self.bounds {
            Some(b) => Ok(b.clone()),
            None => Bounds::cube(self.dimension, 0.0, 1.0),
        }
    }

    pub fn field_config(&self) -> FieldConfig {
        FieldConfig {
            n_samples: self.n_samples,
            n_neighbors: self.n_neighbors,
            perturbation_radius: self.perturbation_radius,
            ngram_n: self.ngram_n,
        }
    }

    pub fn roughness_params(&self) -> RoughnessParams {
        RoughnessParams {
            lengthscale: self.lengthscale,
            sigma: self.sigma,
            delta: self.delta,
            weight_floor: self.weight_floor,
            scale_sigma_with_edge_length: self.scale_sigma_with_edge_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dimension == 0 {
            return fail("dimension must be >= 1".into());
        }
        let bounds = self.bounds().map_err(|e| Error::Config(e.to_string()))?;
        if bounds.dimension() != self.dimension {
            return fail(format!("bounds have dimension {}, expected {}", bounds.dimension(), self.dimension));
        }
        if self.n_samples < self.dimension + 2 {
            return fail(format!("n_samples must be >= dimension + 2 = {}", self.dimension + 2));
        }
        if self.n_neighbors == 0 || self.ngram_n == 0 || self.k_select == 0 {
            return fail("n_neighbors, ngram_n and k_select must be >= 1".into());
        }
        if !(self.perturbation_radius > 0.0) || !(self.rbf_smoothing >= 0.0) {
            return fail("perturbation_radius must be positive and rbf_smoothing non-negative".into());
        }
        if !(self.lengthscale > 0.0 && self.sigma > 0.0 && self.delta > 0.0) {
            return fail("lengthscale, sigma and delta must be positive".into());
        }
        if self.grid_resolution < 2 {
            return fail("grid_resolution must be >= 2".into());
        }
        self.explore.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.basin_hopping.validate().map_err(|e| Error::Config(e.to_string()))?;
        match &self.oracle {
            OracleSpec::Quantized { bins, symbols } => {
                if symbols.as_ref().is_some_and(|s| s.len() != *bins) {
                    return fail("quantized oracle: symbols must have one entry per bin".into());
                }
            }
            OracleSpec::Constant { tokens } if tokens.is_empty() => {
                return fail("constant oracle needs at least one token".into());
            }
            OracleSpec::Demo { .. } if self.dimension != 2 => {
                return fail("demo surface is two-dimensional".into());
            }
            _ => {}
        }
        self.oracle().map_err(|e| Error::Config(e.to_string()))?;
        self.analytic_surface().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, with `out_dir` removed.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialisation cannot fail");
        if let Value::Object(map) = &mut value {
            map.remove("out_dir");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// `None` when the surface is supplied analytically or from a file.
    pub fn oracle(&self) -> Result<Option<Box<dyn LatentOracle>>> {
        let bounds = self.bounds()?;
        Ok(match &self.oracle {
            OracleSpec::Quantized { bins, symbols: None } => Some(Box::new(QuantizedDecoder::new(bounds, *bins)?)),
            OracleSpec::Quantized { symbols: Some(s), .. } => Some(Box::new(QuantizedDecoder::with_symbols(bounds, s.clone())?)),
            OracleSpec::Constant { tokens } => Some(Box::new(ConstantOracle {
                dimension: self.dimension,
                sequence: TokenSequence::valid(tokens.clone())?,
            })),
            _ => None,
        })
    }

    pub fn analytic_surface(&self) -> Result<Option<AnalyticMixtureSurface>> {
        Ok(match &self.oracle {
            OracleSpec::Analytic { components } => Some(AnalyticMixtureSurface::new(self.dimension, components.clone())?),
            OracleSpec::Demo { seed } => Some(demo_surface(*seed)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sample,
    Fit,
    Explore,
    Frustration,
    Rough,
    Select,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Sample, Stage::Fit, Stage::Explore, Stage::Frustration, Stage::Rough, Stage::Select];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Sample => "sample",
            Stage::Fit => "fit",
            Stage::Explore => "explore",
            Stage::Frustration => "frustration",
            Stage::Rough => "rough",
            Stage::Select => "select",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub rank: usize,
    pub point: Point,
    pub roughness: Option<f64>,
    pub tokens: Option<Vec<u32>>,
    pub config_hash: String,
    pub seed: u64,
}

/// Ranked fill-tuning points with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FillTuneDataset {
    pub entries: Vec<DatasetEntry>,
    pub config_hash: String,
    pub seed: u64,
    /// Requested minus found.
    pub shortfall: usize,
}

impl FillTuneDataset {
    /// One JSON object per line, rank order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("dataset serialisation cannot fail"));
            out.push('\n');
        }
        out
    }

    /// Rejects records whose hash differs from `expected_hash`.
    pub fn from_jsonl(text: &str, expected_hash: &str, seed: u64) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let entry: DatasetEntry = Error::parse_json(line).map_err(|e| e.context(format!("line {}", i + 1)))?;
            check_hash(&format!("dataset line {}", i + 1), expected_hash, &entry.config_hash)?;
            if entry.rank != entries.len() + 1 {
                return Err(Error::Parse {
                    path: format!("line {}", i + 1),
                    message: format!("rank {} out of sequence", entry.rank),
                });
            }
            entries.push(entry);
        }
        Ok(FillTuneDataset {
            entries,
            config_hash: expected_hash.to_string(),
            seed,
            shortfall: 0,
        })
    }
}

fn check_hash(artifact: &str, expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::ConfigMismatch {
            artifact: artifact.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// `k` uniform points over `bounds`, without roughness values.
pub fn select_random_baseline(bounds: &Bounds, k: usize, seed: u64, config_hash: &str) -> Result<FillTuneDataset> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let mut rng = RandomSource::new(seed).child("baseline").rng();
    let entries = (0..k)
        .map(|i| DatasetEntry {
            rank: i + 1,
            point: bounds.sample_uniform(&mut rng),
            roughness: None,
            tokens: None,
            config_hash: config_hash.to_string(),
            seed,
        })
        .collect();
    Ok(FillTuneDataset {
        entries,
        config_hash: config_hash.to_string(),
        seed,
        shortfall: 0,
    })
}

/// CSV `x,y,value` over a `resolution × resolution` lattice including the
/// bounds; y is the outer loop.
pub fn export_grid(surface: &(impl Surface + ?Sized), bounds: &Bounds, resolution: usize) -> Result<String> {
    if surface.dimension() != 2 {
        return Err(Error::UnsupportedDimension(surface.dimension()));
    }
    bounds.check_dimension(2)?;
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be >= 2"));
    }
    let coord = |dim: usize, i: usize| {
        if i == resolution - 1 {
            bounds.upper()[dim]
        } else {
            bounds.lower()[dim] + bounds.width(dim) * i as f64 / (resolution - 1) as f64
        }
    };
    let mut out = String::from("x,y,value\n");
    for j in 0..resolution {
        let y = coord(1, j);
        for i in 0..resolution {
            let x = coord(0, i);
            let v = surface.value(&[x, y]);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    point: vec![x, y],
                    reason: "non-finite grid value".into(),
                });
            }
            let _ = writeln!(out, "{x:.16e},{y:.16e},{v:.16e}");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridTarget {
    /// The fitted or analytic surface.
    Surface,
    Roughness,
}

/// A validated config bound to an output directory.
pub struct Pipeline {
    config: PipelineConfig,
    hash: String,
    bounds: Bounds,
    out: PathBuf,
    rng: RandomSource,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Pipeline {
            hash: config.hash(),
            bounds: config.bounds()?,
            rng: RandomSource::new(config.seed),
            config,
            out,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Runs every stage in order; failures name the stage.
    pub fn run(&self) -> Result<FillTuneDataset> {
        for stage in &Stage::ALL[..5] {
            self.run_stage(*stage)?;
        }
        self.select().map_err(|e| e.context("stage select"))
    }

    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        info!("stage {}", stage.name());
        let result = match stage {
            Stage::Sample => self.sample(),
            Stage::Fit => self.fit(),
            Stage::Explore => self.explore(),
            Stage::Frustration => self.frustration(),
            Stage::Rough => self.rough(),
            Stage::Select => self.select().map(|_| ()),
        };
        result.map_err(|e| e.context(format!("stage {}", stage.name())))
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    }

    fn read(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    }

    fn write_json(&self, name: &str, body: Value) -> Result<()> {
        let mut map = match body {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        map.insert("config_hash".into(), Value::String(self.hash.clone()));
        self.write(name, &(Value::Object(map).to_string() + "\n"))
    }

    /// Checks and strips `config_hash`, returning the remaining document.
    fn read_json(&self, name: &str) -> Result<String> {
        let text = self.read(name)?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: name.to_string(),
            message: e.to_string(),
        })?;
        let found = value
            .as_object_mut()
            .and_then(|m| m.remove("config_hash"))
            .and_then(|v| v.as_str().map(str::to_string))
            .ok_or_else(|| Error::Parse {
                path: format!("{name}: config_hash"),
                message: "missing config hash".into(),
            })?;
        check_hash(name, &self.hash, &found)?;
        Ok(value.to_string())
    }

    fn is_analytic(&self) -> bool {
        matches!(self.config.oracle, OracleSpec::Analytic { .. } | OracleSpec::Demo { .. })
    }

    fn sample(&self) -> Result<()> {
        let field = match &self.config.oracle {
            OracleSpec::Analytic { .. } | OracleSpec::Demo { .. } => {
                info!("analytic surface configured; sampling skipped");
                return Ok(());
            }
            OracleSpec::FieldCsv { path } => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let field = SimilarityField::from_csv(&text)?;
                if field.dimension() != self.config.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.config.dimension,
                        got: field.dimension(),
                    });
                }
                field
            }
            _ => {
                let oracle = self.config.oracle()?.expect("decoding oracle configured");
                build_similarity_field(oracle.as_ref(), &self.bounds, &self.config.field_config(), &self.rng.child("sample"))?
            }
        };
        self.write(FIELD_CSV, &field.to_csv())?;
        self.write_json(FIELD_META, json!({ "rows": field.points.len(), "seed": self.config.seed }))
    }

    fn fit(&self) -> Result<()> {
        if self.is_analytic() {
            info!("analytic surface configured; fitting skipped");
            return Ok(());
        }
        self.read_json(FIELD_META)?;
        let field = SimilarityField::from_csv(&self.read(FIELD_CSV)?)?;
        let surface = RbfSurface::fit(&field.points, &field.values, self.config.rbf_smoothing)?;
        self.write_json(SURFACE_JSON, serde_json::to_value(&surface).expect("surface serialisation cannot fail"))
    }

    /// The surface explored for minima and transition states.
    pub fn load_surface(&self) -> Result<Box<dyn Surface>> {
        if let Some(s) = self.config.analytic_surface()? {
            return Ok(Box::new(s));
        }
        let surface: RbfSurface = Error::parse_json(&self.read_json(SURFACE_JSON)?)?;
        if surface.dimension != self.config.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.config.dimension,
                got: surface.dimension,
            });
        }
        Ok(Box::new(surface))
    }

    fn explore(&self) -> Result<()> {
        let surface = self.load_surface()?;
        let net = explore_landscape(surface.as_ref(), &self.bounds, &self.config.explore, &self.rng.child("explore"))?;
        info!("network: {} minima, {} edges", net.minima().len(), net.edges().len());
        self.write_json(NETWORK_JSON, serde_json::from_str(&net.to_json()).expect("network json is valid"))
    }

    pub fn load_network(&self) -> Result<KineticTransitionNetwork> {
        let mut net = KineticTransitionNetwork::from_json(&self.read_json(NETWORK_JSON)?)?;
        net.set_tolerances(self.config.explore.dedup);
        Ok(net)
    }

    fn frustration(&self) -> Result<()> {
        let net = self.load_network()?;
        let vectors: Vec<FrustrationVector> = all_frustration_vectors(&net, self.config.lengthscale)?;
        let overall = if vectors.is_empty() {
            warn!("network has no edges; overall frustration undefined");
            None
        } else {
            Some(vectors.iter().map(|v| v.frustration).sum::<f64>() / vectors.len() as f64)
        };
        self.write_json(
            FRUSTRATION_JSON,
            json!({
                "lengthscale": self.config.lengthscale,
                "overall_frustration": overall,
                "vectors": vectors,
            }),
        )
    }

    fn rough(&self) -> Result<()> {
        let net = self.load_network()?;
        let surface = build_roughness_surface(&net, &self.config.roughness_params())?;
        self.write_json(ROUGHNESS_JSON, serde_json::from_str(&surface.to_json()).expect("roughness json is valid"))
    }

    pub fn load_roughness(&self) -> Result<RoughnessSurface> {
        RoughnessSurface::from_json(&self.read_json(ROUGHNESS_JSON)?)
    }

    fn select(&self) -> Result<FillTuneDataset> {
        let surface = self.load_roughness()?;
        let selection = select_fill_points(
            &surface,
            &self.bounds,
            self.config.k_select,
            &self.rng.child("select"),
            &self.config.basin_hopping,
            &self.config.explore.minimizer,
        )?;
        if selection.shortfall > 0 {
            warn!(
                "found {} roughness maxima, {} fewer than requested",
                selection.points.len(),
                selection.shortfall
            );
        }
        let oracle = self.config.oracle()?;
        let entries = selection
            .points
            .into_iter()
            .enumerate()
            .map(|(i, (point, value))| {
                let tokens = match &oracle {
                    Some(o) => Some(o.decode(&point)?.tokens),
                    None => None,
                };
                Ok(DatasetEntry {
                    rank: i + 1,
                    point,
                    roughness: Some(value),
                    tokens,
                    config_hash: self.hash.clone(),
                    seed: self.config.seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dataset = FillTuneDataset {
            entries,
            config_hash: self.hash.clone(),
            seed: self.config.seed,
            shortfall: selection.shortfall,
        };
        self.write(DATASET_JSONL, &dataset.to_jsonl())?;
        Ok(dataset)
    }

    pub fn load_dataset(&self) -> Result<FillTuneDataset> {
        FillTuneDataset::from_jsonl(&self.read(DATASET_JSONL)?, &self.hash, self.config.seed)
    }

    /// Writes `baseline.jsonl` with `k_select` uniform points.
    pub fn baseline(&self) -> Result<FillTuneDataset> {
        let dataset = select_random_baseline(&self.bounds, self.config.k_select, self.config.seed, &self.hash)?;
        self.write(BASELINE_JSONL, &dataset.to_jsonl())?;
        Ok(dataset)
    }

    /// Writes `grid.csv` for the chosen surface.
    pub fn grid(&self, target: GridTarget) -> Result<()> {
        let csv = match target {
            GridTarget::Surface => export_grid(self.load_surface()?.as_ref(), &self.bounds, self.config.grid_resolution)?,
            GridTarget::Roughness => export_grid(&self.load_roughness()?, &self.bounds, self.config.grid_resolution)?,
        };
        self.write(GRID_CSV, &csv)
    }
}

/// Runs all stages for `config` into `out`.
pub fn run_pipeline(config: PipelineConfig, out: impl Into<PathBuf>) -> Result<FillTuneDataset> {
    Pipeline::new(config, out)?.run()
}
