//! Experiment configuration: a single JSON document describing the space,
//! the path measure, path families, functions and per-task parameters.
//!
//! Resolution turns the raw document into validated library inputs before
//! any computation runs; every error names the field responsible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use musob::path::{dyadic_interval_family, generate_slope_family};
use musob::sobolev::GridFunction;
use musob::{Field, GroundGrid, MetricDescriptor, PathMeasure, Polyline};

use crate::expr;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyConfig>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionConfig>,
    #[serde(default)]
    pub tasks: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dimension: usize,
    pub extent: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub metric: MetricDescriptor,
    /// Expression for the m-weight integrated over each cell.
    #[serde(default = "default_weight")]
    pub m_weight: String,
}

fn default_weight() -> String {
    "1".to_string()
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeasureConfig {
    #[default]
    ArcLength,
    Weighted {
        omega: String,
    },
    ParabolicHeight,
    Density {
        axis: usize,
        table: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default)]
    pub paths: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub slope_family: Option<SlopeFamilyConfig>,
    #[serde(default)]
    pub axis_intervals: Option<AxisIntervalsConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeFamilyConfig {
    pub k: f64,
    pub region: Vec<(f64, f64)>,
    pub count: usize,
    /// Mandatory: stochastic generators must be reproducible.
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisIntervalsConfig {
    pub from: f64,
    pub to: f64,
    pub max_level: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

/// Everything resolved and validated, ready for task dispatch.
pub struct Experiment {
    pub grid: GroundGrid,
    pub measure: PathMeasure,
    pub families: BTreeMap<String, Vec<Polyline>>,
    pub functions: BTreeMap<String, ResolvedFunction>,
    pub tasks: BTreeMap<String, serde_json::Value>,
}

/// A function is either a closed-form field or tabulated cell values; both
/// expose a field view, and grid samples are always available.
pub struct ResolvedFunction {
    pub field: Field,
    pub on_grid: GridFunction,
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    resolve(config, path.parent().unwrap_or(Path::new(".")), seed_override)
}

pub fn resolve(
    config: ExperimentConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Experiment> {
    let space = &config.space;
    if space.extent.len() != space.dimension || space.resolution.len() != space.dimension {
        bail!(
            "space: extent and resolution must have {} entries",
            space.dimension
        );
    }
    let m_weight = expr::parse_field(&space.m_weight)
        .with_context(|| format!("space.m_weight `{}`", space.m_weight))?;
    let grid = GroundGrid::uniform(
        &space.extent,
        &space.resolution,
        space.metric.clone(),
        &m_weight,
    )
    .map_err(|e| anyhow!("space: {e}"))?;

    let measure = match &config.measure {
        MeasureConfig::ArcLength => PathMeasure::ArcLength,
        MeasureConfig::ParabolicHeight => PathMeasure::ParabolicHeight,
        MeasureConfig::Weighted { omega } => PathMeasure::weighted(
            expr::parse_field(omega).with_context(|| format!("measure.omega `{omega}`"))?,
        ),
        MeasureConfig::Density { axis, table } => {
            PathMeasure::density(*axis, table.clone()).map_err(|e| anyhow!("measure: {e}"))?
        }
    };

    let mut families = BTreeMap::new();
    for (name, fam) in &config.families {
        let mut paths: Vec<Polyline> = Vec::new();
        for (i, vertices) in fam.paths.iter().enumerate() {
            paths.push(
                Polyline::new(vertices.clone())
                    .map_err(|e| anyhow!("families.{name}.paths[{i}]: {e}"))?,
            );
        }
        if let Some(sf) = &fam.slope_family {
            let seed = seed_override.or(sf.seed).ok_or_else(|| {
                anyhow!("families.{name}.slope_family.seed: a seed is mandatory")
            })?;
            paths.extend(
                generate_slope_family(sf.k, &sf.region, sf.count, seed)
                    .map_err(|e| anyhow!("families.{name}.slope_family: {e}"))?,
            );
        }
        if let Some(ai) = &fam.axis_intervals {
            paths.extend(
                dyadic_interval_family(ai.from, ai.to, ai.max_level)
                    .map_err(|e| anyhow!("families.{name}.axis_intervals: {e}"))?,
            );
        }
        if paths.is_empty() {
            bail!("families.{name}: no paths configured");
        }
        families.insert(name.clone(), paths);
    }

    let mut functions = BTreeMap::new();
    for (name, fc) in &config.functions {
        let resolved = match (&fc.expr, &fc.csv) {
            (Some(src), None) => {
                let field =
                    expr::parse_field(src).with_context(|| format!("functions.{name}.expr"))?;
                let on_grid = GridFunction::from_field(&grid, &field)
                    .map_err(|e| anyhow!("functions.{name}: {e}"))?;
                ResolvedFunction { field, on_grid }
            }
            (None, Some(rel)) => {
                let path = base_dir.join(rel);
                let values = read_grid_csv(&path)
                    .with_context(|| format!("functions.{name}.csv {}", path.display()))?;
                let on_grid = GridFunction::new(&grid, values)
                    .map_err(|e| anyhow!("functions.{name}: {e}"))?;
                let field = on_grid.as_field(&grid);
                ResolvedFunction { field, on_grid }
            }
            _ => bail!("functions.{name}: exactly one of `expr` or `csv` is required"),
        };
        functions.insert(name.clone(), resolved);
    }

    Ok(Experiment { grid, measure, families, functions, tasks: config.tasks })
}

impl Experiment {
    pub fn family(&self, name: &str) -> Result<&[Polyline]> {
        self.families
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| anyhow!("unknown family `{name}`"))
    }

    pub fn function(&self, name: &str) -> Result<&ResolvedFunction> {
        self.functions
            .get(name)
            .ok_or_else(|| anyhow!("unknown function `{name}`"))
    }

    pub fn task<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<T> {
        let raw = self
            .tasks
            .get(name)
            .ok_or_else(|| anyhow!("config has no `tasks.{name}` block"))?;
        serde_json::from_value(raw.clone()).with_context(|| format!("tasks.{name}"))
    }
}

/// Read a two-column `cell,value` CSV (header optional).
pub fn read_grid_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let first = parts.next().unwrap_or("").trim();
        let second = parts.next().unwrap_or("").trim();
        if lineno == 0 && first.parse::<usize>().is_err() {
            continue; // header
        }
        let idx: usize = first
            .parse()
            .map_err(|_| anyhow!("line {}: bad cell index `{first}`", lineno + 1))?;
        let value: f64 = second
            .parse()
            .map_err(|_| anyhow!("line {}: bad value `{second}`", lineno + 1))?;
        entries.push((idx, value));
    }
    entries.sort_by_key(|(i, _)| *i);
    for (expected, (got, _)) in entries.iter().enumerate() {
        if *got != expected {
            bail!("cell indices must cover 0..n without gaps; missing {expected}");
        }
    }
    Ok(entries.into_iter().map(|(_, v)| v).collect())
}
