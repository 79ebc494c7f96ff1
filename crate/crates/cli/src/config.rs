//! Run configuration: a strict TOML document with unit-suffixed keys.
//!
//! Storage quantities are normalized to the cache capacity scale and carry
//! the `_norm` suffix; times are in seconds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    /// Subset of `mf`, `baseline`, `random`.
    #[serde(default)]
    pub policies: Vec<String>,
    pub radio: RadioSection,
    pub demand: DemandSection,
    pub cost: CostSection,
    pub lattice: LatticeSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub sim: SimSection,
    #[serde(default)]
    pub ipi: Option<IpiSection>,
    pub content: Vec<ContentSection>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingName {
    Rayleigh,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub sbs_density_per_m2: f64,
    pub user_density_per_m2: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub pathloss_exponent: f64,
    pub antennas: u32,
    pub reception_radius_m: f64,
    #[serde(default = "default_fading")]
    pub fading: FadingName,
}

fn default_fading() -> FadingName {
    FadingName::Rayleigh
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSection {
    pub catalog_size: usize,
    pub crp_concentration: f64,
    pub crp_discount: f64,
    /// Requests drawn before reading CRP mean popularities.
    #[serde(default)]
    pub crp_warmup_requests: u64,
    pub reversion_rate_per_s: f64,
    pub volatility_per_sqrt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub file_size_norm: f64,
    pub capacity_norm: f64,
    pub backhaul_norm_per_s: f64,
    pub discard_rate_norm_per_s: f64,
    /// Weight `γ` of the storage term; negative values reward occupancy.
    pub storage_weight: f64,
    pub similar_contents: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub nx: usize,
    pub nq: usize,
    pub horizon_s: f64,
    /// Time steps; the smallest stable count when absent.
    #[serde(default)]
    pub nt: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalName {
    Zero,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub terminal: TerminalName,
    #[serde(default = "default_floor")]
    pub control_floor: f64,
}

fn default_floor() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub storage_mean_norm: f64,
    pub storage_sd_norm: f64,
    /// Spread of the initial popularity density; a point mass when absent.
    #[serde(default)]
    pub popularity_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub window_m: f64,
    pub request_range_m: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpiSection {
    pub bias: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSection {
    pub name: String,
    pub initial_popularity: f64,
    /// Long-run popularity; taken from the CRP draw at `catalog_index`
    /// when absent.
    #[serde(default)]
    pub mean_popularity: Option<f64>,
    #[serde(default)]
    pub catalog_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path such as `radio.sbs_density_per_m2` or
    /// `content.0.initial_popularity`.
    pub key: String,
    pub values: Vec<f64>,
}

pub const POLICY_NAMES: [&str; 3] = ["mf", "baseline", "random"];

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        for p in &self.policies {
            if !POLICY_NAMES.contains(&p.as_str()) {
                return Err(CliError::Config(format!("unknown policy `{p}`; expected one of {POLICY_NAMES:?}")));
            }
        }
        if self.content.is_empty() {
            return Err(CliError::Config("at least one [[content]] entry is required".into()));
        }
        for (i, c) in self.content.iter().enumerate() {
            if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(CliError::Config(format!("content {i}: name `{}` must be nonempty [A-Za-z0-9_-]", c.name)));
            }
            if c.mean_popularity.is_some() == c.catalog_index.is_some() {
                return Err(CliError::Config(format!(
                    "content `{}`: give exactly one of mean_popularity and catalog_index",
                    c.name
                )));
            }
            if self.content[..i].iter().any(|o| o.name == c.name) {
                return Err(CliError::Config(format!("duplicate content name `{}`", c.name)));
            }
        }
        Ok(())
    }

    pub fn wants(&self, policy: &str) -> bool {
        self.policies.iter().any(|p| p == policy)
    }
}

/// A parsed but not yet typed configuration, which sweeps edit in place.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDoc {
    table: toml::Table,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::Config(format!("malformed TOML: {e}")))?;
        let doc = Self { table };
        doc.resolve()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = presets::get(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset `{name}`; available: {}", presets::names().join(", ")))
        })?;
        Self::parse(text)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::Value::Table(self.table.clone())
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Sets a numeric field. Integer fields accept whole numbers only.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let mut root = toml::Value::Table(std::mem::take(&mut self.table));
        let outcome = assign(&mut root, key, value);
        let toml::Value::Table(table) = root else { unreachable!() };
        self.table = table;
        outcome?;
        self.resolve()?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) -> Result<(), CliError> {
        let sim = self
            .table
            .get_mut("sim")
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| CliError::Config("missing [sim] table".into()))?;
        let seed = i64::try_from(seed).map_err(|_| CliError::Config(format!("seed {seed} exceeds the TOML integer range")))?;
        sim.insert("seed".into(), toml::Value::Integer(seed));
        self.resolve()?;
        Ok(())
    }

    /// Drops the sweep axes, leaving a single-run document.
    pub fn without_sweep(&self) -> Self {
        let mut table = self.table.clone();
        table.remove("sweep");
        Self { table }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.table).expect("a parsed table serializes")
    }
}

fn assign(root: &mut toml::Value, key: &str, value: f64) -> Result<(), CliError> {
    let mut node = root;
    for part in key.split('.') {
        node = step(node, part).ok_or_else(|| CliError::Config(format!("unknown config key `{key}`")))?;
    }
    *node = match node {
        toml::Value::Integer(_) if value.fract() == 0.0 && value.is_finite() => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => return Err(CliError::Config(format!("`{key}` is an integer field, got {value}"))),
        toml::Value::Float(_) => toml::Value::Float(value),
        _ => return Err(CliError::Config(format!("`{key}` is not a numeric field"))),
    };
    Ok(())
}

fn step<'a>(node: &'a mut toml::Value, part: &str) -> Option<&'a mut toml::Value> {
    match node {
        toml::Value::Table(t) => t.get_mut(part),
        toml::Value::Array(a) => part.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
        _ => None,
    }
}
