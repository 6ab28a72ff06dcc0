use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use anyhow::{bail, Context, Result};
use dunkl_hermite::hermite::Arithmetic;
use dunkl_hermite::kernels::KernelConfig;
use dunkl_hermite::reflection::{MultiplicityValues, RootSystem, RootSystemConfig};
use dunkl_hermite::verify::{CheckName, VerifyConfig};
use serde::{Deserialize, Serialize};

/// Largest degree accepted in dimension two and above unless raised with
/// `max_degree`; the basis grows like `N^d`.
pub const DEFAULT_DEGREE_CAP: u32 = 12;
/// Cap for rank-one systems, where the basis grows linearly.
pub const DEFAULT_DEGREE_CAP_RANK_ONE: u32 = 200;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Where built bases are cached; `<dir>/cache` when absent.
    pub cache_dir: Option<PathBuf>,
    /// Load this basis file instead of building or using the cache.
    pub basis_file: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), cache_dir: None, basis_file: None }
    }
}

/// Everything a run needs. Command-line flags override the file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub root_system: RootSystemConfig,
    pub degree: u32,
    /// Exact when the root system allows it, unless set.
    pub arithmetic: Option<Arithmetic>,
    pub max_degree: Option<u32>,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub checks: Vec<CheckName>,
    /// Settings of the individual checks. Seed and kernel options are taken
    /// from the top level.
    #[serde(serialize_with = "without_shared_fields")]
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

/// The schema published with the documentation.
pub const SCHEMA: &str = include_str!("../../../docs/config.schema.json");

fn schema() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema = serde_json::from_str(SCHEMA).expect("schema is valid JSON");
        jsonschema::validator_for(&schema).expect("schema compiles")
    })
}

/// Fields of [`VerifyConfig`] that are set once at the top level.
const SHARED_FIELDS: [&str; 2] = ["seed", "kernel"];

fn without_shared_fields<S: serde::Serializer>(v: &VerifyConfig, s: S) -> Result<S::Ok, S::Error> {
    let mut value = serde_json::to_value(v).map_err(serde::ser::Error::custom)?;
    if let Some(map) = value.as_object_mut() {
        for key in SHARED_FIELDS {
            map.remove(key);
        }
    }
    value.serialize(s)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            root_system: RootSystemConfig::Catalogue {
                name: "z2".into(),
                multiplicity: MultiplicityValues::Uniform(0.5),
            },
            degree: 6,
            arithmetic: None,
            max_degree: None,
            seed: VerifyConfig::default().seed,
            kernel: KernelConfig::default(),
            checks: CheckName::ALL.to_vec(),
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Flag values that replace their counterparts in the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub group: Option<String>,
    pub kappa: Option<Vec<f64>>,
    pub degree: Option<u32>,
    pub checks: Option<Vec<CheckName>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses a config after validating it against the published schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let problems: Vec<String> =
            schema().iter_errors(&raw).map(|e| format!("{}: {e}", e.instance_path())).collect();
        if !problems.is_empty() {
            bail!("config does not match the schema:\n  {}", problems.join("\n  "));
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn apply(&mut self, o: Overrides) {
        let current = match &self.root_system {
            RootSystemConfig::Catalogue { multiplicity, .. } | RootSystemConfig::Explicit { multiplicity, .. } => {
                multiplicity.clone()
            }
        };
        let multiplicity = match o.kappa {
            Some(k) if k.len() == 1 => MultiplicityValues::Uniform(k[0]),
            Some(k) => MultiplicityValues::List(k),
            None => current,
        };
        self.root_system = match (o.group, self.root_system.clone()) {
            (Some(name), _) => RootSystemConfig::Catalogue { name, multiplicity },
            (None, RootSystemConfig::Catalogue { name, .. }) => RootSystemConfig::Catalogue { name, multiplicity },
            (None, RootSystemConfig::Explicit { roots, .. }) => RootSystemConfig::Explicit { roots, multiplicity },
        };
        if let Some(n) = o.degree {
            self.degree = n;
        }
        if let Some(c) = o.checks {
            self.checks = c;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(dir) = o.out {
            self.output.dir = dir;
        }
    }

    /// Checks the domain constraints and builds the root system.
    pub fn validate(&self) -> Result<RootSystem> {
        let kappa = match &self.root_system {
            RootSystemConfig::Catalogue { multiplicity, .. } | RootSystemConfig::Explicit { multiplicity, .. } => {
                multiplicity.as_slice()
            }
        };
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            bail!("multiplicity {k} is not allowed; values must be finite and non-negative");
        }
        let rs = self.root_system.build()?;
        let cap = self.max_degree.unwrap_or(if rs.dim() == 1 { DEFAULT_DEGREE_CAP_RANK_ONE } else { DEFAULT_DEGREE_CAP });
        if self.degree > cap {
            bail!("degree {} exceeds the cap {cap}; raise `max_degree` to allow it", self.degree);
        }
        if self.arithmetic == Some(Arithmetic::Exact) && rs.exact().is_none() {
            bail!("exact arithmetic is not available for {}", rs.label());
        }
        self.kernel.validate()?;
        Ok(rs)
    }

    pub fn arithmetic_for(&self, rs: &RootSystem) -> Arithmetic {
        self.arithmetic.unwrap_or(if rs.exact().is_some() { Arithmetic::Exact } else { Arithmetic::Float })
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig { seed: self.seed, kernel: self.kernel.clone(), ..self.verify.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back.degree, 6);
        assert_eq!(back.checks.len(), 10);
    }

    #[test]
    fn default_config_matches_the_schema() {
        let value = serde_json::to_value(RunConfig::default()).unwrap();
        let errors: Vec<String> = schema().iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }

    #[test]
    fn schema_rejects_negative_multiplicity() {
        let text = r#"{"root_system": {"type": "catalogue", "name": "z2", "multiplicity": [-1]}}"#;
        assert!(RunConfig::from_json(text).unwrap_err().to_string().contains("schema"));
    }

    #[test]
    fn nested_seed_is_rejected() {
        assert!(RunConfig::from_json(r#"{"verify": {"seed": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"degre": 3}"#).is_err());
    }

    #[test]
    fn flags_override_the_file() {
        let mut c = RunConfig::from_json(r#"{"root_system": {"type": "catalogue", "name": "b2", "multiplicity": [1, 2]}}"#)
            .unwrap();
        c.apply(Overrides { kappa: Some(vec![0.5]), degree: Some(3), ..Default::default() });
        let rs = c.validate().unwrap();
        assert_eq!(rs.label(), "b2");
        assert_eq!(c.degree, 3);
        c.apply(Overrides { kappa: Some(vec![-1.0]), ..Default::default() });
        assert!(c.validate().is_err());
    }

    #[test]
    fn degree_cap_depends_on_rank() {
        let mut c = RunConfig { degree: 40, ..RunConfig::default() };
        assert!(c.validate().is_ok());
        c.apply(Overrides { group: Some("z2^2".into()), ..Default::default() });
        assert!(c.validate().is_err());
        c.max_degree = Some(40);
        assert!(c.validate().is_ok());
    }
}
