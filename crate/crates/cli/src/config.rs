use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hsl::chaos::ChaosSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Tolerances used by the per-subcommand checks, overridable by key.
pub const DEFAULT_TOLERANCES: [(&str, f64); 9] = [
    ("moment_rel", 1e-10),
    ("reproducing", 1e-10),
    ("asymptote_rel", 0.10),
    ("gaunt_rel", 1e-6),
    ("four_point_band", 2.0),
    ("variance_z", 3.0),
    ("sigma_z", 3.0),
    ("w1_slope", 0.15),
    ("sigma_w1_slope", 0.3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Exponential {
        t: f64,
        /// truncation order; chosen automatically when absent
        #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
        q: Option<usize>,
    },
    Hermite {
        p: u32,
    },
    Polynomial {
        monomials: Vec<f64>,
    },
    Tabulated {
        coeffs: Vec<f64>,
    },
    Indicator {
        level: f64,
        #[serde(rename = "Q")]
        q: usize,
    },
}

impl PhiConfig {
    pub fn build(&self) -> Result<ChaosSpec> {
        Ok(match self {
            PhiConfig::Exponential { t, q: None } => ChaosSpec::exponential(*t)?,
            PhiConfig::Exponential { t, q: Some(q) } => ChaosSpec::exponential_with(*t, *q)?,
            PhiConfig::Hermite { p } => ChaosSpec::hermite(*p),
            PhiConfig::Polynomial { monomials } => ChaosSpec::polynomial(monomials.clone()),
            PhiConfig::Tabulated { coeffs } => ChaosSpec::tabulated(coeffs.clone())?,
            PhiConfig::Indicator { level, q } => ChaosSpec::indicator(*level, *q),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// harmonic synthesis on S^2, covariance factorization otherwise
    Auto,
    Harmonic,
    Cholesky,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: u32,
    pub ell_list: Vec<u32>,
    pub phi: PhiConfig,
    pub backend: BackendChoice,
    pub oversample: usize,
    pub reps: u64,
    pub mc_samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// largest Hermite degree in the diagram and four-point scans
    pub q_max: u32,
    pub with_sigma: bool,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 2,
            ell_list: vec![8, 16, 32, 64, 128],
            phi: PhiConfig::Exponential { t: 0.5, q: None },
            backend: BackendChoice::Auto,
            oversample: 2,
            reps: 10_000,
            mc_samples: 1_000_000,
            seed: 20_240_917,
            out_dir: PathBuf::from("hsl-out"),
            q_max: 3,
            with_sigma: true,
            tolerances: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses JSON; errors name the offending field path and the line/column.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        match serde_path_to_error::deserialize::<_, ExperimentConfig>(de) {
            Ok(cfg) => Ok(cfg),
            Err(e) => {
                let path = e.path().to_string();
                let inner = e.into_inner();
                bail!("field `{path}` at line {} column {}: {inner}", inner.line(), inner.column())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            bail!("d must be at least 2, got {}", self.d);
        }
        if self.ell_list.is_empty() {
            bail!("ell_list is empty");
        }
        if let Some(l) = self.ell_list.iter().find(|&&l| l == 0 || l % 2 == 1) {
            bail!("ell_list entries must be even and positive, got {l}");
        }
        if self.ell_list.windows(2).any(|w| w[1] <= w[0]) {
            bail!("ell_list must be strictly increasing");
        }
        if self.reps < 1 {
            bail!("reps must be at least 1");
        }
        if self.oversample < 1 {
            bail!("oversample must be at least 1");
        }
        if self.backend == BackendChoice::Harmonic && self.d != 2 {
            bail!("the harmonic backend is available on S^2 only");
        }
        for key in self.tolerances.keys() {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == key) {
                let known: Vec<&str> = DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect();
                bail!("unknown tolerance `{key}`; known: {}", known.join(", "));
            }
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances
            .get(key)
            .copied()
            .or_else(|| DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .unwrap_or_else(|| panic!("no tolerance named {key}"))
    }

    /// sha256 of the canonical JSON form (object keys sorted). The output
    /// directory does not affect results and is left out.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("config is an object").remove("out_dir");
        hex(&Sha256::digest(canonical_json(&value).as_bytes()))
    }

    pub fn defaults_json() -> String {
        serde_json::to_string_pretty(&ExperimentConfig::default()).expect("config serializes")
    }
}

fn canonical_json(v: &serde_json::Value) -> String {
    use serde_json::Value;
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let parts: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", serde_json::to_string(k).unwrap(), canonical_json(&m[*k])))
                .collect();
            format!("{{{}}}", parts.join(","))
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
