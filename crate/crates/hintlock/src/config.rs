use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hintlock_core::distortion::DistortionSpec;
use hintlock_core::prob::JointPmf;
use hintlock_core::scheme::Version;

/// One JSON document describing an experiment. Every section is optional;
/// each subcommand reads the sections it needs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub rho: Vec<f64>,
    pub version: Option<VersionChoice>,
    pub alphas: Option<Vec<f64>>,
    pub z_counts: Option<Vec<usize>>,
    pub twohint: Option<TwoHintParams>,
    pub disks: Option<DiskParams>,
    pub distortion: Option<DistortionParams>,
    #[serde(default)]
    pub exponent: Vec<ExponentQuery>,
    pub suites: Option<Vec<String>>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// Inline joint `{"x", "y", "p"}`, a flat `{"probs"}` list, or `{"file"}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    File { file: PathBuf },
    Probs { probs: Vec<serde_json::Value> },
    Joint { x: Vec<String>, y: Vec<String>, p: Vec<Vec<serde_json::Value>> },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum VersionChoice {
    Guessing,
    List,
    Both,
}

impl VersionChoice {
    pub fn versions(self) -> Vec<Version> {
        match self {
            Self::Guessing => vec![Version::Guessing],
            Self::List => vec![Version::List],
            Self::Both => vec![Version::Guessing, Version::List],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoHintParams {
    pub m1: usize,
    pub m2: usize,
    /// Explicit `(cs, c1, c2)` triples; all admissible ones when absent.
    pub triples: Option<Vec<[usize; 3]>>,
    /// Bob's target; picks the triple by the three-case rule.
    pub u_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskParams {
    pub delta: usize,
    pub nu: usize,
    pub eta: usize,
    pub s: usize,
    pub p: Option<usize>,
    pub r: Option<usize>,
    pub u_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionParams {
    /// CSV table: header row of reconstruction labels, one row per symbol.
    pub table: Option<PathBuf>,
    pub level: f64,
    #[serde(default = "one")]
    pub n: usize,
    /// Descriptions for the side-information encoder.
    #[serde(default = "two")]
    pub z_count: usize,
    /// Remainders per scale in the list encoder built from the guesser.
    #[serde(default = "one")]
    pub omega: usize,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentQuery {
    TwoHint {
        r1: f64,
        r2: f64,
        rho: f64,
        entropy_rate: f64,
        e_bob: Option<f64>,
    },
    Disks {
        rate_s: f64,
        nu: usize,
        eta: usize,
        rho: f64,
        entropy_rate: f64,
        e_bob: Option<f64>,
    },
    RdPrivacy {
        r1: f64,
        r2: f64,
        rho: f64,
        functional: f64,
        e_bob: Option<f64>,
    },
    /// Uses the config's source and distortion sections.
    RdFunction { level: f64 },
    RdFunctional {
        level: f64,
        rho: f64,
        #[serde(default)]
        dump_witness: bool,
    },
}

impl ExperimentConfig {
    /// Parse with field-path diagnostics; relative file references resolve
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text).with_context(|| format!("in config {}", path.display()))?, base))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow::anyhow!("field `{path}`: {inner}")
        })?;
        if cfg.rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            bail!("field `rho`: every entry must be positive and finite");
        }
        if cfg.budget == Some(0) {
            bail!("field `budget`: must be positive");
        }
        Ok(cfg)
    }

    pub fn rhos(&self) -> Vec<f64> {
        if self.rho.is_empty() {
            vec![1.0]
        } else {
            self.rho.clone()
        }
    }

    pub fn versions(&self, default: VersionChoice) -> Vec<Version> {
        self.version.unwrap_or(default).versions()
    }

    pub fn joint(&self, base: &Path, rational: bool) -> Result<JointPmf> {
        let spec = self.source.as_ref().context("field `source`: required by this command")?;
        let doc = match spec {
            SourceSpec::File { file } => {
                let path = base.join(file);
                let text = fs::read_to_string(&path).with_context(|| format!("field `source.file`: reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("field `source.file`: {} is not JSON", path.display()))?
            }
            SourceSpec::Probs { probs } => serde_json::json!({
                "x": (0..probs.len()).map(|i| i.to_string()).collect::<Vec<_>>(),
                "y": ["0"],
                "p": probs.iter().map(|v| vec![v.clone()]).collect::<Vec<_>>(),
            }),
            SourceSpec::Joint { x, y, p } => serde_json::json!({ "x": x, "y": y, "p": p }),
        };
        let doc = if rational { exact_literals(doc) } else { doc };
        JointPmf::from_json(&doc.to_string()).context("field `source`")
    }

    pub fn distortion_spec(&self, base: &Path, n_x: usize) -> Result<DistortionSpec> {
        let d = self.distortion.as_ref().context("field `distortion`: required by this command")?;
        self.spec_at(base, n_x, d.level)
    }

    pub fn spec_at(&self, base: &Path, n_x: usize, level: f64) -> Result<DistortionSpec> {
        match self.distortion.as_ref().and_then(|d| d.table.as_ref()) {
            Some(table) => {
                let path = base.join(table);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("field `distortion.table`: reading {}", path.display()))?;
                DistortionSpec::from_csv(&text, level).context("field `distortion.table`")
            }
            None => DistortionSpec::hamming(n_x, level).context("field `distortion.level`"),
        }
    }
}

/// Turn numeric probability entries into their decimal text so the source
/// is read exactly.
fn exact_literals(mut doc: serde_json::Value) -> serde_json::Value {
    if let Some(rows) = doc.get_mut("p").and_then(|p| p.as_array_mut()) {
        for row in rows {
            if let Some(cells) = row.as_array_mut() {
                for c in cells {
                    if let serde_json::Value::Number(n) = c {
                        *c = serde_json::Value::String(n.to_string());
                    }
                }
            }
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_names_its_path() {
        let err = ExperimentConfig::parse(r#"{"twohint": {"m1": 4, "m3": 4}}"#).unwrap_err();
        assert!(err.to_string().contains("twohint"), "{err}");
    }

    #[test]
    fn wrong_type_names_its_path() {
        let err = ExperimentConfig::parse(r#"{"disks": {"delta": "three", "nu": 2, "eta": 1, "s": 4}}"#).unwrap_err();
        assert!(err.to_string().contains("disks.delta"), "{err}");
    }

    #[test]
    fn sources_in_three_forms() {
        let cfg = ExperimentConfig::parse(r#"{"source": {"probs": [0.25, 0.25, 0.5]}}"#).unwrap();
        assert_eq!(cfg.joint(Path::new("."), false).unwrap().n_x(), 3);
        let cfg = ExperimentConfig::parse(r#"{"source": {"x": ["a","b"], "y": ["u","v"], "p": [[0.1, 0.2], [0.3, 0.4]]}}"#).unwrap();
        assert_eq!(cfg.joint(Path::new("."), false).unwrap().n_y(), 2);
        assert!(cfg.joint(Path::new("."), true).unwrap().has_exact());
    }

    #[test]
    fn rational_mode_rejects_inexact_sums() {
        let cfg = ExperimentConfig::parse(r#"{"source": {"probs": [0.3, 0.3, 0.3]}}"#).unwrap();
        assert!(cfg.joint(Path::new("."), true).is_err());
        let cfg = ExperimentConfig::parse(r#"{"source": {"probs": ["1/3", "1/3", "1/3"]}}"#).unwrap();
        assert!(cfg.joint(Path::new("."), true).unwrap().has_exact());
    }

    #[test]
    fn exponent_queries_are_tagged() {
        let cfg = ExperimentConfig::parse(
            r#"{"exponent": [{"kind": "two-hint", "r1": 1, "r2": 1, "rho": 1, "entropy_rate": 1.5},
                             {"kind": "rd-functional", "level": 0.1, "rho": 1}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.exponent.len(), 2);
    }
}
