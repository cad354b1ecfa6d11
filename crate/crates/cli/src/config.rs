//! Job configuration: one INI-style file of `key = value` lines under
//! `[section]` headers, overlaid with command-line flags.
//!
//! Every setting lives in a flat map keyed `section.key`. The map, not the
//! file text, is what gets hashed into output headers, so formatting changes
//! to a config file do not change the recorded hash.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, ParseOption};
use sha2::{Digest, Sha256};

use toma_core::aspect::AspectSchema;
use toma_core::ingest::MergeMap;
use toma_core::measures::{AspectGains, Depth, MeasureConfig, MeasureKind, MmVariant};
use toma_core::order::{MetricKind, WeightPolicy};
use toma_core::pipeline::{EvalPlan, Family};

use crate::CliError;

/// Sections with a fixed key set. Other known sections take aspect names as keys.
const FIXED_KEYS: &[(&str, &[&str])] = &[
    ("input", &["schema", "qrels", "runs", "run_order"]),
    ("measure", &["kind", "depth", "log_base", "families"]),
    ("order", &["metric", "weights"]),
    ("baseline", &["aspect_weights", "mm_variant"]),
    ("analysis", &["scores", "samples", "alpha", "seed", "k", "bands", "audit_measure"]),
    ("discretize", &["signals", "method", "fractions", "grades", "thresholds", "pool"]),
    ("output", &["dir"]),
];
const ASPECT_SECTIONS: &[&str] = &["gains", "relevant", "merge", "aspect_qrels"];

/// Keys whose values are file paths, resolved against the directory of the
/// file that set them.
const PATH_KEYS: &[&str] = &[
    "input.schema",
    "input.qrels",
    "input.runs",
    "analysis.scores",
    "discretize.signals",
    "discretize.pool",
    "output.dir",
];

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_BANDS: &str = "1-25 26-50 51-75 76-100";

#[derive(Debug, Clone, Default)]
pub struct JobConfig {
    values: BTreeMap<String, String>,
    /// Directory that relative paths in each key are resolved against.
    bases: BTreeMap<String, PathBuf>,
}

fn bad(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

fn list(value: &str) -> Vec<&str> {
    value.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect()
}

fn parse_pair<'a>(item: &'a str, key: &str) -> Result<(&'a str, &'a str), CliError> {
    item.split_once(':')
        .ok_or_else(|| bad(format!("{key}: expected `name:value`, found `{item}`")))
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_with_base(&text, &base).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn from_str_with_base(text: &str, base: &Path) -> Result<Self, CliError> {
        let opts = ParseOption {
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opts).map_err(|e| bad(e.to_string()))?;
        let mut cfg = JobConfig::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(bad(format!("key `{key}` appears before any [section] header")));
                }
                continue;
            };
            let fixed = FIXED_KEYS.iter().find(|(s, _)| *s == section);
            if fixed.is_none() && !ASPECT_SECTIONS.contains(&section) {
                return Err(bad(format!("unknown section [{section}]")));
            }
            for (key, value) in props.iter() {
                if let Some((_, keys)) = fixed {
                    if !keys.contains(&key) {
                        return Err(bad(format!("unknown key `{key}` in [{section}]")));
                    }
                }
                let full = format!("{section}.{key}");
                if cfg.values.insert(full.clone(), value.trim().to_string()).is_some() {
                    return Err(bad(format!("`{key}` set twice in [{section}]")));
                }
                cfg.bases.insert(full, base.to_path_buf());
            }
        }
        Ok(cfg)
    }

    /// Sets `key` from a flag; flag paths are relative to the working directory.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
        self.bases.insert(key.to_string(), PathBuf::new());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| bad(format!("missing setting `{key}`")))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| bad(format!("{key}: {e}"))))
            .transpose()
    }

    fn resolve(&self, key: &str, value: &str) -> PathBuf {
        debug_assert!(PATH_KEYS.contains(&key));
        let base = self.bases.get(key).cloned().unwrap_or_default();
        base.join(value)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.resolve(key, v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.require(key).map(|v| self.resolve(key, v))
    }

    pub fn paths(&self, key: &str) -> Vec<PathBuf> {
        self.get(key)
            .map(|v| list(v).into_iter().map(|p| self.resolve(key, p)).collect())
            .unwrap_or_default()
    }

    /// Entries of an aspect-keyed section, with `aspect_qrels` paths resolved.
    pub fn section(&self, section: &str) -> Vec<(&str, &str)> {
        let prefix = format!("{section}.");
        self.values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&prefix).map(|a| (a, v.as_str())))
            .collect()
    }

    pub fn aspect_qrels(&self) -> Vec<(String, PathBuf)> {
        self.section("aspect_qrels")
            .into_iter()
            .map(|(aspect, file)| {
                let key = format!("aspect_qrels.{aspect}");
                let base = self.bases.get(&key).cloned().unwrap_or_default();
                (aspect.to_string(), base.join(file))
            })
            .collect()
    }

    /// Hex SHA-256 of the effective settings as sorted `key = value` lines.
    pub fn hash(&self) -> String {
        let mut canonical = String::new();
        // where results are written does not change them
        for (k, v) in self.values.iter().filter(|(k, _)| *k != "output.dir") {
            let _ = writeln!(canonical, "{k} = {v}");
        }
        Sha256::digest(canonical.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    pub fn seed(&self) -> Result<Option<u64>, CliError> {
        self.parsed("analysis.seed")
    }

    pub fn metric(&self) -> Result<MetricKind, CliError> {
        Ok(self.parsed("order.metric")?.unwrap_or(MetricKind::Euclidean))
    }

    pub fn measure_kind(&self) -> Result<MeasureKind, CliError> {
        Ok(self.parsed("measure.kind")?.unwrap_or(MeasureKind::Ndcg))
    }

    /// Distinct integers for nDCG; AP needs binary weights, so it defaults to the top half.
    pub fn weight_policy(&self, kind: MeasureKind) -> Result<WeightPolicy, CliError> {
        let Some(value) = self.get("order.weights") else {
            return Ok(match kind {
                MeasureKind::Ndcg => WeightPolicy::DistinctIntegers,
                MeasureKind::Ap => WeightPolicy::BinaryTopHalf,
            });
        };
        if let Ok(policy) = value.parse::<WeightPolicy>() {
            return Ok(policy);
        }
        let weights = list(value)
            .into_iter()
            .map(|w| w.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad(format!("order.weights: expected distinct, binary or a weight list, found `{value}`")))?;
        Ok(WeightPolicy::Explicit(weights))
    }

    pub fn merge_map(&self) -> Result<MergeMap, CliError> {
        let mut merge = MergeMap::new();
        for (aspect, value) in self.section("merge") {
            let map = merge.entry(aspect.to_string()).or_default();
            for item in list(value) {
                let (raw, label) = parse_pair(item, &format!("merge.{aspect}"))?;
                map.insert(raw.to_string(), label.to_string());
            }
        }
        Ok(merge)
    }

    /// Per-aspect projections for CAM and MM.
    ///
    /// nDCG reads `[gains]` label maps; AP reads `[relevant]` label sets.
    /// Unlisted aspects fall back to grade indices and `grade > 0` respectively.
    pub fn gains(&self, schema: &AspectSchema, kind: MeasureKind) -> Result<AspectGains, CliError> {
        let result = match kind {
            MeasureKind::Ndcg => {
                let mut maps = BTreeMap::new();
                for (aspect, value) in self.section("gains") {
                    let mut map = BTreeMap::new();
                    for item in list(value) {
                        let (label, gain) = parse_pair(item, &format!("gains.{aspect}"))?;
                        let gain = gain
                            .parse::<f64>()
                            .map_err(|_| bad(format!("gains.{aspect}: `{gain}` is not a number")))?;
                        map.insert(label.to_string(), gain);
                    }
                    maps.insert(aspect.to_string(), map);
                }
                AspectGains::from_label_maps(schema, &maps)
            }
            MeasureKind::Ap => {
                let sets = self
                    .section("relevant")
                    .into_iter()
                    .map(|(aspect, value)| (aspect.to_string(), list(value).into_iter().map(String::from).collect()))
                    .collect();
                AspectGains::from_relevant_sets(schema, &sets)
            }
        };
        result.map_err(|e| bad(e.to_string()))
    }

    pub fn measure_config(&self, schema: &AspectSchema) -> Result<MeasureConfig, CliError> {
        let kind = self.measure_kind()?;
        let cfg = MeasureConfig {
            kind,
            depth: self.parsed("measure.depth")?.unwrap_or(Depth::Full),
            log_base: self.parsed("measure.log_base")?.unwrap_or(2.0),
            gains: self.gains(schema, kind)?,
        };
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    pub fn families(&self) -> Result<Vec<Family>, CliError> {
        let Some(value) = self.get("measure.families") else {
            return Ok(Family::ALL.to_vec());
        };
        let mut families = Vec::new();
        for item in list(value) {
            let f = item.parse::<Family>().map_err(|e| bad(e.to_string()))?;
            if !families.contains(&f) {
                families.push(f);
            }
        }
        if families.is_empty() {
            return Err(bad("measure.families is empty"));
        }
        Ok(families)
    }

    pub fn plan(&self, schema: &AspectSchema) -> Result<EvalPlan, CliError> {
        let measure = self.measure_config(schema)?;
        let aspect_weights = self
            .get("baseline.aspect_weights")
            .map(|v| {
                list(v)
                    .into_iter()
                    .map(|w| w.parse::<f64>().map_err(|_| bad(format!("baseline.aspect_weights: `{w}` is not a number"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        Ok(EvalPlan {
            weight_policy: self.weight_policy(measure.kind)?,
            measure,
            families: self.families()?,
            aspect_weights,
            mm_variant: self.parsed::<MmVariant>("baseline.mm_variant")?.unwrap_or_default(),
        })
    }

    pub fn samples(&self) -> Result<usize, CliError> {
        Ok(self.parsed("analysis.samples")?.unwrap_or(DEFAULT_SAMPLES))
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        Ok(self.parsed("analysis.alpha")?.unwrap_or(DEFAULT_ALPHA))
    }

    pub fn k(&self) -> Result<usize, CliError> {
        Ok(self.parsed("analysis.k")?.unwrap_or(DEFAULT_K))
    }

    /// Rank bands written `lo-hi`, e.g. `1-25 26-50`.
    pub fn bands(&self) -> Result<Vec<(usize, usize)>, CliError> {
        let value = self.get("analysis.bands").unwrap_or(DEFAULT_BANDS);
        list(value)
            .into_iter()
            .map(|band| {
                let (lo, hi) = band
                    .split_once('-')
                    .ok_or_else(|| bad(format!("analysis.bands: expected `lo-hi`, found `{band}`")))?;
                match (lo.parse(), hi.parse()) {
                    (Ok(lo), Ok(hi)) => Ok((lo, hi)),
                    _ => Err(bad(format!("analysis.bands: `{band}` is not a rank interval"))),
                }
            })
            .collect()
    }

    pub fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|v| {
                list(v)
                    .into_iter()
                    .map(|x| x.parse::<f64>().map_err(|_| bad(format!("{key}: `{x}` is not a number"))))
                    .collect()
            })
            .transpose()
    }

    pub fn grades(&self) -> Result<Option<Vec<usize>>, CliError> {
        self.get("discretize.grades")
            .map(|v| {
                list(v)
                    .into_iter()
                    .map(|x| x.parse::<usize>().map_err(|_| bad(format!("discretize.grades: `{x}` is not a grade"))))
                    .collect()
            })
            .transpose()
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.get(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_paths() {
        let cfg = JobConfig::from_str_with_base(
            "[input]\nschema = s.txt\nruns = a.run, b.run\n[gains]\nrelevance = nr:0 hr:3\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(cfg.require_path("input.schema").unwrap(), PathBuf::from("/cfg/s.txt"));
        assert_eq!(cfg.paths("input.runs"), vec![PathBuf::from("/cfg/a.run"), PathBuf::from("/cfg/b.run")]);
        assert_eq!(cfg.section("gains"), vec![("relevance", "nr:0 hr:3")]);
    }

    #[test]
    fn flags_override_and_resolve_from_cwd() {
        let mut cfg = JobConfig::from_str_with_base("[input]\nschema = s.txt\n", Path::new("/cfg")).unwrap();
        cfg.set("input.schema", "other.txt");
        assert_eq!(cfg.require_path("input.schema").unwrap(), PathBuf::from("other.txt"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(JobConfig::from_str_with_base("[order]\nmetrc = cheb\n", Path::new("")).is_err());
        assert!(JobConfig::from_str_with_base("[nope]\nx = 1\n", Path::new("")).is_err());
        assert!(JobConfig::from_str_with_base("x = 1\n", Path::new("")).is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = JobConfig::from_str_with_base("[order]\nmetric = cheb\n\n# note\n", Path::new("")).unwrap();
        let b = JobConfig::from_str_with_base("[order]\nmetric=cheb\n", Path::new("")).unwrap();
        let c = JobConfig::from_str_with_base("[order]\nmetric = eucl\n", Path::new("")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn weight_policies() {
        let cfg = JobConfig::default();
        assert_eq!(cfg.weight_policy(MeasureKind::Ndcg).unwrap(), WeightPolicy::DistinctIntegers);
        assert_eq!(cfg.weight_policy(MeasureKind::Ap).unwrap(), WeightPolicy::BinaryTopHalf);
        let mut cfg = JobConfig::default();
        cfg.set("order.weights", "3,2,2,0");
        assert_eq!(cfg.weight_policy(MeasureKind::Ndcg).unwrap(), WeightPolicy::Explicit(vec![3, 2, 2, 0]));
        cfg.set("order.weights", "heavy");
        assert!(cfg.weight_policy(MeasureKind::Ndcg).is_err());
    }

    #[test]
    fn bands_parse() {
        let cfg = JobConfig::default();
        assert_eq!(cfg.bands().unwrap(), vec![(1, 25), (26, 50), (51, 75), (76, 100)]);
    }
}
