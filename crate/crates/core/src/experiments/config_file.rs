//! Line-oriented key=value config files with [section] headers.
//!
//! Format (see the repository README for the full key list):
//!
//! ```text
//! [study]
//! kind = subcritical
//! n = 500
//! mu = 1.0
//! replicas = 200
//! seed = 42
//!
//! [law]
//! alpha = 1.5
//! slowly_varying = constant:1.0
//! symmetrized = true
//! ```
//!
//! Blank lines and lines starting with '#' are ignored; later keys override
//! earlier ones within the same section.

use std::collections::BTreeMap;
use std::path::Path;

use crate::ensemble::PatternKind;
use crate::error::{Error, Result};
use crate::heavy_tail::SlowlyVarying;

use super::{
    ExperimentConfig, LocalizationParams, StudyKind, TruncationParams, WindowParams,
};

type Section = BTreeMap<String, String>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current = String::from("study");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Format(format!("line {}: unterminated section", lineno + 1)))?;
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {}: expected key = value, got '{line}'", lineno + 1))
        })?;
        sections
            .entry(current.clone())
            .or_default()
            .insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(sections)
}

struct SectionView<'a> {
    name: &'a str,
    map: Option<&'a Section>,
}

impl<'a> SectionView<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.map.and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    fn required(&self, key: &str) -> Result<&'a str> {
        self.get(key).ok_or_else(|| {
            Error::Config(format!("missing key '{key}' in section [{}]", self.name))
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("bad value '{s}' for '{key}' in [{}]", self.name))
            }),
        }
    }

    fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let s = self.required(key)?;
        s.parse::<T>()
            .map_err(|_| Error::Config(format!("bad value '{s}' for '{key}' in [{}]", self.name)))
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("bad boolean '{other}'"))),
    }
}

fn parse_slowly_varying(s: &str) -> Result<SlowlyVarying> {
    let (kind, param) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("slowly_varying wants kind:value, got '{s}'")))?;
    let v: f64 = param
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad slowly_varying parameter '{param}'")))?;
    match kind.trim() {
        "constant" => Ok(SlowlyVarying::Constant(v)),
        "log_power" => Ok(SlowlyVarying::LogPower(v)),
        other => Err(Error::Config(format!("unknown slowly_varying kind '{other}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::Config(format!("bad {what} element '{t}'")))
        })
        .collect()
}

/// Parse a config file into an [`ExperimentConfig`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let sections = parse_sections(text)?;
    let view = |name: &'static str| SectionView { name, map: sections.get(name) };

    let study = view("study");
    let law = view("law");
    let kind = StudyKind::parse(study.required("kind")?)?;
    let n: usize = study.parse_required("n")?;
    let mu: f64 = study.parse_required("mu")?;
    let alpha: f64 = law.parse_required("alpha")?;
    let replicas: usize = study.parse_required("replicas")?;
    let seed: u64 = study.parse_required("seed")?;

    let mut config = ExperimentConfig::new(kind, n, mu, alpha, replicas, seed);
    if let Some(v) = study.parse::<usize>("top_k")? {
        config.top_k = v;
    }
    if let Some(v) = study.get("out") {
        config.out_dir = Some(v.to_string());
    }
    if let Some(v) = study.parse::<f64>("tol")? {
        config.tol = v;
    }
    if let Some(v) = study.parse::<usize>("max_iter")? {
        config.max_iter = v;
    }
    if let Some(v) = study.parse::<usize>("dense_limit")? {
        config.dense_limit = v;
    }
    if let Some(v) = law.parse::<f64>("scale")? {
        config.scale = v;
    }
    if let Some(s) = law.get("slowly_varying") {
        config.slowly_varying = parse_slowly_varying(s)?;
    }
    if let Some(s) = law.get("symmetrized") {
        config.symmetrized = parse_bool(s)?;
    }
    if let Some(s) = law.get("variance_normalized") {
        config.variance_normalized = parse_bool(s)?;
    }

    let pattern = view("pattern");
    if let Some(s) = pattern.get("kind") {
        config.pattern = match s {
            "band" => PatternKind::Band,
            "cyclic" | "cyclic_band" => PatternKind::CyclicBand,
            other => return Err(Error::Config(format!("unknown pattern kind '{other}'"))),
        };
    }

    let extremes = view("extremes");
    if let Some(v) = extremes.parse::<f64>("threshold")? {
        config.threshold = v;
    }
    if let Some(v) = extremes.parse::<usize>("spacings_k")? {
        config.spacings_k = v;
    }

    let localization = view("localization");
    if localization.map.is_some() {
        config.localization = Some(LocalizationParams {
            c: localization.parse_required("c")?,
            eta0: localization.parse_required("eta0")?,
        });
    }

    let truncation = view("truncation");
    if truncation.map.is_some() {
        config.truncation = Some(TruncationParams {
            gamma: truncation.parse_required("gamma")?,
            gamma_prime: truncation.parse_required("gamma_prime")?,
            gamma_double_prime: truncation.parse_required("gamma_double_prime")?,
            kappa: truncation.parse::<f64>("kappa")?.unwrap_or(0.9),
        });
    }

    let grid = view("grid");
    if let Some(s) = grid.get("n_values") {
        config.n_grid = parse_list(s, "n_values")?;
    }
    if let Some(s) = grid.get("s_values") {
        config.s_grid = parse_list(s, "s_values")?;
    }

    let tailsum = view("tailsum");
    if tailsum.map.is_some() {
        let low_raw = tailsum.required("low")?;
        let low = if low_raw == "-inf" || low_raw == "none" {
            None
        } else {
            Some(low_raw.parse::<f64>().map_err(|_| {
                Error::Config(format!("bad tailsum low exponent '{low_raw}'"))
            })?)
        };
        config.window = Some(WindowParams {
            low,
            high: tailsum.parse_required("high")?,
            epsilon: tailsum.parse_required("epsilon")?,
        });
    }

    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample config
[study]
kind = subcritical
n = 500
mu = 1.0
replicas = 200
top_k = 3
seed = 42
out = runs/sub

[law]
alpha = 1.5
scale = 1.0
slowly_varying = constant:1.0
symmetrized = true
variance_normalized = false

[pattern]
kind = cyclic

[extremes]
threshold = 1.0
spacings_k = 5
";

    #[test]
    fn parses_sample() {
        let c = parse_config(SAMPLE).unwrap();
        assert_eq!(c.kind, StudyKind::Subcritical);
        assert_eq!(c.n, 500);
        assert_eq!(c.replicas, 200);
        assert_eq!(c.top_k, 3);
        assert_eq!(c.seed, 42);
        assert_eq!(c.out_dir.as_deref(), Some("runs/sub"));
        assert_eq!(c.pattern, PatternKind::CyclicBand);
        assert_eq!(c.slowly_varying, SlowlyVarying::Constant(1.0));
    }

    #[test]
    fn missing_seed_is_an_error() {
        let text = "[study]\nkind = subcritical\nn = 10\nmu = 1.0\nreplicas = 2\n[law]\nalpha = 1.5\n";
        let err = parse_config(text).unwrap_err();
        assert!(format!("{err}").contains("seed"));
    }

    #[test]
    fn tailsum_window_with_open_low() {
        let text = "\
[study]
kind = tailsums
n = 1000
mu = 1.0
replicas = 50
seed = 1
[law]
alpha = 1.5
[tailsum]
low = -inf
high = 0.5
epsilon = 0.2
[grid]
n_values = 1000, 10000
";
        let c = parse_config(text).unwrap();
        let w = c.window.unwrap();
        assert!(w.low.is_none());
        assert_eq!(w.high, 0.5);
        assert_eq!(c.n_grid, vec![1000, 10000]);
    }

    #[test]
    fn bad_values_are_reported_with_context() {
        let text = "[study]\nkind = warp\nn = 10\nmu = 1.0\nreplicas = 2\nseed = 1\n[law]\nalpha = 1.5\n";
        assert!(parse_config(text).is_err());
        let text2 = "[study]\nkind = subcritical\nn = ten\nmu = 1.0\nreplicas = 2\nseed = 1\n[law]\nalpha = 1.5\n";
        let err = parse_config(text2).unwrap_err();
        assert!(format!("{err}").contains("'n'"), "{err}");
    }
}
