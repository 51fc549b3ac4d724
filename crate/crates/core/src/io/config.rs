//! `key = value` configuration files with `#` comments.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::rpl::XiSchedule;
use crate::supervisory::{Aggregation, ConstructionConfig, Strategy, DEFAULT_REFACTOR_EVERY};

/// Parsed run configuration; strategy and seeds come from the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub r: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub s: usize,
    pub b_max: usize,
    pub xi_min: f64,
    pub delta_xi: f64,
    pub xi_max: f64,
    /// `None` means `20 · s · |ξ schedule|`.
    pub max_units: Option<usize>,
    pub ri_xi: f64,
    /// Target hidden size of the RI baseline.
    pub ri_units: usize,
    pub aggregation: Aggregation,
    pub refactor_every: usize,
    /// Row subsample for the feature condition number.
    pub cond_subsample: usize,
    /// Column cap for the basis cosine matrix.
    pub cosine_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r: 0.99,
            epsilon: 0.01,
            lambda: 0.01,
            s: 50,
            b_max: 10,
            xi_min: 0.0008,
            delta_xi: 0.0001,
            xi_max: 0.004,
            max_units: None,
            ri_xi: 1.0,
            ri_units: 2000,
            aggregation: Aggregation::Frobenius,
            refactor_every: DEFAULT_REFACTOR_EVERY,
            cond_subsample: 512,
            cosine_cap: 256,
        }
    }
}

impl RunConfig {
    pub fn xi_schedule(&self) -> Result<XiSchedule> {
        XiSchedule::new(self.xi_min, self.delta_xi, self.xi_max)
    }

    pub fn construction(&self, strategy: Strategy) -> Result<ConstructionConfig> {
        let xi_schedule = self.xi_schedule()?;
        let default_cap = 20 * self.s * xi_schedule.len();
        let max_units = match strategy {
            Strategy::Ri => self.ri_units,
            _ => self.max_units.unwrap_or(default_cap),
        };
        let cfg = ConstructionConfig {
            r: self.r,
            epsilon: self.epsilon,
            s: self.s,
            b_max: self.b_max,
            lambda: self.lambda,
            xi_schedule,
            max_units,
            strategy,
            aggregation: self.aggregation,
            ri_xi: self.ri_xi,
            refactor_every: self.refactor_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Splits a config text into `(line number, key, value)` triples.
fn entries(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedValue {
            line: i + 1,
            key: line.to_string(),
            reason: "expected `key = value`".into(),
        })?;
        out.push((i + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::MalformedValue {
        line,
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn range_error(line: usize, key: &str, reason: &str) -> Error {
    Error::MalformedValue {
        line,
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(line, key, value)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(range_error(line, key, "must be a positive finite number"));
    }
    Ok(v)
}

fn non_negative(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(line, key, value)?;
    if !(v >= 0.0) || !v.is_finite() {
        return Err(range_error(line, key, "must be a finite number >= 0"));
    }
    Ok(v)
}

fn count(line: usize, key: &str, value: &str) -> Result<usize> {
    let v: usize = parse(line, key, value)?;
    if v == 0 {
        return Err(range_error(line, key, "must be >= 1"));
    }
    Ok(v)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (line, key, value) in entries(text)? {
        let (k, v) = (key.as_str(), value.as_str());
        match k {
            "r" => {
                let r: f64 = parse(line, k, v)?;
                if !(r > 0.0 && r < 1.0) {
                    return Err(range_error(line, k, "must lie strictly between 0 and 1"));
                }
                cfg.r = r;
            }
            "epsilon" => cfg.epsilon = positive(line, k, v)?,
            "lambda" => cfg.lambda = positive(line, k, v)?,
            "s" => cfg.s = count(line, k, v)?,
            "b_max" => cfg.b_max = count(line, k, v)?,
            "xi_min" => cfg.xi_min = positive(line, k, v)?,
            "delta_xi" => cfg.delta_xi = positive(line, k, v)?,
            "xi_max" => cfg.xi_max = positive(line, k, v)?,
            "max_units" => cfg.max_units = Some(count(line, k, v)?),
            "ri_xi" => cfg.ri_xi = positive(line, k, v)?,
            "ri_units" => cfg.ri_units = count(line, k, v)?,
            "aggregation" => {
                cfg.aggregation = match v {
                    "frobenius" => Aggregation::Frobenius,
                    "per_column" => Aggregation::PerColumn,
                    _ => return Err(range_error(line, k, "expected `frobenius` or `per_column`")),
                }
            }
            "refactor_every" => cfg.refactor_every = count(line, k, v)?,
            "cond_subsample" => cfg.cond_subsample = count(line, k, v)?,
            "cosine_cap" => cfg.cosine_cap = count(line, k, v)?,
            _ => return Err(Error::UnknownKey { line, key }),
        }
    }
    if cfg.xi_min > cfg.xi_max {
        return Err(range_error(0, "xi_min", "must not exceed xi_max"));
    }
    if let Some(m) = cfg.max_units {
        if m < cfg.s {
            return Err(range_error(0, "max_units", "must be >= s"));
        }
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&fs::read_to_string(path)?)
}

pub fn parse_synthetic_str(text: &str) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec::default();
    for (line, key, value) in entries(text)? {
        let (k, v) = (key.as_str(), value.as_str());
        match k {
            "classes" => spec.classes = count(line, k, v)?,
            "train_per_class" => spec.train_per_class = count(line, k, v)?,
            "test_per_class" => spec.test_per_class = count(line, k, v)?,
            "feature_dim" => spec.feature_dim = count(line, k, v)?,
            "cluster_spread" => spec.cluster_spread = non_negative(line, k, v)?,
            "center_scale" => spec.center_scale = non_negative(line, k, v)?,
            "domain_gap" => spec.domain_gap = non_negative(line, k, v)?,
            "drift_groups" => spec.drift_groups = count(line, k, v)?,
            "redundancy" => spec.redundancy = parse(line, k, v)?,
            "seed" => spec.seed = parse(line, k, v)?,
            _ => return Err(Error::UnknownKey { line, key }),
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_synthetic_spec(path: &Path) -> Result<SyntheticSpec> {
    parse_synthetic_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.r, 0.99);
        assert_eq!(cfg.epsilon, 0.01);
        assert_eq!(cfg.lambda, 0.01);
        assert_eq!(cfg.s, 50);
        assert_eq!(cfg.b_max, 10);
        assert_eq!(cfg.xi_min, 0.0008);
        assert_eq!(cfg.delta_xi, 0.0001);
        assert_eq!(cfg.xi_max, 0.004);
        let c = cfg.construction(Strategy::Mgsm).unwrap();
        assert_eq!(c.max_units, 20 * 50 * 33);
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = parse_config_str("# header\n s = 10  # block size\nlambda=0.1\n\naggregation = per_column\n").unwrap();
        assert_eq!(cfg.s, 10);
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.aggregation, Aggregation::PerColumn);
    }

    #[test]
    fn out_of_range_r() {
        assert!(matches!(parse_config_str("r = 1.5"), Err(Error::MalformedValue { line: 1, .. })));
        assert!(matches!(parse_config_str("s = many"), Err(Error::MalformedValue { .. })));
        assert!(matches!(parse_config_str("lambda = -1"), Err(Error::MalformedValue { .. })));
    }

    #[test]
    fn unknown_key() {
        match parse_config_str("typo_key = 3") {
            Err(Error::UnknownKey { line, key }) => {
                assert_eq!(line, 1);
                assert_eq!(key, "typo_key");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_config_str("R = 0.5"), Err(Error::UnknownKey { .. })));
    }

    #[test]
    fn synthetic_spec_file() {
        let spec = parse_synthetic_str("classes = 6\nfeature_dim = 16\nredundancy = 8\nseed = 4\n").unwrap();
        assert_eq!(spec.classes, 6);
        assert_eq!(spec.redundancy, 8);
        assert!(parse_synthetic_str("redundancy = 16").is_err());
        assert!(matches!(parse_synthetic_str("colour = 1"), Err(Error::UnknownKey { .. })));
    }
}
