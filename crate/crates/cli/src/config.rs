//! Experiment configuration: a flat key=value file overlaid by CLI flags
//! (flags win), resolved against the experiment registry.

use thiserror::Error;

use crate::experiments;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment `{0}` (run `fqlab list` for the registry)")]
    UnknownExperiment(String),
    #[error("experiment `{experiment}` is missing required parameter `{missing}`")]
    InvalidParameters { experiment: String, missing: String },
    #[error("invalid value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Field(#[from] fqlab_core::FieldError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Partially specified configuration, as read from one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub p: Option<u64>,
    pub k: Option<u32>,
    pub density: Option<f64>,
    pub size: Option<u64>,
    pub subgroup: Option<u64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<u64>,
    pub beta: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub slow: Option<bool>,
}

impl RawConfig {
    /// Overlay `over` on top of `self`; set fields of `over` win.
    pub fn overlaid_with(mut self, over: RawConfig) -> RawConfig {
        macro_rules! take {
            ($field:ident) => {
                if over.$field.is_some() {
                    self.$field = over.$field;
                }
            };
        }
        take!(experiment);
        take!(p);
        take!(k);
        take!(density);
        take!(size);
        take!(subgroup);
        take!(epsilon);
        take!(lambda);
        take!(beta);
        take!(seeds);
        take!(slow);
        self
    }
}

/// Parses the flat `key = value` config format; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<RawConfig, HarnessError> {
    let mut cfg = RawConfig::default();
    for line in text.lines() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::BadValue {
            key: line.to_string(),
            value: "expected key=value".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = || HarnessError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        match key {
            "experiment" => cfg.experiment = Some(value.to_string()),
            "p" => cfg.p = Some(value.parse().map_err(|_| bad())?),
            "k" => cfg.k = Some(value.parse().map_err(|_| bad())?),
            "density" => cfg.density = Some(value.parse().map_err(|_| bad())?),
            "size" => cfg.size = Some(value.parse().map_err(|_| bad())?),
            "subgroup" => cfg.subgroup = Some(value.parse().map_err(|_| bad())?),
            "epsilon" => cfg.epsilon = Some(value.parse().map_err(|_| bad())?),
            "lambda" => cfg.lambda = Some(value.parse().map_err(|_| bad())?),
            "beta" => cfg.beta = Some(value.parse().map_err(|_| bad())?),
            "seeds" => {
                let seeds: Result<Vec<u64>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                cfg.seeds = Some(seeds.map_err(|_| bad())?);
            }
            "slow" => cfg.slow = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    Ok(cfg)
}

pub fn parse_config_file(path: &std::path::Path) -> Result<RawConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_text(&text)
}

/// Fully resolved configuration for one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// (p, k) pairs to run; defaults to the CI-scale q list {7, 11, 19},
    /// extended by {23, 31, 43} under `slow`.
    pub fields: Vec<(u64, u32)>,
    pub density: Option<f64>,
    pub size: Option<u64>,
    pub subgroup: Option<u64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<u64>,
    pub beta: Option<u64>,
    pub seeds: Vec<u64>,
    pub slow: bool,
}

pub fn resolve(raw: RawConfig) -> Result<ExperimentConfig, HarnessError> {
    let experiment = raw
        .experiment
        .ok_or_else(|| HarnessError::InvalidParameters {
            experiment: "<unset>".into(),
            missing: "experiment".into(),
        })?;
    let info = experiments::info(&experiment)
        .ok_or_else(|| HarnessError::UnknownExperiment(experiment.clone()))?;

    let slow = raw.slow.unwrap_or(false);
    let fields: Vec<(u64, u32)> = match raw.p {
        Some(p) => vec![(p, raw.k.unwrap_or(1))],
        None => {
            let mut qs = vec![7u64, 11, 19];
            if slow {
                qs.extend([23, 31, 43]);
            }
            qs.into_iter().map(|q| (q, 1)).collect()
        }
    };
    if let Some(d) = raw.density {
        if !(0.0..=1.0).contains(&d) {
            return Err(HarnessError::BadValue {
                key: "density".into(),
                value: d.to_string(),
            });
        }
    }
    let cfg = ExperimentConfig {
        experiment: experiment.clone(),
        fields,
        density: raw.density,
        size: raw.size,
        subgroup: raw.subgroup,
        epsilon: raw.epsilon,
        lambda: raw.lambda,
        beta: raw.beta,
        seeds: raw.seeds.unwrap_or_else(|| vec![1]),
        slow,
    };
    for &required in info.required {
        let present = match required {
            "epsilon" => cfg.epsilon.is_some(),
            "subgroup" => cfg.subgroup.is_some(),
            "lambda" => cfg.lambda.is_some(),
            "beta" => cfg.beta.is_some(),
            "density|size" => cfg.density.is_some() || cfg.size.is_some(),
            _ => true,
        };
        if !present {
            return Err(HarnessError::InvalidParameters {
                experiment,
                missing: required.into(),
            });
        }
    }
    if cfg.experiment == "conjecture-search" && cfg.lambda == cfg.beta {
        return Err(HarnessError::BadValue {
            key: "beta".into(),
            value: "must differ from lambda".into(),
        });
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags_precedence() {
        let file = parse_config_text("experiment = parab-upper\np = 7\nseeds = 1,2,3\n").unwrap();
        let flags = RawConfig {
            p: Some(11),
            ..Default::default()
        };
        let merged = file.overlaid_with(flags);
        assert_eq!(merged.p, Some(11));
        assert_eq!(merged.seeds, Some(vec![1, 2, 3]));
        let cfg = resolve(merged).unwrap();
        assert_eq!(cfg.fields, vec![(11, 1)]);
    }

    #[test]
    fn comments_and_bad_keys() {
        let cfg = parse_config_text("# full line comment\nexperiment = parab-upper # trailing\n")
            .unwrap();
        assert_eq!(cfg.experiment.as_deref(), Some("parab-upper"));
        assert!(parse_config_text("nonsense = 3\n").is_err());
    }

    #[test]
    fn unknown_and_incomplete_experiments() {
        let raw = RawConfig {
            experiment: Some("nope".into()),
            ..Default::default()
        };
        assert!(matches!(
            resolve(raw),
            Err(HarnessError::UnknownExperiment(n)) if n == "nope"
        ));

        let raw = RawConfig {
            experiment: Some("thm31-pipeline".into()),
            ..Default::default()
        };
        match resolve(raw) {
            Err(HarnessError::InvalidParameters { missing, .. }) => {
                assert_eq!(missing, "epsilon")
            }
            other => panic!("expected missing epsilon, got {other:?}"),
        }
    }

    #[test]
    fn default_field_list_honors_slow() {
        let raw = RawConfig {
            experiment: Some("parab-upper".into()),
            slow: Some(true),
            ..Default::default()
        };
        let cfg = resolve(raw).unwrap();
        assert_eq!(
            cfg.fields,
            vec![(7, 1), (11, 1), (19, 1), (23, 1), (31, 1), (43, 1)]
        );
    }
}
