//! Scenario resolution: built-in scenario names or JSON files.
//!
//! Built-in forms:
//!
//! - `preset:16-64-256` — one batch with the given sizes
//! - `homog:4x256` — homogeneous batch, count x length
//! - `hetero:X=4` — random heterogeneous batches in `[16, 512]`
//! - `long-short:X=3` — one 256-part plus X parts of 16
//! - `pipeline:boxes=6` — detect/classify/recognize over N boxes
//!
//! Anything containing a path separator or ending in `.json` is loaded
//! as a scenario file.

use std::path::Path;

use thiserror::Error;

use prun_core::scenarios::{
    self, classification_model, default_detect_cost, recognition_model, ScenarioError,
    ScenarioSpec, DEFAULT_CORES,
};
use prun_core::rng::uniform_in;

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("unknown scenario `{0}`; see `prun run --help` for the built-in forms")]
    Unknown(String),
    #[error("bad scenario argument `{arg}`: {reason}")]
    BadArgument { arg: String, reason: String },
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Knobs that refine built-in scenarios.
#[derive(Debug, Clone, Copy)]
pub struct ResolveOpts {
    /// Number of random batches for `hetero:` scenarios.
    pub trials: usize,
    /// Seed for generated sizes.
    pub seed: u64,
}

impl Default for ResolveOpts {
    fn default() -> Self {
        Self { trials: 1000, seed: 0 }
    }
}

pub fn resolve(arg: &str, opts: &ResolveOpts) -> Result<ScenarioSpec, ResolveError> {
    if arg.ends_with(".json") || arg.contains('/') || Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg)
            .map_err(|source| ResolveError::Io { path: arg.to_string(), source })?;
        return Ok(ScenarioSpec::from_json(&text)?);
    }

    let (family, rest) = arg
        .split_once(':')
        .ok_or_else(|| ResolveError::Unknown(arg.to_string()))?;
    match family {
        "preset" => {
            let sizes = parse_sizes(arg, rest, '-')?;
            Ok(scenarios::gen_preset(&sizes)?)
        }
        "homog" => {
            let (count, len) = rest
                .split_once('x')
                .and_then(|(c, l)| Some((c.parse().ok()?, l.parse().ok()?)))
                .ok_or_else(|| ResolveError::BadArgument {
                    arg: arg.to_string(),
                    reason: "expected homog:<count>x<length>".into(),
                })?;
            Ok(scenarios::gen_homogeneous(len, count)?)
        }
        "hetero" => {
            let x = parse_kv(arg, rest, "X")?;
            Ok(scenarios::gen_random_hetero(x, 16, 512, opts.trials, opts.seed)?)
        }
        "long-short" => {
            let x = parse_kv(arg, rest, "X")?;
            Ok(scenarios::gen_long_short(x))
        }
        "pipeline" => {
            let boxes = parse_kv(arg, rest, "boxes")?;
            if boxes < 1 {
                return Err(ResolveError::BadArgument {
                    arg: arg.to_string(),
                    reason: "pipeline needs at least one box".into(),
                });
            }
            // Box sizes drawn from [8, 64], the small-input regime where
            // the classification stage's scaling profile matters.
            let sizes: Vec<usize> = (0..boxes)
                .map(|j| uniform_in(opts.seed, 0xB0, j as u64, 8, 64) as usize)
                .collect();
            let detect = default_detect_cost(&sizes, DEFAULT_CORES, &recognition_model());
            Ok(scenarios::gen_pipeline(
                boxes,
                &sizes,
                detect,
                classification_model(),
                recognition_model(),
            )?)
        }
        _ => Err(ResolveError::Unknown(arg.to_string())),
    }
}

fn parse_sizes(arg: &str, rest: &str, sep: char) -> Result<Vec<usize>, ResolveError> {
    rest.split(sep)
        .map(|tok| tok.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| ResolveError::BadArgument {
            arg: arg.to_string(),
            reason: format!("expected sizes separated by `{sep}`"),
        })
}

fn parse_kv(arg: &str, rest: &str, key: &str) -> Result<usize, ResolveError> {
    rest.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ResolveError::BadArgument {
            arg: arg.to_string(),
            reason: format!("expected {key}=<n>"),
        })
}
