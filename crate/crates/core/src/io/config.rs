//! Line-oriented `key = value` run configuration.
//!
//! Keys are the field names of [`SyntheticConfig`] and [`TrainConfig`], plus
//! `alpha`, `beta`, `gamma`, `epsilon` for the PN hyper-parameters and
//! `lambdas` (comma-separated) for sweeps. `seed` seeds both data generation
//! and training. `#` starts a comment.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Pipeline;
use crate::synthetic::SyntheticConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synthetic: SyntheticConfig,
    pub train: TrainConfig,
    pub lambdas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            synthetic: SyntheticConfig::default(),
            train: TrainConfig::default(),
            lambdas: vec![0.0, 0.5, 2.5, 5.0],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::format(path, msg),
            other => other,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Sets one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.synthetic;
        let t = &mut self.train;
        match key {
            "height" => s.height = parse(key, value)?,
            "width" => s.width = parse(key, value)?,
            "frames" => s.frames = parse(key, value)?,
            "classes" => s.classes = parse(key, value)?,
            "clips_per_class" => s.clips_per_class = parse(key, value)?,
            "noise" => s.noise = parse(key, value)?,
            "camera" => s.camera = parse(key, value)?,
            "square" => s.square = parse(key, value)?,
            "speed" => s.speed = parse(key, value)?,
            "jitter" => s.jitter = parse(key, value)?,
            "seed" => {
                s.seed = parse(key, value)?;
                t.seed = s.seed;
            }
            "lr" => t.lr = parse(key, value)?,
            "momentum" => t.momentum = parse(key, value)?,
            "weight_decay" => t.weight_decay = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "lambda" => t.lambda = parse(key, value)?,
            "init_mean" => t.init_mean = parse(key, value)?,
            "init_std" => t.init_std = parse(key, value)?,
            "grid" => t.grid = parse(key, value)?,
            "val_fraction" => t.val_fraction = parse(key, value)?,
            "pipeline" => {
                t.pipeline = match value {
                    "motion" | "vmp" => Pipeline::MotionPrompt,
                    "raw" => Pipeline::RawFrames,
                    _ => {
                        return Err(Error::Config(format!(
                            "pipeline must be `motion` or `raw`, got `{value}`"
                        )))
                    }
                }
            }
            "alpha" => t.hyper.alpha = parse(key, value)?,
            "beta" => t.hyper.beta = parse(key, value)?,
            "gamma" => t.hyper.gamma = parse(key, value)?,
            "epsilon" => t.hyper.epsilon = parse(key, value)?,
            "lambdas" => {
                self.lambdas = value
                    .split(',')
                    .map(|v| parse(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            _ => {
                return Err(Error::Unknown {
                    what: "configuration key",
                    name: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        self.train.validate()?;
        if self.train.grid > self.synthetic.height.min(self.synthetic.width) {
            return Err(Error::Config(format!(
                "grid {} larger than the frame",
                self.train.grid
            )));
        }
        Ok(())
    }
}
