//! Synthetic clips of a bright square moving in one of `classes` directions
//! over a textured background, with optional salt-and-pepper noise and a
//! global translation standing in for camera motion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::framediff::{FrameSequence, CHANNELS};
use crate::model::LabeledClip;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub height: usize,
    pub width: usize,
    /// Frames per clip, `T`.
    pub frames: usize,
    /// Number of motion directions, evenly spaced in angle.
    pub classes: usize,
    pub clips_per_class: usize,
    /// Per-pixel, per-frame probability of a salt or pepper sample.
    pub noise: f64,
    /// Background translation in pixels per frame; 0 is a static camera.
    pub camera: f64,
    /// Square side in pixels.
    pub square: usize,
    /// Square displacement in pixels per frame.
    pub speed: f64,
    /// Maximum random offset of the starting position from the centre.
    pub jitter: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            frames: 6,
            classes: 4,
            clips_per_class: 32,
            noise: 0.0,
            camera: 0.0,
            square: 6,
            speed: 2.0,
            jitter: 1,
            seed: 0,
        }
    }
}

/// Background texture range.
const TEXTURE_LOW: f64 = 0.05;
const TEXTURE_HIGH: f64 = 0.55;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Config("frame size must be positive".into()));
        }
        if self.frames < 3 {
            return Err(Error::Config(format!(
                "clips need at least 3 frames, got {}",
                self.frames
            )));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.clips_per_class == 0 {
            return Err(Error::Config("clips_per_class must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise probability {} outside [0, 1]",
                self.noise
            )));
        }
        if !(self.camera >= 0.0 && self.camera.is_finite()) {
            return Err(Error::Config(format!(
                "camera amplitude {} invalid",
                self.camera
            )));
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(Error::Config(format!("speed {} invalid", self.speed)));
        }
        if self.square == 0 {
            return Err(Error::Config("square size must be positive".into()));
        }
        // Every class trajectory, with worst-case jitter, must stay inside.
        let reach = self.max_displacement();
        for axis_len in [self.height, self.width] {
            let start = (axis_len as f64 - self.square as f64) / 2.0;
            let lo = start - self.jitter as f64 - reach;
            let hi = start + self.jitter as f64 + reach + self.square as f64;
            if lo < 0.0 || hi > axis_len as f64 {
                return Err(Error::Config(format!(
                    "square of {} px moving {} px/frame over {} frames exceeds a {}x{} frame",
                    self.square, self.speed, self.frames, self.height, self.width
                )));
            }
        }
        Ok(())
    }

    fn max_displacement(&self) -> f64 {
        (0..self.classes)
            .flat_map(|k| {
                let (dy, dx) = direction(k, self.classes);
                let t = (self.frames - 1) as f64;
                [
                    (t * self.speed * dy).round().abs(),
                    (t * self.speed * dx).round().abs(),
                ]
            })
            .fold(0.0, f64::max)
    }
}

/// Unit `(dy, dx)` for class `k`; class 0 moves right, angles increase
/// clockwise in image coordinates.
pub fn direction(k: usize, classes: usize) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI * k as f64 / classes as f64;
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    (snap(angle.sin()), snap(angle.cos()))
}

/// A labeled collection of clips.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: usize,
    pub clips: Vec<LabeledClip>,
}

impl Dataset {
    pub fn new(classes: usize, clips: Vec<LabeledClip>) -> Result<Self> {
        if let Some(c) = clips.iter().find(|c| c.label >= classes) {
            return Err(Error::Config(format!(
                "label {} out of range for {classes} classes",
                c.label
            )));
        }
        Ok(Self { classes, clips })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Stratified split: the last `round(fraction * n_c)` clips of every class
    /// go to validation.
    pub fn split(&self, fraction: f64) -> (Vec<&LabeledClip>, Vec<&LabeledClip>) {
        let mut per_class = vec![0usize; self.classes];
        for c in &self.clips {
            per_class[c.label] += 1;
        }
        let mut seen = vec![0usize; self.classes];
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for clip in &self.clips {
            let total = per_class[clip.label];
            let held = (fraction * total as f64).round() as usize;
            let ordinal = seen[clip.label];
            seen[clip.label] += 1;
            if ordinal + held >= total {
                val.push(clip);
            } else {
                train.push(clip);
            }
        }
        (train, val)
    }
}

/// Generates `classes * clips_per_class` clips, labels interleaved
/// `0, 1, .., classes-1, 0, 1, ..`. Clip `i` draws from stream `i` of a
/// ChaCha generator seeded with `seed`, so output is independent of thread
/// scheduling.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let total = config.classes * config.clips_per_class;
    let clips = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            render_clip(config, i % config.classes, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(config.classes, clips)
}

fn render_clip(
    config: &SyntheticConfig,
    label: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledClip> {
    let (h, w, frames) = (config.height, config.width, config.frames);

    // Texture canvas large enough for the whole camera path.
    let margin = (config.camera * (frames - 1) as f64).ceil() as usize + 1;
    let (ch, cw) = (h + 2 * margin, w + 2 * margin);
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.8..=1.0));
    let canvas: Vec<f64> = (0..ch * cw)
        .map(|_| rng.random_range(TEXTURE_LOW..TEXTURE_HIGH))
        .collect();
    let camera_dir = loop {
        let dy: i32 = rng.random_range(-1..=1);
        let dx: i32 = rng.random_range(-1..=1);
        if dy != 0 || dx != 0 {
            break (f64::from(dy), f64::from(dx));
        }
    };

    let color: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.85..=1.0));
    let j = config.jitter as i64;
    let start_y = ((h - config.square) / 2) as i64 + rng.random_range(-j..=j);
    let start_x = ((w - config.square) / 2) as i64 + rng.random_range(-j..=j);
    let (dy, dx) = direction(label, config.classes);

    let mut data = Vec::with_capacity(h * w * CHANNELS * frames);
    for t in 0..frames {
        let tf = t as f64;
        let cam_y = (tf * config.camera * camera_dir.0).round() as i64;
        let cam_x = (tf * config.camera * camera_dir.1).round() as i64;
        let sq_y = start_y + (tf * config.speed * dy).round() as i64;
        let sq_x = start_x + (tf * config.speed * dx).round() as i64;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let inside = y >= sq_y
                    && y < sq_y + config.square as i64
                    && x >= sq_x
                    && x < sq_x + config.square as i64;
                let mut px = if inside {
                    color
                } else {
                    let cy = (y + margin as i64 + cam_y) as usize;
                    let cx = (x + margin as i64 + cam_x) as usize;
                    let v = canvas[cy * cw + cx];
                    [v * tint[0], v * tint[1], v * tint[2]]
                };
                if config.noise > 0.0 && rng.random_bool(config.noise) {
                    px = if rng.random_bool(0.5) {
                        [1.0; 3]
                    } else {
                        [0.0; 3]
                    };
                }
                data.extend_from_slice(&px);
            }
        }
    }
    Ok(LabeledClip {
        frames: FrameSequence::new(h, w, frames, data)?,
        label,
    })
}
