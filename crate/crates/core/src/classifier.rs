//! Pooled linear softmax classifier over motion prompts.
//!
//! Each prompt is average-pooled per channel over a `grid x grid` partition
//! of the frame, the pooled prompts are averaged over time, and a linear
//! layer maps the `3 * grid^2` features to class scores. `grid = 1` is plain
//! global average pooling.

use crate::error::{Error, Result};
use crate::framediff::CHANNELS;
use crate::prompt::MotionPromptSequence;

/// Spatial partition used for pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolLayout {
    pub grid: usize,
    /// Cell index of every pixel, row-major.
    pub cell_of: Vec<usize>,
    /// Pixel count of every cell.
    pub cell_sizes: Vec<usize>,
}

impl PoolLayout {
    pub fn new(height: usize, width: usize, grid: usize) -> Result<Self> {
        if grid == 0 || grid > height || grid > width {
            return Err(Error::Config(format!(
                "pooling grid {grid} does not fit a {height}x{width} frame"
            )));
        }
        let mut cell_of = Vec::with_capacity(height * width);
        let mut cell_sizes = vec![0; grid * grid];
        for y in 0..height {
            for x in 0..width {
                let cell = (y * grid / height) * grid + x * grid / width;
                cell_of.push(cell);
                cell_sizes[cell] += 1;
            }
        }
        Ok(Self {
            grid,
            cell_of,
            cell_sizes,
        })
    }

    pub fn features(&self) -> usize {
        self.grid * self.grid * CHANNELS
    }
}

/// Pools a prompt sequence into the classifier's feature vector.
pub fn pool_prompts(prompts: &MotionPromptSequence, layout: &PoolLayout) -> Result<Vec<f64>> {
    if layout.cell_of.len() != prompts.height() * prompts.width() {
        return Err(Error::ShapeMismatch(format!(
            "pool layout covers {} pixels, prompts have {}",
            layout.cell_of.len(),
            prompts.height() * prompts.width()
        )));
    }
    let mut feats = vec![0.0; layout.features()];
    for t in 0..prompts.len() {
        for (px, &cell) in prompts
            .prompt(t)
            .chunks_exact(CHANNELS)
            .zip(&layout.cell_of)
        {
            for c in 0..CHANNELS {
                feats[cell * CHANNELS + c] += px[c];
            }
        }
    }
    let norm = prompts.len() as f64;
    for (cell, chunk) in feats.chunks_exact_mut(CHANNELS).enumerate() {
        let denom = norm * layout.cell_sizes[cell] as f64;
        chunk.iter_mut().for_each(|v| *v /= denom);
    }
    Ok(feats)
}

/// Linear layer `scores = W x + bias` with `W` stored class-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub classes: usize,
    pub grid: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearClassifier {
    /// All-zero classifier.
    pub fn zeros(classes: usize, grid: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if grid == 0 {
            return Err(Error::Config("pooling grid must be positive".into()));
        }
        let features = grid * grid * CHANNELS;
        Ok(Self {
            classes,
            grid,
            weights: vec![0.0; classes * features],
            bias: vec![0.0; classes],
        })
    }

    pub fn features(&self) -> usize {
        self.grid * self.grid * CHANNELS
    }

    pub fn scores(&self, feats: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.features())
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(feats).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(scores)[label]` via log-sum-exp.
pub fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}
