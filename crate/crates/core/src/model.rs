//! Forward and backward passes of the motion prompt layer feeding the pooled
//! classifier, one clip at a time.

use rayon::prelude::*;

use crate::classifier::{cross_entropy, softmax, LinearClassifier, PoolLayout};
use crate::error::{Error, Result};
use crate::framediff::{diff_maps, DiffMapSequence, FrameSequence, CHANNELS};
use crate::pn::{sigmoid, sigmoid_derivative, PnParams};
use crate::regularization::{total_loss, LossBreakdown};

/// A clip with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub frames: FrameSequence,
    pub label: usize,
}

/// What the classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Attention-weighted frames `2..T`.
    MotionPrompt,
    /// Frames `2..T` unmodified (attention fixed at 1, nothing to learn).
    RawFrames,
}

/// A labeled clip with its difference maps computed once.
#[derive(Debug, Clone)]
pub struct PreparedClip {
    pub frames: FrameSequence,
    pub diffs: DiffMapSequence,
    pub label: usize,
}

impl PreparedClip {
    pub fn new(clip: &LabeledClip) -> Result<Self> {
        Ok(Self {
            diffs: diff_maps(&clip.frames)?,
            frames: clip.frames.clone(),
            label: clip.label,
        })
    }
}

pub fn prepare(clips: &[LabeledClip]) -> Result<Vec<PreparedClip>> {
    clips.par_iter().map(PreparedClip::new).collect()
}

/// Loss terms and, optionally, gradients for one clip.
#[derive(Debug, Clone, Default)]
pub(crate) struct ClipPass {
    pub task_loss: f64,
    pub variation: f64,
    pub correct: bool,
    pub d_m: f64,
    pub d_n: f64,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

pub(crate) fn check_clip(
    clip: &PreparedClip,
    classifier: &LinearClassifier,
    layout: &PoolLayout,
) -> Result<()> {
    if clip.label >= classifier.classes {
        return Err(Error::ShapeMismatch(format!(
            "label {} with {} classes",
            clip.label, classifier.classes
        )));
    }
    if layout.cell_of.len() != clip.frames.height() * clip.frames.width() {
        return Err(Error::ShapeMismatch(format!(
            "clip is {}x{}, classifier layout covers {} pixels",
            clip.frames.height(),
            clip.frames.width(),
            layout.cell_of.len()
        )));
    }
    Ok(())
}

/// Runs one clip through diffs -> attention -> prompts -> pooled features ->
/// scores, and backpropagates `CE + lambda * V` when `backward` is set.
pub(crate) fn clip_pass(
    clip: &PreparedClip,
    params: &PnParams,
    classifier: &LinearClassifier,
    layout: &PoolLayout,
    lambda: f64,
    pipeline: Pipeline,
    backward: bool,
) -> ClipPass {
    let maps = clip.diffs.len();
    let pixels = clip.frames.height() * clip.frames.width();
    let a = params.slope();
    let b = params.shift();

    let attn: Vec<f64> = match pipeline {
        Pipeline::MotionPrompt => clip
            .diffs
            .data()
            .iter()
            .map(|&d| sigmoid(a * (d - b)))
            .collect(),
        Pipeline::RawFrames => vec![1.0; maps * pixels],
    };

    // Pooled features.
    let n_feat = layout.features();
    let mut feats = vec![0.0; n_feat];
    for t in 0..maps {
        let frame = clip.frames.frame(t + 1);
        let weights = &attn[t * pixels..(t + 1) * pixels];
        for ((px, &w), &cell) in frame
            .chunks_exact(CHANNELS)
            .zip(weights)
            .zip(&layout.cell_of)
        {
            for c in 0..CHANNELS {
                feats[cell * CHANNELS + c] += w * px[c];
            }
        }
    }
    let mut cell_norm = vec![0.0; layout.cell_sizes.len()];
    for (norm, &size) in cell_norm.iter_mut().zip(&layout.cell_sizes) {
        *norm = 1.0 / (maps as f64 * size as f64);
    }
    for (cell, chunk) in feats.chunks_exact_mut(CHANNELS).enumerate() {
        chunk.iter_mut().for_each(|v| *v *= cell_norm[cell]);
    }

    let scores = classifier.scores(&feats);
    let task_loss = cross_entropy(&scores, clip.label);
    let correct = crate::classifier::argmax(&scores) == clip.label;

    let pairs = maps.saturating_sub(1);
    let variation = if pipeline == Pipeline::MotionPrompt && pairs > 0 {
        let sum: f64 = attn[pixels..]
            .iter()
            .zip(&attn[..attn.len() - pixels])
            .map(|(next, prev)| (next - prev) * (next - prev))
            .sum();
        sum / pairs as f64
    } else {
        0.0
    };

    let mut pass = ClipPass {
        task_loss,
        variation,
        correct,
        ..ClipPass::default()
    };
    if !backward {
        return pass;
    }

    let mut d_scores = softmax(&scores);
    d_scores[clip.label] -= 1.0;
    pass.d_weights = d_scores
        .iter()
        .flat_map(|&ds| feats.iter().map(move |&f| ds * f))
        .collect();
    pass.d_bias = d_scores.clone();

    if pipeline == Pipeline::RawFrames {
        return pass;
    }

    let mut d_feats = vec![0.0; n_feat];
    for (row, &ds) in classifier.weights.chunks_exact(n_feat).zip(&d_scores) {
        for (df, &w) in d_feats.iter_mut().zip(row) {
            *df += ds * w;
        }
    }
    // Fold the pooling normalization into the feature gradient.
    for (cell, chunk) in d_feats.chunks_exact_mut(CHANNELS).enumerate() {
        chunk.iter_mut().for_each(|v| *v *= cell_norm[cell]);
    }

    let var_scale = if pairs > 0 {
        2.0 * lambda / pairs as f64
    } else {
        0.0
    };
    let mut sum_shifted = 0.0; // sum of dL/dg * (D - b)
    let mut sum_plain = 0.0; // sum of dL/dg
    for t in 0..maps {
        let frame = clip.frames.frame(t + 1);
        let diffs = clip.diffs.map(t);
        let cur = &attn[t * pixels..(t + 1) * pixels];
        for p in 0..pixels {
            let cell = layout.cell_of[p];
            let px = &frame[p * CHANNELS..(p + 1) * CHANNELS];
            let mut d_attn = 0.0;
            for c in 0..CHANNELS {
                d_attn += d_feats[cell * CHANNELS + c] * px[c];
            }
            let s = cur[p];
            if var_scale != 0.0 {
                if t > 0 {
                    d_attn += var_scale * (s - attn[(t - 1) * pixels + p]);
                }
                if t + 1 < maps {
                    d_attn -= var_scale * (attn[(t + 1) * pixels + p] - s);
                }
            }
            let d_g = d_attn * sigmoid_derivative(a * (diffs[p] - b));
            sum_shifted += d_g * (diffs[p] - b);
            sum_plain += d_g;
        }
    }
    pass.d_m = slope_derivative(params) * sum_shifted;
    pass.d_n = -a * shift_derivative(params) * sum_plain;
    pass
}

/// `a'(m)`, with the subgradient at `m = 0` taken as 0.
pub fn slope_derivative(params: &PnParams) -> f64 {
    let h = &params.hyper;
    let t = params.m.tanh();
    let sign = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    let denom = h.beta * t.abs() + h.epsilon;
    -h.alpha * h.beta * sign * (1.0 - t * t) / (denom * denom)
}

/// `b'(n) = gamma (1 - tanh^2 n)`.
pub fn shift_derivative(params: &PnParams) -> f64 {
    let t = params.n.tanh();
    params.hyper.gamma * (1.0 - t * t)
}

/// Batch-mean loss and gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPass {
    pub loss: LossBreakdown,
    pub correct: usize,
    pub d_m: f64,
    pub d_n: f64,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

/// Averages per-clip passes over the batch in a fixed order.
pub(crate) fn batch_pass(
    clips: &[&PreparedClip],
    params: &PnParams,
    classifier: &LinearClassifier,
    layout: &PoolLayout,
    lambda: f64,
    pipeline: Pipeline,
    backward: bool,
) -> Result<BatchPass> {
    if clips.is_empty() {
        return Err(Error::Empty("batch"));
    }
    for clip in clips {
        check_clip(clip, classifier, layout)?;
    }
    let passes: Vec<ClipPass> = clips
        .par_iter()
        .map(|clip| clip_pass(clip, params, classifier, layout, lambda, pipeline, backward))
        .collect();

    let scale = 1.0 / passes.len() as f64;
    let mut out = BatchPass {
        loss: total_loss(0.0, 0.0, lambda)?,
        correct: 0,
        d_m: 0.0,
        d_n: 0.0,
        d_weights: vec![
            0.0;
            if backward {
                classifier.weights.len()
            } else {
                0
            }
        ],
        d_bias: vec![0.0; if backward { classifier.classes } else { 0 }],
    };
    let (mut task, mut var) = (0.0, 0.0);
    for p in &passes {
        task += p.task_loss;
        var += p.variation;
        out.correct += usize::from(p.correct);
        if backward {
            out.d_m += p.d_m;
            out.d_n += p.d_n;
            for (acc, g) in out.d_weights.iter_mut().zip(&p.d_weights) {
                *acc += g;
            }
            for (acc, g) in out.d_bias.iter_mut().zip(&p.d_bias) {
                *acc += g;
            }
        }
    }
    // d_m, d_n already carry the lambda-weighted variation term.
    out.loss = total_loss(task * scale, var * scale, lambda)?;
    out.d_m *= scale;
    out.d_n *= scale;
    out.d_weights.iter_mut().for_each(|g| *g *= scale);
    out.d_bias.iter_mut().for_each(|g| *g *= scale);
    Ok(out)
}
