//! Attention map sequences and video motion prompts.
//!
//! Prompt `t` is the attention map computed from `D_t` multiplied into every
//! channel of frame `t + 1`, so a `T`-frame clip yields `T - 1` prompts and
//! the first frame is consumed only by differencing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::framediff::{DiffMapSequence, FrameSequence, Plane, CHANNELS};
use crate::pn::{apply_pn_slice, AttentionMap, PnParams};

/// Per-pixel attention in `[0, 1]` for each of the `T - 1` difference maps.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMapSequence {
    height: usize,
    width: usize,
    maps: usize,
    data: Vec<f64>,
}

impl AttentionMapSequence {
    pub fn new(height: usize, width: usize, maps: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || maps == 0 {
            return Err(Error::Empty("attention map sequence"));
        }
        if data.len() != height * width * maps {
            return Err(Error::ShapeMismatch(format!(
                "{maps} maps of {height}x{width} need {} values, got {}",
                height * width * maps,
                data.len()
            )));
        }
        if let Some(&value) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "attention",
                value,
                low: 0.0,
                high: 1.0,
            });
        }
        Ok(Self {
            height,
            width,
            maps,
            data,
        })
    }

    /// Stacks equally sized planes in order.
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or(Error::Empty("attention map sequence"))?;
        if let Some(p) = planes
            .iter()
            .find(|p| p.height != first.height || p.width != first.width)
        {
            return Err(Error::ShapeMismatch(format!(
                "attention maps {}x{} and {}x{}",
                first.height, first.width, p.height, p.width
            )));
        }
        let data = planes.iter().flat_map(|p| p.data.iter().copied()).collect();
        Self::new(first.height, first.width, planes.len(), data)
    }

    pub fn filled(height: usize, width: usize, maps: usize, value: f64) -> Result<Self> {
        Self::new(height, width, maps, vec![value; height * width * maps])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.maps
    }

    pub fn is_empty(&self) -> bool {
        self.maps == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, t: usize) -> &[f64] {
        let len = self.height * self.width;
        &self.data[t * len..(t + 1) * len]
    }

    pub fn plane(&self, t: usize) -> AttentionMap {
        Plane {
            height: self.height,
            width: self.width,
            data: self.map(t).to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.height * self.width)
    }

    /// The maps in reverse temporal order.
    pub fn reversed(&self) -> Self {
        let data = self
            .data
            .chunks_exact(self.height * self.width)
            .rev()
            .flatten()
            .copied()
            .collect();
        Self { data, ..*self }
    }
}

/// Highlighted frames, same layout as [`FrameSequence`] with `T - 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPromptSequence {
    height: usize,
    width: usize,
    prompts: usize,
    data: Vec<f64>,
}

impl MotionPromptSequence {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.prompts
    }

    pub fn is_empty(&self) -> bool {
        self.prompts == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Interleaved RGB samples of prompt `t`.
    pub fn prompt(&self, t: usize) -> &[f64] {
        let len = self.height * self.width * CHANNELS;
        &self.data[t * len..(t + 1) * len]
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[((t * self.height + y) * self.width + x) * CHANNELS + c]
    }
}

/// Runs the learnable PN over every difference map.
pub fn attention_sequence(
    diffs: &DiffMapSequence,
    params: &PnParams,
) -> Result<AttentionMapSequence> {
    let maps: Vec<Vec<f64>> = diffs
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|d| apply_pn_slice(d, params))
        .collect::<Result<_>>()?;
    Ok(AttentionMapSequence {
        height: diffs.height(),
        width: diffs.width(),
        maps: diffs.len(),
        data: maps.concat(),
    })
}

/// Channel-wise Hadamard product of attention map `t` with frame `t + 1`.
pub fn motion_prompts(
    frames: &FrameSequence,
    attn: &AttentionMapSequence,
) -> Result<MotionPromptSequence> {
    if frames.height() != attn.height || frames.width() != attn.width {
        return Err(Error::ShapeMismatch(format!(
            "frames are {}x{}, attention maps are {}x{}",
            frames.height(),
            frames.width(),
            attn.height,
            attn.width
        )));
    }
    if attn.maps + 1 != frames.frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames need {} attention maps, got {}",
            frames.frames(),
            frames.frames() - 1,
            attn.maps
        )));
    }
    let frame_len = frames.frame_len();
    let mut data = vec![0.0; attn.maps * frame_len];
    data.par_chunks_exact_mut(frame_len)
        .enumerate()
        .for_each(|(t, out)| {
            let frame = frames.frame(t + 1);
            let weights = attn.map(t);
            for ((px_out, px_in), &w) in out
                .chunks_exact_mut(CHANNELS)
                .zip(frame.chunks_exact(CHANNELS))
                .zip(weights)
            {
                for (o, &v) in px_out.iter_mut().zip(px_in) {
                    *o = w * v;
                }
            }
        });
    Ok(MotionPromptSequence {
        height: attn.height,
        width: attn.width,
        prompts: attn.maps,
        data,
    })
}
