//! RGB clips, grayscale conversion and consecutive frame differencing.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub const CHANNELS: usize = 3;

/// A single real-valued `height x width` field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Empty("plane"));
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "plane {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// A frame difference map, values in `[-1, 1]`.
pub type DiffMap = Plane;

fn check_unit_interval(what: &'static str, data: &[f64]) -> Result<()> {
    match data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&value) => Err(Error::OutOfRange {
            what,
            value,
            low: 0.0,
            high: 1.0,
        }),
        None => Ok(()),
    }
}

/// An RGB clip with values in `[0, 1]`.
///
/// Storage is frame-major, then row, column and channel: the value for
/// `(t, y, x, c)` lives at `((t * height + y) * width + x) * 3 + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    height: usize,
    width: usize,
    frames: usize,
    data: Vec<f64>,
}

impl FrameSequence {
    pub fn new(height: usize, width: usize, frames: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || frames == 0 || data.is_empty() {
            return Err(Error::Empty("frame sequence"));
        }
        if frames < 2 {
            return Err(Error::InsufficientFrames {
                needed: 2,
                got: frames,
            });
        }
        let expected = height * width * CHANNELS * frames;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{frames} frames of {height}x{width}x3 need {expected} values, got {}",
                data.len()
            )));
        }
        check_unit_interval("pixel", &data)?;
        Ok(Self {
            height,
            width,
            frames,
            data,
        })
    }

    /// Builds a clip from 8-bit samples, scaling by 1/255.
    pub fn from_u8(height: usize, width: usize, frames: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes
            .iter()
            .map(|&b| (f64::from(b) / 255.0).clamp(0.0, 1.0))
            .collect();
        Self::new(height, width, frames, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * CHANNELS
    }

    /// Interleaved RGB samples of frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        let len = self.frame_len();
        &self.data[t * len..(t + 1) * len]
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[((t * self.height + y) * self.width + x) * CHANNELS + c]
    }

    /// Multiplies every sample by `factor`, which must lie in `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::OutOfRange {
                what: "scale factor",
                value: factor,
                low: 0.0,
                high: 1.0,
            });
        }
        Ok(Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        })
    }
}

/// A grayscale clip with values in `[0, 1]`, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayscaleSequence {
    height: usize,
    width: usize,
    frames: usize,
    data: Vec<f64>,
}

impl GrayscaleSequence {
    pub fn new(height: usize, width: usize, frames: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || frames == 0 || data.is_empty() {
            return Err(Error::Empty("grayscale sequence"));
        }
        if data.len() != height * width * frames {
            return Err(Error::ShapeMismatch(format!(
                "{frames} frames of {height}x{width} need {} values, got {}",
                height * width * frames,
                data.len()
            )));
        }
        check_unit_interval("grayscale", &data)?;
        Ok(Self {
            height,
            width,
            frames,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let len = self.height * self.width;
        &self.data[t * len..(t + 1) * len]
    }

    /// The same frames in reverse temporal order.
    pub fn reversed(&self) -> Self {
        let len = self.height * self.width;
        let data = (0..self.frames)
            .rev()
            .flat_map(|t| self.data[t * len..(t + 1) * len].iter().copied())
            .collect();
        Self { data, ..*self }
    }
}

/// `T - 1` difference maps with values in `[-1, 1]`, stored map-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMapSequence {
    height: usize,
    width: usize,
    maps: usize,
    data: Vec<f64>,
}

impl DiffMapSequence {
    pub fn new(height: usize, width: usize, maps: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || maps == 0 {
            return Err(Error::Empty("diff map sequence"));
        }
        if data.len() != height * width * maps {
            return Err(Error::ShapeMismatch(format!(
                "{maps} maps of {height}x{width} need {} values, got {}",
                height * width * maps,
                data.len()
            )));
        }
        if let Some(&value) = data.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "frame difference",
                value,
                low: -1.0,
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

    pub fn plane(&self, t: usize) -> DiffMap {
        Plane {
            height: self.height,
            width: self.width,
            data: self.map(t).to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.height * self.width)
    }
}

/// Converts each RGB frame to BT.601 luma.
pub fn to_grayscale(frames: &FrameSequence) -> Result<GrayscaleSequence> {
    if frames.data.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    check_unit_interval("pixel", &frames.data)?;
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = frames
        .data
        .par_chunks_exact(CHANNELS)
        .map(|px| (wr * px[0] + wg * px[1] + wb * px[2]).clamp(0.0, 1.0))
        .collect();
    Ok(GrayscaleSequence {
        height: frames.height,
        width: frames.width,
        frames: frames.frames,
        data,
    })
}

/// Computes `D_t = gray_{t+1} - gray_t` for every consecutive pair.
pub fn frame_differencing(gray: &GrayscaleSequence) -> Result<DiffMapSequence> {
    if gray.frames < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: gray.frames,
        });
    }
    let len = gray.height * gray.width;
    // Frame t+1 starts exactly `len` samples after frame t.
    let data = gray.data[len..]
        .iter()
        .zip(&gray.data[..gray.data.len() - len])
        .map(|(next, prev)| (next - prev).clamp(-1.0, 1.0))
        .collect();
    Ok(DiffMapSequence {
        height: gray.height,
        width: gray.width,
        maps: gray.frames - 1,
        data,
    })
}

/// Grayscale conversion followed by differencing.
pub fn diff_maps(frames: &FrameSequence) -> Result<DiffMapSequence> {
    frame_differencing(&to_grayscale(frames)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(h: usize, w: usize, t: usize, rgb: [f64; 3]) -> FrameSequence {
        let data = (0..h * w * t).flat_map(|_| rgb).collect();
        FrameSequence::new(h, w, t, data).unwrap()
    }

    #[test]
    fn black_frames_give_zero_gray() {
        let g = to_grayscale(&solid(2, 3, 2, [0.0; 3])).unwrap();
        assert!(g.frame(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equal_channels_pass_through() {
        for v in [0.0, 0.2, 0.77, 1.0] {
            let g = to_grayscale(&solid(2, 2, 2, [v; 3])).unwrap();
            for &x in g.frame(1) {
                assert!((x - v).abs() < 1e-15, "{x} vs {v}");
            }
        }
    }

    #[test]
    fn pure_red_is_luma_weight() {
        let g = to_grayscale(&solid(1, 1, 2, [1.0, 0.0, 0.0])).unwrap();
        assert_eq!(g.frame(0)[0], 0.299);
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(matches!(
            FrameSequence::new(1, 1, 2, vec![0.5, 0.5, 1.5, 0.0, 0.0, 0.0]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            FrameSequence::new(0, 1, 2, vec![]),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            FrameSequence::new(1, 1, 1, vec![0.0; 3]),
            Err(Error::InsufficientFrames { got: 1, .. })
        ));
    }

    #[test]
    fn from_u8_scales() {
        let f = FrameSequence::from_u8(1, 1, 2, &[255, 0, 51, 0, 0, 0]).unwrap();
        assert_eq!(f.get(0, 0, 0, 0), 1.0);
        assert_eq!(f.get(0, 0, 0, 2), 0.2);
    }

    #[test]
    fn static_scene_has_zero_diff() {
        let g = GrayscaleSequence::new(2, 2, 2, vec![0.3; 8]).unwrap();
        let d = frame_differencing(&g).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.map(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn extreme_diffs() {
        let up = GrayscaleSequence::new(1, 2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(frame_differencing(&up).unwrap().map(0), &[1.0, 1.0]);
        let down = GrayscaleSequence::new(1, 2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(frame_differencing(&down).unwrap().map(0), &[-1.0, -1.0]);
    }

    #[test]
    fn single_frame_is_insufficient() {
        let g = GrayscaleSequence::new(1, 1, 1, vec![0.5]).unwrap();
        assert!(matches!(
            frame_differencing(&g),
            Err(Error::InsufficientFrames { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn diff_values_are_ordered_by_time() {
        let g = GrayscaleSequence::new(1, 1, 4, vec![0.1, 0.4, 0.2, 0.9]).unwrap();
        let d = frame_differencing(&g).unwrap();
        let got: Vec<f64> = d.iter().map(|m| m[0]).collect();
        let want = [0.4 - 0.1, 0.2 - 0.4, 0.9 - 0.2];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }
}
