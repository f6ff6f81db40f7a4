//! Linear color maps for difference maps, attention maps and prompts.
//!
//! The diverging map sends the range midpoint to white, the low end to blue
//! and the high end to orange. The sequential map runs from a near-white
//! tint at the low end to dark red at the high end.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framediff::Plane;
use crate::io::pnm::{encode_ppm, write_atomic};

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLUE: [u8; 3] = [0, 0, 255];
pub const ORANGE: [u8; 3] = [255, 128, 0];
pub const LIGHT: [u8; 3] = [255, 245, 240];
pub const DARK_RED: [u8; 3] = [103, 0, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMapKind {
    DivergingBlueOrange,
    SequentialRed,
    Grayscale,
}

impl fmt::Display for ColorMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorMapKind::DivergingBlueOrange => "diverging-blue-orange",
            ColorMapKind::SequentialRed => "sequential-red",
            ColorMapKind::Grayscale => "grayscale",
        })
    }
}

impl FromStr for ColorMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diverging-blue-orange" | "diverging" => Ok(ColorMapKind::DivergingBlueOrange),
            "sequential-red" | "red" => Ok(ColorMapKind::SequentialRed),
            "grayscale" | "gray" => Ok(ColorMapKind::Grayscale),
            _ => Err(Error::Unknown {
                what: "color map",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMapSpec {
    pub kind: ColorMapKind,
    pub low: f64,
    pub high: f64,
}

fn lerp(from: [u8; 3], to: [u8; 3], t: f64) -> [u8; 3] {
    std::array::from_fn(|i| {
        let (a, b) = (f64::from(from[i]), f64::from(to[i]));
        (a + (b - a) * t).round().clamp(0.0, 255.0) as u8
    })
}

impl ColorMapSpec {
    pub fn new(kind: ColorMapKind, low: f64, high: f64) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() || low >= high {
            return Err(Error::Domain(format!(
                "color map range [{low}, {high}] is empty"
            )));
        }
        Ok(Self { kind, low, high })
    }

    /// Diverging map over `[-1, 1]` for frame differences.
    pub fn diverging() -> Self {
        Self {
            kind: ColorMapKind::DivergingBlueOrange,
            low: -1.0,
            high: 1.0,
        }
    }

    /// Sequential red map over `[0, 1]` for attention.
    pub fn attention() -> Self {
        Self {
            kind: ColorMapKind::SequentialRed,
            low: 0.0,
            high: 1.0,
        }
    }

    pub fn grayscale(low: f64, high: f64) -> Result<Self> {
        Self::new(ColorMapKind::Grayscale, low, high)
    }

    /// Color of `value`; values outside the range are clamped.
    pub fn color(&self, value: f64) -> [u8; 3] {
        let t = ((value - self.low) / (self.high - self.low)).clamp(0.0, 1.0);
        let t = if t.is_nan() { 0.5 } else { t };
        match self.kind {
            ColorMapKind::DivergingBlueOrange => {
                let s = 2.0 * t - 1.0;
                if s < 0.0 {
                    lerp(WHITE, BLUE, -s)
                } else {
                    lerp(WHITE, ORANGE, s)
                }
            }
            ColorMapKind::SequentialRed => lerp(LIGHT, DARK_RED, t),
            ColorMapKind::Grayscale => {
                let g = (t * 255.0).round() as u8;
                [g; 3]
            }
        }
    }

    /// Interleaved RGB bytes for a plane.
    pub fn render(&self, map: &Plane) -> Vec<u8> {
        map.data.iter().flat_map(|&v| self.color(v)).collect()
    }
}

/// Writes `map` through `spec` as a binary PPM.
pub fn write_colormapped(map: &Plane, spec: &ColorMapSpec, path: &Path) -> Result<()> {
    write_atomic(path, &encode_ppm(map.width, map.height, &spec.render(map)))
}
