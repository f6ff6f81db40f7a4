//! File formats: binary PPM/PGM frames, color-mapped visualizations and
//! `key = value` run configurations.

pub mod colormap;
pub mod config;
pub mod frames;
pub mod pnm;

pub use colormap::{write_colormapped, ColorMapKind, ColorMapSpec};
pub use config::RunConfig;
pub use frames::{quantize, read_frames, write_frames, write_prompts};
pub use pnm::{decode, encode_pgm, encode_ppm, read_pnm, write_atomic, PnmImage};
