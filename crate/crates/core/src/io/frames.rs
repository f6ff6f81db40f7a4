//! Reading clips from, and writing them to, numbered netpbm files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::framediff::{FrameSequence, CHANNELS};
use crate::io::pnm::{encode_ppm, read_pnm, write_atomic};
use crate::prompt::MotionPromptSequence;

fn is_netpbm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("pgm"))
}

/// Files named by `pattern`: a directory (all `.ppm`/`.pgm` inside) or a
/// glob. Sorted by file name.
pub fn list_frames(pattern: &str) -> Result<Vec<PathBuf>> {
    let root = Path::new(pattern);
    let mut paths: Vec<PathBuf> = if root.is_dir() {
        std::fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_netpbm(p))
            .collect()
    } else {
        glob::glob(pattern)
            .map_err(|e| Error::Config(format!("bad frame pattern `{pattern}`: {e}")))?
            .filter_map(|p| p.ok())
            .filter(|p| p.is_file())
            .collect()
    };
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
    Ok(paths)
}

/// Loads a clip. Gray (P5) frames are replicated to three channels and
/// samples are scaled by `1 / maxval`.
pub fn read_frames(pattern: &str) -> Result<FrameSequence> {
    let paths = list_frames(pattern)?;
    if paths.len() < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: paths.len(),
        });
    }
    let mut dims = None;
    let mut data = Vec::new();
    for path in &paths {
        let img = read_pnm(path)?;
        match dims {
            None => dims = Some((img.width, img.height)),
            Some(d) if d != (img.width, img.height) => {
                return Err(Error::format(
                    path,
                    format!(
                        "frame is {}x{}, earlier frames are {}x{}",
                        img.width, img.height, d.0, d.1
                    ),
                ))
            }
            Some(_) => {}
        }
        let scale = f64::from(img.maxval);
        let sample = |b: u8| (f64::from(b) / scale).clamp(0.0, 1.0);
        if img.channels == 1 {
            data.extend(img.data.iter().flat_map(|&g| [sample(g); CHANNELS]));
        } else {
            data.extend(img.data.iter().map(|&b| sample(b)));
        }
    }
    let (width, height) = dims.expect("at least two frames were read");
    FrameSequence::new(height, width, paths.len(), data)
}

/// Maps `[0, 1]` to `0..=255` with rounding; out-of-range values clamp.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_rgb_sequence(
    dir: &Path,
    prefix: &str,
    height: usize,
    width: usize,
    count: usize,
    frame: impl Fn(usize) -> Vec<u8>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|t| {
            let path = dir.join(format!("{prefix}_{t:04}.ppm"));
            write_atomic(&path, &encode_ppm(width, height, &frame(t)))?;
            Ok(path)
        })
        .collect()
}

/// Writes each frame as `<dir>/<prefix>_NNNN.ppm`.
pub fn write_frames(dir: &Path, prefix: &str, frames: &FrameSequence) -> Result<Vec<PathBuf>> {
    write_rgb_sequence(
        dir,
        prefix,
        frames.height(),
        frames.width(),
        frames.frames(),
        |t| frames.frame(t).iter().map(|&v| quantize(v)).collect(),
    )
}

/// Writes each prompt as `<dir>/<prefix>_NNNN.ppm`.
pub fn write_prompts(
    dir: &Path,
    prefix: &str,
    prompts: &MotionPromptSequence,
) -> Result<Vec<PathBuf>> {
    write_rgb_sequence(
        dir,
        prefix,
        prompts.height(),
        prompts.width(),
        prompts.len(),
        |t| prompts.prompt(t).iter().map(|&v| quantize(v)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::pnm::encode_pgm;

    #[test]
    fn zero_ppm_pair() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.ppm", "a.ppm"] {
            write_atomic(&dir.path().join(name), &encode_ppm(4, 4, &[0; 48])).unwrap();
        }
        let f = read_frames(dir.path().to_str().unwrap()).unwrap();
        assert_eq!((f.frames(), f.height(), f.width()), (2, 4, 4));
        assert!(f.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sorted_by_name_regardless_of_creation_order() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("f2.pgm"), &encode_pgm(1, 1, &[200])).unwrap();
        write_atomic(&dir.path().join("f1.pgm"), &encode_pgm(1, 1, &[100])).unwrap();
        write_atomic(&dir.path().join("f3.pgm"), &encode_pgm(1, 1, &[0])).unwrap();
        let pattern = dir.path().join("f*.pgm");
        let f = read_frames(pattern.to_str().unwrap()).unwrap();
        let firsts: Vec<f64> = (0..3).map(|t| f.get(t, 0, 0, 0)).collect();
        assert_eq!(firsts, vec![100.0 / 255.0, 200.0 / 255.0, 0.0]);
    }

    #[test]
    fn gray_frames_replicate_channels() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("0.pgm"), &encode_pgm(2, 1, &[0, 51])).unwrap();
        write_atomic(&dir.path().join("1.pgm"), &encode_pgm(2, 1, &[255, 102])).unwrap();
        let f = read_frames(dir.path().to_str().unwrap()).unwrap();
        for t in 0..2 {
            for x in 0..2 {
                let c0 = f.get(t, 0, x, 0);
                assert!(c0 == f.get(t, 0, x, 1) && c0 == f.get(t, 0, x, 2));
            }
        }
        assert_eq!(f.get(0, 0, 1, 0), 0.2);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("0.pgm"), &encode_pgm(2, 1, &[0, 0])).unwrap();
        write_atomic(&dir.path().join("1.pgm"), &encode_pgm(1, 2, &[0, 0])).unwrap();
        let err = read_frames(dir.path().to_str().unwrap()).unwrap_err();
        assert!(err.to_string().contains("1.pgm"), "{err}");
    }

    #[test]
    fn unreadable_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("0.pgm"), &encode_pgm(1, 1, &[0])).unwrap();
        std::fs::write(dir.path().join("1.pgm"), b"GIF89a").unwrap();
        let err = read_frames(dir.path().to_str().unwrap()).unwrap_err();
        assert!(err.to_string().contains("1.pgm"), "{err}");
    }

    #[test]
    fn too_few_frames() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("0.pgm"), &encode_pgm(1, 1, &[0])).unwrap();
        assert!(matches!(
            read_frames(dir.path().to_str().unwrap()),
            Err(Error::InsufficientFrames { got: 1, .. })
        ));
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bytes: Vec<u8> = (0..2 * 3 * 3 * 3).map(|i| (i * 9) as u8).collect();
        let clip = FrameSequence::from_u8(2, 3, 3, &bytes).unwrap();
        write_frames(dir.path(), "frame", &clip).unwrap();
        assert_eq!(read_frames(dir.path().to_str().unwrap()).unwrap(), clip);
    }
}
