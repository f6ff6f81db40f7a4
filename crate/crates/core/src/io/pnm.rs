//! Binary netpbm: P5 (gray) and P6 (RGB), 8-bit samples.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    /// 1 for P5, 3 for P6.
    pub channels: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

/// Parses a P5 or P6 image. `path` is used only for error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<PnmImage> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) => {
            return Err(Error::format(
                path,
                format!("unsupported netpbm magic {:?}", String::from_utf8_lossy(m)),
            ))
        }
        None => return Err(Error::format(path, "file too short for a netpbm header")),
    };
    let mut hdr = Header { bytes, pos: 2 };
    let mut field = |name: &str| {
        hdr.number()
            .ok_or_else(|| Error::format(path, format!("missing or malformed {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            path,
            format!("maxval {maxval} unsupported, only 8-bit samples are read"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(hdr.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(path, "header not terminated by whitespace"));
    }
    let start = hdr.pos + 1;
    let len = width * height * channels;
    let raster = bytes
        .get(start..start + len)
        .ok_or_else(|| Error::format(path, format!("raster truncated: need {len} bytes")))?;
    if let Some(&v) = raster.iter().find(|&&v| usize::from(v) > maxval) {
        return Err(Error::format(
            path,
            format!("sample {v} exceeds maxval {maxval}"),
        ));
    }
    Ok(PnmImage {
        width,
        height,
        channels,
        maxval: maxval as u16,
        data: raster.to_vec(),
    })
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

fn encode(magic: &str, width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

/// P6 with maxval 255. `rgb` holds `width * height * 3` bytes.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width * height * 3);
    encode("P6", width, height, rgb)
}

/// P5 with maxval 255.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    debug_assert_eq!(gray.len(), width * height);
    encode("P5", width, height, gray)
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_ppm() {
        let rgb: Vec<u8> = (0..2 * 3 * 3).map(|i| (i * 13) as u8).collect();
        let img = decode(&encode_ppm(3, 2, &rgb), Path::new("x.ppm")).unwrap();
        assert_eq!(
            (img.width, img.height, img.channels, img.maxval),
            (3, 2, 3, 255)
        );
        assert_eq!(img.data, rgb);
    }

    #[test]
    fn header_with_comments() {
        let mut bytes = b"P5\n# made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 200]);
        let img = decode(&bytes, Path::new("c.pgm")).unwrap();
        assert_eq!(img.data, vec![10, 200]);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("bad.ppm");
        assert!(decode(b"P3\n1 1\n255\n0 0 0", p).is_err());
        assert!(decode(b"P6\n2 2\n255\n\x00\x00", p).is_err());
        assert!(decode(b"P5\n1 1\n65535\n\x00\x00", p).is_err());
        assert!(decode(b"P5\n1 1\n", p).is_err());
        let err = decode(b"P5 x 1 255\n", p).unwrap_err().to_string();
        assert!(err.contains("bad.ppm"), "{err}");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_atomic(&path, &encode_pgm(1, 1, &[7])).unwrap();
        write_atomic(&path, &encode_pgm(1, 1, &[9])).unwrap();
        assert_eq!(read_pnm(&path).unwrap().data, vec![9]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
