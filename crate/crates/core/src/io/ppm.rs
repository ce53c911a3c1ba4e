//! Binary PPM (P6, maxval 255).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::ByteVideo;

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PPM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or("").to_string());
    }
    if fields[0] != "P6" {
        return Err(Error::Format(format!("unsupported PPM magic {:?}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PPM header field {s:?}")))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = w * h * 3;
    if bytes.len() < pos + n {
        return Err(Error::Format("truncated PPM raster".into()));
    }
    Ok((w, h, bytes[pos..pos + n].to_vec()))
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    fs::write(path, encode_ppm(width, height, rgb))?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    decode_ppm(&fs::read(path)?)
}

/// Writes `<prefix>_00000.ppm`, `<prefix>_00001.ppm`, ... into `dir`.
pub fn write_ppm_stack(dir: &Path, prefix: &str, video: &ByteVideo) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(video.frames);
    for f in 0..video.frames {
        let p = dir.join(format!("{prefix}_{f:05}.ppm"));
        write_ppm(&p, video.width, video.height, video.frame(f))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Reads consecutive `<prefix>_NNNNN.ppm` files starting at 0.
pub fn read_ppm_stack(dir: &Path, prefix: &str) -> Result<ByteVideo> {
    let mut data = Vec::new();
    let mut dims = None;
    let mut frames = 0;
    loop {
        let p = dir.join(format!("{prefix}_{frames:05}.ppm"));
        if !p.exists() {
            break;
        }
        let (w, h, rgb) = read_ppm(&p)?;
        match dims {
            None => dims = Some((w, h)),
            Some(d) if d != (w, h) => return Err(Error::Format(format!("{} has size {w}x{h}", p.display()))),
            _ => {}
        }
        data.extend_from_slice(&rgb);
        frames += 1;
    }
    let (width, height) =
        dims.ok_or_else(|| Error::Format(format!("no {prefix}_*.ppm frames in {}", dir.display())))?;
    Ok(ByteVideo {
        frames,
        height,
        width,
        data,
    })
}
