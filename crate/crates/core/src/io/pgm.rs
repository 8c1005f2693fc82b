//! Binary PGM (P5) reading and writing.
//!
//! Quantized images are stored with maxval 255. Real-valued images go into a
//! 16-bit container (maxval 65535) where the sample is `round(v · 257)`, the
//! usual 8→16 bit expansion; integer intensities therefore survive exactly and
//! fractional ones to within 1/514. Plain (P2) files are accepted on read.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

const SCALE_16: f64 = 257.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    /// 8-bit for images that are already integral in `0..=255`.
    pub fn for_image(image: &GrayImage) -> Self {
        if image.is_8bit() {
            BitDepth::Eight
        } else {
            BitDepth::Sixteen
        }
    }
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format {
        path: "<pgm>".into(),
        message: msg.into(),
    }
}

pub fn write_pgm<W: Write>(image: &GrayImage, depth: BitDepth, mut out: W) -> Result<()> {
    let maxval = match depth {
        BitDepth::Eight => 255,
        BitDepth::Sixteen => 65535,
    };
    write!(
        out,
        "P5\n{} {}\n{}\n",
        image.width(),
        image.height(),
        maxval
    )?;
    let mut buf = Vec::with_capacity(image.len() * 2);
    for &v in image.pixels() {
        if !(0.0..=255.0).contains(&v) {
            return Err(fmt_err(format!("intensity {v} outside [0, 255]")));
        }
        match depth {
            BitDepth::Eight => buf.push(v.round() as u8),
            BitDepth::Sixteen => {
                buf.extend_from_slice(&((v * SCALE_16).round() as u16).to_be_bytes())
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            r.read_until(b'\n', &mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c as char);
    }
    if tok.is_empty() {
        return Err(fmt_err("truncated header"));
    }
    Ok(tok)
}

fn number<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    token(r)?
        .parse()
        .map_err(|_| fmt_err(format!("bad {what}")))
}

pub fn read_pgm<R: BufRead>(mut r: R) -> Result<GrayImage> {
    let magic = token(&mut r)?;
    let width = number(&mut r, "width")?;
    let height = number(&mut r, "height")?;
    let maxval = number(&mut r, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(fmt_err(format!("unsupported maxval {maxval}")));
    }
    // Maps stored samples back to the 0..=255 intensity scale.
    let divisor = match maxval {
        255 => 1.0,
        65535 => SCALE_16,
        m => m as f64 / 255.0,
    };
    let n = width * height;
    let pixels = match magic.as_str() {
        "P5" => {
            let bytes = if maxval < 256 { 1 } else { 2 };
            let mut data = vec![0u8; n * bytes];
            r.read_exact(&mut data)
                .map_err(|_| fmt_err("truncated pixel data"))?;
            if bytes == 1 {
                data.iter().map(|&b| b as f64 / divisor).collect()
            } else {
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / divisor)
                    .collect()
            }
        }
        "P2" => (0..n)
            .map(|_| number(&mut r, "sample").map(|v| v as f64 / divisor))
            .collect::<Result<Vec<_>>>()?,
        other => return Err(fmt_err(format!("unsupported magic {other:?}"))),
    };
    GrayImage::new(width, height, pixels)
}

pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pgm(image, BitDepth::for_image(image), &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_pgm(f).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Boolean mask as an 8-bit PGM (255 = set).
pub fn mask_image(width: usize, height: usize, mask: &[bool]) -> GrayImage {
    let px = mask.iter().map(|&m| if m { 255.0 } else { 0.0 }).collect();
    GrayImage::new(width, height, px).expect("mask matches dimensions")
}
