//! On-disk image stacks: `image_NNN.pgm`, optional `ambient.pgm`, and a
//! `lights.txt` sidecar with one `lx ly lz` line per image.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::io::pgm::{load_pgm, save_pgm};
use crate::solver::ImageStack;

pub const LIGHTS_FILE: &str = "lights.txt";
pub const AMBIENT_FILE: &str = "ambient.pgm";
/// Tolerance on the norm of directions read from the sidecar.
pub const SIDECAR_UNIT_TOLERANCE: f64 = 1e-6;

pub fn image_file_name(index: usize) -> String {
    format!("image_{index:03}.pgm")
}

pub fn format_lights(lights: &[UnitVector3]) -> String {
    let mut s = String::new();
    for l in lights {
        writeln!(s, "{} {} {}", l.x(), l.y(), l.z()).expect("writing to a string");
    }
    s
}

/// Parses the sidecar; blank lines and `#` comments are ignored.
pub fn parse_lights(text: &str, origin: &Path) -> Result<Vec<UnitVector3>> {
    let err = |line: usize, message: String| Error::Format {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(no + 1, format!("{e}")))?;
        if vals.len() != 3 {
            return Err(err(
                no + 1,
                format!("expected 3 components, got {}", vals.len()),
            ));
        }
        let norm = (vals[0] * vals[0] + vals[1] * vals[1] + vals[2] * vals[2]).sqrt();
        if !((norm - 1.0).abs() <= SIDECAR_UNIT_TOLERANCE) {
            return Err(err(no + 1, format!("direction has norm {norm}")));
        }
        out.push(UnitVector3::from_components(vals[0], vals[1], vals[2])?);
    }
    Ok(out)
}

pub fn save_stack(stack: &ImageStack, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (k, im) in stack.images.iter().enumerate() {
        save_pgm(im, &dir.join(image_file_name(k)))?;
    }
    if let Some(a) = &stack.ambient_frame {
        save_pgm(a, &dir.join(AMBIENT_FILE))?;
    }
    std::fs::write(
        dir.join(LIGHTS_FILE),
        format_lights(&stack.light_directions),
    )?;
    Ok(())
}

/// Loads a stack written by [`save_stack`]. The sidecar fixes the image count.
pub fn load_stack(dir: &Path, light_intensity: f64) -> Result<ImageStack> {
    let lights_path = dir.join(LIGHTS_FILE);
    let lights = parse_lights(&std::fs::read_to_string(&lights_path)?, &lights_path)?;
    let images = (0..lights.len())
        .map(|k| load_pgm(&dir.join(image_file_name(k))))
        .collect::<Result<Vec<_>>>()?;
    let ambient_path = dir.join(AMBIENT_FILE);
    let ambient = if ambient_path.exists() {
        Some(load_pgm(&ambient_path)?)
    } else {
        None
    };
    ImageStack::new(images, lights, light_intensity, ambient)
}
