//! Floating-point plane container for normal, albedo and depth maps.
//!
//! Layout:
//!
//! | bytes | content                                         |
//! |-------|-------------------------------------------------|
//! | 0..4  | magic `PSPL`                                    |
//! | 4     | endianness tag, `b'L'` or `b'B'`                |
//! | 5     | format version (1)                              |
//! | 6..8  | reserved, zero                                  |
//! | 8..20 | width, height, plane count as `u32`             |
//! | 20..  | `planes × height × width` `f64` samples, plane-major |
//!
//! Invalid pixels are stored as NaN; masks travel separately as PGM.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::solver::NormalAlbedoMap;

pub const MAGIC: &[u8; 4] = b"PSPL";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    pub width: usize,
    pub height: usize,
    /// One buffer of `width × height` samples per plane.
    pub planes: Vec<Vec<f64>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format {
        path: "<planes>".into(),
        message: msg.into(),
    }
}

fn write_body<B: ByteOrder, W: Write>(p: &Planes, out: &mut W) -> Result<()> {
    for v in [p.width, p.height, p.planes.len()] {
        out.write_u32::<B>(v as u32)?;
    }
    for plane in &p.planes {
        for &v in plane {
            out.write_f64::<B>(v)?;
        }
    }
    Ok(())
}

fn read_body<B: ByteOrder, R: Read>(r: &mut R) -> Result<Planes> {
    let width = r.read_u32::<B>()? as usize;
    let height = r.read_u32::<B>()? as usize;
    let count = r.read_u32::<B>()? as usize;
    if count == 0 || count > 16 {
        return Err(bad(format!("implausible plane count {count}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| bad("dimensions overflow"))?;
    let mut planes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut plane = vec![0.0; n];
        r.read_f64_into::<B>(&mut plane)
            .map_err(|_| bad("truncated sample data"))?;
        planes.push(plane);
    }
    Ok(Planes {
        width,
        height,
        planes,
    })
}

pub fn write_planes<W: Write>(p: &Planes, big_endian: bool, mut out: W) -> Result<()> {
    if p.planes.iter().any(|pl| pl.len() != p.width * p.height) {
        return Err(Error::Dimensions("plane size mismatch".into()));
    }
    out.write_all(MAGIC)?;
    out.write_all(&[if big_endian { b'B' } else { b'L' }, VERSION, 0, 0])?;
    if big_endian {
        write_body::<BigEndian, _>(p, &mut out)
    } else {
        write_body::<LittleEndian, _>(p, &mut out)
    }
}

pub fn read_planes<R: Read>(mut r: R) -> Result<Planes> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)
        .map_err(|_| bad("truncated header"))?;
    if &head[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    if head[5] != VERSION {
        return Err(bad(format!("unsupported version {}", head[5])));
    }
    match head[4] {
        b'L' => read_body::<LittleEndian, _>(&mut r),
        b'B' => read_body::<BigEndian, _>(&mut r),
        t => Err(bad(format!("unknown endianness tag {t:#x}"))),
    }
}

pub fn save_planes(p: &Planes, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_planes(p, false, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_planes(path: &Path) -> Result<Planes> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_planes(f).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Normals (3 planes) and albedo (1 plane) of a map.
pub fn map_to_planes(map: &NormalAlbedoMap) -> (Planes, Planes) {
    let mut xyz: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(map.len())).collect();
    for n in map.normals() {
        let v = n.map_or([f64::NAN; 3], |n| n.to_array());
        for (plane, c) in xyz.iter_mut().zip(v) {
            plane.push(c);
        }
    }
    let albedo = map
        .albedo()
        .iter()
        .zip(map.normals())
        .map(|(&a, n)| if n.is_some() { a } else { f64::NAN })
        .collect();
    let dims = |planes| Planes {
        width: map.width(),
        height: map.height(),
        planes,
    };
    (dims(xyz), dims(vec![albedo]))
}

/// Inverse of [`map_to_planes`]; NaN normals mark invalid pixels.
pub fn planes_to_map(normals: &Planes, albedo: Option<&Planes>) -> Result<NormalAlbedoMap> {
    if normals.planes.len() != 3 {
        return Err(bad("normal map needs 3 planes"));
    }
    if let Some(a) = albedo {
        if (a.width, a.height) != (normals.width, normals.height) || a.planes.is_empty() {
            return Err(Error::Dimensions(
                "albedo plane does not match normals".into(),
            ));
        }
    }
    let n = normals.width * normals.height;
    let mut out_n = Vec::with_capacity(n);
    let mut out_a = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y, z) = (
            normals.planes[0][i],
            normals.planes[1][i],
            normals.planes[2][i],
        );
        let normal = if x.is_nan() || y.is_nan() || z.is_nan() {
            None
        } else {
            Some(UnitVector3::new(x, y, z)?)
        };
        let a = albedo.map_or(1.0, |a| a.planes[0][i]);
        out_a.push(if normal.is_some() && a.is_finite() {
            a
        } else {
            0.0
        });
        out_n.push(normal);
    }
    NormalAlbedoMap::from_parts(normals.width, normals.height, out_n, out_a, vec![0; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_self_describing() {
        let p = Planes {
            width: 2,
            height: 1,
            planes: vec![vec![1.0, 2.0]],
        };
        let mut buf = Vec::new();
        write_planes(&p, false, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"PSPL\x4c\x01");
        assert_eq!(buf.len(), 20 + 16);
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(read_planes(&b"NOPE\x4c\x01\0\0"[..]).is_err());
        assert!(read_planes(&b"PSPLX\x01\0\0"[..]).is_err());
        let p = Planes {
            width: 3,
            height: 3,
            planes: vec![vec![0.0; 9]],
        };
        let mut buf = Vec::new();
        write_planes(&p, true, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_planes(buf.as_slice()).is_err());
    }

    #[test]
    fn map_round_trip_keeps_mask() {
        let truth = crate::render::SphereScene::with_size(16).ground_truth();
        let (n, a) = map_to_planes(&truth);
        let back = planes_to_map(&n, Some(&a)).unwrap();
        assert_eq!(back.normals(), truth.normals());
        assert_eq!(back.albedo(), truth.albedo());
    }

    proptest! {
        #[test]
        fn round_trip_both_endiannesses(
            w in 1usize..6, h in 1usize..6, big in any::<bool>(),
            seed in proptest::collection::vec(-1e6f64..1e6, 36)
        ) {
            let p = Planes { width: w, height: h, planes: vec![seed[..w * h].to_vec(), seed[..w * h].iter().map(|v| -v).collect()] };
            let mut buf = Vec::new();
            write_planes(&p, big, &mut buf).unwrap();
            prop_assert_eq!(read_planes(buf.as_slice()).unwrap(), p);
        }
    }
}
