use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::integrate::TriangleMesh;

/// ASCII PLY with `x y z` vertices, optional `gray`, and triangle faces.
pub fn write_ply<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    if mesh.gray.is_some() {
        writeln!(out, "property uchar gray")?;
    }
    writeln!(out, "element face {}", mesh.faces.len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.gray {
            Some(g) => writeln!(out, "{} {} {} {}", v[0], v[1], v[2], g[i])?,
            None => writeln!(out, "{} {} {}", v[0], v[1], v[2])?,
        }
    }
    for f in &mesh.faces {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

pub fn save_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_ply(mesh, &mut f)?;
    f.flush()?;
    Ok(())
}
