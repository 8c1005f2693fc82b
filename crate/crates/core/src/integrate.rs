//! Normal-map integration.
//!
//! Depth is the least-squares fit of `z` to the gradient field on the masked
//! pixel grid: every pair of 4-adjacent valid pixels contributes the residual
//! `z_j - z_i - t_ij`, with `t_ij` the mean of the two pixels' gradients along
//! the edge. The resulting graph-Laplacian system is solved per connected
//! component by conjugate gradients and each component is shifted to zero
//! mean. Distances are in pixels.

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::solver::NormalAlbedoMap;

pub const DEFAULT_Z_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    /// ∂z/∂x along image columns.
    pub p: Vec<f64>,
    /// ∂z/∂y along image rows.
    pub q: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GradientField {
    pub fn new(
        width: usize,
        height: usize,
        p: Vec<f64>,
        q: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if p.len() != n || q.len() != n || valid.len() != n {
            return Err(Error::Dimensions(format!(
                "gradient buffers do not match {width}x{height}"
            )));
        }
        if p.iter()
            .zip(&q)
            .zip(&valid)
            .any(|((p, q), &v)| v && !(p.is_finite() && q.is_finite()))
        {
            return Err(Error::Domain("non-finite gradient on a valid pixel".into()));
        }
        Ok(Self {
            width,
            height,
            p,
            q,
            valid,
        })
    }

    /// Uniform gradient over a fully valid grid.
    pub fn constant(width: usize, height: usize, p: f64, q: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            p: vec![p; n],
            q: vec![q; n],
            valid: vec![true; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub z: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DepthMap {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Same surface under a different anchoring convention.
    pub fn offset_by(&self, c: f64) -> DepthMap {
        DepthMap {
            z: self
                .z
                .iter()
                .zip(&self.valid)
                .map(|(&z, &v)| if v { z + c } else { z })
                .collect(),
            ..self.clone()
        }
    }
}

/// `p = -n_x / n_z`, `q = -n_y / n_z` where `n_z > z_floor`.
pub fn normals_to_gradients(map: &NormalAlbedoMap, z_floor: f64) -> GradientField {
    let n = map.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut valid = vec![false; n];
    for (i, normal) in map.normals().iter().enumerate() {
        if let Some(nrm) = normal {
            if nrm.z() > z_floor {
                p[i] = -nrm.x() / nrm.z();
                q[i] = -nrm.y() / nrm.z();
                valid[i] = true;
            }
        }
    }
    GradientField {
        width: map.width(),
        height: map.height(),
        p,
        q,
        valid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    /// Relative residual at which CG stops.
    pub tolerance: f64,
    /// Iteration cap as a multiple of the component size.
    pub max_iterations_factor: usize,
    pub execution: Execution,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations_factor: 10,
            execution: Execution::default(),
        }
    }
}

/// 4-connected components of the valid mask, each as a sorted pixel list.
pub fn connected_components(width: usize, height: usize, valid: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; valid.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..valid.len() {
        if !valid[start] || label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = Vec::new();
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = (i % width, i / width);
            let mut visit = |j: usize| {
                if valid[j] && label[j] == usize::MAX {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Compressed adjacency of one component.
struct Graph {
    offsets: Vec<usize>,
    neighbours: Vec<usize>,
}

impl Graph {
    fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    fn laplacian_apply(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        let n = x.len();
        let kernel = |i: usize| {
            let nb = &self.neighbours[self.offsets[i]..self.offsets[i + 1]];
            self.degree(i) as f64 * x[i] - nb.iter().map(|&j| x[j]).sum::<f64>()
        };
        if n < 4096 {
            map_indexed(n, Execution::Sequential, kernel)
        } else {
            map_indexed(n, exec, kernel)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn integrate_component(
    field: &GradientField,
    members: &[usize],
    settings: &IntegrationSettings,
) -> Vec<f64> {
    let n = members.len();
    if n == 1 {
        return vec![0.0];
    }
    let w = field.width;
    let local = |pixel: usize| members.binary_search(&pixel).ok();

    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbours = Vec::with_capacity(4 * n);
    let mut rhs = vec![0.0; n];
    offsets.push(0);
    for (li, &i) in members.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        // (neighbour, signed edge target from i towards the neighbour)
        let mut candidates = [None; 4];
        if x > 0 {
            candidates[0] = Some((i - 1, -0.5 * (field.p[i] + field.p[i - 1])));
        }
        if x + 1 < w {
            candidates[1] = Some((i + 1, 0.5 * (field.p[i] + field.p[i + 1])));
        }
        if y > 0 {
            candidates[2] = Some((i - w, -0.5 * (field.q[i] + field.q[i - w])));
        }
        if y + 1 < field.height {
            candidates[3] = Some((i + w, 0.5 * (field.q[i] + field.q[i + w])));
        }
        for (j, t) in candidates.into_iter().flatten() {
            if let Some(lj) = local(j) {
                neighbours.push(lj);
                // d/dz_i of (z_j - z_i - t)^2 / 2 moves -t to the right side.
                rhs[li] -= t;
            }
        }
        offsets.push(neighbours.len());
    }
    let graph = Graph {
        offsets,
        neighbours,
    };

    remove_mean(&mut rhs);
    let b_norm = dot(&rhs, &rhs).sqrt();
    let mut z = vec![0.0; n];
    if b_norm == 0.0 {
        return z;
    }
    let mut r = rhs;
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let target = settings.tolerance * b_norm;
    let max_iter = settings.max_iterations_factor.max(1) * n;
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            break;
        }
        let ad = graph.laplacian_apply(&d, settings.execution);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            break;
        }
        let alpha = rr / dad;
        for k in 0..n {
            z[k] += alpha * d[k];
            r[k] -= alpha * ad[k];
        }
        remove_mean(&mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for k in 0..n {
            d[k] = r[k] + beta * d[k];
        }
        rr = rr_next;
    }
    remove_mean(&mut z);
    z
}

pub fn integrate(field: &GradientField) -> Result<DepthMap> {
    integrate_with(field, &IntegrationSettings::default())
}

/// Least-squares depth from gradients, one zero-mean solution per component.
pub fn integrate_with(field: &GradientField, settings: &IntegrationSettings) -> Result<DepthMap> {
    let components = connected_components(field.width, field.height, &field.valid);
    if components.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut z = vec![0.0; field.width * field.height];
    for members in &components {
        let local = integrate_component(field, members, settings);
        for (&i, v) in members.iter().zip(local) {
            z[i] = v;
        }
    }
    Ok(DepthMap {
        width: field.width,
        height: field.height,
        z,
        valid: field.valid.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub gray: Option<Vec<u8>>,
    pub faces: Vec<[usize; 3]>,
}

/// One vertex per valid pixel, two triangles per fully valid 2×2 quad.
///
/// Vertices are `(column, -row, depth)`: a right-handed frame with the
/// camera on `+z`, and triangles wound counter-clockwise as seen from it.
pub fn depth_to_mesh(depth: &DepthMap, albedo: Option<&NormalAlbedoMap>) -> TriangleMesh {
    let (w, h) = (depth.width, depth.height);
    let mut index = vec![usize::MAX; w * h];
    let mut vertices = Vec::new();
    for (i, slot) in index.iter_mut().enumerate() {
        if depth.valid[i] {
            *slot = vertices.len();
            vertices.push([(i % w) as f64, -((i / w) as f64), depth.z[i]]);
        }
    }
    let mut faces = Vec::new();
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = index[y * w + x];
            let b = index[y * w + x + 1];
            let c = index[(y + 1) * w + x];
            let d = index[(y + 1) * w + x + 1];
            if [a, b, c, d].iter().all(|&v| v != usize::MAX) {
                faces.push([a, c, b]);
                faces.push([b, c, d]);
            }
        }
    }
    let gray = albedo.map(|m| {
        let peak = (0..w * h)
            .filter(|&i| depth.valid[i] && m.is_valid(i))
            .map(|i| m.albedo()[i])
            .fold(0.0, f64::max);
        (0..w * h)
            .filter(|&i| depth.valid[i])
            .map(|i| {
                if peak > 0.0 && m.is_valid(i) {
                    (255.0 * m.albedo()[i] / peak).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            })
            .collect()
    });
    TriangleMesh {
        vertices,
        gray,
        faces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector3;

    fn map_from(normals: Vec<Option<UnitVector3>>, w: usize, h: usize) -> NormalAlbedoMap {
        let n = w * h;
        NormalAlbedoMap::from_parts(w, h, normals, vec![1.0; n], vec![0; n]).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let c = 0.75f64.sqrt();
        let normals = vec![
            Some(UnitVector3::z_axis()),
            Some(UnitVector3::new(0.5, 0.0, c).unwrap()),
            Some(UnitVector3::from_components(1.0, 0.0, 0.05).unwrap()),
            None,
        ];
        let g = normals_to_gradients(&map_from(normals, 4, 1), 0.1);
        assert_eq!((g.p[0], g.q[0]), (0.0, 0.0));
        assert!((g.p[1] + 0.577_350_269_189_625_8).abs() < 1e-12);
        assert_eq!(g.q[1], 0.0);
        assert_eq!(g.valid, vec![true, true, false, false]);
    }

    #[test]
    fn floor_rule() {
        let nz: f64 = 0.05;
        let n = UnitVector3::from_components((1.0 - nz * nz).sqrt(), 0.0, nz).unwrap();
        let g = normals_to_gradients(&map_from(vec![Some(n)], 1, 1), 0.1);
        assert!(!g.valid[0]);
    }

    #[test]
    fn flat_field_integrates_to_zero() {
        let d = integrate(&GradientField::constant(9, 7, 0.0, 0.0)).unwrap();
        assert!(d.z.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn plane_is_exact() {
        let (w, h, a, b) = (23, 17, 0.3, -1.7);
        let d = integrate(&GradientField::constant(w, h, a, b)).unwrap();
        let mean_x = (w - 1) as f64 / 2.0;
        let mean_y = (h - 1) as f64 / 2.0;
        for i in 0..w * h {
            let expect = a * ((i % w) as f64 - mean_x) + b * ((i / w) as f64 - mean_y);
            assert!((d.z[i] - expect).abs() < 1e-9, "pixel {i}");
        }
    }

    #[test]
    fn components_are_independent() {
        // Two columns separated by an invalid column.
        let (w, h) = (3, 4);
        let mut f = GradientField::constant(w, h, 0.0, 1.0);
        for y in 0..h {
            f.valid[y * w + 1] = false;
        }
        f.q.iter_mut().skip(2).step_by(3).for_each(|q| *q = -2.0);
        let d = integrate(&f).unwrap();
        assert_eq!(connected_components(w, h, &f.valid).len(), 2);
        for (col, slope) in [(0, 1.0), (2, -2.0)] {
            let zs: Vec<f64> = (0..h).map(|y| d.z[y * w + col]).collect();
            assert!(zs.iter().sum::<f64>().abs() < 1e-12);
            for y in 1..h {
                assert!((zs[y] - zs[y - 1] - slope).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_domain_is_an_error() {
        let mut f = GradientField::constant(3, 3, 0.0, 0.0);
        f.valid = vec![false; 9];
        assert!(matches!(integrate(&f), Err(Error::EmptyDomain)));
    }

    #[test]
    fn single_pixel() {
        let mut f = GradientField::constant(3, 3, 1.0, 1.0);
        f.valid = vec![false; 9];
        f.valid[4] = true;
        let d = integrate(&f).unwrap();
        assert_eq!(d.z[4], 0.0);
        let mesh = depth_to_mesh(&d, None);
        assert_eq!((mesh.vertices.len(), mesh.faces.len()), (1, 0));
    }

    #[test]
    fn two_by_two_mesh() {
        let d = integrate(&GradientField::constant(2, 2, 0.0, 0.0)).unwrap();
        let mesh = depth_to_mesh(&d, None);
        assert_eq!((mesh.vertices.len(), mesh.faces.len()), (4, 2));
    }

    #[test]
    fn mesh_gray_from_albedo() {
        let n = vec![Some(UnitVector3::z_axis()); 4];
        let map =
            NormalAlbedoMap::from_parts(2, 2, n, vec![0.5, 1.0, 0.25, 0.0], vec![3; 4]).unwrap();
        let d = integrate(&normals_to_gradients(&map, 0.1)).unwrap();
        let mesh = depth_to_mesh(&d, Some(&map));
        assert_eq!(mesh.gray.unwrap(), vec![128, 255, 64, 0]);
    }

    #[test]
    fn rejects_non_finite() {
        let r = GradientField::new(1, 1, vec![f64::NAN], vec![0.0], vec![true]);
        assert!(r.is_err());
    }
}
