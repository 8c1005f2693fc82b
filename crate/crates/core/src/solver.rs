//! Calibrated photometric stereo.
//!
//! For each pixel the measurements that are neither shadowed nor saturated are
//! stacked into `I = s · L b` with `L` the `k × 3` light matrix and `s` the
//! source intensity. The scaled normal `b = ρ n` is the least-squares solution
//! of the normal equations `(LᵀL) b = Lᵀ I / s`; the albedo is `|b|` and the
//! normal `b / |b|`. With exactly three lights this reduces to `b = L⁻¹ I / s`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::image::GrayImage;
use crate::par::{map_rows, Execution};

/// Largest accepted eigenvalue ratio of `LᵀL`.
pub const MAX_CONDITION: f64 = 1e8;
/// Albedo below which a pixel is treated as unlit.
pub const ALBEDO_FLOOR: f64 = 1e-9;

/// Images of one scene under `f` known lights.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    pub images: Vec<GrayImage>,
    pub light_directions: Vec<UnitVector3>,
    /// Radiant intensity of each source, in image units for unit albedo.
    pub light_intensity: f64,
    pub ambient_frame: Option<GrayImage>,
    /// Ambient frame that was removed by [`subtract_ambient`]; the solver uses
    /// it to test saturation against the raw sensor values.
    pub subtracted_ambient: Option<GrayImage>,
}

impl ImageStack {
    pub fn new(
        images: Vec<GrayImage>,
        light_directions: Vec<UnitVector3>,
        light_intensity: f64,
        ambient_frame: Option<GrayImage>,
    ) -> Result<Self> {
        let stack = Self {
            images,
            light_directions,
            light_intensity,
            ambient_frame,
            subtracted_ambient: None,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.len() < 3 {
            return Err(Error::Dimensions(format!(
                "photometric stereo needs at least 3 images, got {}",
                self.images.len()
            )));
        }
        if self.images.len() != self.light_directions.len() {
            return Err(Error::Dimensions(format!(
                "{} images but {} light directions",
                self.images.len(),
                self.light_directions.len()
            )));
        }
        let dims = self.images[0].dims();
        let others = self
            .images
            .iter()
            .chain(&self.ambient_frame)
            .chain(&self.subtracted_ambient);
        if others.clone().any(|im| im.dims() != dims) {
            return Err(Error::Dimensions("images differ in size".into()));
        }
        if !(self.light_intensity > 0.0 && self.light_intensity.is_finite()) {
            return Err(Error::Domain("light intensity must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }

    /// Multiplies every image by `factor`.
    pub fn scaled(&self, factor: f64) -> ImageStack {
        ImageStack {
            images: self
                .images
                .iter()
                .map(|im| im.map(|v| v * factor))
                .collect(),
            ambient_frame: self.ambient_frame.as_ref().map(|im| im.map(|v| v * factor)),
            subtracted_ambient: self
                .subtracted_ambient
                .as_ref()
                .map(|im| im.map(|v| v * factor)),
            ..self.clone()
        }
    }
}

/// Per-pixel normals and albedo with an explicit validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalAlbedoMap {
    width: usize,
    height: usize,
    normals: Vec<Option<UnitVector3>>,
    albedo: Vec<f64>,
    used_light_count: Vec<usize>,
}

impl NormalAlbedoMap {
    pub fn from_parts(
        width: usize,
        height: usize,
        normals: Vec<Option<UnitVector3>>,
        albedo: Vec<f64>,
        used_light_count: Vec<usize>,
    ) -> Result<Self> {
        let n = width * height;
        if normals.len() != n || albedo.len() != n || used_light_count.len() != n {
            return Err(Error::Dimensions(format!(
                "map buffers do not match {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            normals,
            albedo,
            used_light_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normal(&self, i: usize) -> Option<&UnitVector3> {
        self.normals[i].as_ref()
    }

    pub fn normals(&self) -> &[Option<UnitVector3>] {
        &self.normals
    }

    /// Albedo per pixel; zero where the pixel is invalid.
    pub fn albedo(&self) -> &[f64] {
        &self.albedo
    }

    pub fn used_light_count(&self) -> &[usize] {
        &self.used_light_count
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.normals[i].is_some()
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        self.normals.iter().map(Option::is_some).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }
}

/// Accepted measurement range; both bounds are exclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 2.0,
            high: 250.0,
        }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 <= low && low < high && high <= 255.0) {
            return Err(Error::Domain(format!(
                "thresholds must satisfy 0 <= low < high <= 255 (got {low}, {high})"
            )));
        }
        Ok(Self { low, high })
    }

    /// Only excludes exactly-zero (shadowed) measurements.
    pub fn shadows_only() -> Self {
        Self {
            low: 0.0,
            high: 255.0,
        }
    }

    pub fn accepts(&self, intensity: f64) -> bool {
        self.low < intensity && intensity < self.high
    }
}

/// Which of the measurements lie strictly inside `(low, high)`.
pub fn pixel_measurement_mask(intensities: &[f64], low: f64, high: f64) -> Vec<bool> {
    intensities.iter().map(|&v| low < v && v < high).collect()
}

/// Removes the ambient frame from every image, clamping at zero.
pub fn subtract_ambient(stack: &ImageStack) -> Result<ImageStack> {
    let ambient = stack.ambient_frame.as_ref().ok_or(Error::MissingAmbient)?;
    if ambient.dims() != stack.dims() {
        return Err(Error::Dimensions("ambient frame differs in size".into()));
    }
    let images = stack
        .images
        .iter()
        .map(|im| {
            let px = im
                .pixels()
                .iter()
                .zip(ambient.pixels())
                .map(|(&v, &a)| (v - a).max(0.0))
                .collect();
            GrayImage::new(im.width(), im.height(), px).expect("same dimensions")
        })
        .collect();
    let previous = stack.subtracted_ambient.as_ref();
    let removed = match previous {
        Some(p) => GrayImage::new(
            p.width(),
            p.height(),
            p.pixels()
                .iter()
                .zip(ambient.pixels())
                .map(|(a, b)| a + b)
                .collect(),
        )?,
        None => ambient.clone(),
    };
    Ok(ImageStack {
        images,
        light_directions: stack.light_directions.clone(),
        light_intensity: stack.light_intensity,
        ambient_frame: None,
        subtracted_ambient: Some(removed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSolution {
    pub normal: UnitVector3,
    pub albedo: f64,
    /// Root of the summed squared intensity residuals.
    pub residual: f64,
}

fn finish(
    b: Vector3<f64>,
    intensities: &[f64],
    lights: &[UnitVector3],
    order: &[usize],
    light_intensity: f64,
) -> Result<PixelSolution> {
    let albedo = b.norm();
    if !(albedo >= ALBEDO_FLOOR) {
        return Err(Error::DarkPixel { albedo });
    }
    let normal = UnitVector3::normalize(b)?;
    let residual = order
        .iter()
        .map(|&k| (intensities[k] - light_intensity * lights[k].as_vector().dot(&b)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PixelSolution {
        normal,
        albedo,
        residual,
    })
}

fn check_inputs(intensities: &[f64], lights: &[UnitVector3], light_intensity: f64) -> Result<()> {
    if intensities.len() != lights.len() {
        return Err(Error::Dimensions(format!(
            "{} intensities for {} lights",
            intensities.len(),
            lights.len()
        )));
    }
    if lights.len() < 3 {
        return Err(Error::DegenerateLights {
            condition: f64::INFINITY,
        });
    }
    if !(light_intensity > 0.0) {
        return Err(Error::Domain("light intensity must be positive".into()));
    }
    Ok(())
}

/// Least-squares albedo and normal from `k >= 3` measurements.
///
/// Measurements are accumulated in a canonical order so the result does not
/// depend on how the lights are listed.
pub fn solve_pixel(
    intensities: &[f64],
    lights: &[UnitVector3],
    light_intensity: f64,
) -> Result<PixelSolution> {
    check_inputs(intensities, lights, light_intensity)?;
    let mut order: Vec<usize> = (0..lights.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (lights[a].to_array(), lights[b].to_array());
        la[0]
            .total_cmp(&lb[0])
            .then(la[1].total_cmp(&lb[1]))
            .then(la[2].total_cmp(&lb[2]))
            .then(intensities[a].total_cmp(&intensities[b]))
    });
    let mut normal_matrix = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &k in &order {
        let l = lights[k].as_vector();
        normal_matrix += l * l.transpose();
        rhs += l * intensities[k];
    }
    let eig = SymmetricEigen::new(normal_matrix).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateLights { condition });
    }
    let b = normal_matrix
        .cholesky()
        .ok_or(Error::DegenerateLights { condition })?
        .solve(&(rhs / light_intensity));
    finish(b, intensities, lights, &order, light_intensity)
}

/// Direct `L⁻¹ I` solution for exactly three lights.
pub fn solve_pixel_direct(
    intensities: &[f64; 3],
    lights: &[UnitVector3; 3],
    light_intensity: f64,
) -> Result<PixelSolution> {
    check_inputs(intensities, lights, light_intensity)?;
    let l = Matrix3::from_rows(&[
        lights[0].as_vector().transpose(),
        lights[1].as_vector().transpose(),
        lights[2].as_vector().transpose(),
    ]);
    let inv = l.try_inverse().ok_or(Error::DegenerateLights {
        condition: f64::INFINITY,
    })?;
    let b = inv * Vector3::from_column_slice(intensities) / light_intensity;
    finish(b, intensities, lights, &[0, 1, 2], light_intensity)
}

pub fn solve_stack(stack: &ImageStack, thresholds: &Thresholds) -> NormalAlbedoMap {
    solve_stack_with(stack, thresholds, Execution::default())
}

/// Solves every pixel independently.
///
/// A measurement is used when its (ambient-subtracted) value exceeds
/// `thresholds.low` and its raw sensor value stays below `thresholds.high`.
/// Pixels with fewer than three usable measurements, ill-conditioned lights
/// or an albedo below [`ALBEDO_FLOOR`] are marked invalid.
pub fn solve_stack_with(
    stack: &ImageStack,
    thresholds: &Thresholds,
    exec: Execution,
) -> NormalAlbedoMap {
    let (w, h) = stack.dims();
    let f = stack.len();
    let ambient = stack.subtracted_ambient.as_ref();
    let per_pixel = map_rows(h, exec, |y| {
        let mut values = Vec::with_capacity(f);
        let mut lights = Vec::with_capacity(f);
        (0..w)
            .map(|x| {
                let i = y * w + x;
                let offset = ambient.map_or(0.0, |a| a.pixels()[i]);
                values.clear();
                lights.clear();
                for (img, l) in stack.images.iter().zip(&stack.light_directions) {
                    let v = img.pixels()[i];
                    if thresholds.low < v && v + offset < thresholds.high {
                        values.push(v);
                        lights.push(*l);
                    }
                }
                let used = values.len();
                if used < 3 {
                    return (None, 0.0, used);
                }
                match solve_pixel(&values, &lights, stack.light_intensity) {
                    Ok(s) => (Some(s.normal), s.albedo, used),
                    Err(_) => (None, 0.0, used),
                }
            })
            .collect()
    });
    let mut normals = Vec::with_capacity(w * h);
    let mut albedo = Vec::with_capacity(w * h);
    let mut used = Vec::with_capacity(w * h);
    for (n, a, u) in per_pixel {
        normals.push(n);
        albedo.push(a);
        used.push(u);
    }
    NormalAlbedoMap::from_parts(w, h, normals, albedo, used).expect("sizes match")
}

/// Per-pixel comparison of two normal maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Angular error in degrees where both maps are valid.
    pub per_pixel_deg: Vec<Option<f64>>,
    pub count: usize,
    pub mean_deg: f64,
    pub median_deg: f64,
    /// `|n̂ - n| / |n|` statistics.
    pub mean_rel: f64,
    pub median_rel: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn angular_error_map(
    estimate: &NormalAlbedoMap,
    truth: &NormalAlbedoMap,
) -> Result<ErrorReport> {
    if (estimate.width, estimate.height) != (truth.width, truth.height) {
        return Err(Error::Dimensions("normal maps differ in size".into()));
    }
    let mut angles = Vec::new();
    let mut rel = Vec::new();
    let per_pixel_deg = estimate
        .normals
        .iter()
        .zip(&truth.normals)
        .map(|pair| match pair {
            (Some(e), Some(t)) => {
                let deg = e.angle_to(t).to_degrees();
                angles.push(deg);
                rel.push((e.as_vector() - t.as_vector()).norm() / t.as_vector().norm());
                Some(deg)
            }
            _ => None,
        })
        .collect();
    if angles.is_empty() {
        return Err(Error::NoCommonPixels);
    }
    let count = angles.len();
    let mean_deg = angles.iter().sum::<f64>() / count as f64;
    let mean_rel = rel.iter().sum::<f64>() / count as f64;
    Ok(ErrorReport {
        per_pixel_deg,
        count,
        mean_deg,
        median_deg: median(&mut angles),
        mean_rel,
        median_rel: median(&mut rel),
    })
}
