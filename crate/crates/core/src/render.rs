//! Synthetic Lambertian sphere renderer.
//!
//! An orthographic camera looks at a sphere centred on the optical axis. The
//! sphere's silhouette is a disc of `image_size / 2 - 1` pixels around pixel
//! `(image_size / 2, image_size / 2)`, leaving a one-pixel border. Light is
//! ideal and directional; ambient light is a uniform additive term.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::image::GrayImage;
use crate::par::{map_rows, Execution};
use crate::solver::{ImageStack, NormalAlbedoMap};

/// Full-scale intensity of an 8-bit sensor.
pub const FULL_SCALE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereScene {
    /// Sphere radius in world units; only affects depth, not normals.
    pub radius: f64,
    pub albedo: f64,
    /// Square image side in pixels.
    pub image_size: usize,
    pub background_albedo: f64,
}

impl Default for SphereScene {
    fn default() -> Self {
        Self {
            radius: 1.0,
            albedo: 0.8,
            image_size: 128,
            background_albedo: 0.0,
        }
    }
}

impl SphereScene {
    pub fn with_size(image_size: usize) -> Self {
        Self {
            image_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size < 4 {
            return Err(Error::Domain(format!(
                "image size {} too small for the sphere",
                self.image_size
            )));
        }
        if !(self.albedo > 0.0 && self.albedo <= 1.0) {
            return Err(Error::Domain(format!(
                "albedo {} outside (0, 1]",
                self.albedo
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Domain("sphere radius must be positive".into()));
        }
        if !(self.background_albedo >= 0.0) {
            return Err(Error::Domain(
                "background albedo must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Pixel coordinate of the sphere centre (both axes).
    pub fn center_px(&self) -> f64 {
        (self.image_size / 2) as f64
    }

    /// Silhouette radius in pixels.
    pub fn radius_px(&self) -> f64 {
        (self.image_size / 2) as f64 - 1.0
    }

    /// World units per pixel.
    pub fn pixel_size(&self) -> f64 {
        self.radius / self.radius_px()
    }

    /// Position in units of the sphere radius.
    fn unit_offset(&self, px: f64, py: f64) -> (f64, f64) {
        let c = self.center_px();
        let r = self.radius_px();
        ((px - c) / r, (py - c) / r)
    }

    /// Analytic surface normal at a pixel, or `None` off the sphere.
    pub fn normal_at(&self, px: f64, py: f64) -> Option<UnitVector3> {
        let (x, y) = self.unit_offset(px, py);
        let rho2 = x * x + y * y;
        if rho2 >= 1.0 {
            return None;
        }
        let z = (1.0 - rho2).sqrt();
        // Re-normalize to absorb the rounding in z.
        UnitVector3::from_components(x, y, z).ok()
    }

    /// Height of the sphere surface above its equator plane, in world units.
    pub fn depth_at(&self, px: f64, py: f64) -> Option<f64> {
        let (x, y) = self.unit_offset(px, py);
        let rho2 = x * x + y * y;
        (rho2 < 1.0).then(|| self.radius * (1.0 - rho2).sqrt())
    }

    pub fn disc_mask(&self) -> Vec<bool> {
        let n = self.image_size;
        (0..n * n)
            .map(|i| self.normal_at((i % n) as f64, (i / n) as f64).is_some())
            .collect()
    }

    pub fn sphere_pixel_count(&self) -> usize {
        self.disc_mask().iter().filter(|&&m| m).count()
    }

    /// Ground-truth normals and albedo for every sphere pixel.
    pub fn ground_truth(&self) -> NormalAlbedoMap {
        let n = self.image_size;
        let normals: Vec<Option<UnitVector3>> = (0..n * n)
            .map(|i| self.normal_at((i % n) as f64, (i / n) as f64))
            .collect();
        let albedo = normals
            .iter()
            .map(|v| if v.is_some() { self.albedo } else { 0.0 })
            .collect();
        NormalAlbedoMap::from_parts(n, n, normals, albedo, vec![0; n * n])
            .expect("dimensions agree")
    }
}

/// Analytic normal at pixel centre `(px, py)`.
pub fn sphere_normal_at(scene: &SphereScene, px: f64, py: f64) -> Option<UnitVector3> {
    scene.normal_at(px, py)
}

/// Seeded zero-mean Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelNoise {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    pub light_direction: UnitVector3,
    pub light_intensity: f64,
    pub ambient_level: f64,
    /// Round to integers and clamp to `[0, saturation_ceiling]`.
    pub quantize: bool,
    pub saturation_ceiling: f64,
    pub noise: Option<PixelNoise>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            light_direction: UnitVector3::z_axis(),
            light_intensity: FULL_SCALE,
            ambient_level: 0.0,
            quantize: true,
            saturation_ceiling: FULL_SCALE,
            noise: None,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.light_intensity >= 0.0) {
            return Err(Error::Domain("light intensity must be non-negative".into()));
        }
        if !(0.0..=FULL_SCALE).contains(&self.ambient_level) {
            return Err(Error::Domain(format!(
                "ambient level {} outside [0, 255]",
                self.ambient_level
            )));
        }
        if let Some(n) = &self.noise {
            if !(n.sigma >= 0.0) {
                return Err(Error::Domain("noise sigma must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// `light_intensity · albedo · max(0, n·l)`.
pub fn lambertian_intensity(
    normal: &UnitVector3,
    light: &UnitVector3,
    albedo: f64,
    light_intensity: f64,
) -> f64 {
    light_intensity * albedo * normal.dot(light).max(0.0)
}

pub fn render(scene: &SphereScene, settings: &RenderSettings) -> GrayImage {
    render_with(scene, settings, Execution::default())
}

pub fn render_with(scene: &SphereScene, settings: &RenderSettings, exec: Execution) -> GrayImage {
    let n = scene.image_size;
    let background_normal = UnitVector3::z_axis();
    let noise = settings
        .noise
        .filter(|p| p.sigma > 0.0)
        .map(|p| (p, Normal::new(0.0, p.sigma).expect("sigma is finite")));
    let pixels = map_rows(n, exec, |row| {
        // One generator stream per row keeps noise independent of scheduling.
        let mut rng = noise.map(|(p, _)| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(row as u64);
            rng
        });
        (0..n)
            .map(|col| {
                let direct = match scene.normal_at(col as f64, row as f64) {
                    Some(normal) => lambertian_intensity(
                        &normal,
                        &settings.light_direction,
                        scene.albedo,
                        settings.light_intensity,
                    ),
                    None => lambertian_intensity(
                        &background_normal,
                        &settings.light_direction,
                        scene.background_albedo,
                        settings.light_intensity,
                    ),
                };
                let mut v = direct + settings.ambient_level;
                if let (Some(rng), Some((_, dist))) = (rng.as_mut(), noise.as_ref()) {
                    v += dist.sample(rng);
                }
                if settings.quantize {
                    v.round().clamp(0.0, settings.saturation_ceiling)
                } else {
                    v.max(0.0)
                }
            })
            .collect()
    });
    GrayImage::new(n, n, pixels).expect("rendered n*n pixels")
}

/// The frame captured with every light blob switched off.
pub fn render_ambient_frame(scene: &SphereScene, settings: &RenderSettings) -> GrayImage {
    let dark = RenderSettings {
        light_intensity: 0.0,
        ..settings.clone()
    };
    render(scene, &dark)
}

/// Renders one image per light, plus the ambient frame when requested.
///
/// `base.light_direction` is ignored; noise seeds are derived per image.
pub fn render_stack(
    scene: &SphereScene,
    base: &RenderSettings,
    lights: &[UnitVector3],
    with_ambient_frame: bool,
    exec: Execution,
) -> Result<ImageStack> {
    let derive = |k: u64| {
        base.noise.map(|p| PixelNoise {
            sigma: p.sigma,
            seed: p.seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        })
    };
    let images = lights
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let s = RenderSettings {
                light_direction: *l,
                noise: derive(k as u64 + 1),
                ..base.clone()
            };
            render_with(scene, &s, exec)
        })
        .collect();
    let ambient = with_ambient_frame.then(|| {
        let s = RenderSettings {
            light_intensity: 0.0,
            noise: derive(0),
            ..base.clone()
        };
        render_with(scene, &s, exec)
    });
    ImageStack::new(images, lights.to_vec(), base.light_intensity, ambient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::light_direction;

    fn real(light: UnitVector3, intensity: f64, ambient: f64) -> RenderSettings {
        RenderSettings {
            light_direction: light,
            light_intensity: intensity,
            ambient_level: ambient,
            quantize: false,
            ..RenderSettings::default()
        }
    }

    #[test]
    fn lambertian_examples() {
        let z = UnitVector3::z_axis();
        assert!((lambertian_intensity(&z, &z, 0.8, 255.0) - 204.0).abs() < 1e-12);
        let l = light_direction(60.0);
        assert!((lambertian_intensity(&z, &l, 1.0, 200.0) - 100.0).abs() < 1e-12);
        let below = UnitVector3::new(0.0, 0.0, -1.0).unwrap();
        assert_eq!(lambertian_intensity(&below, &z, 1.0, 255.0), 0.0);
    }

    #[test]
    fn sphere_normals() {
        let s = SphereScene::default();
        let c = s.center_px();
        assert_eq!(s.normal_at(c, c).unwrap().to_array(), [0.0, 0.0, 1.0]);
        let n = s.normal_at(c + 0.5 * s.radius_px(), c).unwrap();
        assert!((n.x() - 0.5).abs() < 1e-12 && n.y() == 0.0);
        assert!((n.z() - 0.866_025_403_784_438_6).abs() < 1e-12);
        // Last pixel inside the limb has z within one pixel of zero.
        let edge = c + s.radius_px() - 1.0;
        let n = s.normal_at(edge, c).unwrap();
        let one_px = (1.0 - (1.0 - 1.0 / s.radius_px()).powi(2)).sqrt();
        assert!(n.z() <= one_px + 1e-12);
        assert!(s.normal_at(c + s.radius_px(), c).is_none());
        assert!(s.normal_at(0.0, 0.0).is_none());
    }

    #[test]
    fn sphere_fits_inside_image() {
        for size in [4, 7, 16, 128] {
            let s = SphereScene::with_size(size);
            let mask = s.disc_mask();
            for y in 0..size {
                for x in 0..size {
                    if x == 0 || y == 0 || x == size - 1 || y == size - 1 {
                        assert!(!mask[y * size + x], "size {size} touches border");
                    }
                }
            }
        }
    }

    #[test]
    fn center_pixel_value() {
        let s = SphereScene::default();
        let img = render(&s, &real(light_direction(30.0), 200.0, 0.0));
        let c = s.center_px() as usize;
        let expect = 200.0 * s.albedo * 30f64.to_radians().cos();
        assert!((img.get(c, c) - expect).abs() < 1e-12);
    }

    #[test]
    fn ambient_only_frame_is_constant() {
        let s = SphereScene::with_size(32);
        let settings = RenderSettings {
            light_intensity: 0.0,
            ambient_level: 51.0,
            ..RenderSettings::default()
        };
        assert!(render(&s, &settings).pixels().iter().all(|&v| v == 51.0));
        let amb = render_ambient_frame(&s, &RenderSettings::default());
        assert!(amb.pixels().iter().all(|&v| v == 0.0));
        let amb = render_ambient_frame(&s, &settings);
        assert_eq!(amb.masked_mean(&s.disc_mask()), Some(51.0));
    }

    #[test]
    fn real_mode_matches_reflectance_model() {
        let s = SphereScene::with_size(48);
        let l = light_direction(40.0).rotated_about_z(1.0);
        let img = render(&s, &real(l, 180.0, 0.0));
        for y in 0..48 {
            for x in 0..48 {
                let v = img.get(x, y);
                match s.normal_at(x as f64, y as f64) {
                    Some(n) => assert_eq!(v, lambertian_intensity(&n, &l, s.albedo, 180.0)),
                    None => assert_eq!(v, 0.0),
                }
            }
        }
    }

    #[test]
    fn linear_and_additive() {
        let s = SphereScene::with_size(40);
        let l = light_direction(55.0).rotated_about_z(2.0);
        let a = render(&s, &real(l, 100.0, 0.0));
        let b = render(&s, &real(l, 300.0, 0.0));
        let c = render(&s, &real(l, 100.0, 20.0));
        for i in 0..a.len() {
            assert!((b.pixels()[i] - 3.0 * a.pixels()[i]).abs() <= 1e-12 * b.pixels()[i]);
            assert!((c.pixels()[i] - a.pixels()[i] - 20.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn shadow_set_is_exact() {
        let s = SphereScene::with_size(64);
        let l = light_direction(70.0);
        let img = render(&s, &real(l, 255.0, 10.0));
        for y in 0..64 {
            for x in 0..64 {
                if let Some(n) = s.normal_at(x as f64, y as f64) {
                    let shadowed = img.get(x, y) == 10.0;
                    assert_eq!(shadowed, n.dot(&l) <= 0.0);
                }
            }
        }
    }

    #[test]
    fn quantized_render_is_8bit() {
        let s = SphereScene::default();
        let settings = RenderSettings {
            light_direction: light_direction(20.0),
            ambient_level: 100.0,
            ..RenderSettings::default()
        };
        let img = render(&s, &settings);
        assert!(img.is_8bit());
        assert!(img.pixels().contains(&255.0));
    }

    #[test]
    fn parallel_and_sequential_are_bit_identical() {
        let s = SphereScene::default();
        let settings = RenderSettings {
            light_direction: light_direction(35.0),
            noise: Some(PixelNoise {
                sigma: 1.5,
                seed: 42,
            }),
            ..RenderSettings::default()
        };
        let a = render_with(&s, &settings, Execution::Sequential);
        let b = render_with(&s, &settings, Execution::Parallel);
        assert_eq!(a, b);
        let c = render_with(&s, &settings, Execution::Parallel);
        assert_eq!(b, c);
    }

    #[test]
    fn noise_depends_on_seed() {
        let s = SphereScene::with_size(32);
        let mut settings = RenderSettings {
            quantize: false,
            noise: Some(PixelNoise {
                sigma: 2.0,
                seed: 1,
            }),
            ..RenderSettings::default()
        };
        let a = render(&s, &settings);
        settings.noise = Some(PixelNoise {
            sigma: 2.0,
            seed: 2,
        });
        let b = render(&s, &settings);
        assert_ne!(a, b);
    }
}
