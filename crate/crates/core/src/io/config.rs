//! Flat `section.key = value` project configuration.
//!
//! Lines starting with `#` are comments. Lists are whitespace- or
//! comma-separated numbers. Poses are 12 numbers: a row-major rotation
//! followed by the translation. Every key is optional; see
//! [`ProjectConfig::default`] for the defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Transform, TransformChain};
use crate::integrate::IntegrationSettings;
use crate::panel::{default_joint_angles, HardwareCatalogue, LightBlobConfig, PanelConfig};
use crate::render::{PixelNoise, RenderSettings, SphereScene, FULL_SCALE};
use crate::solver::Thresholds;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub light_intensity: f64,
    pub ambient_level: f64,
    pub quantize: bool,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            light_intensity: FULL_SCALE,
            ambient_level: 0.0,
            quantize: true,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn settings(&self) -> RenderSettings {
        RenderSettings {
            light_intensity: self.light_intensity,
            ambient_level: self.ambient_level,
            quantize: self.quantize,
            noise: (self.noise_sigma > 0.0).then_some(PixelNoise {
                sigma: self.noise_sigma,
                seed: self.seed,
            }),
            ..RenderSettings::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub thresholds: Thresholds,
    pub subtract_ambient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            subtract_ambient: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub z_floor: f64,
    pub tolerance: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            z_floor: crate::integrate::DEFAULT_Z_FLOOR,
            tolerance: IntegrationSettings::default().tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub phase_start: f64,
    pub phase_end: f64,
    pub phase_step: f64,
    pub ambient_phase_angle: f64,
    /// Ambient levels in percent of full scale.
    pub ambient_percent: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            phase_start: 1.0,
            phase_end: 89.0,
            phase_step: 1.0,
            ambient_phase_angle: 30.0,
            ambient_percent: (0..=16).map(|k| 5.0 * k as f64).collect(),
        }
    }
}

impl SweepConfig {
    pub fn phase_grid(&self) -> Vec<f64> {
        let n = ((self.phase_end - self.phase_start) / self.phase_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.phase_start + k as f64 * self.phase_step)
            .collect()
    }

    pub fn ambient_levels(&self) -> Vec<f64> {
        self.ambient_percent
            .iter()
            .map(|p| p / 100.0 * FULL_SCALE)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub panel: PanelConfig,
    pub catalogue_spacers: Vec<f64>,
    pub catalogue_joint_angles: Vec<f64>,
    pub scene: SphereScene,
    pub render: RenderConfig,
    pub solver: SolverConfig,
    pub integration: IntegrationConfig,
    pub sweep: SweepConfig,
    pub calibration: Option<TransformChain>,
    pub output_dir: PathBuf,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            panel: PanelConfig::default(),
            catalogue_spacers: HardwareCatalogue::default().spacer_lengths,
            catalogue_joint_angles: default_joint_angles(),
            scene: SphereScene::default(),
            render: RenderConfig::default(),
            solver: SolverConfig::default(),
            integration: IntegrationConfig::default(),
            sweep: SweepConfig::default(),
            calibration: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ProjectConfig {
    pub fn catalogue(&self) -> HardwareCatalogue {
        HardwareCatalogue {
            disc_radius: self.panel.disc_radius,
            joint_radius: self.panel.joint_radius,
            blob_offset: self.panel.blob_offset,
            spacer_lengths: self.catalogue_spacers.clone(),
            joint_angles: self.catalogue_joint_angles.clone(),
            wing_count: self.panel.wing_count,
        }
    }
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigKey {
        key: key.to_string(),
        message: message.into(),
    }
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                path: origin.to_string(),
                message: format!("line {}: expected `key = value`", no + 1),
            })?;
            let key = k.trim().to_string();
            if !key.contains('.') {
                return Err(Error::Config {
                    path: origin.to_string(),
                    message: format!("line {}: key `{key}` has no section", no + 1),
                });
            }
            let value = v.split(" #").next().unwrap_or("").trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(key_err(&key, "duplicate key"));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| key_err(key, format!("`{v}` is not a number"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| key_err(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| key_err(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(key_err(key, format!("`{v}` is not a boolean"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| key_err(key, format!("`{s}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn pose(&mut self, key: &str) -> Result<Option<Transform>> {
        let Some(vals) = self.list(key)? else {
            return Ok(None);
        };
        let arr: [f64; 12] = vals
            .try_into()
            .map_err(|v: Vec<f64>| key_err(key, format!("expected 12 numbers, got {}", v.len())))?;
        Transform::from_row_major(&arr)
            .map(Some)
            .map_err(|e| key_err(key, e.to_string()))
    }
}

fn check(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(key_err(key, what.to_string()))
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<ProjectConfig> {
    let mut e = Entries::parse(text, origin)?;
    let d = ProjectConfig::default();

    let panel = PanelConfig {
        phase_angle_g: e.f64("panel.phase_angle_g", d.panel.phase_angle_g)?,
        disc_radius: e.f64("panel.disc_radius", d.panel.disc_radius)?,
        spacer1: e.f64("panel.spacer1", d.panel.spacer1)?,
        joint_radius: e.f64("panel.joint_radius", d.panel.joint_radius)?,
        spacer2: e.f64("panel.spacer2", d.panel.spacer2)?,
        blob_offset: e.f64("panel.blob_offset", d.panel.blob_offset)?,
        wing_count: e.usize("panel.wing_count", d.panel.wing_count)?,
        azimuth_offsets: e.list("panel.azimuth_offsets")?,
        blob: LightBlobConfig::new(e.bool("panel.outer_ring", d.panel.blob.outer_ring_enabled)?),
    };
    let g = panel.phase_angle_g;
    check(
        "panel.phase_angle_g",
        (10.0..=80.0).contains(&g),
        "must lie in [10, 80] degrees",
    )?;
    check(
        "panel.phase_angle_g",
        ((g / 10.0).round() * 10.0 - g).abs() < 1e-9,
        "must be a multiple of 10 degrees",
    )?;
    check(
        "panel.wing_count",
        (3..=12).contains(&panel.wing_count),
        "must lie in [3, 12]",
    )?;
    if let Some(a) = &panel.azimuth_offsets {
        check(
            "panel.azimuth_offsets",
            a.len() == panel.wing_count,
            "needs one entry per wing",
        )?;
    }
    check(
        "panel.disc_radius",
        panel.d1() > 0.0,
        "lever arm d1 must be positive",
    )?;
    check(
        "panel.blob_offset",
        panel.d2() > 0.0,
        "lever arm d2 must be positive",
    )?;

    let catalogue_spacers = e.list("catalogue.spacers")?.unwrap_or(d.catalogue_spacers);
    check(
        "catalogue.spacers",
        catalogue_spacers.iter().all(|s| *s >= 0.0),
        "spacer lengths must be non-negative",
    )?;
    let catalogue_joint_angles = e
        .list("catalogue.joint_angles")?
        .unwrap_or(d.catalogue_joint_angles);
    check(
        "catalogue.joint_angles",
        catalogue_joint_angles
            .iter()
            .all(|g| (10.0..=80.0).contains(g)),
        "joint angles must lie in [10, 80]",
    )?;

    let scene = SphereScene {
        radius: e.f64("scene.radius", d.scene.radius)?,
        albedo: e.f64("scene.albedo", d.scene.albedo)?,
        image_size: e.usize("scene.image_size", d.scene.image_size)?,
        background_albedo: e.f64("scene.background_albedo", d.scene.background_albedo)?,
    };
    check("scene.radius", scene.radius > 0.0, "must be positive")?;
    check(
        "scene.albedo",
        scene.albedo > 0.0 && scene.albedo <= 1.0,
        "must lie in (0, 1]",
    )?;
    check(
        "scene.image_size",
        scene.image_size >= 4,
        "must be at least 4",
    )?;
    check(
        "scene.background_albedo",
        scene.background_albedo >= 0.0,
        "must be non-negative",
    )?;

    let render = RenderConfig {
        light_intensity: e.f64("render.light_intensity", d.render.light_intensity)?,
        ambient_level: e.f64("render.ambient_level", d.render.ambient_level)?,
        quantize: e.bool("render.quantize", d.render.quantize)?,
        noise_sigma: e.f64("render.noise_sigma", d.render.noise_sigma)?,
        seed: e.u64("render.seed", d.render.seed)?,
    };
    check(
        "render.light_intensity",
        render.light_intensity > 0.0 && render.light_intensity.is_finite(),
        "must be positive",
    )?;
    check(
        "render.ambient_level",
        (0.0..=255.0).contains(&render.ambient_level),
        "must lie in [0, 255]",
    )?;
    check(
        "render.noise_sigma",
        render.noise_sigma >= 0.0,
        "must be non-negative",
    )?;

    let low = e.f64("solver.low_threshold", d.solver.thresholds.low)?;
    let high = e.f64("solver.high_threshold", d.solver.thresholds.high)?;
    check(
        "solver.low_threshold",
        low >= 0.0 && low < high,
        "must satisfy 0 <= low < high",
    )?;
    check(
        "solver.high_threshold",
        high <= 255.0,
        "must not exceed 255",
    )?;
    let solver = SolverConfig {
        thresholds: Thresholds { low, high },
        subtract_ambient: e.bool("solver.subtract_ambient", d.solver.subtract_ambient)?,
    };

    let integration = IntegrationConfig {
        z_floor: e.f64("integration.z_floor", d.integration.z_floor)?,
        tolerance: e.f64("integration.tolerance", d.integration.tolerance)?,
    };
    check(
        "integration.z_floor",
        (0.0..1.0).contains(&integration.z_floor),
        "must lie in [0, 1)",
    )?;
    check(
        "integration.tolerance",
        integration.tolerance > 0.0,
        "must be positive",
    )?;

    let sweep = SweepConfig {
        phase_start: e.f64("sweep.phase_start", d.sweep.phase_start)?,
        phase_end: e.f64("sweep.phase_end", d.sweep.phase_end)?,
        phase_step: e.f64("sweep.phase_step", d.sweep.phase_step)?,
        ambient_phase_angle: e.f64("sweep.ambient_phase_angle", d.sweep.ambient_phase_angle)?,
        ambient_percent: e
            .list("sweep.ambient_percent")?
            .unwrap_or(d.sweep.ambient_percent),
    };
    check(
        "sweep.phase_start",
        sweep.phase_start > 0.0 && sweep.phase_start <= sweep.phase_end,
        "must be positive and not exceed sweep.phase_end",
    )?;
    check(
        "sweep.phase_end",
        sweep.phase_end < 90.0,
        "must be below 90",
    )?;
    check(
        "sweep.phase_step",
        sweep.phase_step > 0.0,
        "must be positive",
    )?;
    check(
        "sweep.ambient_phase_angle",
        sweep.ambient_phase_angle > 0.0 && sweep.ambient_phase_angle < 90.0,
        "must lie in (0, 90)",
    )?;
    check(
        "sweep.ambient_percent",
        sweep
            .ambient_percent
            .iter()
            .all(|p| (0.0..=100.0).contains(p)),
        "levels must lie in [0, 100]",
    )?;

    let panel_pose = e.pose("calib.panel_in_world")?;
    let camera_pose = e.pose("calib.camera_in_panel")?;
    let mut lights = Vec::new();
    let light_keys: Vec<String> = e
        .map
        .keys()
        .filter(|k| k.starts_with("calib.light_in_world."))
        .cloned()
        .collect();
    let mut indexed = Vec::new();
    for key in light_keys {
        let idx: usize = key["calib.light_in_world.".len()..]
            .parse()
            .map_err(|_| key_err(&key, "light index must be an integer"))?;
        indexed.push((idx, key));
    }
    indexed.sort();
    for (expected, (idx, key)) in indexed.iter().enumerate() {
        check(
            key,
            *idx == expected,
            "light indices must run 0, 1, 2, ... without gaps",
        )?;
        lights.push(e.pose(key)?.expect("key present"));
    }
    let calibration = match (panel_pose, camera_pose, lights.is_empty()) {
        (None, None, true) => None,
        (Some(p), Some(c), false) => Some(TransformChain::new(p, c, lights)?),
        _ => {
            return Err(key_err(
                "calib",
                "calib.panel_in_world, calib.camera_in_panel and calib.light_in_world.N must be given together",
            ))
        }
    };

    let output_dir = e
        .take("output.dir")
        .map(PathBuf::from)
        .unwrap_or(d.output_dir);

    if let Some(key) = e.map.keys().next() {
        return Err(key_err(key, "unknown key"));
    }

    Ok(ProjectConfig {
        panel,
        catalogue_spacers,
        catalogue_joint_angles,
        scene,
        render,
        solver,
        integration,
        sweep,
        calibration,
        output_dir,
    })
}

pub fn load_config(path: &Path) -> Result<ProjectConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, &path.display().to_string())
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serializes every field; `parse_config` of the output reproduces `cfg`.
pub fn format_config(cfg: &ProjectConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        writeln!(s, "{k} = {v}").expect("writing to a string");
    };
    let p = &cfg.panel;
    kv("panel.phase_angle_g", p.phase_angle_g.to_string());
    kv("panel.disc_radius", p.disc_radius.to_string());
    kv("panel.spacer1", p.spacer1.to_string());
    kv("panel.joint_radius", p.joint_radius.to_string());
    kv("panel.spacer2", p.spacer2.to_string());
    kv("panel.blob_offset", p.blob_offset.to_string());
    kv("panel.wing_count", p.wing_count.to_string());
    if let Some(a) = &p.azimuth_offsets {
        kv("panel.azimuth_offsets", join(a));
    }
    kv("panel.outer_ring", p.blob.outer_ring_enabled.to_string());
    kv("catalogue.spacers", join(&cfg.catalogue_spacers));
    kv("catalogue.joint_angles", join(&cfg.catalogue_joint_angles));
    kv("scene.radius", cfg.scene.radius.to_string());
    kv("scene.albedo", cfg.scene.albedo.to_string());
    kv("scene.image_size", cfg.scene.image_size.to_string());
    kv(
        "scene.background_albedo",
        cfg.scene.background_albedo.to_string(),
    );
    kv(
        "render.light_intensity",
        cfg.render.light_intensity.to_string(),
    );
    kv("render.ambient_level", cfg.render.ambient_level.to_string());
    kv("render.quantize", cfg.render.quantize.to_string());
    kv("render.noise_sigma", cfg.render.noise_sigma.to_string());
    kv("render.seed", cfg.render.seed.to_string());
    kv(
        "solver.low_threshold",
        cfg.solver.thresholds.low.to_string(),
    );
    kv(
        "solver.high_threshold",
        cfg.solver.thresholds.high.to_string(),
    );
    kv(
        "solver.subtract_ambient",
        cfg.solver.subtract_ambient.to_string(),
    );
    kv("integration.z_floor", cfg.integration.z_floor.to_string());
    kv(
        "integration.tolerance",
        cfg.integration.tolerance.to_string(),
    );
    kv("sweep.phase_start", cfg.sweep.phase_start.to_string());
    kv("sweep.phase_end", cfg.sweep.phase_end.to_string());
    kv("sweep.phase_step", cfg.sweep.phase_step.to_string());
    kv(
        "sweep.ambient_phase_angle",
        cfg.sweep.ambient_phase_angle.to_string(),
    );
    kv("sweep.ambient_percent", join(&cfg.sweep.ambient_percent));
    if let Some(c) = &cfg.calibration {
        kv(
            "calib.panel_in_world",
            join(&c.panel_in_world.to_row_major()),
        );
        kv(
            "calib.camera_in_panel",
            join(&c.camera_in_panel.to_row_major()),
        );
        for (i, l) in c.lights_in_world.iter().enumerate() {
            kv(
                &format!("calib.light_in_world.{i}"),
                join(&l.to_row_major()),
            );
        }
    }
    kv("output.dir", cfg.output_dir.display().to_string());
    s
}

pub fn save_config(cfg: &ProjectConfig, path: &Path) -> Result<()> {
    std::fs::write(path, format_config(cfg))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector3;
    use nalgebra::Vector3;

    fn key_of(r: Result<ProjectConfig>) -> String {
        match r {
            Err(Error::ConfigKey { key, .. }) => key,
            other => panic!("expected a key error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(parse_config("", "t").unwrap(), ProjectConfig::default());
        assert_eq!(
            parse_config("# only a comment\n\n", "t").unwrap(),
            ProjectConfig::default()
        );
    }

    #[test]
    fn range_errors_name_the_key() {
        assert_eq!(
            key_of(parse_config("panel.phase_angle_g = 95", "t")),
            "panel.phase_angle_g"
        );
        assert_eq!(
            key_of(parse_config("panel.phase_angle_g = 35", "t")),
            "panel.phase_angle_g"
        );
        assert_eq!(
            key_of(parse_config("scene.albedo = 0", "t")),
            "scene.albedo"
        );
        assert_eq!(
            key_of(parse_config("panel.wing_count = 13", "t")),
            "panel.wing_count"
        );
        assert_eq!(
            key_of(parse_config("render.quantize = maybe", "t")),
            "render.quantize"
        );
        assert_eq!(
            key_of(parse_config("solver.low_threshold = 251", "t")),
            "solver.low_threshold"
        );
        assert_eq!(
            key_of(parse_config("panel.colour = red", "t")),
            "panel.colour"
        );
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse_config("nonsense", "t"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            parse_config("nosection = 1", "t"),
            Err(Error::Config { .. })
        ));
        assert_eq!(
            key_of(parse_config("scene.albedo = 0.5\nscene.albedo = 0.6", "t")),
            "scene.albedo"
        );
    }

    #[test]
    fn save_then_load_is_identity() {
        let axis = UnitVector3::from_components(0.3, -0.4, 1.0).unwrap();
        let t = Transform::from_axis_angle(&axis, 0.9, Vector3::new(0.1, 0.2, -0.3));
        let cfg = ProjectConfig {
            panel: PanelConfig {
                phase_angle_g: 40.0,
                wing_count: 4,
                azimuth_offsets: Some(vec![0.0, 95.5, 180.0, 270.25]),
                ..PanelConfig::default()
            },
            scene: SphereScene {
                albedo: 0.3,
                image_size: 64,
                ..SphereScene::default()
            },
            render: RenderConfig {
                noise_sigma: 0.7,
                seed: 99,
                ambient_level: 12.75,
                ..RenderConfig::default()
            },
            sweep: SweepConfig {
                ambient_percent: vec![0.0, 7.5, 33.3],
                ..SweepConfig::default()
            },
            calibration: Some(
                TransformChain::new(t, t.inverse(), vec![t, Transform::identity()]).unwrap(),
            ),
            output_dir: PathBuf::from("results/run 1"),
            ..ProjectConfig::default()
        };
        let text = format_config(&cfg);
        assert_eq!(parse_config(&text, "t").unwrap(), cfg);
    }

    #[test]
    fn calibration_requires_all_parts() {
        let id = "1 0 0 0 1 0 0 0 1 0 0 0";
        assert_eq!(
            key_of(parse_config(&format!("calib.panel_in_world = {id}"), "t")),
            "calib"
        );
        let cfg = parse_config(
            &format!(
                "calib.panel_in_world = {id}\ncalib.camera_in_panel = {id}\ncalib.light_in_world.0 = {id}"
            ),
            "t",
        )
        .unwrap();
        assert_eq!(cfg.calibration.unwrap().light_count(), 1);
        assert_eq!(
            key_of(parse_config("calib.panel_in_world = 1 2 3", "t")),
            "calib.panel_in_world"
        );
    }

    #[test]
    fn sweep_grids() {
        let s = SweepConfig::default();
        assert_eq!(s.phase_grid().len(), 89);
        assert_eq!(s.phase_grid()[88], 89.0);
        assert_eq!(s.ambient_levels().len(), 17);
        assert_eq!(s.ambient_levels()[4], 51.0);
    }
}
