//! Light panel geometry.
//!
//! A panel is a disc carrying the camera, with `f` wings arranged around it.
//! Each wing holds one light blob on a tiltable joint; spacers before and after
//! the joint set the lever arms `d1` and `d2`. Tilting every wing by the phase
//! angle `g` makes the blob axes converge on the optical axis at the operating
//! distance `d1 / tan g + d2 / sin g`.

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;

/// Joint angle range and step supported by the wing hardware, in degrees.
pub const JOINT_ANGLE_MIN: f64 = 10.0;
pub const JOINT_ANGLE_MAX: f64 = 80.0;
pub const JOINT_ANGLE_STEP: f64 = 10.0;
pub const MIN_WINGS: usize = 3;
pub const MAX_WINGS: usize = 12;

/// LED arrangement inside one light blob.
///
/// 19 LEDs in a hexagonal cluster: one centre LED, an inner ring of 6 and an
/// outer ring of 12. Adjacent rings are tilted apart by `inter_led_angle`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightBlobConfig {
    pub led_count: usize,
    pub led_viewing_angle: f64,
    pub inter_led_angle: f64,
    pub outer_ring_enabled: bool,
}

impl Default for LightBlobConfig {
    fn default() -> Self {
        Self::new(true)
    }
}

impl LightBlobConfig {
    pub const VIEWING_ANGLE_INNER: f64 = 30.0;
    pub const VIEWING_ANGLE_FULL: f64 = 52.5;

    pub fn new(outer_ring_enabled: bool) -> Self {
        Self {
            led_count: 19,
            led_viewing_angle: 15.0,
            inter_led_angle: 11.25,
            outer_ring_enabled,
        }
    }

    /// Full cone angle of the blob in degrees.
    pub fn blob_viewing_angle(&self) -> f64 {
        if self.outer_ring_enabled {
            Self::VIEWING_ANGLE_FULL
        } else {
            Self::VIEWING_ANGLE_INNER
        }
    }

    pub fn active_led_count(&self) -> usize {
        if self.outer_ring_enabled {
            self.led_count
        } else {
            7
        }
    }

    /// Optical axes of the active LEDs in the blob frame (blob axis is +z).
    pub fn led_axes(&self) -> Vec<UnitVector3> {
        let mut axes = vec![UnitVector3::z_axis()];
        let rings: &[(usize, f64)] = if self.outer_ring_enabled {
            &[(6, 1.0), (12, 2.0)]
        } else {
            &[(6, 1.0)]
        };
        for &(count, ring) in rings {
            let tilt = (ring * self.inter_led_angle).to_radians();
            for k in 0..count {
                let az = (k as f64) * std::f64::consts::TAU / count as f64;
                let v = UnitVector3::from_components(tilt.sin(), 0.0, tilt.cos())
                    .expect("tilted axis is non-zero")
                    .rotated_about_z(az);
                axes.push(v);
            }
        }
        axes
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inter_led_angle > 0.0) {
            return Err(Error::Configuration(
                "inter_led_angle must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    /// Wing tilt in degrees.
    pub phase_angle_g: f64,
    pub disc_radius: f64,
    pub spacer1: f64,
    pub joint_radius: f64,
    pub spacer2: f64,
    pub blob_offset: f64,
    pub wing_count: usize,
    /// Wing azimuths in degrees; `None` spaces them uniformly.
    pub azimuth_offsets: Option<Vec<f64>>,
    pub blob: LightBlobConfig,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            phase_angle_g: 30.0,
            disc_radius: 0.05,
            spacer1: 0.02,
            joint_radius: 0.01,
            spacer2: 0.02,
            blob_offset: 0.02,
            wing_count: 6,
            azimuth_offsets: None,
            blob: LightBlobConfig::default(),
        }
    }
}

impl PanelConfig {
    /// Lever arm from the optical axis to the joint.
    pub fn d1(&self) -> f64 {
        self.disc_radius + self.spacer1 + self.joint_radius
    }

    /// Lever arm from the joint to the blob.
    pub fn d2(&self) -> f64 {
        self.joint_radius + self.spacer2 + self.blob_offset
    }

    pub fn azimuths(&self) -> Vec<f64> {
        match &self.azimuth_offsets {
            Some(a) => a.clone(),
            None => uniform_azimuths(self.wing_count),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.phase_angle_g;
        if !(JOINT_ANGLE_MIN..=JOINT_ANGLE_MAX).contains(&g) {
            return Err(Error::Domain(format!(
                "phase angle {g} outside [{JOINT_ANGLE_MIN}, {JOINT_ANGLE_MAX}]"
            )));
        }
        if ((g / JOINT_ANGLE_STEP).round() * JOINT_ANGLE_STEP - g).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "phase angle {g} is not a multiple of {JOINT_ANGLE_STEP}"
            )));
        }
        if !(MIN_WINGS..=MAX_WINGS).contains(&self.wing_count) {
            return Err(Error::Domain(format!(
                "wing count {} outside [{MIN_WINGS}, {MAX_WINGS}]",
                self.wing_count
            )));
        }
        if let Some(a) = &self.azimuth_offsets {
            if a.len() != self.wing_count {
                return Err(Error::Configuration(format!(
                    "{} azimuth offsets for {} wings",
                    a.len(),
                    self.wing_count
                )));
            }
        }
        if !(self.d1() > 0.0) || !(self.d2() > 0.0) {
            return Err(Error::Domain(
                "lever arms d1 and d2 must be positive".into(),
            ));
        }
        self.blob.validate()
    }
}

pub fn uniform_azimuths(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| k as f64 * 360.0 / count as f64)
        .collect()
}

/// Focal distance of the wings for phase angle `g_deg`.
pub fn operating_distance_for(g_deg: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(g_deg > 0.0 && g_deg < 90.0) {
        return Err(Error::Domain(format!(
            "phase angle {g_deg} must lie strictly between 0 and 90 degrees"
        )));
    }
    let g = g_deg.to_radians();
    Ok(d1 / g.tan() + d2 / g.sin())
}

pub fn operating_distance(cfg: &PanelConfig) -> Result<f64> {
    operating_distance_for(cfg.phase_angle_g, cfg.d1(), cfg.d2())
}

/// Direction towards the reference wing's blob (azimuth 0).
pub fn light_direction(g_deg: f64) -> UnitVector3 {
    let (s, c) = g_deg.to_radians().sin_cos();
    UnitVector3::from_components(-s, 0.0, c).expect("sin/cos pair is non-zero")
}

/// Light directions for wings at the given azimuths (degrees).
pub fn ring_directions_at(g_deg: f64, azimuths_deg: &[f64]) -> Vec<UnitVector3> {
    let reference = light_direction(g_deg);
    azimuths_deg
        .iter()
        .map(|a| reference.rotated_about_z(a.to_radians()))
        .collect()
}

/// `f` uniformly spaced lights at phase angle `g_deg`.
pub fn uniform_ring(g_deg: f64, count: usize) -> Vec<UnitVector3> {
    ring_directions_at(g_deg, &uniform_azimuths(count))
}

pub fn ring_directions(cfg: &PanelConfig) -> Vec<UnitVector3> {
    ring_directions_at(cfg.phase_angle_g, &cfg.azimuths())
}

/// Hardware parts available for building a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareCatalogue {
    pub disc_radius: f64,
    pub joint_radius: f64,
    pub blob_offset: f64,
    pub spacer_lengths: Vec<f64>,
    pub joint_angles: Vec<f64>,
    pub wing_count: usize,
}

impl Default for HardwareCatalogue {
    fn default() -> Self {
        Self {
            disc_radius: 0.05,
            joint_radius: 0.01,
            blob_offset: 0.02,
            spacer_lengths: (0..=10).map(|i| i as f64 * 0.01).collect(),
            joint_angles: default_joint_angles(),
            wing_count: 6,
        }
    }
}

pub fn default_joint_angles() -> Vec<f64> {
    let steps = ((JOINT_ANGLE_MAX - JOINT_ANGLE_MIN) / JOINT_ANGLE_STEP).round() as usize;
    (0..=steps)
        .map(|i| JOINT_ANGLE_MIN + i as f64 * JOINT_ANGLE_STEP)
        .collect()
}

/// Best catalogue configuration for a target operating distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSolution {
    pub config: PanelConfig,
    pub operating_distance: f64,
    pub residual: f64,
}

/// Exhaustive search over joint angles and spacer pairs.
///
/// Ties on the residual are broken by the smaller phase angle, then the
/// smaller total spacer length, then the smaller first spacer.
pub fn solve_configuration(target: f64, hw: &HardwareCatalogue) -> Result<PanelSolution> {
    if !(target > 0.0) {
        return Err(Error::Configuration(format!(
            "target distance {target} must be positive"
        )));
    }
    if hw.spacer_lengths.is_empty() {
        return Err(Error::Configuration("spacer catalogue is empty".into()));
    }
    let mut angles: Vec<f64> = hw
        .joint_angles
        .iter()
        .copied()
        .filter(|g| (JOINT_ANGLE_MIN..=JOINT_ANGLE_MAX).contains(g))
        .collect();
    if angles.is_empty() {
        return Err(Error::Configuration(
            "no admissible joint angles in catalogue".into(),
        ));
    }
    angles.sort_by(f64::total_cmp);
    let mut spacers = hw.spacer_lengths.clone();
    spacers.sort_by(f64::total_cmp);

    // (residual, g, total spacer, spacer1, spacer2, distance)
    let mut best: Option<(f64, f64, f64, f64, f64, f64)> = None;
    for &g in &angles {
        for &s1 in &spacers {
            for &s2 in &spacers {
                let d1 = hw.disc_radius + s1 + hw.joint_radius;
                let d2 = hw.joint_radius + s2 + hw.blob_offset;
                if !(d1 > 0.0 && d2 > 0.0) {
                    continue;
                }
                let d = operating_distance_for(g, d1, d2)?;
                let cand = ((d - target).abs(), g, s1 + s2, s1, s2, d);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (cand.0, cand.1, cand.2, cand.3).partial_cmp(&(b.0, b.1, b.2, b.3))
                            == Some(std::cmp::Ordering::Less)
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
    }
    let (residual, g, _, s1, s2, d) =
        best.ok_or_else(|| Error::Configuration("no admissible configuration".into()))?;
    Ok(PanelSolution {
        config: PanelConfig {
            phase_angle_g: g,
            disc_radius: hw.disc_radius,
            spacer1: s1,
            joint_radius: hw.joint_radius,
            spacer2: s2,
            blob_offset: hw.blob_offset,
            wing_count: hw.wing_count,
            azimuth_offsets: None,
            blob: LightBlobConfig::default(),
        },
        operating_distance: d,
        residual,
    })
}
