//! Directions, rigid transforms and the light calibration chain.
//!
//! Frames follow the image convention used throughout the crate: x along image
//! columns, y along image rows (downwards), z along the optical axis pointing
//! from the scene back towards the camera. A light direction is the unit
//! vector from a surface point towards the source, so a light on the optical
//! axis is `(0, 0, 1)`.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

/// Tolerance on the Euclidean norm of a [`UnitVector3`].
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Orthonormality defect above which rotations are re-projected.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// A direction in 3D space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    /// Accepts components that are already unit length within [`UNIT_TOLERANCE`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit { x, y, z, norm });
        }
        Ok(Self(v))
    }

    /// Scales an arbitrary non-zero vector to unit length.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / norm))
    }

    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalize(Vector3::new(x, y, z))
    }

    pub const fn z_axis() -> Self {
        Self(Vector3::new(0.0, 0.0, 1.0))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0.dot(&other.0)
    }

    /// Angle to `other` in radians, robust to rounding past ±1.
    pub fn angle_to(&self, other: &UnitVector3) -> f64 {
        self.0.cross(&other.0).norm().atan2(self.dot(other))
    }

    /// Surface gradient `(p, q) = (-x/z, -y/z)`; `None` when `z <= 0`.
    pub fn gradient(&self) -> Option<(f64, f64)> {
        (self.0.z > 0.0).then(|| (-self.0.x / self.0.z, -self.0.y / self.0.z))
    }

    /// Inverse of [`UnitVector3::gradient`].
    pub fn from_gradient(p: f64, q: f64) -> Result<Self> {
        Self::from_components(-p, -q, 1.0)
    }

    /// Rotates about the optical axis by `azimuth` radians.
    pub fn rotated_about_z(&self, azimuth: f64) -> Self {
        let (s, c) = azimuth.sin_cos();
        Self(Vector3::new(
            c * self.0.x - s * self.0.y,
            s * self.0.x + c * self.0.y,
            self.0.z,
        ))
    }
}

/// A rigid-body pose: `p' = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// Largest absolute entry of `R Rᵀ - I`.
pub fn orthonormality_defect(r: &Matrix3<f64>) -> f64 {
    (r * r.transpose() - Matrix3::identity()).amax()
}

/// Nearest rotation matrix in the Frobenius sense.
fn nearest_rotation(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

impl Transform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let defect = orthonormality_defect(&rotation);
        let det = rotation.determinant();
        if !(defect <= ORTHONORMAL_TOLERANCE) || (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidRotation { defect, det });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Rotation by `angle` radians about `axis`, followed by `translation`.
    pub fn from_axis_angle(axis: &UnitVector3, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = *nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_unchecked(*axis.as_vector()),
            angle,
        )
        .matrix();
        Self {
            rotation,
            translation,
        }
    }

    /// Builds from 12 numbers: row-major rotation followed by translation.
    pub fn from_row_major(values: &[f64; 12]) -> Result<Self> {
        let r = Matrix3::from_row_slice(&values[..9]);
        Self::new(r, Vector3::new(values[9], values[10], values[11]))
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        let mut rotation = self.rotation * other.rotation;
        if orthonormality_defect(&rotation) > ORTHONORMAL_TOLERANCE {
            rotation = nearest_rotation(&rotation);
        }
        Transform {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_direction(&self, d: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.rotation * d.as_vector())
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Largest absolute deviation from the identity transform.
    pub fn distance_from_identity(&self) -> f64 {
        (self.rotation - Matrix3::identity())
            .amax()
            .max(self.translation.amax())
    }
}

impl Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Transform> for &'a Transform {
    type Output = Transform;

    fn mul(self, rhs: &Transform) -> Transform {
        self.compose(rhs)
    }
}

/// Poses from a motion-capture / calibration session.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    /// Light panel in the world (tracker) frame.
    pub panel_in_world: Transform,
    /// Camera in the panel frame.
    pub camera_in_panel: Transform,
    /// Each light source frame in the world frame.
    pub lights_in_world: Vec<Transform>,
}

impl TransformChain {
    pub fn new(
        panel_in_world: Transform,
        camera_in_panel: Transform,
        lights_in_world: Vec<Transform>,
    ) -> Result<Self> {
        if lights_in_world.is_empty() {
            return Err(Error::Configuration(
                "transform chain needs at least one light".into(),
            ));
        }
        Ok(Self {
            panel_in_world,
            camera_in_panel,
            lights_in_world,
        })
    }

    pub fn light_count(&self) -> usize {
        self.lights_in_world.len()
    }

    /// Pose of light `index` in the camera frame: `(H_OP · H_PC)⁻¹ · H_OLᵢ`.
    pub fn light_in_camera(&self, index: usize) -> Result<Transform> {
        let light = self
            .lights_in_world
            .get(index)
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.lights_in_world.len(),
            })?;
        let camera_in_world = self.panel_in_world.compose(&self.camera_in_panel);
        Ok(camera_in_world.inverse().compose(light))
    }

    /// Light direction in the camera frame, taken as the light frame's +z axis.
    pub fn light_direction_in_camera(&self, index: usize) -> Result<UnitVector3> {
        let t = self.light_in_camera(index)?;
        Ok(t.transform_direction(&UnitVector3::z_axis()))
    }

    pub fn light_directions_in_camera(&self) -> Result<Vec<UnitVector3>> {
        (0..self.light_count())
            .map(|i| self.light_direction_in_camera(i))
            .collect()
    }
}
