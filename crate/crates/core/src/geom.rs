//! Three-dimensional geometry for mirror control.
//!
//! A mirror element at `p` lit along direction `s` reaches a receiver at `r`
//! when its normal bisects the outgoing direction `(r - p)/|r - p|` and the
//! reversed incident direction `-s/|s|`. The rotation that carries the rest
//! normal onto that bisector is built with the Rodrigues formula.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Tolerance used when a caller hands us a vector that claims to be unit length.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Cross products shorter than this are treated as parallel normals.
pub const PARALLEL_TOLERANCE: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("normals are parallel; no unique rotation axis")]
    ParallelNormals,
    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("non-finite vector component")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A direction with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec3 = UnitVec3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec3 = UnitVec3(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`. Fails on zero-length or non-finite input.
    pub fn normalize(v: Vec3) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n = v.norm();
        if n < PARALLEL_TOLERANCE {
            return Err(GeomError::DegenerateGeometry("zero-length direction"));
        }
        Ok(UnitVec3(v * (1.0 / n)))
    }

    /// Accepts `v` only if it is already unit length within [`UNIT_TOLERANCE`];
    /// the stored value is renormalized.
    pub fn try_from_unit(v: Vec3) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeomError::NotUnit { norm: n });
        }
        Ok(UnitVec3(v * (1.0 / n)))
    }

    pub fn get(self) -> Vec3 {
        self.0
    }

    pub fn dot(self, other: UnitVec3) -> f64 {
        self.0.dot(other.0)
    }
}

impl From<UnitVec3> for Vec3 {
    fn from(u: UnitVec3) -> Vec3 {
        u.0
    }
}

/// Proper orthonormal 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix([[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> RotationMatrix {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = m[j][i];
            }
        }
        RotationMatrix(t)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `RᵀR - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - id).abs());
            }
        }
        worst
    }
}

/// Mirror `v` about the plane with unit normal `n`: `v - 2(v·n)n`.
pub fn reflect(v: Vec3, n: UnitVec3) -> Vec3 {
    let n = n.get();
    v - n * (2.0 * v.dot(n))
}

/// Angle between two directions, in `[0, π]`.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    // atan2 keeps precision near 0 and π where acos does not.
    a.cross(b).norm().atan2(a.dot(b))
}

/// Normal a mirror centred at `element_center` needs so that light travelling
/// along `incident_dir` is reflected toward `target`.
pub fn deflected_normal(
    element_center: Vec3,
    incident_dir: Vec3,
    target: Vec3,
) -> Result<UnitVec3, GeomError> {
    if !(element_center.is_finite() && incident_dir.is_finite() && target.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let l2 = incident_dir.norm();
    if l2 < PARALLEL_TOLERANCE {
        return Err(GeomError::DegenerateGeometry("zero incident direction"));
    }
    let to_target = target - element_center;
    let l1 = to_target.norm();
    if l1 < PARALLEL_TOLERANCE {
        return Err(GeomError::DegenerateGeometry("target coincides with element"));
    }
    let bisector = to_target * (0.5 / l1) - incident_dir * (0.5 / l2);
    if bisector.norm() < PARALLEL_TOLERANCE {
        return Err(GeomError::DegenerateGeometry(
            "target lies straight ahead along the incident direction",
        ));
    }
    UnitVec3::normalize(bisector)
}

/// Deflection angle `arccos|h·h'|`, in `[0, π/2]`.
///
/// The absolute value drops the rotation sense; this is the quantity used in
/// the cosine power-loss model, not the angle used to build the rotation.
pub fn deflection_angle(initial_normal: UnitVec3, new_normal: UnitVec3) -> f64 {
    initial_normal.dot(new_normal).abs().min(1.0).acos()
}

/// Unit rotation axis `h × h'`.
pub fn rotation_axis(initial_normal: UnitVec3, new_normal: UnitVec3) -> Result<UnitVec3, GeomError> {
    let c = initial_normal.get().cross(new_normal.get());
    if c.norm() < PARALLEL_TOLERANCE {
        return Err(GeomError::ParallelNormals);
    }
    UnitVec3::normalize(c)
}

/// Rodrigues rotation `E cosθ + (1 - cosθ) l lᵀ + sinθ [l]ₓ`.
pub fn rotation_matrix(axis: UnitVec3, angle: f64) -> RotationMatrix {
    let Vec3 { x, y, z } = axis.get();
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    RotationMatrix([
        [c + t * x * x, t * x * y - s * z, t * x * z + s * y],
        [t * y * x + s * z, c + t * y * y, t * y * z - s * x],
        [t * z * x - s * y, t * z * y + s * x, c + t * z * z],
    ])
}

/// Rotation carrying `from` onto `to`.
///
/// Uses the signed angle `arccos(h·h')` so the result is exact even when the
/// normals are more than 90° apart. Parallel normals give the identity;
/// antiparallel normals get a half turn about an arbitrary perpendicular.
pub fn rotation_between(from: UnitVec3, to: UnitVec3) -> RotationMatrix {
    match rotation_axis(from, to) {
        Ok(axis) => rotation_matrix(axis, angle_between(from.get(), to.get())),
        Err(_) if from.dot(to) > 0.0 => RotationMatrix::IDENTITY,
        Err(_) => {
            let f = from.get();
            let helper = if f.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
            let axis = UnitVec3::normalize(f.cross(helper)).expect("helper is not parallel");
            rotation_matrix(axis, std::f64::consts::PI)
        }
    }
}
