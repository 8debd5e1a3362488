//! Convention-pinned conversions and algebra on SO(3) representations.
//!
//! Three representations are supported: yaw/pitch/roll Euler angles, unit
//! quaternions (scalar-first `[w, x, y, z]`, Hamilton product), and 3x3
//! rotation matrices. The Euler convention is intrinsic Z-Y-X: yaw about Z,
//! then pitch about the rotated Y, then roll about the twice-rotated X, i.e.
//!
//! ```text
//! q(e) = q_z(yaw) * q_y(pitch) * q_x(roll)
//! ```
//!
//! Angles are always wrapped to the half-open interval `(-pi, pi]`.
//! Quaternions returned by conversions carry the canonical sign `w >= 0`
//! (the double cover is collapsed); [`quat_multiply`] deliberately does not
//! canonicalize, since the sign of a product is meaningful to callers that
//! compose relative rotations.

use thiserror::Error;

/// Tolerance for round-trip guarantees between representations.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Tolerance applied when validating externally supplied rotation matrices.
pub const MATRIX_VALIDATION_TOL: f64 = 1e-6;
/// Maximum deviation from unit norm accepted by [`Quaternion::new`].
pub const QUAT_NORM_TOL: f64 = 1e-3;

/// Pitch is treated as gimbal-locked once |sin(pitch)| exceeds this.
const GIMBAL_LOCK_SIN: f64 = 1.0 - 1e-9;

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("angle is not finite: {0}")]
    NonFiniteAngle(f64),
    #[error("quaternion component is not finite")]
    NonFiniteQuaternion,
    #[error("quaternion norm {norm} deviates from 1 by more than {tol}")]
    NotUnitNorm { norm: f64, tol: f64 },
    #[error("vector norm {0} is too small to normalize")]
    DegenerateNorm(f64),
    #[error("matrix entry is not finite")]
    NonFiniteMatrix,
    #[error("matrix is not orthonormal (max |R'R - I| entry = {0:.3e})")]
    NotOrthonormal(f64),
    #[error("matrix determinant is {0}, expected +1 (improper rotation)")]
    ImproperRotation(f64),
}

/// Map a finite angle into `(-pi, pi]`, preserving it modulo 2*pi.
///
/// The boundary is half-open: both `pi` and `-pi` map to `+pi`.
pub fn wrap_angle(angle: f64) -> Result<f64, RotationError> {
    if !angle.is_finite() {
        return Err(RotationError::NonFiniteAngle(angle));
    }
    Ok(wrap_finite(angle))
}

/// Wrapping core shared with callers that have already checked finiteness.
pub(crate) fn wrap_finite(angle: f64) -> f64 {
    let r = angle.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

/// Yaw/pitch/roll triple in radians, each component in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    yaw: f64,
    pitch: f64,
    roll: f64,
}

impl EulerAngles {
    /// Build from arbitrary finite angles; each component is wrapped.
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self, RotationError> {
        Ok(Self {
            yaw: wrap_angle(yaw)?,
            pitch: wrap_angle(pitch)?,
            roll: wrap_angle(roll)?,
        })
    }

    pub fn zero() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Internal constructor for values already known finite.
    pub(crate) fn wrapped(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            yaw: wrap_finite(yaw),
            pitch: wrap_finite(pitch),
            roll: wrap_finite(roll),
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    /// `[yaw, pitch, roll]`.
    pub fn to_array(&self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }
}

/// Unit quaternion, scalar first. Every value of this type has norm 1
/// within [`ROUND_TRIP_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Quaternion {
    pub fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Build from components expected to be near unit norm (within
    /// [`QUAT_NORM_TOL`], matching the precision of published pose files);
    /// the result is renormalized exactly. The sign is kept as given.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, RotationError> {
        let norm = check_finite_norm(w, x, y, z)?;
        if (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(RotationError::NotUnitNorm {
                norm,
                tol: QUAT_NORM_TOL,
            });
        }
        Ok(Self::scaled(w, x, y, z, norm))
    }

    /// Normalize an arbitrary nonzero 4-vector onto the unit sphere.
    pub fn from_unnormalized(w: f64, x: f64, y: f64, z: f64) -> Result<Self, RotationError> {
        let norm = check_finite_norm(w, x, y, z)?;
        if norm < 1e-12 {
            return Err(RotationError::DegenerateNorm(norm));
        }
        Ok(Self::scaled(w, x, y, z, norm))
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self, RotationError> {
        if !angle.is_finite() {
            return Err(RotationError::NonFiniteAngle(angle));
        }
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !n.is_finite() {
            return Err(RotationError::NonFiniteQuaternion);
        }
        if n < 1e-12 {
            return Err(RotationError::DegenerateNorm(n));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Self {
            w: c,
            x: s * axis[0] / n,
            y: s * axis[1] / n,
            z: s * axis[2] / n,
        })
    }

    fn scaled(w: f64, x: f64, y: f64, z: f64, norm: f64) -> Self {
        Self {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// `[w, x, y, z]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Resolve the double cover: flip the sign so that `w >= 0`.
    pub fn canonicalized(self) -> Self {
        if self.w < 0.0 {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }
}

fn check_finite_norm(w: f64, x: f64, y: f64, z: f64) -> Result<f64, RotationError> {
    if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(RotationError::NonFiniteQuaternion);
    }
    Ok((w * w + x * x + y * y + z * z).sqrt())
}

/// 3x3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix {
    rows: [[f64; 3]; 3],
}

impl RotationMatrix {
    pub fn identity() -> Self {
        Self {
            rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Validate an externally supplied matrix: orthonormal within
    /// [`MATRIX_VALIDATION_TOL`] and determinant +1.
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self, RotationError> {
        for row in &rows {
            for v in row {
                if !v.is_finite() {
                    return Err(RotationError::NonFiniteMatrix);
                }
            }
        }
        let mut max_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                // (R^T R)[i][j] = column_i . column_j
                let dot: f64 = (0..3).map(|k| rows[k][i] * rows[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((dot - target).abs());
            }
        }
        if max_dev > MATRIX_VALIDATION_TOL {
            return Err(RotationError::NotOrthonormal(max_dev));
        }
        let det = det3(&rows);
        if (det - 1.0).abs() > MATRIX_VALIDATION_TOL {
            return Err(RotationError::ImproperRotation(det));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.rows)
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Hamilton product of two unit quaternions, renormalized.
///
/// The sign of the result is NOT canonicalized: relative-rotation
/// computations depend on it.
pub fn quat_multiply(a: &Quaternion, b: &Quaternion) -> Quaternion {
    let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
    let x = a.w * b.x + b.w * a.x + a.y * b.z - a.z * b.y;
    let y = a.w * b.y + b.w * a.y + a.z * b.x - a.x * b.z;
    let z = a.w * b.z + b.w * a.z + a.x * b.y - a.y * b.x;
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    Quaternion::scaled(w, x, y, z, norm)
}

/// Conjugate (= inverse for unit quaternions): negate the vector part.
pub fn quat_conjugate(q: &Quaternion) -> Quaternion {
    Quaternion {
        w: q.w,
        x: -q.x,
        y: -q.y,
        z: -q.z,
    }
}

/// Convert Euler angles to the canonical-sign unit quaternion
/// `q_z(yaw) * q_y(pitch) * q_x(roll)`.
pub fn euler_to_quat(e: &EulerAngles) -> Quaternion {
    let qz = half_angle_quat(e.yaw, 2);
    let qy = half_angle_quat(e.pitch, 1);
    let qx = half_angle_quat(e.roll, 0);
    quat_multiply(&quat_multiply(&qz, &qy), &qx).canonicalized()
}

fn half_angle_quat(angle: f64, axis: usize) -> Quaternion {
    let (s, c) = (angle / 2.0).sin_cos();
    let mut v = [0.0; 3];
    v[axis] = s;
    Quaternion {
        w: c,
        x: v[0],
        y: v[1],
        z: v[2],
    }
}

/// Convert a unit quaternion to Z-Y-X Euler angles.
///
/// Within `|sin(pitch)| > 1 - 1e-9` of the gimbal lock the decomposition is
/// degenerate; the roll is pinned to 0 and the residual rotation folded into
/// the yaw, which keeps the result deterministic and exact at the lock
/// itself.
pub fn quat_to_euler(q: &Quaternion) -> EulerAngles {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let sin_pitch = 2.0 * (w * y - x * z);
    if sin_pitch.abs() > GIMBAL_LOCK_SIN {
        let sign = sin_pitch.signum();
        // With roll pinned to 0, only yaw -/+ roll is observable; recover it
        // from the matrix entries that stay well-conditioned at the lock.
        let r11 = 1.0 - 2.0 * (x * x + z * z);
        let r12 = 2.0 * (y * z - w * x);
        let yaw = (sign * r12).atan2(r11);
        return EulerAngles::wrapped(yaw, sign * std::f64::consts::FRAC_PI_2, 0.0);
    }
    let yaw = (2.0 * (x * y + w * z)).atan2(1.0 - 2.0 * (y * y + z * z));
    let pitch = sin_pitch.clamp(-1.0, 1.0).asin();
    let roll = (2.0 * (y * z + w * x)).atan2(1.0 - 2.0 * (x * x + y * y));
    EulerAngles::wrapped(yaw, pitch, roll)
}

/// Expand a unit quaternion into its rotation matrix.
pub fn quat_to_matrix(q: &Quaternion) -> RotationMatrix {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    RotationMatrix {
        rows: [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ],
    }
}

/// Extract the canonical-sign unit quaternion from a rotation matrix.
///
/// Shepperd-style branch selection: the division is taken against the
/// largest of `trace, R00, R11, R22`, which keeps every branch away from
/// cancellation.
pub fn matrix_to_quat(m: &RotationMatrix) -> Quaternion {
    let r = &m.rows;
    let trace = r[0][0] + r[1][1] + r[2][2];
    let (w, x, y, z);
    if trace >= r[0][0] && trace >= r[1][1] && trace >= r[2][2] {
        let s = (1.0 + trace).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[2][1] - r[1][2]) / s;
        y = (r[0][2] - r[2][0]) / s;
        z = (r[1][0] - r[0][1]) / s;
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        w = (r[2][1] - r[1][2]) / s;
        x = 0.25 * s;
        y = (r[0][1] + r[1][0]) / s;
        z = (r[0][2] + r[2][0]) / s;
    } else if r[1][1] >= r[2][2] {
        let s = (1.0 - r[0][0] + r[1][1] - r[2][2]).sqrt() * 2.0;
        w = (r[0][2] - r[2][0]) / s;
        x = (r[0][1] + r[1][0]) / s;
        y = 0.25 * s;
        z = (r[1][2] + r[2][1]) / s;
    } else {
        let s = (1.0 - r[0][0] - r[1][1] + r[2][2]).sqrt() * 2.0;
        w = (r[1][0] - r[0][1]) / s;
        x = (r[0][2] + r[2][0]) / s;
        y = (r[1][2] + r[2][1]) / s;
        z = 0.25 * s;
    }
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    Quaternion::scaled(w, x, y, z, norm).canonicalized()
}
