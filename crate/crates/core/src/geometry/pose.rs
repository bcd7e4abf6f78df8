use nalgebra::{Isometry3, Point3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rigid transform: rotation followed by translation (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(translation, UnitQuaternion::identity())
    }

    /// Rotation about world +z by `yaw` radians, then translation.
    pub fn from_yaw(translation: Vector3<f64>, yaw: f64) -> Self {
        Self::new(
            translation,
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }

    /// Heading of the rotated +x axis projected onto the floor plane.
    pub fn yaw(&self) -> f64 {
        let x = self.rotation * Vector3::x();
        x.y.atan2(x.x)
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn quat_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }
}

/// Builds a unit quaternion from `[w, x, y, z]`, rejecting norms further than
/// `tol` from one.
pub fn quat_from_wxyz(q: [f64; 4], tol: f64) -> Option<UnitQuaternion<f64>> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let n = raw.norm();
    if !n.is_finite() || (n - 1.0).abs() > tol {
        return None;
    }
    // already-unit input is kept bit-exact so saved files round-trip
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        Some(Unit::new_unchecked(raw))
    } else {
        Some(Unit::new_normalize(raw))
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    t: [f64; 3],
    q: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            t: [self.translation.x, self.translation.y, self.translation.z],
            q: self.quat_wxyz(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PoseRepr::deserialize(d)?;
        let rotation = quat_from_wxyz(r.q, 1e-6)
            .ok_or_else(|| serde::de::Error::custom("quaternion not normalized within 1e-6"))?;
        Ok(Pose::new(Vector3::from(r.t), rotation))
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-5.0f64..5.0),
            prop::array::uniform3(-3.2f64..3.2),
        )
            .prop_map(|(t, r)| {
                Pose::new(
                    Vector3::from(t),
                    UnitQuaternion::from_euler_angles(r[0], r[1], r[2]),
                )
            })
    }

    proptest! {
        #[test]
        fn group_laws(a in arb_pose(), b in arb_pose(), c in arb_pose(), p in prop::array::uniform3(-4.0f64..4.0)) {
            let p = Point3::from(Vector3::from(p));
            let lhs = a.compose(&b).compose(&c).transform_point(&p);
            let rhs = a.compose(&b.compose(&c)).transform_point(&p);
            prop_assert!((lhs - rhs).norm() < 1e-9);
            let id = a.compose(&a.inverse()).transform_point(&p);
            prop_assert!((id - p).norm() < 1e-9);
            prop_assert!((a.rotation.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = Pose::from_yaw(Vector3::new(1.0, 2.0, 0.5), 0.7);
        let s = serde_json::to_string(&p).unwrap();
        let back: Pose = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn rejects_unnormalized_quaternion() {
        let s = r#"{"t":[0,0,0],"q":[1.0,0.1,0,0]}"#;
        assert!(serde_json::from_str::<Pose>(s).is_err());
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-12);
    }
}
