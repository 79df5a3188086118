use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{UnitQuat, Vec3};

/// Rigid-body transform `x ↦ R·x + t`.
///
/// Read `a_from_b` style: a transform stored as "pose of frame B in frame A"
/// maps B coordinates into A coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: UnitQuat,
    pub translation: Vec3,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform =
        RigidTransform { rotation: UnitQuat::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: UnitQuat, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self { rotation: UnitQuat::IDENTITY, translation }
    }

    pub fn from_rotation(rotation: UnitQuat) -> Self {
        Self { rotation, translation: Vec3::ZERO }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.rotate(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = self.rotation.inverse();
        RigidTransform { rotation: r, translation: -r.rotate(self.translation) }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation.to_array().iter().all(|c| c.is_finite())
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            -PI..PI,
            (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
        )
            .prop_filter_map("axis", |(a, ang, t)| {
                let axis = Vec3::new(a.0, a.1, a.2).normalized()?;
                Some(RigidTransform::new(
                    UnitQuat::from_axis_angle(axis, ang).ok()?,
                    Vec3::new(t.0, t.1, t.2),
                ))
            })
    }

    proptest! {
        #[test]
        fn inverse_cancels(t in arb_transform(), p in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)) {
            let id = t.compose(&t.inverse());
            prop_assert!(id.translation.norm() < 1e-9);
            prop_assert!(id.rotation.angle() < 1e-9);
            let p = Vec3::new(p.0, p.1, p.2);
            prop_assert!(t.inverse().transform_point(t.transform_point(p)).distance(p) < 1e-9);
        }

        #[test]
        fn composition_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!(l.translation.distance(r.translation) < 1e-9);
            prop_assert!(l.rotation.angle_to(r.rotation) < 1e-9);
        }
    }
}
