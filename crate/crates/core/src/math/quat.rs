use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{MathError, Vec3};

/// Unit quaternion (Hamilton convention, scalar first) representing a rotation.
///
/// Every constructor and operation returns a quaternion with `w >= 0`, so two
/// quaternions for the same rotation compare equal component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuat {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

const AXIS_TOLERANCE: f64 = 1e-6;

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes `(w, x, y, z)` and brings it to canonical sign.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self, MathError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(MathError::ZeroQuaternion);
        }
        Ok(Self::canonical(w / n, x / n, y / n, z / n))
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        if w < 0.0 {
            UnitQuat { w: -w, x: -x, y: -y, z: -z }
        } else {
            UnitQuat { w, x, y, z }
        }
    }

    /// Rotation of `angle` radians about the unit vector `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, MathError> {
        let n = axis.norm();
        if (n - 1.0).abs() > AXIS_TOLERANCE {
            return Err(MathError::NonUnitAxis(n));
        }
        let axis = axis / n;
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self::canonical(c, axis.x * s, axis.y * s, axis.z * s))
    }

    /// Exponential map: rotation by `|v|` radians about `v / |v|`.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let theta = v.norm();
        let half = 0.5 * theta;
        // sin(θ/2)/θ, with a series expansion near zero
        let k = if theta < 1e-6 {
            0.5 - theta * theta / 48.0
        } else {
            half.sin() / theta
        };
        let q = UnitQuat { w: half.cos(), x: v.x * k, y: v.y * k, z: v.z * k };
        q.renormalized()
    }

    /// Logarithm map; the returned vector has norm in `[0, π]`.
    pub fn to_rotation_vector(self) -> Vec3 {
        let v = Vec3::new(self.x, self.y, self.z);
        let n = v.norm();
        if n < 1e-12 {
            return v * (2.0 / self.w);
        }
        v * (2.0 * n.atan2(self.w) / n)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(self) -> f64 {
        let n = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * n.atan2(self.w)
    }

    /// Angle of the relative rotation between two orientations.
    pub fn angle_to(self, other: UnitQuat) -> f64 {
        (self.conjugate() * other).angle()
    }

    /// Advance a body-frame orientation by angular rate `omega` (rad/s)
    /// applied for `dt` seconds: `q ⊗ exp(ω·dt)`.
    pub fn integrate(self, omega: Vec3, dt: f64) -> UnitQuat {
        if omega == Vec3::ZERO {
            return self;
        }
        (self * UnitQuat::from_rotation_vector(omega * dt)).renormalized()
    }

    /// Minimal rotation taking direction `from` onto direction `to`.
    /// Returns `None` when either vector is (near) zero.
    pub fn shortest_arc(from: Vec3, to: Vec3) -> Option<UnitQuat> {
        let a = from.normalized()?;
        let b = to.normalized()?;
        let d = a.dot(b);
        if d < -1.0 + 1e-15 {
            let axis = a.any_orthogonal();
            return Some(UnitQuat { w: 0.0, x: axis.x, y: axis.y, z: axis.z });
        }
        let c = a.cross(b);
        UnitQuat::from_wxyz(1.0 + d, c.x, c.y, c.z).ok()
    }

    pub fn conjugate(self) -> UnitQuat {
        UnitQuat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn inverse(self) -> UnitQuat {
        self.conjugate()
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Rescales to unit norm (no-op bits-wise if the norm is exactly 1).
    pub fn renormalized(self) -> UnitQuat {
        let n = self.norm();
        if n == 1.0 {
            return Self::canonical(self.w, self.x, self.y, self.z);
        }
        Self::canonical(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Spherical interpolation along the shorter arc; `t = 0` gives `self`.
    pub fn slerp(self, other: UnitQuat, t: f64) -> UnitQuat {
        let mut d = self.dot(other);
        let mut o = other;
        if d < 0.0 {
            d = -d;
            o = UnitQuat { w: -o.w, x: -o.x, y: -o.y, z: -o.z };
        }
        let (a, b) = if d > 0.9995 {
            (1.0 - t, t)
        } else {
            let theta = d.clamp(-1.0, 1.0).acos();
            let s = theta.sin();
            (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s)
        };
        UnitQuat {
            w: a * self.w + b * o.w,
            x: a * self.x + b * o.x,
            y: a * self.y + b * o.y,
            z: a * self.z + b * o.z,
        }
        .renormalized()
    }

    pub fn dot(self, other: UnitQuat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn w(self) -> f64 {
        self.w
    }
    pub fn x(self) -> f64 {
        self.x
    }
    pub fn y(self) -> f64 {
        self.y
    }
    pub fn z(self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let c0 = self.rotate(Vec3::X);
        let c1 = self.rotate(Vec3::Y);
        let c2 = self.rotate(Vec3::Z);
        [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]]
    }
}

impl Mul for UnitQuat {
    type Output = UnitQuat;

    /// Hamilton product `self ⊗ rhs` (apply `rhs` first).
    fn mul(self, r: UnitQuat) -> UnitQuat {
        let (a, b) = (self, r);
        UnitQuat::canonical(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Mul<Vec3> for UnitQuat {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.rotate(v)
    }
}

impl TryFrom<[f64; 4]> for UnitQuat {
    type Error = MathError;

    /// Components already unit to within 1e-12 are kept bit-for-bit, so a
    /// serialized quaternion parses back to the identical value.
    fn try_from(a: [f64; 4]) -> Result<Self, MathError> {
        let n = a.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (n - 1.0).abs() < 1e-12 {
            return Ok(UnitQuat::canonical(a[0], a[1], a[2], a[3]));
        }
        UnitQuat::from_wxyz(a[0], a[1], a[2], a[3])
    }
}

impl From<UnitQuat> for [f64; 4] {
    fn from(q: UnitQuat) -> Self {
        q.to_array()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_quat_eq(a: UnitQuat, b: UnitQuat, eps: f64) {
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert_abs_diff_eq!(*x, y, epsilon = eps);
        }
    }

    #[test]
    fn axis_angle_examples() {
        let q = UnitQuat::from_axis_angle(Vec3::Z, PI).unwrap();
        assert_quat_eq(q, UnitQuat::from_wxyz(0.0, 0.0, 0.0, 1.0).unwrap(), 1e-15);

        let q = UnitQuat::from_axis_angle(Vec3::X, 0.0).unwrap();
        assert_eq!(q, UnitQuat::IDENTITY);

        let q = UnitQuat::from_axis_angle(Vec3::Y, FRAC_PI_2).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert_quat_eq(q, UnitQuat::from_wxyz(h, 0.0, h, 0.0).unwrap(), 1e-15);
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        assert!(matches!(
            UnitQuat::from_axis_angle(Vec3::new(0.0, 0.0, 2.0), 1.0),
            Err(MathError::NonUnitAxis(_))
        ));
    }

    #[test]
    fn integrate_constant_rate() {
        let q = UnitQuat::IDENTITY.integrate(Vec3::new(0.0, 0.0, FRAC_PI_2), 1.0);
        assert_quat_eq(q, UnitQuat::from_axis_angle(Vec3::Z, FRAC_PI_2).unwrap(), 1e-12);

        let q0 = UnitQuat::from_axis_angle(Vec3::new(0.6, 0.0, 0.8), 0.7).unwrap();
        assert_eq!(q0.integrate(Vec3::ZERO, 0.01), q0);
    }

    #[test]
    fn integrate_matches_closed_form_over_substeps() {
        // closed form for constant ω: rotation of |ω|·T about ω/|ω|
        let omega = Vec3::new(PI / 200.0, 0.0, 0.0);
        let mut q = UnitQuat::IDENTITY;
        for _ in 0..100 {
            q = q.integrate(omega, 0.01);
        }
        let expected = UnitQuat::from_axis_angle(Vec3::X, FRAC_PI_2 / 100.0).unwrap();
        // 100 steps of π/200 rad/s × 0.01 s = π/200 total
        assert!(q.angle_to(expected) < 1e-6);

        let omega = Vec3::new(PI / 2.0, 0.0, 0.0);
        let mut q = UnitQuat::IDENTITY;
        for _ in 0..100 {
            q = q.integrate(omega, 0.01);
        }
        let expected = UnitQuat::from_axis_angle(Vec3::X, FRAC_PI_2).unwrap();
        assert!(q.angle_to(expected) < 1e-6);
    }

    #[test]
    fn shortest_arc_handles_opposite_vectors() {
        let q = UnitQuat::shortest_arc(Vec3::Y, -Vec3::Y).unwrap();
        assert_abs_diff_eq!(q.angle(), PI, epsilon = 1e-12);
        let r = q.rotate(Vec3::Y);
        assert_abs_diff_eq!(r.y, -1.0, epsilon = 1e-12);
        assert!(UnitQuat::shortest_arc(Vec3::ZERO, Vec3::X).is_none());
    }

    #[test]
    fn rotation_vector_round_trip_near_pi() {
        let v = Vec3::new(0.0, 0.0, PI - 1e-9);
        let back = UnitQuat::from_rotation_vector(v).to_rotation_vector();
        assert_abs_diff_eq!(back.z, v.z, epsilon = 1e-9);
    }

    fn arb_unit() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter_map("non-zero", |(x, y, z)| Vec3::new(x, y, z).normalized())
    }

    fn arb_quat() -> impl Strategy<Value = UnitQuat> {
        (arb_unit(), -PI..PI).prop_map(|(a, t)| UnitQuat::from_axis_angle(a, t).unwrap())
    }

    proptest! {
        #[test]
        fn products_stay_unit_and_canonical(a in arb_quat(), b in arb_quat()) {
            let p = a * b;
            prop_assert!((p.norm() - 1.0).abs() < 1e-9);
            prop_assert!(p.w() >= 0.0);
        }

        #[test]
        fn shortest_arc_aligns(a in arb_unit(), b in arb_unit()) {
            let q = UnitQuat::shortest_arc(a, b).unwrap();
            prop_assert!(q.rotate(a).cross(b).norm() < 1e-9);
            prop_assert!(q.rotate(a).dot(b) > 0.0);
        }

        #[test]
        fn log_exp_round_trip(q in arb_quat()) {
            let back = UnitQuat::from_rotation_vector(q.to_rotation_vector());
            prop_assert!(q.angle_to(back) < 1e-9);
        }

        #[test]
        fn many_integration_steps_keep_norm(q in arb_quat(), w in arb_unit()) {
            let mut q = q;
            for _ in 0..1000 {
                q = q.integrate(w * 3.0, 0.01);
            }
            prop_assert!((q.norm() - 1.0).abs() < 1e-9);
        }
    }
}
