use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{Blob, TrackingConfig, TrackingError};
use crate::math::{PinholeCamera, RigidTransform, UnitQuat, Vec3};

/// Calibrated two-camera rig. The left camera defines the tracker frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub left: PinholeCamera,
    pub right: PinholeCamera,
}

impl StereoRig {
    pub fn new(left: PinholeCamera, right: PinholeCamera) -> Result<Self, TrackingError> {
        left.validate().map_err(|e| TrackingError::InvalidRig(e.to_string()))?;
        right.validate().map_err(|e| TrackingError::InvalidRig(e.to_string()))?;
        if left.pose_in_rig.translation.norm() > 1e-12 || left.pose_in_rig.rotation.angle() > 1e-12 {
            return Err(TrackingError::InvalidRig("left camera must define the rig frame".into()));
        }
        if right.center().norm() < 1e-6 {
            return Err(TrackingError::InvalidRig("zero baseline".into()));
        }
        Ok(Self { left, right })
    }

    /// Rectified rig: identical intrinsics, right camera `baseline` metres along +x.
    pub fn rectified(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32, baseline: f64) -> Self {
        let left = PinholeCamera { fx, fy, cx, cy, width, height, pose_in_rig: RigidTransform::IDENTITY };
        let right = PinholeCamera {
            pose_in_rig: RigidTransform::new(UnitQuat::IDENTITY, Vec3::new(baseline, 0.0, 0.0)),
            ..left
        };
        Self { left, right }
    }

    /// Fundamental matrix mapping left pixels to right epipolar lines.
    fn fundamental(&self) -> Matrix3<f64> {
        // right_from_left
        let rl = self.right.pose_in_rig.inverse();
        let r = rl.rotation.to_matrix();
        let rot = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        let t = Vector3::new(rl.translation.x, rl.translation.y, rl.translation.z);
        let essential = t.cross_matrix() * rot;
        let k_inv = |c: &PinholeCamera| {
            Matrix3::new(
                1.0 / c.fx, 0.0, -c.cx / c.fx,
                0.0, 1.0 / c.fy, -c.cy / c.fy,
                0.0, 0.0, 1.0,
            )
        };
        k_inv(&self.right).transpose() * essential * k_inv(&self.left)
    }
}

/// Blob pairs accepted as the same marker seen by both cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoMatch {
    pub pairs: Vec<(Blob, Blob)>,
    /// More than `max_controllers` geometrically consistent pairs existed.
    pub ambiguous: bool,
}

/// Triangulated marker position in the tracker (left camera) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulated {
    pub point: Vec3,
    /// Length of the common perpendicular between the two rays.
    pub gap: f64,
}

struct Candidate {
    left: usize,
    right: usize,
    cost: f64,
}

// Upper bound on blobs considered per image; keeps the exhaustive matching cheap.
const MAX_BLOBS: usize = 8;

/// Pairs left/right blobs that satisfy the epipolar constraint and whose
/// triangulation lands inside the working depth range.
///
/// Among all one-to-one matchings the one with the most pairs wins, ties
/// broken by the smallest summed epipolar distance.
pub fn correspond_stereo(left: &[Blob], right: &[Blob], rig: &StereoRig, config: &TrackingConfig) -> StereoMatch {
    let left = &left[..left.len().min(MAX_BLOBS)];
    let right = &right[..right.len().min(MAX_BLOBS)];
    let f = rig.fundamental();

    let mut candidates = Vec::new();
    for (i, l) in left.iter().enumerate() {
        let line = f * Vector3::new(l.centroid_u, l.centroid_v, 1.0);
        let scale = (line.x * line.x + line.y * line.y).sqrt();
        for (j, r) in right.iter().enumerate() {
            let dist = if scale > 0.0 {
                (line.x * r.centroid_u + line.y * r.centroid_v + line.z).abs() / scale
            } else {
                f64::INFINITY
            };
            if dist > config.epipolar_tolerance_px {
                continue;
            }
            let Some(depth) = ray_depths(l, r, rig, config) else {
                continue;
            };
            if depth < config.min_depth_m || depth > config.max_depth_m {
                continue;
            }
            candidates.push(Candidate { left: i, right: j, cost: dist });
        }
    }

    let ambiguous = candidates.len() > config.max_controllers;
    let mut best: (usize, f64, Vec<usize>) = (0, 0.0, Vec::new());
    let mut chosen = Vec::new();
    let mut used_left = vec![false; left.len()];
    let mut used_right = vec![false; right.len()];
    search(&candidates, 0, &mut chosen, &mut used_left, &mut used_right, 0.0, config.max_controllers, &mut best);

    let pairs = best.2.iter().map(|&k| (left[candidates[k].left], right[candidates[k].right])).collect();
    StereoMatch { pairs, ambiguous }
}

#[allow(clippy::too_many_arguments)]
fn search(
    cands: &[Candidate],
    next: usize,
    chosen: &mut Vec<usize>,
    used_left: &mut [bool],
    used_right: &mut [bool],
    cost: f64,
    limit: usize,
    best: &mut (usize, f64, Vec<usize>),
) {
    if chosen.len() > best.0 || (chosen.len() == best.0 && cost < best.1) {
        *best = (chosen.len(), cost, chosen.clone());
    }
    if chosen.len() == limit {
        return;
    }
    for k in next..cands.len() {
        let c = &cands[k];
        if used_left[c.left] || used_right[c.right] {
            continue;
        }
        used_left[c.left] = true;
        used_right[c.right] = true;
        chosen.push(k);
        search(cands, k + 1, chosen, used_left, used_right, cost + c.cost, limit, best);
        chosen.pop();
        used_left[c.left] = false;
        used_right[c.right] = false;
    }
}

/// Depth (left-camera z) of the midpoint, or `None` if the pair does not
/// triangulate to a point in front of both cameras.
fn ray_depths(l: &Blob, r: &Blob, rig: &StereoRig, config: &TrackingConfig) -> Option<f64> {
    let (s, t, mid, _) = closest_points(l, r, rig, config.min_ray_angle_deg).ok()?;
    if s <= 0.0 || t <= 0.0 {
        return None;
    }
    let depth_right = rig.right.rig_to_camera(mid).z;
    (depth_right > 0.0).then_some(mid.z)
}

fn closest_points(l: &Blob, r: &Blob, rig: &StereoRig, min_angle_deg: f64) -> Result<(f64, f64, Vec3, f64), TrackingError> {
    let o1 = rig.left.center();
    let d1 = rig.left.ray_direction(l.centroid_u, l.centroid_v);
    let o2 = rig.right.center();
    let d2 = rig.right.ray_direction(r.centroid_u, r.centroid_v);

    let angle = d1.cross(d2).norm().atan2(d1.dot(d2));
    if angle.to_degrees() < min_angle_deg {
        return Err(TrackingError::DegenerateGeometry { angle_deg: angle.to_degrees() });
    }
    let w0 = o1 - o2;
    let b = d1.dot(d2);
    let d = d1.dot(w0);
    let e = d2.dot(w0);
    let denom = 1.0 - b * b;
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let p1 = o1 + d1 * s;
    let p2 = o2 + d2 * t;
    Ok((s, t, (p1 + p2) * 0.5, p1.distance(p2)))
}

/// Midpoint of the common perpendicular between the two back-projected rays.
pub fn triangulate_midpoint(pair: &(Blob, Blob), rig: &StereoRig, config: &TrackingConfig) -> Result<Triangulated, TrackingError> {
    let (_, _, point, gap) = closest_points(&pair.0, &pair.1, rig, config.min_ray_angle_deg)?;
    if gap > config.gap_reject_m {
        return Err(TrackingError::GapTooLarge { gap });
    }
    Ok(Triangulated { point, gap })
}
