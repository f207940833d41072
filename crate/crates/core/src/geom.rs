//! Geometric primitives: 7-DoF boxes, yaw-only rigid transforms, BEV
//! distance and 2D/3D IoU.
//!
//! All operations here are pure functions on immutable values.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t <= -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

/// Signed wrapped difference `a − b` in (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// A 7-DoF 3D bounding box: center `(x, y, z)` in meters, yaw `theta`
/// about the vertical (world-up) axis in (−π, π], and extents
/// `(l, w, h)` along the object's local forward/left/up axes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Box3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
}

impl Box3D {
    /// Panics if any extent is non-positive. The yaw is wrapped.
    pub fn new(x: f64, y: f64, z: f64, theta: f64, l: f64, w: f64, h: f64) -> Self {
        assert!(
            l > 0.0 && w > 0.0 && h > 0.0,
            "box extents must be positive, got l={l} w={w} h={h}"
        );
        Self {
            x,
            y,
            z,
            theta: wrap_angle(theta),
            l,
            w,
            h,
        }
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5], a[6])
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.theta, self.l, self.w, self.h]
    }

    pub fn center(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    /// BEV footprint corners, counter-clockwise.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = (math::sin(self.theta), math::cos(self.theta));
        let hl = 0.5 * self.l;
        let hw = 0.5 * self.w;
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        local.map(|[lx, ly]| [self.x + c * lx - s * ly, self.y + s * lx + c * ly])
    }
}

/// Axis-aligned 2D box in image space (pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Box2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        assert!(
            x_min < x_max && y_min < y_max,
            "degenerate 2D box [{x_min},{y_min},{x_max},{y_max}]"
        );
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

/// Rigid transform as unit quaternion `(w, x, y, z)` plus translation.
///
/// Camera poses in this crate are constrained to yaw-only rotations
/// about world-up; [`RigidTransform::yaw`] extracts that component and
/// is what [`transform_box`] composes into a box yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RigidTransform {
    /// Unit quaternion (w, x, y, z), |q| = 1 within 1e-9.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0, 0.0, 0.0],
        }
    }

    /// Panics if the quaternion is not unit norm within 1e-9.
    pub fn new(rotation: [f64; 4], translation: [f64; 3]) -> Self {
        let n = math::norm(&rotation);
        assert!(
            math::abs(n - 1.0) < 1e-9,
            "quaternion norm {n} is not 1 within 1e-9"
        );
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation by `yaw` about world-up plus a translation.
    pub fn from_yaw_translation(yaw: f64, translation: [f64; 3]) -> Self {
        let half = 0.5 * yaw;
        Self {
            rotation: [math::cos(half), 0.0, 0.0, math::sin(half)],
            translation,
        }
    }

    /// Yaw component about world-up (exact for yaw-only rotations).
    pub fn yaw(&self) -> f64 {
        let [w, x, y, z] = self.rotation;
        math::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    }

    /// Rotates a vector (no translation).
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let [w, qx, qy, qz] = self.rotation;
        // v + 2 q × (q × v + w v)
        let t = [
            2.0 * (qy * v[2] - qz * v[1]),
            2.0 * (qz * v[0] - qx * v[2]),
            2.0 * (qx * v[1] - qy * v[0]),
        ];
        [
            v[0] + w * t[0] + qy * t[2] - qz * t[1],
            v[1] + w * t[1] + qz * t[0] - qx * t[2],
            v[2] + w * t[2] + qx * t[1] - qy * t[0],
        ]
    }

    /// Applies the full transform to a point.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = self.rotate(p);
        [
            r[0] + self.translation[0],
            r[1] + self.translation[1],
            r[2] + self.translation[2],
        ]
    }

    pub fn inverse(&self) -> Self {
        let [w, x, y, z] = self.rotation;
        let conj = Self {
            rotation: [w, -x, -y, -z],
            translation: [0.0, 0.0, 0.0],
        };
        let t = conj.rotate(self.translation);
        Self {
            rotation: conj.rotation,
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let [w1, x1, y1, z1] = self.rotation;
        let [w2, x2, y2, z2] = other.rotation;
        let rotation = [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ];
        let t = self.apply(other.translation);
        Self {
            rotation,
            translation: t,
        }
    }
}

/// Maps a box through a (yaw-only) rigid transform: the center is
/// rotated and translated, the transform's yaw is added to the box yaw,
/// and the extents are unchanged.
pub fn transform_box(b: &Box3D, pose: &RigidTransform) -> Box3D {
    let c = pose.apply(b.center());
    Box3D {
        x: c[0],
        y: c[1],
        z: c[2],
        theta: wrap_angle(b.theta + pose.yaw()),
        l: b.l,
        w: b.w,
        h: b.h,
    }
}

/// Euclidean distance between box centers projected on the ground plane.
pub fn bev_distance(a: &Box3D, b: &Box3D) -> f64 {
    math::hypot(a.x - b.x, a.y - b.y)
}

/// Shoelace area of a polygon (positive for counter-clockwise).
fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * math::abs(acc)
}

/// Sutherland–Hodgman: clips `subject` against a convex
/// counter-clockwise `clip` polygon.
fn clip_polygon(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let [ax, ay] = clip[i];
        let [bx, by] = clip[(i + 1) % clip.len()];
        // Signed distance to the clip edge; >= 0 is inside for CCW clips.
        let side = |p: [f64; 2]| (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax);

        let input = core::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let next = input[(j + 1) % input.len()];
            let s_cur = side(cur);
            let s_next = side(next);
            if s_cur >= 0.0 {
                output.push(cur);
            }
            if (s_cur > 0.0 && s_next < 0.0) || (s_cur < 0.0 && s_next > 0.0) {
                let t = s_cur / (s_cur - s_next);
                output.push([
                    cur[0] + t * (next[0] - cur[0]),
                    cur[1] + t * (next[1] - cur[1]),
                ]);
            }
        }
    }
    output
}

/// Overlap area of the two boxes' yawed BEV rectangles.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let pa = a.bev_corners();
    let pb = b.bev_corners();
    polygon_area(&clip_polygon(&pa, &pb))
}

/// 3D IoU: BEV polygon intersection times vertical interval overlap,
/// over the union volume. Degenerate overlap returns 0.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let z_lo = (a.z - 0.5 * a.h).max(b.z - 0.5 * b.h);
    let z_hi = (a.z + 0.5 * a.h).min(b.z + 0.5 * b.h);
    let dz = z_hi - z_lo;
    if dz <= 0.0 {
        return 0.0;
    }
    let base = bev_intersection_area(a, b);
    if base <= 0.0 {
        return 0.0;
    }
    let inter = base * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Standard axis-aligned 2D IoU.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let dx = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let dy = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if dx <= 0.0 || dy <= 0.0 {
        return 0.0;
    }
    let inter = dx * dy;
    inter / (a.area() + b.area() - inter)
}
