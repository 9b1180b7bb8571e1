//! Stencil shapes and their tri-planar projection onto arbitrary surfaces.
//!
//! Each pattern is an analytic mask over one square tile. A surface point is
//! projected onto the three axis-aligned planes, each projection is looked up
//! in its own (optionally rotated) tile, and the three masks are blended with
//! weights derived from the surface normal.
//!
//! Plane frames, with `+U`/`+V` the tile axes:
//!
//! | axis | plane | +U | +V |
//! |------|-------|----|----|
//! | 0    | YZ    | +z | +y |
//! | 1    | XZ (floor) | +x (east) | +z (north) |
//! | 2    | XY    | +x | +y |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use glam::{DVec2, DVec3};
use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodingKind;
use crate::error::{Error, Result};

/// Exponent applied to the normal components before normalizing the blend
/// weights.
pub const BLEND_SHARPNESS: i32 = 4;

/// Coverage at or above which a fragment passes the stencil.
pub const STENCIL_THRESHOLD: f64 = 0.5;

const MIN_NORMAL_LEN: f64 = 1e-6;
const MIN_ARROW_PROJECTION_M: f64 = 1e-6;

pub const CIRCLE_RADIUS: f64 = 0.4;

// Arrow in tile units, centered on the tile and pointing along +U.
pub const ARROW_TAIL_X: f64 = -0.42;
pub const ARROW_HEAD_BASE_X: f64 = 0.02;
pub const ARROW_TIP_X: f64 = 0.42;
pub const ARROW_SHAFT_HALF_WIDTH: f64 = 0.06;
pub const ARROW_HEAD_HALF_WIDTH: f64 = 0.24;

/// Hexagon circumradius chosen so the hexagon covers the same area as the
/// circle.
pub fn hex_circumradius() -> f64 {
    (CIRCLE_RADIUS * CIRCLE_RADIUS * PI / (1.5 * 3f64.sqrt())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilPattern {
    Circle,
    Hex,
    Arrow,
}

impl StencilPattern {
    pub const ALL: [StencilPattern; 3] = [
        StencilPattern::Circle,
        StencilPattern::Hex,
        StencilPattern::Arrow,
    ];

    pub fn for_encoding(kind: EncodingKind) -> Option<Self> {
        match kind {
            EncodingKind::Circle => Some(StencilPattern::Circle),
            EncodingKind::Hex => Some(StencilPattern::Hex),
            EncodingKind::Arrow => Some(StencilPattern::Arrow),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StencilPattern::Circle => "circle",
            StencilPattern::Hex => "hex",
            StencilPattern::Arrow => "arrow",
        }
    }

    /// Whether the point `q`, relative to the tile center in tile units, is
    /// inside the shape.
    #[inline]
    pub fn covers_centered(self, q: DVec2) -> bool {
        match self {
            StencilPattern::Circle => q.length_squared() <= CIRCLE_RADIUS * CIRCLE_RADIUS,
            StencilPattern::Hex => {
                // flat-topped regular hexagon
                let r = hex_circumradius();
                let (x, y) = (q.x.abs(), q.y.abs());
                let s3 = 3f64.sqrt();
                y <= 0.5 * s3 * r && s3 * x + y <= s3 * r
            }
            StencilPattern::Arrow => {
                let (x, y) = (q.x, q.y.abs());
                if (ARROW_TAIL_X..=ARROW_HEAD_BASE_X).contains(&x) {
                    y <= ARROW_SHAFT_HALF_WIDTH
                } else if x > ARROW_HEAD_BASE_X && x <= ARROW_TIP_X {
                    y <= ARROW_HEAD_HALF_WIDTH * (ARROW_TIP_X - x)
                        / (ARROW_TIP_X - ARROW_HEAD_BASE_X)
                } else {
                    false
                }
            }
        }
    }

    /// Mask over the unit tile; `local` is wrapped into [0, 1)².
    #[inline]
    pub fn covers(self, local: DVec2) -> bool {
        let wrapped = local - local.floor();
        self.covers_centered(wrapped - DVec2::splat(0.5))
    }

    /// Analytic fraction of the tile covered by the shape.
    pub fn duty_cycle(self) -> f64 {
        match self {
            StencilPattern::Circle => PI * CIRCLE_RADIUS * CIRCLE_RADIUS,
            StencilPattern::Hex => 1.5 * 3f64.sqrt() * hex_circumradius().powi(2),
            StencilPattern::Arrow => {
                let shaft = (ARROW_HEAD_BASE_X - ARROW_TAIL_X) * 2.0 * ARROW_SHAFT_HALF_WIDTH;
                let head = (ARROW_TIP_X - ARROW_HEAD_BASE_X) * ARROW_HEAD_HALF_WIDTH;
                shaft + head
            }
        }
    }

    /// Grayscale preview of one tile: white where covered.
    pub fn preview(self, size: u32) -> GrayImage {
        GrayImage::from_fn(size, size, |x, y| {
            // image rows grow downward, tile V grows upward
            let u = (x as f64 + 0.5) / size as f64;
            let v = 1.0 - (y as f64 + 0.5) / size as f64;
            image::Luma([if self.covers(DVec2::new(u, v)) { 255 } else { 0 }])
        })
    }
}

impl fmt::Display for StencilPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StencilPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StencilPattern::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownEncoding(s.to_owned()))
    }
}

/// Coordinates of `p` in the frame of plane `axis` (0, 1 or 2).
#[inline]
pub fn plane_coords(axis: usize, p: DVec3) -> DVec2 {
    match axis {
        0 => DVec2::new(p.z, p.y),
        1 => DVec2::new(p.x, p.z),
        2 => DVec2::new(p.x, p.y),
        _ => panic!("plane axis out of range: {axis}"),
    }
}

/// Replaces the in-plane coordinates of `p` with `uv`, keeping the coordinate
/// along the plane normal.
#[inline]
pub fn with_plane_coords(axis: usize, p: DVec3, uv: DVec2) -> DVec3 {
    match axis {
        0 => DVec3::new(p.x, uv.y, uv.x),
        1 => DVec3::new(uv.x, p.y, uv.y),
        2 => DVec3::new(uv.x, uv.y, p.z),
        _ => panic!("plane axis out of range: {axis}"),
    }
}

/// Per-plane blend weights for a surface normal.
pub fn triplanar_weights(normal: DVec3) -> Result<[f64; 3]> {
    let len = normal.length();
    if !(len > MIN_NORMAL_LEN) {
        return Err(Error::DegenerateNormal);
    }
    let n = (normal / len).abs();
    let p = [
        n.x.powi(BLEND_SHARPNESS),
        n.y.powi(BLEND_SHARPNESS),
        n.z.powi(BLEND_SHARPNESS),
    ];
    let total: f64 = p.iter().sum();
    Ok([p[0] / total, p[1] / total, p[2] / total])
}

/// A surface point prepared for tri-planar lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriplanarSample {
    pub world_pos: DVec3,
    pub normal: DVec3,
    /// Tile-space coordinates on each plane.
    pub plane_uvs: [DVec2; 3],
    pub weights: [f64; 3],
}

impl TriplanarSample {
    pub fn new(world_pos: DVec3, normal: DVec3, tile_scale: f64) -> Result<Self> {
        if !(tile_scale > 0.0) {
            return Err(Error::InvalidEncoding(format!(
                "tile scale must be positive, got {tile_scale}"
            )));
        }
        let weights = triplanar_weights(normal)?;
        let plane_uvs = [0, 1, 2].map(|a| plane_coords(a, world_pos) / tile_scale);
        Ok(TriplanarSample {
            world_pos,
            normal: normal.normalize(),
            plane_uvs,
            weights,
        })
    }

    /// World position of the center of the tile containing this sample on
    /// plane `axis`.
    pub fn tile_center(&self, axis: usize, tile_scale: f64) -> DVec3 {
        let center = (self.plane_uvs[axis].floor() + DVec2::splat(0.5)) * tile_scale;
        with_plane_coords(axis, self.world_pos, center)
    }

    /// Blended coverage, with each plane's tile content rotated
    /// counter-clockwise by `rotations[axis]` about its center.
    pub fn coverage(&self, pattern: StencilPattern, rotations: [f64; 3]) -> f64 {
        let mut c = 0.0;
        for axis in 0..3 {
            let w = self.weights[axis];
            if w == 0.0 {
                continue;
            }
            let uv = self.plane_uvs[axis];
            let q = uv - uv.floor() - DVec2::splat(0.5);
            let q = if rotations[axis] == 0.0 {
                q
            } else {
                DVec2::from_angle(-rotations[axis]).rotate(q)
            };
            if pattern.covers_centered(q) {
                c += w;
            }
        }
        c
    }
}

pub fn stencil_coverage(
    world_pos: DVec3,
    normal: DVec3,
    pattern: StencilPattern,
    tile_scale: f64,
    rotations: [f64; 3],
) -> Result<f64> {
    Ok(TriplanarSample::new(world_pos, normal, tile_scale)?.coverage(pattern, rotations))
}

#[inline]
pub fn stencil_test(coverage: f64) -> bool {
    coverage >= STENCIL_THRESHOLD
}

/// Angle (radians, counter-clockwise from +U) that turns the arrow to point
/// from `centroid` toward `world_pos` within plane `axis`.
pub fn arrow_rotation(axis: usize, world_pos: DVec3, centroid: DVec3) -> f64 {
    let d = plane_coords(axis, world_pos - centroid);
    if d.length() < MIN_ARROW_PROJECTION_M {
        0.0
    } else {
        d.y.atan2(d.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const UP: DVec3 = DVec3::Y;

    #[test]
    fn weights_examples() {
        assert_eq!(triplanar_weights(DVec3::Y).unwrap(), [0.0, 1.0, 0.0]);
        let w = triplanar_weights(DVec3::ONE / 3f64.sqrt()).unwrap();
        for x in w {
            assert_relative_eq!(x, 1.0 / 3.0, max_relative = 1e-12);
        }
        assert!(matches!(triplanar_weights(DVec3::ZERO), Err(Error::DegenerateNormal)));
        assert!(stencil_coverage(DVec3::ZERO, DVec3::ZERO, StencilPattern::Circle, 0.3, [0.0; 3]).is_err());
    }

    #[test]
    fn circle_center_and_corner() {
        let t = 0.3;
        let center = DVec3::new(1.5 * t, 0.0, 2.5 * t);
        assert_eq!(stencil_coverage(center, UP, StencilPattern::Circle, t, [0.0; 3]).unwrap(), 1.0);
        let corner = DVec3::new(t, 0.0, 2.0 * t);
        assert_eq!(stencil_coverage(corner, UP, StencilPattern::Circle, t, [0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn hex_matches_across_seams() {
        // brute-force: points mirrored across each tile edge land at the same
        // offset in the neighbouring tile
        let t = 0.3;
        for i in 0..200 {
            let v = -0.5 + i as f64 / 199.0;
            for &(a, b) in &[(1e-9, v), (1.0 - 1e-9, v), (v, 1e-9), (v, 1.0 - 1e-9)] {
                let p = DVec3::new(a * t, 0.0, b * t);
                let p_next = DVec3::new((a + 3.0) * t, 0.0, (b - 2.0) * t);
                let c0 = stencil_coverage(p, UP, StencilPattern::Hex, t, [0.0; 3]).unwrap();
                let c1 = stencil_coverage(p_next, UP, StencilPattern::Hex, t, [0.0; 3]).unwrap();
                assert_eq!(c0, c1);
            }
        }
    }

    #[test]
    fn stencil_gate() {
        assert!(stencil_test(1.0));
        assert!(!stencil_test(0.0));
        assert!(stencil_test(0.5));
        assert!(!stencil_test(0.4999));
    }

    #[test]
    fn arrow_rotation_examples() {
        let c = DVec3::new(2.0, 0.0, 3.0);
        assert_eq!(arrow_rotation(1, c + DVec3::X, c), 0.0);
        assert_relative_eq!(arrow_rotation(1, c + DVec3::Z, c), FRAC_PI_2);
        assert_eq!(arrow_rotation(1, c + DVec3::Y, c), 0.0);
    }

    #[test]
    fn shapes_fit_inside_inscribed_circle() {
        // every covered point stays within 0.5 of the center so rotations never clip
        for p in StencilPattern::ALL {
            for i in 0..400 {
                for j in 0..400 {
                    let q = DVec2::new(i as f64 / 399.0 - 0.5, j as f64 / 399.0 - 0.5);
                    if p.covers_centered(q) {
                        assert!(q.length() < 0.5, "{p} covers {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn preview_has_expected_coverage() {
        for p in StencilPattern::ALL {
            let img = p.preview(512);
            let lit = img.pixels().filter(|px| px.0[0] == 255).count() as f64;
            let frac = lit / (512.0 * 512.0);
            assert!((frac - p.duty_cycle()).abs() < 0.005, "{p}: {frac}");
        }
    }

    proptest! {
        #[test]
        fn weights_form_partition(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let n = DVec3::new(x, y, z);
            prop_assume!(n.length() > 1e-3);
            let w = triplanar_weights(n).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn periodic_under_tile_translation(
            x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64,
            nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in -1.0..1.0f64,
            k in 0usize..3, m in -3i32..3, pat in 0usize..3,
        ) {
            let n = DVec3::new(nx, ny, nz);
            prop_assume!(n.length() > 1e-3);
            let t = 0.3;
            let pattern = StencilPattern::ALL[pat];
            let p = DVec3::new(x, y, z);
            let shift = [DVec3::X, DVec3::Y, DVec3::Z][k] * t * m as f64;
            let a = stencil_coverage(p, n, pattern, t, [0.0; 3]).unwrap();
            let b = stencil_coverage(p + shift, n, pattern, t, [0.0; 3]).unwrap();
            // a shift of exactly one period can move a point across a floor() boundary in
            // floating point; only compare away from tile edges
            let near_edge = (0..3).any(|ax| {
                let uv = plane_coords(ax, p) / t;
                let f = uv - uv.floor();
                f.min_element() < 1e-7 || f.max_element() > 1.0 - 1e-7
            });
            prop_assume!(!near_edge);
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn circle_rotation_invariant(r in 0.0..0.5f64, th in 0.0..6.3f64, rot in 0.0..6.3f64) {
            let q = DVec2::from_angle(th) * r;
            let q_rot = DVec2::from_angle(rot).rotate(q);
            prop_assert_eq!(StencilPattern::Circle.covers_centered(q), StencilPattern::Circle.covers_centered(q_rot));
        }

        #[test]
        fn hex_sixfold_symmetric(r in 0.0..0.5f64, th in 0.0..6.3f64, k in 1i32..6) {
            let q = DVec2::from_angle(th) * r;
            let q_rot = DVec2::from_angle(k as f64 * PI / 3.0).rotate(q);
            let rh = hex_circumradius();
            // skip points within rounding distance of the boundary
            let s3 = 3f64.sqrt();
            let dist_edge = |p: DVec2| {
                let (x, y) = (p.x.abs(), p.y.abs());
                (0.5 * s3 * rh - y).abs().min(((s3 * rh - s3 * x - y) / 2.0).abs())
            };
            prop_assume!(dist_edge(q) > 1e-9);
            prop_assert_eq!(StencilPattern::Hex.covers_centered(q), StencilPattern::Hex.covers_centered(q_rot));
        }
    }
}
