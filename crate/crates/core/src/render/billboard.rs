//! Camera-facing quads for sources with no surface nearby.

use glam::DVec2;

use super::camera::Camera;
use super::shade::Shader;
use super::Frame;
use crate::error::{Error, Result};
use crate::field::{Field, VISUALIZATION_RADIUS_M};
use crate::par;

pub const DEFAULT_FADE_NEAR_M: f64 = 3.5;
pub const DEFAULT_FADE_FAR_M: f64 = 5.0;

/// Quad opacity for a source `distance` meters from the camera: 0 up to
/// `d_near`, 1 from `d_far`, linear between.
pub fn billboard_opacity(distance: f64, d_near: f64, d_far: f64) -> f64 {
    ((distance - d_near) / (d_far - d_near)).clamp(0.0, 1.0)
}

/// Composites one quad per distant source over `frame`. The quad is centered
/// on the source, faces the camera, spans the visualization radius and is
/// shaded with that source's radial field; texels at the bottom of the range
/// stay clear. Quads are depth-tested against the frame but do not write
/// depth.
pub fn billboard_overlay(
    mut frame: Frame,
    shader: &Shader,
    camera: &Camera,
    d_near: f64,
    d_far: f64,
) -> Result<Frame> {
    if !(d_near < d_far) {
        return Err(Error::InvalidCamera(format!(
            "billboard fade needs d_near < d_far, got {d_near} and {d_far}"
        )));
    }
    let view = camera.view()?;
    if frame.width != camera.width || frame.height != camera.height {
        return Err(Error::InvalidCamera("frame size does not match camera".into()));
    }

    // far quads first so nearer ones composite on top
    let mut sources = shader.field().sources.clone();
    sources.sort_by(|a, b| {
        let da = a.position.distance(camera.position);
        let db = b.position.distance(camera.position);
        db.total_cmp(&da)
    });

    let (w, h) = (frame.width, frame.height);
    for source in sources {
        let distance = source.position.distance(camera.position);
        let opacity = billboard_opacity(distance, d_near, d_far);
        if opacity <= 0.0 {
            continue;
        }
        let normal = (camera.position - source.position).normalize();
        let right = view.up.cross(normal).try_normalize().unwrap_or(view.right);
        let up = normal.cross(right);
        let single = Shader::new(
            Field {
                sources: vec![source],
                range: shader.field().range,
            },
            *shader.spec(),
            shader.lut().clone(),
        )?;

        let rows: Vec<Result<Vec<Option<[u8; 3]>>>> = par::map_range(h as usize, |y| {
            let mut row = vec![None; w as usize];
            for (x, slot) in row.iter_mut().enumerate() {
                let px = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let dir = view.ray_dir(px);
                let denom = dir.dot(normal);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let t = (source.position - camera.position).dot(normal) / denom;
                if t <= 0.0 {
                    continue;
                }
                let hit = camera.position + dir * t;
                let local = hit - source.position;
                if local.dot(right).abs() > VISUALIZATION_RADIUS_M
                    || local.dot(up).abs() > VISUALIZATION_RADIUS_M
                {
                    continue;
                }
                let k = y * w as usize + x;
                let view_depth = (hit - camera.position).dot(view.forward);
                if view_depth >= frame.depth[k] {
                    continue;
                }
                if single.field().intensity(hit) <= 0.0 {
                    continue;
                }
                if let Some(mut shade) = single.shade(hit, normal)? {
                    shade.alpha *= opacity;
                    let [r, g, b, _] = frame.color[k];
                    *slot = Some(shade.over([r, g, b]));
                }
            }
            Ok(row)
        });
        for (y, row) in rows.into_iter().enumerate() {
            for (x, px) in row?.into_iter().enumerate() {
                if let Some([r, g, b]) = px {
                    frame.color[y * w as usize + x] = [r, g, b, 255];
                }
            }
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{ColorLut, EncodingKind, EncodingSpec};
    use crate::field::RadiationSource;
    use glam::DVec3;

    fn setup(distance: f64) -> (Frame, Shader, Camera) {
        let source = RadiationSource::new(DVec3::new(0.0, 0.0, distance), 1e-3).unwrap();
        let field = Field::new(vec![source], None).unwrap();
        let shader = Shader::new(field, EncodingSpec::new(EncodingKind::Continuous), ColorLut::viridis()).unwrap();
        let camera = Camera::new(DVec3::ZERO, DVec3::Z, 60.0, 32, 32);
        (Frame::new(32, 32, [128, 128, 128]), shader, camera)
    }

    #[test]
    fn opacity_ramp() {
        assert_eq!(billboard_opacity(10.0, 3.5, 5.0), 1.0);
        assert_eq!(billboard_opacity(2.0, 3.5, 5.0), 0.0);
        assert!((billboard_opacity(4.25, 3.5, 5.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn far_source_draws_quad() {
        let (frame, shader, cam) = setup(10.0);
        let out = billboard_overlay(frame, &shader, &cam, 3.5, 5.0).unwrap();
        let px = out.color[out.index(16, 16)];
        assert_ne!(px, [128, 128, 128, 255]);
        // outside the 2 m radius the quad stays clear
        assert_eq!(out.color[out.index(0, 0)], [128, 128, 128, 255]);
    }

    #[test]
    fn near_source_draws_nothing() {
        let (frame, shader, cam) = setup(2.0);
        let before = frame.clone();
        let out = billboard_overlay(frame, &shader, &cam, 3.5, 5.0).unwrap();
        assert_eq!(out.color, before.color);
    }

    #[test]
    fn occluded_quad_hidden() {
        let (mut frame, shader, cam) = setup(10.0);
        frame.depth.iter_mut().for_each(|d| *d = 1.0);
        let before = frame.clone();
        let out = billboard_overlay(frame, &shader, &cam, 3.5, 5.0).unwrap();
        assert_eq!(out.color, before.color);
    }

    #[test]
    fn fade_band_blends_halfway() {
        let (frame, shader, cam) = setup(10.0);
        let full = billboard_overlay(frame.clone(), &shader, &cam, 3.5, 5.0).unwrap();
        let half = billboard_overlay(frame, &shader, &cam, 9.5, 10.5).unwrap();
        let top = full.color[full.index(16, 16)];
        let px = half.color[half.index(16, 16)];
        for c in 0..3 {
            let expected = (0.5 * top[c] as f64 + 0.5 * 128.0).round() as u8;
            assert!((px[c] as i32 - expected as i32).abs() <= 1);
        }
    }

    #[test]
    fn rejects_inverted_fade() {
        let (frame, shader, cam) = setup(10.0);
        assert!(billboard_overlay(frame, &shader, &cam, 5.0, 3.5).is_err());
    }
}
