use glam::DVec3;
use image::RgbaImage;
use serde::{Deserialize, Serialize};

use super::shade::Shader;
use crate::error::{Error, Result};
use crate::par;

pub const MIN_BAKE_TEXELS: u32 = 64;

/// Axis-aligned floor rectangle in meters (x east, z north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorRect {
    pub x_min: f64,
    pub z_min: f64,
    pub x_max: f64,
    pub z_max: f64,
}

impl FloorRect {
    pub fn new(x_min: f64, z_min: f64, x_max: f64, z_max: f64) -> Self {
        FloorRect {
            x_min,
            z_min,
            x_max,
            z_max,
        }
    }

    /// World position of texel `(i, j)`'s center. Row 0 is the north edge.
    #[inline]
    pub fn texel_center(&self, i: u32, j: u32, width: u32, height: u32) -> DVec3 {
        let x = self.x_min + (i as f64 + 0.5) / width as f64 * (self.x_max - self.x_min);
        let z = self.z_max - (j as f64 + 0.5) / height as f64 * (self.z_max - self.z_min);
        DVec3::new(x, 0.0, z)
    }
}

/// Orthographic top-down shading of the floor plane `y = 0`. Texels the
/// stencil rejects are fully transparent; shaded texels carry the encoding's
/// opacity in alpha.
pub fn bake_floor_texture(
    shader: &Shader,
    extent: FloorRect,
    width: u32,
    height: u32,
) -> Result<RgbaImage> {
    if width < MIN_BAKE_TEXELS || height < MIN_BAKE_TEXELS {
        return Err(Error::InvalidCamera(format!(
            "bake needs at least {MIN_BAKE_TEXELS}x{MIN_BAKE_TEXELS} texels, got {width}x{height}"
        )));
    }
    if !(extent.x_max > extent.x_min && extent.z_max > extent.z_min) {
        return Err(Error::InvalidCamera("empty bake extent".into()));
    }
    let rows: Vec<Result<Vec<[u8; 4]>>> = par::map_range(height as usize, |j| {
        (0..width)
            .map(|i| {
                let p = extent.texel_center(i, j as u32, width, height);
                Ok(match shader.shade(p, DVec3::Y)? {
                    Some(s) => s.to_rgba8(),
                    None => [0, 0, 0, 0],
                })
            })
            .collect()
    });
    let mut img = RgbaImage::new(width, height);
    for (j, row) in rows.into_iter().enumerate() {
        for (i, px) in row?.into_iter().enumerate() {
            img.put_pixel(i as u32, j as u32, image::Rgba(px));
        }
    }
    Ok(img)
}
