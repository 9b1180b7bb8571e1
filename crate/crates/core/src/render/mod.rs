//! Software renderer for field-shaded meshes.

pub mod bake;
pub mod billboard;
pub mod camera;
pub mod mesh;
pub mod panels;
pub mod raster;
pub mod shade;

use std::path::Path;

use image::{GrayImage, RgbaImage};

pub use bake::{bake_floor_texture, FloorRect};
pub use billboard::{billboard_opacity, billboard_overlay};
pub use camera::Camera;
pub use mesh::TriMesh;
pub use raster::{render, render_with, RenderOptions};
pub use shade::{shade_fragment, Shader};

use crate::encoding::{self, ColorLut, EncodingSpec};
use crate::error::{Error, Result};

/// Color and depth output of one render.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGBA8, top row first.
    pub color: Vec<[u8; 4]>,
    /// View-space depth in meters; infinite where nothing was hit.
    pub depth: Vec<f64>,
}

impl Frame {
    pub fn new(width: u32, height: u32, background: [u8; 3]) -> Self {
        let n = (width * height) as usize;
        let [r, g, b] = background;
        Frame {
            width,
            height,
            color: vec![[r, g, b, 255]; n],
            depth: vec![f64::INFINITY; n],
        }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn to_image(&self) -> RgbaImage {
        let raw: Vec<u8> = self.color.iter().flatten().copied().collect();
        RgbaImage::from_raw(self.width, self.height, raw).expect("buffer matches size")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        save_png(&self.to_image(), path)
    }
}

pub fn save_png(img: &RgbaImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other),
        })
}

pub fn save_gray_png(img: &GrayImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other),
        })
}

/// Encodes an image as PNG bytes in memory.
pub fn png_bytes(img: &RgbaImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn gray_png_bytes(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Horizontal color legend, low intensity on the left.
pub fn legend_strip(spec: &EncodingSpec, lut: &ColorLut, width: u32, height: u32) -> Result<RgbaImage> {
    spec.validate()?;
    let row: Vec<[u8; 4]> = (0..width)
        .map(|i| {
            let u = if width > 1 {
                i as f64 / (width - 1) as f64
            } else {
                0.0
            };
            encoding::shade_color(u, spec, lut).map(|s| s.to_rgba8())
        })
        .collect::<Result<_>>()?;
    Ok(RgbaImage::from_fn(width, height, |x, _| image::Rgba(row[x as usize])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodingKind;

    #[test]
    fn legend_ends() {
        let lut = ColorLut::viridis();
        let img = legend_strip(&EncodingKind::Continuous.into(), &lut, 256, 4).unwrap();
        assert_eq!(img.get_pixel(0, 0).0, lut.entries()[0]);
        assert_eq!(img.get_pixel(255, 3).0, lut.entries()[255]);
        let banded = legend_strip(&EncodingKind::Banded.into(), &lut, 256, 1).unwrap();
        let mut distinct: Vec<[u8; 4]> = banded.pixels().map(|p| p.0).collect();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn png_round_trip() {
        let f = Frame::new(16, 16, [1, 2, 3]);
        let bytes = png_bytes(&f.to_image()).unwrap();
        let back = image::load_from_memory(&bytes).unwrap().to_rgba8();
        assert_eq!(back.get_pixel(3, 3).0, [1, 2, 3, 255]);
    }
}
