use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NEAR_PLANE_M: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: DVec3,
    pub look_at: DVec3,
    pub up: DVec3,
    /// Vertical field of view, degrees.
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

/// Orthonormal view frame derived from a [`Camera`].
#[derive(Debug, Clone, Copy)]
pub struct View {
    pub position: DVec3,
    pub right: DVec3,
    pub up: DVec3,
    pub forward: DVec3,
    /// Focal length in pixels.
    pub focal: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(position: DVec3, look_at: DVec3, fov_deg: f64, width: u32, height: u32) -> Self {
        Camera {
            position,
            look_at,
            up: DVec3::Y,
            fov_deg,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 10.0 && self.fov_deg < 120.0) {
            return Err(Error::InvalidCamera(format!(
                "field of view {} outside (10, 120) degrees",
                self.fov_deg
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidCamera(format!(
                "resolution {}x{} below 16x16",
                self.width, self.height
            )));
        }
        let forward = self.look_at - self.position;
        if !(forward.length() > 1e-9) {
            return Err(Error::InvalidCamera("look_at equals position".into()));
        }
        if forward.normalize().cross(self.up).length() < 1e-9 {
            return Err(Error::InvalidCamera("up is parallel to view direction".into()));
        }
        Ok(())
    }

    pub fn view(&self) -> Result<View> {
        self.validate()?;
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(self.up).normalize();
        let up = right.cross(forward);
        let focal = 0.5 * self.height as f64 / (0.5 * self.fov_deg.to_radians()).tan();
        Ok(View {
            position: self.position,
            right,
            up,
            forward,
            focal,
            width: self.width,
            height: self.height,
        })
    }
}

impl View {
    /// View-space coordinates: x right, y up, z along the view direction.
    #[inline]
    pub fn to_view(&self, p: DVec3) -> DVec3 {
        let d = p - self.position;
        DVec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// Pixel coordinates of a view-space point with z > 0. Pixel centers sit
    /// at half-integers.
    #[inline]
    pub fn project(&self, v: DVec3) -> DVec2 {
        DVec2::new(
            0.5 * self.width as f64 + self.focal * v.x / v.z,
            0.5 * self.height as f64 - self.focal * v.y / v.z,
        )
    }

    /// World-space direction of the ray through pixel coordinates `px`.
    #[inline]
    pub fn ray_dir(&self, px: DVec2) -> DVec3 {
        let x = (px.x - 0.5 * self.width as f64) / self.focal;
        let y = (0.5 * self.height as f64 - px.y) / self.focal;
        (self.forward + self.right * x + self.up * y).normalize()
    }
}
