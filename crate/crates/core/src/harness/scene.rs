//! Experiment room layouts.
//!
//! Floor coordinates are `(x, z)` in meters with `y` up. The room spans
//! `x ∈ [0, width]` and `z ∈ [0, length]`; the partition is a segment on the
//! line `z = partition_z` from `x_min` to `x_max`, leaving a walkable gap on
//! each side. "Left" is the `x < midline` side, i.e. the side of the door
//! wall in the bundled layouts.

use std::path::Path;

use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, IntensityRange, RadiationSource};

pub const SOURCES_PER_SCENE: usize = 3;
/// Narrowest gap beside the partition that still counts as walkable.
pub const MIN_GAP_M: f64 = 0.6;
pub const MIN_DOOR_WIDTH_M: f64 = 0.5;

pub const MAIN_SCENES: [&str; 5] = ["scene_01", "scene_02", "scene_03", "scene_04", "scene_05"];
pub const TRAINING_SCENE: &str = "scene_training";

const BUNDLED: [(&str, &str); 6] = [
    ("scene_01", include_str!("../../scenes/scene_01.json")),
    ("scene_02", include_str!("../../scenes/scene_02.json")),
    ("scene_03", include_str!("../../scenes/scene_03.json")),
    ("scene_04", include_str!("../../scenes/scene_04.json")),
    ("scene_05", include_str!("../../scenes/scene_05.json")),
    ("scene_training", include_str!("../../scenes/scene_training.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub z_m: f64,
    pub x_min_m: f64,
    pub x_max_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width_m: f64,
    pub length_m: f64,
    pub height_m: f64,
    pub partition: Partition,
}

impl Room {
    /// Inclusive floor-rectangle test.
    #[inline]
    pub fn contains(&self, p: DVec2) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.length_m).contains(&p.y)
    }

    pub fn contains_3d(&self, p: DVec3) -> bool {
        self.contains(DVec2::new(p.x, p.z)) && (0.0..=self.height_m).contains(&p.y)
    }

    pub fn clamp(&self, p: DVec2) -> DVec2 {
        p.clamp(DVec2::ZERO, DVec2::new(self.width_m, self.length_m))
    }

    #[inline]
    pub fn partition_z_m(&self) -> f64 {
        self.partition.z_m
    }

    pub fn partition_midline_x(&self) -> f64 {
        0.5 * (self.partition.x_min_m + self.partition.x_max_m)
    }

    /// Floor point in the middle of the gap on `side`, on the partition line.
    pub fn gap_center(&self, side: Side) -> DVec2 {
        let x = match side {
            Side::Left => 0.5 * self.partition.x_min_m,
            Side::Right => 0.5 * (self.partition.x_max_m + self.width_m),
        };
        DVec2::new(x, self.partition.z_m)
    }

    /// True when the floor segment `a -> b` passes through the partition.
    pub fn segment_hits_partition(&self, a: DVec2, b: DVec2) -> bool {
        let zp = self.partition.z_m;
        let (da, db) = (a.y - zp, b.y - zp);
        if da == 0.0 && db == 0.0 {
            let (lo, hi) = (a.x.min(b.x), a.x.max(b.x));
            return hi >= self.partition.x_min_m && lo <= self.partition.x_max_m;
        }
        if da * db > 0.0 {
            return false;
        }
        let x = a.x + (b.x - a.x) * (da / (da - db));
        x >= self.partition.x_min_m && x <= self.partition.x_max_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoorSegment {
    /// Floor endpoints `(x, z)`.
    pub a: DVec2,
    pub b: DVec2,
}

impl DoorSegment {
    pub fn midpoint(&self) -> DVec2 {
        0.5 * (self.a + self.b)
    }

    pub fn width(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn contains(&self, p: DVec2, tol: f64) -> bool {
        let ab = self.b - self.a;
        let t = ((p - self.a).dot(ab) / ab.length_squared()).clamp(0.0, 1.0);
        (self.a + ab * t).distance(p) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doors {
    pub entrance: DoorSegment,
    pub exit: DoorSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Wall {
    West,
    East,
    South,
    North,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    /// False for reconstructed layouts that do not reproduce a published one.
    #[serde(default)]
    pub canonical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub room: Room,
    pub doors: Doors,
    pub sources: Vec<RadiationSource>,
    pub table_anchor: DVec3,
    #[serde(default)]
    pub higher_exposure_side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_range: Option<IntensityRange>,
}

impl Scene {
    /// Parses without validating.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads and validates a scene file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)?.checked()
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownScene(name.to_owned()))?;
        Self::from_json(text)?.checked()
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    /// Bundled name, or else a path to a scene file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if BUNDLED.iter().any(|(n, _)| *n == name_or_path) {
            Self::builtin(name_or_path)
        } else if Path::new(name_or_path).exists() {
            Self::load(Path::new(name_or_path))
        } else {
            Err(Error::UnknownScene(name_or_path.to_owned()))
        }
    }

    pub fn checked(self) -> Result<Self> {
        let problems = self.validate();
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidScene {
                name: self.name,
                problems,
            })
        }
    }

    pub fn field(&self) -> Result<Field> {
        Field::new(self.sources.clone(), self.intensity_range)
    }

    pub fn table_floor(&self) -> DVec2 {
        DVec2::new(self.table_anchor.x, self.table_anchor.z)
    }

    /// Lists every violated invariant; empty when the scene is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let room = &self.room;
        let finite = [room.width_m, room.length_m, room.height_m, room.partition.z_m, room.partition.x_min_m, room.partition.x_max_m]
            .iter()
            .all(|v| v.is_finite());
        if !finite || room.width_m <= 0.0 || room.length_m <= 0.0 || room.height_m <= 0.0 {
            problems.push("room dimensions must be positive and finite".to_owned());
            return problems;
        }

        let p = room.partition;
        if !(p.z_m > 0.0 && p.z_m < room.length_m) {
            problems.push(format!("partition line z = {} lies outside the room", p.z_m));
        }
        if !(p.x_min_m < p.x_max_m) {
            problems.push("partition segment is empty".to_owned());
        }
        if p.x_min_m < MIN_GAP_M {
            problems.push(format!("left gap {:.2} m is narrower than {MIN_GAP_M} m", p.x_min_m));
        }
        if room.width_m - p.x_max_m < MIN_GAP_M {
            problems.push(format!(
                "right gap {:.2} m is narrower than {MIN_GAP_M} m",
                room.width_m - p.x_max_m
            ));
        }

        if self.sources.len() != SOURCES_PER_SCENE {
            problems.push(format!(
                "expected {SOURCES_PER_SCENE} sources, found {}",
                self.sources.len()
            ));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if let Err(e) = s.validate() {
                problems.push(format!("source {i}: {e}"));
            } else if !room.contains_3d(s.position) {
                problems.push(format!("source {i} at {} is outside the room", s.position));
            }
        }
        if !self.table_anchor.is_finite() || !room.contains_3d(self.table_anchor) {
            problems.push(format!("table anchor {} is outside the room", self.table_anchor));
        }
        if let Some(r) = &self.intensity_range {
            if let Err(e) = r.validate() {
                problems.push(e.to_string());
            }
        }

        let walls = [("entrance", self.doors.entrance), ("exit", self.doors.exit)].map(|(label, d)| {
            let wall = self.door_wall(&d);
            if wall.is_none() {
                problems.push(format!("{label} door does not lie on a wall"));
            }
            if d.width() < MIN_DOOR_WIDTH_M {
                problems.push(format!("{label} door is narrower than {MIN_DOOR_WIDTH_M} m"));
            }
            wall
        });
        if let [Some(a), Some(b)] = walls {
            if a != b {
                problems.push("entrance and exit doors are on different walls".to_owned());
            } else {
                let (ea, eb) = (self.door_along(a, &self.doors.entrance), self.door_along(a, &self.doors.exit));
                let (lo, hi) = (ea.0.max(eb.0), ea.1.min(eb.1));
                if lo <= hi {
                    problems.push("entrance and exit doors overlap".to_owned());
                }
                if matches!(a, Wall::West | Wall::East) {
                    let (za, zb) = (self.doors.entrance.midpoint().y, self.doors.exit.midpoint().y);
                    if (za - p.z_m) * (zb - p.z_m) >= 0.0 {
                        problems.push("doors must sit at opposite ends of the partition".to_owned());
                    }
                }
            }
        }
        problems
    }

    fn door_wall(&self, d: &DoorSegment) -> Option<Wall> {
        const EPS: f64 = 1e-9;
        let (w, l) = (self.room.width_m, self.room.length_m);
        let on = |v: f64, target: f64| (v - target).abs() <= EPS;
        let within = |v: f64, hi: f64| (-EPS..=hi + EPS).contains(&v);
        if on(d.a.x, 0.0) && on(d.b.x, 0.0) && within(d.a.y, l) && within(d.b.y, l) {
            Some(Wall::West)
        } else if on(d.a.x, w) && on(d.b.x, w) && within(d.a.y, l) && within(d.b.y, l) {
            Some(Wall::East)
        } else if on(d.a.y, 0.0) && on(d.b.y, 0.0) && within(d.a.x, w) && within(d.b.x, w) {
            Some(Wall::South)
        } else if on(d.a.y, l) && on(d.b.y, l) && within(d.a.x, w) && within(d.b.x, w) {
            Some(Wall::North)
        } else {
            None
        }
    }

    fn door_along(&self, wall: Wall, d: &DoorSegment) -> (f64, f64) {
        let (a, b) = match wall {
            Wall::West | Wall::East => (d.a.y, d.b.y),
            Wall::South | Wall::North => (d.a.x, d.b.x),
        };
        (a.min(b), a.max(b))
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    Scene::load(path)
}

pub fn validate_scene(scene: &Scene) -> Vec<String> {
    scene.validate()
}
