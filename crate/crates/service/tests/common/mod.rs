#![allow(dead_code)]

use glam::DVec2;
use radshade_core::harness::agent::WALK_SPEED_M_S;
use radshade_core::harness::{Scene, Side};

pub const DT: f64 = 0.1;

/// Floor goals for one trial: through the left gap to the table, then out.
pub fn goals(scene: &Scene) -> (Vec<DVec2>, Vec<DVec2>) {
    let gap = scene.room.gap_center(Side::Left);
    (vec![gap, scene.table_floor()], vec![scene.doors.exit.midpoint()])
}

/// Next intent that heads for `goal` without overshooting, or `None` once
/// there.
pub fn steer(position: DVec2, goal: DVec2) -> Option<DVec2> {
    let d = goal - position;
    let step = WALK_SPEED_M_S * DT;
    if d.length() < 1e-9 {
        None
    } else if d.length() <= step {
        Some(d / step)
    } else {
        Some(d.normalize())
    }
}
