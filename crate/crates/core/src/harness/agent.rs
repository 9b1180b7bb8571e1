//! Synthetic walkers that produce trajectory logs without a human in the
//! loop. Both policies walk entrance → table → exit at a fixed speed and log
//! a sample every `step_s` seconds (plus one at the final arrival).

use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use super::scene::{Scene, Side};
use crate::error::{Error, Result};
use crate::exposure::{compute_metrics, TrajectoryLog, TrajectorySample};
use crate::field::Field;

pub const WALK_SPEED_M_S: f64 = 1.4;
/// Height at which walkers carry the dosimeter.
pub const AGENT_HEIGHT_M: f64 = 1.6;
pub const MIN_STEP_S: f64 = 0.02;
pub const MAX_STEP_S: f64 = 0.5;
pub const AGENT_TIMEOUT_S: f64 = 300.0;
/// Largest sideways push relative to the unit forward direction.
pub const MAX_LATERAL: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub z: f64,
    #[serde(default)]
    pub dwell_s: f64,
}

impl Waypoint {
    pub fn new(p: DVec2, dwell_s: f64) -> Self {
        Waypoint {
            x: p.x,
            z: p.y,
            dwell_s,
        }
    }

    pub fn floor(&self) -> DVec2 {
        DVec2::new(self.x, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Straight legs between the listed floor points.
    Waypoint { waypoints: Vec<Waypoint> },
    /// Heads for each goal in turn while sliding away from rising dose.
    GradientAvoider {
        /// Floor point to dwell at; the table anchor when absent.
        #[serde(default)]
        target: Option<DVec2>,
        gain: f64,
        #[serde(default)]
        dwell_s: f64,
        /// Gap to pass through; the one with the lower straight-route dose
        /// when absent.
        #[serde(default)]
        side: Option<Side>,
    },
}

impl Policy {
    /// Straight route entrance → gap on `side` → table (dwell) → exit. The
    /// gap is passed again on the way out when table and exit lie on
    /// opposite sides of the partition.
    pub fn route(scene: &Scene, side: Side, dwell_s: f64) -> Policy {
        Self::route_to(scene, side, scene.table_floor(), dwell_s)
    }

    /// As [`Policy::route`] with an arbitrary floor target in place of the
    /// table.
    pub fn route_to(scene: &Scene, side: Side, target: DVec2, dwell_s: f64) -> Policy {
        let gap = Waypoint::new(scene.room.gap_center(side), 0.0);
        let mut waypoints = vec![
            Waypoint::new(scene.doors.entrance.midpoint(), 0.0),
            gap,
            Waypoint::new(target, dwell_s),
        ];
        if needs_return_pass(scene, target) {
            waypoints.push(gap);
        }
        waypoints.push(Waypoint::new(scene.doors.exit.midpoint(), 0.0));
        Policy::Waypoint { waypoints }
    }

    pub fn avoider(gain: f64, dwell_s: f64) -> Policy {
        Policy::GradientAvoider {
            target: None,
            gain,
            dwell_s,
            side: None,
        }
    }
}

fn needs_return_pass(scene: &Scene, target: DVec2) -> bool {
    let zp = scene.room.partition.z_m;
    (target.y - zp) * (scene.doors.exit.midpoint().y - zp) < 0.0
}

pub fn simulate_agent(scene: &Scene, policy: &Policy, step_s: f64) -> Result<TrajectoryLog> {
    if !(MIN_STEP_S..=MAX_STEP_S).contains(&step_s) {
        return Err(Error::InvalidPolicy(format!(
            "step {step_s} s outside [{MIN_STEP_S}, {MAX_STEP_S}]"
        )));
    }
    match policy {
        Policy::Waypoint { waypoints } => walk_waypoints(scene, waypoints, step_s),
        Policy::GradientAvoider {
            target,
            gain,
            dwell_s,
            side,
        } => {
            if !(gain.is_finite() && *gain >= 0.0) {
                return Err(Error::InvalidPolicy(format!("gain must be nonnegative, got {gain}")));
            }
            check_dwell(*dwell_s)?;
            let target = target.unwrap_or_else(|| scene.table_floor());
            if !scene.room.contains(target) {
                return Err(Error::InvalidPolicy(format!("target {target} is outside the room")));
            }
            let side = match side {
                Some(s) => *s,
                None => lower_dose_side(scene, target, *dwell_s, step_s)?,
            };
            avoid(scene, target, *gain, *dwell_s, side, step_s)
        }
    }
}

fn check_dwell(dwell_s: f64) -> Result<()> {
    if dwell_s.is_finite() && dwell_s >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(format!("dwell must be nonnegative, got {dwell_s}")))
    }
}

fn at_height(p: DVec2) -> DVec3 {
    DVec3::new(p.x, AGENT_HEIGHT_M, p.y)
}

fn walk_waypoints(scene: &Scene, waypoints: &[Waypoint], step_s: f64) -> Result<TrajectoryLog> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidPolicy("a route needs at least 2 waypoints".into()));
    }
    for (i, w) in waypoints.iter().enumerate() {
        check_dwell(w.dwell_s)?;
        if !scene.room.contains(w.floor()) {
            return Err(Error::InvalidPolicy(format!("waypoint {i} is outside the room")));
        }
    }
    for (i, pair) in waypoints.windows(2).enumerate() {
        if scene.room.segment_hits_partition(pair[0].floor(), pair[1].floor()) {
            return Err(Error::InvalidPolicy(format!("leg {i} runs through the partition")));
        }
    }

    // piecewise-linear timeline of (time, floor point)
    let mut keys: Vec<(f64, DVec2)> = vec![(0.0, waypoints[0].floor())];
    let mut t = 0.0;
    for (i, w) in waypoints.iter().enumerate() {
        if i > 0 {
            let len = waypoints[i - 1].floor().distance(w.floor());
            if len > 0.0 {
                t += len / WALK_SPEED_M_S;
                keys.push((t, w.floor()));
            }
        }
        if w.dwell_s > 0.0 {
            t += w.dwell_s;
            keys.push((t, w.floor()));
        }
    }
    let total = t;
    if total <= 0.0 {
        return Err(Error::InvalidPolicy("route has zero length and no dwell".into()));
    }

    let at = |t: f64| -> DVec2 {
        let k = keys.partition_point(|(kt, _)| *kt <= t);
        if k == 0 {
            return keys[0].1;
        }
        if k == keys.len() {
            return keys[k - 1].1;
        }
        let (t0, a) = keys[k - 1];
        let (t1, b) = keys[k];
        a.lerp(b, (t - t0) / (t1 - t0))
    };

    let mut samples = Vec::new();
    let mut k = 0u64;
    loop {
        let tk = k as f64 * step_s;
        if tk >= total - 1e-9 {
            break;
        }
        samples.push(TrajectorySample::new(tk, at_height(at(tk))));
        k += 1;
    }
    samples.push(TrajectorySample::new(total, at_height(keys[keys.len() - 1].1)));
    TrajectoryLog::new(samples)
}

pub fn lower_dose_side(scene: &Scene, target: DVec2, dwell_s: f64, step_s: f64) -> Result<Side> {
    let mut best = (Side::Left, f64::INFINITY);
    for side in Side::BOTH {
        let policy = Policy::route_to(scene, side, target, dwell_s);
        let log = simulate_agent(scene, &policy, step_s)?;
        let dose = compute_metrics(&log, scene)?.cumulative_dose;
        if dose < best.1 {
            best = (side, dose);
        }
    }
    Ok(best.0)
}

/// Sideways component of `−∇ln(dose rate)` relative to the unit forward
/// direction `f`, scaled by `gain` and capped at [`MAX_LATERAL`].
fn lateral_push(field: &Field, p: DVec2, f: DVec2, gain: f64) -> DVec2 {
    let q = at_height(p);
    let g = field.gradient(q) / field.dose_rate(q);
    let away = -DVec2::new(g.x, g.z);
    let lateral = (away - away.dot(f) * f) * gain;
    let len = lateral.length();
    if len > MAX_LATERAL {
        lateral * (MAX_LATERAL / len)
    } else {
        lateral
    }
}

fn avoid(scene: &Scene, target: DVec2, gain: f64, dwell_s: f64, side: Side, step_s: f64) -> Result<TrajectoryLog> {
    let field = scene.field()?;
    let room = &scene.room;
    let mut goals = vec![(room.gap_center(side), 0.0), (target, dwell_s)];
    if needs_return_pass(scene, target) {
        goals.push((room.gap_center(side), 0.0));
    }
    goals.push((scene.doors.exit.midpoint(), 0.0));

    let mut p = scene.doors.entrance.midpoint();
    let mut t = 0.0;
    let mut samples = vec![TrajectorySample::new(0.0, at_height(p))];
    let step = WALK_SPEED_M_S * step_s;
    for (goal, dwell) in goals {
        while p != goal {
            if t >= AGENT_TIMEOUT_S {
                return Err(Error::Blocked(AGENT_TIMEOUT_S));
            }
            let to = goal - p;
            let dist = to.length();
            let mut next = if dist <= step {
                goal
            } else {
                let f = to / dist;
                let dir = (f + lateral_push(&field, p, f, gain)).normalize();
                let cand = room.clamp(p + dir * step);
                if room.segment_hits_partition(p, cand) {
                    p + f * step
                } else {
                    cand
                }
            };
            if room.segment_hits_partition(p, next) {
                next = p;
            }
            p = next;
            t += step_s;
            samples.push(TrajectorySample::new(t, at_height(p)));
        }
        let mut remaining = dwell;
        while remaining > 1e-9 {
            let h = remaining.min(step_s);
            t += h;
            remaining -= h;
            samples.push(TrajectorySample::new(t, at_height(p)));
        }
    }
    TrajectoryLog::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(name: &str) -> Scene {
        Scene::builtin(name).unwrap()
    }

    #[test]
    fn step_bounds() {
        let s = scene("scene_01");
        let p = Policy::route(&s, Side::Left, 0.0);
        assert!(simulate_agent(&s, &p, 0.01).is_err());
        assert!(simulate_agent(&s, &p, 0.6).is_err());
        assert!(simulate_agent(&s, &p, 0.02).is_ok());
        assert!(simulate_agent(&s, &p, 0.5).is_ok());
    }

    #[test]
    fn route_endpoints_on_doors() {
        for name in Scene::builtin_names() {
            let s = scene(name);
            for side in Side::BOTH {
                let log = simulate_agent(&s, &Policy::route(&s, side, 2.0), 0.1).unwrap();
                let first = log.samples.first().unwrap();
                let last = log.samples.last().unwrap();
                assert!(s.doors.entrance.contains(first.floor(), 1e-9));
                assert!(s.doors.exit.contains(last.floor(), 1e-9));
                assert!(log.samples.iter().all(|x| s.room.contains(x.floor())));
            }
        }
    }

    #[test]
    fn waypoint_speed_and_dwell() {
        let s = scene("scene_05");
        let a = DVec2::new(0.5, 1.0);
        let b = DVec2::new(0.5, 3.8);
        let p = Policy::Waypoint {
            waypoints: vec![Waypoint::new(a, 0.0), Waypoint::new(b, 1.0)],
        };
        let log = simulate_agent(&s, &p, 0.1).unwrap();
        let expected = 2.8 / WALK_SPEED_M_S + 1.0;
        assert!((log.duration() - expected).abs() < 1e-12);
        assert!((log.samples[1].t - 0.1).abs() < 1e-15);
        let moved = log.samples[1].floor().distance(a);
        assert!((moved - 0.14).abs() < 1e-12);
    }

    #[test]
    fn route_through_partition_rejected() {
        let s = scene("scene_01");
        let p = Policy::Waypoint {
            waypoints: vec![Waypoint::new(DVec2::new(2.0, 1.0), 0.0), Waypoint::new(DVec2::new(2.0, 7.0), 0.0)],
        };
        assert!(matches!(simulate_agent(&s, &p, 0.1), Err(Error::InvalidPolicy(_))));
    }

    #[test]
    fn designated_side_is_worse_for_straight_routes() {
        for name in super::super::scene::MAIN_SCENES {
            let s = scene(name);
            let Some(worse) = s.higher_exposure_side else {
                continue;
            };
            let dose = |side| {
                let log = simulate_agent(&s, &Policy::route(&s, side, 3.0), 0.05).unwrap();
                compute_metrics(&log, &s).unwrap().cumulative_dose
            };
            assert!(dose(worse) > dose(worse.other()), "{name}");
        }
    }

    #[test]
    fn avoider_beats_straight_route() {
        let s = scene("scene_01");
        let straight = simulate_agent(&s, &Policy::route(&s, Side::Left, 2.0), 0.05).unwrap();
        let avoid = Policy::GradientAvoider {
            target: None,
            gain: 0.5,
            dwell_s: 2.0,
            side: Some(Side::Left),
        };
        let dodged = simulate_agent(&s, &avoid, 0.05).unwrap();
        let a = compute_metrics(&straight, &s).unwrap().cumulative_dose;
        let b = compute_metrics(&dodged, &s).unwrap().cumulative_dose;
        assert!(b < a, "{b} !< {a}");
        assert!(dodged.samples.iter().all(|x| s.room.contains(x.floor())));
        assert!(s.doors.exit.contains(dodged.samples.last().unwrap().floor(), 1e-9));
    }

    #[test]
    fn avoider_picks_lower_dose_gap() {
        let s = scene("scene_01");
        let log = simulate_agent(&s, &Policy::avoider(0.0, 1.0), 0.05).unwrap();
        let side = crate::exposure::path_side(&log, &s).unwrap().side;
        assert_eq!(Some(side.other()), s.higher_exposure_side);
    }

    #[test]
    fn unreachable_target_blocks() {
        let s = scene("scene_02");
        let p = Policy::GradientAvoider {
            target: Some(DVec2::new(s.room.partition_midline_x(), s.room.partition.z_m)),
            gain: 0.2,
            dwell_s: 0.0,
            side: Some(Side::Left),
        };
        assert!(matches!(simulate_agent(&s, &p, 0.5), Err(Error::Blocked(_))));
    }

    #[test]
    fn halving_step_barely_changes_dose() {
        let s = scene("scene_03");
        let p = Policy::route(&s, Side::Right, 2.5);
        let a = compute_metrics(&simulate_agent(&s, &p, 0.1).unwrap(), &s).unwrap().cumulative_dose;
        let b = compute_metrics(&simulate_agent(&s, &p, 0.05).unwrap(), &s).unwrap().cumulative_dose;
        assert!(((a - b) / b).abs() < 1e-3);
    }

    #[test]
    fn policy_json() {
        let p: Policy = serde_json::from_str(r#"{"kind":"gradient_avoider","gain":0.4,"dwell_s":2}"#).unwrap();
        assert_eq!(p, Policy::avoider(0.4, 2.0));
        let w: Policy = serde_json::from_str(r#"{"kind":"waypoint","waypoints":[{"x":0,"z":1},{"x":1,"z":1,"dwell_s":1}]}"#).unwrap();
        assert!(matches!(w, Policy::Waypoint { waypoints } if waypoints.len() == 2));
    }
}
