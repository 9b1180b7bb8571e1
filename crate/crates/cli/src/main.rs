//! `radshade` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glam::DVec3;

use radshade_core::encoding::{ColorLut, EncodingKind, EncodingSpec};
use radshade_core::exposure::{TrajectoryLog, TrialMeta};
use radshade_core::harness::pipeline::{self, SimulationConfig};
use radshade_core::harness::{generate_schedule, simulate_agent, Policy, Scene};
use radshade_core::render::{
    self, bake_floor_texture, billboard_overlay, panels, Camera, FloorRect, Shader, TriMesh,
};

type Fallible<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(name = "radshade", version, about = "Radiation field encodings: render, simulate, analyze")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a shaded mesh to PNG.
    Render {
        /// OBJ or JSON mesh; a synthetic room shell when omitted.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Triangle budget for the synthetic room.
        #[arg(long, default_value_t = 20_000)]
        triangles: usize,
        /// Bundled scene name or scene JSON path.
        #[arg(long, default_value = "scene_01")]
        scene: String,
        #[arg(long, default_value = "continuous")]
        encoding: EncodingKind,
        /// Camera JSON; a doorway view when omitted.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long, default_value_t = 1280)]
        width: u32,
        #[arg(long, default_value_t = 720)]
        height: u32,
        /// Overlay camera-facing quads for distant sources.
        #[arg(long)]
        billboards: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Bake the top-down floor texture of a scene.
    Bake {
        #[arg(long, default_value = "scene_01")]
        scene: String,
        #[arg(long, default_value = "continuous")]
        encoding: EncodingKind,
        /// Texels along x; z follows the room aspect.
        #[arg(long, default_value_t = 256)]
        texels: u32,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print or write a participant's trial schedule as JSON.
    Schedule {
        #[arg(long)]
        participant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate walkers. With `--policy`, one trajectory in `--scene`;
    /// with `--participants`, every main trial of each simulated participant.
    Simulate {
        #[arg(long, default_value = "scene_01")]
        scene: String,
        /// Policy JSON (inline or a file path).
        #[arg(long, conflicts_with = "participants")]
        policy: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        participants: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV for a single run, or a directory for a batch.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Compute per-trial metrics from trajectory CSVs and their sidecars.
    Metrics {
        /// Directory of trials, or one trajectory CSV.
        input: PathBuf,
        /// Scene for a lone CSV without a sidecar.
        #[arg(long)]
        scene: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the statistics battery over a metrics CSV.
    Analyze {
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Start the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Where finished trials are written.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Regenerate the reference encoding panels.
    Goldens {
        #[arg(long, short, default_value = "goldens")]
        out: PathBuf,
        #[arg(long, default_value_t = panels::PANEL_SIZE)]
        size: u32,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Fallible {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Standing in the entrance, looking toward the far corner.
fn doorway_camera(scene: &Scene, width: u32, height: u32) -> Camera {
    let door = scene.doors.entrance.midpoint();
    let room = &scene.room;
    Camera::new(
        DVec3::new(door.x + 0.4, 1.6, door.y),
        DVec3::new(room.width_m * 0.7, 0.6, room.length_m * 0.8),
        70.0,
        width,
        height,
    )
}

fn run(command: Command) -> Fallible {
    match command {
        Command::Render {
            mesh,
            triangles,
            scene,
            encoding,
            camera,
            width,
            height,
            billboards,
            out,
        } => {
            let scene = Scene::resolve(&scene)?;
            let mesh = match mesh {
                Some(p) => TriMesh::load(&p)?,
                None => TriMesh::synthetic_room(scene.room.width_m, scene.room.length_m, scene.room.height_m, triangles),
            };
            let camera = match camera {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                    serde_json::from_str::<Camera>(&text)?
                }
                None => doorway_camera(&scene, width, height),
            };
            let shader = Shader::new(scene.field()?, EncodingSpec::new(encoding), ColorLut::viridis())?;
            let mut frame = render::render(&mesh, &shader, &camera)?;
            if billboards {
                frame = billboard_overlay(
                    frame,
                    &shader,
                    &camera,
                    render::billboard::DEFAULT_FADE_NEAR_M,
                    render::billboard::DEFAULT_FADE_FAR_M,
                )?;
            }
            frame.save_png(&out)?;
        }
        Command::Bake {
            scene,
            encoding,
            texels,
            out,
        } => {
            let scene = Scene::resolve(&scene)?;
            let shader = Shader::new(scene.field()?, EncodingSpec::new(encoding), ColorLut::viridis())?;
            let h = (texels as f64 * scene.room.length_m / scene.room.width_m).round() as u32;
            let extent = FloorRect::new(0.0, 0.0, scene.room.width_m, scene.room.length_m);
            render::save_png(&bake_floor_texture(&shader, extent, texels, h)?, &out)?;
        }
        Command::Schedule { participant, seed, out } => {
            let schedule = generate_schedule(&participant, seed);
            write_text(out.as_deref(), &schedule.to_json()?)?;
        }
        Command::Simulate {
            scene,
            policy,
            step,
            participants,
            seed,
            out,
        } => match (policy, participants) {
            (Some(policy), None) => {
                let scene = Scene::resolve(&scene)?;
                let text = if Path::new(&policy).is_file() {
                    std::fs::read_to_string(&policy)?
                } else {
                    policy
                };
                let policy: Policy = serde_json::from_str(&text)?;
                simulate_agent(&scene, &policy, step)?.save(&out)?;
            }
            (None, Some(n)) => {
                let cfg = SimulationConfig {
                    step_s: step,
                    ..SimulationConfig::default()
                };
                let trials = pipeline::simulate_batch(&pipeline::participant_ids(n), seed, &cfg)?;
                pipeline::write_trials(&out, &trials)?;
            }
            _ => return Err("simulate needs either --policy or --participants".into()),
        },
        Command::Metrics { input, scene, out } => {
            let rows = if input.is_dir() {
                pipeline::metrics_from_dir(&input)?
            } else {
                let log = TrajectoryLog::load(&input)?;
                let sidecar = input.with_extension("json");
                let meta = if sidecar.exists() {
                    TrialMeta::load(&sidecar)?
                } else {
                    let scene = scene.ok_or("no sidecar next to the CSV; pass --scene")?;
                    TrialMeta {
                        participant: String::new(),
                        block: 0,
                        trial: 0,
                        scene,
                        encoding: String::new(),
                    }
                };
                vec![pipeline::metrics_row(&meta, &log)?]
            };
            pipeline::save_metrics(&rows, &out)?;
        }
        Command::Analyze { input, out } => {
            let report = pipeline::analyze(&pipeline::load_metrics(&input)?)?;
            write_text(out.as_deref(), &report.to_json()?)?;
        }
        Command::Serve { addr, data_dir } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let config = radshade_service::ServiceConfig {
                data_dir,
                ..Default::default()
            };
            tokio::runtime::Runtime::new()?.block_on(radshade_service::serve(addr, config))?;
        }
        Command::Goldens { out, size } => {
            std::fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for (kind, frame) in panels::all_panels(size)? {
                frame.save_png(&out.join(panels::panel_file_name(kind)))?;
            }
        }
    }
    Ok(())
}
