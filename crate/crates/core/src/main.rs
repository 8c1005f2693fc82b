use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use photostereo::experiments::{
    ambient_sweep, emit_sweep_csv, phase_angle_sweep, sweep_svg, SweepResult, SweepSettings,
};
use photostereo::integrate::{
    depth_to_mesh, integrate_with, normals_to_gradients, IntegrationSettings,
};
use photostereo::io::pgm::mask_image;
use photostereo::io::planes::{map_to_planes, planes_to_map, Planes};
use photostereo::io::{
    load_config, load_planes, load_stack, save_pgm, save_planes, save_ply, save_stack,
    ProjectConfig,
};
use photostereo::panel::{
    operating_distance, ring_directions_at, solve_configuration, uniform_azimuths,
};
use photostereo::render::render_stack;
use photostereo::solver::{angular_error_map, solve_stack_with, subtract_ambient};
use photostereo::{Execution, UnitVector3};

#[derive(Parser)]
#[command(name = "photostereo", version, about = "Photometric stereo toolkit")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Project configuration file (`section.key = value`).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, overrides_with = "no_quantize")]
    quantize: bool,
    #[arg(long, global = true, overrides_with = "quantize")]
    no_quantize: bool,
    #[arg(long, global = true, overrides_with = "no_subtract_ambient")]
    subtract_ambient: bool,
    #[arg(long, global = true, overrides_with = "subtract_ambient")]
    no_subtract_ambient: bool,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Rendered image side length in pixels.
    #[arg(long, global = true, value_name = "N")]
    size: Option<usize>,
    /// Number of lights (panel wings).
    #[arg(long, global = true, value_name = "F")]
    lights: Option<usize>,
    /// Phase angle in degrees.
    #[arg(long, global = true, value_name = "G")]
    phase_angle: Option<f64>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Render the sphere scene to an image stack.
    Render,
    /// Recover normal and albedo maps from a stack.
    Solve {
        /// Stack directory; defaults to `<out>/stack`.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Integrate a normal map into depth and a PLY mesh.
    Integrate {
        /// Normal planes; defaults to `<out>/normals.pspl`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Sweep the phase angle and write CSV and SVG.
    SweepPhase,
    /// Sweep the ambient level and write CSV and SVG.
    SweepAmbient,
    /// Choose spacers and joint angle for a target operating distance.
    PanelConfig {
        /// Target operating distance in metres.
        #[arg(long, value_name = "METRES")]
        target: f64,
    },
}

struct Run {
    cfg: ProjectConfig,
    out: PathBuf,
    exec: Execution,
    light_count: usize,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<Run> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ProjectConfig::default(),
        };
        if self.quantize {
            cfg.render.quantize = true;
        }
        if self.no_quantize {
            cfg.render.quantize = false;
        }
        if self.subtract_ambient {
            cfg.solver.subtract_ambient = true;
        }
        if self.no_subtract_ambient {
            cfg.solver.subtract_ambient = false;
        }
        if let Some(s) = self.seed {
            cfg.render.seed = s;
        }
        if let Some(n) = self.size {
            if n < 4 {
                bail!("--size must be at least 4");
            }
            cfg.scene.image_size = n;
        }
        if let Some(g) = self.phase_angle {
            if !(g > 0.0 && g < 90.0) {
                bail!("--phase-angle must lie in (0, 90)");
            }
            cfg.panel.phase_angle_g = g;
            cfg.sweep.ambient_phase_angle = g;
        }
        let light_count = self.lights.unwrap_or(cfg.panel.wing_count);
        if light_count < 3 {
            bail!("--lights must be at least 3");
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        let exec = if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        Ok(Run {
            cfg,
            out,
            exec,
            light_count,
        })
    }
}

impl Run {
    /// Calibrated directions when poses are configured, otherwise the ideal ring.
    fn lights(&self) -> anyhow::Result<Vec<UnitVector3>> {
        if let Some(chain) = &self.cfg.calibration {
            return Ok(chain.light_directions_in_camera()?);
        }
        let azimuths = match &self.cfg.panel.azimuth_offsets {
            Some(a) if a.len() == self.light_count => a.clone(),
            _ => uniform_azimuths(self.light_count),
        };
        Ok(ring_directions_at(self.cfg.panel.phase_angle_g, &azimuths))
    }

    fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            scene: self.cfg.scene.clone(),
            light_count: self.light_count,
            light_intensity: self.cfg.render.light_intensity,
            quantize: self.cfg.render.quantize,
            thresholds: self.cfg.solver.thresholds,
            noise_sigma: self.cfg.render.noise_sigma,
            seed: self.cfg.render.seed,
            execution: self.exec,
        }
    }

    fn prepare_out(&self) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))
    }
}

fn render_cmd(run: &Run) -> anyhow::Result<()> {
    run.prepare_out()?;
    let lights = run.lights()?;
    let stack = render_stack(
        &run.cfg.scene,
        &run.cfg.render.settings(),
        &lights,
        true,
        run.exec,
    )?;
    let dir = run.out.join("stack");
    save_stack(&stack, &dir)?;
    let (normals, albedo) = map_to_planes(&run.cfg.scene.ground_truth());
    save_planes(&normals, &run.out.join("truth_normals.pspl"))?;
    save_planes(&albedo, &run.out.join("truth_albedo.pspl"))?;
    println!("wrote {} images to {}", stack.len(), dir.display());
    Ok(())
}

fn solve_cmd(run: &Run, input: Option<&Path>) -> anyhow::Result<()> {
    run.prepare_out()?;
    let dir = input.map_or_else(|| run.out.join("stack"), Path::to_path_buf);
    let mut stack = load_stack(&dir, run.cfg.render.light_intensity)
        .with_context(|| format!("loading stack from {}", dir.display()))?;
    if run.cfg.solver.subtract_ambient && stack.ambient_frame.is_some() {
        stack = subtract_ambient(&stack)?;
    }
    let map = solve_stack_with(&stack, &run.cfg.solver.thresholds, run.exec);
    let (normals, albedo) = map_to_planes(&map);
    save_planes(&normals, &run.out.join("normals.pspl"))?;
    save_planes(&albedo, &run.out.join("albedo.pspl"))?;
    save_pgm(
        &mask_image(map.width(), map.height(), &map.valid_mask()),
        &run.out.join("mask.pgm"),
    )?;
    println!("solved {} of {} pixels", map.valid_count(), map.len());
    let truth_path = run.out.join("truth_normals.pspl");
    if truth_path.exists() {
        let truth = planes_to_map(&load_planes(&truth_path)?, None)?;
        if let Ok(report) = angular_error_map(&map, &truth) {
            println!(
                "angular error: mean {:.4} deg, median {:.4} deg",
                report.mean_deg, report.median_deg
            );
        }
    }
    Ok(())
}

fn integrate_cmd(run: &Run, input: Option<&Path>) -> anyhow::Result<()> {
    run.prepare_out()?;
    let path = input.map_or_else(|| run.out.join("normals.pspl"), Path::to_path_buf);
    let normals = load_planes(&path).with_context(|| format!("loading {}", path.display()))?;
    let albedo_path = path.with_file_name("albedo.pspl");
    let albedo = if albedo_path.exists() {
        Some(load_planes(&albedo_path)?)
    } else {
        None
    };
    let map = planes_to_map(&normals, albedo.as_ref())?;
    let field = normals_to_gradients(&map, run.cfg.integration.z_floor);
    let settings = IntegrationSettings {
        tolerance: run.cfg.integration.tolerance,
        execution: run.exec,
        ..IntegrationSettings::default()
    };
    let depth = integrate_with(&field, &settings)?;
    let z: Vec<f64> = depth
        .z
        .iter()
        .zip(&depth.valid)
        .map(|(&z, &v)| if v { z } else { f64::NAN })
        .collect();
    save_planes(
        &Planes {
            width: depth.width,
            height: depth.height,
            planes: vec![z],
        },
        &run.out.join("depth.pspl"),
    )?;
    let mesh = depth_to_mesh(&depth, albedo.is_some().then_some(&map));
    let ply = run.out.join("mesh.ply");
    save_ply(&mesh, &ply)?;
    println!(
        "wrote {} ({} vertices, {} triangles)",
        ply.display(),
        mesh.vertices.len(),
        mesh.faces.len()
    );
    Ok(())
}

fn write_sweep(run: &Run, result: &SweepResult, stem: &str, x_label: &str) -> anyhow::Result<()> {
    run.prepare_out()?;
    let csv = run.out.join(format!("{stem}.csv"));
    emit_sweep_csv(result, &csv)?;
    std::fs::write(
        run.out.join(format!("{stem}.svg")),
        sweep_svg(result, x_label),
    )?;
    match result.argmin_point() {
        Some(p) => println!(
            "wrote {}; minimum mean error {:.4} deg at {} = {}",
            csv.display(),
            p.mean_deg,
            x_label,
            p.param
        ),
        None => println!("wrote {}; no valid points", csv.display()),
    }
    Ok(())
}

fn sweep_phase_cmd(run: &Run) -> anyhow::Result<()> {
    let result = phase_angle_sweep(&run.sweep_settings(), &run.cfg.sweep.phase_grid());
    write_sweep(run, &result, "phase_sweep", "phase angle (deg)")
}

fn sweep_ambient_cmd(run: &Run) -> anyhow::Result<()> {
    let result = ambient_sweep(
        &run.sweep_settings(),
        run.cfg.sweep.ambient_phase_angle,
        &run.cfg.sweep.ambient_levels(),
        run.cfg.solver.subtract_ambient,
    );
    write_sweep(run, &result, "ambient_sweep", "ambient level")
}

fn panel_config_cmd(run: &Run, target: f64) -> anyhow::Result<()> {
    let sol = solve_configuration(target, &run.cfg.catalogue())?;
    let c = &sol.config;
    println!("target distance   {target} m");
    println!("phase angle g     {} deg", c.phase_angle_g);
    println!("spacer 1          {} m", c.spacer1);
    println!("spacer 2          {} m", c.spacer2);
    println!("lever arm d1      {} m", c.d1());
    println!("lever arm d2      {} m", c.d2());
    println!("wings             {}", c.wing_count);
    println!("distance          {} m", operating_distance(c)?);
    println!("residual          {} m", sol.residual);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.common.resolve().and_then(|run| match &cli.command {
        Command::Render => render_cmd(&run),
        Command::Solve { input } => solve_cmd(&run, input.as_deref()),
        Command::Integrate { input } => integrate_cmd(&run, input.as_deref()),
        Command::SweepPhase => sweep_phase_cmd(&run),
        Command::SweepAmbient => sweep_ambient_cmd(&run),
        Command::PanelConfig { target } => panel_config_cmd(&run, *target),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
