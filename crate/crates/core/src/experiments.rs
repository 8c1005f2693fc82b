//! Phase-angle and ambient-light sweeps on the synthetic sphere.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::panel::uniform_ring;
use crate::par::{map_indexed, Execution};
use crate::render::{render_stack, RenderSettings, SphereScene, FULL_SCALE};
use crate::solver::{angular_error_map, solve_stack_with, subtract_ambient, Thresholds};

/// Shared settings of both sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub scene: SphereScene,
    pub light_count: usize,
    pub light_intensity: f64,
    pub quantize: bool,
    pub thresholds: Thresholds,
    pub noise_sigma: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            scene: SphereScene::default(),
            light_count: 6,
            light_intensity: FULL_SCALE,
            quantize: true,
            thresholds: Thresholds::default(),
            noise_sigma: 0.0,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl SweepSettings {
    fn render_settings(&self, ambient_level: f64) -> RenderSettings {
        RenderSettings {
            light_intensity: self.light_intensity,
            ambient_level,
            quantize: self.quantize,
            noise: (self.noise_sigma > 0.0).then_some(crate::render::PixelNoise {
                sigma: self.noise_sigma,
                seed: self.seed,
            }),
            ..RenderSettings::default()
        }
    }
}

/// One row of a sweep curve. Errors are `NaN` when no pixel could be solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub mean_deg: f64,
    pub median_deg: f64,
    pub mean_rel: f64,
    pub median_rel: f64,
}

impl SweepPoint {
    fn same_bits(&self, other: &SweepPoint) -> bool {
        [
            (self.param, other.param),
            (self.mean_deg, other.mean_deg),
            (self.median_deg, other.median_deg),
            (self.mean_rel, other.mean_rel),
            (self.median_rel, other.median_rel),
        ]
        .iter()
        .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub kind: &'static str,
    pub image_size: usize,
    pub quantize: bool,
    pub light_count: usize,
    pub seed: u64,
    pub subtract_ambient: Option<bool>,
    pub phase_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Pixels that entered the error statistics at each point.
    pub valid_pixels: Vec<usize>,
    pub meta: SweepMeta,
}

impl SweepResult {
    /// Parameter of the lowest finite mean error; the first one on ties.
    pub fn argmin(&self) -> Option<f64> {
        self.argmin_point().map(|p| p.param)
    }

    pub fn argmin_point(&self) -> Option<&SweepPoint> {
        self.points.iter().filter(|p| p.mean_deg.is_finite()).fold(
            None,
            |best: Option<&SweepPoint>, p| match best {
                Some(b) if b.mean_deg <= p.mean_deg => Some(b),
                _ => Some(p),
            },
        )
    }

    pub fn min_mean(&self) -> Option<f64> {
        self.argmin_point().map(|p| p.mean_deg)
    }

    /// Bitwise comparison of the curves (treats equal NaNs as equal).
    pub fn same_curve(&self, points: &[SweepPoint]) -> bool {
        self.points.len() == points.len()
            && self.points.iter().zip(points).all(|(a, b)| a.same_bits(b))
    }
}

fn evaluate(
    settings: &SweepSettings,
    g: f64,
    ambient_level: f64,
    subtract: bool,
    param: Option<f64>,
) -> (SweepPoint, usize) {
    let scene = &settings.scene;
    let lights = uniform_ring(g, settings.light_count);
    let base = settings.render_settings(ambient_level);
    let stack = render_stack(
        scene,
        &base,
        &lights,
        subtract || ambient_level > 0.0,
        Execution::Sequential,
    )
    .expect("sweep settings produce a valid stack");
    let measured_ambient = stack
        .ambient_frame
        .as_ref()
        .and_then(|a| a.masked_mean(&scene.disc_mask()))
        .unwrap_or(0.0);
    let stack = if subtract {
        subtract_ambient(&stack).expect("ambient frame rendered")
    } else {
        stack
    };
    let estimate = solve_stack_with(&stack, &settings.thresholds, Execution::Sequential);
    let param = param.unwrap_or(measured_ambient);
    match angular_error_map(&estimate, &scene.ground_truth()) {
        Ok(r) => (
            SweepPoint {
                param,
                mean_deg: r.mean_deg,
                median_deg: r.median_deg,
                mean_rel: r.mean_rel,
                median_rel: r.median_rel,
            },
            r.count,
        ),
        Err(_) => (
            SweepPoint {
                param,
                mean_deg: f64::NAN,
                median_deg: f64::NAN,
                mean_rel: f64::NAN,
                median_rel: f64::NAN,
            },
            0,
        ),
    }
}

/// The default phase-angle grid, 1° to 89° in 1° steps.
pub fn default_phase_grid() -> Vec<f64> {
    (1..=89).map(f64::from).collect()
}

/// Ambient levels for 0 % to 80 % of full scale in 5 % steps.
pub fn default_ambient_levels() -> Vec<f64> {
    (0..=16)
        .map(|k| k as f64 * 5.0 / 100.0 * FULL_SCALE)
        .collect()
}

/// Renders, solves and scores the sphere at every phase angle.
pub fn phase_angle_sweep(settings: &SweepSettings, phase_angles: &[f64]) -> SweepResult {
    let rows = map_indexed(phase_angles.len(), settings.execution, |k| {
        let g = phase_angles[k];
        evaluate(settings, g, 0.0, false, Some(g))
    });
    let (points, valid_pixels) = rows.into_iter().unzip();
    SweepResult {
        points,
        valid_pixels,
        meta: SweepMeta {
            kind: "phase",
            image_size: settings.scene.image_size,
            quantize: settings.quantize,
            light_count: settings.light_count,
            seed: settings.seed,
            subtract_ambient: None,
            phase_angle: None,
        },
    }
}

/// Sweeps the ambient level at a fixed phase angle.
///
/// Each point's parameter is the mean sphere intensity of the rendered
/// ambient frame.
pub fn ambient_sweep(
    settings: &SweepSettings,
    phase_angle: f64,
    ambient_levels: &[f64],
    subtract: bool,
) -> SweepResult {
    let rows = map_indexed(ambient_levels.len(), settings.execution, |k| {
        evaluate(settings, phase_angle, ambient_levels[k], subtract, None)
    });
    let (points, valid_pixels) = rows.into_iter().unzip();
    SweepResult {
        points,
        valid_pixels,
        meta: SweepMeta {
            kind: "ambient",
            image_size: settings.scene.image_size,
            quantize: settings.quantize,
            light_count: settings.light_count,
            seed: settings.seed,
            subtract_ambient: Some(subtract),
            phase_angle: Some(phase_angle),
        },
    }
}

pub const CSV_HEADER: [&str; 5] = ["param", "mean_deg", "median_deg", "mean_rel", "median_rel"];

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &result.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_sweep_csv(result, std::io::BufWriter::new(file))
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Line plot of the mean and median angular-error traces.
pub fn sweep_svg(result: &SweepResult, x_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let finite: Vec<&SweepPoint> = result
        .points
        .iter()
        .filter(|p| p.mean_deg.is_finite() && p.median_deg.is_finite())
        .collect();
    let (x0, x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.param), hi.max(p.param))
        });
    let y1 = finite
        .iter()
        .fold(0.0f64, |m, p| m.max(p.mean_deg).max(p.median_deg));
    let sx = |x: f64| {
        if x1 > x0 {
            M + (x - x0) / (x1 - x0) * (W - 2.0 * M)
        } else {
            W / 2.0
        }
    };
    let sy = |y: f64| {
        if y1 > 0.0 {
            H - M - y / y1 * (H - 2.0 * M)
        } else {
            H - M
        }
    };
    let trace = |f: fn(&SweepPoint) -> f64| {
        finite
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.param), sy(f(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = H - M,
        r = W - M
    ));
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>\n",
        trace(|p| p.mean_deg)
    ));
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\" points=\"{}\"/>\n",
        trace(|p| p.median_deg)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{x_label}</text>\n",
        W / 2.0,
        H - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-size=\"14\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">angular error (deg)</text>\n",
        H / 2.0,
        H / 2.0
    ));
    if x1 >= x0 {
        s.push_str(&format!(
            "<text x=\"{M}\" y=\"{}\" font-size=\"11\">{x0}</text>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{x1}</text>\n",
            H - M + 16.0,
            W - M,
            H - M + 16.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y1:.4}</text>\n",
        M - 4.0,
        M + 4.0
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#1f77b4\">mean</text>\n<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#ff7f0e\">median</text>\n",
        W - M - 60.0,
        M,
        W - M - 60.0,
        M + 16.0
    ));
    s.push_str("</svg>\n");
    s
}
