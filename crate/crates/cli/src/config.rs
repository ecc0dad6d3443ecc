//! Config document: one JSON file per run, with optional `--set` dotted
//! overrides applied before deserialization. Each subcommand requires its
//! own sections; unknown fields are rejected everywhere.

use serde::Deserialize;

use duffing_floquet_core::expr::{parse, Expr};
use duffing_floquet_core::odeint::IntegratorSettings;
use duffing_floquet_core::periodic::ShootingSettings;
use duffing_floquet_core::problem::{DuffingProblem, SampleGrid};

use crate::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub problem: Option<ProblemSection>,
    pub grid: Option<GridSection>,
    pub integrator: Option<IntegratorSection>,
    pub solve: Option<SolveSection>,
    pub certify: Option<CertifySection>,
    pub scan_hill: Option<ScanHillSection>,
    pub decay: Option<DecaySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub c: NumberOrExpr,
    #[serde(rename = "T")]
    pub period: String,
    pub g: String,
    pub gx: String,
    pub h: String,
}

/// Scalar given either as a JSON number or as a constant expression
/// (`"2*pi"`); the config never needs to store a binary float for pi.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NumberOrExpr {
    Number(f64),
    Expr(String),
}

fn default_axis_points() -> usize {
    256
}

fn default_x_range() -> [f64; 2] {
    [-20.0, 20.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_axis_points")]
    pub t_points: usize,
    #[serde(default = "default_axis_points")]
    pub x_points: usize,
    #[serde(default = "default_x_range")]
    pub x_range: [f64; 2],
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            t_points: default_axis_points(),
            x_points: default_axis_points(),
            x_range: default_x_range(),
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            rel_tol: default_tol(),
            abs_tol: default_tol(),
        }
    }
}

fn default_max_iter() -> usize {
    50
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub guess: Option<[f64; 2]>,
    pub start_grid: Option<StartGridSection>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartGridSection {
    /// `[[x_lo, x_hi], [v_lo, v_hi]]`.
    pub range: [[f64; 2]; 2],
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub theorems: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanHillSection {
    pub c: f64,
    pub eps: Vec<f64>,
    pub w_range: [f64; 2],
    pub resolution: usize,
}

fn default_horizon() -> usize {
    20
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub delta: Option<[f64; 2]>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

/// Parses the raw JSON text, applies dotted-path overrides, and
/// deserializes the typed document.
pub fn load(raw: &str, overrides: &[(String, String)]) -> Result<ConfigDoc, Failure> {
    let mut value: serde_json::Value = serde_json::from_str(raw)
        .map_err(|e| Failure::config(format!("config is not valid JSON: {e}")))?;
    for (path, text) in overrides {
        apply_override(&mut value, path, text)?;
    }
    serde_json::from_value(value).map_err(|e| Failure::config(format!("config schema error: {e}")))
}

fn apply_override(value: &mut serde_json::Value, path: &str, text: &str) -> Result<(), Failure> {
    let parsed: serde_json::Value = serde_json::from_str(text)
        .unwrap_or_else(|_| serde_json::Value::String(text.to_string()));
    let mut cursor = value;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Failure::config(format!("invalid --set path `{path}`")));
    }
    for segment in &segments[..segments.len() - 1] {
        if !cursor.is_object() {
            return Err(Failure::config(format!(
                "--set path `{path}` descends into a non-object"
            )));
        }
        cursor = cursor
            .as_object_mut()
            .unwrap()
            .entry(segment.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    match cursor.as_object_mut() {
        Some(map) => {
            map.insert(segments[segments.len() - 1].to_string(), parsed);
            Ok(())
        }
        None => Err(Failure::config(format!(
            "--set path `{path}` descends into a non-object"
        ))),
    }
}

/// Evaluates a constant expression (no `t`, no `x`).
fn constant(source: &str, what: &str) -> Result<f64, Failure> {
    let expr = parse(source)
        .map_err(|e| Failure::config(format!("{what} is not a valid expression: {e}")))?;
    if expr.uses_time() || expr.uses_state() {
        return Err(Failure::config(format!(
            "{what} must be a constant expression (no t or x)"
        )));
    }
    expr.eval(0.0, 0.0)
        .map_err(|e| Failure::config(format!("{what} does not evaluate: {e}")))
}

/// The problem together with the source strings it was built from, kept
/// for echoing into reports.
pub struct LoadedProblem {
    pub problem: DuffingProblem,
    pub g_source: String,
    pub gx_source: String,
    pub h_source: String,
    pub grid: SampleGrid,
}

pub fn load_problem(
    section: &ProblemSection,
    grid_section: &GridSection,
) -> Result<LoadedProblem, Failure> {
    let c = match &section.c {
        NumberOrExpr::Number(v) => *v,
        NumberOrExpr::Expr(src) => constant(src, "problem.c")?,
    };
    let period = constant(&section.period, "problem.T")?;
    if !(period > 0.0) {
        return Err(Failure::config(format!(
            "T must be positive (got {period})"
        )));
    }
    let parse_named = |src: &str, what: &str| -> Result<Expr, Failure> {
        parse(src).map_err(|e| Failure::config(format!("problem.{what}: {e}")))
    };
    let g = parse_named(&section.g, "g")?;
    let gx = parse_named(&section.gx, "gx")?;
    let h = parse_named(&section.h, "h")?;

    if grid_section.t_points < 2 || grid_section.x_points < 2 {
        return Err(Failure::config(
            "grid.t_points and grid.x_points must be at least 2".into(),
        ));
    }
    if !(grid_section.x_range[0] < grid_section.x_range[1]) {
        return Err(Failure::config("grid.x_range must be increasing".into()));
    }
    let grid = SampleGrid::uniform(
        grid_section.t_points,
        period,
        grid_section.x_points,
        (grid_section.x_range[0], grid_section.x_range[1]),
    );

    let problem = DuffingProblem::new(c, period, g, gx, h, &grid)
        .map_err(|e| Failure::config(format!("{e}")))?;
    Ok(LoadedProblem {
        problem,
        g_source: section.g.clone(),
        gx_source: section.gx.clone(),
        h_source: section.h.clone(),
        grid,
    })
}

pub fn integrator_settings(section: &IntegratorSection, period: f64) -> IntegratorSettings {
    IntegratorSettings::for_duration(period).with_tolerances(section.rel_tol, section.abs_tol)
}

pub fn shooting_settings(section: &SolveSection) -> ShootingSettings {
    ShootingSettings {
        tol: section.tol,
        max_iter: section.max_iter,
        ..ShootingSettings::default()
    }
}
