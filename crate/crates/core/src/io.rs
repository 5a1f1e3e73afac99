//! Text formats: profile and curve tables, the run manifest, flat key=value
//! configuration, ruled-surface meshes and plot tables.
//!
//! Tables are comma separated with `#` comments. Reals are written with 17
//! significant digits so that reading a table back reproduces every value
//! bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};

use crate::error::{BandError, Result};
use crate::geometry::{strip_mesh, Closure, CurvatureTwistProfile, FramedCurve};
use crate::solver::{InitMode, PenaltyStage, SolverConfig};

pub const TOOL_NAME: &str = "band";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full-precision decimal form of `x`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance block written as `#` comments at the top of every output file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub config: Vec<(String, String)>,
    pub inputs: Vec<String>,
    pub output: String,
    pub seed: u64,
    /// Taken from `SOURCE_DATE_EPOCH` so that repeated runs stay byte-identical.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(config: Vec<(String, String)>, seed: u64) -> Self {
        Self {
            config,
            inputs: Vec::new(),
            output: String::new(),
            seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset".into()),
        }
    }

    pub fn for_output(&self, output: &Path) -> Self {
        Self {
            output: output.display().to_string(),
            ..self.clone()
        }
    }

    pub fn header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {TOOL_NAME} {TOOL_VERSION}");
        let _ = writeln!(out, "# timestamp: {}", self.timestamp);
        let _ = writeln!(out, "# seed: {}", self.seed);
        for input in &self.inputs {
            let _ = writeln!(out, "# input: {input}");
        }
        if !self.output.is_empty() {
            let _ = writeln!(out, "# output: {}", self.output);
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "# config: {k} = {v}");
        }
        out
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> BandError {
    BandError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Data rows of a table: `(line number, fields)`, skipping comments, blank
/// lines and one leading non-numeric header row.
fn data_rows(path: &Path, text: &str, columns: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header && rows.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            seen_header = true;
            continue;
        }
        if fields.len() != columns {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {columns} columns, found {}", fields.len()),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line_no, format!("not a finite number: `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line_no, values));
    }
    Ok(rows)
}

/// `# key = value` metadata comments.
fn metadata<'a>(text: &'a str, key: &str) -> Option<(usize, &'a str)> {
    text.lines().enumerate().find_map(|(i, l)| {
        let rest = l.trim().strip_prefix('#')?.trim();
        let (k, v) = rest.split_once('=')?;
        (k.trim() == key).then_some((i + 1, v.trim()))
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        BandError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

pub fn profile_table(profile: &CurvatureTwistProfile, manifest: &RunManifest) -> String {
    let mut out = manifest.header();
    let _ = writeln!(out, "# length = {}", fmt_real(profile.length()));
    let _ = writeln!(out, "# closure = {}", profile.closure().as_str());
    out.push_str("s,K,W\n");
    for i in 0..profile.n_nodes() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_real(profile.arclength(i)),
            fmt_real(profile.curvature()[i]),
            fmt_real(profile.twist()[i])
        );
    }
    out
}

pub fn write_profile(path: &Path, profile: &CurvatureTwistProfile, manifest: &RunManifest) -> Result<()> {
    fs::write(path, profile_table(profile, &manifest.for_output(path)))?;
    Ok(())
}

pub fn parse_profile(path: &Path, text: &str) -> Result<CurvatureTwistProfile> {
    let rows = data_rows(path, text, 3)?;
    let n = rows.len();
    if n < CurvatureTwistProfile::MIN_NODES {
        return Err(parse_err(
            path,
            rows.last().map_or(1, |r| r.0),
            format!("n_nodes must be ≥ {}, found {n} rows", CurvatureTwistProfile::MIN_NODES),
        ));
    }
    let length = match metadata(text, "length") {
        Some((line, v)) => v
            .parse::<f64>()
            .map_err(|_| parse_err(path, line, format!("bad length `{v}`")))?,
        // Without metadata, infer from uniformly spaced cell centres.
        None => 2.0 * rows[0].1[0] * n as f64,
    };
    let closure = match metadata(text, "closure") {
        Some((line, v)) => v.parse::<Closure>().map_err(|e| parse_err(path, line, e.to_string()))?,
        None => Closure::Orientable,
    };
    let h = length / n as f64;
    for (i, (line, r)) in rows.iter().enumerate() {
        if (r[0] - (i as f64 + 0.5) * h).abs() > 1e-9 * length {
            return Err(parse_err(path, *line, format!("arclength {} is not on the uniform grid", r[0])));
        }
    }
    let k = rows.iter().map(|r| r.1[1]).collect();
    let w = rows.iter().map(|r| r.1[2]).collect();
    Ok(CurvatureTwistProfile::new(length, k, w)
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .with_closure(closure))
}

pub fn read_profile(path: &Path) -> Result<CurvatureTwistProfile> {
    parse_profile(path, &read_text(path)?)
}

/// Node positions and frames, one row per node plus the end node.
pub fn curve_table(curve: &FramedCurve, manifest: &RunManifest) -> String {
    let mut out = manifest.header();
    let _ = writeln!(out, "# length = {}", fmt_real(curve.length));
    out.push_str("s,x,y,z,tx,ty,tz,nx,ny,nz,bx,by,bz\n");
    let h = curve.spacing();
    let n = curve.n_nodes();
    for i in 0..=n {
        let (x, r) = if i < n {
            (curve.positions[i], curve.frames[i])
        } else {
            (curve.end_position, curve.end_frame)
        };
        let s = if i < n { i as f64 * h } else { curve.length };
        let mut row = vec![s, x.x, x.y, x.z];
        for c in 0..3 {
            row.extend(r.column(c).iter());
        }
        let line: Vec<String> = row.into_iter().map(fmt_real).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_curve(path: &Path, curve: &FramedCurve, manifest: &RunManifest) -> Result<()> {
    fs::write(path, curve_table(curve, &manifest.for_output(path)))?;
    Ok(())
}

pub fn parse_curve(path: &Path, text: &str) -> Result<FramedCurve> {
    let rows = data_rows(path, text, 13)?;
    if rows.len() < CurvatureTwistProfile::MIN_NODES + 1 {
        return Err(parse_err(path, rows.last().map_or(1, |r| r.0), "too few rows for a curve"));
    }
    let length = match metadata(text, "length") {
        Some((line, v)) => v
            .parse::<f64>()
            .map_err(|_| parse_err(path, line, format!("bad length `{v}`")))?,
        None => rows.last().expect("non-empty").1[0],
    };
    let decode = |r: &[f64]| {
        let x = Vector3::new(r[1], r[2], r[3]);
        let m = Matrix3::from_columns(&[
            Vector3::new(r[4], r[5], r[6]),
            Vector3::new(r[7], r[8], r[9]),
            Vector3::new(r[10], r[11], r[12]),
        ]);
        (x, m)
    };
    let (end_position, end_frame) = decode(&rows.last().expect("non-empty").1);
    let (positions, frames) = rows[..rows.len() - 1].iter().map(|r| decode(&r.1)).unzip();
    Ok(FramedCurve {
        positions,
        frames,
        end_position,
        end_frame,
        length,
    })
}

pub fn read_curve(path: &Path) -> Result<FramedCurve> {
    parse_curve(path, &read_text(path)?)
}

/// Triangle mesh of the strip `x(s) +- half_width g(s)` in OBJ form; see
/// [`strip_mesh`] for the vertex layout.
pub fn mesh_obj(
    profile: &CurvatureTwistProfile,
    curve: &FramedCurve,
    half_width: f64,
    manifest: &RunManifest,
) -> Result<String> {
    let mesh = strip_mesh(profile, curve, half_width)?;
    let mut out = manifest.header();
    let _ = writeln!(out, "# half_width = {}", fmt_real(half_width));
    let _ = writeln!(out, "# closure = {}", profile.closure().as_str());
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", fmt_real(v.x), fmt_real(v.y), fmt_real(v.z));
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    Ok(out)
}

/// Two-column table `s, value` at the cell centres, with the first sample
/// repeated one period later (sign-flipped for quantities odd in K on a
/// Möbius band).
pub fn plot_table(
    profile: &CurvatureTwistProfile,
    name: &str,
    values: &[f64],
    odd_in_k: bool,
    manifest: &RunManifest,
) -> String {
    let mut out = manifest.header();
    let _ = writeln!(out, "s,{name}");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_real(profile.arclength(i)), fmt_real(*v));
    }
    let wrap = if odd_in_k { profile.closure().odd_wrap_sign() } else { 1.0 };
    let _ = writeln!(
        out,
        "{},{}",
        fmt_real(profile.arclength(0) + profile.length()),
        fmt_real(wrap * values[0])
    );
    out
}

/// One `key = value` entry with its source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(path: &Path, text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, idx + 1, format!("expected key = value, got `{line}`")))?;
        entries.push(ConfigEntry {
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            line: idx + 1,
        });
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>> {
    parse_config(path, &read_text(path)?)
}

fn canonical_key(key: &str) -> &str {
    match key {
        "n" => "n_nodes",
        "stiffness" => "A",
        "L" => "length",
        other => other,
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| BandError::config(field, format!("cannot parse `{value}`")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(BandError::config(field, format!("expected true or false, got `{value}`"))),
    }
}

/// Build a solver configuration from entries; later entries win. Schedules
/// not given explicitly are scaled to the configured length.
pub fn config_from_entries(entries: &[ConfigEntry]) -> Result<SolverConfig> {
    let mut length = 2.0 * std::f64::consts::PI;
    for e in entries {
        if canonical_key(&e.key) == "length" {
            length = parse_field("length", &e.value)?;
        }
    }
    let mut config = SolverConfig::with_length(length);
    let mut init_file: Option<PathBuf> = None;
    for e in entries {
        let key = canonical_key(&e.key);
        let v = e.value.as_str();
        match key {
            "length" => {}
            "n_nodes" => config.n_nodes = parse_field(key, v)?,
            "A" => config.stiffness = parse_field(key, v)?,
            "closure" => config.closure = v.parse().map_err(|_| BandError::config(key, format!("unknown closure `{v}`")))?,
            "clamp_twist" => config.clamp_twist = parse_bool(key, v)?,
            "epsilon_schedule" => {
                config.epsilon_schedule = v
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| parse_field(key, t.trim()))
                    .collect::<Result<_>>()?
            }
            "penalty_schedule" => {
                config.penalty_schedule = v
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        let (mu, iters) = t.trim().split_once(':').unwrap_or((t.trim(), "3000"));
                        Ok(PenaltyStage {
                            mu: parse_field(key, mu.trim())?,
                            max_inner: parse_field(key, iters.trim())?,
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "grad_tol" => config.grad_tol = parse_field(key, v)?,
            "constraint_tol" => config.constraint_tol = parse_field(key, v)?,
            "init" => {
                config.init_mode = match v.replace('-', "_").as_str() {
                    "analytic_moebius" => InitMode::AnalyticMoebius,
                    "perturbed_circle" => InitMode::PerturbedCircle,
                    "from_file" => InitMode::FromFile(PathBuf::new()),
                    _ => return Err(BandError::config(key, format!("unknown init mode `{v}`"))),
                }
            }
            "init_file" => init_file = Some(PathBuf::from(v)),
            "seed" => config.seed = parse_field(key, v)?,
            "perturbation" => config.perturbation = parse_field(key, v)?,
            "max_outer" => config.max_outer = parse_field(key, v)?,
            "polish" => config.polish = parse_bool(key, v)?,
            other => return Err(BandError::config(other, format!("unknown key `{other}`"))),
        }
    }
    if let Some(path) = init_file {
        config.init_mode = InitMode::FromFile(path);
    } else if config.init_mode == InitMode::FromFile(PathBuf::new()) {
        return Err(BandError::config("init_file", "init = from_file needs init_file"));
    }
    Ok(config)
}

/// The configuration as `key = value` pairs, readable by [`config_from_entries`].
pub fn config_entries(config: &SolverConfig) -> Vec<(String, String)> {
    let join = |v: Vec<String>| v.join(",");
    let mut out = vec![
        ("n_nodes".into(), config.n_nodes.to_string()),
        ("length".into(), fmt_real(config.length)),
        ("A".into(), fmt_real(config.stiffness)),
        ("closure".into(), config.closure.as_str().into()),
        ("clamp_twist".into(), config.clamp_twist.to_string()),
        (
            "epsilon_schedule".into(),
            join(config.epsilon_schedule.iter().map(|e| fmt_real(*e)).collect()),
        ),
        (
            "penalty_schedule".into(),
            join(
                config
                    .penalty_schedule
                    .iter()
                    .map(|p| format!("{}:{}", fmt_real(p.mu), p.max_inner))
                    .collect(),
            ),
        ),
        ("grad_tol".into(), fmt_real(config.grad_tol)),
        ("constraint_tol".into(), fmt_real(config.constraint_tol)),
        ("init".into(), config.init_mode.as_str().into()),
        ("seed".into(), config.seed.to_string()),
        ("perturbation".into(), fmt_real(config.perturbation)),
        ("max_outer".into(), config.max_outer.to_string()),
        ("polish".into(), config.polish.to_string()),
    ];
    if let InitMode::FromFile(p) = &config.init_mode {
        out.push(("init_file".into(), p.display().to_string()));
    }
    out
}
