//! `band`: solve for the equilibrium shape of a narrow elastic Möbius band,
//! analyze it, and export tables and meshes.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver did not converge
//! (outputs are still written).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use band_core::analysis::{self, AnalysisReport};
use band_core::energy::MaterialParams;
use band_core::geometry::CurvatureTwistProfile;
use band_core::io::{self, ConfigEntry, RunManifest};
use band_core::solver::{self, Checkpoint, SolverConfig, SolverReport};
use band_core::statics::{self, ResidualMask};
use band_core::validate::{self, ValidateOptions};
use band_core::BandError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "band", version, about = "Equilibrium shapes of narrow developable Möbius bands")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the bending energy under closure constraints.
    Solve(SolveArgs),
    /// Internal forces, equilibrium residuals and singular-point geometry of a solution.
    Analyze(RunArgs),
    /// Ruled-surface mesh and plot tables of a solution.
    Export(ExportArgs),
    /// Run the self-test battery.
    Validate(ValidateArgs),
}

/// Solver settings; flags override the config file.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of arclength cells.
    #[arg(long)]
    n: Option<usize>,
    /// Band length L.
    #[arg(long)]
    length: Option<f64>,
    /// Bending stiffness A.
    #[arg(long = "A", id = "A")]
    stiffness: Option<f64>,
    /// Initial guess: analytic-moebius, perturbed-circle or from-file.
    #[arg(long)]
    init: Option<String>,
    /// Profile table for `--init from-file`.
    #[arg(long)]
    init_file: Option<PathBuf>,
    /// Seed for randomized initial guesses.
    #[arg(long)]
    seed: Option<u64>,
    /// Closure: moebius or orientable.
    #[arg(long)]
    closure: Option<String>,
    /// Hold the twist at zero.
    #[arg(long)]
    clamp_twist: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the current profile here after every outer iteration.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Run directory holding profile.csv and curve.csv; outputs go here too.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Display width of the strip; the model itself has zero width.
    #[arg(long)]
    width: Option<f64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Smaller sample counts; skips the Möbius solve.
    #[arg(long)]
    quick: bool,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<BandError> for Failure {
    fn from(e: BandError) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `BAND_THREADS` caps the worker pool; 0 means run serially.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("BAND_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("BAND_THREADS must be a non-negative integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| e.to_string())
}

fn load_config(args: &ConfigArgs) -> Result<SolverConfig, Failure> {
    load_config_over(Vec::new(), args)
}

/// Config from `base`, then the config file, then flags; later entries win.
fn load_config_over(mut entries: Vec<ConfigEntry>, args: &ConfigArgs) -> Result<SolverConfig, Failure> {
    if let Some(path) = &args.config {
        entries.extend(io::read_config(path)?);
    }
    let mut flag = |key: &str, value: Option<String>| {
        if let Some(value) = value {
            entries.push(ConfigEntry {
                key: key.into(),
                value,
                line: 0,
            });
        }
    };
    flag("n_nodes", args.n.map(|v| v.to_string()));
    flag("length", args.length.map(io::fmt_real));
    flag("A", args.stiffness.map(io::fmt_real));
    flag("init", args.init.clone());
    flag("init_file", args.init_file.as_ref().map(|p| p.display().to_string()));
    flag("seed", args.seed.map(|v| v.to_string()));
    flag("closure", args.closure.clone());
    flag("clamp_twist", args.clamp_twist.then(|| "true".into()));
    let config = io::config_from_entries(&entries)?;
    config.validate()?;
    Ok(config)
}

fn manifest_for(config: &SolverConfig, inputs: &[&Path]) -> RunManifest {
    let mut m = RunManifest::new(io::config_entries(config), config.seed);
    m.inputs = inputs.iter().map(|p| p.display().to_string()).collect();
    m
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn report_text(report: &SolverReport, manifest: &RunManifest) -> String {
    let f = io::fmt_real;
    let list = |v: &[f64]| v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" ");
    let mut out = manifest.header();
    let _ = writeln!(out, "converged: {}", report.converged);
    let _ = writeln!(out, "message: {}", report.message);
    let _ = writeln!(out, "final_energy: {}", f(report.final_energy));
    let _ = writeln!(out, "regularized_energy: {}", f(report.regularized_energy));
    let _ = writeln!(out, "initial_energy: {}", f(report.initial_energy));
    let _ = writeln!(out, "position_gap: {}", f(report.closure.position_gap.norm()));
    let _ = writeln!(out, "frame_gap: {}", f(report.closure.frame_gap.norm()));
    let _ = writeln!(out, "projected_gradient: {}", f(report.projected_gradient));
    let _ = writeln!(out, "stationarity: {}", f(report.stationarity));
    let _ = writeln!(out, "multipliers: {}", list(&report.multipliers));
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "outer_iterations: {}", report.outer_iterations);
    let _ = writeln!(out, "polish_steps: {}", report.polish_steps);
    let _ = writeln!(out, "energy_history: {}", list(&report.energy_history));
    let _ = writeln!(out, "constraint_history: {}", list(&report.constraint_history));
    let _ = writeln!(out, "penalty_history: {}", list(&report.penalty_history));
    out
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let config = load_config(&args.config)?;
    let initial = solver::initialize(&config)?;
    fs::create_dir_all(&args.out)?;
    let inputs: Vec<&Path> = args.config.config.iter().map(PathBuf::as_path).collect();
    let manifest = manifest_for(&config, &inputs);

    let mut checkpoint_error = None;
    let mut write_checkpoint = |c: &Checkpoint| {
        if let Some(path) = &args.checkpoint {
            let mut m = manifest.for_output(path);
            m.config.push(("checkpoint.outer".into(), c.outer.to_string()));
            if let Err(e) = fs::write(path, io::profile_table(c.profile, &m)) {
                checkpoint_error.get_or_insert(e);
            }
        }
    };
    let solution = solver::solve_from(&config, &initial, Some(&mut write_checkpoint))?;
    if let Some(e) = checkpoint_error {
        return Err(e.into());
    }

    io::write_profile(&args.out.join("profile.csv"), &solution.profile, &manifest)?;
    io::write_curve(&args.out.join("curve.csv"), &solution.curve, &manifest)?;
    let report_path = args.out.join("report.txt");
    write_file(&report_path, &report_text(&solution.report, &manifest.for_output(&report_path)))?;

    let r = &solution.report;
    println!(
        "{}: energy {:.10}, position gap {:.3e}, frame gap {:.3e}, projected gradient {:.3e}",
        if r.converged { "converged" } else { "NOT converged" },
        r.final_energy,
        r.closure.position_gap.norm(),
        r.closure.frame_gap.norm(),
        r.projected_gradient
    );
    if r.converged {
        Ok(0)
    } else {
        eprintln!("{}", r.message);
        Ok(2)
    }
}

fn load_run(dir: &Path) -> Result<(CurvatureTwistProfile, band_core::FramedCurve, PathBuf, PathBuf), Failure> {
    let pp = dir.join("profile.csv");
    let cp = dir.join("curve.csv");
    let profile = io::read_profile(&pp)?;
    let curve = io::read_curve(&cp)?;
    if curve.n_nodes() != profile.n_nodes() {
        return Err(Failure {
            code: 1,
            message: format!(
                "{} has {} nodes but {} has {}",
                cp.display(),
                curve.n_nodes(),
                pp.display(),
                profile.n_nodes()
            ),
        });
    }
    Ok((profile, curve, pp, cp))
}

/// Config for post-processing a stored run: grid and closure default to the
/// profile's own, and an explicit setting that disagrees is rejected.
fn config_for_run(args: &ConfigArgs, profile: &CurvatureTwistProfile) -> Result<SolverConfig, Failure> {
    let base = [
        ("n_nodes", profile.n_nodes().to_string()),
        ("length", io::fmt_real(profile.length())),
        ("closure", profile.closure().as_str().to_string()),
    ]
    .into_iter()
    .map(|(key, value)| ConfigEntry {
        key: key.into(),
        value,
        line: 0,
    })
    .collect();
    let config = load_config_over(base, args)?;
    let mismatch = |field: &str, wanted: String, found: String| Failure {
        code: 1,
        message: format!("invalid configuration ({field}): configured {wanted} but the stored profile has {found}"),
    };
    if config.n_nodes != profile.n_nodes() {
        return Err(mismatch("n_nodes", config.n_nodes.to_string(), profile.n_nodes().to_string()));
    }
    if (config.length - profile.length()).abs() > 1e-12 * profile.length() {
        return Err(mismatch("length", config.length.to_string(), profile.length().to_string()));
    }
    if config.closure != profile.closure() {
        return Err(mismatch("closure", config.closure.as_str().into(), profile.closure().as_str().into()));
    }
    Ok(config)
}

fn cmd_analyze(args: &RunArgs) -> Result<u8, Failure> {
    let (profile, curve, pp, cp) = load_run(&args.out)?;
    let config = config_for_run(&args.config, &profile)?;
    let manifest = manifest_for(&config, &[&pp, &cp]);
    let eps = *config.epsilon_schedule.last().expect("validated");
    let params = MaterialParams::new(config.stiffness, eps)?;

    let mask = ResidualMask::at_corners(&profile, statics::DEFAULT_MASK_WINDOW);
    let fields = statics::static_fields(&profile, &params, &mask)?;
    let res = statics::residuals(&profile, &fields, &mask);
    let phi = analysis::phi_field(&profile);

    let f = io::fmt_real;
    let fields_path = args.out.join("fields.csv");
    let mut table = manifest.for_output(&fields_path).header();
    table.push_str("s,K,W,phi,T,N,B,Mt,Mn,Mb,r23,r24\n");
    for i in 0..profile.n_nodes() {
        let row = [
            profile.arclength(i),
            profile.curvature()[i],
            profile.twist()[i],
            phi[i].unwrap_or(f64::NAN),
            fields.t[i],
            fields.n[i],
            fields.b[i],
            fields.mt[i],
            fields.mn[i],
            fields.mb[i],
            res.r23[i],
            res.r24[i],
        ];
        let _ = writeln!(table, "{}", row.map(f).join(","));
    }
    write_file(&fields_path, &table)?;

    let res_path = args.out.join("residuals.txt");
    let mut summary = manifest.for_output(&res_path).header();
    let _ = writeln!(summary, "C: {}", f(fields.c));
    let _ = writeln!(summary, "masked_nodes: {}", mask.excluded_count());
    for (j, norm) in res.norms14.iter().enumerate() {
        let _ = writeln!(summary, "row{}: max {} rms {} nodes {}", j + 1, f(norm.max), f(norm.rms), norm.count);
    }
    let _ = writeln!(summary, "r23: max {} rms {}", f(res.norm23.max), f(res.norm23.rms));
    let _ = writeln!(summary, "r24: max {} rms {}", f(res.norm24.max), f(res.norm24.rms));
    write_file(&res_path, &summary)?;

    let report: AnalysisReport = analysis::analyze(&profile, &curve)?;
    let text_path = args.out.join("analysis.txt");
    write_file(&text_path, &(manifest.for_output(&text_path).header() + &report.to_text()))?;
    let csv_path = args.out.join("analysis.csv");
    write_file(&csv_path, &(manifest.for_output(&csv_path).header() + &report.to_csv()))?;

    print!("{}", report.to_text());
    println!("r23 max {:.3e}, r24 max {:.3e} outside {} masked nodes", res.norm23.max, res.norm24.max, mask.excluded_count());
    Ok(0)
}

fn cmd_export(args: &ExportArgs) -> Result<u8, Failure> {
    let (profile, curve, pp, cp) = load_run(&args.run.out)?;
    let config = config_for_run(&args.run.config, &profile)?;
    let width = args
        .width
        .unwrap_or(0.05 * profile.length() / (2.0 * std::f64::consts::PI));
    if !(width.is_finite() && width > 0.0) {
        return Err(Failure {
            code: 1,
            message: format!("--width must be positive, got {width}"),
        });
    }
    let manifest = manifest_for(&config, &[&pp, &cp]);
    let out = &args.run.out;
    let mesh_path = out.join("band.obj");
    write_file(
        &mesh_path,
        &io::mesh_obj(&profile, &curve, 0.5 * width, &manifest.for_output(&mesh_path))?,
    )?;
    let phi: Vec<f64> = analysis::phi_field(&profile).iter().map(|p| p.unwrap_or(f64::NAN)).collect();
    let tables: [(&str, &[f64], bool); 3] = [
        ("K", profile.curvature(), true),
        ("W", profile.twist(), false),
        ("phi", &phi, false),
    ];
    for (name, values, odd) in tables {
        let path = out.join(format!("{name}.csv"));
        write_file(&path, &io::plot_table(&profile, name, values, odd, &manifest.for_output(&path)))?;
    }
    println!("wrote {} and K.csv, W.csv, phi.csv", mesh_path.display());
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8, Failure> {
    let results = validate::run_checks(&ValidateOptions {
        quick: args.quick,
        ..Default::default()
    });
    let mut all = true;
    for r in &results {
        all &= r.passed;
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{} of {} checks passed", results.iter().filter(|r| r.passed).count(), results.len());
    Ok(if all { 0 } else { 1 })
}
