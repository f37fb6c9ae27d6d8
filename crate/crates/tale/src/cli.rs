//! Command-line interface.
//!
//! Exit codes: 0 success, 1 a model or case failure, 2 bad arguments,
//! config or data, 3 an I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tale_core::analysis::{
    collapse_tail_pose, group_stats, normalized_rms_error, pairwise_std, tip_metrics, BaseFrame,
    PlanarPose,
};
use tale_core::geometry::{build_tail, JointProfile, MorphologySpec, StandardTail};
use tale_core::oracle::{minimize_total_energy_with, OracleSettings};
use tale_core::solver::{euler_solve, LoadCase};
use tale_core::tail::{
    calibrate_linear, calibrate_spring_stiffness_with, CalibrationSettings, FitMode,
};

use crate::config::{load_morphology, parse_config, Engine, Morphology, SolverSettings};
use crate::error::AppError;
use crate::io::{self, Format, Trial};
use crate::{sweep, synthetic};

#[derive(Debug, Parser)]
#[command(name = "tale", version, about = "Tendon-actuated tail simulator")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; commands print to stdout when it is omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Solver load increments.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    /// Worker threads for `sweep` (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Seed for synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TailArg {
    /// Morphology file, or SSL / SLS / LSS.
    #[arg(long)]
    pub tail: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit force against displacement and match the joint spring to it.
    Calibrate {
        #[arg(long)]
        fixture: PathBuf,
        /// Fit an intercept as well.
        #[arg(long)]
        affine: bool,
        #[command(flatten)]
        tail: TailArg,
    },
    /// Incremental solve of a single-joint sample.
    Solve {
        /// Tract ids, e.g. `0` or `0,1`.
        #[arg(long, value_delimiter = ',', required = true)]
        tracts: Vec<usize>,
        /// Tension per tendon (N).
        #[arg(long, conflicts_with = "displacement", required_unless_present = "displacement")]
        force: Option<f64>,
        /// Tendon travel (mm), converted through `--fixture`.
        #[arg(long, requires = "fixture")]
        displacement: Option<f64>,
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[command(flatten)]
        tail: TailArg,
    },
    /// Uniform-bend pose of a tail for a commanded tendon travel.
    Predict {
        #[arg(long, value_delimiter = ',', required = true)]
        tracts: Vec<usize>,
        #[arg(long)]
        displacement: f64,
        #[command(flatten)]
        tail: TailArg,
    },
    /// Run every case of the experiment config.
    Sweep,
    /// Group statistics of tip metrics across morphologies.
    Analyze {
        /// Trial files, one per group.
        #[arg(long, num_args = 1.., required_unless_present = "synthetic")]
        trials: Vec<PathBuf>,
        /// Generate seeded mock trials of the three standard tails instead.
        #[arg(long, conflicts_with = "trials", requires = "seed")]
        synthetic: bool,
        /// Trials per group when generating.
        #[arg(long, default_value_t = synthetic::DEFAULT_TRIALS)]
        count: usize,
        /// Marker noise when generating (mm).
        #[arg(long, default_value_t = synthetic::DEFAULT_NOISE)]
        noise: f64,
        /// Tendon travel of the generated trials (mm).
        #[arg(long, default_value_t = 21.0)]
        displacement: f64,
    },
    /// Energy-minimisation check of the incremental solver.
    Oracle {
        #[arg(long, value_delimiter = ',', required = true)]
        tracts: Vec<usize>,
        #[arg(long)]
        force: f64,
        /// Gradient-norm tolerance (N).
        #[arg(long, default_value_t = OracleSettings::default().tol)]
        tol: f64,
        #[command(flatten)]
        tail: TailArg,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_tail(arg: &TailArg, default: MorphologySpec) -> Result<Morphology, AppError> {
    let Some(t) = &arg.tail else {
        return Ok(Morphology {
            name: "joint".into(),
            spec: default,
        });
    };
    if let Some(p) = StandardTail::ALL.iter().find(|p| p.label().eq_ignore_ascii_case(t)) {
        return Ok(Morphology {
            name: p.label().into(),
            spec: p.spec(),
        });
    }
    load_morphology(Path::new(t))
}

fn solver_settings(cli: &Cli) -> SolverSettings {
    let mut s = SolverSettings::default();
    if let Some(n) = cli.steps {
        s.steps = n as usize;
    }
    s
}

fn single_joint() -> MorphologySpec {
    MorphologySpec::single_joint(JointProfile::standard())
}

/// Writes to `<out>/<name>.<ext>` or to stdout.
fn emit<F>(cli: &Cli, name: &str, ext: &str, write: F) -> Result<(), AppError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
            let path = dir.join(format!("{name}.{ext}"));
            let mut f = std::fs::File::create(&path).map_err(|e| AppError::io(&path, e))?;
            write(&mut f).map_err(|e| AppError::io(&path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| AppError::io("<stdout>", e))
        }
    }
}

fn emit_table<T: Serialize>(cli: &Cli, name: &str, header: &[&str], rows: &[T]) -> Result<(), AppError> {
    match cli.format {
        Format::Csv => emit(cli, name, "csv", |w| {
            io::write_csv_to(w, header, rows).map_err(std::io::Error::other)
        }),
        Format::Json => emit_json(cli, name, rows),
    }
}

fn emit_json<T: Serialize + ?Sized>(cli: &Cli, name: &str, value: &T) -> Result<(), AppError> {
    emit(cli, name, "json", |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

pub fn run(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Calibrate {
            fixture,
            affine,
            tail,
        } => calibrate(cli, fixture, *affine, tail),
        Command::Solve {
            tracts,
            force,
            displacement,
            fixture,
            tail,
        } => solve(cli, tracts, *force, *displacement, fixture.as_deref(), tail),
        Command::Predict {
            tracts,
            displacement,
            tail,
        } => predict(cli, tracts, *displacement, tail),
        Command::Sweep => run_sweep(cli),
        Command::Analyze {
            trials,
            synthetic,
            count,
            noise,
            displacement,
        } => {
            if *synthetic {
                analyze_synthetic(cli, *count, *noise, *displacement)
            } else {
                analyze_files(cli, trials)
            }
        }
        Command::Oracle {
            tracts,
            force,
            tol,
            tail,
        } => oracle(cli, tracts, *force, *tol, tail),
    }
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    slope_n_per_mm: f64,
    intercept_n: f64,
    r_squared: f64,
    samples: usize,
    k_theta_nmm_per_rad: f64,
}

fn calibrate(cli: &Cli, fixture: &Path, affine: bool, tail: &TailArg) -> Result<(), AppError> {
    let samples = io::read_fixture(fixture)?;
    let mode = if affine { FitMode::Affine } else { FitMode::ThroughOrigin };
    let fit = calibrate_linear(&samples, mode)?;
    let sample = resolve_tail(tail, single_joint())?;
    let solver = solver_settings(cli);
    let settings = CalibrationSettings {
        steps: solver.steps,
        fd: solver.fd,
        ..CalibrationSettings::default()
    };
    let k = calibrate_spring_stiffness_with(&fit, &sample.spec, &settings)?;
    let report = CalibrationReport {
        slope_n_per_mm: fit.slope,
        intercept_n: fit.intercept,
        r_squared: fit.r_squared,
        samples: samples.len(),
        k_theta_nmm_per_rad: k,
    };
    match cli.format {
        Format::Json => emit_json(cli, "calibration", &report),
        Format::Csv => emit_table(
            cli,
            "calibration",
            &["slope_n_per_mm", "intercept_n", "r_squared", "samples", "k_theta_nmm_per_rad"],
            &[report],
        ),
    }
}

#[derive(Debug, Serialize)]
struct HistoryRow {
    increment: usize,
    force_n: f64,
    gamma_rad: f64,
    travel_mm: f64,
    node_id: usize,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
}

fn solve(
    cli: &Cli,
    tracts: &[usize],
    force: Option<f64>,
    displacement: Option<f64>,
    fixture: Option<&Path>,
    tail: &TailArg,
) -> Result<(), AppError> {
    let force = match (force, displacement, fixture) {
        (Some(f), _, _) => f,
        (None, Some(d), Some(path)) => {
            let fit = calibrate_linear(&io::read_fixture(path)?, FitMode::ThroughOrigin)?;
            fit.force_from_displacement(d)?
        }
        _ => return Err(AppError::Usage("give --force, or --displacement with --fixture".into())),
    };
    let m = resolve_tail(tail, single_joint())?;
    let model = build_tail(&m.spec)?;
    let solver = solver_settings(cli);
    let case = LoadCase {
        steps: solver.steps,
        fd: solver.fd,
        ..LoadCase::force(tracts, force)
    };
    let r = euler_solve(&model, &case)?;
    let rows: Vec<HistoryRow> = r
        .node_history
        .iter()
        .enumerate()
        .flat_map(|(i, nodes)| {
            let (f, g, t) = (r.force_history[i], r.gamma_history[i], r.attachment_travel[i]);
            nodes.iter().enumerate().map(move |(n, p)| HistoryRow {
                increment: i,
                force_n: f,
                gamma_rad: g,
                travel_mm: t,
                node_id: n,
                x_mm: p[0],
                y_mm: p[1],
                z_mm: p[2],
            })
        })
        .collect();
    emit_table(
        cli,
        "solve",
        &["increment", "force_n", "gamma_rad", "travel_mm", "node_id", "x_mm", "y_mm", "z_mm"],
        &rows,
    )
}

fn predict(cli: &Cli, tracts: &[usize], displacement: f64, tail: &TailArg) -> Result<(), AppError> {
    if tail.tail.is_none() {
        return Err(AppError::Usage("predict needs --tail".into()));
    }
    let m = resolve_tail(tail, single_joint())?;
    let pose = sweep::case_pose(&m, tracts, displacement, Engine::Uniform, &solver_settings(cli))?;
    let planar = collapse_tail_pose(&pose);
    let tip = tip_metrics(&planar)?;
    let label = sweep::tract_label(tracts);
    let rows: Vec<io::ResultRow> = planar
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| io::ResultRow {
            case_id: 0,
            tail: m.name.clone(),
            tracts: label.clone(),
            displacement_mm: displacement,
            joint_id: j + 1,
            rho_mm: p.rho,
            z_mm: p.z,
            tip_perp_mm: tip.perpendicular_distance,
            tip_radial_mm: tip.radial_displacement,
        })
        .collect();
    emit_table(cli, "predict", &io::RESULT_COLUMNS, &rows)
}

fn run_sweep(cli: &Cli) -> Result<(), AppError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| AppError::Usage("sweep needs --config".into()))?;
    let mut config = parse_config(path)?;
    if let Some(n) = cli.steps {
        config.solver.steps = n as usize;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let outcome = sweep::run_sweep(&config, cli.jobs)?;
    let ext = cli.format.extension();
    io::write_results(&out_dir.join(format!("sweep.{ext}")), &outcome.rows, cli.format)?;
    let errors = out_dir.join(format!("errors.{ext}"));
    if outcome.failures.is_empty() {
        if errors.exists() {
            std::fs::remove_file(&errors).map_err(|e| AppError::io(&errors, e))?;
        }
        Ok(())
    } else {
        io::write_failures(&errors, &outcome.failures, cli.format)?;
        Err(AppError::CaseFailures {
            failed: outcome.failures.len(),
            total: outcome.cases,
        })
    }
}

#[derive(Debug, Serialize)]
struct MetricStats {
    metric: &'static str,
    f: f64,
    p: f64,
    /// Tukey-adjusted p for each pair of groups, `[i][j]`.
    pairwise_p: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    label: String,
    trials: usize,
    mean_tip_perp_mm: f64,
    mean_tip_radial_mm: f64,
    /// Spread of each marker across trials.
    pairwise_std_mm: Vec<f64>,
    /// Against the predicted pose, when one is known.
    nrmse_percent: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    groups: Vec<GroupSummary>,
    statistics: Vec<MetricStats>,
}

struct Group {
    label: String,
    poses: Vec<PlanarPose>,
    reference: Option<(PlanarPose, f64)>,
}

fn analyze_groups(cli: &Cli, groups: Vec<Group>) -> Result<(), AppError> {
    let mut summaries = Vec::new();
    let mut perp = Vec::new();
    let mut radial = Vec::new();
    for g in &groups {
        let metrics = g
            .poses
            .iter()
            .map(tip_metrics)
            .collect::<Result<Vec<_>, _>>()?;
        let p: Vec<f64> = metrics.iter().map(|m| m.perpendicular_distance).collect();
        let r: Vec<f64> = metrics.iter().map(|m| m.radial_displacement).collect();
        let nrmse = match &g.reference {
            Some((pose, length)) => Some(normalized_rms_error(
                &vec![pose.clone(); g.poses.len()],
                &g.poses,
                *length,
            )?),
            None => None,
        };
        summaries.push(GroupSummary {
            label: g.label.clone(),
            trials: g.poses.len(),
            mean_tip_perp_mm: p.iter().sum::<f64>() / p.len() as f64,
            mean_tip_radial_mm: r.iter().sum::<f64>() / r.len() as f64,
            pairwise_std_mm: pairwise_std(&g.poses)?,
            nrmse_percent: nrmse,
        });
        perp.push(p);
        radial.push(r);
    }
    let labels: Vec<&str> = groups.iter().map(|g| g.label.as_str()).collect();
    let mut statistics = Vec::new();
    for (metric, samples) in [("tip_perp_mm", perp), ("tip_radial_mm", radial)] {
        let s = group_stats(&labels, samples)?;
        statistics.push(MetricStats {
            metric,
            f: s.f,
            p: s.p,
            pairwise_p: s.pairwise_p,
        });
    }
    let report = AnalysisReport {
        groups: summaries,
        statistics,
    };
    match cli.format {
        Format::Json => emit_json(cli, "analysis", &report),
        Format::Csv => emit(cli, "analysis", "txt", |w| write_report(w, &report)),
    }
}

fn write_report(w: &mut dyn Write, r: &AnalysisReport) -> std::io::Result<()> {
    for g in &r.groups {
        write!(
            w,
            "{}: n={} tip_perp={:.3} mm tip_radial={:.3} mm pairwise_std=[",
            g.label, g.trials, g.mean_tip_perp_mm, g.mean_tip_radial_mm
        )?;
        let std: Vec<String> = g.pairwise_std_mm.iter().map(|s| format!("{s:.3}")).collect();
        write!(w, "{}]", std.join(", "))?;
        if let Some(e) = g.nrmse_percent {
            write!(w, " nrmse={e:.3}%")?;
        }
        writeln!(w)?;
    }
    let labels: Vec<&str> = r.groups.iter().map(|g| g.label.as_str()).collect();
    for s in &r.statistics {
        writeln!(w, "{}: F={:.6} p={:.3e}", s.metric, s.f, s.p)?;
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                writeln!(w, "  {} vs {}: p={:.3e}", labels[i], labels[j], s.pairwise_p[i][j])?;
            }
        }
    }
    Ok(())
}

fn analyze_files(cli: &Cli, files: &[PathBuf]) -> Result<(), AppError> {
    let frame = BaseFrame::default();
    let mut groups = Vec::new();
    for path in files {
        let trials = io::read_trials(path)?;
        let poses = trials
            .iter()
            .map(|t| t.collapse(&frame))
            .collect::<Result<Vec<_>, _>>()?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        groups.push(Group {
            label,
            poses,
            reference: None,
        });
    }
    analyze_groups(cli, groups)
}

fn analyze_synthetic(cli: &Cli, count: usize, noise: f64, displacement: f64) -> Result<(), AppError> {
    let seed = cli
        .seed
        .ok_or_else(|| AppError::Usage("--synthetic needs --seed".into()))?;
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(AppError::Usage(format!("--noise must be >= 0, got {noise}")));
    }
    if count < 2 {
        return Err(AppError::Usage("--count must be at least 2".into()));
    }
    let mut rng = synthetic::rng(seed);
    let frame = BaseFrame::default();
    let mut groups = Vec::new();
    for tail in StandardTail::ALL {
        let m = Morphology {
            name: tail.label().into(),
            spec: tail.spec(),
        };
        let pose = sweep::case_pose(&m, &[0], displacement, Engine::Uniform, &solver_settings(cli))?;
        let trials: Vec<Trial> = synthetic::noisy_trials(&pose, count, noise, &mut rng);
        if let Some(dir) = &cli.out {
            io::write_trials(&dir.join(format!("trials_{}.csv", m.name)), &trials)?;
        }
        let poses = trials
            .iter()
            .map(|t| t.collapse(&frame))
            .collect::<Result<Vec<_>, _>>()?;
        let mut predicted = collapse_tail_pose(&pose);
        predicted.tip = None;
        groups.push(Group {
            label: m.name,
            poses,
            reference: Some((predicted, m.spec.total_length())),
        });
    }
    analyze_groups(cli, groups)
}

#[derive(Debug, Serialize)]
struct OracleRow {
    node_id: usize,
    solver_x_mm: f64,
    solver_y_mm: f64,
    solver_z_mm: f64,
    oracle_x_mm: f64,
    oracle_y_mm: f64,
    oracle_z_mm: f64,
    distance_mm: f64,
}

fn oracle(cli: &Cli, tracts: &[usize], force: f64, tol: f64, tail: &TailArg) -> Result<(), AppError> {
    let m = resolve_tail(tail, single_joint())?;
    let model = build_tail(&m.spec)?;
    let solver = solver_settings(cli);
    let case = LoadCase {
        steps: solver.steps,
        fd: solver.fd,
        record_history: false,
        ..LoadCase::force(tracts, force)
    };
    let r = euler_solve(&model, &case)?;
    let settings = OracleSettings {
        tol,
        ..OracleSettings::default()
    };
    let eq = minimize_total_energy_with(&model, &r.final_load, &settings)?;
    let rows: Vec<OracleRow> = r
        .final_pose
        .iter()
        .zip(&eq.positions)
        .enumerate()
        .map(|(i, (a, b))| OracleRow {
            node_id: i,
            solver_x_mm: a[0],
            solver_y_mm: a[1],
            solver_z_mm: a[2],
            oracle_x_mm: b[0],
            oracle_y_mm: b[1],
            oracle_z_mm: b[2],
            distance_mm: ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt(),
        })
        .collect();
    emit_table(
        cli,
        "oracle",
        &[
            "node_id",
            "solver_x_mm",
            "solver_y_mm",
            "solver_z_mm",
            "oracle_x_mm",
            "oracle_y_mm",
            "oracle_z_mm",
            "distance_mm",
        ],
        &rows,
    )
}
