//! Command-line front end.
//!
//! Exit codes: 0 success or pass, 1 runtime error, 2 configuration or input
//! error, 3 hypothesis check failed, 10 blow-up detected (simulate), 11 step
//! underflow (simulate), 20 certificate or Poincaré check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::{parse_value, preset, ConfigError, RunConfig, PRESET_NAMES};
use crate::diagnostics::{fmt17, write_field_csv, Verdict};
use crate::domain::Grid;
use crate::operator::assemble;
use crate::pipeline::{
    certify_config, check_hypotheses, condition_mode, prepare, setup, simulate, RunError,
};
use crate::solver::Outcome;
use crate::source::ConditionMode;
use crate::spectral::{smallest_eigenvalue, verify_poincare, SpectralError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_BLOWUP: i32 = 10;
pub const EXIT_UNDERFLOW: i32 = 11;
pub const EXIT_CERTIFICATE: i32 = 20;

#[derive(Debug, Parser)]
#[command(name = "grushin-pme", version, about = "Degenerate porous medium runs with Grushin diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset; overlaid by --config when both are given.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV outputs.
    #[arg(long, overrides_with = "no_csv")]
    csv: bool,
    /// Skip CSV outputs.
    #[arg(long = "no-csv", overrides_with = "csv")]
    no_csv: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// First Dirichlet eigenvalue and Poincaré check.
    Eigen {
        #[command(flatten)]
        run: RunArgs,
        /// Write the assembled matrix in coordinate text form.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Parameter constraints and the structural condition on f.
    CheckConditions {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time stepping only.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Blow-up pipeline with certificate.
    CertifyBlowup {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Global-existence pipeline with certificate.
    CertifyGlobal {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Eigenvalue convergence under grid refinement.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
    },
    /// List presets or print one.
    Presets {
        #[arg(long)]
        name: Option<String>,
    },
}

/// Parses `argv` (program name first), runs the subcommand, returns the exit
/// code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) | RunError::InvalidInitialData(_) | RunError::Domain(_) => EXIT_CONFIG,
        RunError::Spectral(SpectralError::PoincareViolated { .. }) => EXIT_CERTIFICATE,
        _ => EXIT_RUNTIME,
    }
}

fn execute(command: Command) -> Result<i32, RunError> {
    match command {
        Command::Presets { name } => Ok(presets_command(name.as_deref())),
        Command::Eigen { run, dump_matrix } => eigen_command(&load(&run)?, dump_matrix.as_deref()),
        Command::CheckConditions { run } => check_command(&load(&run)?),
        Command::Simulate { run } => simulate_command(&load(&run)?),
        Command::CertifyBlowup { run } => certify_command(&load(&run)?, ConditionMode::BlowUp),
        Command::CertifyGlobal { run } => certify_command(&load(&run)?, ConditionMode::Global),
        Command::Convergence { run } => convergence_command(&load(&run)?),
    }
}

fn config_error(path: &str, message: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Schema {
        path: path.into(),
        message: message.into(),
    })
}

fn load(args: &RunArgs) -> Result<RunConfig, RunError> {
    let mut doc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error("", format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| config_error("", e.to_string()))?
        }
        None if args.preset.is_some() => Value::Object(Default::default()),
        None => return Err(config_error("", "either --config or --preset is required")),
    };
    if let Some(name) = &args.preset {
        let Some(obj) = doc.as_object_mut() else {
            return Err(config_error("", "document must be a JSON object"));
        };
        obj.insert("preset".into(), Value::String(name.clone()));
    }
    let mut cfg = parse_value(doc)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.csv {
        cfg.output.csv = true;
    }
    if args.no_csv {
        cfg.output.csv = false;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, RunError> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    Ok(&cfg.output.dir)
}

fn write_summary(dir: &Path, rows: &[(String, String)]) -> Result<(), RunError> {
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(text, "{k},{v}");
    }
    std::fs::write(dir.join("summary.csv"), text)?;
    Ok(())
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn presets_command(name: Option<&str>) -> i32 {
    match name {
        None => {
            for n in PRESET_NAMES {
                println!("{n}");
            }
            EXIT_OK
        }
        Some(n) => match preset(n) {
            Some(doc) => {
                print!("{doc}");
                EXIT_OK
            }
            None => {
                eprintln!("error: unknown preset `{n}`; known: {}", PRESET_NAMES.join(", "));
                EXIT_CONFIG
            }
        },
    }
}

fn eigen_command(cfg: &RunConfig, dump: Option<&Path>) -> Result<i32, RunError> {
    let s = setup(cfg)?;
    if let Some(path) = dump {
        s.op.write_coordinate(path)?;
    }
    let dir = out_dir(cfg)?;
    let report = verify_poincare(&s.op, s.eigen.lambda1, cfg.eigen.trials, cfg.seed)?;
    println!("lambda1={}", fmt17(s.eigen.lambda1));
    println!("residual={:e}", s.eigen.residual);
    println!("iterations={}", s.eigen.iterations);
    println!("poincare_trials={}\npoincare_violations=0", report.trials);
    let mut rows = vec![
        kv("gamma", cfg.domain.gamma),
        kv("lambda1", fmt17(s.eigen.lambda1)),
        kv("residual", s.eigen.residual),
        kv("iterations", s.eigen.iterations),
        kv("poincare_trials", report.trials),
        kv("poincare_min_quotient", report.min_quotient.map(fmt17).unwrap_or_default()),
    ];
    if let Some(sweep) = &cfg.sweep {
        for &gamma in &sweep.gamma {
            let mut spec = cfg.domain.clone();
            spec.gamma = gamma;
            let op = assemble(&Grid::new(spec)?);
            let eig = smallest_eigenvalue(&op, cfg.eigen.tol)?;
            verify_poincare(&op, eig.lambda1, cfg.eigen.trials, cfg.seed)?;
            println!("gamma={gamma} lambda1={}", fmt17(eig.lambda1));
            rows.push(kv(&format!("lambda1[gamma={gamma}]"), fmt17(eig.lambda1)));
        }
    }
    write_summary(dir, &rows)?;
    if cfg.output.csv {
        write_field_csv(&s.grid, &s.eigen.eigenfield, &dir.join("eigenfield.csv"))?;
    }
    Ok(EXIT_OK)
}

fn check_command(cfg: &RunConfig) -> Result<i32, RunError> {
    let Some(mode) = condition_mode(cfg.mode) else {
        return Err(config_error("mode", "check-conditions needs mode blow-up or global"));
    };
    let s = setup(cfg)?;
    let lambda1 = s.eigen.lambda1;
    let (params, param_check, condition) = check_hypotheses(cfg, mode, lambda1)?;
    let mut rows = vec![
        kv("mode", mode.as_str()),
        kv("lambda1", fmt17(lambda1)),
        kv("alpha", params.alpha),
        kv("beta", fmt17(params.beta)),
        kv("theta", params.theta),
        kv("parameter_constraints", param_check.is_ok()),
    ];
    if let Err(msg) = &param_check {
        eprintln!("parameter constraint violated: {msg}");
    }
    let mut ok = param_check.is_ok();
    if let Some(r) = &condition {
        ok &= r.holds && r.holds_asymptotically;
        rows.push(kv("condition_sampled", r.holds));
        rows.push(kv("condition_asymptotic", r.holds_asymptotically));
        rows.push(kv("worst_margin", fmt17(r.worst_margin)));
        rows.push(kv("worst_u", fmt17(r.worst_u)));
        rows.push(kv("samples", r.samples));
        rows.push(kv("u_max", r.u_max));
        rows.push(kv("dominant_power", r.dominant_power));
        rows.push(kv("dominant_coefficient", fmt17(r.dominant_coefficient)));
    }
    for (k, v) in &rows {
        println!("{k}={v}");
    }
    write_summary(out_dir(cfg)?, &rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_HYPOTHESIS })
}

fn outcome_rows(outcome: &Outcome, rows: &mut Vec<(String, String)>) {
    rows.push(kv("outcome", outcome.name()));
    match *outcome {
        Outcome::ReachedHorizon { t } => rows.push(kv("t", fmt17(t))),
        Outcome::BlowupDetected { t_blow, max_u } => {
            rows.push(kv("t_detect", fmt17(t_blow)));
            rows.push(kv("max_u", fmt17(max_u)));
        }
        Outcome::StepUnderflow { t, dt } => {
            rows.push(kv("t_detect", fmt17(t)));
            rows.push(kv("dt", fmt17(dt)));
        }
    }
}

fn simulate_command(cfg: &RunConfig) -> Result<i32, RunError> {
    let prepared = prepare(cfg)?;
    let result = simulate(cfg, &prepared)?;
    let dir = out_dir(cfg)?;
    let mut rows = vec![
        kv("lambda1", fmt17(prepared.setup.eigen.lambda1)),
        kv("J0", fmt17(prepared.j0)),
        kv("mass0", fmt17(prepared.mass0)),
        kv("steps", result.final_state.step_count),
    ];
    outcome_rows(&result.outcome, &mut rows);
    write_summary(dir, &rows)?;
    if cfg.output.csv {
        result.trace.write_csv(&dir.join("trace.csv"))?;
        write_field_csv(&prepared.setup.grid, &result.final_state.u, &dir.join("final_field.csv"))?;
    }
    println!("outcome={} steps={}", result.outcome.name(), result.final_state.step_count);
    Ok(match result.outcome {
        Outcome::ReachedHorizon { .. } => EXIT_OK,
        Outcome::BlowupDetected { .. } => EXIT_BLOWUP,
        Outcome::StepUnderflow { .. } => EXIT_UNDERFLOW,
    })
}

fn certify_command(cfg: &RunConfig, mode: ConditionMode) -> Result<i32, RunError> {
    let certified = certify_config(cfg, mode)?;
    let dir = out_dir(cfg)?;
    let cert = &certified.certificate;
    std::fs::write(dir.join("certificate.txt"), cert.to_key_value())?;
    std::fs::write(dir.join("certificate.json"), cert.to_json())?;
    let mut rows = vec![
        kv("mode", mode.as_str()),
        kv("lambda1", fmt17(cert.lambda1)),
        kv("J0", fmt17(certified.prepared.j0)),
        kv("mass0", fmt17(certified.prepared.mass0)),
        kv("verdict", cert.verdict.as_str()),
    ];
    if let Some(result) = &certified.result {
        outcome_rows(&result.outcome, &mut rows);
        if cfg.output.csv {
            result.trace.write_csv(&dir.join("trace.csv"))?;
            write_field_csv(
                &certified.prepared.setup.grid,
                &result.final_state.u,
                &dir.join("final_field.csv"),
            )?;
        }
    }
    write_summary(dir, &rows)?;
    for c in cert.hypothesis_checks.iter().chain(&cert.monitored_checks) {
        println!(
            "{} {} (worst margin {:e}, tolerance {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst_margin,
            c.tolerance
        );
    }
    println!("verdict={}", cert.verdict.as_str());
    Ok(match cert.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Inconclusive => EXIT_HYPOTHESIS,
        Verdict::Fail => EXIT_CERTIFICATE,
    })
}

/// `Σ_d (4/h_d²) sin²(π h_d / (2 L_d))`: discrete Dirichlet Laplacian on a box.
pub fn closed_form_laplacian_eigenvalue(grid: &Grid) -> f64 {
    grid.spec()
        .extents
        .iter()
        .zip(grid.spacings())
        .map(|(&(a, b), &h)| {
            let s = (std::f64::consts::PI * h / (2.0 * (b - a))).sin();
            4.0 / (h * h) * s * s
        })
        .sum()
}

fn convergence_command(cfg: &RunConfig) -> Result<i32, RunError> {
    let Some(conv) = &cfg.convergence else {
        return Err(config_error("convergence", "section required for this subcommand"));
    };
    let dir = out_dir(cfg)?;
    let mut text = String::from("n,h,lambda1,closed_form,delta,ratio\n");
    let mut prev: Option<f64> = None;
    let mut prev_delta: Option<f64> = None;
    for &n in &conv.levels {
        let mut spec = cfg.domain.clone();
        spec.nodes = vec![n; spec.dimension()];
        let grid = Grid::new(spec)?;
        let op = assemble(&grid);
        let lambda1 = smallest_eigenvalue(&op, cfg.eigen.tol)?.lambda1;
        let closed = if cfg.domain.gamma == 0.0 {
            fmt17(closed_form_laplacian_eigenvalue(&grid))
        } else {
            String::new()
        };
        let delta = prev.map(|p| lambda1 - p);
        let ratio = match (prev_delta, delta) {
            (Some(a), Some(b)) if b != 0.0 => fmt17(a / b),
            _ => String::new(),
        };
        let _ = writeln!(
            text,
            "{n},{},{},{closed},{},{ratio}",
            fmt17(grid.spacing(0)),
            fmt17(lambda1),
            delta.map(fmt17).unwrap_or_default()
        );
        println!("n={n} lambda1={}", fmt17(lambda1));
        prev = Some(lambda1);
        prev_delta = delta;
    }
    if cfg.output.csv {
        std::fs::write(dir.join("convergence.csv"), &text)?;
    }
    Ok(EXIT_OK)
}
