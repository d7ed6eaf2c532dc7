//! Command-line front end for `dhls-core`.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 computational
//! failure or failed certification.

pub mod config;
pub mod output;

use clap::Parser;
use clap::error::ErrorKind;
use config::{Cli, Command, CommandKind, CommonArgs, Format, RunConfig};
use dhls_core::bounds::{self, BoundsReport};
use dhls_core::maxprinciple::{AxisDecay, verify_decay};
use dhls_core::optimizer::solve_optimizer;
use dhls_core::verify::{CertificationEntry, CertifyOptions, certify_all};
use dhls_core::{Convention, GridSpec, Mode};
use output::{SCHEMA_VERSION, SweepLine};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn compute(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (program name first) and runs one command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => {
            with_config(CommandKind::Compute, &a.common, |cfg| compute(cfg, a.vector_out.as_deref(), stdout))
        }
        Command::Sweep(a) => {
            with_config(CommandKind::Sweep, &a.common, |cfg| sweep(cfg, a.plot_out.as_deref(), stdout))
        }
        Command::Verify(a) => with_config(CommandKind::Verify, a, |cfg| verify(cfg, stdout)),
        Command::Decay(a) => with_config(CommandKind::Decay, a, |cfg| decay(cfg, stdout)),
        Command::Bounds(a) => with_config(CommandKind::Bounds, a, |cfg| bounds_cmd(cfg, stdout)),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let kind = if f.code == EXIT_USAGE { "usage" } else { "error" };
            let _ = writeln!(stderr, "{kind}: {}", f.message);
            f.code
        }
    }
}

fn with_config(kind: CommandKind, args: &CommonArgs, body: impl FnOnce(&RunConfig) -> Outcome) -> Outcome {
    let cfg = config::resolve(kind, args).map_err(Failure::usage)?;
    body(&cfg)
}

/// Writes to `path` (resolved against the output directory) atomically.
fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    let path = config::resolve_path(path);
    output::write_atomic(&path, text)
        .map_err(|e| Failure::compute(format!("cannot write {}: {e}", path.display())))
}

/// To the configured output file, else to standard output.
fn emit(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &cfg.output {
        Some(path) => write_file(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::compute(format!("cannot write output: {e}"))),
    }
}

fn preamble(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("schema_version={SCHEMA_VERSION}"),
        format!("config={}", output::to_json_line(cfg)),
    ]
}

#[derive(Serialize)]
struct ComputeReport<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    n: usize,
    #[serde(rename = "N")]
    side: usize,
    convention: Convention,
    lambda: f64,
    residual: f64,
    gap_ratio: Option<f64>,
    iterations: usize,
    min_entry: f64,
    mode: Mode,
}

fn grid_of(cfg: &RunConfig) -> Result<GridSpec, Failure> {
    GridSpec::new(cfg.n, cfg.convention, cfg.side()).map_err(|e| Failure::usage(e.to_string()))
}

fn compute(cfg: &RunConfig, vector_out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    let grid = grid_of(cfg)?;
    let opt = solve_optimizer(&grid, &cfg.solver()).map_err(Failure::compute)?;
    let report = ComputeReport {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        n: cfg.n,
        side: cfg.side(),
        convention: cfg.convention,
        lambda: opt.lambda,
        residual: opt.el_residual,
        gap_ratio: opt.gap_ratio,
        iterations: opt.iterations,
        min_entry: opt.min_entry,
        mode: opt.mode,
    };
    let text = match cfg.format {
        Format::Json => output::to_json(&report),
        Format::Csv => {
            let mut text: String = preamble(cfg).iter().map(|p| format!("# {p}\n")).collect();
            text.push_str("n,N,lambda,residual,gap_ratio,iterations,min_entry\n");
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.n,
                report.side,
                output::format_float(report.lambda),
                output::format_float(report.residual),
                report.gap_ratio.map(output::format_float).unwrap_or_default(),
                report.iterations,
                output::format_float(report.min_entry),
            ));
            text
        }
    };
    if let Some(path) = vector_out {
        let mut dump: String = (1..=cfg.n).map(|i| format!("x{i},")).collect();
        dump.push_str("value\n");
        for (p, v) in grid.points().zip(&opt.vector) {
            for c in p.coords() {
                dump.push_str(&format!("{c},"));
            }
            dump.push_str(&output::format_float(*v));
            dump.push('\n');
        }
        write_file(path, &dump)?;
    }
    emit(cfg, &text, stdout)?;
    Ok(EXIT_OK)
}

fn sweep_lines(cfg: &RunConfig) -> Vec<SweepLine> {
    let solver = cfg.solver();
    let mut lines: Vec<SweepLine> = Vec::with_capacity(cfg.sides.len());
    for &side in &cfg.sides {
        let ln_n = (side as f64).ln();
        let mut line = match bounds::sweep_row(cfg.n, side, &solver) {
            Ok(row) => SweepLine {
                n: cfg.n,
                side,
                lambda: Some(row.lambda),
                lower: row.lower,
                upper: row.upper,
                slope_prev: None,
                ln_n,
                wall_ms: (!cfg.deterministic).then_some(row.wall_ms),
                error: None,
            },
            Err(e) => {
                let grid = GridSpec::unit(cfg.n, side).expect("validated grid");
                SweepLine {
                    n: cfg.n,
                    side,
                    lambda: None,
                    lower: bounds::lower_bound_uniform(&grid),
                    upper: bounds::upper_bound_center(&grid),
                    slope_prev: None,
                    ln_n,
                    wall_ms: None,
                    error: Some(e.to_string()),
                }
            }
        };
        if let (Some(prev), Some(lambda)) = (lines.last(), line.lambda) {
            line.slope_prev = prev.lambda.map(|p| (lambda - p) / (ln_n - prev.ln_n));
        }
        lines.push(line);
    }
    lines
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    rows: &'a [SweepLine],
}

/// Default plot file next to the table: `<stem>.plot.csv`.
fn plot_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy();
    output.with_file_name(format!("{stem}.plot.csv"))
}

fn sweep(cfg: &RunConfig, plot_out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    let lines = sweep_lines(cfg);
    let text = match cfg.format {
        Format::Csv => output::emit_sweep_csv(&preamble(cfg), &lines),
        Format::Json => output::to_json(&SweepReport {
            schema_version: SCHEMA_VERSION,
            config: cfg,
            rows: &lines,
        }),
    };
    emit(cfg, &text, stdout)?;
    let plot = plot_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.as_deref().map(plot_path));
    if let Some(path) = plot {
        write_file(&path, &output::emit_plot_csv(&lines))?;
    }
    Ok(if lines.iter().any(|l| l.error.is_some()) {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    n: usize,
    #[serde(rename = "N")]
    side: usize,
    tol: f64,
    seed: u64,
    entries: &'a [CertificationEntry],
    pass: bool,
}

fn verify(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let opts = CertifyOptions {
        solver: cfg.solver(),
        seed: cfg.seed,
        record_timing: !cfg.deterministic,
        ..Default::default()
    };
    let report = certify_all(cfg.n, cfg.side(), &opts).map_err(Failure::compute)?;
    let text = output::to_json(&VerifyOutput {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        n: report.n,
        side: report.side,
        tol: report.tol,
        seed: report.seed,
        entries: &report.entries,
        pass: report.pass,
    });
    emit(cfg, &text, stdout)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
}

#[derive(Serialize)]
struct DecayOutput<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    n: usize,
    #[serde(rename = "N")]
    side: usize,
    lambda: f64,
    #[serde(rename = "delta_N")]
    delta_n: f64,
    norm_bound: f64,
    axes: &'a [AxisDecay],
    pass: bool,
}

fn decay(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let grid = grid_of(cfg)?;
    let opt = solve_optimizer(&grid, &cfg.solver()).map_err(Failure::compute)?;
    let report = verify_decay(&opt).map_err(Failure::compute)?;
    let text = output::to_json(&DecayOutput {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        n: cfg.n,
        side: cfg.side(),
        lambda: report.lambda,
        delta_n: report.delta_n,
        norm_bound: report.norm_bound,
        axes: &report.axes,
        pass: report.pass,
    });
    emit(cfg, &text, stdout)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    n: usize,
    #[serde(rename = "N")]
    side: usize,
    convention: Convention,
    lower_uniform: f64,
    lambda: Option<f64>,
    upper_center: f64,
    integral_estimate: f64,
    sphere_area: f64,
    #[serde(rename = "ln_N")]
    ln_n: f64,
    intercept: Option<f64>,
    sandwich_holds: bool,
}

fn bounds_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let grid = grid_of(cfg)?;
    let cfg_solver = dhls_core::SolverConfig {
        with_gap: false,
        ..cfg.solver()
    };
    let opt = solve_optimizer(&grid, &cfg_solver).map_err(Failure::compute)?;
    let rep = BoundsReport::new(&grid, Some(opt.lambda));
    let text = output::to_json(&BoundsOutput {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        n: cfg.n,
        side: cfg.side(),
        convention: cfg.convention,
        lower_uniform: rep.lower_uniform,
        lambda: rep.lambda,
        upper_center: rep.upper_center,
        integral_estimate: rep.integral_estimate,
        sphere_area: rep.sphere_area,
        ln_n: rep.log_n,
        intercept: rep.intercept(),
        sandwich_holds: rep.sandwich_holds(),
    });
    emit(cfg, &text, stdout)?;
    Ok(if rep.sandwich_holds() { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("dhls").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn compute_examples() {
        let (code, out, _) = run_args(&["compute", "-n", "1", "-N", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12);

        let (code, out, _) = run_args(&["compute", "-n", "2", "-N", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["lambda"].as_f64().unwrap() - 2.5).abs() < 1e-10);
        assert_eq!(v["config"]["N"][0], 2);

        let (code, _, err) = run_args(&["compute", "-n", "1", "-N", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("usage"), "{err}");
    }

    #[test]
    fn non_convergence_is_exit_2() {
        let (code, _, err) = run_args(&["compute", "-n", "1", "-N", "20", "--max-iter", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("not converged"), "{err}");
    }

    #[test]
    fn help_and_bad_flags() {
        assert_eq!(run_args(&["--help"]).0, 0);
        assert_eq!(run_args(&["--version"]).0, 0);
        assert_eq!(run_args(&["verify", "--bogus"]).0, 1);
        assert_eq!(run_args(&[]).0, 1);
    }

    #[test]
    fn sweep_to_stdout() {
        let (code, out, _) = run_args(&["sweep", "-n", "1", "-N", "2,3", "--deterministic"]);
        assert_eq!(code, 0);
        let lines = output::parse_sweep_csv(&out).unwrap();
        assert_eq!(lines.len(), 2);
        assert!((lines[0].lambda.unwrap() - 1.0).abs() < 1e-12);
        assert!((lines[1].lambda.unwrap() - 1.686_140_661_634_507).abs() < 1e-9);
        assert!(lines[0].slope_prev.is_none() && lines[1].slope_prev.is_some());
        assert!(lines.iter().all(|l| l.wall_ms.is_none()));
    }

    #[test]
    fn sweep_records_row_failures() {
        let (code, out, _) = run_args(&["sweep", "-n", "1", "-N", "2,30", "--max-iter", "3"]);
        assert_eq!(code, 2);
        let lines = output::parse_sweep_csv(&out).unwrap();
        assert!(lines[1].error.is_some() && lines[1].lambda.is_none());
        assert!(lines[1].lower > 0.0);
    }

    #[test]
    fn decay_and_bounds() {
        let (code, out, _) = run_args(&["decay", "-n", "1", "-N", "4"]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["axes"][0]["min_d"].as_f64().unwrap() >= 0.0);
        assert_eq!(run_args(&["decay", "-n", "1", "-N", "4", "--convention", "unit"]).0, 1);

        let (code, out, _) = run_args(&["bounds", "-n", "1", "-N", "3"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["lower_uniform"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(v["upper_center"].as_f64(), Some(2.0));
    }
}
