//! Command-line flags, the flat JSON config file, and the merged run
//! configuration.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dhls_core::Convention;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Environment variable overriding the directory that relative output
/// paths are resolved against.
pub const OUTPUT_DIR_ENV: &str = "DHLS_OUTPUT_DIR";

/// Grids beyond this many points are refused before any allocation.
pub const MAX_POINTS: usize = 1 << 22;

#[derive(Debug, Parser)]
#[command(name = "dhls", version, about = "Sharp constants of the critical discrete HLS inequality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharp constant and optimizer for one grid.
    Compute(ComputeArgs),
    /// λ_N over a list of N, with bounds and log-slopes.
    Sweep(SweepArgs),
    /// Run the full certification suite.
    Verify(CommonArgs),
    /// Monotone decay check on a centered grid.
    Decay(CommonArgs),
    /// Lower and upper bounds for one grid.
    Bounds(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dimension n (1 to 4).
    #[arg(short = 'n', long = "dim")]
    pub n: Option<usize>,
    /// Side length N; a comma-separated list for `sweep`.
    #[arg(short = 'N', long = "side", value_delimiter = ',', num_args = 1..)]
    pub side: Vec<usize>,
    /// unit = {1..N}^n, centered = {-N..N}^n.
    #[arg(long)]
    pub convention: Option<Convention>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub shift: Option<f64>,
    /// Grids with more points use the FFT path.
    #[arg(long)]
    pub dense_limit: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Omit wall-clock fields so output is byte-reproducible.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; relative paths resolve against $DHLS_OUTPUT_DIR when set.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Flat JSON file with any of the run-config keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the optimizer as CSV (coordinates, value).
    #[arg(long)]
    pub vector_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Plot data file (ln_N, lambda, lower, upper); defaults to
    /// `<output stem>.plot.csv` when writing to a file.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Compute,
    Sweep,
    Verify,
    Decay,
    Bounds,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Compute => "compute",
            CommandKind::Sweep => "sweep",
            CommandKind::Verify => "verify",
            CommandKind::Decay => "decay",
            CommandKind::Bounds => "bounds",
        }
    }

    fn default_format(self) -> Format {
        match self {
            CommandKind::Sweep => Format::Csv,
            _ => Format::Json,
        }
    }

    fn default_convention(self) -> Convention {
        match self {
            CommandKind::Decay => Convention::Centered,
            _ => Convention::Unit,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sides {
    One(usize),
    Many(Vec<usize>),
}

/// Config file contents: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub side: Option<Sides>,
    pub convention: Option<Convention>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub shift: Option<f64>,
    pub dense_limit: Option<usize>,
    pub seed: Option<u64>,
    pub deterministic: Option<bool>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// The effective configuration after merging flags over the config file
/// over defaults. Echoed into every output; the output path is not, so
/// that identical runs written to different files stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub n: usize,
    #[serde(rename = "N")]
    pub sides: Vec<usize>,
    pub convention: Convention,
    pub tol: f64,
    pub max_iter: usize,
    pub shift: f64,
    pub dense_limit: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn side(&self) -> usize {
        self.sides[0]
    }

    pub fn solver(&self) -> dhls_core::SolverConfig {
        dhls_core::SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            shift: self.shift,
            dense_limit: self.dense_limit,
            ..Default::default()
        }
    }
}

/// Merges and validates. All problems are reported together, joined into
/// one message.
pub fn resolve(kind: CommandKind, args: &CommonArgs) -> Result<RunConfig, String> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = dhls_core::SolverConfig::default();
    let mut problems = Vec::new();

    let n = args.n.or(file.n);
    let sides = if !args.side.is_empty() {
        args.side.clone()
    } else {
        match file.side {
            Some(Sides::One(s)) => vec![s],
            Some(Sides::Many(v)) => v,
            None => Vec::new(),
        }
    };
    let convention_given = args.convention.or(file.convention);
    let convention = convention_given.unwrap_or(kind.default_convention());
    let tol = args.tol.or(file.tol).unwrap_or(defaults.tol);
    let max_iter = args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter);
    let shift = args.shift.or(file.shift).unwrap_or(defaults.shift);
    let dense_limit = args
        .dense_limit
        .or(file.dense_limit)
        .unwrap_or(defaults.dense_limit);
    let format = args.format.or(file.format).unwrap_or(kind.default_format());

    let n = match n {
        None => {
            problems.push("missing dimension (-n)".to_string());
            0
        }
        Some(n) if !(1..=4).contains(&n) => {
            problems.push(format!("dimension n must be in 1..=4, got {n}"));
            n
        }
        Some(n) => n,
    };
    if sides.is_empty() {
        problems.push("missing side length (-N)".to_string());
    }
    if let Some(&bad) = sides.iter().find(|&&s| s == 0) {
        problems.push(format!("side length N must be at least 1, got {bad}"));
    }
    if kind == CommandKind::Sweep {
        if sides.windows(2).any(|w| w[0] >= w[1]) {
            problems.push("sweep N list must be strictly increasing".to_string());
        }
    } else if sides.len() > 1 {
        problems.push(format!("{} takes a single N, got {}", kind.name(), sides.len()));
    }
    if (1..=4).contains(&n) {
        for &s in &sides {
            let span = match convention {
                Convention::Unit => s,
                Convention::Centered => 2 * s + 1,
            };
            let points = span.checked_pow(n as u32).unwrap_or(usize::MAX);
            if points > MAX_POINTS {
                problems.push(format!(
                    "grid n={n} N={s} has {points} points, above the limit {MAX_POINTS}"
                ));
            }
        }
    }
    if !(tol > 0.0 && tol < 1.0) {
        problems.push(format!("tol must be in (0, 1), got {tol}"));
    }
    if max_iter == 0 {
        problems.push("max_iter must be positive".to_string());
    }
    if !(shift >= 0.0 && shift.is_finite()) {
        problems.push(format!("shift must be finite and nonnegative, got {shift}"));
    }
    if dense_limit == 0 {
        problems.push("dense_limit must be positive".to_string());
    }
    match kind {
        CommandKind::Decay if convention != Convention::Centered => {
            problems.push("decay needs the centered convention".to_string())
        }
        CommandKind::Sweep if convention != Convention::Unit => {
            problems.push("sweep runs on unit grids only".to_string())
        }
        CommandKind::Verify if convention_given == Some(Convention::Centered) => problems
            .push("verify chooses grid conventions itself; drop --convention".to_string()),
        _ => {}
    }
    if matches!(kind, CommandKind::Verify | CommandKind::Decay | CommandKind::Bounds)
        && format != Format::Json
    {
        problems.push(format!("{} writes JSON only", kind.name()));
    }

    if !problems.is_empty() {
        return Err(problems.join("; "));
    }
    Ok(RunConfig {
        command: kind.name(),
        n,
        sides,
        convention,
        tol,
        max_iter,
        shift,
        dense_limit,
        seed: args.seed.or(file.seed).unwrap_or(0),
        deterministic: args.deterministic.or(file.deterministic).unwrap_or(false),
        format,
        output: args.output.clone().or(file.output),
    })
}

/// Relative paths go under `$DHLS_OUTPUT_DIR` when it is set.
pub fn resolve_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
