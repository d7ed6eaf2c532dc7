//! Serialization: JSON with 17 significant digits, sweep CSV, and atomic
//! file writes.

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use std::io::{self, Write};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Every float as `d.dddddddddddddddde±x`, which round-trips exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Layout from the wrapped formatter, floats from [`format_float`].
struct PreciseFormatter<F>(F);

impl<F: Formatter> Formatter for PreciseFormatter<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn render<T: Serialize, F: Formatter>(value: &T, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(formatter));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Pretty JSON, newline-terminated.
pub fn to_json<T: Serialize>(value: &T) -> String {
    render(value, PrettyFormatter::new()) + "\n"
}

/// Single-line JSON, for CSV preambles.
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    render(value, CompactFormatter)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 9] = [
    "n", "N", "lambda", "lower", "upper", "slope_prev", "ln_N", "wall_ms", "error",
];

/// One line of the sweep CSV. Failed rows carry `error` and no `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    pub n: usize,
    #[serde(rename = "N")]
    pub side: usize,
    pub lambda: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub slope_prev: Option<f64>,
    #[serde(rename = "ln_N")]
    pub ln_n: f64,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// `#`-prefixed preamble lines (schema version, effective config), then
/// the header and rows.
pub fn emit_sweep_csv(preamble: &[String], lines: &[SweepLine]) -> String {
    let mut out = String::new();
    for p in preamble {
        out.push_str("# ");
        out.push_str(p);
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("write to memory");
    for l in lines {
        w.write_record([
            l.n.to_string(),
            l.side.to_string(),
            opt_float(l.lambda),
            format_float(l.lower),
            format_float(l.upper),
            opt_float(l.slope_prev),
            format_float(l.ln_n),
            opt_float(l.wall_ms),
            l.error.clone().unwrap_or_default(),
        ])
        .expect("write to memory");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush to memory")).expect("UTF-8"));
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepLine>, String> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(SWEEP_HEADER) {
        return Err(format!("unexpected sweep header {header:?}"));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| format!("bad integer `{s}`: {e}"));
    let float = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            Ok(SweepLine {
                n: int(&rec[0])?,
                side: int(&rec[1])?,
                lambda: opt(&rec[2])?,
                lower: float(&rec[3])?,
                upper: float(&rec[4])?,
                slope_prev: opt(&rec[5])?,
                ln_n: float(&rec[6])?,
                wall_ms: opt(&rec[7])?,
                error: (!rec[8].is_empty()).then(|| rec[8].to_string()),
            })
        })
        .collect()
}

/// `ln_N,lambda,lower,upper` for plotting; failed rows are left out.
pub fn emit_plot_csv(lines: &[SweepLine]) -> String {
    let mut out = String::from("ln_N,lambda,lower,upper\n");
    for l in lines {
        if let Some(lambda) = l.lambda {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(l.ln_n),
                format_float(lambda),
                format_float(l.lower),
                format_float(l.upper)
            ));
        }
    }
    out
}
