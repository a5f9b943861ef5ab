//! `monodromy-lab`: command-line front end for `monodromy-core`.
//!
//! Exit codes: 0 on success, 1 for a malformed spec or unusable arguments,
//! 2 for a numerical failure (the report names the failing module and error)
//! or, for `verify`, a failed check.

pub mod emit;
pub mod pipeline;
pub mod spec;
pub mod sweep;

use clap::{Args, Parser, Subcommand};
use emit::{check_finite, to_json, Table};
use monodromy_core::fnspace::TWO_PI;
use monodromy_core::pdeoracle::Grid;
use monodromy_core::Settings;
use pipeline::{Analysis, Failure, Options};
use serde_json::{json, Map, Value};
use spec::{OperatorSpec, SpecError};
use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SPEC: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "monodromy-lab", version, about = "Classify periodic Schrödinger operators and compute their monodromy")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include the parsed spec in the report.
    #[arg(long, global = true)]
    echo_spec: bool,
    /// Add the verification block.
    #[arg(long, global = true)]
    verify: bool,
    #[arg(long, global = true, default_value_t = 1e-11)]
    rk_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    class_tol: f64,
    #[arg(long, global = true, default_value_t = 1024)]
    grid_nx: usize,
    #[arg(long, global = true, default_value_t = 16.0)]
    grid_l: f64,
    /// PDE time step (default 2π/4096).
    #[arg(long, global = true)]
    dtheta: Option<f64>,
}

#[derive(Debug, Args)]
struct SpecArg {
    /// Spec file, `-` for stdin, or inline JSON.
    spec: String,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// θ samples in the report and data file.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Also write the samples as CSV.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit class and invariants.
    Classify(SpecArg),
    /// Quantum monodromy.
    Monodromy {
        #[command(flatten)]
        spec: SpecArg,
        /// Elliptic levels to report.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Periodic stabilizer ξ with I and T.
    Stabilizer {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: SampleArgs,
    },
    /// Vector invariant (ξ, δ₁, δ₂) and Ermakov–Lewis coefficients.
    Invariant {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: SampleArgs,
    },
    /// Monodromy report with every residual and oracle check.
    Verify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// CSV of invariants over a one-parameter family.
    Sweep {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        param: String,
        /// `a:b:steps`
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
}

fn positive(x: f64, name: &str) -> Result<f64, SpecError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(SpecError(format!("--{name} must be positive")))
    }
}

impl Global {
    fn options(&self) -> Result<Options, SpecError> {
        let settings = Settings {
            rk_tol: positive(self.rk_tol, "rk-tol")?,
            class_tol: positive(self.class_tol, "class-tol")?,
            ..Settings::default()
        };
        let dtheta = positive(self.dtheta.unwrap_or(TWO_PI / 4096.0), "dtheta")?;
        let grid = Grid::new(positive(self.grid_l, "grid-l")?, self.grid_nx, dtheta).map_err(|e| SpecError(e.to_string()))?;
        Ok(Options { settings, grid, ..Options::default() })
    }
}

fn load_spec(arg: &str) -> Result<OperatorSpec, SpecError> {
    let text = if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| SpecError(format!("stdin: {e}")))?;
        s
    } else if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| SpecError(format!("{arg}: {e}")))?
    };
    OperatorSpec::parse(&text)
}

enum Output {
    Report(Value),
    Csv(Table),
}

struct Done {
    output: Output,
    data: Option<(PathBuf, Table)>,
    code: i32,
}

fn report(sections: Map<String, Value>) -> Output {
    Output::Report(Value::Object(sections))
}

fn failure_report(f: &Failure, opts: &Options) -> Value {
    json!({
        "error": {"module": f.module, "name": f.error.name(), "message": f.error.to_string()},
        "provenance": pipeline::provenance(opts),
    })
}

/// Runs the command; `Err` carries the exit code and message for failures
/// that produce no report.
fn execute(cli: &Cli, opts: &mut Options) -> Result<Done, (i32, String)> {
    let spec_err = |e: SpecError| (EXIT_SPEC, e.to_string());
    let g = &cli.global;
    let (spec_arg, verify) = match &cli.command {
        Command::Classify(s) => (s, g.verify),
        Command::Monodromy { spec, levels } => {
            opts.levels = *levels;
            (spec, g.verify)
        }
        Command::Stabilizer { spec, table } | Command::Invariant { spec, table } => {
            opts.samples = table.samples.max(1);
            (spec, g.verify)
        }
        Command::Verify { spec, levels } => {
            opts.levels = *levels;
            (spec, true)
        }
        Command::Sweep { spec, param, range } => {
            let spec = load_spec(&spec.spec).map_err(spec_err)?;
            let values = sweep::parse_range(range).map_err(spec_err)?;
            let (table, ok) = sweep::sweep(&spec.doc, param, &values, opts).map_err(spec_err)?;
            let code = if ok { EXIT_OK } else { EXIT_NUMERIC };
            return Ok(Done { output: Output::Csv(table), data: None, code });
        }
    };
    let spec = load_spec(&spec_arg.spec).map_err(spec_err)?;
    let opts = *opts;
    let numeric = |f: Failure| Done { output: Output::Report(failure_report(&f, &opts)), data: None, code: EXIT_NUMERIC };
    let an = match Analysis::run(&spec, &opts) {
        Ok(an) => an,
        Err(f) => return Ok(numeric(f)),
    };
    let mut sections = Map::new();
    let mut data = None;
    let mut code = EXIT_OK;
    let body = (|| -> pipeline::Outcome<()> {
        sections.extend(pipeline::classification(&an, &opts)?);
        match &cli.command {
            Command::Monodromy { .. } | Command::Verify { .. } => {
                let (_, m) = an.monodromy(&opts.settings)?;
                sections.insert("monodromy".into(), pipeline::monodromy_section(&m, &opts));
            }
            Command::Stabilizer { table, .. } => {
                let (v, t) = pipeline::stabilizer_section(&an, &opts);
                sections.insert("stabilizer".into(), v);
                data = table.data.clone().map(|p| (p, t));
            }
            Command::Invariant { table, .. } => {
                let (v, t) = pipeline::invariant_section(&an, &opts)?;
                sections.insert("invariant".into(), v);
                data = table.data.clone().map(|p| (p, t));
            }
            _ => {}
        }
        Ok(())
    })();
    if let Err(f) = body {
        return Ok(numeric(f));
    }
    if verify {
        let (v, all) = pipeline::verification(&an, &opts);
        sections.insert("verification".into(), v);
        if !all && matches!(cli.command, Command::Verify { .. }) {
            code = EXIT_NUMERIC;
        }
    }
    if g.echo_spec {
        sections.insert("spec".into(), serde_json::to_value(&spec.doc).expect("spec serializes"));
    }
    sections.insert("provenance".into(), pipeline::provenance(&opts));
    Ok(Done { output: report(sections), data, code })
}

fn write_to(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(bytes).map_err(|e| format!("stdout: {e}")),
    }
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut opts = match cli.global.options() {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_SPEC;
        }
    };
    let done = match execute(&cli, &mut opts) {
        Ok(d) => d,
        Err((code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return code;
        }
    };
    let bytes = match &done.output {
        Output::Report(v) => {
            if let Err(msg) = check_finite(v, "$") {
                let _ = writeln!(stderr, "error: {msg}");
                let f = failure_report(
                    &Failure { module: "cli", error: monodromy_core::Error::InvalidInput(msg) },
                    &opts,
                );
                let _ = write_to(cli.global.out.as_deref(), to_json(&f).unwrap().as_bytes(), stdout);
                return EXIT_NUMERIC;
            }
            to_json(v).expect("finite report serializes").into_bytes()
        }
        Output::Csv(t) => t.to_csv().expect("in-memory CSV"),
    };
    if let Err(msg) = write_to(cli.global.out.as_deref(), &bytes, stdout) {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_SPEC;
    }
    if let Some((path, table)) = &done.data {
        let csv = table.to_csv().expect("in-memory CSV");
        if let Err(msg) = write_to(Some(path), &csv, stdout) {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_SPEC;
        }
    }
    if done.code == EXIT_NUMERIC {
        if let Output::Report(v) = &done.output {
            if let Some(e) = v.get("error") {
                let _ = writeln!(stderr, "error: {}: {}", e["module"].as_str().unwrap_or("?"), e["message"].as_str().unwrap_or("?"));
            }
        }
    }
    done.code
}

/// Runs the CLI on the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
