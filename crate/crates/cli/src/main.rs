use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gpuscript::backend::{Backend, BackendError, SimBackend};
use gpuscript::builtins::registry;
use gpuscript::corpus::{Corpus, CorpusError};
use gpuscript::harness::{write_f32, HarnessBackend};
use gpuscript::infer::format_table;
use gpuscript::pipeline::{eval_constant, ExecPath, Pipeline, PipelineError, RenderConfig, SCREEN};
use gpuscript::pixels::Viewport;
use gpuscript::value::Value;

#[derive(Parser)]
#[command(name = "gpuscript", version, about = "Compile colorplot scripts to GLSL ES fragment shaders and run them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the shader artifact bundle as JSON
    Compile(Common),
    /// Render to a PNG or raw float dump
    Run(RunArgs),
    /// Print the type inference iteration table and the final typing
    Check(Common),
    /// Write the dependency graph in DOT format
    Graph(Common),
    /// List builtin functions and their signatures
    Builtins,
    /// Run the bundled programs and compare against golden images
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Cpu,
    Sim,
    Harness,
}

#[derive(Args)]
struct Common {
    /// Program file
    #[arg(required_unless_present = "expr", conflicts_with = "expr")]
    path: Option<PathBuf>,
    /// Program text
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
    /// Output path (stdout when absent)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Plot rectangle as xmin,ymin,xmax,ymax
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, -1.0, 1.0, 1.0])]
    viewport: Vec<f64>,
    /// Image size as WxH
    #[arg(long, default_value = "64x64", value_parser = parse_resolution)]
    resolution: (usize, usize),
    /// Value returned by seconds()
    #[arg(long, default_value_t = 0.0)]
    clock: f64,
    /// Global binding as name=expression, e.g. c=0.3+0.2*i
    #[arg(short = 'u', long = "uniform", value_parser = parse_binding)]
    uniforms: Vec<(String, String)>,
    #[arg(long, value_enum, env = "GPUSCRIPT_BACKEND", default_value = "sim")]
    backend: BackendKind,
    /// Job directory of the file-drop harness
    #[arg(long, env = "GPUSCRIPT_HARNESS_DIR", default_value = "harness-jobs")]
    harness_dir: PathBuf,
    /// Seconds to wait for a harness result
    #[arg(long, default_value_t = 30.0)]
    harness_timeout: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Number of frames to run
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Texture to write instead of the output image
    #[arg(long)]
    texture: Option<String>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus directory (the bundled one when absent)
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Regenerate golden files with the CPU interpreter
    #[arg(long)]
    update: bool,
    #[arg(long, value_enum, env = "GPUSCRIPT_BACKEND", default_value = "sim")]
    backend: BackendKind,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', ',']).ok_or("expected WxH")?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok((w, h))
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    let (n, v) = s.split_once('=').ok_or("expected name=expression")?;
    Ok((n.trim().to_string(), v.to_string()))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    User(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Backend(BackendError::Compile(_) | BackendError::Manifest(_) | BackendError::Execution(_)) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::User(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Run { source, name } => match CliError::from(source) {
                CliError::User(m) => CliError::User(format!("{name}: {m}")),
                CliError::Internal(m) => CliError::Internal(format!("{name}: {m}")),
            },
            e => CliError::User(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::User(format!("{}: {e}", path.display()))
}

fn make_backend(kind: BackendKind, dir: &Path, timeout: f64) -> Result<Option<Box<dyn Backend>>, CliError> {
    Ok(match kind {
        BackendKind::Cpu => None,
        BackendKind::Sim => Some(Box::new(SimBackend::new())),
        BackendKind::Harness => Some(Box::new(
            HarnessBackend::new(dir, Duration::from_secs_f64(timeout)).map_err(|e| CliError::User(e.to_string()))?,
        )),
    })
}

impl Common {
    fn source(&self) -> Result<String, CliError> {
        match (&self.expr, &self.path) {
            (Some(e), _) => Ok(e.clone()),
            (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| io_err(p, e)),
            (None, None) => Err(CliError::User("no program given".into())),
        }
    }

    fn config(&self) -> Result<RenderConfig, CliError> {
        let [x0, y0, x1, y1] = self.viewport[..] else {
            return Err(CliError::User("viewport needs four numbers".into()));
        };
        if !(x0 < x1 && y0 < y1) {
            return Err(CliError::User("viewport must satisfy xmin < xmax and ymin < ymax".into()));
        }
        Ok(RenderConfig {
            width: self.resolution.0,
            height: self.resolution.1,
            viewport: Viewport { x0, y0, x1, y1 },
        })
    }

    fn pipeline(&self) -> Result<Pipeline, CliError> {
        let backend = make_backend(self.backend, &self.harness_dir, self.harness_timeout)?;
        let mut p = Pipeline::new(&self.source()?, self.config()?, backend)?;
        p.seconds = self.clock;
        for (name, expr) in &self.uniforms {
            let v: Value = eval_constant(expr).map_err(|e| CliError::User(format!("uniform `{name}`: {e}")))?;
            p.set_global(name, v);
        }
        Ok(p)
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.output {
            Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::User(e.to_string())),
        }
    }
}

fn compile(c: &Common) -> Result<(), CliError> {
    let mut p = c.pipeline()?;
    let reports = p.run_frame()?;
    for (k, r) in reports.iter().enumerate() {
        if let ExecPath::Cpu { reason } = &r.path {
            eprintln!("plot {k}: runs on the CPU: {reason}");
        }
    }
    let artifacts = p.cached_artifacts();
    let json = match artifacts.as_slice() {
        [] => return Err(CliError::User("no plot compiles to a shader".into())),
        [a] => a.to_json(),
        many => {
            let list: Vec<serde_json::Value> = many
                .iter()
                .map(|a| serde_json::from_str(&a.to_json()).expect("artifact json"))
                .collect();
            serde_json::to_string_pretty(&list).expect("json")
        }
    };
    c.emit(&(json + "\n"))
}

fn check(c: &Common) -> Result<(), CliError> {
    let mut p = c.pipeline()?;
    p.run_setup()?;
    let plots = p.script().plots.len();
    let mut out = String::new();
    for k in 0..plots {
        let a = p.analyze(k)?;
        if plots > 1 {
            let target = p.script().plots[k].target.clone().unwrap_or_else(|| "screen".into());
            out.push_str(&format!("plot {k} -> {target}\n"));
        }
        if let Some(rv) = &a.lowered.running {
            out.push_str(&format!("running variable: {} : {}\n", rv.name, rv.ty()));
        }
        match &a.typing {
            Ok(t) => {
                out.push_str(&format_table(&a.graph, &a.split, t));
                let n = t.history.len();
                if n >= 2 {
                    out.push_str(&format!("F{}(⊥) = F{}(⊥)\n", n - 2, n - 1));
                }
                out.push_str("Γ:\n");
                for r in gpuscript::infer::table_rows(&a.graph, &a.split) {
                    out.push_str(&format!("  {} : {}\n", a.graph.nodes[r].label, t.gamma[r]));
                }
                let top = a.top_nodes();
                if !top.is_empty() {
                    let labels: Vec<&str> = top.iter().map(|&n| a.graph.nodes[n].label.as_str()).collect();
                    out.push_str(&format!("no static type for: {} (CPU fallback)\n", labels.join(", ")));
                }
            }
            Err(e) => out.push_str(&format!("inference failed: {e}\n")),
        }
    }
    c.emit(&out)
}

fn graph(c: &Common) -> Result<(), CliError> {
    let mut p = c.pipeline()?;
    p.run_setup()?;
    let mut out = String::new();
    for k in 0..p.script().plots.len() {
        let a = p.analyze(k)?;
        out.push_str(&a.graph.to_dot(Some(&a.split)));
    }
    c.emit(&out)
}

fn run(r: &RunArgs) -> Result<(), CliError> {
    let c = &r.common;
    let mut p = c.pipeline()?;
    for _ in 0..r.frames {
        p.run_frame()?;
    }
    let img = p.read_texture(r.texture.as_deref().unwrap_or(SCREEN))?;
    let out = c.output.clone().unwrap_or_else(|| PathBuf::from("out.png"));
    if out.extension().is_some_and(|e| e == "f32") {
        write_f32(&out, &img).map_err(|e| io_err(&out, e))?;
    } else {
        img.save_png(&out).map_err(|e| io_err(&out, e))?;
    }
    let s = p.stats();
    eprintln!(
        "{}: {}x{} to {} ({} compiles, {} gpu passes, {} cpu passes, {} transfers)",
        p.backend_name(),
        img.width,
        img.height,
        out.display(),
        s.compiles,
        s.gpu_passes,
        s.cpu_passes,
        s.transfers
    );
    Ok(())
}

fn corpus(a: &CorpusArgs) -> Result<(), CliError> {
    let corpus = match &a.dir {
        Some(d) => Corpus::load(d)?,
        None => Corpus::bundled()?,
    };
    let mut failed = 0;
    for e in &corpus.entries {
        if a.update {
            let (img, _) = corpus.render(e, None)?;
            corpus.store_golden(e, &img)?;
            println!("UPDATED {}", e.name);
            continue;
        }
        let dir = std::env::temp_dir().join(format!("gpuscript-harness-{}", std::process::id()));
        let (img, _) = corpus.render(e, make_backend(a.backend, &dir, 30.0)?)?;
        let golden = corpus.golden(e)?;
        match img.max_abs_diff(&golden) {
            Ok(d) if d <= e.tolerance => println!("PASS {} (max diff {d:.2e})", e.name),
            Ok(d) => {
                failed += 1;
                println!("FAIL {} (max diff {d:.2e} > {:.0e})", e.name, e.tolerance);
            }
            Err(err) => {
                failed += 1;
                println!("FAIL {} ({err})", e.name);
            }
        }
    }
    if failed > 0 {
        return Err(CliError::User(format!("{failed} corpus program(s) differ from golden output")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Compile(c) => compile(c),
        Command::Run(r) => run(r),
        Command::Check(c) => check(c),
        Command::Graph(c) => graph(c),
        Command::Builtins => {
            print!("{}", registry().describe());
            Ok(())
        }
        Command::Corpus(a) => corpus(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::User(_) => 1,
                CliError::Internal(_) => 2,
            })
        }
    }
}
