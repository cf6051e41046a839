//! Runs programs: setup on the CPU, then each plot either as a compiled
//! shader on a backend or, when no static typing exists, on the interpreter.
//!
//! Shaders are cached by a key over the plot text and the types of its
//! inputs, so new uniform values never recompile but new types always do.
//! Textures live on the CPU, the backend or both; transfers happen only when
//! the other side needs current data.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::ast::{is_builtin_constant, Node, NodeKind, Program};
use crate::backend::{Backend, BackendError, RenderJob, SamplerBinding, TexId, UniformValue};
use crate::builtins::{BuiltinError, Host};
use crate::codegen::{self, CodegenInput, InputPlan, ShaderArtifact};
use crate::depgraph::{Binder, GKind, Graph, Split};
use crate::infer::{InferenceError, Problem, Typing};
use crate::interp::{self, EvalError};
use crate::lower::{lower_plot, split_script, LowerError, Lowered, Plot, RunningKind, Script};
use crate::parser::{parse_source, SyntaxError};
use crate::pixels::{ImageError, PixelBuffer, Viewport};
use crate::printer::print_node;
use crate::types::{embed_cast, TypeTerm};
use crate::value::Value;

/// Texture name of the output image.
pub const SCREEN: &str = "@screen";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("at pixel ({x}, {y}): {source}")]
    Pixel { x: f64, y: f64, source: EvalError },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("unknown texture `{0}`")]
    UnknownTexture(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub viewport: Viewport,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 64,
            height: 64,
            viewport: Viewport::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Shader generations, i.e. cache misses.
    pub compiles: usize,
    pub cache_hits: usize,
    pub gpu_passes: usize,
    pub cpu_passes: usize,
    /// Backend-to-CPU texture transfers.
    pub transfers: usize,
    pub uploads: usize,
    pub swaps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residency {
    GpuOnly,
    CpuOnly,
    Both,
}

struct Texture {
    width: usize,
    height: usize,
    frame: Viewport,
    cpu: Option<PixelBuffer>,
    /// Front buffer first; a second buffer exists once ping-pong is engaged.
    gpu: Vec<TexId>,
    residency: Residency,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExecPath {
    Gpu { type_key: String, compiled: bool },
    Cpu { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotReport {
    pub target: Option<String>,
    pub path: ExecPath,
    /// Value of a plot without running variable, when evaluated on the CPU.
    pub value: Option<Value>,
}

/// Static analysis of one plot.
pub struct Analysis {
    pub lowered: Lowered,
    pub graph: Graph,
    pub split: Split,
    pub inputs: BTreeMap<usize, TypeTerm>,
    pub typing: Result<Typing, InferenceError>,
}

impl Analysis {
    pub fn problem(&self) -> Problem<'_> {
        let running_ty = self.lowered.running.as_ref().map(|r| r.ty());
        Problem::new(&self.graph, &self.split, running_ty, self.inputs.clone())
    }

    /// `D` nodes typed `Top`, which force the CPU path.
    pub fn top_nodes(&self) -> Vec<usize> {
        match &self.typing {
            Ok(t) => t.top_nodes(&self.split),
            Err(_) => Vec::new(),
        }
    }
}

/// Lowers and analyses `plot`, typing inputs from `env` (static mode).
pub fn analyze(
    program: &Program,
    plot: &Plot,
    is_bound: &dyn Fn(&str) -> bool,
    env: &dyn Fn(&str) -> Option<TypeTerm>,
) -> Result<Analysis, PipelineError> {
    let (lowered, graph, split) = prepare(program, plot, is_bound)?;
    let inputs = Problem::static_inputs(&graph, &split, env);
    let running_ty = lowered.running.as_ref().map(|r| r.ty());
    let typing = Problem::new(&graph, &split, running_ty, inputs.clone()).solve();
    Ok(Analysis {
        lowered,
        graph,
        split,
        inputs,
        typing,
    })
}

fn prepare(program: &Program, plot: &Plot, is_bound: &dyn Fn(&str) -> bool) -> Result<(Lowered, Graph, Split), PipelineError> {
    let mut ids = program.id_gen();
    let lowered = lower_plot(&plot.body, program, is_bound, &mut ids)?;
    let graph = Graph::build(&lowered.body);
    let split = match &lowered.running {
        Some(rv) => Split::for_plot(&graph, graph.var(&rv.name).expect("running variable in graph")),
        None => Split::whole(&graph),
    };
    Ok((lowered, graph, split))
}

/// Cache key over the plot text, the running variable and the input types.
pub fn type_key(body: &Node, running: Option<RunningKind>, inputs: &BTreeMap<usize, TypeTerm>) -> String {
    let mut h = Sha256::new();
    h.update(print_node(body).as_bytes());
    h.update(b"\0");
    h.update(codegen::running_tag(running).as_bytes());
    for (n, t) in inputs {
        h.update(format!("\0{n}={t}").as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

/// Flat uniform components of `v` at type `ty`.
pub fn components(v: &Value, ty: &TypeTerm) -> Option<Vec<f64>> {
    let v = embed_cast(&v.type_of(), &ty.forget_constants()).ok()?.apply(v);
    let mut out = Vec::new();
    flatten(&v, &mut out)?;
    Some(out)
}

fn flatten(v: &Value, out: &mut Vec<f64>) -> Option<()> {
    match v {
        Value::Complex(z) => out.extend([z.re, z.im]),
        Value::List(items) => {
            for i in items {
                flatten(i, out)?;
            }
        }
        v => out.push(v.as_f64()?),
    }
    Some(())
}

/// Evaluates a closed expression such as `0.3+0.2*i` or `[1, 2]`.
pub fn eval_constant(source: &str) -> Result<Value, PipelineError> {
    let program = parse_source(source)?;
    let host = CpuHost {
        seconds: 0.0,
        textures: HashMap::new(),
    };
    Ok(interp::eval_with(&program, &HashMap::new(), &host, &program.as_body(), &[])?)
}

struct CpuHost<'a> {
    seconds: f64,
    textures: HashMap<&'a str, (&'a PixelBuffer, Viewport)>,
}

impl Host for CpuHost<'_> {
    fn seconds(&self) -> f64 {
        self.seconds
    }

    fn sample(&self, texture: &str, coord: [f64; 2]) -> Result<[f64; 4], BuiltinError> {
        let (buf, frame) = self
            .textures
            .get(texture)
            .ok_or_else(|| BuiltinError::Runtime(format!("unknown texture `{texture}`")))?;
        Ok(buf.sample(frame.to_uv(coord)))
    }
}

/// Whether the first access to `name` in evaluation order is a read, or a
/// write that might not happen. `None` when `name` is not accessed.
fn read_first(node: &Node, name: &str, nested: bool) -> Option<bool> {
    match &node.kind {
        NodeKind::Var(v) => (v == name).then_some(true),
        NodeKind::Assign { target, value } => read_first(value, name, nested).or_else(|| (target == name).then_some(nested)),
        NodeKind::If {
            cond,
            then,
            otherwise,
        } => read_first(cond, name, nested)
            .or_else(|| read_first(then, name, true))
            .or_else(|| otherwise.as_ref().and_then(|o| read_first(o, name, true))),
        NodeKind::Repeat { count: head, body } | NodeKind::Apply { list: head, body, .. } => {
            read_first(head, name, nested).or_else(|| read_first(body, name, true))
        }
        _ => node.children().into_iter().find_map(|c| read_first(c, name, nested)),
    }
}

/// A global the plot assigns but may read before doing so. Shader locals
/// start out undefined, so such plots keep the interpreter's semantics by
/// running on the CPU.
fn shadowed_global(body: &Node, is_bound: &dyn Fn(&str) -> bool) -> Option<String> {
    let mut assigned = Vec::new();
    body.walk(&mut |n| {
        if let NodeKind::Assign { target, .. } = &n.kind {
            if is_bound(target) && !assigned.contains(target) {
                assigned.push(target.clone());
            }
        }
    });
    assigned.into_iter().find(|v| read_first(body, v, false) == Some(true))
}

/// A node outside the plotted value. The interpreter still evaluates it per
/// pixel, with its errors and global writes. Control nodes only wrap other
/// nodes, which are checked on their own.
fn unused_node(graph: &Graph) -> Option<usize> {
    let live = graph.reachable(graph.root);
    (0..graph.nodes.len()).find(|n| {
        !live.contains(n)
            && !matches!(
                graph.nodes[*n].kind,
                GKind::Literal(_) | GKind::If { .. } | GKind::Repeat { .. } | GKind::Apply { .. }
            )
    })
}

/// Texture names read by `imagergb` inside `node`.
pub fn textures_read(node: &Node) -> Vec<String> {
    let mut out = Vec::new();
    node.walk(&mut |n| {
        if let NodeKind::Call { name, args } = &n.kind {
            if crate::builtins::takes_texture_name(name) {
                if let Some(Node {
                    kind: NodeKind::Str(t), ..
                }) = args.first()
                {
                    if !out.contains(t) {
                        out.push(t.clone());
                    }
                }
            }
        }
    });
    out
}

type CacheEntry = Result<Arc<ShaderArtifact>, String>;

/// One session of a program.
pub struct Pipeline {
    program: Program,
    script: Script,
    config: RenderConfig,
    backend: Option<Box<dyn Backend>>,
    pub globals: HashMap<String, Value>,
    /// Initial bindings, restored before each frame's setup.
    overrides: HashMap<String, Value>,
    pub seconds: f64,
    cache: HashMap<String, CacheEntry>,
    textures: HashMap<String, Texture>,
    stats: Stats,
}

impl Pipeline {
    /// `backend = None` runs everything on the CPU interpreter.
    pub fn new(source: &str, config: RenderConfig, backend: Option<Box<dyn Backend>>) -> Result<Pipeline, PipelineError> {
        let program = parse_source(source)?;
        Pipeline::from_program(program, config, backend)
    }

    pub fn from_program(program: Program, config: RenderConfig, backend: Option<Box<dyn Backend>>) -> Result<Pipeline, PipelineError> {
        let script = split_script(&program)?;
        Ok(Pipeline {
            program,
            script,
            config,
            backend,
            globals: HashMap::new(),
            overrides: HashMap::new(),
            seconds: 0.0,
            cache: HashMap::new(),
            textures: HashMap::new(),
            stats: Stats::default(),
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn config(&self) -> RenderConfig {
        self.config
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.as_ref().map_or("cpu", |b| b.name())
    }

    /// Binds a global that setup code may overwrite.
    pub fn set_global(&mut self, name: &str, value: Value) {
        self.overrides.insert(name.to_string(), value.clone());
        self.globals.insert(name.to_string(), value);
    }

    pub fn cached_artifacts(&self) -> Vec<Arc<ShaderArtifact>> {
        let mut out: Vec<_> = self.cache.values().filter_map(|e| e.as_ref().ok().cloned()).collect();
        out.sort_by(|a, b| a.type_key.cmp(&b.type_key));
        out
    }

    pub fn residency(&self, texture: &str) -> Option<Residency> {
        self.textures.get(texture).map(|t| t.residency)
    }

    /// Makes `pixels` available as texture `name`, covering `frame`.
    pub fn load_texture(&mut self, name: &str, pixels: PixelBuffer, frame: Option<Viewport>) {
        self.textures.insert(
            name.to_string(),
            Texture {
                width: pixels.width,
                height: pixels.height,
                frame: frame.unwrap_or(self.config.viewport),
                cpu: Some(pixels),
                gpu: Vec::new(),
                residency: Residency::CpuOnly,
            },
        );
    }

    fn texture_or_blank(&mut self, name: &str) -> &mut Texture {
        let RenderConfig {
            width,
            height,
            viewport,
        } = self.config;
        self.textures.entry(name.to_string()).or_insert_with(|| Texture {
            width,
            height,
            frame: viewport,
            cpu: Some(PixelBuffer::new(width, height)),
            gpu: Vec::new(),
            residency: Residency::CpuOnly,
        })
    }

    /// Brings the CPU copy of `name` up to date.
    fn ensure_cpu(&mut self, name: &str) -> Result<(), PipelineError> {
        let backend = &mut self.backend;
        let stats = &mut self.stats;
        let t = self.textures.get_mut(name).ok_or_else(|| PipelineError::UnknownTexture(name.to_string()))?;
        if t.residency == Residency::GpuOnly {
            let b = backend.as_mut().expect("gpu-resident texture implies a backend");
            t.cpu = Some(b.download(t.gpu[0])?);
            t.residency = Residency::Both;
            stats.transfers += 1;
        }
        Ok(())
    }

    /// Brings the front backend buffer of `name` up to date.
    fn ensure_gpu(&mut self, name: &str) -> Result<TexId, PipelineError> {
        self.texture_or_blank(name);
        let backend = self.backend.as_mut().expect("backend present");
        let t = self.textures.get_mut(name).expect("texture exists");
        if t.gpu.is_empty() {
            t.gpu.push(backend.create_texture(t.width, t.height)?);
        }
        if t.residency == Residency::CpuOnly {
            backend.upload(t.gpu[0], t.cpu.as_ref().expect("cpu copy"))?;
            self.stats.uploads += 1;
            t.residency = Residency::Both;
        }
        Ok(t.gpu[0])
    }

    /// Reads a texture on the CPU, transferring it if only the backend has it.
    pub fn read_texture(&mut self, name: &str) -> Result<PixelBuffer, PipelineError> {
        self.ensure_cpu(name)?;
        Ok(self.textures[name].cpu.clone().expect("cpu copy after sync"))
    }

    /// The output image of the last frame.
    pub fn output(&mut self) -> Result<PixelBuffer, PipelineError> {
        self.read_texture(SCREEN)
    }

    fn is_bound(&self) -> impl Fn(&str) -> bool + '_ {
        |n: &str| self.globals.contains_key(n) || is_builtin_constant(n)
    }

    /// Static analysis of plot `k` using the current globals.
    pub fn analyze(&self, k: usize) -> Result<Analysis, PipelineError> {
        let env = |n: &str| self.globals.get(n).map(Value::type_of);
        analyze(&self.program, &self.script.plots[k], &self.is_bound(), &env)
    }

    /// Runs setup and every plot once.
    pub fn run_frame(&mut self) -> Result<Vec<PlotReport>, PipelineError> {
        self.run_setup()?;
        let mut reports = Vec::new();
        for k in 0..self.script.plots.len() {
            reports.push(self.run_plot(k)?);
        }
        Ok(reports)
    }

    /// Resets globals to the initial bindings and runs the setup statements.
    pub fn run_setup(&mut self) -> Result<(), PipelineError> {
        self.globals = self.overrides.clone();
        let setup = self.script.setup.clone();
        let mut reads = Vec::new();
        for s in &setup {
            reads.extend(textures_read(s));
        }
        for t in &reads {
            self.texture_or_blank(t);
            self.ensure_cpu(t)?;
        }
        {
            let host = self.host();
            let mut globals = self.globals.clone();
            interp::run_setup(&self.program, &setup, &mut globals, &host)?;
            self.globals = globals;
        }
        Ok(())
    }

    fn host(&self) -> CpuHost<'_> {
        CpuHost {
            seconds: self.seconds,
            textures: self
                .textures
                .iter()
                .filter_map(|(n, t)| t.cpu.as_ref().filter(|_| t.residency != Residency::GpuOnly).map(|b| (n.as_str(), (b, t.frame))))
                .collect(),
        }
    }

    fn run_plot(&mut self, k: usize) -> Result<PlotReport, PipelineError> {
        let plot = self.script.plots[k].clone();
        let (lowered, graph, split) = prepare(&self.program, &plot, &self.is_bound())?;
        if self.backend.is_none() {
            return self.cpu_plot(&plot, &lowered, "cpu backend".into());
        }
        match self.try_gpu(&plot, &lowered, &graph, &split)? {
            Ok(report) => Ok(report),
            Err(reason) => self.cpu_plot(&plot, &lowered, reason),
        }
    }

    /// Runs a plot on the backend; `Ok(Err(reason))` asks for the CPU path.
    fn try_gpu(&mut self, plot: &Plot, lowered: &Lowered, graph: &Graph, split: &Split) -> Result<Result<PlotReport, String>, PipelineError> {
        if let Some(v) = shadowed_global(&lowered.body, &self.is_bound()) {
            return Ok(Err(format!("`{v}` may be read before the plot assigns it")));
        }
        if let Some(n) = unused_node(graph) {
            return Ok(Err(format!("`{}` does not contribute to the plotted value", graph.nodes[n].label)));
        }
        let plan = match codegen::plan_inputs(&lowered.body, graph, split) {
            Ok(p) => p,
            Err(e) => return Ok(Err(e.to_string())),
        };
        let mut reads = Vec::new();
        for e in plan.exprs.values() {
            reads.extend(textures_read(e));
        }
        for t in &reads {
            self.texture_or_blank(t);
            self.ensure_cpu(t)?;
        }
        let values = match self.eval_inputs(&plan) {
            Ok(v) => v,
            Err(e) => return Ok(Err(format!("input evaluation failed: {e}"))),
        };
        let mut inputs = BTreeMap::new();
        for &u in &split.u {
            let node = &graph.nodes[u];
            let t = match (&node.kind, values.get(&u)) {
                (_, Some(Value::Int(v))) if node.const_position => TypeTerm::ConstInt(*v),
                (_, Some(v)) => v.type_of(),
                (GKind::Var { binder: Some(Binder::Counter(_)), .. }, None) => TypeTerm::Int,
                _ => continue,
            };
            inputs.insert(u, t);
        }
        let running_kind = lowered.running.as_ref().map(|r| r.kind);
        let running_ty = lowered.running.as_ref().map(|r| r.ty());
        let typing = match Problem::new(graph, split, running_ty, inputs.clone()).solve() {
            Ok(t) => t,
            Err(e) => return Ok(Err(e.to_string())),
        };
        if let Some(&n) = typing.top_nodes(split).first() {
            return Ok(Err(format!("`{}` has no static type", graph.nodes[n].label)));
        }
        let key = type_key(&lowered.body, running_kind, &inputs);
        let compiled = !self.cache.contains_key(&key);
        if compiled {
            self.stats.compiles += 1;
            let constants: BTreeMap<usize, Value> = plan
                .constant
                .iter()
                .filter_map(|n| values.get(n).map(|v| (*n, v.clone())))
                .collect();
            let input = CodegenInput {
                lowered,
                graph,
                split,
                typing: &typing,
                inputs: &inputs,
                plan: &plan,
                constants: &constants,
                type_key: key.clone(),
            };
            let entry = match codegen::generate(&input) {
                Ok(a) => match self.backend.as_mut().expect("backend").prepare(&a) {
                    Ok(()) => Ok(Arc::new(a)),
                    Err(e) => Err(e.to_string()),
                },
                Err(e) => Err(e.to_string()),
            };
            self.cache.insert(key.clone(), entry);
        } else {
            self.stats.cache_hits += 1;
        }
        let artifact = match &self.cache[&key] {
            Ok(a) => a.clone(),
            Err(reason) => return Ok(Err(reason.clone())),
        };

        let mut uniforms = Vec::new();
        for u in &artifact.uniforms {
            let ty = &inputs[&u.node];
            let comps = values.get(&u.node).and_then(|v| components(v, ty));
            let Some(value) = comps else {
                return Ok(Err(format!("no value for uniform {}", u.name)));
            };
            uniforms.push(UniformValue {
                name: u.name.clone(),
                glsl: u.glsl.clone(),
                value,
            });
        }
        let target_name = plot.target.clone().unwrap_or_else(|| SCREEN.to_string());
        let mut samplers = Vec::new();
        for t in &artifact.textures {
            let id = self.ensure_gpu(&t.name)?;
            samplers.push(SamplerBinding {
                sampler: t.sampler.clone(),
                frame: t.frame.clone(),
                texture: id,
                rect: self.textures[&t.name].frame,
            });
        }
        let feedback = artifact.textures.iter().any(|t| t.name == target_name);
        let target = self.gpu_target(&target_name, feedback)?;
        let job = RenderJob {
            artifact: (*artifact).clone(),
            uniforms,
            samplers,
            target,
            viewport: self.config.viewport,
        };
        self.backend.as_mut().expect("backend").render(&job)?;
        self.stats.gpu_passes += 1;
        let t = self.textures.get_mut(&target_name).expect("target exists");
        if feedback {
            t.gpu.swap(0, 1);
            self.stats.swaps += 1;
        }
        t.frame = self.config.viewport;
        t.residency = Residency::GpuOnly;
        t.cpu = None;
        Ok(Ok(PlotReport {
            target: plot.target.clone(),
            path: ExecPath::Gpu {
                type_key: key,
                compiled,
            },
            value: None,
        }))
    }

    /// Buffer to render `name` into; with `feedback` the back buffer, created on first need.
    fn gpu_target(&mut self, name: &str, feedback: bool) -> Result<TexId, PipelineError> {
        let RenderConfig { width, height, .. } = self.config;
        let backend = self.backend.as_mut().expect("backend");
        let t = self.textures.entry(name.to_string()).or_insert_with(|| Texture {
            width,
            height,
            frame: self.config.viewport,
            cpu: None,
            gpu: Vec::new(),
            residency: Residency::GpuOnly,
        });
        if (t.width, t.height) != (width, height) {
            t.gpu.clear();
            t.width = width;
            t.height = height;
        }
        let needed = if feedback { 2 } else { 1 };
        while t.gpu.len() < needed {
            t.gpu.push(backend.create_texture(width, height)?);
        }
        Ok(t.gpu[needed - 1])
    }

    fn eval_inputs(&self, plan: &InputPlan) -> Result<BTreeMap<usize, Value>, EvalError> {
        let host = self.host();
        plan.exprs
            .iter()
            .map(|(&n, e)| interp::eval_with(&self.program, &self.globals, &host, e, &[]).map(|v| (n, v)))
            .collect()
    }

    fn cpu_plot(&mut self, plot: &Plot, lowered: &Lowered, reason: String) -> Result<PlotReport, PipelineError> {
        for t in textures_read(&plot.body) {
            self.texture_or_blank(&t);
            self.ensure_cpu(&t)?;
        }
        let RenderConfig {
            width,
            height,
            viewport,
        } = self.config;
        let mut value = None;
        let buf = {
            let host = self.host();
            let program = &self.program;
            let globals = &self.globals;
            let running = lowered.running.clone();
            if running.is_none() {
                let v = interp::eval_with(program, globals, &host, &plot.body, &[])?;
                let c = interp::to_rgba(&v)?.map(|x| x as f32);
                value = Some(v);
                PixelBuffer {
                    width,
                    height,
                    data: vec![c; width * height],
                }
            } else {
                let rv = running.expect("running variable");
                let rows: Vec<Vec<[f32; 4]>> = (0..height)
                    .into_par_iter()
                    .map(|j| {
                        (0..width)
                            .map(|i| {
                                let [x, y] = viewport.pixel_center(i, j, width, height);
                                let bindings: Vec<(&str, Value)> = match rv.kind {
                                    RunningKind::Pair => vec![("x", Value::Real(x)), ("y", Value::Real(y))],
                                    RunningKind::Complex => vec![(rv.name.as_str(), Value::complex(x, y))],
                                    RunningKind::Point => vec![(rv.name.as_str(), Value::reals(&[x, y]))],
                                };
                                interp::eval_with(program, globals, &host, &plot.body, &bindings)
                                    .and_then(|v| interp::to_rgba(&v))
                                    .map(|c| c.map(|x| x as f32))
                                    .map_err(|source| PipelineError::Pixel { x, y, source })
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                PixelBuffer {
                    width,
                    height,
                    data: rows.into_iter().flatten().collect(),
                }
            }
        };
        self.stats.cpu_passes += 1;
        let target = plot.target.clone().unwrap_or_else(|| SCREEN.to_string());
        let frame = self.config.viewport;
        let t = self.textures.entry(target).or_insert_with(|| Texture {
            width,
            height,
            frame,
            cpu: None,
            gpu: Vec::new(),
            residency: Residency::CpuOnly,
        });
        t.width = width;
        t.height = height;
        t.frame = frame;
        t.cpu = Some(buf);
        t.residency = Residency::CpuOnly;
        Ok(PlotReport {
            target: plot.target.clone(),
            path: ExecPath::Cpu { reason },
            value,
        })
    }
}
