//! Execution backends: where compiled shaders run.
//!
//! A backend owns GPU-side textures, identified by [`TexId`]. The pipeline
//! uploads and downloads explicitly, so every transfer is visible to it.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codegen::ShaderArtifact;
use crate::glsl::{self, Checked, GTy, GVal, GlslError, Textures};
use crate::pixels::{PixelBuffer, Viewport};

pub type TexId = u32;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("shader rejected: {0}")]
    Compile(GlslError),
    #[error("shader and manifest disagree: {0}")]
    Manifest(String),
    #[error("shader failed while running: {0}")]
    Execution(GlslError),
    #[error("texture {0} is both sampled and written in one pass")]
    FeedbackLoop(TexId),
    #[error("unknown texture {0}")]
    UnknownTexture(TexId),
    #[error("missing value for uniform `{0}`")]
    MissingUniform(String),
    #[error("harness: {0}")]
    Harness(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Value of one uniform, as a flat list of components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformValue {
    pub name: String,
    pub glsl: String,
    pub value: Vec<f64>,
}

/// Splits `vec2[4]` into `("vec2", Some(4))`.
pub fn array_type(glsl: &str) -> (&str, Option<usize>) {
    match glsl.strip_suffix(']').and_then(|s| s.split_once('[')) {
        Some((base, n)) => (base, n.parse().ok()),
        None => (glsl, None),
    }
}

impl UniformValue {
    pub fn to_gval(&self) -> Option<GVal> {
        match array_type(&self.glsl) {
            (_, Some(_)) => None,
            (base, None) => self.element(base, 0, 1),
        }
    }

    /// Element `k` of an array uniform.
    pub fn array_element(&self, k: usize) -> Option<GVal> {
        match array_type(&self.glsl) {
            (base, Some(n)) if k < n => self.element(base, k, n),
            _ => None,
        }
    }

    fn element(&self, base: &str, k: usize, n: usize) -> Option<GVal> {
        let ty = GTy::parse(base)?;
        let ty = if ty == GTy::Sampler2D { GTy::Int } else { ty };
        if self.value.len() != ty.size() * n || ty.size() == 0 {
            return None;
        }
        let mut c = [0.0; 4];
        c[..ty.size()].copy_from_slice(&self.value[k * ty.size()..(k + 1) * ty.size()]);
        Some(GVal { ty, c })
    }
}

/// A texture bound to a sampler for one pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerBinding {
    pub sampler: String,
    /// Name of the `vec4` uniform receiving `rect`.
    pub frame: String,
    pub texture: TexId,
    /// World rectangle the texture covers.
    pub rect: Viewport,
}

/// One render pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderJob {
    pub artifact: ShaderArtifact,
    pub uniforms: Vec<UniformValue>,
    pub samplers: Vec<SamplerBinding>,
    pub target: TexId,
    pub viewport: Viewport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BackendStats {
    pub prepared: usize,
    pub passes: usize,
    pub uploads: usize,
    pub downloads: usize,
}

pub trait Backend: Send {
    fn name(&self) -> &'static str;
    fn create_texture(&mut self, width: usize, height: usize) -> Result<TexId, BackendError>;
    fn upload(&mut self, tex: TexId, pixels: &PixelBuffer) -> Result<(), BackendError>;
    /// Transfers a texture to the CPU.
    fn download(&mut self, tex: TexId) -> Result<PixelBuffer, BackendError>;
    /// Compiles an artifact ahead of its first pass.
    fn prepare(&mut self, artifact: &ShaderArtifact) -> Result<(), BackendError>;
    fn render(&mut self, job: &RenderJob) -> Result<(), BackendError>;
    fn stats(&self) -> BackendStats;
}

/// Checks that `glsl` declares exactly the manifest's uniforms and samplers
/// plus the viewport and resolution uniforms.
pub fn check_manifest(artifact: &ShaderArtifact, checked: &Checked) -> Result<(), BackendError> {
    let mut expected: Vec<(String, String)> = vec![
        ("_viewport".into(), "vec4".into()),
        ("_resolution".into(), "vec2".into()),
    ];
    for u in &artifact.uniforms {
        match array_type(&u.glsl) {
            (base, Some(n)) => expected.extend((0..n).map(|k| (format!("{}[{k}]", u.name), base.to_string()))),
            _ => expected.push((u.name.clone(), u.glsl.clone())),
        }
    }
    for t in &artifact.textures {
        expected.push((t.sampler.clone(), "sampler2D".into()));
        expected.push((t.frame.clone(), "vec4".into()));
    }
    let mut declared: Vec<(String, String)> = checked
        .uniforms
        .iter()
        .map(|(n, t)| (n.clone(), t.to_string()))
        .collect();
    expected.sort();
    declared.sort();
    if expected != declared {
        return Err(BackendError::Manifest(format!("declared {declared:?}, manifest lists {expected:?}")));
    }
    Ok(())
}

/// Runs shaders with the built-in GLSL evaluator, in double precision, on
/// RGBA float textures with linear filtering and clamp-to-edge wrapping.
#[derive(Default)]
pub struct SimBackend {
    textures: Vec<PixelBuffer>,
    programs: HashMap<String, Arc<Checked>>,
    stats: BackendStats,
}

struct Units<'a>(Vec<&'a PixelBuffer>);

impl Textures for Units<'_> {
    fn sample(&self, unit: usize, uv: [f64; 2]) -> [f64; 4] {
        self.0.get(unit).map_or([0.0; 4], |b| b.sample(uv))
    }
}

impl SimBackend {
    pub fn new() -> SimBackend {
        SimBackend::default()
    }

    fn compile(&mut self, artifact: &ShaderArtifact) -> Result<Arc<Checked>, BackendError> {
        if let Some(p) = self.programs.get(&artifact.type_key) {
            return Ok(p.clone());
        }
        let checked = glsl::validate(&artifact.glsl).map_err(BackendError::Compile)?;
        check_manifest(artifact, &checked)?;
        let p = Arc::new(checked);
        self.programs.insert(artifact.type_key.clone(), p.clone());
        self.stats.prepared += 1;
        Ok(p)
    }

    pub fn size(&self, tex: TexId) -> Result<(usize, usize), BackendError> {
        self.texture(tex).map(|t| (t.width, t.height))
    }

    fn texture(&self, tex: TexId) -> Result<&PixelBuffer, BackendError> {
        self.textures.get(tex as usize).ok_or(BackendError::UnknownTexture(tex))
    }
}

impl Backend for SimBackend {
    fn name(&self) -> &'static str {
        "sim"
    }

    fn create_texture(&mut self, width: usize, height: usize) -> Result<TexId, BackendError> {
        self.textures.push(PixelBuffer::new(width, height));
        Ok((self.textures.len() - 1) as TexId)
    }

    fn upload(&mut self, tex: TexId, pixels: &PixelBuffer) -> Result<(), BackendError> {
        let slot = self.textures.get_mut(tex as usize).ok_or(BackendError::UnknownTexture(tex))?;
        *slot = pixels.clone();
        self.stats.uploads += 1;
        Ok(())
    }

    fn download(&mut self, tex: TexId) -> Result<PixelBuffer, BackendError> {
        let out = self.texture(tex)?.clone();
        self.stats.downloads += 1;
        Ok(out)
    }

    fn prepare(&mut self, artifact: &ShaderArtifact) -> Result<(), BackendError> {
        self.compile(artifact).map(drop)
    }

    fn render(&mut self, job: &RenderJob) -> Result<(), BackendError> {
        if let Some(s) = job.samplers.iter().find(|s| s.texture == job.target) {
            return Err(BackendError::FeedbackLoop(s.texture));
        }
        let prog = self.compile(&job.artifact)?;
        let (width, height) = {
            let t = self.texture(job.target)?;
            (t.width, t.height)
        };
        let mut units = Vec::new();
        for s in &job.samplers {
            units.push(self.texture(s.texture)?);
        }
        let units = Units(units);
        let mut values = Vec::with_capacity(prog.uniforms.len());
        for (name, _) in &prog.uniforms {
            let v = if name == "_viewport" {
                GVal::vec(&job.viewport.as_array())
            } else if name == "_resolution" {
                GVal::vec(&[width as f64, height as f64])
            } else if let Some(k) = job.samplers.iter().position(|s| &s.sampler == name) {
                GVal::int(k as i64)
            } else if let Some(s) = job.samplers.iter().find(|s| &s.frame == name) {
                GVal::vec(&s.rect.as_array())
            } else {
                let (base, k) = match name.strip_suffix(']').and_then(|s| s.split_once('[')) {
                    Some((b, k)) => (b, k.parse().ok()),
                    None => (name.as_str(), None),
                };
                let u = job.uniforms.iter().find(|u| u.name == base);
                match k {
                    Some(k) => u.and_then(|u| u.array_element(k)),
                    None => u.and_then(UniformValue::to_gval),
                }
                .ok_or_else(|| BackendError::MissingUniform(name.clone()))?
            };
            values.push(v);
        }
        let ev = glsl::Evaluator::new(&prog, values, &units).map_err(BackendError::Execution)?;
        let rows: Vec<Vec<[f32; 4]>> = (0..height)
            .into_par_iter()
            .map(|j| {
                (0..width)
                    .map(|i| {
                        ev.run([i as f64 + 0.5, j as f64 + 0.5])
                            .map(|c| c.map(|x| x as f32))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()
            .map_err(BackendError::Execution)?;
        let out = &mut self.textures[job.target as usize];
        out.data = rows.into_iter().flatten().collect();
        self.stats.passes += 1;
        Ok(())
    }

    fn stats(&self) -> BackendStats {
        self.stats
    }
}
