//! File-drop protocol for external execution harnesses.
//!
//! The client writes `job-<id>.json` into a directory and waits for
//! `result-<id>.json`. Pixel data travels in separate files of raw
//! little-endian `f32` RGBA, bottom row first. Operations are queued and
//! shipped together when an answer is needed (a compile or a download), so a
//! run of feedback passes followed by one read costs a single round trip.
//!
//! [`Responder`] serves a directory with the simulation backend; it is the
//! reference behaviour a browser harness has to match.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, BackendStats, RenderJob, SimBackend, TexId};
use crate::codegen::ShaderArtifact;
use crate::pixels::PixelBuffer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum HarnessOp {
    Create { texture: TexId, width: usize, height: usize },
    /// Initializes a texture from a raw `f32` file.
    Upload { texture: TexId, file: String },
    Compile { artifact: ShaderArtifact },
    Render { pass: RenderJob },
    /// Requests a readback into `file`.
    Download { texture: TexId, file: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessJob {
    pub id: u64,
    pub ops: Vec<HarnessOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Readback {
    pub texture: TexId,
    pub width: usize,
    pub height: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessResult {
    pub id: u64,
    pub ok: bool,
    #[serde(default)]
    pub error: Option<String>,
    /// Effective readback precision, e.g. `float32` or `unorm8`.
    pub precision: String,
    #[serde(default)]
    pub readbacks: Vec<Readback>,
    pub passes: usize,
}

pub fn write_f32(path: &Path, pixels: &PixelBuffer) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(pixels.data.len() * 16);
    for px in &pixels.data {
        for c in px {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(path, bytes)
}

pub fn read_f32(path: &Path, width: usize, height: usize) -> std::io::Result<PixelBuffer> {
    let bytes = fs::read(path)?;
    if bytes.len() != width * height * 16 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}: {} bytes for {width}x{height} pixels", path.display(), bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|px| {
            let mut c = [0f32; 4];
            for (k, b) in px.chunks_exact(4).enumerate() {
                c[k] = f32::from_le_bytes(b.try_into().expect("4 bytes"));
            }
            c
        })
        .collect();
    Ok(PixelBuffer { width, height, data })
}

/// Writes via a temporary name so readers never see partial files.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}

/// Backend that hands work to a harness through a directory.
pub struct HarnessBackend {
    dir: PathBuf,
    timeout: Duration,
    next_job: u64,
    next_texture: TexId,
    sizes: HashMap<TexId, (usize, usize)>,
    pending: Vec<HarnessOp>,
    stats: BackendStats,
}

impl HarnessBackend {
    pub fn new(dir: impl Into<PathBuf>, timeout: Duration) -> Result<HarnessBackend, BackendError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(HarnessBackend {
            dir,
            timeout,
            next_job: 0,
            next_texture: 0,
            sizes: HashMap::new(),
            pending: Vec::new(),
            stats: BackendStats::default(),
        })
    }

    /// Sends the queued operations and waits for the result.
    fn flush(&mut self) -> Result<HarnessResult, BackendError> {
        let id = self.next_job;
        self.next_job += 1;
        let job = HarnessJob {
            id,
            ops: std::mem::take(&mut self.pending),
        };
        let text = serde_json::to_string_pretty(&job).map_err(|e| BackendError::Harness(e.to_string()))?;
        write_atomic(&self.dir.join(format!("job-{id}.json")), &text)?;
        let result_path = self.dir.join(format!("result-{id}.json"));
        let start = Instant::now();
        while !result_path.exists() {
            if start.elapsed() > self.timeout {
                return Err(BackendError::Harness(format!("no result for job {id} after {:?}", self.timeout)));
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        let result: HarnessResult = serde_json::from_str(&fs::read_to_string(&result_path)?)
            .map_err(|e| BackendError::Harness(format!("bad result for job {id}: {e}")))?;
        if !result.ok {
            return Err(BackendError::Harness(result.error.unwrap_or_else(|| "job failed".into())));
        }
        Ok(result)
    }

    fn data_file(&self, kind: &str, tex: TexId) -> String {
        format!("{kind}-{}-{tex}.f32", self.next_job)
    }
}

impl Backend for HarnessBackend {
    fn name(&self) -> &'static str {
        "harness"
    }

    fn create_texture(&mut self, width: usize, height: usize) -> Result<TexId, BackendError> {
        let texture = self.next_texture;
        self.next_texture += 1;
        self.sizes.insert(texture, (width, height));
        self.pending.push(HarnessOp::Create { texture, width, height });
        Ok(texture)
    }

    fn upload(&mut self, tex: TexId, pixels: &PixelBuffer) -> Result<(), BackendError> {
        if !self.sizes.contains_key(&tex) {
            return Err(BackendError::UnknownTexture(tex));
        }
        let file = self.data_file("upload", tex);
        write_f32(&self.dir.join(&file), pixels)?;
        self.pending.push(HarnessOp::Upload { texture: tex, file });
        self.stats.uploads += 1;
        Ok(())
    }

    fn download(&mut self, tex: TexId) -> Result<PixelBuffer, BackendError> {
        let &(w, h) = self.sizes.get(&tex).ok_or(BackendError::UnknownTexture(tex))?;
        let file = self.data_file("download", tex);
        self.pending.push(HarnessOp::Download {
            texture: tex,
            file: file.clone(),
        });
        self.flush()?;
        self.stats.downloads += 1;
        Ok(read_f32(&self.dir.join(file), w, h)?)
    }

    fn prepare(&mut self, artifact: &ShaderArtifact) -> Result<(), BackendError> {
        self.pending.push(HarnessOp::Compile {
            artifact: artifact.clone(),
        });
        self.flush()?;
        self.stats.prepared += 1;
        Ok(())
    }

    fn render(&mut self, job: &RenderJob) -> Result<(), BackendError> {
        if let Some(s) = job.samplers.iter().find(|s| s.texture == job.target) {
            return Err(BackendError::FeedbackLoop(s.texture));
        }
        self.pending.push(HarnessOp::Render { pass: job.clone() });
        self.stats.passes += 1;
        Ok(())
    }

    fn stats(&self) -> BackendStats {
        self.stats
    }
}

/// Serves a job directory with [`SimBackend`].
pub struct Responder {
    dir: PathBuf,
    backend: SimBackend,
    /// Client texture ids to backend ids.
    ids: HashMap<TexId, TexId>,
    next_job: u64,
}

impl Responder {
    pub fn new(dir: impl Into<PathBuf>) -> Responder {
        Responder {
            dir: dir.into(),
            backend: SimBackend::new(),
            ids: HashMap::new(),
            next_job: 0,
        }
    }

    /// Answers every job that is ready, in order. Returns how many were served.
    pub fn poll(&mut self) -> std::io::Result<usize> {
        let mut served = 0;
        loop {
            let path = self.dir.join(format!("job-{}.json", self.next_job));
            if !path.exists() {
                return Ok(served);
            }
            let result = match serde_json::from_str::<HarnessJob>(&fs::read_to_string(&path)?) {
                Ok(job) => self.execute(&job),
                Err(e) => HarnessResult {
                    id: self.next_job,
                    ok: false,
                    error: Some(format!("malformed job: {e}")),
                    precision: "float32".into(),
                    readbacks: Vec::new(),
                    passes: 0,
                },
            };
            let text = serde_json::to_string_pretty(&result).expect("result serializes");
            write_atomic(&self.dir.join(format!("result-{}.json", self.next_job)), &text)?;
            self.next_job += 1;
            served += 1;
        }
    }

    fn execute(&mut self, job: &HarnessJob) -> HarnessResult {
        let mut result = HarnessResult {
            id: job.id,
            ok: true,
            error: None,
            precision: "float32".into(),
            readbacks: Vec::new(),
            passes: 0,
        };
        if let Err(e) = self.run_ops(job, &mut result) {
            result.ok = false;
            result.error = Some(e.to_string());
        }
        result
    }

    fn id(&self, tex: TexId) -> Result<TexId, BackendError> {
        self.ids.get(&tex).copied().ok_or(BackendError::UnknownTexture(tex))
    }

    fn run_ops(&mut self, job: &HarnessJob, result: &mut HarnessResult) -> Result<(), BackendError> {
        for op in &job.ops {
            match op {
                HarnessOp::Create { texture, width, height } => {
                    let id = self.backend.create_texture(*width, *height)?;
                    self.ids.insert(*texture, id);
                }
                HarnessOp::Upload { texture, file } => {
                    let id = self.id(*texture)?;
                    let (w, h) = self.backend.size(id)?;
                    let pixels = read_f32(&self.dir.join(file), w, h)?;
                    self.backend.upload(id, &pixels)?;
                }
                HarnessOp::Compile { artifact } => self.backend.prepare(artifact)?,
                HarnessOp::Render { pass } => {
                    let mut pass = pass.clone();
                    pass.target = self.id(pass.target)?;
                    for s in &mut pass.samplers {
                        s.texture = self.id(s.texture)?;
                    }
                    self.backend.render(&pass)?;
                    result.passes += 1;
                }
                HarnessOp::Download { texture, file } => {
                    let pixels = self.backend.download(self.id(*texture)?)?;
                    write_f32(&self.dir.join(file), &pixels)?;
                    result.readbacks.push(Readback {
                        texture: *texture,
                        width: pixels.width,
                        height: pixels.height,
                        file: file.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A [`Responder`] polling on a background thread until dropped.
pub struct ResponderThread {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<std::io::Result<()>>>,
}

impl ResponderThread {
    pub fn spawn(dir: impl Into<PathBuf>) -> ResponderThread {
        let mut responder = Responder::new(dir);
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handle = std::thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                if responder.poll()? == 0 {
                    std::thread::sleep(Duration::from_millis(1));
                }
            }
            Ok(())
        });
        ResponderThread {
            stop,
            handle: Some(handle),
        }
    }
}

impl Drop for ResponderThread {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
