//! Bundled example programs and their golden images.
//!
//! `corpus.json` lists the programs with render settings. Golden files sit
//! next to it as `golden/<name>.f32` (raw float, compared with a tolerance)
//! and `golden/<name>.png` (for people).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::harness::{read_f32, write_f32};
use crate::pipeline::{Pipeline, PipelineError, RenderConfig, SCREEN};
use crate::pixels::{ImageError, PixelBuffer, Viewport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub viewport: Viewport,
    #[serde(default = "one")]
    pub frames: usize,
    #[serde(default)]
    pub seconds: f64,
    /// Texture to compare; the output image when absent.
    #[serde(default)]
    pub texture: Option<String>,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
}

fn one() -> usize {
    1
}

fn tolerance() -> f64 {
    1e-4
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("corpus manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("{name}: {source}")]
    Run { name: String, source: PipelineError },
}

pub struct Corpus {
    pub dir: PathBuf,
    pub entries: Vec<Entry>,
}

impl Corpus {
    pub fn load(dir: impl Into<PathBuf>) -> Result<Corpus, CorpusError> {
        let dir = dir.into();
        let path = dir.join("corpus.json");
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?;
        Ok(Corpus {
            entries: serde_json::from_str(&text)?,
            dir,
        })
    }

    /// The directory shipped with the sources.
    pub fn bundled() -> Result<Corpus, CorpusError> {
        Corpus::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"))
    }

    pub fn source(&self, e: &Entry) -> Result<String, CorpusError> {
        let path = self.dir.join(format!("{}.gs", e.name));
        std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })
    }

    pub fn golden_path(&self, e: &Entry, ext: &str) -> PathBuf {
        self.dir.join("golden").join(format!("{}.{ext}", e.name))
    }

    pub fn golden(&self, e: &Entry) -> Result<PixelBuffer, CorpusError> {
        let path = self.golden_path(e, "f32");
        read_f32(&path, e.width, e.height).map_err(|source| CorpusError::Io { path, source })
    }

    /// Renders `e` and returns its compared image along with the session.
    pub fn render(&self, e: &Entry, backend: Option<Box<dyn Backend>>) -> Result<(PixelBuffer, Pipeline), CorpusError> {
        let src = self.source(e)?;
        let run = |e: &Entry| -> Result<(PixelBuffer, Pipeline), PipelineError> {
            let cfg = RenderConfig {
                width: e.width,
                height: e.height,
                viewport: e.viewport,
            };
            let mut p = Pipeline::new(&src, cfg, backend)?;
            p.seconds = e.seconds;
            for _ in 0..e.frames {
                p.run_frame()?;
            }
            let img = p.read_texture(e.texture.as_deref().unwrap_or(SCREEN))?;
            Ok((img, p))
        };
        run(e).map_err(|source| CorpusError::Run {
            name: e.name.clone(),
            source,
        })
    }

    /// Writes `image` as the golden pair for `e`.
    pub fn store_golden(&self, e: &Entry, image: &PixelBuffer) -> Result<(), CorpusError> {
        let dir = self.dir.join("golden");
        std::fs::create_dir_all(&dir).map_err(|source| CorpusError::Io { path: dir, source })?;
        let path = self.golden_path(e, "f32");
        write_f32(&path, image).map_err(|source| CorpusError::Io { path, source })?;
        let path = self.golden_path(e, "png");
        Ok(image.save_png(&path)?)
    }
}
