//! RGBA float images, viewports and bilinear sampling.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("png decoding failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("unsupported png layout {0:?}/{1:?}")]
    Unsupported(png::ColorType, png::BitDepth),
    #[error("image size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
}

/// World-space rectangle shown by a plot: `[x0, y0]` is the lower left corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            x0: -1.0,
            y0: -1.0,
            x1: 1.0,
            y1: 1.0,
        }
    }
}

impl Viewport {
    /// World coordinate of the center of pixel `(i, j)`, with `j = 0` the bottom row.
    pub fn pixel_center(&self, i: usize, j: usize, width: usize, height: usize) -> [f64; 2] {
        [
            self.x0 + (i as f64 + 0.5) / width as f64 * (self.x1 - self.x0),
            self.y0 + (j as f64 + 0.5) / height as f64 * (self.y1 - self.y0),
        ]
    }

    /// Normalized texture coordinate of a world point.
    pub fn to_uv(&self, p: [f64; 2]) -> [f64; 2] {
        [(p[0] - self.x0) / (self.x1 - self.x0), (p[1] - self.y0) / (self.y1 - self.y0)]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

/// Row-major RGBA image; row 0 is the bottom row, as in GL.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f32; 4]>,
}

impl PixelBuffer {
    pub fn new(width: usize, height: usize) -> PixelBuffer {
        PixelBuffer {
            width,
            height,
            data: vec![[0.0; 4]; width * height],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> [f32; 4] {
        self.data[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, c: [f32; 4]) {
        self.data[j * self.width + i] = c;
    }

    /// Linear filtering with clamp-to-edge wrapping at normalized `uv`.
    /// Non-finite coordinates sample the first texel.
    pub fn sample(&self, uv: [f64; 2]) -> [f64; 4] {
        if self.data.is_empty() {
            return [0.0; 4];
        }
        let axis = |t: f64, n: usize| -> (usize, usize, f64) {
            let s = if t.is_finite() { t * n as f64 - 0.5 } else { -0.5 };
            let f0 = s.floor();
            let frac = s - f0;
            let clampi = |k: f64| k.clamp(0.0, (n - 1) as f64) as usize;
            (clampi(f0), clampi(f0 + 1.0), frac)
        };
        let (i0, i1, fx) = axis(uv[0], self.width);
        let (j0, j1, fy) = axis(uv[1], self.height);
        let mut out = [0.0; 4];
        for (c, o) in out.iter_mut().enumerate() {
            let at = |i, j| self.get(i, j)[c] as f64;
            let bottom = at(i0, j0) * (1.0 - fx) + at(i1, j0) * fx;
            let top = at(i0, j1) * (1.0 - fx) + at(i1, j1) * fx;
            *o = bottom * (1.0 - fy) + top * fy;
        }
        out
    }

    /// Largest per-channel absolute difference.
    pub fn max_abs_diff(&self, other: &PixelBuffer) -> Result<f64, ImageError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(ImageError::SizeMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| (0..4).map(move |c| (a[c] as f64 - b[c] as f64).abs()))
            .fold(0.0, f64::max))
    }

    /// 8-bit RGBA bytes with the top row first.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * 4);
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                for c in self.get(i, j) {
                    out.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
        }
        out
    }

    pub fn from_rgba8(width: usize, height: usize, bytes: &[u8]) -> PixelBuffer {
        let mut buf = PixelBuffer::new(width, height);
        for (k, px) in bytes.chunks_exact(4).enumerate().take(width * height) {
            let (i, row) = (k % width, k / width);
            buf.set(i, height - 1 - row, [0, 1, 2, 3].map(|c| px[c] as f32 / 255.0));
        }
        buf
    }

    pub fn write_png(&self, w: impl Write) -> Result<(), ImageError> {
        let mut enc = png::Encoder::new(BufWriter::new(w), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.to_rgba8())?;
        Ok(())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        self.write_png(std::fs::File::create(path)?)
    }

    pub fn read_png(r: impl Read) -> Result<PixelBuffer, ImageError> {
        let mut dec = png::Decoder::new(r);
        dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = dec.read_info()?;
        let mut raw = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut raw)?;
        let raw = &raw[..info.buffer_size()];
        let rgba: Vec<u8> = match info.color_type {
            png::ColorType::Rgba => raw.to_vec(),
            png::ColorType::Rgb => raw.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
            png::ColorType::Grayscale => raw.iter().flat_map(|&g| [g, g, g, 255]).collect(),
            png::ColorType::GrayscaleAlpha => raw.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect(),
            other => return Err(ImageError::Unsupported(other, info.bit_depth)),
        };
        Ok(PixelBuffer::from_rgba8(info.width as usize, info.height as usize, &rgba))
    }

    pub fn load_png(path: &Path) -> Result<PixelBuffer, ImageError> {
        PixelBuffer::read_png(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> PixelBuffer {
        let mut b = PixelBuffer::new(4, 2);
        for j in 0..2 {
            for i in 0..4 {
                b.set(i, j, [i as f32 / 3.0, j as f32, 0.0, 1.0]);
            }
        }
        b
    }

    #[test]
    fn sampling_hits_texel_centers_and_clamps() {
        let b = ramp();
        let s = b.sample([1.5 / 4.0, 0.25]);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-6 && s[1] == 0.0);
        let mid = b.sample([0.5, 0.5]);
        assert!((mid[0] - 0.5).abs() < 1e-6 && (mid[1] - 0.5).abs() < 1e-6);
        assert_eq!(b.sample([-3.0, 9.0])[1], 1.0);
        assert_eq!(b.sample([f64::NAN, 0.0])[0], 0.0);
    }

    #[test]
    fn png_round_trip_keeps_orientation() {
        let b = ramp();
        let mut bytes = Vec::new();
        b.write_png(&mut bytes).unwrap();
        let back = PixelBuffer::read_png(bytes.as_slice()).unwrap();
        assert!(b.max_abs_diff(&back).unwrap() <= 0.5 / 255.0 + 1e-6);
        assert_eq!(back.get(0, 1)[1], 1.0);
    }

    #[test]
    fn viewport_maps_pixels() {
        let v = Viewport::default();
        assert_eq!(v.pixel_center(0, 0, 2, 2), [-0.5, -0.5]);
        assert_eq!(v.to_uv([0.0, 1.0]), [0.5, 1.0]);
    }
}
