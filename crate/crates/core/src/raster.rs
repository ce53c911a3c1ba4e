//! Dense frame stacks and hard-edged disc rasterization.

use crate::error::{Error, Result};

/// Real-valued frame stack, laid out `frames x height x width x channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Video {
    pub fn zeros(frames: usize, height: usize, width: usize, channels: usize) -> Self {
        Self {
            frames,
            height,
            width,
            channels,
            data: vec![0.0; frames * height * width * channels],
        }
    }

    pub fn from_data(frames: usize, height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * height * width * channels {
            return Err(Error::shape(format!(
                "{} values for a {frames}x{height}x{width}x{channels} video",
                data.len()
            )));
        }
        Ok(Self {
            frames,
            height,
            width,
            channels,
            data,
        })
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.frames, self.height, self.width, self.channels]
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        let n = self.frame_len();
        &self.data[f * n..(f + 1) * n]
    }

    pub fn frame_mut(&mut self, f: usize) -> &mut [f64] {
        let n = self.frame_len();
        &mut self.data[f * n..(f + 1) * n]
    }

    pub fn pixel(&self, f: usize, y: usize, x: usize) -> &[f64] {
        let i = ((f * self.height + y) * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Rounds `[0,1]` values to bytes, clamping out-of-range values.
    pub fn to_bytes(&self) -> ByteVideo {
        ByteVideo {
            frames: self.frames,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }
}

/// 8-bit RGB frame stack, `frames x height x width x 3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteVideo {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl ByteVideo {
    pub fn black(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
            data: vec![0; frames * height * width * 3],
        }
    }

    pub fn frame(&self, f: usize) -> &[u8] {
        let n = self.height * self.width * 3;
        &self.data[f * n..(f + 1) * n]
    }

    pub fn frame_mut(&mut self, f: usize) -> &mut [u8] {
        let n = self.height * self.width * 3;
        &mut self.data[f * n..(f + 1) * n]
    }

    pub fn to_video(&self) -> Video {
        Video {
            frames: self.frames,
            height: self.height,
            width: self.width,
            channels: 3,
            data: self.data.iter().map(|&b| b as f64 / 255.0).collect(),
        }
    }
}

/// Paints every pixel whose center lies within `radius` of `(cx, cy)`.
pub fn fill_disc<T: Copy>(frame: &mut [T], width: usize, height: usize, cx: f64, cy: f64, radius: f64, color: [T; 3]) {
    if radius < 0.0 || !cx.is_finite() || !cy.is_finite() {
        return;
    }
    let r2 = radius * radius;
    let x0 = (cx - radius).ceil().max(0.0);
    let x1 = (cx + radius).floor().min(width as f64 - 1.0);
    let y0 = (cy - radius).ceil().max(0.0);
    let y1 = (cy + radius).floor().min(height as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    for py in y0 as usize..=y1 as usize {
        let dy = py as f64 - cy;
        for px in x0 as usize..=x1 as usize {
            let dx = px as f64 - cx;
            if dx * dx + dy * dy <= r2 {
                let i = (py * width + px) * 3;
                frame[i..i + 3].copy_from_slice(&color);
            }
        }
    }
}
