use std::fs;
use std::io::Write;
use std::path::Path;

use super::SceneError;

/// An RGB raster, 8 bits per channel, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    /// Session timestamp in milliseconds.
    pub t: u64,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, t: u64) -> Result<Self, SceneError> {
        if width == 0 || height == 0 || pixels.len() != 3 * width as usize * height as usize {
            return Err(SceneError::InvalidFrame { width, height, len: pixels.len() });
        }
        Ok(Self { width, height, pixels, t })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(3 * width as usize * height as usize).collect();
        Self { width, height, pixels, t: 0 }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: u32, h: u32, rgb: [u8; 3]) {
        for yy in y.max(0)..(y + h as i64).min(self.height as i64) {
            for xx in x.max(0)..(x + w as i64).min(self.width as i64) {
                self.set_pixel(xx as u32, yy as u32, rgb);
            }
        }
    }

    /// Copies `src` with its top-left corner at (x, y), scaling every channel by
    /// `gain` and clamping to 255. Parts falling outside this frame are clipped.
    pub fn blit(&mut self, src: &Frame, x: i64, y: i64, gain: f64) {
        for sy in 0..src.height {
            let ty = y + sy as i64;
            if ty < 0 || ty >= self.height as i64 {
                continue;
            }
            for sx in 0..src.width {
                let tx = x + sx as i64;
                if tx < 0 || tx >= self.width as i64 {
                    continue;
                }
                let p = src.pixel(sx, sy);
                let scaled = p.map(|c| (c as f64 * gain).round().clamp(0.0, 255.0) as u8);
                self.set_pixel(tx as u32, ty as u32, scaled);
            }
        }
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, SceneError> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(SceneError::Ppm("truncated header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P6" {
            return Err(SceneError::Ppm(format!("unsupported magic {:?}", fields[0])));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| SceneError::Ppm(format!("bad header field {s:?}")));
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(SceneError::Ppm(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = 3 * width as usize * height as usize;
        if bytes.len() < pos + len {
            return Err(SceneError::Ppm("truncated raster".into()));
        }
        Frame::new(width, height, bytes[pos..pos + len].to_vec(), 0)
    }

    pub fn read_ppm(path: &Path) -> Result<Self, SceneError> {
        Frame::from_ppm(&fs::read(path)?)
    }

    pub fn write_ppm(&self, path: &Path) -> Result<(), SceneError> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_ppm())?;
        Ok(())
    }
}
