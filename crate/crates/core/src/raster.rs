//! Plain rasters and PNG I/O.

use std::path::Path;

use image::{ColorType, ImageReader};

use crate::error::{ForgeError, Result};

/// 8-bit RGB raster, row-major, interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbRaster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbRaster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize * 3);
        RgbRaster { width, height, data }
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        RgbRaster::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Ok(RgbRaster::new(w, h, img.into_raw()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_png(path, &self.data, self.width, self.height, ColorType::Rgb8)
    }

    /// Bilinear resize with pixel-center alignment.
    pub fn resize(&self, width: u32, height: u32) -> RgbRaster {
        let planes: Vec<Vec<f32>> = (0..3)
            .map(|c| {
                let plane: Vec<f32> = self.data.iter().skip(c).step_by(3).map(|&v| v as f32).collect();
                resample_bilinear(&plane, self.width, self.height, width, height)
            })
            .collect();
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for i in 0..width as usize * height as usize {
            for plane in &planes {
                data.push(quantize_u8(plane[i]));
            }
        }
        RgbRaster::new(width, height, data)
    }
}

/// Single-channel opacity raster with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMatte {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl AlphaMatte {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize);
        AlphaMatte { width, height, data }
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        AlphaMatte::new(width, height, vec![0.0; width as usize * height as usize])
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        AlphaMatte::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Decodes 8-bit coverage as `value / 255`.
    pub fn from_u8(width: u32, height: u32, bytes: &[u8]) -> Self {
        AlphaMatte::new(width, height, bytes.iter().map(|&b| b as f32 / 255.0).collect())
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&a| quantize_u8(a * 255.0)).collect()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = open(path)?.to_luma8();
        let (w, h) = img.dimensions();
        Ok(AlphaMatte::from_u8(w, h, img.as_raw()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_png(path, &self.to_u8(), self.width, self.height, ColorType::L8)
    }

    pub fn resize(&self, width: u32, height: u32) -> AlphaMatte {
        let data = resample_bilinear(&self.data, self.width, self.height, width, height)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        AlphaMatte::new(width, height, data)
    }
}

/// Loads an RGBA PNG and splits it into color and coverage.
pub fn load_rgba(path: &Path) -> Result<(RgbRaster, AlphaMatte)> {
    let img = open(path)?.to_rgba8();
    let (w, h) = img.dimensions();
    let mut rgb = Vec::with_capacity(w as usize * h as usize * 3);
    let mut alpha = Vec::with_capacity(w as usize * h as usize);
    for px in img.pixels() {
        rgb.extend_from_slice(&px.0[..3]);
        alpha.push(px.0[3]);
    }
    Ok((RgbRaster::new(w, h, rgb), AlphaMatte::from_u8(w, h, &alpha)))
}

pub fn quantize_u8(v: f32) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resampling of one plane; source samples sit at pixel centers.
pub fn resample_bilinear(src: &[f32], sw: u32, sh: u32, dw: u32, dh: u32) -> Vec<f32> {
    assert_eq!(src.len(), sw as usize * sh as usize);
    let sw_us = sw as usize;
    let axis = |d: u32, s: u32, n: u32| -> (usize, usize, f32) {
        let pos = ((d as f64 + 0.5) * s as f64 / n as f64 - 0.5).clamp(0.0, (s - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(s as usize - 1);
        (lo, hi, (pos - lo as f64) as f32)
    };
    let cols: Vec<_> = (0..dw).map(|x| axis(x, sw, dw)).collect();
    let mut out = Vec::with_capacity(dw as usize * dh as usize);
    for y in 0..dh {
        let (y0, y1, fy) = axis(y, sh, dh);
        let row0 = &src[y0 * sw_us..(y0 + 1) * sw_us];
        let row1 = &src[y1 * sw_us..(y1 + 1) * sw_us];
        for &(x0, x1, fx) in &cols {
            let top = row0[x0] + (row0[x1] - row0[x0]) * fx;
            let bottom = row1[x0] + (row1[x1] - row1[x0]) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    out
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| ForgeError::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| ForgeError::io(path, e))?;
    reader.decode().map_err(|source| ForgeError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn save_png(path: &Path, bytes: &[u8], w: u32, h: u32, color: ColorType) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| ForgeError::io(parent, e))?;
    }
    image::save_buffer_with_format(path, bytes, w, h, color, image::ImageFormat::Png).map_err(|source| {
        ForgeError::Image {
            path: path.to_path_buf(),
            source,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_identity_is_exact() {
        let src: Vec<f32> = (0..12).map(|v| v as f32).collect();
        assert_eq!(resample_bilinear(&src, 4, 3, 4, 3), src);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let m = AlphaMatte::filled(7, 5, 0.25);
        let r = m.resize(13, 2);
        assert!(r.data().iter().all(|&v| (v - 0.25).abs() < 1e-7));
    }

    #[test]
    fn alpha_png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let bytes: Vec<u8> = (0..=255).collect();
        let m = AlphaMatte::from_u8(16, 16, &bytes);
        m.save(&path).unwrap();
        let back = AlphaMatte::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_u8(), bytes);
    }
}
