//! Raster inputs: the color image being segmented and an optional
//! per-pixel edge-confidence map from an external boundary detector.

use crate::error::{Error, Result};

/// Working color space for feature computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorSpace {
    #[default]
    Rgb,
    /// CIELAB with L scaled from [0, 100] and a/b from [-128, 127] into [0, 1].
    Lab,
}

/// Dense row-major image with interleaved channels, intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "zero-sized image ({width}x{height})"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(channels))
            .ok_or_else(|| Error::InvalidInput("image dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidInput(format!(
                "image data has {} values, expected {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "intensity {} at index {pos} is outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel image from row-major intensities.
    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Channel values of the pixel with row-major index `idx`.
    #[inline]
    pub fn pixel(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.channels..(idx + 1) * self.channels]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> &[f64] {
        self.pixel(y * self.width + x)
    }

    /// Copy of this image in the requested working space.
    pub fn to_color_space(&self, space: ColorSpace) -> Image {
        match space {
            ColorSpace::Rgb => self.clone(),
            ColorSpace::Lab => {
                let mut data = Vec::with_capacity(self.data.len());
                for px in self.data.chunks_exact(self.channels) {
                    if self.channels == 1 {
                        let [l, _, _] = srgb_to_lab_normalized(px[0], px[0], px[0]);
                        data.push(l);
                    } else {
                        data.extend_from_slice(&srgb_to_lab_normalized(px[0], px[1], px[2]));
                    }
                }
                Image {
                    width: self.width,
                    height: self.height,
                    channels: self.channels,
                    data,
                }
            }
        }
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB (D65) to CIELAB, rescaled channel-wise into [0, 1].
fn srgb_to_lab_normalized(r: f64, g: f64, b: f64) -> [f64; 3] {
    let (r, g, b) = (srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let fx = lab_f(x / 0.950_47);
    let fy = lab_f(y);
    let fz = lab_f(z / 1.088_83);
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);
    [
        (l / 100.0).clamp(0.0, 1.0),
        ((a + 128.0) / 255.0).clamp(0.0, 1.0),
        ((bb + 128.0) / 255.0).clamp(0.0, 1.0),
    ]
}

/// Per-pixel boundary confidence in [0, 1], paired with an [`Image`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConfidenceMap {
    width: usize,
    height: usize,
    conf: Vec<f64>,
}

impl EdgeConfidenceMap {
    pub fn new(width: usize, height: usize, conf: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "zero-sized edge map ({width}x{height})"
            )));
        }
        if conf.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "edge map has {} values, expected {}",
                conf.len(),
                width * height
            )));
        }
        if let Some(pos) = conf.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "edge confidence {} at index {pos} is outside [0, 1]",
                conf[pos]
            )));
        }
        Ok(EdgeConfidenceMap {
            width,
            height,
            conf,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn conf(&self) -> &[f64] {
        &self.conf
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.conf[y * self.width + x]
    }

    pub fn check_matches(&self, img: &Image) -> Result<()> {
        if self.width != img.width() || self.height != img.height() {
            return Err(Error::DimensionMismatch {
                what: "edge map",
                expected: (img.width(), img.height()),
                found: (self.width, self.height),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_bad_shapes() {
        assert!(Image::gray(0, 3, vec![]).is_err());
        assert!(Image::gray(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::gray(1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 2, vec![0.0, 0.0]).is_err());
        assert!(EdgeConfidenceMap::new(1, 1, vec![-0.1]).is_err());
    }

    #[test]
    fn lab_stays_in_unit_range() {
        let img = Image::new(
            4,
            1,
            3,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let lab = img.to_color_space(ColorSpace::Lab);
        assert!(lab.data().iter().all(|v| (0.0..=1.0).contains(v)));
        // black and white: L at the extremes, a/b neutral
        assert!(lab.pixel(0)[0].abs() < 1e-9);
        assert!((lab.pixel(1)[0] - 1.0).abs() < 1e-3);
        assert!((lab.pixel(1)[1] - 128.0 / 255.0).abs() < 1e-3);
    }
}
