//! PNG images and pixel-space color transfer.
//!
//! Images hold sRGB values in `[0, 1]`, one `[r, g, b]` triple per pixel in
//! row-major order. Viewed as a feature map they have `C = 3` channels and
//! `N = H·W` positions.

mod lab;
mod transfer;

use std::fs;
use std::io::Cursor;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::stats::FeatureMap;

pub use lab::{lab_to_srgb, srgb_to_lab};
pub use transfer::{color_transfer, color_transfer_unclamped};

/// Working space for color transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorSpace {
    #[default]
    Rgb,
    /// CIE L*a*b* relative to the D65 white point.
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    /// Builds an sRGB image, clamping every channel to `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("image has non-finite pixels".into()));
        }
        let pixels = pixels
            .into_iter()
            .map(|p| p.map(|v| v.clamp(0.0, 1.0)))
            .collect();
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// Pixel values in `space`, as a `3 x (H·W)` feature map with a grid.
    pub fn to_features(&self, space: ColorSpace) -> FeatureMap {
        let mut data = Array2::zeros((3, self.pixels.len()));
        for (i, p) in self.pixels.iter().enumerate() {
            let v = match space {
                ColorSpace::Rgb => *p,
                ColorSpace::Lab => srgb_to_lab(*p),
            };
            for c in 0..3 {
                data[[c, i]] = v[c];
            }
        }
        FeatureMap::with_spatial(data, self.height, self.width)
            .expect("pixels are finite and cover the grid")
    }
}

/// `C = 3`, `N = H·W` view of an image in sRGB.
pub fn image_as_features(img: &Image) -> FeatureMap {
    img.to_features(ColorSpace::Rgb)
}

/// Loads an 8- or 16-bit PNG. Alpha is dropped, grayscale is replicated to
/// three channels and palettes are expanded.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("not a readable PNG ({e})")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG is too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("corrupt PNG data ({e})")))?;
    buf.truncate(info.buffer_size());

    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::Format("palette was not expanded".into())),
    };
    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        png::BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
            .collect(),
        other => return Err(Error::Format(format!("unexpected bit depth {other:?}"))),
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let row_samples = width * channels;
    let mut pixels = Vec::with_capacity(width * height);
    // Rows may carry trailing padding only for sub-byte depths, which
    // EXPAND removes, so rows are tightly packed here.
    for row in samples.chunks_exact(row_samples).take(height) {
        for px in row.chunks_exact(channels) {
            pixels.push(match channels {
                1 | 2 => [px[0]; 3],
                _ => [px[0], px[1], px[2]],
            });
        }
    }
    Image::new(width, height, pixels)
}

/// 8-bit sRGB encoding: each channel is `round_half_even(v·255)`.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Format(format!("PNG encoding failed ({e})")))?;
        let data: Vec<u8> = img
            .pixels
            .iter()
            .flatten()
            .map(|v| (v * 255.0).round_ties_even() as u8)
            .collect();
        writer
            .write_image_data(&data)
            .map_err(|e| Error::Format(format!("PNG encoding failed ({e})")))?;
    }
    Ok(out)
}

pub fn save_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode_raw(
        width: u32,
        height: u32,
        color: png::ColorType,
        depth: png::BitDepth,
        data: &[u8],
    ) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut e = png::Encoder::new(&mut out, width, height);
            e.set_color(color);
            e.set_depth(depth);
            let mut w = e.write_header().unwrap();
            w.write_image_data(data).unwrap();
        }
        out
    }

    #[test]
    fn solid_color_round_trips() {
        let img = Image::new(2, 2, vec![[0.2, 0.4, 0.6]; 4]).unwrap();
        let first = encode_png(&img).unwrap();
        let back = decode_png(&first).unwrap();
        assert_eq!(encode_png(&back).unwrap(), first);
        assert_eq!(back.width(), 2);
        assert_eq!(
            back.pixels()[3],
            [51.0 / 255.0, 102.0 / 255.0, 153.0 / 255.0]
        );
    }

    #[test]
    fn sixteen_bit_max_is_one() {
        let data = [0xff, 0xff, 0x00, 0x00, 0x80, 0x00];
        let bytes = encode_raw(1, 1, png::ColorType::Rgb, png::BitDepth::Sixteen, &data);
        let img = decode_png(&bytes).unwrap();
        assert_eq!(img.pixels()[0][0], 1.0);
        assert_eq!(img.pixels()[0][1], 0.0);
        assert_eq!(img.pixels()[0][2], 32768.0 / 65535.0);
    }

    #[test]
    fn alpha_dropped_and_gray_replicated() {
        let rgba = encode_raw(
            1,
            1,
            png::ColorType::Rgba,
            png::BitDepth::Eight,
            &[10, 20, 30, 0],
        );
        let img = decode_png(&rgba).unwrap();
        assert_eq!(img.pixels()[0], [10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]);

        let gray = encode_raw(
            2,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[0, 255],
        );
        let img = decode_png(&gray).unwrap();
        assert_eq!(img.pixels(), &[[0.0; 3], [1.0; 3]]);
    }

    #[test]
    fn rejects_non_png() {
        assert!(matches!(
            decode_png(b"\x93NUMPY not a png"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn quantization_rounds_half_to_even() {
        // 0.5/255 and 1.5/255 sit exactly on .5 after scaling
        let img = Image::new(
            2,
            1,
            vec![[0.5 / 255.0, 1.5 / 255.0, 2.5 / 255.0], [1.0, 0.0, 0.0]],
        )
        .unwrap();
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        let q: Vec<f64> = back.pixels()[0]
            .iter()
            .map(|v| (v * 255.0).round())
            .collect();
        assert_eq!(q, vec![0.0, 2.0, 2.0]);
    }

    #[test]
    fn features_are_row_major() {
        let img = Image::new(2, 2, vec![[0.0; 3], [0.1; 3], [0.2; 3], [0.3; 3]]).unwrap();
        let f = image_as_features(&img);
        assert_eq!(f.channels(), 3);
        assert_eq!(f.positions(), 4);
        assert_eq!(f.spatial(), Some((2, 2)));
        assert_eq!(f.data()[[0, 2]], 0.2);
    }

    #[test]
    fn image_validation() {
        assert!(Image::new(0, 1, vec![]).is_err());
        assert!(Image::new(2, 2, vec![[0.0; 3]; 3]).is_err());
        let clamped = Image::new(1, 1, vec![[-0.5, 0.5, 1.5]]).unwrap();
        assert_eq!(clamped.pixels()[0], [0.0, 0.5, 1.0]);
    }
}
