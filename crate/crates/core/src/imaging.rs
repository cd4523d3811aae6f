//! Pixel substrate: decoding, cropping with edge replication, bilinear resizing.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-channel image with row-major values, normally in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::mismatch(width * height, data.len()));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite pixel value {v}")));
        }
        Ok(ImagePlane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        ImagePlane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ImagePlane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with out-of-range coordinates clamped to the nearest edge.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Separate red, green and blue planes of a decoded color image.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPlanes {
    pub red: ImagePlane,
    pub green: ImagePlane,
    pub blue: ImagePlane,
}

impl ColorPlanes {
    /// ITU-R 601 luma.
    pub fn to_gray(&self) -> ImagePlane {
        let data = self
            .red
            .data
            .iter()
            .zip(&self.green.data)
            .zip(&self.blue.data)
            .map(|((r, g), b)| luma(*r, *g, *b))
            .collect();
        ImagePlane {
            width: self.red.width,
            height: self.red.height,
            data,
        }
    }
}

#[inline]
fn luma(r: f64, g: f64, b: f64) -> f64 {
    (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
}

/// Axis-aligned box in pixel units; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.w, self.h]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidBox(format!("non-finite box {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "non-positive size {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn translated(&self, dx: f64, dy: f64) -> BoundingBox {
        BoundingBox {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// Box scaled by `factor` in both dimensions, keeping its center.
    pub fn scaled(&self, factor: f64) -> BoundingBox {
        let (cx, cy) = self.center();
        let (w, h) = (self.w * factor, self.h * factor);
        BoundingBox {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    /// Intersection with the frame rectangle `[0, width] x [0, height]`, or
    /// `None` if nothing of the box lies inside the frame.
    pub fn clamped_to(&self, width: usize, height: usize) -> Option<BoundingBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = (self.x + self.w).min(width as f64);
        let y1 = (self.y + self.h).min(height as f64);
        (x1 > x0 && y1 > y0).then_some(BoundingBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        })
    }
}

#[inline]
pub(crate) fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Decodes a PNG or JPEG payload to a grayscale plane in [0, 1].
pub fn decode_image(bytes: &[u8]) -> Result<ImagePlane> {
    let img = decode_dynamic(bytes)?;
    Ok(match img {
        DynamicImage::ImageLuma8(buf) => plane_from(
            buf.width(),
            buf.height(),
            buf.as_raw().iter().map(|&v| v as f64 / 255.0),
        ),
        DynamicImage::ImageLuma16(buf) => plane_from(
            buf.width(),
            buf.height(),
            buf.as_raw().iter().map(|&v| v as f64 / 65535.0),
        ),
        DynamicImage::ImageLumaA8(buf) => plane_from(
            buf.width(),
            buf.height(),
            buf.pixels().map(|p| p.0[0] as f64 / 255.0),
        ),
        other => planes_of(&other).to_gray(),
    })
}

/// Decodes a PNG or JPEG payload to three color planes in [0, 1].
pub fn decode_color(bytes: &[u8]) -> Result<ColorPlanes> {
    Ok(planes_of(&decode_dynamic(bytes)?))
}

pub fn read_image(path: &Path) -> Result<ImagePlane> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode { stage, message } => Error::Decode {
            stage,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn decode_dynamic(bytes: &[u8]) -> Result<DynamicImage> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode {
        stage: "format detection",
        message: e.to_string(),
    })?;
    let stage = match format {
        ImageFormat::Png => "png",
        ImageFormat::Jpeg => "jpeg",
        _ => {
            return Err(Error::Decode {
                stage: "format detection",
                message: format!("unsupported format {format:?}"),
            })
        }
    };
    image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
        stage,
        message: e.to_string(),
    })
}

fn plane_from(width: u32, height: u32, values: impl Iterator<Item = f64>) -> ImagePlane {
    ImagePlane {
        width: width as usize,
        height: height as usize,
        data: values.collect(),
    }
}

fn planes_of(img: &DynamicImage) -> ColorPlanes {
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    let channel = |c: usize| {
        plane_from(
            w,
            h,
            rgb.pixels().map(move |p| (p.0[c] as f64).clamp(0.0, 1.0)),
        )
    };
    ColorPlanes {
        red: channel(0),
        green: channel(1),
        blue: channel(2),
    }
}

/// 8-bit grayscale PNG of a plane, values scaled by 255 and rounded half up.
pub fn encode_png(plane: &ImagePlane) -> Result<Vec<u8>> {
    let raw: Vec<u8> = plane
        .data
        .iter()
        .map(|&v| round_half_up(v.clamp(0.0, 1.0) * 255.0).clamp(0, 255) as u8)
        .collect();
    let buf = image::GrayImage::from_raw(plane.width as u32, plane.height as u32, raw)
        .ok_or_else(|| Error::Encode("buffer size does not match plane".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Crops `bbox` (rounded half up to whole pixels) out of `img`. Pixels
/// outside the frame replicate the nearest edge pixel.
pub fn extract_patch(img: &ImagePlane, bbox: &BoundingBox) -> Result<ImagePlane> {
    let x0 = round_half_up(bbox.x);
    let y0 = round_half_up(bbox.y);
    let w = round_half_up(bbox.w);
    let h = round_half_up(bbox.h);
    if w < 1 || h < 1 {
        return Err(Error::InvalidBox(format!(
            "box {bbox:?} rounds to {w}x{h} pixels"
        )));
    }
    let (w, h) = (w as usize, h as usize);
    let mut data = Vec::with_capacity(w * h);
    for j in 0..h as i64 {
        for i in 0..w as i64 {
            data.push(img.get_clamped(x0 + i, y0 + j));
        }
    }
    Ok(ImagePlane {
        width: w,
        height: h,
        data,
    })
}

/// Bilinear resize with half-pixel center alignment and clamped borders.
pub fn resize_bilinear(img: &ImagePlane, out_w: usize, out_h: usize) -> Result<ImagePlane> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidInput(format!(
            "resize target {out_w}x{out_h} is empty"
        )));
    }
    let xs = sample_positions(img.width, out_w);
    let ys = sample_positions(img.height, out_h);
    let mut data = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        let row0 = &img.data[y0 * img.width..(y0 + 1) * img.width];
        let row1 = &img.data[y1 * img.width..(y1 + 1) * img.width];
        for &(x0, x1, fx) in &xs {
            let top = lerp(row0[x0], row0[x1], fx);
            let bottom = lerp(row1[x0], row1[x1], fx);
            data.push(lerp(top, bottom, fy));
        }
    }
    Ok(ImagePlane {
        width: out_w,
        height: out_h,
        data,
    })
}

/// Crop followed by resize, the usual way model patches are built.
pub fn crop_resized(
    img: &ImagePlane,
    bbox: &BoundingBox,
    out_w: usize,
    out_h: usize,
) -> Result<ImagePlane> {
    let patch = extract_patch(img, bbox)?;
    if patch.width == out_w && patch.height == out_h {
        return Ok(patch);
    }
    resize_bilinear(&patch, out_w, out_h)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn sample_positions(in_len: usize, out_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    let last = (in_len - 1) as f64;
    (0..out_len)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray_png(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
        let buf = image::GrayImage::from_raw(width, height, pixels.to_vec()).unwrap();
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn decodes_white_pixel() {
        let plane = decode_image(&gray_png(1, 1, &[255])).unwrap();
        assert_eq!(plane.data, vec![1.0]);
    }

    #[test]
    fn decodes_scale_endpoints() {
        let plane = decode_image(&gray_png(2, 1, &[0, 255])).unwrap();
        assert_eq!((plane.width, plane.height), (2, 1));
        assert_eq!(plane.data, vec![0.0, 1.0]);
    }

    #[test]
    fn color_uses_601_luma() {
        let buf = image::RgbImage::from_raw(3, 1, vec![255, 0, 0, 0, 255, 0, 0, 0, 255]).unwrap();
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png).unwrap();
        let bytes = out.into_inner();
        let gray = decode_image(&bytes).unwrap();
        let expect = [0.299, 0.587, 0.114];
        for (g, e) in gray.data.iter().zip(expect) {
            assert!((g - e).abs() < 1e-7, "{g} vs {e}");
        }
        let color = decode_color(&bytes).unwrap();
        assert_eq!(color.red.data, vec![1.0, 0.0, 0.0]);
        assert_eq!(color.blue.data, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn truncated_jpeg_is_a_decode_error() {
        let buf = image::GrayImage::from_fn(16, 16, |x, y| image::Luma([(x * 16 + y) as u8]));
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Jpeg).unwrap();
        let bytes = out.into_inner();
        let err = decode_image(&bytes[..bytes.len() / 3]).unwrap_err();
        assert!(matches!(err, Error::Decode { stage: "jpeg", .. }), "{err}");
        let err = decode_image(b"not an image").unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }

    #[test]
    fn png_encode_round_trips_8bit_values() {
        let plane = ImagePlane::new(3, 1, vec![0.0, 0.5, 1.0]).unwrap();
        let back = decode_image(&encode_png(&plane).unwrap()).unwrap();
        // 0.5 * 255 = 127.5 rounds up to 128
        assert_eq!(back.data, vec![0.0, 128.0 / 255.0, 1.0]);
    }

    #[test]
    fn crop_inside_is_exact_copy() {
        let img = ImagePlane::from_fn(4, 4, |x, y| (y * 4 + x) as f64 / 16.0);
        let patch = extract_patch(&img, &BoundingBox::new(1.0, 1.0, 2.0, 2.0).unwrap()).unwrap();
        assert_eq!(patch.data, [5.0, 6.0, 9.0, 10.0].map(|v| v / 16.0).to_vec());
    }

    #[test]
    fn crop_past_right_edge_replicates_last_column() {
        // 0.1 0.2 0.3
        // 0.4 0.5 0.6
        // 0.7 0.8 0.9
        let img = ImagePlane::from_fn(3, 3, |x, y| (y * 3 + x + 1) as f64 / 10.0);
        let patch = extract_patch(&img, &BoundingBox::new(1.0, 0.0, 3.0, 3.0).unwrap()).unwrap();
        let expected = [0.2, 0.3, 0.3, 0.5, 0.6, 0.6, 0.8, 0.9, 0.9];
        assert_eq!(patch.data, expected.to_vec());
    }

    #[test]
    fn crop_rounding_to_zero_width_is_rejected() {
        let img = ImagePlane::filled(4, 4, 0.5);
        let err = extract_patch(&img, &BoundingBox::new(0.0, 0.0, 0.4, 2.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidBox(_))));
    }

    #[test]
    fn crop_rounds_half_up() {
        let img = ImagePlane::from_fn(4, 1, |x, _| x as f64);
        let patch = extract_patch(&img, &BoundingBox::new(0.5, 0.0, 1.5, 1.0).unwrap()).unwrap();
        assert_eq!(patch.data, vec![1.0, 2.0]);
    }

    #[test]
    fn resize_identity_is_bit_exact() {
        let img = ImagePlane::from_fn(5, 3, |x, y| ((x * 31 + y * 17) % 13) as f64 / 13.0);
        assert_eq!(resize_bilinear(&img, 5, 3).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = ImagePlane::filled(3, 5, 0.3);
        for (w, h) in [(1, 1), (7, 2), (64, 64)] {
            let out = resize_bilinear(&img, w, h).unwrap();
            assert!(out.data.iter().all(|&v| v == 0.3));
        }
    }

    #[test]
    fn resize_2x2_to_4x4_matches_hand_evaluation() {
        let img = ImagePlane::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 4, 4).unwrap();
        // Output centers map to source x = (o + 0.5) / 2 - 0.5 = -0.25, 0.25, 0.75, 1.25,
        // clamped to [0, 1]: 0, 0.25, 0.75, 1. The columns are constant in y.
        let row = [0.0, 0.25, 0.75, 1.0];
        for y in 0..4 {
            for (x, expect) in row.iter().enumerate() {
                assert!((out.get(x, y) - expect).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn resize_stays_within_input_range(
            w in 1usize..9, h in 1usize..9, ow in 1usize..20, oh in 1usize..20,
            seed in any::<u64>(),
        ) {
            let img = ImagePlane::from_fn(w, h, |x, y| {
                let k = seed.wrapping_mul(6364136223846793005).wrapping_add(((y * w + x) as u64).wrapping_mul(1442695040888963407));
                (k >> 11) as f64 / (1u64 << 53) as f64
            });
            let (lo, hi) = img.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            let out = resize_bilinear(&img, ow, oh).unwrap();
            for v in out.data {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }

        #[test]
        fn crop_is_idempotent_and_replicates_edges(
            x in -6.0f64..6.0, y in -6.0f64..6.0, w in 1.0f64..10.0, h in 1.0f64..10.0,
        ) {
            let img = ImagePlane::from_fn(5, 4, |x, y| (y * 5 + x) as f64 / 20.0);
            let patch = extract_patch(&img, &BoundingBox::new(x, y, w, h).unwrap()).unwrap();
            let full = BoundingBox::new(0.0, 0.0, patch.width as f64, patch.height as f64).unwrap();
            prop_assert_eq!(&extract_patch(&patch, &full).unwrap(), &patch);
            for v in &patch.data {
                prop_assert!(img.data.contains(v));
            }
        }
    }
}
