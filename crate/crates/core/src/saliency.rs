//! Saliency channel: the provider abstraction, the built-in spectral-residual
//! method, ingestion of precomputed maps, and temporal cosine similarity.

use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::RealGrid;
use crate::imaging::{
    crop_resized, extract_patch, read_image, resize_bilinear, BoundingBox, ImagePlane,
};

/// Non-negative single-channel map with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch(width * height, data.len()));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!(
                "saliency value {v} outside [0, 1]"
            )));
        }
        Ok(SaliencyMap {
            width,
            height,
            data,
        })
    }

    /// Clamps every value into [0, 1]; NaN becomes 0.
    pub fn from_plane(plane: ImagePlane) -> Self {
        let data = plane
            .data
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        SaliencyMap {
            width: plane.width,
            height: plane.height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        SaliencyMap {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn as_plane(&self) -> ImagePlane {
        ImagePlane {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    pub fn to_grid(&self) -> RealGrid {
        RealGrid {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    pub fn resized(&self, width: usize, height: usize) -> Result<SaliencyMap> {
        if (width, height) == (self.width, self.height) {
            return Ok(self.clone());
        }
        Ok(SaliencyMap::from_plane(resize_bilinear(
            &self.as_plane(),
            width,
            height,
        )?))
    }
}

/// Something that can produce a saliency map for a region of a frame.
///
/// The returned map has the pixel dimensions of `region` rounded half up.
/// `frame_index` counts frames from the start of the sequence.
pub trait SaliencyProvider: Send {
    fn saliency(
        &mut self,
        frame: &ImagePlane,
        frame_index: usize,
        region: &BoundingBox,
    ) -> Result<SaliencyMap>;

    fn name(&self) -> &'static str;
}

/// Internal working resolution of the spectral-residual method.
pub const SPECTRAL_RESIDUAL_SIZE: usize = 64;
const LOG_FLOOR: f64 = 1e-9;
const BLUR_SIGMA: f64 = 2.5;

/// Spectral-residual saliency.
///
/// The input is resampled to 64x64 and mean-subtracted, the log-amplitude
/// spectrum minus its 3x3 (circular) box average is recombined with the
/// original phase, and the squared magnitude of the inverse transform is
/// Gaussian-blurred (sigma 2.5 px), max-normalized and resampled back.
/// Spectral components whose amplitude is below the log floor carry no
/// phase, so a constant image yields an all-zero map.
pub fn spectral_residual(img: &ImagePlane) -> Result<SaliencyMap> {
    if img.width < 8 || img.height < 8 {
        return Err(Error::InvalidInput(format!(
            "spectral residual needs at least 8x8, got {}x{}",
            img.width, img.height
        )));
    }
    let n = SPECTRAL_RESIDUAL_SIZE;
    let small = resize_bilinear(img, n, n)?;
    let mean = small.mean();
    let centered: Vec<f64> = small.data.iter().map(|v| v - mean).collect();

    let plan = Fft2::new(n, n);
    let mut spectrum = plan.forward_real(&centered);
    let amplitude: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let log_amp = RealGrid {
        width: n,
        height: n,
        data: amplitude.iter().map(|a| (a + LOG_FLOOR).ln()).collect(),
    };
    let smoothed = box3_circular(&log_amp);
    for (i, c) in spectrum.iter_mut().enumerate() {
        let residual = log_amp.data[i] - smoothed.data[i];
        *c = if amplitude[i] > LOG_FLOOR {
            *c / amplitude[i] * residual.exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    plan.inverse(&mut spectrum);
    let energy = RealGrid {
        width: n,
        height: n,
        data: spectrum.iter().map(|c| c.norm_sqr()).collect(),
    };
    let mut blurred = gaussian_blur(&energy, BLUR_SIGMA);
    let peak = blurred.max();
    if peak > 0.0 {
        blurred.data.iter_mut().for_each(|v| *v /= peak);
    } else {
        blurred.data.iter_mut().for_each(|v| *v = 0.0);
    }
    let plane = ImagePlane {
        width: n,
        height: n,
        data: blurred.data,
    };
    Ok(SaliencyMap::from_plane(resize_bilinear(
        &plane, img.width, img.height,
    )?))
}

fn box3_circular(g: &RealGrid) -> RealGrid {
    let (w, h) = (g.width as isize, g.height as isize);
    RealGrid::from_fn(g.width, g.height, |x, y| {
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let sx = (x as isize + dx).rem_euclid(w) as usize;
                let sy = (y as isize + dy).rem_euclid(h) as usize;
                acc += g.get(sx, sy);
            }
        }
        acc / 9.0
    })
}

/// Separable Gaussian blur truncated at 4 sigma, replicated borders.
pub fn gaussian_blur(g: &RealGrid, sigma: f64) -> RealGrid {
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h) = (g.width as isize, g.height as isize);
    let horizontal = RealGrid::from_fn(g.width, g.height, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, kv)| {
                let sx = (x as isize + k as isize - radius).clamp(0, w - 1) as usize;
                kv * g.get(sx, y)
            })
            .sum()
    });
    RealGrid::from_fn(g.width, g.height, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, kv)| {
                let sy = (y as isize + k as isize - radius).clamp(0, h - 1) as usize;
                kv * horizontal.get(x, sy)
            })
            .sum()
    })
}

/// Path of the precomputed map for a frame number: `<dir>/saliency/%04d.png`.
pub fn saliency_map_path(sequence_dir: &Path, frame_number: u64) -> PathBuf {
    sequence_dir
        .join("saliency")
        .join(format!("{frame_number:04}.png"))
}

fn read_full_map(sequence_dir: &Path, frame_number: u64) -> Result<ImagePlane> {
    let path = saliency_map_path(sequence_dir, frame_number);
    if !path.is_file() {
        return Err(Error::ProviderUnavailable { path });
    }
    read_image(&path)
}

/// Loads a precomputed full-frame saliency map and crops `patch_box` from it
/// with edge replication.
pub fn load_saliency_map(
    sequence_dir: &Path,
    frame_number: u64,
    patch_box: &BoundingBox,
) -> Result<SaliencyMap> {
    let full = read_full_map(sequence_dir, frame_number)?;
    Ok(SaliencyMap::from_plane(extract_patch(&full, patch_box)?))
}

/// Built-in provider running [`spectral_residual`] on the region.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralResidual;

impl SaliencyProvider for SpectralResidual {
    fn saliency(
        &mut self,
        frame: &ImagePlane,
        _frame_index: usize,
        region: &BoundingBox,
    ) -> Result<SaliencyMap> {
        let patch = extract_patch(frame, region)?;
        // Resample small regions up front so any region of at least one pixel works.
        let n = SPECTRAL_RESIDUAL_SIZE;
        let map = spectral_residual(&crop_resized(frame, region, n, n)?)?;
        map.resized(patch.width, patch.height)
    }

    fn name(&self) -> &'static str {
        "spectral_residual"
    }
}

/// Provider reading maps written by an external saliency network.
#[derive(Debug, Clone)]
pub struct PrecomputedSaliency {
    sequence_dir: PathBuf,
    frame_numbers: Vec<u64>,
    cache: Option<(u64, ImagePlane)>,
}

impl PrecomputedSaliency {
    /// `frame_numbers[i]` is the file number of sequence frame `i`.
    pub fn new(sequence_dir: impl Into<PathBuf>, frame_numbers: Vec<u64>) -> Self {
        PrecomputedSaliency {
            sequence_dir: sequence_dir.into(),
            frame_numbers,
            cache: None,
        }
    }

    fn frame_number(&self, index: usize) -> u64 {
        self.frame_numbers
            .get(index)
            .copied()
            .unwrap_or(index as u64 + 1)
    }
}

impl SaliencyProvider for PrecomputedSaliency {
    fn saliency(
        &mut self,
        frame: &ImagePlane,
        frame_index: usize,
        region: &BoundingBox,
    ) -> Result<SaliencyMap> {
        let number = self.frame_number(frame_index);
        let full = match &self.cache {
            Some((cached, map)) if *cached == number => map,
            _ => {
                let map = read_full_map(&self.sequence_dir, number)?;
                if (map.width, map.height) != (frame.width, frame.height) {
                    return Err(Error::mismatch(
                        format!("{}x{} saliency map", frame.width, frame.height),
                        format!("{}x{}", map.width, map.height),
                    ));
                }
                &self.cache.insert((number, map)).1
            }
        };
        Ok(SaliencyMap::from_plane(extract_patch(full, region)?))
    }

    fn name(&self) -> &'static str {
        "precomputed"
    }
}

/// Cosine of the angle between two vectorized maps; 0 if either is all zero.
pub fn cosine_similarity(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::mismatch(
            format!("{}x{} map", a.width, a.height),
            format!("{}x{} map", b.width, b.height),
        ));
    }
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.data.iter().zip(&b.data) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (aa * bb).sqrt())
}
