//! Hand-crafted appearance channels: HoG and zero-mean cell intensity, both on
//! one cell grid so they can be stacked and windowed together.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::imaging::ImagePlane;

/// Multi-channel feature grid. Every channel holds `grid_w * grid_h` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub grid_w: usize,
    pub grid_h: usize,
    pub cell_size: usize,
    pub channels: Vec<Vec<f64>>,
}

impl FeatureStack {
    pub fn new(
        grid_w: usize,
        grid_h: usize,
        cell_size: usize,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(c) = channels.iter().find(|c| c.len() != grid_w * grid_h) {
            return Err(Error::mismatch(grid_w * grid_h, c.len()));
        }
        Ok(FeatureStack {
            grid_w,
            grid_h,
            cell_size,
            channels,
        })
    }

    /// Wraps a single real grid as a one-channel stack with unit cells.
    pub fn from_grid(grid: &RealGrid) -> Self {
        FeatureStack {
            grid_w: grid.width,
            grid_h: grid.height,
            cell_size: 1,
            channels: vec![grid.data.clone()],
        }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn concat(mut self, other: FeatureStack) -> Result<FeatureStack> {
        if (self.grid_w, self.grid_h) != (other.grid_w, other.grid_h) {
            return Err(Error::mismatch(
                format!("{}x{} grid", self.grid_w, self.grid_h),
                format!("{}x{} grid", other.grid_w, other.grid_h),
            ));
        }
        self.channels.extend(other.channels);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogConfig {
    pub cell_size: usize,
    pub n_bins: usize,
    pub clip: f64,
    pub epsilon: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            cell_size: 4,
            n_bins: 9,
            clip: 0.2,
            epsilon: 1e-6,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size < 1 {
            return Err(Error::InvalidInput("HoG cell size must be >= 1".into()));
        }
        if self.n_bins < 2 {
            return Err(Error::InvalidInput("HoG needs at least 2 bins".into()));
        }
        if !(self.clip > 0.0 && self.clip <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "HoG clip {} outside (0, 1]",
                self.clip
            )));
        }
        if self.epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidInput("HoG epsilon must be > 0".into()));
        }
        Ok(())
    }
}

fn cell_grid(img: &ImagePlane, cell_size: usize) -> Result<(usize, usize)> {
    if cell_size == 0 {
        return Err(Error::InvalidInput("cell size must be >= 1".into()));
    }
    let (gw, gh) = (img.width / cell_size, img.height / cell_size);
    if gw == 0 || gh == 0 {
        return Err(Error::InvalidInput(format!(
            "{}x{} image is smaller than one {cell_size}px cell",
            img.width, img.height
        )));
    }
    Ok((gw, gh))
}

/// Per-cell unsigned orientation histograms with 2x2 block normalization.
///
/// Gradients are central differences with replicated borders. Orientations
/// are folded to [0, pi); bin `k` is centered on `k * pi / n_bins` and each
/// pixel votes its magnitude into the two nearest bins.
pub fn hog(img: &ImagePlane, cfg: &HogConfig) -> Result<FeatureStack> {
    cfg.validate()?;
    let (gw, gh) = cell_grid(img, cfg.cell_size)?;
    let hist = cell_histograms(img, cfg, gw, gh);
    let channels = block_normalize(&hist, gw, gh, cfg, true);
    FeatureStack::new(gw, gh, cfg.cell_size, channels)
}

/// Raw histograms indexed `[cell][bin]`.
fn cell_histograms(img: &ImagePlane, cfg: &HogConfig, gw: usize, gh: usize) -> Vec<Vec<f64>> {
    let n = cfg.n_bins;
    let bin_width = PI / n as f64;
    let mut hist = vec![vec![0.0; n]; gw * gh];
    for y in 0..gh * cfg.cell_size {
        for x in 0..gw * cfg.cell_size {
            let (xi, yi) = (x as i64, y as i64);
            let gx = img.get_clamped(xi + 1, yi) - img.get_clamped(xi - 1, yi);
            let gy = img.get_clamped(xi, yi + 1) - img.get_clamped(xi, yi - 1);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += PI;
            }
            if angle >= PI {
                angle -= PI;
            }
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as usize % n;
            let hi = (lo + 1) % n;
            let cell = &mut hist[(y / cfg.cell_size) * gw + x / cfg.cell_size];
            cell[lo] += mag * (1.0 - frac);
            cell[hi] += mag * frac;
        }
    }
    hist
}

/// Each cell is normalized within the 2x2 block that starts at it (shifted
/// inward on the last row/column), clipped, then optionally renormalized over
/// the clipped block. Returns channel-major data.
fn block_normalize(
    hist: &[Vec<f64>],
    gw: usize,
    gh: usize,
    cfg: &HogConfig,
    renormalize: bool,
) -> Vec<Vec<f64>> {
    let n = cfg.n_bins;
    let eps2 = cfg.epsilon * cfg.epsilon;
    let span = |i: usize, len: usize| {
        if len < 2 {
            i..i + 1
        } else {
            let s = i.min(len - 2);
            s..s + 2
        }
    };
    let mut channels = vec![vec![0.0; gw * gh]; n];
    for cy in 0..gh {
        for cx in 0..gw {
            let cells: Vec<usize> = span(cy, gh)
                .flat_map(|by| span(cx, gw).map(move |bx| by * gw + bx))
                .collect();
            let energy: f64 = cells.iter().flat_map(|&c| &hist[c]).map(|v| v * v).sum();
            let scale = 1.0 / (energy + eps2).sqrt();
            let clipped = |v: f64| (v * scale).min(cfg.clip);
            let renorm = if renormalize {
                let clipped_energy: f64 = cells
                    .iter()
                    .flat_map(|&c| &hist[c])
                    .map(|&v| clipped(v).powi(2))
                    .sum();
                1.0 / (clipped_energy + eps2).sqrt()
            } else {
                1.0
            };
            let own = &hist[cy * gw + cx];
            for b in 0..n {
                channels[b][cy * gw + cx] = clipped(own[b]) * renorm;
            }
        }
    }
    channels
}

/// One channel of per-cell mean intensity minus the mean over all cells.
pub fn intensity_feature(img: &ImagePlane, cell_size: usize) -> Result<FeatureStack> {
    let (gw, gh) = cell_grid(img, cell_size)?;
    let mut cells = vec![0.0; gw * gh];
    for y in 0..gh * cell_size {
        for x in 0..gw * cell_size {
            cells[(y / cell_size) * gw + x / cell_size] += img.get(x, y);
        }
    }
    let area = (cell_size * cell_size) as f64;
    cells.iter_mut().for_each(|v| *v /= area);
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    cells.iter_mut().for_each(|v| *v -= mean);
    FeatureStack::new(gw, gh, cell_size, vec![cells])
}

/// HoG channels followed by the intensity channel.
pub fn appearance_features(img: &ImagePlane, cfg: &HogConfig) -> Result<FeatureStack> {
    hog(img, cfg)?.concat(intensity_feature(img, cfg.cell_size)?)
}

pub fn apply_window(stack: &FeatureStack, window: &RealGrid) -> Result<FeatureStack> {
    if (window.width, window.height) != (stack.grid_w, stack.grid_h) {
        return Err(Error::mismatch(
            format!("{}x{} window", stack.grid_w, stack.grid_h),
            format!("{}x{} window", window.width, window.height),
        ));
    }
    let channels = stack
        .channels
        .iter()
        .map(|c| c.iter().zip(&window.data).map(|(v, w)| v * w).collect())
        .collect();
    Ok(FeatureStack {
        grid_w: stack.grid_w,
        grid_h: stack.grid_h,
        cell_size: stack.cell_size,
        channels,
    })
}
