//! Seeded synthetic sequences: a bright square sliding back and forth over a
//! noisy background.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imaging::{encode_png, BoundingBox, ImagePlane};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub square: usize,
    /// Horizontal speed in pixels per frame; the square bounces off a
    /// `margin`-pixel border.
    pub speed: f64,
    pub margin: f64,
    pub noise_sigma: f64,
    pub background: f64,
    pub foreground: f64,
    pub frames: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            width: 64,
            height: 64,
            square: 12,
            speed: 2.0,
            margin: 4.0,
            noise_sigma: 0.05,
            background: 0.2,
            foreground: 0.8,
            frames: 60,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<ImagePlane>,
    pub truth: Vec<BoundingBox>,
}

/// Top-left x of the square at frame `t`: a triangle wave between the margins.
fn position(spec: &SyntheticSpec, t: usize) -> f64 {
    let lo = spec.margin;
    let hi = spec.width as f64 - spec.square as f64 - spec.margin;
    let span = (hi - lo).max(0.0);
    if span == 0.0 {
        return lo;
    }
    let travel = (spec.speed * t as f64) % (2.0 * span);
    if travel <= span {
        lo + travel
    } else {
        lo + 2.0 * span - travel
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    if spec.square == 0 || spec.square > spec.width.min(spec.height) || spec.frames == 0 {
        return Err(Error::InvalidInput(format!(
            "unusable synthetic spec {spec:?}"
        )));
    }
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidInput(format!("noise sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.square as f64;
    let y = ((spec.height - spec.square) / 2) as f64;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let x = position(spec, t);
        let frame = ImagePlane::from_fn(spec.width, spec.height, |i, j| {
            let (px, py) = (i as f64 + 0.5, j as f64 + 0.5);
            let inside = px > x && px < x + side && py > y && py < y + side;
            let base = if inside {
                spec.foreground
            } else {
                spec.background
            };
            (base + noise.sample(&mut rng)).clamp(0.0, 1.0)
        });
        frames.push(frame);
        truth.push(BoundingBox::new(x, y, side, side)?);
    }
    Ok(SyntheticSequence { frames, truth })
}

/// Writes the sequence in dataset layout: `img/%04d.png` numbered from 1 and
/// a 1-based `groundtruth_rect.txt`.
pub fn write_sequence(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    let img = dir.join("img");
    std::fs::create_dir_all(&img).map_err(|e| Error::io(&img, e))?;
    for (i, frame) in seq.frames.iter().enumerate() {
        let path = img.join(format!("{:04}.png", i + 1));
        std::fs::write(&path, encode_png(frame)?).map_err(|e| Error::io(&path, e))?;
    }
    let mut gt = String::new();
    for b in &seq.truth {
        let _ = writeln!(gt, "{},{},{},{}", b.x + 1.0, b.y + 1.0, b.w, b.h);
    }
    let path = dir.join("groundtruth_rect.txt");
    std::fs::write(&path, gt).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_bounces_between_margins() {
        let spec = SyntheticSpec::default();
        let xs: Vec<f64> = (0..60).map(|t| position(&spec, t)).collect();
        assert_eq!(xs[0], 4.0);
        assert_eq!(xs[22], 48.0);
        assert_eq!(xs[23], 46.0);
        for w in xs.windows(2) {
            assert_eq!((w[1] - w[0]).abs(), 2.0);
        }
        assert!(xs.iter().all(|&x| (4.0..=48.0).contains(&x)));
    }

    #[test]
    fn generation_is_seeded() {
        let spec = SyntheticSpec {
            frames: 3,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.frames, b.frames);
        let c = generate(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.frames, c.frames);
        assert_eq!(a.truth[0], BoundingBox::new(4.0, 26.0, 12.0, 12.0).unwrap());
    }
}
