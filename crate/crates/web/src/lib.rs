//! wasm-bindgen bindings for the static demo page in `www/`.

use saltrack::fusion::next_weight;
use saltrack::imaging::{ColorPlanes, ImagePlane};
use saltrack::saliency::{spectral_residual, SpectralResidual};
use saltrack::synthetic::{generate, SyntheticSequence, SyntheticSpec};
use saltrack::{FusionConfig, RealGrid, TrackerState, WeightRule};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn weight_config(k: f64, lambda_w: f64, w0: f64, rule: &str) -> Result<FusionConfig, JsError> {
    let cfg = FusionConfig {
        k,
        lambda_w,
        w0,
        weight_rule: rule.parse::<WeightRule>().map_err(js_err)?,
        ..FusionConfig::default()
    };
    cfg.validate().map_err(js_err)?;
    Ok(cfg)
}

/// Weight after each similarity in `sims`, starting from `w0`.
#[wasm_bindgen(js_name = weightTrajectory)]
pub fn weight_trajectory(
    k: f64,
    lambda_w: f64,
    w0: f64,
    rule: &str,
    sims: &[f64],
) -> Result<Vec<f64>, JsError> {
    let cfg = weight_config(k, lambda_w, w0, rule)?;
    let mut w = cfg.w0;
    Ok(sims
        .iter()
        .map(|&s| {
            w = next_weight(w, s.clamp(0.0, 1.0), &cfg);
            w
        })
        .collect())
}

fn gray_from_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<ImagePlane, JsError> {
    if rgba.len() != width * height * 4 {
        return Err(JsError::new(
            "pixel buffer does not match width * height * 4",
        ));
    }
    let channel = |c: usize| {
        ImagePlane::new(
            width,
            height,
            rgba.chunks_exact(4).map(|p| p[c] as f64 / 255.0).collect(),
        )
    };
    let planes = ColorPlanes {
        red: channel(0).map_err(js_err)?,
        green: channel(1).map_err(js_err)?,
        blue: channel(2).map_err(js_err)?,
    };
    Ok(planes.to_gray())
}

fn to_rgba(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|&v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

/// Spectral residual saliency of canvas pixels, returned as RGBA.
#[wasm_bindgen(js_name = saliencyRgba)]
pub fn saliency_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Vec<u8>, JsError> {
    let gray = gray_from_rgba(width, height, rgba)?;
    let map = spectral_residual(&gray).map_err(js_err)?;
    Ok(to_rgba(&map.data))
}

fn normalized(grid: &RealGrid) -> Vec<f64> {
    let (lo, hi) = (grid.min(), grid.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    grid.data.iter().map(|v| (v - lo) / span).collect()
}

/// Steps the tracker through a generated sequence one frame at a time.
#[wasm_bindgen]
pub struct DemoTracker {
    sequence: SyntheticSequence,
    tracker: TrackerState,
    index: usize,
    response: Option<RealGrid>,
    sim: f64,
}

#[wasm_bindgen]
impl DemoTracker {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, noise_sigma: f64, k: f64, frames: usize) -> Result<DemoTracker, JsError> {
        let spec = SyntheticSpec {
            seed: seed.into(),
            noise_sigma,
            frames: frames.max(2),
            ..SyntheticSpec::default()
        };
        let sequence = generate(&spec).map_err(js_err)?;
        let cfg = FusionConfig {
            k,
            w0: FusionConfig::default().w0.min(k),
            ..FusionConfig::default()
        };
        let tracker = TrackerState::init(
            &sequence.frames[0],
            sequence.truth[0],
            cfg,
            Box::new(SpectralResidual),
        )
        .map_err(js_err)?;
        Ok(DemoTracker {
            sequence,
            tracker,
            index: 0,
            response: None,
            sim: 0.0,
        })
    }

    /// Advances one frame; false once the sequence is exhausted.
    pub fn step(&mut self) -> Result<bool, JsError> {
        if self.index + 1 >= self.sequence.frames.len() {
            return Ok(false);
        }
        let frame = &self.sequence.frames[self.index + 1];
        let (_, diag, response) = self.tracker.step_with_response(frame).map_err(js_err)?;
        self.index += 1;
        self.sim = diag.sim.unwrap_or(0.0);
        self.response = Some(response.grid);
        Ok(true)
    }

    #[wasm_bindgen(getter)]
    pub fn index(&self) -> usize {
        self.index
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.sequence.frames.len()
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.sequence.frames[0].width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.sequence.frames[0].height
    }

    #[wasm_bindgen(getter)]
    pub fn weight(&self) -> f64 {
        self.tracker.weight().w
    }

    #[wasm_bindgen(getter)]
    pub fn sim(&self) -> f64 {
        self.sim
    }

    /// Current frame as RGBA.
    #[wasm_bindgen(js_name = frameRgba)]
    pub fn frame_rgba(&self) -> Vec<u8> {
        to_rgba(&self.sequence.frames[self.index].data)
    }

    /// Tracked box then ground truth: `[x, y, w, h, gx, gy, gw, gh]`.
    pub fn boxes(&self) -> Vec<f64> {
        let b = self.tracker.bbox();
        let g = self.sequence.truth[self.index];
        vec![b.x, b.y, b.w, b.h, g.x, g.y, g.w, g.h]
    }

    #[wasm_bindgen(js_name = responseWidth)]
    pub fn response_width(&self) -> usize {
        self.response.as_ref().map_or(0, |g| g.width)
    }

    #[wasm_bindgen(js_name = responseHeight)]
    pub fn response_height(&self) -> usize {
        self.response.as_ref().map_or(0, |g| g.height)
    }

    /// Last fused response, min-max scaled, as RGBA; empty before the first step.
    #[wasm_bindgen(js_name = responseRgba)]
    pub fn response_rgba(&self) -> Vec<u8> {
        self.response
            .as_ref()
            .map(|g| to_rgba(&normalized(g)))
            .unwrap_or_default()
    }
}
