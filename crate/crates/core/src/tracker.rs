//! Single-target tracker fusing an appearance correlation filter with a
//! saliency correlation filter.
//!
//! Each frame: correlate both filters over their search regions (the saliency
//! region is the smaller one), update the saliency weight from the cosine
//! similarity of consecutive saliency maps, fuse the responses, move the box
//! to the fused peak, then refresh both filters at the new location.

use serde::Serialize;

use crate::dcf::{
    correlate, default_label_sigma, gaussian_label, hann_window, learn_filter, update_filter,
    CellMapping, CorrelationFilter, LabelMap, ResponseMap,
};
use crate::error::{Error, Result};
use crate::features::{appearance_features, apply_window, FeatureStack, HogConfig};
use crate::fusion::{fuse_responses, update_weight, FusionConfig, FusionWeightState};
use crate::grid::RealGrid;
use crate::imaging::{crop_resized, BoundingBox, ImagePlane};
use crate::saliency::{cosine_similarity, SaliencyMap, SaliencyProvider, SpectralResidual};

/// Side length in pixels of the resampled appearance search patch.
pub const FEATURE_MODEL_SIZE: usize = 128;
/// Side length of the saliency response grid.
pub const SALIENCY_GRID_SIZE: usize = 64;
pub const MIN_BOX_AREA: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub frame_index: usize,
    /// Cosine similarity of consecutive saliency maps; `None` on the first
    /// frame and for trackers without a saliency channel.
    pub sim: Option<f64>,
    pub w: f64,
    pub feat_peak: f64,
    pub sal_peak: Option<f64>,
    pub fused_peak: f64,
    /// The configured provider had no map and spectral residual was used.
    pub saliency_fallback: bool,
    pub sim_clamped: bool,
}

struct Channel {
    filter: CorrelationFilter,
    label: LabelMap,
    window: RealGrid,
}

impl Channel {
    fn train(stack: &FeatureStack, eta: f64, lambda_reg: f64) -> Result<Self> {
        let (w, h) = (stack.grid_w, stack.grid_h);
        let label = gaussian_label(w, h, default_label_sigma(w, h))?;
        let window = hann_window(w, h);
        let filter = learn_filter(&apply_window(stack, &window)?, &label, lambda_reg, eta)?;
        Ok(Channel {
            filter,
            label,
            window,
        })
    }

    fn respond(&self, stack: &FeatureStack, mapping: CellMapping) -> Result<ResponseMap> {
        Ok(correlate(&self.filter, &apply_window(stack, &self.window)?)?.with_mapping(mapping))
    }

    fn updated(&self, stack: &FeatureStack) -> Result<CorrelationFilter> {
        update_filter(
            &self.filter,
            &apply_window(stack, &self.window)?,
            &self.label,
        )
    }
}

struct SaliencyChannel {
    channel: Channel,
    provider: Box<dyn SaliencyProvider>,
}

pub struct TrackerState {
    bbox: BoundingBox,
    frame_size: (usize, usize),
    frame_index: usize,
    config: FusionConfig,
    hog: HogConfig,
    feature: Channel,
    saliency: Option<SaliencyChannel>,
    weight: FusionWeightState,
    history: Vec<FrameDiagnostics>,
}

impl std::fmt::Debug for TrackerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrackerState")
            .field("bbox", &self.bbox)
            .field("frame_index", &self.frame_index)
            .field("w", &self.weight.w)
            .field(
                "saliency",
                &self.saliency.as_ref().map(|s| s.provider.name()),
            )
            .finish()
    }
}

fn mapping_for(region: &BoundingBox, grid_w: usize, grid_h: usize) -> CellMapping {
    let (cx, cy) = region.center();
    CellMapping {
        center_x: cx,
        center_y: cy,
        step_x: region.w / grid_w as f64,
        step_y: region.h / grid_h as f64,
    }
}

fn appearance_at(
    frame: &ImagePlane,
    bbox: &BoundingBox,
    cfg: &FusionConfig,
    hog: &HogConfig,
) -> Result<(FeatureStack, CellMapping)> {
    let region = bbox.scaled(cfg.feature_region_scale);
    let patch = crop_resized(frame, &region, FEATURE_MODEL_SIZE, FEATURE_MODEL_SIZE)?;
    let stack = appearance_features(&patch, hog)?;
    let mapping = mapping_for(&region, stack.grid_w, stack.grid_h);
    Ok((stack, mapping))
}

/// Saliency map of the saliency search region at grid resolution, plus
/// whether the fallback provider had to be used.
fn saliency_at(
    provider: &mut dyn SaliencyProvider,
    frame: &ImagePlane,
    frame_index: usize,
    bbox: &BoundingBox,
    cfg: &FusionConfig,
) -> Result<(SaliencyMap, CellMapping, bool)> {
    let region = bbox.scaled(cfg.saliency_region_scale);
    let (map, fallback) = match provider.saliency(frame, frame_index, &region) {
        Ok(map) => (map, false),
        Err(Error::ProviderUnavailable { .. }) => (
            SpectralResidual.saliency(frame, frame_index, &region)?,
            true,
        ),
        Err(e) => return Err(e),
    };
    let n = SALIENCY_GRID_SIZE;
    Ok((map.resized(n, n)?, mapping_for(&region, n, n), fallback))
}

impl TrackerState {
    /// Tracker with both channels, starting at sequence frame 0.
    pub fn init(
        frame: &ImagePlane,
        bbox: BoundingBox,
        cfg: FusionConfig,
        provider: Box<dyn SaliencyProvider>,
    ) -> Result<Self> {
        Self::init_at(frame, 0, bbox, cfg, provider)
    }

    /// Tracker with both channels; `frame_index` is the position of `frame`
    /// in its sequence and is forwarded to the saliency provider.
    pub fn init_at(
        frame: &ImagePlane,
        frame_index: usize,
        bbox: BoundingBox,
        cfg: FusionConfig,
        provider: Box<dyn SaliencyProvider>,
    ) -> Result<Self> {
        Self::build(frame, frame_index, bbox, cfg, Some(provider))
    }

    /// Appearance-only tracker: the fused response is the feature response.
    pub fn init_baseline(frame: &ImagePlane, bbox: BoundingBox, cfg: FusionConfig) -> Result<Self> {
        Self::build(frame, 0, bbox, cfg, None)
    }

    fn build(
        frame: &ImagePlane,
        frame_index: usize,
        bbox: BoundingBox,
        cfg: FusionConfig,
        provider: Option<Box<dyn SaliencyProvider>>,
    ) -> Result<Self> {
        cfg.validate()?;
        bbox.validate()?;
        let bbox = bbox.clamped_to(frame.width, frame.height).ok_or_else(|| {
            Error::InvalidBox(format!(
                "{bbox:?} lies outside the {}x{} frame",
                frame.width, frame.height
            ))
        })?;
        if bbox.area() < MIN_BOX_AREA {
            return Err(Error::InvalidBox(format!(
                "box area {} below {MIN_BOX_AREA} px^2",
                bbox.area()
            )));
        }
        let hog = HogConfig {
            cell_size: cfg.cell_size,
            ..HogConfig::default()
        };
        let (stack, _) = appearance_at(frame, &bbox, &cfg, &hog)?;
        let feature = Channel::train(&stack, cfg.eta_feat, cfg.lambda_reg)?;
        let mut weight = FusionWeightState::new(&cfg);
        weight.t = frame_index;
        let mut fallback = false;
        let saliency = match provider {
            Some(mut provider) => {
                let (map, _, fb) = saliency_at(provider.as_mut(), frame, frame_index, &bbox, &cfg)?;
                fallback = fb;
                let channel = Channel::train(
                    &FeatureStack::from_grid(&map.to_grid()),
                    cfg.eta_sal,
                    cfg.lambda_reg,
                )?;
                weight.last_saliency = Some(map);
                Some(SaliencyChannel { channel, provider })
            }
            None => None,
        };
        let first = FrameDiagnostics {
            frame_index,
            sim: None,
            w: weight.w,
            feat_peak: 0.0,
            sal_peak: None,
            fused_peak: 0.0,
            saliency_fallback: fallback,
            sim_clamped: false,
        };
        Ok(TrackerState {
            bbox,
            frame_size: (frame.width, frame.height),
            frame_index,
            config: cfg,
            hog,
            feature,
            saliency,
            weight,
            history: vec![first],
        })
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn config(&self) -> &FusionConfig {
        &self.config
    }

    pub fn weight(&self) -> &FusionWeightState {
        &self.weight
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn feature_filter(&self) -> &CorrelationFilter {
        &self.feature.filter
    }

    pub fn saliency_filter(&self) -> Option<&CorrelationFilter> {
        self.saliency.as_ref().map(|s| &s.channel.filter)
    }

    /// Diagnostics of every processed frame, the init frame first.
    pub fn history(&self) -> &[FrameDiagnostics] {
        &self.history
    }

    /// Response of the appearance filter on its search region around the
    /// current box in `frame`, without changing any state.
    pub fn feature_response(&self, frame: &ImagePlane) -> Result<ResponseMap> {
        let (stack, mapping) = appearance_at(frame, &self.bbox, &self.config, &self.hog)?;
        self.feature.respond(&stack, mapping)
    }

    /// Processes the next frame. On error the state is left as it was.
    pub fn step(&mut self, frame: &ImagePlane) -> Result<(BoundingBox, FrameDiagnostics)> {
        self.step_with_response(frame).map(|(b, d, _)| (b, d))
    }

    /// Like [`step`](Self::step), also returning the fused response map.
    pub fn step_with_response(
        &mut self,
        frame: &ImagePlane,
    ) -> Result<(BoundingBox, FrameDiagnostics, ResponseMap)> {
        if (frame.width, frame.height) != self.frame_size {
            return Err(Error::mismatch(
                format!("{}x{} frame", self.frame_size.0, self.frame_size.1),
                format!("{}x{} frame", frame.width, frame.height),
            ));
        }
        let cfg = self.config;
        let index = self.frame_index + 1;
        let prev = self.bbox;

        let (stack, mapping) = appearance_at(frame, &prev, &cfg, &self.hog)?;
        let r_feat = self.feature.respond(&stack, mapping)?;
        let feat_peak = r_feat.grid.max();

        let mut weight = self.weight.clone();
        let mut diag = FrameDiagnostics {
            frame_index: index,
            sim: None,
            w: weight.w,
            feat_peak,
            sal_peak: None,
            fused_peak: feat_peak,
            saliency_fallback: false,
            sim_clamped: false,
        };

        let fused = match self.saliency.as_mut() {
            Some(sal) => {
                let (map, mapping, fallback) =
                    saliency_at(sal.provider.as_mut(), frame, index, &prev, &cfg)?;
                let r_sal = sal
                    .channel
                    .respond(&FeatureStack::from_grid(&map.to_grid()), mapping)?;
                let sim = match &weight.last_saliency {
                    Some(last) => cosine_similarity(last, &map)?,
                    None => 0.0,
                };
                let update = update_weight(&mut weight, sim, &cfg);
                diag.sim = Some(sim);
                diag.w = update.w;
                diag.sim_clamped = update.clamped;
                diag.saliency_fallback = fallback;
                diag.sal_peak = Some(r_sal.grid.max());
                fuse_responses(&r_sal, &r_feat, update.w)
            }
            None => r_feat,
        };

        let (dx, dy, peak) = fused.peak_offset();
        diag.fused_peak = peak;
        let m = fused.mapping;
        let (cx, cy) = prev.center();
        let (fw, fh) = (frame.width as f64, frame.height as f64);
        let nx = (cx + dx as f64 * m.step_x).clamp(0.0, fw);
        let ny = (cy + dy as f64 * m.step_y).clamp(0.0, fh);
        let next = if (dx, dy) == (0, 0) {
            prev
        } else {
            prev.translated(nx - cx, ny - cy)
        };

        let (stack, _) = appearance_at(frame, &next, &cfg, &self.hog)?;
        let feature_filter = self.feature.updated(&stack)?;
        let saliency_update = match self.saliency.as_mut() {
            Some(sal) => {
                let (map, _, fallback) =
                    saliency_at(sal.provider.as_mut(), frame, index, &next, &cfg)?;
                diag.saliency_fallback |= fallback;
                let filter = sal
                    .channel
                    .updated(&FeatureStack::from_grid(&map.to_grid()))?;
                Some((filter, map))
            }
            None => None,
        };

        self.feature.filter = feature_filter;
        if let (Some(sal), Some((filter, map))) = (self.saliency.as_mut(), saliency_update) {
            sal.channel.filter = filter;
            weight.last_saliency = Some(map);
        }
        self.weight = weight;
        self.bbox = next;
        self.frame_index = index;
        self.history.push(diag);
        Ok((next, diag, fused))
    }
}
