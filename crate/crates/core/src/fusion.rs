//! Saliency weighting: the temporal-consistency weight recursion and the
//! fusion of the saliency response into the appearance response.

use serde::{Deserialize, Serialize};

use crate::dcf::ResponseMap;
use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::saliency::SaliencyMap;

/// How the saliency weight is updated from the frame-to-frame similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// `w' = K((1 - lambda) w + lambda sim)`.
    #[default]
    Literal,
    /// `w' = (1 - lambda) w + lambda K sim`: K acts as a cap and lambda as a
    /// slow averaging rate.
    CappedEma,
}

impl WeightRule {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightRule::Literal => "literal",
            WeightRule::CappedEma => "capped-ema",
        }
    }
}

impl std::str::FromStr for WeightRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(WeightRule::Literal),
            "capped-ema" | "capped_ema" => Ok(WeightRule::CappedEma),
            other => Err(Error::Config(format!(
                "unknown weight_rule {other:?} (expected literal or capped-ema)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SaliencySource {
    #[default]
    SpectralResidual,
    /// `<sequence>/saliency/%04d.png`, falling back to spectral residual
    /// for frames without a file.
    Precomputed,
}

impl SaliencySource {
    pub fn as_str(self) -> &'static str {
        match self {
            SaliencySource::SpectralResidual => "spectral_residual",
            SaliencySource::Precomputed => "precomputed",
        }
    }
}

impl std::str::FromStr for SaliencySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral_residual" => Ok(SaliencySource::SpectralResidual),
            "precomputed" => Ok(SaliencySource::Precomputed),
            other => Err(Error::Config(format!(
                "unknown saliency_provider {other:?} (expected spectral_residual or precomputed)"
            ))),
        }
    }
}

/// Tracker parameters. Defaults: K = 0.25, lambda = 0.01, w(0) = 0.125.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub k: f64,
    pub lambda_w: f64,
    pub w0: f64,
    pub feature_region_scale: f64,
    pub saliency_region_scale: f64,
    pub weight_rule: WeightRule,
    pub eta_feat: f64,
    pub eta_sal: f64,
    pub lambda_reg: f64,
    pub cell_size: usize,
    pub saliency_provider: SaliencySource,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            k: 0.25,
            lambda_w: 0.01,
            w0: 0.125,
            feature_region_scale: 2.0,
            saliency_region_scale: 1.5,
            weight_rule: WeightRule::Literal,
            eta_feat: 0.02,
            eta_sal: 0.01,
            lambda_reg: 1e-2,
            cell_size: 4,
            saliency_provider: SaliencySource::SpectralResidual,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("k", self.k)?;
        unit("lambda_w", self.lambda_w)?;
        unit("eta_feat", self.eta_feat)?;
        unit("eta_sal", self.eta_sal)?;
        if !(0.0..=self.k).contains(&self.w0) {
            return Err(Error::Config(format!(
                "w0 = {} outside [0, k = {}]",
                self.w0, self.k
            )));
        }
        if !(self.saliency_region_scale > 0.0 && self.saliency_region_scale.is_finite()) {
            return Err(Error::Config("saliency_region_scale must be > 0".into()));
        }
        if !(self.feature_region_scale.is_finite()
            && self.saliency_region_scale <= self.feature_region_scale)
        {
            return Err(Error::Config(format!(
                "saliency_region_scale {} exceeds feature_region_scale {}",
                self.saliency_region_scale, self.feature_region_scale
            )));
        }
        if !(self.lambda_reg > 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::Config("lambda_reg must be > 0".into()));
        }
        if self.cell_size == 0 || crate::tracker::FEATURE_MODEL_SIZE / self.cell_size < 2 {
            return Err(Error::Config(format!(
                "cell_size {} must be in 1..={}",
                self.cell_size,
                crate::tracker::FEATURE_MODEL_SIZE / 2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeightState {
    pub w: f64,
    pub t: usize,
    pub last_saliency: Option<SaliencyMap>,
}

impl FusionWeightState {
    pub fn new(cfg: &FusionConfig) -> Self {
        FusionWeightState {
            w: cfg.w0,
            t: 0,
            last_saliency: None,
        }
    }
}

/// Outcome of one weight update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightUpdate {
    pub w: f64,
    /// The similarity fell outside [0, 1] and was clamped.
    pub clamped: bool,
}

/// Pure form of the recursion.
pub fn next_weight(w: f64, sim: f64, cfg: &FusionConfig) -> f64 {
    let lambda = cfg.lambda_w;
    match cfg.weight_rule {
        WeightRule::Literal => cfg.k * ((1.0 - lambda) * w + lambda * sim),
        WeightRule::CappedEma => (1.0 - lambda) * w + lambda * cfg.k * sim,
    }
}

/// Advances the weight state by one frame and returns the new weight.
pub fn update_weight(state: &mut FusionWeightState, sim: f64, cfg: &FusionConfig) -> WeightUpdate {
    let clamped_sim = if sim.is_nan() {
        0.0
    } else {
        sim.clamp(0.0, 1.0)
    };
    state.w = next_weight(state.w, clamped_sim, cfg);
    state.t += 1;
    WeightUpdate {
        w: state.w,
        clamped: clamped_sim != sim,
    }
}

/// Fixed point of the literal recursion under constant similarity.
pub fn literal_fixed_point(sim: f64, k: f64, lambda: f64) -> f64 {
    k * lambda * sim / (1.0 - k * (1.0 - lambda))
}

/// `w * r_sal + r_feat`, with `r_sal` resampled bilinearly onto the pixel
/// positions of `r_feat`'s cells. Cells outside the saliency map's coverage
/// get no saliency contribution. The result carries `r_feat`'s mapping.
pub fn fuse_responses(r_sal: &ResponseMap, r_feat: &ResponseMap, w: f64) -> ResponseMap {
    let aligned = align_onto(r_sal, r_feat);
    let data = r_feat
        .grid
        .data
        .iter()
        .zip(&aligned)
        .map(|(f, s)| match s {
            Some(s) => w * s + f,
            None => *f,
        })
        .collect();
    ResponseMap {
        grid: RealGrid {
            width: r_feat.grid.width,
            height: r_feat.grid.height,
            data,
        },
        mapping: r_feat.mapping,
    }
}

fn align_onto(source: &ResponseMap, target: &ResponseMap) -> Vec<Option<f64>> {
    let g = &source.grid;
    let (sw, sh) = (g.width as f64, g.height as f64);
    let mut out = Vec::with_capacity(target.grid.data.len());
    for y in 0..target.grid.height {
        for x in 0..target.grid.width {
            let (px, py) = target.cell_to_pixel(x as f64, y as f64);
            let (u, v) = source.pixel_to_cell(px, py);
            if !(-0.5..=sw - 0.5).contains(&u) || !(-0.5..=sh - 0.5).contains(&v) {
                out.push(None);
                continue;
            }
            let u = u.clamp(0.0, sw - 1.0);
            let v = v.clamp(0.0, sh - 1.0);
            let (x0, y0) = (u.floor() as usize, v.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(g.width - 1), (y0 + 1).min(g.height - 1));
            let (fx, fy) = (u - x0 as f64, v - y0 as f64);
            let top = g.get(x0, y0) + (g.get(x1, y0) - g.get(x0, y0)) * fx;
            let bottom = g.get(x0, y1) + (g.get(x1, y1) - g.get(x0, y1)) * fx;
            out.push(Some(top + (bottom - top) * fy));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcf::CellMapping;
    use proptest::prelude::*;

    fn response(w: usize, h: usize, data: Vec<f64>, mapping: CellMapping) -> ResponseMap {
        ResponseMap {
            grid: RealGrid::new(w, h, data).unwrap(),
            mapping,
        }
    }

    fn unit_mapping(cx: f64, cy: f64, step: f64) -> CellMapping {
        CellMapping {
            center_x: cx,
            center_y: cy,
            step_x: step,
            step_y: step,
        }
    }

    #[test]
    fn literal_step_matches_hand_value() {
        let cfg = FusionConfig::default();
        let mut state = FusionWeightState::new(&cfg);
        assert_eq!(state.w, 0.125);
        let up = update_weight(&mut state, 1.0, &cfg);
        assert!((up.w - 0.0334375).abs() < 1e-15);
        assert!(!up.clamped);
    }

    #[test]
    fn zero_is_a_fixed_point_of_both_rules() {
        for rule in [WeightRule::Literal, WeightRule::CappedEma] {
            let cfg = FusionConfig {
                weight_rule: rule,
                ..Default::default()
            };
            assert_eq!(next_weight(0.0, 0.0, &cfg), 0.0);
        }
    }

    #[test]
    fn literal_rule_converges_to_closed_form() {
        let cfg = FusionConfig::default();
        let fixed = literal_fixed_point(1.0, 0.25, 0.01);
        assert!((fixed - 0.0025 / 0.7525).abs() < 1e-15);
        assert!((fixed - 0.0033223).abs() < 1e-7);
        let mut w = cfg.w0;
        for _ in 0..3000 {
            w = next_weight(w, 1.0, &cfg);
        }
        assert!((w - fixed).abs() < 1e-9);
    }

    #[test]
    fn capped_ema_tends_to_k_times_sim() {
        let cfg = FusionConfig {
            weight_rule: WeightRule::CappedEma,
            ..Default::default()
        };
        let mut w = cfg.w0;
        for _ in 0..5000 {
            w = next_weight(w, 0.8, &cfg);
        }
        assert!((w - 0.2).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_similarity_is_clamped() {
        let cfg = FusionConfig::default();
        let mut a = FusionWeightState::new(&cfg);
        let mut b = FusionWeightState::new(&cfg);
        let up = update_weight(&mut a, 1.5, &cfg);
        assert!(up.clamped);
        assert_eq!(up.w, update_weight(&mut b, 1.0, &cfg).w);
    }

    #[test]
    fn config_validation() {
        assert!(FusionConfig::default().validate().is_ok());
        let bad = [
            FusionConfig {
                k: 1.5,
                ..Default::default()
            },
            FusionConfig {
                w0: 0.3,
                ..Default::default()
            },
            FusionConfig {
                saliency_region_scale: 2.5,
                ..Default::default()
            },
            FusionConfig {
                lambda_reg: 0.0,
                ..Default::default()
            },
            FusionConfig {
                cell_size: 0,
                ..Default::default()
            },
            FusionConfig {
                eta_sal: -0.1,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_weight_returns_feature_response() {
        let feat = response(
            3,
            3,
            (0..9).map(|v| v as f64 - 4.0).collect(),
            unit_mapping(10.0, 10.0, 2.0),
        );
        let sal = response(3, 3, vec![5.0; 9], unit_mapping(10.0, 10.0, 1.0));
        assert_eq!(fuse_responses(&sal, &feat, 0.0), feat);
    }

    #[test]
    fn unit_weight_on_same_frame_doubles() {
        let feat = response(
            4,
            3,
            (0..12).map(|v| v as f64 * 0.5).collect(),
            unit_mapping(7.0, 3.0, 1.5),
        );
        let fused = fuse_responses(&feat, &feat, 1.0);
        for (a, b) in fused.grid.data.iter().zip(&feat.grid.data) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn saliency_peak_lands_on_aligned_cell() {
        // Feature grid 8x8, 2 px cells, center cell (4, 4) at pixel (50, 50).
        // Saliency grid 5x5, 1 px cells, center cell (2, 2) at pixel (54, 48),
        // which is feature cell (4 + 4/2, 4 - 2/2) = (6, 3).
        let feat = response(8, 8, vec![0.0; 64], unit_mapping(50.0, 50.0, 2.0));
        let mut sal = vec![0.0; 25];
        sal[2 * 5 + 2] = 1.0;
        let sal = response(5, 5, sal, unit_mapping(54.0, 48.0, 1.0));
        let fused = fuse_responses(&sal, &feat, 0.5);
        let (x, y, v) = fused.grid.argmax();
        assert_eq!((x, y, v), (6, 3, 0.5));
        // cells far outside the 5x5 saliency coverage are untouched
        assert_eq!(fused.grid.get(0, 7), 0.0);
    }

    proptest! {
        #[test]
        fn literal_weight_stays_in_bounds(sims in prop::collection::vec(0.0f64..=1.0, 1..200), w0 in 0.0f64..=0.25) {
            let cfg = FusionConfig { w0, ..Default::default() };
            let mut state = FusionWeightState::new(&cfg);
            for s in sims {
                let w = update_weight(&mut state, s, &cfg).w;
                prop_assert!((0.0..=cfg.k).contains(&w));
            }
        }

        #[test]
        fn fused_argmax_ignores_common_offset(
            feat in prop::collection::vec(-1.0f64..1.0, 36),
            sal in prop::collection::vec(-1.0f64..1.0, 36),
            c in -5.0f64..5.0, w in 0.0f64..=0.25,
        ) {
            let m = unit_mapping(30.0, 30.0, 1.0);
            let f = response(6, 6, feat.clone(), m);
            let s = response(6, 6, sal.clone(), m);
            let f2 = response(6, 6, feat.iter().map(|v| v + c).collect(), m);
            let s2 = response(6, 6, sal.iter().map(|v| v + c).collect(), m);
            let a = fuse_responses(&s, &f, w).grid.argmax();
            let b = fuse_responses(&s2, &f2, w).grid.argmax();
            prop_assert_eq!((a.0, a.1), (b.0, b.1));
        }
    }
}
