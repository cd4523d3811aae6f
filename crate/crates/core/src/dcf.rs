//! Closed-form multi-channel correlation filters in the Fourier domain.
//!
//! Training solves `min_h ||sum_d h_d * f_d - g||^2 + lambda ||h||^2` under
//! circular convolution. Per frequency the minimizer is
//! `H_d = conj(F_d) G / (sum_d |F_d|^2 + lambda)`; the filter keeps the
//! numerator per channel and the shared energy term separately so both can
//! be averaged online.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::fft::Fft2;
use crate::grid::RealGrid;

/// Gaussian regression target peaking at the grid center cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub grid: RealGrid,
    pub sigma: f64,
}

/// Index of the center cell along an axis of `len` cells.
#[inline]
pub fn center_cell(len: usize) -> usize {
    len / 2
}

pub fn default_label_sigma(grid_w: usize, grid_h: usize) -> f64 {
    ((grid_w * grid_h) as f64).sqrt() / 10.0
}

pub fn gaussian_label(grid_w: usize, grid_h: usize, sigma: f64) -> Result<LabelMap> {
    if sigma.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "label sigma {sigma} must be > 0"
        )));
    }
    if grid_w == 0 || grid_h == 0 {
        return Err(Error::InvalidInput("empty label grid".into()));
    }
    let (cx, cy) = (center_cell(grid_w) as f64, center_cell(grid_h) as f64);
    let denom = 2.0 * sigma * sigma;
    let grid = RealGrid::from_fn(grid_w, grid_h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (-(dx * dx + dy * dy) / denom).exp()
    });
    Ok(LabelMap { grid, sigma })
}

fn hann_1d(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect()
}

/// Outer product of symmetric 1-D Hann windows; an axis of length 1 is all ones.
pub fn hann_window(grid_w: usize, grid_h: usize) -> RealGrid {
    let wx = hann_1d(grid_w);
    let wy = hann_1d(grid_h);
    RealGrid::from_fn(grid_w, grid_h, |x, y| wx[x] * wy[y])
}

/// Affine map from response cells to frame pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMapping {
    /// Frame position of the grid's center cell.
    pub center_x: f64,
    pub center_y: f64,
    /// Frame pixels per cell along each axis.
    pub step_x: f64,
    pub step_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub grid: RealGrid,
    pub mapping: CellMapping,
}

impl ResponseMap {
    pub fn with_mapping(mut self, mapping: CellMapping) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn cell_to_pixel(&self, cx: f64, cy: f64) -> (f64, f64) {
        let m = &self.mapping;
        (
            m.center_x + (cx - center_cell(self.grid.width) as f64) * m.step_x,
            m.center_y + (cy - center_cell(self.grid.height) as f64) * m.step_y,
        )
    }

    pub fn pixel_to_cell(&self, px: f64, py: f64) -> (f64, f64) {
        let m = &self.mapping;
        (
            center_cell(self.grid.width) as f64 + (px - m.center_x) / m.step_x,
            center_cell(self.grid.height) as f64 + (py - m.center_y) / m.step_y,
        )
    }

    /// Peak cell offset from the center cell, ties broken by row then column.
    pub fn peak_offset(&self) -> (i64, i64, f64) {
        let (x, y, v) = self.grid.argmax();
        (
            x as i64 - center_cell(self.grid.width) as i64,
            y as i64 - center_cell(self.grid.height) as i64,
            v,
        )
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationFilter {
    grid_w: usize,
    grid_h: usize,
    numerators: Vec<Vec<Complex64>>,
    /// `sum_d conj(F_d) F_d`, averaged like the numerators; the ridge term is
    /// added when the denominator is formed.
    energy: Vec<Complex64>,
    lambda_reg: f64,
    eta: f64,
    plan: Fft2,
}

impl PartialEq for CorrelationFilter {
    fn eq(&self, other: &Self) -> bool {
        self.grid_w == other.grid_w
            && self.grid_h == other.grid_h
            && self.numerators == other.numerators
            && self.energy == other.energy
            && self.lambda_reg == other.lambda_reg
            && self.eta == other.eta
    }
}

impl CorrelationFilter {
    pub fn grid(&self) -> (usize, usize) {
        (self.grid_w, self.grid_h)
    }

    pub fn n_channels(&self) -> usize {
        self.numerators.len()
    }

    pub fn lambda_reg(&self) -> f64 {
        self.lambda_reg
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn numerators(&self) -> &[Vec<Complex64>] {
        &self.numerators
    }

    pub fn denominator(&self) -> Vec<Complex64> {
        self.energy.iter().map(|e| e + self.lambda_reg).collect()
    }

    /// Euclidean distance between the frequency-domain states of two filters.
    pub fn distance(&self, other: &CorrelationFilter) -> f64 {
        let nums: f64 = self
            .numerators
            .iter()
            .zip(&other.numerators)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let dens: f64 = self
            .energy
            .iter()
            .zip(&other.energy)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (nums + dens).sqrt()
    }

    fn check_stack(&self, stack: &FeatureStack) -> Result<()> {
        if (stack.grid_w, stack.grid_h) != (self.grid_w, self.grid_h) {
            return Err(Error::mismatch(
                format!("{}x{} grid", self.grid_w, self.grid_h),
                format!("{}x{} grid", stack.grid_w, stack.grid_h),
            ));
        }
        if stack.n_channels() != self.numerators.len() {
            return Err(Error::mismatch(
                format!("{} channels", self.numerators.len()),
                format!("{} channels", stack.n_channels()),
            ));
        }
        Ok(())
    }
}

struct Sample {
    numerators: Vec<Vec<Complex64>>,
    energy: Vec<Complex64>,
}

fn sample_terms(plan: &Fft2, stack: &FeatureStack, label: &LabelMap) -> Result<Sample> {
    if !(label.grid.width == stack.grid_w && label.grid.height == stack.grid_h) {
        return Err(Error::mismatch(
            format!("{}x{} label", stack.grid_w, stack.grid_h),
            format!("{}x{} label", label.grid.width, label.grid.height),
        ));
    }
    let target = plan.forward_real(&label.grid.data);
    let mut energy = vec![Complex64::new(0.0, 0.0); target.len()];
    let numerators = stack
        .channels
        .iter()
        .map(|channel| {
            let f = plan.forward_real(channel);
            for (e, fv) in energy.iter_mut().zip(&f) {
                *e += fv.conj() * fv;
            }
            f.iter().zip(&target).map(|(fv, g)| fv.conj() * g).collect()
        })
        .collect();
    Ok(Sample { numerators, energy })
}

pub fn learn_filter(
    stack: &FeatureStack,
    label: &LabelMap,
    lambda_reg: f64,
    eta: f64,
) -> Result<CorrelationFilter> {
    if lambda_reg.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidInput(format!(
            "ridge strength {lambda_reg} must be > 0"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!(
            "learning rate {eta} outside [0, 1]"
        )));
    }
    if stack.n_channels() == 0 {
        return Err(Error::InvalidInput("feature stack has no channels".into()));
    }
    let plan = Fft2::new(stack.grid_w, stack.grid_h);
    let sample = sample_terms(&plan, stack, label)?;
    Ok(CorrelationFilter {
        grid_w: stack.grid_w,
        grid_h: stack.grid_h,
        numerators: sample.numerators,
        energy: sample.energy,
        lambda_reg,
        eta,
        plan,
    })
}

/// Exponential running average of the filter state with the new sample,
/// weighted by the filter's learning rate.
pub fn update_filter(
    filter: &CorrelationFilter,
    stack: &FeatureStack,
    label: &LabelMap,
) -> Result<CorrelationFilter> {
    filter.check_stack(stack)?;
    let sample = sample_terms(&filter.plan, stack, label)?;
    let eta = filter.eta;
    let keep = 1.0 - eta;
    let blend = |old: &[Complex64], new: &[Complex64]| -> Vec<Complex64> {
        old.iter()
            .zip(new)
            .map(|(o, n)| o * keep + n * eta)
            .collect()
    };
    Ok(CorrelationFilter {
        numerators: filter
            .numerators
            .iter()
            .zip(&sample.numerators)
            .map(|(o, n)| blend(o, n))
            .collect(),
        energy: blend(&filter.energy, &sample.energy),
        ..filter.clone()
    })
}

/// Circular cross-correlation `r(dx, dy) = sum_{x,y} a(x, y) b(x + dx, y + dy)`
/// with indices taken modulo the grid size, evaluated as `IFFT(conj(A) B)`.
pub fn cross_correlate(a: &RealGrid, b: &RealGrid) -> Result<RealGrid> {
    if !a.same_shape(b) {
        return Err(Error::mismatch(
            format!("{}x{} grid", a.width, a.height),
            format!("{}x{} grid", b.width, b.height),
        ));
    }
    let plan = Fft2::new(a.width, a.height);
    let fa = plan.forward_real(&a.data);
    let mut acc = plan.forward_real(&b.data);
    for (v, x) in acc.iter_mut().zip(&fa) {
        *v *= x.conj();
    }
    plan.inverse(&mut acc);
    RealGrid::new(a.width, a.height, acc.iter().map(|c| c.re).collect())
}

/// Filter response over a query stack. A query whose content matches the
/// training sample peaks at the center cell. The default mapping places the
/// center cell at its own pixel center in patch coordinates.
pub fn correlate(filter: &CorrelationFilter, stack: &FeatureStack) -> Result<ResponseMap> {
    filter.check_stack(stack)?;
    let plan = &filter.plan;
    let mut acc = vec![Complex64::new(0.0, 0.0); filter.energy.len()];
    for (num, channel) in filter.numerators.iter().zip(&stack.channels) {
        let f = plan.forward_real(channel);
        for ((a, n), fv) in acc.iter_mut().zip(num).zip(&f) {
            *a += n * fv;
        }
    }
    for (a, e) in acc.iter_mut().zip(&filter.energy) {
        *a /= e + filter.lambda_reg;
    }
    plan.inverse(&mut acc);
    let grid = RealGrid {
        width: filter.grid_w,
        height: filter.grid_h,
        data: acc.iter().map(|c| c.re).collect(),
    };
    let cs = stack.cell_size.max(1) as f64;
    let mapping = CellMapping {
        center_x: (center_cell(filter.grid_w) as f64 + 0.5) * cs,
        center_y: (center_cell(filter.grid_h) as f64 + 0.5) * cs,
        step_x: cs,
        step_y: cs,
    };
    Ok(ResponseMap { grid, mapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stack(rng: &mut ChaCha8Rng, w: usize, h: usize, d: usize) -> FeatureStack {
        let channels = (0..d)
            .map(|_| (0..w * h).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        FeatureStack::new(w, h, 1, channels).unwrap()
    }

    fn shifted(stack: &FeatureStack, sx: usize, sy: usize) -> FeatureStack {
        let (w, h) = (stack.grid_w, stack.grid_h);
        let channels = stack
            .channels
            .iter()
            .map(|c| {
                (0..w * h)
                    .map(|i| {
                        let (x, y) = (i % w, i / w);
                        c[((y + h - sy) % h) * w + (x + w - sx) % w]
                    })
                    .collect()
            })
            .collect();
        FeatureStack::new(w, h, stack.cell_size, channels).unwrap()
    }

    #[test]
    fn label_values() {
        let label = gaussian_label(9, 7, 2.0).unwrap();
        assert_eq!(label.grid.get(4, 3), 1.0);
        // two cells right of center at sigma 2
        assert!((label.grid.get(6, 3) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((label.grid.get(6, 3) - 0.60653).abs() < 1e-5);
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(label.grid.get(x, y), label.grid.get(8 - x, y));
                assert_eq!(label.grid.get(x, y), label.grid.get(x, 6 - y));
                assert!(label.grid.get(x, y) > 0.0);
            }
        }
        assert!(gaussian_label(4, 4, 0.0).is_err());
    }

    #[test]
    fn hann_values() {
        let w = hann_window(5, 4);
        for y in 0..4 {
            assert_eq!(w.get(0, y), 0.0);
            assert!(w.get(4, y).abs() < 1e-15);
        }
        let odd = hann_window(7, 1);
        assert_eq!(odd.get(3, 0), 1.0);
        assert_eq!(hann_window(1, 1).data, vec![1.0]);
    }

    #[test]
    fn impulse_training_reproduces_scaled_label() {
        let (w, h) = (12, 10);
        let mut impulse = vec![0.0; w * h];
        impulse[center_cell(h) * w + center_cell(w)] = 1.0;
        let stack = FeatureStack::new(w, h, 1, vec![impulse]).unwrap();
        let label = gaussian_label(w, h, 1.5).unwrap();
        let lambda = 0.01;
        let filter = learn_filter(&stack, &label, lambda, 0.02).unwrap();
        let resp = correlate(&filter, &stack).unwrap();
        for (r, g) in resp.grid.data.iter().zip(&label.grid.data) {
            assert!((r - g / (1.0 + lambda)).abs() < 1e-9);
        }
    }

    #[test]
    fn training_sample_peaks_at_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let stack = random_stack(&mut rng, 16, 12, 3);
            let label = gaussian_label(16, 12, default_label_sigma(16, 12)).unwrap();
            let filter = learn_filter(&stack, &label, 1e-2, 0.02).unwrap();
            let (dx, dy, _) = correlate(&filter, &stack).unwrap().peak_offset();
            assert_eq!((dx, dy), (0, 0));
        }
    }

    #[test]
    fn response_scales_inversely_with_strong_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut stack = random_stack(&mut rng, 8, 8, 2);
        // keep the spectral energy far below both ridge strengths
        for v in stack.channels.iter_mut().flatten() {
            *v *= 0.1;
        }
        let label = gaussian_label(8, 8, 1.0).unwrap();
        let peak = |lambda: f64| {
            let f = learn_filter(&stack, &label, lambda, 0.1).unwrap();
            correlate(&f, &stack).unwrap().grid.max()
        };
        let ratio = peak(1e3) / peak(1e6);
        assert!((ratio / 1e3 - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn update_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_stack(&mut rng, 8, 6, 2);
        let b = random_stack(&mut rng, 8, 6, 2);
        let label = gaussian_label(8, 6, 1.2).unwrap();

        let frozen = learn_filter(&a, &label, 0.01, 0.0).unwrap();
        assert_eq!(update_filter(&frozen, &b, &label).unwrap(), frozen);

        let replace = learn_filter(&a, &label, 0.01, 1.0).unwrap();
        let fresh = learn_filter(&b, &label, 0.01, 1.0).unwrap();
        assert_eq!(update_filter(&replace, &b, &label).unwrap(), fresh);
    }

    #[test]
    fn two_half_updates_unroll() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_stack(&mut rng, 6, 6, 2);
        let b = random_stack(&mut rng, 6, 6, 2);
        let label = gaussian_label(6, 6, 1.0).unwrap();
        let old = learn_filter(&a, &label, 0.01, 0.5).unwrap();
        let new = learn_filter(&b, &label, 0.01, 0.5).unwrap();
        let twice = update_filter(&update_filter(&old, &b, &label).unwrap(), &b, &label).unwrap();
        for d in 0..2 {
            for i in 0..36 {
                let expect = old.numerators()[d][i] * 0.25 + new.numerators()[d][i] * 0.75;
                assert!((twice.numerators()[d][i] - expect).norm() < 1e-12);
            }
        }
        // ridge term is added once, not blended
        let den = twice.denominator();
        for (i, d) in den.iter().enumerate() {
            let expect = old.energy[i] * 0.25 + new.energy[i] * 0.75 + 0.01;
            assert!((d - expect).norm() < 1e-12);
            assert!(d.re >= 0.01);
        }
    }

    #[test]
    fn repeated_updates_converge_geometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_stack(&mut rng, 8, 8, 2);
        let b = random_stack(&mut rng, 8, 8, 2);
        let label = gaussian_label(8, 8, 1.0).unwrap();
        let eta = 0.2;
        let target = learn_filter(&b, &label, 0.01, eta).unwrap();
        let mut filter = learn_filter(&a, &label, 0.01, eta).unwrap();
        let mut prev = filter.distance(&target);
        for _ in 0..10 {
            filter = update_filter(&filter, &b, &label).unwrap();
            let d = filter.distance(&target);
            assert!((d / prev - (1.0 - eta)).abs() < 1e-9);
            prev = d;
        }
    }

    #[test]
    fn shift_moves_the_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let stack = random_stack(&mut rng, 16, 16, 2);
        let label = gaussian_label(16, 16, 1.6).unwrap();
        let filter = learn_filter(&stack, &label, 1e-2, 0.02).unwrap();
        let resp = correlate(&filter, &shifted(&stack, 2, 1)).unwrap();
        assert_eq!(resp.peak_offset().0, 2);
        assert_eq!(resp.peak_offset().1, 1);
    }

    #[test]
    fn zero_query_gives_zero_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stack = random_stack(&mut rng, 8, 8, 3);
        let label = gaussian_label(8, 8, 1.0).unwrap();
        let filter = learn_filter(&stack, &label, 1e-2, 0.02).unwrap();
        let zero = FeatureStack::new(8, 8, 1, vec![vec![0.0; 64]; 3]).unwrap();
        assert!(correlate(&filter, &zero)
            .unwrap()
            .grid
            .data
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn correlate_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train = random_stack(&mut rng, 10, 8, 2);
        let a = random_stack(&mut rng, 10, 8, 2);
        let b = random_stack(&mut rng, 10, 8, 2);
        let sum = FeatureStack::new(
            10,
            8,
            1,
            a.channels
                .iter()
                .zip(&b.channels)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
                .collect(),
        )
        .unwrap();
        let label = gaussian_label(10, 8, 1.0).unwrap();
        let f = learn_filter(&train, &label, 1e-2, 0.02).unwrap();
        let ra = correlate(&f, &a).unwrap();
        let rb = correlate(&f, &b).unwrap();
        let rs = correlate(&f, &sum).unwrap();
        for i in 0..80 {
            assert!((rs.grid.data[i] - ra.grid.data[i] - rb.grid.data[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatches_are_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut stack = random_stack(&mut rng, 8, 8, 2);
        // keep the spectral energy far below both ridge strengths
        for v in stack.channels.iter_mut().flatten() {
            *v *= 0.1;
        }
        let label = gaussian_label(8, 8, 1.0).unwrap();
        assert!(learn_filter(&stack, &gaussian_label(8, 6, 1.0).unwrap(), 0.01, 0.1).is_err());
        assert!(learn_filter(&stack, &label, 0.0, 0.1).is_err());
        assert!(learn_filter(&stack, &label, 0.01, 1.5).is_err());
        let filter = learn_filter(&stack, &label, 0.01, 0.1).unwrap();
        let three = random_stack(&mut rng, 8, 8, 3);
        assert!(correlate(&filter, &three).is_err());
        assert!(update_filter(&filter, &three, &label).is_err());
        let small = random_stack(&mut rng, 6, 8, 2);
        assert!(correlate(&filter, &small).is_err());
    }

    #[test]
    fn mapping_round_trips() {
        let resp = ResponseMap {
            grid: RealGrid::filled(9, 6, 0.0),
            mapping: CellMapping {
                center_x: 40.0,
                center_y: 10.0,
                step_x: 1.5,
                step_y: 2.0,
            },
        };
        assert_eq!(resp.cell_to_pixel(4.0, 3.0), (40.0, 10.0));
        assert_eq!(resp.cell_to_pixel(6.0, 1.0), (43.0, 6.0));
        assert_eq!(resp.pixel_to_cell(43.0, 6.0), (6.0, 1.0));
    }
}
