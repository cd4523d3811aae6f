//! Plain row-major real grids shared by windows, labels and responses.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RealGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch(
                format!("{} values for {width}x{height}", width * height),
                data.len(),
            ));
        }
        Ok(RealGrid {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        RealGrid {
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
        RealGrid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &RealGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Location and value of the maximum. Ties go to the smallest row, then
    /// the smallest column.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.2 {
                best = (i % self.width, i / self.width, v);
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
