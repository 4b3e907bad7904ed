//! Grayscale rasters, summed-area tables and coordinate primitives.
//!
//! Pixel centers sit at integer coordinates: pixel `(x, y)` covers the
//! continuous square `[x-0.5, x+0.5) × [y-0.5, y+0.5)`. A square box of side
//! `s` "centered" at a pixel is anchored so its top-left pixel is at
//! `p - floor(s/2)`, which keeps odd boxes symmetric and gives even boxes one
//! fixed convention.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// Summed-area table over a [`GrayImage`].
///
/// Entry `(x, y)` holds the sum of all source pixels with coordinates strictly
/// below `(x, y)` in both axes, so the table is `(width+1) × (height+1)` with
/// an all-zero first row and column. The `u64` accumulator cannot overflow for
/// any realistic panorama (a 4096×4096 all-255 image sums to ~4.3e9).
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    sums: Vec<u64>,
}

/// Continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageError {
    /// Width or height is zero, or the data length does not match.
    BadDimensions { width: u32, height: u32, len: usize },
    /// A query box does not lie fully inside the image.
    BoxOutOfBounds { x: i64, y: i64, side: u32 },
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::BadDimensions { width, height, len } => write!(
                f,
                "bad image dimensions {width}x{height} for data length {len}"
            ),
            ImageError::BoxOutOfBounds { x, y, side } => {
                write!(f, "box of side {side} at ({x}, {y}) leaves the image")
            }
        }
    }
}

impl core::error::Error for ImageError {}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != (width as usize) * (height as usize) {
            return Err(ImageError::BadDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn get_i64(&self, x: i64, y: i64) -> Option<u8> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.get(x as u32, y as u32))
        }
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    /// Crop `w × h` pixels starting at `(x0, y0)`; the rectangle must lie
    /// inside the image.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<GrayImage, ImageError> {
        if w == 0
            || h == 0
            || x0.checked_add(w).is_none_or(|e| e > self.width)
            || y0.checked_add(h).is_none_or(|e| e > self.height)
        {
            return Err(ImageError::BoxOutOfBounds {
                x: x0 as i64,
                y: y0 as i64,
                side: w.max(h),
            });
        }
        let mut data = Vec::with_capacity(w as usize * h as usize);
        for y in y0..y0 + h {
            let row = y as usize * self.width as usize;
            data.extend_from_slice(&self.data[row + x0 as usize..row + (x0 + w) as usize]);
        }
        Ok(GrayImage {
            width: w,
            height: h,
            data,
        })
    }

    /// Bilinear sample at continuous coordinates with edge clamping.
    ///
    /// Integer coordinates reproduce the pixel value exactly.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = math::floor(x) as u32;
        let y0 = math::floor(y) as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0) as f64;
        let v10 = self.get(x1, y0) as f64;
        let v01 = self.get(x0, y1) as f64;
        let v11 = self.get(x1, y1) as f64;
        let top = v00 + (v10 - v00) * fx;
        let bottom = v01 + (v11 - v01) * fx;
        top + (bottom - top) * fy
    }
}

/// ITU-R BT.601 luma, rounded to nearest.
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    math::round(y) as u8
}

/// Build the summed-area table of `img`.
///
/// Box sums over the result equal direct pixel summation exactly (integer
/// arithmetic throughout).
pub fn compute_integral(img: &GrayImage) -> IntegralImage {
    let w = img.width as usize;
    let h = img.height as usize;
    let stride = w + 1;
    let mut sums = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0u64;
        let src = y * w;
        let above = y * stride;
        let out = (y + 1) * stride;
        for x in 0..w {
            row_sum += img.data[src + x] as u64;
            sums[out + x + 1] = sums[above + x + 1] + row_sum;
        }
    }
    IntegralImage {
        width: img.width,
        height: img.height,
        sums,
    }
}

impl IntegralImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> u64 {
        self.sums[y * (self.width as usize + 1) + x]
    }

    /// Exact sum of the `w × h` pixel box with top-left corner `(x0, y0)`.
    pub fn box_sum(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<u64, ImageError> {
        let x1 = x0.checked_add(w);
        let y1 = y0.checked_add(h);
        match (x1, y1) {
            (Some(x1), Some(y1)) if x1 <= self.width && y1 <= self.height => {
                let (x0, y0, x1, y1) = (x0 as usize, y0 as usize, x1 as usize, y1 as usize);
                Ok(self.at(x1, y1) + self.at(x0, y0) - self.at(x0, y1) - self.at(x1, y0))
            }
            _ => Err(ImageError::BoxOutOfBounds {
                x: x0 as i64,
                y: y0 as i64,
                side: w.max(h),
            }),
        }
    }

    /// Mean intensity of the `s × s` box centered at `center`.
    ///
    /// The center is rounded to the pixel grid; the box must lie fully inside
    /// the image. `s = 1` returns the pixel value itself.
    pub fn box_mean(&self, center: Point2, s: u32) -> Result<f64, ImageError> {
        debug_assert!(s >= 1);
        let cx = math::round(center.x) as i64;
        let cy = math::round(center.y) as i64;
        let half = (s / 2) as i64;
        let x0 = cx - half;
        let y0 = cy - half;
        if x0 < 0 || y0 < 0 {
            return Err(ImageError::BoxOutOfBounds { x: x0, y: y0, side: s });
        }
        let sum = self.box_sum(x0 as u32, y0 as u32, s, s)?;
        Ok(sum as f64 / (s as u64 * s as u64) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force box sum, the independent oracle for the integral image.
    fn direct_box_sum(img: &GrayImage, x0: u32, y0: u32, w: u32, h: u32) -> u64 {
        let mut sum = 0u64;
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                sum += img.get(x, y) as u64;
            }
        }
        sum
    }

    fn random_image(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen())
    }

    #[test]
    fn single_pixel_integral() {
        let img = GrayImage::new(1, 1, vec![7]).unwrap();
        let ii = compute_integral(&img);
        assert_eq!(ii.at(1, 1), 7);
        assert_eq!(ii.box_sum(0, 0, 1, 1).unwrap(), 7);
    }

    #[test]
    fn first_row_and_column_are_zero() {
        let ii = compute_integral(&random_image(6, 4, 1));
        for x in 0..=6 {
            assert_eq!(ii.at(x, 0), 0);
        }
        for y in 0..=4 {
            assert_eq!(ii.at(0, y), 0);
        }
    }

    #[test]
    fn constant_image_box_sums() {
        let img = GrayImage::filled(9, 9, 1);
        let ii = compute_integral(&img);
        for s in 1..=9u32 {
            assert_eq!(ii.box_sum(0, 0, s, s).unwrap(), (s * s) as u64);
        }
    }

    #[test]
    fn random_box_matches_direct_sum() {
        let img = random_image(5, 5, 42);
        let ii = compute_integral(&img);
        assert_eq!(
            ii.box_sum(1, 1, 3, 3).unwrap(),
            direct_box_sum(&img, 1, 1, 3, 3)
        );
    }

    #[test]
    fn box_mean_constant_and_degenerate() {
        let img = GrayImage::filled(11, 11, 50);
        let ii = compute_integral(&img);
        assert_eq!(ii.box_mean(Point2::new(5.0, 5.0), 5).unwrap(), 50.0);
        // s = 1 is exactly the pixel value.
        let img2 = random_image(7, 7, 3);
        let ii2 = compute_integral(&img2);
        for y in 0..7 {
            for x in 0..7 {
                let m = ii2.box_mean(Point2::new(x as f64, y as f64), 1).unwrap();
                assert_eq!(m, img2.get(x, y) as f64);
            }
        }
    }

    #[test]
    fn box_mean_matches_direct_average() {
        let img = random_image(7, 7, 9);
        let ii = compute_integral(&img);
        let mean = ii.box_mean(Point2::new(3.0, 3.0), 3).unwrap();
        let direct = direct_box_sum(&img, 2, 2, 3, 3) as f64 / 9.0;
        assert!((mean - direct).abs() < 1e-9);
    }

    #[test]
    fn even_box_anchoring() {
        // Even s anchors the top-left at p - s/2: a 2x2 box at (3,3) covers
        // pixels (2..=3, 2..=3).
        let img = random_image(6, 6, 17);
        let ii = compute_integral(&img);
        let mean = ii.box_mean(Point2::new(3.0, 3.0), 2).unwrap();
        let direct = direct_box_sum(&img, 2, 2, 2, 2) as f64 / 4.0;
        assert!((mean - direct).abs() < 1e-9);
    }

    #[test]
    fn out_of_bounds_box_is_an_error() {
        let img = random_image(8, 8, 5);
        let ii = compute_integral(&img);
        assert!(ii.box_mean(Point2::new(0.0, 4.0), 3).is_err());
        assert!(ii.box_mean(Point2::new(7.0, 4.0), 3).is_err());
        assert!(ii.box_sum(6, 6, 3, 3).is_err());
    }

    #[test]
    fn bilinear_integer_coords_are_exact() {
        let img = random_image(9, 5, 11);
        for y in 0..5 {
            for x in 0..9 {
                assert_eq!(
                    img.sample_bilinear(x as f64, y as f64),
                    img.get(x, y) as f64
                );
            }
        }
        // Midpoint of two pixels is their average.
        let v = img.sample_bilinear(1.5, 2.0);
        assert!((v - (img.get(1, 2) as f64 + img.get(2, 2) as f64) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn luma_rounds_to_nearest() {
        assert_eq!(luma_bt601(255, 255, 255), 255);
        assert_eq!(luma_bt601(0, 0, 0), 0);
        // 0.299*100 = 29.9 rounds to 30.
        assert_eq!(luma_bt601(100, 0, 0), 30);
        assert_eq!(luma_bt601(0, 100, 0), 59);
        assert_eq!(luma_bt601(0, 0, 100), 11);
    }

    proptest! {
        #[test]
        fn box_mean_equals_direct_mean(seed in 0u64..1000, cx in 2u32..10, cy in 2u32..10, s in 1u32..=5) {
            let img = random_image(12, 12, seed);
            let ii = compute_integral(&img);
            let center = Point2::new(cx as f64, cy as f64);
            if let Ok(mean) = ii.box_mean(center, s) {
                let half = (s / 2) as u32;
                let direct = direct_box_sum(&img, cx - half, cy - half, s, s) as f64
                    / (s * s) as f64;
                prop_assert!((mean - direct).abs() < 1e-9);
            }
        }

        #[test]
        fn integral_is_monotone(seed in 0u64..200) {
            let img = random_image(10, 8, seed);
            let ii = compute_integral(&img);
            for y in 0..=8usize {
                for x in 1..=10usize {
                    prop_assert!(ii.at(x, y) >= ii.at(x - 1, y));
                }
            }
            for x in 0..=10usize {
                for y in 1..=8usize {
                    prop_assert!(ii.at(x, y) >= ii.at(x, y - 1));
                }
            }
        }
    }
}
