//! Keypoint detection and binary description.
//!
//! Detection is FAST-9 on the 16-pixel Bresenham circle with 3x3 non-maximum
//! suppression and intensity-centroid orientation. Description is either the
//! fixed rotated BRIEF pattern ([`brief`]) or the trainable box-difference
//! descriptor ([`beblid`]).

pub mod beblid;
pub mod brief;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::image::{GrayImage, Point2};
use crate::math;

pub use beblid::{
    beblid_feature, beblid_response, compute_beblid, default_candidate_pool,
    sampled_candidate_pool, train_beblid, BeblidModel, BeblidTraining, BeblidWeakLearner,
    BoxPairCandidate, PatchPairSample, TrainError,
};
pub use brief::{compute_brief, brief_pattern, BRIEF_BITS, BRIEF_PATCH_SIDE};

/// Default distance keypoints keep from the image border. Covers the upright
/// sampling footprint of both descriptor families (31- and 32-pixel patches).
pub const DEFAULT_BORDER_MARGIN: usize = 16;

/// Radius of the circular patch used for intensity-centroid orientation.
pub const ORIENTATION_RADIUS: usize = 15;

/// An oriented corner point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    /// Pixel position.
    pub position: Point2,
    /// Corner strength: sum of absolute differences over the contiguous
    /// FAST arc. Always positive for a detected point.
    pub response: f64,
    /// Orientation in radians, in `[0, 2*pi)`.
    pub angle: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            position: Point2::new(x, y),
            response: 1.0,
            angle: 0.0,
        }
    }

    pub fn position(&self) -> Point2 {
        self.position
    }
}

/// Fixed-length bitstring backed by 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryDescriptor {
    words: Vec<u64>,
    len_bits: usize,
}

impl BinaryDescriptor {
    pub fn zeros(len_bits: usize) -> Self {
        Self {
            words: vec![0u64; len_bits.div_ceil(64)],
            len_bits,
        }
    }

    pub fn len(&self) -> usize {
        self.len_bits
    }

    pub fn is_empty(&self) -> bool {
        self.len_bits == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn set_bit(&mut self, idx: usize, value: bool) {
        debug_assert!(idx < self.len_bits);
        let word = idx / 64;
        let bit = idx % 64;
        if value {
            self.words[word] |= 1u64 << bit;
        } else {
            self.words[word] &= !(1u64 << bit);
        }
    }

    #[inline]
    pub fn get_bit(&self, idx: usize) -> bool {
        debug_assert!(idx < self.len_bits);
        (self.words[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Build from explicit bits, least-significant index first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut d = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                d.set_bit(i, true);
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    /// A descriptor sample or box falls outside the image.
    BorderViolation,
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::BorderViolation => write!(f, "descriptor sample outside image bounds"),
        }
    }
}

impl core::error::Error for FeatureError {}

/// The 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
pub(crate) const FAST_CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const FAST_ARC: usize = 9;

/// FAST-9 segment test at one pixel. Returns the corner response (SAD over
/// the longest qualifying contiguous arc) or `None` when not a corner.
fn fast_response(img: &GrayImage, x: usize, y: usize, threshold: i64) -> Option<f64> {
    let center = img.get(x as u32, y as u32) as i64;
    let hi = center + threshold;
    let lo = center - threshold;
    let mut class = [0i8; 16];
    let mut vals = [0i64; 16];
    for (k, (dx, dy)) in FAST_CIRCLE.iter().enumerate() {
        let v = img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32) as i64;
        vals[k] = v;
        class[k] = if v > hi {
            1
        } else if v < lo {
            -1
        } else {
            0
        };
    }
    // Longest circular run of each polarity, with the SAD over that run.
    let mut best: Option<f64> = None;
    for target in [1i8, -1i8] {
        let mut run = 0usize;
        let mut sad = 0i64;
        let mut best_run = 0usize;
        let mut best_sad = 0i64;
        // Doubling the circle handles wrap-around runs; a run longer than 16
        // means the whole circle qualifies.
        for k in 0..32 {
            let idx = k % 16;
            if class[idx] == target {
                run += 1;
                sad += (vals[idx] - center).abs();
                if run > best_run {
                    best_run = run.min(16);
                    best_sad = sad;
                }
                if run >= 16 {
                    break;
                }
            } else {
                run = 0;
                sad = 0;
            }
        }
        if best_run >= FAST_ARC {
            let resp = best_sad as f64;
            if best.is_none_or(|b| resp > b) {
                best = Some(resp);
            }
        }
    }
    best
}

/// Intensity-centroid orientation over a circular patch of the given radius:
/// `atan2(m01, m10)` with moments taken relative to the keypoint, wrapped to
/// `[0, 2*pi)`. Degenerate moments give 0. The angle is written back to the
/// keypoint and returned.
pub fn compute_orientation(img: &GrayImage, kp: &mut Keypoint, radius: usize) -> f64 {
    let cx = math::round(kp.position.x) as i64;
    let cy = math::round(kp.position.y) as i64;
    let r = radius as i64;
    let r2 = r * r;
    let mut m10 = 0i64;
    let mut m01 = 0i64;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let x = cx + dx;
            let y = cy + dy;
            if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
                continue;
            }
            let v = img.get(x as u32, y as u32) as i64;
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    let angle = if m10 == 0 && m01 == 0 {
        0.0
    } else {
        math::wrap_angle(math::atan2(m01 as f64, m10 as f64))
    };
    kp.angle = angle;
    angle
}

/// Detect FAST-9 corners with the default border margin. Keypoints come back
/// sorted by descending response (ties by scan order), capped at `max_count`,
/// each with its intensity-centroid orientation filled in.
pub fn detect_keypoints(img: &GrayImage, fast_threshold: u8, max_count: usize) -> Vec<Keypoint> {
    detect_keypoints_with_margin(img, fast_threshold, max_count, DEFAULT_BORDER_MARGIN)
}

/// [`detect_keypoints`] with an explicit border margin (at least the circle
/// radius 3). An image too small for the margin yields an empty list.
pub fn detect_keypoints_with_margin(
    img: &GrayImage,
    fast_threshold: u8,
    max_count: usize,
    border_margin: usize,
) -> Vec<Keypoint> {
    let margin = border_margin.max(3);
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w <= 2 * margin || h <= 2 * margin || max_count == 0 {
        return Vec::new();
    }

    // Response map over the scanned interior; 0 = not a corner.
    let mut responses = vec![0.0f64; w * h];
    for y in margin..h - margin {
        for x in margin..w - margin {
            if let Some(r) = fast_response(img, x, y, fast_threshold as i64) {
                responses[y * w + x] = r;
            }
        }
    }

    // 3x3 non-maximum suppression: keep strict local maxima.
    let mut kps = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            let r = responses[y * w + x];
            if r <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = (x as i32 + dx) as usize;
                    let ny = (y as i32 + dy) as usize;
                    if responses[ny * w + nx] >= r && (dy < 0 || (dy == 0 && dx < 0)) {
                        // Earlier pixel with equal or larger response wins.
                        is_max = false;
                        break 'nms;
                    }
                    if responses[ny * w + nx] > r {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                kps.push(Keypoint {
                    position: Point2::new(x as f64, y as f64),
                    response: r,
                    angle: 0.0,
                });
            }
        }
    }

    kps.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.position.y.total_cmp(&b.position.y))
            .then(a.position.x.total_cmp(&b.position.x))
    });
    kps.truncate(max_count);

    let radius = ORIENTATION_RADIUS.min(margin);
    for kp in kps.iter_mut() {
        compute_orientation(img, kp, radius);
    }
    kps
}

/// Rotate an integer offset by `angle` and round to the pixel grid.
#[inline]
pub(crate) fn rotate_offset(dx: f64, dy: f64, cos_a: f64, sin_a: f64) -> (i64, i64) {
    let rx = cos_a * dx - sin_a * dy;
    let ry = sin_a * dx + cos_a * dy;
    (math::round(rx) as i64, math::round(ry) as i64)
}
