//! Rotated BRIEF-256 description.
//!
//! The sampling pattern was drawn once from an isotropic Gaussian
//! (sigma = patch_side / 5) inside the 31x31 patch with a fixed seed and is
//! frozen below, so descriptors are reproducible across builds and platforms.
//! Each pair is `[ax, ay, bx, by]`; bit k is 1 iff `I(a_k) < I(b_k)` after
//! rotating both offsets by the keypoint angle (ties give 0).

use super::{rotate_offset, BinaryDescriptor, FeatureError, Keypoint};
use crate::image::GrayImage;
use crate::math;

/// Descriptor length in bits.
pub const BRIEF_BITS: usize = 256;

/// Canonical patch side the pattern was drawn in; offsets stay in ±15.
pub const BRIEF_PATCH_SIDE: usize = 31;

/// The frozen sampling pattern: 256 pairs of offsets from the patch center.
static PATTERN: [[i8; 4]; 256] = [
    [3, 0, 3, 1], [-4, -9, 7, -1], [-10, -7, 1, 4], [-2, 12, -1, -8],
    [1, -7, 1, 8], [1, 7, -2, 6], [-3, 10, 5, -2], [-2, 3, 6, -7],
    [-1, -8, -3, 8], [2, 6, -4, -3], [9, -4, 4, 8], [-6, 7, 12, 4],
    [8, -6, 2, 5], [1, -2, 0, 0], [-1, 3, 6, -6], [9, -7, -1, 4],
    [3, 7, 8, 4], [-2, 15, 0, 8], [2, 5, -7, -1], [10, -4, -2, 7],
    [0, 0, -1, 5], [5, 6, 3, 1], [-2, -1, 9, -2], [1, -3, -4, -2],
    [-5, 7, -3, 7], [0, 5, 2, -6], [2, -13, -5, -3], [3, -1, 9, 4],
    [11, 4, -2, 6], [-11, -7, -7, 5], [7, 2, 13, -5], [-12, -3, 8, 15],
    [-3, -1, 1, 5], [3, 8, -1, 3], [14, 0, -4, 5], [-8, 4, 4, 5],
    [12, 7, -7, -5], [-5, 2, -3, 1], [7, 0, -3, 2], [11, 7, -10, -10],
    [-8, -8, -4, -3], [3, -1, 11, -3], [1, -14, -7, 13], [5, -3, 1, -6],
    [-7, -6, -1, 7], [-7, 0, -7, 2], [8, -13, 3, -3], [-10, -10, 4, 12],
    [-9, -11, -2, 1], [-8, 3, -8, 0], [0, -9, 4, -2], [6, 3, 1, -7],
    [4, -2, -1, -1], [9, 13, 8, 2], [2, 9, -9, -14], [1, 0, -8, 4],
    [3, -5, -5, -15], [-2, 15, -7, 7], [-7, 10, 7, -4], [-2, 2, -4, -5],
    [1, 10, 2, 4], [2, 1, -3, -4], [-7, -9, 4, -10], [-6, 5, 12, 11],
    [1, -1, 0, 0], [-3, -5, 4, 3], [8, -2, -4, -4], [5, 4, 8, 5],
    [4, 8, -1, -6], [2, -2, -2, -8], [10, 9, -3, 1], [6, 5, 9, -1],
    [-5, 1, 6, -9], [0, 6, -9, -6], [3, 2, -7, 1], [3, -3, -8, -6],
    [3, -6, -10, -13], [-6, 14, -7, 1], [-2, 9, 5, -1], [2, 3, 3, 2],
    [-3, -4, -1, -4], [-2, 0, -5, 10], [2, -9, -7, 6], [11, 3, 3, 4],
    [4, -1, 2, -5], [-4, -7, 0, 0], [4, 1, -1, 7], [1, -11, -3, -2],
    [-1, -2, 6, -8], [-2, 6, 13, 8], [-1, -4, 6, -12], [2, 5, 4, 1],
    [-12, -8, -1, -2], [2, 12, 7, -8], [2, -3, -1, 5], [5, -1, 11, -3],
    [2, 4, 9, -3], [-10, -1, 3, 3], [-9, -3, -7, -8], [-10, -3, 5, 8],
    [-14, -6, 2, 2], [15, -2, -1, -9], [8, -5, 1, -4], [-4, -9, 4, 8],
    [8, 5, -3, -3], [-1, 0, 1, -6], [0, 1, -11, 1], [5, 2, 0, 11],
    [-4, -11, -7, -9], [-2, -4, 2, 6], [-6, 0, -1, 2], [2, 1, 5, 7],
    [3, 4, 6, -2], [-4, 9, -8, -12], [-6, 7, -1, 7], [-6, 4, -9, -4],
    [5, -4, 9, 8], [1, 5, 5, -4], [-7, -4, 7, -3], [-2, 2, 5, -9],
    [-4, -8, -2, -6], [10, 6, 8, 1], [9, -1, -6, 4], [-7, -1, -9, -2],
    [8, -3, 8, -6], [-1, -8, -6, -6], [-4, 2, 6, -9], [-8, 8, 5, -2],
    [-9, 5, 4, -5], [-7, -4, -6, -5], [-1, 3, -8, 1], [7, -1, 5, 4],
    [-2, -8, 5, -8], [-2, 0, -4, 7], [-1, -5, -9, 6], [4, 5, -4, 1],
    [-7, 6, -10, 0], [-12, 2, 0, 6], [-5, -2, -5, 11], [-7, 7, 2, -4],
    [15, -2, 1, 1], [-7, 7, -3, -15], [9, 8, 4, 2], [2, -6, 14, -14],
    [5, 8, 7, 6], [-3, -2, -12, 0], [5, -3, 7, 6], [-9, -2, 0, 1],
    [-13, 9, 2, -6], [-5, -2, 5, -10], [-2, -9, -5, 2], [-4, -1, 3, 6],
    [-3, -1, 2, -3], [-4, -4, 5, 0], [6, 15, 4, 7], [-3, 8, 1, -1],
    [-1, -2, -4, 9], [12, 6, -6, -14], [-9, 5, -13, 6], [-6, 2, -1, -2],
    [-7, -2, 7, -14], [-12, 2, 6, -1], [-5, -5, 3, -1], [-5, 8, 9, -8],
    [7, 4, -3, -7], [-3, -3, -6, 0], [-6, 1, 2, -7], [5, 6, 7, -1],
    [6, 9, 3, -5], [-3, -1, 4, -4], [8, -6, -1, -1], [-5, 5, 0, -4],
    [-2, 12, -1, 9], [-15, -4, -4, 1], [-7, 5, 5, 3], [7, 1, 1, -5],
    [0, -2, -2, -1], [-3, 3, 5, 3], [0, -7, 2, 14], [2, -3, -7, -7],
    [3, -4, -7, -2], [-4, 4, 5, 3], [0, -5, 5, -9], [-4, 15, -2, -5],
    [5, 10, -1, -4], [5, -15, -7, -7], [3, -5, -6, 9], [3, 4, -3, -7],
    [3, -5, -5, -2], [3, -2, 2, -11], [-5, 5, 2, 1], [4, -1, -6, 7],
    [1, -4, 3, 0], [5, 6, -3, -4], [-7, -2, 0, -1], [10, -4, 5, 2],
    [4, 1, 2, 2], [4, 4, 4, -2], [-4, -8, 5, 0], [14, 5, 12, -9],
    [2, -2, -5, -3], [1, 1, 2, -4], [-4, -5, -1, 0], [-7, 1, -3, -4],
    [-5, 0, 2, -3], [-5, 5, 11, -9], [-5, 6, 2, 6], [6, 9, -1, -4],
    [3, 10, 7, 0], [-1, -3, 1, 0], [8, 4, 1, 2], [-13, 10, -9, -11],
    [-4, 7, -3, 0], [-4, 10, -6, -9], [-7, -4, 9, -3], [-11, -5, -7, 2],
    [9, -2, 4, -1], [-2, -7, -2, -2], [-3, 0, 5, 7], [-2, -4, -6, -4],
    [-15, 4, -3, -5], [-3, -8, -5, 4], [-2, 3, 7, 5], [-8, 7, -1, -14],
    [-3, 5, 0, -8], [4, -4, -1, 4], [3, -3, -9, -7], [-3, 1, 5, -3],
    [-3, 7, 5, -1], [2, -7, -11, 6], [1, -9, 5, -4], [4, -6, -3, 4],
    [5, 3, 9, 1], [-5, -2, -4, 10], [-1, -3, -6, 5], [3, -6, 5, 8],
    [3, -8, 7, 1], [5, 2, 10, -3], [-3, -2, 6, 0], [7, -3, 0, 1],
    [-1, 2, 8, 5], [6, 1, 0, 3], [10, 0, -2, 3], [4, 8, -9, 4],
    [2, 4, 0, -5], [4, 2, 7, 1], [2, 2, -2, -6], [12, -5, 1, -4],
    [-3, 8, 2, 10], [2, 4, -4, -11], [-1, 3, 7, 8], [3, 11, -6, 3],
    [-5, -10, 6, -12], [-2, 2, 6, 0], [4, -3, 1, 0], [-2, 1, -3, -10],
];

/// The frozen 256-pair sampling pattern.
pub fn brief_pattern() -> &'static [[i8; 4]; 256] {
    &PATTERN
}

/// Compute the rotated BRIEF descriptor for one keypoint.
///
/// Both offsets of every pair are rotated by `kp.angle` and rounded to the
/// pixel grid before sampling; a sample landing outside the image is an
/// error (the detector border margin normally prevents this).
pub fn compute_brief(
    img: &GrayImage,
    kp: &Keypoint,
    pattern: &[[i8; 4]; 256],
) -> Result<BinaryDescriptor, FeatureError> {
    let cx = math::round(kp.position.x) as i64;
    let cy = math::round(kp.position.y) as i64;
    let cos_a = math::cos(kp.angle);
    let sin_a = math::sin(kp.angle);
    let (w, h) = (img.width() as i64, img.height() as i64);

    let mut desc = BinaryDescriptor::zeros(BRIEF_BITS);
    for (k, pair) in pattern.iter().enumerate() {
        let (ax, ay) = rotate_offset(pair[0] as f64, pair[1] as f64, cos_a, sin_a);
        let (bx, by) = rotate_offset(pair[2] as f64, pair[3] as f64, cos_a, sin_a);
        let (xa, ya) = (cx + ax, cy + ay);
        let (xb, yb) = (cx + bx, cy + by);
        if xa < 0 || ya < 0 || xa >= w || ya >= h || xb < 0 || yb < 0 || xb >= w || yb >= h {
            return Err(FeatureError::BorderViolation);
        }
        let ia = img.get(xa as u32, ya as u32);
        let ib = img.get(xb as u32, yb as u32);
        if ia < ib {
            desc.set_bit(k, true);
        }
    }
    Ok(desc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_orientation, detect_keypoints_with_margin};
    use crate::image::Point2;
    use alloc::vec::Vec;

    fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> u32 {
        a.words()
            .iter()
            .zip(b.words().iter())
            .map(|(x, y)| (x ^ y).count_ones())
            .sum()
    }

    /// Blocky random texture: sharp corners everywhere, stable under the
    /// bilinear resampling a rotation applies.
    fn block_texture(side: u32, cell: u32) -> GrayImage {
        GrayImage::from_fn(side, side, |x, y| {
            let (bx, by) = (x / cell, y / cell);
            (((bx * 73 + by * 151) ^ (bx * by * 29 + 17)) % 256) as u8
        })
        .unwrap()
    }

    /// Rotate an image by `angle` around its center (inverse bilinear map).
    fn rotate_image(img: &GrayImage, angle: f64) -> GrayImage {
        let (w, h) = (img.width(), img.height());
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let (s, c) = (math::sin(angle), math::cos(angle));
        GrayImage::from_fn(w, h, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            // Inverse rotation maps output to input coordinates.
            let sx = c * dx + s * dy + cx;
            let sy = -s * dx + c * dy + cy;
            math::round(img.sample_bilinear(sx, sy)) as u8
        })
        .unwrap()
    }

    #[test]
    fn pattern_is_well_formed() {
        assert_eq!(PATTERN.len(), 256);
        for pair in PATTERN.iter() {
            for v in pair {
                assert!((-15..=15).contains(v));
            }
            assert!(
                (pair[0], pair[1]) != (pair[2], pair[3]),
                "degenerate pair {pair:?}"
            );
        }
    }

    #[test]
    fn descriptor_is_deterministic() {
        let img = block_texture(100, 7);
        let mut kp = Keypoint::new(50.0, 50.0);
        compute_orientation(&img, &mut kp, 15);
        let a = compute_brief(&img, &kp, brief_pattern()).unwrap();
        let b = compute_brief(&img, &kp, brief_pattern()).unwrap();
        assert_eq!(hamming(&a, &b), 0);
        assert_eq!(a.len(), BRIEF_BITS);
    }

    #[test]
    fn constant_patch_gives_all_zero() {
        let img = GrayImage::filled(64, 64, 99).unwrap();
        let kp = Keypoint::new(32.0, 32.0);
        let d = compute_brief(&img, &kp, brief_pattern()).unwrap();
        assert_eq!(d.count_ones(), 0, "ties must resolve to bit 0");
    }

    #[test]
    fn border_violation_is_an_error() {
        let img = GrayImage::filled(64, 64, 10).unwrap();
        let kp = Keypoint::new(2.0, 2.0);
        assert_eq!(
            compute_brief(&img, &kp, brief_pattern()),
            Err(FeatureError::BorderViolation)
        );
    }

    #[test]
    fn orientation_compensation_beats_none_at_15_degrees() {
        let img = block_texture(200, 6);
        let rot = rotate_image(&img, 15f64.to_radians());
        let (d_comp, d_none) = mean_hamming_for_rotation(&img, &rot, 15f64.to_radians());
        assert!(
            d_comp < d_none,
            "compensated {d_comp} not below uncompensated {d_none}"
        );
    }

    /// Mean compensated / uncompensated Hamming distances over keypoints of
    /// `img` re-described in `rot` (the image rotated by `angle`).
    fn mean_hamming_for_rotation(img: &GrayImage, rot: &GrayImage, angle: f64) -> (f64, f64) {
        let (w, h) = (img.width() as f64, img.height() as f64);
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let (s, c) = (math::sin(angle), math::cos(angle));
        let kps = detect_keypoints_with_margin(img, 20, 500, 45);
        assert!(kps.len() >= 100, "need >=100 keypoints, got {}", kps.len());
        let mut sum_comp = 0.0;
        let mut sum_none = 0.0;
        let mut n = 0;
        for kp in &kps {
            // Forward-rotate the keypoint position into the rotated image.
            let dx = kp.position.x - cx;
            let dy = kp.position.y - cy;
            let rx = c * dx - s * dy + cx;
            let ry = s * dx + c * dy + cy;
            if rx < 45.0 || ry < 45.0 || rx >= w - 45.0 || ry >= h - 45.0 {
                continue;
            }
            let mut kp0 = *kp;
            let mut kp1 = Keypoint {
                position: Point2::new(rx, ry),
                response: kp.response,
                angle: 0.0,
            };
            // Compensated: both angles from the intensity centroid.
            compute_orientation(img, &mut kp0, 15);
            compute_orientation(rot, &mut kp1, 15);
            let a = compute_brief(img, &kp0, brief_pattern()).unwrap();
            let b = compute_brief(rot, &kp1, brief_pattern()).unwrap();
            sum_comp += hamming(&a, &b) as f64;
            // Uncompensated: upright pattern on both sides.
            kp0.angle = 0.0;
            kp1.angle = 0.0;
            let a0 = compute_brief(img, &kp0, brief_pattern()).unwrap();
            let b0 = compute_brief(rot, &kp1, brief_pattern()).unwrap();
            sum_none += hamming(&a0, &b0) as f64;
            n += 1;
        }
        assert!(n >= 50, "too few in-bounds rotated keypoints: {n}");
        (sum_comp / n as f64, sum_none / n as f64)
    }

    #[test]
    fn rotation_covariance_over_standard_angles() {
        let img = block_texture(200, 6);
        for deg in [15.0f64, 30.0, 45.0] {
            let angle = deg.to_radians();
            let rot = rotate_image(&img, angle);
            let (d_comp, d_none) = mean_hamming_for_rotation(&img, &rot, angle);
            assert!(
                d_comp < d_none,
                "{deg} deg: compensated {d_comp} >= uncompensated {d_none}"
            );
        }
    }
}
