//! Planar homography estimation.
//!
//! [`estimate_dlt`] implements the Hartley-normalized direct linear transform;
//! [`robust`] wraps it in RANSAC and a degeneracy-aware variant with local
//! optimization.

pub mod robust;

use alloc::vec::Vec;
use core::fmt;

use crate::image::Point2;
use crate::linalg::sym_eigen;
use crate::math;

pub use robust::{
    degensac, degensac_matches, inlier_rate, ransac, ransac_matches, EstimatorKind, RobustConfig,
    RobustEstimate,
};

/// 3x3 projective matrix mapping template coordinates to frame coordinates.
///
/// Stored row-major; normalized so the bottom-right entry is 1 when it is
/// nonzero, otherwise to unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomographyError {
    /// Fewer than the 4 correspondences a homography needs.
    TooFewCorrespondences { got: usize },
    /// The correspondence configuration does not determine a homography
    /// (collinear points, coincident points, rank-deficient design matrix).
    DegenerateConfiguration,
    /// A projected point maps to infinity (denominator below 1e-12).
    PointAtInfinity,
    /// No model with at least 4 inliers was found.
    NoConsensus,
    /// Matched index lists and keypoint lists disagree.
    IndexOutOfRange,
}

impl fmt::Display for HomographyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomographyError::TooFewCorrespondences { got } => {
                write!(f, "need at least 4 correspondences, got {got}")
            }
            HomographyError::DegenerateConfiguration => {
                write!(f, "degenerate correspondence configuration")
            }
            HomographyError::PointAtInfinity => write!(f, "point projects to infinity"),
            HomographyError::NoConsensus => write!(f, "no consensus model with 4 inliers"),
            HomographyError::IndexOutOfRange => write!(f, "match index out of keypoint range"),
        }
    }
}

impl core::error::Error for HomographyError {}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0],
        }
    }

    /// Build from row-major entries and normalize.
    pub fn from_rows(m: [f64; 9]) -> Self {
        Self { m }.normalized()
    }

    /// Raw row-major entries.
    pub fn entries(&self) -> &[f64; 9] {
        &self.m
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.m[row * 3 + col]
    }

    /// Scale so that `h22 == 1` when possible, else to unit Frobenius norm.
    pub fn normalized(&self) -> Self {
        let mut m = self.m;
        let h22 = m[8];
        if math::abs(h22) > 1e-12 {
            for v in m.iter_mut() {
                *v /= h22;
            }
        } else {
            let norm = math::sqrt(m.iter().map(|v| v * v).sum());
            if norm > 0.0 {
                for v in m.iter_mut() {
                    *v /= norm;
                }
            }
        }
        Self { m }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Inverse via the adjugate; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if math::abs(det) < 1e-300 {
            return None;
        }
        let m = &self.m;
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        let mut out = [0.0; 9];
        for (o, a) in out.iter_mut().zip(adj.iter()) {
            *o = a / det;
        }
        Some(Self { m: out }.normalized())
    }

    /// Composition: `self` applied after `other`.
    pub fn compose(&self, other: &Homography) -> Self {
        let a = &self.m;
        let b = &other.m;
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] =
                    a[r * 3] * b[c] + a[r * 3 + 1] * b[3 + c] + a[r * 3 + 2] * b[6 + c];
            }
        }
        Self { m: out }.normalized()
    }

    /// Project a point; errors when it maps to infinity.
    pub fn project(&self, p: Point2) -> Result<Point2, HomographyError> {
        let m = &self.m;
        let w = m[6] * p.x + m[7] * p.y + m[8];
        if math::abs(w) < 1e-12 {
            return Err(HomographyError::PointAtInfinity);
        }
        Ok(Point2::new(
            (m[0] * p.x + m[1] * p.y + m[2]) / w,
            (m[3] * p.x + m[4] * p.y + m[5]) / w,
        ))
    }
}

/// Project a point through a homography.
pub fn project_point(h: &Homography, p: Point2) -> Result<Point2, HomographyError> {
    h.project(p)
}

/// Relative Frobenius distance between two homographies, invariant to the
/// projective scale ambiguity (both are normalized to unit Frobenius norm and
/// sign-aligned first).
pub fn relative_frobenius_error(a: &Homography, b: &Homography) -> f64 {
    let na = unit_frobenius(a.m);
    let mut nb = unit_frobenius(b.m);
    let dot: f64 = na.iter().zip(nb.iter()).map(|(x, y)| x * y).sum();
    if dot < 0.0 {
        for v in nb.iter_mut() {
            *v = -*v;
        }
    }
    math::sqrt(
        na.iter()
            .zip(nb.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum(),
    )
}

fn unit_frobenius(mut m: [f64; 9]) -> [f64; 9] {
    let norm = math::sqrt(m.iter().map(|v| v * v).sum());
    if norm > 0.0 {
        for v in m.iter_mut() {
            *v /= norm;
        }
    }
    m
}

struct Normalizer {
    scale: f64,
    cx: f64,
    cy: f64,
}

impl Normalizer {
    /// Hartley normalization: centroid to the origin, mean distance sqrt(2).
    fn fit(points: &[Point2]) -> Option<Self> {
        let n = points.len() as f64;
        let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
        let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
        let mean_dist = points
            .iter()
            .map(|p| math::hypot(p.x - cx, p.y - cy))
            .sum::<f64>()
            / n;
        if mean_dist < 1e-12 {
            return None;
        }
        Some(Self {
            scale: core::f64::consts::SQRT_2 / mean_dist,
            cx,
            cy,
        })
    }

    fn apply(&self, p: Point2) -> Point2 {
        Point2::new(self.scale * (p.x - self.cx), self.scale * (p.y - self.cy))
    }

    /// Matrix form of the normalization.
    fn matrix(&self) -> [f64; 9] {
        [
            self.scale,
            0.0,
            -self.scale * self.cx,
            0.0,
            self.scale,
            -self.scale * self.cy,
            0.0,
            0.0,
            1.0,
        ]
    }

    /// Inverse of the normalization matrix.
    fn inverse_matrix(&self) -> [f64; 9] {
        [
            1.0 / self.scale,
            0.0,
            self.cx,
            0.0,
            1.0 / self.scale,
            self.cy,
            0.0,
            0.0,
            1.0,
        ]
    }
}

fn mat_mul(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = a[r * 3] * b[c] + a[r * 3 + 1] * b[3 + c] + a[r * 3 + 2] * b[6 + c];
        }
    }
    out
}

/// Estimate the homography `dst ~ H src` by the normalized DLT.
///
/// Solves for the smallest singular vector of the `2n x 9` design matrix via
/// the eigendecomposition of its 9x9 normal matrix. Exact on noiseless,
/// non-degenerate inputs.
pub fn estimate_dlt(src: &[Point2], dst: &[Point2]) -> Result<Homography, HomographyError> {
    let n = src.len();
    if n < 4 || dst.len() != n {
        return Err(HomographyError::TooFewCorrespondences { got: n.min(dst.len()) });
    }
    let norm_src = Normalizer::fit(src).ok_or(HomographyError::DegenerateConfiguration)?;
    let norm_dst = Normalizer::fit(dst).ok_or(HomographyError::DegenerateConfiguration)?;

    // Accumulate the normal matrix AᵀA of the 2n x 9 design matrix.
    let mut ata = [0.0f64; 81];
    let mut add_row = |row: &[f64; 9]| {
        for i in 0..9 {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..9 {
                ata[i * 9 + j] += row[i] * row[j];
            }
        }
    };
    for (s, d) in src.iter().zip(dst.iter()) {
        let s = norm_src.apply(*s);
        let d = norm_dst.apply(*d);
        add_row(&[-s.x, -s.y, -1.0, 0.0, 0.0, 0.0, d.x * s.x, d.x * s.y, d.x]);
        add_row(&[0.0, 0.0, 0.0, -s.x, -s.y, -1.0, d.y * s.x, d.y * s.y, d.y]);
    }

    let eig = sym_eigen(9, &ata);
    // A unique solution needs rank 8: the second-smallest singular value must
    // be clearly nonzero.
    let lambda_max = eig.values[8].max(1e-300);
    if eig.values[1] <= 1e-16 * lambda_max {
        return Err(HomographyError::DegenerateConfiguration);
    }
    let mut h_norm = [0.0f64; 9];
    for (i, h) in h_norm.iter_mut().enumerate() {
        *h = eig.vectors[i * 9];
    }

    let h = mat_mul(
        &norm_dst.inverse_matrix(),
        &mat_mul(&h_norm, &norm_src.matrix()),
    );
    let h = Homography { m: h }.normalized();
    if math::abs(h.determinant()) < 1e-12 {
        return Err(HomographyError::DegenerateConfiguration);
    }
    Ok(h)
}

/// Reprojection error of `src -> dst` under `h`; infinite when the point maps
/// to infinity.
pub fn reprojection_error(h: &Homography, src: Point2, dst: Point2) -> f64 {
    match h.project(src) {
        Ok(p) => p.distance(&dst),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// A random well-conditioned homography: mild rotation/scale/shear,
    /// bounded translation, small perspective terms.
    pub fn random_homography(rng: &mut impl Rng) -> Homography {
        let angle: f64 = rng.gen_range(-0.3..0.3);
        let scale: f64 = rng.gen_range(0.8..1.2);
        let shear: f64 = rng.gen_range(-0.1..0.1);
        let tx: f64 = rng.gen_range(-50.0..50.0);
        let ty: f64 = rng.gen_range(-50.0..50.0);
        let px: f64 = rng.gen_range(-2e-4..2e-4);
        let py: f64 = rng.gen_range(-2e-4..2e-4);
        let (s, c) = (math::sin(angle), math::cos(angle));
        Homography::from_rows([
            scale * c,
            -scale * s + shear,
            tx,
            scale * s,
            scale * c,
            ty,
            px,
            py,
            1.0,
        ])
    }
}
