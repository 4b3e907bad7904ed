//! Robust homography fitting over contaminated correspondences.
//!
//! [`ransac`] is the classic hypothesize-and-verify loop with an adaptive
//! iteration bound and a final least-squares refit. [`degensac`] shares the
//! identical sampling stream but additionally rejects degenerate (collinear)
//! minimal samples before fitting and locally optimizes the best model with a
//! shrinking inlier tolerance, so on the same seed it never returns a smaller
//! consensus set than [`ransac`].

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{estimate_dlt, reprojection_error, Homography, HomographyError};
use crate::features::Keypoint;
use crate::image::Point2;
use crate::matching::MatchPair;
use crate::math;

/// Which robust estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Ransac,
    Degensac,
}

/// Tuning knobs shared by both estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustConfig {
    /// Inlier threshold on the reprojection error, in pixels.
    pub reproj_tol: f64,
    /// Hard cap on hypothesis iterations.
    pub max_iter: usize,
    /// Desired probability of sampling at least one all-inlier minimal set;
    /// drives the adaptive early exit.
    pub confidence: f64,
    /// Seed for the deterministic sampling stream.
    pub seed: u64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            reproj_tol: 3.0,
            max_iter: 2000,
            confidence: 0.995,
            seed: 0,
        }
    }
}

/// A robust fit: the model, the per-correspondence inlier mask, and how many
/// hypothesis iterations ran before the loop exited.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustEstimate {
    pub homography: Homography,
    pub inlier_mask: Vec<bool>,
    pub iterations_used: usize,
}

impl RobustEstimate {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&b| b).count()
    }
}

/// Fraction of correspondences marked inlier; 0 for an empty mask.
pub fn inlier_rate(est: &RobustEstimate) -> f64 {
    if est.inlier_mask.is_empty() {
        return 0.0;
    }
    est.inlier_count() as f64 / est.inlier_mask.len() as f64
}

/// Number of iterations needed to draw an uncontaminated 4-sample with the
/// given confidence, assuming the given inlier ratio.
fn adaptive_bound(confidence: f64, inlier_ratio: f64, max_iter: usize) -> usize {
    if inlier_ratio <= 0.0 {
        return max_iter;
    }
    if inlier_ratio >= 1.0 {
        return 1;
    }
    let w4 = inlier_ratio.powi(4);
    if w4 >= 1.0 {
        return 1;
    }
    let denom = math::ln(1.0 - w4);
    if denom >= 0.0 {
        return max_iter;
    }
    let n = math::ceil(math::ln(1.0 - confidence) / denom);
    if !n.is_finite() || n >= max_iter as f64 {
        max_iter
    } else if n < 1.0 {
        1
    } else {
        n as usize
    }
}

fn consensus_mask(h: &Homography, src: &[Point2], dst: &[Point2], tol: f64) -> (Vec<bool>, usize) {
    let mut mask = vec![false; src.len()];
    let mut count = 0;
    for i in 0..src.len() {
        if reprojection_error(h, src[i], dst[i]) < tol {
            mask[i] = true;
            count += 1;
        }
    }
    (mask, count)
}

fn gather(points: &[Point2], indices: &[usize]) -> Vec<Point2> {
    indices.iter().map(|&i| points[i]).collect()
}

fn gather_mask(points: &[Point2], mask: &[bool]) -> Vec<Point2> {
    points
        .iter()
        .zip(mask.iter())
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect()
}

/// True when any 3 of the 4 sample points are (near-)collinear on either
/// side: triangle area below 1 px².
fn sample_is_degenerate(src: &[Point2], dst: &[Point2]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let area = |pts: &[Point2], t: &[usize; 3]| -> f64 {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        0.5 * math::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    };
    TRIPLES
        .iter()
        .any(|t| area(src, t) < 1.0 || area(dst, t) < 1.0)
}

/// Refit on the inliers of `mask`; returns the refit model with its own
/// consensus at `tol`, or `None` when the refit fails.
fn refit(
    src: &[Point2],
    dst: &[Point2],
    mask: &[bool],
    tol: f64,
) -> Option<(Homography, Vec<bool>, usize)> {
    let s = gather_mask(src, mask);
    let d = gather_mask(dst, mask);
    let h = estimate_dlt(&s, &d).ok()?;
    let (m, c) = consensus_mask(&h, src, dst, tol);
    Some((h, m, c))
}

/// Local optimization: iterate refits over a shrinking tolerance schedule
/// (2x, 1.5x, 1x the inlier threshold), evaluating the result at `tol`.
fn local_optimize(
    start_mask: &[bool],
    src: &[Point2],
    dst: &[Point2],
    tol: f64,
) -> Option<(Homography, Vec<bool>, usize)> {
    let mut best: Option<(Homography, Vec<bool>, usize)> = None;
    let mut mask = start_mask.to_vec();
    for factor in [2.0, 1.5, 1.0] {
        let wide = tol * factor;
        let s = gather_mask(src, &mask);
        let d = gather_mask(dst, &mask);
        if s.len() < 4 {
            break;
        }
        let Ok(h) = estimate_dlt(&s, &d) else { break };
        let (next_mask, _) = consensus_mask(&h, src, dst, wide);
        let (final_mask, final_count) = consensus_mask(&h, src, dst, tol);
        if best.as_ref().is_none_or(|(_, _, c)| final_count > *c) {
            best = Some((h, final_mask, final_count));
        }
        mask = next_mask;
    }
    best
}

fn run(
    src: &[Point2],
    dst: &[Point2],
    cfg: &RobustConfig,
    kind: EstimatorKind,
) -> Result<RobustEstimate, HomographyError> {
    let n = src.len();
    if n < 4 || dst.len() != n {
        return Err(HomographyError::TooFewCorrespondences { got: n.min(dst.len()) });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best_mask: Option<Vec<bool>> = None;
    let mut best_h = Homography::identity();
    let mut best_count = 0usize;
    let mut bound = cfg.max_iter.max(1);
    let mut iterations = 0usize;

    for iter in 0..cfg.max_iter.max(1) {
        if iter >= bound {
            break;
        }
        iterations = iter + 1;
        // Draw the sample unconditionally so both estimators consume the
        // identical random stream regardless of rejections.
        let idx = rand::seq::index::sample(&mut rng, n, 4).into_vec();
        let s = gather(src, &idx);
        let d = gather(dst, &idx);
        if kind == EstimatorKind::Degensac && sample_is_degenerate(&s, &d) {
            continue;
        }
        let Ok(h) = estimate_dlt(&s, &d) else {
            continue;
        };
        let (mask, count) = consensus_mask(&h, src, dst, cfg.reproj_tol);
        if count > best_count {
            best_count = count;
            best_h = h;
            best_mask = Some(mask);
            bound = adaptive_bound(cfg.confidence, count as f64 / n as f64, cfg.max_iter).max(1);
        }
    }

    let Some(best_mask) = best_mask else {
        return Err(HomographyError::NoConsensus);
    };
    if best_count < 4 {
        return Err(HomographyError::NoConsensus);
    }

    // Candidate models: the best minimal hypothesis, a plain refit on its
    // consensus set, and (degensac only) the locally optimized model. Keep
    // whichever has the largest consensus, never worse than the minimal fit.
    let mut final_h = best_h;
    let mut final_mask = best_mask.clone();
    let mut final_count = best_count;
    let mut consider = |cand: Option<(Homography, Vec<bool>, usize)>| {
        if let Some((h, m, c)) = cand {
            if c >= final_count {
                final_h = h;
                final_mask = m;
                final_count = c;
            }
        }
    };
    consider(refit(src, dst, &best_mask, cfg.reproj_tol));
    if kind == EstimatorKind::Degensac {
        consider(local_optimize(&best_mask, src, dst, cfg.reproj_tol));
    }

    Ok(RobustEstimate {
        homography: final_h,
        inlier_mask: final_mask,
        iterations_used: iterations,
    })
}

/// RANSAC over paired points (`dst[i] ~ H src[i]`).
pub fn ransac(
    src: &[Point2],
    dst: &[Point2],
    cfg: &RobustConfig,
) -> Result<RobustEstimate, HomographyError> {
    run(src, dst, cfg, EstimatorKind::Ransac)
}

/// Degeneracy-aware RANSAC with local optimization; same sampling stream as
/// [`ransac`] for a given seed.
pub fn degensac(
    src: &[Point2],
    dst: &[Point2],
    cfg: &RobustConfig,
) -> Result<RobustEstimate, HomographyError> {
    run(src, dst, cfg, EstimatorKind::Degensac)
}

fn match_points(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
) -> Result<(Vec<Point2>, Vec<Point2>), HomographyError> {
    let mut src = Vec::with_capacity(matches.len());
    let mut dst = Vec::with_capacity(matches.len());
    for m in matches {
        let t = template_kps
            .get(m.train_idx)
            .ok_or(HomographyError::IndexOutOfRange)?;
        let f = frame_kps
            .get(m.query_idx)
            .ok_or(HomographyError::IndexOutOfRange)?;
        src.push(t.position());
        dst.push(f.position());
    }
    Ok((src, dst))
}

/// [`ransac`] over keypoint matches; the model maps template to frame.
pub fn ransac_matches(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
    cfg: &RobustConfig,
) -> Result<RobustEstimate, HomographyError> {
    let (src, dst) = match_points(matches, frame_kps, template_kps)?;
    ransac(&src, &dst, cfg)
}

/// [`degensac`] over keypoint matches; the model maps template to frame.
pub fn degensac_matches(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
    cfg: &RobustConfig,
) -> Result<RobustEstimate, HomographyError> {
    let (src, dst) = match_points(matches, frame_kps, template_kps)?;
    degensac(&src, &dst, cfg)
}
