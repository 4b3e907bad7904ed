//! Boosted box-difference binary description.
//!
//! A weak learner thresholds the difference between the mean intensities of
//! two square boxes sampled relative to the keypoint. Training runs AdaBoost
//! over labeled patch pairs: each round picks the (box pair, threshold)
//! minimizing the weighted pair-disagreement, weights the samples by an
//! exponential loss with learning rate `gamma`, and finally all learners are
//! re-fit to a single common weight by a convex line search so the responses
//! binarize into a descriptor.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rotate_offset, BinaryDescriptor, FeatureError, Keypoint};
use crate::image::{compute_integral, GrayImage, IntegralImage, Point2};
use crate::math;

/// One thresholded box-difference test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeblidWeakLearner {
    /// First box center, as an offset from the patch center.
    pub p1: (i16, i16),
    /// Second box center, as an offset from the patch center.
    pub p2: (i16, i16),
    /// Box side length in pixels.
    pub s: u16,
    /// Decision threshold on the box-mean difference.
    pub threshold: f32,
    /// Learner weight; after training all learners share one value.
    pub alpha: f32,
}

/// An ordered set of weak learners sharing a canonical patch size.
#[derive(Debug, Clone, PartialEq)]
pub struct BeblidModel {
    pub learners: Vec<BeblidWeakLearner>,
    pub patch_side: u16,
    /// Learning rate the model was trained with (training-time parameter,
    /// kept for provenance).
    pub gamma: f64,
}

/// A labeled training pair: `label` is +1 when the two patches show the same
/// image structure, -1 otherwise.
#[derive(Debug, Clone)]
pub struct PatchPairSample {
    pub x: GrayImage,
    pub y: GrayImage,
    pub label: i8,
}

/// A candidate box pair for the training search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoxPairCandidate {
    pub p1: (i16, i16),
    pub p2: (i16, i16),
    pub s: u16,
}

/// Training output: the fitted model plus the loss value before any round
/// and after each round (so `loss_trace.len() == rounds + 1`).
#[derive(Debug, Clone)]
pub struct BeblidTraining {
    pub model: BeblidModel,
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainError {
    EmptySampleSet,
    /// Labels must include both +1 and -1.
    SingleClass,
    /// A label outside {-1, +1}.
    BadLabel,
    /// Round count must be at least 1.
    BadRoundCount,
    EmptyCandidatePool,
    /// Sample patches must all be square with one common side.
    PatchSizeMismatch,
    /// A candidate's boxes do not fit inside the canonical patch.
    InvalidCandidate,
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptySampleSet => write!(f, "empty training sample set"),
            TrainError::SingleClass => write!(f, "training samples contain only one class"),
            TrainError::BadLabel => write!(f, "sample label outside {{-1, +1}}"),
            TrainError::BadRoundCount => write!(f, "round count must be >= 1"),
            TrainError::EmptyCandidatePool => write!(f, "empty candidate pool"),
            TrainError::PatchSizeMismatch => write!(f, "inconsistent sample patch sizes"),
            TrainError::InvalidCandidate => write!(f, "candidate boxes exceed the patch"),
        }
    }
}

impl core::error::Error for TrainError {}

/// Box-difference feature: mean of the box at `p1` minus mean of the box at
/// `p2`, both offsets rotated by the keypoint angle and rounded to the grid.
pub fn beblid_feature(
    ii: &IntegralImage,
    kp: &Keypoint,
    wl: &BeblidWeakLearner,
) -> Result<f64, FeatureError> {
    let cx = math::round(kp.position.x);
    let cy = math::round(kp.position.y);
    let cos_a = math::cos(kp.angle);
    let sin_a = math::sin(kp.angle);
    let mut mean_at = |p: (i16, i16)| -> Result<f64, FeatureError> {
        let (ox, oy) = rotate_offset(p.0 as f64, p.1 as f64, cos_a, sin_a);
        let center = Point2::new(cx + ox as f64, cy + oy as f64);
        ii.box_mean(center, wl.s as u32)
            .map_err(|_| FeatureError::BorderViolation)
    };
    Ok(mean_at(wl.p1)? - mean_at(wl.p2)?)
}

/// Weak-learner response: +1 iff the feature value is at or below the
/// threshold (the boundary belongs to +1).
#[inline]
pub fn beblid_response(f_value: f64, threshold: f64) -> i8 {
    if f_value <= threshold {
        1
    } else {
        -1
    }
}

/// Compute the boosted descriptor: bit k is 1 iff learner k responds +1.
pub fn compute_beblid(
    ii: &IntegralImage,
    kp: &Keypoint,
    model: &BeblidModel,
) -> Result<BinaryDescriptor, FeatureError> {
    let mut desc = BinaryDescriptor::zeros(model.learners.len());
    for (k, wl) in model.learners.iter().enumerate() {
        let f = beblid_feature(ii, kp, wl)?;
        if beblid_response(f, wl.threshold as f64) == 1 {
            desc.set_bit(k, true);
        }
    }
    Ok(desc)
}

/// Per-size grid of valid box centers: stride 2, box fully inside the patch.
fn centers_for_size(patch_side: u16, s: u16) -> Vec<i16> {
    let half_box = (s / 2) as i16;
    let side = patch_side as i16;
    let half_patch = side / 2;
    let mut out = Vec::new();
    let mut c = half_box;
    while c + (s as i16 - half_box) <= side {
        out.push(c - half_patch);
        c += 2;
    }
    out
}

/// Exhaustive candidate pool: all ordered pairs of distinct grid centers for
/// each box size in {2, 4, 6, 8}.
pub fn default_candidate_pool(patch_side: u16) -> Vec<BoxPairCandidate> {
    let mut pool = Vec::new();
    for s in [2u16, 4, 6, 8] {
        let centers = centers_for_size(patch_side, s);
        for &c1x in &centers {
            for &c1y in &centers {
                for &c2x in &centers {
                    for &c2y in &centers {
                        if (c1x, c1y) == (c2x, c2y) {
                            continue;
                        }
                        pool.push(BoxPairCandidate {
                            p1: (c1x, c1y),
                            p2: (c2x, c2y),
                            s,
                        });
                    }
                }
            }
        }
    }
    pool
}

/// A deterministic uniform subsample of the exhaustive pool, without
/// duplicates. Falls back to the full pool when `count` covers it.
pub fn sampled_candidate_pool(patch_side: u16, count: usize, seed: u64) -> Vec<BoxPairCandidate> {
    let sizes = [2u16, 4, 6, 8];
    let centers: Vec<Vec<i16>> = sizes.iter().map(|&s| centers_for_size(patch_side, s)).collect();
    let total: usize = centers
        .iter()
        .map(|c| {
            let n = c.len() * c.len();
            n * (n - 1)
        })
        .sum();
    if count >= total {
        return default_candidate_pool(patch_side);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut pool = Vec::with_capacity(count);
    while pool.len() < count {
        let si = rng.gen_range(0..sizes.len());
        let cs = &centers[si];
        let p1 = (cs[rng.gen_range(0..cs.len())], cs[rng.gen_range(0..cs.len())]);
        let p2 = (cs[rng.gen_range(0..cs.len())], cs[rng.gen_range(0..cs.len())]);
        if p1 == p2 {
            continue;
        }
        let cand = BoxPairCandidate { p1, p2, s: sizes[si] };
        if seen.insert(cand) {
            pool.push(cand);
        }
    }
    pool
}

fn candidate_fits(patch_side: u16, c: &BoxPairCandidate) -> bool {
    let side = patch_side as i32;
    let half_patch = side / 2;
    let half_box = (c.s / 2) as i32;
    let s = c.s as i32;
    for p in [c.p1, c.p2] {
        for v in [p.0 as i32, p.1 as i32] {
            let lo = half_patch + v - half_box;
            if lo < 0 || lo + s > side {
                return false;
            }
        }
    }
    true
}

/// Feature value of a candidate on one canonical (upright) patch.
fn canonical_feature(ii: &IntegralImage, patch_side: u16, c: &BoxPairCandidate) -> f64 {
    let half = (patch_side / 2) as f64;
    let center = |p: (i16, i16)| Point2::new(half + p.0 as f64, half + p.1 as f64);
    // Candidates were validated against the patch, so the sums cannot fail.
    let m1 = ii.box_mean(center(c.p1), c.s as u32).unwrap();
    let m2 = ii.box_mean(center(c.p2), c.s as u32).unwrap();
    m1 - m2
}

/// Train a boosted box-difference model.
///
/// Each round scans every candidate with a full sweep over its observed
/// feature values as thresholds, keeping the (candidate, threshold) with the
/// lowest weighted pair-disagreement. The returned loss trace (exponential
/// pair loss under the per-round weights) is non-increasing by construction:
/// each round multiplies the loss by `2*sqrt(eps*(1-eps)) <= 1`.
pub fn train_beblid(
    samples: &[PatchPairSample],
    rounds: usize,
    gamma: f64,
    pool: &[BoxPairCandidate],
) -> Result<BeblidTraining, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptySampleSet);
    }
    if rounds < 1 {
        return Err(TrainError::BadRoundCount);
    }
    if pool.is_empty() {
        return Err(TrainError::EmptyCandidatePool);
    }
    for s in samples {
        if !matches!(s.label, -1 | 1) {
            return Err(TrainError::BadLabel);
        }
    }
    if samples.iter().all(|s| s.label == 1) || samples.iter().all(|s| s.label == -1) {
        return Err(TrainError::SingleClass);
    }
    let patch_side = samples[0].x.width();
    for s in samples {
        let square = |img: &GrayImage| img.width() == patch_side && img.height() == patch_side;
        if !square(&s.x) || !square(&s.y) {
            return Err(TrainError::PatchSizeMismatch);
        }
    }
    let patch_side = patch_side as u16;
    if pool.iter().any(|c| !candidate_fits(patch_side, c)) {
        return Err(TrainError::InvalidCandidate);
    }

    let n = samples.len();
    let labels: Vec<f64> = samples.iter().map(|s| s.label as f64).collect();

    // Feature cache: per candidate, the value on every x patch and y patch.
    let integrals: Vec<(IntegralImage, IntegralImage)> = samples
        .iter()
        .map(|s| (compute_integral(&s.x), compute_integral(&s.y)))
        .collect();
    let mut fx = vec![0.0f32; pool.len() * n];
    let mut fy = vec![0.0f32; pool.len() * n];
    for (ci, cand) in pool.iter().enumerate() {
        for (i, (ix, iy)) in integrals.iter().enumerate() {
            fx[ci * n + i] = canonical_feature(ix, patch_side, cand) as f32;
            fy[ci * n + i] = canonical_feature(iy, patch_side, cand) as f32;
        }
    }
    // Per candidate, the 2n feature events sorted ascending; an event toggles
    // one sample's pair-agreement as the threshold sweeps upward.
    let events: Vec<Vec<(f32, u32)>> = (0..pool.len())
        .map(|ci| {
            let mut ev: Vec<(f32, u32)> = (0..n)
                .map(|i| (fx[ci * n + i], i as u32))
                .chain((0..n).map(|i| (fy[ci * n + i], i as u32)))
                .collect();
            ev.sort_by(|a, b| a.0.total_cmp(&b.0));
            ev
        })
        .collect();

    let mut weights = vec![1.0f64 / n as f64; n];
    let mut margins = vec![0.0f64; n];
    let mut learners: Vec<BeblidWeakLearner> = Vec::with_capacity(rounds);
    let mut agreements: Vec<Vec<f64>> = Vec::with_capacity(rounds);
    let mut loss_trace = Vec::with_capacity(rounds + 1);
    loss_trace.push(n as f64);

    for _ in 0..rounds {
        // Pick the candidate/threshold with minimal weighted disagreement.
        let mut best_eps = f64::INFINITY;
        let mut best_cand = 0usize;
        let mut best_thresh = 0.0f32;
        for (ci, ev) in events.iter().enumerate() {
            // Below every threshold both responses are -1: agreement +1.
            let mut err: f64 = weights
                .iter()
                .zip(labels.iter())
                .filter(|(_, &l)| l < 0.0)
                .map(|(w, _)| w)
                .sum();
            // +1 while the sample currently agrees (H_i = +1).
            let mut agree = vec![true; n];
            let mut j = 0;
            while j < ev.len() {
                let v = ev[j].0;
                // Toggle every sample whose event shares this value before
                // evaluating, so the threshold test f <= T is inclusive.
                while j < ev.len() && ev[j].0 == v {
                    let i = ev[j].1 as usize;
                    agree[i] = !agree[i];
                    let agrees_label = agree[i] == (labels[i] > 0.0);
                    if agrees_label {
                        err -= weights[i];
                    } else {
                        err += weights[i];
                    }
                    j += 1;
                }
                if err < best_eps {
                    best_eps = err;
                    best_cand = ci;
                    best_thresh = v;
                }
            }
        }

        let eps = best_eps.clamp(1e-10, 1.0 - 1e-10);
        let alpha = math::ln((1.0 - eps) / eps) / (2.0 * gamma);
        let cand = pool[best_cand];
        learners.push(BeblidWeakLearner {
            p1: cand.p1,
            p2: cand.p2,
            s: cand.s,
            threshold: best_thresh,
            alpha: alpha as f32,
        });

        // Agreement of the chosen learner on every pair, then re-weight.
        let mut h = vec![0.0f64; n];
        for i in 0..n {
            let hx = beblid_response(fx[best_cand * n + i] as f64, best_thresh as f64) as f64;
            let hy = beblid_response(fy[best_cand * n + i] as f64, best_thresh as f64) as f64;
            h[i] = hx * hy;
        }
        let mut wsum = 0.0;
        for i in 0..n {
            weights[i] *= math::exp(-gamma * alpha * labels[i] * h[i]);
            wsum += weights[i];
        }
        for w in weights.iter_mut() {
            *w /= wsum;
        }
        for i in 0..n {
            margins[i] += alpha * h[i];
        }
        loss_trace.push(
            (0..n)
                .map(|i| math::exp(-gamma * labels[i] * margins[i]))
                .sum(),
        );
        agreements.push(h);
    }

    // Re-fit one common weight shared by all learners: minimize the convex
    // exponential pair loss over alpha >= 0 by ternary search.
    let vote_sums: Vec<f64> = (0..n)
        .map(|i| agreements.iter().map(|h| h[i]).sum())
        .collect();
    let loss_at = |alpha: f64| -> f64 {
        (0..n)
            .map(|i| math::exp(-gamma * alpha * labels[i] * vote_sums[i]))
            .sum()
    };
    let (mut lo, mut hi) = (0.0f64, 64.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if loss_at(m1) <= loss_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let common_alpha = 0.5 * (lo + hi);
    for wl in learners.iter_mut() {
        wl.alpha = common_alpha as f32;
    }

    Ok(BeblidTraining {
        model: BeblidModel {
            learners,
            patch_side,
            gamma,
        },
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn wl(p1: (i16, i16), p2: (i16, i16), s: u16) -> BeblidWeakLearner {
        BeblidWeakLearner {
            p1,
            p2,
            s,
            threshold: 0.0,
            alpha: 1.0,
        }
    }

    #[test]
    fn feature_on_constant_image_is_zero() {
        let ii = compute_integral(&GrayImage::filled(64, 64, 120).unwrap());
        let kp = Keypoint::new(32.0, 32.0);
        for learner in [wl((-8, 0), (8, 0), 4), wl((0, -6), (5, 5), 2), wl((-3, 3), (3, -3), 8)] {
            assert_eq!(beblid_feature(&ii, &kp, &learner).unwrap(), 0.0);
        }
    }

    #[test]
    fn feature_on_half_split_image() {
        // Left half 100, right half 0; boxes entirely inside each half.
        let img = GrayImage::from_fn(64, 64, |x, _| if x < 32 { 100 } else { 0 }).unwrap();
        let ii = compute_integral(&img);
        let kp = Keypoint::new(32.0, 32.0);
        let f = beblid_feature(&ii, &kp, &wl((-8, 0), (8, 0), 4)).unwrap();
        assert_eq!(f, 100.0);
        // Swapping the boxes negates the feature.
        let g = beblid_feature(&ii, &kp, &wl((8, 0), (-8, 0), 4)).unwrap();
        assert_eq!(g, -100.0);
    }

    #[test]
    fn feature_with_unit_boxes_is_pixel_difference() {
        let img = GrayImage::from_fn(48, 48, |x, y| ((x * 7 + y * 13) % 256) as u8).unwrap();
        let ii = compute_integral(&img);
        let kp = Keypoint::new(24.0, 24.0);
        for (p1, p2) in [((-5, 2), (3, -4)), ((0, -7), (6, 6)), ((-1, -1), (1, 1))] {
            let f = beblid_feature(&ii, &kp, &wl(p1, p2, 1)).unwrap();
            let a = img.get((24 + p1.0) as u32, (24 + p1.1) as u32) as f64;
            let b = img.get((24 + p2.0) as u32, (24 + p2.1) as u32) as f64;
            assert_eq!(f, a - b);
        }
    }

    #[test]
    fn feature_rotates_offsets() {
        // At 90 degrees, offset (x, y) lands where (-y, x) sits upright.
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 5) ^ (y * 11)) as u8).unwrap();
        let ii = compute_integral(&img);
        let upright = Keypoint::new(32.0, 32.0);
        let mut rotated = Keypoint::new(32.0, 32.0);
        rotated.angle = core::f64::consts::FRAC_PI_2;
        let f_rot = beblid_feature(&ii, &rotated, &wl((5, 0), (-3, 2), 2)).unwrap();
        let f_up = beblid_feature(&ii, &upright, &wl((0, 5), (-2, -3), 2)).unwrap();
        assert_eq!(f_rot, f_up);
    }

    #[test]
    fn feature_out_of_bounds_is_error() {
        let ii = compute_integral(&GrayImage::filled(32, 32, 10).unwrap());
        let kp = Keypoint::new(2.0, 2.0);
        assert_eq!(
            beblid_feature(&ii, &kp, &wl((-8, 0), (8, 0), 4)),
            Err(FeatureError::BorderViolation)
        );
    }

    #[test]
    fn response_boundary_belongs_to_plus_one() {
        assert_eq!(beblid_response(5.0, 5.0), 1);
        assert_eq!(beblid_response(5.5, 5.0), -1);
        assert_eq!(beblid_response(-255.0, 0.0), 1);
    }

    /// Patches whose left/right halves carry the class signal: class A is
    /// bright-left, class B is bright-right, plus mild deterministic noise.
    fn classed_patch(class: bool, seed: u64, side: u32) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(side, side, |x, _| {
            let base = if (x < side / 2) == class { 200 } else { 40 };
            (base + rng.gen_range(0..20)) as u8
        })
    }

    fn separable_samples() -> Vec<PatchPairSample> {
        let mut samples = Vec::new();
        for i in 0..12u64 {
            let class = i % 2 == 0;
            // Positive pair: both patches from the same class.
            samples.push(PatchPairSample {
                x: classed_patch(class, 100 + i, 16),
                y: classed_patch(class, 200 + i, 16),
                label: 1,
            });
            // Negative pair: opposite classes.
            samples.push(PatchPairSample {
                x: classed_patch(class, 300 + i, 16),
                y: classed_patch(!class, 400 + i, 16),
                label: -1,
            });
        }
        samples
    }

    /// Training pair accuracy of a model: fraction of samples whose learner
    /// response product (majority over learners) matches the label.
    fn pair_accuracy(model: &BeblidModel, samples: &[PatchPairSample]) -> f64 {
        let half = (model.patch_side / 2) as f64;
        let kp = Keypoint::new(half, half);
        let mut hits = 0;
        for s in samples {
            let dx = compute_beblid(&compute_integral(&s.x), &kp, model).unwrap();
            let dy = compute_beblid(&compute_integral(&s.y), &kp, model).unwrap();
            let mut vote = 0i32;
            for k in 0..dx.len() {
                vote += if dx.get_bit(k) == dy.get_bit(k) { 1 } else { -1 };
            }
            let predicted: i8 = if vote >= 0 { 1 } else { -1 };
            if predicted == s.label {
                hits += 1;
            }
        }
        hits as f64 / samples.len() as f64
    }

    #[test]
    fn separable_dataset_single_round_is_exact() {
        let samples = separable_samples();
        // The left-vs-right box difference separates the classes; the pool
        // carries that candidate plus uninformative distractors.
        let pool = vec![
            BoxPairCandidate { p1: (0, -4), p2: (0, 4), s: 2 },
            BoxPairCandidate { p1: (-4, 0), p2: (4, 0), s: 4 },
            BoxPairCandidate { p1: (-2, -2), p2: (2, 2), s: 2 },
        ];

        // Exhaustive sweep oracle: some (candidate, threshold) must reach
        // zero disagreement before we trust training to find one.
        let mut separable = false;
        for cand in &pool {
            let feats: Vec<(f64, f64, i8)> = samples
                .iter()
                .map(|s| {
                    let ix = compute_integral(&s.x);
                    let iy = compute_integral(&s.y);
                    (
                        canonical_feature(&ix, 16, cand),
                        canonical_feature(&iy, 16, cand),
                        s.label,
                    )
                })
                .collect();
            let mut thresholds: Vec<f64> =
                feats.iter().flat_map(|(a, b, _)| [*a, *b]).collect();
            thresholds.sort_by(f64::total_cmp);
            for t in &thresholds {
                let ok = feats.iter().all(|(a, b, l)| {
                    beblid_response(*a, *t) * beblid_response(*b, *t) == *l
                });
                if ok {
                    separable = true;
                }
            }
        }
        assert!(separable, "oracle found no separating candidate");

        let out = train_beblid(&samples, 1, 1.0, &pool).unwrap();
        assert_eq!(out.model.learners.len(), 1);
        assert_eq!(pair_accuracy(&out.model, &samples), 1.0);
        assert!(out.model.learners[0].alpha > 0.0);
    }

    /// Noisy but learnable pairs: positives are the same patch re-noised,
    /// negatives are independent patches.
    fn noisy_samples(count: usize, side: u32, seed: u64) -> Vec<PatchPairSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..count {
            let base_seed: u64 = rng.gen();
            let blocks = |s: u64| {
                let mut brng = ChaCha8Rng::seed_from_u64(s);
                let levels: Vec<u8> = (0..16).map(|_| brng.gen()).collect();
                GrayImage::from_fn(side, side, move |x, y| {
                    let b = ((y / (side / 4)).min(3) * 4 + (x / (side / 4)).min(3)) as usize;
                    levels[b]
                })
            };
            let noisy = |img: &GrayImage, nrng: &mut ChaCha8Rng| {
                GrayImage::from_fn(side, side, |x, y| {
                    let v = img.get(x, y) as i32 + nrng.gen_range(-15..=15);
                    v.clamp(0, 255) as u8
                })
            };
            let base = blocks(base_seed);
            if i % 2 == 0 {
                let y = noisy(&base, &mut rng);
                out.push(PatchPairSample { x: base, y, label: 1 });
            } else {
                let other = blocks(base_seed.wrapping_add(7919));
                out.push(PatchPairSample { x: base, y: other, label: -1 });
            }
        }
        out
    }

    #[test]
    fn loss_trace_is_non_increasing() {
        let samples = noisy_samples(60, 16, 31);
        let pool = sampled_candidate_pool(16, 40, 7);
        let out = train_beblid(&samples, 8, 1.0, &pool).unwrap();
        assert_eq!(out.loss_trace.len(), 9);
        assert_eq!(out.loss_trace[0], 60.0);
        for pair in out.loss_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12),
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn training_discriminates_held_out_pairs() {
        let train = noisy_samples(80, 16, 41);
        let held_out = noisy_samples(40, 16, 43);
        let pool = sampled_candidate_pool(16, 60, 11);
        let out = train_beblid(&train, 16, 1.0, &pool).unwrap();
        let half = (out.model.patch_side / 2) as f64;
        let kp = Keypoint::new(half, half);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for s in &held_out {
            let dx = compute_beblid(&compute_integral(&s.x), &kp, &out.model).unwrap();
            let dy = compute_beblid(&compute_integral(&s.y), &kp, &out.model).unwrap();
            let dist: u32 = dx
                .words()
                .iter()
                .zip(dy.words().iter())
                .map(|(a, b)| (a ^ b).count_ones())
                .sum();
            if s.label == 1 {
                pos.push(dist as f64);
            } else {
                neg.push(dist as f64);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&pos) < mean(&neg),
            "positive pairs not closer: {} vs {}",
            mean(&pos),
            mean(&neg)
        );
    }

    #[test]
    fn training_error_conditions() {
        let samples = separable_samples();
        let pool = vec![BoxPairCandidate { p1: (-4, 0), p2: (4, 0), s: 2 }];
        assert_eq!(
            train_beblid(&[], 4, 1.0, &pool).unwrap_err(),
            TrainError::EmptySampleSet
        );
        assert_eq!(
            train_beblid(&samples, 0, 1.0, &pool).unwrap_err(),
            TrainError::BadRoundCount
        );
        assert_eq!(
            train_beblid(&samples, 4, 1.0, &[]).unwrap_err(),
            TrainError::EmptyCandidatePool
        );
        let single: Vec<PatchPairSample> = samples
            .iter()
            .filter(|s| s.label == 1)
            .cloned()
            .collect();
        assert_eq!(
            train_beblid(&single, 4, 1.0, &pool).unwrap_err(),
            TrainError::SingleClass
        );
        let oversized = vec![BoxPairCandidate { p1: (-9, 0), p2: (4, 0), s: 4 }];
        assert_eq!(
            train_beblid(&samples, 4, 1.0, &oversized).unwrap_err(),
            TrainError::InvalidCandidate
        );
    }

    #[test]
    fn compute_beblid_constant_image_bit_rule() {
        let ii = compute_integral(&GrayImage::filled(40, 40, 128).unwrap());
        let kp = Keypoint::new(20.0, 20.0);
        let mut learners = Vec::new();
        for t in [-3.0f32, -0.5, 0.0, 0.5, 3.0] {
            learners.push(BeblidWeakLearner {
                p1: (-4, 0),
                p2: (4, 0),
                s: 2,
                threshold: t,
                alpha: 1.0,
            });
        }
        let model = BeblidModel { learners: learners.clone(), patch_side: 32, gamma: 1.0 };
        let d = compute_beblid(&ii, &kp, &model).unwrap();
        for (k, wl) in learners.iter().enumerate() {
            assert_eq!(d.get_bit(k), 0.0 <= wl.threshold, "bit {k}");
        }
        // Determinism.
        assert_eq!(d, compute_beblid(&ii, &kp, &model).unwrap());
    }

    #[test]
    fn default_pool_is_exhaustive_and_valid() {
        let pool = default_candidate_pool(32);
        // Grid sizes per box size: 16, 15, 14, 13 centers per axis.
        let expected: usize = [16usize, 15, 14, 13]
            .iter()
            .map(|n| {
                let c = n * n;
                c * (c - 1)
            })
            .sum();
        assert_eq!(pool.len(), expected);
        for c in &pool {
            assert!(candidate_fits(32, c), "candidate {c:?} does not fit");
        }
    }

    #[test]
    fn sampled_pool_is_deterministic_and_unique() {
        let a = sampled_candidate_pool(32, 500, 9);
        let b = sampled_candidate_pool(32, 500, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        let unique: BTreeSet<_> = a.iter().collect();
        assert_eq!(unique.len(), 500);
        for c in &a {
            assert!(candidate_fits(32, c), "{}", format!("{c:?}"));
        }
        let other = sampled_candidate_pool(32, 500, 10);
        assert_ne!(a, other);
    }
}
