//! Core algorithms for projecting pre-annotated panorama labels into live
//! video frames.
//!
//! The crate is organized along the pipeline stages:
//!
//! 1. [`image`] – grayscale rasters, integral images and box means.
//! 2. [`features`] – FAST keypoints with intensity-centroid orientation,
//!    rotated BRIEF and the trainable boosted box-difference descriptor.
//! 3. [`matching`] – brute-force Hamming matching and grid motion statistics
//!    outlier filtering.
//! 4. [`homography`] – normalized DLT, RANSAC and a degeneracy-aware variant
//!    with local optimization.
//! 5. [`lac`] – k-means template segmentation, the local-area template cache,
//!    soft voting and the per-frame matching pipeline.
//! 6. [`topology`] – pairwise label distance/angle relations and polar
//!    refinement of projected labels.
//! 7. [`eval`] – synthetic warp sequences, ground-truth checks, inlier-rate
//!    benchmarks and drift metrics.
//!
//! The crate is `no_std` (with `alloc`); all file and image IO lives in the
//! companion CLI crate. Every operation is deterministic given its inputs and
//! seeds: float transcendentals go through `libm` so results are bit-stable
//! across platforms.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod eval;
pub mod features;
pub mod homography;
pub mod image;
pub mod lac;
pub mod matching;
pub mod topology;

pub(crate) mod linalg;
pub(crate) mod math;

pub use crate::image::{GrayImage, IntegralImage, Point2};
pub use crate::matching::MatchPair;
