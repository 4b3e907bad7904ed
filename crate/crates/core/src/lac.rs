//! Locally adaptive clustering of panorama labels and the per-frame
//! matching pipeline built on it.
//!
//! A panorama annotated with labels is clustered by label coordinates; each
//! cluster becomes a fixed-size template crop with precomputed features.
//! At runtime a short history of recently used templates (the local area)
//! narrows which templates each frame is scored against, soft voting picks
//! the winner by history-weighted match counts, and the robust homography
//! against the winner projects its labels into frame coordinates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::{
    brief_pattern, compute_beblid, compute_brief, detect_keypoints_with_margin, BeblidModel,
    BinaryDescriptor, Keypoint,
};
use crate::homography::{
    degensac_matches, ransac_matches, EstimatorKind, Homography, RobustConfig,
};
use crate::image::{compute_integral, GrayImage, Point2};
use crate::matching::{brute_force_match, gms_filter, GmsConfig, MatchPair};
use crate::math;

/// Default length of the local-area template history.
pub const HISTORY_LEN: usize = 3;

/// An annotated point of interest in panorama coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub id: u64,
    pub name: String,
    pub position: Point2,
}

/// Axis-aligned panorama sub-rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    /// Whether a point lies on the rect's pixel grid (inclusive of the last
    /// pixel row/column).
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x as f64
            && p.x <= (self.x + self.w - 1) as f64
            && p.y >= self.y as f64
            && p.y <= (self.y + self.h - 1) as f64
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }
}

/// One cluster's template: the panorama crop rectangle, its member labels,
/// and the features precomputed from the crop (keypoints relative to the
/// rect origin).
#[derive(Debug, Clone)]
pub struct Template {
    pub index: usize,
    pub rect: Rect,
    /// Cluster centroid in panorama coordinates.
    pub center: Point2,
    /// Member label ids, ascending.
    pub labels: Vec<u64>,
    /// Member label positions relative to the rect origin.
    pub label_positions: BTreeMap<u64, Point2>,
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<BinaryDescriptor>,
}

/// Ring of the template indices chosen for the most recent frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalArea {
    history: Vec<usize>,
    capacity: usize,
}

impl LocalArea {
    pub fn new(capacity: usize) -> Self {
        Self {
            history: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first, most recent last.
    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, template: usize) {
        self.history.push(template);
        if self.history.len() > self.capacity {
            self.history.remove(0);
        }
    }

    /// How many of the remembered frames used this template.
    pub fn frequency(&self, template: usize) -> usize {
        self.history.iter().filter(|&&t| t == template).count()
    }

    /// Position of the most recent use (higher = more recent).
    pub fn last_use(&self, template: usize) -> Option<usize> {
        self.history.iter().rposition(|&t| t == template)
    }
}

impl Default for LocalArea {
    fn default() -> Self {
        Self::new(HISTORY_LEN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LacError {
    EmptyLabels,
    /// `k` must be between 1 and the number of distinct points.
    BadK { k: usize, distinct: usize },
    /// Template size must be positive and fit inside the panorama.
    BadTemplateSize,
    /// A cluster's labels span more than the template size; raise the
    /// template size or the cluster count.
    InfeasibleCluster { cluster: usize },
    LabelOutsidePanorama { id: u64 },
    DuplicateLabelId { id: u64 },
}

impl fmt::Display for LacError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LacError::EmptyLabels => write!(f, "no labels provided"),
            LacError::BadK { k, distinct } => {
                write!(f, "k = {k} outside 1..={distinct} distinct points")
            }
            LacError::BadTemplateSize => write!(f, "template size must fit the panorama"),
            LacError::InfeasibleCluster { cluster } => write!(
                f,
                "cluster {cluster} labels span more than the template size"
            ),
            LacError::LabelOutsidePanorama { id } => {
                write!(f, "label {id} lies outside the panorama")
            }
            LacError::DuplicateLabelId { id } => write!(f, "duplicate label id {id}"),
        }
    }
}

impl core::error::Error for LacError {}

/// K-means output: centers, per-point assignment, and the within-cluster
/// sum-of-squares after each assignment pass (non-increasing).
#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub centers: Vec<Point2>,
    pub assignment: Vec<usize>,
    pub objective_trace: Vec<f64>,
}

fn nearest_center(p: Point2, centers: &[Point2]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = p.distance_sq(center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Deterministic for a given seed. Empty clusters are re-seeded to the point
/// farthest from its current center, which cannot increase the objective.
pub fn kmeans(
    points: &[Point2],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KmeansResult, LacError> {
    let distinct: BTreeSet<(u64, u64)> = points
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    if k < 1 || k > distinct.len() {
        return Err(LacError::BadK { k, distinct: distinct.len() });
    }
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: start uniformly, then weight by squared distance
    // to the nearest chosen center.
    let mut centers: Vec<Point2> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)]);
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest_center(*p, &centers).1).collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                r -= d;
                if r <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All points coincide with centers; cannot happen while
            // distinct >= k, but stay total anyway.
            rng.gen_range(0..n)
        };
        centers.push(points[next]);
    }

    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter.max(1) {
        let mut new_assignment = Vec::with_capacity(n);
        let mut objective = 0.0;
        for p in points {
            let (c, d) = nearest_center(*p, &centers);
            new_assignment.push(c);
            objective += d;
        }
        if new_assignment == assignment {
            converged = true;
            break;
        }
        assignment = new_assignment;
        trace.push(objective);

        // Means update.
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (p, &c) in points.iter().zip(assignment.iter()) {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
        for (c, s) in sums.iter().enumerate() {
            if s.2 > 0 {
                centers[c] = Point2::new(s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        // Re-seed empty clusters to the globally farthest point. The donor
        // cluster always keeps members: a singleton sits on its own mean.
        for c in 0..k {
            if sums[c].2 > 0 {
                continue;
            }
            let mut far = (0usize, -1.0f64);
            for (i, p) in points.iter().enumerate() {
                let d = p.distance_sq(&centers[assignment[i]]);
                if d > far.1 {
                    far = (i, d);
                }
            }
            centers[c] = points[far.0];
            assignment[far.0] = c;
        }
    }
    if !converged {
        // The cap cut the loop after a means update; restore the invariant
        // that every point sits with its nearest center.
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest_center(*p, &centers);
            assignment[i] = c;
            objective += d;
        }
        trace.push(objective);
    }

    Ok(KmeansResult { centers, assignment, objective_trace: trace })
}

/// Within-cluster sum-of-squares for `k` in `1..=max_k`, for elbow
/// inspection when choosing the cluster count.
pub fn kmeans_elbow_scan(
    points: &[Point2],
    max_k: usize,
    max_iter: usize,
    seed: u64,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for k in 1..=max_k {
        match kmeans(points, k, max_iter, seed) {
            Ok(res) => out.push((k, *res.objective_trace.last().unwrap())),
            Err(_) => break,
        }
    }
    out
}

/// Default cluster count: one cluster per four labels.
pub fn default_k(label_count: usize) -> usize {
    label_count.div_ceil(4).max(1)
}

/// Default template size: the panorama divided into a near-square grid of
/// `k` tiles, with a 256 px floor per axis.
pub fn default_template_size(pano_w: u32, pano_h: u32, k: usize) -> (u32, u32) {
    let g = (math::ceil(math::sqrt(k as f64)) as u32).max(1);
    let w = (pano_w / g).max(256).min(pano_w);
    let h = (pano_h / g).max(256).min(pano_h);
    (w, h)
}

/// Feature extraction settings shared by template preparation and per-frame
/// processing.
#[derive(Debug, Clone)]
pub struct FeatureConfig {
    pub fast_threshold: u8,
    pub max_keypoints: usize,
    pub border_margin: usize,
    /// Descriptor family: the boosted model when present, else the fixed
    /// 256-bit pattern.
    pub beblid: Option<BeblidModel>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fast_threshold: 20,
            max_keypoints: 2500,
            border_margin: 31,
            beblid: None,
        }
    }
}

/// Template preparation settings.
#[derive(Debug, Clone, Default)]
pub struct PrepareConfig {
    pub feature: FeatureConfig,
    pub seed: u64,
    pub kmeans_max_iter: usize,
}

impl PrepareConfig {
    fn kmeans_iters(&self) -> usize {
        if self.kmeans_max_iter == 0 {
            50
        } else {
            self.kmeans_max_iter
        }
    }
}

/// Detect and describe keypoints; keypoints whose descriptor window leaves
/// the image are dropped so the two lists stay aligned.
pub fn detect_and_describe(
    img: &GrayImage,
    cfg: &FeatureConfig,
) -> (Vec<Keypoint>, Vec<BinaryDescriptor>) {
    let kps = detect_keypoints_with_margin(img, cfg.fast_threshold, cfg.max_keypoints, cfg.border_margin);
    let mut kept = Vec::with_capacity(kps.len());
    let mut descriptors = Vec::with_capacity(kps.len());
    match &cfg.beblid {
        Some(model) => {
            let ii = compute_integral(img);
            for kp in kps {
                if let Ok(d) = compute_beblid(&ii, &kp, model) {
                    kept.push(kp);
                    descriptors.push(d);
                }
            }
        }
        None => {
            for kp in kps {
                if let Ok(d) = compute_brief(img, &kp, brief_pattern()) {
                    kept.push(kp);
                    descriptors.push(d);
                }
            }
        }
    }
    (kept, descriptors)
}

/// Feasible rect start along one axis: centered on the centroid, clamped to
/// the panorama, shifted only as far as needed to cover every member label.
fn rect_start(
    centroid: f64,
    min_label: f64,
    max_label: f64,
    size: u32,
    pano: u32,
) -> Option<u32> {
    let size_i = size as i64;
    let lo = (math::ceil(max_label) as i64 - (size_i - 1)).max(0);
    let hi = (math::floor(min_label) as i64).min(pano as i64 - size_i);
    if lo > hi {
        return None;
    }
    let centered = math::round(centroid - size as f64 / 2.0) as i64;
    Some(centered.clamp(lo, hi) as u32)
}

/// Cluster labels, cut one fixed-size template per cluster, and precompute
/// its features.
pub fn segment_templates(
    panorama: &GrayImage,
    labels: &[Label],
    k: usize,
    template_size: (u32, u32),
    cfg: &PrepareConfig,
) -> Result<Vec<Template>, LacError> {
    if labels.is_empty() {
        return Err(LacError::EmptyLabels);
    }
    let (pw, ph) = (panorama.width(), panorama.height());
    let (tw, th) = template_size;
    if tw == 0 || th == 0 || tw > pw || th > ph {
        return Err(LacError::BadTemplateSize);
    }
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l.id) {
            return Err(LacError::DuplicateLabelId { id: l.id });
        }
        let p = l.position;
        if !(p.x >= 0.0 && p.x <= (pw - 1) as f64 && p.y >= 0.0 && p.y <= (ph - 1) as f64) {
            return Err(LacError::LabelOutsidePanorama { id: l.id });
        }
    }

    let points: Vec<Point2> = labels.iter().map(|l| l.position).collect();
    let clustering = kmeans(&points, k, cfg.kmeans_iters(), cfg.seed)?;

    let mut templates = Vec::with_capacity(k);
    for cluster in 0..k {
        let members: Vec<&Label> = labels
            .iter()
            .zip(clustering.assignment.iter())
            .filter(|(_, &c)| c == cluster)
            .map(|(l, _)| l)
            .collect();
        if members.is_empty() {
            return Err(LacError::InfeasibleCluster { cluster });
        }
        let centroid = clustering.centers[cluster];
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&Point2) -> f64| {
            members.iter().map(|l| pick(&l.position)).fold(init, f)
        };
        let min_x = fold(f64::min, f64::INFINITY, |p| p.x);
        let max_x = fold(f64::max, f64::NEG_INFINITY, |p| p.x);
        let min_y = fold(f64::min, f64::INFINITY, |p| p.y);
        let max_y = fold(f64::max, f64::NEG_INFINITY, |p| p.y);
        let x = rect_start(centroid.x, min_x, max_x, tw, pw)
            .ok_or(LacError::InfeasibleCluster { cluster })?;
        let y = rect_start(centroid.y, min_y, max_y, th, ph)
            .ok_or(LacError::InfeasibleCluster { cluster })?;
        let rect = Rect { x, y, w: tw, h: th };

        let crop = panorama
            .crop(x, y, tw, th)
            .expect("rect is clamped inside the panorama");
        let (keypoints, descriptors) = detect_and_describe(&crop, &cfg.feature);

        let mut ids: Vec<u64> = members.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        let label_positions = members
            .iter()
            .map(|l| {
                (
                    l.id,
                    Point2::new(l.position.x - x as f64, l.position.y - y as f64),
                )
            })
            .collect();
        templates.push(Template {
            index: cluster,
            rect,
            center: centroid,
            labels: ids,
            label_positions,
            keypoints,
            descriptors,
        });
    }
    Ok(templates)
}

/// Candidate templates for the next frame.
///
/// Cold start (empty history) returns every template. Otherwise: the
/// distinct history entries ordered by frequency then recency, followed by
/// each one's spatial neighbors (rect overlap, or being its nearest center)
/// that are not already listed.
pub fn candidate_set(local_area: &LocalArea, templates: &[Template]) -> Vec<usize> {
    if local_area.is_empty() {
        return (0..templates.len()).collect();
    }
    let mut bases: Vec<usize> = local_area
        .history()
        .iter()
        .copied()
        .filter(|&t| t < templates.len())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    bases.sort_by(|&a, &b| {
        local_area
            .frequency(b)
            .cmp(&local_area.frequency(a))
            .then(local_area.last_use(b).cmp(&local_area.last_use(a)))
            .then(a.cmp(&b))
    });

    let mut out = bases.clone();
    let mut listed: BTreeSet<usize> = bases.iter().copied().collect();
    for &base in &bases {
        let nearest = templates
            .iter()
            .filter(|t| t.index != base)
            .min_by(|a, b| {
                a.center
                    .distance_sq(&templates[base].center)
                    .total_cmp(&b.center.distance_sq(&templates[base].center))
                    .then(a.index.cmp(&b.index))
            })
            .map(|t| t.index);
        for t in templates {
            if t.index == base {
                continue;
            }
            let neighbor =
                t.rect.overlaps(&templates[base].rect) || Some(t.index) == nearest;
            if neighbor && listed.insert(t.index) {
                out.push(t.index);
            }
        }
    }
    out
}

/// Per-frame matching settings.
#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub feature: FeatureConfig,
    pub gms: GmsConfig,
    pub robust: RobustConfig,
    pub estimator: EstimatorKind,
    /// Soft-vote history weight; 0 recovers the pure match-count argmax.
    pub vote_beta: f64,
    pub history_len: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            feature: FeatureConfig::default(),
            gms: GmsConfig::default(),
            robust: RobustConfig::default(),
            estimator: EstimatorKind::Degensac,
            vote_beta: 0.2,
            history_len: HISTORY_LEN,
        }
    }
}

/// Features of one frame, computed once and scored against every candidate.
#[derive(Debug, Clone)]
pub struct FrameFeatures {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<BinaryDescriptor>,
    pub dims: (u32, u32),
}

pub fn compute_frame_features(frame: &GrayImage, cfg: &FeatureConfig) -> FrameFeatures {
    let (keypoints, descriptors) = detect_and_describe(frame, cfg);
    FrameFeatures {
        keypoints,
        descriptors,
        dims: (frame.width(), frame.height()),
    }
}

/// Soft-vote outcome: the winner (when any candidate matched at all),
/// per-candidate filtered match counts, and the filtered matches themselves
/// keyed by template index.
#[derive(Debug, Clone)]
pub struct VoteResult {
    pub winner: Option<usize>,
    pub counts: Vec<(usize, usize)>,
    pub kept_matches: BTreeMap<usize, Vec<MatchPair>>,
}

/// History-weighted winner among per-candidate match counts: score is
/// `count * (1 + beta * frequency/H)`, ties go to the most recently used
/// candidate and then the lowest index. All-zero counts give no winner.
pub fn vote_winner(
    counts: &[(usize, usize)],
    local_area: &LocalArea,
    beta: f64,
) -> Option<usize> {
    let h = local_area.capacity() as f64;
    let mut best: Option<(f64, i64, usize)> = None;
    for &(idx, count) in counts {
        if count == 0 {
            continue;
        }
        let freq = local_area.frequency(idx) as f64;
        let score = count as f64 * (1.0 + beta * freq / h);
        let recency = local_area.last_use(idx).map(|p| p as i64).unwrap_or(-1);
        let replace = match &best {
            None => true,
            Some(&(s, r, i)) => {
                score > s || (score == s && (recency > r || (recency == r && idx < i)))
            }
        };
        if replace {
            best = Some((score, recency, idx));
        }
    }
    best.map(|(_, _, idx)| idx)
}

/// Score the frame against each candidate template: brute-force match,
/// grid-statistics filter, then the history-weighted vote.
pub fn soft_vote(
    features: &FrameFeatures,
    candidates: &[usize],
    templates: &[Template],
    local_area: &LocalArea,
    cfg: &MatchConfig,
) -> VoteResult {
    let mut counts = Vec::with_capacity(candidates.len());
    let mut kept_matches = BTreeMap::new();
    for &ci in candidates {
        let t = &templates[ci];
        let raw = brute_force_match(&features.descriptors, &t.descriptors, true)
            .unwrap_or_default();
        let (kept, _) = gms_filter(
            &raw,
            &features.keypoints,
            &t.keypoints,
            features.dims,
            (t.rect.w, t.rect.h),
            &cfg.gms,
        );
        counts.push((ci, kept.len()));
        kept_matches.insert(ci, kept);
    }
    let winner = vote_winner(&counts, local_area, cfg.vote_beta);
    VoteResult { winner, counts, kept_matches }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Ok,
    NoMatch,
}

/// Result of matching one frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_idx: usize,
    pub chosen_template: Option<usize>,
    pub homography: Option<Homography>,
    /// Label id -> position in frame coordinates.
    pub label_positions: BTreeMap<u64, Point2>,
    /// GMS-filtered match count against the chosen template.
    pub match_count: usize,
    /// How many candidate templates were scored.
    pub candidates_scored: usize,
    /// Frame positions of the homography's inlier matches, for downstream
    /// label-support weighting.
    pub inlier_points: Vec<Point2>,
    pub status: FrameStatus,
    /// True when `label_positions` replays an earlier frame's positions.
    pub stale: bool,
}

impl FrameResult {
    fn no_match(frame_idx: usize, candidates_scored: usize) -> Self {
        Self {
            frame_idx,
            chosen_template: None,
            homography: None,
            label_positions: BTreeMap::new(),
            match_count: 0,
            candidates_scored,
            inlier_points: Vec::new(),
            status: FrameStatus::NoMatch,
            stale: false,
        }
    }
}

/// Match one frame against the template set.
///
/// On success the winner is appended to the local area; on any stage
/// failure the local area is left untouched and the result carries
/// `NoMatch`.
pub fn match_frame(
    frame: &GrayImage,
    frame_idx: usize,
    local_area: &mut LocalArea,
    templates: &[Template],
    cfg: &MatchConfig,
) -> FrameResult {
    if templates.is_empty() {
        return FrameResult::no_match(frame_idx, 0);
    }
    let features = compute_frame_features(frame, &cfg.feature);
    if features.keypoints.len() < 4 {
        return FrameResult::no_match(frame_idx, 0);
    }
    let candidates = candidate_set(local_area, templates);
    let vote = soft_vote(&features, &candidates, templates, local_area, cfg);
    let scored = candidates.len();
    let Some(winner) = vote.winner else {
        return FrameResult::no_match(frame_idx, scored);
    };
    let matches = &vote.kept_matches[&winner];
    if matches.len() < 4 {
        return FrameResult::no_match(frame_idx, scored);
    }
    let template = &templates[winner];
    let est = match cfg.estimator {
        EstimatorKind::Ransac => {
            ransac_matches(matches, &features.keypoints, &template.keypoints, &cfg.robust)
        }
        EstimatorKind::Degensac => {
            degensac_matches(matches, &features.keypoints, &template.keypoints, &cfg.robust)
        }
    };
    let Ok(est) = est else {
        return FrameResult::no_match(frame_idx, scored);
    };

    let mut label_positions = BTreeMap::new();
    for (&id, &rel) in &template.label_positions {
        match est.homography.project(rel) {
            Ok(p) if p.is_finite() => {
                label_positions.insert(id, p);
            }
            _ => return FrameResult::no_match(frame_idx, scored),
        }
    }
    let inlier_points = matches
        .iter()
        .zip(est.inlier_mask.iter())
        .filter(|(_, &m)| m)
        .map(|(m, _)| features.keypoints[m.query_idx].position)
        .collect();

    local_area.push(winner);
    FrameResult {
        frame_idx,
        chosen_template: Some(winner),
        homography: Some(est.homography),
        label_positions,
        match_count: matches.len(),
        candidates_scored: scored,
        inlier_points,
        status: FrameStatus::Ok,
        stale: false,
    }
}

/// Sequential frame processor: owns the local area and replays the last
/// good label positions (marked stale) through no-match frames.
#[derive(Debug, Clone)]
pub struct Pipeline {
    templates: Vec<Template>,
    cfg: MatchConfig,
    local_area: LocalArea,
    last_labels: Option<BTreeMap<u64, Point2>>,
    next_frame: usize,
}

impl Pipeline {
    pub fn new(templates: Vec<Template>, cfg: MatchConfig) -> Self {
        let local_area = LocalArea::new(cfg.history_len);
        Self {
            templates,
            cfg,
            local_area,
            last_labels: None,
            next_frame: 0,
        }
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn config(&self) -> &MatchConfig {
        &self.cfg
    }

    pub fn local_area(&self) -> &LocalArea {
        &self.local_area
    }

    /// Process the next frame in sequence.
    pub fn process(&mut self, frame: &GrayImage) -> FrameResult {
        let idx = self.next_frame;
        self.next_frame += 1;
        let mut result = match_frame(frame, idx, &mut self.local_area, &self.templates, &self.cfg);
        match result.status {
            FrameStatus::Ok => {
                self.last_labels = Some(result.label_positions.clone());
            }
            FrameStatus::NoMatch => {
                if let Some(prev) = &self.last_labels {
                    result.label_positions = prev.clone();
                    result.stale = true;
                }
            }
        }
        result
    }
}
