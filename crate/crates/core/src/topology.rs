//! Pairwise label topology and polar refinement of projected labels.
//!
//! The topology stores the polar relation (distance, angle) of every ordered
//! label pair in panorama coordinates. [`refine_labels_polar`] exploits those
//! relations to pull projected labels back toward a mutually consistent
//! layout: it fits a similarity transform (uniform scale + rotation) to the
//! projected pair vectors, predicts each label from the most trustworthy
//! anchor, and blends prediction with projection.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::image::Point2;
use crate::lac::Label;
use crate::math;

/// Default radius (pixels) for counting homography inliers around a label
/// when measuring its support.
pub const DEFAULT_SUPPORT_RADIUS: f64 = 50.0;

/// Polar relation from one label to another: `angle` in `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarRelation {
    pub distance: f64,
    pub angle: f64,
}

/// All ordered pairwise relations between labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTopology {
    relations: BTreeMap<(u64, u64), PolarRelation>,
}

impl LabelTopology {
    /// Relation from label `i` to label `j`; the self-relation has distance
    /// 0 and angle 0 by convention.
    pub fn relation(&self, i: u64, j: u64) -> Option<PolarRelation> {
        if i == j {
            return Some(PolarRelation { distance: 0.0, angle: 0.0 });
        }
        self.relations.get(&(i, j)).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(u64, u64), &PolarRelation)> {
        self.relations.iter()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Build the full pairwise topology from label annotations.
pub fn build_topology(labels: &[Label]) -> LabelTopology {
    let mut relations = BTreeMap::new();
    for a in labels {
        for b in labels {
            if a.id == b.id {
                continue;
            }
            let dx = b.position.x - a.position.x;
            let dy = b.position.y - a.position.y;
            relations.insert(
                (a.id, b.id),
                PolarRelation {
                    distance: math::hypot(dx, dy),
                    angle: math::wrap_angle(math::atan2(dy, dx)),
                },
            );
        }
    }
    LabelTopology { relations }
}

/// Count homography inlier points within `radius` of each projected label —
/// the per-label support used to pick the refinement anchor.
pub fn label_support(
    positions: &BTreeMap<u64, Point2>,
    inlier_points: &[Point2],
    radius: f64,
) -> BTreeMap<u64, f64> {
    positions
        .iter()
        .map(|(&id, p)| {
            let count = inlier_points
                .iter()
                .filter(|q| p.distance(q) <= radius)
                .count();
            (id, count as f64)
        })
        .collect()
}

/// Refine projected labels against the stored topology.
///
/// The label with the highest support (ties to the lowest id) anchors the
/// layout. A similarity transform `z = s*exp(i*phi)` is fit by weighted
/// least squares over all projected pair vectors against the topology pair
/// vectors, each pair weighted by the product of its endpoint supports
/// (uniform weights when every product is zero). Each label is then
/// predicted from the anchor through its topology relation and blended:
/// `out = (1-lambda)*projected + lambda*predicted`. The anchor itself and
/// labels without a topology relation to the anchor pass through unchanged.
pub fn refine_labels_polar(
    projected: &BTreeMap<u64, Point2>,
    topology: &LabelTopology,
    support: &BTreeMap<u64, f64>,
    lambda: f64,
) -> BTreeMap<u64, Point2> {
    if projected.len() < 2 {
        return projected.clone();
    }
    let lambda = lambda.clamp(0.0, 1.0);
    let sup = |id: u64| support.get(&id).copied().unwrap_or(0.0).max(0.0);

    // Anchor: highest support, ties to the lowest id (BTreeMap iterates ids
    // ascending, so strict > keeps the first best).
    let mut anchor = *projected.keys().next().unwrap();
    let mut best = f64::NEG_INFINITY;
    for &id in projected.keys() {
        let s = sup(id);
        if s > best {
            best = s;
            anchor = id;
        }
    }
    let anchor_pos = projected[&anchor];

    // Weighted complex least squares for z = s*exp(i*phi):
    // minimize sum w |z*u - v|^2 over ordered pairs, where u is the topology
    // vector and v the projected vector. The minimizer is
    // z = sum(w*conj(u)*v) / sum(w*|u|^2).
    let mut acc = (0.0f64, 0.0f64);
    let mut denom = 0.0f64;
    let mut fit = |weighted: bool| {
        acc = (0.0, 0.0);
        denom = 0.0;
        for (&i, pi) in projected.iter() {
            for (&j, pj) in projected.iter() {
                if i == j {
                    continue;
                }
                let Some(rel) = topology.relation(i, j) else { continue };
                let w = if weighted { sup(i) * sup(j) } else { 1.0 };
                if w <= 0.0 {
                    continue;
                }
                let (ux, uy) = (
                    rel.distance * math::cos(rel.angle),
                    rel.distance * math::sin(rel.angle),
                );
                let (vx, vy) = (pj.x - pi.x, pj.y - pi.y);
                // conj(u) * v, accumulated with weight.
                acc.0 += w * (ux * vx + uy * vy);
                acc.1 += w * (ux * vy - uy * vx);
                denom += w * (ux * ux + uy * uy);
            }
        }
    };
    fit(true);
    if denom <= 0.0 {
        fit(false);
    }
    if denom <= 0.0 {
        return projected.clone();
    }
    let z = (acc.0 / denom, acc.1 / denom);

    let mut out = BTreeMap::new();
    for (&id, p) in projected.iter() {
        if id == anchor {
            out.insert(id, *p);
            continue;
        }
        let Some(rel) = topology.relation(anchor, id) else {
            out.insert(id, *p);
            continue;
        };
        let (ux, uy) = (
            rel.distance * math::cos(rel.angle),
            rel.distance * math::sin(rel.angle),
        );
        // Complex multiplication z*u places the label relative to the anchor.
        let pred = Point2::new(
            anchor_pos.x + z.0 * ux - z.1 * uy,
            anchor_pos.y + z.0 * uy + z.1 * ux,
        );
        let blended = Point2::new(
            (1.0 - lambda) * p.x + lambda * pred.x,
            (1.0 - lambda) * p.y + lambda * pred.y,
        );
        out.insert(id, if blended.is_finite() { blended } else { *p });
    }
    out
}
