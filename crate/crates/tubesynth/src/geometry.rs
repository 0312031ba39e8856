//! Axis-aligned box algebra.
//!
//! Regions, tube cross-sections, and unsafe sets are all finite unions of
//! closed axis-aligned boxes. Everything the pipeline needs reduces to a
//! handful of exact operations on those: membership, intersection,
//! subtraction (which yields a disjoint decomposition), containment of a box
//! in a union, and separating-axis clearance.

use serde::{Deserialize, Serialize};

/// Closed axis-aligned box `[lower_i, upper_i]` in each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bound dimensions differ");
        BoxRegion { lower, upper }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    /// Every lower bound strictly below its upper bound.
    pub fn is_proper(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l < u)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn halfwidths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l).max(0.0))
            .product()
    }

    /// Shrink about the center: halfwidths scaled by `factor`.
    pub fn shrink(&self, factor: f64) -> BoxRegion {
        let c = self.center();
        let h = self.halfwidths();
        BoxRegion::new(
            c.iter().zip(&h).map(|(c, h)| c - factor * h).collect(),
            c.iter().zip(&h).map(|(c, h)| c + factor * h).collect(),
        )
    }

    /// Intersection with positive volume (shared faces do not count).
    pub fn overlaps(&self, other: &BoxRegion) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .all(|((al, au), (bl, bu))| al < bu && bl < au)
    }

    pub fn intersection(&self, other: &BoxRegion) -> Option<BoxRegion> {
        if !self.overlaps(other) {
            return None;
        }
        Some(BoxRegion::new(
            self.lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a.max(*b))
                .collect(),
            self.upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.min(*b))
                .collect(),
        ))
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .all(|((al, au), (bl, bu))| al <= bl && bu <= au)
    }

    /// Largest separation along any single axis; 0 when the boxes overlap or
    /// touch in every dimension. A positive value is a separating-axis
    /// distance, so `clearance >= m` certifies the boxes stay `m` apart.
    pub fn clearance(&self, other: &BoxRegion) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.dimension() {
            let gap = (other.lower[i] - self.upper[i]).max(self.lower[i] - other.upper[i]);
            best = best.max(gap);
        }
        best
    }

    /// `self \ other` as disjoint boxes. Sweeps one dimension at a time:
    /// the part of the remainder below/above the cut box is carved off and
    /// the active box shrinks to the overlap slab.
    pub fn subtract(&self, other: &BoxRegion) -> Vec<BoxRegion> {
        if !self.overlaps(other) {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut core = self.clone();
        for i in 0..self.dimension() {
            if other.lower[i] > core.lower[i] {
                let mut below = core.clone();
                below.upper[i] = other.lower[i];
                if below.is_proper() {
                    pieces.push(below);
                }
                core.lower[i] = other.lower[i];
            }
            if other.upper[i] < core.upper[i] {
                let mut above = core.clone();
                above.lower[i] = other.upper[i];
                if above.is_proper() {
                    pieces.push(above);
                }
                core.upper[i] = other.upper[i];
            }
        }
        pieces
    }
}

/// `base \ (cut_0 ∪ cut_1 ∪ …)` as disjoint boxes.
pub fn subtract_all(base: &[BoxRegion], cuts: &[BoxRegion]) -> Vec<BoxRegion> {
    let mut remainder: Vec<BoxRegion> = base.to_vec();
    for cut in cuts {
        remainder = remainder.iter().flat_map(|b| b.subtract(cut)).collect();
    }
    remainder
}

/// Is `b` covered by the union of `cover`? Exact: subtract every cover box
/// and check nothing of positive volume remains.
pub fn box_in_union(b: &BoxRegion, cover: &[BoxRegion]) -> bool {
    let rest = subtract_all(std::slice::from_ref(b), cover);
    rest.iter().all(|p| p.volume() <= 0.0)
}

pub fn union_volume_disjoint(boxes: &[BoxRegion]) -> f64 {
    boxes.iter().map(BoxRegion::volume).sum()
}

pub fn point_in_union(point: &[f64], boxes: &[BoxRegion]) -> bool {
    boxes.iter().any(|b| b.contains(point))
}
