//! Labeled output workspace: a bounding box, axis-aligned labeled regions,
//! and a default proposition covering everything else. Each automaton
//! triplet maps to one reach-avoid task over these regions.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::automaton::Triplet;
use crate::geometry::{subtract_all, union_volume_disjoint, BoxRegion};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace parse error: {0}")]
    Parse(String),
    #[error("workspace validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
}

/// Output-space workspace with labeled axis-aligned regions. Points covered
/// by no region carry the default proposition.
#[derive(Debug, Clone)]
pub struct LabeledWorkspace {
    pub dimension: usize,
    pub bounds: BoxRegion,
    pub default_proposition: String,
    /// Proposition -> covering boxes, sorted for determinism.
    regions: BTreeMap<String, Vec<BoxRegion>>,
}

/// One reach-avoid task: start in `start`, reach `target` at the deadline,
/// never touch `avoid` in between. The three sets are unions of boxes inside
/// `bounds`.
#[derive(Debug, Clone)]
pub struct RaTask {
    pub label_in: String,
    pub label_out: String,
    pub label_self: Vec<String>,
    pub start: Vec<BoxRegion>,
    pub target: Vec<BoxRegion>,
    pub avoid: Vec<BoxRegion>,
    pub bounds: BoxRegion,
}

#[derive(Deserialize)]
struct RegionDoc {
    proposition: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct BoundsDoc {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct WorkspaceDoc {
    dimension: usize,
    default_proposition: String,
    bounds: BoundsDoc,
    #[serde(default)]
    regions: Vec<RegionDoc>,
}

fn cmp_boxes(a: &BoxRegion, b: &BoxRegion) -> std::cmp::Ordering {
    let key = |r: &BoxRegion| -> Vec<f64> {
        r.lower.iter().chain(r.upper.iter()).copied().collect()
    };
    let (ka, kb) = (key(a), key(b));
    for (x, y) in ka.iter().zip(kb.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

impl LabeledWorkspace {
    pub fn from_toml(text: &str) -> Result<LabeledWorkspace, WorkspaceError> {
        let doc: WorkspaceDoc =
            toml::from_str(text).map_err(|e| WorkspaceError::Parse(e.to_string()))?;
        LabeledWorkspace::from_parts(
            doc.dimension,
            BoxRegion::new(doc.bounds.lower, doc.bounds.upper),
            doc.default_proposition,
            doc.regions
                .into_iter()
                .map(|r| (r.proposition, BoxRegion::new(r.lower, r.upper)))
                .collect(),
        )
    }

    pub fn from_parts(
        dimension: usize,
        bounds: BoxRegion,
        default_proposition: String,
        labeled_boxes: Vec<(String, BoxRegion)>,
    ) -> Result<LabeledWorkspace, WorkspaceError> {
        if dimension == 0 {
            return Err(WorkspaceError::Validation {
                field: "dimension".into(),
                message: "dimension must be at least 1".into(),
            });
        }
        if bounds.dimension() != dimension || !bounds.is_proper() {
            return Err(WorkspaceError::Validation {
                field: "bounds".into(),
                message: format!("bounds must be a proper box of dimension {dimension}"),
            });
        }
        if default_proposition.is_empty() {
            return Err(WorkspaceError::Validation {
                field: "default_proposition".into(),
                message: "default proposition must be nonempty".into(),
            });
        }
        let mut regions: BTreeMap<String, Vec<BoxRegion>> = BTreeMap::new();
        for (name, region) in labeled_boxes {
            if name.is_empty() {
                return Err(WorkspaceError::Validation {
                    field: "regions.proposition".into(),
                    message: "region proposition must be nonempty".into(),
                });
            }
            if name == default_proposition {
                return Err(WorkspaceError::Validation {
                    field: "regions.proposition".into(),
                    message: format!(
                        "`{name}` is the default proposition and cannot label a region"
                    ),
                });
            }
            if region.dimension() != dimension || !region.is_proper() {
                return Err(WorkspaceError::Validation {
                    field: "regions".into(),
                    message: format!("region `{name}` must be a proper box of dimension {dimension}"),
                });
            }
            if !bounds.contains_box(&region) {
                return Err(WorkspaceError::Validation {
                    field: "regions".into(),
                    message: format!("region `{name}` is not inside the workspace bounds"),
                });
            }
            regions.entry(name).or_default().push(region);
        }
        for boxes in regions.values_mut() {
            boxes.sort_by(cmp_boxes);
        }
        Ok(LabeledWorkspace {
            dimension,
            bounds,
            default_proposition,
            regions,
        })
    }

    /// All propositions this workspace can emit, sorted, the default last if
    /// not already present by name order.
    pub fn propositions(&self) -> Vec<String> {
        let mut props: Vec<String> = self.regions.keys().cloned().collect();
        props.push(self.default_proposition.clone());
        props.sort();
        props.dedup();
        props
    }

    /// The proposition emitted at `point`: the lexicographically smallest
    /// region proposition whose region contains the point, or the default.
    /// Regions are closed, so boundaries belong to the region.
    pub fn label_of(&self, point: &[f64]) -> &str {
        for (name, boxes) in &self.regions {
            if boxes.iter().any(|b| b.contains(point)) {
                return name;
            }
        }
        &self.default_proposition
    }

    /// The set of points emitting `proposition`, as a union of boxes. The
    /// default proposition maps to the complement of every labeled region
    /// within the bounds.
    pub fn preimage(&self, proposition: &str) -> Result<Vec<BoxRegion>, WorkspaceError> {
        if proposition == self.default_proposition {
            let cuts: Vec<BoxRegion> = self
                .regions
                .values()
                .flat_map(|boxes| boxes.iter().cloned())
                .collect();
            let mut out = subtract_all(std::slice::from_ref(&self.bounds), &cuts);
            out.sort_by(cmp_boxes);
            return Ok(out);
        }
        self.regions
            .get(proposition)
            .cloned()
            .ok_or_else(|| WorkspaceError::UnknownProposition(proposition.to_string()))
    }

    /// The reach-avoid task of one triplet: start in the entry label's
    /// region, reach the exit label's region, and avoid every point whose
    /// label the triplet's middle state cannot consume (anything outside the
    /// self-loop labels and the two endpoint regions).
    pub fn ra_task(&self, triplet: &Triplet) -> Result<RaTask, WorkspaceError> {
        let start = self.preimage(&triplet.label_in)?;
        let target = self.preimage(&triplet.label_out)?;
        let mut allowed: Vec<BoxRegion> = Vec::new();
        for label in &triplet.label_self {
            allowed.extend(self.preimage(label)?);
        }
        allowed.extend(start.iter().cloned());
        allowed.extend(target.iter().cloned());
        let mut avoid = subtract_all(std::slice::from_ref(&self.bounds), &allowed);
        avoid.sort_by(cmp_boxes);
        Ok(RaTask {
            label_in: triplet.label_in.clone(),
            label_out: triplet.label_out.clone(),
            label_self: triplet.label_self.clone(),
            start,
            target,
            avoid,
            bounds: self.bounds.clone(),
        })
    }
}

impl RaTask {
    /// The start box containing `point` (the lexicographically first when
    /// several overlap), if any.
    pub fn start_box_containing(&self, point: &[f64]) -> Option<&BoxRegion> {
        self.start.iter().find(|b| b.contains(point))
    }

    /// The target box whose center lies nearest to `point`; deterministic
    /// because the boxes are sorted and strict inequality breaks ties.
    pub fn nearest_target_box(&self, point: &[f64]) -> Option<&BoxRegion> {
        let mut best: Option<(&BoxRegion, f64)> = None;
        for b in &self.target {
            let c = b.center();
            let d2: f64 = c
                .iter()
                .zip(point.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if best.map_or(true, |(_, bd)| d2 < bd) {
                best = Some((b, d2));
            }
        }
        best.map(|(b, _)| b)
    }

    /// Total volume of the avoid set (its boxes are disjoint by
    /// construction).
    pub fn avoid_volume(&self) -> f64 {
        union_volume_disjoint(&self.avoid)
    }
}
