//! Spatial deduction engine.
//!
//! Agents live on an integer grid (x grows to the right, y grows upward). A
//! relation "A is r of B" means A sits at B plus the unit offset of r. The
//! relation between two agents is read off the signs of their displacement,
//! so multi-hop answers come from summing offsets, never from composing
//! labels pairwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseLabelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpatialRelation {
    Left,
    Right,
    Above,
    Below,
    LowerLeft,
    LowerRight,
    UpperLeft,
    UpperRight,
    Overlaps,
}

impl SpatialRelation {
    /// Prompt order of the nine labels.
    pub const ALL: [SpatialRelation; 9] = [
        SpatialRelation::Left,
        SpatialRelation::Right,
        SpatialRelation::Above,
        SpatialRelation::Below,
        SpatialRelation::LowerLeft,
        SpatialRelation::LowerRight,
        SpatialRelation::UpperLeft,
        SpatialRelation::UpperRight,
        SpatialRelation::Overlaps,
    ];

    /// Relations that move an agent; the default growth set.
    pub const MOVES: [SpatialRelation; 8] = [
        SpatialRelation::Left,
        SpatialRelation::Right,
        SpatialRelation::Above,
        SpatialRelation::Below,
        SpatialRelation::LowerLeft,
        SpatialRelation::LowerRight,
        SpatialRelation::UpperLeft,
        SpatialRelation::UpperRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpatialRelation::Left => "left",
            SpatialRelation::Right => "right",
            SpatialRelation::Above => "above",
            SpatialRelation::Below => "below",
            SpatialRelation::LowerLeft => "lower-left",
            SpatialRelation::LowerRight => "lower-right",
            SpatialRelation::UpperLeft => "upper-left",
            SpatialRelation::UpperRight => "upper-right",
            SpatialRelation::Overlaps => "overlaps",
        }
    }

    pub fn offset(self) -> (i64, i64) {
        match self {
            SpatialRelation::Left => (-1, 0),
            SpatialRelation::Right => (1, 0),
            SpatialRelation::Above => (0, 1),
            SpatialRelation::Below => (0, -1),
            SpatialRelation::LowerLeft => (-1, -1),
            SpatialRelation::LowerRight => (1, -1),
            SpatialRelation::UpperLeft => (-1, 1),
            SpatialRelation::UpperRight => (1, 1),
            SpatialRelation::Overlaps => (0, 0),
        }
    }

    /// Point reflection: "A is r of B" iff "B is invert(r) of A".
    pub fn invert(self) -> SpatialRelation {
        let (dx, dy) = self.offset();
        relation_of_displacement(-dx, -dy)
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpatialRelation {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpatialRelation::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

/// Label of a displacement (subject minus object) by sign pattern.
pub fn relation_of_displacement(dx: i64, dy: i64) -> SpatialRelation {
    use std::cmp::Ordering::*;
    match (dx.cmp(&0), dy.cmp(&0)) {
        (Less, Equal) => SpatialRelation::Left,
        (Greater, Equal) => SpatialRelation::Right,
        (Equal, Greater) => SpatialRelation::Above,
        (Equal, Less) => SpatialRelation::Below,
        (Less, Less) => SpatialRelation::LowerLeft,
        (Greater, Less) => SpatialRelation::LowerRight,
        (Less, Greater) => SpatialRelation::UpperLeft,
        (Greater, Greater) => SpatialRelation::UpperRight,
        (Equal, Equal) => SpatialRelation::Overlaps,
    }
}

/// Relation of the first agent to the last one along a chain where label `i`
/// reads "v_i is labels\[i\] of v_{i+1}". `None` for an empty chain.
pub fn chain_relation(labels: &[SpatialRelation]) -> Option<SpatialRelation> {
    if labels.is_empty() {
        return None;
    }
    let (dx, dy) = labels.iter().fold((0, 0), |(x, y), r| {
        let (ox, oy) = r.offset();
        (x + ox, y + oy)
    });
    Some(relation_of_displacement(dx, dy))
}

/// Ground-truth positions, indexed by node id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    positions: Vec<(i64, i64)>,
}

impl Layout {
    /// A layout with a single root agent at the origin.
    pub fn new() -> Self {
        Layout {
            positions: vec![(0, 0)],
        }
    }

    pub fn from_positions(positions: Vec<(i64, i64)>) -> Self {
        Layout { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: usize) -> (i64, i64) {
        self.positions[id]
    }

    pub fn positions(&self) -> &[(i64, i64)] {
        &self.positions
    }

    /// Place a new agent so that it is `relation` of `target`; returns its id.
    pub fn realize(&mut self, target: usize, relation: SpatialRelation) -> usize {
        let (x, y) = self.positions[target];
        let (dx, dy) = relation.offset();
        self.positions.push((x + dx, y + dy));
        self.positions.len() - 1
    }

    pub fn derive(&self, u: usize, v: usize) -> SpatialRelation {
        let (ux, uy) = self.positions[u];
        let (vx, vy) = self.positions[v];
        relation_of_displacement(ux - vx, uy - vy)
    }

    /// Whether `u` and `v` are one king move apart (or coincide).
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        let (ux, uy) = self.positions[u];
        let (vx, vy) = self.positions[v];
        (ux - vx).abs() <= 1 && (uy - vy).abs() <= 1
    }
}
