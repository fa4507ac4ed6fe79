//! Dense flow to sparse correspondences: forward–backward consistency,
//! best-N / local best-K selection, rigid flow and depth lifting.

mod consistency;
mod rigid;
mod selection;

pub use consistency::{flow_consistency, ConsistencyMap};
pub use rigid::{lift_to_3d, rigid_flow, LiftedMatches, RigidFlow};
pub use selection::{
    select_best_n, select_local_best_k, sufficiency_gate, BestN, GateOutcome, SelectionConfig, ValidityReport,
};

use std::ops::Deref;

use crate::geometry::Pixel;

/// One 2D–2D correspondence from a source view to a target view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub source: Pixel,
    pub target: Pixel,
    /// Forward–backward inconsistency of the flow that produced the match, in pixels.
    pub inconsistency: f64,
}

impl Match {
    pub fn new(source: Pixel, target: Pixel) -> Self {
        Self {
            source,
            target,
            inconsistency: 0.0,
        }
    }

    pub fn flow(&self) -> Pixel {
        self.target - self.source
    }
}

/// Selected correspondences. Source pixels are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub matches: Vec<Match>,
}

impl MatchSet {
    pub fn new(matches: Vec<Match>) -> Self {
        Self { matches }
    }

    /// Keeps the matches whose mask entry is set.
    pub fn filtered(&self, keep: &[bool]) -> MatchSet {
        MatchSet::new(
            self.matches
                .iter()
                .zip(keep)
                .filter_map(|(m, k)| k.then_some(*m))
                .collect(),
        )
    }

    pub fn subset(&self, indices: &[usize]) -> MatchSet {
        MatchSet::new(indices.iter().map(|&i| self.matches[i]).collect())
    }
}

impl Deref for MatchSet {
    type Target = [Match];
    fn deref(&self) -> &[Match] {
        &self.matches
    }
}

impl FromIterator<Match> for MatchSet {
    fn from_iter<I: IntoIterator<Item = Match>>(iter: I) -> Self {
        MatchSet::new(iter.into_iter().collect())
    }
}
