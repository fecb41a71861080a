//! Static network topology with hop-count based propagation.
//!
//! A broadcast is delivered directly from the origin to every other node
//! after `hops × hop_delay` seconds. For a fixed topology that gives the same
//! arrival times as store-and-forward gossip along shortest paths.

use serde::{Deserialize, Serialize};

use crate::MinerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Ring,
    Complete,
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TopologyKind::Ring => "ring",
            TopologyKind::Complete => "complete",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    node_count: usize,
    kind: TopologyKind,
    hop_delay: f64,
}

impl Topology {
    pub fn new(kind: TopologyKind, node_count: usize, hop_delay: f64) -> Self {
        assert!(hop_delay >= 0.0, "hop delay must be non-negative");
        Topology {
            node_count,
            kind,
            hop_delay,
        }
    }

    pub fn ring(node_count: usize, hop_delay: f64) -> Self {
        Self::new(TopologyKind::Ring, node_count, hop_delay)
    }

    pub fn complete(node_count: usize, hop_delay: f64) -> Self {
        Self::new(TopologyKind::Complete, node_count, hop_delay)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn hop_delay(&self) -> f64 {
        self.hop_delay
    }

    /// Shortest-path hop count between two nodes.
    ///
    /// # Panics
    ///
    /// If either id is out of range.
    pub fn distance(&self, a: MinerId, b: MinerId) -> usize {
        assert!(
            a < self.node_count && b < self.node_count,
            "node id out of range: {a}, {b} (node count {})",
            self.node_count
        );
        if a == b {
            return 0;
        }
        match self.kind {
            TopologyKind::Ring => {
                let d = a.abs_diff(b);
                d.min(self.node_count - d)
            }
            TopologyKind::Complete => 1,
        }
    }

    pub fn propagation_delay(&self, from: MinerId, to: MinerId) -> f64 {
        self.distance(from, to) as f64 * self.hop_delay
    }

    /// Delivery schedule for a message originating at `origin` at time `now`:
    /// one `(target, deliver_at)` entry per other node, in node order.
    pub fn broadcast(&self, origin: MinerId, now: f64) -> Vec<(MinerId, f64)> {
        assert!(origin < self.node_count, "origin {origin} out of range");
        (0..self.node_count)
            .filter(|&target| target != origin)
            .map(|target| (target, now + self.propagation_delay(origin, target)))
            .collect()
    }

    /// Largest hop count between any two nodes.
    pub fn diameter(&self) -> usize {
        match (self.kind, self.node_count) {
            (_, 0 | 1) => 0,
            (TopologyKind::Ring, n) => n / 2,
            (TopologyKind::Complete, _) => 1,
        }
    }
}
