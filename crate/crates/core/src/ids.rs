//! Typed indices for the cells of pre-graphs and pre-complexes.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a vertex in a pre-graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

/// Index of an edge in a pre-graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

/// One of the two ends of an edge.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    Iota,
    Tau,
}

impl End {
    pub const BOTH: [End; 2] = [End::Iota, End::Tau];

    pub fn other(self) -> End {
        match self {
            End::Iota => End::Tau,
            End::Tau => End::Iota,
        }
    }

    /// Short ASCII tag, used in DOT output and debug displays.
    pub fn tag(self) -> &'static str {
        match self {
            End::Iota => "i",
            End::Tau => "t",
        }
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Debug for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Debug for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
