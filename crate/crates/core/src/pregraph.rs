//! Pre-graphs and their morphisms.
//!
//! A pre-graph is a graph whose edges may be missing one or both endpoints.
//! The missing ends make up the boundary; a pre-graph with empty boundary is
//! an ordinary graph.  Morphisms send vertices to vertices and edges to
//! edges, commuting with whichever attaching maps are defined on the source.
//! This module also provides the categorical plumbing the rest of the crate
//! is built from: fiber products with their mediating morphisms, images,
//! disjoint unions, components, and Euler characteristic.

use crate::ids::{EdgeId, End, VertexId};
use std::collections::HashMap;
use thiserror::Error;

/// Endpoints of a single edge; `None` marks a missing end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeEnds {
    pub iota: Option<VertexId>,
    pub tau: Option<VertexId>,
}

impl EdgeEnds {
    pub fn new(iota: Option<VertexId>, tau: Option<VertexId>) -> Self {
        EdgeEnds { iota, tau }
    }

    pub fn end(&self, d: End) -> Option<VertexId> {
        match d {
            End::Iota => self.iota,
            End::Tau => self.tau,
        }
    }

    pub fn set_end(&mut self, d: End, v: Option<VertexId>) {
        match d {
            End::Iota => self.iota = v,
            End::Tau => self.tau = v,
        }
    }

    pub fn present_count(&self) -> usize {
        self.iota.is_some() as usize + self.tau.is_some() as usize
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreGraphError {
    #[error("edge {edge:?} has its {end:?} end at vertex {vertex:?}, which does not exist")]
    EndpointOutOfBounds {
        edge: EdgeId,
        end: End,
        vertex: VertexId,
    },
}

/// A finite pre-graph: a vertex count and a list of edges with optional ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreGraph {
    n_vertices: u32,
    edges: Vec<EdgeEnds>,
}

impl PreGraph {
    pub fn new(n_vertices: u32, edges: Vec<EdgeEnds>) -> Result<Self, PreGraphError> {
        for (i, ends) in edges.iter().enumerate() {
            for d in End::BOTH {
                if let Some(v) = ends.end(d) {
                    if v.0 >= n_vertices {
                        return Err(PreGraphError::EndpointOutOfBounds {
                            edge: EdgeId(i as u32),
                            end: d,
                            vertex: v,
                        });
                    }
                }
            }
        }
        Ok(PreGraph { n_vertices, edges })
    }

    /// Pre-graph with no edges.
    pub fn discrete(n_vertices: u32) -> Self {
        PreGraph {
            n_vertices,
            edges: Vec::new(),
        }
    }

    /// Graph with all ends present, given as `(iota, tau)` vertex indices.
    /// Convenience constructor for tests and fixtures; panics on bad indices.
    pub fn graph(n_vertices: u32, pairs: &[(u32, u32)]) -> Self {
        let edges = pairs
            .iter()
            .map(|&(i, t)| EdgeEnds::new(Some(VertexId(i)), Some(VertexId(t))))
            .collect();
        PreGraph::new(n_vertices, edges).expect("vertex index out of bounds")
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let v = VertexId(self.n_vertices);
        self.n_vertices += 1;
        v
    }

    pub fn push_edge(&mut self, ends: EdgeEnds) -> Result<EdgeId, PreGraphError> {
        let e = EdgeId(self.edges.len() as u32);
        for d in End::BOTH {
            if let Some(v) = ends.end(d) {
                if v.0 >= self.n_vertices {
                    return Err(PreGraphError::EndpointOutOfBounds {
                        edge: e,
                        end: d,
                        vertex: v,
                    });
                }
            }
        }
        self.edges.push(ends);
        Ok(e)
    }

    pub fn n_vertices(&self) -> u32 {
        self.n_vertices
    }

    pub fn n_edges(&self) -> u32 {
        self.edges.len() as u32
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.n_vertices).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn ends(&self, e: EdgeId) -> EdgeEnds {
        self.edges[e.index()]
    }

    pub fn end(&self, e: EdgeId, d: End) -> Option<VertexId> {
        self.edges[e.index()].end(d)
    }

    /// Edges missing at least one end.
    pub fn boundary(&self) -> Vec<EdgeId> {
        self.edge_ids()
            .filter(|&e| self.ends(e).present_count() < 2)
            .collect()
    }

    /// True when every edge has both ends, i.e. the pre-graph is a graph.
    pub fn is_graph(&self) -> bool {
        self.edges.iter().all(|ends| ends.present_count() == 2)
    }

    /// All edge-ends incident at `v`, in `(edge, end)` order.  A loop at `v`
    /// contributes both of its ends.
    pub fn ends_at(&self, v: VertexId) -> Vec<(EdgeId, End)> {
        let mut out = Vec::new();
        for e in self.edge_ids() {
            for d in End::BOTH {
                if self.end(e, d) == Some(v) {
                    out.push((e, d));
                }
            }
        }
        out
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.ends_at(v).len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64
    }

    /// Connected components.  An edge missing both ends forms a component of
    /// its own; an edge with one end belongs to its endpoint's component.
    pub fn components(&self) -> GraphComponents {
        let nv = self.n_vertices as usize;
        let ne = self.edges.len();
        let mut uf = UnionFind::new(nv + ne);
        for (i, ends) in self.edges.iter().enumerate() {
            for d in End::BOTH {
                if let Some(v) = ends.end(d) {
                    uf.union(nv + i, v.index());
                }
            }
        }
        let mut label: Vec<Option<u32>> = vec![None; nv + ne];
        let mut count = 0u32;
        let mut id_of = |uf: &mut UnionFind, node: usize| {
            let root = uf.find(node);
            *label[root].get_or_insert_with(|| {
                let id = count;
                count += 1;
                id
            })
        };
        let vertex_component: Vec<u32> = (0..nv).map(|v| id_of(&mut uf, v)).collect();
        let edge_component: Vec<u32> = (0..ne).map(|e| id_of(&mut uf, nv + e)).collect();
        GraphComponents {
            vertex_component,
            edge_component,
            count,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components().count <= 1
    }

    /// First Betti number of a finite connected graph.
    pub fn betti1(&self) -> Result<u64, Betti1Error> {
        if !self.is_graph() {
            return Err(Betti1Error::HasBoundary);
        }
        if self.components().count != 1 {
            return Err(Betti1Error::Disconnected);
        }
        Ok(self.edges.len() as u64 + 1 - self.n_vertices as u64)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Betti1Error {
    #[error("betti number requested for a pre-graph with boundary")]
    HasBoundary,
    #[error("betti number requested for a disconnected graph")]
    Disconnected,
}

#[derive(Clone, Debug)]
pub struct GraphComponents {
    pub vertex_component: Vec<u32>,
    pub edge_component: Vec<u32>,
    pub count: u32,
}

impl GraphComponents {
    pub fn of_vertex(&self, v: VertexId) -> u32 {
        self.vertex_component[v.index()]
    }

    pub fn of_edge(&self, e: EdgeId) -> u32 {
        self.edge_component[e.index()]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MorphismError {
    #[error("vertex map has {got} entries for {expected} vertices")]
    VertexMapLength { got: usize, expected: usize },
    #[error("edge map has {got} entries for {expected} edges")]
    EdgeMapLength { got: usize, expected: usize },
    #[error("vertex {0:?} maps out of bounds")]
    VertexOutOfBounds(VertexId),
    #[error("edge {0:?} maps out of bounds")]
    EdgeOutOfBounds(EdgeId),
    #[error("edge {edge:?} has a {end:?} end but its image does not")]
    MissingEndInImage { edge: EdgeId, end: End },
    #[error("edge {edge:?} does not commute with the {end:?} attaching map")]
    EndDoesNotCommute { edge: EdgeId, end: End },
    #[error("composition or product applied to morphisms that do not share the middle pre-graph")]
    MiddleMismatch,
    #[error("mediating morphism requested for maps with different sources")]
    SourceMismatch,
    #[error("mediating morphism requested for a square that does not commute")]
    SquareDoesNotCommute,
}

/// A morphism of pre-graphs.  Owns copies of its source and target so that
/// composites and products can be formed freely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreGraphMorphism {
    source: PreGraph,
    target: PreGraph,
    vertex_map: Vec<VertexId>,
    edge_map: Vec<EdgeId>,
}

impl PreGraphMorphism {
    pub fn new(
        source: PreGraph,
        target: PreGraph,
        vertex_map: Vec<VertexId>,
        edge_map: Vec<EdgeId>,
    ) -> Result<Self, MorphismError> {
        if vertex_map.len() != source.n_vertices as usize {
            return Err(MorphismError::VertexMapLength {
                got: vertex_map.len(),
                expected: source.n_vertices as usize,
            });
        }
        if edge_map.len() != source.edges.len() {
            return Err(MorphismError::EdgeMapLength {
                got: edge_map.len(),
                expected: source.edges.len(),
            });
        }
        for (v, &fv) in vertex_map.iter().enumerate() {
            if fv.0 >= target.n_vertices {
                return Err(MorphismError::VertexOutOfBounds(VertexId(v as u32)));
            }
        }
        for (e, &fe) in edge_map.iter().enumerate() {
            if fe.index() >= target.edges.len() {
                return Err(MorphismError::EdgeOutOfBounds(EdgeId(e as u32)));
            }
            for d in End::BOTH {
                if let Some(v) = source.end(EdgeId(e as u32), d) {
                    match target.end(fe, d) {
                        None => {
                            return Err(MorphismError::MissingEndInImage {
                                edge: EdgeId(e as u32),
                                end: d,
                            })
                        }
                        Some(w) => {
                            if vertex_map[v.index()] != w {
                                return Err(MorphismError::EndDoesNotCommute {
                                    edge: EdgeId(e as u32),
                                    end: d,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(PreGraphMorphism {
            source,
            target,
            vertex_map,
            edge_map,
        })
    }

    pub fn identity(g: &PreGraph) -> Self {
        PreGraphMorphism {
            source: g.clone(),
            target: g.clone(),
            vertex_map: g.vertices().collect(),
            edge_map: g.edge_ids().collect(),
        }
    }

    pub fn source(&self) -> &PreGraph {
        &self.source
    }

    pub fn target(&self) -> &PreGraph {
        &self.target
    }

    pub fn vertex_image(&self, v: VertexId) -> VertexId {
        self.vertex_map[v.index()]
    }

    pub fn edge_image(&self, e: EdgeId) -> EdgeId {
        self.edge_map[e.index()]
    }

    pub fn vertex_map(&self) -> &[VertexId] {
        &self.vertex_map
    }

    pub fn edge_map(&self) -> &[EdgeId] {
        &self.edge_map
    }

    /// No two distinct edges sharing an iota end (or sharing a tau end) have
    /// the same image.
    pub fn is_immersion(&self) -> bool {
        for v in self.source.vertices() {
            for d in End::BOTH {
                let mut images: Vec<EdgeId> = self
                    .source
                    .edge_ids()
                    .filter(|&e| self.source.end(e, d) == Some(v))
                    .map(|e| self.edge_image(e))
                    .collect();
                images.sort();
                if images.windows(2).any(|w| w[0] == w[1]) {
                    return false;
                }
            }
        }
        true
    }

    /// Every edge has exactly the ends of its image: the boundary of the
    /// source maps into the boundary of the target.
    pub fn is_closed(&self) -> bool {
        self.source.edge_ids().all(|e| {
            self.source.ends(e).present_count()
                == self.target.ends(self.edge_image(e)).present_count()
        })
    }

    pub fn is_isomorphism(&self) -> bool {
        if self.source.n_vertices != self.target.n_vertices
            || self.source.edges.len() != self.target.edges.len()
        {
            return false;
        }
        let mut seen_v = vec![false; self.target.n_vertices as usize];
        for &v in &self.vertex_map {
            if std::mem::replace(&mut seen_v[v.index()], true) {
                return false;
            }
        }
        let mut seen_e = vec![false; self.target.edges.len()];
        for &e in &self.edge_map {
            if std::mem::replace(&mut seen_e[e.index()], true) {
                return false;
            }
        }
        self.is_closed()
    }

    /// Composite `other . self`, defined when `self.target == other.source`.
    pub fn then(&self, other: &PreGraphMorphism) -> Result<PreGraphMorphism, MorphismError> {
        if self.target != other.source {
            return Err(MorphismError::MiddleMismatch);
        }
        Ok(PreGraphMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            vertex_map: self
                .vertex_map
                .iter()
                .map(|&v| other.vertex_image(v))
                .collect(),
            edge_map: self.edge_map.iter().map(|&e| other.edge_image(e)).collect(),
        })
    }
}

/// Fiber product of two morphisms with a common target, with its projections
/// and lookup tables for the universal property.
#[derive(Clone, Debug)]
pub struct FiberProduct {
    pub graph: PreGraph,
    pub left: PreGraphMorphism,
    pub right: PreGraphMorphism,
    vertex_pairs: Vec<(VertexId, VertexId)>,
    edge_pairs: Vec<(EdgeId, EdgeId)>,
    vertex_index: HashMap<(VertexId, VertexId), VertexId>,
    edge_index: HashMap<(EdgeId, EdgeId), EdgeId>,
}

impl FiberProduct {
    pub fn vertex_pair(&self, v: VertexId) -> (VertexId, VertexId) {
        self.vertex_pairs[v.index()]
    }

    pub fn edge_pair(&self, e: EdgeId) -> (EdgeId, EdgeId) {
        self.edge_pairs[e.index()]
    }

    pub fn find_vertex(&self, left: VertexId, right: VertexId) -> Option<VertexId> {
        self.vertex_index.get(&(left, right)).copied()
    }

    pub fn find_edge(&self, left: EdgeId, right: EdgeId) -> Option<EdgeId> {
        self.edge_index.get(&(left, right)).copied()
    }

    /// The unique morphism into the fiber product through which a commuting
    /// square factors.
    pub fn mediating(
        &self,
        to_left: &PreGraphMorphism,
        to_right: &PreGraphMorphism,
    ) -> Result<PreGraphMorphism, MorphismError> {
        if to_left.source != to_right.source {
            return Err(MorphismError::SourceMismatch);
        }
        if to_left.target != *self.left.target() || to_right.target != *self.right.target() {
            return Err(MorphismError::MiddleMismatch);
        }
        let src = to_left.source.clone();
        let mut vertex_map = Vec::with_capacity(src.n_vertices as usize);
        for v in src.vertices() {
            let pair = (to_left.vertex_image(v), to_right.vertex_image(v));
            match self.vertex_index.get(&pair) {
                Some(&p) => vertex_map.push(p),
                None => return Err(MorphismError::SquareDoesNotCommute),
            }
        }
        let mut edge_map = Vec::with_capacity(src.edges.len());
        for e in src.edge_ids() {
            let pair = (to_left.edge_image(e), to_right.edge_image(e));
            match self.edge_index.get(&pair) {
                Some(&p) => edge_map.push(p),
                None => return Err(MorphismError::SquareDoesNotCommute),
            }
        }
        PreGraphMorphism::new(src, self.graph.clone(), vertex_map, edge_map)
    }
}

/// Fiber product of `f` and `g`, which must share a target.  Cells are pairs
/// of cells with the same image; an end of a paired edge is present exactly
/// when both factors have it.
pub fn fiber_product(
    f: &PreGraphMorphism,
    g: &PreGraphMorphism,
) -> Result<FiberProduct, MorphismError> {
    if f.target != g.target {
        return Err(MorphismError::MiddleMismatch);
    }
    let a = &f.source;
    let b = &g.source;

    let mut vertex_buckets: Vec<Vec<VertexId>> = vec![Vec::new(); f.target.n_vertices as usize];
    for v in b.vertices() {
        vertex_buckets[g.vertex_image(v).index()].push(v);
    }
    let mut vertex_pairs = Vec::new();
    let mut vertex_index = HashMap::new();
    for va in a.vertices() {
        for &vb in &vertex_buckets[f.vertex_image(va).index()] {
            let id = VertexId(vertex_pairs.len() as u32);
            vertex_index.insert((va, vb), id);
            vertex_pairs.push((va, vb));
        }
    }

    let mut edge_buckets: Vec<Vec<EdgeId>> = vec![Vec::new(); f.target.edges.len()];
    for e in b.edge_ids() {
        edge_buckets[g.edge_image(e).index()].push(e);
    }
    let mut edge_pairs = Vec::new();
    let mut edge_index = HashMap::new();
    let mut edges = Vec::new();
    for ea in a.edge_ids() {
        for &eb in &edge_buckets[f.edge_image(ea).index()] {
            let mut ends = EdgeEnds::new(None, None);
            for d in End::BOTH {
                if let (Some(ua), Some(ub)) = (a.end(ea, d), b.end(eb, d)) {
                    let p = vertex_index
                        .get(&(ua, ub))
                        .expect("endpoint pair is in the fiber product");
                    ends.set_end(d, Some(*p));
                }
            }
            let id = EdgeId(edge_pairs.len() as u32);
            edge_index.insert((ea, eb), id);
            edge_pairs.push((ea, eb));
            edges.push(ends);
        }
    }

    let graph = PreGraph::new(vertex_pairs.len() as u32, edges).expect("indices are internal");
    let left = PreGraphMorphism::new(
        graph.clone(),
        a.clone(),
        vertex_pairs.iter().map(|&(va, _)| va).collect(),
        edge_pairs.iter().map(|&(ea, _)| ea).collect(),
    )?;
    let right = PreGraphMorphism::new(
        graph.clone(),
        b.clone(),
        vertex_pairs.iter().map(|&(_, vb)| vb).collect(),
        edge_pairs.iter().map(|&(_, eb)| eb).collect(),
    )?;
    Ok(FiberProduct {
        graph,
        left,
        right,
        vertex_pairs,
        edge_pairs,
        vertex_index,
        edge_index,
    })
}

/// Image of a morphism as a sub-pre-graph of the target.  An image edge
/// carries exactly the ends carried by some preimage edge, so the inclusion
/// is a morphism and the corestriction is surjective.
#[derive(Clone, Debug)]
pub struct ImageSubgraph {
    pub graph: PreGraph,
    pub inclusion: PreGraphMorphism,
    pub corestriction: PreGraphMorphism,
}

pub fn image_subgraph(f: &PreGraphMorphism) -> ImageSubgraph {
    let target = f.target();
    let mut vert_hit = vec![false; target.n_vertices() as usize];
    for &v in f.vertex_map() {
        vert_hit[v.index()] = true;
    }
    let mut edge_ends_hit: Vec<[bool; 2]> = vec![[false; 2]; target.n_edges() as usize];
    let mut edge_hit = vec![false; target.n_edges() as usize];
    for e in f.source().edge_ids() {
        let fe = f.edge_image(e);
        edge_hit[fe.index()] = true;
        for (k, d) in End::BOTH.into_iter().enumerate() {
            if f.source().end(e, d).is_some() {
                edge_ends_hit[fe.index()][k] = true;
            }
        }
    }

    let mut vert_new: Vec<Option<VertexId>> = vec![None; target.n_vertices() as usize];
    let mut n_vertices = 0u32;
    let mut incl_v = Vec::new();
    for v in target.vertices() {
        if vert_hit[v.index()] {
            vert_new[v.index()] = Some(VertexId(n_vertices));
            incl_v.push(v);
            n_vertices += 1;
        }
    }
    let mut edge_new: Vec<Option<EdgeId>> = vec![None; target.n_edges() as usize];
    let mut edges = Vec::new();
    let mut incl_e = Vec::new();
    for e in target.edge_ids() {
        if edge_hit[e.index()] {
            let mut ends = EdgeEnds::new(None, None);
            for (k, d) in End::BOTH.into_iter().enumerate() {
                if edge_ends_hit[e.index()][k] {
                    let v = target.end(e, d).expect("preimage end implies image end");
                    ends.set_end(d, vert_new[v.index()]);
                }
            }
            edge_new[e.index()] = Some(EdgeId(edges.len() as u32));
            incl_e.push(e);
            edges.push(ends);
        }
    }

    let graph = PreGraph::new(n_vertices, edges).expect("indices are internal");
    let inclusion = PreGraphMorphism::new(graph.clone(), target.clone(), incl_v, incl_e)
        .expect("inclusion of an image is a morphism");
    let corestriction = PreGraphMorphism::new(
        f.source().clone(),
        graph,
        f.vertex_map()
            .iter()
            .map(|&v| vert_new[v.index()].unwrap())
            .collect(),
        f.edge_map()
            .iter()
            .map(|&e| edge_new[e.index()].unwrap())
            .collect(),
    )
    .expect("corestriction to an image is a morphism");
    ImageSubgraph {
        graph: inclusion.source().clone(),
        inclusion,
        corestriction,
    }
}

/// Disjoint union of pre-graphs, with offset bookkeeping for the parts.
#[derive(Clone, Debug)]
pub struct DisjointUnion {
    pub graph: PreGraph,
    vertex_offsets: Vec<u32>,
    edge_offsets: Vec<u32>,
    parts: Vec<PreGraph>,
}

impl DisjointUnion {
    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn vertex(&self, part: usize, v: VertexId) -> VertexId {
        VertexId(self.vertex_offsets[part] + v.0)
    }

    pub fn edge(&self, part: usize, e: EdgeId) -> EdgeId {
        EdgeId(self.edge_offsets[part] + e.0)
    }

    pub fn inclusion(&self, part: usize) -> PreGraphMorphism {
        let p = &self.parts[part];
        PreGraphMorphism::new(
            p.clone(),
            self.graph.clone(),
            p.vertices().map(|v| self.vertex(part, v)).collect(),
            p.edge_ids().map(|e| self.edge(part, e)).collect(),
        )
        .expect("inclusion into a disjoint union is a morphism")
    }
}

pub fn disjoint_union(parts: &[PreGraph]) -> DisjointUnion {
    let mut vertex_offsets = Vec::with_capacity(parts.len());
    let mut edge_offsets = Vec::with_capacity(parts.len());
    let mut n_vertices = 0u32;
    let mut edges = Vec::new();
    for p in parts {
        vertex_offsets.push(n_vertices);
        edge_offsets.push(edges.len() as u32);
        for e in p.edge_ids() {
            let mut ends = EdgeEnds::new(None, None);
            for d in End::BOTH {
                if let Some(v) = p.end(e, d) {
                    ends.set_end(d, Some(VertexId(n_vertices + v.0)));
                }
            }
            edges.push(ends);
        }
        n_vertices += p.n_vertices();
    }
    let graph = PreGraph::new(n_vertices, edges).expect("indices are internal");
    DisjointUnion {
        graph,
        vertex_offsets,
        edge_offsets,
        parts: parts.to_vec(),
    }
}

/// Union-find with path compression, tracking the minimal member of each
/// class so representatives are deterministic.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    min: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            min: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Returns true when the two classes were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi as u32;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.min[hi] = self.min[hi].min(self.min[lo]);
        true
    }

    /// Minimal original index in the class of `x`.
    pub fn min_of(&mut self, x: usize) -> u32 {
        let r = self.find(x);
        self.min[r]
    }
}
