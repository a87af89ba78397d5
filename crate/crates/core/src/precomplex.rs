//! Pre-complexes: pre-graphs with faces attached along closed immersions.
//!
//! A pre-complex is a triple of a skeleton pre-graph `G`, a face pre-graph
//! `S` in which every vertex has exactly two incident edge-ends, and an
//! attaching morphism `S -> G` that is both closed and an immersion.  Face
//! vertices are the corners of the complex; face components are either
//! cycles (genuine 2-cells) or open intervals (partial faces produced by
//! cutting).  A pre-complex whose skeleton is a graph and whose faces are all
//! cycles is a 2-complex.
//!
//! This module provides the local structure theory: regular neighbourhoods
//! of vertices and edges, Whitehead graphs of asterisk pre-complexes with
//! their connectivity and cut-node analysis, and the gluing move that merges
//! boundary edges along a branched map, which is how complexes are
//! reassembled from pieces.

use crate::ids::{EdgeId, End, VertexId};
use crate::pregraph::{
    disjoint_union, fiber_product, DisjointUnion, EdgeEnds, MorphismError, PreGraph,
    PreGraphMorphism,
};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreComplexError {
    #[error("face vertex {0:?} has {1} incident edge-ends; every corner needs exactly two")]
    FaceVertexNotOpen(VertexId, usize),
    #[error("attaching map is not an immersion")]
    AttachNotImmersion,
    #[error("attaching map is not closed")]
    AttachNotClosed,
}

/// A pre-complex, stored as its attaching morphism.  The morphism's source
/// is the face pre-graph and its target is the skeleton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreComplex {
    attach: PreGraphMorphism,
}

impl PreComplex {
    pub fn new(attach: PreGraphMorphism) -> Result<Self, PreComplexError> {
        for s in attach.source().vertices() {
            let n = attach.source().valence(s);
            if n != 2 {
                return Err(PreComplexError::FaceVertexNotOpen(s, n));
            }
        }
        if !attach.is_immersion() {
            return Err(PreComplexError::AttachNotImmersion);
        }
        if !attach.is_closed() {
            return Err(PreComplexError::AttachNotClosed);
        }
        Ok(PreComplex { attach })
    }

    /// Pre-complex with no faces.
    pub fn faceless(skeleton: PreGraph) -> Self {
        let attach = PreGraphMorphism::new(PreGraph::discrete(0), skeleton, vec![], vec![])
            .expect("empty morphism is valid");
        PreComplex { attach }
    }

    pub fn skeleton(&self) -> &PreGraph {
        self.attach.target()
    }

    pub fn faces(&self) -> &PreGraph {
        self.attach.source()
    }

    pub fn attach(&self) -> &PreGraphMorphism {
        &self.attach
    }

    /// A 2-complex: skeleton a graph and every face a cycle.
    pub fn is_complex(&self) -> bool {
        self.skeleton().is_graph() && self.faces().is_graph()
    }

    /// One vertex, every skeleton edge with exactly one present end.
    pub fn is_asterisk(&self) -> bool {
        self.skeleton().n_vertices() == 1
            && self
                .skeleton()
                .edge_ids()
                .all(|e| self.skeleton().ends(e).present_count() == 1)
    }

    pub fn face_components(&self) -> FaceComponents {
        let comps = self.faces().components();
        let n = comps.count as usize;
        let mut n_vertices = vec![0u32; n];
        let mut n_edges = vec![0u32; n];
        let mut open_ends = vec![0u32; n];
        for v in self.faces().vertices() {
            n_vertices[comps.of_vertex(v) as usize] += 1;
        }
        for e in self.faces().edge_ids() {
            let c = comps.of_edge(e) as usize;
            n_edges[c] += 1;
            open_ends[c] += 2 - self.faces().ends(e).present_count() as u32;
        }
        let is_cycle = (0..n).map(|c| open_ends[c] == 0).collect();
        FaceComponents {
            count: comps.count,
            of_vertex: comps.vertex_component,
            of_edge: comps.edge_component,
            n_vertices,
            n_edges,
            is_cycle,
        }
    }

    /// Corners of the complex lying over the skeleton vertex `v`, i.e. face
    /// vertices with image `v`.
    pub fn corners_at(&self, v: VertexId) -> Vec<VertexId> {
        self.faces()
            .vertices()
            .filter(|&s| self.attach.vertex_image(s) == v)
            .collect()
    }

    /// The two edge-ends of the face pre-graph incident at a corner.
    pub fn corner_halves(&self, s: VertexId) -> [(EdgeId, End); 2] {
        let halves = self.faces().ends_at(s);
        debug_assert_eq!(halves.len(), 2);
        [halves[0], halves[1]]
    }

    /// Face edges lying over the skeleton edge `e`.
    pub fn face_fiber(&self, e: EdgeId) -> Vec<EdgeId> {
        self.faces()
            .edge_ids()
            .filter(|&u| self.attach.edge_image(u) == e)
            .collect()
    }

    /// Vertices minus edges plus face components.
    pub fn euler_characteristic(&self) -> i64 {
        self.skeleton().euler_characteristic() + self.face_components().count as i64
    }

    /// Connected components as sub-pre-complexes, each with its inclusion.
    /// A face component lies over a single skeleton component.
    pub fn split_components(&self) -> Vec<(PreComplex, ComplexMorphism)> {
        let skel_comps = self.skeleton().components();
        let n = skel_comps.count as usize;
        if n <= 1 {
            return vec![(self.clone(), ComplexMorphism::identity(self))];
        }
        let mut out = Vec::with_capacity(n);
        for c in 0..n as u32 {
            let mut vert_new: Vec<Option<VertexId>> =
                vec![None; self.skeleton().n_vertices() as usize];
            let mut sub_skel = PreGraph::discrete(0);
            let mut incl_v = Vec::new();
            for v in self.skeleton().vertices() {
                if skel_comps.of_vertex(v) == c {
                    vert_new[v.index()] = Some(sub_skel.add_vertex());
                    incl_v.push(v);
                }
            }
            let mut edge_new: Vec<Option<EdgeId>> =
                vec![None; self.skeleton().n_edges() as usize];
            let mut incl_e = Vec::new();
            for e in self.skeleton().edge_ids() {
                if skel_comps.of_edge(e) == c {
                    let old = self.skeleton().ends(e);
                    let mut ends = EdgeEnds::new(None, None);
                    for d in End::BOTH {
                        if let Some(v) = old.end(d) {
                            ends.set_end(d, vert_new[v.index()]);
                        }
                    }
                    edge_new[e.index()] = Some(sub_skel.push_edge(ends).expect("local index"));
                    incl_e.push(e);
                }
            }

            let mut face_vert_new: Vec<Option<VertexId>> =
                vec![None; self.faces().n_vertices() as usize];
            let mut sub_faces = PreGraph::discrete(0);
            let mut face_incl_v = Vec::new();
            for s in self.faces().vertices() {
                if skel_comps.of_vertex(self.attach.vertex_image(s)) == c {
                    face_vert_new[s.index()] = Some(sub_faces.add_vertex());
                    face_incl_v.push(s);
                }
            }
            let mut face_incl_e = Vec::new();
            let mut attach_e = Vec::new();
            for u in self.faces().edge_ids() {
                if skel_comps.of_edge(self.attach.edge_image(u)) == c {
                    let old = self.faces().ends(u);
                    let mut ends = EdgeEnds::new(None, None);
                    for d in End::BOTH {
                        if let Some(s) = old.end(d) {
                            ends.set_end(d, face_vert_new[s.index()]);
                        }
                    }
                    sub_faces.push_edge(ends).expect("local index");
                    face_incl_e.push(u);
                    attach_e.push(edge_new[self.attach.edge_image(u).index()].unwrap());
                }
            }
            let attach_v = face_incl_v
                .iter()
                .map(|&s| vert_new[self.attach.vertex_image(s).index()].unwrap())
                .collect();
            let attach =
                PreGraphMorphism::new(sub_faces.clone(), sub_skel.clone(), attach_v, attach_e)
                    .expect("restriction of attaching map");
            let sub = PreComplex::new(attach).expect("component of a pre-complex");
            let skeleton_map =
                PreGraphMorphism::new(sub_skel, self.skeleton().clone(), incl_v, incl_e)
                    .expect("inclusion");
            let face_map =
                PreGraphMorphism::new(sub_faces, self.faces().clone(), face_incl_v, face_incl_e)
                    .expect("inclusion");
            let incl = ComplexMorphism::new(&sub, self, skeleton_map, face_map)
                .expect("component inclusion commutes");
            out.push((sub, incl));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FaceComponents {
    pub count: u32,
    pub of_vertex: Vec<u32>,
    pub of_edge: Vec<u32>,
    pub n_vertices: Vec<u32>,
    pub n_edges: Vec<u32>,
    pub is_cycle: Vec<bool>,
}

impl FaceComponents {
    pub fn all_cycles(&self) -> bool {
        self.is_cycle.iter().all(|&b| b)
    }

    /// Length of the cycle containing face edge `u`.
    pub fn cycle_length_of_edge(&self, u: EdgeId) -> u32 {
        self.n_edges[self.of_edge[u.index()] as usize]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComplexMorphismError {
    #[error("skeleton map does not go between the skeletons")]
    SkeletonMismatch,
    #[error("face map does not go between the face pre-graphs")]
    FaceMismatch,
    #[error("face map does not commute with the attaching maps")]
    DoesNotCommute,
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// A morphism of pre-complexes: compatible morphisms of skeletons and faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexMorphism {
    source: PreComplex,
    target: PreComplex,
    skeleton_map: PreGraphMorphism,
    face_map: PreGraphMorphism,
}

impl ComplexMorphism {
    pub fn new(
        source: &PreComplex,
        target: &PreComplex,
        skeleton_map: PreGraphMorphism,
        face_map: PreGraphMorphism,
    ) -> Result<Self, ComplexMorphismError> {
        if skeleton_map.source() != source.skeleton() || skeleton_map.target() != target.skeleton()
        {
            return Err(ComplexMorphismError::SkeletonMismatch);
        }
        if face_map.source() != source.faces() || face_map.target() != target.faces() {
            return Err(ComplexMorphismError::FaceMismatch);
        }
        let down_then_across = source.attach().then(&skeleton_map)?;
        let across_then_down = face_map.then(target.attach())?;
        if down_then_across != across_then_down {
            return Err(ComplexMorphismError::DoesNotCommute);
        }
        Ok(ComplexMorphism {
            source: source.clone(),
            target: target.clone(),
            skeleton_map,
            face_map,
        })
    }

    pub fn identity(x: &PreComplex) -> Self {
        ComplexMorphism {
            source: x.clone(),
            target: x.clone(),
            skeleton_map: PreGraphMorphism::identity(x.skeleton()),
            face_map: PreGraphMorphism::identity(x.faces()),
        }
    }

    pub fn source(&self) -> &PreComplex {
        &self.source
    }

    pub fn target(&self) -> &PreComplex {
        &self.target
    }

    pub fn skeleton_map(&self) -> &PreGraphMorphism {
        &self.skeleton_map
    }

    pub fn face_map(&self) -> &PreGraphMorphism {
        &self.face_map
    }

    pub fn then(&self, other: &ComplexMorphism) -> Result<ComplexMorphism, ComplexMorphismError> {
        if self.target != other.source {
            return Err(ComplexMorphismError::Morphism(MorphismError::MiddleMismatch));
        }
        Ok(ComplexMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            skeleton_map: self.skeleton_map.then(&other.skeleton_map)?,
            face_map: self.face_map.then(&other.face_map)?,
        })
    }

    /// For every skeleton edge of the source, the face fiber over it injects
    /// into the face fiber over its image.
    pub fn is_branched_map(&self) -> bool {
        let mut fibers: Vec<Vec<EdgeId>> =
            vec![Vec::new(); self.source.skeleton().n_edges() as usize];
        for u in self.source.faces().edge_ids() {
            fibers[self.source.attach().edge_image(u).index()].push(self.face_map.edge_image(u));
        }
        for images in &mut fibers {
            images.sort();
            if images.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
        }
        true
    }

    pub fn is_isomorphism(&self) -> bool {
        self.skeleton_map.is_isomorphism() && self.face_map.is_isomorphism()
    }
}

/// Regular neighbourhood of a skeleton vertex: an asterisk pre-complex with
/// one skeleton edge per edge-end at the vertex and one face interval per
/// corner, together with its canonical map into the ambient pre-complex.
#[derive(Clone, Debug)]
pub struct VertexNeighborhood {
    pub complex: PreComplex,
    pub map: ComplexMorphism,
    /// Ambient `(edge, end)` pair of each asterisk skeleton edge.
    pub asterisk_ends: Vec<(EdgeId, End)>,
}

pub fn regular_neighborhood_vertex(x: &PreComplex, v: VertexId) -> VertexNeighborhood {
    let asterisk_ends = x.skeleton().ends_at(v);
    let mut asterisk = PreGraph::discrete(1);
    for &(_, d) in &asterisk_ends {
        let mut ends = EdgeEnds::new(None, None);
        ends.set_end(d, Some(VertexId(0)));
        asterisk.push_edge(ends).expect("index 0");
    }
    let star = PreGraphMorphism::new(
        asterisk,
        x.skeleton().clone(),
        vec![v],
        asterisk_ends.iter().map(|&(e, _)| e).collect(),
    )
    .expect("star of a vertex includes");

    let fp = fiber_product(x.attach(), &star).expect("common target");
    let complex = PreComplex::new(fp.right.clone()).expect("neighbourhood is a pre-complex");
    let map = ComplexMorphism::new(&complex, x, star, fp.left.clone())
        .expect("neighbourhood maps into the ambient complex");
    VertexNeighborhood {
        complex,
        map,
        asterisk_ends,
    }
}

/// Regular neighbourhood of a skeleton edge: a single edge with no vertices
/// and one bare face edge per face-fiber element.
#[derive(Clone, Debug)]
pub struct EdgeNeighborhood {
    pub complex: PreComplex,
    pub map: ComplexMorphism,
    /// Ambient face edge of each local face edge.
    pub fiber: Vec<EdgeId>,
}

pub fn regular_neighborhood_edge(x: &PreComplex, e: EdgeId) -> EdgeNeighborhood {
    let mut core = PreGraph::discrete(0);
    core.push_edge(EdgeEnds::new(None, None)).expect("no ends");
    let incl = PreGraphMorphism::new(core, x.skeleton().clone(), vec![], vec![e])
        .expect("bare edge maps anywhere");
    let fiber = x.face_fiber(e);
    let mut faces = PreGraph::discrete(0);
    for _ in &fiber {
        faces.push_edge(EdgeEnds::new(None, None)).expect("no ends");
    }
    let attach = PreGraphMorphism::new(
        faces.clone(),
        incl.source().clone(),
        vec![],
        vec![EdgeId(0); fiber.len()],
    )
    .expect("bare edges over a bare edge");
    let complex = PreComplex::new(attach).expect("edge neighbourhood is a pre-complex");
    let face_map = PreGraphMorphism::new(faces, x.faces().clone(), vec![], fiber.clone())
        .expect("fiber inclusion");
    let map =
        ComplexMorphism::new(&complex, x, incl, face_map).expect("edge neighbourhood commutes");
    EdgeNeighborhood {
        complex,
        map,
        fiber,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WhiteheadError {
    #[error("whitehead graph requested for a pre-complex that is not an asterisk")]
    NotAsterisk,
}

/// The Whitehead graph of an asterisk pre-complex: one node per skeleton
/// edge, one link per corner, joining the images of the corner's two halves.
#[derive(Clone, Debug)]
pub struct WhiteheadGraph {
    n_nodes: usize,
    /// `(corner, node of one half, node of the other half)`, by face vertex.
    links: Vec<(VertexId, u32, u32)>,
}

pub fn whitehead_graph(x: &PreComplex) -> Result<WhiteheadGraph, WhiteheadError> {
    if !x.is_asterisk() {
        return Err(WhiteheadError::NotAsterisk);
    }
    let mut links = Vec::with_capacity(x.faces().n_vertices() as usize);
    for s in x.faces().vertices() {
        let [(u1, _), (u2, _)] = x.corner_halves(s);
        let a = x.attach().edge_image(u1).0;
        let b = x.attach().edge_image(u2).0;
        debug_assert_ne!(a, b, "corner halves land on distinct asterisk edges");
        links.push((s, a, b));
    }
    Ok(WhiteheadGraph {
        n_nodes: x.skeleton().n_edges() as usize,
        links,
    })
}

impl WhiteheadGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn links(&self) -> &[(VertexId, u32, u32)] {
        &self.links
    }

    /// Component index of each node; isolated nodes count.
    pub fn node_components(&self) -> (u32, Vec<u32>) {
        let mut uf = crate::pregraph::UnionFind::new(self.n_nodes);
        for &(_, a, b) in &self.links {
            uf.union(a as usize, b as usize);
        }
        let mut label: Vec<Option<u32>> = vec![None; self.n_nodes];
        let mut count = 0;
        let comps = (0..self.n_nodes)
            .map(|n| {
                let root = uf.find(n);
                *label[root].get_or_insert_with(|| {
                    let id = count;
                    count += 1;
                    id
                })
            })
            .collect();
        (count, comps)
    }

    pub fn is_connected(&self) -> bool {
        self.node_components().0 <= 1
    }

    /// Nodes whose removal (with all incident links) disconnects their
    /// component.  Parallel links are collapsed first: they do not affect
    /// vertex cuts.
    pub fn cut_nodes(&self) -> Vec<u32> {
        let mut simple: Vec<Vec<u32>> = vec![Vec::new(); self.n_nodes];
        for &(_, a, b) in &self.links {
            simple[a as usize].push(b);
            simple[b as usize].push(a);
        }
        for nbrs in &mut simple {
            nbrs.sort();
            nbrs.dedup();
        }

        let n = self.n_nodes;
        let mut disc = vec![0u32; n];
        let mut low = vec![0u32; n];
        let mut visited = vec![false; n];
        let mut is_cut = vec![false; n];
        let mut timer = 1u32;
        for root in 0..n {
            if visited[root] {
                continue;
            }
            // iterative dfs: stack of (node, parent, next neighbour index)
            let mut stack: Vec<(u32, u32, usize)> = vec![(root as u32, u32::MAX, 0)];
            visited[root] = true;
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            let mut root_children = 0;
            while let Some(&mut (node, parent, ref mut next)) = stack.last_mut() {
                let nbrs = &simple[node as usize];
                if *next < nbrs.len() {
                    let to = nbrs[*next];
                    *next += 1;
                    if !visited[to as usize] {
                        if node as usize == root {
                            root_children += 1;
                        }
                        visited[to as usize] = true;
                        disc[to as usize] = timer;
                        low[to as usize] = timer;
                        timer += 1;
                        stack.push((to, node, 0));
                    } else if to != parent {
                        low[node as usize] = low[node as usize].min(disc[to as usize]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(up, _, _)) = stack.last() {
                        low[up as usize] = low[up as usize].min(low[node as usize]);
                        if up as usize != root && low[node as usize] >= disc[up as usize] {
                            is_cut[up as usize] = true;
                        }
                    }
                }
            }
            if root_children >= 2 {
                is_cut[root] = true;
            }
        }
        (0..n as u32).filter(|&i| is_cut[i as usize]).collect()
    }

    /// Components of the graph with one node removed.  Each remaining node
    /// gets a side; each link gets the side of its endpoints, where a link
    /// incident at the removed node counts only its surviving endpoint.
    pub fn split_at(&self, without: u32) -> WhiteheadSplit {
        let mut uf = crate::pregraph::UnionFind::new(self.n_nodes);
        for &(_, a, b) in &self.links {
            if a != without && b != without {
                uf.union(a as usize, b as usize);
            }
        }
        let mut label: Vec<Option<u32>> = vec![None; self.n_nodes];
        let mut count = 0;
        let mut side_of = |uf: &mut crate::pregraph::UnionFind, n: u32| {
            let root = uf.find(n as usize);
            *label[root].get_or_insert_with(|| {
                let id = count;
                count += 1;
                id
            })
        };
        let mut node_side: Vec<Option<u32>> = vec![None; self.n_nodes];
        for n in 0..self.n_nodes as u32 {
            if n != without {
                node_side[n as usize] = Some(side_of(&mut uf, n));
            }
        }
        let link_side = self
            .links
            .iter()
            .map(|&(_, a, b)| {
                let survivor = if a == without { b } else { a };
                debug_assert_ne!(survivor, without);
                node_side[survivor as usize].unwrap()
            })
            .collect();
        WhiteheadSplit {
            count,
            node_side,
            link_side,
        }
    }
}

/// Result of deleting one node from a Whitehead graph.
#[derive(Clone, Debug)]
pub struct WhiteheadSplit {
    pub count: u32,
    /// Side of each surviving node; `None` for the deleted node.
    pub node_side: Vec<Option<u32>>,
    /// Side of each link, by link index.
    pub link_side: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GlueError {
    #[error("reference map is not a branched map")]
    NotBranchedMap,
    #[error("edges {0:?} and {1:?} have different images")]
    ImagesDiffer(EdgeId, EdgeId),
    #[error("edge {0:?} already has its iota end")]
    LeftHasIota(EdgeId),
    #[error("edge {0:?} already has its tau end")]
    RightHasTau(EdgeId),
    #[error("cannot glue edge {0:?} to itself")]
    SameEdge(EdgeId),
    #[error("edge {0:?} appears in more than one gluing pair")]
    EdgeReused(EdgeId),
    #[error("face fibers over {0:?} and {1:?} have different images")]
    FiberMismatch(EdgeId, EdgeId),
}

/// Result of gluing boundary edges: the glued pre-complex, the descent of
/// the reference map, and the quotient projection.
#[derive(Clone, Debug)]
pub struct Gluing {
    pub complex: PreComplex,
    pub descended: ComplexMorphism,
    pub projection: ComplexMorphism,
}

/// Glue `e1` to `e2` in the source of the branched map `f`: `e1` must be
/// missing its iota end and `e2` its tau end, the two edges must have the
/// same image, and their face fibers must match under `f`.  The merged edge
/// takes its iota end from `e2` and its tau end from `e1`; face edges over
/// the pair merge along the bijection induced by `f`.
pub fn glue_edges(f: &ComplexMorphism, e1: EdgeId, e2: EdgeId) -> Result<Gluing, GlueError> {
    glue_edge_batch(f, &[(e1, e2)])
}

/// Glue several disjoint pairs at once.  Each edge may appear in at most one
/// pair; the result is the same as gluing the pairs one at a time.
pub fn glue_edge_batch(
    f: &ComplexMorphism,
    pairs: &[(EdgeId, EdgeId)],
) -> Result<Gluing, GlueError> {
    if !f.is_branched_map() {
        return Err(GlueError::NotBranchedMap);
    }
    let x = f.source();
    let skel = x.skeleton();

    let mut used = vec![false; skel.n_edges() as usize];
    for &(e1, e2) in pairs {
        if e1 == e2 {
            return Err(GlueError::SameEdge(e1));
        }
        for e in [e1, e2] {
            if std::mem::replace(&mut used[e.index()], true) {
                return Err(GlueError::EdgeReused(e));
            }
        }
        if f.skeleton_map().edge_image(e1) != f.skeleton_map().edge_image(e2) {
            return Err(GlueError::ImagesDiffer(e1, e2));
        }
        if skel.end(e1, End::Iota).is_some() {
            return Err(GlueError::LeftHasIota(e1));
        }
        if skel.end(e2, End::Tau).is_some() {
            return Err(GlueError::RightHasTau(e2));
        }
    }

    // partner[e] = (other edge, true when e is the tau-keeping left edge)
    let mut partner: Vec<Option<(EdgeId, bool)>> = vec![None; skel.n_edges() as usize];
    for &(e1, e2) in pairs {
        partner[e1.index()] = Some((e2, true));
        partner[e2.index()] = Some((e1, false));
    }

    // face fibers and the induced pairing
    let mut fibers: Vec<Vec<EdgeId>> = vec![Vec::new(); skel.n_edges() as usize];
    for u in x.faces().edge_ids() {
        fibers[x.attach().edge_image(u).index()].push(u);
    }
    let mut face_partner: Vec<Option<(EdgeId, bool)>> = vec![None; x.faces().n_edges() as usize];
    for &(e1, e2) in pairs {
        let mut by_image: HashMap<EdgeId, EdgeId> = HashMap::new();
        for &u2 in &fibers[e2.index()] {
            by_image.insert(f.face_map().edge_image(u2), u2);
        }
        if fibers[e1.index()].len() != fibers[e2.index()].len() {
            return Err(GlueError::FiberMismatch(e1, e2));
        }
        for &u1 in &fibers[e1.index()] {
            match by_image.get(&f.face_map().edge_image(u1)) {
                None => return Err(GlueError::FiberMismatch(e1, e2)),
                Some(&u2) => {
                    face_partner[u1.index()] = Some((u2, true));
                    face_partner[u2.index()] = Some((u1, false));
                }
            }
        }
    }

    let merge_graph = |graph: &PreGraph, partner: &[Option<(EdgeId, bool)>]| {
        let mut new_id: Vec<Option<EdgeId>> = vec![None; graph.n_edges() as usize];
        let mut merged = PreGraph::discrete(graph.n_vertices());
        let mut reps = Vec::new();
        for e in graph.edge_ids() {
            let keep = match partner[e.index()] {
                Some((other, _)) if other < e => false,
                _ => true,
            };
            if keep {
                let ends = match partner[e.index()] {
                    None => graph.ends(e),
                    Some((other, e_is_left)) => {
                        let (left, right) = if e_is_left { (e, other) } else { (other, e) };
                        EdgeEnds::new(graph.end(right, End::Iota), graph.end(left, End::Tau))
                    }
                };
                new_id[e.index()] = Some(merged.push_edge(ends).expect("vertices unchanged"));
                reps.push(e);
            }
        }
        for e in graph.edge_ids() {
            if new_id[e.index()].is_none() {
                let (other, _) = partner[e.index()].unwrap();
                new_id[e.index()] = new_id[other.index()];
            }
        }
        let new_id: Vec<EdgeId> = new_id.into_iter().map(Option::unwrap).collect();
        (merged, new_id, reps)
    };

    let (new_skel, skel_new_id, skel_reps) = merge_graph(skel, &partner);
    let (new_faces, face_new_id, face_reps) = merge_graph(x.faces(), &face_partner);

    let attach = PreGraphMorphism::new(
        new_faces.clone(),
        new_skel.clone(),
        x.faces()
            .vertices()
            .map(|s| x.attach().vertex_image(s))
            .collect(),
        face_reps
            .iter()
            .map(|&u| skel_new_id[x.attach().edge_image(u).index()])
            .collect(),
    )
    .expect("gluing preserves the attaching map");
    let glued = PreComplex::new(attach).expect("gluing preserves the pre-complex invariants");

    let projection = ComplexMorphism::new(
        x,
        &glued,
        PreGraphMorphism::new(
            skel.clone(),
            new_skel.clone(),
            skel.vertices().collect(),
            skel_new_id,
        )
        .expect("projection onto the glued skeleton"),
        PreGraphMorphism::new(
            x.faces().clone(),
            new_faces.clone(),
            x.faces().vertices().collect(),
            face_new_id,
        )
        .expect("projection onto the glued faces"),
    )
    .expect("projection commutes");

    let descended = ComplexMorphism::new(
        &glued,
        f.target(),
        PreGraphMorphism::new(
            new_skel,
            f.target().skeleton().clone(),
            skel.vertices().map(|v| f.skeleton_map().vertex_image(v)).collect(),
            skel_reps
                .iter()
                .map(|&e| f.skeleton_map().edge_image(e))
                .collect(),
        )
        .expect("reference map descends on skeletons"),
        PreGraphMorphism::new(
            new_faces,
            f.target().faces().clone(),
            x.faces()
                .vertices()
                .map(|s| f.face_map().vertex_image(s))
                .collect(),
            face_reps
                .iter()
                .map(|&u| f.face_map().edge_image(u))
                .collect(),
        )
        .expect("reference map descends on faces"),
    )
    .expect("descended map commutes");

    Ok(Gluing {
        complex: glued,
        descended,
        projection,
    })
}

/// Disjoint union of pre-complexes with part bookkeeping.
#[derive(Clone, Debug)]
pub struct ComplexDisjointUnion {
    pub complex: PreComplex,
    pub skeleton: DisjointUnion,
    pub faces: DisjointUnion,
    parts: Vec<PreComplex>,
}

impl ComplexDisjointUnion {
    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn inclusion(&self, part: usize) -> ComplexMorphism {
        ComplexMorphism::new(
            &self.parts[part],
            &self.complex,
            self.skeleton.inclusion(part),
            self.faces.inclusion(part),
        )
        .expect("inclusion into a disjoint union commutes")
    }
}

pub fn disjoint_union_complexes(parts: &[PreComplex]) -> ComplexDisjointUnion {
    let skeleton = disjoint_union(&parts.iter().map(|p| p.skeleton().clone()).collect::<Vec<_>>());
    let faces = disjoint_union(&parts.iter().map(|p| p.faces().clone()).collect::<Vec<_>>());
    let mut attach_v = Vec::new();
    let mut attach_e = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        for s in p.faces().vertices() {
            attach_v.push(skeleton.vertex(i, p.attach().vertex_image(s)));
        }
        for u in p.faces().edge_ids() {
            attach_e.push(skeleton.edge(i, p.attach().edge_image(u)));
        }
    }
    let attach = PreGraphMorphism::new(faces.graph.clone(), skeleton.graph.clone(), attach_v, attach_e)
        .expect("disjoint union of attaching maps");
    let complex = PreComplex::new(attach).expect("disjoint union of pre-complexes");
    ComplexDisjointUnion {
        complex,
        skeleton,
        faces,
        parts: parts.to_vec(),
    }
}
