//! Reducibility analysis for finite 2-complexes.
//!
//! A complex is visibly reducible when a reduction is already in plain sight:
//! a point component, a valence-1 vertex, a free face, or a vertex whose
//! link (Whitehead graph) is disconnected.  When none of those hold but some
//! link has a cut node, the complex is unfold-able: the vertex can be pulled
//! apart along the cut node, and the new complex folds back onto the old one
//! by a single essential fold.  Unfolding terminates, so every complex
//! resolves to Reducible or Irreducible, independently of the order in which
//! witnesses are consumed.
//!
//! `irreducible_core` runs the reductions themselves: trimming, collapsing
//! free faces, splitting at wedge points (discarding parts it can certify
//! contractible), and unfolding, then folds the composite map back into the
//! input.  Steps the underlying theory leaves non-constructive, such as
//! recognising a simply connected wedge part, surface as `Undetermined`.

use crate::exec::seeded_shuffle;
use crate::folding::{classify_map, folded_representative, FoldedRepError};
use crate::ids::{EdgeId, End, VertexId};
use crate::precomplex::{
    regular_neighborhood_vertex, whitehead_graph, ComplexMorphism, PreComplex,
};
use crate::pregraph::{EdgeEnds, PreGraph, PreGraphMorphism};
use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

/// A reduction visible in the complex as given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// A component consisting of a single vertex.
    PointComponent { vertex: VertexId },
    /// A skeleton vertex of valence 1.
    ValenceOne { vertex: VertexId },
    /// An edge with exactly one face edge over it.
    FreeFace { edge: EdgeId },
    /// A vertex whose Whitehead graph is disconnected.
    DisconnectedLink { vertex: VertexId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visible {
    Reducible(Reduction),
    /// No visible reduction, but deleting `node` from the link of `vertex`
    /// disconnects it, so the vertex can be unfolded there.
    Unfoldable {
        vertex: VertexId,
        node: (EdgeId, End),
    },
    Irreducible,
}

/// Check the visible conditions in a fixed order, returning the lowest-id
/// witness of the first condition that holds.  Defined for pre-complexes:
/// piece validity checks run this on disjoint unions of asterisks.
pub fn visible_status(x: &PreComplex) -> Visible {
    let g = x.skeleton();
    for v in g.vertices() {
        if g.valence(v) == 0 {
            return Visible::Reducible(Reduction::PointComponent { vertex: v });
        }
    }
    for v in g.vertices() {
        if g.valence(v) == 1 {
            return Visible::Reducible(Reduction::ValenceOne { vertex: v });
        }
    }
    for e in g.edge_ids() {
        if x.face_fiber(e).len() == 1 {
            return Visible::Reducible(Reduction::FreeFace { edge: e });
        }
    }
    let links: Vec<_> = g
        .vertices()
        .map(|v| {
            let nb = regular_neighborhood_vertex(x, v);
            let wh = whitehead_graph(&nb.complex).expect("vertex neighbourhood is an asterisk");
            (v, wh, nb.asterisk_ends)
        })
        .collect();
    for (v, wh, _) in &links {
        if !wh.is_connected() {
            return Visible::Reducible(Reduction::DisconnectedLink { vertex: *v });
        }
    }
    for (v, wh, ends) in &links {
        if let Some(&n) = wh.cut_nodes().iter().min() {
            return Visible::Unfoldable {
                vertex: *v,
                node: ends[n as usize],
            };
        }
    }
    Visible::Irreducible
}

/// Every place the complex can be unfolded: each vertex paired with each cut
/// node of its Whitehead graph.
pub fn unfold_candidates(x: &PreComplex) -> Vec<(VertexId, (EdgeId, End))> {
    let mut out = Vec::new();
    for v in x.skeleton().vertices() {
        let nb = regular_neighborhood_vertex(x, v);
        let wh = whitehead_graph(&nb.complex).expect("vertex neighbourhood is an asterisk");
        for n in wh.cut_nodes() {
            out.push((v, nb.asterisk_ends[n as usize]));
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("vertex {0:?} has no end {2:?} of edge {1:?}")]
    NoSuchEnd(VertexId, EdgeId, End),
    #[error("deleting the end does not disconnect the link of {0:?}")]
    NotDisconnecting(VertexId),
}

#[derive(Clone, Debug)]
pub struct Unfold {
    pub complex: PreComplex,
    /// Folds the unfolded complex back onto the input by identifying the
    /// duplicated edge pair, which merges the split vertex pair.
    pub fold_back: ComplexMorphism,
    /// The added vertex and the duplicate of the unfolded edge.
    pub vertex: VertexId,
    pub edge: EdgeId,
}

/// Pull `vertex` apart along `node`: ends on the cut node's own component of
/// the link stay put, ends on the other components move to a new vertex, and
/// the node's edge is duplicated so that each new vertex receives one copy.
pub fn unfold_step(
    x: &PreComplex,
    vertex: VertexId,
    node: (EdgeId, End),
) -> Result<Unfold, UnfoldError> {
    let nb = regular_neighborhood_vertex(x, vertex);
    let wh = whitehead_graph(&nb.complex).expect("vertex neighbourhood is an asterisk");
    let n0 = nb
        .asterisk_ends
        .iter()
        .position(|&p| p == node)
        .ok_or(UnfoldError::NoSuchEnd(vertex, node.0, node.1))? as u32;
    let split = wh.split_at(n0);
    if split.count < 2 {
        return Err(UnfoldError::NotDisconnecting(vertex));
    }
    let first = split
        .node_side
        .iter()
        .flatten()
        .next()
        .copied()
        .expect("a disconnected link has surviving nodes");

    let g = x.skeleton();
    let v2 = VertexId(g.n_vertices());
    let side_vertex = |side: u32| if side == first { vertex } else { v2 };

    let mut edges: Vec<EdgeEnds> = g.edge_ids().map(|e| g.ends(e)).collect();
    for (i, &(e, d)) in nb.asterisk_ends.iter().enumerate() {
        if i as u32 != n0 {
            let side = split.node_side[i].expect("surviving node has a side");
            edges[e.index()].set_end(d, Some(side_vertex(side)));
        }
    }
    let (e0, d0) = node;
    edges[e0.index()].set_end(d0, Some(vertex));
    let mut duplicate = edges[e0.index()];
    duplicate.set_end(d0, Some(v2));
    let e2 = EdgeId(g.n_edges());
    edges.push(duplicate);
    let skeleton =
        PreGraph::new(g.n_vertices() + 1, edges).expect("unfolded ends stay in range");

    let mut corner_side = vec![first; x.faces().n_vertices() as usize];
    let mut face_vertices = x.attach().vertex_map().to_vec();
    for (i, &(local, _, _)) in wh.links().iter().enumerate() {
        let ambient = nb.map.face_map().vertex_image(local);
        corner_side[ambient.index()] = split.link_side[i];
        face_vertices[ambient.index()] = side_vertex(split.link_side[i]);
    }
    let mut face_edges = x.attach().edge_map().to_vec();
    for u in x.face_fiber(e0) {
        let corner = x
            .faces()
            .end(u, d0)
            .expect("face edges of a complex have both ends");
        if corner_side[corner.index()] != first {
            face_edges[u.index()] = e2;
        }
    }
    let attach = PreGraphMorphism::new(x.faces().clone(), skeleton.clone(), face_vertices, face_edges)
        .expect("unfolding keeps the attaching map a morphism");
    let complex = PreComplex::new(attach).expect("unfolding preserves the complex conditions");

    let fold_vertices = g.vertices().chain([vertex]).collect();
    let fold_edges = g.edge_ids().chain([e0]).collect();
    let skeleton_map = PreGraphMorphism::new(skeleton, g.clone(), fold_vertices, fold_edges)
        .expect("fold-back commutes");
    let fold_back = ComplexMorphism::new(
        &complex,
        x,
        skeleton_map,
        PreGraphMorphism::identity(x.faces()),
    )
    .expect("fold-back is a morphism of complexes");
    debug_assert_eq!(complex.skeleton().n_vertices(), g.n_vertices() + 1);
    debug_assert_eq!(complex.skeleton().n_edges(), g.n_edges() + 1);
    Ok(Unfold {
        complex,
        fold_back,
        vertex: v2,
        edge: e2,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The witness refers to the resolved complex.
    Reducible(Reduction),
    Irreducible,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    /// Unfolds performed, in order, each on the complex of the moment.
    pub unfolds: Vec<(VertexId, (EdgeId, End))>,
    /// A priori bound on how many unfolds could have been needed.
    pub bound: u64,
    /// The unfolded complex on which the verdict is visible.
    pub resolved: PreComplex,
}

/// Unfold until the complex is visibly reducible or visibly irreducible,
/// consuming the lowest-id witness each round.
pub fn classify(x: &PreComplex) -> Classification {
    classify_inner(x, None)
}

/// Same verdict as `classify`, reached through a seed-shuffled choice of
/// unfold witnesses.
pub fn classify_with_seed(x: &PreComplex, seed: u64) -> Classification {
    classify_inner(x, Some(seed))
}

fn classify_inner(x: &PreComplex, seed: Option<u64>) -> Classification {
    // While any vertex can be unfolded every link is connected, which caps
    // 2E - V by the number of face edges; each unfold raises it by one.
    let slack = x.faces().n_edges() as i64
        - (2 * x.skeleton().n_edges() as i64 - x.skeleton().n_vertices() as i64);
    let bound = slack.max(0) as u64 + 1;
    let mut current = x.clone();
    let mut unfolds = Vec::new();
    loop {
        let status = visible_status(&current);
        let (vertex, node) = match status {
            Visible::Reducible(r) => {
                return Classification {
                    verdict: Verdict::Reducible(r),
                    unfolds,
                    bound,
                    resolved: current,
                }
            }
            Visible::Irreducible => {
                return Classification {
                    verdict: Verdict::Irreducible,
                    unfolds,
                    bound,
                    resolved: current,
                }
            }
            Visible::Unfoldable { vertex, node } => match seed {
                None => (vertex, node),
                Some(s) => {
                    let mut candidates = unfold_candidates(&current);
                    seeded_shuffle(&mut candidates, s.wrapping_add(unfolds.len() as u64));
                    candidates[0]
                }
            },
        };
        assert!(
            (unfolds.len() as u64) < bound,
            "unfolding exceeded its termination bound"
        );
        let step = unfold_step(&current, vertex, node).expect("candidate disconnects its link");
        unfolds.push((vertex, node));
        current = step.complex;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CollapseError {
    #[error("edge {0:?} has {1} face edges over it, not 1")]
    NotFreeFace(EdgeId, usize),
}

#[derive(Clone, Debug)]
pub struct Collapse {
    pub complex: PreComplex,
    pub inclusion: ComplexMorphism,
}

/// Remove a free face: delete the edge together with the whole face cycle
/// running through it, leaving a deformation retract.
pub fn collapse_free_face(x: &PreComplex, e: EdgeId) -> Result<Collapse, CollapseError> {
    let fiber = x.face_fiber(e);
    let &[u] = fiber.as_slice() else {
        return Err(CollapseError::NotFreeFace(e, fiber.len()));
    };
    let fc = x.face_components();
    let dead = fc.of_edge[u.index()];
    let keep_v = vec![true; x.skeleton().n_vertices() as usize];
    let keep_e: Vec<bool> = x.skeleton().edge_ids().map(|f| f != e).collect();
    let keep_fv: Vec<bool> = fc.of_vertex.iter().map(|&c| c != dead).collect();
    let keep_fe: Vec<bool> = fc.of_edge.iter().map(|&c| c != dead).collect();
    let (complex, inclusion) = keep_subcomplex(x, &keep_v, &keep_e, &keep_fv, &keep_fe);
    Ok(Collapse { complex, inclusion })
}

#[derive(Clone, Debug)]
pub struct Trim {
    pub complex: PreComplex,
    pub inclusion: ComplexMorphism,
    pub removed_edges: u32,
}

/// Remove valence-1 vertices and their edges until none remain.  Such edges
/// never carry faces: a corner over a valence-1 vertex would need both
/// halves on the single end, which the attaching immersion forbids.
pub fn trim(x: &PreComplex) -> Trim {
    let g = x.skeleton();
    let mut keep_v = vec![true; g.n_vertices() as usize];
    let mut keep_e = vec![true; g.n_edges() as usize];
    let mut valence: Vec<usize> = g.vertices().map(|v| g.valence(v)).collect();
    let incident: Vec<Vec<(EdgeId, End)>> = g.vertices().map(|v| g.ends_at(v)).collect();
    let mut stack: Vec<VertexId> = g.vertices().filter(|v| g.valence(*v) == 1).collect();
    let mut removed_edges = 0;
    while let Some(v) = stack.pop() {
        if !keep_v[v.index()] || valence[v.index()] != 1 {
            continue;
        }
        let &(e, d) = incident[v.index()]
            .iter()
            .find(|&&(e, _)| keep_e[e.index()])
            .expect("valence-1 vertex keeps one incident edge");
        debug_assert!(x.face_fiber(e).is_empty());
        keep_v[v.index()] = false;
        keep_e[e.index()] = false;
        removed_edges += 1;
        let far = g.end(e, d.other()).expect("complex edges have both ends");
        valence[far.index()] -= 1;
        if valence[far.index()] == 1 {
            stack.push(far);
        }
    }
    let all_fv = vec![true; x.faces().n_vertices() as usize];
    let all_fe = vec![true; x.faces().n_edges() as usize];
    let (complex, inclusion) = keep_subcomplex(x, &keep_v, &keep_e, &all_fv, &all_fe);
    Trim {
        complex,
        inclusion,
        removed_edges,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WedgeError {
    #[error("the link of {0:?} is connected")]
    LinkConnected(VertexId),
}

#[derive(Clone, Debug)]
pub struct WedgeSplit {
    pub complex: PreComplex,
    /// Merges the new vertex back into the split one.
    pub merge: ComplexMorphism,
    pub vertex: VertexId,
}

/// Split a vertex with disconnected Whitehead graph in two: the component of
/// the lowest node keeps the vertex, every other component moves to a new
/// one.  No edges are added; corners follow their nodes.
pub fn wedge_split(x: &PreComplex, vertex: VertexId) -> Result<WedgeSplit, WedgeError> {
    let nb = regular_neighborhood_vertex(x, vertex);
    let wh = whitehead_graph(&nb.complex).expect("vertex neighbourhood is an asterisk");
    let (count, comp) = wh.node_components();
    if count < 2 {
        return Err(WedgeError::LinkConnected(vertex));
    }
    let first = comp[0];
    let g = x.skeleton();
    let v2 = VertexId(g.n_vertices());

    let mut edges: Vec<EdgeEnds> = g.edge_ids().map(|e| g.ends(e)).collect();
    for (i, &(e, d)) in nb.asterisk_ends.iter().enumerate() {
        if comp[i] != first {
            edges[e.index()].set_end(d, Some(v2));
        }
    }
    let skeleton = PreGraph::new(g.n_vertices() + 1, edges).expect("split ends stay in range");

    let mut face_vertices = x.attach().vertex_map().to_vec();
    for &(local, a, b) in wh.links() {
        debug_assert_eq!(comp[a as usize], comp[b as usize]);
        if comp[a as usize] != first {
            let ambient = nb.map.face_map().vertex_image(local);
            face_vertices[ambient.index()] = v2;
        }
    }
    let attach = PreGraphMorphism::new(
        x.faces().clone(),
        skeleton.clone(),
        face_vertices,
        x.attach().edge_map().to_vec(),
    )
    .expect("splitting keeps the attaching map a morphism");
    let complex = PreComplex::new(attach).expect("splitting preserves the complex conditions");

    let merge_vertices = g.vertices().chain([vertex]).collect();
    let skeleton_map = PreGraphMorphism::new(
        skeleton,
        g.clone(),
        merge_vertices,
        g.edge_ids().collect(),
    )
    .expect("merge commutes");
    let merge = ComplexMorphism::new(
        &complex,
        x,
        skeleton_map,
        PreGraphMorphism::identity(x.faces()),
    )
    .expect("merge is a morphism of complexes");
    Ok(WedgeSplit {
        complex,
        merge,
        vertex: v2,
    })
}

/// Restriction of a complex to the marked cells; the caller keeps whole face
/// components and everything their attaching map needs.
fn keep_subcomplex(
    x: &PreComplex,
    keep_v: &[bool],
    keep_e: &[bool],
    keep_fv: &[bool],
    keep_fe: &[bool],
) -> (PreComplex, ComplexMorphism) {
    fn pack(
        g: &PreGraph,
        keep_v: &[bool],
        keep_e: &[bool],
    ) -> (PreGraph, Vec<VertexId>, Vec<EdgeId>, Vec<u32>, Vec<u32>) {
        let mut new_v = vec![u32::MAX; g.n_vertices() as usize];
        let mut old_v = Vec::new();
        for v in g.vertices() {
            if keep_v[v.index()] {
                new_v[v.index()] = old_v.len() as u32;
                old_v.push(v);
            }
        }
        let mut sub = PreGraph::discrete(old_v.len() as u32);
        let mut new_e = vec![u32::MAX; g.n_edges() as usize];
        let mut old_e = Vec::new();
        for e in g.edge_ids() {
            if keep_e[e.index()] {
                let relabel = |o: Option<VertexId>| {
                    o.map(|v| {
                        debug_assert!(keep_v[v.index()], "kept edge ends at a kept vertex");
                        VertexId(new_v[v.index()])
                    })
                };
                let ends = g.ends(e);
                new_e[e.index()] = old_e.len() as u32;
                old_e.push(e);
                sub.push_edge(EdgeEnds::new(
                    relabel(ends.end(End::Iota)),
                    relabel(ends.end(End::Tau)),
                ))
                .expect("relabelled ends are in range");
            }
        }
        (sub, old_v, old_e, new_v, new_e)
    }

    let (skel, old_v, old_e, new_v, new_e) = pack(x.skeleton(), keep_v, keep_e);
    let (faces, old_fv, old_fe, _, _) = pack(x.faces(), keep_fv, keep_fe);
    let attach_v = old_fv
        .iter()
        .map(|&s| VertexId(new_v[x.attach().vertex_image(s).index()]))
        .collect();
    let attach_e = old_fe
        .iter()
        .map(|&u| EdgeId(new_e[x.attach().edge_image(u).index()]))
        .collect();
    let attach = PreGraphMorphism::new(faces.clone(), skel.clone(), attach_v, attach_e)
        .expect("kept faces attach to kept skeleton");
    let complex = PreComplex::new(attach).expect("restriction of a complex is a complex");
    let skeleton_map = PreGraphMorphism::new(skel, x.skeleton().clone(), old_v, old_e)
        .expect("inclusion commutes");
    let face_map = PreGraphMorphism::new(faces, x.faces().clone(), old_fv, old_fe)
        .expect("face inclusion commutes");
    let inclusion = ComplexMorphism::new(&complex, x, skeleton_map, face_map)
        .expect("inclusion is a morphism of complexes");
    (complex, inclusion)
}

/// Closed walk of each face cycle as a signed word in skeleton edges.
pub(crate) fn face_words(x: &PreComplex) -> Vec<Vec<(EdgeId, bool)>> {
    let fc = x.face_components();
    let mut words: Vec<Option<Vec<(EdgeId, bool)>>> = vec![None; fc.count as usize];
    for s in x.faces().vertices() {
        let comp = fc.of_vertex[s.index()] as usize;
        if words[comp].is_some() {
            continue;
        }
        let mut word = Vec::with_capacity(fc.n_edges[comp] as usize);
        let mut exit = x.corner_halves(s)[1];
        loop {
            let (u, d) = exit;
            word.push((x.attach().edge_image(u), d == End::Iota));
            let next = x
                .faces()
                .end(u, d.other())
                .expect("face cycles have both ends");
            if next == s {
                break;
            }
            let [h0, h1] = x.corner_halves(next);
            exit = if h0 == (u, d.other()) { h1 } else { h0 };
        }
        debug_assert_eq!(word.len(), fc.n_edges[comp] as usize);
        words[comp] = Some(word);
    }
    words.into_iter().map(|w| w.unwrap_or_default()).collect()
}

/// Net chord traversals of every face cycle, over a spanning forest of the
/// skeleton: one row per chord, one column per face cycle.  The cokernel of
/// this matrix is the first integral homology of the complex.
pub(crate) fn face_cycle_matrix(x: &PreComplex) -> (usize, Vec<Vec<BigInt>>) {
    let g = x.skeleton();
    let mut visited = vec![false; g.n_vertices() as usize];
    let mut in_tree = vec![false; g.n_edges() as usize];
    for root in g.vertices() {
        if visited[root.index()] {
            continue;
        }
        visited[root.index()] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for (e, d) in g.ends_at(v) {
                let far = g.end(e, d.other()).expect("complex edges have both ends");
                if !visited[far.index()] {
                    visited[far.index()] = true;
                    in_tree[e.index()] = true;
                    stack.push(far);
                }
            }
        }
    }
    let mut chord = vec![None; g.n_edges() as usize];
    let mut n_chords = 0;
    for e in g.edge_ids() {
        if !in_tree[e.index()] {
            chord[e.index()] = Some(n_chords);
            n_chords += 1;
        }
    }
    let words = face_words(x);
    let mut matrix = vec![vec![BigInt::zero(); words.len()]; n_chords];
    for (col, word) in words.iter().enumerate() {
        for &(e, forward) in word {
            if let Some(row) = chord[e.index()] {
                if forward {
                    matrix[row][col] += 1;
                } else {
                    matrix[row][col] -= 1;
                }
            }
        }
    }
    (n_chords, matrix)
}

/// True when integer column operations and row operations diagonalise the
/// matrix with a unit in every row, i.e. its cokernel is trivial.
fn diagonalizes_to_units(mut m: Vec<Vec<BigInt>>, rows: usize) -> bool {
    let cols = m.first().map_or(0, Vec::len);
    for k in 0..rows {
        let pivot = (k..rows)
            .flat_map(|i| (k..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| !m[i][j].is_zero())
            .min_by_key(|&(i, j)| m[i][j].abs());
        let Some((pi, pj)) = pivot else {
            return false;
        };
        m.swap(k, pi);
        for row in &mut m {
            row.swap(k, pj);
        }
        loop {
            for i in k + 1..rows {
                while !m[i][k].is_zero() {
                    let q = &m[i][k] / &m[k][k];
                    if !q.is_zero() {
                        let pivot_row = m[k].clone();
                        for (j, p) in pivot_row.iter().enumerate() {
                            let t = &q * p;
                            m[i][j] -= t;
                        }
                    }
                    if !m[i][k].is_zero() {
                        m.swap(i, k);
                    }
                }
            }
            for j in k + 1..cols {
                while !m[k][j].is_zero() {
                    let q = &m[k][j] / &m[k][k];
                    if !q.is_zero() {
                        for i in 0..rows {
                            let t = &q * &m[i][k];
                            m[i][j] -= t;
                        }
                    }
                    if !m[k][j].is_zero() {
                        for row in &mut m {
                            row.swap(j, k);
                        }
                    }
                }
            }
            if (k + 1..rows).all(|i| m[i][k].is_zero()) {
                break;
            }
        }
        if !m[k][k].abs().is_one() {
            return false;
        }
    }
    true
}

/// Certify that a connected complex is contractible: its face cycles must
/// span the cycle space of the skeleton with unit cokernel, and a greedy run
/// of trims and free-face collapses must reach a point.
pub fn certify_contractible(x: &PreComplex) -> bool {
    let (rows, matrix) = face_cycle_matrix(x);
    if !diagonalizes_to_units(matrix, rows) {
        return false;
    }
    let mut current = trim(x).complex;
    loop {
        if current.skeleton().n_edges() == 0 {
            return true;
        }
        let free = current
            .skeleton()
            .edge_ids()
            .find(|&e| current.face_fiber(e).len() == 1);
        let Some(e) = free else {
            return false;
        };
        current = collapse_free_face(&current, e)
            .expect("fiber just checked")
            .complex;
        current = trim(&current).complex;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("irreducible cores are built for connected complexes")]
    Disconnected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoreStep {
    Trim { edges: u32 },
    Collapse { edge: EdgeId },
    Split { vertex: VertexId },
    DropParts { dropped: u32 },
    Unfold { vertex: VertexId, node: (EdgeId, End) },
    Fold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Undetermined {
    /// Every piece of the complex certified contractible, so the fundamental
    /// group is trivial, outside this construction's remit.
    NothingLeft,
    /// A wedge split left the complex connected, exhibiting a free splitting
    /// of the fundamental group, outside this construction's remit.
    SplitStaysConnected { vertex: VertexId },
    /// Several wedge parts resisted certification; which to keep depends on
    /// which are simply connected, which is not decided here.
    AmbiguousParts { candidates: u32 },
    /// Folding the reduction onto the input collapsed face cells.
    FoldCollapsesFaces,
}

#[derive(Clone, Debug)]
pub enum CoreOutcome {
    Core {
        complex: PreComplex,
        /// Branched immersion of the core into the input.
        map: ComplexMorphism,
        trail: Vec<CoreStep>,
    },
    Undetermined {
        reason: Undetermined,
        trail: Vec<CoreStep>,
    },
}

/// Reduce a connected complex to an irreducible one mapping into it by a
/// branched immersion.  The caller asserts that the fundamental group is
/// neither freely decomposable nor free; inputs violating that surface as
/// `Undetermined` outcomes rather than wrong cores.
pub fn irreducible_core(x: &PreComplex) -> Result<CoreOutcome, CoreError> {
    if !x.skeleton().is_connected() {
        return Err(CoreError::Disconnected);
    }
    let mut current = x.clone();
    let mut back = ComplexMorphism::identity(x);
    let mut trail = Vec::new();
    let l = x.faces().n_edges() as u64;
    let mut fuel =
        (l + 1) * (x.skeleton().n_vertices() as u64 + x.skeleton().n_edges() as u64 + l + 4) + 16;

    let reason = loop {
        assert!(fuel > 0, "core reduction exceeded its termination bound");
        fuel -= 1;
        match visible_status(&current) {
            Visible::Irreducible => break None,
            Visible::Unfoldable { vertex, node } => {
                let step = unfold_step(&current, vertex, node).expect("witness disconnects");
                trail.push(CoreStep::Unfold { vertex, node });
                back = step.fold_back.then(&back).expect("chain of maps aligns");
                current = step.complex;
            }
            Visible::Reducible(Reduction::ValenceOne { .. }) => {
                let step = trim(&current);
                trail.push(CoreStep::Trim {
                    edges: step.removed_edges,
                });
                back = step.inclusion.then(&back).expect("chain of maps aligns");
                current = step.complex;
            }
            Visible::Reducible(Reduction::FreeFace { edge }) => {
                let step = collapse_free_face(&current, edge).expect("fiber just checked");
                trail.push(CoreStep::Collapse { edge });
                back = step.inclusion.then(&back).expect("chain of maps aligns");
                current = step.complex;
            }
            Visible::Reducible(Reduction::DisconnectedLink { vertex }) => {
                let step = wedge_split(&current, vertex).expect("link just checked");
                trail.push(CoreStep::Split { vertex });
                let split_back = step.merge.then(&back).expect("chain of maps aligns");
                let parts = step.complex.split_components();
                if parts.len() == 1 {
                    break Some(Undetermined::SplitStaysConnected { vertex });
                }
                match keep_one_part(parts, &split_back, &mut trail) {
                    Ok((part, map)) => {
                        current = part;
                        back = map;
                    }
                    Err(reason) => break Some(reason),
                }
            }
            Visible::Reducible(Reduction::PointComponent { .. }) => {
                let parts = current.split_components();
                match keep_one_part(parts, &back, &mut trail) {
                    Ok((part, map)) => {
                        current = part;
                        back = map;
                    }
                    Err(reason) => break Some(reason),
                }
            }
        }
    };
    if let Some(reason) = reason {
        return Ok(CoreOutcome::Undetermined { reason, trail });
    }
    match folded_representative(&back) {
        Ok(folded) => {
            trail.push(CoreStep::Fold);
            debug_assert!(classify_map(&folded.f1).branched_immersion);
            Ok(CoreOutcome::Core {
                complex: folded.complex,
                map: folded.f1,
                trail,
            })
        }
        Err(FoldedRepError::FacesCollapse(_)) => Ok(CoreOutcome::Undetermined {
            reason: Undetermined::FoldCollapsesFaces,
            trail,
        }),
        Err(FoldedRepError::NotComplexes) => unreachable!("both sides are complexes"),
    }
}

/// Drop every component certified contractible; exactly one may survive.
fn keep_one_part(
    parts: Vec<(PreComplex, ComplexMorphism)>,
    back: &ComplexMorphism,
    trail: &mut Vec<CoreStep>,
) -> Result<(PreComplex, ComplexMorphism), Undetermined> {
    let total = parts.len();
    let mut kept: Vec<_> = parts
        .into_iter()
        .filter(|(part, _)| !certify_contractible(part))
        .collect();
    if total > kept.len() {
        trail.push(CoreStep::DropParts {
            dropped: (total - kept.len()) as u32,
        });
    }
    match kept.len() {
        0 => Err(Undetermined::NothingLeft),
        1 => {
            let (part, inclusion) = kept.pop().expect("one part");
            let map = inclusion.then(back).expect("chain of maps aligns");
            Ok((part, map))
        }
        n => Err(Undetermined::AmbiguousParts {
            candidates: n as u32,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::fold_graph;
    use crate::canonical::are_isomorphic;
    use crate::folding::total_curvature;
    use crate::presentation::Presentation;
    use num::BigRational;

    fn complex_of(text: &str) -> PreComplex {
        Presentation::parse(text).unwrap().complex()
    }

    /// Two vertices joined by edge b, loops a1 and a2 on either side, one
    /// face along the commutator of a1 and b a2 b'.
    fn spectacles() -> PreComplex {
        let skeleton = PreGraph::graph(2, &[(0, 0), (1, 1), (0, 1)]);
        let faces = PreGraph::new(
            8,
            vec![
                EdgeEnds::new(Some(VertexId(0)), Some(VertexId(1))),
                EdgeEnds::new(Some(VertexId(1)), Some(VertexId(2))),
                EdgeEnds::new(Some(VertexId(2)), Some(VertexId(3))),
                EdgeEnds::new(Some(VertexId(4)), Some(VertexId(3))),
                EdgeEnds::new(Some(VertexId(5)), Some(VertexId(4))),
                EdgeEnds::new(Some(VertexId(5)), Some(VertexId(6))),
                EdgeEnds::new(Some(VertexId(7)), Some(VertexId(6))),
                EdgeEnds::new(Some(VertexId(0)), Some(VertexId(7))),
            ],
        )
        .unwrap();
        let images = [0, 2, 1, 2, 0, 2, 1, 2].map(EdgeId);
        let at = [0, 0, 1, 1, 0, 0, 1, 1].map(VertexId);
        let attach =
            PreGraphMorphism::new(faces, skeleton, at.to_vec(), images.to_vec()).unwrap();
        PreComplex::new(attach).unwrap()
    }

    #[test]
    fn visible_status_finds_each_condition_in_order() {
        let point = PreComplex::faceless(PreGraph::discrete(1));
        assert_eq!(
            visible_status(&point),
            Visible::Reducible(Reduction::PointComponent {
                vertex: VertexId(0)
            })
        );
        let arc = PreComplex::faceless(PreGraph::graph(2, &[(0, 1)]));
        assert_eq!(
            visible_status(&arc),
            Visible::Reducible(Reduction::ValenceOne {
                vertex: VertexId(0)
            })
        );
        let disc = complex_of("<a|a>");
        assert_eq!(
            visible_status(&disc),
            Visible::Reducible(Reduction::FreeFace { edge: EdgeId(0) })
        );
        let circle = PreComplex::faceless(PreGraph::graph(1, &[(0, 0)]));
        assert_eq!(
            visible_status(&circle),
            Visible::Reducible(Reduction::DisconnectedLink {
                vertex: VertexId(0)
            })
        );
        assert_eq!(
            visible_status(&spectacles()),
            Visible::Unfoldable {
                vertex: VertexId(0),
                node: (EdgeId(2), End::Iota),
            }
        );
        assert_eq!(visible_status(&complex_of("<a,b|aba'b'>")), Visible::Irreducible);
        assert_eq!(
            visible_status(&complex_of("<a,b,c|aabbcc>")),
            Visible::Irreducible
        );
    }

    #[test]
    fn spectacles_unfold_both_ways() {
        let x = spectacles();
        let candidates = unfold_candidates(&x);
        assert_eq!(
            candidates,
            vec![
                (VertexId(0), (EdgeId(2), End::Iota)),
                (VertexId(1), (EdgeId(2), End::Tau)),
            ]
        );
        for (v, node) in candidates {
            let unfolded = unfold_step(&x, v, node).unwrap();
            assert_eq!(unfolded.complex.skeleton().n_vertices(), 3);
            assert_eq!(unfolded.complex.skeleton().n_edges(), 4);
            assert_eq!(unfolded.complex.euler_characteristic(), 0);
            assert_eq!(visible_status(&unfolded.complex), Visible::Irreducible);
            assert_eq!(unfolded.complex.faces(), x.faces());
            let fold = fold_graph(unfolded.fold_back.skeleton_map());
            assert_eq!(fold.steps.len(), 1);
            assert!(fold.immersion.is_isomorphism());
        }
    }

    #[test]
    fn unfold_rejects_bad_witnesses() {
        let torus = complex_of("<a,b|aba'b'>");
        assert_eq!(
            unfold_step(&torus, VertexId(0), (EdgeId(0), End::Iota)).unwrap_err(),
            UnfoldError::NotDisconnecting(VertexId(0))
        );
        assert_eq!(
            unfold_step(&torus, VertexId(0), (EdgeId(5), End::Iota)).unwrap_err(),
            UnfoldError::NoSuchEnd(VertexId(0), EdgeId(5), End::Iota)
        );
    }

    #[test]
    fn classifies_the_standard_examples() {
        assert_eq!(
            classify(&complex_of("<a,b|aba'b'>")).verdict,
            Verdict::Irreducible
        );
        assert_eq!(
            classify(&complex_of("<a,b|ba b a^-2, abab^-2>")).verdict,
            Verdict::Irreducible
        );
        let wise = classify(&complex_of("<a,b|abab^2>"));
        assert_eq!(wise.unfolds, vec![(VertexId(0), (EdgeId(1), End::Iota))]);
        assert!(matches!(
            wise.verdict,
            Verdict::Reducible(Reduction::FreeFace { .. })
        ));
        let spect = classify(&spectacles());
        assert_eq!(spect.verdict, Verdict::Irreducible);
        assert_eq!(spect.unfolds.len(), 1);
    }

    #[test]
    fn classification_is_unfold_order_independent() {
        for text in ["<a,b|abab^2>", "<a,b|ba b a^-2, abab^-2>", "<a,b,c|ab^2c^2ab^2c^2b^2c^2>"] {
            let x = complex_of(text);
            let reference = matches!(classify(&x).verdict, Verdict::Reducible(_));
            for seed in 0..5 {
                let shuffled = classify_with_seed(&x, seed).verdict;
                assert_eq!(
                    matches!(shuffled, Verdict::Reducible(_)),
                    reference,
                    "{}",
                    text
                );
            }
        }
    }

    #[test]
    fn collapse_and_trim_shrink_the_disc() {
        let disc = complex_of("<a|a>");
        let collapsed = collapse_free_face(&disc, EdgeId(0)).unwrap();
        assert_eq!(collapsed.complex.skeleton().n_vertices(), 1);
        assert_eq!(collapsed.complex.skeleton().n_edges(), 0);
        assert_eq!(collapsed.complex.faces().n_edges(), 0);
        assert_eq!(
            collapse_free_face(&complex_of("<a,b|aba'b'>"), EdgeId(0)).unwrap_err(),
            CollapseError::NotFreeFace(EdgeId(0), 2)
        );

        let mut path = PreGraph::graph(3, &[(0, 1), (1, 2)]);
        path.push_edge(EdgeEnds::new(Some(VertexId(2)), Some(VertexId(2))))
            .unwrap();
        let trimmed = trim(&PreComplex::faceless(path));
        assert_eq!(trimmed.removed_edges, 2);
        assert_eq!(trimmed.complex.skeleton().n_vertices(), 1);
        assert_eq!(trimmed.complex.skeleton().n_edges(), 1);
    }

    #[test]
    fn wedge_split_separates_a_bouquet() {
        let two_discs = complex_of("<a,b|aa,bb>");
        let split = wedge_split(&two_discs, VertexId(0)).unwrap();
        assert_eq!(split.complex.skeleton().n_vertices(), 2);
        let parts = split.complex.split_components();
        assert_eq!(parts.len(), 2);
        assert!(fold_graph(split.merge.skeleton_map()).steps.is_empty());
        assert_eq!(
            wedge_split(&complex_of("<a,b|aba'b'>"), VertexId(0)).unwrap_err(),
            WedgeError::LinkConnected(VertexId(0))
        );
    }

    #[test]
    fn contractibility_certification() {
        assert!(certify_contractible(&PreComplex::faceless(
            PreGraph::discrete(1)
        )));
        assert!(certify_contractible(&PreComplex::faceless(PreGraph::graph(
            3,
            &[(0, 1), (1, 2)]
        ))));
        assert!(certify_contractible(&complex_of("<a|a>")));
        assert!(!certify_contractible(&complex_of("<a,b|aba'b'>")));
        assert!(!certify_contractible(&PreComplex::faceless(PreGraph::graph(
            1,
            &[(0, 0)]
        ))));
        assert!(!certify_contractible(&complex_of("<a|aa>")));
    }

    #[test]
    fn core_of_the_spectacles_is_itself() {
        let x = spectacles();
        let CoreOutcome::Core { complex, map, trail } = irreducible_core(&x).unwrap() else {
            panic!("spectacles complex has a core");
        };
        assert!(are_isomorphic(&complex, &x));
        let class = classify_map(&map);
        assert!(class.branched_immersion);
        assert_eq!(classify(&complex).verdict, Verdict::Irreducible);
        assert_eq!(
            trail,
            vec![
                CoreStep::Unfold {
                    vertex: VertexId(0),
                    node: (EdgeId(2), End::Iota)
                },
                CoreStep::Fold
            ]
        );
        assert_eq!(total_curvature(&map).unwrap(), BigRational::zero());
    }

    #[test]
    fn core_collapses_a_wedged_disc_onto_the_torus() {
        let x = complex_of("<a,b,c|aba'b', c>");
        let CoreOutcome::Core { complex, map, .. } = irreducible_core(&x).unwrap() else {
            panic!("torus wedge disc has a core");
        };
        assert!(are_isomorphic(&complex, &complex_of("<a,b|aba'b'>")));
        assert!(classify_map(&map).branched_immersion);
    }

    #[test]
    fn core_surfaces_assertion_violations_as_undetermined() {
        let disc = complex_of("<a|a>");
        let CoreOutcome::Undetermined { reason, .. } = irreducible_core(&disc).unwrap() else {
            panic!("a contractible complex has no core");
        };
        assert_eq!(reason, Undetermined::NothingLeft);

        let circle = PreComplex::faceless(PreGraph::graph(1, &[(0, 0)]));
        let CoreOutcome::Undetermined { reason, .. } = irreducible_core(&circle).unwrap() else {
            panic!("the circle has no core");
        };
        assert_eq!(
            reason,
            Undetermined::SplitStaysConnected {
                vertex: VertexId(0)
            }
        );

        let disconnected = disjoint_discs();
        assert_eq!(
            irreducible_core(&disconnected).unwrap_err(),
            CoreError::Disconnected
        );
    }

    fn disjoint_discs() -> PreComplex {
        let parts = [complex_of("<a|a>"), complex_of("<a|a>")];
        crate::precomplex::disjoint_union_complexes(&parts).complex
    }
}
