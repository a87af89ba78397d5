//! Folding maps of pre-graphs and the classification of maps between
//! pre-complexes.
//!
//! Every morphism of pre-graphs factors as a quotient followed by an
//! immersion; the quotient is computed by repeatedly folding the
//! lexicographically least pair of edges that share an end and an image.
//! Applied to the skeleton of a map of complexes this yields the folded
//! representative: the original map factors through a complex whose map
//! onward is a branched immersion, with the faces carried along a fiber
//! product.  A map is face-essential when this factorisation loses no face
//! cells.
//!
//! The same module measures maps: the degree of each face (faces of
//! complexes must cover faces), the total curvature `deg(f) + chi(G)`, and
//! the four nested classes branched map, branched immersion, immersion and
//! face equivalence.

use crate::ids::{EdgeId, End, VertexId};
use crate::precomplex::{ComplexMorphism, PreComplex, PreComplexError};
use crate::pregraph::{fiber_product, image_subgraph, EdgeEnds, PreGraph, PreGraphMorphism, UnionFind};
use num::{BigInt, BigRational};
use std::collections::HashMap;
use thiserror::Error;

/// One fold: at `vertex`, the `end` ends of `kept` and `merged` coincide and
/// the edges have the same image, so `merged` is identified with `kept`.
/// Cells are named by the smallest original id in their class at fold time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoldStep {
    pub vertex: VertexId,
    pub end: End,
    pub kept: EdgeId,
    pub merged: EdgeId,
}

/// Factorisation of a pre-graph morphism as projection then immersion.
#[derive(Clone, Debug)]
pub struct GraphFold {
    pub steps: Vec<FoldStep>,
    pub projection: PreGraphMorphism,
    pub immersion: PreGraphMorphism,
}

/// Fold `f` to an immersion.  Each round scans for the least violating pair
/// in the order (vertex class, end, kept edge, merged edge), with classes
/// named by their smallest original id, so the fold sequence is canonical.
pub fn fold_graph(f: &PreGraphMorphism) -> GraphFold {
    let g = f.source();
    let nv = g.n_vertices() as usize;
    let ne = g.n_edges() as usize;
    let mut vuf = UnionFind::new(nv);
    let mut euf = UnionFind::new(ne);
    let mut ends: Vec<EdgeEnds> = g.edge_ids().map(|e| g.ends(e)).collect();
    let mut steps = Vec::new();

    loop {
        let mut best: Option<(u32, End, u32, u32)> = None;
        let mut buckets: HashMap<(u32, End, EdgeId), (u32, u32)> = HashMap::new();
        for e in 0..ne as u32 {
            if euf.min_of(e as usize) != e {
                continue;
            }
            for d in End::BOTH {
                if let Some(v) = ends[e as usize].end(d) {
                    let key = (vuf.min_of(v.index()), d, f.edge_image(EdgeId(e)));
                    buckets
                        .entry(key)
                        .and_modify(|pair| {
                            if e < pair.0 {
                                pair.1 = pair.0;
                                pair.0 = e;
                            } else if e < pair.1 {
                                pair.1 = e;
                            }
                        })
                        .or_insert((e, u32::MAX));
                }
            }
        }
        for (&(vmin, d, _), &(e1, e2)) in &buckets {
            if e2 != u32::MAX {
                let cand = (vmin, d, e1, e2);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let Some((vmin, d, e1, e2)) = best else { break };
        steps.push(FoldStep {
            vertex: VertexId(vmin),
            end: d,
            kept: EdgeId(e1),
            merged: EdgeId(e2),
        });
        for dd in End::BOTH {
            match (ends[e1 as usize].end(dd), ends[e2 as usize].end(dd)) {
                (Some(a), Some(b)) => {
                    vuf.union(a.index(), b.index());
                }
                (None, Some(b)) => ends[e1 as usize].set_end(dd, Some(b)),
                _ => {}
            }
        }
        euf.union(e1 as usize, e2 as usize);
    }

    let mut new_vertex: Vec<Option<VertexId>> = vec![None; nv];
    let mut folded = PreGraph::discrete(0);
    for v in 0..nv {
        if vuf.min_of(v) == v as u32 {
            new_vertex[v] = Some(folded.add_vertex());
        }
    }
    let proj_v: Vec<VertexId> = (0..nv)
        .map(|v| new_vertex[vuf.min_of(v) as usize].unwrap())
        .collect();
    let mut new_edge: Vec<Option<EdgeId>> = vec![None; ne];
    let mut edge_reps = Vec::new();
    for e in 0..ne {
        if euf.min_of(e) == e as u32 {
            let mut folded_ends = EdgeEnds::new(None, None);
            for d in End::BOTH {
                if let Some(v) = ends[e].end(d) {
                    folded_ends.set_end(d, Some(proj_v[v.index()]));
                }
            }
            new_edge[e] = Some(folded.push_edge(folded_ends).expect("vertex exists"));
            edge_reps.push(e);
        }
    }
    let proj_e: Vec<EdgeId> = (0..ne)
        .map(|e| new_edge[euf.min_of(e) as usize].unwrap())
        .collect();

    let immersion = PreGraphMorphism::new(
        folded.clone(),
        f.target().clone(),
        (0..nv)
            .filter(|&v| vuf.min_of(v) == v as u32)
            .map(|v| f.vertex_image(VertexId(v as u32)))
            .collect(),
        edge_reps
            .iter()
            .map(|&e| f.edge_image(EdgeId(e as u32)))
            .collect(),
    )
    .expect("folded map is a morphism");
    let projection = PreGraphMorphism::new(g.clone(), folded, proj_v, proj_e)
        .expect("projection onto the folded graph is a morphism");
    debug_assert!(immersion.is_immersion());
    debug_assert_eq!(&projection.then(&immersion).unwrap(), f);
    GraphFold {
        steps,
        projection,
        immersion,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DegreeError {
    #[error("degree is defined for maps between complexes")]
    NotComplexes,
    #[error("face component {component} does not cover its image face")]
    FaceNotCovering { component: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDegree {
    pub per_component: Vec<u64>,
    pub total: u64,
}

/// Degree of a map between complexes: each face of the source must cover its
/// image face (local injectivity at every corner), and contributes the ratio
/// of the lengths.
pub fn degree(f: &ComplexMorphism) -> Result<MapDegree, DegreeError> {
    if !f.source().is_complex() || !f.target().is_complex() {
        return Err(DegreeError::NotComplexes);
    }
    let src = f.source();
    let src_fc = src.face_components();
    let tgt_fc = f.target().face_components();
    for s in src.faces().vertices() {
        let [(u1, d1), (u2, d2)] = src.corner_halves(s);
        let im1 = (f.face_map().edge_image(u1), d1);
        let im2 = (f.face_map().edge_image(u2), d2);
        if im1 == im2 {
            return Err(DegreeError::FaceNotCovering {
                component: src_fc.of_vertex[s.index()],
            });
        }
    }
    let mut first_edge: Vec<Option<EdgeId>> = vec![None; src_fc.count as usize];
    for u in src.faces().edge_ids() {
        first_edge[src_fc.of_edge[u.index()] as usize].get_or_insert(u);
    }
    let mut per_component = Vec::with_capacity(src_fc.count as usize);
    for c in 0..src_fc.count {
        let u = first_edge[c as usize].expect("face components have edges");
        let l_src = src_fc.n_edges[c as usize] as u64;
        let l_tgt = tgt_fc.cycle_length_of_edge(f.face_map().edge_image(u)) as u64;
        if l_src % l_tgt != 0 {
            return Err(DegreeError::FaceNotCovering { component: c });
        }
        per_component.push(l_src / l_tgt);
    }
    let total = per_component.iter().sum();
    Ok(MapDegree {
        per_component,
        total,
    })
}

/// The four nested classes of a map of pre-complexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapClass {
    /// Face fibers over each skeleton edge inject into the image fibers.
    pub branched_map: bool,
    /// Additionally the skeleton is an immersion and corners inject.
    pub branched_immersion: bool,
    /// Additionally each face component embeds.
    pub immersion: bool,
    /// The face map is an isomorphism.
    pub face_equivalence: bool,
}

pub fn classify_map(f: &ComplexMorphism) -> MapClass {
    let branched_map = f.is_branched_map();

    let mut corners_inject = true;
    let mut by_vertex: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    for s in f.source().faces().vertices() {
        by_vertex
            .entry(f.source().attach().vertex_image(s))
            .or_default()
            .push(f.face_map().vertex_image(s));
    }
    for (_, mut images) in by_vertex {
        images.sort();
        if images.windows(2).any(|w| w[0] == w[1]) {
            corners_inject = false;
            break;
        }
    }
    let branched_immersion =
        branched_map && f.skeleton_map().is_immersion() && corners_inject;

    let fc = f.source().face_components();
    let mut comp_vertex_images: Vec<Vec<VertexId>> = vec![Vec::new(); fc.count as usize];
    let mut comp_edge_images: Vec<Vec<EdgeId>> = vec![Vec::new(); fc.count as usize];
    for s in f.source().faces().vertices() {
        comp_vertex_images[fc.of_vertex[s.index()] as usize].push(f.face_map().vertex_image(s));
    }
    for u in f.source().faces().edge_ids() {
        comp_edge_images[fc.of_edge[u.index()] as usize].push(f.face_map().edge_image(u));
    }
    let faces_embed = comp_vertex_images.iter_mut().all(|v| {
        v.sort();
        v.windows(2).all(|w| w[0] != w[1])
    }) && comp_edge_images.iter_mut().all(|v| {
        v.sort();
        v.windows(2).all(|w| w[0] != w[1])
    });
    let immersion = branched_immersion && faces_embed;

    let face_equivalence = f.face_map().is_isomorphism();
    MapClass {
        branched_map,
        branched_immersion,
        immersion,
        face_equivalence,
    }
}

/// Total curvature of a map between complexes: its degree plus the Euler
/// characteristic of the source skeleton.
pub fn total_curvature(f: &ComplexMorphism) -> Result<BigRational, DegreeError> {
    let deg = degree(f)?;
    let chi = f.source().skeleton().euler_characteristic();
    Ok(BigRational::from_integer(BigInt::from(
        deg.total as i64 + chi,
    )))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldedRepError {
    #[error("folded representative is defined for maps between complexes")]
    NotComplexes,
    #[error("distinct face cells collapse under folding: {0}")]
    FacesCollapse(PreComplexError),
}

/// Factorisation of a map of complexes through its folded representative.
#[derive(Clone, Debug)]
pub struct FoldedFactorization {
    /// The folded complex.
    pub complex: PreComplex,
    /// Quotient onto the folded complex.
    pub f0: ComplexMorphism,
    /// Branched immersion from the folded complex to the original target.
    pub f1: ComplexMorphism,
    pub steps: Vec<FoldStep>,
}

/// Fold the skeleton of `f`, pull the target's faces back along the folded
/// immersion and cut the pullback down to the image of the source's faces.
/// The map factors as a quotient `f0` followed by a branched immersion `f1`.
pub fn folded_representative(
    f: &ComplexMorphism,
) -> Result<FoldedFactorization, FoldedRepError> {
    if !f.source().is_complex() || !f.target().is_complex() {
        return Err(FoldedRepError::NotComplexes);
    }
    let fold = fold_graph(f.skeleton_map());
    let fp = fiber_product(f.target().attach(), &fold.immersion).expect("common target");
    let to_right = f
        .source()
        .attach()
        .then(&fold.projection)
        .expect("attaching then projection");
    let m = fp
        .mediating(f.face_map(), &to_right)
        .expect("faces factor through the pullback");
    let im = image_subgraph(&m);
    let attach = im.inclusion.then(&fp.right).expect("image includes");
    let complex = PreComplex::new(attach).map_err(FoldedRepError::FacesCollapse)?;
    let f0 = ComplexMorphism::new(
        f.source(),
        &complex,
        fold.projection.clone(),
        im.corestriction.clone(),
    )
    .expect("quotient onto the folded complex commutes");
    let f1 = ComplexMorphism::new(
        &complex,
        f.target(),
        fold.immersion.clone(),
        im.inclusion.then(&fp.left).expect("image includes"),
    )
    .expect("folded map commutes");
    debug_assert_eq!(&f0.then(&f1).expect("middle matches"), f);
    debug_assert!(classify_map(&f1).branched_immersion);
    Ok(FoldedFactorization {
        complex,
        f0,
        f1,
        steps: fold.steps,
    })
}

/// A map is face-essential when folding identifies no two of its face cells.
pub fn is_face_essential(f: &ComplexMorphism) -> Result<bool, FoldedRepError> {
    match folded_representative(f) {
        Ok(fr) => Ok(fr.complex.faces().n_vertices() == f.source().faces().n_vertices()
            && fr.complex.faces().n_edges() == f.source().faces().n_edges()),
        Err(FoldedRepError::FacesCollapse(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TripleError {
    #[error("the two maps do not share the middle pre-complex")]
    MiddleMismatch,
    #[error("the first map is not a face equivalence")]
    NotFaceEquivalence,
    #[error("the second map is not a branched immersion")]
    NotBranchedImmersion,
}

/// A face immersion: a face equivalence followed by a branched immersion.
#[derive(Clone, Debug)]
pub struct FaceImmersionTriple {
    f0: ComplexMorphism,
    f1: ComplexMorphism,
}

impl FaceImmersionTriple {
    pub fn new(f0: ComplexMorphism, f1: ComplexMorphism) -> Result<Self, TripleError> {
        if f0.target() != f1.source() {
            return Err(TripleError::MiddleMismatch);
        }
        if !classify_map(&f0).face_equivalence {
            return Err(TripleError::NotFaceEquivalence);
        }
        if !classify_map(&f1).branched_immersion {
            return Err(TripleError::NotBranchedImmersion);
        }
        Ok(FaceImmersionTriple { f0, f1 })
    }

    pub fn f0(&self) -> &ComplexMorphism {
        &self.f0
    }

    pub fn f1(&self) -> &ComplexMorphism {
        &self.f1
    }

    pub fn source(&self) -> &PreComplex {
        self.f0.source()
    }

    pub fn middle(&self) -> &PreComplex {
        self.f1.source()
    }

    pub fn target(&self) -> &PreComplex {
        self.f1.target()
    }

    pub fn composite(&self) -> ComplexMorphism {
        self.f0.then(&self.f1).expect("middle matches")
    }
}

/// Present a face-essential map of complexes as a face immersion via its
/// folded representative.
pub fn face_immersion_of(f: &ComplexMorphism) -> Result<FaceImmersionTriple, TripleError> {
    let fr = folded_representative(f).map_err(|_| TripleError::NotFaceEquivalence)?;
    FaceImmersionTriple::new(fr.f0, fr.f1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pregraph::PreGraph;

    fn rose(loops: u32) -> PreGraph {
        PreGraph::graph(1, &(0..loops).map(|_| (0, 0)).collect::<Vec<_>>())
    }

    /// One vertex, one loop, one face of length two over it.
    fn squared_loop() -> PreComplex {
        let attach = PreGraphMorphism::new(
            PreGraph::graph(2, &[(0, 1), (1, 0)]),
            rose(1),
            vec![VertexId(0); 2],
            vec![EdgeId(0); 2],
        )
        .unwrap();
        PreComplex::new(attach).unwrap()
    }

    #[test]
    fn fold_merges_edges_and_far_vertices() {
        // two edges leaving v0 with the same image fold together,
        // identifying their far endpoints
        let src = PreGraph::graph(3, &[(0, 1), (0, 2)]);
        let f = PreGraphMorphism::new(
            src,
            rose(1),
            vec![VertexId(0); 3],
            vec![EdgeId(0); 2],
        )
        .unwrap();
        let fold = fold_graph(&f);
        assert_eq!(
            fold.steps,
            vec![FoldStep {
                vertex: VertexId(0),
                end: End::Iota,
                kept: EdgeId(0),
                merged: EdgeId(1),
            }]
        );
        assert_eq!(fold.immersion.source().n_vertices(), 2);
        assert_eq!(fold.immersion.source().n_edges(), 1);
        assert!(fold.immersion.is_immersion());
        assert_eq!(
            fold.projection.vertex_map(),
            &[VertexId(0), VertexId(1), VertexId(1)]
        );
    }

    #[test]
    fn fold_cascades() {
        // a four-edge chain over two loops folds down to a rose
        let src = PreGraph::graph(5, &[(0, 1), (0, 2), (1, 3), (2, 4)]);
        let f = PreGraphMorphism::new(
            src,
            rose(2),
            vec![VertexId(0); 5],
            vec![EdgeId(0), EdgeId(0), EdgeId(1), EdgeId(1)],
        )
        .unwrap();
        let fold = fold_graph(&f);
        assert_eq!(fold.steps.len(), 2);
        assert_eq!(fold.immersion.source().n_edges(), 2);
        assert_eq!(fold.immersion.source().n_vertices(), 3);
        assert!(fold.immersion.is_immersion());
        // an already folded map has no steps
        let again = fold_graph(&fold.immersion);
        assert!(again.steps.is_empty());
        assert!(again.projection.is_isomorphism());
    }

    #[test]
    fn degree_of_a_double_cover() {
        let x = squared_loop();
        // genuine double cover: two vertices, two edges, both relator lifts
        let skel = PreGraph::graph(2, &[(0, 1), (1, 0)]);
        let faces = PreGraph::graph(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]);
        let attach = PreGraphMorphism::new(
            faces,
            skel,
            vec![VertexId(0), VertexId(1), VertexId(1), VertexId(0)],
            vec![EdgeId(0), EdgeId(1), EdgeId(1), EdgeId(0)],
        )
        .unwrap();
        let y = PreComplex::new(attach).unwrap();
        assert!(y.is_complex());
        let f = ComplexMorphism::new(
            &y,
            &x,
            PreGraphMorphism::new(
                y.skeleton().clone(),
                x.skeleton().clone(),
                vec![VertexId(0); 2],
                vec![EdgeId(0); 2],
            )
            .unwrap(),
            PreGraphMorphism::new(
                y.faces().clone(),
                x.faces().clone(),
                vec![VertexId(0), VertexId(1), VertexId(0), VertexId(1)],
                vec![EdgeId(0), EdgeId(1), EdgeId(0), EdgeId(1)],
            )
            .unwrap(),
        )
        .unwrap();
        let deg = degree(&f).unwrap();
        assert_eq!(deg.per_component, vec![1, 1]);
        assert_eq!(deg.total, 2);
        let class = classify_map(&f);
        assert!(class.branched_map);
        assert!(class.branched_immersion);
        assert!(class.immersion);
        assert!(!class.face_equivalence);
        // tau(f) = 2 + chi(two vertices, two edges) = 2 + 0
        assert_eq!(
            total_curvature(&f).unwrap(),
            BigRational::from_integer(BigInt::from(2))
        );
    }

    #[test]
    fn degree_of_a_face_wrap() {
        // one loop b with a face of length four mapping onto a face of
        // length two: a degree two face over an isomorphic skeleton
        let x = squared_loop();
        let faces = PreGraph::graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let attach = PreGraphMorphism::new(
            faces,
            rose(1),
            vec![VertexId(0); 4],
            vec![EdgeId(0); 4],
        )
        .unwrap();
        let y = PreComplex::new(attach).unwrap();
        let f = ComplexMorphism::new(
            &y,
            &x,
            PreGraphMorphism::identity(x.skeleton()),
            PreGraphMorphism::new(
                y.faces().clone(),
                x.faces().clone(),
                vec![VertexId(0), VertexId(1), VertexId(0), VertexId(1)],
                vec![EdgeId(0), EdgeId(1), EdgeId(0), EdgeId(1)],
            )
            .unwrap(),
        )
        .unwrap();
        let deg = degree(&f).unwrap();
        assert_eq!(deg.per_component, vec![2]);
        let class = classify_map(&f);
        // four face edges over one skeleton edge cannot inject into two
        assert!(!class.branched_map);
        assert!(!class.immersion);
    }

    /// Two loops with the face b1 b2' and the map to the squared loop that
    /// sends both face edges to the same image edge.
    fn collapsing_map() -> ComplexMorphism {
        let x = squared_loop();
        let faces = PreGraph::new(
            2,
            vec![
                EdgeEnds::new(Some(VertexId(0)), Some(VertexId(1))),
                EdgeEnds::new(Some(VertexId(0)), Some(VertexId(1))),
            ],
        )
        .unwrap();
        let attach = PreGraphMorphism::new(
            faces,
            rose(2),
            vec![VertexId(0); 2],
            vec![EdgeId(0), EdgeId(1)],
        )
        .unwrap();
        let y = PreComplex::new(attach).unwrap();
        ComplexMorphism::new(
            &y,
            &x,
            PreGraphMorphism::new(
                y.skeleton().clone(),
                x.skeleton().clone(),
                vec![VertexId(0)],
                vec![EdgeId(0); 2],
            )
            .unwrap(),
            PreGraphMorphism::new(
                y.faces().clone(),
                x.faces().clone(),
                vec![VertexId(0), VertexId(1)],
                vec![EdgeId(0); 2],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn collapsing_corners_break_covering_and_essentialness() {
        let f = collapsing_map();
        assert_eq!(
            degree(&f),
            Err(DegreeError::FaceNotCovering { component: 0 })
        );
        let class = classify_map(&f);
        assert!(class.branched_map);
        assert!(!class.branched_immersion);
        assert!(matches!(
            folded_representative(&f),
            Err(FoldedRepError::FacesCollapse(_))
        ));
        assert_eq!(is_face_essential(&f), Ok(false));
    }

    #[test]
    fn folded_representative_of_a_subdivided_relator() {
        // two loops with the face b1 b2 mapping onto the squared loop:
        // folding merges the loops and the faces survive intact
        let x = squared_loop();
        let faces = PreGraph::graph(2, &[(0, 1), (1, 0)]);
        let attach = PreGraphMorphism::new(
            faces,
            rose(2),
            vec![VertexId(0); 2],
            vec![EdgeId(0), EdgeId(1)],
        )
        .unwrap();
        let y = PreComplex::new(attach).unwrap();
        let f = ComplexMorphism::new(
            &y,
            &x,
            PreGraphMorphism::new(
                y.skeleton().clone(),
                x.skeleton().clone(),
                vec![VertexId(0)],
                vec![EdgeId(0); 2],
            )
            .unwrap(),
            PreGraphMorphism::identity(x.faces()),
        )
        .unwrap();
        let fr = folded_representative(&f).unwrap();
        assert_eq!(fr.steps.len(), 1);
        assert!(fr.complex.is_complex());
        assert_eq!(fr.complex.skeleton().n_edges(), 1);
        assert_eq!(fr.complex.faces().n_edges(), 2);
        assert!(classify_map(&fr.f1).branched_immersion);
        assert!(classify_map(&fr.f0).face_equivalence);
        assert_eq!(is_face_essential(&f), Ok(true));
        let triple = face_immersion_of(&f).unwrap();
        assert_eq!(triple.composite(), f);
        assert!(triple.middle().is_complex());
    }

    #[test]
    fn identity_triple() {
        let x = squared_loop();
        let id = ComplexMorphism::identity(&x);
        let triple = FaceImmersionTriple::new(id.clone(), id.clone()).unwrap();
        assert_eq!(triple.composite(), id);
        assert_eq!(
            total_curvature(&id).unwrap(),
            BigRational::from_integer(BigInt::from(1))
        );
        // tau = deg 1 + chi(rose) 0 = 1 = chi of the complex
        assert_eq!(x.euler_characteristic(), 1);
    }
}
