//! Canonical forms for pre-complexes and face immersions.
//!
//! Two pre-complexes get equal canonical forms exactly when they are
//! isomorphic; face immersion triples are canonised over their target, so
//! equality means isomorphism of the pair commuting with the maps down to
//! the (pointwise fixed) target.  The algorithm is colour refinement with
//! individualisation: cells become nodes of a labelled digraph, colours are
//! refined by sorted neighbourhood signatures until stable, and whenever a
//! colour class stays ambiguous the search branches on each of its members
//! and keeps the lexicographically least encoding.  No hashing is involved,
//! so the form is reproducible across runs and platforms.

use crate::folding::FaceImmersionTriple;
use crate::ids::End;
use crate::precomplex::{ComplexMorphism, PreComplex};
use crate::pregraph::{PreGraph, PreGraphMorphism};

/// Canonical encoding; equal encodings mean isomorphic structures.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(Vec<u64>);

/// Labelled digraph with fixed initial colours, the common canonisation
/// substrate for complexes and triples.
struct ColoredStructure {
    init_color: Vec<u64>,
    arcs: Vec<(u32, u32, u8)>,
}

impl ColoredStructure {
    fn n(&self) -> usize {
        self.init_color.len()
    }

    /// Dense colour ranks of the initial colours.
    fn initial_partition(&self) -> Vec<u32> {
        let mut sorted: Vec<u64> = self.init_color.clone();
        sorted.sort();
        sorted.dedup();
        self.init_color
            .iter()
            .map(|c| sorted.binary_search(c).unwrap() as u32)
            .collect()
    }

    /// Refine colours by sorted signatures of labelled in/out neighbourhoods
    /// until the partition stabilises.
    fn refine(&self, colors: &mut Vec<u32>) {
        let n = self.n();
        loop {
            let mut sigs: Vec<Vec<(u8, u8, u32)>> = vec![Vec::new(); n];
            for &(from, to, label) in &self.arcs {
                sigs[from as usize].push((0, label, colors[to as usize]));
                sigs[to as usize].push((1, label, colors[from as usize]));
            }
            for s in &mut sigs {
                s.sort();
            }
            let mut keyed: Vec<(u32, &Vec<(u8, u8, u32)>, u32)> = (0..n as u32)
                .map(|v| (colors[v as usize], &sigs[v as usize], v))
                .collect();
            keyed.sort();
            let mut new_colors = vec![0u32; n];
            let mut next = 0u32;
            for i in 0..keyed.len() {
                if i > 0 && (keyed[i].0, keyed[i].1) != (keyed[i - 1].0, keyed[i - 1].1) {
                    next += 1;
                }
                new_colors[keyed[i].2 as usize] = next;
            }
            let old_count = colors.iter().max().map_or(0, |&m| m + 1);
            let new_count = next + 1;
            *colors = new_colors;
            if new_count == old_count {
                return;
            }
        }
    }

    /// Encoding under a discrete colouring.
    fn encode(&self, colors: &[u32]) -> Vec<u64> {
        let n = self.n();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&v| colors[v as usize]);
        let mut rank = vec![0u32; n];
        for (i, &v) in order.iter().enumerate() {
            rank[v as usize] = i as u32;
        }
        let mut out = Vec::with_capacity(1 + n + self.arcs.len());
        out.push(n as u64);
        for &v in &order {
            out.push(self.init_color[v as usize]);
        }
        let mut arcs: Vec<(u32, u32, u8)> = self
            .arcs
            .iter()
            .map(|&(f, t, l)| (rank[f as usize], rank[t as usize], l))
            .collect();
        arcs.sort();
        for (f, t, l) in arcs {
            out.push(((f as u64) << 40) | ((t as u64) << 8) | l as u64);
        }
        out
    }

    /// Least encoding over all discrete refinements reached by
    /// individualising members of the first ambiguous colour class.
    fn canonical(&self) -> Vec<u64> {
        let mut colors = self.initial_partition();
        self.refine(&mut colors);
        self.canonical_from(colors)
    }

    fn canonical_from(&self, colors: Vec<u32>) -> Vec<u64> {
        let n = self.n();
        let mut class_size = vec![0u32; n + 1];
        for &c in &colors {
            class_size[c as usize] += 1;
        }
        let target = (0..n).find(|&c| class_size[c] >= 2);
        let Some(target) = target else {
            return self.encode(&colors);
        };
        let fresh = colors.iter().max().map_or(0, |&m| m + 1);
        let mut best: Option<Vec<u64>> = None;
        for v in 0..n {
            if colors[v] != target as u32 {
                continue;
            }
            let mut branched = colors.clone();
            branched[v] = fresh;
            self.refine(&mut branched);
            let cand = self.canonical_from(branched);
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        }
        best.unwrap()
    }
}

const SORT_SKEL_VERTEX: u64 = 0;
const SORT_SKEL_EDGE: u64 = 1;
const SORT_FACE_VERTEX: u64 = 2;

const ARC_SKEL_IOTA: u8 = 0;
const ARC_SKEL_TAU: u8 = 1;
const ARC_FACE_IOTA: u8 = 2;
const ARC_FACE_TAU: u8 = 3;
const ARC_ATTACH_VERTEX: u8 = 4;
const ARC_ATTACH_EDGE: u8 = 5;
const ARC_MAP_BASE: u8 = 6;

struct Layout {
    skel_vertex: u32,
    skel_edge: u32,
    face_vertex: u32,
    face_edge: u32,
}

/// Append the cells and internal relations of a pre-complex, colouring cells
/// by `sort_base + sort` in the high word and `fixed_color(cell)` in the low.
fn push_complex(
    s: &mut ColoredStructure,
    x: &PreComplex,
    sort_base: u64,
    fixed: impl Fn(u64, u32) -> u64,
) -> Layout {
    let graph_cells = |s: &mut ColoredStructure,
                       g: &PreGraph,
                       sort: u64,
                       fixed: &dyn Fn(u64, u32) -> u64,
                       iota: u8,
                       tau: u8| {
        let vbase = s.n() as u32;
        for v in g.vertices() {
            s.init_color
                .push(((sort_base + sort) << 32) | fixed(sort, v.0));
        }
        let ebase = s.n() as u32;
        for e in g.edge_ids() {
            s.init_color
                .push(((sort_base + sort + 1) << 32) | fixed(sort + 1, e.0));
            for (d, label) in [(End::Iota, iota), (End::Tau, tau)] {
                if let Some(v) = g.end(e, d) {
                    s.arcs.push((ebase + e.0, vbase + v.0, label));
                }
            }
        }
        (vbase, ebase)
    };
    let (skel_vertex, skel_edge) = graph_cells(
        s,
        x.skeleton(),
        SORT_SKEL_VERTEX,
        &fixed,
        ARC_SKEL_IOTA,
        ARC_SKEL_TAU,
    );
    let (face_vertex, face_edge) = graph_cells(
        s,
        x.faces(),
        SORT_FACE_VERTEX,
        &fixed,
        ARC_FACE_IOTA,
        ARC_FACE_TAU,
    );
    for sv in x.faces().vertices() {
        s.arcs.push((
            face_vertex + sv.0,
            skel_vertex + x.attach().vertex_image(sv).0,
            ARC_ATTACH_VERTEX,
        ));
    }
    for se in x.faces().edge_ids() {
        s.arcs.push((
            face_edge + se.0,
            skel_edge + x.attach().edge_image(se).0,
            ARC_ATTACH_EDGE,
        ));
    }
    Layout {
        skel_vertex,
        skel_edge,
        face_vertex,
        face_edge,
    }
}

fn push_map_arcs(
    s: &mut ColoredStructure,
    skeleton: &PreGraphMorphism,
    faces: &PreGraphMorphism,
    from: &Layout,
    to: &Layout,
    label_base: u8,
) {
    for (v, &img) in skeleton.vertex_map().iter().enumerate() {
        s.arcs
            .push((from.skel_vertex + v as u32, to.skel_vertex + img.0, label_base));
    }
    for (e, &img) in skeleton.edge_map().iter().enumerate() {
        s.arcs.push((
            from.skel_edge + e as u32,
            to.skel_edge + img.0,
            label_base + 1,
        ));
    }
    for (v, &img) in faces.vertex_map().iter().enumerate() {
        s.arcs.push((
            from.face_vertex + v as u32,
            to.face_vertex + img.0,
            label_base + 2,
        ));
    }
    for (e, &img) in faces.edge_map().iter().enumerate() {
        s.arcs.push((
            from.face_edge + e as u32,
            to.face_edge + img.0,
            label_base + 3,
        ));
    }
}

/// Canonical form of a pre-complex up to isomorphism.
pub fn canonical_form(x: &PreComplex) -> CanonicalForm {
    let mut s = ColoredStructure {
        init_color: Vec::new(),
        arcs: Vec::new(),
    };
    push_complex(&mut s, x, 0, |_, _| 0);
    CanonicalForm(s.canonical())
}

pub fn are_isomorphic(x: &PreComplex, y: &PreComplex) -> bool {
    canonical_form(x) == canonical_form(y)
}

/// Canonical form of a face immersion triple over its target: the target's
/// cells are fixed pointwise, so two triples agree exactly when there are
/// isomorphisms of the source and middle commuting with everything.
pub fn canonical_triple(t: &FaceImmersionTriple) -> CanonicalForm {
    let mut s = ColoredStructure {
        init_color: Vec::new(),
        arcs: Vec::new(),
    };
    let ly = push_complex(&mut s, t.source(), 0, |_, _| 0);
    let f1 = t.f1();
    let lz = push_complex(&mut s, t.middle(), 4, |sort, cell| {
        1 + match sort {
            SORT_SKEL_VERTEX => f1.skeleton_map().vertex_map()[cell as usize].0 as u64,
            SORT_SKEL_EDGE => f1.skeleton_map().edge_map()[cell as usize].0 as u64,
            SORT_FACE_VERTEX => f1.face_map().vertex_map()[cell as usize].0 as u64,
            _ => f1.face_map().edge_map()[cell as usize].0 as u64,
        }
    });
    push_map_arcs(
        &mut s,
        t.f0().skeleton_map(),
        t.f0().face_map(),
        &ly,
        &lz,
        ARC_MAP_BASE,
    );
    CanonicalForm(s.canonical())
}

/// Canonical form of a map to a pointwise-fixed target.
pub fn canonical_map_over(f: &ComplexMorphism) -> CanonicalForm {
    let mut s = ColoredStructure {
        init_color: Vec::new(),
        arcs: Vec::new(),
    };
    push_complex(&mut s, f.source(), 0, |sort, cell| {
        1 + match sort {
            SORT_SKEL_VERTEX => f.skeleton_map().vertex_map()[cell as usize].0 as u64,
            SORT_SKEL_EDGE => f.skeleton_map().edge_map()[cell as usize].0 as u64,
            SORT_FACE_VERTEX => f.face_map().vertex_map()[cell as usize].0 as u64,
            _ => f.face_map().edge_map()[cell as usize].0 as u64,
        }
    });
    CanonicalForm(s.canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EdgeId, VertexId};
    use crate::precomplex::disjoint_union_complexes;
    use crate::pregraph::PreGraphMorphism;

    fn torus_with(order: [u32; 2]) -> PreComplex {
        // loops in the given order; face runs a b a b with the commutator
        // orientation pattern
        let skel = PreGraph::graph(1, &[(0, 0), (0, 0)]);
        let faces = PreGraph::graph(4, &[(0, 1), (1, 2), (3, 2), (0, 3)]);
        let attach = PreGraphMorphism::new(
            faces,
            skel,
            vec![VertexId(0); 4],
            vec![
                EdgeId(order[0]),
                EdgeId(order[1]),
                EdgeId(order[0]),
                EdgeId(order[1]),
            ],
        )
        .unwrap();
        PreComplex::new(attach).unwrap()
    }

    fn squared_loop() -> PreComplex {
        let attach = PreGraphMorphism::new(
            PreGraph::graph(2, &[(0, 1), (1, 0)]),
            PreGraph::graph(1, &[(0, 0)]),
            vec![VertexId(0); 2],
            vec![EdgeId(0); 2],
        )
        .unwrap();
        PreComplex::new(attach).unwrap()
    }

    #[test]
    fn relabelled_complexes_agree() {
        assert_eq!(
            canonical_form(&torus_with([0, 1])),
            canonical_form(&torus_with([1, 0]))
        );
        assert!(are_isomorphic(&torus_with([0, 1]), &torus_with([1, 0])));
    }

    #[test]
    fn different_complexes_differ() {
        assert_ne!(
            canonical_form(&torus_with([0, 1])),
            canonical_form(&squared_loop())
        );
        let one = squared_loop();
        let two = disjoint_union_complexes(&[one.clone(), one.clone()]).complex;
        assert_ne!(canonical_form(&one), canonical_form(&two));
    }

    #[test]
    fn symmetric_union_is_stable() {
        let one = squared_loop();
        let a = disjoint_union_complexes(&[one.clone(), torus_with([0, 1])]).complex;
        let b = disjoint_union_complexes(&[torus_with([1, 0]), one]).complex;
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn maps_over_fixed_target_distinguish_images() {
        let x = squared_loop();
        // the relator rotation is a deck transformation, so over the fixed
        // target it is the same object as the identity
        let id = ComplexMorphism::identity(&x);
        let rot = ComplexMorphism::new(
            &x,
            &x,
            PreGraphMorphism::identity(x.skeleton()),
            PreGraphMorphism::new(
                x.faces().clone(),
                x.faces().clone(),
                vec![VertexId(1), VertexId(0)],
                vec![EdgeId(1), EdgeId(0)],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(canonical_map_over(&id), canonical_map_over(&rot));
        // maps hitting different parts of the target differ
        let double = disjoint_union_complexes(&[x.clone(), x.clone()]);
        assert_ne!(
            canonical_map_over(&double.inclusion(0)),
            canonical_map_over(&double.inclusion(1))
        );
        // but the included complexes are abstractly the same
        assert!(are_isomorphic(
            double.inclusion(0).source(),
            double.inclusion(1).source()
        ));
    }

    #[test]
    fn triples_canonise_over_the_target() {
        let x = squared_loop();
        let id = ComplexMorphism::identity(&x);
        let t = FaceImmersionTriple::new(id.clone(), id).unwrap();
        assert_eq!(canonical_triple(&t), canonical_triple(&t));
    }
}
