//! Vertex and edge pieces: the local building blocks of face immersions.
//!
//! A vertex piece over a skeleton vertex is a face immersion `Y -> Z -> X`
//! where `Z` is a sub-asterisk of the vertex's regular neighbourhood and `Y`
//! is a visibly irreducible disjoint union of asterisks.  An edge piece is
//! the analogue over a skeleton edge: a bare edge carrying a subset of the
//! face fiber, with the subset partitioned among bare source edges.  Every
//! face immersion into `X` induces one vertex piece per middle vertex, and
//! the resulting weight vector is what the gluing system constrains.
//!
//! Enumeration walks corner subsets and per-germ half partitions in a fixed
//! canonical order, so piece identities are reproducible across runs and can
//! serve as matrix indices.  Sub-asterisks keep only germs that carry faces
//! and source complexes are nonempty; degenerate pieces supported on naked
//! germs never occur in a weight vector and are excluded throughout.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

use crate::canonical::{canonical_triple, CanonicalForm};
use crate::folding::FaceImmersionTriple;
use crate::ids::{EdgeId, End, VertexId};
use crate::precomplex::{
    regular_neighborhood_vertex, ComplexMorphism, PreComplex, VertexNeighborhood,
};
use crate::pregraph::{EdgeEnds, PreGraph, PreGraphMorphism};
use crate::reducibility::{visible_status, Visible};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PieceError {
    #[error("vertex {vertex:?} has {corners} corners over it; enumeration handles at most 64")]
    TooManyCorners { vertex: VertexId, corners: usize },
    #[error("edge {edge:?} has {fiber} face edges over it; enumeration handles at most 64")]
    FiberTooLarge { edge: EdgeId, fiber: usize },
    #[error("vertex {vertex:?} carries more than {cap} pieces")]
    CatalogueTooLarge { vertex: VertexId, cap: usize },
    #[error("the induced local complex is empty or not visibly irreducible")]
    NotVisiblyIrreducible,
}

/// A face immersion `Y -> Z -> X` with `Z` a sub-asterisk of the regular
/// neighbourhood of a skeleton vertex of `X` and `Y` a visibly irreducible
/// disjoint union of asterisks over it.
#[derive(Clone, Debug)]
pub struct VertexPiece {
    triple: FaceImmersionTriple,
    base: VertexId,
    key: CanonicalForm,
    deg: BigRational,
    tau: BigRational,
}

impl VertexPiece {
    fn build(triple: FaceImmersionTriple, base: VertexId) -> VertexPiece {
        debug_assert!(piece_shape_ok(&triple));
        let y = triple.source();
        let fc = triple.target().face_components();
        let mut deg = BigRational::zero();
        for s in y.faces().vertices() {
            let down = triple.f0().face_map().vertex_image(s);
            let ambient = triple.f1().face_map().vertex_image(down);
            let len = fc.n_vertices[fc.of_vertex[ambient.index()] as usize];
            deg += BigRational::new(BigInt::one(), BigInt::from(len));
        }
        let tau = &deg + BigRational::from_integer(BigInt::from(y.skeleton().n_vertices()))
            - BigRational::new(BigInt::from(y.skeleton().n_edges()), BigInt::from(2));
        let key = canonical_triple(&triple);
        VertexPiece {
            triple,
            base,
            key,
            deg,
            tau,
        }
    }

    /// Wrap a triple produced by the enumerator, whose cluster filter already
    /// guarantees visible irreducibility.
    fn from_trusted(triple: FaceImmersionTriple, base: VertexId) -> VertexPiece {
        debug_assert_eq!(visible_status(triple.source()), Visible::Irreducible);
        VertexPiece::build(triple, base)
    }

    fn from_triple(triple: FaceImmersionTriple, base: VertexId) -> Result<VertexPiece, PieceError> {
        if triple.source().skeleton().n_vertices() == 0
            || visible_status(triple.source()) != Visible::Irreducible
        {
            return Err(PieceError::NotVisiblyIrreducible);
        }
        Ok(VertexPiece::build(triple, base))
    }

    pub fn triple(&self) -> &FaceImmersionTriple {
        &self.triple
    }

    /// The skeleton vertex of `X` the piece sits over.
    pub fn base(&self) -> VertexId {
        self.base
    }

    /// Canonical identifier: equal keys mean isomorphic pieces over a
    /// pointwise-fixed ambient complex.
    pub fn key(&self) -> &CanonicalForm {
        &self.key
    }

    /// Sum of reciprocal ambient face-cycle lengths over the corners of `Y`.
    pub fn deg(&self) -> &BigRational {
        &self.deg
    }

    /// Curvature contribution: `deg` plus the vertex count of `Y` minus half
    /// its skeleton edge count.
    pub fn tau(&self) -> &BigRational {
        &self.tau
    }

    pub fn z_edge_count(&self) -> u32 {
        self.triple.middle().skeleton().n_edges()
    }

    pub fn corner_count(&self) -> u32 {
        self.triple.middle().faces().n_vertices()
    }

    pub fn group_count(&self) -> u32 {
        self.triple.source().skeleton().n_vertices()
    }

    /// Induced edge pieces over the germs of `Z`, split by side: first the
    /// counts over initial germs, then over terminal germs.
    pub fn boundary_split(&self) -> (Vec<(EdgePiece, i64)>, Vec<(EdgePiece, i64)>) {
        let z = self.triple.middle();
        let mut iota: BTreeMap<CanonicalForm, (EdgePiece, i64)> = BTreeMap::new();
        let mut tau: BTreeMap<CanonicalForm, (EdgePiece, i64)> = BTreeMap::new();
        for j in z.skeleton().edge_ids() {
            let r = induced_edge_piece(&self.triple, j);
            let side = if z.skeleton().end(j, End::Iota).is_some() {
                &mut iota
            } else {
                &mut tau
            };
            side.entry(r.key.clone()).or_insert((r, 0)).1 += 1;
        }
        let collect = |side: BTreeMap<CanonicalForm, (EdgePiece, i64)>| {
            let mut out: Vec<(EdgePiece, i64)> = side.into_values().collect();
            out.sort_by(|a, b| a.0.cmp(&b.0));
            out
        };
        (collect(iota), collect(tau))
    }

    /// Net induced edge pieces over the germs of `Z`: `+1` per initial germ,
    /// `-1` per terminal germ, zero entries dropped.
    pub fn boundary(&self) -> Vec<(EdgePiece, i64)> {
        let (iota, tau) = self.boundary_split();
        let mut acc: BTreeMap<CanonicalForm, (EdgePiece, i64)> = BTreeMap::new();
        for (r, c) in iota {
            acc.entry(r.key.clone()).or_insert((r, 0)).1 += c;
        }
        for (r, c) in tau {
            acc.entry(r.key.clone()).or_insert((r, 0)).1 -= c;
        }
        let mut out: Vec<(EdgePiece, i64)> =
            acc.into_values().filter(|&(_, c)| c != 0).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

impl PartialEq for VertexPiece {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for VertexPiece {}

impl PartialOrd for VertexPiece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VertexPiece {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.base.0, self.z_edge_count(), self.corner_count())
            .cmp(&(other.base.0, other.z_edge_count(), other.corner_count()))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl Hash for VertexPiece {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

/// A face immersion `Y -> Z -> X` with `Z` a single bare edge over a skeleton
/// edge of `X`, carrying a subset of its face fiber, and `Y` a disjoint union
/// of bare edges splitting that subset.
#[derive(Clone, Debug)]
pub struct EdgePiece {
    triple: FaceImmersionTriple,
    base: EdgeId,
    key: CanonicalForm,
}

impl EdgePiece {
    fn from_parts(triple: FaceImmersionTriple, base: EdgeId) -> EdgePiece {
        let key = canonical_triple(&triple);
        EdgePiece { triple, base, key }
    }

    pub fn triple(&self) -> &FaceImmersionTriple {
        &self.triple
    }

    /// The skeleton edge of `X` the piece sits over.
    pub fn base(&self) -> EdgeId {
        self.base
    }

    pub fn key(&self) -> &CanonicalForm {
        &self.key
    }

    /// Number of ambient face edges the piece carries.
    pub fn support_size(&self) -> u32 {
        self.triple.middle().faces().n_edges()
    }

    /// Number of bare source edges the support is split into.
    pub fn block_count(&self) -> u32 {
        self.triple.source().skeleton().n_edges()
    }
}

impl PartialEq for EdgePiece {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for EdgePiece {}

impl PartialOrd for EdgePiece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgePiece {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.base.0, self.support_size())
            .cmp(&(other.base.0, other.support_size()))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl Hash for EdgePiece {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

/// Every source vertex keeps at least two corners and every source edge at
/// least two face edges, and the source is nonempty.
fn piece_shape_ok(t: &FaceImmersionTriple) -> bool {
    let y = t.source();
    y.skeleton().n_vertices() >= 1
        && y.skeleton()
            .vertices()
            .all(|u| y.skeleton().valence(u) >= 2)
        && y.skeleton().edge_ids().all(|e| y.face_fiber(e).len() >= 2)
}

/// All set partitions of `0..n` whose blocks have at least `min` elements,
/// as block assignments in restricted-growth order.
fn partition_shapes(n: usize, min: usize) -> Vec<Vec<u8>> {
    fn rec(
        i: usize,
        n: usize,
        min: usize,
        sizes: &mut Vec<usize>,
        assign: &mut Vec<u8>,
        out: &mut Vec<Vec<u8>>,
    ) {
        if i == n {
            if sizes.iter().all(|&s| s >= min) {
                out.push(assign.clone());
            }
            return;
        }
        let deficit: usize = sizes.iter().map(|&s| min.saturating_sub(s)).sum();
        if deficit > n - i {
            return;
        }
        for b in 0..=sizes.len() {
            let opened = b == sizes.len();
            if opened {
                sizes.push(1);
            } else {
                sizes[b] += 1;
            }
            assign[i] = b as u8;
            rec(i + 1, n, min, sizes, assign, out);
            if opened {
                sizes.pop();
            } else {
                sizes[b] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, min, &mut Vec::new(), &mut vec![0u8; n], &mut out);
    out
}

/// Indexed view of the regular neighbourhood of a skeleton vertex.
#[derive(Debug)]
pub(crate) struct LocalStar {
    pub(crate) base: VertexId,
    pub(crate) n: VertexNeighborhood,
    pub(crate) m: usize,
    n_halves: usize,
    half_corner: Vec<u32>,
    half_germ: Vec<u32>,
    pub(crate) germ_halves: Vec<Vec<EdgeId>>,
    corner_halves: Vec<[EdgeId; 2]>,
    /// Reciprocal ambient face-cycle length per corner.
    pub(crate) corner_weight: Vec<BigRational>,
    /// Ambient face edge per local half.
    pub(crate) half_ambient: Vec<EdgeId>,
    corner_by_ambient: HashMap<VertexId, u32>,
    half_by_ambient: HashMap<(EdgeId, End), EdgeId>,
    germ_by_ambient: HashMap<(EdgeId, End), u32>,
}

impl LocalStar {
    pub(crate) fn new(x: &PreComplex, v: VertexId) -> Result<LocalStar, PieceError> {
        let n = regular_neighborhood_vertex(x, v);
        let m = n.complex.faces().n_vertices() as usize;
        if m > 64 {
            return Err(PieceError::TooManyCorners { vertex: v, corners: m });
        }
        let n_halves = n.complex.faces().n_edges() as usize;
        let mut half_corner = vec![0u32; n_halves];
        let mut half_germ = vec![0u32; n_halves];
        let mut germ_halves = vec![Vec::new(); n.asterisk_ends.len()];
        let mut halves_at = vec![Vec::new(); m];
        let mut half_ambient = vec![EdgeId(0); n_halves];
        let mut half_by_ambient = HashMap::new();
        for h in n.complex.faces().edge_ids() {
            let germ = n.complex.attach().edge_image(h).0;
            let d = n.asterisk_ends[germ as usize].1;
            let corner = n.complex.faces().end(h, d).expect("half sits at its germ's end").0;
            half_corner[h.index()] = corner;
            half_germ[h.index()] = germ;
            germ_halves[germ as usize].push(h);
            halves_at[corner as usize].push(h);
            let ambient = n.map.face_map().edge_image(h);
            half_ambient[h.index()] = ambient;
            half_by_ambient.insert((ambient, d), h);
        }
        let corner_halves = halves_at
            .iter()
            .map(|hs| {
                debug_assert_eq!(hs.len(), 2);
                [hs[0], hs[1]]
            })
            .collect();
        let fc = x.face_components();
        let corner_weight = n
            .complex
            .faces()
            .vertices()
            .map(|s| {
                let ambient = n.map.face_map().vertex_image(s);
                let len = fc.n_vertices[fc.of_vertex[ambient.index()] as usize];
                BigRational::new(BigInt::one(), BigInt::from(len))
            })
            .collect();
        let corner_by_ambient = n
            .complex
            .faces()
            .vertices()
            .map(|s| (n.map.face_map().vertex_image(s), s.0))
            .collect();
        let germ_by_ambient = n
            .asterisk_ends
            .iter()
            .enumerate()
            .map(|(g, &pair)| (pair, g as u32))
            .collect();
        Ok(LocalStar {
            base: v,
            n,
            m,
            n_halves,
            half_corner,
            half_germ,
            germ_halves,
            corner_halves,
            corner_weight,
            half_ambient,
            corner_by_ambient,
            half_by_ambient,
            germ_by_ambient,
        })
    }

    /// The ambient skeleton edge and end a germ sits on.
    pub(crate) fn germ_ambient(&self, germ: u32) -> (EdgeId, End) {
        self.n.asterisk_ends[germ as usize]
    }
}

/// A visibly irreducible single-asterisk source over a corner subset: the
/// selected halves of each germ, partitioned into classes of size at least
/// two whose link graph is connected with no cut node.
#[derive(Clone, Debug)]
pub(crate) struct Cluster {
    pub(crate) mask: u64,
    pub(crate) classes: Vec<(u32, Vec<Vec<EdgeId>>)>,
}

impl Cluster {
    pub(crate) fn block_count(&self) -> usize {
        self.classes.iter().map(|(_, parts)| parts.len()).sum()
    }

    /// Append a flat `u32` encoding, the inverse of [`Cluster::decode`].
    /// Layout: mask low word, mask high word, class count, then per class the
    /// germ, the part count, and per part its length followed by its halves.
    pub(crate) fn encode_to(&self, out: &mut Vec<u32>) {
        out.push(self.mask as u32);
        out.push((self.mask >> 32) as u32);
        out.push(self.classes.len() as u32);
        for (germ, parts) in &self.classes {
            out.push(*germ);
            out.push(parts.len() as u32);
            for part in parts {
                out.push(part.len() as u32);
                out.extend(part.iter().map(|h| h.0));
            }
        }
    }

    /// Decode one cluster from the front of `data`, returning it with the
    /// number of words consumed.
    pub(crate) fn decode(data: &[u32]) -> (Cluster, usize) {
        let mut at = 0usize;
        let mut next = || {
            at += 1;
            data[at - 1]
        };
        let mask = u64::from(next()) | u64::from(next()) << 32;
        let n_classes = next() as usize;
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let germ = next();
            let n_parts = next() as usize;
            let mut parts = Vec::with_capacity(n_parts);
            for _ in 0..n_parts {
                let len = next() as usize;
                parts.push((0..len).map(|_| EdgeId(next())).collect());
            }
            classes.push((germ, parts));
        }
        (Cluster { mask, classes }, at)
    }
}

/// Connectivity of the class-link graph after deleting one node (or none
/// when `skip` is out of range).
fn spans_without(n: usize, adj: &[Vec<u32>], skip: usize) -> bool {
    let Some(start) = (0..n).find(|&i| i != skip) else {
        return true;
    };
    let mut seen = vec![false; n];
    let mut queue = vec![start];
    seen[start] = true;
    let mut count = 1;
    while let Some(i) = queue.pop() {
        for &j in &adj[i] {
            let j = j as usize;
            if j != skip && !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push(j);
            }
        }
    }
    count == n - usize::from(skip < n)
}

fn whitehead_ok(n: usize, links: &[(u32, u32)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in links {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    spans_without(n, &adj, usize::MAX) && (0..n).all(|r| spans_without(n, &adj, r))
}

/// The largest corner mask at a star: all corners selected.
pub(crate) fn full_mask(star: &LocalStar) -> u64 {
    if star.m == 64 {
        u64::MAX
    } else {
        (1u64 << star.m) - 1
    }
}

/// Stream every cluster whose corner mask lies in `lo..=hi`, in mask order.
/// The visitor returns `false` to stop early; the return value tells whether
/// the scan ran to completion.  Ranges let callers shard a scan across
/// threads: cluster identity depends only on the mask, so shards are
/// disjoint.
pub(crate) fn scan_clusters(
    star: &LocalStar,
    lo: u64,
    hi: u64,
    f: &mut dyn FnMut(Cluster) -> bool,
) -> bool {
    if star.m == 0 || lo > hi || lo == 0 {
        return star.m == 0 || lo > hi;
    }
    let max_halves = star.germ_halves.iter().map(Vec::len).max().unwrap_or(0);
    let shapes: Vec<Vec<Vec<u8>>> = (0..=max_halves).map(|k| partition_shapes(k, 2)).collect();
    let mut node_of = vec![0u32; star.n_halves];
    let mut chosen = Vec::new();
    let mut mask = lo;
    loop {
        'mask: {
            let mut sel: Vec<(u32, Vec<EdgeId>)> = Vec::new();
            for (g, halves) in star.germ_halves.iter().enumerate() {
                let mine: Vec<EdgeId> = halves
                    .iter()
                    .copied()
                    .filter(|h| mask >> star.half_corner[h.index()] & 1 == 1)
                    .collect();
                match mine.len() {
                    0 => {}
                    1 => break 'mask,
                    _ => sel.push((g as u32, mine)),
                }
            }
            if !descend(star, mask, &sel, &shapes, &mut chosen, &mut node_of, f) {
                return false;
            }
        }
        if mask == hi {
            break;
        }
        mask += 1;
    }
    true
}

fn descend(
    star: &LocalStar,
    mask: u64,
    sel: &[(u32, Vec<EdgeId>)],
    shapes: &[Vec<Vec<u8>>],
    chosen: &mut Vec<usize>,
    node_of: &mut [u32],
    f: &mut dyn FnMut(Cluster) -> bool,
) -> bool {
    if chosen.len() == sel.len() {
        return try_leaf(star, mask, sel, shapes, chosen, node_of, f);
    }
    let k = sel[chosen.len()].1.len();
    for si in 0..shapes[k].len() {
        chosen.push(si);
        let keep_going = descend(star, mask, sel, shapes, chosen, node_of, f);
        chosen.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

fn try_leaf(
    star: &LocalStar,
    mask: u64,
    sel: &[(u32, Vec<EdgeId>)],
    shapes: &[Vec<Vec<u8>>],
    chosen: &[usize],
    node_of: &mut [u32],
    f: &mut dyn FnMut(Cluster) -> bool,
) -> bool {
    let mut n_nodes = 0u32;
    for (gi, (_, halves)) in sel.iter().enumerate() {
        let shape = &shapes[halves.len()][chosen[gi]];
        for (pos, &h) in halves.iter().enumerate() {
            node_of[h.index()] = n_nodes + u32::from(shape[pos]);
        }
        n_nodes += u32::from(*shape.iter().max().expect("germ keeps halves")) + 1;
    }
    let mut links = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        let c = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let [h1, h2] = star.corner_halves[c];
        links.push((node_of[h1.index()], node_of[h2.index()]));
    }
    if !whitehead_ok(n_nodes as usize, &links) {
        return true;
    }
    let classes = sel
        .iter()
        .enumerate()
        .map(|(gi, (germ, halves))| {
            let shape = &shapes[halves.len()][chosen[gi]];
            let blocks = usize::from(*shape.iter().max().expect("nonempty")) + 1;
            let mut parts = vec![Vec::new(); blocks];
            for (pos, &h) in halves.iter().enumerate() {
                parts[usize::from(shape[pos])].push(h);
            }
            (*germ, parts)
        })
        .collect();
    f(Cluster { mask, classes })
}

pub(crate) fn bits_of(mask: u64) -> impl Iterator<Item = u32> {
    std::iter::successors((mask != 0).then(|| mask.trailing_zeros()), move |&c| {
        let next = mask & u64::MAX.checked_shl(c + 1).unwrap_or(0);
        (next != 0).then(|| next.trailing_zeros())
    })
}

/// Assemble the face immersion of a piece from corner-disjoint clusters.
pub(crate) fn assemble_piece(
    x: &PreComplex,
    star: &LocalStar,
    groups: &[&Cluster],
) -> FaceImmersionTriple {
    let union: u64 = groups.iter().map(|g| g.mask).fold(0, |a, b| a | b);
    let corner_sel: Vec<u32> = bits_of(union).collect();
    let mut corner_pos = vec![u32::MAX; star.m];
    for (pos, &c) in corner_sel.iter().enumerate() {
        corner_pos[c as usize] = pos as u32;
    }
    let mut half_sel: Vec<EdgeId> = corner_sel
        .iter()
        .flat_map(|&c| star.corner_halves[c as usize])
        .collect();
    half_sel.sort_unstable();
    let mut germ_sel: Vec<u32> = groups
        .iter()
        .flat_map(|g| g.classes.iter().map(|&(germ, _)| germ))
        .collect();
    germ_sel.sort_unstable();
    germ_sel.dedup();
    let mut germ_pos = vec![u32::MAX; star.germ_halves.len()];
    for (pos, &g) in germ_sel.iter().enumerate() {
        germ_pos[g as usize] = pos as u32;
    }

    let mut faces = PreGraph::discrete(corner_sel.len() as u32);
    for &h in &half_sel {
        let d = star.n.asterisk_ends[star.half_germ[h.index()] as usize].1;
        let mut ends = EdgeEnds::new(None, None);
        ends.set_end(
            d,
            Some(VertexId(corner_pos[star.half_corner[h.index()] as usize])),
        );
        faces.push_edge(ends).expect("corner in range");
    }

    let mut z_skel = PreGraph::discrete(1);
    for &g in &germ_sel {
        let d = star.n.asterisk_ends[g as usize].1;
        let mut ends = EdgeEnds::new(None, None);
        ends.set_end(d, Some(VertexId(0)));
        z_skel.push_edge(ends).expect("vertex 0");
    }
    let z_attach = PreGraphMorphism::new(
        faces.clone(),
        z_skel.clone(),
        vec![VertexId(0); corner_sel.len()],
        half_sel
            .iter()
            .map(|&h| EdgeId(germ_pos[star.half_germ[h.index()] as usize]))
            .collect(),
    )
    .expect("halves over their germs");
    let z = PreComplex::new(z_attach).expect("sub-asterisk is a pre-complex");
    let f1 = ComplexMorphism::new(
        &z,
        x,
        PreGraphMorphism::new(
            z_skel.clone(),
            x.skeleton().clone(),
            vec![star.base],
            germ_sel
                .iter()
                .map(|&g| star.n.asterisk_ends[g as usize].0)
                .collect(),
        )
        .expect("germs include into the skeleton"),
        PreGraphMorphism::new(
            faces.clone(),
            x.faces().clone(),
            corner_sel
                .iter()
                .map(|&c| star.n.map.face_map().vertex_image(VertexId(c)))
                .collect(),
            half_sel
                .iter()
                .map(|&h| star.n.map.face_map().edge_image(h))
                .collect(),
        )
        .expect("halves include into the faces"),
    )
    .expect("sub-asterisk includes into the ambient complex");

    let mut group_of = vec![0u32; star.m];
    for (gi, grp) in groups.iter().enumerate() {
        for c in bits_of(grp.mask) {
            group_of[c as usize] = gi as u32;
        }
    }
    let mut y_skel = PreGraph::discrete(groups.len() as u32);
    let mut class_of_half = vec![0u32; star.n_halves];
    let mut y_edge_germ = Vec::new();
    for (gi, grp) in groups.iter().enumerate() {
        for (germ, parts) in &grp.classes {
            let d = star.n.asterisk_ends[*germ as usize].1;
            for part in parts {
                let mut ends = EdgeEnds::new(None, None);
                ends.set_end(d, Some(VertexId(gi as u32)));
                let eid = y_skel.push_edge(ends).expect("group vertex in range");
                y_edge_germ.push(EdgeId(germ_pos[*germ as usize]));
                for &h in part {
                    class_of_half[h.index()] = eid.0;
                }
            }
        }
    }
    let y_attach = PreGraphMorphism::new(
        faces.clone(),
        y_skel.clone(),
        corner_sel
            .iter()
            .map(|&c| VertexId(group_of[c as usize]))
            .collect(),
        half_sel
            .iter()
            .map(|&h| EdgeId(class_of_half[h.index()]))
            .collect(),
    )
    .expect("halves over their classes");
    let y = PreComplex::new(y_attach).expect("piece source is a pre-complex");
    let f0 = ComplexMorphism::new(
        &y,
        &z,
        PreGraphMorphism::new(
            y_skel,
            z_skel,
            vec![VertexId(0); groups.len()],
            y_edge_germ,
        )
        .expect("classes fold onto germs"),
        PreGraphMorphism::identity(&faces),
    )
    .expect("piece fold commutes");
    FaceImmersionTriple::new(f0, f1).expect("piece is a face immersion")
}

/// The single-group piece a cluster determines.
pub(crate) fn cluster_piece(x: &PreComplex, star: &LocalStar, c: &Cluster) -> VertexPiece {
    VertexPiece::from_trusted(assemble_piece(x, star, &[c]), star.base)
}

/// One germ of a piece in ambient coordinates: the skeleton edge and end it
/// sits on and its classes as ambient face-edge contents, tagged with the
/// group owning each class.  Within a germ the contents are disjoint, so a
/// block is identified by its content alone, and two germs glue exactly when
/// they carry the same contents on the same edge from opposite ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct GlueGerm {
    pub(crate) edge: EdgeId,
    pub(crate) end: End,
    pub(crate) blocks: Vec<(u32, Vec<EdgeId>)>,
}

/// A piece reduced to the ambient coordinates gluing consumes: which corners
/// each group covers and what every germ carries.  Corners determine groups
/// uniquely because groups of one piece cover disjoint corner sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct GlueUnit {
    pub(crate) base: VertexId,
    pub(crate) n_groups: u32,
    /// Ambient face vertex to owning group, sorted by vertex.
    pub(crate) corners: Vec<(VertexId, u32)>,
    /// Sorted by skeleton edge then end; block contents sorted within germs.
    pub(crate) germs: Vec<GlueGerm>,
}

/// Project a piece onto its glue unit by walking the triple.
pub(crate) fn piece_unit(p: &VertexPiece) -> GlueUnit {
    let t = p.triple();
    let y = t.source();
    let face_edge = |u: EdgeId| t.f1().face_map().edge_image(t.f0().face_map().edge_image(u));
    let face_vertex =
        |s: VertexId| t.f1().face_map().vertex_image(t.f0().face_map().vertex_image(s));
    let mut corners: Vec<(VertexId, u32)> = y
        .faces()
        .vertices()
        .map(|s| (face_vertex(s), y.attach().vertex_image(s).0))
        .collect();
    corners.sort_unstable();
    debug_assert!(corners.windows(2).all(|w| w[0].0 != w[1].0));
    let mut by_germ: BTreeMap<(EdgeId, End), Vec<(u32, Vec<EdgeId>)>> = BTreeMap::new();
    for ey in y.skeleton().edge_ids() {
        let (d, group) = End::BOTH
            .into_iter()
            .find_map(|d| y.skeleton().end(ey, d).map(|u| (d, u.0)))
            .expect("piece classes sit at their group");
        let ex = t.f1().skeleton_map().edge_image(t.f0().skeleton_map().edge_image(ey));
        let mut content: Vec<EdgeId> = y.face_fiber(ey).into_iter().map(face_edge).collect();
        content.sort_unstable();
        by_germ.entry((ex, d)).or_default().push((group, content));
    }
    let germs = by_germ
        .into_iter()
        .map(|((edge, end), mut blocks)| {
            blocks.sort_by(|a, b| a.1.cmp(&b.1));
            GlueGerm { edge, end, blocks }
        })
        .collect();
    GlueUnit {
        base: p.base(),
        n_groups: y.skeleton().n_vertices(),
        corners,
        germs,
    }
}

/// The glue unit of a cluster's single-group piece, read off directly.
pub(crate) fn cluster_unit(star: &LocalStar, c: &Cluster) -> GlueUnit {
    let mut corners: Vec<(VertexId, u32)> = bits_of(c.mask)
        .map(|b| (star.n.map.face_map().vertex_image(VertexId(b)), 0))
        .collect();
    corners.sort_unstable();
    let mut germs: Vec<GlueGerm> = c
        .classes
        .iter()
        .map(|(germ, parts)| {
            let (edge, end) = star.germ_ambient(*germ);
            let mut blocks: Vec<(u32, Vec<EdgeId>)> = parts
                .iter()
                .map(|part| {
                    let mut content: Vec<EdgeId> =
                        part.iter().map(|h| star.half_ambient[h.index()]).collect();
                    content.sort_unstable();
                    (0, content)
                })
                .collect();
            blocks.sort_by(|a, b| a.1.cmp(&b.1));
            GlueGerm { edge, end, blocks }
        })
        .collect();
    germs.sort_by_key(|g| (g.edge, g.end));
    GlueUnit {
        base: star.base,
        n_groups: 1,
        corners,
        germs,
    }
}

fn grow(
    x: &PreComplex,
    star: &LocalStar,
    clusters: &[Cluster],
    from: usize,
    used: u64,
    chosen: &mut Vec<usize>,
    out: &mut Vec<VertexPiece>,
    cap: usize,
) -> Result<(), PieceError> {
    for i in from..clusters.len() {
        if clusters[i].mask & used != 0 {
            continue;
        }
        if out.len() >= cap {
            return Err(PieceError::CatalogueTooLarge {
                vertex: star.base,
                cap,
            });
        }
        chosen.push(i);
        let groups: Vec<&Cluster> = chosen.iter().map(|&j| &clusters[j]).collect();
        out.push(VertexPiece::from_trusted(
            assemble_piece(x, star, &groups),
            star.base,
        ));
        let grown = grow(x, star, clusters, i + 1, used | clusters[i].mask, chosen, out, cap);
        chosen.pop();
        grown?;
    }
    Ok(())
}

/// All vertex pieces over `v`, sorted by size then canonical key.  Prefer
/// [`enumerate_vertex_pieces_capped`] on inputs whose catalogue size is not
/// known in advance: the piece count grows combinatorially with the number of
/// corners over `v`.
pub fn enumerate_vertex_pieces(
    x: &PreComplex,
    v: VertexId,
) -> Result<Vec<VertexPiece>, PieceError> {
    enumerate_vertex_pieces_capped(x, v, usize::MAX)
}

/// All vertex pieces over `v` if there are at most `cap` of them, otherwise
/// `CatalogueTooLarge`.  The bound is checked while enumerating, so oversized
/// catalogues fail early instead of exhausting memory.
pub fn enumerate_vertex_pieces_capped(
    x: &PreComplex,
    v: VertexId,
    cap: usize,
) -> Result<Vec<VertexPiece>, PieceError> {
    let star = LocalStar::new(x, v)?;
    if star.m == 0 {
        return Ok(Vec::new());
    }
    let mut clusters = Vec::new();
    let complete = scan_clusters(&star, 1, full_mask(&star), &mut |c| {
        clusters.push(c);
        clusters.len() <= cap
    });
    if !complete {
        return Err(PieceError::CatalogueTooLarge { vertex: v, cap });
    }
    clusters.sort_by_key(|c| c.mask.trailing_zeros());
    let mut pieces = Vec::new();
    grow(x, &star, &clusters, 0, 0, &mut Vec::new(), &mut pieces, cap)?;
    pieces.sort();
    debug_assert!(
        pieces.windows(2).all(|w| w[0].key != w[1].key),
        "enumerated pieces are pairwise non-isomorphic"
    );
    Ok(pieces)
}

fn edge_piece_from(x: &PreComplex, e: EdgeId, subset: &[EdgeId], shape: &[u8]) -> EdgePiece {
    let mut z_skel = PreGraph::discrete(0);
    z_skel.push_edge(EdgeEnds::new(None, None)).expect("bare edge");
    let mut faces = PreGraph::discrete(0);
    for _ in subset {
        faces.push_edge(EdgeEnds::new(None, None)).expect("bare edge");
    }
    let z_attach = PreGraphMorphism::new(
        faces.clone(),
        z_skel.clone(),
        vec![],
        vec![EdgeId(0); subset.len()],
    )
    .expect("bare edges over a bare edge");
    let z = PreComplex::new(z_attach).expect("edge piece target");
    let blocks = shape.iter().copied().max().map_or(0, |b| usize::from(b) + 1);
    let mut y_skel = PreGraph::discrete(0);
    for _ in 0..blocks {
        y_skel.push_edge(EdgeEnds::new(None, None)).expect("bare edge");
    }
    let y_attach = PreGraphMorphism::new(
        faces.clone(),
        y_skel.clone(),
        vec![],
        shape.iter().map(|&b| EdgeId(u32::from(b))).collect(),
    )
    .expect("bare edges over their blocks");
    let y = PreComplex::new(y_attach).expect("edge piece source");
    let f0 = ComplexMorphism::new(
        &y,
        &z,
        PreGraphMorphism::new(y_skel, z_skel.clone(), vec![], vec![EdgeId(0); blocks])
            .expect("blocks fold onto the bare edge"),
        PreGraphMorphism::identity(&faces),
    )
    .expect("edge piece fold commutes");
    let f1 = ComplexMorphism::new(
        &z,
        x,
        PreGraphMorphism::new(z_skel, x.skeleton().clone(), vec![], vec![e])
            .expect("bare edge into the skeleton"),
        PreGraphMorphism::new(faces, x.faces().clone(), vec![], subset.to_vec())
            .expect("support includes into the faces"),
    )
    .expect("edge piece includes into the ambient complex");
    let triple = FaceImmersionTriple::new(f0, f1).expect("edge piece is a face immersion");
    EdgePiece::from_parts(triple, e)
}

/// All edge pieces over `e`: nonempty fiber subsets split into blocks, in
/// subset-then-partition order.
pub fn enumerate_edge_pieces(x: &PreComplex, e: EdgeId) -> Result<Vec<EdgePiece>, PieceError> {
    let fiber = x.face_fiber(e);
    if fiber.len() > 64 {
        return Err(PieceError::FiberTooLarge {
            edge: e,
            fiber: fiber.len(),
        });
    }
    if fiber.is_empty() {
        return Ok(Vec::new());
    }
    let full = if fiber.len() == 64 {
        u64::MAX
    } else {
        (1u64 << fiber.len()) - 1
    };
    let mut out = Vec::new();
    let mut mask = 1u64;
    loop {
        let subset: Vec<EdgeId> = bits_of(mask).map(|i| fiber[i as usize]).collect();
        for shape in partition_shapes(subset.len(), 1) {
            out.push(edge_piece_from(x, e, &subset, &shape));
        }
        if mask == full {
            break;
        }
        mask += 1;
    }
    out.sort();
    debug_assert!(
        out.windows(2).all(|w| w[0].key != w[1].key),
        "enumerated edge pieces are pairwise non-isomorphic"
    );
    Ok(out)
}

/// The edge piece a face immersion induces over a skeleton edge of its
/// middle complex: the ambient support of the faces over the edge, split by
/// the source edges carrying them.  Source edges with no faces contribute
/// nothing.
pub fn induced_edge_piece(t: &FaceImmersionTriple, e: EdgeId) -> EdgePiece {
    let ambient = t.f1().skeleton_map().edge_image(e);
    let y = t.source();
    let mut items: Vec<(EdgeId, u32)> = Vec::new();
    let mut raw_blocks = 0u32;
    for ey in y.skeleton().edge_ids() {
        if t.f0().skeleton_map().edge_image(ey) != e {
            continue;
        }
        let fiber = y.face_fiber(ey);
        if fiber.is_empty() {
            continue;
        }
        for uy in fiber {
            let mid = t.f0().face_map().edge_image(uy);
            items.push((t.f1().face_map().edge_image(mid), raw_blocks));
        }
        raw_blocks += 1;
    }
    items.sort_unstable();
    debug_assert!(
        items.windows(2).all(|w| w[0].0 != w[1].0),
        "fibers inject into the ambient fiber"
    );
    let subset: Vec<EdgeId> = items.iter().map(|&(u, _)| u).collect();
    let mut relabel = vec![u8::MAX; raw_blocks as usize];
    let mut next = 0u8;
    let shape: Vec<u8> = items
        .iter()
        .map(|&(_, raw)| {
            let slot = &mut relabel[raw as usize];
            if *slot == u8::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    edge_piece_from(t.target(), ambient, &subset, &shape)
}

/// The vertex piece a face immersion induces over a skeleton vertex of its
/// middle complex: one group per source vertex above it, classes given by
/// the source edge-ends.  Errors if the local source is empty or fails
/// visible irreducibility.
pub fn induced_vertex_piece(
    t: &FaceImmersionTriple,
    z: VertexId,
) -> Result<VertexPiece, PieceError> {
    let x = t.target();
    let base = t.f1().skeleton_map().vertex_image(z);
    let star = LocalStar::new(x, base)?;
    let y = t.source();
    let mid_face = |u: EdgeId| t.f1().face_map().edge_image(t.f0().face_map().edge_image(u));
    let mid_corner =
        |s: VertexId| t.f1().face_map().vertex_image(t.f0().face_map().vertex_image(s));
    let mut groups = Vec::new();
    for u in y.skeleton().vertices() {
        if t.f0().skeleton_map().vertex_image(u) != z {
            continue;
        }
        let mut mask = 0u64;
        for s in y.corners_at(u) {
            mask |= 1 << star.corner_by_ambient[&mid_corner(s)];
        }
        let mut classes: BTreeMap<u32, Vec<Vec<EdgeId>>> = BTreeMap::new();
        for (ey, d) in y.skeleton().ends_at(u) {
            let ex = t.f1().skeleton_map().edge_image(t.f0().skeleton_map().edge_image(ey));
            let germ = star.germ_by_ambient[&(ex, d)];
            let mut part: Vec<EdgeId> = y
                .face_fiber(ey)
                .into_iter()
                .filter(|&uy| y.faces().end(uy, d).is_some())
                .map(|uy| star.half_by_ambient[&(mid_face(uy), d)])
                .collect();
            if part.is_empty() {
                continue;
            }
            part.sort_unstable();
            classes.entry(germ).or_default().push(part);
        }
        groups.push(Cluster {
            mask,
            classes: classes.into_iter().collect(),
        });
    }
    let refs: Vec<&Cluster> = groups.iter().collect();
    if refs.is_empty() {
        return Err(PieceError::NotVisiblyIrreducible);
    }
    VertexPiece::from_triple(assemble_piece(x, &star, &refs), base)
}

/// Formal rational combination of vertex pieces, keyed canonically.
#[derive(Clone, Debug, Default)]
pub struct WeightVector {
    terms: BTreeMap<CanonicalForm, (VertexPiece, BigRational)>,
}

impl WeightVector {
    pub fn new() -> WeightVector {
        WeightVector::default()
    }

    pub fn add(&mut self, piece: &VertexPiece, coeff: &BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(piece.key().clone()) {
            Entry::Vacant(slot) => {
                slot.insert((piece.clone(), coeff.clone()));
            }
            Entry::Occupied(mut slot) => {
                slot.get_mut().1 += coeff;
                if slot.get().1.is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn merge(&mut self, other: &WeightVector) {
        for (piece, coeff) in other.iter() {
            self.add(piece, coeff);
        }
    }

    pub fn coeff(&self, key: &CanonicalForm) -> BigRational {
        self.terms
            .get(key)
            .map_or_else(BigRational::zero, |(_, c)| c.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexPiece, &BigRational)> {
        self.terms.values().map(|(p, c)| (p, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn deg(&self) -> BigRational {
        self.iter().map(|(p, c)| c * p.deg()).sum()
    }

    pub fn tau(&self) -> BigRational {
        self.iter().map(|(p, c)| c * p.tau()).sum()
    }

    pub fn is_integral(&self) -> bool {
        self.iter().all(|(_, c)| c.is_integer())
    }
}

/// The weight vector of a face immersion: one induced vertex piece per
/// middle vertex.
pub fn weight_vector(t: &FaceImmersionTriple) -> Result<WeightVector, PieceError> {
    let mut w = WeightVector::new();
    let one = BigRational::one();
    for z in t.middle().skeleton().vertices() {
        w.add(&induced_vertex_piece(t, z)?, &one);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::{degree, face_immersion_of, total_curvature};
    use crate::precomplex::disjoint_union_complexes;
    use crate::presentation::Presentation;

    fn complex_of(text: &str) -> PreComplex {
        Presentation::parse(text).unwrap().complex()
    }

    #[test]
    fn partition_shapes_match_known_counts() {
        assert_eq!(partition_shapes(2, 2), vec![vec![0, 0]]);
        assert_eq!(partition_shapes(4, 2).len(), 4);
        assert_eq!(partition_shapes(5, 2).len(), 11);
        assert_eq!(partition_shapes(6, 2).len(), 41);
        assert_eq!(partition_shapes(4, 1).len(), 15);
    }

    #[test]
    fn disc_vertex_has_no_pieces() {
        let x = complex_of("<a | a>");
        assert!(enumerate_vertex_pieces(&x, VertexId(0)).unwrap().is_empty());
    }

    #[test]
    fn torus_vertex_has_exactly_the_identity_piece() {
        let x = complex_of("<a, b | a b a' b'>");
        let pieces = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        assert_eq!(pieces.len(), 1);
        let p = &pieces[0];
        assert_eq!(p.z_edge_count(), 4);
        assert_eq!(p.corner_count(), 4);
        assert_eq!(p.group_count(), 1);
        assert_eq!(*p.deg(), BigRational::one());
        assert_eq!(*p.tau(), BigRational::zero());
        assert!(p.boundary().is_empty());
    }

    #[test]
    fn surface_vertex_piece_is_unique_with_negative_curvature() {
        let x = complex_of("<a, b, c | a a b b c c>");
        let pieces = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        assert_eq!(pieces.len(), 1);
        let p = &pieces[0];
        assert_eq!(p.z_edge_count(), 6);
        assert_eq!(*p.deg(), BigRational::one());
        assert_eq!(*p.tau(), -BigRational::one());
        assert!(p.boundary().is_empty());
    }

    #[test]
    fn spectacles_vertices_have_five_pieces_each() {
        let x = spectacles();
        for v in [VertexId(0), VertexId(1)] {
            let pieces = enumerate_vertex_pieces(&x, v).unwrap();
            assert_eq!(pieces.len(), 5);
            let mut groups: Vec<u32> = pieces.iter().map(|p| p.group_count()).collect();
            groups.sort_unstable();
            assert_eq!(groups, [1, 1, 1, 1, 2]);
        }
    }

    #[test]
    fn two_group_spectacles_piece_has_a_single_boundary_term() {
        let x = spectacles();
        let pieces = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        let pair = pieces.iter().find(|p| p.group_count() == 2).unwrap();
        let boundary = pair.boundary();
        assert_eq!(boundary.len(), 1);
        let (r, sign) = &boundary[0];
        assert_eq!(*sign, 1);
        assert_eq!(r.base(), EdgeId(2));
        assert_eq!(r.support_size(), 4);
        assert_eq!(r.block_count(), 2);
    }

    #[test]
    fn edge_piece_catalogues_have_the_right_shapes() {
        let torus = complex_of("<a, b | a b a' b'>");
        let over_a = enumerate_edge_pieces(&torus, EdgeId(0)).unwrap();
        assert_eq!(over_a.len(), 4);
        let mut shapes: Vec<(u32, u32)> = over_a
            .iter()
            .map(|r| (r.support_size(), r.block_count()))
            .collect();
        shapes.sort_unstable();
        assert_eq!(shapes, [(1, 1), (1, 1), (2, 1), (2, 2)]);

        let disc = complex_of("<a | a>");
        let over = enumerate_edge_pieces(&disc, EdgeId(0)).unwrap();
        assert_eq!(over.len(), 1);
        assert_eq!(over[0].support_size(), 1);

        let unused = complex_of("<a, b | a a>");
        assert!(enumerate_edge_pieces(&unused, EdgeId(1)).unwrap().is_empty());
    }

    #[test]
    fn identity_piece_is_induced_from_the_identity_triple() {
        let x = complex_of("<a, b | a b a' b'>");
        let t = face_immersion_of(&ComplexMorphism::identity(&x)).unwrap();
        let induced = induced_vertex_piece(&t, VertexId(0)).unwrap();
        let pieces = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        assert_eq!(induced, pieces[0]);

        let w = weight_vector(&t).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.coeff(pieces[0].key()), BigRational::one());
        assert_eq!(
            w.deg(),
            BigRational::from_integer(BigInt::from(
                degree(&t.composite()).unwrap().total
            ))
        );
        assert_eq!(w.tau(), total_curvature(&t.composite()).unwrap());
    }

    #[test]
    fn weight_vector_doubles_on_a_disjoint_union() {
        let x = complex_of("<a, b | a b a' b'>");
        let du = disjoint_union_complexes(&[x.clone(), x.clone()]);
        let skel = PreGraphMorphism::new(
            du.complex.skeleton().clone(),
            x.skeleton().clone(),
            vec![VertexId(0); 2],
            vec![EdgeId(0), EdgeId(1), EdgeId(0), EdgeId(1)],
        )
        .unwrap();
        let face_vertices = (0..8).map(|i| VertexId(i % 4)).collect();
        let face_edges = (0..8).map(|i| EdgeId(i % 4)).collect();
        let faces = PreGraphMorphism::new(
            du.complex.faces().clone(),
            x.faces().clone(),
            face_vertices,
            face_edges,
        )
        .unwrap();
        let f = ComplexMorphism::new(&du.complex, &x, skel, faces).unwrap();
        let t = face_immersion_of(&f).unwrap();
        let w = weight_vector(&t).unwrap();
        assert_eq!(w.len(), 1);
        let piece = enumerate_vertex_pieces(&x, VertexId(0)).unwrap().remove(0);
        assert_eq!(w.coeff(piece.key()), BigRational::from_integer(2.into()));
        assert_eq!(w.deg(), BigRational::from_integer(2.into()));
        assert_eq!(w.tau(), BigRational::zero());
        assert!(w.is_integral());
    }

    #[test]
    fn induced_piece_from_a_reducible_source_errors() {
        let x = complex_of("<a | a>");
        let t = face_immersion_of(&ComplexMorphism::identity(&x)).unwrap();
        assert_eq!(
            induced_vertex_piece(&t, VertexId(0)),
            Err(PieceError::NotVisiblyIrreducible)
        );
        assert!(weight_vector(&t).is_err());
    }

    #[test]
    fn piece_enumeration_is_reproducible() {
        let x = spectacles();
        let a = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        let b = enumerate_vertex_pieces(&x, VertexId(0)).unwrap();
        let keys_a: Vec<_> = a.iter().map(|p| p.key().clone()).collect();
        let keys_b: Vec<_> = b.iter().map(|p| p.key().clone()).collect();
        assert_eq!(keys_a, keys_b);
    }

    #[test]
    fn pieces_satisfy_the_local_bounds() {
        for x in [spectacles(), complex_of("<a, b, c | a a b b c c>")] {
            for v in x.skeleton().vertices() {
                for p in enumerate_vertex_pieces(&x, v).unwrap() {
                    let y = p.triple().source();
                    for u in y.skeleton().vertices() {
                        assert!(y.skeleton().valence(u) >= 2);
                        assert!(y.corners_at(u).len() >= 2);
                    }
                    for e in y.skeleton().edge_ids() {
                        assert!(y.face_fiber(e).len() >= 2);
                    }
                }
            }
        }
    }

    #[test]
    fn boundaries_land_in_the_edge_catalogue() {
        let x = spectacles();
        let mut catalogues: HashMap<EdgeId, Vec<CanonicalForm>> = HashMap::new();
        for e in x.skeleton().edge_ids() {
            catalogues.insert(
                e,
                enumerate_edge_pieces(&x, e)
                    .unwrap()
                    .iter()
                    .map(|r| r.key().clone())
                    .collect(),
            );
        }
        for v in x.skeleton().vertices() {
            for p in enumerate_vertex_pieces(&x, v).unwrap() {
                for (r, sign) in p.boundary() {
                    assert_ne!(sign, 0);
                    assert!(catalogues[&r.base()].contains(r.key()));
                }
            }
        }
    }

    #[test]
    fn glue_units_agree_between_clusters_and_pieces() {
        for x in [spectacles(), complex_of("<a, b | a b a' b'>")] {
            for v in x.skeleton().vertices() {
                let star = LocalStar::new(&x, v).unwrap();
                scan_clusters(&star, 1, full_mask(&star), &mut |c| {
                    let direct = cluster_unit(&star, &c);
                    let walked = piece_unit(&cluster_piece(&x, &star, &c));
                    assert_eq!(direct, walked);
                    true
                });
            }
        }
    }

    #[test]
    fn glue_units_match_boundary_contents() {
        let content_key = |r: &EdgePiece| {
            let t = r.triple();
            let mut contents: Vec<Vec<EdgeId>> = t
                .source()
                .skeleton()
                .edge_ids()
                .map(|ey| {
                    let mut q: Vec<EdgeId> = t
                        .source()
                        .face_fiber(ey)
                        .into_iter()
                        .map(|u| {
                            t.f1().face_map().edge_image(t.f0().face_map().edge_image(u))
                        })
                        .collect();
                    q.sort_unstable();
                    q
                })
                .collect();
            contents.sort();
            (r.base(), contents)
        };
        let x = spectacles();
        for v in x.skeleton().vertices() {
            for p in enumerate_vertex_pieces(&x, v).unwrap() {
                let unit = piece_unit(&p);
                let (iota, tau) = p.boundary_split();
                for (side, want) in [(End::Iota, iota), (End::Tau, tau)] {
                    let mut from_unit: Vec<(EdgeId, Vec<Vec<EdgeId>>)> = unit
                        .germs
                        .iter()
                        .filter(|g| g.end == side)
                        .map(|g| {
                            (g.edge, g.blocks.iter().map(|(_, q)| q.clone()).collect())
                        })
                        .collect();
                    from_unit.sort();
                    let mut from_boundary: Vec<(EdgeId, Vec<Vec<EdgeId>>)> = want
                        .iter()
                        .flat_map(|(r, n)| {
                            std::iter::repeat_n(content_key(r), *n as usize)
                        })
                        .collect();
                    from_boundary.sort();
                    assert_eq!(from_unit, from_boundary);
                }
            }
        }
    }

    #[test]
    fn cluster_encoding_round_trips() {
        let x = spectacles();
        let star = LocalStar::new(&x, VertexId(0)).unwrap();
        let mut originals = Vec::new();
        let mut arena = Vec::new();
        scan_clusters(&star, 1, full_mask(&star), &mut |c| {
            c.encode_to(&mut arena);
            originals.push(c);
            true
        });
        let mut at = 0;
        for want in &originals {
            let (got, used) = Cluster::decode(&arena[at..]);
            at += used;
            assert_eq!(got.mask, want.mask);
            assert_eq!(got.classes, want.classes);
        }
        assert_eq!(at, arena.len());
    }

    #[test]
    #[ignore = "measurement: dumps aggregated cluster columns for offline inspection"]
    fn word14_aggregated_dump() {
        use std::io::Write as _;
        let x = complex_of("<a, b, c | a b b c c a b b c c b b c c>");
        let star = LocalStar::new(&x, VertexId(0)).unwrap();
        let mut types: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
        let mut cols: HashMap<(i64, i64, Vec<(u32, i64)>), u64> = HashMap::new();
        let t0 = std::time::Instant::now();
        let mut n_clusters = 0u64;
        scan_clusters(&star, 1, full_mask(&star), &mut |c| {
            n_clusters += 1;
            let deg14 = i64::from(c.mask.count_ones());
            let tau14 = deg14 + 14 - 7 * c.block_count() as i64;
            let mut ent: BTreeMap<u32, i64> = BTreeMap::new();
            for (germ, parts) in &c.classes {
                let (edge, d) = star.germ_ambient(*germ);
                let sign = if d == End::Iota { 1 } else { -1 };
                for part in parts {
                    let mut content: Vec<u32> =
                        part.iter().map(|h| star.half_ambient[h.index()].0).collect();
                    content.sort_unstable();
                    let next = types.len() as u32;
                    let ty = *types.entry((edge.0, content)).or_insert(next);
                    *ent.entry(ty).or_insert(0) += sign;
                }
            }
            let ent: Vec<(u32, i64)> = ent.into_iter().filter(|&(_, v)| v != 0).collect();
            *cols.entry((tau14, deg14, ent)).or_insert(0) += 1;
            true
        });
        println!(
            "clusters {} distinct columns {} types {} in {:?}",
            n_clusters,
            cols.len(),
            types.len(),
            t0.elapsed()
        );
        let mut f = std::fs::File::create("/tmp/word14_agg.json").unwrap();
        writeln!(f, "{{\"n_types\": {}, \"cols\": [", types.len()).unwrap();
        for (i, ((tau14, deg14, ent), mult)) in cols.iter().enumerate() {
            let comma = if i + 1 == cols.len() { "" } else { "," };
            let ent_s: Vec<String> = ent.iter().map(|(t, v)| format!("[{t},{v}]")).collect();
            writeln!(
                f,
                "{{\"tau14\": {tau14}, \"deg14\": {deg14}, \"mult\": {mult}, \"ent\": [{}]}}{comma}",
                ent_s.join(",")
            )
            .unwrap();
        }
        writeln!(f, "]}}").unwrap();
    }

    /// Two vertices joined by edge b, loops a1 and a2 on either side, one
    /// face along the commutator of a1 and b a2 b'.
    fn spectacles() -> PreComplex {
        let skeleton = PreGraph::graph(2, &[(0, 0), (1, 1), (0, 1)]);
        let mut faces = PreGraph::discrete(8);
        let pairs = [
            (0, 1),
            (1, 2),
            (2, 3),
            (4, 3),
            (5, 4),
            (5, 6),
            (7, 6),
            (0, 7),
        ];
        for (i, t) in pairs {
            faces
                .push_edge(EdgeEnds::new(Some(VertexId(i)), Some(VertexId(t))))
                .unwrap();
        }
        let edge_images = [0, 2, 1, 2, 0, 2, 1, 2].map(EdgeId).to_vec();
        let vertex_images = [0, 0, 1, 1, 0, 0, 1, 1].map(VertexId).to_vec();
        let attach =
            PreGraphMorphism::new(faces, skeleton, vertex_images, edge_images).unwrap();
        PreComplex::new(attach).unwrap()
    }
}
