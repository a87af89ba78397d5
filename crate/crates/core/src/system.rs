//! The gluing systems whose exact optima bound curvature over pieces.
//!
//! Every face immersion of a closed, visibly irreducible complex induces a
//! nonnegative weight vector on vertex pieces whose induced edge pieces
//! balance: each skeleton edge of the source contributes the same edge piece
//! once over an initial germ and once over a terminal germ.  Maximising
//! total curvature subject to balance and unit total degree is therefore a
//! finite linear program whose value bounds the curvature-to-degree ratio of
//! every such immersion.  [`GluingSystem`] is that program, one column per
//! vertex piece.
//!
//! Piece catalogues grow combinatorially, so [`AggregatedSystem`] keeps one
//! column per cluster (single-group piece) instead and balances block
//! contents rather than whole edge pieces.  Content counts are additive when
//! clusters merge into multi-group pieces, so every faithful solution maps
//! to an aggregated solution of the same value: the aggregated optimum is an
//! upper bound, and it is exact whenever a reconstructed witness attains it.
//!
//! Both builders are deterministic for a fixed input regardless of the
//! execution strategy: cluster scans are sharded over fixed mask ranges, and
//! all ordering is by mask, canonical key, or content.  Curvature data is
//! scaled by the lcm of 2 and the face cycle lengths, so the programs have
//! integer coefficients and the simplex solver never leaves the rationals.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num::{BigInt, BigRational, ToPrimitive};
use thiserror::Error;

use crate::exec::Parallelism;
use crate::ids::{EdgeId, VertexId};
use crate::pieces::{
    bits_of, cluster_piece, cluster_unit, enumerate_vertex_pieces_capped, full_mask,
    scan_clusters, Cluster, EdgePiece, GlueUnit, LocalStar, PieceError, VertexPiece,
};
use crate::precomplex::PreComplex;
use crate::simplex::StandardLp;

/// Clusters admitted before an aggregated build gives up.
pub const DEFAULT_CLUSTER_CAP: usize = 4_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error(transparent)]
    Piece(#[from] PieceError),
    #[error("cluster scan exceeded {cap} clusters")]
    TooManyClusters { cap: usize },
    #[error("curvature data overflows 64-bit integers")]
    ScaleOverflow,
}

/// The lcm of 2 and every face cycle length: multiplying `deg` and `tau` by
/// this clears all denominators.
pub fn curvature_scale(x: &PreComplex) -> Result<i64, SystemError> {
    let fc = x.face_components();
    let mut m: i64 = 2;
    for &len in &fc.n_vertices {
        if len == 0 {
            continue;
        }
        let len = i64::from(len);
        let g = num::integer::gcd(m, len);
        m = (m / g).checked_mul(len).ok_or(SystemError::ScaleOverflow)?;
    }
    Ok(m)
}

fn scaled_to_i64(v: &BigRational, scale: i64) -> Result<i64, SystemError> {
    let scaled = v * BigRational::from_integer(BigInt::from(scale));
    debug_assert!(scaled.is_integer());
    scaled.to_integer().to_i64().ok_or(SystemError::ScaleOverflow)
}

/// The faithful program: columns are vertex pieces, balance rows are the
/// edge pieces reachable from some column's boundary.  The initial and
/// terminal boundary counts are kept separately; the balance rows use their
/// difference.
#[derive(Debug)]
pub struct GluingSystem {
    pieces: Vec<VertexPiece>,
    rows: Vec<EdgePiece>,
    iota: Vec<Vec<(u32, i64)>>,
    tau: Vec<Vec<(u32, i64)>>,
    net_ptr: Vec<usize>,
    net_row: Vec<u32>,
    net_val: Vec<i64>,
    deg_scaled: Vec<i64>,
    tau_scaled: Vec<i64>,
    scale: i64,
}

impl GluingSystem {
    pub fn build(x: &PreComplex, par: Parallelism) -> Result<GluingSystem, SystemError> {
        GluingSystem::build_capped(x, usize::MAX, par)
    }

    /// Build with a per-vertex piece cap; oversized catalogues surface as
    /// `CatalogueTooLarge` so callers can fall back to the aggregated system.
    pub fn build_capped(
        x: &PreComplex,
        cap: usize,
        par: Parallelism,
    ) -> Result<GluingSystem, SystemError> {
        let scale = curvature_scale(x)?;
        let vertices: Vec<VertexId> = x.skeleton().vertices().collect();
        let mut pieces = Vec::new();
        for found in par.map_indices(vertices.len(), |i| {
            enumerate_vertex_pieces_capped(x, vertices[i], cap)
        }) {
            pieces.extend(found?);
        }
        let splits = par.map_indices(pieces.len(), |i| pieces[i].boundary_split());
        let mut rows: Vec<EdgePiece> = Vec::new();
        let mut row_of: HashMap<crate::canonical::CanonicalForm, u32> = HashMap::new();
        for (iota, tau) in &splits {
            for (r, _) in iota.iter().chain(tau) {
                if !row_of.contains_key(r.key()) {
                    row_of.insert(r.key().clone(), 0);
                    rows.push(r.clone());
                }
            }
        }
        rows.sort();
        for (i, r) in rows.iter().enumerate() {
            row_of.insert(r.key().clone(), i as u32);
        }
        let index = |side: &[(EdgePiece, i64)]| {
            let mut out: Vec<(u32, i64)> = side
                .iter()
                .map(|(r, c)| (row_of[r.key()], *c))
                .collect();
            out.sort_unstable();
            out
        };
        let mut iota = Vec::with_capacity(pieces.len());
        let mut tau = Vec::with_capacity(pieces.len());
        let mut net_ptr = vec![0usize];
        let mut net_row = Vec::new();
        let mut net_val = Vec::new();
        let mut deg_scaled = Vec::with_capacity(pieces.len());
        let mut tau_scaled = Vec::with_capacity(pieces.len());
        for (piece, (side_i, side_t)) in pieces.iter().zip(&splits) {
            let side_i = index(side_i);
            let side_t = index(side_t);
            let mut entries: Vec<(u32, i64)> = side_i.clone();
            for &(row, c) in &side_t {
                match entries.iter_mut().find(|(r, _)| *r == row) {
                    Some(e) => e.1 -= c,
                    None => entries.push((row, -c)),
                }
            }
            entries.retain(|&(_, v)| v != 0);
            entries.sort_unstable();
            for (row, val) in entries {
                net_row.push(row);
                net_val.push(val);
            }
            net_ptr.push(net_row.len());
            deg_scaled.push(scaled_to_i64(piece.deg(), scale)?);
            tau_scaled.push(scaled_to_i64(piece.tau(), scale)?);
            iota.push(side_i);
            tau.push(side_t);
        }
        Ok(GluingSystem {
            pieces,
            rows,
            iota,
            tau,
            net_ptr,
            net_row,
            net_val,
            deg_scaled,
            tau_scaled,
            scale,
        })
    }

    pub fn pieces(&self) -> &[VertexPiece] {
        &self.pieces
    }

    pub fn rows(&self) -> &[EdgePiece] {
        &self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.pieces.len()
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn deg_scaled(&self, j: usize) -> i64 {
        self.deg_scaled[j]
    }

    pub fn tau_scaled(&self, j: usize) -> i64 {
        self.tau_scaled[j]
    }

    /// Net balance entries of column `j`, sorted by row.
    pub fn net(&self, j: usize) -> impl Iterator<Item = (u32, i64)> + '_ {
        (self.net_ptr[j]..self.net_ptr[j + 1]).map(move |k| (self.net_row[k], self.net_val[k]))
    }

    /// Initial-side boundary counts of column `j`, sorted by row.
    pub fn boundary_iota(&self, j: usize) -> &[(u32, i64)] {
        &self.iota[j]
    }

    /// Terminal-side boundary counts of column `j`, sorted by row.
    pub fn boundary_tau(&self, j: usize) -> &[(u32, i64)] {
        &self.tau[j]
    }

    pub fn standard_lp(&self) -> StandardLp {
        self.lp_over((0..self.n_cols()).collect::<Vec<_>>().as_slice())
    }

    /// The same program with columns permuted; the optimum must not move.
    pub fn standard_lp_in(&self, order: &[usize]) -> StandardLp {
        debug_assert_eq!(order.len(), self.n_cols());
        self.lp_over(order)
    }

    fn lp_over(&self, order: &[usize]) -> StandardLp {
        let n_rows = self.rows.len();
        let mut rhs = vec![0i64; n_rows + 1];
        rhs[n_rows] = self.scale;
        let mut lp = StandardLp::new(n_rows + 1, rhs);
        let mut entries = Vec::new();
        for &j in order {
            entries.clear();
            entries.extend(self.net(j));
            entries.push((n_rows as u32, self.deg_scaled[j]));
            lp.push_col(self.tau_scaled[j], &entries);
        }
        lp
    }
}

/// The aggregated program: columns are clusters over every vertex, balance
/// rows are block contents `(skeleton edge, set of face edges)`, counted
/// positively over initial germs and negatively over terminal germs.
#[derive(Debug)]
pub struct AggregatedSystem {
    x: PreComplex,
    stars: Vec<LocalStar>,
    types: Vec<(EdgeId, Vec<EdgeId>)>,
    col_star: Vec<u32>,
    col_off: Vec<usize>,
    arena: Vec<u32>,
    net_ptr: Vec<usize>,
    net_row: Vec<u32>,
    net_val: Vec<i32>,
    deg_scaled: Vec<i64>,
    tau_scaled: Vec<i64>,
    scale: i64,
}

/// Columns produced by one mask-range shard of a cluster scan.
struct ClusterShard {
    types: Vec<(EdgeId, Vec<EdgeId>)>,
    type_of: HashMap<(EdgeId, Vec<EdgeId>), u32>,
    net_ptr: Vec<usize>,
    net_row: Vec<u32>,
    net_val: Vec<i32>,
    deg_scaled: Vec<i64>,
    tau_scaled: Vec<i64>,
    offsets: Vec<usize>,
    arena: Vec<u32>,
}

impl ClusterShard {
    fn new() -> ClusterShard {
        ClusterShard {
            types: Vec::new(),
            type_of: HashMap::new(),
            net_ptr: vec![0],
            net_row: Vec::new(),
            net_val: Vec::new(),
            deg_scaled: Vec::new(),
            tau_scaled: Vec::new(),
            offsets: Vec::new(),
            arena: Vec::new(),
        }
    }

    fn push(&mut self, star: &LocalStar, w_scaled: &[i64], scale: i64, c: &Cluster) {
        let deg: i64 = bits_of(c.mask).map(|b| w_scaled[b as usize]).sum();
        let tau = deg + scale - scale / 2 * c.block_count() as i64;
        let mut net: Vec<(u32, i32)> = Vec::new();
        for (germ, parts) in &c.classes {
            let (edge, end) = star.germ_ambient(*germ);
            let sign = if end == crate::ids::End::Iota { 1 } else { -1 };
            for part in parts {
                let mut content: Vec<EdgeId> =
                    part.iter().map(|h| star.half_ambient[h.index()]).collect();
                content.sort_unstable();
                let next = self.types.len() as u32;
                let ty = match self.type_of.entry((edge, content)) {
                    Entry::Occupied(o) => *o.get(),
                    Entry::Vacant(v) => {
                        self.types.push((v.key().0, v.key().1.clone()));
                        *v.insert(next)
                    }
                };
                match net.iter_mut().find(|(t, _)| *t == ty) {
                    Some((_, v)) => *v += sign,
                    None => net.push((ty, sign)),
                }
            }
        }
        for (ty, val) in net {
            if val != 0 {
                self.net_row.push(ty);
                self.net_val.push(val);
            }
        }
        self.net_ptr.push(self.net_row.len());
        self.deg_scaled.push(deg);
        self.tau_scaled.push(tau);
        self.offsets.push(self.arena.len());
        c.encode_to(&mut self.arena);
    }
}

const SCAN_SHARDS: u64 = 256;

fn shard_range(full: u64, s: u64) -> (u64, u64) {
    let lo = 1 + (u128::from(full) * u128::from(s) / u128::from(SCAN_SHARDS)) as u64;
    let hi = (u128::from(full) * u128::from(s + 1) / u128::from(SCAN_SHARDS)) as u64;
    (lo, hi)
}

impl AggregatedSystem {
    pub fn build(x: &PreComplex, par: Parallelism) -> Result<AggregatedSystem, SystemError> {
        AggregatedSystem::build_capped(x, DEFAULT_CLUSTER_CAP, par)
    }

    pub fn build_capped(
        x: &PreComplex,
        cap: usize,
        par: Parallelism,
    ) -> Result<AggregatedSystem, SystemError> {
        let scale = curvature_scale(x)?;
        let mut stars = Vec::new();
        for v in x.skeleton().vertices() {
            let star = LocalStar::new(x, v)?;
            if star.m > 0 {
                stars.push(star);
            }
        }
        let seen = AtomicU64::new(0);
        let mut sys = AggregatedSystem {
            x: x.clone(),
            stars: Vec::new(),
            types: Vec::new(),
            col_star: Vec::new(),
            col_off: Vec::new(),
            arena: Vec::new(),
            net_ptr: vec![0],
            net_row: Vec::new(),
            net_val: Vec::new(),
            deg_scaled: Vec::new(),
            tau_scaled: Vec::new(),
            scale,
        };
        let mut global_of: HashMap<(EdgeId, Vec<EdgeId>), u32> = HashMap::new();
        for (si, star) in stars.iter().enumerate() {
            let w_scaled: Vec<i64> = star
                .corner_weight
                .iter()
                .map(|w| scaled_to_i64(w, scale))
                .collect::<Result<_, _>>()?;
            let full = full_mask(star);
            let shards = par.map_indices(SCAN_SHARDS as usize, |s| {
                let (lo, hi) = shard_range(full, s as u64);
                let mut shard = ClusterShard::new();
                scan_clusters(star, lo, hi, &mut |c| {
                    if seen.fetch_add(1, Ordering::Relaxed) >= cap as u64 {
                        return false;
                    }
                    shard.push(star, &w_scaled, scale, &c);
                    true
                });
                shard
            });
            for shard in shards {
                let remap: Vec<u32> = shard
                    .types
                    .into_iter()
                    .map(|key| {
                        let next = sys.types.len() as u32;
                        match global_of.entry(key) {
                            Entry::Occupied(o) => *o.get(),
                            Entry::Vacant(v) => {
                                sys.types.push((v.key().0, v.key().1.clone()));
                                *v.insert(next)
                            }
                        }
                    })
                    .collect();
                let base = sys.arena.len();
                sys.arena.extend(shard.arena);
                for col in 0..shard.deg_scaled.len() {
                    sys.col_star.push(si as u32);
                    sys.col_off.push(base + shard.offsets[col]);
                    for k in shard.net_ptr[col]..shard.net_ptr[col + 1] {
                        sys.net_row.push(remap[shard.net_row[k] as usize]);
                        sys.net_val.push(shard.net_val[k]);
                    }
                    sys.net_ptr.push(sys.net_row.len());
                }
                sys.deg_scaled.extend(shard.deg_scaled);
                sys.tau_scaled.extend(shard.tau_scaled);
            }
        }
        if seen.load(Ordering::Relaxed) > cap as u64 {
            return Err(SystemError::TooManyClusters { cap });
        }
        sys.stars = stars;
        sys.sort_types();
        Ok(sys)
    }

    /// Reindex types into content order and resort every column's entries.
    fn sort_types(&mut self) {
        let mut tagged: Vec<((EdgeId, Vec<EdgeId>), u32)> =
            std::mem::take(&mut self.types).into_iter().zip(0u32..).collect();
        tagged.sort();
        let mut rank = vec![0u32; tagged.len()];
        for (new, &(_, old)) in tagged.iter().enumerate() {
            rank[old as usize] = new as u32;
        }
        self.types = tagged.into_iter().map(|(key, _)| key).collect();
        for row in &mut self.net_row {
            *row = rank[*row as usize];
        }
        let mut entries: Vec<(u32, i32)> = Vec::new();
        for j in 0..self.deg_scaled.len() {
            let span = self.net_ptr[j]..self.net_ptr[j + 1];
            entries.clear();
            entries
                .extend(self.net_row[span.clone()].iter().copied().zip(
                    self.net_val[span.clone()].iter().copied(),
                ));
            entries.sort_unstable();
            for (k, (row, val)) in span.zip(entries.iter()) {
                self.net_row[k] = *row;
                self.net_val[k] = *val;
            }
        }
    }

    pub fn complex(&self) -> &PreComplex {
        &self.x
    }

    pub fn n_cols(&self) -> usize {
        self.deg_scaled.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[(EdgeId, Vec<EdgeId>)] {
        &self.types
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn deg_scaled(&self, j: usize) -> i64 {
        self.deg_scaled[j]
    }

    pub fn tau_scaled(&self, j: usize) -> i64 {
        self.tau_scaled[j]
    }

    /// Net balance entries of column `j`, sorted by row.
    pub fn net(&self, j: usize) -> impl Iterator<Item = (u32, i64)> + '_ {
        (self.net_ptr[j]..self.net_ptr[j + 1])
            .map(move |k| (self.net_row[k], i64::from(self.net_val[k])))
    }

    /// The skeleton vertex column `j` sits over.
    pub fn base(&self, j: usize) -> VertexId {
        self.stars[self.col_star[j] as usize].base
    }

    pub(crate) fn star(&self, j: usize) -> &LocalStar {
        &self.stars[self.col_star[j] as usize]
    }

    pub(crate) fn cluster(&self, j: usize) -> Cluster {
        Cluster::decode(&self.arena[self.col_off[j]..]).0
    }

    pub(crate) fn unit(&self, j: usize) -> GlueUnit {
        cluster_unit(self.star(j), &self.cluster(j))
    }

    /// Materialise column `j` as the single-group piece it stands for.
    pub fn piece(&self, j: usize) -> VertexPiece {
        cluster_piece(&self.x, self.star(j), &self.cluster(j))
    }

    pub fn standard_lp(&self) -> StandardLp {
        let order: Vec<usize> = (0..self.n_cols()).collect();
        self.lp_over(&order)
    }

    /// The same program with columns permuted; the optimum must not move.
    pub fn standard_lp_in(&self, order: &[usize]) -> StandardLp {
        debug_assert_eq!(order.len(), self.n_cols());
        self.lp_over(order)
    }

    fn lp_over(&self, order: &[usize]) -> StandardLp {
        let n_types = self.types.len();
        let mut rhs = vec![0i64; n_types + 1];
        rhs[n_types] = self.scale;
        let mut lp = StandardLp::new(n_types + 1, rhs);
        let mut entries = Vec::new();
        for &j in order {
            entries.clear();
            entries.extend(self.net(j));
            entries.push((n_types as u32, self.deg_scaled[j]));
            lp.push_col(self.tau_scaled[j], &entries);
        }
        lp
    }
}
