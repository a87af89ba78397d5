//! Brute-force cross-checks for piece decompositions and gluing optima.
//!
//! [`enumerate_triples`] assembles every face immersion triple over a
//! complex with a bounded number of middle vertices, up to isomorphism, by
//! gluing multisets of vertex pieces under every germ matching rather than
//! the single in-order pairing the reconstruction engine uses.  Any triple
//! decomposes into its induced vertex pieces, and the matching it induces
//! pairs germs with equal block contents on the same edge, which is one of
//! the permutations tried, so the enumeration is exhaustive within the
//! budget.
//!
//! On top of it, [`verify_triple`] recomputes the decomposition identities
//! of a triple with independent arithmetic, [`check_bound`] compares a
//! claimed optimum against every enumerated curvature-to-degree ratio, and
//! [`enumerate_irreducible_immersions`] lists the irreducible immersions of
//! bounded first Betti number that a uniform negativity bound leaves room
//! for.

use std::collections::BTreeMap;

use itertools::Itertools;
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::canonical::{canonical_triple, CanonicalForm};
use crate::folding::{classify_map, degree, total_curvature, DegreeError, FaceImmersionTriple};
use crate::ids::End;
use crate::lp::PieceAssembly;
use crate::pieces::{
    enumerate_vertex_pieces_capped, piece_unit, weight_vector, GlueUnit, PieceError, VertexPiece,
};
use crate::precomplex::PreComplex;
use crate::reducibility::{classify, Verdict};

/// Vertex pieces admitted per vertex before enumeration gives up.
pub const ORACLE_PIECE_CAP: usize = 20_000;

/// Largest middle-vertex budget the enumeration accepts.
pub const ORACLE_COPY_LIMIT: u32 = 6;

/// Germ matchings tried per piece multiset before enumeration gives up.
const MATCHING_CAP: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Piece(#[from] PieceError),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error("enumeration requires a closed complex")]
    NotClosed,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("a budget of {budget} middle vertices exceeds the enumeration limit {limit}")]
    BudgetTooLarge { budget: u64, limit: u64 },
    #[error("a piece multiset admits {count} germ matchings, over the enumeration limit")]
    TooManyMatchings { count: u64 },
}

/// Every face immersion triple over `x` with at most `budget` middle
/// vertices, up to isomorphism, in canonical order.
pub fn enumerate_triples(
    x: &PreComplex,
    budget: u32,
) -> Result<Vec<FaceImmersionTriple>, OracleError> {
    if !x.is_complex() {
        return Err(OracleError::NotClosed);
    }
    if budget > ORACLE_COPY_LIMIT {
        return Err(OracleError::BudgetTooLarge {
            budget: u64::from(budget),
            limit: u64::from(ORACLE_COPY_LIMIT),
        });
    }
    let units: Vec<GlueUnit> = piece_pool(x)?.iter().map(piece_unit).collect();
    let mut found = BTreeMap::new();
    glue_all(x, &units, 0, budget, &mut Vec::new(), &mut found)?;
    Ok(found.into_values().collect())
}

/// The vertex pieces of `x` over all of its skeleton vertices.
fn piece_pool(x: &PreComplex) -> Result<Vec<VertexPiece>, OracleError> {
    let mut pool = Vec::new();
    for v in x.skeleton().vertices() {
        pool.extend(enumerate_vertex_pieces_capped(x, v, ORACLE_PIECE_CAP)?);
    }
    Ok(pool)
}

/// Grow the piece multiset `chosen` by indices at least `from`, gluing every
/// balanced multiset along the way under all of its matchings.
fn glue_all(
    x: &PreComplex,
    units: &[GlueUnit],
    from: usize,
    left: u32,
    chosen: &mut Vec<usize>,
    found: &mut BTreeMap<CanonicalForm, FaceImmersionTriple>,
) -> Result<(), OracleError> {
    if !chosen.is_empty() {
        let refs: Vec<&GlueUnit> = chosen.iter().map(|&i| &units[i]).collect();
        let asm = PieceAssembly::new(x, refs).expect("oracle assemblies stay within id range");
        if asm.is_balanced() {
            glue_matchings(&asm, found)?;
        }
    }
    if left == 0 {
        return Ok(());
    }
    for i in from..units.len() {
        chosen.push(i);
        glue_all(x, units, i, left - 1, chosen, found)?;
        chosen.pop();
    }
    Ok(())
}

/// Glue a balanced assembly under every matching: the initial germ slots of
/// each class are paired with the terminal slots in every order.
fn glue_matchings(
    asm: &PieceAssembly,
    found: &mut BTreeMap<CanonicalForm, FaceImmersionTriple>,
) -> Result<(), OracleError> {
    let sizes: Vec<usize> = asm.side_sizes().map(|(initial, _)| initial).collect();
    let count = sizes
        .iter()
        .fold(1u64, |acc, &n| acc.saturating_mul(factorial(n)));
    if count > MATCHING_CAP {
        return Err(OracleError::TooManyMatchings { count });
    }
    if sizes.is_empty() {
        let t = asm.glue(None).expect("balanced assemblies glue");
        found.entry(canonical_triple(&t)).or_insert(t);
        return Ok(());
    }
    let per_class: Vec<Vec<Vec<u32>>> = sizes
        .iter()
        .map(|&n| (0..n as u32).permutations(n).collect())
        .collect();
    for combo in per_class.iter().multi_cartesian_product() {
        let perms: Vec<Vec<u32>> = combo.into_iter().cloned().collect();
        let t = asm.glue(Some(&perms)).expect("balanced assemblies glue");
        found.entry(canonical_triple(&t)).or_insert(t);
    }
    Ok(())
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Decomposition identities of a triple, each recomputed from its weight
/// vector and compared against the composite map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripleIdentities {
    /// The boundaries of the weighted pieces cancel over every edge piece.
    pub balanced: bool,
    /// The piece degrees sum to the degree of the composite.
    pub degree_matches: bool,
    /// The piece curvatures sum to the total curvature of the composite.
    pub curvature_matches: bool,
}

impl TripleIdentities {
    pub fn all_hold(self) -> bool {
        self.balanced && self.degree_matches && self.curvature_matches
    }
}

pub fn verify_triple(t: &FaceImmersionTriple) -> Result<TripleIdentities, OracleError> {
    let w = weight_vector(t)?;
    let mut net: BTreeMap<CanonicalForm, BigRational> = BTreeMap::new();
    for (p, c) in w.iter() {
        for (r, n) in p.boundary() {
            let term = c * BigRational::from_integer(BigInt::from(n));
            *net.entry(r.key().clone()).or_insert_with(BigRational::zero) += term;
        }
    }
    let composite = t.composite();
    let d = degree(&composite)?;
    let tau = total_curvature(&composite)?;
    Ok(TripleIdentities {
        balanced: net.values().all(Zero::is_zero),
        degree_matches: w.deg() == BigRational::from_integer(BigInt::from(d.total)),
        curvature_matches: w.tau() == tau,
    })
}

/// Outcome of checking a claimed optimum against every enumerated triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    /// Triples enumerated and compared.
    pub checked: usize,
    /// Largest curvature-to-degree ratio seen.
    pub best: Option<BigRational>,
    /// Whether some triple attains the bound exactly.
    pub attained: bool,
    /// Triples exceeding the bound; nonzero refutes it.
    pub violations: usize,
}

/// Compare `bound` against the curvature-to-degree ratio of every triple
/// over `x` with at most `budget` middle vertices.
pub fn check_bound(
    x: &PreComplex,
    bound: &BigRational,
    budget: u32,
) -> Result<BoundReport, OracleError> {
    let triples = enumerate_triples(x, budget)?;
    let mut best: Option<BigRational> = None;
    let mut violations = 0;
    for t in &triples {
        let composite = t.composite();
        let tau = total_curvature(&composite)?;
        let d = degree(&composite)?;
        let ratio = tau / BigRational::from_integer(BigInt::from(d.total));
        if ratio > *bound {
            violations += 1;
        }
        if best.as_ref().map_or(true, |b| ratio > *b) {
            best = Some(ratio);
        }
    }
    Ok(BoundReport {
        checked: triples.len(),
        attained: best.as_ref() == Some(bound),
        best,
        violations,
    })
}

/// First Betti number of a closed complex over the rationals: independent
/// cycles of the skeleton minus the rank of the abelianised face boundaries.
/// Face components that are not cycles impose no relation.
pub fn betti_one(x: &PreComplex) -> u32 {
    let g = x.skeleton();
    let cycles = i64::from(g.n_edges()) - i64::from(g.n_vertices())
        + i64::from(g.components().count);
    let rank = row_rank(face_rows(x)) as i64;
    (cycles - rank).max(0) as u32
}

/// One row per face cycle of `x`: the signed count of traversals of each
/// skeleton edge, walking the cycle once in a fixed direction.
fn face_rows(x: &PreComplex) -> Vec<Vec<BigRational>> {
    let faces = x.faces();
    let fc = x.face_components();
    let n_cols = x.skeleton().n_edges() as usize;
    let mut rows = Vec::new();
    for c in 0..fc.count as usize {
        if !fc.is_cycle[c] || fc.n_edges[c] == 0 {
            continue;
        }
        let start = faces
            .vertices()
            .find(|s| fc.of_vertex[s.index()] as usize == c)
            .expect("cycle components have vertices");
        let mut row = vec![0i64; n_cols];
        let mut depart = x.corner_halves(start)[0];
        for _ in 0..fc.n_edges[c] {
            let (q, d) = depart;
            row[x.attach().edge_image(q).index()] += match d {
                End::Iota => 1,
                End::Tau => -1,
            };
            let next = faces.end(q, d.other()).expect("cycle edges are closed");
            let arrived = (q, d.other());
            let [h0, h1] = x.corner_halves(next);
            depart = if h0 == arrived { h1 } else { h0 };
        }
        rows.push(
            row.into_iter()
                .map(|n| BigRational::from_integer(BigInt::from(n)))
                .collect(),
        );
    }
    rows
}

fn row_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n_cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in rank + 1..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &rows[rank][col];
            for k in col..n_cols {
                let sub = &factor * &rows[rank][k];
                rows[r][k] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

/// Every immersion of an irreducible complex with first Betti number at most
/// `rank` over `x`, up to isomorphism, assuming every face immersion
/// satisfies `tau/deg <= -epsilon`.
///
/// Under that bound a qualifying source has at most `(rank - 1) / epsilon`
/// faces, and an immersion's face components embed, so its degree equals its
/// face count; dividing the face budget by the smallest piece degree bounds
/// the middle vertices, making the enumeration exhaustive.
pub fn enumerate_irreducible_immersions(
    x: &PreComplex,
    rank: u32,
    epsilon: &BigRational,
) -> Result<Vec<FaceImmersionTriple>, OracleError> {
    if !epsilon.is_positive() {
        return Err(OracleError::NonPositiveEpsilon);
    }
    if !x.is_complex() {
        return Err(OracleError::NotClosed);
    }
    if rank == 0 {
        return Ok(Vec::new());
    }
    let face_budget = (BigRational::from_integer(BigInt::from(rank - 1)) / epsilon)
        .floor()
        .to_integer();
    if !face_budget.is_positive() {
        return Ok(Vec::new());
    }
    let Some(min_deg) = piece_pool(x)?.iter().map(|p| p.deg().clone()).min() else {
        return Ok(Vec::new());
    };
    let budget = (BigRational::from_integer(face_budget.clone()) / min_deg)
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX);
    if budget > u64::from(ORACLE_COPY_LIMIT) {
        return Err(OracleError::BudgetTooLarge {
            budget,
            limit: u64::from(ORACLE_COPY_LIMIT),
        });
    }
    let mut out = Vec::new();
    for t in enumerate_triples(x, budget as u32)? {
        let y = t.source();
        if BigInt::from(y.face_components().count) > face_budget
            || betti_one(y) > rank
            || !classify_map(&t.composite()).immersion
            || !matches!(classify(y).verdict, Verdict::Irreducible)
        {
            continue;
        }
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_form;
    use crate::ids::{EdgeId, VertexId};
    use crate::pregraph::{EdgeEnds, PreGraph, PreGraphMorphism};
    use crate::presentation::Presentation;
    use num::One;

    fn complex_of(text: &str) -> PreComplex {
        Presentation::parse(text).unwrap().complex()
    }

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
        let attach = PreGraphMorphism::new(faces, skeleton, vertex_images, edge_images).unwrap();
        PreComplex::new(attach).unwrap()
    }

    #[test]
    fn torus_triples_are_counted_and_verified() {
        let x = complex_of("<a, b | a b a' b'>");
        let triples = enumerate_triples(&x, 2).unwrap();
        assert_eq!(triples.len(), 5);
        for t in &triples {
            assert!(verify_triple(t).unwrap().all_hold());
        }
        assert!(triples
            .iter()
            .any(|t| canonical_form(t.source()) == canonical_form(&x)));
    }

    #[test]
    fn surface_triples_satisfy_the_identities() {
        let x = complex_of("<a, b, c | a a b b c c>");
        let triples = enumerate_triples(&x, 2).unwrap();
        assert!(!triples.is_empty());
        for t in &triples {
            assert!(verify_triple(t).unwrap().all_hold());
        }
    }

    #[test]
    fn spectacles_triples_satisfy_the_identities() {
        let x = spectacles();
        let triples = enumerate_triples(&x, 3).unwrap();
        assert!(!triples.is_empty());
        for t in &triples {
            assert!(verify_triple(t).unwrap().all_hold());
        }
    }

    #[test]
    fn torus_bound_zero_is_attained_and_unviolated() {
        let x = complex_of("<a, b | a b a' b'>");
        let report = check_bound(&x, &BigRational::zero(), 2).unwrap();
        assert!(report.checked >= 5);
        assert_eq!(report.best, Some(BigRational::zero()));
        assert!(report.attained);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn understated_bounds_are_refuted() {
        let x = complex_of("<a, b | a b a' b'>");
        let low = BigRational::new(BigInt::from(-1), BigInt::from(10));
        let report = check_bound(&x, &low, 2).unwrap();
        assert!(report.violations > 0);
        let x = complex_of("<a, b, c | a a b b c c>");
        let low = -BigRational::from_integer(BigInt::from(2));
        let report = check_bound(&x, &low, 2).unwrap();
        assert!(report.violations > 0);
    }

    #[test]
    fn surface_bound_minus_one_holds() {
        let x = complex_of("<a, b, c | a a b b c c>");
        let minus_one = -BigRational::one();
        let report = check_bound(&x, &minus_one, 2).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.attained);
    }

    #[test]
    fn betti_numbers_match_the_abelianisations() {
        assert_eq!(betti_one(&complex_of("<a, b | a b a' b'>")), 2);
        assert_eq!(betti_one(&complex_of("<a, b, c | a a b b c c>")), 2);
        assert_eq!(betti_one(&complex_of("<a | a a>")), 0);
        assert_eq!(betti_one(&complex_of("<a, b | a b a b'>")), 1);
        assert_eq!(betti_one(&spectacles()), 2);
    }

    #[test]
    fn surface_immersions_of_rank_two_include_the_identity() {
        let x = complex_of("<a, b, c | a a b b c c>");
        let found = enumerate_irreducible_immersions(&x, 2, &BigRational::one()).unwrap();
        assert!(!found.is_empty());
        assert!(found
            .iter()
            .any(|t| canonical_form(t.source()) == canonical_form(&x)));
        for t in &found {
            assert!(classify_map(&t.composite()).immersion);
            assert!(betti_one(t.source()) <= 2);
        }
    }

    #[test]
    fn degenerate_budgets_yield_nothing() {
        let x = complex_of("<a, b | a b a' b'>");
        assert!(enumerate_irreducible_immersions(&x, 1, &BigRational::one())
            .unwrap()
            .is_empty());
        assert!(enumerate_irreducible_immersions(&x, 0, &BigRational::one())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let x = complex_of("<a, b | a b a' b'>");
        assert_eq!(
            enumerate_irreducible_immersions(&x, 2, &BigRational::zero()).unwrap_err(),
            OracleError::NonPositiveEpsilon,
        );
        assert_eq!(
            enumerate_triples(&x, 7).unwrap_err(),
            OracleError::BudgetTooLarge {
                budget: 7,
                limit: 6
            },
        );
        let dangling = PreComplex::faceless(
            PreGraph::new(1, vec![EdgeEnds::new(Some(VertexId(0)), None)]).unwrap(),
        );
        assert_eq!(
            enumerate_triples(&dangling, 1).unwrap_err(),
            OracleError::NotClosed,
        );
    }
}
