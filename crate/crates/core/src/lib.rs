//! Decision procedures for reducibility of finite 2-complexes and exact
//! certification of uniform negative immersions.
//!
//! A 2-complex is modelled combinatorially as a [`PreComplex`]: a pre-graph
//! (edges may be missing endpoints), a linear face pre-graph, and an attaching
//! map which is a closed immersion.  On top of this sit:
//!
//! - local moves: regular neighbourhoods, gluing, folding, unfolding;
//! - the reducibility classifier and the irreducible core construction;
//! - enumeration of vertex and edge pieces, the gluing system they generate,
//!   and an exact rational simplex solver that maximises normalised total
//!   curvature over the piece polytope;
//! - reconstruction of a witness face immersion from an integral optimum, so
//!   a certificate of uniform negative immersions carries an explicit bound
//!   together with a complex realising it;
//! - brute-force oracles that cross-check the linear system against direct
//!   enumeration of glued-up triples.
//!
//! All arithmetic on curvature and the linear program is exact over the
//! rationals; floating point is never consulted for a decision.

pub mod canonical;
pub mod exec;
pub mod folding;
pub mod ids;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod pieces;
pub mod precomplex;
pub mod pregraph;
pub mod presentation;
pub mod reducibility;
pub mod simplex;
pub mod system;

pub use exec::Parallelism;
pub use ids::{EdgeId, End, VertexId};
pub use precomplex::{ComplexMorphism, PreComplex, WhiteheadGraph};
pub use pregraph::{PreGraph, PreGraphMorphism};
