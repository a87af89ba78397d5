//! Group presentations and their complexes.
//!
//! A presentation `<a, b | a b a' b'>` lists generators, then relator words.
//! Inverses are written with a trailing apostrophe or `^-1`; powers with
//! `^n`.  Tokens may be separated by whitespace, and when every generator is
//! a single character a word may also be written compactly (`aba'b'`).
//! Relators are freely and cyclically reduced before use, with a warning,
//! since the attaching maps of a presentation complex must be immersions; a
//! relator that reduces to nothing is an error.

use crate::ids::{EdgeId, VertexId};
use crate::precomplex::PreComplex;
use crate::pregraph::{EdgeEnds, PreGraph, PreGraphMorphism};
use std::fmt;
use thiserror::Error;

/// One letter of a relator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    pub gen: u32,
    pub inverse: bool,
}

impl Letter {
    fn inverted(self) -> Letter {
        Letter {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("presentation must be wrapped in angle brackets")]
    MissingBrackets,
    #[error("presentation needs exactly one | between generators and relators")]
    MissingBar,
    #[error("bad generator name {0:?}")]
    BadGeneratorName(String),
    #[error("generator {0:?} declared twice")]
    DuplicateGenerator(String),
    #[error("unknown generator in {0:?}")]
    UnknownGenerator(String),
    #[error("cannot parse {0:?}")]
    BadToken(String),
    #[error("bad exponent in {0:?}")]
    BadExponent(String),
    #[error("relator {index} is empty{}", if *.reduced { " after reduction" } else { "" })]
    EmptyRelator { index: usize, reduced: bool },
}

/// A finite presentation with freely and cyclically reduced relators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    generators: Vec<String>,
    relators: Vec<Vec<Letter>>,
    warnings: Vec<String>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Presentation {
    pub fn parse(input: &str) -> Result<Self, ParseError> {
        let trimmed = input.trim();
        let inner = trimmed
            .strip_prefix('<')
            .and_then(|s| s.strip_suffix('>'))
            .ok_or(ParseError::MissingBrackets)?;
        let mut halves = inner.splitn(3, '|');
        let gens_part = halves.next().unwrap_or("");
        let rels_part = halves.next().ok_or(ParseError::MissingBar)?;
        if halves.next().is_some() {
            return Err(ParseError::MissingBar);
        }

        let mut generators = Vec::new();
        if !gens_part.trim().is_empty() {
            for name in gens_part.split(',') {
                let name = name.trim();
                if !is_ident(name) {
                    return Err(ParseError::BadGeneratorName(name.to_string()));
                }
                if generators.iter().any(|g| g == name) {
                    return Err(ParseError::DuplicateGenerator(name.to_string()));
                }
                generators.push(name.to_string());
            }
        }

        let single_char = generators.iter().all(|g| g.chars().count() == 1);
        let mut raw_relators = Vec::new();
        if !rels_part.trim().is_empty() {
            for (index, word) in rels_part.split(',').enumerate() {
                let word = word.trim();
                if word.is_empty() {
                    return Err(ParseError::EmptyRelator {
                        index,
                        reduced: false,
                    });
                }
                let mut letters = Vec::new();
                for chunk in word.split_whitespace() {
                    parse_chunk(chunk, &generators, single_char, &mut letters)?;
                }
                if letters.is_empty() {
                    return Err(ParseError::EmptyRelator {
                        index,
                        reduced: false,
                    });
                }
                raw_relators.push(letters);
            }
        }

        Presentation::new(generators, raw_relators)
    }

    /// Build from letters directly; relators are freely and cyclically
    /// reduced, recording a warning for every word this changes.
    pub fn new(
        generators: Vec<String>,
        relators: Vec<Vec<Letter>>,
    ) -> Result<Self, ParseError> {
        let mut warnings = Vec::new();
        let mut reduced_relators = Vec::new();
        for (index, letters) in relators.into_iter().enumerate() {
            let reduced = cyclically_reduce(&letters);
            if reduced.is_empty() {
                return Err(ParseError::EmptyRelator {
                    index,
                    reduced: true,
                });
            }
            if reduced != letters {
                warnings.push(format!(
                    "relator {} reduced to {}",
                    index,
                    render_word(&generators, &reduced)
                ));
            }
            reduced_relators.push(reduced);
        }
        Ok(Presentation {
            generators,
            relators: reduced_relators,
            warnings,
        })
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn relators(&self) -> &[Vec<Letter>] {
        &self.relators
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The presentation complex: a rose with one loop per generator and one
    /// face per relator, attached by tracing the word.  A letter at position
    /// i runs from corner i to corner i+1, backwards when inverted.
    pub fn complex(&self) -> PreComplex {
        let skeleton = PreGraph::graph(
            1,
            &self
                .generators
                .iter()
                .map(|_| (0, 0))
                .collect::<Vec<(u32, u32)>>(),
        );
        let mut faces = PreGraph::discrete(0);
        let mut attach_edges = Vec::new();
        for relator in &self.relators {
            let base = faces.n_vertices();
            for _ in 0..relator.len() {
                faces.add_vertex();
            }
            let len = relator.len() as u32;
            for (i, letter) in relator.iter().enumerate() {
                let here = VertexId(base + i as u32);
                let next = VertexId(base + (i as u32 + 1) % len);
                let ends = if letter.inverse {
                    EdgeEnds::new(Some(next), Some(here))
                } else {
                    EdgeEnds::new(Some(here), Some(next))
                };
                faces.push_edge(ends).expect("corner exists");
                attach_edges.push(EdgeId(letter.gen));
            }
        }
        let attach = PreGraphMorphism::new(
            faces.clone(),
            skeleton,
            vec![VertexId(0); faces.n_vertices() as usize],
            attach_edges,
        )
        .expect("relator edges map to their generators");
        PreComplex::new(attach).expect("reduced relators attach by an immersion")
    }
}

fn parse_chunk(
    chunk: &str,
    generators: &[String],
    single_char: bool,
    out: &mut Vec<Letter>,
) -> Result<(), ParseError> {
    let gen_index = |name: &str| -> Option<u32> {
        generators.iter().position(|g| g == name).map(|i| i as u32)
    };
    if single_char {
        let mut rest = chunk;
        while !rest.is_empty() {
            let c = rest.chars().next().unwrap();
            let name = c.to_string();
            let gen = gen_index(&name).ok_or_else(|| ParseError::UnknownGenerator(name))?;
            rest = &rest[c.len_utf8()..];
            rest = apply_modifier(rest, gen, chunk, out)?;
        }
        Ok(())
    } else {
        let split = chunk
            .find(|c: char| c == '\'' || c == '^')
            .unwrap_or(chunk.len());
        let (name, modifier) = chunk.split_at(split);
        let gen =
            gen_index(name).ok_or_else(|| ParseError::UnknownGenerator(chunk.to_string()))?;
        let rest = apply_modifier(modifier, gen, chunk, out)?;
        if rest.is_empty() {
            Ok(())
        } else {
            Err(ParseError::BadToken(chunk.to_string()))
        }
    }
}

/// Consume one optional `'` or `^n` after a generator, emitting its letters.
fn apply_modifier<'a>(
    rest: &'a str,
    gen: u32,
    chunk: &str,
    out: &mut Vec<Letter>,
) -> Result<&'a str, ParseError> {
    if let Some(rest) = rest.strip_prefix('\'') {
        out.push(Letter { gen, inverse: true });
        return Ok(rest);
    }
    if let Some(exp_part) = rest.strip_prefix('^') {
        let end = exp_part
            .char_indices()
            .find(|&(i, c)| !(c == '-' && i == 0 || c.is_ascii_digit()))
            .map_or(exp_part.len(), |(i, _)| i);
        let exp: i32 = exp_part[..end]
            .parse()
            .map_err(|_| ParseError::BadExponent(chunk.to_string()))?;
        for _ in 0..exp.unsigned_abs() {
            out.push(Letter {
                gen,
                inverse: exp < 0,
            });
        }
        return Ok(&exp_part[end..]);
    }
    out.push(Letter {
        gen,
        inverse: false,
    });
    Ok(rest)
}

fn cyclically_reduce(letters: &[Letter]) -> Vec<Letter> {
    let mut word: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        if word.last() == Some(&l.inverted()) {
            word.pop();
        } else {
            word.push(l);
        }
    }
    while word.len() >= 2 && *word.first().unwrap() == word.last().unwrap().inverted() {
        word.pop();
        word.remove(0);
    }
    word
}

fn render_word(generators: &[String], word: &[Letter]) -> String {
    word.iter()
        .map(|l| {
            let mut s = generators[l.gen as usize].clone();
            if l.inverse {
                s.push('\'');
            }
            s
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} | ", self.generators.join(", "))?;
        let rels = self
            .relators
            .iter()
            .map(|r| render_word(&self.generators, r))
            .collect::<Vec<_>>()
            .join(", ");
        write!(f, "{}>", rels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::are_isomorphic;

    #[test]
    fn parses_compact_and_spaced_forms() {
        let a = Presentation::parse("<a,b|aba'b'>").unwrap();
        let b = Presentation::parse("< a, b | a b a' b' >").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.relators()[0].len(), 4);
        assert_eq!(
            a.relators()[0][2],
            Letter {
                gen: 0,
                inverse: true
            }
        );
        assert!(a.warnings().is_empty());
    }

    #[test]
    fn parses_powers() {
        let p = Presentation::parse("<a,b,c|a^2 b^2 c^2>").unwrap();
        assert_eq!(p.relators()[0].len(), 6);
        let q = Presentation::parse("<a,b,c|aabbcc>").unwrap();
        assert_eq!(p.relators(), q.relators());
        let neg = Presentation::parse("<a,b|ab^-2>").unwrap();
        assert_eq!(
            neg.relators()[0],
            vec![
                Letter {
                    gen: 0,
                    inverse: false
                },
                Letter {
                    gen: 1,
                    inverse: true
                },
                Letter {
                    gen: 1,
                    inverse: true
                },
            ]
        );
    }

    #[test]
    fn multi_character_generators_need_spaces() {
        let p = Presentation::parse("<g1, g2 | g1 g2' g1^2>").unwrap();
        assert_eq!(p.generators(), &["g1", "g2"]);
        assert_eq!(p.relators()[0].len(), 4);
        assert_eq!(
            Presentation::parse("<g1, g2 | g1g2>").unwrap_err(),
            ParseError::UnknownGenerator("g1g2".to_string())
        );
    }

    #[test]
    fn reduction_warns_and_rejects_trivial() {
        let p = Presentation::parse("<a, b | b a b'>").unwrap();
        assert_eq!(p.relators()[0].len(), 1);
        assert_eq!(p.warnings().len(), 1);
        let q = Presentation::parse("<a, b | a b b' a' b>").unwrap();
        assert_eq!(q.relators()[0].len(), 1);
        assert_eq!(
            Presentation::parse("<a | a a'>").unwrap_err(),
            ParseError::EmptyRelator {
                index: 0,
                reduced: true
            }
        );
        assert_eq!(
            Presentation::parse("<a | a, , a>").unwrap_err(),
            ParseError::EmptyRelator {
                index: 1,
                reduced: false
            }
        );
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(
            Presentation::parse("a,b|ab").unwrap_err(),
            ParseError::MissingBrackets
        );
        assert_eq!(
            Presentation::parse("<a,b>").unwrap_err(),
            ParseError::MissingBar
        );
        assert_eq!(
            Presentation::parse("<a|a|a>").unwrap_err(),
            ParseError::MissingBar
        );
        assert_eq!(
            Presentation::parse("<a,a|aa>").unwrap_err(),
            ParseError::DuplicateGenerator("a".to_string())
        );
        assert_eq!(
            Presentation::parse("<1a|1a>").unwrap_err(),
            ParseError::BadGeneratorName("1a".to_string())
        );
        assert_eq!(
            Presentation::parse("<a|a^x>").unwrap_err(),
            ParseError::BadExponent("a^x".to_string())
        );
    }

    #[test]
    fn display_round_trips() {
        for input in [
            "<a, b | a b a' b'>",
            "<a, b, c | a a b b c c>",
            "<g1, g2 | g1 g2 g1' g2'>",
            "<a | a a a>",
            "<a, b |>",
        ] {
            let p = Presentation::parse(input).unwrap();
            let again = Presentation::parse(&p.to_string()).unwrap();
            assert_eq!(p, again, "round trip through {}", p);
        }
    }

    #[test]
    fn complex_of_the_commutator_presentation() {
        let p = Presentation::parse("<a,b|aba'b'>").unwrap();
        let x = p.complex();
        assert!(x.is_complex());
        assert_eq!(x.skeleton().n_edges(), 2);
        assert_eq!(x.faces().n_edges(), 4);
        // matches the hand-built commutator complex
        let skel = PreGraph::graph(1, &[(0, 0), (0, 0)]);
        let faces = PreGraph::graph(4, &[(0, 1), (1, 2), (3, 2), (0, 3)]);
        let attach = PreGraphMorphism::new(
            faces,
            skel,
            vec![VertexId(0); 4],
            vec![EdgeId(0), EdgeId(1), EdgeId(0), EdgeId(1)],
        )
        .unwrap();
        let reference = PreComplex::new(attach).unwrap();
        assert!(are_isomorphic(&x, &reference));
    }

    #[test]
    fn faceless_and_multi_relator_complexes() {
        let free = Presentation::parse("<a, b |>").unwrap().complex();
        assert_eq!(free.faces().n_edges(), 0);
        assert!(free.is_complex());
        let two = Presentation::parse("<a, b, c | a b a' b', c>")
            .unwrap()
            .complex();
        let fc = two.face_components();
        assert_eq!(fc.count, 2);
        assert_eq!(fc.n_edges, vec![4, 1]);
        assert!(two.is_complex());
    }
}
