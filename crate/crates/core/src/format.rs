//! Plain-text polytope format.
//!
//! ```text
//! # comments start with '#'
//! dim 2
//! vertices
//! 0 0
//! 2 0
//! 1 1
//! 0 1
//! ```
//!
//! or, with per-facet boundary weights,
//!
//! ```text
//! dim 1
//! facets
//! 1 0 1      # ν = (1), c = 0, weight 1:  x ≥ 0
//! -1 -1 2    # ν = (−1), c = −1, weight 2: −x ≥ −1
//! ```
//!
//! Entries are integers, fractions `p/q` or finite decimals. In a `facets`
//! block each line is `ν₁ … ν_n c [w]`; the normal must be primitive and point
//! inwards, and `w` defaults to 1. A `vertices` block may be followed by a
//! single `weights w₁ … w_m` line, listing weights in the facet order produced
//! by the hull (counterclockwise from the lexicographically smallest vertex).

use num::{BigInt, ToPrimitive};

use crate::error::{Error, Result};
use crate::polytope::{BoundaryMeasure, Facet, Point, Polytope};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeInput {
    pub polytope: Polytope,
    pub measure: BoundaryMeasure,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_entries(line: usize, tokens: &[&str]) -> Result<Vec<Rational>> {
    tokens
        .iter()
        .map(|t| rational::parse(t).ok_or_else(|| perr(line, format!("cannot read number '{t}'"))))
        .collect()
}

pub fn parse_polytope(text: &str) -> Result<PolytopeInput> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();
    let mut it = lines.into_iter().peekable();

    let (ln, head) = it.next().ok_or_else(|| perr(0, "empty input"))?;
    if head.len() != 2 || head[0] != "dim" {
        return Err(perr(ln, "expected 'dim n'"));
    }
    let dim: usize = head[1]
        .parse()
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| perr(ln, "dimension must be a positive integer"))?;

    let (ln, kind) = it.next().ok_or_else(|| perr(ln, "expected 'vertices' or 'facets'"))?;
    match kind.as_slice() {
        ["vertices"] => {
            let mut pts: Vec<Point> = Vec::new();
            let mut weights: Option<(usize, Vec<Rational>)> = None;
            for (ln, toks) in it {
                if toks[0] == "weights" {
                    if weights.is_some() {
                        return Err(perr(ln, "duplicate weights line"));
                    }
                    weights = Some((ln, parse_entries(ln, &toks[1..])?));
                    continue;
                }
                if weights.is_some() {
                    return Err(perr(ln, "vertices must precede the weights line"));
                }
                if toks.len() != dim {
                    return Err(perr(ln, format!("expected {dim} coordinates, found {}", toks.len())));
                }
                pts.push(parse_entries(ln, &toks)?);
            }
            let polytope = Polytope::from_vertices(&pts).map_err(|e| perr(ln, e.to_string()))?;
            let measure = match weights {
                None => BoundaryMeasure::uniform(polytope.facets().len()),
                Some((wl, w)) => {
                    if w.len() != polytope.facets().len() {
                        return Err(perr(
                            wl,
                            format!("{} weights given for {} facets", w.len(), polytope.facets().len()),
                        ));
                    }
                    BoundaryMeasure::new(w).map_err(|e| perr(wl, e.to_string()))?
                }
            };
            Ok(PolytopeInput { polytope, measure })
        }
        ["facets"] => {
            let mut facets = Vec::new();
            let mut weights = Vec::new();
            let mut line_of = Vec::new();
            for (ln, toks) in it {
                if toks.len() != dim + 1 && toks.len() != dim + 2 {
                    return Err(perr(ln, format!("expected {} or {} entries", dim + 1, dim + 2)));
                }
                let mut normal = Vec::with_capacity(dim);
                for t in &toks[..dim] {
                    let v: i64 = t
                        .parse::<BigInt>()
                        .ok()
                        .and_then(|b| b.to_i64())
                        .ok_or_else(|| perr(ln, format!("normal entry '{t}' is not an integer")))?;
                    normal.push(v);
                }
                let g = rational::gcd_slice(&normal);
                if g == 0 {
                    return Err(perr(ln, "zero normal"));
                }
                let offset = parse_entries(ln, &toks[dim..dim + 1])?.remove(0);
                if g != 1 {
                    let fixed: Vec<String> = normal.iter().map(|x| (x / g).to_string()).collect();
                    return Err(perr(
                        ln,
                        format!(
                            "normal {normal:?} is not primitive; use '{} {}' instead",
                            fixed.join(" "),
                            offset.clone() / rational::int(g)
                        ),
                    ));
                }
                let w = if toks.len() == dim + 2 {
                    parse_entries(ln, &toks[dim + 1..])?.remove(0)
                } else {
                    rational::int(1)
                };
                facets.push(Facet::new(normal, offset));
                weights.push(w);
                line_of.push(ln);
            }
            let (polytope, map) = Polytope::from_facets(dim, &facets).map_err(|e| perr(ln, e.to_string()))?;
            let w: Vec<Rational> = map.iter().map(|&i| weights[i].clone()).collect();
            let measure = BoundaryMeasure::new(w).map_err(|e| {
                let bad = weights.iter().position(|w| !num::Signed::is_positive(w)).unwrap_or(0);
                perr(line_of.get(bad).copied().unwrap_or(ln), e.to_string())
            })?;
            Ok(PolytopeInput { polytope, measure })
        }
        _ => Err(perr(ln, "expected 'vertices' or 'facets'")),
    }
}

/// Canonical facet-form rendering (round-trips through [`parse_polytope`]).
pub fn write_polytope(p: &Polytope, sigma: &BoundaryMeasure) -> String {
    let mut s = format!("dim {}\nfacets\n", p.dim());
    for (f, w) in p.facets().iter().zip(&sigma.weights) {
        let normal: Vec<String> = f.normal.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("{} {} {}\n", normal.join(" "), f.offset, w));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn reads_vertex_form() {
        let inp = parse_polytope("# unit square\ndim 2\nvertices\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        assert_eq!(inp.polytope.facets().len(), 4);
        assert_eq!(inp.measure, BoundaryMeasure::uniform(4));
    }

    #[test]
    fn reads_facet_form_with_weights() {
        let inp = parse_polytope("dim 1\nfacets\n1 0 1\n-1 -1 2\n").unwrap();
        assert_eq!(inp.measure.weights, vec![int(1), int(2)]);
        let inp = parse_polytope("dim 1\nfacets\n-1 -1 2\n1 0\n").unwrap();
        assert_eq!(inp.measure.weights, vec![int(1), int(2)]);
        assert_eq!(inp.polytope.vertices()[1], vec![int(1)]);
    }

    #[test]
    fn vertex_form_weights_line() {
        let inp = parse_polytope("dim 1\nvertices\n0\n1\nweights 1 1/2\n").unwrap();
        assert_eq!(inp.measure.weights, vec![int(1), ratio(1, 2)]);
        let err = parse_polytope("dim 1\nvertices\n0\n1\nweights 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_polytope("dim 2\nvertices\n0 0\n1 x\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 4, msg: "cannot read number 'x'".into() });
        let err = parse_polytope("dim 2\nfacets\n1 0 0\n0 2 0\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("'0 1 0'"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
        assert!(parse_polytope("").is_err());
        assert!(parse_polytope("dim 2\nedges\n").is_err());
    }

    #[test]
    fn write_then_read() {
        let inp = parse_polytope("dim 2\nvertices\n0 0\n2 0\n1 1\n0 1\nweights 1 2 3 1/2\n").unwrap();
        let text = write_polytope(&inp.polytope, &inp.measure);
        assert_eq!(parse_polytope(&text).unwrap(), inp);
    }
}
