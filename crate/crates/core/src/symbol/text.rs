//! Plain-text form of a [`BoundarySymbol`].
//!
//! ```text
//! # comment
//! order 2 dim 1
//! j 2 : (1, 0) [0]
//! j 0 : (-2, 0) [2]
//! ```
//!
//! The header gives the order `k` and the number of tangential variables.
//! Each `j` line sets the coefficient of `ξ_d^j` to a sum of monomials
//! `(re, im) [e1, ..., e_dim]` joined by `+`. Every monomial must have total
//! degree `k − j`. Numbers are written in shortest round-trip form, so
//! `parse_symbol(&format_symbol(b)) == b`.

use std::fmt::Write;

use super::{BoundarySymbol, Monomial, TangentialPoly, C64};
use crate::error::{LabError, Result};

pub fn format_symbol(b: &BoundarySymbol) -> String {
    let mut out = format!("order {} dim {}\n", b.order(), b.dim());
    for (j, poly) in b.coefficients().iter().enumerate() {
        if poly.is_empty() {
            continue;
        }
        let terms: Vec<String> = poly
            .terms
            .iter()
            .map(|t| {
                let exps: Vec<String> = t.exponents.iter().map(u32::to_string).collect();
                format!("({:?}, {:?}) [{}]", t.coeff.re, t.coeff.im, exps.join(", "))
            })
            .collect();
        let _ = writeln!(out, "j {j} : {}", terms.join(" + "));
    }
    out
}

pub fn parse_symbol(text: &str) -> Result<BoundarySymbol> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(LabError::Parse { line: 0, msg: "empty symbol description".into() })?;
    let (order, dim) = parse_header(header).map_err(|msg| LabError::Parse { line, msg })?;
    let mut table = vec![TangentialPoly::default(); order.min(3) as usize + 1];
    let mut seen = vec![false; table.len()];

    for (line, body) in lines {
        let err = |msg: String| LabError::Parse { line, msg };
        let (j, poly) = parse_row(body, dim).map_err(err)?;
        if j >= table.len() {
            return Err(err(format!("power {j} exceeds min(3, {order})")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(err(format!("duplicate row for power {j}")));
        }
        if let Some(t) = poly.terms.iter().find(|t| t.degree() + j as u32 != order) {
            return Err(err(format!("monomial of degree {} in row {j}, expected {}", t.degree(), order - j as u32)));
        }
        table[j] = poly;
    }
    BoundarySymbol::from_table(order, dim, table).map_err(|e| LabError::Parse { line: 1, msg: e.to_string() })
}

fn parse_header(s: &str) -> std::result::Result<(u32, usize), String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    match words.as_slice() {
        ["order", k, "dim", d] => {
            let k = k.parse().map_err(|_| format!("bad order {k:?}"))?;
            let d: usize = d.parse().map_err(|_| format!("bad dim {d:?}"))?;
            if d == 0 {
                return Err("dim must be at least 1".into());
            }
            Ok((k, d))
        }
        _ => Err(format!("expected `order <k> dim <d>`, got {s:?}")),
    }
}

fn parse_row(s: &str, dim: usize) -> std::result::Result<(usize, TangentialPoly), String> {
    let rest = s.strip_prefix('j').ok_or("row must start with `j`")?;
    let (j, terms) = rest.split_once(':').ok_or("missing `:` in row")?;
    let j: usize = j.trim().parse().map_err(|_| format!("bad power {:?}", j.trim()))?;
    let mut poly = TangentialPoly::default();
    for term in terms.split('+') {
        let m = parse_monomial(term.trim(), dim)?;
        poly.terms.push(m);
    }
    Ok((j, poly))
}

fn parse_monomial(s: &str, dim: usize) -> std::result::Result<Monomial, String> {
    let inner = s.strip_prefix('(').ok_or_else(|| format!("bad monomial {s:?}"))?;
    let (coeff, rest) = inner.split_once(')').ok_or_else(|| format!("bad monomial {s:?}"))?;
    let (re, im) = coeff.split_once(',').ok_or_else(|| format!("bad coefficient {coeff:?}"))?;
    let re = parse_real(re)?;
    let im = parse_real(im)?;

    let exps = rest
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("bad exponent list in {s:?}"))?;
    let exponents = exps
        .split(',')
        .map(|e| e.trim().parse::<u32>().map_err(|_| format!("bad exponent {e:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if exponents.len() != dim {
        return Err(format!("expected {dim} exponents, got {}", exponents.len()));
    }
    Ok(Monomial { coeff: C64::new(re, im), exponents })
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    // Rust accepts a leading `+` and the words inf/NaN; only finite values pass.
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("bad number {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::super::presets::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_example() {
        let b = parse_symbol("# b1\norder 2 dim 1\nj 2 : (1, 0) [0]\nj 0 : (-2, 0) [2]\n").unwrap();
        assert_eq!(b, observation_pair(-2.0, 1).0);
    }

    #[test]
    fn presets_round_trip() {
        for (b1, b2) in [
            hinged_pair(1),
            clamped_pair(2),
            neumann_pair(1),
            free_pair(3),
            observation_pair(-2.0, 1),
            oblique_pair(&[0.3, -1.0], &[0.25, 2.0], 0.1, -0.7),
        ] {
            for b in [b1, b2] {
                assert_eq!(parse_symbol(&format_symbol(&b)).unwrap(), b);
            }
        }
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "order x dim 1",
            "order 1 dim 0",
            "order 1 dim 1\nj 1 (0, -1) [0]",
            "order 1 dim 1\nj 1 : (0, -1) [1]",
            "order 1 dim 1\nj 4 : (0, -1) [0]",
            "order 1 dim 1\nj 1 : (0, NaN) [0]",
            "order 1 dim 2\nj 1 : (0, -1) [0]",
            "order 1 dim 1\nj 1 : (0, -1) [0]\nj 1 : (1, 0) [0]",
        ] {
            assert!(matches!(parse_symbol(bad), Err(LabError::Parse { .. })), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn arbitrary_coefficients_round_trip(
            re in proptest::num::f64::NORMAL, im in proptest::num::f64::NORMAL,
            a in 0u32..3,
        ) {
            let b = BoundarySymbol::zero(3, 2)
                .with_term(3, C64::new(re, im), &[0, 0])
                .with_term(1, C64::new(im, re), &[a % 3, 2 - a % 3]);
            prop_assert_eq!(parse_symbol(&format_symbol(&b)).unwrap(), b);
        }
    }
}
