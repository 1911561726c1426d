//! Text format for chains.
//!
//! ```text
//! # comment
//! 1 : (0,1)
//! -1/2 : ([0,0],[1,0])
//! periodic period=2 offset=0 coeff=1 degree=1 shape=(0,1)
//! constant value=1
//! indicator rule=squares value=1
//! ```
//!
//! Points are integers (one coordinate) or `[a,b,...]`. Term lines are
//! collected into one explicit chain; pattern lines are summed with it.

use std::str::FromStr;

use num_bigint::BigInt;

use crate::chain::{ChainPattern, Ring, Simplex, UFChain};
use crate::error::{Error, Result};
use crate::space::{Point, SubsetRule};
use crate::Rat;

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    /// Byte offset of `text` within its line.
    base: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize, base: usize) -> Self {
        Cursor {
            text,
            pos: 0,
            line,
            base,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.base + self.pos + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with([' ', '\t']) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    /// Maximal run of characters satisfying `ok`.
    fn take(&mut self, ok: impl Fn(char) -> bool) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !ok(c))
            .unwrap_or(self.rest().len());
        self.pos += len;
        &self.text[start..self.pos]
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let at = self.pos;
        let s = self.take(|c| c.is_ascii_digit() || c == '-' || c == '+');
        s.parse().map_err(|_| {
            self.pos = at;
            self.err(format!(
                "expected an integer, found '{}'",
                first_token(self.rest())
            ))
        })
    }

    fn rational(&mut self) -> Result<Rat> {
        self.skip_ws();
        let at = self.pos;
        let s = self.take(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '/');
        parse_rat(s).ok_or_else(|| {
            self.pos = at;
            self.err(format!(
                "expected a rational, found '{}'",
                first_token(self.rest())
            ))
        })
    }

    fn int_list(&mut self) -> Result<Vec<i64>> {
        self.expect('[')?;
        let mut v = Vec::new();
        if self.eat(']') {
            return Ok(v);
        }
        loop {
            v.push(self.int()?);
            if self.eat(']') {
                return Ok(v);
            }
            self.expect(',')?;
        }
    }

    fn point(&mut self) -> Result<Point> {
        self.skip_ws();
        if self.rest().starts_with('[') {
            Ok(Point(self.int_list()?))
        } else {
            Ok(Point::int(self.int()?))
        }
    }

    fn tuple(&mut self) -> Result<Simplex> {
        self.expect('(')?;
        let mut v = Vec::new();
        loop {
            v.push(self.point()?);
            if self.eat(')') {
                return Ok(v);
            }
            self.expect(',')?;
        }
    }

    /// Integer vector written either as `k` or `[a,b]`.
    fn vector(&mut self) -> Result<Vec<i64>> {
        Ok(self.point()?.0)
    }
}

fn first_token(s: &str) -> &str {
    let end = s.find([' ', '\t', ',', ')', ']']).unwrap_or(s.len());
    if end == 0 {
        &s[..s.chars().next().map_or(0, char::len_utf8)]
    } else {
        &s[..end]
    }
}

/// `a` or `a/b`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d = BigInt::from_str(d.trim()).ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(Rat::new(BigInt::from_str(n.trim()).ok()?, d))
        }
        None => Some(Rat::from_integer(BigInt::from_str(s).ok()?)),
    }
}

/// Named subset rules usable in literals and scenario files.
pub fn named_rule(name: &str) -> Option<SubsetRule> {
    match name {
        "squares" => Some(SubsetRule::Squares),
        "nonsquares" => Some(SubsetRule::NonSquares),
        _ => None,
    }
}

fn pattern_line(cur: &mut Cursor<'_>, kind: &str) -> Result<ChainPattern> {
    let mut degree = None;
    let mut period = None;
    let mut offset = None;
    let mut coeff = None;
    let mut shape = None;
    let mut value = None;
    let mut rule = None;
    while !cur.at_end() {
        let key_at = cur.pos;
        let key = cur.take(|c| c.is_ascii_alphanumeric() || c == '_');
        if key.is_empty() {
            return Err(cur.err("expected key=value"));
        }
        cur.expect('=')?;
        match (kind, key) {
            ("periodic", "degree") => degree = Some(cur.int()?),
            ("periodic", "period") => period = Some(cur.vector()?),
            ("periodic", "offset") => offset = Some(cur.vector()?),
            ("periodic", "coeff") => coeff = Some(cur.rational()?),
            ("periodic", "shape") => shape = Some(cur.tuple()?),
            ("constant" | "indicator", "value") => value = Some(cur.rational()?),
            ("indicator", "rule") => {
                let at = cur.pos;
                let name = cur.take(|c| c.is_ascii_alphanumeric() || c == '_');
                rule = Some(named_rule(name).ok_or_else(|| {
                    cur.pos = at;
                    cur.err(format!("unknown subset rule '{name}'"))
                })?);
            }
            _ => {
                cur.pos = key_at;
                return Err(cur.err(format!("unknown key '{key}' for {kind}")));
            }
        }
    }
    let missing = |what: &str| cur.err(format!("{kind} needs {what}="));
    match kind {
        "constant" => Ok(ChainPattern::Constant {
            value: value.ok_or_else(|| missing("value"))?,
        }),
        "indicator" => Ok(ChainPattern::Indicator {
            rule: rule.ok_or_else(|| missing("rule"))?,
            value: value.unwrap_or_else(|| Rat::from_integer(1.into())),
        }),
        _ => {
            let shape: Vec<Vec<i64>> = shape
                .ok_or_else(|| missing("shape"))?
                .into_iter()
                .map(|p| p.0)
                .collect();
            let period = period.ok_or_else(|| missing("period"))?;
            let dim = period.len();
            let offset = offset.unwrap_or_else(|| vec![0; dim]);
            let degree = degree.unwrap_or(shape.len() as i64 - 1);
            if degree < 0 || shape.len() as i64 != degree + 1 {
                return Err(cur.err(format!(
                    "shape has {} points but degree is {degree}",
                    shape.len()
                )));
            }
            if offset.len() != dim
                || shape.iter().any(|s| s.len() != dim)
                || period.iter().any(|&k| k <= 0)
            {
                return Err(cur.err(
                    "period, offset and shape must share a dimension and periods be positive",
                ));
            }
            Ok(ChainPattern::Periodic {
                degree: degree as usize,
                period,
                offset,
                coeff: coeff.unwrap_or_else(|| Rat::from_integer(1.into())),
                shape,
            })
        }
    }
}

/// Parse a chain literal. `first_line` numbers the first line of `text`
/// (useful when the literal is embedded in a larger file).
pub fn parse_chain_literal(text: &str, ring: Ring, first_line: usize) -> Result<ChainPattern> {
    let mut explicit: Option<UFChain> = None;
    let mut patterns: Vec<ChainPattern> = Vec::new();
    let mut degree: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = first_line + i;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(content, line_no, 0);
        cur.skip_ws();
        let word_at = cur.pos;
        let word = cur.take(|c| c.is_ascii_alphabetic());
        let (pattern_degree, pattern) = if !word.is_empty() {
            if !matches!(word, "periodic" | "constant" | "indicator") {
                cur.pos = word_at;
                return Err(cur.err(format!("unknown pattern '{word}'")));
            }
            let p = pattern_line(&mut cur, word)?;
            (p.degree(), Some(p))
        } else {
            cur.pos = word_at;
            let v = cur.rational()?;
            cur.expect(':')?;
            let s = cur.tuple()?;
            if !cur.at_end() {
                return Err(cur.err("trailing characters"));
            }
            let d = s.len() - 1;
            let c = explicit.get_or_insert_with(|| UFChain::zero(d, ring));
            if c.degree() == d {
                c.add_term(s, v)?;
            }
            (d, None)
        };
        match degree {
            Some(d) if d != pattern_degree => {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("degree {pattern_degree} term in a degree-{d} chain"),
                })
            }
            _ => degree = Some(pattern_degree),
        }
        patterns.extend(pattern);
    }
    if let Some(c) = explicit {
        patterns.insert(0, ChainPattern::Explicit(c));
    }
    match patterns.len() {
        0 => Err(Error::Parse {
            line: first_line,
            column: 1,
            message: "empty chain literal".into(),
        }),
        1 => Ok(patterns.pop().expect("one pattern")),
        _ => Ok(ChainPattern::Sum(patterns)),
    }
}

/// Parse a literal that must consist of explicit terms only.
pub fn parse_chain(text: &str, ring: Ring) -> Result<UFChain> {
    match parse_chain_literal(text, ring, 1)? {
        ChainPattern::Explicit(c) => Ok(c),
        _ => Err(Error::Parse {
            line: 1,
            column: 1,
            message: "expected explicit terms only".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{int, rat};
    use crate::space::build_window;
    use crate::space::Presentation;

    #[test]
    fn terms_roundtrip() {
        let mut c = UFChain::zero(1, Ring::Rat);
        c.add_term(vec![Point::int(0), Point::int(1)], rat(-3, 2))
            .unwrap();
        c.add_term(vec![Point::new([1, 2]), Point::new([0, 0])], int(4))
            .unwrap();
        let back = parse_chain(&c.to_literal(), Ring::Rat).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn patterns() {
        let p = parse_chain_literal(
            "periodic period=2 offset=0 coeff=1 degree=1 shape=(0,1)\n",
            Ring::Int,
            1,
        )
        .unwrap();
        let w = build_window(&Presentation::lattice(1), &Point::int(0), 4, 0).unwrap();
        let c = p.materialize(&w, Ring::Int).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.coefficient(&[Point::int(-4), Point::int(-3)]), int(1));
        let p = parse_chain_literal(
            "indicator rule=squares\nconstant value=-1/2\n",
            Ring::Rat,
            1,
        )
        .unwrap();
        assert_eq!(p.value_at(&Point::int(4)), rat(1, 2));
        assert_eq!(p.value_at(&Point::int(5)), rat(-1, 2));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_chain_literal("1 : (0,1)\n2 : (0,x)\n", Ring::Int, 1).unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                column: 8,
                message: "expected an integer, found 'x'".into()
            }
        );
        let e = parse_chain_literal("1 : (0,1)\n1 : (0)\n", Ring::Int, 10).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 11, .. }));
        let e = parse_chain_literal("spiral a=1", Ring::Int, 1).unwrap_err();
        assert!(matches!(
            e,
            Error::Parse {
                line: 1,
                column: 1,
                ..
            }
        ));
        assert!(parse_rat("1/0").is_none());
    }
}
