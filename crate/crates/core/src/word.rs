//! Formal ℂ-linear combinations of words in named generators.
//!
//! Grammar accepted by [`WordExpr::parse`]:
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := factor+                       (juxtaposition is multiplication)
//! factor  := atom ['^' uint]
//! atom    := number ['i'] | letter | '(' expr ')' ['*']
//! letter  := ident ['*'] ['(' arg (',' arg)* ')'] ['*']
//! arg     := int | ident
//! ```
//!
//! A trailing `*` on a letter or a parenthesised group takes the adjoint, so
//! `l*(1)`, `l(1)*` and `(l(1))*` all denote the same letter. Argument lists
//! must follow the identifier without whitespace. The scalar `1` is the unit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub name: String,
    pub adjoint: bool,
}

impl Letter {
    pub fn new(name: impl Into<String>) -> Self {
        Letter { name: name.into(), adjoint: false }
    }

    pub fn star(name: impl Into<String>) -> Self {
        Letter { name: name.into(), adjoint: true }
    }

    pub fn adjoint(&self) -> Self {
        Letter { name: self.name.clone(), adjoint: !self.adjoint }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.adjoint {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// A monomial, read left to right as an operator product.
pub type Word = Vec<Letter>;

pub fn word_adjoint(w: &[Letter]) -> Word {
    w.iter().rev().map(Letter::adjoint).collect()
}

pub fn format_word(w: &[Letter]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordExpr {
    terms: BTreeMap<Word, C64>,
}

impl WordExpr {
    pub fn zero() -> Self {
        WordExpr::default()
    }

    pub fn one() -> Self {
        Self::scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(c: C64) -> Self {
        Self::term(Vec::new(), c)
    }

    pub fn letter(l: Letter) -> Self {
        Self::term(vec![l], C64::new(1.0, 0.0))
    }

    pub fn generator(name: &str) -> Self {
        Self::letter(Letter::new(name))
    }

    pub fn word(w: Word) -> Self {
        Self::term(w, C64::new(1.0, 0.0))
    }

    pub fn term(w: Word, c: C64) -> Self {
        let mut e = WordExpr::zero();
        e.add_term(w, c);
        e
    }

    pub fn add_term(&mut self, w: Word, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(w.clone()).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Length of the longest word; 0 for scalars and for the zero expression.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = WordExpr::zero();
        for (w, v) in &self.terms {
            out.add_term(w.clone(), v * c);
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = WordExpr::zero();
        for (w, v) in &self.terms {
            out.add_term(word_adjoint(w), v.conj());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(WordExpr::one(), |acc, _| &acc * self)
    }

    /// Names of all generators occurring in the expression.
    pub fn generators(&self) -> Vec<String> {
        let mut names: Vec<String> = self.terms.keys().flatten().map(|l| l.name.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    /// Rewrites every letter; `f` returns the expression substituted for it.
    pub fn substitute(&self, f: &mut impl FnMut(&Letter) -> WordExpr) -> WordExpr {
        let mut out = WordExpr::zero();
        for (w, c) in &self.terms {
            let mut prod = WordExpr::scalar(*c);
            for l in w {
                prod = &prod * &f(l);
            }
            out = &out + &prod;
        }
        out
    }

    pub fn parse(input: &str) -> Result<WordExpr> {
        let mut p = Parser { s: input.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl From<Letter> for WordExpr {
    fn from(l: Letter) -> Self {
        WordExpr::letter(l)
    }
}

impl<'a> Add<&'a WordExpr> for &'a WordExpr {
    type Output = WordExpr;
    fn add(self, rhs: &WordExpr) -> WordExpr {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }
}

impl<'a> Sub<&'a WordExpr> for &'a WordExpr {
    type Output = WordExpr;
    fn sub(self, rhs: &WordExpr) -> WordExpr {
        self + &rhs.scale(C64::new(-1.0, 0.0))
    }
}

impl<'a> Mul<&'a WordExpr> for &'a WordExpr {
    type Output = WordExpr;
    fn mul(self, rhs: &WordExpr) -> WordExpr {
        let mut out = WordExpr::zero();
        for (u, a) in &self.terms {
            for (v, b) in &rhs.terms {
                let mut w = u.clone();
                w.extend_from_slice(v);
                out.add_term(w, a * b);
            }
        }
        out
    }
}

impl Neg for &WordExpr {
    type Output = WordExpr;
    fn neg(self) -> WordExpr {
        self.scale(C64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<WordExpr> for WordExpr {
            type Output = WordExpr;
            fn $m(self, rhs: WordExpr) -> WordExpr {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Mul<C64> for WordExpr {
    type Output = WordExpr;
    fn mul(self, rhs: C64) -> WordExpr {
        self.scale(rhs)
    }
}

impl fmt::Display for WordExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let (negative, c) = if c.im == 0.0 && c.re < 0.0 { (true, -c) } else { (false, *c) };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let word = format_word(w);
            if c == C64::new(1.0, 0.0) {
                f.write_str(&word)?;
                continue;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            if !w.is_empty() {
                write!(f, " {word}")?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<WordExpr> {
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.term()?.scale(C64::new(sign, 0.0));
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&mut self) -> bool {
        matches!(self.peek(), Some(c) if c == b'(' || c == b'.' || c.is_ascii_alphanumeric() || c == b'_')
    }

    fn term(&mut self) -> Result<WordExpr> {
        if !self.starts_factor() {
            return Err(self.error("expected a factor"));
        }
        let mut acc = self.factor()?;
        while self.starts_factor() {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<WordExpr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let k: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| self.error("expected a non-negative integer exponent"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<WordExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                if self.s.get(self.pos) == Some(&b'*') {
                    self.pos += 1;
                    return Ok(e.adjoint());
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.letter(),
            _ => Err(self.error("expected a number, letter or `(`")),
        }
    }

    fn number(&mut self) -> Result<WordExpr> {
        let start = self.pos;
        let s = self.s;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or_default();
        let value: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = i;
        let imaginary = s.get(i) == Some(&b'i') && !s.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
        if imaginary {
            self.pos += 1;
            return Ok(WordExpr::scalar(C64::new(0.0, value)));
        }
        Ok(WordExpr::scalar(C64::new(value, 0.0)))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn letter(&mut self) -> Result<WordExpr> {
        let mut name = self.ident();
        let mut adjoint = false;
        if self.s.get(self.pos) == Some(&b'*') {
            adjoint = true;
            self.pos += 1;
        }
        if self.s.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            let mut args = Vec::new();
            loop {
                self.skip_ws();
                let arg = self.ident();
                if arg.is_empty() {
                    return Err(self.error("expected an index"));
                }
                args.push(arg);
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b')') {
                    break;
                }
                return Err(self.error("expected `,` or `)`"));
            }
            name = format!("{name}({})", args.join(","));
        }
        if self.s.get(self.pos) == Some(&b'*') {
            adjoint = !adjoint;
            self.pos += 1;
        }
        Ok(WordExpr::letter(Letter { name, adjoint }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> WordExpr {
        WordExpr::parse(s).unwrap()
    }

    #[test]
    fn parses_cli_letters() {
        let e = w("s(1) l*(2) l(3) y y* 1");
        let (word, c) = e.terms().next().unwrap();
        assert_eq!(*c, C64::new(1.0, 0.0));
        let shown: Vec<String> = word.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["s(1)", "l(2)*", "l(3)", "y", "y*"]);
    }

    #[test]
    fn adjoint_spellings_agree() {
        assert_eq!(w("l*(1)"), w("l(1)*"));
        assert_eq!(w("l*(1)"), w("(l(1))*"));
        assert_eq!(w("(a b)*"), w("b* a*"));
    }

    #[test]
    fn powers_sums_and_coefficients() {
        let e = w("2 s(1)^2 - 0.5i y + 1");
        assert_eq!(e.len(), 3);
        assert_eq!(e.degree(), 2);
        let e = w("(a + b)^2");
        assert_eq!(e, w("a a + a b + b a + b b"));
        assert_eq!(w("a - a"), WordExpr::zero());
        assert_eq!(w("x^0"), WordExpr::one());
    }

    #[test]
    fn parse_errors_report_position() {
        match WordExpr::parse("s(1") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(WordExpr::parse("a + ").is_err());
        assert!(WordExpr::parse(")").is_err());
    }

    #[test]
    fn identifier_arguments() {
        let e = w("alpha(a) e(0,1)");
        let names = e.generators();
        assert_eq!(names, ["alpha(a)", "e(0,1)"]);
    }

    fn arb_expr() -> impl Strategy<Value = WordExpr> {
        let letter = (0..3usize, any::<bool>()).prop_map(|(i, adj)| Letter { name: format!("g{i}"), adjoint: adj });
        let word = prop::collection::vec(letter, 0..4);
        let coef = (-2i32..3, -2i32..3).prop_map(|(a, b)| C64::new(a as f64, b as f64));
        prop::collection::vec((word, coef), 0..4).prop_map(|ts| {
            let mut e = WordExpr::zero();
            for (w, c) in ts {
                e.add_term(w, c);
            }
            e
        })
    }

    proptest! {
        #[test]
        fn adjoint_is_an_involution(e in arb_expr()) {
            prop_assert_eq!(e.adjoint().adjoint(), e);
        }

        #[test]
        fn adjoint_reverses_products(a in arb_expr(), b in arb_expr()) {
            prop_assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
        }

        #[test]
        fn degree_is_subadditive(a in arb_expr(), b in arb_expr()) {
            let p = &a * &b;
            prop_assert!(p.degree() <= a.degree() + b.degree());
        }

        #[test]
        fn display_round_trips(e in arb_expr()) {
            let shown = e.to_string();
            prop_assert_eq!(WordExpr::parse(&shown).unwrap(), e);
        }
    }
}
