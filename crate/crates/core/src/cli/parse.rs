//! Text grammars for polynomials, words, times and ranges.
//!
//! Polynomials: `poly := sign? term (('+'|'-') term)*`,
//! `term := coeff | coeff? 'x' ('^' uint)?`. Whitespace is insignificant and
//! errors carry the byte offset of the offending token.

use crate::algebra::{Element, Polynomial, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::time::Time;

/// Dyadic depth that CLI times snap to.
pub const DEFAULT_SNAP_DEPTH: u32 = 20;

fn parse_error<T>(offset: usize, message: impl Into<String>, expected: &[&str]) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    })
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    /// `digits ('.' digits?)? | '.' digits`, then an optional exponent.
    fn number(&mut self) -> Option<(usize, f64)> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - s
        };
        let int = digits(&mut i);
        let mut frac = 0;
        if i < bytes.len() && bytes[i] == b'.' {
            let mut j = i + 1;
            frac = digits(&mut j);
            if int > 0 || frac > 0 {
                i = j;
            }
        }
        if int == 0 && frac == 0 {
            return None;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) > 0 {
                i = j;
            }
        }
        self.pos = i;
        self.src[start..i].parse().ok().map(|v| (start, v))
    }

    fn uint(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let n = self.src[start..].bytes().take_while(u8::is_ascii_digit).count();
        if n == 0 {
            return None;
        }
        self.pos += n;
        Some((start, &self.src[start..self.pos]))
    }
}

/// Parses a polynomial in `x` into its coefficient vector.
pub fn parse_polynomial(text: &str) -> Result<Polynomial> {
    let mut cur = Cursor::new(text);
    let mut coeffs: Vec<f64> = Vec::new();
    let mut sign = if cur.eat('-') {
        -1.0
    } else {
        cur.eat('+');
        1.0
    };
    loop {
        let coeff = cur.number();
        let (power, coeff_offset) = if cur.eat('x') {
            let power = if cur.eat('^') {
                let Some((off, digits)) = cur.uint() else {
                    cur.skip_ws();
                    return parse_error(cur.pos, "expected an exponent after '^'", &["unsigned integer"]);
                };
                match digits.parse::<usize>() {
                    Ok(k) if k <= MAX_DEGREE => k,
                    _ => {
                        return Err(Error::Resource(format!(
                            "polynomial degree {digits} at offset {off} exceeds {MAX_DEGREE}"
                        )))
                    }
                }
            } else {
                1
            };
            (power, coeff.map(|c| c.0))
        } else if let Some((off, _)) = coeff {
            (0, Some(off))
        } else {
            cur.skip_ws();
            return parse_error(cur.pos, "expected a term", &["number", "x"]);
        };
        let c = coeff.map_or(1.0, |c| c.1);
        if !c.is_finite() {
            return parse_error(coeff_offset.unwrap_or(0), "coefficient out of range", &["finite number"]);
        }
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0.0);
        }
        coeffs[power] += sign * c;
        if cur.at_end() {
            break;
        }
        sign = if cur.eat('+') {
            1.0
        } else if cur.eat('-') {
            -1.0
        } else {
            return parse_error(cur.pos, "unexpected character", &["+", "-", "end of input"]);
        };
    }
    Polynomial::new(coeffs)
}

/// A time parsed from decimal text and snapped to the dyadic grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnappedTime {
    pub time: Time,
    /// The value as written, in horizon units.
    pub written: f64,
    pub moved: bool,
}

impl SnappedTime {
    pub fn warning(&self, horizon: f64) -> Option<String> {
        self.moved.then(|| {
            format!(
                "warning: time {} snapped to dyadic {}",
                self.written,
                self.time.at(horizon)
            )
        })
    }
}

/// Snaps `value` (in units of the horizon) to depth `depth`.
pub fn snap_time(value: f64, horizon: f64, depth: u32, offset: usize) -> Result<SnappedTime> {
    if !(value >= 0.0 && value <= horizon) {
        return Err(Error::Domain(format!(
            "time {value} at offset {offset} lies outside [0, {horizon}]"
        )));
    }
    let (time, moved) = Time::snap(value / horizon, depth)?;
    Ok(SnappedTime { time, written: value, moved })
}

/// One letter of a word: `X(t)` or `X(a,b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LetterSpec {
    Atom(SnappedTime),
    Increment(SnappedTime, SnappedTime),
}

/// A parsed word with the snapping it required.
#[derive(Clone, Debug, PartialEq)]
pub struct WordSpec {
    pub letters: Vec<LetterSpec>,
}

impl WordSpec {
    /// The word as an element; a zero letter such as `X(0)` makes it zero.
    pub fn to_element(&self) -> Element {
        self.letters.iter().fold(Element::one(), |acc, l| {
            let e = match *l {
                LetterSpec::Atom(t) => Element::atom(t.time),
                LetterSpec::Increment(a, b) => {
                    Element::increment(a.time, b.time).expect("validated interval")
                }
            };
            &acc * &e
        })
    }

    /// Grid times when every letter is an atom.
    pub fn atom_times(&self) -> Option<Vec<Time>> {
        self.letters
            .iter()
            .map(|l| match l {
                LetterSpec::Atom(t) => Some(t.time),
                LetterSpec::Increment(..) => None,
            })
            .collect()
    }

    pub fn warnings(&self, horizon: f64) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.letters {
            match l {
                LetterSpec::Atom(t) => out.extend(t.warning(horizon)),
                LetterSpec::Increment(a, b) => {
                    out.extend(a.warning(horizon));
                    out.extend(b.warning(horizon));
                }
            }
        }
        out
    }
}

/// Parses `atom+` with `atom := 'X(' time ')' | 'X(' time ',' time ')'`.
pub fn parse_word(text: &str, horizon: f64, depth: u32) -> Result<WordSpec> {
    let mut cur = Cursor::new(text);
    let mut letters = Vec::new();
    loop {
        if !cur.eat('X') {
            cur.skip_ws();
            let expected: &[&str] = if letters.is_empty() { &["X"] } else { &["X", "end of input"] };
            return parse_error(cur.pos, "expected a letter", expected);
        }
        if !cur.eat('(') {
            cur.skip_ws();
            return parse_error(cur.pos, "expected '('", &["("]);
        }
        let first = time_token(&mut cur, horizon, depth)?;
        let letter = if cur.eat(',') {
            let second = time_token(&mut cur, horizon, depth)?;
            if first.written >= second.written || first.time >= second.time {
                return Err(Error::Domain(format!(
                    "increment X({},{}) needs a < b",
                    first.written, second.written
                )));
            }
            LetterSpec::Increment(first, second)
        } else {
            LetterSpec::Atom(first)
        };
        if !cur.eat(')') {
            cur.skip_ws();
            return parse_error(cur.pos, "expected ')' or ','", &[")", ","]);
        }
        letters.push(letter);
        if cur.at_end() {
            break;
        }
    }
    Ok(WordSpec { letters })
}

fn time_token(cur: &mut Cursor<'_>, horizon: f64, depth: u32) -> Result<SnappedTime> {
    match cur.number() {
        Some((off, v)) => snap_time(v, horizon, depth, off),
        None => {
            cur.skip_ws();
            parse_error(cur.pos, "expected a time", &["number"])
        }
    }
}

/// Parses `a:b` where both sides are numbers.
pub fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let mut cur = Cursor::new(text);
    let Some((_, a)) = cur.number() else {
        cur.skip_ws();
        return parse_error(cur.pos, "expected a number", &["number"]);
    };
    if !cur.eat(':') {
        cur.skip_ws();
        return parse_error(cur.pos, "expected ':'", &[":"]);
    }
    let Some((_, b)) = cur.number() else {
        cur.skip_ws();
        return parse_error(cur.pos, "expected a number", &["number"]);
    };
    if !cur.at_end() {
        return parse_error(cur.pos, "trailing input", &["end of input"]);
    }
    Ok((a, b))
}

/// Parses an inclusive level range `a:b`, or a single level `a`.
pub fn parse_levels(text: &str) -> Result<(u32, u32)> {
    let mut cur = Cursor::new(text);
    let level = |cur: &mut Cursor<'_>| -> Result<u32> {
        match cur.uint() {
            Some((off, d)) => d.parse().or_else(|_| parse_error(off, "level too large", &["small integer"])),
            None => {
                cur.skip_ws();
                parse_error(cur.pos, "expected a level", &["unsigned integer"])
            }
        }
    };
    let a = level(&mut cur)?;
    let b = if cur.eat(':') { level(&mut cur)? } else { a };
    if !cur.at_end() {
        return parse_error(cur.pos, "trailing input", &[":", "end of input"]);
    }
    if a > b {
        return Err(Error::Domain(format!("level range {a}:{b} is empty")));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offset(e: Error) -> usize {
        match e {
            Error::Parse { offset, .. } => offset,
            other => panic!("not a parse error: {other}"),
        }
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(parse_polynomial("x^2").unwrap().coeffs(), &[0.0, 0.0, 1.0]);
        assert_eq!(parse_polynomial("3 - 2x + x^3").unwrap().coeffs(), &[3.0, -2.0, 0.0, 1.0]);
        assert_eq!(offset(parse_polynomial("x^^2").unwrap_err()), 2);
    }

    #[test]
    fn polynomial_edge_cases() {
        assert_eq!(parse_polynomial(" -x + 0.5x^1 + x ").unwrap().coeffs(), &[0.0, 0.5]);
        assert_eq!(parse_polynomial("1.5e1").unwrap().coeffs(), &[15.0]);
        assert!(parse_polynomial("x - x").unwrap().is_zero());
        assert_eq!(offset(parse_polynomial("").unwrap_err()), 0);
        assert_eq!(offset(parse_polynomial("x +").unwrap_err()), 3);
        assert_eq!(offset(parse_polynomial("2 y").unwrap_err()), 2);
        assert!(matches!(parse_polynomial("x^13"), Err(Error::Resource(_))));
        assert!(matches!(parse_polynomial("x^99999999999999999999999"), Err(Error::Resource(_))));
        assert!(parse_polynomial("x^12").is_ok());
        match parse_polynomial("x^^2").unwrap_err() {
            Error::Parse { expected, .. } => assert_eq!(expected, vec!["unsigned integer"]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn polynomial_round_trip() {
        for text in ["0", "-1", "3 - 2x + x^3", "-x^12 + 0.125x^5", "x"] {
            let p = parse_polynomial(text).unwrap();
            assert_eq!(parse_polynomial(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn word_examples() {
        let w = parse_word("X(1) X(1)", 1.0, DEFAULT_SNAP_DEPTH).unwrap();
        assert_eq!(w.letters.len(), 2);
        assert_eq!(w.atom_times().unwrap(), vec![Time::HORIZON; 2]);
        let w = parse_word("X(0.25,0.5)", 1.0, DEFAULT_SNAP_DEPTH).unwrap();
        assert!(matches!(w.letters[..], [LetterSpec::Increment(..)]));
        assert!(w.atom_times().is_none());
        assert!(matches!(parse_word("X(2,1)", 2.0, DEFAULT_SNAP_DEPTH), Err(Error::Domain(_))));
        assert!(matches!(parse_word("X(2)", 1.0, DEFAULT_SNAP_DEPTH), Err(Error::Domain(_))));
        assert_eq!(offset(parse_word("X(0.5", 1.0, DEFAULT_SNAP_DEPTH).unwrap_err()), 5);
        assert_eq!(offset(parse_word("", 1.0, DEFAULT_SNAP_DEPTH).unwrap_err()), 0);
    }

    #[test]
    fn word_snapping_and_horizon() {
        let w = parse_word("X(0.3)", 1.0, DEFAULT_SNAP_DEPTH).unwrap();
        assert_eq!(w.warnings(1.0).len(), 1);
        let w = parse_word("X(1, 2)", 2.0, DEFAULT_SNAP_DEPTH).unwrap();
        assert!(w.warnings(2.0).is_empty());
        match w.letters[0] {
            LetterSpec::Increment(a, b) => {
                assert_eq!(a.time, Time::dyadic(1, 1).unwrap());
                assert_eq!(b.time, Time::HORIZON);
            }
            _ => unreachable!(),
        }
        assert!(parse_word("X(0)", 1.0, DEFAULT_SNAP_DEPTH).unwrap().to_element().is_zero());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_pair("0:1").unwrap(), (0.0, 1.0));
        assert_eq!(parse_pair(" 0.25 : .5").unwrap(), (0.25, 0.5));
        assert!(parse_pair("0-1").is_err());
        assert_eq!(parse_levels("4:9").unwrap(), (4, 9));
        assert_eq!(parse_levels("6").unwrap(), (6, 6));
        assert!(parse_levels("9:4").is_err());
        assert!(parse_levels("4:x").is_err());
    }
}
