//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! formula := or ('->' formula)?
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' interval unary)*
//! unary   := '!' unary | 'G' interval unary | 'F' interval unary | primary
//! primary := '(' formula ')' | 'true' | lhs cmp number
//! lhs     := ['-'] term (('+' | '-') term)*
//! term    := [number '*'] ident
//! cmp     := '<' | '<=' | '>' | '>='
//! ```
//!
//! `G`, `F` and `U` are operators only when directly followed by `[`, so they
//! remain usable as variable names.

use super::formula::{Cmp, Formula, Interval, LinearExpr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Plus,
    Minus,
    Star,
    Cmp(Cmp),
}

fn describe(tok: Option<&(Tok, usize)>) -> String {
    match tok {
        None => "end of input".into(),
        Some((Tok::Ident(s), _)) => format!("`{s}`"),
        Some((Tok::Num(v), _)) => format!("number {v}"),
        Some((t, _)) => format!("{t:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBrack),
            b']' => Some(Tok::RBrack),
            b',' => Some(Tok::Comma),
            b'!' => Some(Tok::Bang),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            b'+' => Some(Tok::Plus),
            b'*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            toks.push((tok, start));
            i += 1;
            continue;
        }
        match c {
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                toks.push((Tok::Arrow, start));
                i += 2;
            }
            b'-' => {
                toks.push((Tok::Minus, start));
                i += 1;
            }
            b'<' | b'>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let cmp = match (c, eq) {
                    (b'<', false) => Cmp::Lt,
                    (b'<', true) => Cmp::Le,
                    (_, false) => Cmp::Gt,
                    (_, true) => Cmp::Ge,
                };
                toks.push((Tok::Cmp(cmp), start));
                i += if eq { 2 } else { 1 };
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let v = lit.parse::<f64>().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                toks.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Parse {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|t| &t.0)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.position(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!(
                "expected {want:?}, found {}",
                describe(self.toks.get(self.pos))
            ))
        }
    }

    fn is_temporal(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
            && self.peek_at(1) == Some(&Tok::LBrack)
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut acc = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut acc = self.until()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            acc = Formula::and(acc, self.until()?);
        }
        Ok(acc)
    }

    fn until(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while self.is_temporal("U") {
            self.pos += 1;
            let i = self.interval()?;
            acc = Formula::until(i, acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_temporal("G") {
            self.pos += 1;
            let i = self.interval()?;
            return Ok(Formula::always(i, self.unary()?));
        }
        if self.is_temporal("F") {
            self.pos += 1;
            let i = self.interval()?;
            return Ok(Formula::eventually(i, self.unary()?));
        }
        if let (Some(Tok::Ident(name)), Some(Tok::LBrack)) = (self.peek(), self.peek_at(1)) {
            return self.error(format!("unknown operator `{name}`"));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(_) | Tok::Num(_) | Tok::Minus) => self.atom(),
            _ => self.error(format!(
                "expected a formula, found {}",
                describe(self.toks.get(self.pos))
            )),
        }
    }

    fn term(&mut self, sign: f64) -> Result<(f64, String)> {
        match self.bump() {
            Some(Tok::Ident(name)) => Ok((sign, name)),
            Some(Tok::Num(c)) => {
                self.expect(Tok::Star)?;
                match self.bump() {
                    Some(Tok::Ident(name)) => Ok((sign * c, name)),
                    _ => {
                        self.pos -= 1;
                        self.error("expected a variable after `*`")
                    }
                }
            }
            _ => {
                self.pos -= 1;
                self.error("expected a variable")
            }
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let first_sign = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            -1.0
        } else {
            1.0
        };
        let mut terms = vec![self.term(first_sign)?];
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => 1.0,
                Some(Tok::Minus) => -1.0,
                _ => break,
            };
            self.pos += 1;
            terms.push(self.term(sign)?);
        }
        let cmp = match self.bump() {
            Some(Tok::Cmp(c)) => c,
            _ => {
                self.pos -= 1;
                return self.error(format!(
                    "expected a comparison operator, found {}",
                    describe(self.toks.get(self.pos))
                ));
            }
        };
        let threshold = self.signed_number()?;
        Ok(Formula::Atom {
            lhs: LinearExpr { terms },
            cmp,
            threshold,
        })
    }

    fn signed_number(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -1.0
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        match self.bump() {
            Some(Tok::Num(v)) => Ok(sign * v),
            _ => {
                self.pos -= 1;
                self.error("expected a number")
            }
        }
    }

    fn interval(&mut self) -> Result<Interval> {
        let at = self.position();
        self.expect(Tok::LBrack)?;
        let lo = self.signed_number()?;
        self.expect(Tok::Comma)?;
        let hi = self.signed_number()?;
        self.expect(Tok::RBrack)?;
        Interval::new(lo, hi).map_err(|e| Error::Parse {
            position: at,
            message: e.to_string(),
        })
    }
}

pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return p.error(format!(
            "unexpected trailing input {}",
            describe(p.toks.get(p.pos))
        ));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn bouncing_ball_spec() {
        let f = parse("G[0,10] !((v >= -1) & (v <= 1) & (x >= 1) & (x <= 2))").unwrap();
        let body = Formula::and(
            Formula::and(
                Formula::and(
                    Formula::atom("v", Cmp::Ge, -1.0),
                    Formula::atom("v", Cmp::Le, 1.0),
                ),
                Formula::atom("x", Cmp::Ge, 1.0),
            ),
            Formula::atom("x", Cmp::Le, 2.0),
        );
        assert_eq!(f, Formula::always(iv(0.0, 10.0), Formula::not(body)));
    }

    #[test]
    fn eventually_atom() {
        assert_eq!(
            parse("F[0,6] b < 50").unwrap(),
            Formula::eventually(iv(0.0, 6.0), Formula::atom("b", Cmp::Lt, 50.0))
        );
        assert_eq!(parse("x < 5").unwrap(), Formula::atom("x", Cmp::Lt, 5.0));
    }

    #[test]
    fn difference_atoms_and_nesting() {
        let f = parse("G[0,80] ((G[0,20] y2 - y1 <= 20) | (F[0,20] y5 - y4 >= 40))").unwrap();
        let expected = Formula::always(
            iv(0.0, 80.0),
            Formula::or(
                Formula::always(
                    iv(0.0, 20.0),
                    Formula::Atom {
                        lhs: LinearExpr::diff("y2", "y1"),
                        cmp: Cmp::Le,
                        threshold: 20.0,
                    },
                ),
                Formula::eventually(
                    iv(0.0, 20.0),
                    Formula::Atom {
                        lhs: LinearExpr::diff("y5", "y4"),
                        cmp: Cmp::Ge,
                        threshold: 40.0,
                    },
                ),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn precedence() {
        let f = parse("a < 1 | b < 2 & c < 3 -> d < 4 -> e < 5").unwrap();
        let (a, b, c, d, e) = (
            Formula::atom("a", Cmp::Lt, 1.0),
            Formula::atom("b", Cmp::Lt, 2.0),
            Formula::atom("c", Cmp::Lt, 3.0),
            Formula::atom("d", Cmp::Lt, 4.0),
            Formula::atom("e", Cmp::Lt, 5.0),
        );
        assert_eq!(
            f,
            Formula::implies(
                Formula::or(a, Formula::and(b, c)),
                Formula::implies(d, e)
            )
        );
        let u = parse("p > 0 U[1,2] q > 0 & r > 0").unwrap();
        assert!(matches!(u, Formula::And(ref l, _) if matches!(**l, Formula::Until(..))));
    }

    #[test]
    fn variables_named_like_operators() {
        assert_eq!(parse("G < 1").unwrap(), Formula::atom("G", Cmp::Lt, 1.0));
        assert_eq!(
            parse("F[0,1] U >= 2e-3").unwrap(),
            Formula::eventually(iv(0.0, 1.0), Formula::atom("U", Cmp::Ge, 2e-3))
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse("G[0,10] (x < )") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 13),
            other => panic!("unexpected {other:?}"),
        }
        match parse("X[0,1] x < 1") {
            Err(Error::Parse { message, position }) => {
                assert_eq!(position, 0);
                assert!(message.contains("unknown operator"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("x < 1 #"), Err(Error::Parse { position: 6, .. })));
        assert!(matches!(parse("G[5,1] x < 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse("x < 1)"), Err(Error::Parse { .. })));
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn pretty_print_reparses() {
        for text in [
            "G[0,10] !((v >= -1) & (v <= 1) & (x >= 1) & (x <= 2))",
            "G[0,18] (b > 90 | F[0,6] b < 50)",
            "(F[6,12] b > 10) -> (G[18,24] b > -10)",
            "G[0,72] F[0,8] ((G[0,5] y2 - y1 >= 9) -> (G[5,20] y5 - y4 >= 9))",
            "-2.5*x + y - 0.125*z <= 1e-7",
            "true U[0.5,1.5] !true",
        ] {
            let f = parse(text).unwrap();
            let printed = f.to_string();
            assert_eq!(parse(&printed).unwrap(), f, "{text} -> {printed}");
            assert_eq!(parse(&f.desugar().to_string()).unwrap(), f.desugar());
        }
    }
}
