//! Recursive-descent parser for the ASCII formula grammar documented in
//! [`crate::logic`].

use crate::error::{Error, Result};
use crate::logic::formula::{Comparison, Formula, Interval, Temporal};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Eq,
    And,
    Or,
    Bang,
    Ge,
    Lt,
    End,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eq => "`=`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Ge => "`>=`".into(),
        Tok::Lt => "`<`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    let err = |line, column, message: String| Error::Syntax {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '&' => Tok::And,
            '|' => Tok::Or,
            '!' => Tok::Bang,
            '<' => Tok::Lt,
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    i += 1;
                    Tok::Ge
                } else {
                    return Err(err(line, column, "expected `>=`".into()));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                i = j - 1;
                Tok::Number(chars[start..j].iter().collect())
            }
            other => {
                return Err(err(line, column, format!("unexpected character `{other}`")));
            }
        };
        column += i + 1 - start;
        i += 1;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error<X>(&self, message: impl Into<String>) -> Result<X> {
        let Pos { line, column } = self.pos();
        Err(Error::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            ))
        }
    }

    fn number<T: Scalar>(&mut self) -> Result<T> {
        match self.peek().clone() {
            Tok::Number(s) => match s.parse::<T>() {
                Ok(v) if v.is_finite() => {
                    self.bump();
                    Ok(v)
                }
                _ => self.error(format!("invalid number `{s}`")),
            },
            other => self.error(format!("expected a number, found {}", describe(&other))),
        }
    }

    fn index(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Number(s) => match s.parse::<usize>() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.error(format!("expected a non-negative integer, found `{s}`")),
            },
            other => self.error(format!(
                "expected a non-negative integer, found {}",
                describe(&other)
            )),
        }
    }

    fn formula<T: Scalar>(&mut self) -> Result<Formula<T>> {
        let first = self.conjunction()?;
        if *self.peek() != Tok::Or {
            return Ok(first);
        }
        let mut children = vec![first];
        while *self.peek() == Tok::Or {
            self.bump();
            children.push(self.conjunction()?);
        }
        Ok(Formula::or(children))
    }

    fn conjunction<T: Scalar>(&mut self) -> Result<Formula<T>> {
        let first = self.unary()?;
        if *self.peek() != Tok::And {
            return Ok(first);
        }
        let mut children = vec![first];
        while *self.peek() == Tok::And {
            self.bump();
            children.push(self.unary()?);
        }
        Ok(Formula::and(children))
    }

    fn unary<T: Scalar>(&mut self) -> Result<Formula<T>> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(name) if name == "G" || name == "F" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let start = self.index()?;
                self.expect(Tok::Comma)?;
                let end = self.index()?;
                self.expect(Tok::RBracket)?;
                let interval = Interval::new(start, end)?;
                let weights_pos = self.pos();
                let weights = self.weights()?;
                let child = self.unary()?;
                let mut body = Temporal::unit(interval, child);
                if let Some(ws) = weights {
                    if ws.len() != interval.len() {
                        return Err(Error::Syntax {
                            line: weights_pos.line,
                            column: weights_pos.column,
                            message: format!(
                                "window [{start},{end}] needs {} weights, got {}",
                                interval.len(),
                                ws.len()
                            ),
                        });
                    }
                    body.weights = ws;
                }
                Ok(if name == "G" {
                    Formula::Always(body)
                } else {
                    Formula::Eventually(body)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary<T: Scalar>(&mut self) -> Result<Formula<T>> {
        let open = self.pos();
        let inner = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                f
            }
            Tok::Ident(name) if name == "x" => self.predicate()?,
            other => {
                return self.error(format!(
                    "expected a predicate, `(`, `!`, `G` or `F`, found {}",
                    describe(&other)
                ))
            }
        };
        match self.weights()? {
            None => Ok(inner),
            Some(ws) => {
                if inner.is_temporal() || matches!(inner, Formula::Not(_)) {
                    return Err(Error::Syntax {
                        line: open.line,
                        column: open.column,
                        message: "a weight group must follow a predicate, conjunction or disjunction"
                            .into(),
                    });
                }
                inner.with_weights(ws).map_err(|e| match e {
                    Error::Malformed(m) => Error::Syntax {
                        line: open.line,
                        column: open.column,
                        message: m,
                    },
                    other => other,
                })
            }
        }
    }

    fn predicate<T: Scalar>(&mut self) -> Result<Formula<T>> {
        self.bump(); // `x`
        let cmp = match self.bump() {
            Tok::Ge => Comparison::Ge,
            Tok::Lt => Comparison::Lt,
            other => {
                self.at -= usize::from(other != Tok::End);
                return self.error(format!("expected `>=` or `<`, found {}", describe(&other)));
            }
        };
        let threshold = self.number()?;
        Ok(Formula::predicate(cmp, threshold))
    }

    /// Optional `{w=a,b,...}` group.
    fn weights<T: Scalar>(&mut self) -> Result<Option<Vec<T>>> {
        if *self.peek() != Tok::LBrace {
            return Ok(None);
        }
        self.bump();
        match self.bump() {
            Tok::Ident(name) if name == "w" => {}
            other => {
                self.at -= 1;
                return self.error(format!("expected `w`, found {}", describe(&other)));
            }
        }
        self.expect(Tok::Eq)?;
        let mut ws = Vec::new();
        loop {
            let w: T = self.number()?;
            if w < T::zero() {
                return Err(Error::NegativeWeight(w.to_f64_lossy()));
            }
            ws.push(w);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(Some(ws))
    }
}

/// Parses a formula from its ASCII text form.
pub fn parse_formula<T: Scalar>(text: &str) -> Result<Formula<T>> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    f.validate()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rolling_element_formula() {
        let f: Formula<f64> =
            parse_formula("F[0,5] G[20,25] (x < 0.1) & G[65,72] (x >= 0.3)").unwrap();
        let expected = Formula::and(vec![
            Formula::eventually(0, 5, Formula::always(20, 25, Formula::lt(0.1)).unwrap()).unwrap(),
            Formula::always(65, 72, Formula::ge(0.3)).unwrap(),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn degenerate_window() {
        let f: Formula<f64> = parse_formula("G[0,0] (x >= 0)").unwrap();
        assert_eq!(f, Formula::always(0, 0, Formula::ge(0.0)).unwrap());
    }

    #[test]
    fn reversed_interval_is_an_interval_error() {
        let e = parse_formula::<f64>("G[5,3] (x >= 0)").unwrap_err();
        assert!(matches!(e, Error::Interval { start: 5, end: 3 }), "{e}");
    }

    #[test]
    fn negative_weight_is_rejected() {
        let e = parse_formula::<f64>("(x >= 0){w=-1}").unwrap_err();
        assert!(matches!(e, Error::NegativeWeight(_)), "{e}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_formula::<f64>("G[0,2] (x >= 0)\n  & (x > 1)").unwrap_err();
        match e {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 8)),
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_formula::<f64>("(x >= 0"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_formula::<f64>("x >= 0 x"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_formula::<f64>("G[0,2]{w=1,1} (x >= 0)"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn precedence_not_temporal_and_or() {
        let f: Formula<f64> = parse_formula("!x >= 1 & G[0,1] x < 2 | x >= 3").unwrap();
        let expected = Formula::or(vec![
            Formula::and(vec![
                Formula::not(Formula::ge(1.0)),
                Formula::always(0, 1, Formula::lt(2.0)).unwrap(),
            ]),
            Formula::ge(3.0),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn weight_groups() {
        let f: Formula<f64> =
            parse_formula("((x >= 0.3){w=2} & G[1,2]{w=0.5,1.5} (x < 1e-1)){w=3,4} | x >= -2")
                .unwrap();
        match &f {
            Formula::Or { children, .. } => match &children[0] {
                Formula::And { children, weights } => {
                    assert_eq!(weights, &vec![3.0, 4.0]);
                    assert!(matches!(children[0], Formula::Predicate { weight, .. } if weight == 2.0));
                    match &children[1] {
                        Formula::Always(body) => assert_eq!(body.weights, vec![0.5, 1.5]),
                        other => panic!("{other:?}"),
                    }
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }
}
