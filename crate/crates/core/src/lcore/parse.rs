use std::fmt;

use thiserror::Error;

use super::datum::{Datum, List};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: unbalanced delimiter: {detail}")]
    UnbalancedDelimiter { pos: Pos, detail: String },
    #[error("{pos}: bad token: {detail}")]
    BadToken { pos: Pos, detail: String },
    #[error("{pos}: trailing input after datum")]
    TrailingInput { pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::UnbalancedDelimiter { pos, .. }
            | ParseError::BadToken { pos, .. }
            | ParseError::TrailingInput { pos } => *pos,
        }
    }
}

/// True if `name` can be printed bare and read back as the same atom.
pub fn is_valid_atom(name: &str) -> bool {
    !name.is_empty()
        && !name.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';' | '\''))
        && parse_number(name).is_none()
}

fn parse_number(tok: &str) -> Option<Result<i64, ()>> {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(tok.parse::<i64>().map_err(|_| ()))
}

struct Reader<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Self {
        Reader { src, offset: 0, line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn datum(&mut self) -> Result<Datum, ParseError> {
        self.skip_trivia();
        let start = self.pos();
        match self.peek() {
            None => Err(ParseError::BadToken { pos: start, detail: "unexpected end of input".into() }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(ParseError::UnbalancedDelimiter {
                                pos: start,
                                detail: "`(` is never closed".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Datum::List(items.into_iter().collect::<List>()));
                        }
                        Some(_) => items.push(self.datum()?),
                    }
                }
            }
            Some(')') => Err(ParseError::UnbalancedDelimiter { pos: start, detail: "unexpected `)`".into() }),
            Some('\'') => {
                self.bump();
                let quoted = self.datum()?;
                Ok(Datum::list([Datum::atom("quote"), quoted]))
            }
            Some('"') => self.string(start),
            Some(_) => self.token(start),
        }
    }

    fn string(&mut self, start: Pos) -> Result<Datum, ParseError> {
        self.bump();
        let mut out = String::new();
        loop {
            let here = self.pos();
            match self.bump() {
                None => {
                    return Err(ParseError::UnbalancedDelimiter {
                        pos: start,
                        detail: "string literal is never closed".into(),
                    })
                }
                Some('"') => return Ok(Datum::string(&out)),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    other => {
                        return Err(ParseError::BadToken {
                            pos: here,
                            detail: format!("unknown escape {:?}", other.map(String::from).unwrap_or_default()),
                        })
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn token(&mut self, start: Pos) -> Result<Datum, ParseError> {
        let begin = self.offset;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ';') {
                break;
            }
            self.bump();
        }
        let tok = &self.src[begin..self.offset];
        if let Some(n) = parse_number(tok) {
            return n.map(Datum::Num).map_err(|_| ParseError::BadToken {
                pos: start,
                detail: format!("integer literal `{tok}` out of range"),
            });
        }
        if !is_valid_atom(tok) {
            return Err(ParseError::BadToken { pos: start, detail: format!("`{tok}` is not a valid atom") });
        }
        Ok(Datum::atom(tok))
    }
}

/// Reads exactly one datum from `text`; comments and surrounding whitespace
/// are allowed.
pub fn parse_datum(text: &str) -> Result<Datum, ParseError> {
    let mut r = Reader::new(text);
    let d = r.datum()?;
    r.skip_trivia();
    if r.peek().is_some() {
        return Err(ParseError::TrailingInput { pos: r.pos() });
    }
    Ok(d)
}

/// Reads every datum in `text`, in order.
pub fn parse_all(text: &str) -> Result<Vec<Datum>, ParseError> {
    let mut r = Reader::new(text);
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.datum()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_list() {
        let d = parse_datum(r#"(a 1 "x")"#).unwrap();
        assert_eq!(d, Datum::list([Datum::atom("a"), Datum::Num(1), Datum::string("x")]));
    }

    #[test]
    fn empty_list_is_nil() {
        assert!(parse_datum("()").unwrap().is_nil());
    }

    #[test]
    fn quote_shorthand() {
        assert_eq!(parse_datum("'x").unwrap(), parse_datum("(quote x)").unwrap());
    }

    #[test]
    fn comments_are_skipped() {
        let d = parse_datum("; leading\n(a ; inner\n b)\n; trailing").unwrap();
        assert_eq!(d, Datum::list([Datum::atom("a"), Datum::atom("b")]));
    }

    #[test]
    fn negative_numbers_and_dash_atoms() {
        let d = parse_datum("(-3 - -x)").unwrap();
        assert_eq!(d, Datum::list([Datum::Num(-3), Datum::atom("-"), Datum::atom("-x")]));
    }

    #[test]
    fn unclosed_paren_reports_opening_position() {
        let err = parse_datum("\n  (a (b)").unwrap_err();
        assert!(matches!(err, ParseError::UnbalancedDelimiter { .. }));
        assert_eq!(err.pos(), Pos { line: 2, col: 3 });
    }

    #[test]
    fn stray_close_paren() {
        let err = parse_datum(")").unwrap_err();
        assert!(matches!(err, ParseError::UnbalancedDelimiter { pos: Pos { line: 1, col: 1 }, .. }));
    }

    #[test]
    fn trailing_input() {
        let err = parse_datum("(a) b").unwrap_err();
        assert_eq!(err, ParseError::TrailingInput { pos: Pos { line: 1, col: 5 } });
    }

    #[test]
    fn bad_tokens() {
        assert!(matches!(parse_datum("a\"b").unwrap_err(), ParseError::BadToken { .. }));
        assert!(matches!(parse_datum("99999999999999999999").unwrap_err(), ParseError::BadToken { .. }));
        assert!(matches!(parse_datum("").unwrap_err(), ParseError::BadToken { .. }));
        assert!(matches!(parse_datum(r#""\q""#).unwrap_err(), ParseError::BadToken { .. }));
    }

    #[test]
    fn string_escapes() {
        let d = parse_datum(r#""a\"b\\c\nd""#).unwrap();
        assert_eq!(d, Datum::string("a\"b\\c\nd"));
    }
}
