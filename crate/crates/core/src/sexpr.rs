//! Minimal S-expression reader shared by the PDDL, trace and plan parsers.
//!
//! Symbols are lowercased on read: PDDL identifiers are case-insensitive and
//! every downstream comparison works on the canonical lowercase form.

use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Symbol(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Symbol(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Symbol(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Symbol(..) => None,
        }
    }

    /// The leading symbol of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Symbol(s, _) => f.write_str(s),
            Sexpr::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn error<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos,
            message: message.into(),
        })
    }

    fn read(&mut self) -> Result<Option<Sexpr>, SyntaxError> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek().copied() {
            None => Ok(None),
            Some(')') => self.error(start, "unexpected ')'"),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return self.error(start, "unclosed '('"),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexpr::List(items, start)));
                        }
                        Some(_) => {
                            // read() only returns None at end of input, handled above
                            if let Some(item) = self.read()? {
                                items.push(item);
                            }
                        }
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Some(Sexpr::Symbol(sym, start)))
            }
        }
    }
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexpr>, SyntaxError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(expr) = reader.read()? {
        out.push(expr);
    }
    Ok(out)
}

/// Reads exactly one top-level expression.
pub fn parse_one(text: &str) -> Result<Sexpr, SyntaxError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(SyntaxError {
            pos: Pos { line: 1, column: 1 },
            message: "empty input".into(),
        }),
        _ => Err(SyntaxError {
            pos: all[1].pos(),
            message: "trailing content after top-level expression".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_lowercases() {
        let e = parse_one("(Define (DOMAIN Foo) ; comment\n (:predicates))").unwrap();
        assert_eq!(e.to_string(), "(define (domain foo) (:predicates))");
        assert_eq!(e.head(), Some("define"));
    }

    #[test]
    fn reports_unclosed_paren_at_open_position() {
        let err = parse_one("\n  (a (b c)").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, column: 3 });
    }

    #[test]
    fn reports_stray_close_paren() {
        let err = parse_all("(a)\n )").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, column: 2 });
    }

    #[test]
    fn rejects_trailing_content() {
        assert!(parse_one("(a) (b)").is_err());
        assert!(parse_one("  ; only a comment\n").is_err());
    }
}
