//! Tokenizer for the rule language.
//!
//! The lexer splits source text into parentheses, string literals and
//! "atoms". Each atom is classified afterwards: numbers, `?var`,
//! `?*global*`, the two arrows (`=>`, `<-`) and plain symbols.

use std::fmt;

use super::{DslError, DslErrorKind, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    LeftParen,
    RightParen,
    Symbol,
    Integer,
    Float,
    String,
    Variable,
    GlobalVariable,
    Arrow,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::LeftParen => "'('",
            TokenKind::RightParen => "')'",
            TokenKind::Symbol => "symbol",
            TokenKind::Integer => "integer",
            TokenKind::Float => "float",
            TokenKind::String => "string",
            TokenKind::Variable => "variable",
            TokenKind::GlobalVariable => "global variable",
            TokenKind::Arrow => "arrow",
        };
        f.write_str(s)
    }
}

/// A lexeme together with where it starts in the source.
///
/// For strings `lexeme` holds the unescaped contents, not the quoted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Position,
}

impl Token {
    /// Name of a variable (`?x` -> `x`) or global (`?*x*` -> `x`).
    pub fn var_name(&self) -> &str {
        match self.kind {
            TokenKind::Variable => &self.lexeme[1..],
            TokenKind::GlobalVariable => &self.lexeme[2..self.lexeme.len() - 1],
            _ => &self.lexeme,
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';')
}

fn is_atom_char(c: char) -> bool {
    c.is_ascii_graphic() && !matches!(c, '{' | '}' | '[' | ']' | '`' | '\\')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, DslError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            ';' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '(' | ')' => {
                cur.bump();
                let kind = if c == '(' {
                    TokenKind::LeftParen
                } else {
                    TokenKind::RightParen
                };
                tokens.push(Token {
                    kind,
                    lexeme: c.to_string(),
                    pos,
                });
            }
            '"' => {
                cur.bump();
                let mut text = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(DslError::new(DslErrorKind::UnterminatedString, pos)),
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('n') => text.push('\n'),
                            Some('t') => text.push('\t'),
                            Some(e @ ('"' | '\\')) => text.push(e),
                            Some(other) => {
                                return Err(DslError::new(
                                    DslErrorKind::BadEscape(other),
                                    cur.pos(),
                                ))
                            }
                            None => {
                                return Err(DslError::new(DslErrorKind::UnterminatedString, pos))
                            }
                        },
                        Some(other) => text.push(other),
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::String,
                    lexeme: text,
                    pos,
                });
            }
            _ => {
                let mut atom = String::new();
                while let Some(c) = cur.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    if !is_atom_char(c) {
                        return Err(DslError::new(DslErrorKind::IllegalCharacter(c), cur.pos()));
                    }
                    atom.push(c);
                    cur.bump();
                }
                let kind = classify_atom(&atom, pos)?;
                tokens.push(Token {
                    kind,
                    lexeme: atom,
                    pos,
                });
            }
        }
    }
    Ok(tokens)
}

fn classify_atom(atom: &str, pos: Position) -> Result<TokenKind, DslError> {
    if atom == "=>" || atom == "<-" {
        return Ok(TokenKind::Arrow);
    }
    if let Some(rest) = atom.strip_prefix('?') {
        if rest.is_empty() {
            // bare `?` is the single-field wildcard
            return Ok(TokenKind::Symbol);
        }
        if let Some(inner) = rest.strip_prefix('*') {
            return match inner.strip_suffix('*') {
                Some(name) if !name.is_empty() && !name.contains('*') => {
                    Ok(TokenKind::GlobalVariable)
                }
                _ => Err(DslError::new(
                    DslErrorKind::MalformedGlobal(atom.to_string()),
                    pos,
                )),
            };
        }
        if rest.contains('?') {
            return Err(DslError::new(
                DslErrorKind::MalformedVariable(atom.to_string()),
                pos,
            ));
        }
        return Ok(TokenKind::Variable);
    }

    let unsigned = atom.strip_prefix(['+', '-']).unwrap_or(atom);
    if !unsigned.is_empty() && unsigned.bytes().all(|b| b.is_ascii_digit()) {
        return match atom.parse::<i64>() {
            Ok(_) => Ok(TokenKind::Integer),
            Err(_) => Err(DslError::new(
                DslErrorKind::IntegerOutOfRange(atom.to_string()),
                pos,
            )),
        };
    }
    let numeric_start = unsigned
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '.');
    if numeric_start && unsigned.bytes().any(|b| b.is_ascii_digit()) {
        if let Ok(v) = atom.parse::<f64>() {
            if v.is_finite() {
                return Ok(TokenKind::Float);
            }
        }
    }
    Ok(TokenKind::Symbol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn smallest_form() {
        let toks = tokenize("(answer)").unwrap();
        assert_eq!(
            toks.iter().map(|t| t.kind).collect::<Vec<_>>(),
            vec![TokenKind::LeftParen, TokenKind::Symbol, TokenKind::RightParen]
        );
        assert_eq!(toks[1].lexeme, "answer");
    }

    #[test]
    fn bind_weightage() {
        let toks = tokenize("(bind ?*weightage* (+ ?*weightage* 5))").unwrap();
        assert_eq!(toks.len(), 9);
        let globals: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokenKind::GlobalVariable)
            .collect();
        assert_eq!(globals.len(), 2);
        assert!(globals.iter().all(|t| t.var_name() == "weightage"));
        let five = toks.iter().find(|t| t.kind == TokenKind::Integer).unwrap();
        assert_eq!(five.lexeme, "5");
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("\"unclosed").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnterminatedString);
        assert_eq!(err.pos, Position { line: 1, column: 1 });
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("(a\n  ?p ← (b))").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::IllegalCharacter('←'));
        assert_eq!(err.pos, Position { line: 2, column: 6 });
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("1 -2 +3 1.5 -0.25 1e3 .5 + - 1x"),
            vec![
                TokenKind::Integer,
                TokenKind::Integer,
                TokenKind::Integer,
                TokenKind::Float,
                TokenKind::Float,
                TokenKind::Float,
                TokenKind::Float,
                TokenKind::Symbol,
                TokenKind::Symbol,
                TokenKind::Symbol,
            ]
        );
        assert!(matches!(
            tokenize("99999999999999999999").unwrap_err().kind,
            DslErrorKind::IntegerOutOfRange(_)
        ));
    }

    #[test]
    fn variables_arrows_and_comments() {
        let toks = tokenize("?p <- (x ? ?v) ; trailing\n=> <= >=").unwrap();
        let ks: Vec<_> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            ks,
            vec![
                TokenKind::Variable,
                TokenKind::Arrow,
                TokenKind::LeftParen,
                TokenKind::Symbol,
                TokenKind::Symbol,
                TokenKind::Variable,
                TokenKind::RightParen,
                TokenKind::Arrow,
                TokenKind::Symbol,
                TokenKind::Symbol,
            ]
        );
        assert_eq!(toks[7].pos, Position { line: 2, column: 1 });
        assert_eq!(toks[5].var_name(), "v");
    }

    #[test]
    fn malformed_globals() {
        for bad in ["?*x", "?**", "?*a*b*"] {
            assert!(
                matches!(tokenize(bad).unwrap_err().kind, DslErrorKind::MalformedGlobal(_)),
                "{bad}"
            );
        }
    }

    #[test]
    fn string_escapes_and_newlines() {
        let toks = tokenize("\"a \\\"q\\\" b\nc\" x").unwrap();
        assert_eq!(toks[0].lexeme, "a \"q\" b\nc");
        assert_eq!(toks[1].pos, Position { line: 2, column: 4 });
    }

    #[test]
    fn deterministic() {
        let src = "(defrule r (a ?x) => (printout t ?x crlf))";
        assert_eq!(tokenize(src).unwrap(), tokenize(src).unwrap());
    }
}
