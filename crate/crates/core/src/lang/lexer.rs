//! Tokenizer for adaptation source code.

use std::fmt;

use super::LexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Bool,
    Int8,
    Int16,
    Int32,
    Struct,
    Local,
    If,
    Else,
    For,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Self> {
        Some(match s {
            "bool" => Self::Bool,
            "int8" => Self::Int8,
            "int16" => Self::Int16,
            "int32" => Self::Int32,
            "struct" => Self::Struct,
            "local" => Self::Local,
            "if" => Self::If,
            "else" => Self::Else,
            "for" => Self::For,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier(String),
    /// Decimal literal, unsigned at lexing time; sign comes from unary minus.
    IntLiteral(u32),
    BoolLiteral(bool),
    /// `; , { } [ ] ( ) . ..`
    Punct(&'static str),
    /// `= == != < <= > >= + - * / ! && || ++`
    Operator(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", format!("{k:?}").to_lowercase()),
            TokenKind::Identifier(s) => write!(f, "identifier `{s}`"),
            TokenKind::IntLiteral(v) => write!(f, "integer `{v}`"),
            TokenKind::BoolLiteral(b) => write!(f, "`{b}`"),
            TokenKind::Punct(p) | TokenKind::Operator(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub column: u32,
}

// Longest match first.
const SYMBOLS: &[(&str, bool)] = &[
    ("..", true),
    ("==", false),
    ("!=", false),
    ("<=", false),
    (">=", false),
    ("&&", false),
    ("||", false),
    ("++", false),
    (";", true),
    (",", true),
    ("{", true),
    ("}", true),
    ("[", true),
    ("]", true),
    ("(", true),
    (")", true),
    (".", true),
    ("=", false),
    ("<", false),
    (">", false),
    ("+", false),
    ("-", false),
    ("*", false),
    ("/", false),
    ("!", false),
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn advance(&mut self, n: usize) {
        for ch in self.src[self.pos..self.pos + n].chars() {
            if ch == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        self.pos += n;
    }
}

/// Splits `source` into tokens, skipping whitespace and `//` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(ch) = cur.rest().chars().next() {
        if ch.is_whitespace() {
            cur.advance(ch.len_utf8());
            continue;
        }
        let rest = cur.rest();
        if rest.starts_with("//") {
            let len = rest.find('\n').unwrap_or(rest.len());
            cur.advance(len);
            continue;
        }

        let (line, column) = (cur.line, cur.column);
        let (kind, len) = if ch.is_ascii_alphabetic() || ch == '_' {
            let len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let word = &rest[..len];
            let kind = match word {
                "true" => TokenKind::BoolLiteral(true),
                "false" => TokenKind::BoolLiteral(false),
                _ => match Keyword::from_ident(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Identifier(word.to_string()),
                },
            };
            (kind, len)
        } else if ch.is_ascii_digit() {
            let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            if rest[len..].starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                return Err(LexError {
                    line,
                    column,
                    message: "identifier may not start with a digit".into(),
                });
            }
            let value: u32 = rest[..len].parse().map_err(|_| LexError {
                line,
                column,
                message: format!("integer literal `{}` out of range", &rest[..len]),
            })?;
            if value > i32::MAX as u32 + 1 {
                return Err(LexError {
                    line,
                    column,
                    message: format!("integer literal `{value}` out of range"),
                });
            }
            (TokenKind::IntLiteral(value), len)
        } else if let Some(&(sym, punct)) = SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
            let kind = if punct {
                TokenKind::Punct(sym)
            } else {
                TokenKind::Operator(sym)
            };
            (kind, sym.len())
        } else {
            let message = match ch {
                '&' => "`&` is not part of the language (no address-of)".to_string(),
                _ => format!("unexpected character `{}`", ch.escape_default()),
            };
            return Err(LexError { line, column, message });
        };

        tokens.push(Token {
            kind,
            lexeme: rest[..len].to_string(),
            line,
            column,
        });
        cur.advance(len);
    }
    Ok(tokens)
}
