//! Hand-rolled lexer for the modeling language.
//!
//! Reserved words are lexed as [`Tok::Kw`]; the primitive type names
//! (`Int`, `Bool`, `String`), `self` and the collection operations
//! (`size`, `includes`, `forAll`, `exists`) stay ordinary identifiers and
//! are recognized contextually by the parser.

use crate::diag::{codes, Diagnostic};
use crate::model::Pos;

pub const KEYWORDS: &[&str] = &[
    "abstract", "anchor", "and", "assert", "attr", "call", "category", "class", "driver", "else",
    "expect", "extends", "false", "fixture", "for", "if", "implies", "initial", "inv", "matches",
    "method", "not", "object", "objects", "on", "or", "oracle", "pattern", "project", "published",
    "return", "returns", "sequence", "set", "state", "statechart", "strict", "test", "trans",
    "true", "var",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    Kw(&'static str),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
    Assign,
    Semi,
    Colon,
    Comma,
    Dot,
    Pipe,
    At,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::Ne => "`<>`".to_string(),
            Tok::Assign => "`=`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Pipe => "`|`".to_string(),
            Tok::At => "`@`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub struct Lexed {
    pub tokens: Vec<Token>,
    pub diags: Vec<Diagnostic>,
}

pub fn lex(text: &str) -> Lexed {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            tokens.push(Token { tok: $tok, pos: $pos })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '\r' => {
                // CRLF accepted on input; the printer always emits LF.
                i += 1;
            }
            ' ' | '\t' => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let (tok, len, consumed_cols, err) = lex_string(&chars[i..], pos);
                if let Some(d) = err {
                    diags.push(d);
                }
                if let Some(t) = tok {
                    push!(t, pos);
                }
                i += len;
                col += consumed_cols;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                match digits.parse::<u64>() {
                    Ok(v) if v <= i64::MAX as u64 + 1 => push!(Tok::Int(v), pos),
                    _ => diags.push(Diagnostic::error(
                        codes::E_SYNTAX,
                        pos.line,
                        pos.column,
                        format!("integer literal `{digits}` out of range"),
                    )),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => push!(Tok::Kw(k), pos),
                    None => push!(Tok::Ident(word), pos),
                }
            }
            _ => {
                let (tok, len) = match c {
                    '{' => (Some(Tok::LBrace), 1),
                    '}' => (Some(Tok::RBrace), 1),
                    '(' => (Some(Tok::LParen), 1),
                    ')' => (Some(Tok::RParen), 1),
                    '[' => (Some(Tok::LBracket), 1),
                    ']' => (Some(Tok::RBracket), 1),
                    ';' => (Some(Tok::Semi), 1),
                    ':' => (Some(Tok::Colon), 1),
                    ',' => (Some(Tok::Comma), 1),
                    '.' => (Some(Tok::Dot), 1),
                    '|' => (Some(Tok::Pipe), 1),
                    '@' => (Some(Tok::At), 1),
                    '+' => (Some(Tok::Plus), 1),
                    '*' => (Some(Tok::Star), 1),
                    '/' => (Some(Tok::Slash), 1),
                    '=' => (Some(Tok::Assign), 1),
                    '-' => {
                        if chars.get(i + 1) == Some(&'>') {
                            (Some(Tok::Arrow), 2)
                        } else {
                            (Some(Tok::Minus), 1)
                        }
                    }
                    '<' => match chars.get(i + 1) {
                        Some('=') => (Some(Tok::Le), 2),
                        Some('>') => (Some(Tok::Ne), 2),
                        _ => (Some(Tok::Lt), 1),
                    },
                    '>' => {
                        if chars.get(i + 1) == Some(&'=') {
                            (Some(Tok::Ge), 2)
                        } else {
                            (Some(Tok::Gt), 1)
                        }
                    }
                    other => {
                        diags.push(Diagnostic::error(
                            codes::E_SYNTAX,
                            pos.line,
                            pos.column,
                            format!("unexpected character `{other}`"),
                        ));
                        (None, 1)
                    }
                };
                if let Some(t) = tok {
                    push!(t, pos);
                }
                i += len;
                col += len as u32;
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: Pos::new(line, col),
    });
    Lexed { tokens, diags }
}

/// Lexes a string literal starting at `chars[0] == '"'`. Only `\"` and `\\`
/// escapes exist; raw newlines and control characters are rejected.
fn lex_string(
    chars: &[char],
    pos: Pos,
) -> (Option<Tok>, usize, u32, Option<Diagnostic>) {
    let mut out = String::new();
    let mut i = 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return (Some(Tok::Str(out)), i + 1, (i + 1) as u32, None),
            '\\' => match chars.get(i + 1) {
                Some('"') => {
                    out.push('"');
                    i += 2;
                }
                Some('\\') => {
                    out.push('\\');
                    i += 2;
                }
                _ => {
                    return (
                        None,
                        i + 1,
                        (i + 1) as u32,
                        Some(Diagnostic::error(
                            codes::E_SYNTAX,
                            pos.line,
                            pos.column,
                            "invalid escape in string literal (only \\\" and \\\\ exist)",
                        )),
                    )
                }
            },
            '\n' | '\r' => break,
            c if c.is_control() => {
                return (
                    None,
                    i + 1,
                    (i + 1) as u32,
                    Some(Diagnostic::error(
                        codes::E_SYNTAX,
                        pos.line,
                        pos.column,
                        "control character in string literal",
                    )),
                )
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    (
        None,
        i,
        i as u32,
        Some(Diagnostic::error(
            codes::E_SYNTAX,
            pos.line,
            pos.column,
            "unterminated string literal",
        )),
    )
}
