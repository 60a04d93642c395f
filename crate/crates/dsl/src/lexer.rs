//! Hand-written lexer. Every token carries a span; `HH:MM` is lexed as a
//! single time token so the parser never has to disambiguate it from the
//! `:` punctuation.

use crate::diag::{self, Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Int(i64),
    /// Minutes since midnight.
    Time(u16),
    /// Single-character punctuation: `{ } [ ] ( ) , ; . =` and `:`.
    Punct(char),
    /// Comparison operator: `< <= > >= == !=`.
    Cmp(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

pub fn lex(text: &str, file: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1usize;
    let mut col = 1usize;

    let span = |line: usize, col: usize, len: usize| SourceSpan {
        file: file.to_string(),
        line,
        column: col,
        length: len,
    };

    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '"' => {
                let (sl, sc) = (line, col);
                let start = i;
                i += 1;
                col += 1;
                let mut value = String::new();
                let mut closed = false;
                while i < bytes.len() {
                    let ch = bytes[i] as char;
                    if ch == '"' {
                        i += 1;
                        col += 1;
                        closed = true;
                        break;
                    }
                    if ch == '\n' {
                        break;
                    }
                    if ch == '\\' && i + 1 < bytes.len() {
                        let esc = bytes[i + 1] as char;
                        value.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        i += 2;
                        col += 2;
                    } else {
                        // Multi-byte characters advance by their length.
                        let ch = text[i..].chars().next().unwrap();
                        value.push(ch);
                        i += ch.len_utf8();
                        col += 1;
                    }
                }
                if closed {
                    tokens.push(Token {
                        kind: TokenKind::Str(value),
                        span: span(sl, sc, i - start),
                    });
                } else {
                    errors.push(Diagnostic::error(
                        diag::UNTERMINATED_STRING,
                        "unterminated string literal",
                        span(sl, sc, i - start),
                    ));
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' | ';' | '.' => {
                tokens.push(Token {
                    kind: TokenKind::Punct(c),
                    span: span(line, col, 1),
                });
                i += 1;
                col += 1;
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token {
                        kind: TokenKind::Cmp("=="),
                        span: span(line, col, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    tokens.push(Token {
                        kind: TokenKind::Punct('='),
                        span: span(line, col, 1),
                    });
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token {
                        kind: TokenKind::Cmp("!="),
                        span: span(line, col, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    errors.push(Diagnostic::error(
                        diag::BAD_CHAR,
                        "stray `!` (did you mean `!=`?)",
                        span(line, col, 1),
                    ));
                    i += 1;
                    col += 1;
                }
            }
            '<' | '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token {
                        kind: TokenKind::Cmp(if c == '<' { "<=" } else { ">=" }),
                        span: span(line, col, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    tokens.push(Token {
                        kind: TokenKind::Cmp(if c == '<' { "<" } else { ">" }),
                        span: span(line, col, 1),
                    });
                    i += 1;
                    col += 1;
                }
            }
            ':' => {
                tokens.push(Token {
                    kind: TokenKind::Punct(':'),
                    span: span(line, col, 1),
                });
                i += 1;
                col += 1;
            }
            '-' | '0'..='9' => {
                let (sl, sc) = (line, col);
                let start = i;
                if c == '-' {
                    i += 1;
                    col += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        errors.push(Diagnostic::error(
                            diag::BAD_NUMBER,
                            "`-` must be followed by digits",
                            span(sl, sc, 1),
                        ));
                        continue;
                    }
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                // `HH:MM` — only when the colon is immediately followed by
                // exactly two digits, so `rule:` never matches.
                let is_time = c != '-'
                    && i + 1 < bytes.len()
                    && bytes[i] == b':'
                    && bytes[i + 1].is_ascii_digit();
                if is_time {
                    let hours: u32 = text[start..i].parse().unwrap_or(u32::MAX);
                    let m_start = i + 1;
                    i += 1;
                    col += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                        col += 1;
                    }
                    let minutes: u32 = text[m_start..i].parse().unwrap_or(u32::MAX);
                    if hours > 23 || minutes > 59 || i - m_start != 2 {
                        errors.push(Diagnostic::error(
                            diag::BAD_TIME,
                            format!("invalid time literal `{}`", &text[start..i]),
                            span(sl, sc, i - start),
                        ));
                    } else {
                        tokens.push(Token {
                            kind: TokenKind::Time((hours * 60 + minutes) as u16),
                            span: span(sl, sc, i - start),
                        });
                    }
                } else {
                    match text[start..i].parse::<i64>() {
                        Ok(n) => tokens.push(Token {
                            kind: TokenKind::Int(n),
                            span: span(sl, sc, i - start),
                        }),
                        Err(_) => errors.push(Diagnostic::error(
                            diag::BAD_NUMBER,
                            format!("invalid integer `{}`", &text[start..i]),
                            span(sl, sc, i - start),
                        )),
                    }
                }
            }
            _ if c.is_alphabetic() || c == '_' => {
                let (sl, sc) = (line, col);
                let start = i;
                while i < bytes.len() {
                    let ch = text[i..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' {
                        i += ch.len_utf8();
                        col += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    span: span(sl, sc, i - start),
                });
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                errors.push(Diagnostic::error(
                    diag::BAD_CHAR,
                    format!("unexpected character `{ch}`"),
                    span(line, col, ch.len_utf8()),
                ));
                i += ch.len_utf8();
                col += 1;
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: span(line, col, 0),
    });
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}
