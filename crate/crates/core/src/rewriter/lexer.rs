//! SQL tokenizer with byte spans. Identifiers and keywords are lowercased;
//! comments are dropped.

use super::RewriteError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Semi,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

impl Tok {
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self, Tok::Ident(s) if s == kw)
    }

    pub fn render(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => s.clone(),
            Tok::Str(s) => quote(s),
            Tok::Op(o) => o.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Dot => ".".into(),
            Tok::Semi => ";".into(),
        }
    }
}

pub fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

const OPS: [&str; 14] = ["<=", ">=", "<>", "!=", "||", "=", "<", ">", "+", "-", "*", "/", "%", "::"];

pub fn tokenize(src: &str) -> Result<Vec<Token>, RewriteError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("--") {
            i = src[i..].find('\n').map_or(bytes.len(), |n| i + n);
            continue;
        }
        if src[i..].starts_with("/*") {
            i = src[i + 2..].find("*/").map_or(bytes.len(), |n| i + 2 + n + 2);
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'#' | b'$')) {
                i += 1;
            }
            Tok::Ident(src[start..i].to_ascii_lowercase())
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            Tok::Number(src[start..i].to_string())
        } else if c == b'\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match src[i..].find('\'') {
                    None => return Err(RewriteError::syntax(start, "unterminated string literal")),
                    Some(n) => {
                        s.push_str(&src[i..i + n]);
                        i += n + 1;
                        if bytes.get(i) == Some(&b'\'') {
                            s.push('\'');
                            i += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            Tok::Str(s)
        } else {
            i += 1;
            match c {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                b'.' => Tok::Dot,
                b';' => Tok::Semi,
                _ => {
                    let op = OPS
                        .iter()
                        .find(|op| src[start..].starts_with(**op))
                        .ok_or_else(|| RewriteError::syntax(start, format!("unexpected character `{}`", c as char)))?;
                    i = start + op.len();
                    Tok::Op(op)
                }
            }
        };
        out.push(Token { tok, start, end: i });
    }
    Ok(out)
}
