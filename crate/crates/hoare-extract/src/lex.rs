//! Tokenizer shared by the theory and proof formats.
//!
//! `#` starts a comment running to end of line. Identifiers may contain
//! primes (`l'`), so metavariable pairs read naturally.

use crate::diag::{Diagnostic, Pos, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Dot,
    Star,
    Plus,
    Tilde,
    And,       // /\
    Or,        // \/
    Arrow,     // ->
    DArrow,    // =>
    Turnstile, // |-
    Eq,        // =
    Neq,       // !=
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::And => write!(f, "`/\\`"),
            Tok::Or => write!(f, "`\\/`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::DArrow => write!(f, "`=>`"),
            Tok::Turnstile => write!(f, "`|-`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Neq => write!(f, "`!=`"),
            Tok::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(file: &str, text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let start = Pos { line, col };
        let c = match chars.peek() {
            None => {
                out.push(Token { tok: Tok::Eof, span: Span::point(start) });
                return Ok(out);
            }
            Some(c) => *c,
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        let tok = match c {
            '(' => {
                bump!();
                Tok::LParen
            }
            ')' => {
                bump!();
                Tok::RParen
            }
            '{' => {
                bump!();
                Tok::LBrace
            }
            '}' => {
                bump!();
                Tok::RBrace
            }
            '[' => {
                bump!();
                Tok::LBracket
            }
            ']' => {
                bump!();
                Tok::RBracket
            }
            ',' => {
                bump!();
                Tok::Comma
            }
            ':' => {
                bump!();
                Tok::Colon
            }
            ';' => {
                bump!();
                Tok::Semi
            }
            '.' => {
                bump!();
                Tok::Dot
            }
            '*' => {
                bump!();
                Tok::Star
            }
            '+' => {
                bump!();
                Tok::Plus
            }
            '~' => {
                bump!();
                Tok::Tilde
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'\\') {
                    bump!();
                    Tok::And
                } else {
                    return Err(lex_err(file, start, "expected `/\\`"));
                }
            }
            '\\' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    bump!();
                    Tok::Or
                } else {
                    return Err(lex_err(file, start, "expected `\\/`"));
                }
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    Tok::Arrow
                } else {
                    return Err(lex_err(file, start, "expected `->`"));
                }
            }
            '=' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    Tok::DArrow
                } else {
                    Tok::Eq
                }
            }
            '!' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::Neq
                } else {
                    return Err(lex_err(file, start, "expected `!=`"));
                }
            }
            '|' => {
                bump!();
                if chars.peek() == Some(&'-') {
                    bump!();
                    Tok::Turnstile
                } else {
                    return Err(lex_err(file, start, "expected `|-`"));
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: u64 = 0;
                while let Some(&d) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    bump!();
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as u64 - '0' as u64))
                        .ok_or_else(|| lex_err(file, start, "numeral out of range"))?;
                }
                // A letter glued to a numeral is a typo, not two tokens.
                if chars.peek().is_some_and(|c| is_ident_char(*c)) {
                    return Err(lex_err(file, start, "identifiers may not start with a digit"));
                }
                Tok::Nat(n)
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if !is_ident_char(d) {
                        break;
                    }
                    s.push(d);
                    bump!();
                }
                Tok::Ident(s)
            }
            other => return Err(lex_err(file, start, format!("unexpected character `{other}`"))),
        };
        let end = Pos { line, col };
        out.push(Token { tok, span: Span { start, end } });
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex_err(file: &str, at: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(file, Some(Span::point(at)), msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        lex("t", text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_and_idents() {
        assert_eq!(
            kinds("le(l, l') |- a /\\ b \\/ c -> d => ~e"),
            vec![
                Tok::Ident("le".into()),
                Tok::LParen,
                Tok::Ident("l".into()),
                Tok::Comma,
                Tok::Ident("l'".into()),
                Tok::RParen,
                Tok::Turnstile,
                Tok::Ident("a".into()),
                Tok::And,
                Tok::Ident("b".into()),
                Tok::Or,
                Tok::Ident("c".into()),
                Tok::Arrow,
                Tok::Ident("d".into()),
                Tok::DArrow,
                Tok::Tilde,
                Tok::Ident("e".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = lex("t", "a # rest of line\n  b").unwrap();
        assert_eq!(toks[1].tok, Tok::Ident("b".into()));
        assert_eq!(toks[1].span.start, Pos { line: 2, col: 3 });
    }

    #[test]
    fn numerals() {
        assert_eq!(kinds("succ(41)"), vec![
            Tok::Ident("succ".into()),
            Tok::LParen,
            Tok::Nat(41),
            Tok::RParen,
            Tok::Eof,
        ]);
        assert!(lex("t", "1x").is_err());
    }

    #[test]
    fn stray_character_is_positioned() {
        let err = lex("t", "a ? b").unwrap_err();
        assert!(err.message.contains("unexpected character"));
        assert_eq!(err.span.unwrap().start, Pos { line: 1, col: 3 });
    }
}
