//! Tokenizer and parser helpers shared by the `.ess` document format and the
//! kernel file format.

use std::fmt;
use std::iter::Peekable;
use std::str::CharIndices;

use thiserror::Error;

/// A syntax error with a 1-based position into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}{}", expected.as_ref().map(|e| format!(" (expected {e})")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Option<String>,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
            expected: None,
        }
    }

    pub fn expected(pos: Pos, message: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError {
            expected: Some(expected.into()),
            ..ParseError::new(pos, message)
        }
    }
}

/// Line and column, both 1-based; columns count Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Str(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
    Dot,
    /// `->`
    Arrow,
    /// `--`
    DashDash,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Str(_) => f.write_str("string"),
            Token::Int(n) => write!(f, "integer {n}"),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Colon => f.write_str("`:`"),
            Token::Semi => f.write_str("`;`"),
            Token::Dot => f.write_str("`.`"),
            Token::Arrow => f.write_str("`->`"),
            Token::DashDash => f.write_str("`--`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

struct Lexer<'a> {
    chars: Peekable<CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Spanned, ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(Spanned {
                token: Token::Eof,
                pos,
            });
        };
        let token = match c {
            '{' => self.single(Token::LBrace),
            '}' => self.single(Token::RBrace),
            '(' => self.single(Token::LParen),
            ')' => self.single(Token::RParen),
            ',' => self.single(Token::Comma),
            ':' => self.single(Token::Colon),
            ';' => self.single(Token::Semi),
            '.' => self.single(Token::Dot),
            '"' => self.string(pos)?,
            '-' => {
                self.bump();
                match self.peek() {
                    Some('>') => self.single(Token::Arrow),
                    Some('-') => self.single(Token::DashDash),
                    Some(d) if d.is_ascii_digit() => self.integer(pos, true)?,
                    _ => return Err(ParseError::new(pos, "stray `-`")),
                }
            }
            d if d.is_ascii_digit() => self.integer(pos, false)?,
            a if a.is_ascii_alphabetic() || a == '_' => {
                let mut ident = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Token::Ident(ident)
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    format!("unexpected character {other:?}"),
                ))
            }
        };
        Ok(Spanned { token, pos })
    }

    fn single(&mut self, token: Token) -> Token {
        self.bump();
        token
    }

    fn integer(&mut self, start: Pos, negative: bool) -> Result<Token, ParseError> {
        let mut digits = String::new();
        if negative {
            digits.push('-');
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                self.bump();
            } else {
                break;
            }
        }
        digits
            .parse()
            .map(Token::Int)
            .map_err(|_| ParseError::new(start, format!("integer {digits} out of range")))
    }

    fn string(&mut self, start: Pos) -> Result<Token, ParseError> {
        self.bump();
        let mut out = String::new();
        loop {
            let pos = self.pos();
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::new(start, "unterminated string"));
                }
                Some('"') => return Ok(Token::Str(out)),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some(other) => {
                        return Err(ParseError::expected(
                            pos,
                            format!("unknown escape `\\{other}`"),
                            "one of \\\" \\\\ \\n",
                        ))
                    }
                    None => return Err(ParseError::new(start, "unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// Pull-based token stream with one token of lookahead. Lexing happens on
/// demand so the earliest error in the input is always the one reported.
pub struct TokenStream<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Spanned>,
}

impl<'a> TokenStream<'a> {
    pub fn new(src: &'a str) -> Self {
        TokenStream {
            lexer: Lexer::new(src),
            peeked: None,
        }
    }

    pub fn peek(&mut self) -> Result<&Spanned, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("filled above"))
    }

    pub fn next(&mut self) -> Result<Spanned, ParseError> {
        let tok = match self.peeked.take() {
            Some(t) => t,
            None => self.lexer.next_token()?,
        };
        Ok(tok)
    }

    pub fn peek_is_keyword(&mut self, kw: &str) -> Result<bool, ParseError> {
        Ok(matches!(&self.peek()?.token, Token::Ident(s) if s == kw))
    }

    pub fn expect(&mut self, want: Token) -> Result<Pos, ParseError> {
        let tok = self.next()?;
        if tok.token == want {
            Ok(tok.pos)
        } else {
            Err(unexpected(&tok, &want.to_string()))
        }
    }

    pub fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        let tok = self.next()?;
        match &tok.token {
            Token::Ident(s) if s == kw => Ok(tok.pos),
            _ => Err(unexpected(&tok, &format!("`{kw}`"))),
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let tok = self.next()?;
        match tok.token {
            Token::Ident(s) => Ok((s, tok.pos)),
            _ => Err(unexpected(&tok, what)),
        }
    }

    pub fn string(&mut self) -> Result<(String, Pos), ParseError> {
        let tok = self.next()?;
        match tok.token {
            Token::Str(s) => Ok((s, tok.pos)),
            _ => Err(unexpected(&tok, "string")),
        }
    }

    pub fn int(&mut self) -> Result<(i64, Pos), ParseError> {
        let tok = self.next()?;
        match tok.token {
            Token::Int(n) => Ok((n, tok.pos)),
            _ => Err(unexpected(&tok, "integer")),
        }
    }
}

pub fn unexpected(tok: &Spanned, expected: &str) -> ParseError {
    ParseError::expected(tok.pos, format!("unexpected {}", tok.token), expected)
}

/// Quotes `s` using the escapes understood by the lexer.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
