//! Shared scanner for the text formats (terms, constraints, traces,
//! interleavings and programs).
//!
//! Whitespace is insignificant everywhere; `%` starts a comment that runs to
//! the end of the line.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

pub type PResult<T> = Result<T, ParseError>;

pub struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    pub fn error_at(&self, pos: usize, message: impl fmt::Display) -> ParseError {
        let (line, col) = self.location(pos);
        ParseError { line, col, message: message.to_string() }
    }

    pub fn error(&self, message: impl fmt::Display) -> ParseError {
        self.error_at(self.pos, message)
    }

    pub fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('%') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    pub fn looking_at(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(s)
    }

    /// Consumes `s` if it is next. Keywords must not be followed by a name
    /// character.
    pub fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        if !rest.starts_with(s) {
            return false;
        }
        let word = s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if word && rest[s.len()..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            return false;
        }
        self.pos += s.len();
        true
    }

    pub fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    /// "expected `what`, found ..." at the next token.
    pub fn expected(&mut self, what: &str) -> ParseError {
        let found = self.describe_next();
        self.error(format!("expected {what}, found {found}"))
    }

    /// "unexpected ..." at the next token, with optional context.
    pub fn unexpected(&mut self, context: &str) -> ParseError {
        let found = self.describe_next();
        self.error(format!("unexpected {found}{context}"))
    }

    pub fn describe_next(&mut self) -> String {
        self.skip_ws();
        match self.rest().chars().next() {
            None => "end of input".to_string(),
            Some(_) => {
                let tok: String = self
                    .rest()
                    .chars()
                    .take_while(|c| !c.is_whitespace())
                    .take(16)
                    .collect();
                format!("`{tok}`")
            }
        }
    }

    /// Takes a maximal run of characters satisfying `pred` (may be empty).
    pub fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !pred(c)).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    /// A lowercase-initial identifier such as an atom or function name.
    pub fn lower_ident(&mut self) -> Option<&'a str> {
        match self.peek() {
            Some(c) if c.is_ascii_lowercase() => {
                Some(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_'))
            }
            _ => None,
        }
    }

    /// An uppercase-initial (or `_`-initial, length > 1) variable name.
    pub fn variable(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_uppercase() => true,
            Some('_') => chars.next().is_some_and(|c| c.is_ascii_alphanumeric()),
            _ => false,
        };
        ok.then(|| self.take_while(|c| c.is_ascii_alphanumeric() || c == '_'))
    }

    /// A pid- or tag-shaped name: lowercase initial, then name characters,
    /// dots and `#`.
    pub fn name_token(&mut self) -> Option<(usize, &'a str)> {
        match self.peek() {
            Some(c) if c.is_ascii_alphanumeric() => {
                let start = self.pos;
                Some((
                    start,
                    self.take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '#')),
                ))
            }
            _ => None,
        }
    }

    pub fn integer(&mut self) -> PResult<Option<i64>> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let neg = rest.starts_with('-');
        let digits = rest[neg as usize..].bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Ok(None);
        }
        let len = neg as usize + digits;
        let text = &rest[..len];
        self.pos += len;
        text.parse()
            .map(Some)
            .map_err(|_| self.error_at(start, format!("integer `{text}` out of range")))
    }
}
