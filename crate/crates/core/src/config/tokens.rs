use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One whitespace-delimited token and the 1-based line it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub line: usize,
}

/// Splits `text` into tokens, dropping every line whose first non-blank
/// character is `#`. A `#` later in a line is ordinary data.
pub fn eat_comments(text: &str) -> Vec<Token> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim_start().starts_with('#'))
        .flat_map(|(n, line)| {
            line.split_whitespace().map(move |t| Token {
                text: t.to_owned(),
                line: n + 1,
            })
        })
        .collect()
}

/// Cursor over the comment-free tokens of a configuration document.
#[derive(Clone, Debug)]
pub struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl TokenStream {
    pub fn new(text: &str) -> Self {
        let tokens = eat_comments(text);
        let last_line = text.lines().count().max(1);
        Self {
            tokens,
            pos: 0,
            last_line,
        }
    }

    /// Line of the next token, or of the end of input.
    pub fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.last_line, |t| t.line)
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn remaining(&self) -> usize {
        self.tokens.len() - self.pos
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    pub fn expect(&mut self, what: &str) -> Result<Token> {
        let line = self.line();
        self.next()
            .ok_or_else(|| Error::parse(line, format!("unexpected end of input, expected {what}")))
    }

    /// Reads and parses the next token.
    pub fn read<T>(&mut self, what: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let token = self.expect(what)?;
        token.text.parse().map_err(|e| {
            Error::parse(
                token.line,
                format!("cannot read {what} from `{}`: {e}", token.text),
            )
        })
    }

    /// Reads a value and checks it immediately.
    pub fn read_checked<T, F>(&mut self, what: &str, valid: F) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
        F: FnOnce(&T) -> bool,
    {
        let line = self.line();
        let value: T = self.read(what)?;
        if !valid(&value) {
            return Err(Error::parse(line, format!("invalid {what}: {value}")));
        }
        Ok(value)
    }

    /// Reads the leading format version of `component`, accepting versions
    /// up to `latest`.
    pub fn read_version(&mut self, component: &str, latest: i64) -> Result<i64> {
        let line = self.line();
        let version: i64 = self.read("format version")?;
        if !(1..=latest).contains(&version) {
            return Err(Error::UnsupportedVersion {
                component: component.to_owned(),
                version,
                line,
            });
        }
        Ok(version)
    }
}
