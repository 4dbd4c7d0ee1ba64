//! Minimal pull parser for the XML subset the OSM dialect uses: elements,
//! attributes, self-closing tags, declarations and comments. Keeps a line
//! counter so parse errors point at the offending input line.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct XmlError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum XmlEvent {
    /// `<name a="v">` or `<name a="v"/>`.
    Open {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
        line: usize,
    },
    /// `</name>`.
    Close { name: String, line: usize },
}

pub struct XmlReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> XmlReader<'a> {
    pub fn new(text: &'a [u8]) -> Self {
        Self {
            bytes: text,
            pos: 0,
            line: 1,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, XmlError> {
        Err(XmlError {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn skip_until(&mut self, pat: &[u8]) -> Result<(), XmlError> {
        while self.pos < self.bytes.len() {
            if self.bytes[self.pos..].starts_with(pat) {
                for _ in 0..pat.len() {
                    self.bump();
                }
                return Ok(());
            }
            self.bump();
        }
        self.err(format!(
            "unterminated construct, expected '{}'",
            String::from_utf8_lossy(pat)
        ))
    }

    /// Next element event, skipping text, comments and declarations. `None`
    /// at end of input.
    pub fn next_event(&mut self) -> Result<Option<XmlEvent>, XmlError> {
        loop {
            // Inter-element text is ignored; the dialect never uses it.
            while let Some(b) = self.peek() {
                if b == b'<' {
                    break;
                }
                self.bump();
            }
            if self.peek().is_none() {
                return Ok(None);
            }
            let line = self.line;
            self.bump(); // consume '<'
            match self.peek() {
                None => return self.err("dangling '<' at end of input"),
                Some(b'?') => {
                    self.skip_until(b"?>")?;
                    continue;
                }
                Some(b'!') => {
                    self.bump();
                    if self.bytes[self.pos..].starts_with(b"--") {
                        self.skip_until(b"-->")?;
                    } else {
                        self.skip_until(b">")?;
                    }
                    continue;
                }
                Some(b'/') => {
                    self.bump();
                    let name = self.read_name()?;
                    self.skip_whitespace();
                    if self.bump() != Some(b'>') {
                        return self.err(format!("malformed closing tag </{name}"));
                    }
                    return Ok(Some(XmlEvent::Close { name, line }));
                }
                Some(_) => {
                    let name = self.read_name()?;
                    let mut attrs = Vec::new();
                    loop {
                        self.skip_whitespace();
                        match self.peek() {
                            None => return self.err(format!("unterminated tag <{name}")),
                            Some(b'>') => {
                                self.bump();
                                return Ok(Some(XmlEvent::Open {
                                    name,
                                    attrs,
                                    self_closing: false,
                                    line,
                                }));
                            }
                            Some(b'/') => {
                                self.bump();
                                if self.bump() != Some(b'>') {
                                    return self.err(format!("malformed self-closing tag <{name}"));
                                }
                                return Ok(Some(XmlEvent::Open {
                                    name,
                                    attrs,
                                    self_closing: true,
                                    line,
                                }));
                            }
                            Some(_) => {
                                let key = self.read_name()?;
                                self.skip_whitespace();
                                if self.bump() != Some(b'=') {
                                    return self.err(format!("attribute '{key}' missing '='"));
                                }
                                self.skip_whitespace();
                                let value = self.read_quoted()?;
                                attrs.push((key, value));
                            }
                        }
                    }
                }
            }
        }
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn read_name(&mut self) -> Result<String, XmlError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b':' | b'.') {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            return self.err("expected a name");
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn read_quoted(&mut self) -> Result<String, XmlError> {
        let quote = match self.bump() {
            Some(q @ (b'"' | b'\'')) => q,
            _ => return self.err("expected a quoted attribute value"),
        };
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b == quote {
                let raw = &self.bytes[start..self.pos];
                self.bump();
                return unescape(raw, self.line);
            }
            self.bump();
        }
        self.err("unterminated attribute value")
    }
}

/// Escapes text for use in an attribute value.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(raw: &[u8], line: usize) -> Result<String, XmlError> {
    let text = String::from_utf8_lossy(raw);
    if !text.contains('&') {
        return Ok(text.into_owned());
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text.as_ref();
    while let Some(idx) = rest.find('&') {
        out.push_str(&rest[..idx]);
        rest = &rest[idx..];
        let Some(end) = rest.find(';') else {
            return Err(XmlError {
                line,
                message: "unterminated entity".into(),
            });
        };
        match &rest[..=end] {
            "&amp;" => out.push('&'),
            "&lt;" => out.push('<'),
            "&gt;" => out.push('>'),
            "&quot;" => out.push('"'),
            "&apos;" => out.push('\''),
            other => {
                return Err(XmlError {
                    line,
                    message: format!("unsupported entity '{other}'"),
                })
            }
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
