//! Character cursor and literal syntax shared by queries and scripts.

use crate::graph::{format_real, AttrValue};

#[derive(Debug, Clone)]
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Cursor<'a> {
        Cursor { src, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    pub fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// `[A-Za-z_][A-Za-z0-9_-]*`, never swallowing the `-` of a `->`.
    pub fn ident(&mut self) -> Option<&'a str> {
        let rest = self.rest();
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let ok = if i == 0 {
                c.is_ascii_alphabetic() || c == '_'
            } else {
                c.is_ascii_alphanumeric() || c == '_' || (c == '-' && !rest[i..].starts_with("->"))
            };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(&rest[..end])
    }

    pub fn uint(&mut self) -> Option<u64> {
        let rest = self.rest();
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let n = rest[..end].parse().ok()?;
        self.pos += end;
        Some(n)
    }

    /// A literal value: quoted string, `@workspace` reference, `[list]`,
    /// or a bare token classified as boolean, integer, real or string.
    pub fn literal(&mut self) -> Result<AttrValue, String> {
        match self.peek() {
            Some('"') => self.quoted().map(AttrValue::Str),
            Some('@') => {
                self.pos += 1;
                let token = self.bare();
                if token.is_empty() {
                    return Err("expected a workspace id after `@`".into());
                }
                Ok(AttrValue::Ref(token.to_owned()))
            }
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                self.skip_ws();
                if !self.eat("]") {
                    loop {
                        self.skip_ws();
                        items.push(self.literal()?);
                        self.skip_ws();
                        if self.eat("]") {
                            break;
                        }
                        if !self.eat(",") {
                            return Err("expected `,` or `]` in list".into());
                        }
                    }
                }
                let list = AttrValue::List(items);
                list.check().map_err(|e| e.to_string())?;
                Ok(list)
            }
            _ => {
                let token = self.bare();
                if token.is_empty() {
                    return Err("expected a value".into());
                }
                Ok(classify(token))
            }
        }
    }

    fn quoted(&mut self) -> Result<String, String> {
        let rest = self.rest();
        let mut escaped = false;
        for (i, c) in rest.char_indices().skip(1) {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => {
                    let s: String = serde_json::from_str(&rest[..=i]).map_err(|e| e.to_string())?;
                    self.pos += i + 1;
                    return Ok(s);
                }
                _ => {}
            }
        }
        Err("unterminated string".into())
    }

    fn bare(&mut self) -> &'a str {
        let rest = self.rest();
        let end = rest.find(|c: char| !is_bare_char(c)).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }
}

fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, ',' | '[' | ']' | '=' | '(' | ')' | '"')
}

fn looks_numeric(token: &str) -> bool {
    let t = token.strip_prefix(['-', '+']).unwrap_or(token);
    t.starts_with(|c: char| c.is_ascii_digit() || c == '.')
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
}

fn classify(token: &str) -> AttrValue {
    match token {
        "true" => return AttrValue::Bool(true),
        "false" => return AttrValue::Bool(false),
        _ => {}
    }
    if looks_numeric(token) {
        if let Ok(i) = token.parse::<i64>() {
            return AttrValue::Int(i);
        }
        if let Ok(r) = token.parse::<f64>() {
            if r.is_finite() && token.contains(['.', 'e', 'E']) {
                return AttrValue::Real(r);
            }
        }
    }
    AttrValue::Str(token.to_owned())
}

/// Literal text that reads back as the same value.
pub fn format_literal(value: &AttrValue) -> String {
    match value {
        AttrValue::Str(s) => {
            let bare_ok = !s.is_empty()
                && s.chars().all(is_bare_char)
                && !s.starts_with(['@', '$', '.', '#'])
                && classify(s) == AttrValue::Str(s.clone());
            if bare_ok {
                s.clone()
            } else {
                serde_json::to_string(s).expect("string serialization")
            }
        }
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Real(r) => format_real(*r),
        AttrValue::Bool(b) => b.to_string(),
        AttrValue::Ref(ws) => format!("@{ws}"),
        AttrValue::List(items) => format!(
            "[{}]",
            items.iter().map(format_literal).collect::<Vec<_>>().join(", ")
        ),
    }
}
