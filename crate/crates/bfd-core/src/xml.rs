//! Minimal XML subset parser used for `project.xml` and test reports.
//!
//! Supported: one root element, nested elements, attributes in single or
//! double quotes, character data, comments, an optional leading XML
//! declaration, and the five predefined entities. Not supported (rejected):
//! namespaces, DOCTYPE, CDATA, processing instructions, non-predefined
//! entities.

use crate::error::{BfdError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }
}

/// Escape text for use as element content or attribute value.
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

/// Parse a complete document; returns the root element.
pub fn parse(input: &str, source_name: &str) -> Result<Element> {
    let mut parser = Parser {
        chars: input.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        source: source_name.to_string(),
    };
    parser.skip_prolog()?;
    let root = parser.parse_element()?;
    parser.skip_misc()?;
    if !parser.at_end() {
        return Err(parser.expected("end of document"));
    }
    Ok(root)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    source: String,
}

impl Parser {
    fn expected(&self, what: &str) -> BfdError {
        BfdError::SyntaxError {
            file: self.source.clone(),
            line: self.line,
            col: self.col,
            expected: what.to_string(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.expected(&format!("'{c}'")))
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn eat_str(&mut self, s: &str) -> bool {
        if self.starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.bump();
        }
    }

    fn skip_comment(&mut self) -> Result<bool> {
        if !self.eat_str("<!--") {
            return Ok(false);
        }
        loop {
            if self.eat_str("-->") {
                return Ok(true);
            }
            if self.bump().is_none() {
                return Err(self.expected("-->"));
            }
        }
    }

    fn skip_prolog(&mut self) -> Result<()> {
        self.skip_ws();
        if self.eat_str("<?xml") {
            loop {
                if self.eat_str("?>") {
                    break;
                }
                if self.bump().is_none() {
                    return Err(self.expected("?>"));
                }
            }
        }
        self.skip_misc()
    }

    fn skip_misc(&mut self) -> Result<()> {
        loop {
            self.skip_ws();
            if self.starts_with("<!--") {
                self.skip_comment()?;
            } else if self.starts_with("<!") || self.starts_with("<?") {
                return Err(self.expected("element (DOCTYPE, CDATA and processing instructions are not supported)"));
            } else {
                return Ok(());
            }
        }
    }

    fn parse_name(&mut self) -> Result<String> {
        let mut name = String::new();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                name.push(c);
                self.bump();
            }
            _ => return Err(self.expected("name")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                name.push(c);
                self.bump();
            } else if c == ':' {
                return Err(self.expected("name without ':' (namespaces are not supported)"));
            } else {
                break;
            }
        }
        Ok(name)
    }

    fn parse_entity(&mut self) -> Result<char> {
        // '&' already consumed
        for (entity, ch) in [
            ("amp;", '&'),
            ("lt;", '<'),
            ("gt;", '>'),
            ("quot;", '"'),
            ("apos;", '\''),
        ] {
            if self.eat_str(entity) {
                return Ok(ch);
            }
        }
        Err(self.expected("one of the five predefined entities"))
    }

    fn parse_attr_value(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.expected("quoted attribute value")),
        };
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(value);
                }
                Some('&') => {
                    self.bump();
                    value.push(self.parse_entity()?);
                }
                Some('<') => return Err(self.expected("attribute value without '<'")),
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
                None => return Err(self.expected("closing quote")),
            }
        }
    }

    fn parse_element(&mut self) -> Result<Element> {
        self.expect('<')?;
        let name = self.parse_name()?;
        let mut attributes = Vec::new();
        loop {
            let had_ws = matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n'));
            self.skip_ws();
            match self.peek() {
                Some('/') => {
                    self.bump();
                    self.expect('>')?;
                    return Ok(Element {
                        name,
                        attributes,
                        children: Vec::new(),
                    });
                }
                Some('>') => {
                    self.bump();
                    break;
                }
                Some(c) if (c.is_ascii_alphabetic() || c == '_') && had_ws => {
                    let attr_name = self.parse_name()?;
                    if attributes.iter().any(|(n, _)| *n == attr_name) {
                        return Err(self.expected(&format!("unique attribute (duplicate \"{attr_name}\")")));
                    }
                    self.skip_ws();
                    self.expect('=')?;
                    self.skip_ws();
                    let value = self.parse_attr_value()?;
                    attributes.push((attr_name, value));
                }
                _ => return Err(self.expected("attribute, '>' or '/>'")),
            }
        }
        // content
        let mut children = Vec::new();
        let mut text = String::new();
        loop {
            match self.peek() {
                Some('<') => {
                    if self.starts_with("<!--") {
                        self.skip_comment()?;
                        continue;
                    }
                    if self.starts_with("</") {
                        if !text.is_empty() {
                            children.push(Node::Text(std::mem::take(&mut text)));
                        }
                        self.eat_str("</");
                        let close = self.parse_name()?;
                        if close != name {
                            return Err(self.expected(&format!("</{name}>")));
                        }
                        self.skip_ws();
                        self.expect('>')?;
                        return Ok(Element {
                            name,
                            attributes,
                            children,
                        });
                    }
                    if self.starts_with("<!") || self.starts_with("<?") {
                        return Err(self.expected("element (DOCTYPE, CDATA and processing instructions are not supported)"));
                    }
                    if !text.is_empty() {
                        children.push(Node::Text(std::mem::take(&mut text)));
                    }
                    children.push(Node::Element(self.parse_element()?));
                }
                Some('&') => {
                    self.bump();
                    text.push(self.parse_entity()?);
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
                None => return Err(self.expected(&format!("</{name}>"))),
            }
        }
    }
}
