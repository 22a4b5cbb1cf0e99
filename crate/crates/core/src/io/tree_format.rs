//! Text form of nesting trees.
//!
//! ```text
//! tree := node [';']
//! node := name | '(' node (',' node)+ ')'
//! ```
//!
//! Any non-root node may carry an edge parameter as `:value`, e.g.
//! `((AQ1:11.6,OQ:10.3):8.1,(AQ2:5.6,TQ:9.2):11.2)`. Names are matched
//! against the dataset's component names; whitespace between tokens is
//! ignored.

use crate::error::{Error, Result};
use crate::nested::{NestingTree, TreeNode};

pub fn parse_tree(text: &str, names: &[String]) -> Result<NestingTree> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        names,
        seen: vec![false; names.len()],
    };
    p.skip_ws();
    let start = p.pos;
    let root = p.node()?;
    p.skip_ws();
    if p.peek() == Some(b';') {
        p.pos += 1;
        p.skip_ws();
    }
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    if matches!(root, TreeNode::Leaf { .. }) {
        return Err(Error::TreeSyntax {
            position: start,
            message: "the root must be a parenthesized group".into(),
        });
    }
    if root.alpha().is_some() {
        return Err(Error::InvalidTree("the root carries no edge parameter".into()));
    }
    if let Some(missing) = p.seen.iter().position(|s| !s) {
        return Err(Error::InvalidTree(format!(
            "component `{}` does not appear in the tree",
            names[missing]
        )));
    }
    NestingTree::new(root)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a [String],
    seen: Vec<bool>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::TreeSyntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn node(&mut self) -> Result<TreeNode> {
        self.skip_ws();
        let node = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut children = vec![self.node()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            children.push(self.node()?);
                        }
                        Some(b')') => {
                            if children.len() < 2 {
                                return Err(self.error("a group needs at least two children"));
                            }
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error("expected `,` or `)`")),
                    }
                }
                TreeNode::internal(children)
            }
            Some(c) if is_name_byte(c) => self.leaf()?,
            _ => return Err(self.error("expected a component name or `(`")),
        };
        self.skip_ws();
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, b'.' | b'-' | b'+'))
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let value: f64 = text.parse().map_err(|_| Error::TreeSyntax {
                position: start,
                message: format!("invalid edge parameter `{text}`"),
            })?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::TreeSyntax {
                    position: start,
                    message: format!("edge parameter must be positive, got {value}"),
                });
            }
            return Ok(node.with_alpha(value));
        }
        Ok(node)
    }

    fn leaf(&mut self) -> Result<TreeNode> {
        let start = self.pos;
        while self.peek().is_some_and(is_name_byte) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| Error::TreeSyntax {
            position: start,
            message: "component names must be valid UTF-8".into(),
        })?;
        let index = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::TreeSyntax {
                position: start,
                message: format!("unknown component `{name}`"),
            })?;
        if std::mem::replace(&mut self.seen[index], true) {
            return Err(Error::InvalidTree(format!("duplicate leaf `{name}`")));
        }
        Ok(TreeNode::leaf(index))
    }
}

fn is_name_byte(c: u8) -> bool {
    !c.is_ascii_whitespace() && !matches!(c, b'(' | b')' | b',' | b':' | b';')
}

/// Canonical text of `tree`; edge parameters print in shortest round-trip
/// form, so `parse_tree(render_tree(t)) == t`.
pub fn render_tree(tree: &NestingTree, names: &[String]) -> String {
    let mut out = String::new();
    render_node(tree.root(), names, &mut out);
    out
}

fn render_node(node: &TreeNode, names: &[String], out: &mut String) {
    match node {
        TreeNode::Leaf { component, .. } => match names.get(*component) {
            Some(n) => out.push_str(n),
            None => out.push_str(&component.to_string()),
        },
        TreeNode::Internal { children, .. } => {
            out.push('(');
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render_node(c, names, out);
            }
            out.push(')');
        }
    }
    if let Some(a) = node.alpha() {
        out.push(':');
        out.push_str(&a.to_string());
    }
}
