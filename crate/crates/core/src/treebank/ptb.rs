use alloc::string::String;
use alloc::vec::Vec;

use super::LabeledTree;
use crate::error::{Error, Result};

fn err(offset: usize, message: &str) -> Error {
    Error::Parse {
        offset,
        message: String::from(message),
    }
}

/// Parses one `(LABEL child ...)` s-expression. An unlabeled outer wrapper
/// around a single tree, as in `( (S ...) )`, is removed.
pub fn parse_ptb(text: &str) -> Result<LabeledTree> {
    let bytes = text.as_bytes();
    let mut pos = skip_ws(bytes, 0);
    if pos == bytes.len() {
        return Err(err(pos, "empty input"));
    }
    if bytes[pos] != b'(' {
        return Err(err(pos, "expected '('"));
    }
    let tree = parse_node(text, &mut pos)?;
    let end = skip_ws(bytes, pos);
    if end != bytes.len() {
        return Err(err(end, "trailing input after tree"));
    }
    Ok(tree)
}

fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    pos
}

fn read_atom<'a>(text: &'a str, pos: &mut usize) -> &'a str {
    let bytes = text.as_bytes();
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'(' && bytes[*pos] != b')' {
        *pos += 1;
    }
    &text[start..*pos]
}

// `pos` points at '('.
fn parse_node(text: &str, pos: &mut usize) -> Result<LabeledTree> {
    let bytes = text.as_bytes();
    *pos += 1;
    *pos = skip_ws(bytes, *pos);
    let label = String::from(read_atom(text, pos));
    let mut children = Vec::new();
    loop {
        *pos = skip_ws(bytes, *pos);
        match bytes.get(*pos) {
            None => return Err(err(*pos, "unbalanced parentheses: missing ')'")),
            Some(b')') => {
                if children.is_empty() {
                    return Err(err(*pos, "constituent without children"));
                }
                *pos += 1;
                break;
            }
            Some(b'(') => children.push(parse_node(text, pos)?),
            Some(_) => children.push(LabeledTree::Leaf(String::from(read_atom(text, pos)))),
        }
    }
    if label.is_empty() {
        if children.len() == 1 && matches!(children[0], LabeledTree::Node { .. }) {
            return Ok(children.pop().expect("one child"));
        }
        return Err(err(*pos - 1, "constituent without a label"));
    }
    Ok(LabeledTree::Node { label, children })
}
