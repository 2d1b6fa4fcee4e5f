//! XML rendering of a JSON tree: objects become elements, scalar members become attributes,
//! arrays become a wrapper element of `<item>` children.

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event};
use quick_xml::Writer;
use serde_json::Value;

use super::IoError;

fn is_xml_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.to_ascii_lowercase().starts_with("xml")
}

fn scalar_text(value: &Value) -> Option<String> {
    match value {
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

type W = Writer<Vec<u8>>;

fn io(e: impl std::fmt::Display) -> IoError {
    IoError::Io {
        path: "xml export".into(),
        message: e.to_string(),
    }
}

/// Writes `value` as element `name`; `key` is set for members whose name is not a valid XML
/// name and which are therefore written as `<entry key=...>`.
fn write_node(w: &mut W, name: &str, key: Option<&str>, value: &Value) -> Result<(), IoError> {
    let mut start = BytesStart::new(name);
    if let Some(k) = key {
        start.push_attribute(("key", k));
    }
    match value {
        Value::Null => return Ok(()),
        Value::Object(map) => {
            let mut children = Vec::new();
            for (k, v) in map {
                match scalar_text(v) {
                    Some(text) if is_xml_name(k) && k != "key" => start.push_attribute((k.as_str(), text.as_str())),
                    _ if v.is_null() => {}
                    _ => children.push((k, v)),
                }
            }
            if children.is_empty() {
                w.write_event(Event::Empty(start)).map_err(io)?;
                return Ok(());
            }
            w.write_event(Event::Start(start)).map_err(io)?;
            for (k, v) in children {
                if is_xml_name(k) && k != "key" {
                    write_node(w, k, None, v)?;
                } else {
                    write_node(w, "entry", Some(k), v)?;
                }
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                w.write_event(Event::Empty(start)).map_err(io)?;
                return Ok(());
            }
            w.write_event(Event::Start(start)).map_err(io)?;
            for item in items {
                write_node(w, "item", None, item)?;
            }
        }
        scalar => {
            let text = scalar_text(scalar).unwrap_or_default();
            start.push_attribute(("value", text.as_str()));
            w.write_event(Event::Empty(start)).map_err(io)?;
            return Ok(());
        }
    }
    w.write_event(Event::End(BytesEnd::new(name))).map_err(io)?;
    Ok(())
}

pub fn json_to_xml(root: &str, value: &Value) -> Result<String, IoError> {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(io)?;
    write_node(&mut w, root, None, value)?;
    let mut text = String::from_utf8(w.into_inner()).map_err(io)?;
    text.push('\n');
    Ok(text)
}
