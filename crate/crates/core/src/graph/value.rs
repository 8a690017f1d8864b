use std::fmt;

use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Tag of an [`AttrValue`], also used by metamodel attribute specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrKind {
    String,
    Integer,
    Real,
    Boolean,
    List,
    Ref,
}

impl AttrKind {
    pub const ALL: [AttrKind; 6] = [
        AttrKind::String,
        AttrKind::Integer,
        AttrKind::Real,
        AttrKind::Boolean,
        AttrKind::List,
        AttrKind::Ref,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttrKind::String => "string",
            AttrKind::Integer => "integer",
            AttrKind::Real => "real",
            AttrKind::Boolean => "boolean",
            AttrKind::List => "list",
            AttrKind::Ref => "ref",
        }
    }

    pub fn parse(s: &str) -> Option<AttrKind> {
        AttrKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed set of attribute values. `Ref` names another workspace.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Str(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    List(Vec<AttrValue>),
    Ref(String),
}

impl AttrValue {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttrValue::Str(_) => AttrKind::String,
            AttrValue::Int(_) => AttrKind::Integer,
            AttrValue::Real(_) => AttrKind::Real,
            AttrValue::Bool(_) => AttrKind::Boolean,
            AttrValue::List(_) => AttrKind::List,
            AttrValue::Ref(_) => AttrKind::Ref,
        }
    }

    pub fn str(s: impl Into<String>) -> AttrValue {
        AttrValue::Str(s.into())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Checks list homogeneity and real finiteness, recursively.
    pub fn check(&self) -> Result<(), ValueError> {
        match self {
            AttrValue::Real(r) if !r.is_finite() => Err(ValueError::NonFiniteReal),
            AttrValue::Ref(s) if s.is_empty() => Err(ValueError::EmptyRef),
            AttrValue::List(items) => {
                if let Some(first) = items.first() {
                    let tag = first.kind();
                    if let Some(bad) = items.iter().find(|v| v.kind() != tag) {
                        return Err(ValueError::Heterogeneous {
                            expected: tag,
                            found: bad.kind(),
                        });
                    }
                }
                items.iter().try_for_each(AttrValue::check)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValueError {
    #[error("heterogeneous list: expected {expected} items, found {found}")]
    Heterogeneous { expected: AttrKind, found: AttrKind },
    #[error("real values must be finite")]
    NonFiniteReal,
    #[error("workspace reference must not be empty")]
    EmptyRef,
}

/// Shortest decimal that round-trips, always with a fraction or exponent so
/// reals stay distinguishable from integers.
pub(crate) fn format_real(r: f64) -> String {
    serde_json::Number::from_f64(r)
        .map(|n| n.to_string())
        .unwrap_or_else(|| r.to_string())
}

/// Text rendering used by templates: strings verbatim, lists comma-joined.
impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Str(s) | AttrValue::Ref(s) => f.write_str(s),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Real(r) => f.write_str(&format_real(*r)),
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for AttrValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AttrValue::Str(s) => serializer.serialize_str(s),
            AttrValue::Int(i) => serializer.serialize_i64(*i),
            AttrValue::Real(r) => serializer.serialize_f64(*r),
            AttrValue::Bool(b) => serializer.serialize_bool(*b),
            AttrValue::List(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            AttrValue::Ref(ws) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("ref", ws)?;
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for AttrValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(AttrValueVisitor)
    }
}

struct AttrValueVisitor;

impl<'de> Visitor<'de> for AttrValueVisitor {
    type Value = AttrValue;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a string, integer, real, boolean, list or {\"ref\": id} object")
    }

    fn visit_bool<E: de::Error>(self, v: bool) -> Result<AttrValue, E> {
        Ok(AttrValue::Bool(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<AttrValue, E> {
        Ok(AttrValue::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<AttrValue, E> {
        i64::try_from(v)
            .map(AttrValue::Int)
            .map_err(|_| E::custom(format!("integer {v} out of range")))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<AttrValue, E> {
        if v.is_finite() {
            Ok(AttrValue::Real(v))
        } else {
            Err(E::custom("real values must be finite"))
        }
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<AttrValue, E> {
        Ok(AttrValue::Str(v.to_owned()))
    }

    fn visit_string<E: de::Error>(self, v: String) -> Result<AttrValue, E> {
        Ok(AttrValue::Str(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<AttrValue, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element::<AttrValue>()? {
            items.push(item);
        }
        let value = AttrValue::List(items);
        value.check().map_err(de::Error::custom)?;
        Ok(value)
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<AttrValue, A::Error> {
        let key: Option<String> = map.next_key()?;
        match key.as_deref() {
            Some("ref") => {
                let ws: String = map.next_value()?;
                if map.next_key::<String>()?.is_some() {
                    return Err(de::Error::custom("reference object must have exactly one key"));
                }
                if ws.is_empty() {
                    return Err(de::Error::custom(ValueError::EmptyRef));
                }
                Ok(AttrValue::Ref(ws))
            }
            _ => Err(de::Error::custom("object attribute values must be {\"ref\": id}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_rules() {
        assert_eq!(AttrValue::str("greet").to_string(), "greet");
        assert_eq!(AttrValue::Int(-42).to_string(), "-42");
        assert_eq!(AttrValue::Bool(true).to_string(), "true");
        assert_eq!(AttrValue::Real(0.5).to_string(), "0.5");
        assert_eq!(AttrValue::Real(2.0).to_string(), "2.0");
        let list = AttrValue::List(vec![AttrValue::str("a"), AttrValue::str("b")]);
        assert_eq!(list.to_string(), "a,b");
    }

    #[test]
    fn heterogeneous_list_rejected() {
        let v = AttrValue::List(vec![AttrValue::Int(1), AttrValue::str("x")]);
        assert_eq!(
            v.check(),
            Err(ValueError::Heterogeneous {
                expected: AttrKind::Integer,
                found: AttrKind::String
            })
        );
        assert!(AttrValue::List(vec![]).check().is_ok());
    }

    #[test]
    fn json_keeps_reals_apart_from_integers() {
        let v = AttrValue::List(vec![AttrValue::Real(1.0), AttrValue::Real(1e300)]);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, "[1.0,1e+300]");
        let back: AttrValue = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        let int: AttrValue = serde_json::from_str("1").unwrap();
        assert_eq!(int, AttrValue::Int(1));
        let r: AttrValue = serde_json::from_str(r#"{"ref":"dialog"}"#).unwrap();
        assert_eq!(r, AttrValue::Ref("dialog".into()));
        assert!(serde_json::from_str::<AttrValue>(r#"[1,"a"]"#).is_err());
        assert!(serde_json::from_str::<AttrValue>("null").is_err());
    }
}
