//! Bodies of the fuzz targets. Each must never panic on any input; where a
//! parse succeeds, printing and reparsing must agree.

use omnigraph_core::graph::{deserialize, serialize};
use omnigraph_core::metamodel::load_metamodel;
use omnigraph_core::query::Query;
use omnigraph_core::script::MutationScript;
use omnigraph_core::template::parse_template;

pub fn workspace(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ws) = deserialize(text) {
        let first = serialize(&ws);
        let back = deserialize(&first).expect("serialized workspace reloads");
        assert_eq!(serialize(&back), first);
    }
}

pub fn metamodel(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mm) = load_metamodel(text) {
        let yaml = mm.to_yaml();
        let back = load_metamodel(&yaml).expect("printed metamodel reloads");
        assert_eq!(back.to_yaml(), yaml);
    }
}

/// First byte picks the comment marker.
pub fn template(data: &[u8]) {
    let Some((&pick, rest)) = data.split_first() else { return };
    let marker = ["//", "#", "--", ";"][usize::from(pick) % 4];
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(doc) = parse_template(text, marker) {
        let printed = doc.to_source();
        let again = parse_template(&printed, marker).expect("printed template reparses");
        assert_eq!(again.to_source(), printed);
    }
}

pub fn query(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = Query::parse(text) {
        let printed = q.to_string();
        assert_eq!(Query::parse(&printed).expect("printed query reparses"), q, "{printed}");
    }
}

pub fn script(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = MutationScript::parse(text) {
        assert!(s.statements.windows(2).all(|w| w[0].0 < w[1].0), "statement lines ascend");
    }
}

pub type Target = (&'static str, fn(&[u8]));

/// Target name to body, for replaying corpora.
pub const TARGETS: [Target; 5] = [
    ("workspace_deserialize", workspace),
    ("metamodel_load", metamodel),
    ("template_parse", template),
    ("query_parse", query),
    ("script_parse", script),
];
