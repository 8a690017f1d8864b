//! Synthetic dialog models for benchmarks and tests, plus the bundled
//! three-entry generation plan (dictionaries, weights, intents).

use std::path::{Path, PathBuf};

use crate::graph::{serialize, AttrValue, ElementId, Workspace};

/// Element counts for a synthetic dialog workspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DialogCounts {
    pub modules: usize,
    pub rules: usize,
    pub mirons: usize,
    pub variables: usize,
    pub states: usize,
    pub comments: usize,
    pub conditions: usize,
    pub actions: usize,
}

impl DialogCounts {
    /// 4246 nodes, 3890 links.
    pub const BENCHMARK: DialogCounts = DialogCounts {
        modules: 46,
        rules: 1300,
        mirons: 1400,
        variables: 600,
        states: 600,
        comments: 300,
        conditions: 1795,
        actions: 1795,
    };

    /// Every count linear in `mirons`.
    pub fn scaled(mirons: usize) -> DialogCounts {
        DialogCounts {
            modules: 1,
            rules: mirons,
            mirons,
            variables: mirons,
            states: mirons,
            comments: mirons,
            conditions: 2 * mirons,
            actions: mirons,
        }
    }

    pub fn nodes(&self) -> usize {
        self.modules + self.rules + self.mirons + self.variables + self.states + self.comments
    }

    /// Conditions, actions, and one `annotates` link per comment.
    pub fn links(&self) -> usize {
        self.conditions + self.actions + self.comments
    }
}

const MODALITIES: [&str; 5] = ["speech", "text", "motion", "expression", "telephony"];

/// Deterministic conforming dialog workspace with exactly the given counts.
///
/// Condition `i` runs from source `i mod S` to rule `i mod R`, action `i`
/// from rule `i mod R` to source `(i + 1) mod S`, where the sources are the
/// mirons, variables and states in creation order. Counts above `S` per
/// rule would repeat pairs, so they are capped there.
pub fn dialog_workspace(c: &DialogCounts) -> Workspace {
    assert!(c.modules > 0 || (c.rules == 0 && c.mirons == 0), "rules and mirons live in modules");
    let mut ws = Workspace::new("dialog", "Synthetic dialog", "dialog").expect("valid id");
    let put = |ws: &mut Workspace, id: ElementId, k: &str, v: AttrValue| ws.set_attr(id, k, v).expect("attr");

    let modules: Vec<_> = (0..c.modules)
        .map(|i| {
            let m = ws.add_node("Module", &format!("module {i}"), (i as f64 * 400.0, 0.0)).unwrap();
            ws.set_size(m, (360.0, 900.0)).unwrap();
            put(&mut ws, m, "title", AttrValue::str(format!("module_{i}")));
            m
        })
        .collect();
    let place = |i: usize| (40.0 + (i % 20) as f64 * 140.0, 120.0 + (i / 20) as f64 * 80.0);

    let mut rules = Vec::with_capacity(c.rules);
    for i in 0..c.rules {
        let r = ws.add_node("Rule", &format!("rule {i}"), place(i)).unwrap();
        put(&mut ws, r, "conditions", AttrValue::str(if i % 3 == 0 { "any" } else { "all" }));
        put(&mut ws, r, "weight", AttrValue::Real(0.5 + (i % 10) as f64 / 8.0));
        put(&mut ws, r, "priority", AttrValue::Int((i % 5) as i64));
        ws.set_parent(r, Some(modules[i % modules.len()])).unwrap();
        rules.push(r);
    }
    let mut sources = Vec::with_capacity(c.mirons + c.variables + c.states);
    for i in 0..c.mirons {
        let m = ws.add_node("Miron", &format!("miron {i}"), place(i)).unwrap();
        put(&mut ws, m, "modality", AttrValue::str(MODALITIES[i % MODALITIES.len()]));
        put(&mut ws, m, "name", AttrValue::str(format!("miron_{i}")));
        put(&mut ws, m, "type", AttrValue::str(if i % 2 == 0 { "inner" } else { "outer" }));
        put(
            &mut ws,
            m,
            "templates",
            AttrValue::List(vec![AttrValue::str(format!("say_{i}")), AttrValue::str(format!("ask_{i}"))]),
        );
        ws.set_parent(m, Some(modules[i % modules.len()])).unwrap();
        sources.push(m);
    }
    for i in 0..c.variables {
        let v = ws.add_node("Variable", &format!("var {i}"), place(i)).unwrap();
        put(&mut ws, v, "name", AttrValue::str(format!("var_{i}")));
        put(&mut ws, v, "value", AttrValue::str(format!("v{}", i % 7)));
        sources.push(v);
    }
    for i in 0..c.states {
        let s = ws.add_node("State", &format!("state {i}"), place(i)).unwrap();
        put(&mut ws, s, "name", AttrValue::str(format!("state_{i}")));
        put(&mut ws, s, "active", AttrValue::Bool(i % 4 == 0));
        sources.push(s);
    }
    let mut comments = Vec::with_capacity(c.comments);
    for i in 0..c.comments {
        let n = ws.add_node("Comment", "", place(i)).unwrap();
        put(&mut ws, n, "text", AttrValue::str(format!("note {i}")));
        comments.push(n);
    }

    if !rules.is_empty() && !sources.is_empty() {
        let (r, s) = (rules.len(), sources.len());
        for i in 0..c.conditions {
            ws.add_link("condition", sources[i % s], rules[i % r]).unwrap();
        }
        for i in 0..c.actions {
            ws.add_link("action", rules[i % r], sources[(i + 1) % s]).unwrap();
        }
    }
    let targets: Vec<ElementId> = rules.iter().chain(&sources).copied().collect();
    for (i, &n) in comments.iter().enumerate() {
        let target = targets.get(i % targets.len().max(1)).copied().unwrap_or(n);
        ws.add_link("annotates", n, target).unwrap();
    }
    ws
}

pub const GENPLAN_ENTRIES: [&str; 3] = ["dictionaries.js", "weights.js", "intents.js"];

pub fn template_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "dictionaries.js" => include_str!("../fixtures/genplan/templates/dictionaries.js"),
        "weights.js" => include_str!("../fixtures/genplan/templates/weights.js"),
        "intents.js" => include_str!("../fixtures/genplan/templates/intents.js"),
        _ => return None,
    })
}

/// The three-entry plan for the dialog templates; template paths are
/// relative to the plan file's directory.
pub fn dialog_genplan() -> Workspace {
    let mut ws = Workspace::new("genplan", "Dialog code generation", "codegen").expect("valid id");
    for (i, name) in GENPLAN_ENTRIES.iter().enumerate() {
        let n = ws.add_node("GenEntry", name, (40.0, 40.0 + i as f64 * 100.0)).unwrap();
        ws.set_attr(n, "template", AttrValue::str(format!("templates/{name}"))).unwrap();
        ws.set_attr(n, "output", AttrValue::str(*name)).unwrap();
        ws.set_attr(n, "root_query", AttrValue::str("node")).unwrap();
        ws.set_attr(n, "marker", AttrValue::str("//")).unwrap();
    }
    ws
}

/// Checked-in copy of the plan and templates.
pub fn template_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/genplan")
}

/// Writes `dialog.hgw.json`, `genplan.hgw.json` and `templates/` into `dir`.
pub fn write_fixture(dir: &Path, counts: &DialogCounts) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("templates"))?;
    std::fs::write(dir.join("dialog.hgw.json"), serialize(&dialog_workspace(counts)))?;
    std::fs::write(dir.join("genplan.hgw.json"), serialize(&dialog_genplan()))?;
    for name in GENPLAN_ENTRIES {
        std::fs::write(dir.join("templates").join(name), template_source(name).unwrap())?;
    }
    Ok(())
}
