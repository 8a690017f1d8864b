//! Writes a synthetic dialog workspace, the dialog generation plan and its
//! templates into a directory.
//!
//!     cargo run -p omnigraph-core --example write_fixture -- DIR [MIRONS]
//!
//! Without MIRONS the benchmark size (4246 nodes, 3890 links) is used.

use omnigraph_core::synth::{write_fixture, DialogCounts};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next() else {
        eprintln!("usage: write_fixture DIR [MIRONS]");
        std::process::exit(2);
    };
    let counts = match args.next().map(|m| m.parse::<usize>()) {
        None => DialogCounts::BENCHMARK,
        Some(Ok(m)) => DialogCounts::scaled(m),
        Some(Err(e)) => {
            eprintln!("MIRONS: {e}");
            std::process::exit(2);
        }
    };
    if let Err(e) = write_fixture(dir.as_ref(), &counts) {
        eprintln!("{dir}: {e}");
        std::process::exit(1);
    }
    println!("{dir}: {} nodes, {} links", counts.nodes(), counts.links());
}
