//! Scene files drive the command-line tool; the same commands run in
//! process through `cli::run`.
//!
//! ```bash
//! cargo run --example scene_files
//! cargo run --bin transversal -- crates/core/scenes/dirac_demo.json eval T F --at 0.5
//! ```

use std::path::Path;

use transversal::cli::{load_scene, run};

fn main() {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/dirac_demo.json");
    let loaded = load_scene(&scene).unwrap();
    let names: Vec<&str> = loaded.distributions.iter().map(|(n, _)| n.as_str()).collect();
    println!("distributions in {}: {names:?}", scene.display());

    let path = scene.to_str().unwrap();
    for args in [
        vec!["eval", "T", "F", "--at", "0.5"],
        vec!["--format", "table", "restrict", "T", "--at", "0"],
        vec!["--format", "table", "derive", "T", "--alpha", "1"],
        vec!["check", "--suite", "restriction,support", "--format", "table"],
    ] {
        let out = run(["transversal", path].into_iter().chain(args.iter().copied()));
        println!("$ transversal dirac_demo.json {}  (exit {})", args.join(" "), out.code);
        print!("{}", out.stdout);
    }
}
