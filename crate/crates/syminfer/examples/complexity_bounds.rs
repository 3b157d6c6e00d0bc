//! Runtime bounds from invariants: run the full pipeline on a program whose
//! variable t counts loop iterations, then factor the inferred equality into
//! its roots in t — each root is an exact runtime bound under its guard.

use std::path::PathBuf;

use syminfer::runner::{run, RunConfig};

fn main() {
    let path = PathBuf::from("benchmarks/complexity/cav09_fig1a.mvl");
    if !path.is_file() {
        eprintln!("run from the repository root");
        std::process::exit(2);
    }
    let mut cfg = RunConfig::new(path);
    cfg.counter = Some("t".to_string());
    cfg.runs = 1;

    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for (i, loc) in out.locs.iter().enumerate() {
        println!("location {}:", loc.loc);
        for inv in &loc.rendered {
            println!("  {inv}");
        }
        if loc.bounds.is_some() {
            let bounds = &out.report["locations"][i]["complexity_bounds"];
            println!(
                "  runtime bounds (roots in t): {}",
                serde_json::to_string_pretty(bounds).unwrap()
            );
        }
    }
}
