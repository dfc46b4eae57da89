//! Copositive bounds on H, H² and H₁ in the layout of a bounds table.
//!
//! Run with `cargo run --release --example copositive_table`.

use switchcert::certify::{hierarchical_bound, BoundConfig, LiftStrategy, Template, TemplateKind};
use switchcert::report::{bounds_csv, SystemDescription};

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let strategy = LiftStrategy {
        steps: vec![1, 2],
        paths: vec![1],
    };
    let report = hierarchical_bound(&system, TemplateKind::Copositive, &strategy, &BoundConfig::default())?;
    print!("{}", bounds_csv(std::slice::from_ref(&report)));

    let unlifted = &report.entries[0].certificate;
    if let Template::Copositive(t) = &unlifted.template {
        for (a, v) in t.vectors().iter().enumerate() {
            println!("v[{}] = {v:?}", system.graph().node_name(a));
        }
    }
    println!("verdict: {:?}, best {:?}", report.verdict, report.best_bound);
    Ok(())
}
