//! The 2-step lift H²: word-labeled edges and product matrices.
//!
//! Run with `cargo run --example step_lift`.

use switchcert::report::SystemDescription;
use switchcert::step_lift;

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let lift = step_lift(&system, 2)?;
    let g = lift.system.graph();

    println!("{} nodes, {} edges, alphabet {}", g.node_count(), g.edges().len(), g.alphabet());
    for e in g.edges() {
        println!(
            "  {} -> {}  word [{}]  p = {}",
            g.node_name(e.from),
            g.node_name(e.to),
            lift.word_of(e.label),
            e.prob
        );
    }

    for label in 1..=g.alphabet() {
        println!("A[{}] = {}", lift.word_of(label), lift.system.matrix(label));
    }

    if let Some(p) = g.exact_transition_matrix() {
        println!("P_(H^2) = [[{}, {}], [{}, {}]]", p[0][0], p[0][1], p[1][0], p[1][1]);
    }
    Ok(())
}
