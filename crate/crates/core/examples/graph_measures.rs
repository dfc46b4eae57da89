//! Transition matrix, invariant measure and cylinder measures of the graph H.
//!
//! Run with `cargo run --example graph_measures`.

use switchcert::report::SystemDescription;
use switchcert::LabelWord;

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let graph = system.graph();

    if let Some(exact) = graph.exact_transition_matrix() {
        println!("P_H (exact):");
        for (name, row) in graph.nodes().iter().zip(&exact) {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            println!("  {name}: {}", cells.join("  "));
        }
    }

    let xi = graph.invariant_measure()?;
    println!("invariant measure: {:?}", xi.weights());

    for len in 1..=2 {
        for w in LabelWord::all(graph.alphabet(), len) {
            println!("  mu[{w}] = {:.6}", graph.cylinder_measure(&xi, &w));
        }
    }

    let w = LabelWord::parse_oldest_first("2 1")?;
    for r in 0..=2 {
        println!(
            "mu(l^-{r}[{w}]) = {:.6}",
            graph.shift_preimage_measure(&xi, &w, r)?
        );
    }

    for path in graph.enumerate_paths(2, Some(graph.node_index("a")?))? {
        let names: Vec<&str> = path.nodes.iter().map(|&v| graph.node_name(v)).collect();
        println!("  {}  word [{}]  p = {}", names.join(" -> "), path.word, path.prob);
    }
    Ok(())
}
