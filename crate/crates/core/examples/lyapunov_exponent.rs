//! Monte Carlo estimate of the top Lyapunov exponent, plus a check of sampled
//! word frequencies against cylinder measures.
//!
//! Run with `cargo run --release --example lyapunov_exponent [seed]`.

use switchcert::montecarlo::{empirical_cylinder_check, estimate_lyapunov_exponent, sample_path};
use switchcert::report::SystemDescription;
use switchcert::NodeDistribution;

fn main() -> switchcert::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let graph = system.graph();
    let xi = graph.invariant_measure()?;

    let path = sample_path(graph, &xi, 12, seed)?;
    let names: Vec<&str> = path.nodes.iter().map(|&v| graph.node_name(v)).collect();
    println!("sample path: {}  labels [{}]", names.join(""), path.word);

    for (name, start) in [("invariant", xi.clone()), ("uniform", NodeDistribution::uniform(graph))] {
        let est = estimate_lyapunov_exponent(&system, &start, 10_000, 100, seed)?;
        println!(
            "{name:<9} exponent {:.5} ± {:.5}  radius {:.5}",
            est.mean, est.half_width, est.radius
        );
    }

    let check = empirical_cylinder_check(graph, &xi, 2, 100_000, seed)?;
    for r in &check.rows {
        println!("  [{}] analytic {:.5} empirical {:.5} z {:+.2}", r.word, r.analytic, r.empirical, r.z);
    }
    Ok(())
}
