//! The path lift H₁: nodes are edges of H, and the lifted invariant measure.
//!
//! Run with `cargo run --example path_lift`. Pass `--json` to print the lifted
//! description instead.

use switchcert::report::{lift_description, SystemDescription};
use switchcert::{lift_distribution, path_lift, LiftKind};

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;

    if std::env::args().any(|a| a == "--json") {
        print!("{}", lift_description(&system, LiftKind::Path(1))?.to_json_string());
        return Ok(());
    }

    let lift = path_lift(&system, 1)?;
    let g = lift.system.graph();
    let xi = system.graph().invariant_measure()?;
    let pushed = lift_distribution(&lift, &xi)?;
    let stationary = g.invariant_measure()?;

    println!("{:<10} {:>10} {:>10}", "node", "xi_R", "xi(H_1)");
    for (v, name) in g.nodes().iter().enumerate() {
        println!("{name:<10} {:>10.6} {:>10.6}", pushed.weights()[v], stationary.weights()[v]);
    }
    println!("strongly connected: {}", g.is_strongly_connected());
    Ok(())
}
