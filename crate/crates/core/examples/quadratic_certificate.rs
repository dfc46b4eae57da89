//! A quadratic certificate of almost-sure stability on the 2-step lift,
//! re-verified from its JSON form.
//!
//! Run with `cargo run --release --example quadratic_certificate`.

use switchcert::certify::{hierarchical_bound, verify_certificate, BoundConfig, Certificate, LiftStrategy, TemplateKind};
use switchcert::report::SystemDescription;

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let strategy = LiftStrategy {
        steps: vec![1, 2],
        paths: vec![1],
    };
    let report = hierarchical_bound(&system, TemplateKind::Quadratic, &strategy, &BoundConfig::default())?;
    for e in &report.entries {
        println!("{:<8} raw {:.6}  adjusted {:.6}", e.lift.tag(), e.raw_rho, e.adjusted_rho);
    }
    println!("verdict: {:?}", report.verdict);

    let best = report
        .entries
        .iter()
        .min_by(|x, y| x.adjusted_rho.total_cmp(&y.adjusted_rho))
        .expect("nonempty strategy");
    let json = serde_json::to_string_pretty(&best.certificate).expect("certificate serializes");
    println!("{json}");

    let stored: Certificate = serde_json::from_str(&json).expect("certificate parses");
    let (ok, margin) = verify_certificate(&system, &stored)?;
    println!("re-verified: {ok} (margin {margin:.3e})");
    Ok(())
}
