//! Why simpler criteria fail on the H system: the averaged matrix is Schur
//! unstable and the mean-square operator has radius above 1.
//!
//! Run with `cargo run --example comparison_radii`.

use switchcert::report::SystemDescription;
use switchcert::{spectral_radius, LabelWord};

fn main() -> switchcert::Result<()> {
    let desc = SystemDescription::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json"))?;
    let system = desc.system()?;
    let xi = system.graph().invariant_measure()?;

    let b = system.averaged_matrix(&xi);
    println!("B = {b}");
    println!("rho(B)             = {:.7}", spectral_radius(&b)?);
    println!("mean-square radius = {:.7}", system.mean_square_operator_radius()?);

    let w = LabelWord::parse_oldest_first("1 2 2")?;
    let product = system.word_product(&w);
    println!("A(w) for w = [{w}]: {product}");
    println!("rho(A(w))^(1/3)    = {:.7}", spectral_radius(&product)?.powf(1.0 / 3.0));
    Ok(())
}
