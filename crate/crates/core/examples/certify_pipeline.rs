//! The whole pipeline on a description file, as the `certify` subcommand runs
//! it.
//!
//! Run with `cargo run --release --example certify_pipeline [file.json]`.

use switchcert::report::{emit_report, run_certify, CertifyOptions, Format, SystemDescription};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json").to_owned());
    let outcome = SystemDescription::from_path(&path).and_then(|desc| {
        let mut options = CertifyOptions::from_description(&desc);
        options.meta = false;
        run_certify(&desc, &options)
    });
    match outcome {
        Ok(report) => {
            print!("{}", emit_report(&report, Format::Text));
            println!();
            for line in &report.evidence {
                println!("- {line}");
            }
            std::process::exit(report.exit_code());
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.module());
            std::process::exit(1);
        }
    }
}
