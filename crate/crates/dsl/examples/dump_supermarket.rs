//! Regenerates the bundled model files from the canonical in-code fixture:
//!
//! ```sh
//! cargo run -p fairadapt-dsl --example dump_supermarket full > scenarios/supermarket.frm
//! cargo run -p fairadapt-dsl --example dump_supermarket base > scenarios/supermarket_base.frm
//! ```

use fairadapt_core::fixtures::supermarket_bundle;
use fairadapt_dsl::serialize;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "full".into());
    let bundle = supermarket_bundle();
    let bundle = match which.as_str() {
        "full" => bundle,
        "base" => bundle
            .without_requirement("FR1")
            .without_requirement("FR2")
            .without_requirement("FR3"),
        other => {
            eprintln!("unknown selection `{other}` (use `full` or `base`)");
            std::process::exit(2);
        }
    };
    print!("{}", serialize(&bundle));
}
