//! Write a synthetic dataset in the UCI HAR directory layout.
//!
//! cargo run --release --example synthetic_dataset -- /tmp/har-synth [--uci-sized]

use cl_har::data::check_data;
use cl_har::data::synth::{write_uci_layout, SynthSpec};

fn main() -> cl_har::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args.next().unwrap_or_else(|| "har-synth".into());
    let spec = if args.any(|a| a == "--uci-sized") {
        SynthSpec::uci_sized()
    } else {
        SynthSpec::default()
    };
    write_uci_layout(&root, &spec)?;
    let s = check_data(&root)?;
    println!(
        "{root}: train {} + test {} windows",
        s.train_rows, s.test_rows
    );
    Ok(())
}
