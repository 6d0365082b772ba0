//! EWC, LwF and EWC+LwF side by side on one scenario over several seeds,
//! printed as a comparison table. Writes the result bundle to `out_dir`.
//!
//! cargo run --release --example compare_methods -- [data_dir|-] [scenario] [case] [out_dir]
//!
//! With `-` a reduced synthetic setup is used (40 windows per class, 5 epochs).

use cl_har::bench::{execute_on, report, write_bundle, RunConfig};
use cl_har::data::synth::{generate, SynthSpec};
use cl_har::data::{ChannelMode, HarData};

fn main() -> cl_har::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut config = RunConfig::default();
    config.set("scenario", args.get(1).map_or("2", String::as_str))?;
    if let Some(c) = args.get(2) {
        config.set("case", c)?;
    }
    config.set("seeds", "1-3")?;
    let data = match args.first().map(String::as_str) {
        Some(dir) if dir != "-" => HarData::load(dir, ChannelMode::Nine)?,
        _ => {
            config.set("per_class", "40")?;
            config.set("epochs", "5")?;
            let (train, test) = generate(&SynthSpec::default());
            HarData::from_raw(train, test)?
        }
    };
    let config = config.resolve()?;
    let bundle = execute_on(&config, &data)?;
    let out = args
        .get(3)
        .cloned()
        .unwrap_or_else(|| "results-compare".into());
    write_bundle(&bundle, out.as_ref())?;
    print!("{}", report(&[bundle])?.to_markdown());
    println!("bundle written to {out}");
    Ok(())
}
