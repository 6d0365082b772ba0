//! Penultimate-layer activations of the pretrained model, for t-SNE or UMAP.
//!
//! cargo run --release --example embeddings -- [data_dir] [per_class] [out.csv]

use cl_har::bench::{export_embeddings, RunConfig};
use cl_har::data::synth::{generate, SynthSpec};
use cl_har::data::{ChannelMode, HarData};

fn main() -> cl_har::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = match args.first().map(String::as_str) {
        Some(dir) if dir != "-" => HarData::load(dir, ChannelMode::Nine)?,
        _ => {
            let (train, test) = generate(&SynthSpec::default());
            HarData::from_raw(train, test)?
        }
    };
    let per_class: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let out = args
        .get(2)
        .cloned()
        .unwrap_or_else(|| "embeddings.csv".into());
    let config = RunConfig::default().resolve()?;
    let rows = export_embeddings(&config, &data, per_class, out.as_ref())?;
    println!("wrote {rows} rows to {out}");
    Ok(())
}
